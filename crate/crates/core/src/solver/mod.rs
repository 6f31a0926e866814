//! Two-stage solution of equality-constrained dual quaternion programs.
//!
//! Stage I minimizes the standard part `f` subject to both parts of every
//! constraint; its optimal value is `L^I`. Stage II minimizes the dual part
//! `f_d` among points attaining `L^I`. A point optimal for both stages is
//! optimal for the dual-number objective under the lexicographic order.

mod config;
mod kkt;
mod optim;
mod problem;
mod report;
mod stages;

pub use config::{mu_schedule, SolverConfig, DEFAULT_MU_MIN, DEFAULT_MU_START};
pub use kkt::{kkt_residual, KktForm, KktReport, RANK_TOL};
pub use optim::{augmented_lagrangian, bfgs, AlOutcome, AlSettings, AlState, Nlp, ValueGrad};
pub use problem::{EqdqoProblem, Feasibility};
pub use report::{
    write_history_csv, HistoryRecord, Multipliers, PerStage, RestartSummary, SolveReport,
    BEST_FOUND, CSV_HEADER,
};
pub use stages::{
    initial_point, solve_eqdqo, solve_stage1, solve_stage2, stage1_from, stage2_from,
    StageOneSolution, StageTwoSolution,
};
