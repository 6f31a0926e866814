use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::DualQuaternionVector;

use super::Feasibility;

/// A value per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerStage<T> {
    pub stage1: T,
    pub stage2: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    /// `λ_j` of the Stage I stationarity system.
    pub stage1: Vec<f64>,
    /// `λ_j` of the Stage II stationarity system.
    pub stage2: Vec<f64>,
    /// `σ` of the Stage II system; absent for standard problems, whose
    /// Stage II system does not involve `∇f`.
    pub sigma: Option<f64>,
}

/// Outcome of Stage I from one starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub stage1_value: f64,
    pub feasible: bool,
    /// Present when the restart was carried into Stage II.
    pub stage2_value: Option<f64>,
}

/// One row of the convergence history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub stage: u8,
    pub objective_std: f64,
    pub objective_dual: f64,
    pub feasibility: f64,
    pub kkt_residual: f64,
}

/// Two-stage solution record.
///
/// `stage1_value` and `stage2_value` are the exact standard and dual parts
/// of `f̂` at `solution`. The solution is the best found over restarts; no
/// global optimality certificate is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub stage1_value: f64,
    pub stage2_value: f64,
    pub solution: DualQuaternionVector,
    pub multipliers: Multipliers,
    pub kkt_residual: PerStage<f64>,
    pub feasibility: Feasibility,
    pub iterations: PerStage<usize>,
    pub restart_index: usize,
    pub wall_time_ms: f64,
    /// Both stages met `tol_grad` and `tol_feas` on their final surrogate.
    pub converged: bool,
    pub label: String,
    pub standard: bool,
    /// Smoothing level of the final surrogate of each stage.
    pub mu_final: PerStage<f64>,
    /// Half-width of the band around `L^I` used to pick Stage II candidates.
    pub tau_band: f64,
    pub restarts: Vec<RestartSummary>,
    #[serde(skip)]
    pub history: Vec<HistoryRecord>,
}

pub const BEST_FOUND: &str = "best found";

pub const CSV_HEADER: &str = "iter,stage,objective_std,objective_dual,feasibility,kkt_residual";

/// Write the history as CSV.
pub fn write_history_csv(history: &[HistoryRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for h in history {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e}",
            h.iter, h.stage, h.objective_std, h.objective_dual, h.feasibility, h.kkt_residual
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let h = [HistoryRecord {
            iter: 1,
            stage: 2,
            objective_std: 0.5,
            objective_dual: -1.0,
            feasibility: 1e-12,
            kkt_residual: 0.0,
        }];
        let mut buf = Vec::new();
        write_history_csv(&h, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,stage,objective_std,objective_dual,feasibility,kkt_residual\n1,2,5e-1,-1e0,1e-12,0e0\n"
        );
    }
}
