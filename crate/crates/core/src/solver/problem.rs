use std::fmt;
use std::sync::Arc;

use crate::algebra::{DualNumber, DualQuaternionVector};
use crate::error::{Error, Result};
use crate::func::{DualFunction, ResidualMap};

/// `min f̂(x̂) s.t. ĥ_j(x̂) = 0`, where each constraint imposes both
/// `h_j = 0` and `(h_j)_d = 0`.
#[derive(Clone)]
pub struct EqdqoProblem {
    pub objective: DualFunction,
    pub constraints: Vec<DualFunction>,
    /// Starting points tried before random ones, in order.
    pub initial_points: Vec<DualQuaternionVector>,
    /// Residuals whose dual parts are fitted in least squares to choose
    /// among Stage II solutions of equal value. Used by standard problems.
    pub tie_break: Option<Arc<dyn ResidualMap>>,
    standard: bool,
}

impl fmt::Debug for EqdqoProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EqdqoProblem")
            .field("objective", &self.objective)
            .field("constraints", &self.constraints)
            .field("standard", &self.standard)
            .finish()
    }
}

/// Largest violation of the standard and dual constraint parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Feasibility {
    pub std: f64,
    pub dual: f64,
}

impl Feasibility {
    pub fn max(&self) -> f64 {
        self.std.max(self.dual)
    }
}

impl EqdqoProblem {
    pub fn new(objective: DualFunction, constraints: Vec<DualFunction>) -> Result<Self> {
        let n = objective.arity();
        if n == 0 {
            return Err(Error::Config("problem needs at least one variable".into()));
        }
        for h in &constraints {
            if h.arity() != n {
                return Err(Error::ArityMismatch(n, h.arity()));
            }
        }
        let standard = objective.is_standard() && constraints.iter().all(DualFunction::is_standard);
        Ok(Self { objective, constraints, initial_points: Vec::new(), tie_break: None, standard })
    }

    pub fn with_initial_points(mut self, points: Vec<DualQuaternionVector>) -> Self {
        self.initial_points = points;
        self
    }

    pub fn with_tie_break(mut self, map: Arc<dyn ResidualMap>) -> Self {
        self.tie_break = Some(map);
        self
    }

    /// Treat the problem as general even if every function is standard.
    pub fn as_general(mut self) -> Self {
        self.standard = false;
        self
    }

    pub fn arity(&self) -> usize {
        self.objective.arity()
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    pub fn objective_value(&self, x: &DualQuaternionVector) -> DualNumber {
        self.objective.eval(x)
    }

    pub fn feasibility(&self, x: &DualQuaternionVector) -> Feasibility {
        self.constraints.iter().fold(Feasibility::default(), |acc, h| {
            let v = h.eval(x);
            Feasibility { std: acc.std.max(v.std.abs()), dual: acc.dual.max(v.dual.abs()) }
        })
    }
}
