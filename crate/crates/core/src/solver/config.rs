use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of the two-stage solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of starting points per solve.
    pub restarts: usize,
    pub seed: u64,
    /// Stationarity target `‖∇ Lagrangian‖₂`.
    pub tol_grad: f64,
    /// Constraint violation target `max |h_j|, |(h_j)_d|`.
    pub tol_feas: f64,
    /// Smoothing levels for nonsmooth magnitudes, strictly decreasing.
    pub mu_schedule: Vec<f64>,
    /// Absolute floor of the Stage II band around `L^I`.
    pub tau_l: f64,
    /// Relative width of the Stage II band around `L^I`.
    pub tau_rel: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Worker threads for independent restarts. Results do not depend on it.
    pub threads: usize,
}

pub const DEFAULT_MU_START: f64 = 1e-2;
pub const DEFAULT_MU_MIN: f64 = 1e-9;

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            tol_grad: 1e-8,
            tol_feas: 1e-10,
            mu_schedule: mu_schedule(DEFAULT_MU_START, DEFAULT_MU_MIN),
            tau_l: 1e-8,
            tau_rel: 1e-6,
            max_outer: 50,
            max_inner: 500,
            threads: 1,
        }
    }
}

/// `start, start/10, …` down to and including `min`.
pub fn mu_schedule(start: f64, min: f64) -> Vec<f64> {
    if min >= start {
        return vec![min];
    }
    // One division per level keeps the ladder free of accumulated rounding.
    let mut out = Vec::new();
    let mut k = 0;
    while start / 10f64.powi(k) > min * (1.0 + 1e-9) {
        out.push(start / 10f64.powi(k));
        k += 1;
    }
    out.push(min);
    out
}

impl SolverConfig {
    pub fn mu_min(&self) -> f64 {
        *self.mu_schedule.last().expect("validated schedule is nonempty")
    }

    /// Replace the schedule by the default decade ladder ending at `mu_min`.
    pub fn with_mu_min(mut self, mu_min: f64) -> Self {
        self.mu_schedule = mu_schedule(DEFAULT_MU_START, mu_min);
        self
    }

    /// Half-width of the Stage II band, `max(tau_l, tau_rel·|L^I|)`.
    pub fn tau_band(&self, stage1_value: f64) -> f64 {
        self.tau_l.max(self.tau_rel * stage1_value.abs())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_grad", self.tol_grad),
            ("tol_feas", self.tol_feas),
            ("tau_l", self.tau_l),
            ("tau_rel", self.tau_rel),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        if self.mu_schedule.is_empty() {
            return Err(Error::Config("mu_schedule must not be empty".into()));
        }
        if self.mu_schedule.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::Config("mu_schedule entries must be positive".into()));
        }
        if self.mu_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("mu_schedule must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.mu_schedule.len(), 8);
        assert_eq!(cfg.mu_schedule[0], 1e-2);
        assert_eq!(cfg.mu_min(), 1e-9);
        cfg.validate().unwrap();
    }

    #[test]
    fn custom_mu_min() {
        let cfg = SolverConfig::default().with_mu_min(1e-4);
        assert_eq!(cfg.mu_schedule, vec![1e-2, 1e-3, 1e-4]);
        let cfg = SolverConfig::default().with_mu_min(0.5);
        assert_eq!(cfg.mu_schedule, vec![0.5]);
    }

    #[test]
    fn band() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.tau_band(0.0), 1e-8);
        assert!((cfg.tau_band(100.0) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = SolverConfig { tol_grad: 0.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SolverConfig { mu_schedule: vec![1e-3, 1e-2], ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_partial_input() {
        let cfg = SolverConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SolverConfig>(&s).unwrap(), cfg);
        let partial: SolverConfig = serde_json::from_str(r#"{"restarts": 3}"#).unwrap();
        assert_eq!(partial.restarts, 3);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
