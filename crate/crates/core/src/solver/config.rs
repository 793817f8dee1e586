use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tunables of the splitting solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the entrywise l1 term.
    pub lambda: f64,
    /// Data-fit weight of the unconstrained form `(mu/2)||B(X) - b||^2`.
    pub mu: f64,
    /// Radius of the residual ball `||B(X) - b||_2 <= epsilon`.
    pub epsilon: f64,
    /// Initial splitting penalty.
    pub rho_admm: f64,
    pub max_iters: usize,
    /// Relative primal residual tolerance.
    pub tol_primal: f64,
    /// Relative dual residual tolerance.
    pub tol_dual: f64,
    pub rank1_gap_threshold: f64,
    /// Rebalance the splitting penalty from the residual ratio.
    pub adaptive_rho: bool,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Keep a per-iteration trace in the result.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            mu: 1.0,
            epsilon: 0.0,
            rho_admm: 1.0,
            max_iters: 5000,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            rank1_gap_threshold: 0.95,
            adaptive_rho: true,
            relaxation: 1.6,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lambda,
            self.mu,
            self.epsilon,
            self.rho_admm,
            self.tol_primal,
            self.tol_dual,
            self.rank1_gap_threshold,
            self.relaxation,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return invalid("solver config contains non-finite values");
        }
        if self.lambda < 0.0 {
            return invalid(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.mu <= 0.0 {
            return invalid(format!("mu must be > 0, got {}", self.mu));
        }
        if self.epsilon < 0.0 {
            return invalid(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if self.rho_admm <= 0.0 {
            return invalid(format!("rho_admm must be > 0, got {}", self.rho_admm));
        }
        if self.tol_primal <= 0.0 || self.tol_dual <= 0.0 {
            return invalid("tolerances must be > 0");
        }
        if !(self.rank1_gap_threshold > 0.0 && self.rank1_gap_threshold <= 1.0) {
            return invalid(format!(
                "rank1_gap_threshold must lie in (0, 1], got {}",
                self.rank1_gap_threshold
            ));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return invalid(format!("relaxation must lie in (0, 2), got {}", self.relaxation));
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            SolverConfig {
                lambda: -1.0,
                ..Default::default()
            },
            SolverConfig {
                mu: 0.0,
                ..Default::default()
            },
            SolverConfig {
                rank1_gap_threshold: 1.5,
                ..Default::default()
            },
            SolverConfig {
                rho_admm: 0.0,
                ..Default::default()
            },
            SolverConfig {
                relaxation: 2.0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let ok: SolverConfig = serde_json::from_str(r#"{"lambda": 2.0}"#).unwrap();
        assert_eq!(ok.lambda, 2.0);
        assert_eq!(ok.max_iters, 5000);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"lamda": 2.0}"#).is_err());
    }
}
