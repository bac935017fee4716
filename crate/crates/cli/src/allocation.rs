use cvis::Scheme;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Sample counts of one estimator at a fixed online cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub n_hf: usize,
    pub n_lf: usize,
}

impl Allocation {
    /// Online cost in low-fidelity evaluations.
    pub fn cost(&self, cost_ratio: f64) -> f64 {
        self.n_hf as f64 * cost_ratio + self.n_lf as f64
    }
}

/// Sample counts whose cost matches `budget_hf` high-fidelity evaluations.
///
/// `None` is the single-fidelity MFIS baseline. CV evaluates both models on
/// every sample; ACV evaluates the low-fidelity model `lf_hf_ratio` times
/// as often.
pub fn allocate_equal_cost(budget_hf: f64, cost_ratio: f64, scheme: Option<Scheme>, lf_hf_ratio: f64) -> Result<Allocation> {
    if !(budget_hf > 0.0 && budget_hf.is_finite()) {
        return Err(CliError::Allocation(format!("budget must be positive, got {budget_hf}")));
    }
    if !(cost_ratio > 1.0 && cost_ratio.is_finite()) {
        return Err(CliError::Allocation(format!("cost ratio must exceed 1, got {cost_ratio}")));
    }
    match scheme {
        None => Ok(Allocation {
            n_hf: budget_hf.floor() as usize,
            n_lf: 0,
        }),
        Some(Scheme::Cv) => {
            if lf_hf_ratio != 1.0 {
                return Err(CliError::Allocation(format!("CV shares every sample, ratio must be 1, got {lf_hf_ratio}")));
            }
            let n = (budget_hf * cost_ratio / (cost_ratio + 1.0)).floor() as usize;
            Ok(Allocation { n_hf: n, n_lf: n })
        }
        Some(_) => {
            if !(lf_hf_ratio >= 1.0 && lf_hf_ratio.is_finite()) {
                return Err(CliError::Allocation(format!("ACV ratio must be at least 1, got {lf_hf_ratio}")));
            }
            let n_hf = (budget_hf * cost_ratio / (cost_ratio + lf_hf_ratio)).floor() as usize;
            Ok(Allocation {
                n_hf,
                n_lf: (lf_hf_ratio * n_hf as f64).floor() as usize,
            })
        }
    }
}

/// Ensemble layout `(n, m)` per batch for `k` batches.
///
/// Sample counts are rounded down to multiples of `k`, so the ensemble never
/// exceeds the allocation.
pub fn batch_layout(alloc: Allocation, k: usize) -> Result<(usize, usize)> {
    let n = alloc.n_hf / k;
    if n == 0 {
        return Err(CliError::Allocation(format!("{} high-fidelity samples cannot fill {k} batches", alloc.n_hf)));
    }
    let m = alloc.n_lf.saturating_sub(alloc.n_hf) / k;
    Ok((n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_uses_the_whole_budget() {
        let a = allocate_equal_cost(5000.0, 30.0, None, 1.0).unwrap();
        assert_eq!((a.n_hf, a.n_lf), (5000, 0));
    }

    #[test]
    fn layout_rounds_down() {
        let a = Allocation { n_hf: 4347, n_lf: 19561 };
        assert_eq!(batch_layout(a, 100).unwrap(), (43, 152));
        assert!(batch_layout(Allocation { n_hf: 5, n_lf: 5 }, 10).is_err());
    }
}
