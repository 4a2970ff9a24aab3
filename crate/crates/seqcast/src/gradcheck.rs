//! Finite-difference gradient checking.
//!
//! The checker perturbs parameter entries one at a time and re-runs a
//! caller-supplied forward pass, so it exercises only forward code and is
//! fully independent of the backward implementation it validates. The
//! forward closure must be deterministic: run dropout in eval mode or with a
//! freshly reseeded generator on every call.

use crate::error::Result;
use crate::tensor::{Graph, TensorId};

/// Central difference step. At f64 precision this balances truncation
/// against cancellation error for losses of order 1.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative tolerance for entries with analytic magnitude >= [`SMALL_GRAD`].
pub const DEFAULT_TOL: f64 = 1e-4;
/// Looser tolerance below [`SMALL_GRAD`], where the relative measure is noisy.
pub const SMALL_GRAD_TOL: f64 = 1e-3;
pub const SMALL_GRAD: f64 = 1e-6;
/// Entries where analytic and numeric gradients are both this close count as
/// matching outright; relative error is meaningless at the noise floor.
const ABS_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Worst relative mismatch over all checked entries.
    pub max_rel_err: f64,
    pub entries_checked: usize,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub failures: usize,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compare analytic gradients against central finite differences for every
/// entry of every parameter in `params`.
///
/// `forward` is called after each [`Graph::reset`] and must rebuild the tape
/// and return the scalar loss tensor. Gradients are taken from one analytic
/// backward pass; each finite difference costs two additional forwards.
pub fn check_params(
    g: &mut Graph,
    params: &[TensorId],
    mut forward: impl FnMut(&mut Graph) -> Result<TensorId>,
    h: f64,
) -> Result<GradCheck> {
    g.reset();
    let loss = forward(g)?;
    g.zero_grads();
    g.backward(loss)?;
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|&p| Ok(g.grad(p)?.expect("gradcheck needs parameters").to_vec()))
        .collect::<Result<_>>()?;

    let mut report = GradCheck {
        max_rel_err: 0.0,
        entries_checked: 0,
        worst: None,
        failures: 0,
    };
    for (pi, &p) in params.iter().enumerate() {
        let name = g.name(p)?.unwrap_or("<unnamed>").to_string();
        let n = g.value(p)?.len();
        for i in 0..n {
            let orig = g.value(p)?[i];
            let fd = {
                let mut at = |v: f64| -> Result<f64> {
                    let mut data = g.value(p)?.to_vec();
                    data[i] = v;
                    g.set_value(p, &data)?;
                    g.reset();
                    let l = forward(g)?;
                    Ok(g.value(l)?[0])
                };
                let plus = at(orig + h)?;
                let minus = at(orig - h)?;
                let mut data = g.value(p)?.to_vec();
                data[i] = orig;
                g.set_value(p, &data)?;
                (plus - minus) / (2.0 * h)
            };
            let a = analytic[pi][i];
            let rel = if (a - fd).abs() < ABS_FLOOR {
                0.0
            } else {
                (a - fd).abs() / a.abs().max(fd.abs()).max(1e-12)
            };
            let tol = if a.abs() < SMALL_GRAD {
                SMALL_GRAD_TOL
            } else {
                DEFAULT_TOL
            };
            if rel > tol {
                report.failures += 1;
            }
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((name.clone(), i));
            }
            report.entries_checked += 1;
        }
    }
    // Leave the graph in a clean state with the original parameter values.
    g.reset();
    Ok(report)
}
