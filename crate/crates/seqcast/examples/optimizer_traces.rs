//! Drive each optimizer on the scalar objective (w - 3)^2 and watch the
//! iterates. Six reach the minimum at very different speeds; adagrad at its
//! default lr shows why its ever-shrinking step size stalls long runs.
//!
//! Usage: cargo run --example optimizer_traces

use seqcast::optim::{OptKind, Optimizer, OptimizerSpec};
use seqcast::tensor::Graph;

const TOL: f64 = 1e-3;
const MAX_STEPS: usize = 60_000;

fn main() -> seqcast::Result<()> {
    for kind in OptKind::ALL {
        let spec = OptimizerSpec::new(kind);
        let mut g = Graph::new();
        let w = g.param("w", 1, 1, vec![0.0])?;
        g.mark_persistent();
        let mut opt = Optimizer::new(spec, &g, &[w])?;

        let mut trace = Vec::new();
        let mut converged_at = None;
        for i in 0..MAX_STEPS {
            g.reset();
            opt.zero_grads(&mut g);
            let c = g.scalar(3.0);
            let d = g.sub(w, c)?;
            let loss = g.mul(d, d)?;
            g.backward(loss)?;
            opt.step(&mut g, spec.base_lr)?;
            if i < 5 {
                trace.push(g.value(w)?[0]);
            }
            if (g.value(w)?[0] - 3.0).abs() < TOL {
                converged_at = Some(i + 1);
                break;
            }
        }
        let final_w = g.value(w)?[0];
        let outcome = match converged_at {
            Some(n) => format!("|w - 3| < {TOL:.0e} after {n} steps"),
            None => format!("w = {final_w:.4} after {MAX_STEPS} steps"),
        };
        println!(
            "{:<9} lr {:<6} first steps {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}  {outcome}",
            spec.kind.label(),
            spec.base_lr,
            trace[0],
            trace[1],
            trace[2],
            trace[3],
            trace[4],
        );
    }
    Ok(())
}
