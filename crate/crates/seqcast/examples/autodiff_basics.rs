//! Tour of the tape-based autodiff engine: build a graph, run backward,
//! accumulate gradients, and reuse persistent parameters across tapes.
//!
//! Usage: cargo run --example autodiff_basics

use seqcast::tensor::Graph;

fn main() -> seqcast::Result<()> {
    let mut g = Graph::new();

    // Parameters survive reset(); everything built afterwards is a tape
    // that reset() discards.
    let w = g.param("w", 2, 2, vec![1.0, 2.0, 3.0, 4.0])?;
    let b = g.param("b", 1, 2, vec![0.5, -0.5])?;
    g.mark_persistent();

    // loss = mean((relu(x W + b) - y)^2)
    let x = g.leaf(1, 2, vec![1.0, 0.5])?;
    let y = g.leaf(1, 2, vec![0.0, 1.0])?;
    let xw = g.matmul(x, w)?;
    let z = g.add(xw, b)?;
    let a = g.relu(z)?;
    let loss = g.mse(a, y)?;
    println!("loss = {:.6}", g.value(loss)?[0]);

    g.backward(loss)?;
    println!("dL/dw = {:?}", g.grad(w)?.unwrap());
    println!("dL/db = {:?}", g.grad(b)?.unwrap());

    // Backward accumulates until zero_grads, which is what lets one
    // optimizer step consume several loss terms.
    g.backward(loss)?;
    println!("after second backward, dL/db doubles: {:?}", g.grad(b)?.unwrap());
    g.zero_grads();

    // A new tape on the same parameters: ids from the old tape are dead,
    // the persistent w and b remain valid.
    g.reset();
    let x2 = g.leaf(1, 2, vec![2.0, 0.5])?;
    let z2 = g.matmul(x2, w)?;
    let s = g.sum_all(z2)?;
    g.backward(s)?;
    println!("fresh tape, dS/dw = {:?}", g.grad(w)?.unwrap());

    // Using a stale id is a contract error, not silent garbage.
    match g.value(loss) {
        Err(e) => println!("stale id rejected: {e}"),
        Ok(_) => unreachable!("tape was reset"),
    }
    Ok(())
}
