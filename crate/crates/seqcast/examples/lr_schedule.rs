//! The warmup / inverse-square-root learning-rate schedule: linear ramp for
//! the first warmup steps, then t^(-1/2) decay, scaled by d_model^(-1/2).
//!
//! Usage: cargo run --example lr_schedule

use seqcast::optim::SchedulerSpec;

fn main() -> seqcast::Result<()> {
    let probe = [1u64, 100, 1000, 2000, 3000, 4000, 10_000, 100_000];

    for d_model in [64usize, 256] {
        let sched = SchedulerSpec::WarmupInvSqrt {
            d_model,
            warmup_steps: 3000,
        };
        println!("d_model {d_model}, warmup 3000, base_lr 1:");
        for &t in &probe {
            println!("  step {t:>6}: lr {:.6e}", sched.lr_at(t, 1.0)?);
        }
    }

    // The two branches meet exactly at the warmup boundary.
    let sched = SchedulerSpec::WarmupInvSqrt {
        d_model: 64,
        warmup_steps: 3000,
    };
    let ramp_end = sched.lr_at(3000, 1.0)?;
    let decay_start = 64f64.powf(-0.5) * 3000f64.powf(-0.5);
    println!("continuity at t = warmup: {ramp_end:.12e} vs {decay_start:.12e}");

    // Step numbering starts at 1; asking for step 0 is a contract error.
    match sched.lr_at(0, 1.0) {
        Err(e) => println!("step 0 rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
