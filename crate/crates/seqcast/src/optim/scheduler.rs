use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Learning-rate schedule, evaluated per optimizer step (1-based).
///
/// `WarmupInvSqrt` is the inverse-square-root warmup schedule:
/// `lr(t) = base_lr * d_model^(-1/2) * min(t^(-1/2), t * warmup^(-3/2))`.
/// It rises linearly for `t < warmup_steps`, peaks at `t = warmup_steps`
/// (both branches agree there, so the schedule is continuous), and decays as
/// `t^(-1/2)` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchedulerSpec {
    WarmupInvSqrt { d_model: usize, warmup_steps: u64 },
    Constant,
}

impl SchedulerSpec {
    pub fn validate(&self) -> Result<()> {
        if let SchedulerSpec::WarmupInvSqrt {
            d_model,
            warmup_steps,
        } = self
        {
            if *warmup_steps < 1 {
                return Err(Error::Config("warmup_steps must be at least 1".into()));
            }
            if *d_model == 0 {
                return Err(Error::Config("scheduler d_model must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, t: u64, base_lr: f64) -> Result<f64> {
        if t == 0 {
            return Err(Error::Contract(
                "scheduler steps are 1-based; lr_at(0) is undefined".into(),
            ));
        }
        match self {
            SchedulerSpec::Constant => Ok(base_lr),
            SchedulerSpec::WarmupInvSqrt {
                d_model,
                warmup_steps,
            } => {
                let t = t as f64;
                let w = *warmup_steps as f64;
                let scale = (*d_model as f64).powf(-0.5);
                Ok(base_lr * scale * (t.powf(-0.5)).min(t * w.powf(-1.5)))
            }
        }
    }
}
