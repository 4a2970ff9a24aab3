//! First-order optimizers over graph parameters, plus the learning-rate
//! scheduler in [`scheduler`].
//!
//! Per-kind hyperparameter defaults (canonical published values; the `rho`
//! field doubles as RMSprop's smoothing constant):
//!
//! | kind     | lr    | beta1 | beta2 | eps   | weight_decay | momentum | rho  |
//! |----------|-------|-------|-------|-------|--------------|----------|------|
//! | Adam     | 0.001 | 0.9   | 0.999 | 1e-8  | 0            |          |      |
//! | AdamW    | 0.001 | 0.9   | 0.999 | 1e-8  | 0.01         |          |      |
//! | Adamax   | 0.002 | 0.9   | 0.999 | 1e-8  | 0            |          |      |
//! | Adagrad  | 0.01  |       |       | 1e-10 | 0            |          |      |
//! | Adadelta | 1.0   |       |       | 1e-6  | 0            |          | 0.9  |
//! | SGD      | 0.01  |       |       |       | 0            | 0        |      |
//! | RMSprop  | 0.01  |       |       | 1e-8  | 0            |          | 0.99 |
//!
//! Weight decay is the coupled L2 form (added to the gradient) everywhere
//! except AdamW, which applies it decoupled from the adaptive step; Adam and
//! AdamW therefore coincide exactly at `weight_decay = 0`.

mod scheduler;

pub use scheduler::SchedulerSpec;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::tensor::{Graph, TensorId};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptKind {
    Adam,
    AdamW,
    Adamax,
    Adagrad,
    Adadelta,
    Sgd,
    Rmsprop,
}

impl OptKind {
    pub const ALL: [OptKind; 7] = [
        OptKind::Adam,
        OptKind::AdamW,
        OptKind::Adamax,
        OptKind::Adagrad,
        OptKind::Adadelta,
        OptKind::Sgd,
        OptKind::Rmsprop,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OptKind::Adam => "adam",
            OptKind::AdamW => "adamw",
            OptKind::Adamax => "adamax",
            OptKind::Adagrad => "adagrad",
            OptKind::Adadelta => "adadelta",
            OptKind::Sgd => "sgd",
            OptKind::Rmsprop => "rmsprop",
        }
    }
}

impl FromStr for OptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptKind::Adam),
            "adamw" => Ok(OptKind::AdamW),
            "adamax" => Ok(OptKind::Adamax),
            "adagrad" => Ok(OptKind::Adagrad),
            "adadelta" => Ok(OptKind::Adadelta),
            "sgd" => Ok(OptKind::Sgd),
            "rmsprop" => Ok(OptKind::Rmsprop),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Which optimizer to run and its scalar hyperparameters. Fields that a kind
/// does not use are ignored by it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptKind,
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub rho: f64,
}

impl OptimizerSpec {
    /// Canonical defaults for `kind`; see the module-level table.
    pub fn new(kind: OptKind) -> Self {
        let mut s = OptimizerSpec {
            kind,
            base_lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            momentum: 0.0,
            rho: 0.9,
        };
        match kind {
            OptKind::Adam => {}
            OptKind::AdamW => s.weight_decay = 0.01,
            OptKind::Adamax => s.base_lr = 0.002,
            OptKind::Adagrad => {
                s.base_lr = 0.01;
                s.eps = 1e-10;
            }
            OptKind::Adadelta => {
                s.base_lr = 1.0;
                s.eps = 1e-6;
            }
            OptKind::Sgd => s.base_lr = 0.01,
            OptKind::Rmsprop => {
                s.base_lr = 0.01;
                s.rho = 0.99;
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) {
            return Err(Error::Config(format!(
                "base_lr must be positive, got {}",
                self.base_lr
            )));
        }
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("rho", self.rho),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} must satisfy 0 <= {name} < 1, got {v}"
                )));
            }
        }
        if self.eps <= 0.0 {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.weight_decay < 0.0 || self.momentum < 0.0 {
            return Err(Error::Config(
                "weight_decay and momentum must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-parameter moment buffers; which of `a`/`b` is used, and as what,
/// depends on the optimizer kind.
#[derive(Debug)]
struct ParamState {
    a: Vec<f64>,
    b: Vec<f64>,
}

pub struct Optimizer {
    spec: OptimizerSpec,
    params: Vec<TensorId>,
    state: Vec<ParamState>,
    t: u64,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, g: &Graph, params: &[TensorId]) -> Result<Self> {
        spec.validate()?;
        let state = params
            .iter()
            .map(|&p| {
                let n = g.value(p)?.len();
                Ok(ParamState {
                    a: vec![0.0; n],
                    b: vec![0.0; n],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Optimizer {
            spec,
            params: params.to_vec(),
            state,
            t: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn zero_grads(&self, g: &mut Graph) {
        g.zero_grads();
    }

    /// One update over all tracked parameters with learning rate `lr_t`.
    pub fn step(&mut self, g: &mut Graph, lr_t: f64) -> Result<()> {
        self.t += 1;
        let t = self.t;
        let s = self.spec;
        for (id, st) in self.params.iter().zip(&mut self.state) {
            let (w, grad, name) = g.param_and_grad_mut(*id)?;
            if let Some(bad) = grad.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite gradient {bad} in parameter {name} at step {t}"
                )));
            }
            match s.kind {
                OptKind::Adam | OptKind::AdamW => {
                    let decoupled = s.kind == OptKind::AdamW;
                    let bc1 = 1.0 - s.beta1.powi(t as i32);
                    let bc2 = 1.0 - s.beta2.powi(t as i32);
                    for i in 0..w.len() {
                        let mut gi = grad[i];
                        if decoupled {
                            w[i] -= lr_t * s.weight_decay * w[i];
                        } else {
                            gi += s.weight_decay * w[i];
                        }
                        st.a[i] = s.beta1 * st.a[i] + (1.0 - s.beta1) * gi;
                        st.b[i] = s.beta2 * st.b[i] + (1.0 - s.beta2) * gi * gi;
                        let m_hat = st.a[i] / bc1;
                        let v_hat = st.b[i] / bc2;
                        w[i] -= lr_t * m_hat / (v_hat.sqrt() + s.eps);
                    }
                }
                OptKind::Adamax => {
                    let bc1 = 1.0 - s.beta1.powi(t as i32);
                    for i in 0..w.len() {
                        let gi = grad[i] + s.weight_decay * w[i];
                        st.a[i] = s.beta1 * st.a[i] + (1.0 - s.beta1) * gi;
                        st.b[i] = (s.beta2 * st.b[i]).max(gi.abs() + s.eps);
                        w[i] -= lr_t * st.a[i] / (bc1 * st.b[i]);
                    }
                }
                OptKind::Adagrad => {
                    for i in 0..w.len() {
                        let gi = grad[i] + s.weight_decay * w[i];
                        st.a[i] += gi * gi;
                        w[i] -= lr_t * gi / (st.a[i].sqrt() + s.eps);
                    }
                }
                OptKind::Adadelta => {
                    for i in 0..w.len() {
                        let gi = grad[i] + s.weight_decay * w[i];
                        st.a[i] = s.rho * st.a[i] + (1.0 - s.rho) * gi * gi;
                        let delta = -((st.b[i] + s.eps).sqrt() / (st.a[i] + s.eps).sqrt()) * gi;
                        st.b[i] = s.rho * st.b[i] + (1.0 - s.rho) * delta * delta;
                        w[i] += lr_t * delta;
                    }
                }
                OptKind::Sgd => {
                    for i in 0..w.len() {
                        let gi = grad[i] + s.weight_decay * w[i];
                        let d = if s.momentum > 0.0 {
                            st.a[i] = s.momentum * st.a[i] + gi;
                            st.a[i]
                        } else {
                            gi
                        };
                        w[i] -= lr_t * d;
                    }
                }
                OptKind::Rmsprop => {
                    for i in 0..w.len() {
                        let gi = grad[i] + s.weight_decay * w[i];
                        st.a[i] = s.rho * st.a[i] + (1.0 - s.rho) * gi * gi;
                        w[i] -= lr_t * gi / (st.a[i].sqrt() + s.eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One trainable scalar whose gradient we set by hand each step.
    struct Scalar {
        g: Graph,
        w: TensorId,
    }

    impl Scalar {
        fn new(w0: f64) -> Self {
            let mut g = Graph::new();
            let w = g.param("w", 1, 1, vec![w0]).unwrap();
            g.mark_persistent();
            Scalar { g, w }
        }

        fn value(&self) -> f64 {
            self.g.value(self.w).unwrap()[0]
        }

        /// Run one optimizer step with a forced gradient value.
        fn step_with_grad(&mut self, opt: &mut Optimizer, grad: f64, lr: f64) -> crate::Result<()> {
            self.g.reset();
            self.g.zero_grads();
            let c = self.g.scalar(grad);
            let y = self.g.mul(self.w, c).unwrap();
            let loss = self.g.sum_all(y).unwrap();
            self.g.backward(loss).unwrap();
            opt.step(&mut self.g, lr)
        }
    }

    const TRACE_GRADS: [f64; 5] = [2.0, -1.0, 0.5, 3.0, -2.5];

    /// Independent scalar re-implementations of each update rule, written
    /// against the published formulas rather than the vectorized code above.
    fn oracle_trace(spec: &OptimizerSpec, w0: f64, lr: f64) -> Vec<f64> {
        let mut w = w0;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        let mut out = Vec::new();
        for (i, &g0) in TRACE_GRADS.iter().enumerate() {
            let t = (i + 1) as i32;
            match spec.kind {
                OptKind::Adam => {
                    let g = g0 + spec.weight_decay * w;
                    a = spec.beta1 * a + (1.0 - spec.beta1) * g;
                    b = spec.beta2 * b + (1.0 - spec.beta2) * g * g;
                    let mh = a / (1.0 - spec.beta1.powi(t));
                    let vh = b / (1.0 - spec.beta2.powi(t));
                    w -= lr * mh / (vh.sqrt() + spec.eps);
                }
                OptKind::AdamW => {
                    w -= lr * spec.weight_decay * w;
                    a = spec.beta1 * a + (1.0 - spec.beta1) * g0;
                    b = spec.beta2 * b + (1.0 - spec.beta2) * g0 * g0;
                    let mh = a / (1.0 - spec.beta1.powi(t));
                    let vh = b / (1.0 - spec.beta2.powi(t));
                    w -= lr * mh / (vh.sqrt() + spec.eps);
                }
                OptKind::Adamax => {
                    a = spec.beta1 * a + (1.0 - spec.beta1) * g0;
                    b = (spec.beta2 * b).max(g0.abs() + spec.eps);
                    w -= lr * a / ((1.0 - spec.beta1.powi(t)) * b);
                }
                OptKind::Adagrad => {
                    a += g0 * g0;
                    w -= lr * g0 / (a.sqrt() + spec.eps);
                }
                OptKind::Adadelta => {
                    a = spec.rho * a + (1.0 - spec.rho) * g0 * g0;
                    let delta = -((b + spec.eps).sqrt() / (a + spec.eps).sqrt()) * g0;
                    b = spec.rho * b + (1.0 - spec.rho) * delta * delta;
                    w += lr * delta;
                }
                OptKind::Sgd => {
                    a = spec.momentum * a + g0;
                    let d = if spec.momentum > 0.0 { a } else { g0 };
                    w -= lr * d;
                }
                OptKind::Rmsprop => {
                    a = spec.rho * a + (1.0 - spec.rho) * g0 * g0;
                    w -= lr * g0 / (a.sqrt() + spec.eps);
                }
            }
            out.push(w);
        }
        out
    }

    #[test]
    fn all_kinds_match_scalar_hand_traces() {
        for kind in OptKind::ALL {
            let mut spec = OptimizerSpec::new(kind);
            if kind == OptKind::Sgd {
                spec.momentum = 0.9;
            }
            let lr = 0.05;
            let w0 = 0.7;
            let expected = oracle_trace(&spec, w0, lr);

            let mut s = Scalar::new(w0);
            let mut opt = Optimizer::new(spec, &s.g, &[s.w]).unwrap();
            for (i, &g0) in TRACE_GRADS.iter().enumerate() {
                s.step_with_grad(&mut opt, g0, lr).unwrap();
                let got = s.value();
                assert!(
                    (got - expected[i]).abs() < 1e-12,
                    "{kind:?} step {}: got {got}, oracle {}",
                    i + 1,
                    expected[i]
                );
            }
        }
    }

    #[test]
    fn sgd_definitional_step() {
        let mut s = Scalar::new(1.0);
        let mut opt = Optimizer::new(OptimizerSpec::new(OptKind::Sgd), &s.g, &[s.w]).unwrap();
        s.step_with_grad(&mut opt, 2.0, 0.1).unwrap();
        assert!((s.value() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        // With constant gradient, bias-corrected m_hat/sqrt(v_hat) is
        // sign(g) up to eps, so the first update is about -lr * sign(g).
        for g0 in [3.0, -0.25] {
            let mut s = Scalar::new(0.0);
            let mut opt = Optimizer::new(OptimizerSpec::new(OptKind::Adam), &s.g, &[s.w]).unwrap();
            s.step_with_grad(&mut opt, g0, 0.01).unwrap();
            assert!((s.value() + 0.01 * g0.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn adamw_equals_adam_when_decay_is_zero() {
        let mut spec_w = OptimizerSpec::new(OptKind::AdamW);
        spec_w.weight_decay = 0.0;
        let spec_a = OptimizerSpec::new(OptKind::Adam);

        let mut sa = Scalar::new(0.3);
        let mut sw = Scalar::new(0.3);
        let mut oa = Optimizer::new(spec_a, &sa.g, &[sa.w]).unwrap();
        let mut ow = Optimizer::new(spec_w, &sw.g, &[sw.w]).unwrap();
        for &g0 in &TRACE_GRADS {
            sa.step_with_grad(&mut oa, g0, 0.02).unwrap();
            sw.step_with_grad(&mut ow, g0, 0.02).unwrap();
            assert_eq!(sa.value(), sw.value());
        }
    }

    #[test]
    fn converges_on_shifted_quadratic() {
        // f(w) = (w - 3)^2 from w = 0, constant per-kind learning rate.
        for kind in OptKind::ALL {
            let mut spec = OptimizerSpec::new(kind);
            spec.weight_decay = 0.0;
            let (lr, steps) = match kind {
                OptKind::Adam | OptKind::AdamW => (0.05, 500),
                OptKind::Adamax => (0.05, 500),
                OptKind::Adagrad => (1.0, 500),
                OptKind::Adadelta => (1.0, 5000),
                OptKind::Sgd => (0.2, 500),
                OptKind::Rmsprop => (0.01, 500),
            };
            let mut s = Scalar::new(0.0);
            let mut opt = Optimizer::new(spec, &s.g, &[s.w]).unwrap();
            for _ in 0..steps {
                let grad = 2.0 * (s.value() - 3.0);
                s.step_with_grad(&mut opt, grad, lr).unwrap();
            }
            let w = s.value();
            assert!((w - 3.0).abs() < 1e-2, "{kind:?} ended at {w}");
        }
    }

    #[test]
    fn step_on_non_parameter_is_a_contract_error() {
        let mut g = Graph::new();
        let x = g.leaf(1, 1, vec![1.0]).unwrap();
        g.mark_persistent();
        let mut opt = Optimizer::new(OptimizerSpec::new(OptKind::Sgd), &g, &[x]).unwrap();
        assert!(matches!(
            opt.step(&mut g, 0.1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut s = Scalar::new(1.0);
        let mut opt = Optimizer::new(OptimizerSpec::new(OptKind::Sgd), &s.g, &[s.w]).unwrap();
        match s.step_with_grad(&mut opt, f64::NAN, 0.1) {
            Err(Error::Numeric(msg)) => assert!(msg.contains('w'), "{msg}"),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn fresh_gradients_after_zeroing() {
        // Two backward passes double a linear loss gradient; zeroing between
        // steps makes the second update identical to the first.
        let mut s = Scalar::new(0.0);
        let mut opt = Optimizer::new(OptimizerSpec::new(OptKind::Sgd), &s.g, &[s.w]).unwrap();

        s.g.reset();
        s.g.zero_grads();
        let c = s.g.scalar(2.0);
        let y = s.g.mul(s.w, c).unwrap();
        let loss = s.g.sum_all(y).unwrap();
        s.g.backward(loss).unwrap();
        s.g.backward(loss).unwrap();
        assert_eq!(s.g.grad(s.w).unwrap().unwrap(), &[4.0]);

        s.g.zero_grads();
        s.g.backward(loss).unwrap();
        assert_eq!(s.g.grad(s.w).unwrap().unwrap(), &[2.0]);
        opt.step(&mut s.g, 0.5).unwrap();
        assert_eq!(s.value(), -1.0);
    }

    #[test]
    fn spec_validation_rejects_bad_values() {
        let mut spec = OptimizerSpec::new(OptKind::Adam);
        spec.base_lr = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = OptimizerSpec::new(OptKind::Adam);
        spec.beta2 = 1.0;
        assert!(spec.validate().is_err());
        assert!("adamw".parse::<OptKind>().is_ok());
        assert!("newton".parse::<OptKind>().is_err());
    }
}
