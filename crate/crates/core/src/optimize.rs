//! Gradient-based minimization with parameter-shift gradients.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A loss over circuit angles.
///
/// Losses are evaluated on per-slot angles so that a parameter shared by
/// several gates is differentiated by shifting each occurrence separately.
/// `key` selects the shot-noise stream; exact objectives ignore it.
pub trait Objective: Sync {
    fn param_count(&self) -> usize;
    /// Parameter index of every angle slot.
    fn slot_params(&self) -> Vec<usize>;
    fn loss_slots(&self, angles: &[f64], key: u64) -> Result<f64>;

    fn expand(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.param_count() {
            return Err(Error::ParamCountMismatch {
                expected: self.param_count(),
                got: alpha.len(),
            });
        }
        Ok(self.slot_params().iter().map(|&p| alpha[p]).collect())
    }

    fn loss(&self, alpha: &[f64], key: u64) -> Result<f64> {
        self.loss_slots(&self.expand(alpha)?, key)
    }

    fn gradient(&self, alpha: &[f64], key: u64) -> Result<Vec<f64>> {
        param_shift_gradient(self, alpha, key)
    }
}

/// `∂L/∂α_j = Σ_{slots of j} [L(θ_s + π/2) − L(θ_s − π/2)] / 2`.
///
/// Each shifted evaluation draws from its own stream, `derive(key, [s, ±])`.
pub fn param_shift_gradient<O: Objective + ?Sized>(
    obj: &O,
    alpha: &[f64],
    key: u64,
) -> Result<Vec<f64>> {
    let angles = obj.expand(alpha)?;
    let slots = obj.slot_params();
    let parts: Vec<f64> = (0..angles.len())
        .into_par_iter()
        .map(|s| {
            let mut shifted = angles.clone();
            shifted[s] = angles[s] + FRAC_PI_2;
            let plus = obj.loss_slots(&shifted, rng::derive(key, &[s as u64, 0]))?;
            shifted[s] = angles[s] - FRAC_PI_2;
            let minus = obj.loss_slots(&shifted, rng::derive(key, &[s as u64, 1]))?;
            Ok((plus - minus) / 2.0)
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; obj.param_count()];
    for (s, g) in parts.into_iter().enumerate() {
        grad[slots[s]] += g;
    }
    Ok(grad)
}

/// Central finite differences of `obj.loss`, for cross-checking.
pub fn finite_difference_gradient<O: Objective + ?Sized>(
    obj: &O,
    alpha: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    (0..alpha.len())
        .map(|j| {
            let mut a = alpha.to_vec();
            a[j] = alpha[j] + h;
            let plus = obj.loss(&a, 0)?;
            a[j] = alpha[j] - h;
            let minus = obj.loss(&a, 0)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Method {
    GradientDescent,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Method {
    pub fn adam() -> Self {
        Method::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::GradientDescent => "gd",
            Method::Adam { .. } => "adam",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop as soon as an evaluated loss falls below this value.
    pub early_stop: Option<f64>,
}

impl OptimizerConfig {
    pub fn gradient_descent(learning_rate: f64, max_iters: usize) -> Self {
        Self {
            method: Method::GradientDescent,
            learning_rate,
            max_iters,
            early_stop: None,
        }
    }

    pub fn adam(learning_rate: f64, max_iters: usize) -> Self {
        Self {
            method: Method::adam(),
            learning_rate,
            max_iters,
            early_stop: None,
        }
    }

    pub fn with_early_stop(mut self, threshold: Option<f64>) -> Self {
        self.early_stop = threshold;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Method::Adam { beta1, beta2, eps } = self.method {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 {
                return Err(Error::Config(format!(
                    "adam needs beta1, beta2 in [0, 1) and eps > 0, got ({beta1}, {beta2}, {eps})"
                )));
            }
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::gradient_descent(0.5, 200)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    /// Parameters with the lowest evaluated loss.
    pub alpha: Vec<f64>,
    pub best_loss: f64,
    /// Loss evaluated at the start of every iteration.
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub stopped_early: bool,
}

/// Minimizes `obj` from `init`. Iteration `t` evaluates the loss with key
/// `derive(seed, [t, 0])` and the gradient with `derive(seed, [t, 1])`.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    init: &[f64],
    config: &OptimizerConfig,
    seed: u64,
) -> Result<OptimizeResult> {
    config.validate()?;
    if init.len() != obj.param_count() {
        return Err(Error::ParamCountMismatch {
            expected: obj.param_count(),
            got: init.len(),
        });
    }
    let mut alpha = init.to_vec();
    let mut best = (f64::INFINITY, alpha.clone());
    let mut trajectory = Vec::with_capacity(config.max_iters);
    let mut m = vec![0.0; alpha.len()];
    let mut v = vec![0.0; alpha.len()];
    let mut stopped_early = false;

    for t in 0..config.max_iters {
        let loss = obj.loss(&alpha, rng::derive(seed, &[t as u64, 0]))?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(loss));
        }
        trajectory.push(loss);
        if loss < best.0 {
            best = (loss, alpha.clone());
        }
        if config.early_stop.is_some_and(|thr| loss < thr) {
            stopped_early = true;
            break;
        }
        let grad = obj.gradient(&alpha, rng::derive(seed, &[t as u64, 1]))?;
        if let Some(bad) = grad.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss(*bad));
        }
        match config.method {
            Method::GradientDescent => {
                for (a, g) in alpha.iter_mut().zip(&grad) {
                    *a -= config.learning_rate * g;
                }
            }
            Method::Adam { beta1, beta2, eps } => {
                let step = (t + 1) as i32;
                let c1 = 1.0 - beta1.powi(step);
                let c2 = 1.0 - beta2.powi(step);
                for j in 0..alpha.len() {
                    m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
                    v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
                    alpha[j] -= config.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                }
            }
        }
    }

    let iterations = trajectory.len();
    if iterations == 0 {
        let loss = obj.loss(&alpha, rng::derive(seed, &[0, 0]))?;
        best = (loss, alpha);
    }
    Ok(OptimizeResult {
        alpha: best.1,
        best_loss: best.0,
        trajectory,
        iterations,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `L = Σ cos(θ_s)` with parameter 0 used twice.
    struct Cosines;

    impl Objective for Cosines {
        fn param_count(&self) -> usize {
            2
        }
        fn slot_params(&self) -> Vec<usize> {
            vec![0, 1, 0]
        }
        fn loss_slots(&self, angles: &[f64], _key: u64) -> Result<f64> {
            Ok(angles[0].cos() + angles[1].cos() + angles[2].sin())
        }
    }

    #[test]
    fn shift_rule_handles_shared_parameters() {
        let alpha = [0.7, -1.3];
        let ps = Cosines.gradient(&alpha, 0).unwrap();
        let fd = finite_difference_gradient(&Cosines, &alpha, 1e-6).unwrap();
        let exact = [-(0.7f64).sin() + (0.7f64).cos(), (1.3f64).sin()];
        for j in 0..2 {
            assert!((ps[j] - exact[j]).abs() < 1e-14);
            assert!((fd[j] - exact[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn descent_finds_minimum() {
        for cfg in [
            OptimizerConfig::gradient_descent(0.3, 300),
            OptimizerConfig::adam(0.1, 300),
        ] {
            let r = minimize(&Cosines, &[0.5, 0.5], &cfg, 1).unwrap();
            assert!(
                r.best_loss < -1.0 - std::f64::consts::SQRT_2 + 1e-6,
                "{cfg:?} {}",
                r.best_loss
            );
            assert_eq!(r.iterations, 300);
            assert!(r.trajectory.iter().all(|l| *l >= r.best_loss));
        }
    }

    #[test]
    fn early_stop_and_validation() {
        let cfg = OptimizerConfig::gradient_descent(0.3, 300).with_early_stop(Some(0.0));
        let r = minimize(&Cosines, &[0.5, 0.5], &cfg, 1).unwrap();
        assert!(r.stopped_early);
        assert!(r.iterations < 300);
        assert!(*r.trajectory.last().unwrap() < 0.0);
        assert!(minimize(&Cosines, &[0.5], &cfg, 1).is_err());
        assert!(minimize(
            &Cosines,
            &[0.5, 0.5],
            &OptimizerConfig::gradient_descent(-1.0, 3),
            1
        )
        .is_err());
    }

    struct Nan;
    impl Objective for Nan {
        fn param_count(&self) -> usize {
            1
        }
        fn slot_params(&self) -> Vec<usize> {
            vec![0]
        }
        fn loss_slots(&self, _: &[f64], _: u64) -> Result<f64> {
            Ok(f64::NAN)
        }
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let r = minimize(&Nan, &[0.0], &OptimizerConfig::default(), 0);
        assert!(matches!(r, Err(Error::NonFiniteLoss(_))));
    }
}
