//! Variational entanglement detection and log-negativity estimation.
//!
//! Four drivers share one optimizer loop:
//! - [`ved_deterministic`] evaluates every channel of a decomposition;
//! - [`ved_probabilistic`] samples channels by `|r_O| / γ`;
//! - [`ved_reduction_direct`] uses two swap-test overlaps for the reduction map;
//! - [`vlne`] maximizes an ancilla probability to bound `‖ρ^{T_B}‖₁` from below.

use rand::distr::{weighted::WeightedIndex, Distribution};
use serde::Serialize;

use crate::circuit::{ancilla_prob_slots, overlap_swap, Ansatz, ShotPolicy, StatePreparation};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, partial_trace, CMat, Keep, C64};
use crate::maps::{transpose_decomposition, QuasiDecomposition};
use crate::optimize::{minimize, Objective, OptimizerConfig};
use crate::rng;
use crate::states::DensityMatrix;

/// Default loss margin for exact evaluation.
pub const DEFAULT_DELTA_EXACT: f64 = 0.05;
/// Default loss margin when shot noise or channel sampling is present.
pub const DEFAULT_DELTA_SAMPLED: f64 = 0.1;

/// `M = ⌈2γ² log₂(2/ε) / δ²⌉`, clamped at 0 for `ε ≥ 2`.
pub fn sample_budget(gamma: f64, delta: f64, epsilon: f64) -> Result<u64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ParamOutOfRange(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::ParamOutOfRange(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::ParamOutOfRange(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let m = 2.0 * gamma * gamma * (2.0 / epsilon).log2() / (delta * delta);
    // guard against 4257.9999… style rounding before the ceiling
    let rounded = m.round();
    let m = if (m - rounded).abs() < 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        m.ceil()
    };
    Ok(m.max(0.0) as u64)
}

fn check_prep(prep: &dyn StatePreparation, rho: &DensityMatrix) -> Result<()> {
    if prep.dim() != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "{}-dimensional test state against a {}-dimensional input",
            prep.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

fn overlap(psi: &[C64], output: &CMat, policy: &ShotPolicy, key: u64) -> f64 {
    policy.frequency(output.expectation(psi).re, key)
}

/// `L(α) = Σ r_O ⟨ψ(α)|𝒪(ρ)|ψ(α)⟩` with every term evaluated.
pub struct DeterministicLoss<'a> {
    prep: &'a dyn StatePreparation,
    terms: Vec<(f64, CMat)>,
    policy: ShotPolicy,
}

impl<'a> DeterministicLoss<'a> {
    pub fn new(
        prep: &'a dyn StatePreparation,
        decomp: &QuasiDecomposition,
        rho: &DensityMatrix,
        policy: ShotPolicy,
    ) -> Result<Self> {
        check_prep(prep, rho)?;
        let outputs = decomp.term_outputs(rho)?;
        let terms = decomp
            .terms()
            .iter()
            .map(|t| t.coeff)
            .zip(outputs)
            .collect();
        Ok(Self {
            prep,
            terms,
            policy,
        })
    }
}

impl Objective for DeterministicLoss<'_> {
    fn param_count(&self) -> usize {
        self.prep.param_count()
    }

    fn slot_params(&self) -> Vec<usize> {
        self.prep.slot_params()
    }

    fn loss_slots(&self, angles: &[f64], key: u64) -> Result<f64> {
        let psi = self.prep.prepare_slots(angles)?;
        let parts: Vec<f64> = self
            .terms
            .iter()
            .enumerate()
            .map(|(t, (r, out))| {
                r * overlap(&psi, out, &self.policy, rng::derive(key, &[t as u64]))
            })
            .collect();
        Ok(compensated_sum(parts))
    }
}

/// Exact or shot-noise loss at one parameter vector.
pub fn loss_deterministic(
    prep: &dyn StatePreparation,
    alpha: &[f64],
    decomp: &QuasiDecomposition,
    rho: &DensityMatrix,
    policy: &ShotPolicy,
) -> Result<f64> {
    DeterministicLoss::new(prep, decomp, rho, *policy)?.loss(alpha, policy.seed)
}

/// `L′(α) = (1/M) Σ_m γ sgn(r_{O_m}) ⟨ψ(α)|𝒪_m(ρ)|ψ(α)⟩` with
/// `O_m ~ |r_O| / γ`, drawn fresh for every key.
pub struct SampledLoss<'a> {
    prep: &'a dyn StatePreparation,
    outputs: Vec<CMat>,
    signs: Vec<f64>,
    gamma: f64,
    dist: WeightedIndex<f64>,
    samples: u64,
    policy: ShotPolicy,
}

impl<'a> SampledLoss<'a> {
    pub fn new(
        prep: &'a dyn StatePreparation,
        decomp: &QuasiDecomposition,
        rho: &DensityMatrix,
        samples: u64,
        policy: ShotPolicy,
    ) -> Result<Self> {
        check_prep(prep, rho)?;
        if samples == 0 {
            return Err(Error::ParamOutOfRange(
                "sample count must be at least 1".into(),
            ));
        }
        let probs = decomp.sampling_dist()?;
        let dist = WeightedIndex::new(&probs).map_err(|_| Error::ZeroMap)?;
        Ok(Self {
            prep,
            outputs: decomp.term_outputs(rho)?,
            signs: decomp.terms().iter().map(|t| t.coeff.signum()).collect(),
            gamma: decomp.gamma(),
            dist,
            samples,
            policy,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Objective for SampledLoss<'_> {
    fn param_count(&self) -> usize {
        self.prep.param_count()
    }

    fn slot_params(&self) -> Vec<usize> {
        self.prep.slot_params()
    }

    fn loss_slots(&self, angles: &[f64], key: u64) -> Result<f64> {
        let psi = self.prep.prepare_slots(angles)?;
        let mut exact: Vec<Option<f64>> = vec![None; self.outputs.len()];
        let mut draws = rng::stream(key, &[0x5a3e]);
        let mut parts = Vec::with_capacity(self.samples as usize);
        for m in 0..self.samples {
            let t = self.dist.sample(&mut draws);
            let v = *exact[t].get_or_insert_with(|| self.outputs[t].expectation(&psi).re);
            let v = self.policy.frequency(v, rng::derive(key, &[1, m]));
            parts.push(self.gamma * self.signs[t] * v);
        }
        Ok(compensated_sum(parts) / self.samples as f64)
    }
}

/// One draw of the sampled loss at `alpha`.
pub fn loss_sampled(
    prep: &dyn StatePreparation,
    alpha: &[f64],
    decomp: &QuasiDecomposition,
    rho: &DensityMatrix,
    samples: u64,
    policy: &ShotPolicy,
    key: u64,
) -> Result<f64> {
    SampledLoss::new(prep, decomp, rho, samples, *policy)?.loss(alpha, key)
}

/// `tr[ψ_A ρ_A] − tr[ψ ρ]`: the reduction-map loss as two swap-test overlaps.
///
/// The map acts on B, so the single-system overlap is taken on the A marginals.
pub struct ReductionSwapLoss<'a> {
    prep: &'a dyn StatePreparation,
    rho: CMat,
    rho_a: CMat,
    dim_a: usize,
    dim_b: usize,
    policy: ShotPolicy,
}

impl<'a> ReductionSwapLoss<'a> {
    pub fn new(
        prep: &'a dyn StatePreparation,
        rho: &DensityMatrix,
        policy: ShotPolicy,
    ) -> Result<Self> {
        check_prep(prep, rho)?;
        Ok(Self {
            prep,
            rho: rho.mat().clone(),
            rho_a: rho.marginal(Keep::A),
            dim_a: rho.dim_a(),
            dim_b: rho.dim_b(),
            policy,
        })
    }
}

impl Objective for ReductionSwapLoss<'_> {
    fn param_count(&self) -> usize {
        self.prep.param_count()
    }

    fn slot_params(&self) -> Vec<usize> {
        self.prep.slot_params()
    }

    fn loss_slots(&self, angles: &[f64], key: u64) -> Result<f64> {
        let psi = CMat::outer(&self.prep.prepare_slots(angles)?);
        let psi_a = partial_trace(&psi, self.dim_a, self.dim_b, Keep::A)?;
        let local = overlap_swap(&psi_a, &self.rho_a, &self.policy, rng::derive(key, &[0]))?;
        let joint = overlap_swap(&psi, &self.rho, &self.policy, rng::derive(key, &[1]))?;
        Ok(local - joint)
    }
}

/// `ℒ₁(α) = −Σ_q c_q o_q`, where `o_q` is the ancilla-0 probability for the
/// variant `P_q ρ P_q` (Pauli `P_q` on B) and `c_q = (−1)^{#Y}/2ⁿ`.
pub struct NegativityLoss<'a> {
    ansatz: &'a Ansatz,
    variants: Vec<(f64, CMat)>,
    policy: ShotPolicy,
}

impl<'a> NegativityLoss<'a> {
    pub fn new(ansatz: &'a Ansatz, rho: &DensityMatrix, policy: ShotPolicy) -> Result<Self> {
        let decomp = transpose_decomposition(crate::maps::qubits_of(rho.dim_b())?)?;
        if rho.dim_a().count_ones() != 1 {
            return Err(Error::UnsupportedDim(format!(
                "A dimension {} is not a power of two",
                rho.dim_a()
            )));
        }
        if ansatz.dim() != 2 * rho.dim() {
            return Err(Error::DimMismatch(format!(
                "{}-qubit circuit needs a {}-dimensional input, got {}",
                ansatz.width(),
                ansatz.dim() / 2,
                rho.dim()
            )));
        }
        let outputs = decomp
            .terms()
            .iter()
            .map(|t| {
                let mut unit = t.clone();
                unit.coeff = 1.0;
                unit.apply(rho.mat())
            })
            .collect::<Result<Vec<_>>>()?;
        let variants = decomp
            .terms()
            .iter()
            .map(|t| t.coeff)
            .zip(outputs)
            .collect();
        Ok(Self {
            ansatz,
            variants,
            policy,
        })
    }
}

impl Objective for NegativityLoss<'_> {
    fn param_count(&self) -> usize {
        self.ansatz.param_count()
    }

    fn slot_params(&self) -> Vec<usize> {
        self.ansatz.slot_params()
    }

    fn loss_slots(&self, angles: &[f64], key: u64) -> Result<f64> {
        let parts = self
            .variants
            .iter()
            .enumerate()
            .map(|(q, (c, variant))| {
                let o = ancilla_prob_slots(
                    self.ansatz,
                    angles,
                    variant,
                    &self.policy,
                    rng::derive(key, &[q as u64]),
                )?;
                Ok(-c * o)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(compensated_sum(parts))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

/// Run parameters shared by the detection drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct VedSettings {
    pub optimizer: OptimizerConfig,
    pub delta: f64,
    pub policy: ShotPolicy,
    pub seed: u64,
    /// Starting parameters for the first attempt; later attempts and a missing
    /// value draw uniform angles from the seed.
    pub init: Option<Vec<f64>>,
    /// Stop an attempt as soon as the loss drops below `-delta`.
    pub early_stop: bool,
    /// Independent starts; stops after the first `Entangled` attempt.
    pub attempts: usize,
}

impl VedSettings {
    pub fn new(optimizer: OptimizerConfig, delta: f64, policy: ShotPolicy, seed: u64) -> Self {
        Self {
            optimizer,
            delta,
            policy,
            seed,
            init: None,
            early_stop: true,
            attempts: 1,
        }
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_early_stop(mut self, on: bool) -> Self {
        self.early_stop = on;
        self
    }

    pub fn with_attempts(mut self, attempts: usize) -> Self {
        self.attempts = attempts;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::ParamOutOfRange(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.attempts == 0 {
            return Err(Error::ParamOutOfRange(
                "at least one attempt is required".into(),
            ));
        }
        if self.optimizer.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn start(&self, attempt: usize, count: usize) -> Vec<f64> {
        match (&self.init, attempt) {
            (Some(init), 0) => init.clone(),
            _ => rng::uniform_angles(count, rng::derive(self.seed, &[0x1417, attempt as u64])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    /// Loss re-evaluated at the returned parameters with a fresh noise key.
    pub final_loss: f64,
    pub loss_trajectory: Vec<f64>,
    /// Optimizer iterations over all attempts.
    pub iterations: usize,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub budget: Option<u64>,
    pub gamma: f64,
    pub seed: u64,
    pub shots: u32,
    pub map: String,
    /// `max(0, 1 − Kε)` for sampled runs.
    pub confidence_floor: Option<f64>,
    pub alpha: Vec<f64>,
}

struct Outcome {
    alpha: Vec<f64>,
    final_loss: f64,
    trajectory: Vec<f64>,
}

fn run_attempts(
    obj: &dyn ObjectiveDyn,
    settings: &VedSettings,
    entangled_below: f64,
) -> Result<Outcome> {
    settings.validate()?;
    let mut trajectory = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let optimizer = settings
        .optimizer
        .with_early_stop(settings.early_stop.then_some(entangled_below));
    for attempt in 0..settings.attempts {
        let init = settings.start(attempt, obj.count());
        let run_seed = rng::derive(settings.seed, &[0x0b7, attempt as u64]);
        let result = obj.run(&init, &optimizer, run_seed)?;
        trajectory.extend_from_slice(&result.trajectory);
        let check = obj.eval(
            &result.alpha,
            rng::derive(settings.seed, &[0xf1a1, attempt as u64]),
        )?;
        if best.as_ref().is_none_or(|(l, _)| check < *l) {
            best = Some((check, result.alpha));
        }
        if check < entangled_below {
            break;
        }
    }
    let (final_loss, alpha) = best.expect("at least one attempt");
    Ok(Outcome {
        alpha,
        final_loss,
        trajectory,
    })
}

/// Object-safe view of an [`Objective`] for the attempt loop.
trait ObjectiveDyn {
    fn count(&self) -> usize;
    fn run(
        &self,
        init: &[f64],
        cfg: &OptimizerConfig,
        seed: u64,
    ) -> Result<crate::optimize::OptimizeResult>;
    fn eval(&self, alpha: &[f64], key: u64) -> Result<f64>;
}

impl<O: Objective> ObjectiveDyn for O {
    fn count(&self) -> usize {
        self.param_count()
    }
    fn run(
        &self,
        init: &[f64],
        cfg: &OptimizerConfig,
        seed: u64,
    ) -> Result<crate::optimize::OptimizeResult> {
        minimize(self, init, cfg, seed)
    }
    fn eval(&self, alpha: &[f64], key: u64) -> Result<f64> {
        self.loss(alpha, key)
    }
}

fn report(outcome: Outcome, settings: &VedSettings, gamma: f64, map: &str) -> DetectionReport {
    DetectionReport {
        verdict: if outcome.final_loss < -settings.delta {
            Verdict::Entangled
        } else {
            Verdict::Inconclusive
        },
        final_loss: outcome.final_loss,
        iterations: outcome.trajectory.len(),
        loss_trajectory: outcome.trajectory,
        delta: settings.delta,
        epsilon: None,
        budget: None,
        gamma,
        seed: settings.seed,
        shots: settings.policy.shots,
        map: map.to_string(),
        confidence_floor: None,
        alpha: outcome.alpha,
    }
}

/// Minimizes the fully evaluated loss and reports `Entangled` when the
/// final loss is below `−δ`.
pub fn ved_deterministic(
    rho: &DensityMatrix,
    decomp: &QuasiDecomposition,
    prep: &dyn StatePreparation,
    settings: &VedSettings,
) -> Result<DetectionReport> {
    let obj = DeterministicLoss::new(prep, decomp, rho, settings.policy)?;
    let outcome = run_attempts(&obj, settings, -settings.delta)?;
    Ok(report(outcome, settings, decomp.gamma(), decomp.label()))
}

/// As [`ved_deterministic`] with `M` sampled channels per loss evaluation.
pub fn ved_probabilistic(
    rho: &DensityMatrix,
    decomp: &QuasiDecomposition,
    prep: &dyn StatePreparation,
    settings: &VedSettings,
    epsilon: f64,
) -> Result<DetectionReport> {
    let budget = sample_budget(decomp.gamma(), settings.delta, epsilon)?;
    let obj = SampledLoss::new(prep, decomp, rho, budget.max(1), settings.policy)?;
    let outcome = run_attempts(&obj, settings, -settings.delta)?;
    let mut rep = report(outcome, settings, decomp.gamma(), decomp.label());
    rep.epsilon = Some(epsilon);
    rep.budget = Some(budget);
    rep.confidence_floor = Some((1.0 - rep.iterations as f64 * epsilon).max(0.0));
    Ok(rep)
}

/// Reduction-criterion detection from two swap-test overlaps.
pub fn ved_reduction_direct(
    rho: &DensityMatrix,
    prep: &dyn StatePreparation,
    settings: &VedSettings,
) -> Result<DetectionReport> {
    let obj = ReductionSwapLoss::new(prep, rho, settings.policy)?;
    let outcome = run_attempts(&obj, settings, -settings.delta)?;
    Ok(report(outcome, settings, 2.0, "reduction-direct"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativityReport {
    /// Optimized `ℒ₁`.
    pub l1: f64,
    /// `2|ℒ₁| − 1`, the trace-norm estimate.
    pub beta: f64,
    /// `log₂ β`; `-inf` when `β ≤ 0`.
    pub log_negativity: f64,
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub shots: u32,
    pub alpha: Vec<f64>,
}

/// Variational lower bound on `log₂ ‖ρ^{T_B}‖₁` using an ancilla as the
/// last qubit of `ansatz`.
pub fn vlne(
    rho: &DensityMatrix,
    ansatz: &Ansatz,
    settings: &VedSettings,
) -> Result<NegativityReport> {
    let obj = NegativityLoss::new(ansatz, rho, settings.policy)?;
    let mut s = settings.clone();
    s.early_stop = false;
    // attempts stop early only on a loss no attempt can reach
    let outcome = run_attempts(&obj, &s, f64::NEG_INFINITY)?;
    let l1 = outcome.final_loss;
    let beta = 2.0 * l1.abs() - 1.0;
    Ok(NegativityReport {
        l1,
        beta,
        log_negativity: if beta > 0.0 {
            beta.log2()
        } else {
            f64::NEG_INFINITY
        },
        iterations: outcome.trajectory.len(),
        trajectory: outcome.trajectory,
        seed: settings.seed,
        shots: settings.policy.shots,
        alpha: outcome.alpha,
    })
}
