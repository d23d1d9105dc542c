//! Parameterized circuits and the three measurement primitives: the
//! overlap circuit `⟨0|U† 𝒪(ρ) U|0⟩`, the swap test, and the ancilla
//! probability used for negativity estimation. Each primitive runs either
//! exactly or with binomial shot noise.
//!
//! Qubit site 0 is the most significant bit of a basis index.

use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, C64, ONE, ZERO};
use crate::maps::ChannelTerm;
use crate::rng;
use crate::states::ground;

/// Initial angles of the two-qubit hardware ansatz.
pub const FIG2_INIT: [f64; 3] = [3.2292, 4.8579, 5.4691];

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Ry {
        target: usize,
        param: usize,
    },
    Rz {
        target: usize,
        param: usize,
    },
    /// `U3(θ, φ, φ') = Rz(φ) Ry(θ) Rz(φ')`, params in that order.
    U3 {
        target: usize,
        params: [usize; 3],
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    fn param_ids(&self) -> Vec<usize> {
        match self {
            Gate::Ry { param, .. } | Gate::Rz { param, .. } => vec![*param],
            Gate::U3 { params, .. } => params.to_vec(),
            Gate::Cnot { .. } => Vec::new(),
        }
    }

    fn targets(&self) -> Vec<usize> {
        match self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::U3 { target, .. } => {
                vec![*target]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
        }
    }
}

type Mat2 = [[C64; 2]; 2];

fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> Mat2 {
    [
        [C64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, theta / 2.0)],
    ]
}

fn adjoint2(g: &Mat2) -> Mat2 {
    [
        [g[0][0].conj(), g[1][0].conj()],
        [g[0][1].conj(), g[1][1].conj()],
    ]
}

fn bit(width: usize, site: usize) -> usize {
    1 << (width - 1 - site)
}

fn apply_1q_vec(v: &mut [C64], width: usize, target: usize, g: &Mat2) {
    let b = bit(width, target);
    for i in 0..v.len() {
        if i & b == 0 {
            let j = i | b;
            let (a0, a1) = (v[i], v[j]);
            v[i] = g[0][0] * a0 + g[0][1] * a1;
            v[j] = g[1][0] * a0 + g[1][1] * a1;
        }
    }
}

fn apply_cnot_vec(v: &mut [C64], width: usize, control: usize, target: usize) {
    let cb = bit(width, control);
    let tb = bit(width, target);
    for i in 0..v.len() {
        if i & cb != 0 && i & tb == 0 {
            v.swap(i, i | tb);
        }
    }
}

/// `ρ ← G ρ G†` for a single-qubit `G`.
fn apply_1q_density(m: &mut CMat, width: usize, target: usize, g: &Mat2) {
    let d = m.rows();
    let b = bit(width, target);
    for c in 0..d {
        for i in 0..d {
            if i & b == 0 {
                let j = i | b;
                let (a0, a1) = (m[(i, c)], m[(j, c)]);
                m[(i, c)] = g[0][0] * a0 + g[0][1] * a1;
                m[(j, c)] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }
    for r in 0..d {
        for i in 0..d {
            if i & b == 0 {
                let j = i | b;
                let (a0, a1) = (m[(r, i)], m[(r, j)]);
                m[(r, i)] = a0 * g[0][0].conj() + a1 * g[0][1].conj();
                m[(r, j)] = a0 * g[1][0].conj() + a1 * g[1][1].conj();
            }
        }
    }
}

fn apply_cnot_density(m: &mut CMat, width: usize, control: usize, target: usize) {
    let d = m.rows();
    let cb = bit(width, control);
    let tb = bit(width, target);
    let perm = |i: usize| if i & cb != 0 { i ^ tb } else { i };
    let src = m.clone();
    for r in 0..d {
        for c in 0..d {
            m[(perm(r), perm(c))] = src[(r, c)];
        }
    }
}

/// A rotation-angle source: gates read successive slots.
///
/// Slot `s` is the `s`-th angle consumed in gate order; `Ansatz::slot_params`
/// maps it back to its parameter index.
pub trait StatePreparation: Sync {
    /// Hilbert-space dimension of the prepared state.
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    /// Parameter index for every angle slot.
    fn slot_params(&self) -> Vec<usize>;
    /// State for explicit per-slot angles.
    fn prepare_slots(&self, angles: &[f64]) -> Result<Vec<C64>>;

    fn expand(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.param_count() {
            return Err(Error::ParamCountMismatch {
                expected: self.param_count(),
                got: alpha.len(),
            });
        }
        Ok(self.slot_params().iter().map(|&p| alpha[p]).collect())
    }

    /// `U(α)|0…0⟩`.
    fn prepare(&self, alpha: &[f64]) -> Result<Vec<C64>> {
        self.prepare_slots(&self.expand(alpha)?)
    }
}

/// Ordered gate list over named angle parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    width: usize,
    gates: Vec<Gate>,
    param_count: usize,
}

impl Ansatz {
    pub fn new(width: usize, gates: Vec<Gate>, param_count: usize) -> Result<Self> {
        if width == 0 || width > 12 {
            return Err(Error::UnsupportedDim(format!("circuit width {width}")));
        }
        for g in &gates {
            let targets = g.targets();
            if targets.iter().any(|&t| t >= width) {
                return Err(Error::DimMismatch(format!(
                    "{g:?} outside a {width}-qubit circuit"
                )));
            }
            if targets.len() == 2 && targets[0] == targets[1] {
                return Err(Error::DimMismatch(format!("{g:?} repeats a qubit")));
            }
            if let Some(&p) = g.param_ids().iter().find(|&&p| p >= param_count) {
                return Err(Error::ParamCountMismatch {
                    expected: param_count,
                    got: p + 1,
                });
            }
        }
        Ok(Self {
            width,
            gates,
            param_count,
        })
    }

    /// `Ry(α₁) ⊗ Ry(α₂)`, then `Rz(α₃)` on qubit 0, then `CNOT(0 → 1)`.
    pub fn fig2() -> Self {
        Self::new(
            2,
            vec![
                Gate::Ry {
                    target: 0,
                    param: 0,
                },
                Gate::Ry {
                    target: 1,
                    param: 1,
                },
                Gate::Rz {
                    target: 0,
                    param: 2,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
            3,
        )
        .expect("static circuit")
    }

    /// `depth` blocks of [U3 on every qubit, CNOT ring `i → i+1 mod width`],
    /// followed by a final U3 layer.
    pub fn layered(width: usize, depth: usize) -> Result<Self> {
        if width < 2 || depth < 1 {
            return Err(Error::ParamOutOfRange(format!(
                "layered ansatz needs width >= 2 and depth >= 1, got ({width}, {depth})"
            )));
        }
        let mut gates = Vec::new();
        let mut next = 0;
        let mut u3_layer = |gates: &mut Vec<Gate>| {
            for q in 0..width {
                gates.push(Gate::U3 {
                    target: q,
                    params: [next, next + 1, next + 2],
                });
                next += 3;
            }
        };
        for _ in 0..depth {
            u3_layer(&mut gates);
            for q in 0..width {
                gates.push(Gate::Cnot {
                    control: q,
                    target: (q + 1) % width,
                });
            }
        }
        u3_layer(&mut gates);
        Self::new(width, gates, 3 * width * (depth + 1))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn run_vec(&self, v: &mut [C64], angles: &[f64]) {
        let mut slot = 0;
        let mut take = || {
            slot += 1;
            angles[slot - 1]
        };
        for g in &self.gates {
            match g {
                Gate::Ry { target, .. } => apply_1q_vec(v, self.width, *target, &ry(take())),
                Gate::Rz { target, .. } => apply_1q_vec(v, self.width, *target, &rz(take())),
                Gate::U3 { target, .. } => {
                    let (theta, phi, lam) = (take(), take(), take());
                    apply_1q_vec(v, self.width, *target, &rz(lam));
                    apply_1q_vec(v, self.width, *target, &ry(theta));
                    apply_1q_vec(v, self.width, *target, &rz(phi));
                }
                Gate::Cnot { control, target } => apply_cnot_vec(v, self.width, *control, *target),
            }
        }
    }

    fn check_slots(&self, angles: &[f64]) -> Result<()> {
        let slots = self.slot_count();
        if angles.len() != slots {
            return Err(Error::ParamCountMismatch {
                expected: slots,
                got: angles.len(),
            });
        }
        Ok(())
    }

    fn slot_count(&self) -> usize {
        self.gates.iter().map(|g| g.param_ids().len()).sum()
    }

    /// Dense `U(α)`.
    pub fn unitary(&self, alpha: &[f64]) -> Result<CMat> {
        let angles = self.expand(alpha)?;
        let d = 1 << self.width;
        let mut u = CMat::zeros(d, d);
        for c in 0..d {
            let mut v = vec![ZERO; d];
            v[c] = ONE;
            self.run_vec(&mut v, &angles);
            for (r, z) in v.into_iter().enumerate() {
                u[(r, c)] = z;
            }
        }
        Ok(u)
    }

    /// `U ρ U†` for per-slot angles.
    pub fn evolve_density_slots(&self, rho: &CMat, angles: &[f64]) -> Result<CMat> {
        self.check_slots(angles)?;
        self.check_dim(rho)?;
        let mut m = rho.clone();
        let mut slot = 0;
        let mut take = || {
            slot += 1;
            angles[slot - 1]
        };
        for g in &self.gates {
            match g {
                Gate::Ry { target, .. } => {
                    apply_1q_density(&mut m, self.width, *target, &ry(take()))
                }
                Gate::Rz { target, .. } => {
                    apply_1q_density(&mut m, self.width, *target, &rz(take()))
                }
                Gate::U3 { target, .. } => {
                    let (theta, phi, lam) = (take(), take(), take());
                    apply_1q_density(&mut m, self.width, *target, &rz(lam));
                    apply_1q_density(&mut m, self.width, *target, &ry(theta));
                    apply_1q_density(&mut m, self.width, *target, &rz(phi));
                }
                Gate::Cnot { control, target } => {
                    apply_cnot_density(&mut m, self.width, *control, *target)
                }
            }
        }
        Ok(m)
    }

    pub fn evolve_density(&self, rho: &CMat, alpha: &[f64]) -> Result<CMat> {
        self.evolve_density_slots(rho, &self.expand(alpha)?)
    }

    /// `U† ρ U`: the gates' adjoints in reverse order.
    pub fn evolve_density_adjoint(&self, rho: &CMat, alpha: &[f64]) -> Result<CMat> {
        let angles = self.expand(alpha)?;
        self.check_dim(rho)?;
        let mut m = rho.clone();
        let mut slot = angles.len();
        let mut take_back = || {
            slot -= 1;
            angles[slot]
        };
        for g in self.gates.iter().rev() {
            match g {
                Gate::Ry { target, .. } => {
                    apply_1q_density(&mut m, self.width, *target, &adjoint2(&ry(take_back())))
                }
                Gate::Rz { target, .. } => {
                    apply_1q_density(&mut m, self.width, *target, &adjoint2(&rz(take_back())))
                }
                Gate::U3 { target, .. } => {
                    let (lam, phi, theta) = (take_back(), take_back(), take_back());
                    apply_1q_density(&mut m, self.width, *target, &adjoint2(&rz(phi)));
                    apply_1q_density(&mut m, self.width, *target, &adjoint2(&ry(theta)));
                    apply_1q_density(&mut m, self.width, *target, &adjoint2(&rz(lam)));
                }
                Gate::Cnot { control, target } => {
                    apply_cnot_density(&mut m, self.width, *control, *target)
                }
            }
        }
        Ok(m)
    }

    fn check_dim(&self, rho: &CMat) -> Result<()> {
        let d = 1 << self.width;
        if rho.rows() != d || !rho.is_square() {
            return Err(Error::DimMismatch(format!(
                "{}-qubit circuit on a {}x{} operator",
                self.width,
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(())
    }
}

impl StatePreparation for Ansatz {
    fn dim(&self) -> usize {
        1 << self.width
    }

    fn param_count(&self) -> usize {
        self.param_count
    }

    fn slot_params(&self) -> Vec<usize> {
        self.gates.iter().flat_map(|g| g.param_ids()).collect()
    }

    fn prepare_slots(&self, angles: &[f64]) -> Result<Vec<C64>> {
        self.check_slots(angles)?;
        let mut v = vec![ZERO; 1 << self.width];
        v[0] = ONE;
        self.run_vec(&mut v, angles);
        Ok(v)
    }
}

/// Direct parameterization of a pure state in dimension `d` by `2(d-1)`
/// angles: hyperspherical half-angle magnitudes followed by relative phases.
///
/// Every angle enters the amplitudes through `cos(θ/2)`, `sin(θ/2)` or
/// `e^{iφ}`, so expectation values have single-frequency dependence on each
/// angle and the ±π/2 shift rule is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersphericalState {
    dim: usize,
}

impl HypersphericalState {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDim(format!("state dimension {dim}")));
        }
        Ok(Self { dim })
    }
}

impl StatePreparation for HypersphericalState {
    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        2 * (self.dim - 1)
    }

    fn slot_params(&self) -> Vec<usize> {
        (0..self.param_count()).collect()
    }

    fn prepare_slots(&self, angles: &[f64]) -> Result<Vec<C64>> {
        let m = self.dim - 1;
        if angles.len() != 2 * m {
            return Err(Error::ParamCountMismatch {
                expected: 2 * m,
                got: angles.len(),
            });
        }
        let (thetas, phases) = angles.split_at(m);
        let mut v = Vec::with_capacity(self.dim);
        let mut tail = 1.0;
        for k in 0..self.dim {
            let mag = if k < m {
                let (s, c) = (thetas[k] / 2.0).sin_cos();
                let here = tail * c;
                tail *= s;
                here
            } else {
                tail
            };
            let phase = if k == 0 {
                ONE
            } else {
                C64::from_polar(1.0, phases[k - 1])
            };
            v.push(phase * mag);
        }
        Ok(v)
    }
}

/// Exact evaluation or a finite number of shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ShotPolicy {
    /// 0 means exact expectation values.
    pub shots: u32,
    pub seed: u64,
}

impl ShotPolicy {
    pub fn exact() -> Self {
        Self { shots: 0, seed: 0 }
    }

    pub fn with_shots(shots: u32, seed: u64) -> Self {
        Self { shots, seed }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Relative frequency of an outcome with probability `p` over
    /// `self.shots` shots; `key` addresses an independent noise stream.
    pub fn frequency(&self, p: f64, key: u64) -> f64 {
        if self.is_exact() {
            return p;
        }
        let p = p.clamp(0.0, 1.0);
        let mut rng = rng::stream(self.seed, &[key]);
        let k = Binomial::new(self.shots as u64, p)
            .expect("probability clamped to [0, 1]")
            .sample(&mut rng);
        k as f64 / self.shots as f64
    }
}

/// `⟨ψ|σ|ψ⟩` for a channel output `σ`, estimated per `policy`.
pub fn overlap_with_output(psi: &[C64], output: &CMat, policy: &ShotPolicy, key: u64) -> f64 {
    policy.frequency(output.expectation(psi).re, key)
}

/// Probability of reading `0…0` after `U(α)†` acts on `𝒪(ρ)`; equivalently
/// `⟨ψ(α)|𝒪(ρ)|ψ(α)⟩`.
pub fn overlap_fig1(
    prep: &dyn StatePreparation,
    alpha: &[f64],
    term: &ChannelTerm,
    rho: &CMat,
    policy: &ShotPolicy,
    key: u64,
) -> Result<f64> {
    if rho.rows() != prep.dim() {
        return Err(Error::DimMismatch(format!(
            "{}-dimensional test state against a {}x{} input",
            prep.dim(),
            rho.rows(),
            rho.cols()
        )));
    }
    let psi = prep.prepare(alpha)?;
    let output = term.apply(rho)?;
    Ok(overlap_with_output(&psi, &output, policy, key))
}

/// Swap-test estimate of `tr[σρ]`: the ancilla reads 0 with probability
/// `(1 + tr[σρ]) / 2`.
pub fn overlap_swap(sigma: &CMat, rho: &CMat, policy: &ShotPolicy, key: u64) -> Result<f64> {
    if sigma.rows() != rho.rows() || !sigma.is_square() || !rho.is_square() {
        return Err(Error::DimMismatch(format!(
            "swap test between {}x{} and {}x{}",
            sigma.rows(),
            sigma.cols(),
            rho.rows(),
            rho.cols()
        )));
    }
    let overlap = (sigma * rho).trace().re;
    if policy.is_exact() {
        return Ok(overlap);
    }
    let p0 = (1.0 + overlap) / 2.0;
    Ok(2.0 * policy.frequency(p0, key) - 1.0)
}

/// Probability that the trailing ancilla reads 0 after `U(α)` acts on
/// `ρ ⊗ |0⟩⟨0|`.
pub fn vlne_ancilla_prob(
    ansatz: &Ansatz,
    alpha: &[f64],
    rho: &CMat,
    policy: &ShotPolicy,
    key: u64,
) -> Result<f64> {
    let angles = ansatz.expand(alpha)?;
    ancilla_prob_slots(ansatz, &angles, rho, policy, key)
}

pub(crate) fn ancilla_prob_slots(
    ansatz: &Ansatz,
    angles: &[f64],
    rho: &CMat,
    policy: &ShotPolicy,
    key: u64,
) -> Result<f64> {
    if 2 * rho.rows() != ansatz.dim() {
        return Err(Error::DimMismatch(format!(
            "{}-qubit circuit cannot hold a {}-dimensional state plus one ancilla",
            ansatz.width(),
            rho.rows()
        )));
    }
    let joint = kron(rho, &ground(2));
    let out = ansatz.evolve_density_slots(&joint, angles)?;
    // ancilla is the least significant bit
    let p0: f64 = (0..out.rows()).step_by(2).map(|i| out[(i, i)].re).sum();
    Ok(policy.frequency(p0, key))
}
