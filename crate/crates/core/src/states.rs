//! Bipartite density matrices: the state families used in the experiments,
//! random generators, and a JSON file format.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, kron, partial_trace, CMat, Keep, C64, HERMITIAN_TOL, ONE, ZERO,
};

const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

/// A trace-one positive semidefinite operator on `A ⊗ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
    dim_a: usize,
    dim_b: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMat, dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 || mat.rows() != dim_a * dim_b || !mat.is_square() {
            return Err(Error::DimMismatch(format!(
                "{}x{} matrix declared as {dim_a}x{dim_b} bipartite",
                mat.rows(),
                mat.cols()
            )));
        }
        let dev = mat.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let lmin = eig_hermitian(&mat)?.min();
        if lmin < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(Self { mat, dim_a, dim_b })
    }

    /// Skips validation; callers guarantee the invariants.
    fn trusted(mat: CMat, dim_a: usize, dim_b: usize) -> Self {
        debug_assert_eq!(mat.rows(), dim_a * dim_b);
        Self { mat, dim_a, dim_b }
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Same matrix under a different bipartition.
    pub fn with_dims(self, dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a * dim_b != self.dim() {
            return Err(Error::DimMismatch(format!(
                "cannot split dimension {} as {dim_a}x{dim_b}",
                self.dim()
            )));
        }
        Ok(Self {
            mat: self.mat,
            dim_a,
            dim_b,
        })
    }

    pub fn marginal(&self, keep: Keep) -> CMat {
        partial_trace(&self.mat, self.dim_a, self.dim_b, keep).expect("dims validated")
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::trusted(kron(&self.mat, &other.mat), self.dim(), other.dim())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        StateFile::from_json(&text)?.into_state()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&StateFile::from_state(self))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk state: row-major `[re, im]` pairs plus the bipartition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    #[serde(rename = "dA")]
    pub dim_a: usize,
    #[serde(rename = "dB")]
    pub dim_b: usize,
    pub entries: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self {
            dim_a: rho.dim_a,
            dim_b: rho.dim_b,
            entries: rho.mat.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        let d = self.dim_a * self.dim_b;
        let data = self
            .entries
            .iter()
            .map(|&[re, im]| C64::new(re, im))
            .collect();
        DensityMatrix::new(CMat::new(d, d, data)?, self.dim_a, self.dim_b)
    }
}

fn ket_mes(d: usize) -> Vec<C64> {
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell() -> DensityMatrix {
    mes(1)
}

/// Maximally entangled state of `n` qubits per side, `d = 2^n`.
pub fn mes(n: usize) -> DensityMatrix {
    assert!(n >= 1, "mes needs at least one qubit per side");
    mes_qudit(1 << n)
}

/// Maximally entangled state `Σ|ii⟩/√d` for a `d ⊗ d` system.
pub fn mes_qudit(d: usize) -> DensityMatrix {
    assert!(d >= 2);
    DensityMatrix::trusted(CMat::outer(&ket_mes(d)), d, d)
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParamOutOfRange(format!(
            "{name} = {x} not in [0, 1]"
        )));
    }
    Ok(())
}

/// `p Φ + (1 - p) I / d²` with `d = 2^n`.
pub fn isotropic(n: usize, p: f64) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::ParamOutOfRange("isotropic needs n >= 1".into()));
    }
    isotropic_qudit(1 << n, p)
}

pub fn isotropic_qudit(d: usize, p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    let dd = d * d;
    let mut mat = CMat::outer(&ket_mes(d)).scale_real(p);
    mat.add_scaled(&CMat::identity(dd), (1.0 - p) / dd as f64);
    Ok(DensityMatrix::trusted(mat, d, d))
}

/// The 4×4 Breuer-family matrix exactly as printed, read as qubit ⊗ qubit.
pub fn breuer_literal(lambda: f64) -> Result<DensityMatrix> {
    check_unit_interval("lambda", lambda)?;
    let outer = (1.0 - lambda) / 3.0;
    let diag = (1.0 + 2.0 * lambda) / 6.0;
    let off = (1.0 - 4.0 * lambda) / 6.0;
    let mat = CMat::from_real_rows(&[
        &[outer, 0.0, 0.0, 0.0],
        &[0.0, diag, off, 0.0],
        &[0.0, off, diag, 0.0],
        &[0.0, 0.0, 0.0, outer],
    ]);
    Ok(DensityMatrix::trusted(mat, 2, 2))
}

fn ginibre(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).symmetrized()
}

/// Full-rank random density matrix `GG†/tr(GG†)`, as a `d ⊗ 1` state.
pub fn random_density(d: usize, seed: u64) -> DensityMatrix {
    assert!(d >= 2, "random_density needs d >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DensityMatrix::trusted(ginibre(d, &mut rng), d, 1)
}

/// Random (generically entangled) state on `A ⊗ B`.
pub fn random_bipartite(dim_a: usize, dim_b: usize, seed: u64) -> DensityMatrix {
    let rho = random_density(dim_a * dim_b, seed);
    DensityMatrix::trusted(rho.mat, dim_a, dim_b)
}

/// `ρ_A ⊗ ρ_B` with independent random factors; separable by construction.
pub fn random_product(dim_a: usize, dim_b: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = ginibre(dim_a, &mut rng);
    let b = ginibre(dim_b, &mut rng);
    DensityMatrix::trusted(kron(&a, &b), dim_a, dim_b)
}

/// Haar-ish random pure state vector (normalized complex Gaussian).
pub fn random_ket(d: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..d)
        .map(|_| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// `|0…0⟩⟨0…0|` on `d` dimensions.
pub fn ground(d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(0, 0)] = ONE;
    m
}
