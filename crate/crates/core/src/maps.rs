//! Positive maps written as real-weighted sums of unitary-conjugation
//! channels `𝒩(·) = Σ r_O U_O (·) U_O†`, acting on the B side of a
//! bipartite state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, CMat, C64, ZERO};
use crate::pauli::{PauliString, PhasedPauli, WeylOperator};
use crate::states::DensityMatrix;

/// Coefficients smaller than this are dropped from a decomposition.
pub const ZERO_COEFF_TOL: f64 = 1e-14;

/// Imaginary residue tolerated when regrouping phased Pauli products.
pub const REAL_COEFF_TOL: f64 = 1e-12;

/// The unitary of one conjugation channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelUnitary {
    Pauli(PhasedPauli),
    /// Explicit matrix, used for the qutrit Weyl terms.
    Dense(CMat),
}

impl ChannelUnitary {
    pub fn dim(&self) -> usize {
        match self {
            Self::Pauli(p) => 1 << p.string.len(),
            Self::Dense(m) => m.rows(),
        }
    }

    pub fn matrix(&self) -> CMat {
        match self {
            Self::Pauli(p) => p.matrix(),
            Self::Dense(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTerm {
    pub coeff: f64,
    pub unitary: ChannelUnitary,
    pub label: String,
}

impl ChannelTerm {
    pub fn pauli(coeff: f64, p: PauliString) -> Self {
        let label = p.to_string();
        Self {
            coeff,
            unitary: ChannelUnitary::Pauli(PhasedPauli::unphased(p)),
            label,
        }
    }

    /// `(I_A ⊗ U) ρ (I_A ⊗ U)†` with `U` on the trailing factor of `ρ`.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        match &self.unitary {
            ChannelUnitary::Pauli(p) => p.string.conjugate_on_b(rho),
            ChannelUnitary::Dense(u) => conjugate_on_b_dense(u, rho),
        }
    }
}

/// Block-wise `U X_ij U†` for every `A`-block `X_ij` of `ρ`.
pub fn conjugate_on_b_dense(u: &CMat, rho: &CMat) -> Result<CMat> {
    let db = u.rows();
    let d = rho.rows();
    if !rho.is_square() || !d.is_multiple_of(db) {
        return Err(Error::DimMismatch(format!(
            "{db}-dimensional unitary cannot act on the tail of a {d}x{} operator",
            rho.cols()
        )));
    }
    let da = d / db;
    let ud = u.adjoint();
    let mut out = CMat::zeros(d, d);
    for i in 0..da {
        for j in 0..da {
            let block = CMat::from_fn(db, db, |k, l| rho[(i * db + k, j * db + l)]);
            let conj = &(u * &block) * &ud;
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = conj[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// The built-in maps, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Ppt,
    Reduction,
    ReductionTp,
    Enhanced,
    Choi,
}

impl MapKind {
    pub const ALL: [MapKind; 5] = [
        MapKind::Ppt,
        MapKind::Reduction,
        MapKind::ReductionTp,
        MapKind::Enhanced,
        MapKind::Choi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ppt => "ppt",
            Self::Reduction => "reduction",
            Self::ReductionTp => "reduction-tp",
            Self::Enhanced => "enhanced",
            Self::Choi => "choi",
        }
    }

    /// Decomposition acting on `n` B-side qubits (ignored for the qutrit Choi map).
    pub fn decomposition(self, n: usize) -> Result<QuasiDecomposition> {
        match self {
            Self::Ppt => transpose_decomposition(n),
            Self::Reduction => reduction_decomposition(n),
            Self::ReductionTp => reduction_tp_decomposition(n),
            Self::Enhanced => enhanced_decomposition(n),
            Self::Choi => Ok(choi_decomposition()),
        }
    }

    /// Decomposition sized for the B side of `rho`.
    pub fn decomposition_for(self, rho: &DensityMatrix) -> Result<QuasiDecomposition> {
        match self {
            Self::Choi => {
                if rho.dim_b() != 3 {
                    return Err(Error::DimMismatch(format!(
                        "the Choi map acts on a qutrit, B has dimension {}",
                        rho.dim_b()
                    )));
                }
                Ok(choi_decomposition())
            }
            _ => self.decomposition(qubits_of(rho.dim_b())?),
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppt" | "transpose" => Ok(Self::Ppt),
            "reduction" => Ok(Self::Reduction),
            "reduction-tp" => Ok(Self::ReductionTp),
            "enhanced" => Ok(Self::Enhanced),
            "choi" => Ok(Self::Choi),
            other => Err(Error::Config(format!("unknown map {other:?}"))),
        }
    }
}

/// Number of qubits spanning dimension `d`, which must be a power of two.
pub fn qubits_of(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::UnsupportedDim(format!(
            "dimension {d} is not a positive power of two"
        )));
    }
    Ok(d.trailing_zeros() as usize)
}

/// `𝒩 = Σ r_O 𝒪` over unitary-conjugation channels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDecomposition {
    terms: Vec<ChannelTerm>,
    dim_b: usize,
    label: String,
}

impl QuasiDecomposition {
    /// Builds a decomposition, merging repeated Pauli channels and dropping
    /// zero coefficients.
    pub fn new(label: impl Into<String>, dim_b: usize, terms: Vec<ChannelTerm>) -> Result<Self> {
        let mut merged: Vec<ChannelTerm> = Vec::with_capacity(terms.len());
        let mut pauli_slot: BTreeMap<PauliString, usize> = BTreeMap::new();
        for term in terms {
            if !term.coeff.is_finite() {
                return Err(Error::InvalidState(format!(
                    "coefficient {} on {}",
                    term.coeff, term.label
                )));
            }
            if term.unitary.dim() != dim_b {
                return Err(Error::DimMismatch(format!(
                    "term {} has dimension {}, map acts on {dim_b}",
                    term.label,
                    term.unitary.dim()
                )));
            }
            if let ChannelUnitary::Pauli(p) = &term.unitary {
                if let Some(&slot) = pauli_slot.get(&p.string) {
                    merged[slot].coeff += term.coeff;
                    continue;
                }
                pauli_slot.insert(p.string.clone(), merged.len());
            }
            merged.push(term);
        }
        merged.retain(|t| t.coeff.abs() >= ZERO_COEFF_TOL);
        Ok(Self {
            terms: merged,
            dim_b,
            label: label.into(),
        })
    }

    pub fn terms(&self) -> &[ChannelTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Coefficient of a Pauli channel, zero if absent.
    pub fn pauli_coeff(&self, p: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|t| matches!(&t.unitary, ChannelUnitary::Pauli(q) if &q.string == p))
            .map_or(0.0, |t| t.coeff)
    }

    /// `Σ r_O`; equals the trace scaling of the map.
    pub fn coeff_sum(&self) -> f64 {
        compensated_sum(self.terms.iter().map(|t| t.coeff))
    }

    /// Sampling cost `γ = Σ |r_O|`.
    pub fn gamma(&self) -> f64 {
        compensated_sum(self.terms.iter().map(|t| t.coeff.abs()))
    }

    /// `p_O = |r_O| / γ`, in term order.
    pub fn sampling_dist(&self) -> Result<Vec<f64>> {
        let gamma = self.gamma();
        if gamma <= 0.0 {
            return Err(Error::ZeroMap);
        }
        Ok(self.terms.iter().map(|t| t.coeff.abs() / gamma).collect())
    }

    fn check_operand(&self, rho: &CMat) -> Result<()> {
        if !rho.is_square() || !rho.rows().is_multiple_of(self.dim_b) {
            return Err(Error::DimMismatch(format!(
                "map on a {}-dimensional B side applied to a {}x{} operator",
                self.dim_b,
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(())
    }

    /// `𝒩_B(ρ)` for an arbitrary operator whose trailing factor is B.
    pub fn apply_operator(&self, rho: &CMat) -> Result<CMat> {
        self.check_operand(rho)?;
        let mut out = CMat::zeros(rho.rows(), rho.cols());
        for term in &self.terms {
            out.add_scaled(&term.apply(rho)?, term.coeff);
        }
        Ok(out)
    }

    /// `σ_AB = Σ r_O 𝒪_B(ρ_AB)`.
    pub fn apply_map(&self, rho: &DensityMatrix) -> Result<CMat> {
        if rho.dim_b() != self.dim_b {
            return Err(Error::DimMismatch(format!(
                "map acts on dimension {}, state has dB = {}",
                self.dim_b,
                rho.dim_b()
            )));
        }
        self.apply_operator(rho.mat())
    }

    /// Channel outputs `𝒪(ρ)` for every term, in term order.
    pub fn term_outputs(&self, rho: &DensityMatrix) -> Result<Vec<CMat>> {
        if rho.dim_b() != self.dim_b {
            return Err(Error::DimMismatch(format!(
                "map acts on dimension {}, state has dB = {}",
                self.dim_b,
                rho.dim_b()
            )));
        }
        self.terms.iter().map(|t| t.apply(rho.mat())).collect()
    }
}

/// Sign `(-1)^{#Y(q)} / 2^n` of the qubit transpose decomposition.
fn transpose_coeff(q: &PauliString) -> f64 {
    let n = q.len() as i32;
    let sign = if q.count_y().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    sign / 2f64.powi(n)
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::UnsupportedDim(
            "maps need at least one B qubit".into(),
        ));
    }
    if n > 8 {
        return Err(Error::UnsupportedDim(format!(
            "{n} B qubits is beyond desk scale"
        )));
    }
    Ok(())
}

/// Transpose on `n` qubits: `T = ⊗_k (ρ + XρX - YρY + ZρZ)/2`.
pub fn transpose_decomposition(n: usize) -> Result<QuasiDecomposition> {
    check_qubits(n)?;
    let terms = PauliString::all(n)
        .map(|q| ChannelTerm::pauli(transpose_coeff(&q), q))
        .collect();
    QuasiDecomposition::new("ppt", 1 << n, terms)
}

fn reduction_terms(n: usize, scale: f64) -> Vec<ChannelTerm> {
    let d = (1u64 << n) as f64;
    PauliString::all(n)
        .map(|q| {
            let coeff = if q.is_identity() {
                (1.0 - d) / d
            } else {
                1.0 / d
            };
            ChannelTerm::pauli(coeff * scale, q)
        })
        .collect()
}

/// Reduction map `tr[X] I - X` through the Pauli twirl.
pub fn reduction_decomposition(n: usize) -> Result<QuasiDecomposition> {
    check_qubits(n)?;
    QuasiDecomposition::new("reduction", 1 << n, reduction_terms(n, 1.0))
}

/// Reduction map rescaled by `1/(2^n - 1)` so that it is trace preserving.
///
/// Its sampling cost is `(2^n + 2)/2^n`; a formula of `1 + 1/2^n` is sometimes
/// quoted for this map, but the coefficients below sum in magnitude to the
/// former.
pub fn reduction_tp_decomposition(n: usize) -> Result<QuasiDecomposition> {
    check_qubits(n)?;
    let d = (1u64 << n) as f64;
    QuasiDecomposition::new("reduction-tp", 1 << n, reduction_terms(n, 1.0 / (d - 1.0)))
}

/// `U_a = X ⊗ … ⊗ X ⊗ iY`, the antisymmetric unitary `antidiag(1,-1,…,1,-1)`.
pub fn antisymmetric_unitary(n: usize) -> PhasedPauli {
    let mut sites = vec![1u8; n];
    sites[n - 1] = 2;
    PhasedPauli::new(1, PauliString::new(sites).expect("valid digits"))
}

/// Enhanced reduction map `ℛ(ρ) - U_a T(ρ) U_a†`, regrouped into Pauli channels.
pub fn enhanced_decomposition(n: usize) -> Result<QuasiDecomposition> {
    check_qubits(n)?;
    let ua = antisymmetric_unitary(n);
    let mut coeffs: BTreeMap<PauliString, C64> = BTreeMap::new();
    for term in reduction_terms(n, 1.0) {
        if let ChannelUnitary::Pauli(p) = term.unitary {
            *coeffs.entry(p.string).or_insert(ZERO) += term.coeff;
        }
    }
    for q in PauliString::all(n) {
        // U_a P_q = i^k P_q', so U_a P_q ρ (U_a P_q)† = |i^k|² P_q' ρ P_q'
        let prod = ua.mul(&PhasedPauli::unphased(q.clone()))?;
        let weight = prod.phase_factor() * prod.phase_factor().conj();
        *coeffs.entry(prod.string).or_insert(ZERO) -= weight * transpose_coeff(&q);
    }
    let mut terms = Vec::with_capacity(coeffs.len());
    for (p, c) in coeffs {
        if c.im.abs() > REAL_COEFF_TOL {
            return Err(Error::ComplexCoefficient {
                label: p.to_string(),
                imag: c.im,
            });
        }
        terms.push(ChannelTerm::pauli(c.re, p));
    }
    QuasiDecomposition::new("enhanced", 1 << n, terms)
}

/// The qutrit Choi map through Weyl conjugations:
/// `(X²Z + X²Z² + X²)/3 + 2(Z + Z²)/3 - I/3`, each as `W(·)W†`.
pub fn choi_decomposition() -> QuasiDecomposition {
    let table: [(u32, u32, f64, &str); 6] = [
        (2, 1, 1.0 / 3.0, "X2Z"),
        (2, 2, 1.0 / 3.0, "X2Z2"),
        (2, 0, 1.0 / 3.0, "X2"),
        (0, 1, 2.0 / 3.0, "Z"),
        (0, 2, 2.0 / 3.0, "Z2"),
        (0, 0, -1.0 / 3.0, "I"),
    ];
    let terms = table
        .iter()
        .map(|&(a, b, coeff, label)| ChannelTerm {
            coeff,
            unitary: ChannelUnitary::Dense(
                WeylOperator::qutrit(a, b)
                    .matrix()
                    .expect("d = 3 is supported"),
            ),
            label: label.to_string(),
        })
        .collect();
    QuasiDecomposition::new("choi", 3, terms).expect("qutrit terms are consistent")
}

/// Matrix-level definitions of the built-in maps, independent of any
/// channel decomposition.
pub mod direct {
    use crate::error::Result;
    use crate::linalg::{kron, partial_trace, partial_transpose, CMat, Keep};

    use super::conjugate_on_b_dense;

    /// `ρ^{T_B}`.
    pub fn transpose_b(rho: &CMat, dim_b: usize) -> Result<CMat> {
        partial_transpose(rho, rho.rows() / dim_b, dim_b)
    }

    /// `ρ_A ⊗ I_B - ρ`.
    pub fn reduction_b(rho: &CMat, dim_b: usize) -> Result<CMat> {
        let da = rho.rows() / dim_b;
        let ra = partial_trace(rho, da, dim_b, Keep::A)?;
        Ok(&kron(&ra, &CMat::identity(dim_b)) - rho)
    }

    /// `antidiag(1, -1, …, 1, -1)` on `d` dimensions.
    pub fn antidiag_unitary(d: usize) -> CMat {
        let mut u = CMat::zeros(d, d);
        for r in 0..d {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            u[(r, d - 1 - r)] = crate::linalg::C64::new(sign, 0.0);
        }
        u
    }

    /// `ℛ(ρ) - U_a ρ^{T_B} U_a†`.
    pub fn enhanced_b(rho: &CMat, dim_b: usize) -> Result<CMat> {
        let red = reduction_b(rho, dim_b)?;
        let twisted = conjugate_on_b_dense(&antidiag_unitary(dim_b), &transpose_b(rho, dim_b)?)?;
        Ok(&red - &twisted)
    }

    /// The Choi map on a single 3×3 matrix, entry by entry.
    pub fn choi_single(m: &CMat) -> CMat {
        let mut out = CMat::zeros(3, 3);
        for r in 0..3 {
            for c in 0..3 {
                out[(r, c)] = if r == c {
                    m[(r, r)] + m[((r + 1) % 3, (r + 1) % 3)]
                } else {
                    -m[(r, c)]
                };
            }
        }
        out
    }

    /// Choi map applied block-wise to the qutrit B factor.
    pub fn choi_b(rho: &CMat) -> Result<CMat> {
        let d = rho.rows();
        let da = d / 3;
        let mut out = CMat::zeros(d, d);
        for i in 0..da {
            for j in 0..da {
                let block = CMat::from_fn(3, 3, |k, l| rho[(i * 3 + k, j * 3 + l)]);
                let mapped = choi_single(&block);
                for k in 0..3 {
                    for l in 0..3 {
                        out[(i * 3 + k, j * 3 + l)] = mapped[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }
}
