//! Pauli strings with exact phase tracking, and qutrit Weyl operators.
//!
//! A string is stored as its quaternary digits `q_k ∈ {0,1,2,3}` meaning
//! `I, X, Y, Z`; site 0 is the leftmost tensor factor.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{kron_all, CMat, C64, I, ONE, ZERO};

/// Power of `i` produced by `σ_a σ_b = i^k σ_{a⊕b}`.
const PRODUCT_PHASE: [[u8; 4]; 4] = [
    [0, 0, 0, 0],
    [0, 0, 1, 3], // XY = iZ, XZ = -iY
    [0, 3, 0, 1], // YX = -iZ, YZ = iX
    [0, 1, 3, 0], // ZX = iY, ZY = -iX
];

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// `i^k` for `k` taken mod 4.
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Single-site Pauli matrix `σ_q`.
pub fn sigma(q: u8) -> CMat {
    match q {
        0 => CMat::identity(2),
        1 => CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        2 => CMat::new(2, 2, vec![ZERO, -I, I, ZERO]).expect("2x2"),
        3 => CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        _ => panic!("Pauli digit {q} out of range"),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    sites: Vec<u8>,
}

impl PauliString {
    pub fn new(sites: Vec<u8>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidLabel(String::new()));
        }
        if let Some(&bad) = sites.iter().find(|&&q| q > 3) {
            return Err(Error::InvalidLabel(format!("digit {bad}")));
        }
        Ok(Self { sites })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Self { sites: vec![0; n] }
    }

    /// The string whose quaternary value (site 0 most significant) is `index`.
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut sites = vec![0u8; n];
        for q in sites.iter_mut().rev() {
            *q = (index % 4) as u8;
            index /= 4;
        }
        Self { sites }
    }

    /// All `4^n` strings in quaternary order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..4usize.pow(n as u32)).map(move |k| Self::from_index(n, k))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    pub fn index(&self) -> usize {
        self.sites.iter().fold(0, |acc, &q| acc * 4 + q as usize)
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().all(|&q| q == 0)
    }

    pub fn count_y(&self) -> usize {
        self.sites.iter().filter(|&&q| q == 2).count()
    }

    /// Bit mask of sites that flip the computational basis (X or Y).
    pub fn x_mask(&self) -> usize {
        self.mask(|q| q == 1 || q == 2)
    }

    /// Bit mask of sites that contribute a sign (Z or Y).
    pub fn z_mask(&self) -> usize {
        self.mask(|q| q == 2 || q == 3)
    }

    fn mask(&self, pick: impl Fn(u8) -> bool) -> usize {
        let n = self.sites.len();
        self.sites
            .iter()
            .enumerate()
            .filter(|(_, &q)| pick(q))
            .fold(0, |m, (k, _)| m | (1 << (n - 1 - k)))
    }

    /// Dense `2^n × 2^n` realization.
    pub fn matrix(&self) -> CMat {
        let factors: Vec<CMat> = self.sites.iter().map(|&q| sigma(q)).collect();
        kron_all(&factors)
    }

    /// Product with phase: `self · other = i^k P`.
    pub fn mul(&self, other: &PauliString) -> Result<PhasedPauli> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let mut phase = 0u8;
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(&a, &b)| {
                phase = (phase + PRODUCT_PHASE[a as usize][b as usize]) % 4;
                a ^ b
            })
            .collect();
        Ok(PhasedPauli {
            phase,
            string: PauliString { sites },
        })
    }

    /// `P ρ P†` on a `2^n`-dimensional operator.
    pub fn conjugate(&self, rho: &CMat) -> Result<CMat> {
        if rho.rows() != 1 << self.len() || !rho.is_square() {
            return Err(Error::DimMismatch(format!(
                "{}-site Pauli on a {}x{} operator",
                self.len(),
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(self.conjugate_trailing(rho))
    }

    /// `(I ⊗ P) ρ (I ⊗ P)†`, where `P` acts on the last `n` qubits of `ρ`.
    pub fn conjugate_on_b(&self, rho: &CMat) -> Result<CMat> {
        let db = 1usize << self.len();
        if !rho.is_square() || !rho.rows().is_multiple_of(db) {
            return Err(Error::DimMismatch(format!(
                "{}-site Pauli cannot act on the tail of a {}x{} operator",
                self.len(),
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(self.conjugate_trailing(rho))
    }

    // P|j⟩ = i^{#Y} (-1)^{|j ∧ z|} |j ⊕ x⟩; the i^{#Y} cancels under conjugation.
    fn conjugate_trailing(&self, rho: &CMat) -> CMat {
        let d = rho.rows();
        let low = (1usize << self.len()) - 1;
        let x = self.x_mask();
        let z = self.z_mask();
        let sign = |j: usize| {
            if (j & low & z).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        let mut out = CMat::zeros(d, d);
        for r in 0..d {
            let sr = sign(r);
            for c in 0..d {
                out[(r ^ x, c ^ x)] = rho[(r, c)] * (sr * sign(c));
            }
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &q in &self.sites {
            write!(f, "{}", LETTERS[q as usize])?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// Accepts letter labels (`"IXYZ"`) or quaternary digits (`"0123"`).
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sites = s
            .trim()
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' | '0' => Ok(0),
                'X' | '1' => Ok(1),
                'Y' | '2' => Ok(2),
                'Z' | '3' => Ok(3),
                _ => Err(Error::InvalidLabel(s.to_string())),
            })
            .collect::<Result<Vec<u8>>>()?;
        if sites.is_empty() {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        Ok(Self { sites })
    }
}

/// `i^phase · P`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PhasedPauli {
    pub phase: u8,
    pub string: PauliString,
}

impl PhasedPauli {
    pub fn new(phase: u8, string: PauliString) -> Self {
        Self {
            phase: phase % 4,
            string,
        }
    }

    pub fn unphased(string: PauliString) -> Self {
        Self { phase: 0, string }
    }

    pub fn phase_factor(&self) -> C64 {
        i_pow(self.phase)
    }

    pub fn mul(&self, other: &PhasedPauli) -> Result<PhasedPauli> {
        let p = self.string.mul(&other.string)?;
        Ok(PhasedPauli::new(
            self.phase + other.phase + p.phase,
            p.string,
        ))
    }

    pub fn matrix(&self) -> CMat {
        self.string.matrix().scale(self.phase_factor())
    }
}

impl fmt::Debug for PhasedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}{}", self.string)
    }
}

/// Generalized Pauli `X^a Z^b` on a qudit; only `d = 3` is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeylOperator {
    pub d: usize,
    /// Power of the boost (cyclic shift) `X`.
    pub a: u32,
    /// Power of the phase operator `Z`.
    pub b: u32,
}

impl WeylOperator {
    pub fn qutrit(a: u32, b: u32) -> Self {
        Self { d: 3, a, b }
    }

    pub fn matrix(&self) -> Result<CMat> {
        if self.d != 3 {
            return Err(Error::UnsupportedDim(format!(
                "Weyl operators are implemented for d = 3, got {}",
                self.d
            )));
        }
        let d = self.d;
        let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
        let a = self.a as usize % d;
        let b = self.b as usize % d;
        // X^a Z^b |j⟩ = ω^{bj} |j + a⟩
        Ok(CMat::from_fn(d, d, |r, c| {
            if r == (c + a) % d {
                omega.powu(((b * c) % d) as u32)
            } else {
                ZERO
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_site_matrices() {
        assert_eq!(p("0").matrix(), CMat::identity(2));
        let y = p("2").matrix();
        assert_eq!(y[(0, 1)], -I);
        assert_eq!(y[(1, 0)], I);
        let xz = p("13").matrix();
        let expected = crate::linalg::kron(&sigma(1), &sigma(3));
        assert_eq!(xz, expected);
    }

    #[test]
    fn labels_interchangeable() {
        assert_eq!(p("IXYZ"), p("0123"));
        assert_eq!(p("ixyz"), p("0123"));
        assert_eq!(p("0123").to_string(), "IXYZ");
        assert!("IXQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn product_examples() {
        let xy = p("X").mul(&p("Y")).unwrap();
        assert_eq!(xy, PhasedPauli::new(1, p("Z")));
        for q in 0..4 {
            let s = PauliString::new(vec![q]).unwrap();
            assert_eq!(s.mul(&s).unwrap(), PhasedPauli::unphased(p("I")));
        }
        let r = p("XY").mul(&p("YY")).unwrap();
        assert_eq!(r, PhasedPauli::new(1, p("ZI")));
        assert!(
            r.matrix()
                .max_abs_diff(&(&p("XY").matrix() * &p("YY").matrix()))
                < 1e-15
        );
        assert!(matches!(
            p("X").mul(&p("XX")),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn product_matches_dense_exhaustively() {
        for n in 1..=2 {
            for a in PauliString::all(n) {
                for b in PauliString::all(n) {
                    let dense = &a.matrix() * &b.matrix();
                    let sym = a.mul(&b).unwrap().matrix();
                    assert_eq!(dense.max_abs_diff(&sym), 0.0, "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn conjugation_examples() {
        let zero = CMat::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let one = CMat::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(p("I").conjugate(&zero).unwrap(), zero);
        assert_eq!(p("X").conjugate(&zero).unwrap(), one);
        let ket0bra1 = CMat::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let expected = CMat::from_real_rows(&[&[0.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(p("Y").conjugate(&ket0bra1).unwrap(), expected);
        assert!(p("XX").conjugate(&zero).is_err());
    }

    #[test]
    fn permutation_conjugation_matches_dense() {
        let rho = CMat::from_fn(8, 8, |r, c| {
            C64::new((r * 8 + c) as f64, (r as f64) - (c as f64) * 0.5)
        });
        for q in PauliString::all(2) {
            let dense = crate::linalg::kron(&CMat::identity(2), &q.matrix());
            let expected = dense.conjugate(&rho);
            assert!(
                q.conjugate_on_b(&rho).unwrap().max_abs_diff(&expected) < 1e-12,
                "{q}"
            );
        }
        for q in PauliString::all(3) {
            let expected = q.matrix().conjugate(&rho);
            assert!(
                q.conjugate(&rho).unwrap().max_abs_diff(&expected) < 1e-12,
                "{q}"
            );
        }
    }

    #[test]
    fn twirl_gives_maximally_mixed() {
        let rho = CMat::from_fn(4, 4, |r, c| {
            let z = C64::new(
                1.0 / (1.0 + r as f64 + c as f64),
                0.1 * (r as f64 - c as f64),
            );
            if r == c {
                C64::new(z.re, 0.0)
            } else {
                z
            }
        });
        let n = 2;
        let mut acc = CMat::zeros(4, 4);
        for q in PauliString::all(n) {
            acc.add_scaled(&q.conjugate(&rho).unwrap(), 0.25);
        }
        // (1/2^n) Σ_q P_q ρ P_q = tr(ρ) I
        let expected = CMat::identity(4).scale(rho.trace());
        assert!(acc.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn weyl_operators() {
        let x = WeylOperator::qutrit(1, 0).matrix().unwrap();
        // |0⟩ → |1⟩ → |2⟩ → |0⟩
        assert_eq!(x[(1, 0)], ONE);
        assert_eq!(x[(2, 1)], ONE);
        assert_eq!(x[(0, 2)], ONE);
        let z = WeylOperator::qutrit(0, 1).matrix().unwrap();
        let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((z[(1, 1)] - omega).norm() < 1e-15);
        assert!((z[(2, 2)] - omega * omega).norm() < 1e-15);
        let x3 = &(&x * &x) * &x;
        assert!(x3.max_abs_diff(&CMat::identity(3)) < 1e-14);
        let z3 = &(&z * &z) * &z;
        assert!(z3.max_abs_diff(&CMat::identity(3)) < 1e-14);
        // ZX = ω XZ
        let zx = &z * &x;
        let xz = (&x * &z).scale(omega);
        assert!(zx.max_abs_diff(&xz) < 1e-14);
        let x2z = WeylOperator::qutrit(2, 1).matrix().unwrap();
        assert!(x2z.max_abs_diff(&(&(&x * &x) * &z)) < 1e-14);
        assert!(matches!(
            WeylOperator { d: 2, a: 1, b: 0 }.matrix(),
            Err(Error::UnsupportedDim(_))
        ));
    }
}
