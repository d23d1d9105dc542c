//! Exact reference values by dense linear algebra.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, partial_transpose, trace_norm, CMat};
use crate::maps::QuasiDecomposition;
use crate::rng;
use crate::states::{breuer_literal, isotropic, random_bipartite, DensityMatrix};

/// Values with magnitude below this count as zero when checking signs.
pub const SIGN_TOL: f64 = 1e-12;
/// Width of the final bisection bracket.
pub const BISECTION_TOL: f64 = 1e-12;

/// `λ_min` of the map output.
pub fn min_eig_exact(decomp: &QuasiDecomposition, rho: &DensityMatrix) -> Result<f64> {
    min_eigenvalue(&decomp.apply_map(rho)?)
}

/// `log₂ ‖ρ^{T_B}‖₁`.
pub fn log_negativity_exact(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho.mat(), rho.dim_a(), rho.dim_b())?;
    // the trace norm of a partial transpose is at least 1; clamp rounding
    Ok(trace_norm(&pt)?.log2().max(0.0))
}

/// One-parameter state families on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// `p Φ + (1 − p) I / 4ⁿ` on `n + n` qubits.
    Isotropic { n: usize },
    /// The literal 4×4 two-qubit Breuer-type matrix.
    Breuer,
}

impl Family {
    pub fn state(&self, p: f64) -> Result<DensityMatrix> {
        match self {
            Family::Isotropic { n } => isotropic(*n, p),
            Family::Breuer => breuer_literal(p),
        }
    }

    /// Qubits on each side.
    pub fn qubits_per_side(&self) -> usize {
        match self {
            Family::Isotropic { n } => *n,
            Family::Breuer => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Isotropic { n } => format!("isotropic(n={n})"),
            Family::Breuer => "breuer".into(),
        }
    }
}

/// `(p, λ_min)` on `points` evenly spaced parameters in `[0, 1]`.
pub fn min_eig_curve(
    family: Family,
    decomp: &QuasiDecomposition,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::ParamOutOfRange(format!(
            "a curve needs at least 2 points, got {points}"
        )));
    }
    (0..points)
        .into_par_iter()
        .map(|i| {
            let p = i as f64 / (points - 1) as f64;
            Ok((p, min_eig_exact(decomp, &family.state(p)?)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Crossing {
    At(f64),
    NoCrossing,
}

impl Crossing {
    pub fn value(&self) -> Option<f64> {
        match self {
            Crossing::At(p) => Some(*p),
            Crossing::NoCrossing => None,
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > SIGN_TOL {
        1
    } else if x < -SIGN_TOL {
        -1
    } else {
        0
    }
}

/// Parameter where `λ_min` changes sign, located by bisection inside the
/// bracketing interval of a 101-point grid.
///
/// The grid must show at most one sign change between nonzero values;
/// `λ_min` itself need not be monotone. Values within [`SIGN_TOL`] of zero
/// are grouped with the nonnegative side, so a crossing is the boundary of
/// the region where the map output has a negative eigenvalue.
pub fn threshold_scan(family: Family, decomp: &QuasiDecomposition) -> Result<Crossing> {
    let curve = min_eig_curve(family, decomp, 101)?;
    let signs: Vec<i8> = curve
        .iter()
        .map(|&(_, l)| sign(l))
        .filter(|&s| s != 0)
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if changes > 1 {
        return Err(Error::NonMonotone);
    }
    let negative = |l: f64| l < -SIGN_TOL;
    let Some(i) = curve
        .windows(2)
        .position(|w| negative(w[0].1) != negative(w[1].1))
    else {
        return Ok(Crossing::NoCrossing);
    };
    let (mut lo, mut hi) = (curve[i].0, curve[i + 1].0);
    let lo_negative = negative(curve[i].1);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if negative(min_eig_exact(decomp, &family.state(mid)?)?) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossing::At(0.5 * (lo + hi)))
}

/// Largest entry-wise deviation between the decomposition and a direct
/// matrix-level map over `trials` random states.
pub fn decomposition_equiv(
    decomp: &QuasiDecomposition,
    dim_a: usize,
    direct: impl Fn(&CMat) -> Result<CMat> + Sync,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let devs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let rho = random_bipartite(dim_a, decomp.dim_b(), rng::derive(seed, &[t as u64]));
            Ok(decomp.apply_map(&rho)?.max_abs_diff(&direct(rho.mat())?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{direct, MapKind};
    use crate::states::{bell, mes, random_product};

    #[test]
    fn bell_reduction_and_negativity() {
        let red = MapKind::Reduction.decomposition(1).unwrap();
        assert!((min_eig_exact(&red, &bell()).unwrap() + 0.5).abs() < 1e-12);
        assert!((log_negativity_exact(&bell()).unwrap() - 1.0).abs() < 1e-12);
        for n in 1..=3 {
            assert!((log_negativity_exact(&mes(n)).unwrap() - n as f64).abs() < 1e-10);
        }
        assert!(
            log_negativity_exact(&random_product(2, 2, 4))
                .unwrap()
                .abs()
                < 1e-10
        );
        let half = isotropic(1, 0.5).unwrap();
        assert!((log_negativity_exact(&half).unwrap() - 1.25f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn isotropic_closed_forms() {
        let ppt = MapKind::Ppt.decomposition(2).unwrap();
        let red = MapKind::Reduction.decomposition(2).unwrap();
        for p in [0.0, 0.1, 0.37, 0.8, 1.0] {
            let rho = isotropic(2, p).unwrap();
            assert!((min_eig_exact(&ppt, &rho).unwrap() - (1.0 - 5.0 * p) / 16.0).abs() < 1e-12);
            assert!((min_eig_exact(&red, &rho).unwrap() - (3.0 - 15.0 * p) / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thresholds() {
        let ppt = MapKind::Ppt.decomposition(2).unwrap();
        let p = threshold_scan(Family::Isotropic { n: 2 }, &ppt)
            .unwrap()
            .value()
            .unwrap();
        assert!((p - 0.2).abs() < 1e-9);
        let ppt1 = MapKind::Ppt.decomposition(1).unwrap();
        let p = threshold_scan(Family::Isotropic { n: 1 }, &ppt1)
            .unwrap()
            .value()
            .unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-9);
        let b = threshold_scan(Family::Breuer, &ppt1)
            .unwrap()
            .value()
            .unwrap();
        assert!((b - 0.5).abs() < 1e-9);
        let enh = MapKind::Enhanced.decomposition(1).unwrap();
        assert!(enh.is_empty());
    }

    #[test]
    fn equivalence_of_transpose() {
        let dev = decomposition_equiv(
            &MapKind::Ppt.decomposition(1).unwrap(),
            2,
            |m| direct::transpose_b(m, 2),
            10,
            1,
        )
        .unwrap();
        assert!(dev < 1e-12);
    }
}
