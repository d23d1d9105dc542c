use std::f64::consts::{FRAC_PI_2, PI};

use ved::circuit::{overlap_fig1, Ansatz, ShotPolicy, StatePreparation, FIG2_INIT};
use ved::detect::{
    loss_deterministic, ved_deterministic, ved_probabilistic, ved_reduction_direct, vlne,
    VedSettings, Verdict,
};
use ved::linalg::{eig_hermitian, CMat, C64};
use ved::maps::MapKind;
use ved::optimize::{minimize, param_shift_gradient, Objective, OptimizerConfig};
use ved::oracle::{log_negativity_exact, min_eig_exact};
use ved::rng::{derive, stream, uniform_angles};
use ved::states::{bell, isotropic, random_product};
use ved::Result;

struct Cosine;

impl Objective for Cosine {
    fn param_count(&self) -> usize {
        1
    }
    fn slot_params(&self) -> Vec<usize> {
        vec![0]
    }
    fn loss_slots(&self, a: &[f64], _: u64) -> Result<f64> {
        Ok(a[0].cos())
    }
}

struct Bowl;

impl Objective for Bowl {
    fn param_count(&self) -> usize {
        1
    }
    fn slot_params(&self) -> Vec<usize> {
        vec![0]
    }
    fn loss_slots(&self, a: &[f64], _: u64) -> Result<f64> {
        Ok((a[0] - 1.0).powi(2))
    }
    fn gradient(&self, a: &[f64], _: u64) -> Result<Vec<f64>> {
        Ok(vec![2.0 * (a[0] - 1.0)])
    }
}

/// `⟨ψ|H|ψ⟩` for a fixed Hermitian `H`.
struct Rayleigh<'a> {
    ansatz: &'a Ansatz,
    h: CMat,
}

impl Objective for Rayleigh<'_> {
    fn param_count(&self) -> usize {
        self.ansatz.param_count()
    }
    fn slot_params(&self) -> Vec<usize> {
        self.ansatz.slot_params()
    }
    fn loss_slots(&self, a: &[f64], _: u64) -> Result<f64> {
        Ok(self.h.expectation(&self.ansatz.prepare_slots(a)?).re)
    }
}

fn exact_settings(iters: usize, delta: f64, seed: u64) -> VedSettings {
    VedSettings::new(
        OptimizerConfig::gradient_descent(0.5, iters),
        delta,
        ShotPolicy::exact(),
        seed,
    )
}

#[test]
fn shift_rule_on_cosine() {
    assert!(param_shift_gradient(&Cosine, &[0.0], 0).unwrap()[0].abs() < 1e-15);
    assert!((param_shift_gradient(&Cosine, &[FRAC_PI_2], 0).unwrap()[0] + 1.0).abs() < 1e-15);
}

#[test]
fn gradient_descent_on_quadratic_bowl() {
    let r = minimize(
        &Bowl,
        &[0.0],
        &OptimizerConfig::gradient_descent(0.4, 50),
        0,
    )
    .unwrap();
    assert!((r.alpha[0] - 1.0).abs() < 1e-3);
    let one = minimize(&Bowl, &[0.0], &OptimizerConfig::gradient_descent(0.4, 1), 0).unwrap();
    assert_eq!(one.iterations, 1);
    assert_eq!(one.trajectory.len(), 1);
}

#[test]
fn early_stop_on_bell() {
    let a = Ansatz::fig2();
    let rho = bell();
    let d = MapKind::Reduction.decomposition(1).unwrap();
    let r = ved_deterministic(
        &rho,
        &d,
        &a,
        &exact_settings(200, 0.05, 1).with_init(FIG2_INIT.to_vec()),
    )
    .unwrap();
    assert!(r.iterations < 200);
    assert_eq!(r.verdict, Verdict::Entangled);
    assert!(*r.loss_trajectory.last().unwrap() < -0.05);
}

#[test]
fn best_seen_loss_is_monotone_and_runs_are_reproducible() {
    let a = Ansatz::fig2();
    let rho = bell();
    let d = MapKind::Reduction.decomposition(1).unwrap();
    let s = VedSettings::new(
        OptimizerConfig::adam(0.1, 40),
        0.1,
        ShotPolicy::with_shots(512, 3),
        3,
    )
    .with_early_stop(false);
    let r1 = ved_deterministic(&rho, &d, &a, &s).unwrap();
    let r2 = ved_deterministic(&rho, &d, &a, &s).unwrap();
    assert_eq!(r1, r2);
    let mut best = f64::INFINITY;
    let running: Vec<f64> = r1
        .loss_trajectory
        .iter()
        .map(|l| {
            best = best.min(*l);
            best
        })
        .collect();
    assert!(running.windows(2).all(|w| w[1] <= w[0]));
    let other = ved_deterministic(&rho, &d, &a, &VedSettings { seed: 4, ..s }).unwrap();
    assert_ne!(r1.loss_trajectory, other.loss_trajectory);
}

#[test]
fn separable_isotropic_is_inconclusive() {
    let rho = isotropic(2, 0.1).unwrap();
    let d = MapKind::Ppt.decomposition(2).unwrap();
    let a = Ansatz::layered(4, 2).unwrap();
    let s = VedSettings::new(
        OptimizerConfig::adam(0.1, 300),
        0.01,
        ShotPolicy::exact(),
        2,
    );
    let r = ved_deterministic(&rho, &d, &a, &s).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert_eq!(r.iterations, 300);
    assert!(r.final_loss >= min_eig_exact(&d, &rho).unwrap() - 1e-12);
}

#[test]
fn probabilistic_separable_isotropic_is_inconclusive() {
    let rho = isotropic(1, 0.2).unwrap();
    let d = MapKind::Ppt.decomposition(1).unwrap();
    assert!(min_eig_exact(&d, &rho).unwrap() >= 0.0);
    let s = VedSettings::new(
        OptimizerConfig::gradient_descent(0.5, 30),
        0.1,
        ShotPolicy::exact(),
        6,
    );
    let r = ved_probabilistic(&rho, &d, &Ansatz::fig2(), &s, 0.05).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert_eq!(r.iterations, 30);
    assert_eq!(r.confidence_floor, Some(0.0));
}

#[test]
fn product_states_are_never_flagged() {
    let a = Ansatz::fig2();
    for (i, kind) in [MapKind::Ppt, MapKind::Reduction, MapKind::ReductionTp]
        .into_iter()
        .enumerate()
    {
        let rho = random_product(2, 2, i as u64);
        let d = kind.decomposition(1).unwrap();
        let r = ved_deterministic(&rho, &d, &a, &exact_settings(100, 0.05, i as u64)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive, "{kind}");
        let r = ved_reduction_direct(&rho, &a, &exact_settings(100, 0.05, 1)).unwrap();
        assert!(r.final_loss >= -1e-9);
    }
}

#[test]
fn entangled_verdicts_agree_with_oracle() {
    let a = Ansatz::fig2();
    for (i, p) in [0.2, 0.4, 0.6, 0.9].into_iter().enumerate() {
        let rho = isotropic(1, p).unwrap();
        for kind in [MapKind::Ppt, MapKind::Reduction] {
            let d = kind.decomposition(1).unwrap();
            let r = ved_deterministic(
                &rho,
                &d,
                &a,
                &exact_settings(200, 0.05, i as u64).with_attempts(2),
            )
            .unwrap();
            if r.verdict == Verdict::Entangled {
                assert!(min_eig_exact(&d, &rho).unwrap() < 0.0);
            }
        }
    }
}

#[test]
fn reduction_direct_on_bell_and_isotropic_crossing() {
    let r = ved_reduction_direct(
        &bell(),
        &Ansatz::fig2(),
        &exact_settings(200, 0.05, 0).with_early_stop(false),
    )
    .unwrap();
    assert!((r.final_loss + 0.5).abs() < 1e-6);

    let a = Ansatz::layered(4, 2).unwrap();
    let grid: Vec<f64> = (0..=8).map(|i| 0.1 + 0.025 * i as f64).collect();
    let losses: Vec<f64> = grid
        .iter()
        .map(|&p| {
            let s = VedSettings::new(
                OptimizerConfig::adam(0.1, 200),
                0.05,
                ShotPolicy::exact(),
                5,
            )
            .with_early_stop(false);
            ved_reduction_direct(&isotropic(2, p).unwrap(), &a, &s)
                .unwrap()
                .final_loss
        })
        .collect();
    let i = losses
        .windows(2)
        .position(|w| w[0] >= 0.0 && w[1] < 0.0)
        .expect("sign change");
    let t = losses[i] / (losses[i] - losses[i + 1]);
    let crossing = grid[i] + t * (grid[i + 1] - grid[i]);
    assert!((crossing - 0.2).abs() <= 0.02, "{crossing}");
}

#[test]
fn vlne_on_bell_and_product() {
    let a = Ansatz::layered(3, 2).unwrap();
    let s = VedSettings::new(
        OptimizerConfig::adam(0.1, 200),
        0.05,
        ShotPolicy::exact(),
        8,
    )
    .with_attempts(2);
    let r = vlne(&bell(), &a, &s).unwrap();
    assert!((r.log_negativity - 1.0).abs() < 0.01);
    assert!((r.l1 + 1.5).abs() < 0.01);
    assert!((r.beta - (2.0 * r.l1.abs() - 1.0)).abs() < 1e-15);
    let prod = random_product(2, 2, 5);
    let r = vlne(&prod, &a, &s).unwrap();
    assert!(r.log_negativity.abs() < 0.01);
    assert!(r.beta <= 1.0 + 1e-6);
    assert!(log_negativity_exact(&prod).unwrap().abs() < 1e-10);
}

#[test]
fn layered_ansatz_reaches_ground_energy() {
    let a = Ansatz::layered(4, 4).unwrap();
    let mut rng = stream(31, &[]);
    use rand::Rng;
    let raw = CMat::from_fn(16, 16, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let h = &raw + &raw.adjoint();
    let target = eig_hermitian(&h).unwrap().min();
    let obj = Rayleigh { ansatz: &a, h };
    let best = (0..3)
        .map(|k| {
            let init = uniform_angles(a.param_count(), derive(31, &[k]));
            minimize(&obj, &init, &OptimizerConfig::adam(0.05, 1500), k)
                .unwrap()
                .best_loss
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best >= target - 1e-9);
    assert!(best - target < 1e-3, "{best} vs {target}");
}

#[test]
fn shot_noise_standard_error() {
    let shots = 2048;
    for v in [0.1, 0.5, 0.83] {
        let policy = ShotPolicy::with_shots(shots, 77);
        let draws: Vec<f64> = (0..1000).map(|k| policy.frequency(v, k)).collect();
        let mean = draws.iter().sum::<f64>() / 1000.0;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        let sigma = (v * (1.0 - v) / shots as f64).sqrt();
        assert!(var.sqrt() <= 1.1 * sigma, "{v}: {} vs {sigma}", var.sqrt());
        assert!((mean - v).abs() < 4.0 * sigma / 1000f64.sqrt());
    }
}

#[test]
fn fig1_overlap_matches_dense_for_every_channel() {
    let a = Ansatz::layered(4, 1).unwrap();
    let rho = isotropic(2, 0.45).unwrap();
    for kind in [
        MapKind::Ppt,
        MapKind::Reduction,
        MapKind::ReductionTp,
        MapKind::Enhanced,
    ] {
        let d = kind.decomposition(2).unwrap();
        for (t, term) in d.terms().iter().enumerate() {
            let alpha = uniform_angles(a.param_count(), t as u64);
            let psi = a.prepare(&alpha).unwrap();
            let u = term.unitary.matrix();
            let full = ved::linalg::kron(&CMat::identity(4), &u);
            let dense = full.conjugate(rho.mat()).expectation(&psi).re;
            let v = overlap_fig1(&a, &alpha, term, rho.mat(), &ShotPolicy::exact(), 0).unwrap();
            assert!((v - dense).abs() < 1e-12);
        }
    }
}

#[test]
fn fig2_example_points() {
    let a = Ansatz::fig2();
    let d = MapKind::Reduction.decomposition(1).unwrap();
    let alpha = [FRAC_PI_2, FRAC_PI_2, 0.0];
    let l = loss_deterministic(&a, &alpha, &d, &bell(), &ShotPolicy::exact()).unwrap();
    let out = d.apply_map(&bell()).unwrap();
    assert!((l - out.expectation(&a.prepare(&alpha).unwrap()).re).abs() < 1e-12);
    let u = a.unitary(&[PI, 0.3, 2.0]).unwrap();
    assert!((&u * &u.adjoint()).max_abs_diff(&CMat::identity(4)) < 1e-12);
}
