//! Sampling cost of each map and the concentration of the sampled loss.
//!
//!     cargo run --release --example probabilistic_budget

use std::f64::consts::FRAC_PI_2;

use ved::circuit::{Ansatz, ShotPolicy};
use ved::detect::{loss_deterministic, sample_budget, SampledLoss};
use ved::maps::MapKind;
use ved::optimize::Objective;
use ved::states::bell;

fn main() -> ved::Result<()> {
    let (delta, epsilon) = (0.1, 0.05);
    for (kind, n) in [
        (MapKind::Ppt, 1),
        (MapKind::Reduction, 1),
        (MapKind::ReductionTp, 1),
        (MapKind::Enhanced, 2),
        (MapKind::Choi, 1),
    ] {
        let d = kind.decomposition(n)?;
        println!(
            "{:<13} n={n}  terms {:>2}  γ {:.4}  M {}",
            kind.name(),
            d.len(),
            d.gamma(),
            sample_budget(d.gamma(), delta, epsilon)?
        );
    }

    let ansatz = Ansatz::fig2();
    let rho = bell();
    let decomp = MapKind::Reduction.decomposition(1)?;
    let alpha = [FRAC_PI_2, 0.0, 0.0];
    let exact = loss_deterministic(&ansatz, &alpha, &decomp, &rho, &ShotPolicy::exact())?;
    let m = sample_budget(decomp.gamma(), delta, epsilon)?;
    let sampled = SampledLoss::new(&ansatz, &decomp, &rho, m, ShotPolicy::exact())?;
    let runs = 200;
    let mut inside = 0;
    for k in 0..runs {
        if (sampled.loss(&alpha, k)? - exact).abs() <= delta {
            inside += 1;
        }
    }
    println!(
        "exact loss {exact:+.4}; {inside}/{runs} sampled estimates within δ = {delta} (M = {m})"
    );
    Ok(())
}
