//! The reduction criterion from two swap-test overlaps, compared with the
//! four-channel evaluation at the same parameters.
//!
//!     cargo run --release --example reduction_swap_test

use ved::circuit::{Ansatz, ShotPolicy};
use ved::detect::{loss_deterministic, ved_reduction_direct, ReductionSwapLoss, VedSettings};
use ved::maps::MapKind;
use ved::optimize::{Objective, OptimizerConfig};
use ved::rng::uniform_angles;
use ved::states::isotropic;

fn main() -> ved::Result<()> {
    let ansatz = Ansatz::fig2();
    let rho = isotropic(1, 0.6)?;
    let decomp = MapKind::Reduction.decomposition(1)?;
    let swap = ReductionSwapLoss::new(&ansatz, &rho, ShotPolicy::exact())?;
    for seed in 0..3 {
        let alpha = uniform_angles(3, seed);
        let channels = loss_deterministic(&ansatz, &alpha, &decomp, &rho, &ShotPolicy::exact())?;
        println!(
            "α #{seed}: channels {channels:+.12}  swap tests {:+.12}",
            swap.loss(&alpha, 0)?
        );
    }

    let settings = VedSettings::new(
        OptimizerConfig::gradient_descent(0.5, 200),
        0.1,
        ShotPolicy::with_shots(8192, 4),
        4,
    )
    .with_attempts(3);
    let report = ved_reduction_direct(&rho, &ansatz, &settings)?;
    println!(
        "8192 shots: loss {:+.4} after {} iterations, {:?}",
        report.final_loss, report.iterations, report.verdict
    );
    Ok(())
}
