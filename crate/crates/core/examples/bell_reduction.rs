//! Detect the Bell state with the reduction map, exactly and with 8192 shots.
//!
//!     cargo run --release --example bell_reduction

use ved::circuit::{Ansatz, ShotPolicy, FIG2_INIT};
use ved::detect::{ved_deterministic, VedSettings};
use ved::maps::MapKind;
use ved::optimize::OptimizerConfig;
use ved::states::bell;

fn main() -> ved::Result<()> {
    let rho = bell();
    let decomp = MapKind::Reduction.decomposition(1)?;
    let ansatz = Ansatz::fig2();

    for (name, policy, delta) in [
        ("exact", ShotPolicy::exact(), 0.05),
        ("8192 shots", ShotPolicy::with_shots(8192, 11), 0.1),
    ] {
        let settings =
            VedSettings::new(OptimizerConfig::gradient_descent(0.5, 60), delta, policy, 7)
                .with_init(FIG2_INIT.to_vec())
                .with_early_stop(false);
        let report = ved_deterministic(&rho, &decomp, &ansatz, &settings)?;
        println!(
            "{name}: loss {:.4} after {} iterations, {:?}",
            report.final_loss, report.iterations, report.verdict
        );
        for (i, l) in report.loss_trajectory.iter().enumerate().step_by(10) {
            println!("  {i:>3}  {l:+.4}");
        }
    }
    Ok(())
}
