//! Choi-map detection on two-qutrit isotropic states with a directly
//! parameterized test state.
//!
//!     cargo run --release --example choi_qutrit

use ved::circuit::{HypersphericalState, ShotPolicy};
use ved::detect::{ved_deterministic, VedSettings};
use ved::maps::MapKind;
use ved::optimize::OptimizerConfig;
use ved::oracle::min_eig_exact;
use ved::states::isotropic_qudit;

fn main() -> ved::Result<()> {
    let prep = HypersphericalState::new(9)?;
    let decomp = MapKind::Choi.decomposition(1)?;
    println!("     p    oracle   variational  verdict");
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let rho = isotropic_qudit(3, p)?;
        let settings = VedSettings::new(
            OptimizerConfig::adam(0.1, 300),
            0.05,
            ShotPolicy::exact(),
            2,
        )
        .with_early_stop(false)
        .with_attempts(2);
        let report = ved_deterministic(&rho, &decomp, &prep, &settings)?;
        println!(
            "  {p:.2}  {:+.5}  {:+.5}     {:?}",
            min_eig_exact(&decomp, &rho)?,
            report.final_loss,
            report.verdict
        );
    }
    Ok(())
}
