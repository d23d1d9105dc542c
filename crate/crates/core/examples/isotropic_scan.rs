//! Minimal eigenvalues of three positive maps on two-qubit-per-side
//! isotropic states, exact curve against the variational estimate.
//!
//!     cargo run --release --example isotropic_scan

use ved::circuit::{Ansatz, ShotPolicy};
use ved::detect::{ved_deterministic, VedSettings};
use ved::maps::MapKind;
use ved::optimize::OptimizerConfig;
use ved::oracle::{min_eig_exact, threshold_scan, Family};
use ved::states::isotropic;

fn main() -> ved::Result<()> {
    let family = Family::Isotropic { n: 2 };
    let ansatz = Ansatz::layered(4, 2)?;
    for kind in [MapKind::Ppt, MapKind::Reduction, MapKind::Enhanced] {
        let decomp = kind.decomposition(2)?;
        let crossing = threshold_scan(family, &decomp)?;
        println!("{kind}: sign change at {:?}", crossing.value());
        println!("     p    oracle   variational");
        for p in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let rho = isotropic(2, p)?;
            let settings = VedSettings::new(
                OptimizerConfig::adam(0.1, 200),
                0.05,
                ShotPolicy::exact(),
                3,
            )
            .with_early_stop(false);
            let report = ved_deterministic(&rho, &decomp, &ansatz, &settings)?;
            println!(
                "  {p:.1}  {:+.5}  {:+.5}",
                min_eig_exact(&decomp, &rho)?,
                report.final_loss
            );
        }
    }
    Ok(())
}
