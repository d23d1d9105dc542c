//! Log-negativity of two-qubit isotropic states from an ancilla-assisted
//! variational circuit.
//!
//!     cargo run --release --example vlne_isotropic

use ved::circuit::{Ansatz, ShotPolicy};
use ved::detect::{vlne, VedSettings};
use ved::optimize::OptimizerConfig;
use ved::oracle::log_negativity_exact;
use ved::states::isotropic;

fn main() -> ved::Result<()> {
    // A, B and one ancilla
    let ansatz = Ansatz::layered(3, 2)?;
    println!("     p   estimate   exact");
    for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
        let rho = isotropic(1, p)?;
        let settings = VedSettings::new(
            OptimizerConfig::adam(0.1, 200),
            0.05,
            ShotPolicy::exact(),
            5,
        )
        .with_attempts(3);
        let report = vlne(&rho, &ansatz, &settings)?;
        println!(
            "  {p:.3}  {:+.5}  {:+.5}",
            report.log_negativity,
            log_negativity_exact(&rho)?
        );
    }
    Ok(())
}
