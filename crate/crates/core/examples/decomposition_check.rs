//! Checks each channel decomposition against its matrix-level definition.
//!
//!     cargo run --release --example decomposition_check

use ved::linalg::CMat;
use ved::maps::{direct, MapKind};
use ved::oracle::decomposition_equiv;

type Direct = Box<dyn Fn(&CMat) -> ved::Result<CMat> + Sync>;

fn main() -> ved::Result<()> {
    let zero = |m: &CMat| Ok(CMat::zeros(m.rows(), m.cols()));
    let cases: Vec<(&str, MapKind, usize, Direct)> = vec![
        (
            "transpose n=1",
            MapKind::Ppt,
            1,
            Box::new(|m| direct::transpose_b(m, 2)),
        ),
        (
            "transpose n=2",
            MapKind::Ppt,
            2,
            Box::new(|m| direct::transpose_b(m, 4)),
        ),
        (
            "reduction n=1",
            MapKind::Reduction,
            1,
            Box::new(|m| direct::reduction_b(m, 2)),
        ),
        (
            "reduction n=2",
            MapKind::Reduction,
            2,
            Box::new(|m| direct::reduction_b(m, 4)),
        ),
        ("enhanced n=1", MapKind::Enhanced, 1, Box::new(zero)),
        (
            "enhanced n=2",
            MapKind::Enhanced,
            2,
            Box::new(|m| direct::enhanced_b(m, 4)),
        ),
        ("choi", MapKind::Choi, 1, Box::new(direct::choi_b)),
    ];
    for (name, kind, n, f) in cases {
        let d = kind.decomposition(n)?;
        let dim_a = d.dim_b();
        let dev = decomposition_equiv(&d, dim_a, f, 100, 1)?;
        println!("{name:<14} {:>2} terms  max deviation {dev:.2e}", d.len());
    }
    Ok(())
}
