//! Prints workspace volumes for the reference designs.
//!
//! `cargo run --release -p parawork --example volumes -- [n]`

use parawork::mechanisms::{Prs3Params, TmechParams};
use parawork::workspace::{boundary_search, BoundaryMode, GridConfig};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let prs = GridConfig::new(0.001, 1.0, n, n, 6.0);
    for (label, p) in [
        ("3-PRS (0.62, 1, 0)", Prs3Params::new(0.62, 1.0, 0.0)),
        ("3-PRS (0.4, 0.4, 0)", Prs3Params::new(0.4, 0.4, 0.0)),
    ] {
        let b = boundary_search(&p, &prs);
        println!("{label}: V = {:.5} ({} evaluations)", b.volume, b.evaluations);
    }
    let t = GridConfig::new(0.001, 1.0, n, n, 2.0).normalized();
    let designs = [
        ("T-mech ones", TmechParams::new(45.0, [1.0; 7])),
        (
            "T-mech optimum",
            TmechParams::from_lengths(45.0, [90.4, 77.4, 101.0, 87.1, 67.5, 37.8, 135.0]),
        ),
    ];
    for (label, p) in designs {
        let b = boundary_search(&p, &t);
        let d = boundary_search(&p, &t.with_mode(BoundaryMode::Det));
        println!(
            "{label}: V = {:.5}, det-mode V = {:.5} ({} evaluations)",
            b.volume, d.volume, b.evaluations
        );
    }
}
