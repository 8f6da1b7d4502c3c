//! Fits the sign-constrained Ising model on a 4-cycle to an eight-point
//! sample whose empirical distribution is not MTP2.

use mtp2::ising::Graph;
use mtp2::tables::{is_mtp2, ProbTable, DEFAULT_MTP2_TOL};
use mtp2::{certify_ising, fit, FitOptions, SampleCounts, State, Tolerances};

const POINTS: [[i8; 4]; 8] = [
    [-1, -1, -1, -1],
    [1, -1, -1, -1],
    [1, 1, -1, -1],
    [1, 1, 1, -1],
    [-1, -1, -1, 1],
    [-1, -1, 1, 1],
    [-1, 1, 1, 1],
    [1, 1, 1, 1],
];

fn main() -> mtp2::Result<()> {
    let states = POINTS.iter().map(|p| State::from_signs(p)).collect::<mtp2::Result<Vec<_>>>()?;
    let c = SampleCounts::from_states(4, states)?;

    let check = is_mtp2(&ProbTable::empirical(&c), DEFAULT_MTP2_TOL);
    println!("empirical distribution MTP2: {}", check.holds);
    if let Some(v) = check.violations.first() {
        println!("  violated by x = {}, y = {}", v.x, v.y);
    }

    let g = Graph::cycle(4);
    let res = fit(&c, &g, &FitOptions::default())?;
    println!("sweeps: {}, fitted edges: {}", res.sweeps, res.fitted_graph);
    println!("J (in units of log 3 / 2):");
    let unit = 3f64.ln() / 2.0;
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|k| format!("{:6.3}", res.params.j[(r, k)] / unit)).collect();
        println!("  {}", row.join(" "));
    }
    let sigma = res.covariance();
    let row: Vec<String> = (0..4).map(|k| format!("{:.4}", sigma[(0, k)])).collect();
    println!("Sigma row 1: {}", row.join(" "));

    let scaled: Vec<String> = res.table.to_lattice_order().iter().map(|p| format!("{:.0}", p * 128.0)).collect();
    println!("128 * p in lattice order: {}", scaled.join(" "));

    let m = mtp2::tables::moments_from_counts(&c);
    let cert = certify_ising(&res, &m, &g, &Tolerances::default())?;
    println!("certificate passes: {}", cert.pass());
    Ok(())
}
