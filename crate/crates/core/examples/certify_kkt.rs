//! Builds a sample from a known ferromagnetic model, fits it on a graph
//! and inspects the optimality certificate, then shows a perturbed table
//! failing it.

use mtp2::certify::certify_ising_table;
use mtp2::ising::{table_from_params, Graph};
use mtp2::tables::moments_from_counts;
use mtp2::{certify_ising, fit, FitOptions, IsingParams, ProbTable, SampleCounts, Tolerances};

fn main() -> mtp2::Result<()> {
    let mut theta = IsingParams::from_interactions(4, &[(0, 1, 0.4), (1, 2, 0.2), (2, 3, 0.6), (0, 3, 0.1)])?;
    theta.h[0] = 0.3;
    theta.h[2] = -0.2;
    let p = table_from_params(&theta)?;
    // expected counts of a large sample, rounded
    let counts: Vec<u64> = p.values().iter().map(|v| (v * 5000.0).round() as u64).collect();
    let c = SampleCounts::new(4, counts)?;
    let m = moments_from_counts(&c);
    let g = Graph::complete(4);
    let tol = Tolerances::default();

    let res = fit(&c, &g, &FitOptions::default())?;
    println!("fitted edges: {}", res.fitted_graph);
    println!("{}", certify_ising(&res, &m, &g, &tol)?);

    let mut values = res.table.values().to_vec();
    values[0] *= 1.01;
    let bumped = ProbTable::from_weights(4, values)?;
    let cert = certify_ising_table(&bumped, &m, &g, &tol)?;
    println!("perturbed table certified: {}", cert.pass());
    Ok(())
}
