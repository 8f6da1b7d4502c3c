//! MLE over all MTP2 distributions on three binary variables, where the
//! sample has zero cells and violates two MTP2 inequalities.

use mtp2::certify::certify_general;
use mtp2::tables::log_likelihood;
use mtp2::{solve_general, SampleCounts, Tolerances};

fn main() -> mtp2::Result<()> {
    // counts in lattice order: {}, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, {1,2,3}
    let c = SampleCounts::from_lattice_order(3, &[2, 1, 0, 3, 2, 0, 4, 1])?;
    let fit = solve_general(&c, &Tolerances::default())?;

    let scaled: Vec<String> = fit.table.to_lattice_order().iter().map(|p| format!("{:.4}", p * 182.0)).collect();
    println!("182 * p in lattice order: {}", scaled.join(" "));
    println!("log-likelihood: {:.6}", log_likelihood(&fit.table, &c));
    println!("newton steps: {}, barrier rounds: {}", fit.newton_steps, fit.outer_iterations);

    let cert = certify_general(&fit.table, &c, &Tolerances::default())?;
    println!("{cert}");
    println!("dual decomposition of p - T:");
    for (u, w) in &cert.decomposition {
        let terms: Vec<String> = u.entries().map(|(m, v)| format!("{v:+}@{m:03b}")).collect();
        println!("  {:.4}/182 * [{}]", w * 182.0, terms.join(" "));
    }
    Ok(())
}
