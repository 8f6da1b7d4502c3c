//! Existence of the MLE from pairwise sign patterns and from the lattice
//! and algebra closures of the sample support.

use mtp2::general_mle::{existence_general, existence_symmetric};
use mtp2::states::{algebra_closure, lattice_closure};
use mtp2::{SampleCounts, State};

fn report(name: &str, d: usize, rows: &[&[i8]]) -> mtp2::Result<()> {
    let states = rows.iter().map(|r| State::from_signs(r)).collect::<mtp2::Result<Vec<_>>>()?;
    let c = SampleCounts::from_states(d, states)?;
    let g = existence_general(&c);
    let s = existence_symmetric(&c);
    let pairs: Vec<String> = g.offending.iter().map(|(a, b)| format!("{}-{}", a + 1, b + 1)).collect();
    println!("{name}:");
    println!("  |L(U)| = {}, |A(U)| = {} of {}", lattice_closure(&c.support()).len(), algebra_closure(&c.support()).len(), 1 << d);
    println!("  general MLE exists: {} (missing patterns on [{}])", g.exists, pairs.join(" "));
    println!("  symmetric MLE exists: {}", s.exists);
    Ok(())
}

fn main() -> mtp2::Result<()> {
    report("three one-hot points", 3, &[&[1, -1, -1], &[-1, 1, -1], &[-1, -1, 1]])?;
    report("X1 <= X2 throughout", 3, &[&[-1, 1, 1], &[1, 1, -1], &[-1, -1, 1], &[-1, 1, -1]])?;
    report("single discordant pair", 2, &[&[1, -1]])?;
    report("constant sample", 3, &[&[1, 1, 1], &[1, 1, 1]])?;
    Ok(())
}
