//! For palindromic ferromagnetic Ising models on a cycle, the covariance
//! matrix is an inverse M-matrix: its inverse has nonpositive
//! off-diagonal entries.

use mtp2::ising::{table_from_params, Graph};
use mtp2::{IsingParams, Moments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mtp2::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in 4..=7 {
        let g = Graph::cycle(d);
        let pairs: Vec<(usize, usize, f64)> = g.edges().map(|(a, b)| (a, b, rng.random_range(0.0..1.5))).collect();
        let theta = IsingParams::from_interactions(d, &pairs)?;
        let sigma = Moments::from_table(&table_from_params(&theta)?).covariance();
        let inv = sigma.try_inverse().ok_or_else(|| mtp2::Error::Numerical("singular covariance".into()))?;
        let worst = (0..d)
            .flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| inv[(a, b)])
            .fold(f64::NEG_INFINITY, f64::max);
        println!("d = {d}: largest off-diagonal entry of the inverse covariance = {worst:.3e}");
    }
    Ok(())
}
