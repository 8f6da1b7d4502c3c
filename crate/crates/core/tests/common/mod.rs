#![allow(dead_code)]

use mtp2::ising::{table_from_params, Graph};
use mtp2::{IsingParams, ProbTable, SampleCounts, State, StateSet};
use rand::Rng;

pub const MOUSSOURIS: [[i8; 4]; 8] = [
    [-1, -1, -1, -1],
    [1, -1, -1, -1],
    [1, 1, -1, -1],
    [1, 1, 1, -1],
    [-1, -1, -1, 1],
    [-1, -1, 1, 1],
    [-1, 1, 1, 1],
    [1, 1, 1, 1],
];

pub fn moussouris() -> SampleCounts {
    SampleCounts::from_states(4, MOUSSOURIS.iter().map(|p| State::from_signs(p).unwrap())).unwrap()
}

/// Counts for the three-variable example, in lattice order.
pub const EXAMPLE_COUNTS: [u64; 8] = [2, 1, 0, 3, 2, 0, 4, 1];

pub fn example_counts() -> SampleCounts {
    SampleCounts::from_lattice_order(3, &EXAMPLE_COUNTS).unwrap()
}

pub fn uniform_sample<R: Rng>(rng: &mut R, d: usize, n: usize) -> SampleCounts {
    let mut counts = vec![0u64; 1 << d];
    for _ in 0..n {
        counts[rng.random_range(0..1usize << d)] += 1;
    }
    SampleCounts::new(d, counts).unwrap()
}

/// Draws `n` observations from `p` by inverse CDF.
pub fn sample_from<R: Rng>(rng: &mut R, p: &ProbTable, n: usize) -> SampleCounts {
    let mut cdf = Vec::with_capacity(p.values().len());
    let mut acc = 0.0;
    for &v in p.values() {
        acc += v;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        counts[k] += 1;
    }
    SampleCounts::new(p.dim(), counts).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, d: usize, density: f64) -> Graph {
    let mut g = Graph::empty(d);
    for a in 0..d {
        for b in a + 1..d {
            if rng.random::<f64>() < density {
                g.add_edge(a, b).unwrap();
            }
        }
    }
    g
}

/// Ising parameters with `J >= 0` on the edges of `g`.
pub fn ferromagnet<R: Rng>(rng: &mut R, g: &Graph, jmax: f64, hmax: f64) -> IsingParams {
    let d = g.dim();
    let pairs: Vec<(usize, usize, f64)> = g.edges().map(|(a, b)| (a, b, rng.random_range(0.0..jmax))).collect();
    let mut theta = IsingParams::from_interactions(d, &pairs).unwrap();
    if hmax > 0.0 {
        for v in 0..d {
            theta.h[v] = rng.random_range(-hmax..hmax);
        }
    }
    theta
}

pub fn ferromagnet_table<R: Rng>(rng: &mut R, g: &Graph, jmax: f64, hmax: f64) -> ProbTable {
    table_from_params(&ferromagnet(rng, g, jmax, hmax)).unwrap()
}

/// Ising table on the complete graph with interactions drawn from
/// `[jmin, jmax)` and a small field.
pub fn mixed_table<R: Rng>(rng: &mut R, d: usize, jmin: f64, jmax: f64) -> ProbTable {
    let mut pairs = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            pairs.push((a, b, rng.random_range(jmin..jmax)));
        }
    }
    let mut theta = IsingParams::from_interactions(d, &pairs).unwrap();
    for v in 0..d {
        theta.h[v] = rng.random_range(-0.3..0.3);
    }
    table_from_params(&theta).unwrap()
}

/// Fixed-point closure by repeated passes over all pairs.
pub fn naive_closure(d: usize, support: &[u32], complement: bool) -> Vec<u32> {
    let top = (1u32 << d) - 1;
    let mut set: Vec<bool> = vec![false; 1 << d];
    for &m in support {
        set[m as usize] = true;
    }
    loop {
        let cur: Vec<u32> = (0..=top).filter(|&m| set[m as usize]).collect();
        let mut changed = false;
        for &x in &cur {
            for &y in &cur {
                for z in [x & y, x | y] {
                    if !set[z as usize] {
                        set[z as usize] = true;
                        changed = true;
                    }
                }
            }
            if complement && !set[(!x & top) as usize] {
                set[(!x & top) as usize] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..=top).filter(|&m| set[m as usize]).collect();
        }
    }
}

pub fn support_masks(s: &StateSet) -> Vec<u32> {
    s.masks().collect()
}

/// `(1/4) log[q11 q-- / (q+- q-+)]` with `q = e / p`, cells ordered
/// `(++, +-, -+, --)`.
pub fn delta_ref(p: [f64; 4], e: [f64; 4]) -> f64 {
    let q: Vec<f64> = (0..4).map(|k| e[k] / p[k]).collect();
    0.25 * (q[0] * q[3] / (q[1] * q[2])).ln()
}

/// Root of a monotone increasing `f` on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
