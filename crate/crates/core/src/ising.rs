//! Ising parametrization `p(x) ∝ exp(hᵀx + xᵀJx/2)` and conversions between
//! tables and canonical parameters.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::states::{self, ensure_dim, full_mask, state_count};
use crate::tables::{check_pair, ProbTable};

/// Max-norm tolerance for deciding that a table lies in the Ising family.
pub const DEFAULT_ISING_TOL: f64 = 1e-7;

/// Canonical parameters `(h, J)`, `J` symmetric with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingParams {
    pub h: DVector<f64>,
    pub j: DMatrix<f64>,
}

impl IsingParams {
    pub fn new(h: DVector<f64>, j: DMatrix<f64>) -> Result<Self> {
        let d = h.len();
        if j.nrows() != d || j.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: j.nrows() });
        }
        for a in 0..d {
            if j[(a, a)] != 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "J has nonzero diagonal entry at {}",
                    a + 1
                )));
            }
            for b in a + 1..d {
                if (j[(a, b)] - j[(b, a)]).abs() > 1e-12 * (1.0 + j[(a, b)].abs()) {
                    return Err(Error::InvalidDistribution(format!(
                        "J is not symmetric at ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(IsingParams { h, j })
    }

    pub fn zeros(d: usize) -> Self {
        IsingParams { h: DVector::zeros(d), j: DMatrix::zeros(d, d) }
    }

    /// No external field, interactions on the upper triangle given by `pairs`.
    pub fn from_interactions(d: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut p = IsingParams::zeros(d);
        for &(a, b, w) in pairs {
            check_pair(d, a, b)?;
            p.j[(a, b)] = w;
            p.j[(b, a)] = w;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// `hᵀx + xᵀJx/2` at the state `mask`.
    pub fn energy(&self, mask: u32) -> f64 {
        let d = self.dim();
        let x = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for a in 0..d {
            let xa = x(a);
            e += self.h[a] * xa;
            for b in a + 1..d {
                e += self.j[(a, b)] * xa * x(b);
            }
        }
        e
    }

    /// Smallest off-diagonal entry of `J` (`+∞` when `d = 1`).
    pub fn min_interaction(&self) -> f64 {
        let d = self.dim();
        let mut m = f64::INFINITY;
        for a in 0..d {
            for b in a + 1..d {
                m = m.min(self.j[(a, b)]);
            }
        }
        m
    }
}

/// Undirected simple graph on vertices `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(d: usize) -> Self {
        Graph { d, edges: BTreeSet::new() }
    }

    pub fn complete(d: usize) -> Self {
        let edges = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
        Graph { d, edges }
    }

    /// The cycle `1 - 2 - ... - d - 1`.
    pub fn cycle(d: usize) -> Self {
        let mut g = Graph::chain(d);
        if d >= 3 {
            g.edges.insert((0, d - 1));
        }
        g
    }

    /// The path `1 - 2 - ... - d`.
    pub fn chain(d: usize) -> Self {
        Graph { d, edges: (1..d).map(|b| (b - 1, b)).collect() }
    }

    /// Builds from 0-indexed edges; duplicates are merged, self-loops and
    /// out-of-range vertices rejected.
    pub fn from_edges(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::empty(d);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Returns `false` if the edge was already present.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        check_pair(self.d, a, b)?;
        Ok(self.edges.insert((a.min(b), a.max(b))))
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        self.edges.remove(&(a.min(b), a.max(b)))
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges `(a, b)` with `a < b`, lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }
}

impl fmt::Display for Graph {
    /// 1-indexed edge list, e.g. `1-2 2-3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, b) in self.edges() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}-{}", a + 1, b + 1)?;
        }
        Ok(())
    }
}

/// `log Σ_x exp(hᵀx + xᵀJx/2)`.
pub fn log_partition(theta: &IsingParams) -> Result<f64> {
    let d = theta.dim();
    ensure_dim(d, states::DEFAULT_MAX_DIM)?;
    let energies: Vec<f64> = (0..state_count(d) as u32).map(|m| theta.energy(m)).collect();
    Ok(log_sum_exp(&energies))
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|&e| (e - max).exp()).sum::<f64>().ln()
}

pub fn table_from_params(theta: &IsingParams) -> Result<ProbTable> {
    table_from_params_capped(theta, states::DEFAULT_MAX_DIM)
}

pub fn table_from_params_capped(theta: &IsingParams, cap: usize) -> Result<ProbTable> {
    let d = theta.dim();
    ensure_dim(d, cap)?;
    let energies: Vec<f64> = (0..state_count(d) as u32).map(|m| theta.energy(m)).collect();
    let a = log_sum_exp(&energies);
    Ok(ProbTable::from_raw(d, energies.into_iter().map(|e| (e - a).exp()).collect()))
}

/// `(1/4) log[p(x∨y) p(x∧y) / (p(x) p(y))]` for the elementary pair
/// `x = A ∪ {i}`, `y = A ∪ {j}`; equals `J_ij` on the Ising family.
/// Bits `i` and `j` of `context` are ignored.
pub fn interaction_from_table(p: &ProbTable, i: usize, j: usize, context: u32) -> Result<f64> {
    check_pair(p.dim(), i, j)?;
    let a = context & !(1u32 << i | 1u32 << j) & full_mask(p.dim());
    let low = p.at(a);
    let high = p.at(a | 1 << i | 1 << j);
    let x = p.at(a | 1 << i);
    let y = p.at(a | 1 << j);
    if low <= 0.0 || high <= 0.0 || x <= 0.0 || y <= 0.0 {
        return Err(Error::ZeroProbability { what: "interaction log-odds" });
    }
    Ok(0.25 * ((high.ln() + low.ln()) - (x.ln() + y.ln())))
}

/// `(1/4) log[p(x) p(-y) / (p(-x) p(y))]` with `x` the all-ones state and
/// `y` equal to `x` except `y_i = -1`; equals `h_i` on the Ising family.
pub fn field_from_table(p: &ProbTable, i: usize) -> Result<f64> {
    let d = p.dim();
    if i >= d {
        return Err(Error::IndexOutOfRange { index: i, dim: d });
    }
    let top = full_mask(d);
    let x = top;
    let y = top & !(1 << i);
    let (px, py, pnx, pny) = (p.at(x), p.at(y), p.at(!x & top), p.at(!y & top));
    if px <= 0.0 || py <= 0.0 || pnx <= 0.0 || pny <= 0.0 {
        return Err(Error::ZeroProbability { what: "field log-odds" });
    }
    Ok(0.25 * ((px.ln() + pny.ln()) - (pnx.ln() + py.ln())))
}

/// Parameters read off a full-support table, with the membership verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedParams {
    pub params: IsingParams,
    pub is_ising: bool,
    /// Max-norm distance between `p` and the table rebuilt from `params`.
    pub reconstruction_error: f64,
}

/// Extracts `(h, J)` using the all-`-1` reference context and checks that
/// the rebuilt table reproduces `p`.
pub fn params_from_table(p: &ProbTable) -> Result<ExtractedParams> {
    params_from_table_tol(p, DEFAULT_ISING_TOL)
}

pub fn params_from_table_tol(p: &ProbTable, tol: f64) -> Result<ExtractedParams> {
    if !p.has_full_support() {
        return Err(Error::NotFullSupport { zeros: p.zero_count() });
    }
    let d = p.dim();
    let mut params = IsingParams::zeros(d);
    for a in 0..d {
        params.h[a] = field_from_table(p, a)?;
        for b in a + 1..d {
            let w = interaction_from_table(p, a, b, 0)?;
            params.j[(a, b)] = w;
            params.j[(b, a)] = w;
        }
    }
    let rebuilt = table_from_params_capped(&params, states::HARD_MAX_DIM)?;
    let err = rebuilt.max_abs_diff(p);
    Ok(ExtractedParams { params, is_ising: err <= tol, reconstruction_error: err })
}

/// MTP2 holds on the Ising family iff every off-diagonal `J_ij >= 0`.
pub fn is_mtp2_params(theta: &IsingParams, tol: f64) -> bool {
    theta.min_interaction() >= -tol
}
