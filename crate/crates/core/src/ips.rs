//! Iterative proportional scaling for the MTP2 Ising MLE on a graph.
//!
//! The solver cycles through the edges `ij` whose sample covariance is
//! positive. Each visit either fits the pair margin of `(X_i, X_j)` to its
//! empirical value (when the resulting interaction stays positive) or fits
//! a shifted margin `e*` chosen so that the interaction becomes exactly
//! zero while the two means still match the data. Every visit changes only
//! `(h_i, h_j, J_ij)`, so the iterate stays inside the Ising family over
//! the graph and keeps `J >= 0`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ising::{self, Graph, IsingParams};
use crate::tables::{
    check_pair, empirical_pair, independence_table, moments_from_counts, pair_margin, Moments,
    PairMargin, ProbTable, SampleCounts,
};

/// Stopping and iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Precision on means and fitted second moments.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Convergence is also declared when successive tables differ by less
    /// than this in max-norm.
    pub stall_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { epsilon: 1e-10, max_sweeps: 10_000, stall_tol: 1e-14 }
    }
}

impl FitOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        FitOptions { epsilon, ..Default::default() }
    }
}

/// Outcome of the existence precheck on a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preflight {
    pub ok: bool,
    /// Edges (0-indexed) missing one of the discordant sign patterns.
    pub offending: Vec<(usize, usize)>,
}

/// True iff every edge margin of the sample shows both `(1,-1)` and `(-1,1)`.
pub fn preflight_existence(c: &SampleCounts, g: &Graph) -> Result<Preflight> {
    check_graph(c, g)?;
    let offending: Vec<_> = g
        .edges()
        .filter(|&(i, j)| c.pair_count(i, j, 1, -1) == 0 || c.pair_count(i, j, -1, 1) == 0)
        .collect();
    Ok(Preflight { ok: offending.is_empty(), offending })
}

/// True iff on every edge the event `X_i != X_j` occurs in the sample.
pub fn preflight_symmetric(c: &SampleCounts, g: &Graph) -> Result<Preflight> {
    check_graph(c, g)?;
    let offending: Vec<_> = g
        .edges()
        .filter(|&(i, j)| c.pair_count(i, j, 1, -1) + c.pair_count(i, j, -1, 1) == 0)
        .collect();
    Ok(Preflight { ok: offending.is_empty(), offending })
}

fn check_graph(c: &SampleCounts, g: &Graph) -> Result<()> {
    if c.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: g.dim() });
    }
    Ok(())
}

/// `(1/4) log[q(1,1) q(-1,-1) / (q(1,-1) q(-1,1))]` with `q = e / p_ij`.
pub fn delta_ij(p: &ProbTable, e: &PairMargin, i: usize, j: usize) -> Result<f64> {
    let pij = pair_margin(p, i, j)?;
    delta_from_margins(&pij, e)
}

pub fn delta_from_margins(pij: &PairMargin, e: &PairMargin) -> Result<f64> {
    if !pij.is_positive() {
        return Err(Error::ZeroProbability { what: "model pair margin" });
    }
    if !e.is_positive() {
        return Err(Error::ZeroProbability { what: "empirical pair margin" });
    }
    Ok(0.25 * (e.log_odds_ratio() - pij.log_odds_ratio()))
}

/// The shifted margin `e*` with second moment `M_ij + λ` and unchanged means.
pub fn clamped_margin(e: &PairMargin, lambda: f64) -> PairMargin {
    let x = lambda / 4.0;
    PairMargin { pp: e.pp + x, pm: e.pm - x, mp: e.mp - x, mm: e.mm + x }
}

/// Solves `Δ_ij(λ) = -J_ij` for the clamped update.
pub fn solve_lambda_star(
    p: &ProbTable,
    e: &PairMargin,
    i: usize,
    j: usize,
    j_ij: f64,
) -> Result<f64> {
    let pij = pair_margin(p, i, j)?;
    lambda_star_from_margins(&pij, e, j_ij).map_err(|err| match err {
        Error::ClampPrecondition { gap, .. } => Error::ClampPrecondition { i, j, gap },
        other => other,
    })
}

/// Positive root `λ*/4` of `a x² + b x + c` with
/// `R = [p(1,1)p(-1,-1) / (p(-1,1)p(1,-1))] e^{-4J}`, `a = 1 - R`,
/// `b = e(1,1) + e(-1,-1) + R(e(-1,1) + e(1,-1))` and
/// `c = e(1,1)e(-1,-1) - R e(-1,1)e(1,-1)`, returned as `λ*`.
pub fn lambda_star_from_margins(pij: &PairMargin, e: &PairMargin, j_ij: f64) -> Result<f64> {
    let delta0 = delta_from_margins(pij, e)?;
    let gap = delta0 + j_ij;
    if gap > 1e-12 {
        return Err(Error::ClampPrecondition { i: 0, j: 0, gap });
    }
    let r = (pij.pp * pij.mm / (pij.mp * pij.pm)) * (-4.0 * j_ij).exp();
    let a = 1.0 - r;
    let b = e.pp + e.mm + r * (e.mp + e.pm);
    let c = e.pp * e.mm - r * e.mp * e.pm;
    let upper = e.pm.min(e.mp);
    if c >= 0.0 {
        return Ok(0.0);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Numerical(format!("negative discriminant {disc}")));
    }
    // b > 0, so q < 0 and c / q avoids cancellation; it is also the
    // smaller positive root when a < 0.
    let q = -0.5 * (b + disc.sqrt());
    let x = c / q;
    if !(x >= 0.0 && x < upper) {
        return Err(Error::RootOutOfRange { root: x, upper });
    }
    Ok(4.0 * x)
}

/// `Δ̃_ij(λ) = (1/2) log[p_ij(-1,1)(1 + M_ij + λ) / (p_ij(1,1)(1 - M_ij - λ))]`
/// for symmetric tables.
pub fn delta_tilde(pij: &PairMargin, m_ij: f64, lambda: f64) -> f64 {
    0.5 * ((pij.mp * (1.0 + m_ij + lambda)) / (pij.pp * (1.0 - m_ij - lambda))).ln()
}

/// Closed-form solution of `Δ̃_ij(λ) = -J_ij`.
pub fn symmetric_lambda(pij: &PairMargin, m_ij: f64, j_ij: f64) -> Result<f64> {
    if !(pij.pp > 0.0 && pij.mp > 0.0) {
        return Err(Error::ZeroProbability { what: "model pair margin" });
    }
    // (1 + M + λ) / (1 - M - λ) = r
    let r = pij.pp / pij.mp * (-2.0 * j_ij).exp();
    let lambda = (r * (1.0 - m_ij) - (1.0 + m_ij)) / (1.0 + r);
    let upper = 1.0 - m_ij;
    if !(lambda > -1.0 - m_ij && lambda < upper) {
        return Err(Error::RootOutOfRange { root: lambda, upper });
    }
    Ok(lambda)
}

/// In-place `p(x) ← p(x) target(x_i,x_j) / current(x_i,x_j)`.
fn rescale_pair(p: &mut ProbTable, i: usize, j: usize, target: &PairMargin, current: &PairMargin) {
    let t = target.by_bits();
    let c = current.by_bits();
    let mut f = [0.0f64; 4];
    for k in 0..4 {
        f[k] = if c[k] > 0.0 { t[k] / c[k] } else { 0.0 };
    }
    for (m, v) in p.values_mut().iter_mut().enumerate() {
        *v *= f[(m >> i & 1) | (m >> j & 1) << 1];
    }
    p.renormalize();
}

/// Which branch an edge visit took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateBranch {
    /// Pair margin fitted to `e_ij`; the edge is in `Ê`.
    Standard { delta: f64 },
    /// Pair margin fitted to `e*_ij`; `J_ij` is now zero.
    Clamped { lambda: f64 },
}

/// Gaps used by the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaps {
    /// `max_v |μ_v - x̄_v|`.
    pub mean: f64,
    /// `min_{uv ∈ E} (Ξ_uv - M_uv)`, `+∞` without edges.
    pub dual: f64,
    /// `max_{uv ∈ Ê} |Ξ_uv - M_uv|`.
    pub fitted: f64,
}

impl Gaps {
    pub fn within(&self, eps: f64) -> bool {
        self.mean < eps && self.dual >= -eps && self.fitted < eps
    }
}

/// Working state of one solver run.
#[derive(Debug, Clone)]
pub struct IpsState {
    p: ProbTable,
    graph: Graph,
    e_plus: Vec<(usize, usize)>,
    e_hat: BTreeSet<(usize, usize)>,
    data: Moments,
    symmetric: bool,
    sweeps: usize,
    updates: usize,
}

impl IpsState {
    /// Starts from the independence table with the sample means.
    pub fn new(c: &SampleCounts, g: &Graph) -> Result<Self> {
        let pre = preflight_existence(c, g)?;
        if !pre.ok {
            return Err(nonexistence(&pre.offending, "both (1,-1) and (-1,1)"));
        }
        let data = moments_from_counts(c);
        let e_plus = g.edges().filter(|&(u, v)| c.scaled_covariance(u, v) > 0).collect();
        Self::start(data, g.clone(), e_plus, false)
    }

    /// Palindromic variant: zero means, symmetric iterates.
    pub fn new_symmetric(c: &SampleCounts, g: &Graph) -> Result<Self> {
        let pre = preflight_symmetric(c, g)?;
        if !pre.ok {
            return Err(nonexistence(&pre.offending, "X_i != X_j"));
        }
        let mut data = moments_from_counts(c);
        data.mean.fill(0.0);
        let e_plus = g
            .edges()
            .filter(|&(u, v)| {
                let agree = c.pair_count(u, v, 1, 1) + c.pair_count(u, v, -1, -1);
                let disagree = c.pair_count(u, v, 1, -1) + c.pair_count(u, v, -1, 1);
                agree > disagree
            })
            .collect();
        Self::start(data, g.clone(), e_plus, true)
    }

    fn start(data: Moments, graph: Graph, e_plus: Vec<(usize, usize)>, symmetric: bool) -> Result<Self> {
        let mean: Vec<f64> = data.mean.iter().copied().collect();
        let p = independence_table(&mean)?;
        Ok(IpsState {
            p,
            graph,
            e_plus,
            e_hat: BTreeSet::new(),
            data,
            symmetric,
            sweeps: 0,
            updates: 0,
        })
    }

    pub fn table(&self) -> &ProbTable {
        &self.p
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Edges with positive sample covariance, in visiting order.
    pub fn positive_edges(&self) -> &[(usize, usize)] {
        &self.e_plus
    }

    pub fn fitted_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.e_hat.iter().copied()
    }

    pub fn data_moments(&self) -> &Moments {
        &self.data
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    fn target_margin(&self, i: usize, j: usize) -> Result<PairMargin> {
        if self.symmetric {
            let m = self.data.second[(i, j)];
            let same = (1.0 + m) / 4.0;
            let diff = (1.0 - m) / 4.0;
            Ok(PairMargin { pp: same, pm: diff, mp: diff, mm: same })
        } else {
            empirical_pair(&self.data, i, j)
        }
    }

    /// Visits edge `ij`, which must be one of the positive edges.
    pub fn update(&mut self, i: usize, j: usize) -> Result<UpdateBranch> {
        check_pair(self.p.dim(), i, j)?;
        let (i, j) = (i.min(j), i.max(j));
        if !self.e_plus.contains(&(i, j)) {
            return Err(Error::InvalidDistribution(format!(
                "edge {}-{} is not a positive-covariance edge",
                i + 1,
                j + 1
            )));
        }
        let e = self.target_margin(i, j)?;
        let pij = pair_margin(&self.p, i, j)?;
        let delta = delta_from_margins(&pij, &e)?;
        let j_ij = ising::interaction_from_table(&self.p, i, j, 0)?;
        let branch = if delta + j_ij > 0.0 {
            rescale_pair(&mut self.p, i, j, &e, &pij);
            self.e_hat.insert((i, j));
            UpdateBranch::Standard { delta }
        } else {
            let lambda = if self.symmetric {
                symmetric_lambda(&pij, self.data.second[(i, j)], j_ij)?.max(0.0)
            } else {
                lambda_star_from_margins(&pij, &e, j_ij).map_err(|err| match err {
                    Error::ClampPrecondition { gap, .. } => Error::ClampPrecondition { i, j, gap },
                    other => other,
                })?
            };
            let star = clamped_margin(&e, lambda);
            rescale_pair(&mut self.p, i, j, &star, &pij);
            self.e_hat.remove(&(i, j));
            UpdateBranch::Clamped { lambda }
        };
        if self.symmetric {
            symmetrize_table(&mut self.p);
        }
        self.updates += 1;
        Ok(branch)
    }

    /// One pass over the positive edges in lexicographic order.
    pub fn sweep(&mut self) -> Result<()> {
        for k in 0..self.e_plus.len() {
            let (i, j) = self.e_plus[k];
            self.update(i, j)?;
        }
        self.sweeps += 1;
        Ok(())
    }

    pub fn gaps(&self) -> Gaps {
        let d = self.p.dim();
        let mut mean = 0.0f64;
        for v in 0..d {
            let mu = mean_of(&self.p, v);
            mean = mean.max((mu - self.data.mean[v]).abs());
        }
        let mut dual = f64::INFINITY;
        let mut fitted = 0.0f64;
        for (u, v) in self.graph.edges() {
            let xi = pair_margin(&self.p, u, v).expect("valid edge").second_moment();
            let diff = xi - self.data.second[(u, v)];
            dual = dual.min(diff);
            if self.e_hat.contains(&(u, v)) {
                fitted = fitted.max(diff.abs());
            }
        }
        Gaps { mean, dual, fitted }
    }

    fn finish(self, converged: bool, gaps: Gaps) -> Result<FitResult> {
        let extracted = ising::params_from_table_tol(&self.p, ising::DEFAULT_ISING_TOL)?;
        let mut params = extracted.params;
        // interactions off E are structurally zero
        let d = self.p.dim();
        for a in 0..d {
            for b in a + 1..d {
                if !self.graph.contains(a, b) {
                    params.j[(a, b)] = 0.0;
                    params.j[(b, a)] = 0.0;
                }
            }
        }
        let model = Moments::from_table(&self.p);
        let fitted_graph = Graph::from_edges(d, self.e_hat.iter().copied())?;
        let positive_graph = Graph::from_edges(d, self.e_plus.iter().copied())?;
        Ok(FitResult {
            table: self.p,
            fitted_graph,
            positive_graph,
            params,
            mean: model.mean,
            second: model.second,
            sweeps: self.sweeps,
            converged,
            gaps,
            is_ising: extracted.is_ising,
        })
    }

    /// Runs sweeps until the stopping rule holds or the sweep cap is hit.
    pub fn run(mut self, opts: &FitOptions) -> Result<FitResult> {
        loop {
            let before = self.p.clone();
            self.sweep()?;
            let gaps = self.gaps();
            if gaps.within(opts.epsilon) {
                return self.finish(true, gaps);
            }
            if self.p.max_abs_diff(&before) < opts.stall_tol {
                return self.finish(true, gaps);
            }
            if self.sweeps >= opts.max_sweeps {
                return self.finish(false, gaps);
            }
        }
    }
}

fn nonexistence(offending: &[(usize, usize)], what: &str) -> Error {
    let list: Vec<String> = offending.iter().map(|(a, b)| format!("{}-{}", a + 1, b + 1)).collect();
    Error::MleDoesNotExist(format!("edges missing {what}: {}", list.join(" ")))
}

fn mean_of(p: &ProbTable, v: usize) -> f64 {
    p.values()
        .iter()
        .enumerate()
        .map(|(m, &x)| if m >> v & 1 == 1 { x } else { -x })
        .sum()
}

fn symmetrize_table(p: &mut ProbTable) {
    let top = p.values().len() - 1;
    let vals = p.values_mut();
    for m in 0..vals.len() / 2 {
        let avg = 0.5 * (vals[m] + vals[top ^ m]);
        vals[m] = avg;
        vals[top ^ m] = avg;
    }
}

/// Output of [`fit`] and [`fit_symmetric`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub table: ProbTable,
    /// `(V, Ê)`: edges whose last visit took the standard branch.
    pub fitted_graph: Graph,
    /// `(V, E⁺)`: edges with positive sample covariance.
    pub positive_graph: Graph,
    pub params: IsingParams,
    /// Fitted means `μ̂`.
    pub mean: DVector<f64>,
    /// Fitted second moments `Ξ̂`.
    pub second: DMatrix<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub gaps: Gaps,
    /// Whether the final table is reproduced by its extracted `(h, J)`.
    pub is_ising: bool,
}

impl FitResult {
    /// `Σ̂ = Ξ̂ - μ̂ μ̂ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.second - &self.mean * self.mean.transpose()
    }

    pub fn moments(&self) -> Moments {
        Moments { mean: self.mean.clone(), second: self.second.clone() }
    }
}

/// MTP2 Ising MLE on `g`. Fails with [`Error::MleDoesNotExist`] when some
/// edge margin lacks a discordant pattern. A result with
/// `converged == false` means the sweep cap was reached.
pub fn fit(c: &SampleCounts, g: &Graph, opts: &FitOptions) -> Result<FitResult> {
    IpsState::new(c, g)?.run(opts)
}

/// MTP2 Ising MLE with no external field (`p(x) = p(-x)`).
pub fn fit_symmetric(c: &SampleCounts, g: &Graph, opts: &FitOptions) -> Result<FitResult> {
    IpsState::new_symmetric(c, g)?.run(opts)
}

/// Result of unconstrained IPS.
#[derive(Debug, Clone)]
pub struct ClassicalFit {
    pub table: ProbTable,
    pub sweeps: usize,
    pub converged: bool,
}

/// Classical IPS for the Ising model on `g` without the sign constraint:
/// every edge margin is fitted to its empirical value.
pub fn classical_ips(c: &SampleCounts, g: &Graph, opts: &FitOptions) -> Result<ClassicalFit> {
    check_graph(c, g)?;
    let data = moments_from_counts(c);
    let mean: Vec<f64> = data.mean.iter().copied().collect();
    let mut p = independence_table(&mean)?;
    let targets: Vec<((usize, usize), PairMargin)> = g
        .edges()
        .map(|(u, v)| empirical_pair(&data, u, v).map(|e| ((u, v), e)))
        .collect::<Result<_>>()?;
    let mut sweeps = 0;
    loop {
        let before = p.clone();
        for ((u, v), e) in &targets {
            let pij = pair_margin(&p, *u, *v)?;
            rescale_pair(&mut p, *u, *v, e, &pij);
        }
        sweeps += 1;
        let mut gap = 0.0f64;
        for v in 0..p.dim() {
            gap = gap.max((mean_of(&p, v) - data.mean[v]).abs());
        }
        for ((u, v), _) in &targets {
            let xi = pair_margin(&p, *u, *v)?.second_moment();
            gap = gap.max((xi - data.second[(*u, *v)]).abs());
        }
        if gap < opts.epsilon || p.max_abs_diff(&before) < opts.stall_tol {
            return Ok(ClassicalFit { table: p, sweeps, converged: true });
        }
        if sweeps >= opts.max_sweeps {
            return Ok(ClassicalFit { table: p, sweeps, converged: false });
        }
    }
}
