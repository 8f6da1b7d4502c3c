//! Maximum likelihood over all binary MTP2 distributions.
//!
//! The support of the estimate is the lattice closure `L` of the sample
//! support. On `L` the canonical parameter `θ`, with `θ(bottom) = 0`,
//! must be supermodular, a polyhedral cone. The solver runs a log-barrier
//! Newton method from a strictly supermodular start, then guesses the
//! active constraints, solves the likelihood equations on that face and
//! accepts the result once it passes [`certify_general`].

use nalgebra::{DMatrix, DVector};

use crate::certify::{certify_general, elementary_imsets, lattice_pair_imsets, Imset, KktCertificate, Tolerances};
use crate::error::{Error, Result};
use crate::ising::log_sum_exp;
use crate::states::{algebra_closure, lattice_closure, StateSet};
use crate::tables::{log_likelihood, ProbTable, SampleCounts};

/// Largest dimension accepted by [`solve_general`].
pub const GENERAL_MAX_DIM: usize = 8;

/// Output of [`solve_general`].
#[derive(Debug, Clone)]
pub struct GeneralFit {
    pub table: ProbTable,
    /// `L`, the lattice closure of the sample support.
    pub support: StateSet,
    /// Canonical parameters indexed by mask; `-∞` off the support.
    pub theta: Vec<f64>,
    pub certificate: KktCertificate,
    pub log_likelihood: f64,
    /// Barrier centering rounds.
    pub outer_iterations: usize,
    pub newton_steps: usize,
    /// Whether the returned table passed its certificate.
    pub converged: bool,
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralOptions {
    pub tol: Tolerances,
    /// Scale of the strictly supermodular start `θ(x) = δ |x|²`.
    pub delta: f64,
    pub max_outer: usize,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions { tol: Tolerances::default(), delta: 0.05, max_outer: 80 }
    }
}

struct Problem {
    vars: Vec<u32>,
    bottom: u32,
    tbar: DVector<f64>,
    /// Sparse constraint rows over variable indices.
    rows: Vec<Vec<(usize, f64)>>,
}

impl Problem {
    fn new(c: &SampleCounts, support: &StateSet, generators: &[Imset]) -> Self {
        let d = c.dim();
        let bottom = support.bottom().expect("nonempty sample").bits();
        let vars: Vec<u32> = support.masks().filter(|&m| m != bottom).collect();
        let mut index = vec![usize::MAX; 1 << d];
        for (k, &m) in vars.iter().enumerate() {
            index[m as usize] = k;
        }
        let n = c.n() as f64;
        let tbar = DVector::from_iterator(vars.len(), vars.iter().map(|&m| c.count(m) as f64 / n));
        let rows = generators
            .iter()
            .map(|u| {
                u.entries()
                    .filter(|&(m, _)| m != bottom)
                    .map(|(m, w)| (index[m as usize], w as f64))
                    .collect()
            })
            .collect();
        Problem { vars, bottom, tbar, rows }
    }

    fn nv(&self) -> usize {
        self.vars.len()
    }

    fn slacks(&self, th: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| r.iter().map(|&(k, w)| w * th[k]).sum()),
        )
    }

    /// `(A(θ), p over the variables)`.
    fn partition(&self, th: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut logits: Vec<f64> = th.iter().copied().collect();
        logits.push(0.0);
        let a = log_sum_exp(&logits);
        (a, th.map(|t| (t - a).exp()))
    }

    fn objective(&self, th: &DVector<f64>) -> f64 {
        self.partition(th).0 - self.tbar.dot(th)
    }

    fn hessian_f(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut h = -(p * p.transpose());
        for k in 0..p.len() {
            h[(k, k)] += p[k];
        }
        h
    }

    fn table(&self, d: usize, th: &DVector<f64>) -> ProbTable {
        let (a, p) = self.partition(th);
        let mut values = vec![0.0; 1 << d];
        values[self.bottom as usize] = (-a).exp();
        for (k, &m) in self.vars.iter().enumerate() {
            values[m as usize] = p[k];
        }
        ProbTable::from_raw(d, values)
    }

    fn dense_theta(&self, d: usize, th: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; 1 << d];
        out[self.bottom as usize] = 0.0;
        for (k, &m) in self.vars.iter().enumerate() {
            out[m as usize] = th[k];
        }
        out
    }
}

fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(g));
    }
    let scale = (0..h.nrows()).map(|k| h[(k, k)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 1e-14 * scale;
    for _ in 0..12 {
        let mut hr = h.clone();
        for k in 0..h.nrows() {
            hr[(k, k)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            return Some(ch.solve(g));
        }
        ridge *= 100.0;
    }
    None
}

/// Newton centering on `t f(θ) - Σ log s_k(θ)`; returns the step count.
fn center(pb: &Problem, th: &mut DVector<f64>, t: f64) -> Result<usize> {
    let phi = |th: &DVector<f64>| -> f64 {
        let s = pb.slacks(th);
        if s.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        t * pb.objective(th) - s.iter().map(|v| v.ln()).sum::<f64>()
    };
    let mut steps = 0;
    for _ in 0..200 {
        let s = pb.slacks(th);
        let (_, p) = pb.partition(th);
        let mut grad = (&p - &pb.tbar) * t;
        let mut hess = pb.hessian_f(&p) * t;
        for (r, &sk) in pb.rows.iter().zip(s.iter()) {
            let inv = 1.0 / sk;
            for &(a, wa) in r {
                grad[a] -= wa * inv;
                for &(b, wb) in r {
                    hess[(a, b)] += wa * wb * inv * inv;
                }
            }
        }
        let dir = solve_spd(&hess, &(-&grad)).ok_or_else(|| Error::Numerical("singular barrier Hessian".into()))?;
        let dec = -grad.dot(&dir);
        steps += 1;
        if dec / 2.0 < 1e-14 {
            break;
        }
        let f0 = phi(th);
        let mut step = 1.0;
        loop {
            let cand = &*th + &dir * step;
            let fc = phi(&cand);
            if fc <= f0 - 0.25 * step * dec {
                *th = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(steps);
            }
        }
    }
    Ok(steps)
}

/// Orthonormal basis of `{θ : G_A θ = 0}`.
fn null_space(pb: &Problem, active: &[usize]) -> DMatrix<f64> {
    let nv = pb.nv();
    if active.is_empty() {
        return DMatrix::identity(nv, nv);
    }
    let mut gtg = DMatrix::<f64>::zeros(nv, nv);
    for &k in active {
        let r = &pb.rows[k];
        for &(a, wa) in r {
            for &(b, wb) in r {
                gtg[(a, b)] += wa * wb;
            }
        }
    }
    let eig = gtg.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m: f64, v: &f64| m.max(v.abs())).max(1.0);
    let cols: Vec<usize> = (0..nv).filter(|&k| eig.eigenvalues[k].abs() < 1e-9 * top).collect();
    eig.eigenvectors.select_columns(&cols)
}

/// Minimizes the objective on the face `G_A θ = 0` starting from `th`.
fn polish(pb: &Problem, th: &DVector<f64>, active: &[usize]) -> Option<DVector<f64>> {
    let nb = null_space(pb, active);
    if nb.ncols() == 0 {
        return Some(DVector::zeros(pb.nv()));
    }
    let mut z = nb.transpose() * th;
    for _ in 0..100 {
        let x = &nb * &z;
        let (_, p) = pb.partition(&x);
        let g = nb.transpose() * (&p - &pb.tbar);
        let h = nb.transpose() * pb.hessian_f(&p) * &nb;
        let dir = solve_spd(&h, &(-&g))?;
        let dec = -g.dot(&dir);
        if !dec.is_finite() {
            return None;
        }
        if dec < 1e-28 {
            return Some(x);
        }
        let f0 = pb.objective(&x);
        let mut step = 1.0;
        loop {
            let cand = &z + &dir * step;
            if pb.objective(&(&nb * &cand)) <= f0 - 0.25 * step * dec {
                z = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                return Some(&nb * &z);
            }
        }
    }
    Some(&nb * &z)
}

/// MLE over binary MTP2 distributions with default controls.
pub fn solve_general(c: &SampleCounts, tol: &Tolerances) -> Result<GeneralFit> {
    solve_general_with(c, &GeneralOptions { tol: *tol, ..Default::default() })
}

pub fn solve_general_with(c: &SampleCounts, opts: &GeneralOptions) -> Result<GeneralFit> {
    let d = c.dim();
    if d > GENERAL_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: d, cap: GENERAL_MAX_DIM });
    }
    let support = lattice_closure(&c.support());
    let generators = if support.is_full() { elementary_imsets(d) } else { lattice_pair_imsets(&support) };
    let pb = Problem::new(c, &support, &generators);
    let finish = |th: &DVector<f64>, outer: usize, steps: usize| -> Result<GeneralFit> {
        let table = pb.table(d, th);
        let certificate = certify_general(&table, c, &opts.tol)?;
        let converged = certificate.pass();
        Ok(GeneralFit {
            log_likelihood: log_likelihood(&table, c),
            theta: pb.dense_theta(d, th),
            table,
            support: support.clone(),
            certificate,
            outer_iterations: outer,
            newton_steps: steps,
            converged,
        })
    };
    if pb.nv() == 0 {
        return finish(&DVector::zeros(0), 0, 0);
    }

    let pop = |m: u32| m.count_ones() as f64;
    let base = pop(pb.bottom).powi(2);
    let mut th = DVector::from_iterator(pb.nv(), pb.vars.iter().map(|&m| opts.delta * (pop(m).powi(2) - base)));
    let m = pb.rows.len().max(1) as f64;
    let mut t = 1.0;
    let mut steps = 0;
    let mut best: Option<DVector<f64>> = None;
    for outer in 1..=opts.max_outer {
        steps += center(&pb, &mut th, t)?;
        if m / t < 1e-3 {
            let s = pb.slacks(&th);
            let active: Vec<usize> = (0..s.len()).filter(|&k| 1.0 / (t * s[k]) > s[k]).collect();
            if let Some(cand) = polish(&pb, &th, &active) {
                let feasible = pb.slacks(&cand).iter().all(|&v| v >= -opts.tol.primal);
                if feasible {
                    let fit = finish(&cand, outer, steps)?;
                    if fit.converged {
                        return Ok(fit);
                    }
                    best = Some(cand);
                }
            }
        }
        if m / t < 1e-14 {
            return finish(best.as_ref().unwrap_or(&th), outer, steps);
        }
        t *= 2.0;
    }
    finish(best.as_ref().unwrap_or(&th), opts.max_outer, steps)
}

/// Pair sign patterns absent from the sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceReport {
    pub exists: bool,
    /// `(i, j)` with 0-indexed `i < j` whose margin lacks the required
    /// patterns.
    pub offending: Vec<(usize, usize)>,
    /// Closure-based criterion, when it was evaluated.
    pub closure: Option<bool>,
}

/// Dimension up to which the closure cross-check is evaluated.
pub const CLOSURE_CHECK_MAX_DIM: usize = 12;

/// Existence of the MLE with full support in the general family: every
/// pair margin shows both `(1,-1)` and `(-1,1)`.
pub fn existence_general(c: &SampleCounts) -> ExistenceReport {
    let d = c.dim();
    let mut offending = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if c.pair_count(i, j, 1, -1) == 0 || c.pair_count(i, j, -1, 1) == 0 {
                offending.push((i, j));
            }
        }
    }
    let exists = offending.is_empty();
    let closure = (d <= CLOSURE_CHECK_MAX_DIM).then(|| lattice_closure(&c.support()).is_full());
    ExistenceReport { exists, offending, closure }
}

/// Existence in the palindromic family: every pair disagrees somewhere.
pub fn existence_symmetric(c: &SampleCounts) -> ExistenceReport {
    let d = c.dim();
    let mut offending = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if c.pair_count(i, j, 1, -1) + c.pair_count(i, j, -1, 1) == 0 {
                offending.push((i, j));
            }
        }
    }
    let exists = offending.is_empty();
    let closure = (d <= CLOSURE_CHECK_MAX_DIM).then(|| algebra_closure(&c.support()).is_full());
    ExistenceReport { exists, offending, closure }
}

pub fn mle_exists_general(c: &SampleCounts) -> bool {
    let r = existence_general(c);
    debug_assert!(r.closure.is_none_or(|x| x == r.exists));
    r.exists
}

pub fn mle_exists_symmetric(c: &SampleCounts) -> bool {
    let r = existence_symmetric(c);
    debug_assert!(r.closure.is_none_or(|x| x == r.exists));
    r.exists
}
