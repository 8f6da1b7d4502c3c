//! Optimality certificates: primal feasibility, dual feasibility and
//! complementary slackness, for the Ising fit on a graph and for the
//! unrestricted binary MTP2 family.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ips::FitResult;
use crate::ising::{self, Graph};
use crate::nnls::nnls;
use crate::states::{elementary_pairs, StateSet};
use crate::tables::{Moments, ProbTable, SampleCounts};

/// Dimension cap for [`certify_general`].
pub const CERTIFY_MAX_DIM: usize = 10;

/// Sparse integer function on the state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Imset {
    dim: usize,
    entries: BTreeMap<u32, i64>,
}

impl Imset {
    pub fn zero(dim: usize) -> Self {
        Imset { dim, entries: BTreeMap::new() }
    }

    /// `δ(x∧y) + δ(x∨y) - δ(x) - δ(y)`.
    pub fn pair(dim: usize, x: u32, y: u32) -> Self {
        let mut u = Imset::zero(dim);
        u.add(x & y, 1);
        u.add(x | y, 1);
        u.add(x, -1);
        u.add(y, -1);
        u
    }

    /// `u_{i,j|A}` for 0-indexed `i < j` and context mask `a`.
    pub fn elementary(dim: usize, i: usize, j: usize, a: u32) -> Self {
        Imset::pair(dim, a | 1 << i, a | 1 << j)
    }

    pub fn add(&mut self, mask: u32, v: i64) {
        let e = self.entries.entry(mask).or_insert(0);
        *e += v;
        if *e == 0 {
            self.entries.remove(&mask);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, mask: u32) -> i64 {
        self.entries.get(&mask).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.entries.iter().map(|(&m, &v)| (m, v))
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    pub fn sum(&self) -> i64 {
        self.entries.values().sum()
    }

    /// `⟨θ, u⟩` for a dense `θ` indexed by mask.
    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.entries.iter().map(|(&m, &v)| v as f64 * theta[m as usize]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.dim];
        for (&m, &v) in &self.entries {
            out[m as usize] = v as f64;
        }
        out
    }
}

/// One imset per elementary pair, in the order of [`elementary_pairs`].
pub fn elementary_imsets(dim: usize) -> Vec<Imset> {
    if dim < 2 {
        return Vec::new();
    }
    elementary_pairs(dim)
        .expect("dim >= 2")
        .into_iter()
        .map(|e| Imset::pair(dim, e.x.bits(), e.y.bits()))
        .collect()
}

/// Imsets of all incomparable pairs inside a lattice `l`.
pub fn lattice_pair_imsets(l: &StateSet) -> Vec<Imset> {
    let masks: Vec<u32> = l.masks().collect();
    let mut out = Vec::new();
    for (k, &x) in masks.iter().enumerate() {
        for &y in &masks[k + 1..] {
            if x & y != x && x & y != y {
                out.push(Imset::pair(l.dim(), x, y));
            }
        }
    }
    out
}

/// `⟨θ, u⟩` for every elementary imset; `θ` is dense over all states.
pub fn supermodularity_values(dim: usize, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != 1 << dim {
        return Err(Error::DimensionMismatch { expected: 1 << dim, found: theta.len() });
    }
    Ok(elementary_imsets(dim).iter().map(|u| u.dot(theta)).collect())
}

/// `θ(x) = log p(x) - log p(bottom)` on the support, `-∞` elsewhere.
pub fn canonical_theta(p: &ProbTable) -> Vec<f64> {
    let base = p.values().iter().find(|&&v| v > 0.0).copied().unwrap_or(1.0);
    let bottom = p.support().bottom().map(|s| p.at(s.bits())).unwrap_or(base);
    let lb = bottom.ln();
    p.values().iter().map(|&v| if v > 0.0 { v.ln() - lb } else { f64::NEG_INFINITY }).collect()
}

/// Nonnegative decomposition of `v` over a generator set.
#[derive(Debug, Clone)]
pub struct ConeMembership {
    pub coefficients: Vec<f64>,
    /// Euclidean distance from `v` to the cone.
    pub residual: f64,
}

impl ConeMembership {
    pub fn is_member(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

/// Projects `v` onto the cone generated by the elementary imsets.
pub fn cone_membership(dim: usize, v: &[f64]) -> Result<ConeMembership> {
    cone_membership_with(dim, v, &elementary_imsets(dim), None)
}

/// Cone projection against arbitrary generators, optionally restricted to
/// the coordinates in `rows`.
pub fn cone_membership_with(
    dim: usize,
    v: &[f64],
    generators: &[Imset],
    rows: Option<&[u32]>,
) -> Result<ConeMembership> {
    if v.len() != 1 << dim {
        return Err(Error::DimensionMismatch { expected: 1 << dim, found: v.len() });
    }
    let rows: Vec<u32> = match rows {
        Some(r) => r.to_vec(),
        None => (0..1u32 << dim).collect(),
    };
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&m| v[m as usize]));
    if generators.is_empty() {
        return Ok(ConeMembership { coefficients: Vec::new(), residual: b.norm() });
    }
    let mut pos = vec![usize::MAX; 1 << dim];
    for (k, &m) in rows.iter().enumerate() {
        pos[m as usize] = k;
    }
    let mut a = DMatrix::zeros(rows.len(), generators.len());
    for (c, u) in generators.iter().enumerate() {
        for (m, w) in u.entries() {
            let r = pos[m as usize];
            if r == usize::MAX {
                return Err(Error::InvalidDistribution(format!("generator touches state {m} outside the rows")));
            }
            a[(r, c)] = w as f64;
        }
    }
    let sol = nnls(&a, &b, 20 * generators.len().max(10));
    Ok(ConeMembership { coefficients: sol.x.iter().copied().collect(), residual: sol.residual.norm() })
}

/// Tolerances for the three certificate components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub primal: f64,
    pub dual: f64,
    pub slackness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { primal: 1e-8, dual: 1e-7, slackness: 1e-7 }
    }
}

/// A residual together with its tolerance and verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Residual {
    /// Passes when `value >= -tol`.
    fn lower(value: f64, tol: f64) -> Self {
        Residual { value, tol, pass: value >= -tol }
    }

    /// Passes when `|value| <= tol`.
    fn upper(value: f64, tol: f64) -> Self {
        Residual { value, tol, pass: value.abs() <= tol }
    }
}

/// Which optimality system a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Ising,
    General,
    /// General family restricted to a proper sublattice of states.
    Restricted,
}

#[derive(Debug, Clone)]
pub struct KktCertificate {
    pub kind: CertificateKind,
    /// Most negative constraint value (`min Ĵ` or min supermodularity).
    pub primal: Residual,
    /// Cone residual (general) or minimal moment slack (Ising).
    pub dual: Residual,
    pub slackness: Residual,
    /// Largest mismatch of means and fitted moments.
    pub moment: Residual,
    /// Nonzero cone coefficients for general certificates.
    pub decomposition: Vec<(Imset, f64)>,
}

impl KktCertificate {
    pub fn pass(&self) -> bool {
        self.primal.pass && self.dual.pass && self.slackness.pass && self.moment.pass
    }
}

impl fmt::Display for KktCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |r: &Residual| if r.pass { "pass" } else { "FAIL" };
        writeln!(f, "primal: {:e} ({})", self.primal.value, verdict(&self.primal))?;
        writeln!(f, "dual: {:e} ({})", self.dual.value, verdict(&self.dual))?;
        writeln!(f, "slackness: {:e} ({})", self.slackness.value, verdict(&self.slackness))?;
        write!(f, "moments: {:e} ({})", self.moment.value, verdict(&self.moment))
    }
}

fn mean_mismatch(p: &ProbTable, c: &SampleCounts) -> f64 {
    let n = c.n() as f64;
    let sums = c.coordinate_sums();
    let m = Moments::from_table(p);
    (0..p.dim())
        .map(|v| (m.mean[v] - sums[v] as f64 / n).abs())
        .fold(0.0, f64::max)
}

/// Certificate for a candidate MLE in the unrestricted binary MTP2 family.
///
/// With full support the constraints are the elementary imsets. When the
/// support of `p_hat` is a proper lattice the problem is checked on that
/// lattice, with one constraint per incomparable pair of support states.
pub fn certify_general(p_hat: &ProbTable, c: &SampleCounts, tol: &Tolerances) -> Result<KktCertificate> {
    let d = p_hat.dim();
    if c.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: c.dim() });
    }
    if d > CERTIFY_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: d, cap: CERTIFY_MAX_DIM });
    }
    let support = p_hat.support();
    if !support.is_lattice() {
        return Err(Error::InvalidDistribution("support is not a lattice".into()));
    }
    let sample_support = c.support();
    if !sample_support.is_subset(&support) {
        return Err(Error::NotFullSupport { zeros: p_hat.zero_count() });
    }
    let full = support.is_full();
    let (kind, generators) = if full {
        (CertificateKind::General, elementary_imsets(d))
    } else {
        (CertificateKind::Restricted, lattice_pair_imsets(&support))
    };
    let rows: Vec<u32> = support.masks().collect();
    let theta = canonical_theta(p_hat);
    let theta_on: Vec<f64> = theta.iter().map(|&t| if t.is_finite() { t } else { 0.0 }).collect();

    let primal = generators.iter().map(|u| u.dot(&theta_on)).fold(f64::INFINITY, f64::min);
    let primal = if primal.is_finite() { primal } else { 0.0 };

    let n = c.n() as f64;
    let mut diff = vec![0.0; 1 << d];
    for &m in &rows {
        diff[m as usize] = p_hat.at(m) - c.count(m) as f64 / n;
    }
    let cone = cone_membership_with(d, &diff, &generators, Some(&rows))?;
    let slack: f64 = rows.iter().map(|&m| theta_on[m as usize] * diff[m as usize]).sum();

    let decomposition = generators
        .iter()
        .zip(cone.coefficients.iter())
        .filter(|(_, &w)| w > 1e-14)
        .map(|(u, &w)| (u.clone(), w))
        .collect();

    Ok(KktCertificate {
        kind,
        primal: Residual::lower(primal, tol.primal),
        dual: Residual::upper(cone.residual, tol.dual),
        slackness: Residual::upper(slack.abs(), tol.slackness),
        moment: Residual::upper(mean_mismatch(p_hat, c), tol.dual),
        decomposition,
    })
}

/// Certificate for an Ising fit on `g` against data moments `m`.
pub fn certify_ising(result: &FitResult, m: &Moments, g: &Graph, tol: &Tolerances) -> Result<KktCertificate> {
    certify_ising_parts(&result.params.j, &result.moments(), m, g, tol)
}

/// Certificate for an arbitrary full-support table treated as an Ising fit
/// on `g`.
pub fn certify_ising_table(p: &ProbTable, m: &Moments, g: &Graph, tol: &Tolerances) -> Result<KktCertificate> {
    let extracted = ising::params_from_table(p)?;
    certify_ising_parts(&extracted.params.j, &Moments::from_table(p), m, g, tol)
}

fn certify_ising_parts(
    j_hat: &DMatrix<f64>,
    fitted: &Moments,
    m: &Moments,
    g: &Graph,
    tol: &Tolerances,
) -> Result<KktCertificate> {
    let d = m.dim();
    if fitted.dim() != d || g.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: g.dim() });
    }
    let sigma_hat = fitted.covariance();
    let s = m.covariance();
    let mean_gap = (0..d).map(|v| (fitted.mean[v] - m.mean[v]).abs()).fold(0.0, f64::max);

    let mut primal = f64::INFINITY;
    let mut moment_slack = f64::INFINITY;
    let mut slack = 0.0f64;
    let mut fitted_gap = 0.0f64;
    for (u, v) in g.edges() {
        let jv = j_hat[(u, v)];
        let gap = sigma_hat[(u, v)] - s[(u, v)];
        primal = primal.min(jv);
        moment_slack = moment_slack.min(gap);
        slack = slack.max((gap * jv).abs());
        if jv > tol.primal {
            fitted_gap = fitted_gap.max(gap.abs());
        }
    }
    if g.edge_count() == 0 {
        primal = 0.0;
        moment_slack = 0.0;
    }
    let dual = (-mean_gap).min(moment_slack);
    Ok(KktCertificate {
        kind: CertificateKind::Ising,
        primal: Residual::lower(primal, tol.primal),
        dual: Residual::lower(dual, tol.dual),
        slackness: Residual::upper(slack, tol.slackness),
        moment: Residual::upper(mean_gap.max(fitted_gap), tol.dual),
        decomposition: Vec::new(),
    })
}
