//! Dense probability tables over `{-1, 1}^d`, sample counts and moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::states::{self, ensure_dim, full_mask, state_count, State, StateSet};

/// Default tolerance on `p(x∧y)p(x∨y) - p(x)p(y)`.
pub const DEFAULT_MTP2_TOL: f64 = 1e-9;

const SUM_TOL: f64 = 1e-12;

/// A probability mass function over `{-1, 1}^d`, indexed by state mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    dim: usize,
    values: Vec<f64>,
}

impl ProbTable {
    /// Validates nonnegativity and unit mass.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_cap(dim, values, states::DEFAULT_MAX_DIM)
    }

    pub fn with_cap(dim: usize, values: Vec<f64>, cap: usize) -> Result<Self> {
        ensure_dim(dim, cap)?;
        if values.len() != state_count(dim) {
            return Err(Error::DimensionMismatch {
                expected: state_count(dim),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {v} is not a nonnegative number")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SUM_TOL * (1.0 + values.len() as f64).sqrt() {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(ProbTable { dim, values })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(dim: usize, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::with_cap(dim, weights, states::HARD_MAX_DIM)
    }

    /// Values listed in graded lattice order (see [`states::lattice_order`]).
    pub fn from_lattice_order(dim: usize, ordered: &[f64]) -> Result<Self> {
        let order = states::lattice_order(dim);
        if ordered.len() != order.len() {
            return Err(Error::DimensionMismatch { expected: order.len(), found: ordered.len() });
        }
        let mut values = vec![0.0; order.len()];
        for (&m, &v) in order.iter().zip(ordered) {
            values[m as usize] = v;
        }
        Self::from_weights(dim, values)
    }

    pub fn to_lattice_order(&self) -> Vec<f64> {
        states::lattice_order(self.dim).into_iter().map(|m| self.values[m as usize]).collect()
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        ensure_dim(dim, states::DEFAULT_MAX_DIM)?;
        let n = state_count(dim);
        Ok(ProbTable { dim, values: vec![1.0 / n as f64; n] })
    }

    /// The empirical distribution `n(x) / n`.
    pub fn empirical(c: &SampleCounts) -> Self {
        let n = c.n as f64;
        ProbTable { dim: c.dim, values: c.counts.iter().map(|&k| k as f64 / n).collect() }
    }

    pub(crate) fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), state_count(dim));
        ProbTable { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn prob(&self, s: State) -> f64 {
        self.values[s.index()]
    }

    #[inline]
    pub fn at(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn support(&self) -> StateSet {
        let masks = (0..self.values.len() as u32).filter(|&m| self.values[m as usize] > 0.0);
        StateSet::from_masks(self.dim, masks).expect("masks in range")
    }

    pub fn has_full_support(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn zero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v <= 0.0).count()
    }

    pub(crate) fn renormalize(&mut self) {
        let total: f64 = self.values.iter().sum();
        self.values.iter_mut().for_each(|v| *v /= total);
    }

    /// Max-norm distance between two tables of equal dimension.
    pub fn max_abs_diff(&self, other: &ProbTable) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Marginal over the listed 0-indexed variables, re-indexed in the
    /// given order.
    pub fn marginal(&self, vars: &[usize]) -> Result<ProbTable> {
        self.check_vars(vars)?;
        let k = vars.len();
        let mut out = vec![0.0; state_count(k)];
        for (m, &v) in self.values.iter().enumerate() {
            out[project(m as u32, vars) as usize] += v;
        }
        Ok(ProbTable { dim: k, values: out })
    }

    /// Conditional distribution of the remaining variables given
    /// `X_v = s` for each `(v, s)` in `fixed`; remaining variables keep
    /// their relative order. Errors when the conditioning event is null.
    pub fn conditional(&self, fixed: &[(usize, i8)]) -> Result<ProbTable> {
        let fixed_vars: Vec<usize> = fixed.iter().map(|&(v, _)| v).collect();
        self.check_vars(&fixed_vars)?;
        let free: Vec<usize> = (0..self.dim).filter(|v| !fixed_vars.contains(v)).collect();
        if free.is_empty() {
            return Err(Error::DimensionTooSmall { dim: 0, min: 1 });
        }
        let mut want = 0u32;
        let mut mask = 0u32;
        for &(v, s) in fixed {
            mask |= 1 << v;
            if s == 1 {
                want |= 1 << v;
            }
        }
        let mut out = vec![0.0; state_count(free.len())];
        for (m, &v) in self.values.iter().enumerate() {
            if m as u32 & mask == want {
                out[project(m as u32, &free) as usize] += v;
            }
        }
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbability { what: "conditioning event" });
        }
        out.iter_mut().for_each(|v| *v /= total);
        Ok(ProbTable { dim: free.len(), values: out })
    }

    fn check_vars(&self, vars: &[usize]) -> Result<()> {
        for (k, &v) in vars.iter().enumerate() {
            if v >= self.dim {
                return Err(Error::IndexOutOfRange { index: v, dim: self.dim });
            }
            if vars[..k].contains(&v) {
                return Err(Error::SameIndex(v, v));
            }
        }
        Ok(())
    }
}

fn project(m: u32, vars: &[usize]) -> u32 {
    vars.iter().enumerate().fold(0u32, |acc, (k, &v)| acc | ((m >> v & 1) << k))
}

/// Observation counts `n(x)` over `{-1, 1}^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    dim: usize,
    counts: Vec<u64>,
    n: u64,
}

impl SampleCounts {
    pub fn new(dim: usize, counts: Vec<u64>) -> Result<Self> {
        ensure_dim(dim, states::DEFAULT_MAX_DIM)?;
        if counts.len() != state_count(dim) {
            return Err(Error::DimensionMismatch {
                expected: state_count(dim),
                found: counts.len(),
            });
        }
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidDistribution("count total overflows".into()))?;
        if n == 0 {
            return Err(Error::EmptySample);
        }
        Ok(SampleCounts { dim, counts, n })
    }

    pub fn from_states(dim: usize, sample: impl IntoIterator<Item = State>) -> Result<Self> {
        ensure_dim(dim, states::DEFAULT_MAX_DIM)?;
        let mut counts = vec![0u64; state_count(dim)];
        for s in sample {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
            counts[s.index()] += 1;
        }
        Self::new(dim, counts)
    }

    /// Counts listed in graded lattice order.
    pub fn from_lattice_order(dim: usize, ordered: &[u64]) -> Result<Self> {
        let order = states::lattice_order(dim);
        if ordered.len() != order.len() {
            return Err(Error::DimensionMismatch { expected: order.len(), found: ordered.len() });
        }
        let mut counts = vec![0u64; order.len()];
        for (&m, &c) in order.iter().zip(ordered) {
            counts[m as usize] = c;
        }
        Self::new(dim, counts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn count(&self, mask: u32) -> u64 {
        self.counts[mask as usize]
    }

    /// Observed states (the sample support `U`).
    pub fn support(&self) -> StateSet {
        let masks = (0..self.counts.len() as u32).filter(|&m| self.counts[m as usize] > 0);
        StateSet::from_masks(self.dim, masks).expect("masks in range")
    }

    /// Number of observations with `(x_i, x_j) = (si, sj)`.
    pub fn pair_count(&self, i: usize, j: usize, si: i8, sj: i8) -> u64 {
        let want = (u32::from(si == 1) << i) | (u32::from(sj == 1) << j);
        let mask = 1u32 << i | 1u32 << j;
        self.counts
            .iter()
            .enumerate()
            .filter(|(m, _)| *m as u32 & mask == want)
            .map(|(_, &c)| c)
            .sum()
    }

    /// `n · Σ x_i x_j - (Σ x_i)(Σ x_j)` in exact integer arithmetic; its
    /// sign is the sign of the sample covariance `S_ij`.
    pub fn scaled_covariance(&self, i: usize, j: usize) -> i128 {
        let (mut si, mut sj, mut sij) = (0i128, 0i128, 0i128);
        for (m, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as i128;
            let xi = if m >> i & 1 == 1 { 1 } else { -1 };
            let xj = if m >> j & 1 == 1 { 1 } else { -1 };
            si += c * xi;
            sj += c * xj;
            sij += c * xi * xj;
        }
        self.n as i128 * sij - si * sj
    }

    /// `Σ_v x_v` over the sample for each variable.
    pub fn coordinate_sums(&self) -> Vec<i128> {
        (0..self.dim)
            .map(|v| {
                self.counts
                    .iter()
                    .enumerate()
                    .map(|(m, &c)| if m >> v & 1 == 1 { c as i128 } else { -(c as i128) })
                    .sum()
            })
            .collect()
    }
}

/// First and second moments `(x̄, M)` of a sample or of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub second: DMatrix<f64>,
}

impl Moments {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `M - x̄ x̄ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.second - &self.mean * self.mean.transpose()
    }

    /// Moments `(μ, Ξ)` of a table.
    pub fn from_table(p: &ProbTable) -> Moments {
        let d = p.dim();
        let mut mean = DVector::zeros(d);
        let mut second = DMatrix::zeros(d, d);
        for i in 0..d {
            let mi = 1usize << i;
            let mut acc = 0.0;
            for (m, &v) in p.values().iter().enumerate() {
                acc += if m & mi != 0 { v } else { -v };
            }
            mean[i] = acc;
            second[(i, i)] = 1.0;
            for j in i + 1..d {
                let mj = 1usize << j;
                let mut acc = 0.0;
                for (m, &v) in p.values().iter().enumerate() {
                    let same = (m & mi != 0) == (m & mj != 0);
                    acc += if same { v } else { -v };
                }
                second[(i, j)] = acc;
                second[(j, i)] = acc;
            }
        }
        Moments { mean, second }
    }
}

pub fn moments_from_counts(c: &SampleCounts) -> Moments {
    let d = c.dim();
    let n = c.n() as f64;
    let sums = c.coordinate_sums();
    let mean = DVector::from_iterator(d, sums.iter().map(|&s| s as f64 / n));
    let mut second = DMatrix::identity(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let same: i128 = c
                .counts()
                .iter()
                .enumerate()
                .map(|(m, &k)| {
                    let k = k as i128;
                    if (m >> i & 1) == (m >> j & 1) {
                        k
                    } else {
                        -k
                    }
                })
                .sum();
            let v = same as f64 / n;
            second[(i, j)] = v;
            second[(j, i)] = v;
        }
    }
    Moments { mean, second }
}

/// A distribution (or, for the clamped update, a signed weighting) of a
/// pair `(X_i, X_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMargin {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairMargin {
    /// Entry for `(x_i, x_j)`.
    #[inline]
    pub fn get(&self, xi: i8, xj: i8) -> f64 {
        match (xi == 1, xj == 1) {
            (true, true) => self.pp,
            (true, false) => self.pm,
            (false, true) => self.mp,
            (false, false) => self.mm,
        }
    }

    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn is_positive(&self) -> bool {
        self.pp > 0.0 && self.pm > 0.0 && self.mp > 0.0 && self.mm > 0.0
    }

    /// `E[X_i X_j]`.
    pub fn second_moment(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }

    /// `(E X_i, E X_j)`.
    pub fn means(&self) -> (f64, f64) {
        (self.pp + self.pm - self.mp - self.mm, self.pp + self.mp - self.pm - self.mm)
    }

    /// Log cross-product ratio `log(pp·mm / (pm·mp))`.
    pub fn log_odds_ratio(&self) -> f64 {
        (self.pp * self.mm / (self.pm * self.mp)).ln()
    }

    /// Entrywise quotient `self / other`.
    pub fn ratio(&self, other: &PairMargin) -> PairMargin {
        PairMargin {
            pp: self.pp / other.pp,
            pm: self.pm / other.pm,
            mp: self.mp / other.mp,
            mm: self.mm / other.mm,
        }
    }

    /// Array indexed by `(bit_i) | (bit_j) << 1`.
    #[inline]
    pub(crate) fn by_bits(&self) -> [f64; 4] {
        [self.mm, self.pm, self.mp, self.pp]
    }
}

/// Marginal distribution of `(X_i, X_j)` under `p`.
pub fn pair_margin(p: &ProbTable, i: usize, j: usize) -> Result<PairMargin> {
    check_pair(p.dim(), i, j)?;
    let mut acc = [0.0f64; 4];
    for (m, &v) in p.values().iter().enumerate() {
        acc[(m >> i & 1) | (m >> j & 1) << 1] += v;
    }
    Ok(PairMargin { mm: acc[0], pm: acc[1], mp: acc[2], pp: acc[3] })
}

pub(crate) fn check_pair(dim: usize, i: usize, j: usize) -> Result<()> {
    for &k in &[i, j] {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
    }
    if i == j {
        return Err(Error::SameIndex(i, j));
    }
    Ok(())
}

/// Empirical distribution of `(X_i, X_j)` recovered from `(x̄, M)`.
pub fn empirical_pair(m: &Moments, i: usize, j: usize) -> Result<PairMargin> {
    check_pair(m.dim(), i, j)?;
    let (a, b, c) = (m.mean[i], m.mean[j], m.second[(i, j)]);
    let mut e = PairMargin {
        pp: (1.0 + a + b + c) / 4.0,
        pm: (1.0 + a - b - c) / 4.0,
        mp: (1.0 - a + b - c) / 4.0,
        mm: (1.0 - a - b + c) / 4.0,
    };
    for v in [&mut e.pp, &mut e.pm, &mut e.mp, &mut e.mm] {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(Error::InconsistentMoments(format!(
                    "pair ({}, {}) has a negative cell {v}",
                    i + 1,
                    j + 1
                )));
            }
            *v = 0.0;
        }
    }
    Ok(e)
}

/// A pair `x, y` with `p(x∧y)p(x∨y) < p(x)p(y) - tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mtp2Violation {
    pub x: State,
    pub y: State,
    /// `p(x∧y)p(x∨y) - p(x)p(y)` (negative).
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mtp2Check {
    pub holds: bool,
    pub violations: Vec<Mtp2Violation>,
}

/// Checks the MTP2 inequalities. With full support only elementary pairs
/// are checked; otherwise every incomparable pair of support points is.
pub fn is_mtp2(p: &ProbTable, tol: f64) -> Mtp2Check {
    let d = p.dim();
    let mut violations = Vec::new();
    let mut check = |x: u32, y: u32| {
        let gap = p.at(x & y) * p.at(x | y) - p.at(x) * p.at(y);
        if gap < -tol {
            violations.push(Mtp2Violation {
                x: State::new(x, d).expect("in range"),
                y: State::new(y, d).expect("in range"),
                gap,
            });
        }
    };
    if d >= 2 && p.has_full_support() {
        for pair in states::elementary_pairs(d).expect("d >= 2") {
            check(pair.x.bits(), pair.y.bits());
        }
    } else {
        let supp: Vec<u32> = p.support().masks().collect();
        for (k, &x) in supp.iter().enumerate() {
            for &y in &supp[k + 1..] {
                if x & !y != 0 && y & !x != 0 {
                    check(x, y);
                }
            }
        }
    }
    Mtp2Check { holds: violations.is_empty(), violations }
}

pub fn support_is_lattice(p: &ProbTable) -> bool {
    p.support().is_lattice()
}

/// True iff every pair margin has four positive cells.
pub fn pair_support_full(p: &ProbTable) -> bool {
    let d = p.dim();
    (0..d).all(|i| (i + 1..d).all(|j| pair_margin(p, i, j).expect("valid pair").is_positive()))
}

/// `Σ_x n(x) log p(x)`; `-∞` when a count falls outside the support.
pub fn log_likelihood(p: &ProbTable, c: &SampleCounts) -> f64 {
    assert_eq!(p.dim(), c.dim(), "dimension mismatch");
    let mut ll = 0.0;
    for (&k, &v) in c.counts().iter().zip(p.values()) {
        if k == 0 {
            continue;
        }
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += k as f64 * v.ln();
    }
    ll
}

/// `n^s(x) = n(x) + n(-x)`.
pub fn symmetrize(c: &SampleCounts) -> SampleCounts {
    let top = full_mask(c.dim()) as usize;
    let counts = (0..c.counts().len()).map(|m| c.counts()[m] + c.counts()[!m & top]).collect();
    SampleCounts::new(c.dim(), counts).expect("nonempty")
}

/// Product distribution `p(x) = 2^-d ∏ (1 + x_v μ_v)` with the given means.
pub fn independence_table(mu: &[f64]) -> Result<ProbTable> {
    let d = mu.len();
    ensure_dim(d, states::DEFAULT_MAX_DIM)?;
    for (v, &m) in mu.iter().enumerate() {
        if m.is_nan() || m.abs() >= 1.0 {
            return Err(Error::DegenerateMean { var: v, mean: m });
        }
    }
    let mut values = vec![1.0f64; state_count(d)];
    for (v, &m) in mu.iter().enumerate() {
        let plus = (1.0 + m) / 2.0;
        let minus = (1.0 - m) / 2.0;
        for (s, val) in values.iter_mut().enumerate() {
            *val *= if s >> v & 1 == 1 { plus } else { minus };
        }
    }
    Ok(ProbTable { dim: d, values })
}
