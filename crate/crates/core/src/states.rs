//! The state space `{-1, 1}^d` as a Boolean lattice.
//!
//! A state is stored as a `d`-bit mask with bit `i` set iff coordinate `i`
//! equals `+1`. Under this encoding the coordinatewise minimum and maximum
//! are bitwise AND and OR, and the global sign flip is the complement
//! within the low `d` bits.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on `d` for anything that allocates a dense `2^d` table.
pub const DEFAULT_MAX_DIM: usize = 20;

/// Largest dimension representable by the `u32` mask.
pub const HARD_MAX_DIM: usize = 30;

/// Checks `1 <= dim <= cap` (and `cap` against the mask width).
pub fn ensure_dim(dim: usize, cap: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::DimensionTooSmall { dim, min: 1 });
    }
    let cap = cap.min(HARD_MAX_DIM);
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap });
    }
    Ok(())
}

/// Number of states, `2^d`.
#[inline]
pub fn state_count(dim: usize) -> usize {
    1usize << dim
}

#[inline]
pub(crate) fn full_mask(dim: usize) -> u32 {
    if dim >= 32 {
        u32::MAX
    } else {
        ((1u64 << dim) - 1) as u32
    }
}

/// A point of `{-1, 1}^d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    bits: u32,
    dim: u8,
}

impl State {
    pub fn new(bits: u32, dim: usize) -> Result<Self> {
        ensure_dim(dim, HARD_MAX_DIM)?;
        if bits & !full_mask(dim) != 0 {
            return Err(Error::InvalidDistribution(format!(
                "mask {bits} does not fit in {dim} bits"
            )));
        }
        Ok(State { bits, dim: dim as u8 })
    }

    /// Builds a state from a slice of `±1` values.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut bits = 0u32;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => {
                    return Err(Error::InvalidDistribution(format!(
                        "coordinate {} has value {other}, expected -1 or 1",
                        i + 1
                    )))
                }
            }
        }
        State::new(bits, signs.len())
    }

    /// The all-`-1` state (the empty set).
    pub fn bottom(dim: usize) -> Self {
        State { bits: 0, dim: dim as u8 }
    }

    /// The all-`+1` state.
    pub fn top(dim: usize) -> Self {
        State { bits: full_mask(dim), dim: dim as u8 }
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn index(self) -> usize {
        self.bits as usize
    }

    /// Coordinate `i` (0-indexed) as `±1`.
    #[inline]
    pub fn sign(self, i: usize) -> i8 {
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn signs(self) -> Vec<i8> {
        (0..self.dim()).map(|i| self.sign(i)).collect()
    }

    /// `x ↦ -x`.
    #[inline]
    pub fn complement(self) -> Self {
        State { bits: !self.bits & full_mask(self.dim()), dim: self.dim }
    }

    pub fn meet(self, other: State) -> Result<State> {
        self.same_dim(other)?;
        Ok(State { bits: self.bits & other.bits, dim: self.dim })
    }

    pub fn join(self, other: State) -> Result<State> {
        self.same_dim(other)?;
        Ok(State { bits: self.bits | other.bits, dim: self.dim })
    }

    /// `self <= other` coordinatewise.
    pub fn le(self, other: State) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn comparable(self, other: State) -> bool {
        self.le(other) || other.le(self)
    }

    /// The 1-indexed subset `{i : x_i = +1}`.
    pub fn subset(self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.bits >> i & 1 == 1).map(|i| i + 1).collect()
    }

    fn same_dim(self, other: State) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State{self}")
    }
}

impl fmt::Display for State {
    /// Prints the sign vector, e.g. `(1,-1,-1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.sign(i))?;
        }
        write!(f, ")")
    }
}

/// A set of states of a common dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSet {
    dim: usize,
    members: BTreeSet<u32>,
}

impl StateSet {
    pub fn empty(dim: usize) -> Self {
        StateSet { dim, members: BTreeSet::new() }
    }

    pub fn full(dim: usize) -> Self {
        StateSet { dim, members: (0..state_count(dim) as u32).collect() }
    }

    pub fn from_states(dim: usize, states: impl IntoIterator<Item = State>) -> Result<Self> {
        let mut set = StateSet::empty(dim);
        for s in states {
            set.insert(s)?;
        }
        Ok(set)
    }

    pub fn from_masks(dim: usize, masks: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut set = StateSet::empty(dim);
        for m in masks {
            set.insert(State::new(m, dim)?)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, s: State) -> Result<bool> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: s.dim() });
        }
        Ok(self.members.insert(s.bits))
    }

    pub fn contains(&self, s: State) -> bool {
        s.dim() == self.dim && self.members.contains(&s.bits)
    }

    pub fn contains_mask(&self, m: u32) -> bool {
        self.members.contains(&m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == state_count(self.dim)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn masks(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.iter().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = State> + '_ {
        let dim = self.dim as u8;
        self.members.iter().map(move |&bits| State { bits, dim })
    }

    /// True when closed under meet and join.
    pub fn is_lattice(&self) -> bool {
        let v: Vec<u32> = self.masks().collect();
        v.iter().enumerate().all(|(k, &a)| {
            v[k + 1..]
                .iter()
                .all(|&b| self.members.contains(&(a & b)) && self.members.contains(&(a | b)))
        })
    }

    /// The meet of all members, if nonempty.
    pub fn bottom(&self) -> Option<State> {
        let mut it = self.masks();
        let first = it.next()?;
        let bits = it.fold(first, |acc, m| acc & m);
        Some(State { bits, dim: self.dim as u8 })
    }
}

pub fn meet(a: State, b: State) -> Result<State> {
    a.meet(b)
}

pub fn join(a: State, b: State) -> Result<State> {
    a.join(b)
}

fn closure_with(u: &StateSet, with_complement: bool) -> StateSet {
    let dim = u.dim;
    let top = full_mask(dim);
    let mut seen = vec![false; state_count(dim)];
    let mut members: Vec<u32> = Vec::new();
    let mut work: Vec<u32> = Vec::new();
    let push = |m: u32, seen: &mut Vec<bool>, work: &mut Vec<u32>| {
        if !seen[m as usize] {
            seen[m as usize] = true;
            work.push(m);
        }
    };
    for m in u.masks() {
        push(m, &mut seen, &mut work);
        if with_complement {
            push(!m & top, &mut seen, &mut work);
        }
    }
    // Each popped element is combined with everything accepted so far, so
    // every pair is visited exactly once.
    while let Some(x) = work.pop() {
        members.push(x);
        for &y in &members {
            push(x & y, &mut seen, &mut work);
            push(x | y, &mut seen, &mut work);
        }
        if with_complement {
            push(!x & top, &mut seen, &mut work);
        }
        if members.len() == state_count(dim) {
            break;
        }
    }
    StateSet { dim, members: members.into_iter().collect() }
}

/// Smallest sublattice containing `u`.
pub fn lattice_closure(u: &StateSet) -> StateSet {
    closure_with(u, false)
}

/// Smallest subset containing `u` closed under meet, join and `x ↦ -x`.
pub fn algebra_closure(u: &StateSet) -> StateSet {
    closure_with(u, true)
}

/// An elementary pair `{A ∪ {i}, A ∪ {j}}` with `i < j`, `A ⊆ V \ {i, j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementaryPair {
    pub x: State,
    pub y: State,
    pub i: usize,
    pub j: usize,
    /// The context `A` as a mask (bits `i` and `j` clear).
    pub context: u32,
}

impl ElementaryPair {
    /// `x ∧ y`, i.e. `A`.
    pub fn low(&self) -> State {
        State { bits: self.context, dim: self.x.dim }
    }

    /// `x ∨ y`, i.e. `A ∪ {i, j}`.
    pub fn high(&self) -> State {
        State { bits: self.context | 1 << self.i | 1 << self.j, dim: self.x.dim }
    }
}

/// All `d(d-1)/2 · 2^(d-2)` elementary pairs, ordered by `(i, j)` and then
/// by context mask.
pub fn elementary_pairs(dim: usize) -> Result<Vec<ElementaryPair>> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim, min: 2 });
    }
    ensure_dim(dim, HARD_MAX_DIM)?;
    let d8 = dim as u8;
    let mut out = Vec::with_capacity(dim * (dim - 1) / 2 * (1 << (dim - 2)));
    for i in 0..dim {
        for j in i + 1..dim {
            for context in contexts(dim, i, j) {
                out.push(ElementaryPair {
                    x: State { bits: context | 1 << i, dim: d8 },
                    y: State { bits: context | 1 << j, dim: d8 },
                    i,
                    j,
                    context,
                });
            }
        }
    }
    Ok(out)
}

/// All masks over `V \ {i, j}` in increasing order.
pub fn contexts(dim: usize, i: usize, j: usize) -> impl Iterator<Item = u32> {
    let excluded = 1u32 << i | 1u32 << j;
    (0..state_count(dim) as u32).filter(move |m| m & excluded == 0)
}

/// Masks in graded order: by number of `+1` coordinates, then
/// lexicographically by the sorted subset. For `d = 3` this is
/// `∅, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, {1,2,3}`.
pub fn lattice_order(dim: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..state_count(dim) as u32).collect();
    masks.sort_by_key(|&m| {
        let subset: Vec<u32> = (0..dim as u32).filter(|&i| m >> i & 1 == 1).collect();
        (m.count_ones(), subset)
    });
    masks
}
