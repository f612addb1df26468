//! Truncated Fourier index sets.
//!
//! Retained wavevectors live in the upper half-lattice Z²₊ = {k : k₁ > 0, or
//! k₁ = 0 and k₂ > 0}; the conjugate mode −k is implied by reality of the
//! fields and never stored.

use std::collections::HashMap;

use crate::error::{invalid, Result};

/// A single wavevector k = (k₁, k₂) on the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k1: i64,
    pub k2: i64,
}

impl ModeIndex {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    /// k² = k₁² + k₂²
    pub fn norm_sq(self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// k⊥ = (−k₂, k₁)
    pub fn perp(self) -> Self {
        Self::new(-self.k2, self.k1)
    }

    pub fn dot(self, other: Self) -> i64 {
        self.k1 * other.k1 + self.k2 * other.k2
    }

    /// Membership in the upper half-lattice Z²₊.
    pub fn in_upper_half(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }

    pub fn negated(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }
}

impl std::ops::Sub for ModeIndex {
    type Output = ModeIndex;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.k1 - rhs.k1, self.k2 - rhs.k2)
    }
}

/// One precomputed term of the quadratic drift convolution for some target
/// mode: `coef * a * b` where `a`, `b` are the (possibly conjugated)
/// amplitudes at the stored positions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TriadTerm {
    pub coef: f64,
    pub first: u32,
    pub first_conj: bool,
    pub second: u32,
    pub second_conj: bool,
}

/// Precompute the triad table only while it stays comfortably in memory;
/// beyond this the drift falls back to an on-the-fly convolution.
const TRIAD_TABLE_MAX_PAIRS: usize = 4_000_000;

/// All retained modes k ∈ Z²₊ with k₁² + k₂² ≤ N² (Euclidean truncation),
/// sorted lexicographically by (k₁, k₂).
#[derive(Debug)]
pub struct ModeSet {
    truncation: u32,
    modes: Vec<ModeIndex>,
    index: HashMap<ModeIndex, usize>,
    /// Flattened triad terms; `triad_ranges[i]..triad_ranges[i+1]` indexes the
    /// terms of mode `i`. Empty when the table would be too large.
    triads: Option<(Vec<TriadTerm>, Vec<usize>)>,
}

impl ModeSet {
    /// Builds the truncated mode set of order `n` (`n ≥ 1`).
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(invalid("truncation order N must be >= 1"));
        }
        let ni = n as i64;
        let mut modes = Vec::new();
        for k1 in 0..=ni {
            for k2 in -ni..=ni {
                let m = ModeIndex::new(k1, k2);
                if m.in_upper_half() && m.norm_sq() <= ni * ni {
                    modes.push(m);
                }
            }
        }
        modes.sort();
        let index = modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let mut set = Self { truncation: n, modes, index, triads: None };
        let full = set.full_lattice_len();
        if set.modes.len() * full <= TRIAD_TABLE_MAX_PAIRS {
            set.triads = Some(set.build_triads());
        }
        Ok(set)
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> ModeIndex {
        self.modes[i]
    }

    /// Position of `m` among the stored (upper half-lattice) modes.
    pub fn index_of(&self, m: ModeIndex) -> Option<usize> {
        self.index.get(&m).copied()
    }

    /// Whether `m` (of either sign) is inside the truncation ball.
    pub fn in_ball(&self, m: ModeIndex) -> bool {
        let ni = self.truncation as i64;
        m.norm_sq() <= ni * ni && m != ModeIndex::new(0, 0)
    }

    /// Number of nonzero lattice points of the full (two-sided) ball.
    fn full_lattice_len(&self) -> usize {
        2 * self.modes.len()
    }

    /// Iterates the full two-sided lattice ball (retained modes and their
    /// conjugates).
    pub fn full_lattice(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        self.modes
            .iter()
            .copied()
            .chain(self.modes.iter().map(|m| m.negated()))
    }

    fn build_triads(&self) -> (Vec<TriadTerm>, Vec<usize>) {
        let mut terms = Vec::new();
        let mut ranges = Vec::with_capacity(self.modes.len() + 1);
        ranges.push(0);
        for &k in &self.modes {
            let ksq = k.norm_sq() as f64;
            let scale = 4.0 * std::f64::consts::PI * std::f64::consts::PI / ksq;
            for h in self.full_lattice() {
                let m = k - h;
                if !self.in_ball(m) {
                    continue;
                }
                let geom = (k.perp().dot(h) * m.norm_sq()) as f64;
                if geom == 0.0 {
                    continue;
                }
                let (first, first_conj) = self.locate(h);
                let (second, second_conj) = self.locate(m);
                terms.push(TriadTerm {
                    coef: scale * geom,
                    first,
                    first_conj,
                    second,
                    second_conj,
                });
            }
            ranges.push(terms.len());
        }
        (terms, ranges)
    }

    /// Storage slot and conjugation flag for a full-lattice mode.
    fn locate(&self, m: ModeIndex) -> (u32, bool) {
        if let Some(i) = self.index_of(m) {
            (i as u32, false)
        } else {
            let i = self.index_of(m.negated()).expect("mode in ball");
            (i as u32, true)
        }
    }

    pub(crate) fn triad_terms(&self, i: usize) -> Option<&[TriadTerm]> {
        self.triads
            .as_ref()
            .map(|(terms, ranges)| &terms[ranges[i]..ranges[i + 1]])
    }
}
