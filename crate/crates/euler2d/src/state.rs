//! The dynamical state: one complex amplitude per retained mode.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::modes::{ModeIndex, ModeSet};

/// Complex stream-function amplitudes φ_k over a [`ModeSet`].
///
/// Only k ∈ Z²₊ is stored; reading the conjugate mode −k returns
/// `conj(φ_k)` (reality condition). The backing mode set is shared.
#[derive(Clone, Debug)]
pub struct SpectralState {
    modes: Arc<ModeSet>,
    amps: Vec<Complex64>,
}

impl SpectralState {
    pub fn zero(modes: Arc<ModeSet>) -> Self {
        let amps = vec![Complex64::ZERO; modes.len()];
        Self { modes, amps }
    }

    pub fn from_amplitudes(modes: Arc<ModeSet>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != modes.len() {
            return Err(invalid(format!(
                "amplitude count {} does not match mode set size {}",
                amps.len(),
                modes.len()
            )));
        }
        Ok(Self { modes, amps })
    }

    /// Zero state with a single mode set, e.g. for building initial data.
    pub fn single_mode(modes: Arc<ModeSet>, k: ModeIndex, amp: Complex64) -> Result<Self> {
        let mut state = Self::zero(modes);
        state.set_amp(k, amp)?;
        Ok(state)
    }

    pub fn mode_set(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Amplitude of any lattice mode, applying the reality condition for −k.
    /// Modes outside the truncation ball read as zero.
    pub fn amp(&self, k: ModeIndex) -> Complex64 {
        if let Some(i) = self.modes.index_of(k) {
            self.amps[i]
        } else if let Some(i) = self.modes.index_of(k.negated()) {
            self.amps[i].conj()
        } else {
            Complex64::ZERO
        }
    }

    /// Sets the amplitude of a stored (upper half-lattice) mode.
    pub fn set_amp(&mut self, k: ModeIndex, amp: Complex64) -> Result<()> {
        match self.modes.index_of(k) {
            Some(i) => {
                self.amps[i] = amp;
                Ok(())
            }
            None => Err(invalid(format!("mode ({}, {}) is not in the set", k.k1, k.k2))),
        }
    }

    pub fn same_mode_set(&self, other: &SpectralState) -> bool {
        Arc::ptr_eq(&self.modes, &other.modes)
            || self.modes.modes() == other.modes.modes()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// ℓ² norm over the real coordinates (Re φ_k, Im φ_k).
    pub fn coord_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let amps = self.amps.iter().map(|a| a * c).collect();
        Self { modes: Arc::clone(&self.modes), amps }
    }

    /// self + c * other (mode sets must match).
    pub fn axpy(&self, c: f64, other: &SpectralState) -> Self {
        debug_assert!(self.same_mode_set(other));
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a + c * b)
            .collect();
        Self { modes: Arc::clone(&self.modes), amps }
    }

    /// Real-coordinate view: [Re φ_0, Im φ_0, Re φ_1, ...].
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.amps.len());
        for a in &self.amps {
            out.push(a.re);
            out.push(a.im);
        }
        out
    }

    pub fn set_coord(&mut self, i: usize, v: f64) {
        let a = &mut self.amps[i / 2];
        if i % 2 == 0 {
            a.re = v;
        } else {
            a.im = v;
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        let a = self.amps[i / 2];
        if i % 2 == 0 {
            a.re
        } else {
            a.im
        }
    }
}
