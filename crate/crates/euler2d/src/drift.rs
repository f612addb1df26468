//! The quadratic drift of the truncated Euler system.
//!
//! For every retained k,
//!
//! ```text
//! B_k(φ) = (4π²/k²) Σ_h (k⊥·h) (k−h)² φ_h φ_{k−h}
//! ```
//!
//! with the sum over the full two-sided lattice ball (0 < |h| ≤ N,
//! 0 < |k−h| ≤ N) and φ_{−m} = conj(φ_m). Triads with any leg outside the
//! ball are dropped entirely, which is what makes the quadratic invariants
//! of the truncation exact.

use num_complex::Complex64;

use crate::modes::ModeIndex;
use crate::state::SpectralState;

/// Evaluates B(φ) on the state's mode set.
pub fn euler_drift(state: &SpectralState) -> SpectralState {
    let modes = state.mode_set();
    if modes.triad_terms(0).is_some() {
        let mut out = SpectralState::zero(modes.clone());
        let amps = state.amps();
        for i in 0..modes.len() {
            let mut acc = Complex64::ZERO;
            for t in modes.triad_terms(i).unwrap() {
                let a = if t.first_conj { amps[t.first as usize].conj() } else { amps[t.first as usize] };
                let b = if t.second_conj { amps[t.second as usize].conj() } else { amps[t.second as usize] };
                acc += t.coef * (a * b);
            }
            out.amps_mut()[i] = acc;
        }
        return out;
    }
    euler_drift_dense(state)
}

/// On-the-fly convolution for mode sets too large for a triad table: dense
/// amplitude lookup over the full lattice, then the same sum.
pub(crate) fn euler_drift_dense(state: &SpectralState) -> SpectralState {
    let modes = state.mode_set();
    let mut out = SpectralState::zero(modes.clone());
    let n = modes.truncation() as i64;
    let side = (2 * n + 1) as usize;
    let mut grid = vec![Complex64::ZERO; side * side];
    let slot = |m: ModeIndex| ((m.k1 + n) as usize) * side + (m.k2 + n) as usize;
    for (i, &k) in modes.modes().iter().enumerate() {
        grid[slot(k)] = state.amps()[i];
        grid[slot(k.negated())] = state.amps()[i].conj();
    }
    let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    for (i, &k) in modes.modes().iter().enumerate() {
        let kperp = k.perp();
        let mut acc = Complex64::ZERO;
        for h in modes.full_lattice() {
            let geom = kperp.dot(h);
            if geom == 0 {
                continue;
            }
            let m = k - h;
            if !modes.in_ball(m) {
                continue;
            }
            let coef = (geom * m.norm_sq()) as f64;
            acc += coef * (grid[slot(h)] * grid[slot(m)]);
        }
        out.amps_mut()[i] = acc * (four_pi_sq / k.norm_sq() as f64);
    }
    out
}

/// Relative centered-difference step, scaled by the coordinate magnitude.
pub(crate) fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Per-mode divergence ∂B_k/∂φ_k of the drift, by centered finite
/// differences in the real and imaginary coordinate of mode k.
///
/// Analytically every entry vanishes: the only pairing that could couple
/// B_k to φ_k has h = 2k, which carries the factor k⊥·2k = 0.
pub fn drift_divergence(state: &SpectralState) -> Vec<f64> {
    let n = state.len();
    let mut out = vec![0.0; n];
    let mut work = state.clone();
    for i in 0..n {
        let mut div = 0.0;
        for part in 0..2 {
            let idx = 2 * i + part;
            let x = state.coord(idx);
            let h = fd_step(x);
            work.set_coord(idx, x + h);
            let plus = euler_drift(&work).amps()[i];
            work.set_coord(idx, x - h);
            let minus = euler_drift(&work).amps()[i];
            work.set_coord(idx, x);
            let deriv = (plus - minus) / (2.0 * h);
            div += if part == 0 { deriv.re } else { deriv.im };
        }
        out[i] = div;
    }
    out
}
