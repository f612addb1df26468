//! Conserved quantities of the truncated flow.
//!
//! Energy and enstrophy use the bare spectral sums (no 4π² eigenvalue
//! factor); the Casimir functional synthesizes the physical vorticity field
//! with its full −4π²k² convention and integrates on the grid.

use crate::error::Result;
use crate::state::SpectralState;
use crate::transform::{synthesize_grid, FieldKind};

/// E = ½ Σ_{k∈Z²₊} k² |φ_k|²
pub fn energy(state: &SpectralState) -> f64 {
    state
        .mode_set()
        .modes()
        .iter()
        .zip(state.amps())
        .map(|(k, a)| k.norm_sq() as f64 * a.norm_sqr())
        .sum::<f64>()
        * 0.5
}

/// S = ½ Σ_{k∈Z²₊} k⁴ |φ_k|²
pub fn enstrophy(state: &SpectralState) -> f64 {
    state
        .mode_set()
        .modes()
        .iter()
        .zip(state.amps())
        .map(|(k, a)| {
            let ksq = k.norm_sq() as f64;
            ksq * ksq * a.norm_sqr()
        })
        .sum::<f64>()
        * 0.5
}

/// H^β norm (Σ |k|^{2β} |φ_k|²)^{1/2} over the retained modes.
pub fn sobolev_norm(state: &SpectralState, beta: f64) -> f64 {
    state
        .mode_set()
        .modes()
        .iter()
        .zip(state.amps())
        .map(|(k, a)| (k.norm_sq() as f64).powf(beta) * a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Casimir functional C_f = ∫ f(Δψ) d²x, approximated by the grid average of
/// f over the synthesized vorticity. Exact for polynomial f of degree d when
/// `resolution` exceeds d·N (no aliasing of f(ω) onto the mean); the
/// precondition only enforces the band limit of ω itself.
pub fn casimir(
    state: &SpectralState,
    f: impl Fn(f64) -> f64,
    resolution: usize,
) -> Result<f64> {
    let omega = synthesize_grid(state, resolution, FieldKind::Vorticity)?;
    let sum: f64 = omega.values().iter().map(|&w| f(w)).sum();
    Ok(sum / (resolution * resolution) as f64)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64;

    use super::*;
    use crate::modes::{ModeIndex, ModeSet};
    use crate::rng::NoiseStream;
    use crate::state::SpectralState;
    use crate::testutil::random_state;

    fn single(n: u32, k1: i64, k2: i64, amp: f64) -> SpectralState {
        let modes = Arc::new(ModeSet::new(n).unwrap());
        SpectralState::single_mode(modes, ModeIndex::new(k1, k2), Complex64::new(amp, 0.0))
            .unwrap()
    }

    #[test]
    fn energy_of_single_modes() {
        assert_eq!(energy(&single(1, 1, 0, 1.0)), 0.5);
        assert_eq!(energy(&single(2, 1, 1, 2.0)), 4.0);
        let modes = Arc::new(ModeSet::new(2).unwrap());
        assert_eq!(energy(&SpectralState::zero(modes)), 0.0);
    }

    #[test]
    fn enstrophy_of_single_modes() {
        assert_eq!(enstrophy(&single(1, 1, 0, 1.0)), 0.5);
        assert_eq!(enstrophy(&single(2, 1, 1, 2.0)), 8.0);
        let modes = Arc::new(ModeSet::new(2).unwrap());
        assert_eq!(enstrophy(&SpectralState::zero(modes)), 0.0);
    }

    #[test]
    fn sobolev_norm_cases() {
        assert!((sobolev_norm(&single(1, 1, 0, 1.0), 0.37) - 1.0).abs() < 1e-14);
        assert!((sobolev_norm(&single(2, 0, 2, 1.0), 1.0) - 2.0).abs() < 1e-14);
        let modes = Arc::new(ModeSet::new(2).unwrap());
        assert_eq!(sobolev_norm(&SpectralState::zero(modes), 1.5), 0.0);
    }

    #[test]
    fn casimir_linear_f_vanishes() {
        let modes = Arc::new(ModeSet::new(3).unwrap());
        let mut stream = NoiseStream::new(11);
        let s = random_state(&modes, &mut stream);
        let c = casimir(&s, |x| x, 9).unwrap();
        assert!(c.abs() < 1e-10, "mean of vorticity {c}");
    }

    #[test]
    fn casimir_quadratic_f_matches_parseval() {
        // ∫(Δψ)² = 2 Σ_{Z²₊} (4π²)² k⁴ |φ_k|² = 4 (4π²)² S
        let modes = Arc::new(ModeSet::new(3).unwrap());
        let mut stream = NoiseStream::new(12);
        let s = random_state(&modes, &mut stream);
        let c = casimir(&s, |x| x * x, 2 * 2 * 3 + 1).unwrap();
        let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        let want = 4.0 * four_pi_sq * four_pi_sq * enstrophy(&s);
        assert!((c - want).abs() <= 1e-8 * (1.0 + want.abs()), "c={c} want={want}");
    }

    #[test]
    fn casimir_odd_power_of_single_mode_vanishes() {
        // resolution above 3N so the cubic's harmonics cannot alias to DC
        let s = single(2, 1, 0, 0.8);
        let c = casimir(&s, |x| x * x * x, 8).unwrap();
        assert!(c.abs() < 1e-10, "cubic casimir {c}");
    }

    #[test]
    fn casimir_rejects_small_resolution() {
        let s = single(3, 1, 0, 1.0);
        assert!(casimir(&s, |x| x, 6).is_err());
    }
}
