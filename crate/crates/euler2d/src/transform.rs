//! Synthesis of spectral states onto torus grids and projection back.
//!
//! Direct summation over retained modes; with resolution ≥ 2N+1 the grid
//! samples carry the retained band exactly (no aliasing), so analyze ∘
//! synthesize is the identity.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::field::GridField;
use crate::modes::ModeSet;
use crate::state::SpectralState;

/// Which physical field to synthesize from stream-function amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// ψ itself.
    Stream,
    /// ω = Δψ; mode k carries the eigenvalue −4π²k².
    Vorticity,
}

fn check_resolution(modes: &ModeSet, resolution: usize) -> Result<()> {
    let min = 2 * modes.truncation() as usize + 1;
    if resolution < min {
        return Err(invalid(format!(
            "resolution {resolution} below unaliased minimum {min} for N = {}",
            modes.truncation()
        )));
    }
    Ok(())
}

/// Evaluates ψ(x) = Σ φ_k e^{i2πk·x} + conj on the uniform grid.
pub fn synthesize_grid(
    state: &SpectralState,
    resolution: usize,
    kind: FieldKind,
) -> Result<GridField> {
    let modes = state.mode_set();
    check_resolution(modes, resolution)?;
    let mut out = GridField::zeros(resolution);
    let inv = 1.0 / resolution as f64;
    for (idx, &k) in modes.modes().iter().enumerate() {
        let amp = match kind {
            FieldKind::Stream => state.amps()[idx],
            FieldKind::Vorticity => {
                state.amps()[idx] * (-4.0 * std::f64::consts::PI * std::f64::consts::PI
                    * k.norm_sq() as f64)
            }
        };
        if amp == Complex64::ZERO {
            continue;
        }
        // e^{i2πk·x} factored over the two axes
        let phase1: Vec<Complex64> = (0..resolution)
            .map(|i| Complex64::from_polar(1.0, TAU * k.k1 as f64 * i as f64 * inv))
            .collect();
        let phase2: Vec<Complex64> = (0..resolution)
            .map(|j| Complex64::from_polar(1.0, TAU * k.k2 as f64 * j as f64 * inv))
            .collect();
        for i in 0..resolution {
            let row = amp * phase1[i];
            for j in 0..resolution {
                // φ e_k + conj(φ e_k) = 2 Re(φ e_k)
                let v = 2.0 * (row * phase2[j]).re;
                out.values_mut()[i * resolution + j] += v;
            }
        }
    }
    Ok(out)
}

/// Projects a grid field onto the retained modes: φ_k = ⟨ψ, e_k⟩ by the
/// trapezoidal (exact for band-limited data) discrete Fourier sum. Content
/// outside the mode set, including the mean, is discarded.
pub fn analyze_grid(grid: &GridField, modes: &Arc<ModeSet>) -> Result<SpectralState> {
    check_resolution(modes, grid.n())?;
    let n = grid.n();
    let inv = 1.0 / n as f64;
    let mut state = SpectralState::zero(Arc::clone(modes));
    for (idx, &k) in modes.modes().iter().enumerate() {
        let phase1: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, -TAU * k.k1 as f64 * i as f64 * inv))
            .collect();
        let phase2: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, -TAU * k.k2 as f64 * j as f64 * inv))
            .collect();
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            let mut row = Complex64::ZERO;
            for j in 0..n {
                row += grid.get(i, j) * phase2[j];
            }
            acc += phase1[i] * row;
        }
        state.amps_mut()[idx] = acc * (inv * inv);
    }
    Ok(state)
}
