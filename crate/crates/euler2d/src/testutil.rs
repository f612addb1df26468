//! Helpers shared by unit tests across modules.

use std::sync::Arc;

use num_complex::Complex64;

use crate::modes::ModeSet;
use crate::rng::NoiseStream;
use crate::state::SpectralState;

/// State with i.i.d. standard complex normal amplitudes.
pub(crate) fn random_state(modes: &Arc<ModeSet>, stream: &mut NoiseStream) -> SpectralState {
    let mut s = SpectralState::zero(Arc::clone(modes));
    for i in 0..s.len() {
        let (re, im) = stream.normal_pair();
        s.amps_mut()[i] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    }
    s
}
