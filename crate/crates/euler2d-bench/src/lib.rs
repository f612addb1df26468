//! Shared setup for the kernel benchmarks.

use std::sync::Arc;

use euler2d::{GridField, ModeSet, NoiseStream, SpectralState};
use num_complex::Complex64;

pub fn random_spectral_state(n: u32, seed: u64) -> SpectralState {
    let modes = Arc::new(ModeSet::new(n).unwrap());
    let mut stream = NoiseStream::new(seed);
    let mut s = SpectralState::zero(modes);
    for i in 0..s.len() {
        let (re, im) = stream.normal_pair();
        s.amps_mut()[i] = Complex64::new(re, im) * 0.05;
    }
    s
}

pub fn random_grid_field(n: usize, seed: u64) -> GridField {
    let mut stream = NoiseStream::new(seed);
    let mut f = GridField::zeros(n);
    for v in f.values_mut() {
        *v = stream.standard_normal();
    }
    f.project_zero_mean();
    f
}
