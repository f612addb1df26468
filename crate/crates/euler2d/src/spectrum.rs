//! Shell-binned energy spectra of grid fields (the condensation diagnostic).

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::field::GridField;

/// Energy split over unit-width |k| shells: shell m collects |k| ∈ [m, m+1).
/// Energy and enstrophy use the spectral conventions ¼ Σ_full k²|ĉ_k|² and
/// ¼ Σ_full k⁴|ĉ_k|² (equal to ½ Σ_{Z²₊} k²|φ_k|² etc. for band-limited
/// fields), so values line up with the spectral module's.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Bin edges `[0, 1, ..., B+1]`; shell m is `[edges[m], edges[m+1])`.
    pub shell_edges: Vec<f64>,
    pub shell_energy: Vec<f64>,
    pub total_energy: f64,
    pub enstrophy: f64,
    /// Share of the |k| ∈ [1, 2) shell (contains |k| = 1 and √2).
    pub lowest_shell_fraction: f64,
}

/// Full 2D DFT coefficients c_k = (1/n²) Σ ψ e^{−i2πk·x}.
pub(crate) fn dft2(field: &GridField) -> Vec<Complex64> {
    let n = field.n();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut data: Vec<Complex64> =
        field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // rows
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    // columns
    let mut col = vec![Complex64::ZERO; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
    let scale = 1.0 / (n * n) as f64;
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Signed frequency of DFT index `a` on an n-point axis.
#[inline]
pub(crate) fn signed_freq(a: usize, n: usize) -> i64 {
    if a <= n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

pub fn shell_spectrum(psi: &GridField) -> SpectrumReport {
    let n = psi.n();
    let coeffs = dft2(psi);
    let max_ksq = {
        let m = (n / 2) as i64;
        2 * m * m
    };
    let bins = (max_ksq as f64).sqrt().floor() as usize + 1;
    let mut shell_energy = vec![0.0; bins + 1];
    let mut total = 0.0;
    let mut enstrophy = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            let k1 = signed_freq(a, n);
            let k2 = signed_freq(b, n);
            let ksq = (k1 * k1 + k2 * k2) as f64;
            let e = 0.25 * ksq * coeffs[a * n + b].norm_sqr();
            let bin = ksq.sqrt().floor() as usize;
            shell_energy[bin.min(bins)] += e;
            total += e;
            enstrophy += 0.25 * ksq * ksq * coeffs[a * n + b].norm_sqr();
        }
    }
    let lowest = if total > 0.0 { shell_energy[1] / total } else { 0.0 };
    SpectrumReport {
        shell_edges: (0..=shell_energy.len()).map(|m| m as f64).collect(),
        shell_energy,
        total_energy: total,
        enstrophy,
        lowest_shell_fraction: lowest,
    }
}
