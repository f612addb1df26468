//! Time integration: deterministic RK4 for the truncated Euler system and
//! Euler-Maruyama for its noise perturbations
//!
//! ```text
//! dφ_k = [B_k(φ) + ε a_k(φ)] dt + √(2ε σ_k) db_k
//! ```
//!
//! with b_k a complex Brownian motion whose real and imaginary parts each
//! carry variance ½ per unit time (so E|b_k(t)|² = t).

use std::sync::Arc;

use num_complex::Complex64;

use crate::conserved::{energy, enstrophy};
use crate::drift::euler_drift;
use crate::error::{invalid, Error, Result, BLOWUP_LIMIT};
use crate::measures::{MeasureSpec, OuSpec};
use crate::modes::ModeSet;
use crate::rng::NoiseStream;
use crate::state::SpectralState;

/// Per-mode diffusion coefficient profile.
#[derive(Clone, Debug)]
pub enum NoiseProfile {
    /// σ_k = 1
    Uniform,
    /// σ_k = 1/k²
    InverseKSq,
    /// explicit per-mode coefficients, all > 0
    Custom(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub profile: NoiseProfile,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, profile: NoiseProfile) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(invalid(format!("noise level epsilon {epsilon} must be >= 0")));
        }
        if let NoiseProfile::Custom(s) = &profile {
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("custom sigma coefficients must be > 0"));
            }
        }
        Ok(Self { epsilon, profile })
    }

    pub fn off() -> Self {
        Self { epsilon: 0.0, profile: NoiseProfile::Uniform }
    }

    /// Resolved σ_k per retained mode.
    pub fn sigmas(&self, modes: &ModeSet) -> Result<Vec<f64>> {
        match &self.profile {
            NoiseProfile::Uniform => Ok(vec![1.0; modes.len()]),
            NoiseProfile::InverseKSq => {
                Ok(modes.modes().iter().map(|k| 1.0 / k.norm_sq() as f64).collect())
            }
            NoiseProfile::Custom(s) => {
                if s.len() != modes.len() {
                    return Err(invalid(format!(
                        "custom sigma count {} does not match mode set size {}",
                        s.len(),
                        modes.len()
                    )));
                }
                Ok(s.clone())
            }
        }
    }
}

/// Deterministic part of the integrated system.
#[derive(Clone, Debug)]
pub enum DriftKind {
    /// No drift (pure diffusion; test harness).
    Zero,
    /// B(φ) for the truncated Euler system.
    Euler,
    /// B(φ) + ε a(φ) with the linear OU drift a_k = −α_k φ_k.
    EulerPlusOu(OuSpec),
    /// Drift of the rescaled system: B'_k(z) = |k| B_k(φ(z)).
    ZEuler,
}

impl DriftKind {
    /// Drift value at `state`; `epsilon` scales the OU part only.
    pub fn eval(&self, state: &SpectralState, epsilon: f64) -> SpectralState {
        match self {
            DriftKind::Zero => SpectralState::zero(Arc::clone(state.mode_set())),
            DriftKind::Euler => euler_drift(state),
            DriftKind::EulerPlusOu(ou) => {
                let mut b = euler_drift(state);
                for (i, a) in b.amps_mut().iter_mut().enumerate() {
                    *a -= epsilon * ou.alpha()[i] * state.amps()[i];
                }
                b
            }
            DriftKind::ZEuler => z_drift(state),
        }
    }
}

/// Time-stepping scheme for [`simulate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Classical RK4; deterministic runs only (ε = 0).
    Rk4,
    /// Euler-Maruyama, strong order ½.
    EulerMaruyama,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub record_every: usize,
    pub scheme: Scheme,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt {} must be > 0", self.dt)));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be >= 1"));
        }
        if self.record_every == 0 || self.record_every > self.steps {
            return Err(invalid(format!(
                "record_every {} must be in 1..=steps ({})",
                self.record_every, self.steps
            )));
        }
        Ok(())
    }
}

/// Recorded snapshots of one run, with conserved-quantity series.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralState>,
    pub energy: Vec<f64>,
    pub enstrophy: Vec<f64>,
}

impl Trajectory {
    fn record(&mut self, t: f64, state: &SpectralState) {
        self.times.push(t);
        self.energy.push(energy(state));
        self.enstrophy.push(enstrophy(state));
        self.states.push(state.clone());
    }
}

fn rk4_step_with(
    drift: impl Fn(&SpectralState) -> SpectralState,
    state: &SpectralState,
    dt: f64,
) -> SpectralState {
    let k1 = drift(state);
    let k2 = drift(&state.axpy(0.5 * dt, &k1));
    let k3 = drift(&state.axpy(0.5 * dt, &k2));
    let k4 = drift(&state.axpy(dt, &k3));
    let mut sum = k1;
    sum = sum.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    state.axpy(dt / 6.0, &sum)
}

/// One classical RK4 step of dφ/dt = B(φ).
pub fn rk4_step(state: &SpectralState, dt: f64) -> SpectralState {
    rk4_step_with(euler_drift, state, dt)
}

/// One Euler-Maruyama step. The complex noise increment per mode is
/// √(2ε σ_k dt)·η with η's real and imaginary parts independent N(0, ½),
/// so Var(Re increment) = ε σ_k dt. With ε = 0 this is the plain explicit
/// Euler step.
pub fn em_step(
    state: &SpectralState,
    drift: &DriftKind,
    noise: &NoiseSpec,
    dt: f64,
    stream: &mut NoiseStream,
) -> Result<SpectralState> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt {dt} must be > 0")));
    }
    let sigmas = noise.sigmas(state.mode_set())?;
    let b = drift.eval(state, noise.epsilon);
    let mut next = state.axpy(dt, &b);
    if noise.epsilon > 0.0 {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for (i, a) in next.amps_mut().iter_mut().enumerate() {
            let amp = (2.0 * noise.epsilon * sigmas[i] * dt).sqrt();
            let (re, im) = stream.normal_pair();
            *a += amp * Complex64::new(re * half, im * half);
        }
    }
    Ok(next)
}

/// Integrates from `initial`, recording every `record_every` steps (plus the
/// initial and final states). Deterministic for a given config.
pub fn simulate(
    initial: &SpectralState,
    config: &SimConfig,
    drift: &DriftKind,
    noise: &NoiseSpec,
) -> Result<Trajectory> {
    config.validate()?;
    if config.scheme == Scheme::Rk4 && noise.epsilon != 0.0 {
        return Err(invalid("the RK4 scheme is deterministic; use euler_maruyama when epsilon > 0"));
    }
    noise.sigmas(initial.mode_set())?;
    let mut stream = NoiseStream::derived(config.seed, "spectral-trajectory", 0);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        energy: Vec::new(),
        enstrophy: Vec::new(),
    };
    let mut state = initial.clone();
    traj.record(0.0, &state);
    for step in 1..=config.steps {
        state = match config.scheme {
            Scheme::Rk4 => rk4_step_with(|s| drift.eval(s, 0.0), &state, config.dt),
            Scheme::EulerMaruyama => em_step(&state, drift, noise, config.dt, &mut stream)?,
        };
        if !state.is_finite() || state.max_abs() > BLOWUP_LIMIT {
            return Err(Error::BlowUp { step });
        }
        if step % config.record_every == 0 || step == config.steps {
            traj.record(step as f64 * config.dt, &state);
        }
    }
    Ok(traj)
}

/// z_k = |k| φ_k
pub fn to_z_coordinates(state: &SpectralState) -> SpectralState {
    let mut z = state.clone();
    for (i, k) in state.mode_set().modes().iter().enumerate() {
        z.amps_mut()[i] = state.amps()[i] * k.norm();
    }
    z
}

/// φ_k = z_k / |k|
pub fn from_z_coordinates(z: &SpectralState) -> SpectralState {
    let mut state = z.clone();
    for (i, k) in z.mode_set().modes().iter().enumerate() {
        state.amps_mut()[i] = z.amps()[i] / k.norm();
    }
    state
}

/// Drift of the rescaled system: B'_k(z) = |k| B_k(φ(z)).
pub fn z_drift(z: &SpectralState) -> SpectralState {
    let mut b = euler_drift(&from_z_coordinates(z));
    for (i, k) in z.mode_set().modes().iter().enumerate() {
        b.amps_mut()[i] *= k.norm();
    }
    b
}

/// Draws a state from a weighted Gaussian measure: each mode complex normal
/// with Var(Re φ_k) = Var(Im φ_k) = 1/(2 w_k). All weights must be positive.
pub fn sample_gaussian(measure: &MeasureSpec, stream: &mut NoiseStream) -> Result<SpectralState> {
    let weights = measure
        .weights()
        .ok_or_else(|| invalid("sampling requires a weighted gaussian measure"))?;
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("sampling requires strictly positive gaussian weights"));
    }
    let mut state = SpectralState::zero(Arc::clone(measure.mode_set()));
    for (i, w) in weights.iter().enumerate() {
        let std = (1.0 / (2.0 * w)).sqrt();
        let (re, im) = stream.normal_pair();
        state.amps_mut()[i] = Complex64::new(std * re, std * im);
    }
    Ok(state)
}
