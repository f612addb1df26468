//! Unnormalized measure densities R(φ) and the two invariance residuals:
//! the first-order (deterministic flow) condition and the Ornstein-Uhlenbeck
//! perturbation condition.
//!
//! All derivatives are taken in the real coordinates (Re φ_k, Im φ_k), so
//! every residual is a concrete finite-dimensional computation.

use std::sync::Arc;

use crate::drift::fd_step;
use crate::error::{invalid, Result};
use crate::modes::ModeSet;
use crate::state::SpectralState;

type StateFn = Arc<dyn Fn(&SpectralState) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&SpectralState) -> Vec<f64> + Send + Sync>;

/// Density families. The Gaussian kinds have log R = −½ Σ_k w_k |φ_k|².
#[derive(Clone)]
pub enum MeasureKind {
    /// w_k = k⁴ (Gaussian built from the enstrophy).
    EnstrophyGaussian,
    /// w_k = k² (Gaussian built from the renormalized energy; the Wick
    /// constant shifts log R additively and is dropped).
    EnergyGaussian,
    /// Arbitrary nonnegative per-mode weights.
    WeightedGaussian(Vec<f64>),
    /// log R and its coordinate gradient supplied by the caller.
    Custom { log_density: StateFn, gradient: GradFn },
}

impl std::fmt::Debug for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EnstrophyGaussian => write!(f, "EnstrophyGaussian"),
            Self::EnergyGaussian => write!(f, "EnergyGaussian"),
            Self::WeightedGaussian(w) => write!(f, "WeightedGaussian({w:?})"),
            Self::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// An unnormalized density over the states of one mode set.
#[derive(Clone, Debug)]
pub struct MeasureSpec {
    modes: Arc<ModeSet>,
    kind: MeasureKind,
    /// Per-mode weights for the Gaussian kinds, None for custom.
    weights: Option<Vec<f64>>,
}

impl MeasureSpec {
    pub fn new(kind: MeasureKind, modes: Arc<ModeSet>) -> Result<Self> {
        let weights = match &kind {
            MeasureKind::EnstrophyGaussian => Some(
                modes
                    .modes()
                    .iter()
                    .map(|k| {
                        let ksq = k.norm_sq() as f64;
                        ksq * ksq
                    })
                    .collect(),
            ),
            MeasureKind::EnergyGaussian => {
                Some(modes.modes().iter().map(|k| k.norm_sq() as f64).collect())
            }
            MeasureKind::WeightedGaussian(w) => {
                if w.len() != modes.len() {
                    return Err(invalid(format!(
                        "weight count {} does not match mode set size {}",
                        w.len(),
                        modes.len()
                    )));
                }
                if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(invalid(format!("gaussian weight {bad} must be >= 0")));
                }
                Some(w.clone())
            }
            MeasureKind::Custom { .. } => None,
        };
        Ok(Self { modes, kind, weights })
    }

    pub fn mode_set(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Per-mode Gaussian weights (None for custom kinds).
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn check_state(&self, state: &SpectralState) -> Result<()> {
        if state.mode_set().modes() != self.modes.modes() {
            return Err(invalid("state mode set does not match the measure's"));
        }
        Ok(())
    }

    pub fn log_density(&self, state: &SpectralState) -> Result<f64> {
        self.check_state(state)?;
        match (&self.kind, &self.weights) {
            (MeasureKind::Custom { log_density, .. }, _) => Ok(log_density(state)),
            (_, Some(w)) => Ok(-0.5
                * state
                    .amps()
                    .iter()
                    .zip(w)
                    .map(|(a, w)| w * a.norm_sqr())
                    .sum::<f64>()),
            _ => unreachable!(),
        }
    }

    /// ∇ log R over the real coordinates [Re φ_0, Im φ_0, Re φ_1, ...].
    pub fn log_density_grad(&self, state: &SpectralState) -> Result<Vec<f64>> {
        self.check_state(state)?;
        match (&self.kind, &self.weights) {
            (MeasureKind::Custom { gradient, .. }, _) => Ok(gradient(state)),
            (_, Some(w)) => {
                let mut out = Vec::with_capacity(2 * state.len());
                for (a, w) in state.amps().iter().zip(w) {
                    out.push(-w * a.re);
                    out.push(-w * a.im);
                }
                Ok(out)
            }
            _ => unreachable!(),
        }
    }

    /// Diagonal of the log-density Hessian over the real coordinates.
    /// Analytic for the Gaussian kinds; centered second differences of the
    /// log density otherwise.
    pub fn log_density_hessian_diag(&self, state: &SpectralState) -> Result<Vec<f64>> {
        self.check_state(state)?;
        match (&self.kind, &self.weights) {
            (MeasureKind::Custom { log_density, .. }, _) => {
                let dim = 2 * state.len();
                let mut work = state.clone();
                let center = log_density(state);
                let mut out = Vec::with_capacity(dim);
                for i in 0..dim {
                    let x = state.coord(i);
                    // wider step than the gradient's: second differences lose
                    // more bits to cancellation
                    let h = 1e-4 * x.abs().max(1.0);
                    work.set_coord(i, x + h);
                    let plus = log_density(&work);
                    work.set_coord(i, x - h);
                    let minus = log_density(&work);
                    work.set_coord(i, x);
                    out.push((plus - 2.0 * center + minus) / (h * h));
                }
                Ok(out)
            }
            (_, Some(w)) => {
                let mut out = Vec::with_capacity(2 * state.len());
                for w in w {
                    out.push(-w);
                    out.push(-w);
                }
                Ok(out)
            }
            _ => unreachable!(),
        }
    }
}

/// Linear Ornstein-Uhlenbeck family: per-mode drift a_k = −α_k φ_k and
/// state-independent diffusion coefficient σ_k > 0.
#[derive(Clone, Debug)]
pub struct OuSpec {
    alpha: Vec<f64>,
    sigma: Vec<f64>,
}

impl OuSpec {
    pub fn new(alpha: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if alpha.len() != sigma.len() {
            return Err(invalid("alpha and sigma lengths differ"));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(invalid("alpha coefficients must be finite"));
        }
        if let Some(bad) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(invalid(format!("sigma coefficient {bad} must be > 0")));
        }
        Ok(Self { alpha, sigma })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

/// The two coefficient families that preserve their matching Gaussians.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuKind {
    /// α_k = k², σ_k = 1/k² (pairs with the enstrophy Gaussian).
    Enstrophy,
    /// α_k = 1, σ_k = 1/k² (pairs with the energy Gaussian).
    Energy,
}

pub fn ou_family(kind: OuKind, modes: &ModeSet) -> OuSpec {
    let (alpha, sigma) = modes
        .modes()
        .iter()
        .map(|k| {
            let ksq = k.norm_sq() as f64;
            match kind {
                OuKind::Enstrophy => (ksq, 1.0 / ksq),
                OuKind::Energy => (1.0, 1.0 / ksq),
            }
        })
        .unzip();
    OuSpec { alpha, sigma }
}

/// First-order invariance residual Σ_i ∂(R b_i)/∂φ_i / R evaluated at one
/// state: Σ_i [b_i ∂logR/∂φ_i + ∂b_i/∂φ_i] over the real coordinates, the
/// drift divergence by centered finite differences. Zero iff R is
/// infinitesimally invariant under the flow of `drift` at that point.
pub fn im6_residual(
    measure: &MeasureSpec,
    drift: impl Fn(&SpectralState) -> SpectralState,
    state: &SpectralState,
) -> Result<f64> {
    let grad = measure.log_density_grad(state)?;
    let b = drift(state);
    let mut residual = 0.0;
    for (i, a) in b.amps().iter().enumerate() {
        residual += a.re * grad[2 * i] + a.im * grad[2 * i + 1];
    }
    let dim = 2 * state.len();
    let mut work = state.clone();
    for i in 0..dim {
        let x = state.coord(i);
        let h = fd_step(x);
        work.set_coord(i, x + h);
        let plus = drift(&work).coord(i);
        work.set_coord(i, x - h);
        let minus = drift(&work).coord(i);
        work.set_coord(i, x);
        residual += (plus - minus) / (2.0 * h);
    }
    Ok(residual)
}

/// Ornstein-Uhlenbeck invariance residual (state-independent σ_k):
///
/// ```text
/// Σ_i [ a_i ∂logR/∂φ_i + ∂a_i/∂φ_i − σ_i (∂²logR/∂φ_i² + (∂logR/∂φ_i)²) ]
/// ```
///
/// over the real coordinates, where a = −α_k φ_k per mode. Zero iff the
/// perturbation preserves the measure.
pub fn sp4_residual(measure: &MeasureSpec, ou: &OuSpec, state: &SpectralState) -> Result<f64> {
    if ou.len() != state.len() {
        return Err(invalid("OU spec length does not match the state's mode set"));
    }
    let grad = measure.log_density_grad(state)?;
    let hess = measure.log_density_hessian_diag(state)?;
    let mut residual = 0.0;
    for (k, a) in state.amps().iter().enumerate() {
        let alpha = ou.alpha[k];
        let sigma = ou.sigma[k];
        for (coord, x) in [(2 * k, a.re), (2 * k + 1, a.im)] {
            let g = grad[coord];
            residual += -alpha * x * g - alpha - sigma * (hess[coord] + g * g);
        }
    }
    Ok(residual)
}
