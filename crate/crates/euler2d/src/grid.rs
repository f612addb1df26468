//! Configuration-space solver: discrete operators on the periodic n×n grid,
//! the marginally stable semi-implicit vorticity stepper, noise injection,
//! stream-function constraints, and the simulation loop.
//!
//! The advection operator is the Arakawa 9-point Jacobian, which is exactly
//! skew-symmetric and vanishes pointwise on equal arguments; combined with
//! the Cayley form (I + dt/2 M)⁻¹(I − dt/2 M) the unforced step is an exact
//! ℓ² isometry of the vorticity (discrete enstrophy conservation) and every
//! discrete Laplacian eigenmode is a fixed point.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result, BLOWUP_LIMIT};
use crate::field::GridField;
use crate::rng::NoiseStream;
use crate::spectrum::{shell_spectrum, signed_freq, SpectrumReport};

/// 5-point periodic Laplacian with unit-torus spacing h = 1/n.
pub fn laplacian_apply(field: &GridField) -> GridField {
    let n = field.n();
    let scale = (n * n) as f64;
    let v = field.values();
    let mut out = GridField::zeros(n);
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            let lap = v[ip * n + j] + v[im * n + j] + v[i * n + jp] + v[i * n + jm]
                - 4.0 * v[i * n + j];
            out.values_mut()[i * n + j] = lap * scale;
        }
    }
    out
}

/// Eigenvalue of the discrete Laplacian at signed frequency (k1, k2).
fn laplacian_eigenvalue(k1: i64, k2: i64, n: usize) -> f64 {
    let nn = (n * n) as f64;
    let t1 = (std::f64::consts::TAU * k1 as f64 / n as f64).cos();
    let t2 = (std::f64::consts::TAU * k2 as f64 / n as f64).cos();
    nn * (2.0 * t1 + 2.0 * t2 - 4.0)
}

/// Cached-plan FFT Poisson solver for the periodic grid.
struct PeriodicPoisson {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv_eig: Vec<f64>,
}

impl PeriodicPoisson {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut inv_eig = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a == 0 && b == 0 {
                    continue;
                }
                inv_eig[a * n + b] =
                    1.0 / laplacian_eigenvalue(signed_freq(a, n), signed_freq(b, n), n);
            }
        }
        Self { n, fwd, inv, inv_eig }
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::ZERO; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    fn invert(&self, omega: &GridField) -> Result<GridField> {
        let n = self.n;
        let sum: f64 = omega.values().iter().sum();
        let tol = 1e-10 * (n * n) as f64 * omega.max_abs().max(1.0);
        if sum.abs() > tol {
            return Err(invalid(format!(
                "vorticity mean {:.3e} violates torus solvability",
                sum / (n * n) as f64
            )));
        }
        let mut data: Vec<Complex64> =
            omega.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut data, true);
        for (v, e) in data.iter_mut().zip(&self.inv_eig) {
            *v *= *e; // zero mode: inv_eig = 0
        }
        self.fft2(&mut data, false);
        let scale = 1.0 / (n * n) as f64;
        let mut out = GridField::zeros(n);
        for (o, v) in out.values_mut().iter_mut().zip(&data) {
            *o = v.re * scale;
        }
        out.project_zero_mean();
        Ok(out)
    }
}

/// Solves Δψ = ω with Σψ = 0 by diagonalizing the circulant Laplacian.
/// The vorticity must have zero mean (torus solvability).
pub fn poisson_invert(omega: &GridField) -> Result<GridField> {
    PeriodicPoisson::new(omega.n()).invert(omega)
}

/// Arakawa 9-point Jacobian J(ψ, ω) ≈ ∂₁ψ ∂₂ω − ∂₂ψ ∂₁ω, i.e. the
/// advection (∇⊥ψ·∇)ω. Exactly skew-symmetric in ω for fixed ψ, exactly
/// zero for ω ∝ ψ, and sums to zero over the grid.
pub fn advection_apply(psi: &GridField, omega: &GridField) -> Result<GridField> {
    if psi.n() != omega.n() {
        return Err(invalid(format!(
            "grid sizes differ: psi {} vs omega {}",
            psi.n(),
            omega.n()
        )));
    }
    let n = psi.n();
    let f = psi.values();
    let g = omega.values();
    let mut out = GridField::zeros(n);
    // h = 1/n, prefactor 1/(12 h²) = n²/12
    let scale = (n * n) as f64 / 12.0;
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            let (fp1, fm1) = (f[ip * n + j], f[im * n + j]);
            let (fp2, fm2) = (f[i * n + jp], f[i * n + jm]);
            let (fpp, fpm) = (f[ip * n + jp], f[ip * n + jm]);
            let (fmp, fmm) = (f[im * n + jp], f[im * n + jm]);
            let (gp1, gm1) = (g[ip * n + j], g[im * n + j]);
            let (gp2, gm2) = (g[i * n + jp], g[i * n + jm]);
            let (gpp, gpm) = (g[ip * n + jp], g[ip * n + jm]);
            let (gmp, gmm) = (g[im * n + jp], g[im * n + jm]);
            let jpp = (fp1 - fm1) * (gp2 - gm2) - (fp2 - fm2) * (gp1 - gm1);
            let jpx = fp1 * (gpp - gpm) - fm1 * (gmp - gmm) - fp2 * (gpp - gmp)
                + fm2 * (gpm - gmm);
            let jxp = fpp * (gp2 - gp1) - fmm * (gm1 - gm2) - fmp * (gp2 - gm1)
                + fpm * (gp1 - gm2);
            out.values_mut()[i * n + j] = (jpp + jpx + jxp) * scale;
        }
    }
    Ok(out)
}

/// Residual target for the Cayley solve.
const CAYLEY_TOL: f64 = 1e-12;
const CAYLEY_MAX_ITERS: usize = 5000;

/// Solves (I + c M(ψ)) ω' = (I − c M(ψ)) ω by conjugate gradients on the
/// normal equations; M skew makes AᵀA = I − c²M² well conditioned for
/// moderate c‖M‖.
fn cayley_solve(
    psi: &GridField,
    omega: &GridField,
    c: f64,
    warm: Option<&GridField>,
) -> Result<GridField> {
    let apply = |x: &GridField, sign: f64| -> Result<GridField> {
        let mut j = advection_apply(psi, x)?;
        for (jv, xv) in j.values_mut().iter_mut().zip(x.values()) {
            *jv = xv + sign * c * *jv;
        }
        Ok(j)
    };
    let b = apply(omega, -1.0)?;
    let bnorm = b.norm().max(1e-300);
    let mut x = warm.cloned().unwrap_or_else(|| omega.clone());
    let ax = apply(&x, 1.0)?;
    let mut r = b.clone();
    for (rv, av) in r.values_mut().iter_mut().zip(ax.values()) {
        *rv -= av;
    }
    if r.norm() <= CAYLEY_TOL * bnorm {
        return Ok(x);
    }
    // s = Aᵀ r (Aᵀ = I − cM)
    let mut s = apply(&r, -1.0)?;
    let mut p = s.clone();
    let mut gamma = s.dot(&s);
    for _ in 0..CAYLEY_MAX_ITERS {
        let q = apply(&p, 1.0)?;
        let qq = q.dot(&q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (xv, pv) in x.values_mut().iter_mut().zip(p.values()) {
            *xv += alpha * pv;
        }
        for (rv, qv) in r.values_mut().iter_mut().zip(q.values()) {
            *rv -= alpha * qv;
        }
        if r.norm() <= CAYLEY_TOL * bnorm {
            return Ok(x);
        }
        s = apply(&r, -1.0)?;
        let gamma_next = s.dot(&s);
        let beta = gamma_next / gamma;
        for (pv, sv) in p.values_mut().iter_mut().zip(s.values()) {
            *pv = sv + beta * *pv;
        }
        gamma = gamma_next;
    }
    Err(Error::NumericalFailure(format!(
        "cayley solve stalled at relative residual {:.3e}",
        r.norm() / bnorm
    )))
}

/// One semi-implicit vorticity step: ψ = Δ⁻¹ω, then the Cayley update
/// (I + dt/2 M(ψ)) ω' = (I − dt/2 M(ψ)) ω with M frozen at ψ. Preserves
/// ‖ω‖₂ to solver tolerance.
pub fn cayley_step(omega: &GridField, dt: f64) -> Result<GridField> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt {dt} must be > 0")));
    }
    let psi = poisson_invert(omega)?;
    cayley_solve(&psi, omega, dt / 2.0, None)
}

/// Adds √(2ε dt)·η per cell (η i.i.d. standard normal) and removes the mean.
/// ε = 0 is the identity and draws nothing.
pub fn inject_noise(
    omega: &GridField,
    epsilon: f64,
    dt: f64,
    stream: &mut NoiseStream,
) -> GridField {
    if epsilon == 0.0 {
        return omega.clone();
    }
    let amp = (2.0 * epsilon * dt).sqrt();
    let mut out = omega.clone();
    for v in out.values_mut() {
        *v += amp * stream.standard_normal();
    }
    out.project_zero_mean();
    out
}

/// Dynamical-space boundary conditions on the stream function.
#[derive(Clone, Debug, PartialEq)]
pub enum GridConstraint {
    None,
    /// Clip ψ into [−psi_max, psi_max].
    Box { psi_max: f64 },
    /// Pin ψ to zero along whole grid rows/columns.
    Pinning { rows: Vec<usize>, cols: Vec<usize> },
}

impl GridConstraint {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            GridConstraint::None => Ok(()),
            GridConstraint::Box { psi_max } => {
                if !(*psi_max > 0.0) || !psi_max.is_finite() {
                    Err(invalid(format!("psi_max {psi_max} must be finite and > 0")))
                } else {
                    Ok(())
                }
            }
            GridConstraint::Pinning { rows, cols } => {
                if rows.is_empty() && cols.is_empty() {
                    return Err(invalid("pinning needs at least one line"));
                }
                if rows.iter().chain(cols).any(|&l| l >= n) {
                    return Err(invalid(format!("pinned line outside grid of size {n}")));
                }
                Ok(())
            }
        }
    }

    fn is_none(&self) -> bool {
        matches!(self, GridConstraint::None)
    }
}

/// Enforces a constraint on ψ and restores the zero-mean gauge.
///
/// Box: alternating projections between the clip set and the zero-mean
/// hyperplane, so the result satisfies both to rounding. Pinning: pinned
/// lines are set exactly to zero and the mean of the remaining cells is
/// removed from them, which keeps the lines at zero and the total mean zero
/// simultaneously. Both maps are idempotent.
pub fn apply_constraint(psi: &GridField, constraint: &GridConstraint) -> GridField {
    let n = psi.n();
    constraint.validate(n).expect("constraint invariant");
    match constraint {
        GridConstraint::None => psi.clone(),
        GridConstraint::Box { psi_max } => {
            let cap = *psi_max;
            let mut out = psi.clone();
            let tol = 1e-14 * cap.max(1.0);
            for _ in 0..200 {
                for v in out.values_mut() {
                    *v = v.clamp(-cap, cap);
                }
                let m = out.mean();
                if m.abs() <= tol && out.max_abs() <= cap + tol {
                    break;
                }
                for v in out.values_mut() {
                    *v -= m;
                }
            }
            out
        }
        GridConstraint::Pinning { rows, cols } => {
            let mut out = psi.clone();
            let mut pinned = vec![false; n * n];
            for &r in rows {
                for j in 0..n {
                    pinned[r * n + j] = true;
                }
            }
            for &c in cols {
                for i in 0..n {
                    pinned[i * n + c] = true;
                }
            }
            let mut sum = 0.0;
            let mut free = 0usize;
            for (v, p) in out.values_mut().iter_mut().zip(&pinned) {
                if *p {
                    *v = 0.0;
                } else {
                    sum += *v;
                    free += 1;
                }
            }
            if free > 0 {
                let m = sum / free as f64;
                for (v, p) in out.values_mut().iter_mut().zip(&pinned) {
                    if !*p {
                        *v -= m;
                    }
                }
            }
            out
        }
    }
}

/// Dirichlet Poisson solve on the torus minus pinned lines: Δψ = ω on free
/// cells with ψ = 0 on the lines, by conjugate gradients (the masked −Δ is
/// symmetric positive definite). The pinned dynamics uses this instead of
/// re-deriving ω from a line-zeroed ψ, which would pump enstrophy through
/// the kinks and diverge.
struct PinnedPoisson {
    n: usize,
    free_cells: Vec<u32>,
    /// free-numbered neighbors, u32::MAX for pinned ones
    neighbors: Vec<[u32; 4]>,
}

const PINNED_TOL: f64 = 1e-12;

impl PinnedPoisson {
    fn new(n: usize, pinned: &[bool]) -> Self {
        let mut number = vec![u32::MAX; n * n];
        let mut free_cells = Vec::new();
        for (cell, &p) in pinned.iter().enumerate() {
            if !p {
                number[cell] = free_cells.len() as u32;
                free_cells.push(cell as u32);
            }
        }
        let neighbors = free_cells
            .iter()
            .map(|&cell| {
                let (i, j) = ((cell as usize) / n, (cell as usize) % n);
                [
                    number[((i + 1) % n) * n + j],
                    number[((i + n - 1) % n) * n + j],
                    number[i * n + (j + 1) % n],
                    number[i * n + (j + n - 1) % n],
                ]
            })
            .collect();
        Self { n, free_cells, neighbors }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let scale = (self.n * self.n) as f64;
        for (m, nbrs) in self.neighbors.iter().enumerate() {
            let mut acc = 4.0 * x[m];
            for &nb in nbrs {
                if nb != u32::MAX {
                    acc -= x[nb as usize];
                }
            }
            out[m] = acc * scale;
        }
    }

    /// Solves for ψ given ω; `warm` is the previous solution's free values.
    fn invert(&self, omega: &GridField, warm: Option<&[f64]>) -> Result<(GridField, Vec<f64>)> {
        let m = self.free_cells.len();
        let b: Vec<f64> = self.free_cells.iter().map(|&c| -omega.values()[c as usize]).collect();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut x = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; m]);
        let mut ax = vec![0.0; m];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
        let mut p = r.clone();
        let mut rs: f64 = r.iter().map(|v| v * v).sum();
        let mut q = vec![0.0; m];
        let max_iters = 20 * self.n * self.n;
        let mut converged = rs.sqrt() <= PINNED_TOL * bnorm;
        for _ in 0..max_iters {
            if converged {
                break;
            }
            self.apply(&p, &mut q);
            let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
            if pq <= 0.0 {
                break;
            }
            let alpha = rs / pq;
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let rs_next: f64 = r.iter().map(|v| v * v).sum();
            if rs_next.sqrt() <= PINNED_TOL * bnorm {
                converged = true;
                break;
            }
            let beta = rs_next / rs;
            for i in 0..m {
                p[i] = r[i] + beta * p[i];
            }
            rs = rs_next;
        }
        if !converged {
            return Err(Error::NumericalFailure("pinned poisson solve stalled".into()));
        }
        let mut psi = GridField::zeros(self.n);
        for (v, &c) in x.iter().zip(&self.free_cells) {
            psi.values_mut()[c as usize] = *v;
        }
        Ok((psi, x))
    }
}

#[derive(Clone, Debug)]
pub struct GridSimConfig {
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub constraint: GridConstraint,
    pub seed: u64,
    pub snapshot_every: usize,
}

impl GridSimConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(invalid(format!("grid size {} below minimum 8", self.n)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt {} must be > 0", self.dt)));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be >= 1"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.snapshot_every == 0 {
            return Err(invalid("snapshot_every must be >= 1"));
        }
        self.constraint.validate(self.n)
    }
}

#[derive(Clone, Debug)]
pub struct GridSnapshot {
    pub step: usize,
    pub t: f64,
    pub psi: GridField,
}

#[derive(Clone, Debug)]
pub struct SpectrumSample {
    pub step: usize,
    pub t: f64,
    pub report: SpectrumReport,
}

#[derive(Clone, Debug)]
pub struct GridSimOutput {
    pub snapshots: Vec<GridSnapshot>,
    pub spectra: Vec<SpectrumSample>,
}

impl GridSimOutput {
    fn record(&mut self, step: usize, t: f64, psi: &GridField) {
        self.snapshots.push(GridSnapshot { step, t, psi: psi.clone() });
        self.spectra.push(SpectrumSample { step, t, report: shell_spectrum(psi) });
    }

    pub fn final_psi(&self) -> &GridField {
        &self.snapshots.last().expect("at least the initial snapshot").psi
    }

    pub fn final_report(&self) -> &SpectrumReport {
        &self.spectra.last().expect("at least the initial snapshot").report
    }
}

/// Runs the §-style loop: advect (Cayley), add noise, invert, constrain.
/// Snapshots are recorded at step 0, every `snapshot_every` steps and at the
/// final step. Deterministic for a given seed.
pub fn run_grid_sim(initial_psi: &GridField, config: &GridSimConfig) -> Result<GridSimOutput> {
    config.validate()?;
    if initial_psi.n() != config.n {
        return Err(invalid(format!(
            "initial field size {} does not match configured n {}",
            initial_psi.n(),
            config.n
        )));
    }
    if !initial_psi.is_finite() {
        return Err(invalid("initial field has non-finite values"));
    }
    let mut stream = NoiseStream::derived(config.seed, "grid-sim", 0);
    let mut out = GridSimOutput { snapshots: Vec::new(), spectra: Vec::new() };
    let solver = PeriodicPoisson::new(config.n);
    let c = config.dt / 2.0;

    let should_record =
        |step: usize| step % config.snapshot_every == 0 || step == config.steps;

    if let GridConstraint::Pinning { rows, cols } = &config.constraint {
        // gauge fixed by the pinned lines; omega is the marched variable
        let mut pinned = vec![false; config.n * config.n];
        for &r in rows {
            for j in 0..config.n {
                pinned[r * config.n + j] = true;
            }
        }
        for &cc in cols {
            for i in 0..config.n {
                pinned[i * config.n + cc] = true;
            }
        }
        let dirichlet = PinnedPoisson::new(config.n, &pinned);
        let mut psi = apply_constraint(initial_psi, &config.constraint);
        let mut omega = laplacian_apply(&psi);
        omega.project_zero_mean();
        let (psi0, mut warm_psi) = dirichlet.invert(&omega, None)?;
        psi = psi0;
        out.record(0, 0.0, &psi);
        for step in 1..=config.steps {
            let advected = cayley_solve(&psi, &omega, c, None)?;
            omega = inject_noise(&advected, config.epsilon, config.dt, &mut stream);
            let (next_psi, warm) = dirichlet.invert(&omega, Some(&warm_psi))?;
            psi = next_psi;
            warm_psi = warm;
            if !psi.is_finite() || psi.max_abs() > BLOWUP_LIMIT {
                return Err(Error::BlowUp { step });
            }
            if should_record(step) {
                out.record(step, step as f64 * config.dt, &psi);
            }
        }
        return Ok(out);
    }

    let mut psi = initial_psi.clone();
    psi.project_zero_mean();
    if !config.constraint.is_none() {
        psi = apply_constraint(&psi, &config.constraint);
    }
    out.record(0, 0.0, &psi);
    for step in 1..=config.steps {
        let omega = laplacian_apply(&psi);
        let advected = cayley_solve(&psi, &omega, c, None)?;
        let noised = inject_noise(&advected, config.epsilon, config.dt, &mut stream);
        psi = solver.invert(&noised)?;
        if !config.constraint.is_none() {
            psi = apply_constraint(&psi, &config.constraint);
        }
        if !psi.is_finite() || psi.max_abs() > BLOWUP_LIMIT {
            return Err(Error::BlowUp { step });
        }
        if should_record(step) {
            out.record(step, step as f64 * config.dt, &psi);
        }
    }
    Ok(out)
}

/// Discrete Laplacian eigenfield cos(2π(k·x)/1) on the n-grid; a stationary
/// solution of the unforced scheme.
pub fn eigenmode_field(n: usize, k1: i64, k2: i64) -> GridField {
    let mut f = GridField::from_fn(n, |x1, x2| {
        (std::f64::consts::TAU * (k1 as f64 * x1 + k2 as f64 * x2)).cos()
    });
    f.project_zero_mean();
    f
}
