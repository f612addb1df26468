//! The six experiment runners. Each validates nothing beyond what the core
//! enforces (configs arrive pre-validated), writes its outputs under the
//! given directory, and returns a short key=value summary for the log line.

use std::path::Path;
use std::result::Result;
use std::sync::Arc;

use euler2d::*;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::*;
use crate::io::{write_snapshot, write_timeseries, Cell, GridConstraintMeta, SnapshotMeta};
use crate::Failure;

fn mode_set(truncation: u32) -> Result<Arc<ModeSet>, Failure> {
    Ok(Arc::new(ModeSet::new(truncation)?))
}

fn measure_kind(m: MeasureConfig) -> MeasureKind {
    match m {
        MeasureConfig::Enstrophy => MeasureKind::EnstrophyGaussian,
        MeasureConfig::Energy => MeasureKind::EnergyGaussian,
    }
}

fn ou_kind(m: MeasureConfig) -> OuKind {
    match m {
        MeasureConfig::Enstrophy => OuKind::Enstrophy,
        MeasureConfig::Energy => OuKind::Energy,
    }
}

fn measure_name(m: MeasureConfig) -> &'static str {
    match m {
        MeasureConfig::Enstrophy => "enstrophy",
        MeasureConfig::Energy => "energy",
    }
}

fn noise_profile(p: &NoiseProfileConfig) -> NoiseProfile {
    match p {
        NoiseProfileConfig::Uniform => NoiseProfile::Uniform,
        NoiseProfileConfig::InverseK2 => NoiseProfile::InverseKSq,
        NoiseProfileConfig::Custom(s) => NoiseProfile::Custom(s.clone()),
    }
}

fn grid_constraint(c: &ConstraintConfig) -> GridConstraint {
    match c {
        ConstraintConfig::None => GridConstraint::None,
        ConstraintConfig::Box { psi_max } => GridConstraint::Box { psi_max: *psi_max },
        ConstraintConfig::Pinning { rows, cols } => {
            GridConstraint::Pinning { rows: rows.clone(), cols: cols.clone() }
        }
    }
}

pub fn run_simulate_spectral(
    c: &SimulateSpectralConfig,
    out: &Path,
) -> Result<String, Failure> {
    let modes = mode_set(c.truncation)?;
    let initial = match &c.initial {
        InitialConfig::SingleMode { k1, k2, re, im } => SpectralState::single_mode(
            Arc::clone(&modes),
            ModeIndex::new(*k1, *k2),
            Complex64::new(*re, *im),
        )?,
        InitialConfig::Sample(m) => {
            let measure = MeasureSpec::new(measure_kind(*m), Arc::clone(&modes))?;
            let mut stream = NoiseStream::derived(c.seed, "initial-state", 0);
            sample_gaussian(&measure, &mut stream)?
        }
    };
    let drift = match &c.drift {
        DriftConfig::Euler => DriftKind::Euler,
        DriftConfig::EulerPlusOu(m) => DriftKind::EulerPlusOu(ou_family(ou_kind(*m), &modes)),
    };
    let noise = NoiseSpec::new(c.epsilon, noise_profile(&c.noise_profile))?;
    let scheme = match c.scheme {
        SchemeConfig::Rk4 => Scheme::Rk4,
        SchemeConfig::EulerMaruyama => Scheme::EulerMaruyama,
    };
    let sim = SimConfig {
        dt: c.dt,
        steps: c.steps,
        seed: c.seed,
        record_every: c.record_every.min(c.steps),
        scheme,
    };
    let traj = simulate(&initial, &sim, &drift, &noise)?;

    let rows: Vec<Vec<Cell>> = traj
        .times
        .iter()
        .zip(&traj.energy)
        .zip(&traj.enstrophy)
        .map(|((t, e), s)| vec![Cell::Float(*t), Cell::Float(*e), Cell::Float(*s)])
        .collect();
    write_timeseries(&out.join("series.csv"), &["t", "energy", "enstrophy"], &rows)?;

    let last = traj.states.last().expect("trajectory has snapshots");
    let state_rows: Vec<Vec<Cell>> = modes
        .modes()
        .iter()
        .zip(last.amps())
        .map(|(k, a)| {
            vec![Cell::Int(k.k1), Cell::Int(k.k2), Cell::Float(a.re), Cell::Float(a.im)]
        })
        .collect();
    write_timeseries(&out.join("final_state.csv"), &["k1", "k2", "re", "im"], &state_rows)?;

    let e0 = traj.energy[0];
    let e1 = *traj.energy.last().unwrap();
    Ok(format!("final_energy={e1:.6e} energy_drift={:.3e}", (e1 - e0).abs() / e0.max(1e-300)))
}

fn spectrum_rows(samples: &[SpectrumSample]) -> (Vec<String>, Vec<Vec<Cell>>) {
    let shells = samples.iter().map(|s| s.report.shell_energy.len()).max().unwrap_or(0);
    let mut header: Vec<String> = vec!["step".into(), "t".into(), "total_energy".into(),
        "enstrophy".into()];
    for m in 0..shells {
        header.push(format!("shell_{m}"));
    }
    header.push("lowest_shell_fraction".into());
    let rows = samples
        .iter()
        .map(|s| {
            let mut row = vec![
                Cell::Int(s.step as i64),
                Cell::Float(s.t),
                Cell::Float(s.report.total_energy),
                Cell::Float(s.report.enstrophy),
            ];
            for m in 0..shells {
                row.push(Cell::Float(
                    s.report.shell_energy.get(m).copied().unwrap_or(0.0),
                ));
            }
            row.push(Cell::Float(s.report.lowest_shell_fraction));
            row
        })
        .collect();
    (header, rows)
}

pub fn run_simulate_grid(c: &SimulateGridConfig, out: &Path) -> Result<String, Failure> {
    let constraint = grid_constraint(&c.constraint);
    let config = GridSimConfig {
        n: c.n,
        dt: c.dt,
        steps: c.steps,
        epsilon: c.epsilon,
        constraint: constraint.clone(),
        seed: c.seed,
        snapshot_every: c.snapshot_every,
    };
    let initial = eigenmode_field(c.n, c.initial_mode.k1, c.initial_mode.k2);
    let result = run_grid_sim(&initial, &config)?;

    let (header, rows) = spectrum_rows(&result.spectra);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_timeseries(&out.join("spectrum.csv"), &header_refs, &rows)?;

    let meta_constraint = GridConstraintMeta::from(&constraint);
    for snap in &result.snapshots {
        let meta = SnapshotMeta {
            n: c.n,
            t: snap.t,
            step: snap.step,
            seed: c.seed,
            epsilon: c.epsilon,
            constraint: &meta_constraint,
        };
        write_snapshot(
            &snap.psi,
            &meta,
            &out.join(format!("snapshot_{:06}.f64", snap.step)),
        )?;
    }
    let report = result.final_report();
    Ok(format!(
        "snapshots={} lowest_shell_fraction={:.4}",
        result.snapshots.len(),
        report.lowest_shell_fraction
    ))
}

pub fn run_check_invariance(c: &CheckInvarianceConfig, out: &Path) -> Result<String, Failure> {
    let modes = mode_set(c.truncation)?;
    let mut stream = NoiseStream::derived(c.seed, "invariance-states", 0);
    let states: Vec<SpectralState> = (0..c.states)
        .map(|_| {
            let mut s = SpectralState::zero(Arc::clone(&modes));
            for i in 0..s.len() {
                let (re, im) = stream.normal_pair();
                s.amps_mut()[i] =
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            }
            s
        })
        .collect();

    let mut rows = Vec::new();
    let mut max_im6_rel = 0.0f64;
    let mut max_sp4_rel = 0.0f64;
    for &m in &c.measures {
        let spec = MeasureSpec::new(measure_kind(m), Arc::clone(&modes))?;
        let ou = ou_family(ou_kind(m), &modes);
        for (i, s) in states.iter().enumerate() {
            let b = euler_drift(s);
            let im6 = im6_residual(&spec, euler_drift, s)?;
            let sp4 = sp4_residual(&spec, &ou, s)?;
            let im6_rel = im6.abs() / (1.0 + b.coord_norm());
            let sp4_rel = sp4.abs() / (1.0 + s.coord_norm().powi(2));
            max_im6_rel = max_im6_rel.max(im6_rel);
            max_sp4_rel = max_sp4_rel.max(sp4_rel);
            rows.push(vec![
                Cell::Int(i as i64),
                Cell::Text(measure_name(m).into()),
                Cell::Float(im6),
                Cell::Float(sp4),
                Cell::Float(b.coord_norm()),
                Cell::Float(s.coord_norm()),
            ]);
        }
    }
    write_timeseries(
        &out.join("residuals.csv"),
        &["state", "measure", "im6_residual", "sp4_residual", "drift_norm", "state_norm"],
        &rows,
    )?;
    println!("max |IM6 residual| (relative) = {max_im6_rel:.3e}");
    println!("max |SP4 residual| (relative) = {max_sp4_rel:.3e}");
    Ok(format!("max_im6_rel={max_im6_rel:.3e} max_sp4_rel={max_sp4_rel:.3e}"))
}

struct DensityProblem {
    drift: Box<dyn Fn(&[f64], &mut [f64]) + Sync>,
    domain: DomainSpec,
    boundary: BoundaryFunction,
}

fn density_problem(
    truncation: u32,
    coords: &[CoordConfig],
    domain: &DomainConfig,
    boundary: &BoundaryConfig,
) -> Result<DensityProblem, Failure> {
    let modes = mode_set(truncation)?;
    let coord_pairs: Vec<(ModeIndex, Component)> = coords
        .iter()
        .map(|c| {
            let comp = match c.component {
                ComponentConfig::Re => Component::Re,
                ComponentConfig::Im => Component::Im,
            };
            (ModeIndex::new(c.k1, c.k2), comp)
        })
        .collect();
    let drift = euler_z_reduction(&modes, &coord_pairs)?;
    let domain = match domain {
        DomainConfig::Box { half_widths } => DomainSpec::Box { half_widths: half_widths.clone() },
        DomainConfig::Ball { radius } => {
            DomainSpec::Ball { radius: *radius, dim: coords.len() }
        }
    };
    let boundary = match boundary {
        BoundaryConfig::Constant(v) => BoundaryFunction::Constant(*v),
        BoundaryConfig::Coordinate(i) => {
            if *i >= coords.len() {
                return Err(Failure::Config(format!(
                    "boundary coordinate index {i} out of range for {} coordinates",
                    coords.len()
                )));
            }
            BoundaryFunction::Coordinate(*i)
        }
        BoundaryConfig::Enstrophy => BoundaryFunction::EnstrophyGaussian {
            ksq: coord_pairs.iter().map(|(k, _)| k.norm_sq() as f64).collect(),
        },
    };
    Ok(DensityProblem { drift: Box::new(drift), domain, boundary })
}

fn estimate_cells(z: &[f64], eps: f64, est: &DensityEstimate) -> Vec<Cell> {
    let mut row = vec![Cell::Float(eps)];
    row.extend(z.iter().map(|v| Cell::Float(*v)));
    row.extend([
        Cell::Float(est.value),
        Cell::Float(est.stderr),
        Cell::Int(est.paths as i64),
        Cell::Float(est.mean_exit_time),
        Cell::Int(est.max_steps_hit as i64),
    ]);
    row
}

fn density_header(dim: usize) -> Vec<String> {
    let mut h = vec!["epsilon".to_string()];
    for i in 0..dim {
        h.push(format!("z{i}"));
    }
    h.extend(["value", "stderr", "paths", "mean_exit_time", "flagged"].map(String::from));
    h
}

pub fn run_estimate_density(c: &EstimateDensityConfig, out: &Path) -> Result<String, Failure> {
    let problem = density_problem(c.truncation, &c.coords, &c.domain, &c.boundary)?;
    let est = estimate_density(
        &problem.drift,
        c.epsilon,
        &problem.domain,
        &problem.boundary,
        &c.z0,
        c.paths,
        c.dt,
        c.seed,
    )?;
    let header = density_header(c.z0.len());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_timeseries(
        &out.join("density.csv"),
        &header_refs,
        &[estimate_cells(&c.z0, c.epsilon, &est)],
    )?;
    Ok(format!(
        "value={:.6e} stderr={:.2e} mean_exit_time={:.3e} flagged={}",
        est.value,
        est.stderr,
        est.mean_exit_time,
        est.max_steps_hit
    ))
}

pub fn run_sweep_epsilon(c: &SweepEpsilonConfig, out: &Path) -> Result<String, Failure> {
    let problem = density_problem(c.truncation, &c.coords, &c.domain, &c.boundary)?;
    let entries = epsilon_sweep(
        &problem.drift,
        &problem.domain,
        &problem.boundary,
        &c.z_points,
        &c.epsilons,
        c.paths,
        c.dt0,
        c.seed,
    )?;
    let dim = c.coords.len();
    let header = density_header(dim);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = entries
        .iter()
        .map(|e| estimate_cells(&e.z, e.epsilon, &e.estimate))
        .collect();
    write_timeseries(&out.join("sweep.csv"), &header_refs, &rows)?;

    // successive-difference table per point (convergence evidence)
    let mut diff_rows = Vec::new();
    let mut max_diff = 0.0f64;
    for z in &c.z_points {
        let series: Vec<&SweepEntry> = entries.iter().filter(|e| &e.z == z).collect();
        for w in series.windows(2) {
            let d = (w[1].estimate.value - w[0].estimate.value).abs();
            let se = (w[0].estimate.stderr.powi(2) + w[1].estimate.stderr.powi(2)).sqrt();
            max_diff = max_diff.max(d);
            let mut row: Vec<Cell> = z.iter().map(|v| Cell::Float(*v)).collect();
            row.extend([
                Cell::Float(w[0].epsilon),
                Cell::Float(w[1].epsilon),
                Cell::Float(d),
                Cell::Float(se),
            ]);
            diff_rows.push(row);
        }
    }
    let mut diff_header: Vec<String> = (0..dim).map(|i| format!("z{i}")).collect();
    diff_header.extend(["eps_hi", "eps_lo", "abs_difference", "combined_stderr"].map(String::from));
    let diff_refs: Vec<&str> = diff_header.iter().map(String::as_str).collect();
    write_timeseries(&out.join("sweep_differences.csv"), &diff_refs, &diff_rows)?;
    Ok(format!("cells={} max_successive_difference={max_diff:.3e}", entries.len()))
}

pub fn run_condensation(c: &CondensationConfig, out: &Path) -> Result<String, Failure> {
    let constraint = grid_constraint(&c.constraint);
    let initial = eigenmode_field(c.n, c.initial_mode.k1, c.initial_mode.k2);
    let results: Vec<Result<(u64, GridSimOutput), Error>> = (0..c.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let run_seed = derive_seed(c.seed, "condensation-run", i);
            let config = GridSimConfig {
                n: c.n,
                dt: c.dt,
                steps: c.steps,
                epsilon: c.epsilon,
                constraint: constraint.clone(),
                seed: run_seed,
                snapshot_every: c.snapshot_every,
            };
            run_grid_sim(&initial, &config).map(|out| (run_seed, out))
        })
        .collect();

    let meta_constraint = GridConstraintMeta::from(&constraint);
    let mut rows = Vec::new();
    let mut fractions = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        let (run_seed, output) = result?;
        let report = output.final_report();
        fractions.push(report.lowest_shell_fraction);
        rows.push(vec![
            Cell::Int(i as i64),
            Cell::Uint(run_seed),
            Cell::Float(report.lowest_shell_fraction),
            Cell::Float(report.total_energy),
            Cell::Float(report.enstrophy),
        ]);
        let last = output.snapshots.last().expect("snapshots");
        let meta = SnapshotMeta {
            n: c.n,
            t: last.t,
            step: last.step,
            seed: run_seed,
            epsilon: c.epsilon,
            constraint: &meta_constraint,
        };
        write_snapshot(&last.psi, &meta, &out.join(format!("final_run{i:02}.f64")))?;
    }
    write_timeseries(
        &out.join("fractions.csv"),
        &["run", "seed", "lowest_shell_fraction", "total_energy", "enstrophy"],
        &rows,
    )?;
    let condensed = fractions.iter().filter(|f| **f > 0.5).count();
    let mut sorted = fractions.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(format!("condensed={condensed}/{} median_fraction={median:.4}", c.seeds))
}
