//! Subcommand implementations. Each returns printable summary lines and
//! leaves its files plus a manifest in the output directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qtraj_core::darkperiods::{self, classify_periods, heatmap_cell, intensity_trace, HeatmapGrid, P0Decomposition, Statistic};
use qtraj_core::master::{evolve_master, steady_scan, DensityMatrix, ScanBasis};
use qtraj_core::models::{ModelKind, ModelSpec};
use qtraj_core::ode::Controls;
use qtraj_core::photonstats::{default_dtd, g2_analytic_rf, g2_estimate, stream_from_trajectory, tau_grid, PhotonStream};
use qtraj_core::rng::stream_seed;
use qtraj_core::trajectory::{run_trajectory_norm_threshold, EnsembleAccumulator, SampleGrid, Solver, Warning};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{InitialState, ModelSource, RunConfig, SolverConfig};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{RunManifest, UNITS};
use crate::parallel;

/// Result of a command: what to print and the manifest that was written.
#[derive(Debug)]
pub struct Report {
    pub lines: Vec<String>,
    pub manifest: RunManifest,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    pool: rayon::ThreadPool,
    started: Instant,
}

impl Ctx {
    fn new(cfg: &RunConfig) -> CliResult<Self> {
        let mut cfg = cfg.clone();
        let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("qtraj-out"));
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        cfg.output = Some(out.clone());
        cfg.seed = Some(cfg.seed());
        let pool = parallel::thread_pool(cfg.threads)?;
        // inline the model so the manifest alone replays the run
        if cfg.model.is_some() {
            cfg.model = Some(ModelSource::Inline(cfg.model_file()?));
        }
        Ok(Self { cfg, out, pool, started: Instant::now() })
    }

    fn model(&self) -> CliResult<ModelSpec> {
        self.cfg.model_file()?.build()
    }

    fn path(&self, name: &str, manifest: &mut RunManifest) -> PathBuf {
        manifest.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(&self, command: &str, mut manifest: RunManifest, mut lines: Vec<String>) -> CliResult<Report> {
        manifest.command = command.to_string();
        manifest.config = self.cfg.clone();
        manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        manifest.write(&self.out)?;
        lines.push(format!("wrote {} file(s) and manifest.json to {}", manifest.outputs.len(), self.out.display()));
        lines.push(format!("units: {UNITS}"));
        Ok(Report { lines, manifest })
    }
}

fn initial_state(cfg: &mut RunConfig, m: &ModelSpec) -> CliResult<qtraj_core::CVector> {
    let init = cfg.initial_state.clone().unwrap_or_else(|| InitialState::default_for(m.kind));
    cfg.initial_state = Some(init.clone());
    init.resolve(m)
}

fn warning_text(w: &Warning, index: usize) -> String {
    match w {
        Warning::ToleranceTooLoose { time, norm_sqr } => {
            format!("trajectory {index}: squared norm {norm_sqr:.3e} fell below atol at t = {time:.6}; tighten atol")
        }
    }
}

fn resolve_solver(cfg: &mut RunConfig, default_kind: &str) -> CliResult<Solver> {
    let s = cfg.solver.resolve(default_kind)?;
    cfg.solver = SolverConfig::from_solver(&s);
    Ok(s)
}

/// Individual trajectories plus their ensemble average.
pub fn simulate(cfg: &RunConfig) -> CliResult<Report> {
    trajectories(cfg, true)
}

/// Ensemble average only, with the master-equation reference alongside.
pub fn ensemble(cfg: &RunConfig) -> CliResult<Report> {
    trajectories(cfg, false)
}

fn trajectories(cfg: &RunConfig, per_trajectory: bool) -> CliResult<Report> {
    let mut ctx = Ctx::new(cfg)?;
    let m = ctx.model()?;
    let psi0 = initial_state(&mut ctx.cfg, &m)?;
    let solver = resolve_solver(&mut ctx.cfg, "molmer")?;
    let t_final = *ctx.cfg.t_final.get_or_insert(10.0);
    let n_traj = *ctx.cfg.n_traj.get_or_insert(if per_trajectory { 1 } else { 100 });
    let samples = *ctx.cfg.samples.get_or_insert(200);
    if samples == 0 {
        return Err(CliError::config("samples must be at least 1"));
    }
    let seed = ctx.cfg.seed();
    let grid = SampleGrid::uniform(t_final, samples);
    let mut manifest = RunManifest::new("", ctx.cfg.clone());
    manifest.derive_model(&m);
    manifest.derive("trajectory_seed_rule", "mix64(master + (i + 1) * 0x9E3779B97F4A7C15)");

    let ens = if per_trajectory {
        let recs = parallel::run_trajectories(&ctx.pool, &m, &psi0, t_final, &solver, n_traj, seed, &grid)?;
        let mut acc = EnsembleAccumulator::new(seed);
        for (i, r) in recs.iter().enumerate() {
            acc.add(r)?;
            let p = ctx.path(&format!("trajectory_{i:04}.csv"), &mut manifest);
            io::write_trajectory_csv(&p, r, &m.basis)?;
            let p = ctx.path(&format!("jumps_{i:04}.csv"), &mut manifest);
            io::write_jumps_csv(&p, r)?;
            if let Ok(s) = stream_from_trajectory(r, None) {
                let p = ctx.path(&format!("photons_{i:04}.txt"), &mut manifest);
                io::write_stream(&p, &s)?;
            }
            manifest.warnings.extend(r.warnings.iter().map(|w| warning_text(w, i)));
        }
        acc.finish()?
    } else {
        parallel::run_ensemble(&ctx.pool, &m, &psi0, t_final, &solver, n_traj, seed, &grid)?
    };
    let master = evolve_master(&m, &DensityMatrix::pure(&psi0)?, &ens.times, Controls::default())?;
    let p = ctx.path("ensemble.csv", &mut manifest);
    io::write_ensemble_csv(&p, &ens, &m.basis, Some(&master))?;
    manifest.derive("total_jumps", ens.total_jumps);

    let last = ens.mean_populations.last().cloned().unwrap_or_default();
    let lines = vec![
        format!("{} trajectories of the {} model to t = {t_final} with {} (seed {seed})", n_traj, m.kind, solver.name()),
        format!("total jumps: {}", ens.total_jumps),
        format!(
            "final mean populations: {}",
            m.basis.iter().zip(&last).map(|(l, p)| format!("{l}={p:.6}")).collect::<Vec<_>>().join(" ")
        ),
    ];
    ctx.finish(if per_trajectory { "simulate" } else { "ensemble" }, manifest, lines)
}

fn two_atom_params(m: &ModelSpec) -> CliResult<qtraj_core::AtomParams> {
    if !m.kind.is_two_atom() {
        return Err(CliError::config(format!("this command needs a two-atom model, got {}", m.kind)));
    }
    Ok(m.params)
}

/// Local maxima of a series, as indices.
pub fn local_maxima(xs: &[Option<f64>]) -> Vec<usize> {
    (1..xs.len().saturating_sub(1))
        .filter(|&i| match (xs[i - 1], xs[i], xs[i + 1]) {
            (Some(a), Some(b), Some(c)) => b > a && b >= c,
            _ => false,
        })
        .collect()
}

/// Steady-state populations against total detuning.
pub fn steadyscan(cfg: &RunConfig) -> CliResult<Report> {
    let mut ctx = Ctx::new(cfg)?;
    let m = ctx.model()?;
    let p = two_atom_params(&m)?;
    let sc = &mut ctx.cfg.scan;
    let lo = *sc.delta_min.get_or_insert(-60.0);
    let hi = *sc.delta_max.get_or_insert(60.0);
    let step = *sc.delta_step.get_or_insert(0.5);
    let basis = match sc.basis.get_or_insert_with(|| "eigen".into()).as_str() {
        "eigen" => ScanBasis::Eigen,
        "product" => ScanBasis::Product,
        other => return Err(CliError::config(format!("unknown scan basis '{other}' (eigen | product)"))),
    };
    if !(step > 0.0) || !(hi >= lo) {
        return Err(CliError::config("scan needs delta_step > 0 and delta_max >= delta_min"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let chunks: Vec<_> = ctx.pool.install(|| grid.par_chunks(16).map(|g| steady_scan(&p, g, basis)).collect());
    let mut scan = chunks.into_iter().next().transpose()?.expect("non-empty grid");
    let mut offset = scan.detunings.len();
    for part in grid.chunks(16).skip(1).map(|g| steady_scan(&p, g, basis)) {
        let part = part?;
        scan.failures.extend(part.failures.iter().map(|(i, e)| (i + offset, e.clone())));
        offset += part.detunings.len();
        scan.detunings.extend(part.detunings);
        scan.populations.extend(part.populations);
        scan.degenerate.extend(part.degenerate);
    }
    let mut manifest = RunManifest::new("", ctx.cfg.clone());
    manifest.derive_model(&m);
    manifest.failures = scan.failures.iter().map(|(i, e)| format!("delta = {}: {e}", scan.detunings[*i])).collect();
    let path = ctx.path("steady_scan.csv", &mut manifest);
    io::write_scan_csv(&path, &scan)?;
    let peaks: Vec<f64> = local_maxima(&scan.excited_manifold()).into_iter().map(|i| scan.detunings[i]).collect();
    manifest.derive("excited_manifold_peaks", &peaks);
    let lines = vec![
        format!("steady states at {} detunings in [{lo}, {hi}]", scan.detunings.len()),
        format!("excited-manifold maxima at delta = {peaks:?}"),
        format!("{} failed point(s), {} degenerate point(s)", scan.failures.len(), scan.degenerate.iter().filter(|d| **d).count()),
    ];
    ctx.finish("steadyscan", manifest, lines)
}

/// HBT estimate of g²(τ) from a stream file or a simulated run.
pub fn g2(cfg: &RunConfig) -> CliResult<Report> {
    let mut ctx = Ctx::new(cfg)?;
    let seed = ctx.cfg.seed();
    let mut manifest = RunManifest::new("", ctx.cfg.clone());
    let mut lines = Vec::new();
    let mut model = None;
    let stream = match ctx.cfg.g2.stream.clone() {
        Some(p) => io::read_stream(&p)?,
        None => {
            let m = ctx.model()?;
            let psi0 = initial_state(&mut ctx.cfg, &m)?;
            let Solver::NormThreshold(ctl) = resolve_solver(&mut ctx.cfg, "norm_threshold")? else {
                return Err(CliError::config("g2 simulation uses the norm_threshold solver"));
            };
            let t_final = *ctx.cfg.t_final.get_or_insert(50_000.0);
            let rec = run_trajectory_norm_threshold(&m, &psi0, t_final, ctl, stream_seed(seed, 0), &SampleGrid::Endpoints)?;
            manifest.warnings.extend(rec.warnings.iter().map(|w| warning_text(w, 0)));
            let s = stream_from_trajectory(&rec, None)?;
            let p = ctx.path("photons.txt", &mut manifest);
            io::write_stream(&p, &s)?;
            manifest.derive_model(&m);
            model = Some(m);
            s
        }
    };
    let dtd = match ctx.cfg.g2.dtd {
        Some(d) => d,
        None => default_dtd(&stream).ok_or(qtraj_core::Error::EmptyDetector(1))?,
    };
    ctx.cfg.g2.dtd = Some(dtd);
    let tau_max = *ctx.cfg.g2.tau_max.get_or_insert(10.0);
    let taus = tau_grid(dtd, tau_max);
    let curve = g2_estimate(&stream, dtd, &taus, stream_seed(seed, 1))?;
    let p = ctx.path("g2.csv", &mut manifest);
    io::write_g2_csv(&p, &curve)?;
    if let Some(m) = model.as_ref().filter(|m| m.kind == ModelKind::Driven && m.params.delta_total == 0.0) {
        let a = g2_analytic_rf(m.params.omega_rabi, m.params.gamma, &taus);
        let p = ctx.path("g2_analytic.csv", &mut manifest);
        io::write_g2_csv(&p, &a)?;
    }
    manifest.derive("photons", stream.len());
    manifest.derive("dtd", dtd);
    manifest.derive("bins_at_zero_delay", curve.m_bins);
    manifest.derive("g2_zero", curve.values[0]);
    lines.push(format!("{} photons over t = {:.3}; detection window {dtd:.4}", stream.len(), stream.duration()));
    lines.push(format!("g2(0) = {:.4}", curve.values[0]));
    ctx.finish("g2", manifest, lines)
}

/// Analytic light/dark statistics, optionally checked against a simulated stream.
pub fn darkstats(cfg: &RunConfig) -> CliResult<Report> {
    let mut ctx = Ctx::new(cfg)?;
    let m = ctx.model()?;
    two_atom_params(&m)?;
    let factor = *ctx.cfg.darkstats.t_apex_factor.get_or_insert(darkperiods::T_APEX_FACTOR);
    let simulate = *ctx.cfg.darkstats.simulate.get_or_insert(ctx.cfg.t_final.is_some());
    let mut manifest = RunManifest::new("", ctx.cfg.clone());
    manifest.derive_model(&m);
    let d = P0Decomposition::for_model(&m)?;
    let stats = d.period_stats_with_factor(factor)?;
    manifest.derive("t_apex", stats.t_apex);
    manifest.derive("orthogonality_defect", d.defect);
    let mut lines = vec![
        format!("T_apex = {:.4}, P0(T_apex) = {:.6}", stats.t_apex, stats.p0_at_apex),
        format!("analytic T_D = {:.2}, tau_L = {:.4}, n_L = {:.3}, T_L = {:.3}", stats.t_d, stats.tau_l, stats.n_l, stats.t_l),
        format!("orthogonality defect {:.3e}", d.defect),
    ];
    let mut report = json!({
        "analytic": stats,
        "eigenvalues": d.spectral.eigenvalues.iter().map(|l| [l.re, l.im]).collect::<Vec<_>>(),
        "weights": d.weights,
        "reset_state": d.reset_state.0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "orthogonality_defect": d.defect,
        "units": UNITS,
    });
    if simulate {
        let Solver::NormThreshold(ctl) = resolve_solver(&mut ctx.cfg, "norm_threshold")? else {
            return Err(CliError::config("darkstats simulation uses the norm_threshold solver"));
        };
        let t_final = *ctx.cfg.t_final.get_or_insert(2.0e6);
        let seed = ctx.cfg.seed();
        let rec = run_trajectory_norm_threshold(&m, &d.reset_state, t_final, ctl, stream_seed(seed, 0), &SampleGrid::Endpoints)?;
        manifest.warnings.extend(rec.warnings.iter().map(|w| warning_text(w, 0)));
        let s: PhotonStream = stream_from_trajectory(&rec, None)?;
        let c = classify_periods(&s, stats.t_apex)?;
        let p = ctx.path("photons.txt", &mut manifest);
        io::write_stream(&p, &s)?;
        let p = ctx.path("periods.csv", &mut manifest);
        io::write_periods_csv(&p, &c)?;
        let p = ctx.path("intensity.csv", &mut manifest);
        io::write_intensity_csv(&p, &intensity_trace(&s, stats.t_l)?)?;
        report["empirical"] = json!({
            "photons": s.len(),
            "t_final": t_final,
            "dark": c.dark,
            "light_gap": c.light_gap,
            "light_duration": c.light_duration,
            "photons_per_light": c.photons_per_light,
            "light_photons": c.light_gaps.len(),
            "dark_photons": c.dark_intervals.len(),
        });
        if let (Some(dk), Some(lg)) = (c.dark, c.light_gap) {
            lines.push(format!(
                "simulated ({} photons): T_D = {:.1} ± {:.1} ({} dark), tau_L = {:.3} ± {:.3}",
                s.len(),
                dk.mean,
                dk.sem,
                dk.n,
                lg.mean,
                lg.sem
            ));
        }
    }
    manifest.config = ctx.cfg.clone();
    let p = ctx.path("period_stats.json", &mut manifest);
    io::write_json(&p, &report)?;
    ctx.finish("darkstats", manifest, lines)
}

fn axis(lo: f64, hi: f64, n: usize, log: bool) -> CliResult<Vec<f64>> {
    if n == 0 || !(lo > 0.0) || !(hi >= lo) {
        return Err(CliError::config("heatmap axes need 0 < min <= max and at least one point"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect())
}

/// Period statistics over a `(V, δ)` grid.
pub fn heatmap(cfg: &RunConfig) -> CliResult<Report> {
    let mut ctx = Ctx::new(cfg)?;
    let m = ctx.model()?;
    let template = two_atom_params(&m)?;
    let h = &mut ctx.cfg.heatmap;
    let log = *h.log_axes.get_or_insert(true);
    let v_axis = axis(*h.v_min.get_or_insert(1.0), *h.v_max.get_or_insert(50.0), *h.n_v.get_or_insert(10), log)?;
    let d_axis = axis(*h.delta_min.get_or_insert(0.2), *h.delta_max.get_or_insert(20.0), *h.n_delta.get_or_insert(10), log)?;
    let cells = ctx.pool.install(|| {
        v_axis
            .par_iter()
            .map(|&v| d_axis.iter().map(|&d| heatmap_cell(&template, v, d)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    });
    let grid = HeatmapGrid { v_axis, delta_axis: d_axis, cells };
    let mut manifest = RunManifest::new("", ctx.cfg.clone());
    manifest.derive_model(&m);
    for (i, row) in grid.cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if let qtraj_core::darkperiods::HeatmapCell::Failed { reason, .. } = c {
                manifest.failures.push(format!("V = {:.6}, delta = {:.6}: {reason}", grid.v_axis[i], grid.delta_axis[j]));
            }
        }
    }
    for stat in Statistic::ALL {
        let p = ctx.path(&format!("heatmap_{}.csv", stat.name()), &mut manifest);
        io::write_heatmap_csv(&p, &grid, stat, false)?;
        let p = ctx.path(&format!("heatmap_{}_log10.csv", stat.name()), &mut manifest);
        io::write_heatmap_csv(&p, &grid, stat, true)?;
    }
    let p = ctx.path("heatmap_defect.csv", &mut manifest);
    io::write_defect_csv(&p, &grid)?;
    let max_defect = grid.cells.iter().flatten().filter_map(|c| c.defect()).fold(0.0, f64::max);
    manifest.derive("max_orthogonality_defect", max_defect);
    let lines = vec![
        format!("{} x {} cells, {} failed", grid.v_axis.len(), grid.delta_axis.len(), grid.failures()),
        format!("largest orthogonality defect {max_defect:.3e}"),
    ];
    ctx.finish("heatmap", manifest, lines)
}

/// Loads `path` when given, otherwise starts from an empty config.
pub fn base_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}
