//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Criteria listed in
//! `KNOWN_RED` are expected to fail and do not change the exit status
//! unless `QTRAJ_ACCEPTANCE_STRICT=1`; any other failure exits non-zero.
//! Pass criterion numbers as arguments to run a subset.

use std::time::{Duration, Instant};

use qtraj::parallel;
use qtraj_core::darkperiods::{classify_periods, heatmap, HeatmapGrid, P0Decomposition, Statistic};
use qtraj_core::linalg::CVector;
use qtraj_core::master::{consecutive_jump_ratio, emission_rate, evolve_master, liouvillian, steady_scan, steady_state_or_limit, DensityMatrix, ScanBasis};
use qtraj_core::models::{AtomParams, JumpOp, ModelKind, ModelSpec};
use qtraj_core::ode::Controls;
use qtraj_core::photonstats::{default_dtd, g2_analytic_rf, g2_estimate, stream_from_trajectory, tau_grid, PhotonStream};
use qtraj_core::rng::stream_seed;
use qtraj_core::trajectory::{run_ensemble, run_trajectory_norm_threshold, SampleGrid, Solver};
use qtraj_core::C64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEED: u64 = 20_240_601;
const KNOWN_RED: [u32; 4] = [5, 6, 9, 10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(parts: &mut Vec<String>, ok: bool, what: String) -> bool {
    parts.push(format!("{}{what}", if ok { "" } else { "[x] " }));
    ok
}

fn finish(parts: Vec<String>, all: bool, elapsed: Duration, budget: Duration) -> Outcome {
    let fast = elapsed <= budget;
    let mut detail = parts.join("; ");
    detail.push_str(&format!("; runtime {:.2}s (budget {:.0}s){}", elapsed.as_secs_f64(), budget.as_secs_f64(), if fast { "" } else { " [x]" }));
    Outcome { pass: all && fast, detail }
}

fn pool() -> rayon::ThreadPool {
    parallel::thread_pool(None).expect("thread pool")
}

fn dark_pair() -> AtomParams {
    AtomParams { v: 10.0, gamma12: 1.0, omega_rabi: 5.0, delta_diff: 2.0, ..Default::default() }.on_antisymmetric_resonance()
}

fn resolved_pair() -> AtomParams {
    AtomParams { delta_diff: 46.4, v: 19.3, gamma12: 0.18, omega_rabi: 6.0, ..Default::default() }
}

fn tight() -> Controls {
    Controls::new(1e-10, 1e-10)
}

fn simulated_stream(m: &ModelSpec, psi0: &CVector, t_final: f64, seed: u64) -> PhotonStream {
    let rec = run_trajectory_norm_threshold(m, psi0, t_final, tight(), seed, &SampleGrid::Endpoints).expect("trajectory");
    stream_from_trajectory(&rec, None).expect("photons")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::Relaxing, AtomParams { omega_atom: 1.0, ..Default::default() }).unwrap();
    let psi0 = CVector(vec![C64::new(0.9, 0.0), C64::new(0.19f64.sqrt(), 0.0)]);
    let n = 1000;
    let grid = SampleGrid::uniform(5.0, 49);
    let ens = parallel::run_ensemble(&pool(), &m, &psi0, 5.0, &Solver::Molmer { dt: 0.001 }, n, SEED, &grid).unwrap();
    let mut worst: f64 = 0.0;
    for (t, p) in ens.times.iter().zip(&ens.mean_populations) {
        let expected = 0.81 * (-t).exp();
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        worst = worst.max((p[0] - expected).abs() / se);
    }
    let mut parts = Vec::new();
    let ok = check(&mut parts, worst <= 4.0, format!("{} samples, worst deviation {worst:.2} binomial SE (limit 4)", ens.times.len()));
    finish(parts, ok, start.elapsed(), Duration::from_secs(30))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::Driven, AtomParams { gamma: 0.0, omega_rabi: 1.0, ..Default::default() }).unwrap();
    let psi0 = CVector::basis(2, 1);
    let rec = qtraj_core::trajectory::run_trajectory_molmer(&m, &psi0, 20.0, 0.001, SEED, &SampleGrid::Every(0.01)).unwrap();
    let worst = rec
        .times
        .iter()
        .zip(rec.populations())
        .map(|(t, p)| (p[0] - (t / 2.0).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    let mut parts = Vec::new();
    let ok = check(&mut parts, worst <= 1e-4, format!("max |P_e - sin^2(t/2)| = {worst:.2e} over {} samples (limit 1e-4)", rec.times.len()));
    finish(parts, ok, start.elapsed(), Duration::from_secs(1))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::Driven, AtomParams { omega_rabi: 5.0, ..Default::default() }).unwrap();
    let s = simulated_stream(&m, &CVector::basis(2, 1), 50_000.0, stream_seed(SEED, 0));
    let dtd = default_dtd(&s).unwrap();
    let taus = tau_grid(dtd, 10.0);
    let est = g2_estimate(&s, dtd, &taus, stream_seed(SEED, 1)).unwrap();
    let exact = g2_analytic_rf(5.0, 1.0, &taus);
    let near: Vec<f64> = taus
        .iter()
        .zip(est.values.iter().zip(&exact.values))
        .filter(|(t, _)| **t <= 3.0)
        .map(|(_, (a, b))| (a - b).powi(2))
        .collect();
    let rms = (near.iter().sum::<f64>() / near.len() as f64).sqrt();
    let tail: Vec<f64> = taus.iter().zip(&est.values).filter(|(t, _)| **t >= 5.0).map(|(_, v)| *v).collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let mut parts = vec![format!("{} photons, dtd {dtd:.4}", s.len())];
    let mut ok = check(&mut parts, est.values[0] < 0.2, format!("g2(0) = {:.4} (< 0.2)", est.values[0]));
    ok &= check(&mut parts, rms < 0.15, format!("RMS vs analytic on [0,3] = {rms:.4} (< 0.15)"));
    ok &= check(&mut parts, (tail_mean - 1.0).abs() <= 0.05, format!("mean g2 on [5,10] = {tail_mean:.4} (1 +- 0.05)"));
    finish(parts, ok, start.elapsed(), Duration::from_secs(120))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let maxima = |step: f64| {
        let n = (120.0 / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| -60.0 + k as f64 * step).collect();
        let scan = steady_scan(&resolved_pair(), &grid, ScanBasis::Product).unwrap();
        let peaks: Vec<f64> = qtraj::commands::local_maxima(&scan.excited_manifold()).into_iter().map(|i| scan.detunings[i]).collect();
        (scan, peaks)
    };
    // same grid as the steadyscan command default
    let step = 0.5;
    let (scan, peaks) = maxima(step);
    let (_, fine) = maxima(0.01);
    let lambda = ModelSpec::build(ModelKind::TwoAtomEigen, resolved_pair()).unwrap().eigen_coeffs.unwrap().lambda;
    let targets = [-30.2, 0.0, 30.2];
    let mut parts = Vec::new();
    let mut ok = check(
        &mut parts,
        peaks.len() == 3 && peaks.iter().zip(&targets).all(|(p, t)| (p - t).abs() <= step + 1e-9),
        format!("maxima at {peaks:?} (expect -30.2, 0, 30.2 +- {step})"),
    );
    ok &= check(&mut parts, (lambda - 30.2).abs() <= 0.05, format!("lambda = {lambda:.4} (30.2 +- 0.05)"));
    ok &= check(&mut parts, scan.failures.is_empty(), format!("{} failed scan points", scan.failures.len()));
    parts.push(format!("maxima on a 0.01 grid at {:?}", fine.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>()));
    finish(parts, ok, start.elapsed(), Duration::from_secs(30))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::TwoAtomProduct, resolved_pair()).unwrap();
    let (rho, _) = steady_state_or_limit(&m).unwrap();
    let rate = emission_rate(&m, &rho);
    let t_final = (20_000.0 / rate).clamp(50_000.0, 1_000_000.0);
    let s = simulated_stream(&m, &CVector::basis(4, 3), t_final, stream_seed(SEED, 0));
    let dtd = default_dtd(&s).unwrap();
    let est = g2_estimate(&s, dtd, &[0.0], stream_seed(SEED, 1)).unwrap();
    let ratio = consecutive_jump_ratio(&m).unwrap();
    let mut parts = vec![format!("{} photons over t = {t_final:.0}, dtd {dtd:.4}", s.len())];
    let mut ok = check(&mut parts, est.values[0] > 1.0, format!("g2(0) = {:.3} (> 1)", est.values[0]));
    ok &= check(&mut parts, (20.0..=45.0).contains(&ratio), format!("consecutive jump ratio = {ratio:.4} (20..45)"));
    finish(parts, ok, start.elapsed(), Duration::from_secs(300))
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::TwoAtomEigen, dark_pair()).unwrap();
    let s = P0Decomposition::for_model(&m).unwrap().period_stats().unwrap();
    let mut parts = Vec::new();
    let mut ok = check(&mut parts, within(s.t_apex, 114.0, 0.1), format!("T_apex = {:.2} (114 +- 10%)", s.t_apex));
    ok &= check(&mut parts, within(s.t_d, 43_000.0, 0.1), format!("T_D = {:.0} (43000 +- 10%)", s.t_d));
    ok &= check(&mut parts, within(s.tau_l, 13.8, 0.1), format!("tau_L = {:.3} (13.8 +- 10%)", s.tau_l));
    finish(parts, ok, start.elapsed(), Duration::from_secs(1))
}

/// Chi-square of dark-side intervals against `w₁` in equal-probability bins.
fn dark_side_chi_square(d: &P0Decomposition, t_apex: f64, dark: &[f64], bins: usize) -> (f64, f64) {
    let p0 = |t: f64| d.p0_approx(t).unwrap();
    let tail = p0(t_apex);
    let mut edges = vec![t_apex];
    for k in 1..bins {
        let target = tail * (1.0 - k as f64 / bins as f64);
        let (mut lo, mut hi) = (t_apex, t_apex);
        while p0(hi) > target {
            hi = 2.0 * hi + 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p0(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push(0.5 * (lo + hi));
    }
    let mut counts = vec![0usize; bins];
    for x in dark {
        counts[edges.iter().rposition(|e| x >= e).unwrap()] += 1;
    }
    let expected = dark.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    (chi2, p)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let m = ModelSpec::build(ModelKind::TwoAtomEigen, dark_pair()).unwrap();
    let d = P0Decomposition::for_model(&m).unwrap();
    let stats = d.period_stats().unwrap();
    let s = simulated_stream(&m, &d.reset_state, 2.0e6, stream_seed(SEED, 0));
    let c = classify_periods(&s, stats.t_apex).unwrap();
    let dark = c.dark.unwrap();
    let gap = c.light_gap.unwrap();
    let bins = (c.dark_intervals.len() / 10).clamp(2, 10);
    let (chi2, p) = dark_side_chi_square(&d, stats.t_apex, &c.dark_intervals, bins);
    let mut parts = vec![format!("{} photons, {} dark intervals", s.len(), dark.n)];
    let mut ok = check(
        &mut parts,
        within(dark.mean, stats.t_d, 0.25),
        format!("mean dark {:.0} +- {:.0} vs analytic {:.0} (+-25%)", dark.mean, dark.sem, stats.t_d),
    );
    ok &= check(&mut parts, (13.0..=16.0).contains(&gap.mean), format!("tau_L = {:.3} +- {:.3} (13..16)", gap.mean, gap.sem));
    ok &= check(&mut parts, p > 0.01, format!("dark-side chi2 = {chi2:.2} on {} dof, p = {p:.3} (> 0.01)", bins - 1));
    finish(parts, ok, start.elapsed(), Duration::from_secs(1800))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let p = AtomParams { gamma12: 1.0, v: 10.0, omega_rabi: 0.0, ..Default::default() };
    let (_, gamma_a) = p.channel_rates();
    let m = ModelSpec::build(ModelKind::TwoAtomEigen, p).unwrap();
    let a = m.basis.iter().position(|l| l == "a").unwrap();
    let psi0 = CVector::basis(4, a);
    let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
    let series = evolve_master(&m, &DensityMatrix::pure(&psi0).unwrap(), &times, tight()).unwrap();
    let master_dev = series.states.iter().map(|r| (r.populations()[a] - 1.0).abs()).fold(0.0, f64::max);
    let rec = run_trajectory_norm_threshold(&m, &psi0, 100.0, tight(), SEED, &SampleGrid::Every(1.0)).unwrap();
    let traj_dev = rec.populations().iter().map(|p| (p[a] - 1.0).abs()).fold(0.0, f64::max);
    let mut parts = Vec::new();
    let mut ok = check(&mut parts, gamma_a == 0.0, format!("Gamma_a = {gamma_a:e} (exactly 0)"));
    ok &= check(&mut parts, master_dev <= 1e-10, format!("master |P_a - 1| <= {master_dev:.1e}"));
    ok &= check(&mut parts, traj_dev <= 1e-10 && rec.jumps.is_empty(), format!("trajectory |P_a - 1| <= {traj_dev:.1e}, {} jumps", rec.jumps.len()));
    finish(parts, ok, start.elapsed(), Duration::from_secs(10))
}

fn ensemble_vs_master(kind: ModelKind, p: AtomParams, psi0: CVector) -> (f64, f64, f64) {
    let m = ModelSpec::build(kind, p).unwrap();
    let grid = SampleGrid::uniform(4.0, 20);
    let n = 500;
    let ens = parallel::run_ensemble(&pool(), &m, &psi0, 4.0, &Solver::NormThreshold(tight()), n, SEED, &grid).unwrap();
    let master = evolve_master(&m, &DensityMatrix::pure(&psi0).unwrap(), &ens.times, tight()).unwrap();
    let mut worst_sigma: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut worst_neg: f64 = 0.0;
    for (mean, rho) in ens.mean_populations.iter().zip(&master.states) {
        for (x, y) in mean.iter().zip(rho.populations()) {
            // binomial bound: the sample SEM collapses while jumps are still rare
            let sigma = (y.clamp(0.0, 1.0) * (1.0 - y.clamp(0.0, 1.0)) / n as f64).sqrt();
            worst_sigma = worst_sigma.max((x - y).abs() / sigma.max(1e-12));
        }
        worst_trace = worst_trace.max((rho.trace() - 1.0).abs());
        worst_neg = worst_neg.min(rho.min_eigenvalue().unwrap());
    }
    (worst_sigma, worst_trace, worst_neg)
}

fn random_unitary_mix(m: &ModelSpec) -> ModelSpec {
    let (c, s) = (0.6f64, 0.8f64);
    let phase = C64::from_polar(1.0, 0.7);
    let (a, b) = (&m.jump_ops[0].op, &m.jump_ops[1].op);
    let mut out = m.clone();
    out.jump_ops = vec![
        JumpOp { label: "u".into(), op: &a.scale_real(c) + &b.scale(phase * s) },
        JumpOp { label: "v".into(), op: &a.scale_real(-s) + &b.scale(phase * c) },
    ];
    out
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    let cases = [
        (ModelKind::Relaxing, AtomParams { omega_atom: 1.0, ..Default::default() }, CVector::basis(2, 0)),
        (ModelKind::Driven, AtomParams { omega_rabi: 2.0, delta_total: 0.5, ..Default::default() }, CVector::basis(2, 1)),
        (ModelKind::TwoAtomProduct, AtomParams { omega_rabi: 3.0, delta_diff: 2.0, v: 4.0, gamma12: 0.5, ..Default::default() }, CVector::basis(4, 3)),
        (ModelKind::TwoAtomEigen, AtomParams { omega_rabi: 3.0, delta_diff: 2.0, v: 4.0, gamma12: 0.5, ..Default::default() }, CVector::basis(4, 3)),
    ];
    for (kind, p, psi0) in cases {
        let (sigma, trace, neg) = ensemble_vs_master(kind, p, psi0);
        ok &= check(
            &mut parts,
            sigma <= 4.0 && trace <= 1e-8 && neg >= -1e-8,
            format!("{kind}: ensemble vs master {sigma:.2} sigma, trace err {trace:.1e}, min eig {neg:.1e}"),
        );
    }

    let m = ModelSpec::build(ModelKind::TwoAtomProduct, dark_pair()).unwrap();
    let rec = run_trajectory_norm_threshold(&m, &CVector::basis(4, 3), 200.0, tight(), SEED, &SampleGrid::uniform(200.0, 200)).unwrap();
    let norm_err = rec.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    ok &= check(&mut parts, norm_err <= 1e-10, format!("trajectory norm error {norm_err:.1e}"));

    let l = liouvillian(&m);
    let inv = l.max_abs_diff(&liouvillian(&random_unitary_mix(&m))) / l.max_abs();
    ok &= check(&mut parts, inv <= 1e-12, format!("Liouvillian jump-mixing invariance {inv:.1e}"));

    let e = ModelSpec::build(ModelKind::TwoAtomEigen, dark_pair()).unwrap();
    let d = P0Decomposition::for_model(&e).unwrap().with_gate(f64::INFINITY);
    let mut w_err: f64 = 0.0;
    for k in 1..200 {
        let t = k as f64 * 2.0;
        let h = 1e-2;
        let p = |x: f64| d.p0_approx(x).unwrap();
        let deriv = (p(t + 2.0 * h) - 8.0 * p(t + h) + 8.0 * p(t - h) - p(t - 2.0 * h)) / (12.0 * h);
        let w = d.waiting_time_density(t).unwrap();
        w_err = w_err.max((deriv - w).abs() / w.abs().max(1e-12));
    }
    ok &= check(&mut parts, w_err <= 1e-6, format!("w1 = -dP0/dt relative error {w_err:.1e}"));
    ok &= check(&mut parts, d.defect <= 1e-3, format!("orthogonality defect {:.3e} (<= 1e-3)", d.defect));

    let grid = SampleGrid::uniform(5.0, 10);
    let solver = Solver::NormThreshold(tight());
    let a = run_ensemble(&m, &CVector::basis(4, 3), 5.0, &solver, 64, SEED, &grid).unwrap();
    let b = run_ensemble(&m, &CVector::basis(4, 3), 5.0, &solver, 64, SEED, &grid).unwrap();
    let c = parallel::run_ensemble(&pool(), &m, &CVector::basis(4, 3), 5.0, &solver, 64, SEED, &grid).unwrap();
    let bits = |r: &qtraj_core::trajectory::EnsembleResult| -> Vec<u64> { r.mean_populations.iter().flatten().map(|x| x.to_bits()).collect() };
    ok &= check(&mut parts, bits(&a) == bits(&b) && bits(&a) == bits(&c), "bitwise reproducible sequential and parallel".into());
    finish(parts, ok, start.elapsed(), Duration::from_secs(300))
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

fn strictly_increasing(xs: &[Option<f64>]) -> (bool, usize) {
    let defined: Vec<f64> = xs.iter().flatten().copied().collect();
    (defined.windows(2).all(|w| w[1] > w[0]), xs.len() - defined.len())
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let template = AtomParams { gamma12: 1.0, omega_rabi: 5.0, ..Default::default() };
    let (v_axis, d_axis) = (logspace(1.0, 50.0, 10), logspace(0.2, 20.0, 10));
    let full: HeatmapGrid = heatmap(&template, &v_axis, &d_axis).unwrap();
    let row = heatmap(&template, &[10.0], &d_axis).unwrap();
    let col = heatmap(&template, &v_axis, &[2.0]).unwrap();
    let mut parts = vec![format!("10x10 grid with {} failed cells", full.failures())];

    let mut td_row: Vec<Option<f64>> = row.values(Statistic::TD)[0].clone();
    td_row.reverse();
    let merged = row.cells[0].iter().filter(|c| matches!(c, qtraj_core::darkperiods::HeatmapCell::Failed { reason, .. } if reason.contains("separation"))).count();
    let (inc, undefined) = strictly_increasing(&td_row);
    let mut ok = check(
        &mut parts,
        inc && undefined == merged,
        format!("V=10: T_D increases as delta decreases over defined cells ({undefined} undefined, {merged} in the merged regime)"),
    );

    let td_col: Vec<Option<f64>> = col.values(Statistic::TD).iter().map(|r| r[0]).collect();
    let (inc, undefined) = strictly_increasing(&td_col);
    ok &= check(&mut parts, inc && undefined == 0, format!("delta=2: T_D increases with V ({undefined} undefined cells)"));

    let nl: Vec<Option<f64>> = col.values(Statistic::NL).iter().map(|r| r[0]).collect();
    let defined: Vec<f64> = nl.iter().flatten().copied().collect();
    let (lo, hi) = defined.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = if defined.is_empty() { f64::NAN } else { (hi - lo) / lo };
    ok &= check(
        &mut parts,
        nl.iter().all(Option::is_some) && spread < 0.2,
        format!("delta=2: n_L spread {:.1}% over {} of {} V cells (< 20%)", 100.0 * spread, defined.len(), nl.len()),
    );
    for (name, grid) in [("V=10 row", &row), ("delta=2 column", &col)] {
        for (i, r) in grid.cells.iter().enumerate() {
            for (j, c) in r.iter().enumerate() {
                if let qtraj_core::darkperiods::HeatmapCell::Failed { reason, .. } = c {
                    parts.push(format!("{name} cell V={:.3}, delta={:.3}: {reason}", grid.v_axis[i], grid.delta_axis[j]));
                }
            }
        }
    }
    finish(parts, ok, start.elapsed(), Duration::from_secs(60))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var("QTRAJ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut run = 0;
    for (n, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        run += 1;
        let o = f();
        let known = KNOWN_RED.contains(&n);
        println!(
            "criterion {n:>2}: {}{} {}",
            if o.pass { "PASS" } else { "FAIL" },
            if !o.pass && known { " (known red)" } else { "" },
            o.detail
        );
        if o.pass {
            passed += 1;
        } else if strict || !known {
            unexpected.push(n);
        }
    }
    println!("acceptance: {passed}/{run} PASS");
    if !unexpected.is_empty() {
        println!("acceptance: failing criteria {unexpected:?}");
        std::process::exit(1);
    }
}
