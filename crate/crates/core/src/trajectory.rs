//! Quantum-jump trajectories and ensemble averages.
//!
//! Two unravelling schemes are provided:
//!
//! - [`run_trajectory_molmer`]: the first-order scheme. Each step of `dt`
//!   draws one uniform `u`; a jump happens when `u < δp = dt Σ‖C_m ψ‖²`,
//!   otherwise `ψ ← (1 − iH_eff dt)ψ`, renormalised.
//! - [`run_trajectory_norm_threshold`]: waiting-time sampling. The
//!   unnormalised state is integrated under `H_eff` with an adaptive
//!   Runge–Kutta–Fehlberg 7(8) pair until `‖ψ‖²` falls below a fresh
//!   uniform `ε`; the crossing is located by bisection and the channel is
//!   drawn with probability proportional to `‖C_n ψ‖²`.
//!
//! Every trajectory owns one random [`Stream`], so results depend only on
//! `(model, ψ₀, controls, seed)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{c, CMatrix, CVector, C64};
use crate::models::ModelSpec;
use crate::ode::{initial_step, Controls, Rkf78};
use crate::rng::{stream_seed, Stream};
use crate::{math, Error, Result};

/// Largest admissible first-order jump probability per step.
pub const MAX_STEP_PROBABILITY: f64 = 0.1;

/// Relative time resolution of the jump-time bisection.
pub const JUMP_TIME_RTOL: f64 = 1e-12;

/// One recorded emission.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JumpEvent {
    pub time: f64,
    /// Index into the model's jump operators.
    pub channel: usize,
    pub label: String,
    pub pre_state: CVector,
    pub post_state: CVector,
}

/// Non-fatal numerical diagnostics.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Warning {
    /// `‖ψ‖²` dropped below the absolute tolerance between jumps, so the
    /// integrator no longer resolves the state.
    ToleranceTooLoose { time: f64, norm_sqr: f64 },
}

/// Solver selection.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Solver {
    Molmer { dt: f64 },
    NormThreshold(Controls),
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Molmer { .. } => "molmer",
            Solver::NormThreshold(_) => "norm_threshold",
        }
    }
}

/// Times at which normalised states are stored.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SampleGrid {
    /// `0, s, 2s, …` up to `t_final`.
    Every(f64),
    /// Explicit ascending times in `[0, t_final]`.
    Points(Vec<f64>),
    /// Only `0` and `t_final`.
    Endpoints,
}

impl SampleGrid {
    /// `n + 1` evenly spaced samples on `[0, t_final]`.
    pub fn uniform(t_final: f64, n: usize) -> Self {
        SampleGrid::Points((0..=n).map(|k| t_final * k as f64 / n as f64).collect())
    }

    pub fn times(&self, t_final: f64) -> Result<Vec<f64>> {
        let ts = match self {
            SampleGrid::Every(s) => {
                if !(*s > 0.0) {
                    return Err(Error::invalid("sample spacing must be positive"));
                }
                let n = math::floor(t_final / s * (1.0 + 1e-12)) as usize;
                (0..=n).map(|k| k as f64 * s).collect()
            }
            SampleGrid::Points(p) => p.clone(),
            SampleGrid::Endpoints => {
                if t_final > 0.0 {
                    vec![0.0, t_final]
                } else {
                    vec![0.0]
                }
            }
        };
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }
        if ts.first().is_some_and(|&t| t < 0.0) || ts.last().is_some_and(|&t| t > t_final * (1.0 + 1e-12)) {
            return Err(Error::invalid("sample times must lie in [0, t_final]"));
        }
        Ok(ts)
    }
}

/// A single trajectory.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    pub jumps: Vec<JumpEvent>,
    pub seed: u64,
    pub solver: Solver,
    pub t_final: f64,
    pub warnings: Vec<Warning>,
}

impl TrajectoryRecord {
    /// `|⟨k|ψ(t)⟩|²` for every stored sample.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.populations()).collect()
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.time).collect()
    }
}

fn check_state(m: &ModelSpec, psi0: &CVector) -> Result<()> {
    if psi0.dim() != m.dim() {
        return Err(Error::DimensionMismatch("initial state and model dimension differ"));
    }
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("initial state must be unit-norm"));
    }
    Ok(())
}

fn check_time(t_final: f64) -> Result<()> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final must be finite and non-negative"));
    }
    Ok(())
}

/// Picks the channel whose cumulative weight first reaches `draw · total`.
fn pick_channel(weights: &[f64], draw: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = draw * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (n, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = n;
        if acc >= target {
            return n;
        }
    }
    last
}

fn apply_jump(m: &ModelSpec, channel: usize, time: f64, pre: &CVector) -> Result<JumpEvent> {
    let pre_n = pre.normalized().ok_or(Error::invalid("jump from a zero state"))?;
    let post = m.jump_ops[channel].op.mul_vec(&pre_n).normalized().ok_or(Error::invalid("jump into a zero state"))?;
    Ok(JumpEvent { time, channel, label: m.jump_ops[channel].label.clone(), pre_state: pre_n, post_state: post })
}

/// Cached operators for first-order stepping.
#[derive(Clone, Debug)]
pub struct MolmerStepper<'a> {
    model: &'a ModelSpec,
    /// `1 − iH_eff dt`
    propagator: CMatrix,
    dt: f64,
}

impl<'a> MolmerStepper<'a> {
    pub fn new(model: &'a ModelSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        let n = model.dim();
        let propagator = &CMatrix::identity(n) - &model.effective_hamiltonian().scale(c(0.0, dt));
        Ok(Self { model, propagator, dt })
    }

    /// Per-channel jump probabilities `δp_m = dt ‖C_m ψ‖²`.
    pub fn jump_probabilities(&self, psi: &CVector) -> Vec<f64> {
        self.model.jump_ops.iter().map(|j| self.dt * j.op.mul_vec(psi).norm_sqr()).collect()
    }

    /// Advances `psi` from time `t` by one step using the uniform draw `u`.
    pub fn step(&self, psi: &CVector, t: f64, u: f64) -> Result<(CVector, Option<JumpEvent>)> {
        let dps = self.jump_probabilities(psi);
        let dp: f64 = dps.iter().sum();
        if dp > MAX_STEP_PROBABILITY {
            return Err(Error::StepTooLarge(dp));
        }
        if u < dp {
            let mut acc = 0.0;
            let mut channel = dps.len() - 1;
            for (k, &p) in dps.iter().enumerate() {
                acc += p;
                if u < acc {
                    channel = k;
                    break;
                }
            }
            let ev = apply_jump(self.model, channel, t + self.dt, psi)?;
            return Ok((ev.post_state.clone(), Some(ev)));
        }
        let next = self.propagator.mul_vec(psi);
        let next = next.normalized().ok_or(Error::invalid("no-jump evolution annihilated the state"))?;
        Ok((next, None))
    }
}

/// One first-order step from time `t`; see [`MolmerStepper::step`].
pub fn molmer_step(state: &CVector, m: &ModelSpec, t: f64, dt: f64, u: f64) -> Result<(CVector, Option<JumpEvent>)> {
    MolmerStepper::new(m, dt)?.step(state, t, u)
}

/// First-order trajectory with fixed step `dt`.
///
/// Sample times are rounded to the nearest step boundary.
pub fn run_trajectory_molmer(
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    dt: f64,
    seed: u64,
    grid: &SampleGrid,
) -> Result<TrajectoryRecord> {
    check_state(m, psi0)?;
    check_time(t_final)?;
    let stepper = MolmerStepper::new(m, dt)?;
    let sample_times = grid.times(t_final)?;
    let n_steps = math::round(t_final / dt) as u64;
    let sample_steps: Vec<u64> = sample_times.iter().map(|&t| math::round(t / dt) as u64).collect();
    if sample_steps.windows(2).any(|w| w[1] == w[0]) {
        return Err(Error::invalid("sample spacing finer than dt"));
    }
    let mut rng = Stream::new(seed);
    let mut psi = psi0.normalized().expect("checked unit norm");
    let mut times = Vec::with_capacity(sample_steps.len());
    let mut states = Vec::with_capacity(sample_steps.len());
    let mut jumps = Vec::new();
    let mut next = 0usize;
    let mut k = 0u64;
    loop {
        while next < sample_steps.len() && sample_steps[next] == k {
            times.push(k as f64 * dt);
            states.push(psi.clone());
            next += 1;
        }
        if k >= n_steps {
            break;
        }
        let t = k as f64 * dt;
        let u = rng.uniform();
        let (new, ev) = stepper.step(&psi, t, u)?;
        psi = new;
        if let Some(ev) = ev {
            jumps.push(ev);
        }
        k += 1;
    }
    Ok(TrajectoryRecord {
        times,
        states,
        jumps,
        seed,
        solver: Solver::Molmer { dt },
        t_final,
        warnings: Vec::new(),
    })
}

/// Waiting-time trajectory with adaptive integration and bisection for jump times.
pub fn run_trajectory_norm_threshold(
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    controls: Controls,
    seed: u64,
    grid: &SampleGrid,
) -> Result<TrajectoryRecord> {
    check_state(m, psi0)?;
    check_time(t_final)?;
    controls.validate()?;
    let sample_times = grid.times(t_final)?;
    let n = m.dim();
    let gen = m.effective_hamiltonian().scale(c(0.0, -1.0));
    let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| gen.mul_slice_into(y, dy);
    let mut solver = Rkf78::new(n);
    let mut rng = Stream::new(seed);

    let mut y = psi0.normalized().expect("checked unit norm").0;
    let mut t = 0.0f64;
    let mut eps = rng.uniform_open_low();
    let mut h = initial_step(&mut f, t, &y, &controls);
    let mut y_start = vec![C64::new(0.0, 0.0); n];
    let mut y_try = vec![C64::new(0.0, 0.0); n];

    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut jumps = Vec::new();
    let mut warnings = Vec::new();
    let mut warned = false;
    let mut next = 0usize;

    let norm_sqr = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();

    loop {
        // samples due at the current time
        while next < sample_times.len() && sample_times[next] <= t * (1.0 + 1e-15) + 1e-300 {
            times.push(sample_times[next]);
            states.push(CVector(y.clone()).normalized().ok_or(Error::invalid("state vanished"))?);
            next += 1;
        }
        if t >= t_final {
            break;
        }
        let horizon = if next < sample_times.len() { sample_times[next].min(t_final) } else { t_final };
        let remaining = horizon - t;
        y_start.copy_from_slice(&y);
        let (taken, h_next) = solver.adaptive_step(&mut f, t, &mut y, h, remaining, &controls)?;
        let hit = taken >= remaining * (1.0 - 1e-12);
        h = if hit { h_next.max(h) } else { h_next };
        let n2 = norm_sqr(&y);
        if n2 < eps {
            // bracket [0, taken] on ‖ψ(t + τ)‖² − ε; the left end is above threshold
            let (mut lo, mut hi) = (0.0f64, taken);
            let tol = JUMP_TIME_RTOL * (t + taken).max(1.0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                solver.fixed_step(&mut f, t, &y_start, mid, &mut y_try, &controls);
                if norm_sqr(&y_try) < eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            solver.fixed_step(&mut f, t, &y_start, hi, &mut y_try, &controls);
            let t_jump = t + hi;
            let pre = CVector(y_try.clone());
            let weights: Vec<f64> = m.jump_ops.iter().map(|j| j.op.mul_vec(&pre).norm_sqr()).collect();
            if weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid("norm decayed without an emitting channel"));
            }
            let channel = pick_channel(&weights, rng.uniform());
            let ev = apply_jump(m, channel, t_jump, &pre)?;
            y.copy_from_slice(&ev.post_state.0);
            jumps.push(ev);
            t = t_jump;
            eps = rng.uniform_open_low();
            continue;
        }
        if !warned && n2 < controls.atol {
            warnings.push(Warning::ToleranceTooLoose { time: t + taken, norm_sqr: n2 });
            warned = true;
        }
        t = if hit { horizon } else { t + taken };
    }
    Ok(TrajectoryRecord {
        times,
        states,
        jumps,
        seed,
        solver: Solver::NormThreshold(controls),
        t_final,
        warnings,
    })
}

/// Dispatches on [`Solver`].
pub fn run_trajectory(
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    solver: &Solver,
    seed: u64,
    grid: &SampleGrid,
) -> Result<TrajectoryRecord> {
    match *solver {
        Solver::Molmer { dt } => run_trajectory_molmer(m, psi0, t_final, dt, seed, grid),
        Solver::NormThreshold(ctl) => run_trajectory_norm_threshold(m, psi0, t_final, ctl, seed, grid),
    }
}

/// Averages over trajectories on a common sample grid.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// `mean_populations[i][k]`: mean population of basis state `k` at sample `i`.
    pub mean_populations: Vec<Vec<f64>>,
    /// Standard error of each mean population.
    pub sem_populations: Vec<Vec<f64>>,
    /// Mean of `|ψ⟩⟨ψ|` at each sample.
    pub mean_density: Vec<CMatrix>,
    pub n_traj: usize,
    pub master_seed: u64,
    pub total_jumps: usize,
}

/// Order-sensitive accumulator; feed records by trajectory index for reproducible sums.
#[derive(Clone, Debug)]
pub struct EnsembleAccumulator {
    times: Vec<f64>,
    sum: Vec<Vec<f64>>,
    sum_sq: Vec<Vec<f64>>,
    rho: Vec<CMatrix>,
    n: usize,
    jumps: usize,
    master_seed: u64,
}

impl EnsembleAccumulator {
    pub fn new(master_seed: u64) -> Self {
        Self { times: Vec::new(), sum: Vec::new(), sum_sq: Vec::new(), rho: Vec::new(), n: 0, jumps: 0, master_seed }
    }

    pub fn add(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        if self.n == 0 {
            self.times = rec.times.clone();
            let d = rec.states.first().map_or(0, |s| s.dim());
            self.sum = vec![vec![0.0; d]; rec.times.len()];
            self.sum_sq = self.sum.clone();
            self.rho = vec![CMatrix::zeros(d, d); rec.times.len()];
        } else if rec.times != self.times {
            return Err(Error::DimensionMismatch("trajectories sampled on different grids"));
        }
        for (i, s) in rec.states.iter().enumerate() {
            for (k, p) in s.populations().into_iter().enumerate() {
                self.sum[i][k] += p;
                self.sum_sq[i][k] += p * p;
            }
            self.rho[i] = &self.rho[i] + &CMatrix::outer(s, s);
        }
        self.n += 1;
        self.jumps += rec.jumps.len();
        Ok(())
    }

    pub fn finish(self) -> Result<EnsembleResult> {
        if self.n == 0 {
            return Err(Error::invalid("empty ensemble"));
        }
        let nf = self.n as f64;
        let mean: Vec<Vec<f64>> = self.sum.iter().map(|r| r.iter().map(|x| x / nf).collect()).collect();
        let sem = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, mu)| {
                sq.iter()
                    .zip(mu)
                    .map(|(s, m)| {
                        if self.n < 2 {
                            0.0
                        } else {
                            let var = ((s / nf - m * m) * nf / (nf - 1.0)).max(0.0);
                            math::sqrt(var / nf)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(EnsembleResult {
            times: self.times,
            mean_populations: mean,
            sem_populations: sem,
            mean_density: self.rho.into_iter().map(|r| r.scale_real(1.0 / nf)).collect(),
            n_traj: self.n,
            master_seed: self.master_seed,
            total_jumps: self.jumps,
        })
    }
}

/// Runs `n_traj` trajectories sequentially; trajectory `i` uses
/// [`stream_seed`]`(master_seed, i)`.
pub fn run_ensemble(
    m: &ModelSpec,
    psi0: &CVector,
    t_final: f64,
    solver: &Solver,
    n_traj: usize,
    master_seed: u64,
    grid: &SampleGrid,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::invalid("n_traj must be at least 1"));
    }
    let mut acc = EnsembleAccumulator::new(master_seed);
    for i in 0..n_traj {
        let rec = run_trajectory(m, psi0, t_final, solver, stream_seed(master_seed, i as u64), grid)
            .map_err(|e| Error::Trajectory { index: i, source: alloc::boxed::Box::new(e) })?;
        acc.add(&rec)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_driven_atom, build_relaxing_atom, AtomParams};

    fn relaxing() -> ModelSpec {
        build_relaxing_atom(AtomParams::default()).unwrap()
    }

    fn superposition(a0: f64) -> CVector {
        CVector::from_real(&[a0, (1.0 - a0 * a0).sqrt()])
    }

    #[test]
    fn step_probability_matches_population() {
        let m = relaxing();
        let s = MolmerStepper::new(&m, 0.001).unwrap();
        let dp: f64 = s.jump_probabilities(&superposition(0.9)).iter().sum();
        assert!((dp - 8.1e-4).abs() < 1e-15);
    }

    #[test]
    fn ground_state_never_jumps() {
        let m = relaxing();
        let g = CVector::basis(2, 1);
        let (next, ev) = molmer_step(&g, &m, 0.0, 0.01, 0.0).unwrap();
        assert!(ev.is_none());
        assert_eq!(next, g);
    }

    #[test]
    fn jump_projects_to_ground() {
        let m = relaxing();
        let (next, ev) = molmer_step(&superposition(0.9), &m, 1.0, 0.001, 0.0).unwrap();
        let ev = ev.unwrap();
        assert_eq!(next, CVector::basis(2, 1));
        assert_eq!(ev.time, 1.001);
        assert_eq!(ev.channel, 0);
    }

    #[test]
    fn oversized_step_rejected() {
        let m = relaxing();
        let r = molmer_step(&CVector::basis(2, 0), &m, 0.0, 0.5, 0.9);
        assert!(matches!(r, Err(Error::StepTooLarge(p)) if (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn no_jump_step_rotates_towards_ground() {
        // populations change by ∓Γ dt |α|²|β|² to second order
        let m = relaxing();
        let dt = 1e-4;
        let (a0, b0) = (0.6f64, 0.8f64);
        let (next, ev) = molmer_step(&CVector::from_real(&[a0, b0]), &m, 0.0, dt, 0.99).unwrap();
        assert!(ev.is_none());
        let shift = dt * a0 * a0 * b0 * b0;
        assert!((next[0].norm_sqr() - (a0 * a0 - shift)).abs() < 5.0 * dt * dt);
        assert!((next[1].norm_sqr() - (b0 * b0 + shift)).abs() < 5.0 * dt * dt);
    }

    #[test]
    fn rabi_oscillation_without_damping() {
        let m = build_driven_atom(AtomParams { gamma: 0.0, omega_rabi: 1.0, ..Default::default() }).unwrap();
        let g = CVector::basis(2, 1);
        let ctl = Controls::default();
        let rec = run_trajectory_norm_threshold(&m, &g, 20.0, ctl, 1, &SampleGrid::Every(0.1)).unwrap();
        assert!(rec.jumps.is_empty());
        for (t, s) in rec.times.iter().zip(&rec.states) {
            assert!((s[0].norm_sqr() - (t / 2.0).sin().powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn first_jump_time_follows_norm_decay() {
        let m = relaxing();
        let e = CVector::basis(2, 0);
        for seed in 0..20u64 {
            let rec = run_trajectory_norm_threshold(&m, &e, 1e3, Controls::default(), seed, &SampleGrid::Endpoints).unwrap();
            let eps = Stream::new(seed).uniform_open_low();
            assert_eq!(rec.jumps.len(), 1);
            let want = -eps.ln();
            assert!((rec.jumps[0].time - want).abs() < 1e-9 * want.max(1.0), "{} vs {want}", rec.jumps[0].time);
        }
    }

    #[test]
    fn pick_channel_rules() {
        assert_eq!(pick_channel(&[0.5, 0.5], 0.5), 0);
        assert_eq!(pick_channel(&[0.5, 0.5], 0.51), 1);
        assert_eq!(pick_channel(&[0.0, 1.0], 0.0), 1);
        assert_eq!(pick_channel(&[1.0, 0.0], 1.0), 0);
    }

    #[test]
    fn single_trajectory_ensemble_equals_record() {
        let m = relaxing();
        let psi = superposition(0.9);
        let grid = SampleGrid::Every(0.5);
        let solver = Solver::Molmer { dt: 0.01 };
        let ens = run_ensemble(&m, &psi, 5.0, &solver, 1, 9, &grid).unwrap();
        let rec = run_trajectory(&m, &psi, 5.0, &solver, stream_seed(9, 0), &grid).unwrap();
        assert_eq!(ens.mean_populations, rec.populations());
        assert_eq!(ens.total_jumps, rec.jumps.len());
    }

    #[test]
    fn molmer_samples_align_with_steps() {
        let m = relaxing();
        let rec = run_trajectory_molmer(&m, &superposition(0.9), 1.0, 0.001, 3, &SampleGrid::Every(0.1)).unwrap();
        assert_eq!(rec.times.len(), 11);
        assert!((rec.times[10] - 1.0).abs() < 1e-12);
    }
}
