//! Light and dark periods of a driven, dissipative two-atom system.
//!
//! After an emission resets the state to `ψ₀`, the probability of no further
//! emission up to `t` is `P₀(t) = ‖e^(−iH_eff t)ψ₀‖²`. Expanding over the
//! eigenmodes of `H_eff` (sorted so that mode 0 decays slowest) and dropping
//! cross terms gives
//!
//! ```text
//! P₀(t) ≈ Σ_m w_m e^(−Γ_m t),  w_m = |⟨λ^m|ψ₀⟩|²,  Γ_m = 2|Im λ_m|
//! ```
//!
//! with waiting-time density `w₁ = −dP₀/dt`. A gap longer than `T_apex` is a
//! dark period; runs of shorter gaps form light periods.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::linalg::{eig_general, CMatrix, CVector, SpectralData, C64, DEFAULT_TOL};
use crate::master::steady_state_or_limit;
use crate::math;
use crate::models::{AtomParams, ModelKind, ModelSpec};
use crate::photonstats::PhotonStream;
use crate::{Error, Result};

/// Ratio between the two leading weighted exponentials at `T_apex`.
pub const T_APEX_FACTOR: f64 = 10.0;

/// Orthogonality defect above which the cross-term-free `P₀` is refused.
pub const ORTHOGONALITY_GATE: f64 = 5e-2;

/// Minimum decay-rate ratio of the two slowest modes.
pub const MIN_TIMESCALE_RATIO: f64 = 10.0;

/// `‖Λ − I‖_F` with `Λ_ij = ⟨λ_i|λ_j⟩` over unit right eigenvectors.
pub fn orthogonality_measure(spectral: &SpectralData) -> f64 {
    let n = spectral.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut v = spectral.right[i].dot(&spectral.right[j]);
            if i == j {
                v -= C64::new(1.0, 0.0);
            }
            s += v.norm_sqr();
        }
    }
    math::sqrt(s)
}

/// Normalised state after a `C_s` emission from the dominant pure component
/// of the steady state. Models without an `s` channel use their first channel.
pub fn reset_state(m: &ModelSpec) -> Result<CVector> {
    let (rho, _) = steady_state_or_limit(m)?;
    let spec = eig_general(&rho.matrix().hermitian_part(), DEFAULT_TOL)?;
    let top = (0..spec.dim())
        .max_by(|&a, &b| spec.eigenvalues[a].re.partial_cmp(&spec.eigenvalues[b].re).expect("finite"))
        .ok_or(Error::invalid("empty model"))?;
    let proxy = &spec.right[top];
    let ch = m.channel_index("s").unwrap_or(0);
    let mut psi = m.jump_ops[ch].op.mul_vec(proxy).normalized().ok_or(Error::ZeroEmission)?;
    psi.fix_phase();
    Ok(psi)
}

/// Spectral expansion of the no-emission probability from a reset state.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct P0Decomposition {
    pub spectral: SpectralData,
    /// `|⟨λ^m|ψ₀⟩|²` with unit left vectors.
    pub weights: Vec<f64>,
    pub reset_state: CVector,
    /// `‖Λ − I‖_F` of the right eigenvectors.
    pub defect: f64,
    /// Defect tolerated by the cross-term-free formulas.
    pub gate: f64,
    /// Biorthogonal expansion coefficients of `ψ₀`, for the exact `P₀`.
    coeffs: Vec<C64>,
}

impl P0Decomposition {
    pub fn new(heff: &CMatrix, psi0: &CVector) -> Result<Self> {
        if psi0.dim() != heff.rows() {
            return Err(Error::DimensionMismatch("reset state and H_eff dimension differ"));
        }
        let psi0 = psi0.normalized().ok_or(Error::invalid("reset state is zero"))?;
        let spectral = eig_general(heff, DEFAULT_TOL)?;
        let weights = spectral.left.iter().map(|l| l.dot(&psi0).norm_sqr()).collect();
        let coeffs = spectral.expansion(&psi0);
        let defect = orthogonality_measure(&spectral);
        Ok(Self { spectral, weights, reset_state: psi0, defect, gate: ORTHOGONALITY_GATE, coeffs })
    }

    /// Decomposition of `H_eff` of `m` from its [`reset_state`].
    pub fn for_model(m: &ModelSpec) -> Result<Self> {
        Self::new(&m.effective_hamiltonian(), &reset_state(m)?)
    }

    pub fn with_gate(mut self, gate: f64) -> Self {
        self.gate = gate;
        self
    }

    /// `Γ_m = 2|Im λ_m|`.
    pub fn rates(&self) -> Vec<f64> {
        self.spectral.eigenvalues.iter().map(|l| 2.0 * math::abs(l.im)).collect()
    }

    fn check_gate(&self) -> Result<()> {
        if self.defect > self.gate {
            return Err(Error::OrthogonalityViolation { defect: self.defect, gate: self.gate });
        }
        Ok(())
    }

    /// `‖e^(−iH_eff t)ψ₀‖²` including all cross terms.
    pub fn p0_exact(&self, t: f64) -> f64 {
        let s = &self.spectral;
        let n = s.dim();
        let amp: Vec<C64> = (0..n).map(|m| self.coeffs[m] * (s.eigenvalues[m] * C64::new(0.0, -t)).exp()).collect();
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                total += (amp[a].conj() * amp[b] * s.right[a].dot(&s.right[b])).re;
            }
        }
        total
    }

    /// `Σ_m w_m e^(−Γ_m t)`
    pub fn p0_approx(&self, t: f64) -> Result<f64> {
        self.check_gate()?;
        Ok(self.rates().iter().zip(&self.weights).map(|(g, w)| w * math::exp(-g * t)).sum())
    }

    /// `Σ_m Γ_m w_m e^(−Γ_m t)`
    pub fn waiting_time_density(&self, t: f64) -> Result<f64> {
        self.check_gate()?;
        Ok(self.rates().iter().zip(&self.weights).map(|(g, w)| g * w * math::exp(-g * t)).sum())
    }

    /// Mean of the waiting-time density, `Σ_m w_m / Γ_m`.
    pub fn mean_waiting_time(&self) -> Result<f64> {
        self.check_gate()?;
        Ok(self.rates().iter().zip(&self.weights).map(|(g, w)| w / g).sum())
    }

    /// `T_apex = ln(f · w₂/w₁) / (Γ₂ − Γ₁)` from the two slowest modes.
    pub fn t_apex_with_factor(&self, factor: f64) -> Result<f64> {
        if self.spectral.dim() < 2 {
            return Err(Error::invalid("T_apex needs at least two modes"));
        }
        let r = self.rates();
        let ratio = r[1] / r[0];
        if !(ratio >= MIN_TIMESCALE_RATIO) {
            return Err(Error::NoTimescaleSeparation(ratio));
        }
        let (w1, w2) = (self.weights[0], self.weights[1]);
        let floor = 1e-14 * self.weights.iter().sum::<f64>();
        if !(w1 > floor) || !(w2 > floor) {
            return Err(Error::invalid("T_apex needs both slow modes populated"));
        }
        Ok(math::ln(factor * w2 / w1) / (r[1] - r[0]))
    }

    pub fn t_apex(&self) -> Result<f64> {
        self.t_apex_with_factor(T_APEX_FACTOR)
    }

    pub fn period_stats(&self) -> Result<PeriodStats> {
        self.period_stats_with_factor(T_APEX_FACTOR)
    }

    /// Mean dark/light period lengths from the split waiting-time density.
    pub fn period_stats_with_factor(&self, factor: f64) -> Result<PeriodStats> {
        let ta = self.t_apex_with_factor(factor)?;
        self.check_gate()?;
        if !(ta > 0.0) {
            return Err(Error::invalid("non-positive T_apex"));
        }
        let p0 = self.p0_approx(ta)?;
        let mut dark = 0.0;
        let mut light = 0.0;
        for (g, w) in self.rates().iter().zip(&self.weights) {
            if *g == 0.0 {
                continue;
            }
            let tail = (ta + 1.0 / g) * math::exp(-g * ta);
            dark += w * tail;
            light += w * (1.0 / g - tail);
        }
        let t_d = dark / p0;
        let tau_l = light / (1.0 - p0);
        let n_l = 1.0 / p0;
        Ok(PeriodStats { t_apex: ta, p0_at_apex: p0, t_d, tau_l, n_l, t_l: n_l * tau_l })
    }
}

/// `‖e^(−iH_eff t)ψ₀‖²`.
pub fn p0_exact(heff: &CMatrix, psi0: &CVector, t: f64) -> Result<f64> {
    Ok(P0Decomposition::new(heff, psi0)?.p0_exact(t))
}

/// Analytic period statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodStats {
    pub t_apex: f64,
    pub p0_at_apex: f64,
    /// Mean dark-period length.
    pub t_d: f64,
    /// Mean gap between photons within a light period.
    pub tau_l: f64,
    /// Expected photons per light period, `1/P₀(T_apex)`.
    pub n_l: f64,
    /// Mean light-period length, `n_L τ_L`.
    pub t_l: f64,
}

/// Model, reset state and statistics for a two-atom configuration.
pub fn analyse(m: &ModelSpec) -> Result<(P0Decomposition, PeriodStats)> {
    let d = P0Decomposition::for_model(m)?;
    let s = d.period_stats()?;
    Ok((d, s))
}

/// A run of photons separated by gaps no longer than `T_apex`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LightPeriod {
    pub start: f64,
    pub photons: usize,
    pub duration: f64,
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanEstimate {
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let sem = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
            math::sqrt(var / nf)
        };
        Some(Self { mean, sem, n })
    }
}

/// Partition of a photon stream into dark gaps and light periods.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodClassification {
    pub t_apex: f64,
    pub dark_intervals: Vec<f64>,
    pub light_gaps: Vec<f64>,
    /// Segments between consecutive dark gaps (and the stream ends).
    pub light_periods: Vec<LightPeriod>,
    pub dark: Option<MeanEstimate>,
    pub light_gap: Option<MeanEstimate>,
    pub light_duration: Option<MeanEstimate>,
    pub photons_per_light: Option<MeanEstimate>,
}

/// Splits inter-photon gaps at `t_apex`.
pub fn classify_periods(s: &PhotonStream, t_apex: f64) -> Result<PeriodClassification> {
    if s.len() < 2 {
        return Err(Error::invalid("classification needs at least two photons"));
    }
    let ts = s.timestamps();
    let mut dark = Vec::new();
    let mut light = Vec::new();
    let mut periods = Vec::new();
    let mut start = 0usize;
    for i in 1..ts.len() {
        let gap = ts[i] - ts[i - 1];
        if gap > t_apex {
            dark.push(gap);
            periods.push(LightPeriod { start: ts[start], photons: i - start, duration: ts[i - 1] - ts[start] });
            start = i;
        } else {
            light.push(gap);
        }
    }
    periods.push(LightPeriod { start: ts[start], photons: ts.len() - start, duration: ts[ts.len() - 1] - ts[start] });
    let durations: Vec<f64> = periods.iter().map(|p| p.duration).collect();
    let photons: Vec<f64> = periods.iter().map(|p| p.photons as f64).collect();
    Ok(PeriodClassification {
        t_apex,
        dark: MeanEstimate::of(&dark),
        light_gap: MeanEstimate::of(&light),
        light_duration: MeanEstimate::of(&durations),
        photons_per_light: MeanEstimate::of(&photons),
        dark_intervals: dark,
        light_gaps: light,
        light_periods: periods,
    })
}

/// Photons per unit time in consecutive windows of `bin_width`, as `(start, rate)`.
pub fn intensity_trace(s: &PhotonStream, bin_width: f64) -> Result<Vec<(f64, f64)>> {
    let b = crate::photonstats::bin_times(s.timestamps(), bin_width)?;
    Ok(b.counts.iter().enumerate().map(|(k, &c)| (k as f64 * bin_width, c as f64 / bin_width)).collect())
}

/// Outcome of one heatmap cell.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HeatmapCell {
    Ok { stats: PeriodStats, defect: f64 },
    Failed { reason: String, defect: Option<f64> },
}

impl HeatmapCell {
    pub fn stats(&self) -> Option<&PeriodStats> {
        match self {
            HeatmapCell::Ok { stats, .. } => Some(stats),
            HeatmapCell::Failed { .. } => None,
        }
    }

    pub fn defect(&self) -> Option<f64> {
        match self {
            HeatmapCell::Ok { defect, .. } => Some(*defect),
            HeatmapCell::Failed { defect, .. } => *defect,
        }
    }
}

/// Which statistic to read off a [`HeatmapGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    TApex,
    P0AtApex,
    TD,
    TauL,
    NL,
    TL,
}

impl Statistic {
    pub const ALL: [Statistic; 6] =
        [Statistic::TApex, Statistic::P0AtApex, Statistic::TD, Statistic::TauL, Statistic::NL, Statistic::TL];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::TApex => "t_apex",
            Statistic::P0AtApex => "p0_at_apex",
            Statistic::TD => "t_d",
            Statistic::TauL => "tau_l",
            Statistic::NL => "n_l",
            Statistic::TL => "t_l",
        }
    }

    pub fn of(&self, s: &PeriodStats) -> f64 {
        match self {
            Statistic::TApex => s.t_apex,
            Statistic::P0AtApex => s.p0_at_apex,
            Statistic::TD => s.t_d,
            Statistic::TauL => s.tau_l,
            Statistic::NL => s.n_l,
            Statistic::TL => s.t_l,
        }
    }
}

/// Period statistics over a `(V, δ)` grid, each cell driven at `Δ = −λ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatmapGrid {
    pub v_axis: Vec<f64>,
    pub delta_axis: Vec<f64>,
    /// `cells[i][j]` at `(v_axis[i], delta_axis[j])`.
    pub cells: Vec<Vec<HeatmapCell>>,
}

impl HeatmapGrid {
    /// Statistic per cell, `None` where the cell failed.
    pub fn values(&self, stat: Statistic) -> Vec<Vec<Option<f64>>> {
        self.cells.iter().map(|row| row.iter().map(|c| c.stats().map(|s| stat.of(s))).collect()).collect()
    }

    /// `log₁₀` of [`HeatmapGrid::values`].
    pub fn log10(&self, stat: Statistic) -> Vec<Vec<Option<f64>>> {
        self.values(stat)
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.filter(|x| *x > 0.0).map(|x| math::ln(x) / core::f64::consts::LN_10)).collect())
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.stats().is_none()).count()
    }
}

/// One heatmap cell: the template with `V`, `δ` replaced, driven at `Δ = −λ`.
pub fn heatmap_cell(template: &AtomParams, v: f64, delta: f64) -> HeatmapCell {
    let p = AtomParams { v, delta_diff: delta, ..*template }.on_antisymmetric_resonance();
    let decomposition = ModelSpec::build(ModelKind::TwoAtomEigen, p).and_then(|m| P0Decomposition::for_model(&m));
    match decomposition {
        Ok(d) => match d.period_stats() {
            Ok(stats) => HeatmapCell::Ok { stats, defect: d.defect },
            Err(e) => HeatmapCell::Failed { reason: e.to_string(), defect: Some(d.defect) },
        },
        Err(e) => HeatmapCell::Failed { reason: e.to_string(), defect: None },
    }
}

pub fn heatmap(template: &AtomParams, v_grid: &[f64], delta_grid: &[f64]) -> Result<HeatmapGrid> {
    if v_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::invalid("heatmap grids must be non-empty"));
    }
    if v_grid.iter().chain(delta_grid).any(|x| !(*x > 0.0)) {
        return Err(Error::invalid("heatmap grids must be positive"));
    }
    let cells = v_grid.iter().map(|&v| delta_grid.iter().map(|&d| heatmap_cell(template, v, d)).collect()).collect();
    Ok(HeatmapGrid { v_axis: v_grid.to_vec(), delta_axis: delta_grid.to_vec(), cells })
}
