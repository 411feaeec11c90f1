//! Photon streams and second-order coherence.
//!
//! The estimator mirrors a Hanbury Brown–Twiss measurement. The stream is
//! split once by a simulated 50:50 beam splitter. For every delay τ,
//! detector-2 times are shifted by −τ, with negative times dropped. Both
//! detectors are binned with width `Δt_D` and the count arrays are trimmed
//! to a common length `M`. Then
//!
//! ```text
//! g²(τ) = M Σ_i n₁ᵢ n₂ᵢ^τ / (Σ_i n₁ᵢ · Σ_i n₂ᵢ^τ)
//! ```

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::Stream;
use crate::trajectory::TrajectoryRecord;
use crate::{Error, Result};

/// Ordered emission times.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhotonStream {
    timestamps: Vec<f64>,
}

impl PhotonStream {
    /// Sorts `times` and shifts them so that the first photon is at 0.
    pub fn new(mut times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("photon times must be finite"));
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if let Some(&t0) = times.first() {
            for t in times.iter_mut() {
                *t -= t0;
            }
        }
        Ok(Self { timestamps: times })
    }

    /// Keeps the times as given (already sorted, non-negative).
    fn from_sorted(timestamps: Vec<f64>) -> Self {
        Self { timestamps }
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Time of the last photon.
    pub fn duration(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }

    /// Consecutive inter-photon gaps.
    pub fn intervals(&self) -> Vec<f64> {
        self.timestamps.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Mean photon spacing τ_P.
    pub fn mean_spacing(&self) -> Option<f64> {
        (self.len() >= 2).then(|| self.duration() / (self.len() - 1) as f64)
    }
}

/// Routes each photon to detector 1 when its uniform draw is below ½.
pub fn split_beam(s: &PhotonStream, seed: u64) -> (PhotonStream, PhotonStream) {
    let mut rng = Stream::new(seed);
    let mut a = Vec::with_capacity(s.len() / 2 + 1);
    let mut b = Vec::with_capacity(s.len() / 2 + 1);
    for &t in s.timestamps() {
        if rng.uniform() < 0.5 {
            a.push(t);
        } else {
            b.push(t);
        }
    }
    (PhotonStream::from_sorted(a), PhotonStream::from_sorted(b))
}

/// Photon counts per detection window.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinnedCounts {
    pub bin_width: f64,
    pub counts: Vec<u32>,
}

/// Bins sorted, non-negative times into `⌈t_max/Δt_D⌉` windows of width
/// `Δt_D`. The last photon is clamped into the last window.
pub fn bin_times(times: &[f64], dtd: f64) -> Result<BinnedCounts> {
    if !(dtd > 0.0) || !dtd.is_finite() {
        return Err(Error::invalid("bin width must be positive"));
    }
    let t_max = times.last().copied().unwrap_or(0.0);
    let n = (math::ceil(t_max / dtd) as usize).max(1);
    let mut counts = vec![0u32; n];
    for &t in times {
        let k = (math::floor(t / dtd) as usize).min(n - 1);
        counts[k] += 1;
    }
    Ok(BinnedCounts { bin_width: dtd, counts })
}

/// `M Σ n₁n₂ / (Σn₁ Σn₂)` after trimming both arrays to the shorter length `M`.
pub fn g2_from_counts(n1: &[u32], n2: &[u32]) -> Result<f64> {
    let m = n1.len().min(n2.len());
    let (a, b) = (&n1[..m], &n2[..m]);
    let s1: f64 = a.iter().map(|&x| x as f64).sum();
    let s2: f64 = b.iter().map(|&x| x as f64).sum();
    if m == 0 || s1 == 0.0 || s2 == 0.0 {
        return Err(Error::DegenerateBins(m as f64));
    }
    let cross: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    Ok(cross / (s1 * s2) * m as f64)
}

/// An estimated or analytic g² curve.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct G2Curve {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Detection window `Δt_D` (0 for analytic curves).
    pub dtd: f64,
    /// Photons in the input stream.
    pub n_photons: usize,
    /// Duration of the input stream.
    pub total_time: f64,
    /// Number of bins at zero delay.
    pub m_bins: usize,
}

/// Delays `0, Δt_D, 2Δt_D, …` up to `tau_max`.
pub fn tau_grid(dtd: f64, tau_max: f64) -> Vec<f64> {
    let n = math::floor(tau_max / dtd * (1.0 + 1e-12)) as usize;
    (0..=n).map(|k| k as f64 * dtd).collect()
}

/// Default detection window `0.1 τ_P`.
pub fn default_dtd(s: &PhotonStream) -> Option<f64> {
    s.mean_spacing().map(|t| 0.1 * t)
}

/// HBT estimate of g²(τ) from a single beam split.
pub fn g2_estimate(s: &PhotonStream, dtd: f64, taus: &[f64], seed: u64) -> Result<G2Curve> {
    let (d1, d2) = split_beam(s, seed);
    g2_from_detectors(&d1, &d2, dtd, taus, s.len(), s.duration())
}

/// g²(τ) from two already separated detector streams.
pub fn g2_from_detectors(
    d1: &PhotonStream,
    d2: &PhotonStream,
    dtd: f64,
    taus: &[f64],
    n_photons: usize,
    total_time: f64,
) -> Result<G2Curve> {
    if d1.len() < 2 {
        return Err(Error::EmptyDetector(1));
    }
    if d2.len() < 2 {
        return Err(Error::EmptyDetector(2));
    }
    let n1 = bin_times(d1.timestamps(), dtd)?;
    let mut values = Vec::with_capacity(taus.len());
    let mut m_bins = 0;
    for (k, &tau) in taus.iter().enumerate() {
        let shifted: Vec<f64> = d2.timestamps().iter().map(|t| t - tau).filter(|&t| t >= 0.0).collect();
        if shifted.is_empty() {
            return Err(Error::DegenerateBins(tau));
        }
        let n2 = bin_times(&shifted, dtd)?;
        if k == 0 {
            m_bins = n1.counts.len().min(n2.counts.len());
        }
        values.push(g2_from_counts(&n1.counts, &n2.counts).map_err(|_| Error::DegenerateBins(tau))?);
    }
    Ok(G2Curve { taus: taus.to_vec(), values, dtd, n_photons, total_time, m_bins })
}

/// Resonance-fluorescence g² on resonance:
/// `1 − e^(−3Γτ/4)[cos μτ + (3Γ/4μ) sin μτ]` with `μ = √(Ω² − Γ²/16)`.
///
/// For `Ω < Γ/4` the hyperbolic continuation (`κ = √(Γ²/16 − Ω²)`,
/// `cosh κτ + (3Γ/4κ) sinh κτ`) is used; at `Ω = Γ/4`, `1 + 3Γτ/4`.
pub fn g2_analytic_rf(omega: f64, gamma: f64, taus: &[f64]) -> G2Curve {
    let mu2 = omega * omega - gamma * gamma / 16.0;
    let k = 0.75 * gamma;
    let values = taus
        .iter()
        .map(|&t| {
            let bracket = if mu2 > 0.0 {
                let mu = math::sqrt(mu2);
                math::cos(mu * t) + k / mu * math::sin(mu * t)
            } else if mu2 < 0.0 {
                let kap = math::sqrt(-mu2);
                math::cosh(kap * t) + k / kap * math::sinh(kap * t)
            } else {
                1.0 + k * t
            };
            1.0 - math::exp(-k * t) * bracket
        })
        .collect();
    G2Curve { taus: taus.to_vec(), values, dtd: 0.0, n_photons: 0, total_time: 0.0, m_bins: 0 }
}

/// Emission times of the selected channels (all when `labels` is `None`),
/// shifted so the first is 0.
pub fn stream_from_trajectory(rec: &TrajectoryRecord, labels: Option<&[String]>) -> Result<PhotonStream> {
    let times: Vec<f64> = rec
        .jumps
        .iter()
        .filter(|j| labels.map_or(true, |ls| ls.contains(&j.label)))
        .map(|j| j.time)
        .collect();
    if times.is_empty() {
        return Err(Error::NoJumps);
    }
    PhotonStream::new(times)
}

/// Homogeneous Poisson stream of the given rate on `[0, t_total]`.
pub fn poisson_stream(rate: f64, t_total: f64, seed: u64) -> Result<PhotonStream> {
    if !(rate > 0.0) || !(t_total > 0.0) {
        return Err(Error::invalid("rate and duration must be positive"));
    }
    let mut rng = Stream::new(seed);
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += rng.exponential(rate);
        if t > t_total {
            break;
        }
        out.push(t);
    }
    PhotonStream::new(out)
}
