//! Model builders for the single- and two-atom systems.
//!
//! Conventions:
//! - ħ = 1 and every rate, frequency and detuning is in units of Γ.
//! - Single-atom basis is `{e, g}`.
//! - Two-atom product basis is `{|11⟩, |10⟩, |01⟩, |00⟩}`, with the first
//!   tensor factor being atom 1.
//! - Two-atom eigenbasis is `{e, s, a, g}`, where
//!   `|s⟩ = α|10⟩ + β|01⟩` and `|a⟩ = β|10⟩ − α|01⟩`.
//!
//! The two decay channels are `C_s = √Γ_s (S₁⁻ + S₂⁻)` and
//! `C_a = √Γ_a (S₁⁻ − S₂⁻)` with `Γ_{s,a} = (Γ ± Γ₁₂)/2`. Expanding
//! `C_s ρ C_s† + C_a ρ C_a†` returns the cross-damped relaxation term
//! `Σ_ij Γ_ij S_j⁻ ρ S_i⁺` with `Γ_11 = Γ_22 = Γ` and `Γ_12 = Γ_21 = Γ₁₂`.
//!
//! The detuning `Δ` enters each Hamiltonian exactly as written for that
//! model. The driven atom carries `Δ/2` on the diagonal and the two-atom
//! models carry `∓Δ` on `|11⟩` and `|00⟩`, so the two `Δ` parameters
//! differ by a factor of two in meaning.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{c, CMatrix};
use crate::math;
use crate::{Error, Result};

/// Physical parameters shared by all models.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AtomParams {
    /// Single-atom decay rate Γ.
    pub gamma: f64,
    /// Rabi frequency Ω.
    pub omega_rabi: f64,
    /// Total detuning Δ.
    pub delta_total: f64,
    /// Transition-frequency difference δ = ω₁ − ω₂.
    pub delta_diff: f64,
    /// Static dipole-dipole potential V.
    pub v: f64,
    /// Cross-damping rate Γ₁₂.
    pub gamma12: f64,
    /// Single-atom transition frequency ω (relaxing atom only).
    pub omega_atom: f64,
}

impl Default for AtomParams {
    fn default() -> Self {
        Self { gamma: 1.0, omega_rabi: 0.0, delta_total: 0.0, delta_diff: 0.0, v: 0.0, gamma12: 0.0, omega_atom: 0.0 }
    }
}

impl AtomParams {
    /// Two-atom parameters with `Δ = −λ`, driving the antisymmetric resonance.
    pub fn on_antisymmetric_resonance(mut self) -> Self {
        self.delta_total = -eigen_lambda(self.delta_diff, self.v);
        self
    }

    /// Replaces `V` and `Γ₁₂` by the values implied by `geometry`.
    pub fn with_geometry(mut self, geometry: &DipoleGeometry) -> Result<Self> {
        let (v, g12) = compute_dipole_couplings(geometry, self.gamma)?;
        self.v = v;
        self.gamma12 = g12;
        Ok(self)
    }

    /// `(Γ_s, Γ_a) = ((Γ + Γ₁₂)/2, (Γ − Γ₁₂)/2)`.
    pub fn channel_rates(&self) -> (f64, f64) {
        ((self.gamma + self.gamma12) / 2.0, (self.gamma - self.gamma12) / 2.0)
    }

    fn check_finite(&self) -> Result<()> {
        let all = [self.gamma, self.omega_rabi, self.delta_total, self.delta_diff, self.v, self.gamma12, self.omega_atom];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if self.omega_rabi < 0.0 {
            return Err(Error::invalid("omega_rabi must be non-negative"));
        }
        Ok(())
    }
}

/// Relative orientation and separation of two point dipoles.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DipoleGeometry {
    /// Dimensionless separation k₀r₁₂.
    pub k0r12: f64,
    pub mu1hat: [f64; 3],
    pub mu2hat: [f64; 3],
    pub r12hat: [f64; 3],
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Static dipole-dipole potential and cross-damping in the small-separation limit:
///
/// `V = 3Γ/(4(k₀r₁₂)³) [μ̂₁·μ̂₂ − 3(μ̂₁·r̂₁₂)(μ̂₂·r̂₁₂)]`, `Γ₁₂ = Γ μ̂₁·μ̂₂`.
pub fn compute_dipole_couplings(g: &DipoleGeometry, gamma: f64) -> Result<(f64, f64)> {
    if g.k0r12 == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    if !(g.k0r12 > 0.0) || !g.k0r12.is_finite() {
        return Err(Error::invalid("k0r12 must be positive and finite"));
    }
    for u in [&g.mu1hat, &g.mu2hat, &g.r12hat] {
        if (math::sqrt(dot3(u, u)) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("direction vectors must be unit-norm"));
        }
    }
    let m12 = dot3(&g.mu1hat, &g.mu2hat);
    let bracket = m12 - 3.0 * dot3(&g.mu1hat, &g.r12hat) * dot3(&g.mu2hat, &g.r12hat);
    let v = 3.0 * gamma / (4.0 * math::pow(g.k0r12, 3.0)) * bracket;
    Ok((v, gamma * m12))
}

/// Mixing coefficients of the intermediate eigenstates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenCoeffs {
    /// `λ = √(δ²/4 + V²)`
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn eigen_lambda(delta: f64, v: f64) -> f64 {
    math::sqrt(delta * delta / 4.0 + v * v)
}

impl EigenCoeffs {
    /// `α = (1 + (δ/2 − λ)²/V²)^(−1/2)`, `β = (1 + (δ/2 + λ)²/V²)^(−1/2)`.
    ///
    /// `β` carries the sign of `V`, so `D·H·D` is diagonal for either sign.
    /// With `V = 0` the states reduce to the bare `|10⟩`, `|01⟩`.
    pub fn new(delta: f64, v: f64) -> Result<Self> {
        if v == 0.0 && delta == 0.0 {
            return Err(Error::DegenerateIntermediates);
        }
        let lambda = eigen_lambda(delta, v);
        let (alpha, beta) = if v == 0.0 {
            if delta > 0.0 {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        } else {
            let a = 1.0 / math::sqrt(1.0 + math::pow(delta / 2.0 - lambda, 2.0) / (v * v));
            let b = 1.0 / math::sqrt(1.0 + math::pow(delta / 2.0 + lambda, 2.0) / (v * v));
            (a, if v < 0.0 { -b } else { b })
        };
        Ok(Self { lambda, alpha, beta })
    }

    /// Orthogonal, symmetric basis change `D` between product and eigen bases.
    pub fn transform(&self) -> CMatrix {
        let (a, b) = (self.alpha, self.beta);
        CMatrix::from_real(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, a, b, 0.0, 0.0, b, -a, 0.0, 0.0, 0.0, 0.0, 1.0])
    }
}

/// Which builder produced a [`ModelSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Relaxing,
    Driven,
    TwoAtomProduct,
    TwoAtomEigen,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Relaxing => "relaxing",
            ModelKind::Driven => "driven",
            ModelKind::TwoAtomProduct => "two_atom_product",
            ModelKind::TwoAtomEigen => "two_atom_eigen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relaxing" => Some(ModelKind::Relaxing),
            "driven" => Some(ModelKind::Driven),
            "two_atom_product" => Some(ModelKind::TwoAtomProduct),
            "two_atom_eigen" => Some(ModelKind::TwoAtomEigen),
            _ => None,
        }
    }

    pub fn is_two_atom(&self) -> bool {
        matches!(self, ModelKind::TwoAtomProduct | ModelKind::TwoAtomEigen)
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled jump channel.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JumpOp {
    pub label: String,
    pub op: CMatrix,
}

/// A complete open-system definition.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub h: CMatrix,
    pub jump_ops: Vec<JumpOp>,
    pub basis: Vec<String>,
    pub params: AtomParams,
    pub eigen_coeffs: Option<EigenCoeffs>,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    /// `H − (i/2) Σ C†C`
    pub fn effective_hamiltonian(&self) -> CMatrix {
        effective_hamiltonian(self)
    }

    /// Index of a jump channel by label.
    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.jump_ops.iter().position(|j| j.label == label)
    }

    /// Index of the ground state (always the last basis state).
    pub fn ground_index(&self) -> usize {
        self.dim() - 1
    }

    /// Builds the model of `kind` from `params`.
    pub fn build(kind: ModelKind, params: AtomParams) -> Result<Self> {
        match kind {
            ModelKind::Relaxing => build_relaxing_atom(params),
            ModelKind::Driven => build_driven_atom(params),
            ModelKind::TwoAtomProduct => build_two_atom_product(params),
            ModelKind::TwoAtomEigen => build_two_atom_eigen(params),
        }
    }
}

/// `S⁻ = |g⟩⟨e|` in `{e, g}`.
pub fn lowering() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0])
}

/// `(S₁⁻, S₂⁻)` in the product basis.
pub fn two_atom_lowering() -> (CMatrix, CMatrix) {
    let s = lowering();
    let id = CMatrix::identity(2);
    (s.kron(&id), id.kron(&s))
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Two-level atom decaying freely: `H = (ω/2) diag(1, −1)`, `C = √Γ S⁻`.
pub fn build_relaxing_atom(p: AtomParams) -> Result<ModelSpec> {
    p.check_finite()?;
    let w = p.omega_atom / 2.0;
    Ok(ModelSpec {
        name: "relaxing atom".into(),
        kind: ModelKind::Relaxing,
        h: CMatrix::from_real(2, 2, &[w, 0.0, 0.0, -w]),
        jump_ops: vec![JumpOp { label: "-".into(), op: lowering().scale_real(math::sqrt(p.gamma)) }],
        basis: labels(&["e", "g"]),
        params: p,
        eigen_coeffs: None,
    })
}

/// Coherently driven atom: `H = ½[[Δ, Ω], [Ω, −Δ]]`, `C = √Γ S⁻`.
pub fn build_driven_atom(p: AtomParams) -> Result<ModelSpec> {
    p.check_finite()?;
    let (d, o) = (p.delta_total / 2.0, p.omega_rabi / 2.0);
    Ok(ModelSpec {
        name: "driven atom".into(),
        kind: ModelKind::Driven,
        h: CMatrix::from_real(2, 2, &[d, o, o, -d]),
        jump_ops: vec![JumpOp { label: "-".into(), op: lowering().scale_real(math::sqrt(p.gamma)) }],
        basis: labels(&["e", "g"]),
        params: p,
        eigen_coeffs: None,
    })
}

fn check_two_atom(p: &AtomParams) -> Result<(f64, f64)> {
    p.check_finite()?;
    let (gs, ga) = p.channel_rates();
    if gs < 0.0 || ga < 0.0 {
        return Err(Error::UnphysicalDamping { gamma_s: gs, gamma_a: ga });
    }
    Ok((gs, ga))
}

fn two_atom_product_h(p: &AtomParams) -> CMatrix {
    let (dd, o, d2, v) = (p.delta_total, p.omega_rabi / 2.0, p.delta_diff / 2.0, p.v);
    CMatrix::from_real(
        4,
        4,
        &[-dd, o, o, 0.0, o, d2, v, o, o, v, -d2, o, 0.0, o, o, dd],
    )
}

fn two_atom_channels(gs: f64, ga: f64) -> Vec<JumpOp> {
    let (s1, s2) = two_atom_lowering();
    vec![
        JumpOp { label: "s".into(), op: (&s1 + &s2).scale_real(math::sqrt(gs)) },
        JumpOp { label: "a".into(), op: (&s1 - &s2).scale_real(math::sqrt(ga)) },
    ]
}

/// Two dipole-coupled atoms in the product basis `{|11⟩, |10⟩, |01⟩, |00⟩}`.
pub fn build_two_atom_product(p: AtomParams) -> Result<ModelSpec> {
    let (gs, ga) = check_two_atom(&p)?;
    Ok(ModelSpec {
        name: "two atoms (product basis)".into(),
        kind: ModelKind::TwoAtomProduct,
        h: two_atom_product_h(&p),
        jump_ops: two_atom_channels(gs, ga),
        basis: labels(&["11", "10", "01", "00"]),
        params: p,
        eigen_coeffs: EigenCoeffs::new(p.delta_diff, p.v).ok(),
    })
}

/// Two dipole-coupled atoms in the eigenbasis `{e, s, a, g}` of the undriven Hamiltonian.
pub fn build_two_atom_eigen(p: AtomParams) -> Result<ModelSpec> {
    let (gs, ga) = check_two_atom(&p)?;
    let k = EigenCoeffs::new(p.delta_diff, p.v)?;
    let (a, b, l) = (k.alpha, k.beta, k.lambda);
    let (dd, o) = (p.delta_total, p.omega_rabi / 2.0);
    let (cp, cm) = (o * (a + b), o * (b - a));
    let h = CMatrix::from_real(
        4,
        4,
        &[-dd, cp, cm, 0.0, cp, l, 0.0, cp, cm, 0.0, -l, cm, 0.0, cp, cm, dd],
    );
    let d = k.transform();
    let jump_ops = two_atom_channels(gs, ga)
        .into_iter()
        .map(|j| JumpOp { label: j.label, op: &(&d * &j.op) * &d })
        .collect();
    Ok(ModelSpec {
        name: "two atoms (eigenbasis)".into(),
        kind: ModelKind::TwoAtomEigen,
        h,
        jump_ops,
        basis: labels(&["e", "s", "a", "g"]),
        params: p,
        eigen_coeffs: Some(k),
    })
}

/// `H_eff = H − (i/2) Σ_m C_m†C_m`
pub fn effective_hamiltonian(m: &ModelSpec) -> CMatrix {
    let n = m.dim();
    let mut damp = CMatrix::zeros(n, n);
    for j in &m.jump_ops {
        damp = &damp + &(&j.op.adjoint() * &j.op);
    }
    &m.h - &damp.scale(c(0.0, 0.5))
}
