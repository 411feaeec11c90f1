//! Lindblad master-equation reference.
//!
//! Density matrices are vectorised by column stacking, `vec(ρ)[i + n·j] = ρ_ij`,
//! so that `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)` and
//!
//! ```text
//! L = −i(I⊗H − Hᵀ⊗I) + Σ_m [C̄_m⊗C_m − ½(I⊗C_m†C_m + (C_m†C_m)ᵀ⊗I)]
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::linalg::{self, c, CMatrix, CVector, C64, DEFAULT_TOL};
use crate::models::{AtomParams, ModelKind, ModelSpec};
use crate::ode::{integrate_samples, Controls};
use crate::{Error, Result};

/// A density matrix. Construction through [`DensityMatrix::new`] validates
/// Hermiticity, unit trace and positivity.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square"));
        }
        if !m.is_hermitian(1e-10) {
            return Err(Error::invalid("density matrix must be Hermitian"));
        }
        if (m.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("density matrix must have unit trace"));
        }
        if linalg::hermitian_eigenvalues(&m)?.first().is_some_and(|&e| e < -1e-8) {
            return Err(Error::invalid("density matrix must be positive semidefinite"));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let p = psi.normalized().ok_or(Error::invalid("zero state"))?;
        Ok(Self(CMatrix::outer(&p, &p)))
    }

    /// Wraps without validation.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// `tr(Aρ)`
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        (a * &self.0).trace()
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.0)?[0])
    }

    /// `UρU†`
    pub fn transform(&self, u: &CMatrix) -> Self {
        Self(&(u * &self.0) * &u.adjoint())
    }
}

/// Lindblad generator acting on column-stacked density matrices.
pub fn liouvillian(m: &ModelSpec) -> CMatrix {
    let n = m.dim();
    let id = CMatrix::identity(n);
    let h = &m.h;
    let mut l = (&id.kron(h) - &h.transpose().kron(&id)).scale(c(0.0, -1.0));
    for j in &m.jump_ops {
        let cc = &j.op.adjoint() * &j.op;
        let recycle = j.op.conj().kron(&j.op);
        let anti = (&id.kron(&cc) + &cc.transpose().kron(&id)).scale_real(0.5);
        l = &l + &(&recycle - &anti);
    }
    l
}

/// Density matrices at the requested sample times.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MasterSeries {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Integrates `vec(ρ̇) = L vec(ρ)` from `t = 0`.
pub fn evolve_master(m: &ModelSpec, rho0: &DensityMatrix, times: &[f64], controls: Controls) -> Result<MasterSeries> {
    if rho0.dim() != m.dim() {
        return Err(Error::DimensionMismatch("density matrix and model dimension differ"));
    }
    let l = liouvillian(m);
    let y0 = rho0.matrix().vectorize();
    let ys = integrate_samples(|_t, y, dy| l.mul_slice_into(y, dy), 0.0, &y0.0, times, &controls)?;
    let n = m.dim();
    let states = ys
        .into_iter()
        .map(|y| DensityMatrix(CMatrix::unvectorize(&CVector(y), n).hermitian_part()))
        .collect();
    Ok(MasterSeries { times: times.to_vec(), states })
}

fn normalise(v: &CVector, n: usize) -> Result<DensityMatrix> {
    let rho = CMatrix::unvectorize(v, n).hermitian_part();
    let tr = rho.trace().re;
    if !(tr.abs() > 1e-300) {
        return Err(Error::invalid("steady state has vanishing trace"));
    }
    Ok(DensityMatrix(rho.scale_real(1.0 / tr)))
}

/// Unique stationary state from the null space of the Liouvillian.
pub fn steady_state(m: &ModelSpec) -> Result<DensityMatrix> {
    let v = linalg::null_space(&liouvillian(m), DEFAULT_TOL)?;
    normalise(&v, m.dim())
}

/// Long-time limit reached from `rho0`, valid also when the stationary
/// space is degenerate: `vec ρ∞ = R (L_b† R)⁻¹ L_b† vec ρ₀` with `R`, `L_b`
/// bases of the right and left null spaces.
pub fn steady_state_from(m: &ModelSpec, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let l = liouvillian(m);
    let right = linalg::null_basis(&l, DEFAULT_TOL)?;
    let left = linalg::null_basis(&l.adjoint(), DEFAULT_TOL)?;
    if right.is_empty() || right.len() != left.len() {
        return Err(Error::RankDeficiencyMismatch { nullity: right.len() });
    }
    let k = right.len();
    let gram = CMatrix::from_fn(k, k, |i, j| left[i].dot(&right[j]));
    let v0 = rho0.matrix().vectorize();
    let b = CVector(left.iter().map(|l| l.dot(&v0)).collect());
    let x = linalg::solve(&gram, &b)?;
    let mut v = CVector::zeros(l.rows());
    for (r, xi) in right.iter().zip(&x.0) {
        v = &v + &r.scale(*xi);
    }
    normalise(&v, m.dim())
}

/// [`steady_state`], falling back to the limit from the ground state when
/// the stationary space is degenerate. The flag reports the fallback.
pub fn steady_state_or_limit(m: &ModelSpec) -> Result<(DensityMatrix, bool)> {
    match steady_state(m) {
        Ok(r) => Ok((r, false)),
        Err(Error::RankDeficiencyMismatch { .. }) => {
            let g = DensityMatrix::pure(&CVector::basis(m.dim(), m.ground_index()))?;
            Ok((steady_state_from(m, &g)?, true))
        }
        Err(e) => Err(e),
    }
}

/// Basis in which scan populations are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScanBasis {
    Product,
    Eigen,
}

/// Steady-state populations over a detuning grid.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SteadyScan {
    pub detunings: Vec<f64>,
    /// `None` where the point failed; see `failures`.
    pub populations: Vec<Option<Vec<f64>>>,
    pub labels: Vec<String>,
    pub basis: ScanBasis,
    /// Points whose stationary space was degenerate (limit from the ground state used).
    pub degenerate: Vec<bool>,
    pub failures: Vec<(usize, String)>,
}

impl SteadyScan {
    /// `1 − P(ground)` per point.
    pub fn excited_manifold(&self) -> Vec<Option<f64>> {
        self.populations.iter().map(|p| p.as_ref().map(|p| 1.0 - p[p.len() - 1])).collect()
    }
}

/// Steady states of a two-atom model for each total detuning in `grid`.
pub fn steady_scan(template: &AtomParams, grid: &[f64], basis: ScanBasis) -> Result<SteadyScan> {
    if grid.is_empty() {
        return Err(Error::invalid("detuning grid is empty"));
    }
    let kind = match basis {
        ScanBasis::Eigen => ModelKind::TwoAtomEigen,
        ScanBasis::Product => ModelKind::TwoAtomProduct,
    };
    let labels = match basis {
        ScanBasis::Eigen => ["e", "s", "a", "g"],
        ScanBasis::Product => ["11", "10", "01", "00"],
    }
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut out = SteadyScan {
        detunings: grid.to_vec(),
        populations: Vec::with_capacity(grid.len()),
        labels,
        basis,
        degenerate: Vec::with_capacity(grid.len()),
        failures: Vec::new(),
    };
    for (i, &d) in grid.iter().enumerate() {
        let p = AtomParams { delta_total: d, ..*template };
        match ModelSpec::build(kind, p).and_then(|m| steady_state_or_limit(&m)) {
            Ok((rho, deg)) => {
                out.populations.push(Some(rho.populations()));
                out.degenerate.push(deg);
            }
            Err(e) => {
                out.populations.push(None);
                out.degenerate.push(false);
                out.failures.push((i, alloc::format!("{e}")));
            }
        }
    }
    Ok(out)
}

/// Total emission rate `Σ_m tr(C_m†C_m ρ)`.
pub fn emission_rate(m: &ModelSpec, rho: &DensityMatrix) -> f64 {
    m.jump_ops.iter().map(|j| rho.expectation(&(&j.op.adjoint() * &j.op)).re).sum()
}

/// State right after an emission from `rho`, channels weighted by their rates.
pub fn post_jump_state(m: &ModelSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = m.dim();
    let mut acc = CMatrix::zeros(n, n);
    for j in &m.jump_ops {
        acc = &acc + &(&(&j.op * rho.matrix()) * &j.op.adjoint());
    }
    let tr = acc.trace().re;
    if !(tr > 0.0) {
        return Err(Error::ZeroEmission);
    }
    Ok(DensityMatrix(acc.scale_real(1.0 / tr)))
}

/// Ratio of the emission probability right after an emission to the steady-state one.
pub fn consecutive_jump_ratio(m: &ModelSpec) -> Result<f64> {
    let (rho, _) = steady_state_or_limit(m)?;
    let scale: f64 = m.jump_ops.iter().map(|j| (&j.op.adjoint() * &j.op).max_abs()).sum();
    let ss = emission_rate(m, &rho);
    if !(ss > 1e-12 * scale) {
        return Err(Error::ZeroEmission);
    }
    let post = post_jump_state(m, &rho)?;
    Ok(emission_rate(m, &post) / ss)
}
