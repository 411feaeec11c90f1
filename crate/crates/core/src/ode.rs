//! Embedded Runge–Kutta–Fehlberg 7(8) integration of complex linear systems.
//!
//! The 8th-order solution is propagated; the difference to the 7th-order
//! embedded solution drives step-size control. The right-hand side is any
//! `FnMut(t, y, dy)` acting on complex slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::C64;
use crate::math;
use crate::{Error, Result};

/// Tolerances and step limits for adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Controls {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on any single step (`f64::INFINITY` for none).
    pub max_step: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, max_step: f64::INFINITY }
    }
}

impl Controls {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, max_step: f64::INFINITY }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::invalid("rtol, atol and max_step must be positive"));
        }
        Ok(())
    }
}

const C: [f64; 13] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [&[f64]; 13] = [
    &[],
    &[2.0 / 27.0],
    &[1.0 / 36.0, 1.0 / 12.0],
    &[1.0 / 24.0, 0.0, 1.0 / 8.0],
    &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
    &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
    &[-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
    &[31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
    &[2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
    &[-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0, 17.0 / 6.0, -1.0 / 12.0],
    &[
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
    ],
    &[3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0],
    &[
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

const B8: [f64; 13] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const ERR: f64 = 41.0 / 840.0;

/// Reusable RKF7(8) workspace for systems of a fixed dimension.
#[derive(Clone, Debug)]
pub struct Rkf78 {
    k: [Vec<C64>; 13],
    tmp: Vec<C64>,
    /// Accepted steps since construction.
    pub accepted: usize,
    /// Rejected steps since construction.
    pub rejected: usize,
}

impl Rkf78 {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k: core::array::from_fn(|_| z.clone()),
            tmp: z,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.tmp.len()
    }

    /// One fixed step of size `h` from `(t, y)` into `out`; returns the
    /// scaled error norm of the embedded pair.
    pub fn fixed_step<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64, out: &mut [C64], ctl: &Controls) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        for s in 0..13 {
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &a) in A[s].iter().enumerate() {
                    if a != 0.0 {
                        acc += self.k[j][i] * a;
                    }
                }
                self.tmp[i] = y[i] + acc * h;
            }
            f(t + C[s] * h, &self.tmp, &mut self.k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (s, &b) in B8.iter().enumerate() {
                if b != 0.0 {
                    acc += self.k[s][i] * b;
                }
            }
            out[i] = y[i] + acc * h;
            let e = (self.k[0][i] + self.k[10][i] - self.k[11][i] - self.k[12][i]) * (ERR * h);
            let scale = ctl.atol + ctl.rtol * y[i].norm().max(out[i].norm());
            let r = e.norm() / scale;
            if !(r <= err) {
                err = r;
            }
        }
        err
    }

    /// One accepted adaptive step starting with trial size `h` (clamped to
    /// `h_max`). `y` is overwritten. Returns `(h_taken, h_next)`.
    pub fn adaptive_step<F>(
        &mut self,
        f: &mut F,
        t: f64,
        y: &mut [C64],
        mut h: f64,
        h_max: f64,
        ctl: &Controls,
    ) -> Result<(f64, f64)>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let mut out = vec![C64::new(0.0, 0.0); y.len()];
        let floor = 1e-14 * math::abs(t).max(1.0);
        loop {
            h = h.min(h_max).min(ctl.max_step);
            if h < floor {
                return Err(Error::SolverStall(t));
            }
            let err = self.fixed_step(f, t, y, h, &mut out, ctl);
            if err.is_finite() && err <= 1.0 {
                y.copy_from_slice(&out);
                self.accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * math::pow(err, -1.0 / 8.0)).clamp(0.2, 5.0) };
                return Ok((h, h * grow));
            }
            self.rejected += 1;
            let shrink = if err.is_finite() { (0.9 * math::pow(err, -1.0 / 8.0)).clamp(0.2, 1.0) } else { 0.2 };
            h *= shrink;
        }
    }
}

/// Initial step guess from the size of the derivative.
pub fn initial_step<F>(f: &mut F, t: f64, y: &[C64], ctl: &Controls) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut dy = vec![C64::new(0.0, 0.0); y.len()];
    f(t, y, &mut dy);
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..y.len() {
        let sc = ctl.atol + ctl.rtol * y[i].norm();
        d0 = d0.max(y[i].norm() / sc);
        d1 = d1.max(dy[i].norm() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(ctl.max_step)
}

/// Integrates from `t0` and returns the state at each time of `samples`
/// (ascending, all ≥ `t0`). Samples are hit exactly by shortening steps.
pub fn integrate_samples<F>(mut f: F, t0: f64, y0: &[C64], samples: &[f64], ctl: &Controls) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    ctl.validate()?;
    let mut solver = Rkf78::new(y0.len());
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = initial_step(&mut f, t, &y, ctl);
    let mut out = Vec::with_capacity(samples.len());
    for &ts in samples {
        if ts < t {
            return Err(Error::invalid("sample times must be ascending and not before t0"));
        }
        while ts - t > 1e-14 * ts.abs().max(1.0) {
            let remaining = ts - t;
            let (taken, next) = solver.adaptive_step(&mut f, t, &mut y, h, remaining, ctl)?;
            let hit = taken >= remaining * (1.0 - 1e-12);
            t = if hit { ts } else { t + taken };
            h = if hit { next.max(h) } else { next };
        }
        out.push(y.clone());
    }
    Ok(out)
}
