//! Azzalini-type skewed Student-t distribution.
//!
//! With `z = (x - location) / scale` the density is
//!
//! ```text
//! f(x) = 2 / scale * t(z; dof) * T(shape * z * sqrt((dof + 1) / (dof + z^2)); dof + 1)
//! ```
//!
//! where `t` and `T` are the Student-t density and CDF. `shape = 0` gives a
//! location-scale Student-t. The CDF is the numerical integral of the
//! density, anchored at `F(location) = 1/2 - atan(shape) / pi`; integrals
//! run over `theta = atan(z)` so that heavy tails map onto a bounded
//! interval.

use alloc::format;
use alloc::vec::Vec;

use super::quad::{gauss_legendre2, integrate};
use super::special::{student_t_cdf, student_t_ln_norm};
use crate::math::{atan, cos, exp, ln, sqrt, tan};
use crate::{Error, Result};

const CDF_TOL: f64 = 1e-14;
const MAX_INTERVALS: usize = 400;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewTParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    pub dof: f64,
}

impl SkewTParams {
    pub fn new(location: f64, scale: f64, shape: f64, dof: f64) -> Result<Self> {
        let p = Self {
            location,
            scale,
            shape,
            dof,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.location.is_finite() || !self.shape.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite skew-t parameters {self:?}"
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "skew-t scale must be > 0, got {}",
                self.scale
            )));
        }
        if !(self.dof > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "skew-t dof must be > 1, got {}",
                self.dof
            )));
        }
        Ok(())
    }
}

/// A skew-t distribution with its normalizing constants precomputed.
#[derive(Debug, Clone, Copy)]
pub struct SkewT {
    params: SkewTParams,
    ln_norm: f64,
    dof_next: f64,
    cdf_at_location: f64,
}

impl SkewT {
    pub fn new(params: SkewTParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            ln_norm: student_t_ln_norm(params.dof),
            dof_next: params.dof + 1.0,
            cdf_at_location: 0.5 - atan(params.shape) / core::f64::consts::PI,
        })
    }

    pub fn params(&self) -> SkewTParams {
        self.params
    }

    /// Density of the standardized variable `z`.
    #[inline]
    pub fn std_pdf(&self, z: f64) -> f64 {
        let nu = self.params.dof;
        let t = exp(self.ln_norm - 0.5 * (nu + 1.0) * ln(1.0 + z * z / nu));
        if self.params.shape == 0.0 {
            return t;
        }
        let w = self.params.shape * z * sqrt(self.dof_next / (nu + z * z));
        2.0 * t * student_t_cdf(w, self.dof_next)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.std_pdf((x - self.params.location) / self.params.scale) / self.params.scale
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let p = self.params;
        let z = (x - p.location) / p.scale;
        let ln_t = self.ln_norm - 0.5 * (p.dof + 1.0) * ln(1.0 + z * z / p.dof) - ln(p.scale);
        if p.shape == 0.0 {
            return ln_t;
        }
        let w = p.shape * z * sqrt(self.dof_next / (p.dof + z * z));
        ln_t + ln(2.0 * student_t_cdf(w, self.dof_next))
    }

    /// Standardized mass between `z0` and `z1` (negative when `z1 < z0`).
    fn std_mass(&self, z0: f64, z1: f64) -> f64 {
        if z0 == z1 {
            return 0.0;
        }
        let integrand = |theta: f64| {
            let c = cos(theta);
            self.std_pdf(tan(theta)) / (c * c)
        };
        integrate(integrand, atan(z0), atan(z1), CDF_TOL, MAX_INTERVALS).0
    }

    pub fn std_cdf(&self, z: f64) -> f64 {
        if z.is_nan() {
            return f64::NAN;
        }
        if z == f64::NEG_INFINITY {
            return 0.0;
        }
        if z == f64::INFINITY {
            return 1.0;
        }
        (self.cdf_at_location + self.std_mass(0.0, z)).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.std_cdf((x - self.params.location) / self.params.scale)
    }

    /// Solve `F(z) = p` starting from a point whose CDF is known: expand a
    /// bracket outward by doubling steps, then refine with Newton steps that
    /// fall back to bisection whenever they leave the bracket. Every CDF
    /// value is carried forward by integrating the density from the previous
    /// point.
    fn std_quantile_from(&self, p: f64, anchor: (f64, f64)) -> Result<(f64, f64)> {
        let (mut za, mut fa) = anchor;
        if fa == p {
            return Ok(anchor);
        }
        let up = p > fa;
        let mut step = 1.0;
        let (mut lo, mut hi);
        loop {
            let zb = if up { za + step } else { za - step };
            let fb = fa + self.std_mass(za, zb);
            if (up && fb >= p) || (!up && fb <= p) {
                lo = if up { (za, fa) } else { (zb, fb) };
                hi = if up { (zb, fb) } else { (za, fa) };
                break;
            }
            za = zb;
            fa = fb;
            step *= 2.0;
            if step > 1e15 {
                return Err(Error::NumericalFailure(format!(
                    "cannot bracket skew-t quantile {p}"
                )));
            }
        }
        let (mut z, mut fz) = if (p - lo.1).abs() <= (hi.1 - p).abs() {
            lo
        } else {
            hi
        };
        for _ in 0..MAX_NEWTON {
            if fz == p {
                return Ok((z, fz));
            }
            let g = self.std_pdf(z);
            let newton = z - (fz - p) / g;
            let zn = if g > 0.0 && newton > lo.0 && newton < hi.0 {
                newton
            } else {
                0.5 * (lo.0 + hi.0)
            };
            let fnew = fz + self.std_mass(z, zn);
            let moved = (zn - z).abs();
            z = zn;
            fz = fnew;
            if fz < p {
                lo = (z, fz);
            } else {
                hi = (z, fz);
            }
            let tol = 1e-13 * (1.0 + z.abs());
            if (fz - p).abs() <= 1e-15 || moved <= tol || hi.0 - lo.0 <= tol {
                return Ok((z, fz));
            }
        }
        Err(Error::NumericalFailure(format!(
            "skew-t quantile {p} did not converge"
        )))
    }

    pub fn std_quantile(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        Ok(self.std_quantile_from(p, (0.0, self.cdf_at_location))?.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.params.location + self.params.scale * self.std_quantile(p)?)
    }

    /// Standardized quantiles for several levels, walking through them in
    /// increasing order so each search starts from the previous solution.
    pub fn std_quantiles(&self, levels: &[f64]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
        let mut out = alloc::vec![0.0; levels.len()];
        // start from the location, whose CDF is exact, at the level nearest
        // to it
        let f0 = self.cdf_at_location;
        let split = order.partition_point(|&i| levels[i] < f0);
        let mut anchor = (0.0, f0);
        for &i in &order[split..] {
            check_level(levels[i])?;
            anchor = self.std_quantile_from(levels[i], anchor)?;
            out[i] = anchor.0;
        }
        anchor = (0.0, f0);
        for &i in order[..split].iter().rev() {
            check_level(levels[i])?;
            anchor = self.std_quantile_from(levels[i], anchor)?;
            out[i] = anchor.0;
        }
        Ok(out)
    }

    pub fn quantiles(&self, levels: &[f64]) -> Result<Vec<f64>> {
        let p = self.params;
        Ok(self
            .std_quantiles(levels)?
            .into_iter()
            .map(|z| p.location + p.scale * z)
            .collect())
    }

    /// CDF at each point of an increasing grid, by accumulating the density
    /// between neighbouring points.
    pub fn cdf_on_grid(&self, grid: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let Some(&first) = grid.first() else { return };
        let p = self.params;
        let to_z = |x: f64| (x - p.location) / p.scale;
        let mut z_prev = to_z(first);
        let mut acc = self.std_cdf(z_prev);
        out.push(acc);
        for &x in &grid[1..] {
            let z = to_z(x);
            let dz = z - z_prev;
            acc += if dz.abs() <= 0.05 {
                gauss_legendre2(|t| self.std_pdf(t), z_prev, z)
            } else {
                self.std_mass(z_prev, z)
            };
            out.push(acc.clamp(0.0, 1.0));
            z_prev = z;
        }
    }
}

fn check_level(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "probability level {p} outside (0, 1)"
        )))
    }
}
