//! Log score and continuous ranked probability score.
//!
//! Both scores are oriented so that lower is better: the log score is the
//! negative log predictive density at the outcome.

use alloc::format;
use alloc::vec::Vec;

use super::skewt::{SkewT, SkewTParams};
use crate::math::ceil;
use crate::{Error, Result};

/// A predictive distribution that CRPS can be computed for.
pub trait Predictive {
    fn cdf(&self, x: f64) -> f64;

    /// Centre and spread used to place the quadrature window.
    fn location_scale(&self) -> (f64, f64);

    /// CDF at every point of an increasing grid.
    fn cdf_on_grid(&self, grid: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(grid.iter().map(|&x| self.cdf(x)));
    }
}

impl Predictive for SkewT {
    fn cdf(&self, x: f64) -> f64 {
        SkewT::cdf(self, x)
    }

    fn location_scale(&self) -> (f64, f64) {
        let p = self.params();
        (p.location, p.scale)
    }

    fn cdf_on_grid(&self, grid: &[f64], out: &mut Vec<f64>) {
        SkewT::cdf_on_grid(self, grid, out)
    }
}

/// Uniform distribution on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Predictive for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn location_scale(&self) -> (f64, f64) {
        (0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpsConfig {
    /// Half-width of the window in units of scale.
    pub k: f64,
    /// Trapezoid panels per unit of scale inside the window.
    pub steps_per_scale: usize,
    /// Panels for each stretch between the window and an outcome outside it.
    pub outer_steps: usize,
}

impl Default for CrpsConfig {
    fn default() -> Self {
        Self {
            k: 12.0,
            steps_per_scale: 200,
            outer_steps: 200,
        }
    }
}

/// `integral (F(x) - 1{x >= y})^2 dx` by the trapezoidal rule over
/// `[location - k scale, location + k scale]`, widened to contain `y`. The
/// outcome is always a grid node so the indicator jump falls on a panel
/// boundary.
pub fn crps<D: Predictive + ?Sized>(d: &D, y: f64, cfg: &CrpsConfig) -> Result<f64> {
    let (loc, scale) = d.location_scale();
    if !y.is_finite() || !loc.is_finite() || !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "crps inputs loc={loc} scale={scale} y={y}"
        )));
    }
    if !(cfg.k > 0.0) || cfg.steps_per_scale == 0 || cfg.outer_steps == 0 {
        return Err(Error::InvalidArgument(
            "invalid CRPS quadrature settings".into(),
        ));
    }
    let (wa, wb) = (loc - cfg.k * scale, loc + cfg.k * scale);
    let mut breaks = [wa.min(y), wa, wb, y, wb.max(y)];
    breaks.sort_by(f64::total_cmp);
    let h = scale / cfg.steps_per_scale as f64;

    let mut grid: Vec<f64> = Vec::new();
    grid.push(breaks[0]);
    for w in breaks.windows(2) {
        let (s, t) = (w[0], w[1]);
        if t <= s {
            continue;
        }
        let inside = s >= wa && t <= wb;
        let n = if inside {
            (ceil((t - s) / h) as usize).max(1)
        } else {
            cfg.outer_steps
        };
        for i in 1..n {
            grid.push(s + (t - s) * (i as f64 / n as f64));
        }
        grid.push(t);
    }

    let mut f = Vec::with_capacity(grid.len());
    d.cdf_on_grid(&grid, &mut f);
    let mut total = 0.0;
    for i in 1..grid.len() {
        let (x0, x1) = (grid[i - 1], grid[i]);
        // panels left of y use indicator 0 at both ends, right of y use 1
        let ind = if x0 >= y { 1.0 } else { 0.0 };
        let g0 = (f[i - 1] - ind) * (f[i - 1] - ind);
        let g1 = (f[i] - ind) * (f[i] - ind);
        total += 0.5 * (x1 - x0) * (g0 + g1);
    }
    if !total.is_finite() {
        return Err(Error::NumericalFailure(
            "crps quadrature produced a non-finite value".into(),
        ));
    }
    Ok(total.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScore {
    pub value: f64,
    /// The density underflowed and `value` is the configured cap.
    pub capped: bool,
}

/// Default penalty when the predictive density underflows.
pub const DEFAULT_LOG_SCORE_CAP: f64 = 1e3;

/// Negative log density of the outcome, capped at `cap`.
pub fn log_score(params: SkewTParams, realized: f64, cap: f64) -> Result<LogScore> {
    let d = SkewT::new(params)?;
    let v = -d.ln_pdf(realized);
    if v.is_finite() && v <= cap {
        Ok(LogScore {
            value: v,
            capped: false,
        })
    } else if v.is_nan() {
        Err(Error::NumericalFailure(format!(
            "log density at {realized} is NaN"
        )))
    } else {
        Ok(LogScore {
            value: cap,
            capped: true,
        })
    }
}
