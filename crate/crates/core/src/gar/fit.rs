//! Exactly identified skewed-t fit to a handful of predicted quantiles.
//!
//! For fixed `(shape, dof)` the quantiles are affine in `(location, scale)`,
//! so those two are profiled out by least squares and the search runs over
//! `(shape, ln dof)` only. A coarse candidate set (warm start, a fixed grid
//! and seeded random points) is ranked, and Levenberg–Marquardt is run from the
//! best candidates until the squared quantile mismatch is negligible or two
//! starts agree. Nelder–Mead polishes the result when they do not.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::skewt::{SkewT, SkewTParams};
use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Quantile levels used by the growth-at-risk pipeline.
pub const GAR_TAUS: [f64; 4] = [0.05, 0.25, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewTFitConfig {
    /// Search box for the shape parameter: `[-shape_bound, shape_bound]`.
    pub shape_bound: f64,
    pub dof_min: f64,
    /// Degrees of freedom are capped here; the normal limit sits at the cap.
    pub dof_max: f64,
    /// A fit converges when the sum of squared quantile mismatches is at or
    /// below this value.
    pub residual_tol: f64,
    /// Number of local searches to try before giving up.
    pub starts: usize,
    /// Seeded random candidates added to the fixed grid.
    pub random_candidates: usize,
    pub max_evals_per_start: usize,
    pub seed: u64,
}

impl Default for SkewTFitConfig {
    fn default() -> Self {
        Self {
            shape_bound: 10.0,
            dof_min: 2.0,
            dof_max: 100.0,
            residual_tol: 1e-6,
            starts: 4,
            random_candidates: 4,
            max_evals_per_start: 400,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewTFit {
    pub params: SkewTParams,
    /// Sum of squared differences between target and fitted quantiles.
    pub residual: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Objective<'a> {
    taus: &'a [f64],
    q: &'a [f64],
    cfg: &'a SkewTFitConfig,
    evals: usize,
}

impl Objective<'_> {
    fn clamp(&self, u: [f64; 2]) -> (f64, f64) {
        let shape = u[0].clamp(-self.cfg.shape_bound, self.cfg.shape_bound);
        let dof = exp(u[1]).clamp(self.cfg.dof_min, self.cfg.dof_max);
        (shape, dof)
    }

    /// Profiled fit at `u`: (residual, location, scale).
    fn eval(&mut self, u: [f64; 2]) -> (f64, f64, f64) {
        let mut r = Vec::new();
        self.residuals(u, &mut r)
    }

    /// Like [`Self::eval`], also filling `r` with the quantile mismatches.
    fn residuals(&mut self, u: [f64; 2], r: &mut Vec<f64>) -> (f64, f64, f64) {
        self.evals += 1;
        r.clear();
        let (shape, dof) = self.clamp(u);
        let Ok(d) = SkewTParams::new(0.0, 1.0, shape, dof).and_then(SkewT::new) else {
            return (f64::INFINITY, 0.0, 1.0);
        };
        let Ok(z) = d.std_quantiles(self.taus) else {
            return (f64::INFINITY, 0.0, 1.0);
        };
        let n = z.len() as f64;
        let zm = z.iter().sum::<f64>() / n;
        let qm = self.q.iter().sum::<f64>() / n;
        let szz: f64 = z.iter().map(|v| (v - zm) * (v - zm)).sum();
        let szq: f64 = z.iter().zip(self.q).map(|(a, b)| (a - zm) * (b - qm)).sum();
        let scale = szq / szz;
        if !(scale > 0.0) || !scale.is_finite() {
            return (f64::INFINITY, 0.0, 1.0);
        }
        let location = qm - scale * zm;
        r.extend(z.iter().zip(self.q).map(|(a, b)| b - location - scale * a));
        (r.iter().map(|v| v * v).sum(), location, scale)
    }

    fn value(&mut self, u: [f64; 2]) -> f64 {
        self.eval(u).0
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let b = self.cfg.shape_bound;
        ([-b, ln(self.cfg.dof_min)], [b, ln(self.cfg.dof_max)])
    }
}

/// Levenberg–Marquardt on the profiled residuals with forward-difference
/// Jacobians, kept inside the search box by clamping. A coordinate sitting
/// on a bound with the gradient pushing outward is held fixed.
fn levenberg_marquardt(
    obj: &mut Objective<'_>,
    start: [f64; 2],
    target: f64,
    max_evals: usize,
) -> ([f64; 2], f64) {
    let (lo, hi) = obj.bounds();
    let clamp = |u: [f64; 2]| [u[0].clamp(lo[0], hi[0]), u[1].clamp(lo[1], hi[1])];
    let first = obj.evals;
    let mut u = clamp(start);
    let mut r = Vec::new();
    let mut f = obj.residuals(u, &mut r).0;
    if !f.is_finite() {
        return (u, f);
    }
    let mut lambda = 1e-3;
    let mut rh = Vec::new();
    let mut trial = Vec::new();
    'outer: while f > target && obj.evals - first < max_evals {
        let mut jac = [[0.0; 2]; 4];
        let m = r.len().min(4);
        for j in 0..2 {
            let mut h = 1e-6 * u[j].abs().max(1.0);
            if u[j] + h > hi[j] {
                h = -h;
            }
            let mut uh = u;
            uh[j] += h;
            if !obj.residuals(uh, &mut rh).0.is_finite() {
                break 'outer;
            }
            for i in 0..m {
                jac[i][j] = (rh[i] - r[i]) / h;
            }
        }
        let mut a = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for i in 0..m {
            for j in 0..2 {
                g[j] += jac[i][j] * r[i];
                for k in 0..2 {
                    a[j][k] += jac[i][j] * jac[i][k];
                }
            }
        }
        let free =
            [0, 1].map(|j| !((u[j] <= lo[j] && g[j] > 0.0) || (u[j] >= hi[j] && g[j] < 0.0)));
        if !free[0] && !free[1] {
            break;
        }
        let floor = 1e-12 * (a[0][0] + a[1][1]).max(1e-300);
        loop {
            let d0 = a[0][0] + lambda * a[0][0].max(floor);
            let d1 = a[1][1] + lambda * a[1][1].max(floor);
            let step = match free {
                [true, true] => {
                    let det = d0 * d1 - a[0][1] * a[1][0];
                    [
                        (-g[0] * d1 + g[1] * a[0][1]) / det,
                        (-g[1] * d0 + g[0] * a[1][0]) / det,
                    ]
                }
                [true, false] => [-g[0] / d0, 0.0],
                _ => [0.0, -g[1] / d1],
            };
            let next = clamp([u[0] + step[0], u[1] + step[1]]);
            if next == u || !next[0].is_finite() || !next[1].is_finite() {
                break 'outer;
            }
            let fn_ = obj.residuals(next, &mut trial).0;
            if fn_ < f {
                let gain = f - fn_;
                u = next;
                f = fn_;
                core::mem::swap(&mut r, &mut trial);
                lambda = (lambda / 3.0).max(1e-12);
                if gain <= 1e-12 * f {
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 || obj.evals - first >= max_evals {
                break 'outer;
            }
        }
    }
    (u, f)
}

/// Nelder–Mead on two variables. Returns the best vertex and its value.
fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: [f64; 2],
    target: f64,
    max_evals: usize,
) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = [f(simplex[0]), f(simplex[1]), f(simplex[2])];
    let mut evals = 3;
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while evals < max_evals {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        vals = [vals[order[0]], vals[order[1]], vals[order[2]]];
        if vals[0] <= target {
            break;
        }
        let size = (0..2)
            .map(|i| {
                (simplex[1][i] - simplex[0][i])
                    .abs()
                    .max((simplex[2][i] - simplex[0][i]).abs())
            })
            .fold(0.0, f64::max);
        // also stop on a flat simplex, e.g. past the clamped dof bound
        if size < 1e-12 || vals[2] - vals[0] <= 1e-10 * vals[0] {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        evals += 1;
        if fr < vals[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            evals += 1;
            if fe < fr {
                simplex[2] = expanded;
                vals[2] = fe;
            } else {
                simplex[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = reflected;
            vals[2] = fr;
        } else {
            let (contracted, fc) = if fr < vals[2] {
                let c = lerp(centroid, reflected, 0.5);
                let v = f(c);
                (c, v)
            } else {
                let c = lerp(centroid, simplex[2], 0.5);
                let v = f(c);
                (c, v)
            };
            evals += 1;
            if fc < vals[2].min(fr) {
                simplex[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    vals[i] = f(simplex[i]);
                }
                evals += 2;
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best], vals[best])
}

/// Fit a skewed-t whose quantiles at `taus` match `q` in least squares.
///
/// `warm` optionally seeds the search with a previous `(shape, dof)`. On
/// failure to reach `residual_tol` the best fit found is returned inside
/// [`Error::ConvergenceFailure`].
pub fn fit_skewt_to_quantiles(
    taus: &[f64],
    q: &[f64],
    cfg: &SkewTFitConfig,
    warm: Option<(f64, f64)>,
) -> Result<SkewTFit> {
    if taus.len() != q.len() || taus.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least three (tau, quantile) pairs".into(),
        ));
    }
    if taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "quantile levels must increase strictly inside (0, 1)".into(),
        ));
    }
    if q.iter().any(|v| !v.is_finite()) || q.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingQuantiles);
    }
    if !(cfg.dof_min > 1.0 && cfg.dof_max >= cfg.dof_min && cfg.shape_bound >= 0.0) {
        return Err(Error::InvalidArgument("invalid skew-t search box".into()));
    }

    let spread = q[q.len() - 1] - q[0];
    // stop searching once mismatches are ~1e-8 of the quantile spread
    let target = 1e-16 * spread * spread;
    let mut obj = Objective {
        taus,
        q,
        cfg,
        evals: 0,
    };

    let (ln_lo, ln_hi) = (ln(cfg.dof_min), ln(cfg.dof_max));
    let mut candidates: Vec<[f64; 2]> = Vec::new();
    if let Some((shape, dof)) = warm {
        candidates.push([shape, ln(dof.max(cfg.dof_min))]);
    }
    let b = cfg.shape_bound;
    for shape in [0.0, -0.3 * b, 0.3 * b, -0.1 * b, 0.1 * b] {
        for dof in [5.0, 30.0] {
            candidates.push([shape, ln(dof).clamp(ln_lo, ln_hi)]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for _ in 0..cfg.random_candidates {
        let shape = (2.0 * unit() - 1.0) * b;
        let ln_dof = ln_lo + unit() * (ln_hi - ln_lo);
        candidates.push([shape, ln_dof]);
    }

    let mut ranked: Vec<([f64; 2], f64)> = candidates.iter().map(|&u| (u, obj.value(u))).collect();
    // warm start keeps priority; the rest by value
    let warm_first = warm.is_some() as usize;
    ranked[warm_first..].sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut best: ([f64; 2], f64) = ranked
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let mut started = 0;
    let mut agreed = false;
    for &(start, _) in ranked.iter().take(cfg.starts.max(1)) {
        if best.1 <= target {
            break;
        }
        let (u, v) = levenberg_marquardt(&mut obj, start, target, cfg.max_evals_per_start);
        // two starts landing on the same minimum end the search
        agreed = started > 0 && (v - best.1).abs() <= 1e-6 * best.1;
        if v < best.1 {
            best = (u, v);
        }
        started += 1;
        if agreed {
            break;
        }
    }
    if best.1 > target && !agreed {
        let step = [0.1 * b.max(1.0), 0.3];
        let (u, v) = nelder_mead(
            |u| obj.value(u),
            best.0,
            step,
            target,
            cfg.max_evals_per_start,
        );
        if v < best.1 {
            best = (u, v);
        }
    }

    let (ssr, location, scale) = obj.eval(best.0);
    let (shape, dof) = obj.clamp(best.0);
    let params = SkewTParams::new(location, scale, shape, dof)
        .map_err(|_| Error::NumericalFailure("skew-t fit produced invalid parameters".into()))?;
    let fit = SkewTFit {
        params,
        residual: ssr,
        converged: ssr <= cfg.residual_tol,
        evaluations: obj.evals,
    };
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::ConvergenceFailure(Box::new(fit)))
    }
}

/// Largest absolute difference between the fit's quantiles and `q`.
pub fn max_quantile_mismatch(params: SkewTParams, taus: &[f64], q: &[f64]) -> Result<f64> {
    let fitted = SkewT::new(params)?.quantiles(taus)?;
    Ok(fitted
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Root mean squared mismatch, a scale-comparable form of the residual.
pub fn rms_mismatch(fit: &SkewTFit, n: usize) -> f64 {
    sqrt(fit.residual / n as f64)
}
