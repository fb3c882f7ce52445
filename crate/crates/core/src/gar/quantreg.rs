//! Linear quantile regression by exact minimization of the check loss.
//!
//! The problem `min_b sum_i rho_tau(y_i - x_i b)` is solved as the linear
//! program
//!
//! ```text
//! min  tau * 1'u + (1 - tau) * 1'v
//! s.t. X (b+ - b-) + u - v = y,   b+, b-, u, v >= 0
//! ```
//!
//! with a dense primal simplex. Each variable pair (`b+`/`b-`, `u`/`v`)
//! shares one tableau column up to sign, so the tableau holds `k + n`
//! columns instead of `2k + 2n`. The starting basis takes `u_i` or `v_i`
//! depending on the sign of `y_i`, which is feasible without a phase one.
//! The optimal vertex is then re-solved exactly from the `k` observations it
//! interpolates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Column-rank tolerance, relative to each column's norm.
pub const RANK_TOL: f64 = 1e-10;

/// Dense row-major regressor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged regressor rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Intercept column followed by the given regressor columns.
    pub fn with_intercept(columns: &[&[f64]], rows: usize) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument(
                "regressor columns differ in length".into(),
            ));
        }
        let cols = columns.len() + 1;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.push(1.0);
            data.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Keep only the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.data[i * self.cols + j])
    }

    /// Modified Gram–Schmidt on the columns.
    pub fn has_full_column_rank(&self) -> bool {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.cols);
        for j in 0..self.cols {
            let mut v: Vec<f64> = self.column(j).collect();
            let norm0 = crate::math::sqrt(v.iter().map(|x| x * x).sum());
            if !(norm0 > 0.0) {
                return false;
            }
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = crate::math::sqrt(v.iter().map(|x| x * x).sum());
            if norm <= RANK_TOL * norm0 {
                return false;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        true
    }
}

/// Check (pinball) loss.
#[inline]
pub fn check_loss(residual: f64, tau: f64) -> f64 {
    if residual >= 0.0 {
        tau * residual
    } else {
        (tau - 1.0) * residual
    }
}

pub fn pinball_loss(y: &[f64], x: &DesignMatrix, beta: &[f64], tau: f64) -> f64 {
    (0..x.rows())
        .map(|i| check_loss(y[i] - dot(x.row(i), beta), tau))
        .sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub tau: f64,
    pub coefficients: Vec<f64>,
    /// Check loss at the coefficients.
    pub loss: f64,
}

pub fn fit_quantile(y: &[f64], x: &DesignMatrix, tau: f64) -> Result<QuantileFit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside (0, 1)")));
    }
    if x.rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows for {} responses",
            x.rows(),
            y.len()
        )));
    }
    if x.cols() == 0 || y.len() < x.cols() + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} observations for {} regressors, got {}",
            x.cols() + 1,
            x.cols(),
            y.len()
        )));
    }
    if y.iter().chain(x.data.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite regression data".into()));
    }
    if !x.has_full_column_rank() {
        return Err(Error::RankDeficient);
    }
    let beta = Simplex::new(y, x, tau).solve()?;
    let beta = polish_vertex(y, x, tau, beta);
    let loss = pinball_loss(y, x, &beta, tau);
    Ok(QuantileFit {
        tau,
        coefficients: beta,
        loss,
    })
}

struct Simplex {
    m: usize,
    k: usize,
    ncol: usize,
    tau: f64,
    tab: Vec<f64>,
    rhs: Vec<f64>,
    /// Basic variable of each row: stored column and sign of its variant.
    basis: Vec<(usize, f64)>,
    /// Reduced costs of the `+` variant of every stored column.
    reduced: Vec<f64>,
}

impl Simplex {
    fn new(y: &[f64], x: &DesignMatrix, tau: f64) -> Self {
        let (m, k) = (x.rows(), x.cols());
        let ncol = k + m;
        let mut tab = vec![0.0; m * ncol];
        let mut rhs = vec![0.0; m];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let s = if y[i] >= 0.0 { 1.0 } else { -1.0 };
            let row = &mut tab[i * ncol..(i + 1) * ncol];
            for (j, v) in x.row(i).iter().enumerate() {
                row[j] = s * v;
            }
            row[k + i] = s;
            rhs[i] = s * y[i];
            basis.push((k + i, s));
        }
        let mut sp = Self {
            m,
            k,
            ncol,
            tau,
            tab,
            rhs,
            basis,
            reduced: vec![0.0; ncol],
        };
        for j in 0..ncol {
            let z: f64 = (0..m)
                .map(|i| sp.basic_cost(i) * sp.tab[i * ncol + j])
                .sum();
            sp.reduced[j] = sp.cost(j, 1.0) - z;
        }
        sp
    }

    fn cost(&self, col: usize, sign: f64) -> f64 {
        match (col < self.k, sign > 0.0) {
            (true, _) => 0.0,
            (false, true) => self.tau,
            (false, false) => 1.0 - self.tau,
        }
    }

    fn basic_cost(&self, row: usize) -> f64 {
        let (c, s) = self.basis[row];
        self.cost(c, s)
    }

    fn reduced_cost(&self, col: usize, sign: f64) -> f64 {
        let d = self.reduced[col];
        match (col < self.k, sign > 0.0) {
            (_, true) => d,
            (true, false) => -d,
            (false, false) => 1.0 - d,
        }
    }

    fn solve(mut self) -> Result<Vec<f64>> {
        const DJ_TOL: f64 = 1e-11;
        let max_iter = 50 * (self.m + self.ncol);
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate_run > 2 * self.ncol;
            let mut enter: Option<(usize, f64, f64)> = None;
            'scan: for j in 0..self.ncol {
                for sign in [1.0, -1.0] {
                    let d = self.reduced_cost(j, sign);
                    if d < -DJ_TOL && enter.is_none_or(|(_, _, best)| d < best) {
                        enter = Some((j, sign, d));
                        if bland {
                            break 'scan;
                        }
                    }
                }
            }
            let Some((col, sign, d_enter)) = enter else {
                return Ok(self.coefficients());
            };

            let scale = (0..self.m)
                .map(|i| self.tab[i * self.ncol + col].abs())
                .fold(0.0, f64::max);
            let piv_tol = 1e-12 * scale.max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = sign * self.tab[i * self.ncol + col];
                if a > piv_tol {
                    let ratio = self.rhs[i].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-14 * best.abs().max(1.0)
                                || (ratio <= best + 1e-14 * best.abs().max(1.0)
                                    && self.basis[i].0 < self.basis[r].0)
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::NumericalFailure(
                    "check-loss LP reported unbounded".into(),
                ));
            };
            degenerate_run = if ratio <= 1e-14 {
                degenerate_run + 1
            } else {
                0
            };
            self.pivot(r, col, sign, d_enter);
        }
        Err(Error::NumericalFailure(
            "check-loss simplex hit its iteration limit".into(),
        ))
    }

    fn pivot(&mut self, r: usize, col: usize, sign: f64, d_enter: f64) {
        let n = self.ncol;
        let a_r = sign * self.tab[r * n + col];
        {
            let row = &mut self.tab[r * n..(r + 1) * n];
            row.iter_mut().for_each(|v| *v /= a_r);
        }
        self.rhs[r] /= a_r;
        let pivot_row: Vec<f64> = self.tab[r * n..(r + 1) * n].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let a_i = sign * self.tab[i * n + col];
            if a_i == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            row.iter_mut()
                .zip(&pivot_row)
                .for_each(|(v, p)| *v -= a_i * p);
            self.rhs[i] -= a_i * pivot_rhs;
        }
        self.reduced
            .iter_mut()
            .zip(&pivot_row)
            .for_each(|(d, p)| *d -= d_enter * p);
        self.basis[r] = (col, sign);
    }

    fn coefficients(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.k];
        for (i, &(c, s)) in self.basis.iter().enumerate() {
            if c < self.k {
                beta[c] += s * self.rhs[i];
            }
        }
        beta
    }
}

/// Re-solve the vertex exactly through the `k` observations with the
/// smallest residuals, keeping the result if it does not lose.
fn polish_vertex(y: &[f64], x: &DesignMatrix, tau: f64, beta: Vec<f64>) -> Vec<f64> {
    let k = x.cols();
    let mut idx: Vec<usize> = (0..y.len()).collect();
    let resid = |i: usize| (y[i] - dot(x.row(i), &beta)).abs();
    idx.sort_by(|&a, &b| resid(a).total_cmp(&resid(b)).then(a.cmp(&b)));
    let a: Vec<Vec<f64>> = idx[..k].iter().map(|&i| x.row(i).to_vec()).collect();
    let b: Vec<f64> = idx[..k].iter().map(|&i| y[i]).collect();
    let Some(exact) = solve_square(a, b) else {
        return beta;
    };
    if pinball_loss(y, x, &exact, tau) <= pinball_loss(y, x, &beta, tau) {
        exact
    } else {
        beta
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub(crate) fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for j in c..n {
                    a[r][j] -= f * a[c][j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Predicted quantiles at one regressor row, sorted across levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedQuantiles {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Raw predictions were not monotone in tau and were rearranged.
    pub crossed: bool,
}

/// Linear predictions `x' beta_tau`, ordered by tau. Crossing predictions
/// are sorted (monotone rearrangement) and flagged.
pub fn predict_quantiles(fits: &[QuantileFit], x: &[f64]) -> Result<PredictedQuantiles> {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(fits.len());
    for f in fits {
        if f.coefficients.len() != x.len() {
            return Err(Error::LayoutMismatch {
                expected: f.coefficients.len(),
                got: x.len(),
            });
        }
        pairs.push((f.tau, dot(&f.coefficients, x)));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let crossed = values.windows(2).any(|w| w[1] < w[0]);
    if crossed {
        values.sort_by(f64::total_cmp);
    }
    Ok(PredictedQuantiles {
        taus: pairs.iter().map(|p| p.0).collect(),
        values,
        crossed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_median() {
        let y = [3.0, -1.0, 7.0, 2.0, 5.0];
        let x = DesignMatrix::with_intercept(&[], y.len()).unwrap();
        let fit = fit_quantile(&y, &x, 0.5).unwrap();
        assert_eq!(fit.coefficients, vec![3.0]);
    }

    #[test]
    fn intercept_only_lower_quantile() {
        let y: Vec<f64> = (1..=20).map(|v| v as f64).collect();
        let x = DesignMatrix::with_intercept(&[], y.len()).unwrap();
        let fit = fit_quantile(&y, &x, 0.1).unwrap();
        // any value in [2, 3] minimizes; the vertex is a data point
        assert!(fit.coefficients[0] == 2.0 || fit.coefficients[0] == 3.0);
    }

    #[test]
    fn noiseless_line_recovered_for_every_tau() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 2.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let x = DesignMatrix::with_intercept(&[&xs], y.len()).unwrap();
        for tau in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let fit = fit_quantile(&y, &x, tau).unwrap();
            assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
            assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
            let pred = predict_quantiles(&[fit], &[1.0, 2.0]).unwrap();
            assert!((pred.values[0] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_columns_rejected() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let x = DesignMatrix::with_intercept(&[&a, &b], 5).unwrap();
        assert_eq!(
            fit_quantile(&[1.0, 2.0, 0.0, 1.0, 3.0], &x, 0.5),
            Err(Error::RankDeficient)
        );
        let constant = [4.0; 5];
        let x = DesignMatrix::with_intercept(&[&constant], 5).unwrap();
        assert_eq!(
            fit_quantile(&[1.0, 2.0, 0.0, 1.0, 3.0], &x, 0.5),
            Err(Error::RankDeficient)
        );
    }

    #[test]
    fn argument_checks() {
        let x = DesignMatrix::with_intercept(&[], 3).unwrap();
        assert!(fit_quantile(&[1.0, 2.0, 3.0], &x, 1.0).is_err());
        assert!(fit_quantile(&[1.0, 2.0], &x, 0.5).is_err());
        let x1 = DesignMatrix::with_intercept(&[], 1).unwrap();
        assert!(fit_quantile(&[1.0], &x1, 0.5).is_err());
    }

    #[test]
    fn crossing_predictions_rearranged() {
        let fits = [
            QuantileFit {
                tau: 0.05,
                coefficients: vec![1.0, 1.0],
                loss: 0.0,
            },
            QuantileFit {
                tau: 0.25,
                coefficients: vec![0.0, 1.0],
                loss: 0.0,
            },
            QuantileFit {
                tau: 0.75,
                coefficients: vec![2.0, 0.0],
                loss: 0.0,
            },
        ];
        let p = predict_quantiles(&fits, &[1.0, 0.5]).unwrap();
        assert!(p.crossed);
        assert_eq!(p.values, vec![0.5, 1.5, 2.0]);
        assert!(matches!(
            predict_quantiles(&fits, &[1.0]),
            Err(Error::LayoutMismatch { .. })
        ));
        let intercept_only = [QuantileFit {
            tau: 0.5,
            coefficients: vec![3.0],
            loss: 0.0,
        }];
        assert_eq!(
            predict_quantiles(&intercept_only, &[1.0]).unwrap().values,
            vec![3.0]
        );
    }
}
