//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` (either orientation), bisecting the interval
/// with the largest error estimate until the total estimate drops below
/// `abs_tol` or `max_intervals` is reached. Returns the value and the final
/// error estimate.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    if b < a {
        let (v, e) = integrate(f, b, a, abs_tol, max_intervals);
        return (-v, e);
    }
    let (v, e) = gk15(&f, a, b);
    if e <= abs_tol {
        return (v, e);
    }
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(16);
    parts.push((a, b, v, e));
    let mut total_err = e;
    while total_err > abs_tol && parts.len() < max_intervals {
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| {
                if p.3 > best.1 {
                    (i, p.3)
                } else {
                    best
                }
            });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval can no longer be split in floating point
            let (v, _) = gk15(&f, lo, hi);
            parts.push((lo, hi, v, 0.0));
        } else {
            let left = gk15(&f, lo, mid);
            let right = gk15(&f, mid, hi);
            parts.push((lo, mid, left.0, left.1));
            parts.push((mid, hi, right.0, right.1));
        }
        total_err = parts.iter().map(|p| p.3).sum();
    }
    // sum in position order so the result does not depend on split history
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    (parts.iter().map(|p| p.2).sum(), total_err)
}

/// Two-point Gauss–Legendre rule on `[a, b]`.
#[inline]
pub(crate) fn gauss_legendre2<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: f64 = 0.577_350_269_189_625_8;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * (f(c - h * X) + f(c + h * X))
}
