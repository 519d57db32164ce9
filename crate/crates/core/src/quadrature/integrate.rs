//! Globally adaptive Gauss–Kronrod (7/15) integration on finite intervals and
//! half-lines.
//!
//! The subdivision strategy follows QUADPACK's QAG: keep every panel in a
//! max-heap keyed on its error estimate and bisect the worst one until the
//! summed error meets the tolerance. Final sums are taken over panels sorted
//! by left endpoint with compensated summation, so results do not depend on
//! heap tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub fn relative(rel: f64, max_panels: usize) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_panels,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut result_k = fc * WGK[7];
    let mut result_g = fc * WG[3];
    let mut result_abs = result_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        result_k += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * result_k;
    let mut result_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = result_k * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut error = ((result_k - result_g) * half).abs();
    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * result_abs);
    }
    Panel { a, b, value, error }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Integrates `f` over `[a, b]`, starting from panels split at `breakpoints`
/// (points outside `(a, b)` are ignored).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
    what: &'static str,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            panels: 0,
        });
    }
    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b && x.is_finite()));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Panel> = Vec::new();
    let mut evaluations = 0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let p = kronrod(&mut f, w[0], w[1]);
        evaluations += 15;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }

    while total_err > tol.target(total) {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a).abs() <= 1e3 * f64::EPSILON * mid.abs() {
            // cannot split further; keep it as is
            settled.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if heap.len() + settled.len() + 1 >= tol.max_panels {
            heap.push(worst);
            let panels: Vec<Panel> = heap.into_iter().chain(settled).collect();
            let (value, error) = totals(&panels);
            return Err(Error::NonConvergence {
                what,
                subdivisions: panels.len(),
                estimate: value,
                error,
            });
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let panels: Vec<Panel> = heap.into_iter().chain(settled).collect();
    let (value, error) = totals(&panels);
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            what,
            subdivisions: panels.len(),
            estimate: value,
            error,
        });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
        panels: panels.len(),
    })
}

fn totals(panels: &[Panel]) -> (f64, f64) {
    let mut sorted: Vec<&Panel> = panels.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    (
        compensated_sum(sorted.iter().map(|p| p.value)),
        compensated_sum(sorted.iter().map(|p| p.error)),
    )
}

/// Integrates `f` over `[a, ∞)` through `x = a + scale · t / (1 − t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
    what: &'static str,
) -> Result<Integral> {
    integrate(
        |t| {
            let s = 1.0 - t;
            let x = a + scale * t / s;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (s * s)
            }
        },
        0.0,
        1.0,
        &[],
        tol,
        what,
    )
}
