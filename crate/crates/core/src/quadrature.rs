//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// `∫_a^b f`, bisecting the interval with the largest error estimate
    /// until the total estimate meets `max(abs_tol, rel_tol·|value|)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        if a == b {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
            });
        }
        let first = kronrod(&f, a, b);
        let (mut value, mut error) = (first.value, first.error);
        let mut heap = BinaryHeap::from([first]);
        while error > self.abs_tol.max(self.rel_tol * value.abs()) {
            if heap.len() >= self.max_intervals {
                return Err(Error::Quadrature {
                    a,
                    b,
                    estimate: error,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            let left = kronrod(&f, worst.a, mid);
            let right = kronrod(&f, mid, worst.b);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            // resum occasionally to keep the running totals honest
            if heap.len() % 64 == 0 {
                value = heap.iter().map(|p| p.value).sum();
                error = heap.iter().map(|p| p.error).sum();
            }
        }
        Ok(Integral { value, error })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0).unwrap();
        assert_relative_eq!(v.value, 64.0 / 6.0 - 8.0, max_relative = 1e-14);
    }

    #[test]
    fn smooth_transcendental() {
        let q = Quadrature::with_rel_tol(1e-13);
        let v = q.integrate(f64::sin, 0.0, std::f64::consts::PI).unwrap();
        assert_relative_eq!(v.value, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn sharp_peak_near_endpoint() {
        // ∫_0^1 exp(-1e4 u) du
        let q = Quadrature::with_rel_tol(1e-12);
        let v = q.integrate(|u| (-1e4 * u).exp(), 0.0, 1.0).unwrap();
        assert_relative_eq!(v.value, (1.0 - (-1e4f64).exp()) / 1e4, max_relative = 1e-11);
    }

    #[test]
    fn kink_from_absolute_value() {
        let q = Quadrature::with_rel_tol(1e-10);
        let v = q.integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0).unwrap();
        assert_relative_eq!(v.value, 0.045 + 0.245, max_relative = 1e-10);
    }
}
