//! The backward shift `T` on `H²_w` and its adjoint, acting on finite
//! Taylor-coefficient vectors.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::LogWeights;

/// Relative slack on the coisometry bounds.
const RATIO_SLACK: f64 = 1e-12;

/// Coefficients `a_0..a_M` of a polynomial `Σ a_n z^n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientVector {
    pub coeffs: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The basis vector `e_n = z^n`.
    pub fn basis(n: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `a_n`, zero past the end.
    pub fn get(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }
}

/// `(Tx)_n = (w_{n+1}/w_n) a_{n+1}`.
pub fn apply_t(w: &impl LogWeights, x: &CoefficientVector) -> CoefficientVector {
    let coeffs = x
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, &a)| {
            let n = m as u64 - 1;
            a * (w.ln_weight(n + 1) - w.ln_weight(n)).exp()
        })
        .collect();
    CoefficientVector { coeffs }
}

/// `T*` is the forward shift `f ↦ zf`.
pub fn apply_t_star(x: &CoefficientVector) -> CoefficientVector {
    let mut coeffs = Vec::with_capacity(x.len() + 1);
    coeffs.push(Complex64::new(0.0, 0.0));
    coeffs.extend_from_slice(&x.coeffs);
    CoefficientVector { coeffs }
}

/// `sqrt(Σ_n exp(l_n))` for log-terms `l_n`, without overflow.
fn sqrt_sum_exp(logs: impl Iterator<Item = f64>) -> f64 {
    let logs: Vec<f64> = logs.filter(|l| l.is_finite()).collect();
    let Some(top) = logs.iter().copied().reduce(f64::max) else {
        return 0.0;
    };
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    (0.5 * (top + sum.ln())).exp()
}

/// `‖x‖_w = (Σ |a_n|² w_n)^{1/2}`.
pub fn norm_w(w: &impl LogWeights, x: &CoefficientVector) -> f64 {
    sqrt_sum_exp(
        x.coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| 2.0 * a.norm().ln() + w.ln_weight(n as u64)),
    )
}

/// `⟨x, y⟩_w = Σ a_n conj(b_n) w_n`.
pub fn inner_w(w: &impl LogWeights, x: &CoefficientVector, y: &CoefficientVector) -> Complex64 {
    x.coeffs
        .iter()
        .zip(&y.coeffs)
        .enumerate()
        .map(|(n, (a, b))| a * b.conj() * w.weight(n as u64))
        .sum()
}

/// `(‖T*^n x‖_w)_{n = 0..=n_max}`, i.e. `(Σ_j |a_j|² w_{j+n})^{1/2}`.
pub fn orbit_norms(w: &impl LogWeights, x: &CoefficientVector, n_max: u64) -> Vec<f64> {
    let logs: Vec<(u64, f64)> = x
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(j, a)| (j as u64, 2.0 * a.norm().ln()))
        .collect();
    (0..=n_max)
        .map(|n| sqrt_sum_exp(logs.iter().map(|&(j, l)| l + w.ln_weight(j + n))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoisometryReport {
    pub trials: usize,
    pub support: usize,
    pub seed: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `(1+α)^-1`, the lower bound implied by the slope condition.
    pub sharp_lower: f64,
    /// `1 - α`.
    pub linear_lower: f64,
    /// `1 + α`.
    pub upper: f64,
    pub sharp_pass: bool,
    pub linear_pass: bool,
}

/// Extremes of `‖T*x‖_w / ‖x‖_w` over `trials` random vectors with
/// coefficients uniform in `[0,1) + i[0,1)`, supported on `0..support`.
pub fn coisometry_check(
    w: &impl LogWeights,
    alpha: f64,
    trials: usize,
    support: usize,
    seed: u64,
) -> Result<CoisometryReport> {
    if trials == 0 || support == 0 {
        return Err(Error::Domain("trials and support must be positive".into()));
    }
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let x = CoefficientVector::new(
            (0..support)
                .map(|_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()))
                .collect(),
        );
        let ratio = norm_w(w, &apply_t_star(&x)) / norm_w(w, &x);
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    let upper = 1.0 + alpha;
    let sharp_lower = upper.recip();
    let linear_lower = 1.0 - alpha;
    let below = max_ratio <= upper * (1.0 + RATIO_SLACK);
    Ok(CoisometryReport {
        trials,
        support,
        seed,
        min_ratio,
        max_ratio,
        sharp_lower,
        linear_lower,
        upper,
        sharp_pass: below && min_ratio >= sharp_lower * (1.0 - RATIO_SLACK),
        linear_pass: below && min_ratio >= linear_lower - RATIO_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_spiked_weights, WeightSequence};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn t_kills_constants_and_shifts_back() {
        let w = WeightSequence::unweighted();
        assert!(apply_t(&w, &CoefficientVector::basis(0)).coeffs.iter().all(|a| a.norm() == 0.0));
        let x = CoefficientVector::from_real(&[1.0, 2.0, 3.0]);
        assert_eq!(apply_t(&w, &x), CoefficientVector::from_real(&[2.0, 3.0]));
    }

    #[test]
    fn t_star_of_e0() {
        let w = build_spiked_weights(1.0, &[0]).unwrap();
        let e1 = apply_t_star(&CoefficientVector::basis(0));
        assert_eq!(e1, CoefficientVector::basis(1));
        assert_relative_eq!(norm_w(&w, &e1).powi(2), w.weight(1), max_relative = 1e-15);
    }

    #[test]
    fn norm_examples() {
        let w = build_spiked_weights(1.0, &[5]).unwrap();
        assert_eq!(norm_w(&w, &CoefficientVector::basis(0)), 1.0);
        assert_relative_eq!(norm_w(&w, &CoefficientVector::basis(6)), 2.0, max_relative = 1e-15);
        let x = CoefficientVector::new(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        assert_relative_eq!(norm_w(&WeightSequence::unweighted(), &x), 5.0, max_relative = 1e-15);
        assert_eq!(norm_w(&w, &CoefficientVector::default()), 0.0);
    }

    #[test]
    fn kernel_is_eigenvector_up_to_truncation() {
        let w = build_spiked_weights(0.5, &[3, 10]).unwrap();
        let lambda = c(0.3, -0.4);
        let m = 40;
        let k = CoefficientVector::new((0..m).map(|n| lambda.conj().powu(n as u32) / w.weight(n)).collect());
        let tk = apply_t(&w, &k);
        for n in 0..m as usize - 1 {
            let expected = lambda.conj() * k.coeffs[n];
            assert!((tk.coeffs[n] - expected).norm() <= 1e-14 * expected.norm().max(1e-300));
        }
    }

    #[test]
    fn rising_edge_is_extreme() {
        let w = build_spiked_weights(1.0, &[5]).unwrap();
        let x = CoefficientVector::basis(5);
        assert_relative_eq!(norm_w(&w, &apply_t_star(&x)) / norm_w(&w, &x), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn unweighted_coisometry() {
        let rep = coisometry_check(&WeightSequence::unweighted(), 0.5, 20, 12, 0).unwrap();
        assert_relative_eq!(rep.min_ratio, 1.0, max_relative = 1e-14);
        assert_relative_eq!(rep.max_ratio, 1.0, max_relative = 1e-14);
        assert!(rep.sharp_pass && rep.linear_pass);
    }

    #[test]
    fn seeded_check_is_reproducible() {
        let w = build_spiked_weights(0.5, &[2, 8]).unwrap();
        let a = coisometry_check(&w, 0.5, 30, 20, 7).unwrap();
        let b = coisometry_check(&w, 0.5, 30, 20, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.sharp_pass);
    }

    #[test]
    fn orbit_of_e0_is_sqrt_weights() {
        let w = build_spiked_weights(1.0, &[2, 6]).unwrap();
        let orbit = orbit_norms(&w, &CoefficientVector::basis(0), 14);
        for (n, v) in orbit.iter().enumerate() {
            assert_relative_eq!(*v, w.weight(n as u64).sqrt(), max_relative = 1e-15);
        }
        assert_relative_eq!(orbit[3], 2.0, max_relative = 1e-15);
        assert_relative_eq!(orbit[8], 4.0, max_relative = 1e-15);
    }
}
