//! Reproducing kernels of `H²_w`, the spike decomposition of the kernel
//! diagonal, and eigenvector-bundle curvatures.
//!
//! Curvatures use the positive convention `κ(z) = Δ ln ‖γ(z)‖²` with the
//! section `γ(z) = k_{z̄}`, so `‖γ(z)‖² = k_z(z)` and the unweighted space
//! gives `κ_{S*}(z) = (1 - |z|²)^-2`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{required_truncation, PowerTail, RadialPoint, RadialSeries, TailBound, Term};
use crate::weights::{LogWeights, SpikeSpec, WeightSequence};

/// Relative agreement demanded of the two curvature-difference routes.
pub const CURVATURE_TOL: f64 = 1e-6;

/// Rounding floor for the curvature-difference comparison, relative to
/// `κ_{S*}`. The direct route subtracts two curvatures of that size.
pub const CURVATURE_FLOOR: f64 = 1e-10;

/// Multiple of the kernel truncation tolerance added to the floor: `κ_T`
/// combines three truncated series, each accurate to `tol` relative.
pub const TRUNCATION_FLOOR_FACTOR: f64 = 4.0;

/// Number of radii on which the spike decomposition is checked.
pub const DECOMPOSITION_POINTS: usize = 200;

/// Truncated diagonal `k_z(z) = Σ s^n / w_n`.
#[derive(Clone, Debug)]
pub struct KernelDiagonal {
    series: RadialSeries,
    weights: WeightSequence,
}

impl KernelDiagonal {
    fn build(w: &WeightSequence, degree: u64) -> Self {
        let degree = degree.max(w.last_spiked_index());
        let terms = (0..=degree).map(|n| Term {
            power: n,
            coeff: (-w.ln_weight(n)).exp(),
        });
        let tail = TailBound::Bounded(vec![PowerTail {
            start: degree + 1,
            order: 0,
            scale: 1.0,
        }]);
        Self {
            series: RadialSeries::new(terms).with_tail(tail),
            weights: w.clone(),
        }
    }

    pub fn series(&self) -> &RadialSeries {
        &self.series
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn degree(&self) -> u64 {
        self.series.degree().unwrap_or(0)
    }

    pub fn eval_at(&self, p: &RadialPoint) -> f64 {
        self.series.eval_at(p)
    }

    /// `κ_T = Δ ln k_z(z)` from the truncated series.
    pub fn curvature_at(&self, p: &RadialPoint) -> f64 {
        self.series.jet_at(p).log_laplacian(p.s())
    }
}

/// `k_λ(z) = Σ λ̄ⁿ zⁿ / w_n`, truncated once the tail `|λz|^(M+1)/(1-|λz|)`
/// is below `tol` (valid because `w_n ≥ 1`).
pub fn kernel_eval(w: &WeightSequence, lambda: Complex64, z: Complex64, tol: f64) -> Result<Complex64> {
    for (name, v) in [("lambda", lambda), ("z", z)] {
        if v.norm() >= 1.0 {
            return Err(Error::Domain(format!("|{name}| = {} is not inside the disk", v.norm())));
        }
    }
    let step = lambda.conj() * z;
    let q = step.norm();
    let degree = if q == 0.0 {
        0
    } else {
        required_truncation(q.sqrt(), tol, 0)?.max(w.last_spiked_index())
    };
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=degree {
        sum += power * (-w.ln_weight(n)).exp();
        power *= step;
    }
    Ok(sum)
}

/// Kernel diagonal truncated so the value remainder at `r_max` is at most `tol`.
pub fn kernel_diagonal_series(w: &WeightSequence, r_max: f64, tol: f64) -> Result<KernelDiagonal> {
    let degree = required_truncation(r_max, tol, 0)?;
    Ok(KernelDiagonal::build(w, degree))
}

/// Kernel diagonal truncated for curvature work: the remainders of the value
/// and of the first two derivatives are each below `tol` times the
/// corresponding derivative of `1/(1-s)` at `r_max`.
pub fn kernel_diagonal_for_curvature(w: &WeightSequence, r_max: f64, tol: f64) -> Result<KernelDiagonal> {
    if !(0.0..1.0).contains(&r_max) {
        return Err(Error::Domain(format!("r_max = {r_max} must lie in [0, 1)")));
    }
    let gap = 1.0 - r_max * r_max;
    let mut degree = 0;
    for (order, scale) in [(0u32, 1.0 / gap), (1, 1.0 / (gap * gap)), (2, 2.0 / (gap * gap * gap))] {
        degree = degree.max(required_truncation(r_max, tol * scale, order)?);
    }
    Ok(KernelDiagonal::build(w, degree))
}

/// `c_j = (1+α)^(-2j) - 1`.
pub fn spike_coefficient(alpha: f64, j: u64) -> f64 {
    (-2.0 * j as f64 * alpha.ln_1p()).exp_m1()
}

/// The `ψ`-decomposition of one spike: pairs `(n, c)` with
/// `h = Σ c · s^n (1 - s)`, i.e. `n = N+j` for `j = 1..=k` and
/// `n = N+2k-j` for `j = 1..k`.
pub fn spike_components(alpha: f64, spike: SpikeSpec) -> Vec<(u64, f64)> {
    let (n0, k) = (spike.start, spike.half_width);
    let rising = (1..=k).map(|j| (n0 + j, spike_coefficient(alpha, j)));
    let falling = (1..k).map(|j| (n0 + 2 * k - j, spike_coefficient(alpha, j)));
    rising.chain(falling).collect()
}

/// `g_k(s) = s^N (Σ_{j=1}^{k} c_j s^j + Σ_{j=1}^{k-1} c_j s^(2k-j))`.
pub fn g_k_series(alpha: f64, spike: SpikeSpec) -> RadialSeries {
    RadialSeries::new(
        spike_components(alpha, spike)
            .into_iter()
            .map(|(power, coeff)| Term { power, coeff }),
    )
}

/// `h_k = g_k · (1 - s)`.
pub fn h_k_series(alpha: f64, spike: SpikeSpec) -> RadialSeries {
    g_k_series(alpha, spike).times_one_minus_s()
}

/// `Σ c · ψ_n` for a list of `(n, c)`.
pub fn psi_combination(components: &[(u64, f64)]) -> RadialSeries {
    components
        .iter()
        .map(|&(n, c)| RadialSeries::psi(n).scale(c))
        .sum()
}

/// `f = k²_z(z) / k¹_z(z) = 1 + Σ_k h_k`, in closed form.
pub fn f_series(w: &WeightSequence) -> RadialSeries {
    let correction: RadialSeries = w.spikes().iter().map(|&s| h_k_series(w.alpha(), s)).sum();
    &RadialSeries::constant(1.0) + &correction
}

/// [`f_series`] after checking it against `(1 - s)·k²_z(z)` built from the
/// raw weights, at [`DECOMPOSITION_POINTS`] radii in `[0, r_max]`, to
/// relative `tol`. A mismatch means the spike coefficients and the weights
/// disagree.
pub fn checked_f_series(w: &WeightSequence, r_max: f64, tol: f64) -> Result<RadialSeries> {
    let f = f_series(w);
    let kernel = kernel_diagonal_series(w, r_max, 0.1 * tol)?;
    for i in 0..DECOMPOSITION_POINTS {
        let r = r_max * i as f64 / (DECOMPOSITION_POINTS - 1) as f64;
        let p = RadialPoint::from_radius(r);
        let lhs = p.one_minus_s() * kernel.eval_at(&p);
        let rhs = f.eval_at(&p);
        if (lhs - rhs).abs() > tol * rhs.abs() {
            return Err(Error::Inconsistent {
                what: "(1 - s)·kernel diagonal and 1 + Σ h_k",
                r,
                left: lhs,
                right: rhs,
            });
        }
    }
    Ok(f)
}

/// `κ_{S*}(r) = (1 - r²)^-2`.
pub fn curvature_backward_shift(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} must lie in [0, 1)")));
    }
    Ok(backward_shift_curvature_at(&RadialPoint::from_radius(r)))
}

pub(crate) fn backward_shift_curvature_at(p: &RadialPoint) -> f64 {
    p.one_minus_s().powi(-2)
}

/// `κ_T(r) = Δ ln k²_z(z)` from the raw weights.
pub fn curvature_weighted(w: &WeightSequence, r: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} must lie in [0, 1)")));
    }
    let kernel = kernel_diagonal_for_curvature(w, r, tol)?;
    Ok(kernel.curvature_at(&RadialPoint::from_radius(r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub r: f64,
    pub kappa_s: f64,
    pub kappa_t: f64,
    /// `κ_{S*} - κ_T`.
    pub difference: f64,
}

impl CurvatureSample {
    /// `(κ_{S*} - κ_T)(1 - r)²`.
    pub fn weighted_difference(&self) -> f64 {
        self.difference * (1.0 - self.r).powi(2)
    }
}

/// Curvature samples at each radius, sharing one kernel truncation.
pub fn curvature_samples(w: &WeightSequence, radii: &[f64], tol: f64) -> Result<Vec<CurvatureSample>> {
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    if let Some(&bad) = radii.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::Domain(format!("r = {bad} must lie in [0, 1)")));
    }
    let kernel = kernel_diagonal_for_curvature(w, r_max, tol)?;
    Ok(radii
        .iter()
        .map(|&r| {
            let p = RadialPoint::from_radius(r);
            let kappa_s = backward_shift_curvature_at(&p);
            let kappa_t = kernel.curvature_at(&p);
            CurvatureSample {
                r,
                kappa_s,
                kappa_t,
                difference: kappa_s - kappa_t,
            }
        })
        .collect())
}

/// `κ_{S*} - κ_T` computed from the quotient `f` and from the two curvatures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureDifference {
    pub r: f64,
    /// `-Δ ln f = -(f Δf - |∂f|²) / f²`.
    pub via_quotient: f64,
    /// `κ_{S*} - κ_T` with `κ_T` from the raw kernel series.
    pub via_curvatures: f64,
    pub kappa_s: f64,
    /// Absolute slack of the comparison:
    /// `(CURVATURE_FLOOR + TRUNCATION_FLOOR_FACTOR·tol)·κ_{S*}`.
    pub floor: f64,
}

impl CurvatureDifference {
    pub fn agrees(&self, tol: f64) -> bool {
        let scale = self.via_quotient.abs().max(self.via_curvatures.abs());
        (self.via_quotient - self.via_curvatures).abs() <= tol * scale + self.floor
    }
}

/// Both routes to `κ_{S*} - κ_T` at each radius. Disagreement beyond
/// `CURVATURE_TOL` (plus the rounding floor) is an error.
pub fn curvature_differences(w: &WeightSequence, radii: &[f64], tol: f64) -> Result<Vec<CurvatureDifference>> {
    let f = f_series(w);
    let samples = curvature_samples(w, radii, tol)?;
    samples
        .into_iter()
        .map(|sample| {
            let p = RadialPoint::from_radius(sample.r);
            let diff = CurvatureDifference {
                r: sample.r,
                via_quotient: -f.jet_at(&p).log_laplacian(p.s()),
                via_curvatures: sample.difference,
                kappa_s: sample.kappa_s,
                floor: (CURVATURE_FLOOR + TRUNCATION_FLOOR_FACTOR * tol) * sample.kappa_s,
            };
            if diff.agrees(CURVATURE_TOL) {
                Ok(diff)
            } else {
                Err(Error::Inconsistent {
                    what: "curvature difference routes",
                    r: sample.r,
                    left: diff.via_quotient,
                    right: diff.via_curvatures,
                })
            }
        })
        .collect()
}

pub fn curvature_difference(w: &WeightSequence, r: f64, tol: f64) -> Result<CurvatureDifference> {
    Ok(curvature_differences(w, &[r], tol)?[0])
}

/// Normalized five-point Laplacian
/// `(F(z+h) + F(z-h) + F(z+ih) + F(z-ih) - 4F(z)) / (4h²)`.
pub fn fd_laplacian_oracle<F>(field: F, z: Complex64, h: f64) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    if z.norm() + h >= 1.0 {
        return Err(Error::StencilOutsideDisk {
            radius: z.norm(),
            step: h,
        });
    }
    let i = Complex64::i();
    let around = field(z + h) + field(z - h) + field(z + i * h) + field(z - i * h);
    Ok((around - 4.0 * field(z)) / (4.0 * h * h))
}
