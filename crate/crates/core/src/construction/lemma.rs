//! Decay estimates for the elementary bump `ψ_N = |z|^{2N}(1 - |z|²)`.
//!
//! With `s = r²` and `u = 1 - r`:
//!
//! ```text
//! ψ_N      = s^N (1 - s)
//! Δψ_N     = N² s^{N-1} - (N+1)² s^N        = s^{N-1} ((N+1)²(1-s) - (2N+1))
//! |∂ψ_N|²  = s^{2N-1} (N - (N+1) s)²        = s^{2N-1} ((N+1)(1-s) - 1)²
//! ```
//!
//! The right-hand forms keep the factor that vanishes near the circle
//! explicit, which is what lets these be evaluated at depths down to
//! `2^-50` without cancellation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::carleson::{carleson_norm_dyadic, edge_integral, EdgeTerm, RadialDensity};
use crate::error::Result;
use crate::grid::{supremum, BoundaryGrid, Supremum};
use crate::series::RadialPoint;

pub fn psi_value(n: u64, p: &RadialPoint) -> f64 {
    p.s_pow(n) * p.one_minus_s()
}

pub fn psi_laplacian(n: u64, p: &RadialPoint) -> f64 {
    let nf = n as f64;
    p.s_pow(n - 1) * ((nf + 1.0).powi(2) * p.one_minus_s() - (2.0 * nf + 1.0))
}

pub fn psi_grad_sq(n: u64, p: &RadialPoint) -> f64 {
    let nf = n as f64;
    p.s_pow(2 * n - 1) * ((nf + 1.0) * p.one_minus_s() - 1.0).powi(2)
}

/// Location and value of `max ψ_N`: `r = √(N/(N+1))`, `(N/(N+1))^N / (N+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiMax {
    pub r_star: f64,
    pub value: f64,
}

pub fn psi_max(n: u64) -> PsiMax {
    let nf = n as f64;
    PsiMax {
        r_star: (nf / (nf + 1.0)).sqrt(),
        value: (-nf * (1.0 / nf).ln_1p()).exp() / (nf + 1.0),
    }
}

/// `max_r n^k r^{kn} (1 - r)`, attained at `r = kn/(kn+1)`.
pub fn power_bump_max(n: f64, k: f64) -> (f64, f64) {
    let kn = k * n;
    let r = kn / (kn + 1.0);
    (r, (-kn * (1.0 / kn).ln_1p()).exp() * n.powf(k) / (kn + 1.0))
}

/// Pointwise majorant of `|Δψ_N|(1-r)²`:
/// `2(N+1)² r^{2N-2}(1-r)³ + (2N+1) r^{2N-2}(1-r)²`.
pub fn laplacian_majorant(n: u64, p: &RadialPoint) -> f64 {
    let nf = n as f64;
    let base = p.s_pow(n - 1);
    let u = p.depth();
    2.0 * (nf + 1.0).powi(2) * base * u.powi(3) + (2.0 * nf + 1.0) * base * u * u
}

/// Maxima of the two terms majorizing `|∂ψ_N|(1-r)`:
/// `2(N+1) r^{2N-1}(1-r)²` and `r^{2N-1}(1-r)`.
pub fn gradient_majorant_maxima(n: u64) -> (f64, f64) {
    let nf = n as f64;
    let m = 2.0 * nf - 1.0;
    let quad = 2.0 * (nf + 1.0) * (m * (-2.0 / (2.0 * nf + 1.0)).ln_1p()).exp() * (2.0 / (2.0 * nf + 1.0)).powi(2);
    let lin = (m * (-1.0 / (2.0 * nf)).ln_1p()).exp() / (2.0 * nf);
    (quad, lin)
}

/// `2π [2(N+1)² ∫r^{2N-1}(1-r)² + (2N+1) ∫r^{2N-1}(1-r)]`, the full-disk
/// bound on the Carleson norm of `|Δψ_N|(1-r) dxdy`.
pub fn laplacian_carleson_bound(n: u64) -> f64 {
    let nf = n as f64;
    2.0 * PI * (2.0 * (nf + 1.0).powi(2) * edge_integral(2 * n - 1, 2) + (2.0 * nf + 1.0) * edge_integral(2 * n - 1, 1))
}

/// `2π [8(N+1)² ∫r^{4N-1}(1-r)³ + 2 ∫r^{4N-1}(1-r)]`, the full-disk bound
/// on the Carleson norm of `|∂ψ_N|²(1-r) dxdy`.
pub fn gradient_carleson_bound(n: u64) -> f64 {
    let nf = n as f64;
    2.0 * PI * (8.0 * (nf + 1.0).powi(2) * edge_integral(4 * n - 1, 3) + 2.0 * edge_integral(4 * n - 1, 1))
}

/// `|Δψ_N|(1-r)` in the `r^m (1-r)^p` basis, sign change at `1-r = 1/(N+1)`.
pub fn laplacian_density(n: u64) -> RadialDensity {
    let a = n as f64 + 1.0;
    let m = 2 * n - 2;
    RadialDensity::edge_polynomial(
        vec![
            EdgeTerm::new(-(2.0 * n as f64 + 1.0), m, 1),
            EdgeTerm::new(2.0 * a * a, m, 2),
            EdgeTerm::new(-a * a, m, 3),
        ],
        vec![1.0 / a],
    )
}

/// `|∂ψ_N|²(1-r)`; the square `((N+1)(2u - u²) - 1)²` is expanded in `u`.
pub fn gradient_density(n: u64) -> RadialDensity {
    let a = n as f64 + 1.0;
    let m = 4 * n - 2;
    RadialDensity::edge_polynomial(
        vec![
            EdgeTerm::new(1.0, m, 1),
            EdgeTerm::new(-4.0 * a, m, 2),
            EdgeTerm::new(4.0 * a * a + 2.0 * a, m, 3),
            EdgeTerm::new(-4.0 * a * a, m, 4),
            EdgeTerm::new(a * a, m, 5),
        ],
        Vec::new(),
    )
}

/// The five quantities that the lemma drives to zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    #[serde(rename = "N")]
    pub n: u64,
    /// `sup ψ_N`
    pub sup_psi: f64,
    /// `sup |Δψ_N|(1-r)²`
    pub sup_lap_weighted: f64,
    /// `sup |∂ψ_N|²(1-r)²`
    pub sup_grad_weighted: f64,
    /// Carleson norm of `|Δψ_N|(1-r) dxdy`
    pub carl_lap: f64,
    /// Carleson norm of `|∂ψ_N|²(1-r) dxdy`
    pub carl_grad: f64,
}

impl LemmaReport {
    pub fn fields(&self) -> [f64; 5] {
        [
            self.sup_psi,
            self.sup_lap_weighted,
            self.sup_grad_weighted,
            self.carl_lap,
            self.carl_grad,
        ]
    }
}

/// Boundary grid plus the critical radii that show up in the estimates.
pub fn lemma_grid(n: u64) -> BoundaryGrid {
    let nf = n as f64;
    let mut radii = vec![psi_max(n).r_star, nf / (nf + 1.0)];
    if n > 1 {
        radii.push(power_bump_max(nf - 1.0, 2.0 / 3.0).0);
        radii.push(power_bump_max(2.0 * (nf - 1.0), 0.5).0);
    }
    radii.push((2.0 * nf - 1.0) / (2.0 * nf + 1.0));
    radii.push((2.0 * nf - 1.0) / (2.0 * nf));
    BoundaryGrid::default().with_radii(radii)
}

pub fn sup_psi(n: u64, grid: &BoundaryGrid) -> Supremum {
    supremum(grid, |p| psi_value(n, p))
}

pub fn lemma_bounds(n: u64) -> Result<LemmaReport> {
    assert!(n >= 1, "ψ_N needs N ≥ 1");
    let grid = lemma_grid(n);
    Ok(LemmaReport {
        n,
        sup_psi: sup_psi(n, &grid).value,
        sup_lap_weighted: supremum(&grid, |p| psi_laplacian(n, p).abs() * p.depth().powi(2)).value,
        sup_grad_weighted: supremum(&grid, |p| psi_grad_sq(n, p) * p.depth().powi(2)).value,
        carl_lap: carleson_norm_dyadic(&laplacian_density(n))?.value,
        carl_grad: carleson_norm_dyadic(&gradient_density(n))?.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Quadrature;
    use crate::series::RadialSeries;
    use approx::assert_relative_eq;

    #[test]
    fn psi_max_values() {
        let m = psi_max(1);
        assert_relative_eq!(m.r_star, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m.value, 0.25, max_relative = 1e-15);
        assert_relative_eq!(psi_max(10).value, (10.0f64 / 11.0).powi(10) / 11.0, max_relative = 1e-13);
        assert_relative_eq!(psi_max(10).value, 0.035_049, max_relative = 1e-4);
        let asymptotic = 1.0 / (std::f64::consts::E * 1001.0);
        assert!((psi_max(1000).value / asymptotic - 1.0).abs() < 0.05);
    }

    #[test]
    fn closed_forms_match_series_calculus() {
        for n in [1u64, 4, 17, 120] {
            let psi = RadialSeries::psi(n);
            let lap = psi.radial_laplacian();
            let grad = psi.grad_magnitude_sq();
            for r in [0.1, 0.5, 0.8, 0.97] {
                let p = RadialPoint::from_radius(r);
                let tol = 1e-11;
                assert!((psi_value(n, &p) - psi.eval_at(&p)).abs() <= tol * psi.eval_at(&p).abs().max(1e-300));
                let scale = (n as f64 + 1.0).powi(2) * p.s_pow(n - 1);
                assert!((psi_laplacian(n, &p) - lap.eval_at(&p)).abs() <= tol * scale);
                let gscale = (n as f64 + 1.0).powi(2) * p.s_pow(2 * n - 1);
                assert!((psi_grad_sq(n, &p) - grad.eval_at(&p)).abs() <= tol * gscale);
            }
        }
    }

    #[test]
    fn densities_match_direct_evaluation() {
        let n = 37;
        let lap = laplacian_density(n);
        let grad = gradient_density(n);
        for u in [0.9, 0.3, 0.05, 1e-3, 1e-6] {
            let p = RadialPoint::from_depth(u);
            assert_relative_eq!(lap.eval(&p), psi_laplacian(n, &p).abs() * u, max_relative = 1e-8);
            assert_relative_eq!(grad.eval(&p), psi_grad_sq(n, &p) * u, max_relative = 1e-8, epsilon = 1e-300);
        }
    }

    #[test]
    fn exact_carleson_integrals_match_quadrature() {
        let q = Quadrature::with_rel_tol(1e-12);
        for n in [1u64, 8, 300, 20_000] {
            for dens in [laplacian_density(n), gradient_density(n)] {
                let exact = dens.window_integral(1.0).unwrap();
                let numeric = dens.window_integral_quadrature(1.0, &q).unwrap();
                assert_relative_eq!(exact, numeric, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn n_equals_one_laplacian_norm() {
        // 2π ∫_0^1 |1 - 4r²| r (1 - r) dr, split at r = 1/2
        let rep = lemma_bounds(1).unwrap();
        let inner = (0.5f64.powi(2) / 2.0 - 0.5f64.powi(3) / 3.0) - 4.0 * (0.5f64.powi(4) / 4.0 - 0.5f64.powi(5) / 5.0);
        let total = 4.0 * edge_integral(3, 1) - edge_integral(1, 1);
        let outer = total + inner;
        let expected = 2.0 * PI * (inner + outer);
        assert_relative_eq!(rep.carl_lap, expected, max_relative = 1e-12);
        assert_relative_eq!(rep.sup_psi, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn majorants_dominate() {
        for n in [1u64, 5, 60, 4000] {
            let grid = lemma_grid(n);
            for p in grid.points() {
                let lhs = psi_laplacian(n, p).abs() * p.depth().powi(2);
                assert!(lhs <= laplacian_majorant(n, p) * (1.0 + 1e-12) + 1e-300);
            }
            let rep = lemma_bounds(n).unwrap();
            let (a, b) = gradient_majorant_maxima(n);
            assert!(rep.sup_grad_weighted.sqrt() <= a + b);
            assert!(rep.carl_lap <= laplacian_carleson_bound(n));
            assert!(rep.carl_grad <= gradient_carleson_bound(n));
        }
    }

    #[test]
    fn power_bump_maximum() {
        let (n, k) = (40.0, 2.0 / 3.0);
        let (r_star, v) = power_bump_max(n, k);
        let f = |r: f64| n.powf(k) * r.powf(k * n) * (1.0 - r);
        assert_relative_eq!(f(r_star), v, max_relative = 1e-12);
        assert!(f(r_star + 1e-4) < v && f(r_star - 1e-4) < v);
    }
}
