//! Carleson windows and norms for radial densities.
//!
//! A window over an arc `I` with `t = |I|/2π` is
//! `Q_I = {z : z/|z| ∈ I, 1 - |z| ≤ t}`. For a density `ρ(|z|)` against area
//! measure the angular integral factors out:
//!
//! ```text
//! μ(Q_I) = |I| · ∫_{1-t}^{1} ρ(r) r dr
//! μ(Q_I) / (|I|/2π) = 2π · ∫_{1-t}^{1} ρ(r) r dr
//! ```
//!
//! The Carleson norm is the supremum of the second line over windows. Since
//! `ρ ≥ 0` it is nondecreasing in `t`, so for radial densities the full-disk
//! window `t = 1` (the sector `S_I` with `I = T`) realizes it; the dyadic
//! sweep still computes every window so the monotonicity is observed rather
//! than assumed.
//!
//! Integrals run in the depth variable `u = 1 - r`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::series::RadialPoint;

/// Dyadic windows `t = 2^-j` for `j = 0..=DYADIC_LEVELS`.
pub const DYADIC_LEVELS: u32 = 40;

/// Pieces per window when a density is integrated numerically: depths
/// `[t 2^-(j+1), t 2^-j]` for `j < QUAD_PIECES`, then `[0, t 2^-QUAD_PIECES]`.
const QUAD_PIECES: i32 = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarlesonWindow {
    arc_fraction: f64,
}

impl CarlesonWindow {
    pub fn new(arc_fraction: f64) -> Result<Self> {
        if arc_fraction > 0.0 && arc_fraction <= 1.0 {
            Ok(Self { arc_fraction })
        } else {
            Err(Error::Domain(format!(
                "arc fraction {arc_fraction} must lie in (0, 1]"
            )))
        }
    }

    /// `t = |I| / 2π`, also the window's depth.
    pub fn arc_fraction(&self) -> f64 {
        self.arc_fraction
    }

    pub fn arc_length(&self) -> f64 {
        2.0 * PI * self.arc_fraction
    }

    pub fn inner_radius(&self) -> f64 {
        1.0 - self.arc_fraction
    }
}

/// `coeff · r^power · (1 - r)^depth_power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTerm {
    pub coeff: f64,
    pub power: u64,
    pub depth_power: u32,
}

impl EdgeTerm {
    pub fn new(coeff: f64, power: u64, depth_power: u32) -> Self {
        Self {
            coeff,
            power,
            depth_power,
        }
    }

    fn eval(&self, p: &RadialPoint) -> f64 {
        let rp = if self.power == 0 {
            1.0
        } else {
            (self.power as f64 * (-p.depth()).ln_1p()).exp()
        };
        self.coeff * rp * p.depth().powi(self.depth_power as i32)
    }

    /// `∫` of the term times `r` over depths `[0, depth]`.
    fn area_integral_to(&self, depth: f64) -> f64 {
        self.coeff * upper_edge_integral(self.power + 1, self.depth_power, depth)
    }
}

/// Tolerances for [`RadialDensity::Function`] windows. The absolute floor
/// stops refinement in the deepest dyadic pieces, where the integrand is
/// negligible and only rounding noise is left.
pub const FUNCTION_QUADRATURE: Quadrature = Quadrature {
    abs_tol: 1e-15,
    rel_tol: 1e-9,
    max_intervals: 2000,
};

type DensityFn = Arc<dyn Fn(&RadialPoint) -> f64 + Send + Sync>;

/// A nonnegative radial density `ρ(r)` against area measure.
#[derive(Clone)]
pub enum RadialDensity {
    /// `|Σ terms|`, with every depth in `(0, 1)` where the sum changes sign.
    EdgePolynomial {
        terms: Vec<EdgeTerm>,
        sign_changes: Vec<f64>,
    },
    /// Arbitrary nonnegative function, integrated numerically.
    Function(DensityFn),
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EdgePolynomial {
                terms,
                sign_changes,
            } => f
                .debug_struct("EdgePolynomial")
                .field("terms", terms)
                .field("sign_changes", sign_changes)
                .finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl RadialDensity {
    pub fn constant(c: f64) -> Self {
        Self::edge_polynomial(vec![EdgeTerm::new(c, 0, 0)], Vec::new())
    }

    pub fn edge_polynomial(terms: Vec<EdgeTerm>, mut sign_changes: Vec<f64>) -> Self {
        sign_changes.retain(|d| *d > 0.0 && *d < 1.0);
        sign_changes.sort_by(f64::total_cmp);
        Self::EdgePolynomial {
            terms,
            sign_changes,
        }
    }

    pub fn from_fn(f: impl Fn(&RadialPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn eval(&self, p: &RadialPoint) -> f64 {
        match self {
            Self::EdgePolynomial { terms, .. } => terms.iter().map(|t| t.eval(p)).sum::<f64>().abs(),
            Self::Function(f) => f(p),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let c = c.abs();
        match self {
            Self::EdgePolynomial {
                terms,
                sign_changes,
            } => Self::EdgePolynomial {
                terms: terms
                    .iter()
                    .map(|t| EdgeTerm {
                        coeff: t.coeff * c,
                        ..*t
                    })
                    .collect(),
                sign_changes: sign_changes.clone(),
            },
            Self::Function(f) => {
                let f = Arc::clone(f);
                Self::from_fn(move |p| c * f(p))
            }
        }
    }

    /// `∫_{1-t}^{1} ρ(r) r dr`.
    pub fn window_integral(&self, t: f64) -> Result<f64> {
        match self {
            Self::EdgePolynomial {
                terms,
                sign_changes,
            } => {
                let mut cuts = vec![0.0];
                cuts.extend(sign_changes.iter().copied().filter(|&d| d < t));
                cuts.push(t);
                let signed = |depth: f64| terms.iter().map(|term| term.area_integral_to(depth)).sum::<f64>();
                let mut prev = 0.0;
                let mut total = 0.0;
                for &d in &cuts[1..] {
                    let cur = signed(d);
                    total += (cur - prev).abs();
                    prev = cur;
                }
                Ok(total)
            }
            Self::Function(_) => self.window_integral_quadrature(t, &FUNCTION_QUADRATURE),
        }
    }

    /// The same integral by adaptive quadrature on dyadic depth pieces,
    /// whatever the representation.
    pub fn window_integral_quadrature(&self, t: f64, quad: &Quadrature) -> Result<f64> {
        let integrand = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let p = RadialPoint::from_depth(u);
            self.eval(&p) * p.r()
        };
        let mut total = 0.0;
        let mut hi = t;
        for _ in 0..QUAD_PIECES {
            let lo = 0.5 * hi;
            total += quad.integrate(integrand, lo, hi)?.value;
            hi = lo;
        }
        total += quad.integrate(integrand, 0.0, hi)?.value;
        Ok(total)
    }
}

/// `∫_0^1 r^m (1 - r)^p dr = p! / ((m+1)(m+2)…(m+p+1))`.
pub fn edge_integral(m: u64, p: u32) -> f64 {
    let m = m as f64;
    (1..=p).fold(1.0 / (m + 1.0), |acc, i| acc * i as f64 / (m + i as f64 + 1.0))
}

/// `∫_0^a r^m (1 - r)^p dr`, integrating by parts in `r` down to `p = 0`.
/// All `p + 1` terms are nonnegative.
pub fn lower_edge_integral(m: u64, p: u32, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if a >= 1.0 {
        return edge_integral(m, p);
    }
    let (ln_a, b) = (a.ln(), 1.0 - a);
    let mut acc = 0.0;
    let mut coef = 1.0;
    let mut mm = m as f64;
    for pp in (0..=p).rev() {
        acc += coef * ((mm + 1.0) * ln_a).exp() * b.powi(pp as i32) / (mm + 1.0);
        coef *= pp as f64 / (mm + 1.0);
        mm += 1.0;
    }
    acc
}

/// `∫_{1-u}^{1} r^m (1 - r)^p dr = ∫_0^u (1 - v)^m v^p dv`.
///
/// For `m u ≤ p + 1` this integrates by parts in `v`, which gives a sum of
/// nonnegative terms `(1-u)^(m-i) u^(p+1+i) m!/(m-i)! p!/(p+1+i)!` that
/// decays quickly. Otherwise the window holds a fixed share of the mass and
/// the complement of [`lower_edge_integral`] loses nothing.
pub fn upper_edge_integral(m: u64, p: u32, depth: f64) -> f64 {
    if depth >= 1.0 {
        return edge_integral(m, p);
    }
    if depth <= 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    if mf * depth > (p + 1) as f64 {
        return edge_integral(m, p) - lower_edge_integral(m, p, 1.0 - depth);
    }
    let ln_b = (-depth).ln_1p();
    let mut term = (mf * ln_b).exp() * depth.powi(p as i32 + 1) / (p + 1) as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        acc += term;
        let ratio = (mf - i as f64) * depth / ((p as f64 + 2.0 + i as f64) * (1.0 - depth));
        term *= ratio;
        if term <= f64::EPSILON * 1e-3 * acc && ratio < 0.5 {
            break;
        }
    }
    acc
}

/// `μ(Q_I)` for a window of depth `t` over an arc of length `arc_len`.
pub fn window_measure(density: &RadialDensity, t: f64, arc_len: f64) -> Result<f64> {
    CarlesonWindow::new(t)?;
    if arc_len.is_nan() || arc_len <= 0.0 {
        return Err(Error::Domain(format!("arc length {arc_len} must be positive")));
    }
    Ok(arc_len * density.window_integral(t)?)
}

/// `μ(Q_I) / (|I|/2π)` for the window with `|I| = 2πt`.
pub fn carleson_ratio(density: &RadialDensity, window: CarlesonWindow) -> Result<f64> {
    Ok(2.0 * PI * density.window_integral(window.arc_fraction())?)
}

/// `[1, 1/2, …, 2^-levels]`.
pub fn dyadic_grid(levels: u32) -> Vec<f64> {
    (0..=levels).map(|j| 2f64.powi(-(j as i32))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarlesonNorm {
    pub value: f64,
    /// Depth of the maximizing window.
    pub window: f64,
}

/// Supremum of [`carleson_ratio`] over the windows in `t_grid`.
pub fn carleson_norm(density: &RadialDensity, t_grid: &[f64]) -> Result<CarlesonNorm> {
    let windows = t_grid
        .iter()
        .map(|&t| CarlesonWindow::new(t))
        .collect::<Result<Vec<_>>>()?;
    let ratios = windows
        .par_iter()
        .map(|&w| carleson_ratio(density, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ratios
        .iter()
        .zip(t_grid)
        .fold(
            CarlesonNorm {
                value: 0.0,
                window: t_grid.first().copied().unwrap_or(1.0),
            },
            |best, (&value, &window)| {
                if value > best.value {
                    CarlesonNorm { value, window }
                } else {
                    best
                }
            },
        ))
}

/// [`carleson_norm`] over the default dyadic grid.
pub fn carleson_norm_dyadic(density: &RadialDensity) -> Result<CarlesonNorm> {
    carleson_norm(density, &dyadic_grid(DYADIC_LEVELS))
}
