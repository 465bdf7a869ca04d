//! Radial functions on the unit disk as power series in `s = |z|²`.
//!
//! Every function the construction touches (kernel diagonals, the spike
//! corrections, the quotient `f`, the elementary bumps `s^N (1 - s)`) depends
//! on `|z|` only, so it is stored as `G(s) = Σ b_m s^m`. For such functions
//! the normalized Laplacian `∂∂̄` and the squared Wirtinger derivative reduce
//! to one-variable calculus:
//!
//! ```text
//! ΔG     = G'(s) + s G''(s)
//! |∂G|²  = s G'(s)²
//! ```
//!
//! Terms are kept sparse (`power`, `coeff`) because spike positions can be
//! far out. Large monomials are evaluated as `exp(m ln s)`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Exponents above this go through `exp(m ln s)` instead of `powi`.
pub const LOG_DOMAIN_THRESHOLD: u64 = 64;

/// Upper limit on the number of terms a truncation may ask for.
pub const MAX_TRUNCATION: u64 = 1 << 26;

/// A radius in `[0, 1)` carried together with its depth `1 - r`.
///
/// Near the circle the depth is the meaningful quantity; keeping it exact
/// avoids recomputing `1 - r` from a rounded `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialPoint {
    r: f64,
    depth: f64,
}

impl RadialPoint {
    pub fn from_radius(r: f64) -> Self {
        debug_assert!((0.0..1.0).contains(&r), "radius {r} outside [0, 1)");
        Self { r, depth: 1.0 - r }
    }

    pub fn from_depth(depth: f64) -> Self {
        debug_assert!(depth > 0.0 && depth <= 1.0, "depth {depth} outside (0, 1]");
        Self {
            r: 1.0 - depth,
            depth,
        }
    }

    pub fn from_s(s: f64) -> Self {
        let r = s.sqrt();
        Self {
            r,
            depth: (1.0 - s) / (1.0 + r),
        }
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    /// `1 - r`.
    #[inline]
    pub fn depth(&self) -> f64 {
        self.depth
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.r * self.r
    }

    /// `1 - s = (1 - r)(1 + r)`.
    #[inline]
    pub fn one_minus_s(&self) -> f64 {
        self.depth * (1.0 + self.r)
    }

    #[inline]
    pub fn ln_s(&self) -> f64 {
        2.0 * (-self.depth).ln_1p()
    }

    /// `s^m`, switching to the log domain above [`LOG_DOMAIN_THRESHOLD`].
    #[inline]
    pub fn s_pow(&self, m: u64) -> f64 {
        if m == 0 {
            1.0
        } else if m <= LOG_DOMAIN_THRESHOLD {
            self.s().powi(m as i32)
        } else if self.r == 0.0 {
            0.0
        } else {
            (m as f64 * self.ln_s()).exp()
        }
    }
}

/// One monomial `coeff · s^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub power: u64,
    pub coeff: f64,
}

/// Bound on a discarded remainder of the form
/// `scale · Σ_{m ≥ start} m(m-1)…(m-order+1) · s^(m - order)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTail {
    pub start: u64,
    pub order: u32,
    pub scale: f64,
}

impl PowerTail {
    pub fn bound(&self, s: f64) -> f64 {
        self.scale * falling_power_tail(self.order, self.start, s)
    }
}

/// What is known about the part of a series that was cut off.
#[derive(Clone, Debug, PartialEq)]
pub enum TailBound {
    /// The series is an exact polynomial.
    Exact,
    /// Remainder bounded by the sum of these components.
    Bounded(Vec<PowerTail>),
    /// Remainder exists but no bound was propagated.
    Unknown,
}

impl TailBound {
    fn combine(&self, other: &TailBound) -> TailBound {
        match (self, other) {
            (TailBound::Exact, t) | (t, TailBound::Exact) => t.clone(),
            (TailBound::Bounded(a), TailBound::Bounded(b)) => {
                TailBound::Bounded(a.iter().chain(b).copied().collect())
            }
            _ => TailBound::Unknown,
        }
    }

    fn scaled(&self, c: f64) -> TailBound {
        match self {
            TailBound::Bounded(parts) => TailBound::Bounded(
                parts
                    .iter()
                    .map(|p| PowerTail {
                        scale: p.scale * c.abs(),
                        ..*p
                    })
                    .collect(),
            ),
            t => t.clone(),
        }
    }
}

/// Value and first two `s`-derivatives of a series at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RadialJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl RadialJet {
    /// `ΔG = G' + s G''`.
    pub fn laplacian(&self, s: f64) -> f64 {
        self.d1 + s * self.d2
    }

    /// `|∂G|² = s G'²`.
    pub fn grad_sq(&self, s: f64) -> f64 {
        s * self.d1 * self.d1
    }

    /// `Δ ln G = (G ΔG - |∂G|²) / G²`.
    pub fn log_laplacian(&self, s: f64) -> f64 {
        (self.value * self.laplacian(s) - self.grad_sq(s)) / (self.value * self.value)
    }
}

/// Truncated power series `G(s) = Σ b_m s^m` with a record of its tail.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSeries {
    terms: Vec<Term>,
    tail: TailBound,
}

impl RadialSeries {
    /// Builds an exact polynomial; terms are sorted and like powers merged.
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Self {
        Self {
            terms: normalize(terms.into_iter().collect()),
            tail: TailBound::Exact,
        }
    }

    pub fn zero() -> Self {
        Self::new([])
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(power: u64, coeff: f64) -> Self {
        Self::new([Term { power, coeff }])
    }

    /// Dense coefficients `b_0, b_1, …`.
    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().enumerate().map(|(m, &coeff)| Term {
            power: m as u64,
            coeff,
        }))
    }

    /// The elementary bump `ψ_N = s^N (1 - s)`.
    pub fn psi(n: u64) -> Self {
        Self::new([
            Term {
                power: n,
                coeff: 1.0,
            },
            Term {
                power: n + 1,
                coeff: -1.0,
            },
        ])
    }

    pub fn with_tail(mut self, tail: TailBound) -> Self {
        self.tail = tail;
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn tail(&self) -> &TailBound {
        &self.tail
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.tail == TailBound::Exact
    }

    /// Highest stored power, `None` for the zero series.
    pub fn degree(&self) -> Option<u64> {
        self.terms.last().map(|t| t.power)
    }

    pub fn coeff(&self, power: u64) -> f64 {
        self.terms
            .binary_search_by_key(&power, |t| t.power)
            .map(|i| self.terms[i].coeff)
            .unwrap_or(0.0)
    }

    /// Evaluates `Σ b_m s^m` for `s ∈ [0, 1)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(self.eval_at(&RadialPoint::from_s(s)))
    }

    pub fn eval_at(&self, p: &RadialPoint) -> f64 {
        self.terms.iter().map(|t| t.coeff * p.s_pow(t.power)).sum()
    }

    /// Value, `G'` and `G''` in a single pass.
    pub fn jet_at(&self, p: &RadialPoint) -> RadialJet {
        let s = p.s();
        let mut jet = RadialJet::default();
        for t in &self.terms {
            let m = t.power;
            match m {
                0 => jet.value += t.coeff,
                1 => {
                    jet.value += t.coeff * s;
                    jet.d1 += t.coeff;
                }
                _ => {
                    let base = p.s_pow(m - 2);
                    let mf = m as f64;
                    jet.value += t.coeff * base * s * s;
                    jet.d1 += t.coeff * mf * base * s;
                    jet.d2 += t.coeff * mf * (mf - 1.0) * base;
                }
            }
        }
        jet
    }

    /// Termwise derivative `G'(s)`.
    pub fn d_ds(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.power > 0)
            .map(|t| Term {
                power: t.power - 1,
                coeff: t.coeff * t.power as f64,
            });
        let tail = match &self.tail {
            TailBound::Bounded(parts) => TailBound::Bounded(
                parts
                    .iter()
                    .map(|p| PowerTail {
                        order: p.order + 1,
                        ..*p
                    })
                    .collect(),
            ),
            t => t.clone(),
        };
        Self::new(terms).with_tail(tail)
    }

    /// `s · G(s)`.
    pub fn times_s(&self) -> Self {
        // s ≤ 1, so a bound on the old remainder still bounds s times it.
        Self::new(self.terms.iter().map(|t| Term {
            power: t.power + 1,
            coeff: t.coeff,
        }))
        .with_tail(self.tail.clone())
    }

    /// `(1 - s) · G(s)`.
    pub fn times_one_minus_s(&self) -> Self {
        self - &self.times_s()
    }

    /// Normalized Laplacian of `G(|z|²)`: `G' + s G''`.
    pub fn radial_laplacian(&self) -> Self {
        let d1 = self.d_ds();
        let d2 = d1.d_ds();
        &d1 + &d2.times_s()
    }

    /// `|∂G(|z|²)/∂z|² = s · G'(s)²`.
    ///
    /// Materializes the square, so this is quadratic in the number of terms;
    /// use [`RadialJet::grad_sq`] for pointwise work on long series.
    pub fn grad_magnitude_sq(&self) -> Self {
        let d1 = self.d_ds();
        (&d1 * &d1).times_s()
    }

    /// Bound on the discarded remainder for `s ≤ r_max²`.
    pub fn tail_bound(&self, r_max: f64) -> f64 {
        match &self.tail {
            TailBound::Exact => 0.0,
            TailBound::Bounded(parts) => {
                let s = r_max * r_max;
                parts.iter().map(|p| p.bound(s)).sum()
            }
            TailBound::Unknown => f64::INFINITY,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.terms.iter().map(|t| Term {
            power: t.power,
            coeff: t.coeff * c,
        }))
        .with_tail(self.tail.scaled(c))
    }
}

impl Add for &RadialSeries {
    type Output = RadialSeries;

    fn add(self, rhs: &RadialSeries) -> RadialSeries {
        RadialSeries::new(self.terms.iter().chain(&rhs.terms).copied())
            .with_tail(self.tail.combine(&rhs.tail))
    }
}

impl Sub for &RadialSeries {
    type Output = RadialSeries;

    fn sub(self, rhs: &RadialSeries) -> RadialSeries {
        self + &(-rhs)
    }
}

impl Neg for &RadialSeries {
    type Output = RadialSeries;

    fn neg(self) -> RadialSeries {
        self.scale(-1.0)
    }
}

impl Mul for &RadialSeries {
    type Output = RadialSeries;

    fn mul(self, rhs: &RadialSeries) -> RadialSeries {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term {
                    power: a.power + b.power,
                    coeff: a.coeff * b.coeff,
                });
            }
        }
        let tail = match (&self.tail, &rhs.tail) {
            (TailBound::Exact, TailBound::Exact) => TailBound::Exact,
            _ => TailBound::Unknown,
        };
        RadialSeries::new(terms).with_tail(tail)
    }
}

impl std::iter::Sum for RadialSeries {
    fn sum<I: Iterator<Item = RadialSeries>>(iter: I) -> Self {
        iter.fold(RadialSeries::zero(), |acc, s| &acc + &s)
    }
}

fn normalize(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by_key(|t| t.power);
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.power == t.power => last.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain(format!("s = {s} is outside [0, 1)")))
    }
}

fn falling(m: u64, order: u32) -> f64 {
    (0..order as u64).map(|i| (m - i) as f64).product()
}

/// `Σ_{m ≥ start} m(m-1)…(m-order+1) · s^(m-order)` for `s ∈ [0, 1)`.
///
/// Terms are summed explicitly until the term ratio, which decreases to `s`,
/// drops below `s + (1-s)/4`; the remainder is then dominated by a geometric
/// series that overestimates it by at most a factor 4/3.
pub fn falling_power_tail(order: u32, start: u64, s: f64) -> f64 {
    if s <= 0.0 {
        // Only the m = order term survives at s = 0.
        return if start <= order as u64 {
            falling(order as u64, order)
        } else {
            0.0
        };
    }
    let p = RadialPoint::from_s(s);
    let mut m = start.max(order as u64);
    let mut acc = 0.0;
    loop {
        let term = falling(m, order) * p.s_pow(m - order as u64);
        let ratio = (m + 1) as f64 / (m + 1 - order as u64) as f64 * s;
        if ratio <= s + 0.25 * p.one_minus_s() {
            return acc + term / (1.0 - ratio);
        }
        acc += term;
        m += 1;
    }
}

/// Bound on `Σ_{m > M} s^m / w_m` for a weight with `w_m ≥ 1`:
/// `r_max^(2(M+1)) / (1 - r_max²)`.
pub fn kernel_tail_bound(degree: u64, r_max: f64) -> Result<f64> {
    check_radius(r_max)?;
    Ok(falling_power_tail(0, degree + 1, r_max * r_max))
}

/// Smallest truncation degree `M` whose `order`-th derivative remainder at
/// `r_max` is at most `target`.
pub fn required_truncation(r_max: f64, target: f64, order: u32) -> Result<u64> {
    check_radius(r_max)?;
    if target.is_nan() || target <= 0.0 {
        return Err(Error::Domain(format!("tail target {target} must be positive")));
    }
    let s = r_max * r_max;
    let tail = |m: u64| falling_power_tail(order, m + 1, s);
    if tail(0) <= target {
        return Ok(0);
    }
    let mut hi = 1u64;
    while tail(hi) > target {
        hi *= 2;
        if hi > MAX_TRUNCATION {
            // Report how far the geometric estimate says we would need to go.
            let est = (target * (1.0 - s)).ln() / s.ln();
            return Err(Error::TruncationInfeasible {
                r_max,
                required: est.ceil().max(hi as f64) as u64,
                limit: MAX_TRUNCATION,
            });
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn check_radius(r_max: f64) -> Result<()> {
    if (0.0..1.0).contains(&r_max) {
        Ok(())
    } else {
        Err(Error::Domain(format!("r_max = {r_max} must lie in [0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geometric(m: usize) -> RadialSeries {
        RadialSeries::from_coeffs(&vec![1.0; m + 1]).with_tail(TailBound::Bounded(vec![
            PowerTail {
                start: m as u64 + 1,
                order: 0,
                scale: 1.0,
            },
        ]))
    }

    #[test]
    fn geometric_truncation_within_tail() {
        let g = geometric(50);
        let v = g.eval(0.5).unwrap();
        let tail = 0.5f64.powi(51) / 0.5;
        assert!((v - 2.0).abs() <= tail);
        assert_relative_eq!(g.tail_bound(0.5f64.sqrt()), tail, max_relative = 1e-12);
    }

    #[test]
    fn psi_one_at_half() {
        assert_relative_eq!(RadialSeries::psi(1).eval(0.5).unwrap(), 0.25);
    }

    #[test]
    fn eval_at_zero_is_constant_term() {
        let g = RadialSeries::from_coeffs(&[3.5, -1.0, 2.0]);
        assert_eq!(g.eval(0.0).unwrap(), 3.5);
        assert_eq!(RadialSeries::psi(7).eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_outside_unit_interval() {
        let g = RadialSeries::constant(1.0);
        assert!(g.eval(1.0).is_err());
        assert!(g.eval(-0.1).is_err());
        assert!(g.eval(f64::NAN).is_err());
    }

    #[test]
    fn log_domain_agrees_with_powi_at_threshold() {
        let p = RadialPoint::from_radius(0.97);
        let direct = p.s().powi(65);
        assert_relative_eq!(p.s_pow(65), direct, max_relative = 1e-13);
        // far past powi's comfort zone, no underflow to garbage
        let q = RadialPoint::from_depth(1e-7);
        assert_relative_eq!(q.s_pow(1_000_000), (-0.2f64).exp(), max_relative = 1e-6);
    }

    #[test]
    fn derivative_of_psi() {
        let n = 6;
        let d = RadialSeries::psi(n).d_ds();
        assert_eq!(d.terms().len(), 2);
        assert_eq!(d.coeff(n - 1), n as f64);
        assert_eq!(d.coeff(n), -((n + 1) as f64));
        assert!(RadialSeries::constant(1.0).d_ds().is_zero());
    }

    #[test]
    fn derivative_of_geometric_is_binomial() {
        let d = geometric(40).d_ds();
        assert_eq!(d.degree(), Some(39));
        for m in 0..40u64 {
            // coefficient of s^m in 1/(1-s)^2 is C(m+1, 1)
            assert_eq!(d.coeff(m), (m + 1) as f64);
        }
        match d.tail() {
            TailBound::Bounded(parts) => assert_eq!(parts[0].order, 1),
            t => panic!("unexpected tail {t:?}"),
        }
    }

    #[test]
    fn laplacian_closed_forms() {
        let lap_s = RadialSeries::monomial(1, 1.0).radial_laplacian();
        assert_eq!(lap_s, RadialSeries::constant(1.0));
        assert!(RadialSeries::constant(4.0).radial_laplacian().is_zero());

        for n in [1u64, 2, 5, 30] {
            let lap = RadialSeries::psi(n).radial_laplacian();
            let nf = n as f64;
            let expected = RadialSeries::new([
                Term {
                    power: n - 1,
                    coeff: nf * nf,
                },
                Term {
                    power: n,
                    coeff: -(nf + 1.0) * (nf + 1.0),
                },
            ]);
            assert_eq!(lap, expected, "N = {n}");
        }
    }

    #[test]
    fn grad_magnitude_closed_forms() {
        assert_eq!(
            RadialSeries::monomial(1, 1.0).grad_magnitude_sq(),
            RadialSeries::monomial(1, 1.0)
        );
        assert!(RadialSeries::constant(2.0).grad_magnitude_sq().is_zero());
        // N = 1: s (1 - 2s)^2 = s - 4 s^2 + 4 s^3
        let g = RadialSeries::psi(1).grad_magnitude_sq();
        assert_eq!(g, RadialSeries::from_coeffs(&[0.0, 1.0, -4.0, 4.0]));
        assert_eq!(g.eval(0.5).unwrap(), 0.0);
    }

    #[test]
    fn jet_matches_series_derivatives() {
        let g = RadialSeries::new([
            Term { power: 0, coeff: 1.0 },
            Term { power: 3, coeff: -0.5 },
            Term { power: 90, coeff: 2.0 },
            Term { power: 91, coeff: -2.0 },
        ]);
        let p = RadialPoint::from_radius(0.93);
        let jet = g.jet_at(&p);
        assert_relative_eq!(jet.value, g.eval_at(&p), max_relative = 1e-13);
        assert_relative_eq!(jet.d1, g.d_ds().eval_at(&p), max_relative = 1e-12);
        assert_relative_eq!(jet.d2, g.d_ds().d_ds().eval_at(&p), max_relative = 1e-12);
        assert_relative_eq!(
            jet.laplacian(p.s()),
            g.radial_laplacian().eval_at(&p),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            jet.grad_sq(p.s()),
            g.grad_magnitude_sq().eval_at(&p),
            max_relative = 1e-12
        );
    }

    #[test]
    fn kernel_tail_bound_values() {
        let b = kernel_tail_bound(99, 0.5).unwrap();
        assert_relative_eq!(b, 0.25f64.powi(100) / 0.75, max_relative = 1e-12);
        assert!(kernel_tail_bound(10, 1.0).is_err());
        assert!(kernel_tail_bound(10, 1.5).is_err());
    }

    #[test]
    fn required_truncation_matches_log_arithmetic() {
        let r = 0.99f64;
        let m = required_truncation(r, 1e-9, 0).unwrap();
        // brute force: smallest M with 0.9801^(M+1) / 0.0199 ≤ 1e-9
        let s = r * r;
        let brute = (0u64..)
            .find(|&m| s.powi(m as i32 + 1) / (1.0 - s) <= 1e-9)
            .unwrap();
        assert_eq!(m, brute);
        assert!(required_truncation(0.999_999_999, 1e-300, 0).is_err());
    }

    #[test]
    fn falling_tail_dominates_explicit_sum() {
        for order in 0..3u32 {
            for &s in &[0.1f64, 0.5, 0.9, 0.99] {
                let start = 5u64;
                let explicit: f64 = (start.max(order as u64)..20_000)
                    .map(|m| falling(m, order) * s.powi((m - order as u64) as i32))
                    .sum();
                let bound = falling_power_tail(order, start, s);
                assert!(bound >= explicit * (1.0 - 1e-12), "order {order} s {s}");
                assert!(bound <= explicit * 1.5 + 1e-300, "order {order} s {s}");
            }
        }
    }

    #[test]
    fn radial_point_depth_is_exact() {
        let p = RadialPoint::from_depth(2f64.powi(-45));
        assert_eq!(p.depth(), 2f64.powi(-45));
        assert_relative_eq!(p.one_minus_s(), 2.0 * 2f64.powi(-45), max_relative = 1e-12);
        assert_relative_eq!(p.ln_s(), -2.0 * 2f64.powi(-45), max_relative = 1e-12);
    }
}
