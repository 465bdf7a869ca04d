//! Boundary-refining radial grids and grid suprema.
//!
//! Grid radii are `r = 1 - 2^-x` for `x` uniform on `[0, max_exponent]`, so
//! the spacing shrinks geometrically towards the circle where the bumps
//! `s^N (1 - s)` live. Known critical radii can be merged in, and every local
//! maximum found on the grid is polished by a golden-section search in `x`.

use rayon::prelude::*;
use serde::Serialize;

use crate::series::RadialPoint;

pub const DEFAULT_POINTS: usize = 2001;
pub const DEFAULT_MAX_EXPONENT: f64 = 50.0;

/// How many of the largest local maxima get polished.
const REFINED_PEAKS: usize = 16;

#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    points: Vec<RadialPoint>,
    max_exponent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridMetadata {
    pub points: usize,
    pub max_exponent: f64,
    pub min_depth: f64,
}

fn exponent(p: &RadialPoint) -> f64 {
    -p.depth().log2()
}

fn from_exponent(x: f64) -> RadialPoint {
    RadialPoint::from_depth(2f64.powf(-x))
}

impl Default for BoundaryGrid {
    fn default() -> Self {
        Self::new(DEFAULT_POINTS, DEFAULT_MAX_EXPONENT)
    }
}

impl BoundaryGrid {
    pub fn new(points: usize, max_exponent: f64) -> Self {
        assert!(points >= 2, "a grid needs at least two points");
        let step = max_exponent / (points - 1) as f64;
        Self {
            points: (0..points).map(|i| from_exponent(i as f64 * step)).collect(),
            max_exponent,
        }
    }

    /// Adds extra radii in `[0, 1)`; anything else is ignored.
    pub fn with_radii(mut self, radii: impl IntoIterator<Item = f64>) -> Self {
        self.points.extend(
            radii
                .into_iter()
                .filter(|r| (0.0..1.0).contains(r))
                .map(RadialPoint::from_radius),
        );
        self.points.sort_by(|a, b| b.depth().total_cmp(&a.depth()));
        self.points.dedup_by(|a, b| a.depth() == b.depth());
        self
    }

    /// The points with `r ≤ r_max`.
    pub fn up_to(&self, r_max: f64) -> Vec<RadialPoint> {
        self.points.iter().copied().filter(|p| p.r() <= r_max).collect()
    }

    pub fn points(&self) -> &[RadialPoint] {
        &self.points
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            points: self.points.len(),
            max_exponent: self.max_exponent,
            min_depth: self.points.last().map_or(1.0, RadialPoint::depth),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Supremum {
    pub value: f64,
    pub at: RadialPoint,
}

/// Grid supremum of `f`, with local maxima polished.
pub fn supremum<F>(grid: &BoundaryGrid, f: F) -> Supremum
where
    F: Fn(&RadialPoint) -> f64 + Sync,
{
    let pts = grid.points();
    let values: Vec<f64> = pts.par_iter().map(&f).collect();
    let n = values.len();

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(REFINED_PEAKS);

    let mut best = Supremum {
        value: f64::NEG_INFINITY,
        at: pts[0],
    };
    for (i, &v) in values.iter().enumerate() {
        if v > best.value {
            best = Supremum { value: v, at: pts[i] };
        }
    }

    let polished: Vec<Supremum> = peaks
        .par_iter()
        .map(|&i| {
            let lo = exponent(&pts[i.saturating_sub(1)]);
            let hi = exponent(&pts[(i + 1).min(n - 1)]);
            golden_max(&f, lo, hi)
        })
        .collect();
    for cand in polished {
        if cand.value > best.value {
            best = cand;
        }
    }
    best
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64) -> Supremum
where
    F: Fn(&RadialPoint) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let eval = |x: f64| {
        let p = from_exponent(x);
        (f(&p), p)
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut pc) = eval(c);
    let (mut fd, mut pd) = eval(d);
    for _ in 0..100 {
        if (b - a).abs() <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            (d, fd, pd) = (c, fc, pc);
            c = b - INV_PHI * (b - a);
            (fc, pc) = eval(c);
        } else {
            a = c;
            (c, fc, pc) = (d, fd, pd);
            d = a + INV_PHI * (b - a);
            (fd, pd) = eval(d);
        }
    }
    if fc >= fd {
        Supremum { value: fc, at: pc }
    } else {
        Supremum { value: fd, at: pd }
    }
}
