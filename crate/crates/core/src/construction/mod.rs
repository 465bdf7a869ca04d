//! The end-to-end construction: thresholds for each `h_k`, the search for
//! the spike positions `N_k`, and verification of the resulting quotient
//! `f = 1 + Σ h_k` against the δ-level and ε-level conditions.

pub mod lemma;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carleson::{carleson_norm_dyadic, CarlesonNorm, RadialDensity};
use crate::error::{Error, Result};
use crate::grid::{supremum, BoundaryGrid, GridMetadata, Supremum};
use crate::series::{RadialPoint, RadialSeries};
use crate::spectral::{checked_f_series, spike_components};
use crate::weights::{build_spiked_weights, SpikeSpec, WeightSequence};

pub use lemma::{lemma_bounds, psi_max, LemmaReport, PsiMax};

pub const DEFAULT_R_MAX: f64 = 0.999;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest number of spikes the search will place.
pub const MAX_SPIKES: usize = 8;

/// Upper end of the doubling search for `N_k`.
pub const SEARCH_LIMIT: u64 = 1 << 60;

/// Extra points at which the admissibility of the bracket is re-checked.
const BRACKET_SAMPLES: u64 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub spike_starts: Vec<u64>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_r_max() -> f64 {
    DEFAULT_R_MAX
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl ConstructionConfig {
    pub fn new(alpha: f64, delta: f64, spike_starts: Vec<u64>) -> Self {
        Self {
            alpha,
            delta,
            k: spike_starts.len(),
            spike_starts,
            r_max: DEFAULT_R_MAX,
            tol: DEFAULT_TOL,
        }
    }

    /// Checks the scalar parameters and builds the weights.
    pub fn weights(&self) -> Result<WeightSequence> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha = {} must be positive", self.alpha)));
        }
        check_delta(self.delta)?;
        if !(self.r_max > 0.0 && self.r_max < 1.0) {
            return Err(Error::Domain(format!("r_max = {} must lie in (0, 1)", self.r_max)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Domain(format!("tol = {} must lie in (0, 1)", self.tol)));
        }
        if self.spike_starts.len() != self.k {
            return Err(Error::SpikeLayout(format!(
                "K = {} but {} spike starts given",
                self.k,
                self.spike_starts.len()
            )));
        }
        if self.spike_starts.first() == Some(&0) {
            return Err(Error::SpikeLayout("N_1 must be at least 1".into()));
        }
        build_spiked_weights(self.alpha, &self.spike_starts)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights().map(|_| ())
    }

    /// The same config with every `N_k` halved (rounded down).
    pub fn halved(&self) -> Self {
        Self {
            spike_starts: self.spike_starts.iter().map(|n| n / 2).collect(),
            ..self.clone()
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")))
    }
}

/// One number per `h_k` condition, in the order: value, Laplacian,
/// gradient, Carleson norm of the Laplacian density, Carleson norm of the
/// gradient density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkQuantities {
    pub value: f64,
    pub laplacian: f64,
    pub gradient: f64,
    pub carleson_laplacian: f64,
    pub carleson_gradient: f64,
}

impl HkQuantities {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.value,
            self.laplacian,
            self.gradient,
            self.carleson_laplacian,
            self.carleson_gradient,
        ]
    }

    pub fn within(&self, limits: &HkQuantities) -> bool {
        self.as_array().iter().zip(limits.as_array()).all(|(v, l)| *v <= l)
    }
}

/// `δ/2^k` for the first four conditions and `δ/4^k` for the last.
pub fn h_k_thresholds(delta: f64, k: usize) -> Result<HkQuantities> {
    check_delta(delta)?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let linear = delta * 0.5f64.powi(k as i32);
    Ok(HkQuantities {
        value: linear,
        laplacian: linear,
        gradient: linear,
        carleson_laplacian: linear,
        carleson_gradient: delta * 0.25f64.powi(k as i32),
    })
}

/// Memoized [`lemma_bounds`].
#[derive(Default)]
pub struct LemmaCache {
    reports: HashMap<u64, LemmaReport>,
}

impl LemmaCache {
    pub fn get_many(&mut self, ns: &[u64]) -> Result<Vec<LemmaReport>> {
        let missing: Vec<u64> = ns.iter().copied().filter(|n| !self.reports.contains_key(n)).collect();
        let fresh = missing
            .par_iter()
            .map(|&n| lemma_bounds(n))
            .collect::<Result<Vec<_>>>()?;
        for rep in fresh {
            self.reports.insert(rep.n, rep);
        }
        Ok(ns.iter().map(|n| self.reports[n]).collect())
    }
}

/// Sufficient bounds for one spike's `h_k` from its `ψ`-decomposition:
/// `C_k = Σ|c_j|` times the worst constituent for the linear conditions,
/// and `C_k²` times the worst constituent for the quadratic one.
pub fn spike_bounds(alpha: f64, spike: SpikeSpec, cache: &mut LemmaCache) -> Result<(f64, HkQuantities)> {
    let comps = spike_components(alpha, spike);
    let c_k: f64 = comps.iter().map(|(_, c)| c.abs()).sum();
    let ns: Vec<u64> = comps.iter().map(|&(n, _)| n).collect();
    let reports = cache.get_many(&ns)?;
    let worst = |f: fn(&LemmaReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    Ok((
        c_k,
        HkQuantities {
            value: c_k * worst(|r| r.sup_psi),
            laplacian: c_k * worst(|r| r.sup_lap_weighted),
            gradient: c_k * worst(|r| r.sup_grad_weighted).sqrt(),
            carleson_laplacian: c_k * worst(|r| r.carl_lap),
            carleson_gradient: c_k * c_k * worst(|r| r.carl_grad),
        },
    ))
}

/// Why `N_k` was accepted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeCertificate {
    pub k: usize,
    #[serde(rename = "N")]
    pub start: u64,
    /// `Σ|c_j|` over the spike's constituents.
    pub constant: f64,
    pub thresholds: HkQuantities,
    pub bounds: HkQuantities,
    /// Smallest admissible position allowed by the previous spike.
    pub lower_limit: u64,
    /// Admissible end of the doubling bracket.
    pub bracket_end: u64,
    /// Every sampled position in `[N_k, bracket_end]` is admissible too.
    pub bracket_admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Construction {
    pub config: ConstructionConfig,
    pub certificates: Vec<SpikeCertificate>,
}

/// Minimal admissible `N_k` for each `k = 1..=K`, with certificates.
pub fn construct(alpha: f64, delta: f64, k_count: usize) -> Result<Construction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    check_delta(delta)?;
    if k_count > MAX_SPIKES {
        return Err(Error::Domain(format!("K = {k_count} exceeds the cap {MAX_SPIKES}")));
    }
    let mut cache = LemmaCache::default();
    let mut certificates = Vec::with_capacity(k_count);
    let mut lower = 1u64;
    for k in 1..=k_count {
        let thresholds = h_k_thresholds(delta, k)?;
        let spike = |start| SpikeSpec {
            start,
            half_width: k as u64,
        };
        let admissible = |n: u64, cache: &mut LemmaCache| -> Result<bool> {
            Ok(spike_bounds(alpha, spike(n), cache)?.1.within(&thresholds))
        };

        let (start, bracket_end) = if admissible(lower, &mut cache)? {
            (lower, lower)
        } else {
            let mut lo = lower;
            let mut hi = lower.saturating_mul(2);
            loop {
                if hi > SEARCH_LIMIT {
                    return Err(Error::SearchFailed { k, limit: SEARCH_LIMIT });
                }
                if admissible(hi, &mut cache)? {
                    break;
                }
                lo = hi;
                hi *= 2;
            }
            let end = hi;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if admissible(mid, &mut cache)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (hi, end)
        };

        let mut bracket_admissible = true;
        for i in 1..=BRACKET_SAMPLES {
            let n = start + (bracket_end - start) * i / BRACKET_SAMPLES;
            bracket_admissible &= admissible(n, &mut cache)?;
        }

        let (constant, bounds) = spike_bounds(alpha, spike(start), &mut cache)?;
        certificates.push(SpikeCertificate {
            k,
            start,
            constant,
            thresholds,
            bounds,
            lower_limit: lower,
            bracket_end,
            bracket_admissible,
        });
        lower = spike(start).end() + 1;
    }
    let starts = certificates.iter().map(|c| c.start).collect();
    Ok(Construction {
        config: ConstructionConfig::new(alpha, delta, starts),
        certificates,
    })
}

pub fn select_spike_positions(alpha: f64, delta: f64, k_count: usize) -> Result<Vec<u64>> {
    Ok(construct(alpha, delta, k_count)?.config.spike_starts)
}

/// `δ = min(ε/(1+ε), ε/4)`.
pub fn delta_for_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    Ok((epsilon / (1.0 + epsilon)).min(epsilon / 4.0))
}

/// `ε = 2δ/(1-δ)`, the margin at which a δ-construction is checked.
pub fn epsilon_margin(delta: f64) -> f64 {
    2.0 * delta / (1.0 - delta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: String,
    pub threshold: f64,
    pub measured: f64,
    pub argmax_r: f64,
    pub pass: bool,
}

impl ConditionResult {
    fn new(condition: &str, threshold: f64, measured: f64, argmax_r: f64) -> Self {
        Self {
            condition: condition.to_string(),
            threshold,
            measured,
            argmax_r,
            pass: measured <= threshold,
        }
    }

    fn from_sup(condition: &str, threshold: f64, sup: Supremum) -> Self {
        Self::new(condition, threshold, sup.value, sup.at.r())
    }

    fn from_norm(condition: &str, threshold: f64, norm: CarlesonNorm) -> Self {
        Self::new(condition, threshold, norm.value, 1.0 - norm.window)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    /// `"f_conditions"` or `"theorem_conditions"`.
    pub kind: String,
    /// δ or ε.
    pub parameter: f64,
    pub pass: bool,
    pub conditions: Vec<ConditionResult>,
    pub grid: GridMetadata,
}

impl VerificationReport {
    fn new(kind: &str, parameter: f64, conditions: Vec<ConditionResult>, grid: GridMetadata) -> Self {
        Self {
            kind: kind.to_string(),
            parameter,
            pass: conditions.iter().all(|c| c.pass),
            conditions,
            grid,
        }
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

/// Boundary grid plus the peaks of every constituent bump.
pub fn verification_grid(w: &WeightSequence) -> BoundaryGrid {
    let radii = w.spikes().iter().flat_map(|&s| {
        spike_components(w.alpha(), s).into_iter().flat_map(|(n, _)| {
            let nf = n as f64;
            [psi_max(n).r_star, nf / (nf + 1.0)]
        })
    });
    BoundaryGrid::default().with_radii(radii.collect::<Vec<_>>())
}

fn quotient(config: &ConstructionConfig) -> Result<(RadialSeries, BoundaryGrid)> {
    let w = config.weights()?;
    let f = checked_f_series(&w, config.r_max, config.tol)?;
    Ok((f, verification_grid(&w)))
}

/// Sup-norm and Carleson conditions on `f` at the config's δ.
pub fn verify_f_conditions(config: &ConstructionConfig) -> Result<VerificationReport> {
    let (f, grid) = quotient(config)?;
    let delta = config.delta;
    let field = |p: &RadialPoint| f.jet_at(p);

    let value = supremum(&grid, |p| (f.eval_at(p) - 1.0).abs());
    let lap = supremum(&grid, |p| field(p).laplacian(p.s()).abs() * p.depth().powi(2));
    let grad = supremum(&grid, |p| field(p).grad_sq(p.s()).sqrt() * p.depth());

    let f_lap = f.clone();
    let lap_density = RadialDensity::from_fn(move |p| f_lap.jet_at(p).laplacian(p.s()).abs() * p.depth());
    let f_grad = f.clone();
    let grad_density = RadialDensity::from_fn(move |p| f_grad.jet_at(p).grad_sq(p.s()) * p.depth());

    let conditions = vec![
        ConditionResult::from_sup("value", delta, value),
        ConditionResult::from_sup("laplacian", delta, lap),
        ConditionResult::from_sup("gradient", delta.sqrt(), grad),
        ConditionResult::from_norm("carleson_laplacian", delta, carleson_norm_dyadic(&lap_density)?),
        ConditionResult::from_norm("carleson_gradient", delta, carleson_norm_dyadic(&grad_density)?),
    ];
    Ok(VerificationReport::new("f_conditions", delta, conditions, grid.metadata()))
}

/// Kernel-ratio and curvature conditions at `epsilon`, through
/// `k¹_z(z)/k²_z(z) = 1/f` and `κ_T - κ_{S*} = Δ ln f`.
pub fn verify_theorem_conditions(config: &ConstructionConfig, epsilon: f64) -> Result<VerificationReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    let (f, grid) = quotient(config)?;

    let ratio = supremum(&grid, |p| {
        let v = f.eval_at(p);
        if v > 0.0 {
            v.max(v.recip())
        } else {
            f64::INFINITY
        }
    });
    let curvature = supremum(&grid, |p| f.jet_at(p).log_laplacian(p.s()).abs() * p.depth().powi(2));
    let f_density = f.clone();
    let density = RadialDensity::from_fn(move |p| f_density.jet_at(p).log_laplacian(p.s()).abs() * p.depth());

    let conditions = vec![
        ConditionResult::from_sup("kernel_ratio", 1.0 + epsilon, ratio),
        ConditionResult::from_sup("curvature_difference", epsilon, curvature),
        ConditionResult::from_norm("carleson_curvature", epsilon, carleson_norm_dyadic(&density)?),
    ];
    Ok(VerificationReport::new("theorem_conditions", epsilon, conditions, grid.metadata()))
}
