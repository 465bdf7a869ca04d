//! Spiked weight sequences `w = {w_n}`.
//!
//! Off the spikes `ln w_n = 0`. A spike of half-width `k` starting at `N`
//! raises `ln w_n` linearly by `2 ln(1+α)` per step up to `2k ln(1+α)` at
//! `n = N + k`, then back down to zero at `n = N + 2k`. Weights are computed
//! on demand from `(α, spikes)`; nothing is stored densely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One triangular bump in `ln w_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeSpec {
    pub start: u64,
    pub half_width: u64,
}

impl SpikeSpec {
    /// Last index touched by the spike, `start + 2·half_width`.
    pub fn end(&self) -> u64 {
        self.start + 2 * self.half_width
    }

    pub fn peak(&self) -> u64 {
        self.start + self.half_width
    }

    /// Height index `j` of `n` inside the spike (`ln w_n = 2j ln(1+α)`).
    fn height(&self, n: u64) -> Option<u64> {
        if n < self.start || n > self.end() {
            return None;
        }
        let offset = n - self.start;
        Some(offset.min(2 * self.half_width - offset))
    }
}

/// Anything that can report `ln w_n`.
pub trait LogWeights {
    fn ln_weight(&self, n: u64) -> f64;

    fn weight(&self, n: u64) -> f64 {
        self.ln_weight(n).exp()
    }
}

/// The weight sequence of the counterexample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    alpha: f64,
    spikes: Vec<SpikeSpec>,
}

impl WeightSequence {
    /// `w ≡ 1`, the unweighted Hardy space.
    pub fn unweighted() -> Self {
        Self {
            alpha: 1.0,
            spikes: Vec::new(),
        }
    }

    /// Spikes with explicit half-widths. Requires `start_k + 2·hw_k < start_{k+1}`.
    pub fn from_spikes(alpha: f64, spikes: Vec<SpikeSpec>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
        }
        if let Some(s) = spikes.iter().find(|s| s.half_width == 0) {
            return Err(Error::SpikeLayout(format!(
                "spike at {} has zero half-width",
                s.start
            )));
        }
        for pair in spikes.windows(2) {
            if pair[0].end() >= pair[1].start {
                return Err(Error::SpikeLayout(format!(
                    "spike at {} (ends {}) overlaps spike at {}",
                    pair[0].start,
                    pair[0].end(),
                    pair[1].start
                )));
            }
        }
        Ok(Self { alpha, spikes })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spikes(&self) -> &[SpikeSpec] {
        &self.spikes
    }

    /// Index of the last spiked coefficient, `0` without spikes.
    pub fn last_spiked_index(&self) -> u64 {
        self.spikes.last().map_or(0, SpikeSpec::end)
    }

    pub fn weight_at(&self, n: u64) -> f64 {
        self.weight(n)
    }

    /// `ln(1+α)²`, the per-step slope of `ln w_n` on a spike.
    pub fn ln_step(&self) -> f64 {
        2.0 * self.alpha.ln_1p()
    }
}

impl LogWeights for WeightSequence {
    fn ln_weight(&self, n: u64) -> f64 {
        // spikes are sorted and disjoint
        let idx = self.spikes.partition_point(|s| s.end() < n);
        match self.spikes.get(idx).and_then(|s| s.height(n)) {
            Some(j) => j as f64 * self.ln_step(),
            None => 0.0,
        }
    }
}

/// The `k`-th spike (1-based) gets half-width `k`.
pub fn build_spiked_weights(alpha: f64, spike_starts: &[u64]) -> Result<WeightSequence> {
    for pair in spike_starts.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::SpikeLayout(format!(
                "spike starts must increase strictly, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let spikes = spike_starts
        .iter()
        .enumerate()
        .map(|(i, &start)| SpikeSpec {
            start,
            half_width: i as u64 + 1,
        })
        .collect();
    WeightSequence::from_spikes(alpha, spikes)
}

/// A finite hand-built sequence, `w_n = 1` past its end.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitWeights(pub Vec<f64>);

impl LogWeights for ExplicitWeights {
    fn ln_weight(&self, n: u64) -> f64 {
        self.0.get(n as usize).map_or(0.0, |w| w.ln())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub lower_limit: f64,
    pub upper_limit: f64,
    pub pass: bool,
}

/// Extreme values of `w_{n+1}/w_n` over `n < n_max` against
/// `[(1+α)^-2, (1+α)^2]`, with relative slack `1e-12`.
pub fn verify_slope_condition(w: &impl LogWeights, alpha: f64, n_max: u64) -> SlopeReport {
    let (mut max_ratio, mut min_ratio) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut prev = w.ln_weight(0);
    for n in 0..n_max {
        let next = w.ln_weight(n + 1);
        let ratio = (next - prev).exp();
        max_ratio = max_ratio.max(ratio);
        min_ratio = min_ratio.min(ratio);
        prev = next;
    }
    if n_max == 0 {
        max_ratio = 1.0;
        min_ratio = 1.0;
    }
    let upper_limit = (1.0 + alpha).powi(2);
    let lower_limit = upper_limit.recip();
    let slack = 1e-12;
    SlopeReport {
        max_ratio,
        min_ratio,
        lower_limit,
        upper_limit,
        pass: max_ratio <= upper_limit * (1.0 + slack) && min_ratio >= lower_limit * (1.0 - slack),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_spike_profile() {
        let w = build_spiked_weights(1.0, &[5]).unwrap();
        let expected = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0, 1.0, 1.0, 1.0];
        for (n, &e) in expected.iter().enumerate() {
            assert_relative_eq!(w.weight_at(n as u64), e, max_relative = 1e-15);
        }
    }

    #[test]
    fn second_spike_peak() {
        let w = build_spiked_weights(1.0, &[5, 10]).unwrap();
        assert_relative_eq!(w.weight_at(12), 16.0, max_relative = 1e-14);
        assert_relative_eq!(w.weight_at(11), 4.0, max_relative = 1e-14);
        assert_relative_eq!(w.weight_at(13), 4.0, max_relative = 1e-14);
        assert_eq!(w.weight_at(14), 1.0);
    }

    #[test]
    fn explicit_half_width() {
        let w = WeightSequence::from_spikes(
            0.5,
            vec![SpikeSpec {
                start: 10,
                half_width: 2,
            }],
        )
        .unwrap();
        assert_relative_eq!(w.weight_at(11), 2.25, max_relative = 1e-14);
        assert_relative_eq!(w.weight_at(12), 1.5f64.powi(4), max_relative = 1e-14);
    }

    #[test]
    fn no_spikes_is_unweighted() {
        let w = build_spiked_weights(0.3, &[]).unwrap();
        assert!((0..1000).all(|n| w.weight_at(n) == 1.0));
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(build_spiked_weights(0.0, &[5]).is_err());
        assert!(build_spiked_weights(-1.0, &[5]).is_err());
        // spike 1 occupies 5..=7, spike 2 must start after 7
        assert!(build_spiked_weights(1.0, &[5, 7]).is_err());
        assert!(build_spiked_weights(1.0, &[5, 8]).is_ok());
        assert!(build_spiked_weights(1.0, &[8, 5]).is_err());
    }

    #[test]
    fn spikes_are_symmetric_and_peak_exactly() {
        let starts = [3, 9, 20, 40];
        let alpha = 0.7;
        let w = build_spiked_weights(alpha, &starts).unwrap();
        for (i, s) in w.spikes().iter().enumerate() {
            let k = i as u64 + 1;
            for j in 0..=k {
                assert_eq!(w.ln_weight(s.start + j), w.ln_weight(s.start + 2 * k - j));
            }
            assert_relative_eq!(
                w.weight_at(s.peak()),
                (1.0 + alpha).powi(2 * k as i32),
                max_relative = 1e-13
            );
        }
        assert!((0..100).all(|n| w.weight_at(n) >= 1.0));
    }

    #[test]
    fn slope_condition_cases() {
        let flat = verify_slope_condition(&WeightSequence::unweighted(), 1.0, 50);
        assert!(flat.pass);
        assert_eq!((flat.max_ratio, flat.min_ratio), (1.0, 1.0));

        let w = build_spiked_weights(1.0, &[5]).unwrap();
        let rep = verify_slope_condition(&w, 1.0, 8);
        assert!(rep.pass);
        assert_relative_eq!(rep.max_ratio, 4.0, max_relative = 1e-14);
        assert_relative_eq!(rep.min_ratio, 0.25, max_relative = 1e-14);

        let jumpy = ExplicitWeights(vec![1.0, 9.0, 9.0]);
        assert!(!verify_slope_condition(&jumpy, 1.0, 3).pass);
    }
}
