//! Staircase maps of class G on `[0, 1]`.

use crate::error::{Error, Result};

/// Maximum reconstruction error accepted by [`SigmaG::fit`].
pub const FIT_ROUND_TRIP_TOL: f64 = 1e-6;

/// A map `sigma` on `[0, 1]` equal to `b_i` on each `(a_i, b_i]` and to the
/// identity elsewhere. Intervals are disjoint and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaG {
    intervals: Vec<(f64, f64)>,
}

impl SigmaG {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
        for &(a, b) in &intervals {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::InvalidSigma(format!(
                    "interval ({a}, {b}] must satisfy 0 <= a < b <= 1"
                )));
            }
        }
        if let Some(w) = intervals.windows(2).find(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidSigma(format!(
                "intervals ({}, {}] and ({}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        Ok(Self { intervals })
    }

    /// `sigma(u) = u`.
    pub fn identity() -> Self {
        Self {
            intervals: Vec::new(),
        }
    }

    /// `sigma = 1` on `(0, 1]`.
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn eval(&self, u: f64) -> f64 {
        let i = self.intervals.partition_point(|iv| iv.0 < u);
        if i > 0 {
            let (_, b) = self.intervals[i - 1];
            if u <= b {
                return b;
            }
        }
        u
    }

    /// `sigma(u+) - sigma(u)`: positive exactly at the left ends `a_i`.
    pub fn jump_at(&self, u: f64) -> f64 {
        self.intervals
            .iter()
            .find(|iv| iv.0 == u)
            .map_or(0.0, |&(a, b)| b - a)
    }

    /// Builds a class-G map from values sampled at increasing probes.
    ///
    /// Values within `tol` of the probe are read as identity points. A run
    /// of values above the identity is read as a plateau at their mean,
    /// starting after the preceding probe. The reconstruction must reproduce
    /// the snapped samples to [`FIT_ROUND_TRIP_TOL`].
    pub fn fit(probes: &[f64], values: &[f64], tol: f64) -> Result<Self> {
        if probes.len() != values.len() || probes.is_empty() {
            return Err(Error::InvalidSigma(format!(
                "{} probes against {} values",
                probes.len(),
                values.len()
            )));
        }
        if probes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSigma("probes must increase strictly".into()));
        }
        let mut intervals = Vec::new();
        let mut snapped = Vec::with_capacity(probes.len());
        let mut i = 0;
        while i < probes.len() {
            let (u, v) = (probes[i], values[i]);
            if v < u - tol {
                return Err(Error::InvalidSigma(format!(
                    "sample {v} at probe {u} lies below the identity"
                )));
            }
            if v <= u + tol {
                snapped.push(u);
                i += 1;
                continue;
            }
            let start = if i == 0 { 0.0 } else { probes[i - 1] };
            let mut j = i;
            while j < probes.len() && probes[j] <= v + tol && (values[j] - v).abs() <= tol {
                j += 1;
            }
            let level = values[i..j].iter().sum::<f64>() / (j - i) as f64;
            let level = level.min(1.0).max(probes[j - 1]);
            if start >= level {
                return Err(Error::InvalidSigma(format!(
                    "plateau at {level} does not rise above its start {start}"
                )));
            }
            intervals.push((start, level));
            snapped.extend(std::iter::repeat_n(level, j - i));
            i = j;
        }
        let fitted = Self::new(intervals)?;
        let err = probes
            .iter()
            .zip(&snapped)
            .map(|(&u, &s)| (fitted.eval(u) - s).abs())
            .fold(0.0, f64::max);
        if err >= FIT_ROUND_TRIP_TOL {
            return Err(Error::InvalidSigma(format!(
                "samples are not a class-G staircase (round-trip error {err:e})"
            )));
        }
        Ok(fitted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let s = SigmaG::new(vec![(0.2, 0.5)]).unwrap();
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(0.2), 0.2);
        assert_eq!(s.eval(0.3), 0.5);
        assert_eq!(s.eval(0.5), 0.5);
        assert_eq!(s.eval(0.6), 0.6);
        assert_eq!(s.jump_at(0.2), 0.3);
        assert_eq!(s.jump_at(0.3), 0.0);
        let f = SigmaG::full();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1e-12), 1.0);
    }

    #[test]
    fn validation() {
        assert!(SigmaG::new(vec![(0.5, 0.5)]).is_err());
        assert!(SigmaG::new(vec![(-0.1, 0.5)]).is_err());
        assert!(SigmaG::new(vec![(0.5, 1.1)]).is_err());
        assert!(SigmaG::new(vec![(0.1, 0.5), (0.4, 0.6)]).is_err());
        assert!(SigmaG::new(vec![(0.5, 0.6), (0.1, 0.5)]).is_ok());
    }

    #[test]
    fn fit_recovers_staircase() {
        let probes: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let truth = SigmaG::new(vec![(0.2, 0.5), (0.7, 0.8)]).unwrap();
        let values: Vec<f64> = probes.iter().map(|&u| truth.eval(u) + 1e-4).collect();
        let fit = SigmaG::fit(&probes, &values, 5e-3).unwrap();
        assert_eq!(fit.intervals().len(), 2);
        assert!((fit.intervals()[0].0 - 0.2).abs() < 1e-12);
        assert!((fit.intervals()[0].1 - 0.5001).abs() < 1e-9);
        assert!((fit.intervals()[1].0 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_non_staircase() {
        let probes = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert!(SigmaG::fit(&probes, &[0.0, 0.1, 0.5, 0.75, 1.0], 1e-3).is_err());
        // Rising above the identity without a flat run.
        assert!(SigmaG::fit(&probes, &[0.0, 0.4, 0.6, 0.9, 1.0], 1e-3).is_err());
    }
}
