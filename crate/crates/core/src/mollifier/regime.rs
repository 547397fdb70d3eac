//! Shift tests `F_n(F_n^{-1}(u) - delta h_n)` and the regime they imply.
//!
//! Along a schedule the shifted tail mass converges to a class-G map `sigma`
//! when the limit exists and does not depend on `delta`. The identity map
//! means the scheme resolves jumps as flows; `sigma = 1` on `(0, 1]` means it
//! resolves them as single Euler (Ito-type) updates.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jumpmap::SigmaG;

use super::profile::MollifierProfile;
use super::schedule::Schedule;

/// A tail is contracting when its last difference is below this and no larger
/// than the one before it.
pub const CAUCHY_TOL: f64 = 1e-3;

/// Mesh indices `2^6 ..= 2^14`.
pub fn default_classify_meshes() -> Vec<u64> {
    (6..=14).map(|k| 1u64 << k).collect()
}

/// Shifted tail mass along a schedule for one `(delta, u)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    pub delta: f64,
    pub u: f64,
    /// `(n, h_n, value)` in schedule order.
    pub samples: Vec<(u64, f64, f64)>,
    /// Value at the finest mesh.
    pub value: f64,
    /// Last successive difference.
    pub cauchy_tail: f64,
    pub converged: bool,
}

/// `F_n(F_n^{-1}(u) - delta h_n)` along `sched`. Needs at least three meshes.
pub fn sigma_delta_limit(
    profile: &MollifierProfile,
    sched: &Schedule,
    delta: f64,
    u: f64,
) -> Result<SigmaEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} is not in (0, 1)"
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("u = {u} is not in [0, 1]")));
    }
    if sched.len() < 3 {
        return Err(Error::InvalidSchedule(format!(
            "a convergence test needs at least 3 meshes, got {}",
            sched.len()
        )));
    }
    let samples: Vec<(u64, f64, f64)> = sched
        .entries()
        .into_iter()
        .map(|(n, h)| (n, h, shifted_tail(profile, n, h, delta, u)))
        .collect();
    let m = samples.len();
    let d1 = (samples[m - 2].2 - samples[m - 3].2).abs();
    let d2 = (samples[m - 1].2 - samples[m - 2].2).abs();
    Ok(SigmaEstimate {
        delta,
        u,
        value: samples[m - 1].2,
        cauchy_tail: d2,
        converged: d2 <= d1 && d2 < CAUCHY_TOL,
        samples,
    })
}

/// `F_n(F_n^{-1}(u) - delta h)` at one mesh.
#[inline]
pub fn shifted_tail(profile: &MollifierProfile, n: u64, h: f64, delta: f64, u: f64) -> f64 {
    profile.tail(n, profile.tail_inverse(n, u) - delta * h)
}

/// Outcome of [`classify_regime`].
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// `sigma(u) = u`: jumps resolve as flows of the field.
    Flow,
    /// `sigma = 1` on `(0, 1]`: jumps resolve as one explicit Euler update.
    Ito,
    /// A nontrivial class-G limit.
    GeneralSigma(SigmaG),
    /// Limits exist but depend on `delta`.
    DeltaDependent,
    /// Some shifted tail does not contract.
    NoLimit,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Flow => "Flow",
            Verdict::Ito => "Ito",
            Verdict::GeneralSigma(_) => "GeneralSigma",
            Verdict::DeltaDependent => "DeltaDependent",
            Verdict::NoLimit => "NoLimit",
        };
        f.write_str(s)
    }
}

/// Probe grids and tolerance for [`classify_regime_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub deltas: Vec<f64>,
    pub probes: Vec<f64>,
    /// Largest admissible spread across `delta` and distance to a reference map.
    pub tolerance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            probes: (0..=20).map(|i| i as f64 / 20.0).collect(),
            tolerance: 5e-3,
        }
    }
}

/// One row of classification evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSample {
    pub delta: f64,
    pub u: f64,
    pub n: u64,
    pub h: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub verdict: Verdict,
    pub evidence: Vec<SigmaSample>,
    pub probes: Vec<f64>,
    /// Finest-mesh value at each probe, averaged over `delta`.
    pub estimates: Vec<f64>,
    /// Largest spread across `delta` at any probe.
    pub spread: f64,
    /// All tails contracting.
    pub converged: bool,
}

/// Classifies with the default probe grids.
pub fn classify_regime(profile: &MollifierProfile, sched: &Schedule) -> Result<RegimeReport> {
    classify_regime_with(profile, sched, &ClassifyOptions::default())
}

pub fn classify_regime_with(
    profile: &MollifierProfile,
    sched: &Schedule,
    opts: &ClassifyOptions,
) -> Result<RegimeReport> {
    if opts.deltas.is_empty() || opts.probes.is_empty() {
        return Err(Error::InvalidArgument(
            "probe grids must not be empty".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = opts
        .deltas
        .iter()
        .flat_map(|&d| opts.probes.iter().map(move |&u| (d, u)))
        .collect();
    let estimates: Vec<SigmaEstimate> = pairs
        .par_iter()
        .map(|&(d, u)| sigma_delta_limit(profile, sched, d, u))
        .collect::<Result<_>>()?;

    let np = opts.probes.len();
    let limits: Vec<Vec<f64>> = estimates
        .chunks(np)
        .map(|row| row.iter().map(|e| e.value).collect())
        .collect();
    let converged = estimates.iter().all(|e| e.converged);
    let verdict = judge_limits(&opts.probes, &limits, converged, opts.tolerance);

    let evidence = estimates
        .iter()
        .flat_map(|e| {
            e.samples.iter().map(move |&(n, h, value)| SigmaSample {
                delta: e.delta,
                u: e.u,
                n,
                h,
                value,
            })
        })
        .collect();
    let (mean, spread) = summarize(&limits, np);
    Ok(RegimeReport {
        verdict,
        evidence,
        probes: opts.probes.clone(),
        estimates: mean,
        spread,
        converged,
    })
}

/// Verdict from finest-mesh limits, `limits[d][i]` being the value for the
/// `d`-th delta at `probes[i]`.
pub fn judge_limits(probes: &[f64], limits: &[Vec<f64>], converged: bool, tol: f64) -> Verdict {
    if !converged || limits.is_empty() {
        return Verdict::NoLimit;
    }
    let (mean, spread) = summarize(limits, probes.len());
    if spread > tol {
        return Verdict::DeltaDependent;
    }
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    if probes.iter().zip(&mean).all(|(&u, &s)| close(s, u)) {
        return Verdict::Flow;
    }
    let ito = probes.iter().zip(&mean).all(|(&u, &s)| {
        if u <= 0.0 {
            close(s, 0.0)
        } else {
            close(s, 1.0)
        }
    });
    if ito {
        return Verdict::Ito;
    }
    match SigmaG::fit(probes, &mean, tol) {
        Ok(sigma) => Verdict::GeneralSigma(sigma),
        Err(_) => Verdict::NoLimit,
    }
}

fn summarize(limits: &[Vec<f64>], np: usize) -> (Vec<f64>, f64) {
    let mut mean = vec![0.0; np];
    let mut spread = 0.0_f64;
    for i in 0..np {
        let col = limits.iter().map(|row| row[i]);
        let (lo, hi) = col
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
        spread = spread.max(hi - lo);
        mean[i] = col.sum::<f64>() / limits.len() as f64;
    }
    (mean, spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(alpha: f64) -> Schedule {
        Schedule::power(default_classify_meshes(), 1.0, alpha).unwrap()
    }

    #[test]
    fn uniform_closed_form() {
        let p = MollifierProfile::uniform();
        for alpha in [0.5, 1.0, 2.0] {
            let s = power(alpha);
            for &delta in &[0.1, 0.25, 0.9] {
                for i in 0..=10 {
                    let u = i as f64 / 10.0;
                    let est = sigma_delta_limit(&p, &s, delta, u).unwrap();
                    for &(n, h, v) in &est.samples {
                        let expected = if u == 0.0 {
                            0.0
                        } else {
                            (u + delta * n as f64 * h).min(1.0)
                        };
                        assert!((v - expected).abs() < 1e-12, "alpha={alpha} u={u} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn spec_style_examples() {
        let p = MollifierProfile::uniform();
        let v = sigma_delta_limit(&p, &power(2.0), 0.5, 0.3).unwrap();
        assert!(v.converged && (v.value - 0.3).abs() < 1e-4);
        let v = sigma_delta_limit(&p, &power(0.5), 0.5, 0.3).unwrap();
        assert!(v.converged && v.value == 1.0);
        let v = sigma_delta_limit(&p, &power(1.0), 0.25, 0.3).unwrap();
        assert!(v.converged && (v.value - 0.55).abs() < 1e-12);
    }

    #[test]
    fn classify_canonical_schedules() {
        let p = MollifierProfile::uniform();
        assert_eq!(
            classify_regime(&p, &power(2.0)).unwrap().verdict,
            Verdict::Flow
        );
        assert_eq!(
            classify_regime(&p, &power(0.5)).unwrap().verdict,
            Verdict::Ito
        );
        assert_eq!(
            classify_regime(&p, &power(1.0)).unwrap().verdict,
            Verdict::DeltaDependent
        );
    }

    #[test]
    fn classify_other_profiles() {
        for p in [
            MollifierProfile::triangular(),
            MollifierProfile::smooth_bump(),
        ] {
            assert_eq!(
                classify_regime(&p, &power(2.0)).unwrap().verdict,
                Verdict::Flow
            );
            assert_eq!(
                classify_regime(&p, &power(0.5)).unwrap().verdict,
                Verdict::Ito
            );
        }
    }

    #[test]
    fn oscillating_steps_have_no_limit() {
        let meshes = default_classify_meshes();
        let steps: Vec<f64> = meshes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if i % 2 == 0 {
                    0.2 / n as f64
                } else {
                    0.8 / n as f64
                }
            })
            .collect();
        let s = Schedule::table(meshes, steps).unwrap();
        let r = classify_regime(&MollifierProfile::uniform(), &s).unwrap();
        assert_eq!(r.verdict, Verdict::NoLimit);
        assert!(!r.converged);
    }

    #[test]
    fn judge_general_sigma() {
        let probes: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let truth = SigmaG::new(vec![(0.2, 0.5)]).unwrap();
        let row: Vec<f64> = probes.iter().map(|&u| truth.eval(u)).collect();
        let v = judge_limits(&probes, &[row.clone(), row], true, 5e-3);
        match v {
            Verdict::GeneralSigma(s) => assert_eq!(s, truth),
            other => panic!("unexpected {other:?}"),
        }
        let bad: Vec<f64> = probes.iter().map(|&u| (u * 0.5 + 0.5).min(1.0)).collect();
        assert_eq!(judge_limits(&probes, &[bad], true, 5e-3), Verdict::NoLimit);
    }

    #[test]
    fn evidence_is_complete() {
        let r = classify_regime(&MollifierProfile::uniform(), &power(2.0)).unwrap();
        assert_eq!(r.evidence.len(), 5 * 21 * 9);
        assert_eq!(r.estimates.len(), 21);
    }
}
