//! A-priori estimates for the jump map, checked on concrete data.
//!
//! For a field `z` with Lipschitz constant `K1` and growth constant `K2`,
//! states `x, y` and levels `u < v`, the exact solution satisfies
//!
//! * `|phi(x,u) - phi(y,u)| <= |x - y| e^K1`
//! * `|phi(x,u)| <= (|x| + K2) e^K2`
//! * `|phi(x,u) - x| <= K2 (|x| + 1) e^K2`
//! * `|phi(x,u) - x - phi(y,u) + y| <= |x - y| K1 e^K1`
//! * `|phi(x,u) - phi(x,v)| <= K2 (1 + (|x| + K2) e^K2) mu([u, v])`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::StateField;

use super::measure::JumpMeasure;
use super::sigma::SigmaG;
use super::solve::phi_solve;

/// Slack added to every right-hand side to absorb solver round-off.
pub const SOLVER_BUDGET: f64 = 1e-9;

/// One inequality evaluated on one data point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + SOLVER_BUDGET
    }
}

/// Evaluates the five jump-map estimates for one data point. Requires `u <= v`.
pub fn check_phi_bounds(
    z: &StateField,
    x: f64,
    y: f64,
    u: f64,
    v: f64,
    mu: &JumpMeasure,
) -> Vec<BoundCheck> {
    let (k1, k2) = (z.lipschitz(), z.growth());
    let px = phi_solve(z, x, u, mu);
    let py = phi_solve(z, y, u, mu);
    let pv = phi_solve(z, x, v, mu);
    let dxy = (x - y).abs();
    let ek1 = k1.exp();
    let ek2 = k2.exp();
    vec![
        BoundCheck {
            name: "lipschitz in x",
            lhs: (px - py).abs(),
            rhs: dxy * ek1,
        },
        BoundCheck {
            name: "growth",
            lhs: px.abs(),
            rhs: (x.abs() + k2) * ek2,
        },
        BoundCheck {
            name: "displacement",
            lhs: (px - x).abs(),
            rhs: k2 * (x.abs() + 1.0) * ek2,
        },
        BoundCheck {
            name: "displacement lipschitz",
            lhs: (px - x - py + y).abs(),
            rhs: dxy * k1 * ek1,
        },
        BoundCheck {
            name: "modulus in u",
            lhs: (px - pv).abs(),
            rhs: k2 * (1.0 + (x.abs() + k2) * ek2) * mu.mass_between(u, v),
        },
    ]
}

/// Summary of a randomized run of [`check_phi_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrials {
    pub trials: usize,
    pub checks: usize,
    pub violations: Vec<(usize, BoundCheck)>,
    /// Smallest `rhs - lhs` seen over all checks.
    pub min_slack: f64,
}

/// Draws `trials` random (field, measure, states, levels) cases from `seed`
/// and checks every estimate. Fields are `A sin(w p + c) + B p + C`; measures
/// come from random class-G maps with up to three plateaus.
pub fn random_bound_trials(seed: u64, trials: usize) -> BoundTrials {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BoundTrials {
        trials,
        checks: 0,
        violations: Vec::new(),
        min_slack: f64::INFINITY,
    };
    for trial in 0..trials {
        let z = random_field(&mut rng);
        let mu = JumpMeasure::from_sigma(&random_sigma(&mut rng));
        let x = rng.random_range(-3.0..3.0);
        let y = rng.random_range(-3.0..3.0);
        let mut u: f64 = rng.random_range(0.0..=1.0);
        let mut v: f64 = rng.random_range(0.0..=1.0);
        if u > v {
            std::mem::swap(&mut u, &mut v);
        }
        for check in check_phi_bounds(&z, x, y, u, v, &mu) {
            out.checks += 1;
            out.min_slack = out.min_slack.min(check.rhs - check.lhs);
            if !check.holds() {
                out.violations.push((trial, check));
            }
        }
    }
    out
}

fn random_field(rng: &mut ChaCha8Rng) -> StateField {
    let amp: f64 = rng.random_range(-2.0..2.0);
    let omega: f64 = rng.random_range(0.0..3.0);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let slope: f64 = rng.random_range(-1.5..1.5);
    let offset: f64 = rng.random_range(-1.0..1.0);
    let k1 = amp.abs() * omega + slope.abs();
    let k2 = (amp.abs() + offset.abs()).max(slope.abs());
    StateField::new(
        "random harmonic",
        move |p| amp * (omega * p + phase).sin() + slope * p + offset,
        k1,
        k2,
    )
    .expect("harmonic constants bound the field")
}

fn random_sigma(rng: &mut ChaCha8Rng) -> SigmaG {
    match rng.random_range(0..5) {
        0 => SigmaG::identity(),
        1 => SigmaG::full(),
        _ => {
            let count = rng.random_range(1..=3);
            let mut cuts: Vec<f64> = (0..2 * count)
                .map(|_| rng.random_range(0.0..=1.0))
                .collect();
            cuts.sort_by(f64::total_cmp);
            let intervals = cuts
                .chunks(2)
                .filter(|c| c[1] > c[0])
                .map(|c| (c[0], c[1]))
                .collect();
            SigmaG::new(intervals).unwrap_or_else(|_| SigmaG::identity())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_hold_on_simple_cases() {
        let z = StateField::linear(1.0);
        for mu in [JumpMeasure::lebesgue(), JumpMeasure::dirac(0.0).unwrap()] {
            for c in check_phi_bounds(&z, 1.0, -0.5, 0.3, 0.9, &mu) {
                assert!(c.holds(), "{c:?}");
            }
        }
    }

    #[test]
    fn random_trials_are_reproducible() {
        let a = random_bound_trials(7, 50);
        let b = random_bound_trials(7, 50);
        assert_eq!(a, b);
        assert!(a.violations.is_empty());
        assert_eq!(a.checks, 250);
    }
}
