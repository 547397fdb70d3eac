//! The limit equation
//! `x(t) = x0 + int_a^t f(s, x(s)) dL^c(s) + sum_{a < s <= t} (phi(size_s f(s, .), x(s-), 1) - x(s-))`
//! with the jump map taken under a fixed measure `mu`.

use std::io::{self, Write};

use crate::bvfun::BVFunction;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jumpmap::{phi_solve, JumpMeasure};

/// Fraction of the continuous variation allowed per integration step.
pub const V_MAX_FRACTION: f64 = 1e-3;

/// `1e-3` times the continuous variation of `driver`, or `1e-3` when the
/// continuous part is flat.
pub fn default_v_max(driver: &BVFunction) -> f64 {
    let (a, b) = driver.domain();
    let v = driver.continuous_variation(a, b);
    if v > 0.0 {
        V_MAX_FRACTION * v
    } else {
        V_MAX_FRACTION
    }
}

/// `int_a^t g(s) dLc(s)` by trapezoid steps that each carry at most `v_max`
/// of variation. `lc` must be jump-free.
pub fn stieltjes_integrate<G>(g: G, lc: &BVFunction, a: f64, t: f64, v_max: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !lc.jumps().is_empty() {
        return Err(Error::InvalidDriver(
            "Stieltjes integration needs a jump-free integrator".into(),
        ));
    }
    if !(v_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "v_max = {v_max} must be positive"
        )));
    }
    if t < a {
        return Err(Error::Order { u: a, v: t });
    }
    let (lo, hi) = lc.domain();
    let nodes = lc.variation_nodes(a, t, v_max, hi - lo);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let dl = lc.continuous_value(w[1]) - lc.continuous_value(w[0]);
        acc += 0.5 * (g(w[0]) + g(w[1])) * dl;
    }
    Ok(acc)
}

/// One recorded node of a [`LimitPath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSample {
    pub t: f64,
    /// `x(t-)`; equal to `x` away from jump epochs.
    pub x_left: f64,
    pub x: f64,
    pub is_jump: bool,
}

/// Solution of the limit equation, recorded at every integration node.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    domain: (f64, f64),
    samples: Vec<LimitSample>,
    measure: JumpMeasure,
    v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimitOptions {
    /// Variation per step; `None` selects [`default_v_max`].
    pub v_max: Option<f64>,
}

/// Solves the limit equation from `x0` at `a`. The path is recorded at
/// `sample_times`, every jump epoch, every breakpoint of the continuous part,
/// and every intermediate integration node.
pub fn solve_limit(
    field: &ScalarField,
    driver: &BVFunction,
    mu: &JumpMeasure,
    x0: f64,
    sample_times: &[f64],
    options: LimitOptions,
) -> Result<LimitPath> {
    let (a, b) = driver.domain();
    if let Some(&t) = sample_times.iter().find(|&&t| !(a..=b).contains(&t)) {
        return Err(Error::Domain { t, a, b });
    }
    let v_max = options.v_max.unwrap_or_else(|| default_v_max(driver));
    if !(v_max > 0.0 && v_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "v_max = {v_max} must be positive"
        )));
    }
    let mut knots: Vec<f64> = sample_times
        .iter()
        .copied()
        .chain(driver.jumps().iter().map(|j| j.epoch))
        .chain(driver.breakpoints())
        .chain([a, b])
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut samples = vec![LimitSample {
        t: a,
        x_left: x0,
        x: x0,
        is_jump: false,
    }];
    let mut x = x0;
    let flat = driver.has_flat_continuous_part();
    for w in knots.windows(2) {
        let (k0, k1) = (w[0], w[1]);
        let nodes = if flat {
            vec![k0, k1]
        } else {
            driver.variation_nodes(k0, k1, v_max, b - a)
        };
        for s in nodes.windows(2) {
            let (t0, t1) = (s[0], s[1]);
            let dl = driver.continuous_value(t1) - driver.continuous_value(t0);
            if dl != 0.0 {
                let f0 = field.eval(t0, x);
                let pred = x + f0 * dl;
                x += 0.5 * (f0 + field.eval(t1, pred)) * dl;
            }
            if t1 < k1 {
                samples.push(LimitSample {
                    t: t1,
                    x_left: x,
                    x,
                    is_jump: false,
                });
            }
        }
        let size = driver.jump_at(k1);
        let x_left = x;
        if size != 0.0 {
            x = phi_solve(&field.frozen(k1, size), x_left, 1.0, mu);
        }
        samples.push(LimitSample {
            t: k1,
            x_left,
            x,
            is_jump: size != 0.0,
        });
    }
    Ok(LimitPath {
        domain: (a, b),
        samples,
        measure: mu.clone(),
        v_max,
    })
}

impl LimitPath {
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn samples(&self) -> &[LimitSample] {
        &self.samples
    }

    pub fn measure(&self) -> &JumpMeasure {
        &self.measure
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn final_value(&self) -> f64 {
        self.samples.last().expect("paths hold at least x0").x
    }

    /// Jump epochs of the path.
    pub fn jump_epochs(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.is_jump)
            .map(|s| s.t)
            .collect()
    }

    /// `x(t)`, right-continuous; linear between recorded nodes and clamped
    /// to the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let (a, b) = self.domain;
        let t = t.clamp(a, b);
        let i = self.samples.partition_point(|s| s.t <= t).saturating_sub(1);
        let s0 = &self.samples[i];
        if s0.t == t || i + 1 == self.samples.len() {
            return s0.x;
        }
        let s1 = &self.samples[i + 1];
        let r = (t - s0.t) / (s1.t - s0.t);
        s0.x + r * (s1.x_left - s0.x)
    }

    /// `x(t-)`; equals `x(t)` away from jump epochs.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => self.samples[i].x_left,
            Err(_) => self.eval(t),
        }
    }

    /// Largest gap between the recorded path and the right side of the limit
    /// equation rebuilt from it (trapezoid integral plus recorded jumps).
    pub fn residual(&self, field: &ScalarField, driver: &BVFunction) -> f64 {
        let first = self.samples[0];
        let mut rhs = first.x;
        let mut worst = 0.0_f64;
        for w in self.samples.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let dl = driver.continuous_value(s1.t) - driver.continuous_value(s0.t);
            rhs += 0.5 * (field.eval(s0.t, s0.x) + field.eval(s1.t, s1.x_left)) * dl;
            worst = worst.max((rhs - s1.x_left).abs());
            if s1.is_jump {
                rhs += s1.x - s1.x_left;
            }
        }
        worst
    }

    /// Acceptance bound for [`LimitPath::residual`]: `5 v_max (1 + max |x|)`.
    pub fn residual_tolerance(&self) -> f64 {
        let peak = self
            .samples
            .iter()
            .map(|s| s.x.abs().max(s.x_left.abs()))
            .fold(0.0, f64::max);
        5.0 * self.v_max * (1.0 + peak)
    }

    /// CSV with columns `t,x_left,x,is_jump`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x_left,x,is_jump")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                s.t, s.x_left, s.x, s.is_jump as u8
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn stieltjes_examples() {
        let lc = BVFunction::builder(0.0, 1.0)
            .segment(0.0, 1.0, &[0.0, 1.0, 0.0, -0.5])
            .build()
            .unwrap();
        let total = stieltjes_integrate(|_| 1.0, &lc, 0.0, 0.8, 1e-3).unwrap();
        assert!((total - (lc.eval(0.8) - lc.eval(0.0))).abs() < 1e-14);
        let flat = BVFunction::constant(0.0, 1.0, 3.0).unwrap();
        assert_eq!(
            stieltjes_integrate(|s| s * s, &flat, 0.0, 1.0, 1e-3).unwrap(),
            0.0
        );
        let id = BVFunction::linear(0.0, 1.0, 0.0, 1.0).unwrap();
        let v = stieltjes_integrate(|s| s, &id, 0.0, 1.0, 1e-3).unwrap();
        assert!((v - 0.5).abs() < 1e-8);
        let jumpy = BVFunction::builder(0.0, 1.0)
            .jump(0.5, 1.0)
            .build()
            .unwrap();
        assert!(stieltjes_integrate(|s| s, &jumpy, 0.0, 1.0, 1e-3).is_err());
        assert!(stieltjes_integrate(|s| s, &id, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn continuous_driver_reaches_e() {
        let l = BVFunction::linear(0.0, 1.0, 0.0, 1.0).unwrap();
        let f = ScalarField::affine(1.0, 0.0);
        let p = solve_limit(
            &f,
            &l,
            &JumpMeasure::lebesgue(),
            1.0,
            &[0.5],
            Default::default(),
        )
        .unwrap();
        assert!((p.final_value() - E).abs() < 1e-4);
        assert!((p.eval(0.5) - 0.5f64.exp()).abs() < 1e-4);
        assert!(p.residual(&f, &l) <= p.residual_tolerance());
    }

    #[test]
    fn single_jump_under_both_measures() {
        let l = BVFunction::builder(0.0, 1.0)
            .jump(0.5, 1.0)
            .build()
            .unwrap();
        let f = ScalarField::affine(1.0, 0.0);
        let flow = solve_limit(
            &f,
            &l,
            &JumpMeasure::lebesgue(),
            1.0,
            &[],
            Default::default(),
        )
        .unwrap();
        assert!((flow.final_value() - E).abs() < 1e-6);
        assert_eq!(flow.left_limit(0.5), 1.0);
        assert_eq!(flow.jump_epochs(), vec![0.5]);
        let ito = solve_limit(
            &f,
            &l,
            &JumpMeasure::dirac(0.0).unwrap(),
            1.0,
            &[],
            Default::default(),
        )
        .unwrap();
        assert_eq!(ito.final_value(), 2.0);
        assert_eq!(ito.eval(0.49), 1.0);
        assert_eq!(ito.eval(0.5), 2.0);
    }

    #[test]
    fn sample_times_must_lie_in_domain() {
        let l = BVFunction::linear(0.0, 1.0, 0.0, 1.0).unwrap();
        let f = ScalarField::affine(1.0, 0.0);
        let r = solve_limit(
            &f,
            &l,
            &JumpMeasure::lebesgue(),
            1.0,
            &[1.5],
            Default::default(),
        );
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn measure_is_irrelevant_without_jumps() {
        let l = BVFunction::builder(0.0, 2.0)
            .segment(0.0, 1.0, &[0.0, 1.0, -1.0])
            .segment(1.0, 2.0, &[0.0, -1.0, 0.0, 2.0])
            .build()
            .unwrap();
        let f = ScalarField::affine(-0.5, 1.0);
        let p1 = solve_limit(
            &f,
            &l,
            &JumpMeasure::lebesgue(),
            0.3,
            &[],
            Default::default(),
        )
        .unwrap();
        let p2 = solve_limit(
            &f,
            &l,
            &JumpMeasure::dirac(0.0).unwrap(),
            0.3,
            &[],
            Default::default(),
        )
        .unwrap();
        assert_eq!(p1.samples(), p2.samples());
    }
}
