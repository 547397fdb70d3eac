//! Coefficient fields: `f(t, x)` for the equation and `z(x)` for jump maps.
//!
//! Every field carries a Lipschitz constant and a growth constant `K` with
//! `|f(t, x)| <= K (1 + |x|)`. For [`ScalarField`] the Lipschitz constant is
//! jointly in `(t, x)` under the Euclidean norm, which is what the mollifier
//! error bound needs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const SAMPLE_TOL: f64 = 1e-9;

/// `amp * sin(omega_x * x + omega_t * t + phase) + slope * x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub amp: f64,
    pub omega_x: f64,
    pub omega_t: f64,
    pub phase: f64,
    pub slope: f64,
    pub offset: f64,
}

#[derive(Clone)]
enum Rule {
    Constant(f64),
    Affine { slope: f64, intercept: f64 },
    Harmonic(Harmonic),
    Ramp { level: f64, eps: f64 },
    Custom { name: String, f: Fn2 },
}

/// Lipschitz field `f(t, x)` of bounded growth.
#[derive(Clone)]
pub struct ScalarField {
    rule: Rule,
    lipschitz: f64,
    growth: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name())
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .finish()
    }
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        Self {
            rule: Rule::Constant(value),
            lipschitz: 0.0,
            growth: value.abs(),
        }
    }

    /// `f(t, x) = slope * x + intercept`.
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self {
            rule: Rule::Affine { slope, intercept },
            lipschitz: slope.abs(),
            growth: slope.abs().max(intercept.abs()),
        }
    }

    pub fn harmonic(h: Harmonic) -> Self {
        let lipschitz = h.amp.abs() * h.omega_x.hypot(h.omega_t) + h.slope.abs();
        let growth = (h.amp.abs() + h.offset.abs()).max(h.slope.abs());
        Self {
            rule: Rule::Harmonic(h),
            lipschitz,
            growth,
        }
    }

    /// Time-independent ramp: 1 below `x_ref + q`, linear down to 0 at `x_ref + q + eps`.
    pub fn ramp(q: f64, eps: f64, x_ref: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidField(format!(
                "ramp width {eps} must be positive"
            )));
        }
        Ok(Self {
            rule: Rule::Ramp {
                level: x_ref + q,
                eps,
            },
            lipschitz: 1.0 / eps,
            growth: 1.0,
        })
    }

    /// User-supplied field with declared constants, spot-checked on a sample grid.
    pub fn custom<F>(name: &str, f: F, lipschitz: f64, growth: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let field = Self {
            rule: Rule::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
            lipschitz,
            growth,
        };
        field.spot_check()?;
        Ok(field)
    }

    /// Replaces the declared constants. They may only be loosened relative to
    /// what the rule implies, and are spot-checked.
    pub fn with_constants(mut self, lipschitz: f64, growth: f64) -> Result<Self> {
        self.lipschitz = lipschitz;
        self.growth = growth;
        self.spot_check()?;
        Ok(self)
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match &self.rule {
            Rule::Constant(c) => *c,
            Rule::Affine { slope, intercept } => slope * x + intercept,
            Rule::Harmonic(h) => {
                h.amp * (h.omega_x * x + h.omega_t * t + h.phase).sin() + h.slope * x + h.offset
            }
            Rule::Ramp { level, eps } => ramp_value(x, *level, *eps),
            Rule::Custom { f, .. } => f(t, x),
        }
    }

    /// Lipschitz constant `M`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Growth constant `K`.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn name(&self) -> String {
        match &self.rule {
            Rule::Constant(c) => format!("constant({c})"),
            Rule::Affine { slope, intercept } => format!("affine({slope}, {intercept})"),
            Rule::Harmonic(_) => "harmonic".to_string(),
            Rule::Ramp { level, eps } => format!("ramp({level}, {eps})"),
            Rule::Custom { name, .. } => name.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rule, Rule::Constant(c) if c == 0.0)
    }

    /// `x -> scale * f(t, x)` as a state-only field.
    pub fn frozen(&self, t: f64, scale: f64) -> StateField {
        let this = self.clone();
        let kinks = match self.rule {
            Rule::Ramp { level, eps } => vec![level, level + eps],
            _ => Vec::new(),
        };
        StateField {
            name: format!("{} * {}", scale, self.name()),
            f: Arc::new(move |x| scale * this.eval(t, x)),
            lipschitz: scale.abs() * self.lipschitz,
            growth: scale.abs() * self.growth,
            kinks,
        }
    }

    fn spot_check(&self) -> Result<()> {
        if !(self.lipschitz >= 0.0 && self.growth >= 0.0) {
            return Err(Error::InvalidField(format!(
                "{}: constants must be nonnegative",
                self.name()
            )));
        }
        for &t in &[-1.0, 0.0, 0.3, 0.5, 1.0, 2.0] {
            let g = |x: f64| self.eval(t, x);
            check_samples(&self.name(), g, self.lipschitz, self.growth)?;
        }
        Ok(())
    }
}

/// State-only field `z(x)` with Lipschitz constant `K1` and growth constant `K2`.
#[derive(Clone)]
pub struct StateField {
    name: String,
    f: Fn1,
    lipschitz: f64,
    growth: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for StateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateField")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .finish()
    }
}

impl StateField {
    /// Builds a field from a closure; the declared constants are spot-checked
    /// and a field that violates them is rejected.
    pub fn new<F>(name: &str, f: F, lipschitz: f64, growth: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && growth >= 0.0) {
            return Err(Error::InvalidField(format!(
                "{name}: constants must be nonnegative"
            )));
        }
        let field = Self {
            name: name.to_string(),
            f: Arc::new(f),
            lipschitz,
            growth,
            kinks: Vec::new(),
        };
        check_samples(name, |x| (field.f)(x), lipschitz, growth)?;
        Ok(field)
    }

    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            f: Arc::new(|_| 0.0),
            lipschitz: 0.0,
            growth: 0.0,
            kinks: Vec::new(),
        }
    }

    /// `z(x) = c * x`.
    pub fn linear(c: f64) -> Self {
        Self {
            name: format!("{c} * x"),
            f: Arc::new(move |x| c * x),
            lipschitz: c.abs(),
            growth: c.abs(),
            kinks: Vec::new(),
        }
    }

    /// The piecewise-linear ramp: 1 for `x <= x_ref + q`, falling linearly to 0
    /// at `x_ref + q + eps`, and 0 beyond. Lipschitz constant `1 / eps`.
    pub fn ramp(q: f64, eps: f64, x_ref: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidField(format!(
                "ramp width {eps} must be positive"
            )));
        }
        let level = x_ref + q;
        Ok(Self {
            name: format!("ramp({q}, {eps}; {x_ref})"),
            f: Arc::new(move |x| ramp_value(x, level, eps)),
            lipschitz: 1.0 / eps,
            growth: 1.0,
            kinks: vec![level, level + eps],
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// States where the field is known to be non-smooth. The jump-map solver
    /// lands its substeps on these points.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Declares the non-smooth points of a closure-built field.
    pub fn with_kinks(mut self, mut kinks: Vec<f64>) -> Self {
        kinks.retain(|k| k.is_finite());
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        self.kinks = kinks;
        self
    }
}

#[inline]
fn ramp_value(x: f64, level: f64, eps: f64) -> f64 {
    if x <= level {
        1.0
    } else if x <= level + eps {
        (level + eps - x) / eps
    } else {
        0.0
    }
}

fn check_samples<G: Fn(f64) -> f64>(name: &str, g: G, lipschitz: f64, growth: f64) -> Result<()> {
    const N: usize = 800;
    let (lo, hi) = (-20.0, 20.0);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=N {
        let x = lo + (hi - lo) * i as f64 / N as f64;
        let y = g(x);
        if !y.is_finite() {
            return Err(Error::InvalidField(format!(
                "{name}: non-finite value at x = {x}"
            )));
        }
        if y.abs() > growth * (1.0 + x.abs()) * (1.0 + SAMPLE_TOL) + 1e-12 {
            return Err(Error::InvalidField(format!(
                "{name}: |f({x})| = {} exceeds growth bound with K = {growth}",
                y.abs()
            )));
        }
        if let Some((px, py)) = prev {
            if (y - py).abs() > lipschitz * (x - px) * (1.0 + SAMPLE_TOL) + 1e-12 {
                return Err(Error::InvalidField(format!(
                    "{name}: Lipschitz bound {lipschitz} violated between x = {px} and {x}"
                )));
            }
        }
        prev = Some((x, y));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_examples() {
        let z = StateField::ramp(0.3, 0.2, 1.0).unwrap();
        assert_eq!(z.eval(1.3), 1.0);
        assert!(z.eval(1.5).abs() < 1e-12);
        assert!((z.eval(1.4) - 0.5).abs() < 1e-12);
        assert_eq!(z.eval(-7.0), 1.0);
        assert_eq!(z.eval(9.0), 0.0);
        assert!((z.lipschitz() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_lipschitz_is_rejected() {
        let r = StateField::new("sqrt", |x: f64| x.abs().sqrt(), 1.0, 1.0);
        assert!(r.is_err());
        let r = StateField::new("cube", |x: f64| x * x * x, 100.0, 100.0);
        assert!(r.is_err());
        let ok = StateField::new("tanh", f64::tanh, 1.0, 1.0);
        assert!(ok.is_ok());
    }

    #[test]
    fn declared_constants_must_hold() {
        assert!(ScalarField::affine(2.0, 0.0)
            .with_constants(1.0, 2.0)
            .is_err());
        assert!(ScalarField::affine(2.0, 0.0)
            .with_constants(3.0, 3.0)
            .is_ok());
        assert!(ScalarField::custom("bad", |_, x| 5.0 * x, 1.0, 5.0).is_err());
    }

    #[test]
    fn harmonic_constants_bound_samples() {
        let f = ScalarField::harmonic(Harmonic {
            amp: 1.5,
            omega_x: 2.0,
            omega_t: 1.0,
            phase: 0.3,
            slope: -0.5,
            offset: 0.25,
        });
        assert!(f.clone().with_constants(f.lipschitz(), f.growth()).is_ok());
    }

    #[test]
    fn frozen_scales_constants() {
        let f = ScalarField::affine(1.0, 0.0);
        let z = f.frozen(0.5, -2.0);
        assert_eq!(z.eval(3.0), -6.0);
        assert_eq!(z.lipschitz(), 2.0);
        assert_eq!(z.growth(), 2.0);
    }
}
