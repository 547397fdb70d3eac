//! Base bumps `rho` on `[0, 1]` and the tail-mass functions they induce.
//!
//! For mesh index `n` the scaled kernel is `rho_n(s) = n rho(n s)`, supported
//! in `[0, 1/n]`. Its tail mass `F_n(x) = int_x^{1/n} rho_n` equals `G(n x)`,
//! where `G(y) = int_y^1 rho` is the tail of the base bump.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::gl32;

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const NORM_TOL: f64 = 1e-12;
const TABLE_CELLS: usize = 256;

#[derive(Clone)]
enum Shape {
    Uniform,
    /// Symmetric tent `4 min(y, 1 - y)`.
    Triangular,
    /// Numerically normalized density with a cumulative table on `nodes`.
    Tabulated {
        density: Density,
        scale: f64,
        nodes: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// A probability density on `[0, 1]` used to build the delta sequence.
#[derive(Clone)]
pub struct MollifierProfile {
    name: String,
    shape: Shape,
    /// Panel edges in `[0, 1]` at which the density may fail to be smooth.
    panels: Vec<f64>,
    /// `(y, rho(y) * weight)` pairs integrating against `rho` over `[0, 1]`.
    rule: Vec<(f64, f64)>,
    /// `int y^k rho(y) dy` for `k = 0..=3`.
    moments: [f64; 4],
    support_start: f64,
}

impl fmt::Debug for MollifierProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierProfile")
            .field("name", &self.name)
            .field("analytic", &self.is_analytic())
            .field("mean", &self.moments[1])
            .finish()
    }
}

impl MollifierProfile {
    /// `rho = 1` on `[0, 1]`.
    pub fn uniform() -> Self {
        Self::assemble("uniform", Shape::Uniform, vec![0.0, 1.0], 0.0)
            .expect("uniform profile is normalized")
    }

    /// Symmetric tent `rho(y) = 4 min(y, 1 - y)`.
    pub fn triangular() -> Self {
        Self::assemble("triangular", Shape::Triangular, vec![0.0, 0.5, 1.0], 0.0)
            .expect("triangular profile is normalized")
    }

    /// `rho(y) proportional to exp(-1 / (y (1 - y)))`, the standard smooth bump.
    pub fn smooth_bump() -> Self {
        let raw = |y: f64| {
            if y <= 0.0 || y >= 1.0 {
                0.0
            } else {
                (-1.0 / (y * (1.0 - y))).exp()
            }
        };
        let panels: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        Self::tabulated("smooth-bump", Arc::new(raw), panels).expect("smooth bump normalizes")
    }

    /// Any nonnegative density on `[0, 1]`, normalized numerically.
    ///
    /// `breaks` lists interior points where the density is not smooth; the
    /// quadrature panels are split there. The density may vanish on whole
    /// subintervals, in which case the tail inverse returns the right end of
    /// each plateau.
    pub fn from_density<F>(name: &str, density: F, breaks: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut panels = vec![0.0, 1.0];
        for &b in breaks {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidProfile(format!(
                    "{name}: break point {b} is not inside (0, 1)"
                )));
            }
            panels.push(b);
        }
        panels.sort_by(f64::total_cmp);
        panels.dedup();
        Self::tabulated(name, Arc::new(density), panels)
    }

    fn tabulated(name: &str, density: Density, panels: Vec<f64>) -> Result<Self> {
        let mut nodes: Vec<f64> = (0..=TABLE_CELLS)
            .map(|i| i as f64 / TABLE_CELLS as f64)
            .chain(panels.iter().copied())
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let rule = gl32();
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            let piece = rule.integrate(w[0], w[1], |y| density(y));
            if !(piece >= 0.0) || !piece.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "{name}: density is negative or not finite on [{}, {}]",
                    w[0], w[1]
                )));
            }
            acc += piece;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "{name}: density has zero mass"
            )));
        }
        let scale = 1.0 / acc;
        for c in &mut cumulative {
            *c *= scale;
        }
        let start_idx = cumulative.iter().position(|&c| c > 0.0).unwrap_or(1);
        let support_start = nodes[start_idx - 1];
        let shape = Shape::Tabulated {
            density,
            scale,
            nodes,
            cumulative,
        };
        Self::assemble(name, shape, panels, support_start)
    }

    fn assemble(name: &str, shape: Shape, panels: Vec<f64>, support_start: f64) -> Result<Self> {
        let mut profile = Self {
            name: name.to_string(),
            shape,
            panels,
            rule: Vec::new(),
            moments: [0.0; 4],
            support_start,
        };
        let mut rule = Vec::new();
        for w in profile.panels.windows(2) {
            for (y, wt) in gl32().mapped(w[0], w[1]) {
                let r = profile.density(y);
                if r < 0.0 || !r.is_finite() {
                    return Err(Error::InvalidProfile(format!(
                        "{name}: density is negative or not finite at {y}"
                    )));
                }
                rule.push((y, wt * r));
            }
        }
        let mut moments = [0.0; 4];
        for &(y, w) in &rule {
            let mut p = w;
            for m in &mut moments {
                *m += p;
                p *= y;
            }
        }
        if (moments[0] - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidProfile(format!(
                "{name}: density integrates to {} instead of 1; add break points",
                moments[0]
            )));
        }
        profile.rule = rule;
        profile.moments = moments;
        Ok(profile)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// True when the tail mass and its inverse have closed forms.
    pub fn is_analytic(&self) -> bool {
        matches!(self.shape, Shape::Uniform | Shape::Triangular)
    }

    /// Normalized density `rho(y)`; zero outside `[0, 1]`.
    pub fn density(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Triangular => 4.0 * y.min(1.0 - y),
            Shape::Tabulated { density, scale, .. } => density(y) * scale,
        }
    }

    /// Panel edges of the built-in quadrature rule.
    pub fn panels(&self) -> &[f64] {
        &self.panels
    }

    /// Quadrature pairs `(y, w)` with `sum w g(y) ~ int_0^1 g rho`.
    pub fn rule(&self) -> &[(f64, f64)] {
        &self.rule
    }

    /// `int_0^1 y^k rho(y) dy` for `k <= 3`.
    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k]
    }

    /// Mean of the base bump, `int_0^1 y rho(y) dy`.
    pub fn mean(&self) -> f64 {
        self.moments[1]
    }

    /// Base tail `G(y) = int_y^1 rho`; 1 for `y <= 0` and 0 for `y >= 1`.
    pub fn base_tail(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= 0.0 {
            return 1.0;
        }
        if y >= 1.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0 - y,
            Shape::Triangular => {
                if y < 0.5 {
                    1.0 - 2.0 * y * y
                } else {
                    let r = 1.0 - y;
                    2.0 * r * r
                }
            }
            Shape::Tabulated {
                density,
                scale,
                nodes,
                cumulative,
            } => {
                let i = nodes.partition_point(|&p| p <= y).saturating_sub(1);
                let partial = if y > nodes[i] {
                    gl32().integrate(nodes[i], y, |s| density(s)) * scale
                } else {
                    0.0
                };
                (1.0 - cumulative[i] - partial).clamp(0.0, 1.0)
            }
        }
    }

    /// Tail mass of the scaled kernel, `F_n(x) = int_x^{1/n} rho_n`.
    /// Accepts infinite `x`.
    #[inline]
    pub fn tail(&self, n: u64, x: f64) -> f64 {
        self.base_tail(n as f64 * x)
    }

    /// Generalized inverse of the base tail: `sup {y : G(y) >= u}` over `[0, 1]`,
    /// with `+inf` for `u <= 0`.
    pub fn base_tail_inverse(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 {
            return f64::INFINITY;
        }
        if u >= 1.0 {
            return self.support_start;
        }
        match &self.shape {
            Shape::Uniform => 1.0 - u,
            Shape::Triangular => {
                if u <= 0.5 {
                    1.0 - (0.5 * u).sqrt()
                } else {
                    (0.5 * (1.0 - u)).sqrt()
                }
            }
            Shape::Tabulated { .. } => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.base_tail(mid) >= u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// Generalized inverse of `F_n`: the supremum of the level set at `u`.
    /// Returns `+inf` for `u = 0`.
    #[inline]
    pub fn tail_inverse(&self, n: u64, u: f64) -> f64 {
        self.base_tail_inverse(u) / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<MollifierProfile> {
        vec![
            MollifierProfile::uniform(),
            MollifierProfile::triangular(),
            MollifierProfile::smooth_bump(),
        ]
    }

    #[test]
    fn tail_examples() {
        let p = MollifierProfile::uniform();
        assert_eq!(p.tail(4, 0.125), 0.5);
        for p in all() {
            assert_eq!(p.tail(7, -1.0), 1.0);
            assert_eq!(p.tail(7, 1.0 / 7.0), 0.0);
            assert_eq!(p.tail(7, f64::NEG_INFINITY), 1.0);
            assert_eq!(p.tail(7, f64::INFINITY), 0.0);
        }
    }

    #[test]
    fn inverse_examples() {
        let p = MollifierProfile::uniform();
        assert_eq!(p.tail_inverse(4, 0.5), 0.125);
        for p in all() {
            assert_eq!(p.tail_inverse(4, 0.0), f64::INFINITY);
            assert_eq!(p.tail_inverse(4, 1.0), 0.0);
        }
    }

    #[test]
    fn normalization_and_moments() {
        for p in all() {
            let total: f64 = p.rule().iter().map(|r| r.1).sum();
            assert!((total - 1.0).abs() < 1e-12, "{}", p.name());
            // Every built-in bump is symmetric about 1/2.
            assert!((p.mean() - 0.5).abs() < 1e-12, "{}", p.name());
        }
        let t = MollifierProfile::triangular();
        // int y^2 * tent = 7/24
        assert!((t.moment(2) - 7.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn triangular_tail_matches_direct_integration() {
        let p = MollifierProfile::triangular();
        for i in 0..=20 {
            let y = i as f64 / 20.0;
            let direct = gl32().integrate(y, 0.5_f64.max(y), |s| p.density(s))
                + gl32().integrate(0.5_f64.max(y), 1.0, |s| p.density(s));
            assert!((p.base_tail(y) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn bump_tail_is_symmetric_and_inverts() {
        let p = MollifierProfile::smooth_bump();
        for i in 1..20 {
            let y = i as f64 / 20.0;
            assert!((p.base_tail(y) + p.base_tail(1.0 - y) - 1.0).abs() < 1e-12);
            let u = p.base_tail(y);
            assert!((p.base_tail(p.base_tail_inverse(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn plateau_inverse_returns_right_end() {
        // Mass on [0, 0.3] and [0.6, 1], none in between.
        let p = MollifierProfile::from_density(
            "gapped",
            |y| if (0.3..0.6).contains(&y) { 0.0 } else { 1.0 },
            &[0.3, 0.6],
        )
        .unwrap();
        let level = p.base_tail(0.45);
        assert!((level - 4.0 / 7.0).abs() < 1e-12);
        let y = p.base_tail_inverse(level);
        assert!((y - 0.6).abs() < 1e-12, "{y}");
    }

    #[test]
    fn support_start_is_inverse_at_one() {
        let p =
            MollifierProfile::from_density("late", |y| if y < 0.25 { 0.0 } else { 1.0 }, &[0.25])
                .unwrap();
        assert!((p.base_tail_inverse(1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_densities() {
        assert!(MollifierProfile::from_density("neg", |y| y - 0.5, &[]).is_err());
        assert!(MollifierProfile::from_density("zero", |_| 0.0, &[]).is_err());
        assert!(MollifierProfile::from_density("edge", |_| 1.0, &[1.0]).is_err());
    }
}
