//! Convolutions of the driver and of the coefficient field with the kernel.

use crate::bvfun::BVFunction;
use crate::field::ScalarField;
use crate::quad::gl32;

use super::profile::MollifierProfile;

/// `L_n(t) = int_0^{1/n} L(t + s) rho_n(s) ds`.
///
/// The jump part is summed exactly through the tail mass, `sum_i size_i
/// F_n(epoch_i - t)`. The continuous part uses the profile moments when one
/// cubic piece covers the whole window, and panel quadrature split at every
/// breakpoint and domain end otherwise.
pub fn mollify_driver(profile: &MollifierProfile, driver: &BVFunction, n: u64, t: f64) -> f64 {
    continuous_convolution(profile, driver, n, t) + jump_convolution(profile, driver, n, t)
}

/// Jump part of [`mollify_driver`].
#[inline]
pub fn jump_convolution(profile: &MollifierProfile, driver: &BVFunction, n: u64, t: f64) -> f64 {
    driver
        .jumps()
        .iter()
        .map(|j| j.size * profile.tail(n, j.epoch - t))
        .sum()
}

/// Continuous part of [`mollify_driver`].
pub fn continuous_convolution(
    profile: &MollifierProfile,
    driver: &BVFunction,
    n: u64,
    t: f64,
) -> f64 {
    let (a, b) = driver.domain();
    if driver.has_flat_continuous_part() {
        return driver.continuous_value(a);
    }
    let nf = n as f64;
    let width = 1.0 / nf;
    if t + width <= a {
        return driver.continuous_value(a);
    }
    if t >= b {
        return driver.continuous_value(b);
    }
    if let Some(seg) = driver.piece_covering(t, t + width) {
        let [_, c1, c2, c3] = seg.coeffs();
        let s = t - seg.start();
        let d1 = c1 + s * (2.0 * c2 + 3.0 * c3 * s);
        let d2 = c2 + 3.0 * c3 * s;
        return seg.value(t)
            + d1 * profile.moment(1) / nf
            + d2 * profile.moment(2) / (nf * nf)
            + c3 * profile.moment(3) / (nf * nf * nf);
    }
    let mut cuts: Vec<f64> = profile.panels().to_vec();
    for p in driver.breakpoints().into_iter().chain([a, b]) {
        let y = nf * (p - t);
        if y > 0.0 && y < 1.0 {
            cuts.push(y);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = gl32();
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        for (y, wt) in rule.mapped(w[0], w[1]) {
            acc += wt * profile.density(y) * driver.continuous_value(t + y / nf);
        }
    }
    acc
}

/// `f_n(t, x)`: the field smoothed by the tensor-product kernel
/// `rho_n(u) rho_n(v)` over `[0, 1/n]^2`.
pub fn mollify_field(
    profile: &MollifierProfile,
    field: &ScalarField,
    n: u64,
    t: f64,
    x: f64,
) -> f64 {
    let nf = n as f64;
    let rule = profile.rule();
    let mut acc = 0.0;
    for &(yu, wu) in rule {
        let mut inner = 0.0;
        for &(yv, wv) in rule {
            inner += wv * field.eval(t + yu / nf, x + yv / nf);
        }
        acc += wu * inner;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Harmonic;

    fn profiles() -> Vec<MollifierProfile> {
        vec![
            MollifierProfile::uniform(),
            MollifierProfile::triangular(),
            MollifierProfile::smooth_bump(),
        ]
    }

    #[test]
    fn linear_driver_shifts_by_mean() {
        let l = BVFunction::linear(0.0, 1.0, 0.0, 1.0).unwrap();
        for p in profiles() {
            for &t in &[0.1, 0.4, 0.9] {
                let got = mollify_driver(&p, &l, 20, t);
                assert!((got - (t + p.mean() / 20.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_driver_is_fixed() {
        let l = BVFunction::constant(0.0, 1.0, 2.5).unwrap();
        for p in profiles() {
            for &t in &[-1.0, 0.0, 0.3, 0.99, 4.0] {
                assert_eq!(mollify_driver(&p, &l, 9, t), 2.5);
            }
        }
    }

    #[test]
    fn pure_jump_is_scaled_tail() {
        let l = BVFunction::builder(0.0, 1.0)
            .jump(0.5, 1.5)
            .build()
            .unwrap();
        let p = MollifierProfile::triangular();
        for &t in &[0.3, 0.49, 0.495, 0.5, 0.6] {
            let got = mollify_driver(&p, &l, 50, t);
            assert!((got - 1.5 * p.tail(50, 0.5 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn windows_across_breakpoints_match_brute_force() {
        let l = BVFunction::builder(0.0, 1.0)
            .segment(0.0, 0.4, &[0.0, 1.0, -2.0])
            .segment(0.4, 1.0, &[0.08, -0.6, 0.0, 3.0])
            .build()
            .unwrap();
        for p in profiles() {
            for &t in &[-0.05, 0.37, 0.395, 0.4, 0.97, 0.999] {
                let got = mollify_driver(&p, &l, 10, t);
                let mut brute = 0.0;
                let rule = crate::quad::GaussLegendre::new(64);
                let m = 400;
                for i in 0..m {
                    let (lo, hi) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
                    brute += rule.integrate(lo, hi, |y| p.density(y) * l.eval(t + y / 10.0));
                }
                assert!(
                    (got - brute).abs() < 1e-8,
                    "{} t={t}: {got} vs {brute}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn field_mollification() {
        let p = MollifierProfile::uniform();
        let c = ScalarField::constant(3.0);
        assert!((mollify_field(&p, &c, 5, 0.2, 1.0) - 3.0).abs() < 1e-14);
        let id = ScalarField::affine(1.0, 0.0);
        assert!((mollify_field(&p, &id, 8, 0.0, 2.0) - (2.0 + 0.5 / 8.0)).abs() < 1e-14);
        let h = ScalarField::harmonic(Harmonic {
            amp: 2.0,
            omega_x: 3.0,
            omega_t: 5.0,
            phase: 0.1,
            slope: 0.5,
            offset: 0.0,
        });
        let bound = h.lipschitz() * 2f64.sqrt() / 16.0;
        for &(t, x) in &[(0.0, 0.0), (0.3, -1.0), (0.9, 2.0)] {
            assert!((mollify_field(&p, &h, 16, t, x) - h.eval(t, x)).abs() <= bound);
        }
    }
}
