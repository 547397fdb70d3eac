//! The jump-map equation `phi(u) = x + int_[0,u) z(phi(s)) mu(ds)`.
//!
//! The integral runs over the half-open range `[0, u)` with the integrand
//! evaluated on the left. Point masses therefore act as explicit Euler updates
//! `phi <- phi + z(phi) m`, and a point mass sitting exactly at `u` does not
//! contribute to `phi(u)`.

use crate::error::{Error, Result};
use crate::field::StateField;

use super::measure::{JumpMeasure, XiGrid};
use super::sigma::SigmaG;

/// Largest Lebesgue mass covered by one RK4 substep.
pub const RK4_SUBSTEP: f64 = 1e-3;

/// Solves the jump-map equation at `u` (clamped to `[0, 1]`).
pub fn phi_solve(z: &StateField, x: f64, u: f64, mu: &JumpMeasure) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let atoms: Vec<(f64, f64)> = mu.atoms().iter().copied().filter(|a| a.0 < u).collect();

    // Lebesgue pieces clipped to [0, u] and split at interior atoms.
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(lo, hi) in mu.segments() {
        let hi = hi.min(u);
        if hi <= lo {
            continue;
        }
        let mut start = lo;
        for &(v, _) in &atoms {
            if v > start && v < hi {
                pieces.push((start, v));
                start = v;
            }
        }
        pieces.push((start, hi));
    }

    // Merge by position; an atom is applied before a piece that starts at
    // its location and after a piece that ends there.
    let mut phi = x;
    let (mut ia, mut ip) = (0, 0);
    while ia < atoms.len() || ip < pieces.len() {
        let take_atom = match (atoms.get(ia), pieces.get(ip)) {
            (Some(a), Some(p)) => a.0 <= p.0,
            (Some(_), None) => true,
            _ => false,
        };
        if take_atom {
            phi += z.eval(phi) * atoms[ia].1;
            ia += 1;
        } else {
            let (lo, hi) = pieces[ip];
            phi = flow(z, phi, hi - lo);
            ip += 1;
        }
    }
    phi
}

/// Time-`len` flow of `dphi/dv = z(phi)` by fixed-step RK4.
pub fn flow(z: &StateField, x: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return x;
    }
    let steps = (len / RK4_SUBSTEP).ceil().max(1.0) as usize;
    let dt = len / steps as f64;
    let mut phi = x;
    for _ in 0..steps {
        phi = step_across_kinks(z, phi, dt, 0);
    }
    phi
}

#[inline]
fn rk4(z: &StateField, p: f64, h: f64) -> f64 {
    let k1 = z.eval(p);
    let k2 = z.eval(p + 0.5 * h * k1);
    let k3 = z.eval(p + 0.5 * h * k2);
    let k4 = z.eval(p + h * k3);
    p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One RK4 step that stops on any declared kink it would cross and restarts
/// from there, so no stage straddles a corner of `z`.
fn step_across_kinks(z: &StateField, p: f64, h: f64, depth: usize) -> f64 {
    let next = rk4(z, p, h);
    if depth >= 8 {
        return next;
    }
    let crossed = z
        .kinks()
        .iter()
        .copied()
        .find(|&k| (p < k && k < next) || (next < k && k < p));
    let Some(k) = crossed else {
        return next;
    };
    let rising = next > p;
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let q = rk4(z, p, mid);
        if (q >= k) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let at = rk4(z, p, hi);
    step_across_kinks(z, at, h - hi, depth + 1)
}

/// `phi_0 = x`, `phi_{k+1} = phi_k + z(phi_k) (xi_{k+1} - xi_k)`.
pub fn phi_recursion(z: &StateField, x: f64, grid: &XiGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut phi = x;
    out.push(phi);
    for w in grid.values().windows(2) {
        phi += z.eval(phi) * (w[1] - w[0]);
        out.push(phi);
    }
    out
}

/// The ramp field that equals 1 up to `x_ref + q`, falls linearly to 0 over
/// a width `eps`, and vanishes beyond. Its Lipschitz constant is `1 / eps`.
pub fn ramp_z(q: f64, eps: f64, x_ref: f64) -> Result<StateField> {
    StateField::ramp(q, eps, x_ref)
}

/// Closed-form solution of the jump-map equation for `z = ramp_z(q, eps, x)`
/// under the measure generated by `sigma`.
///
/// Requires `q >= 0` and `sigma(q) = q`; when `q` sits inside a plateau the
/// state overshoots the ramp start at the plateau's atom and the closed form
/// no longer applies.
pub fn phi_explicit_ramp(sigma: &SigmaG, q: f64, eps: f64, x: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ramp width {eps} must be positive"
        )));
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ramp start {q} must be nonnegative"
        )));
    }
    if q <= 1.0 && sigma.eval(q) != q {
        return Err(Error::InvalidArgument(format!(
            "ramp start {q} lies inside a plateau of sigma (sigma(q) = {})",
            sigma.eval(q)
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} is outside [0, 1]")));
    }
    if t <= q {
        return Ok(x + sigma.eval(t));
    }
    let w = sigma
        .intervals()
        .iter()
        .find(|iv| iv.0 >= q && iv.1 - iv.0 >= eps)
        .map_or(1.0, |iv| iv.0.min(1.0));
    // Product over atoms in [q, upto) or [q, upto], folded into one exponent
    // where the factor is positive.
    let tail = |upto: f64, closed: bool| -> f64 {
        let mut factor = 1.0;
        let mut exponent = -(sigma.eval(upto) - q) / eps;
        for &(a, b) in sigma.intervals() {
            let inside = a >= q && (a < upto || (closed && a == upto));
            if inside {
                let m = b - a;
                factor *= 1.0 - m / eps;
                exponent += m / eps;
            }
        }
        factor * exponent.exp()
    };
    if t <= w {
        Ok(x + q + eps - eps * tail(t, false))
    } else {
        let dw = sigma.jump_at(w);
        Ok(x + q + eps - eps * (-dw / eps).exp() * tail(w, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_solve_examples() {
        let z = StateField::new("tanh", f64::tanh, 1.0, 1.0).unwrap();
        let atom = JumpMeasure::dirac(0.0).unwrap();
        let got = phi_solve(&z, 0.7, 0.7, &atom);
        assert!((got - (0.7 + 0.7f64.tanh())).abs() < 1e-15);

        let lin = StateField::linear(0.8);
        let got = phi_solve(&lin, 1.5, 1.0, &JumpMeasure::lebesgue());
        assert!((got - 1.5 * 0.8f64.exp()).abs() < 1e-12);

        let zero = StateField::zero();
        for mu in [JumpMeasure::lebesgue(), atom.clone()] {
            assert_eq!(phi_solve(&zero, 2.0, 0.5, &mu), 2.0);
        }
    }

    #[test]
    fn atom_at_u_is_excluded() {
        let lin = StateField::linear(1.0);
        let mu = JumpMeasure::dirac(0.4).unwrap();
        assert_eq!(phi_solve(&lin, 1.0, 0.4, &mu), 1.0);
        assert_eq!(phi_solve(&lin, 1.0, 0.400001, &mu), 2.0);
    }

    #[test]
    fn mixed_measure_orders_events() {
        // Lebesgue on [0, 0.2] and [0.5, 1] with an atom of 0.3 at 0.2.
        let mu = JumpMeasure::from_sigma(&SigmaG::new(vec![(0.2, 0.5)]).unwrap());
        let c = 0.5;
        let got = phi_solve(&StateField::linear(c), 1.0, 1.0, &mu);
        let expected = (c * 0.2f64).exp() * (1.0 + c * 0.3) * (c * 0.5f64).exp();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn recursion_examples() {
        let g = XiGrid::new(vec![0.0, 1.0, 1.0]).unwrap();
        let out = phi_recursion(&StateField::linear(0.5), 2.0, &g);
        assert_eq!(out, vec![2.0, 3.0, 3.0]);
        let out = phi_recursion(&StateField::zero(), 2.0, &XiGrid::uniform(5).unwrap());
        assert!(out.iter().all(|&v| v == 2.0));
        let n = 10_000;
        let out = phi_recursion(&StateField::linear(1.0), 1.0, &XiGrid::uniform(n).unwrap());
        assert!((out[n] - std::f64::consts::E).abs() / std::f64::consts::E < 1e-3);
    }

    #[test]
    fn ramp_values() {
        let z = ramp_z(0.25, 0.5, 1.0).unwrap();
        assert_eq!(z.eval(1.25), 1.0);
        assert_eq!(z.eval(1.75), 0.0);
        assert!((z.eval(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn explicit_ramp_cases() {
        let id = SigmaG::identity();
        assert_eq!(phi_explicit_ramp(&id, 0.5, 0.1, 1.0, 0.3).unwrap(), 1.3);
        let got = phi_explicit_ramp(&id, 0.25, 0.2, 1.0, 0.75).unwrap();
        let expected = 1.0 + 0.25 + 0.2 - 0.2 * (-(0.75 - 0.25) / 0.2f64).exp();
        assert!((got - expected).abs() < 1e-15);
        let s = SigmaG::new(vec![(0.2, 0.5)]).unwrap();
        assert!(phi_explicit_ramp(&s, 0.3, 0.1, 0.0, 0.5).is_err());
    }

    #[test]
    fn explicit_ramp_matches_solver_with_big_atom() {
        // Atom of mass 0.3 at 0.2 exceeds eps, so the state freezes after it.
        let s = SigmaG::new(vec![(0.2, 0.5)]).unwrap();
        let mu = JumpMeasure::from_sigma(&s);
        for &(q, eps) in &[(0.0, 0.1), (0.1, 0.25), (0.2, 0.05), (0.6, 0.2)] {
            let z = ramp_z(q, eps, 0.5).unwrap();
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                let oracle = phi_explicit_ramp(&s, q, eps, 0.5, t).unwrap();
                let solved = phi_solve(&z, 0.5, t, &mu);
                assert!(
                    (oracle - solved).abs() < 1e-8,
                    "q={q} eps={eps} t={t}: {oracle} vs {solved}"
                );
            }
        }
    }
}
