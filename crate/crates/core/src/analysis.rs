//! Convergence experiments: L1 distances between scheme and limit paths,
//! error tables along a schedule, and the t-averaged staircase gap.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::bvfun::BVFunction;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jumpmap::{phi_solve, sigma_staircase, JumpMeasure, SigmaG};
use crate::limit::{solve_limit, LimitOptions, LimitPath};
use crate::mollifier::{MollifierProfile, Schedule};
use crate::scheme::{
    discrete_jump_map, jump_grid, GridPath, Scheme, SchemeOptions, DEFAULT_OFFSETS,
};

const DOMAIN_TOL: f64 = 1e-12;

/// A real path on a segment, smooth away from finitely many points.
pub trait TimePath {
    fn domain(&self) -> (f64, f64);
    fn value(&self, t: f64) -> f64;
    /// Sorted points where the path may jump.
    fn discontinuities(&self) -> Vec<f64>;
}

impl TimePath for LimitPath {
    fn domain(&self) -> (f64, f64) {
        LimitPath::domain(self)
    }

    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn discontinuities(&self) -> Vec<f64> {
        self.jump_epochs()
    }
}

/// A closure viewed as a path, for exact reference solutions.
pub struct FnPath<F> {
    domain: (f64, f64),
    f: F,
    jumps: Vec<f64>,
}

impl<F: Fn(f64) -> f64> FnPath<F> {
    pub fn new(a: f64, b: f64, f: F) -> Self {
        Self {
            domain: (a, b),
            f,
            jumps: Vec::new(),
        }
    }

    pub fn with_jumps(mut self, mut jumps: Vec<f64>) -> Self {
        jumps.sort_by(f64::total_cmp);
        self.jumps = jumps;
        self
    }
}

impl<F: Fn(f64) -> f64> TimePath for FnPath<F> {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn discontinuities(&self) -> Vec<f64> {
        self.jumps.clone()
    }
}

/// `int_a^b |p(t) - q(t)| dt` by the midpoint rule on the common refinement
/// of the snapping cells of `p` and the discontinuities of `q`.
pub fn l1_distance<Q: TimePath + ?Sized>(p: &GridPath, q: &Q) -> Result<f64> {
    let (a, b) = p.domain();
    let (qa, qb) = q.domain();
    if (a - qa).abs() > DOMAIN_TOL * (1.0 + a.abs())
        || (b - qb).abs() > DOMAIN_TOL * (1.0 + b.abs())
    {
        return Err(Error::DomainMismatch {
            a1: a,
            b1: b,
            a2: qa,
            b2: qb,
        });
    }
    let w = p.cell_width();
    let jumps: Vec<f64> = q
        .discontinuities()
        .into_iter()
        .filter(|&s| s > a && s < b)
        .collect();
    let mut next_jump = 0;
    let mut acc = 0.0;
    for c in 0..p.cell_count() {
        let lo = (a + (c as f64 - 0.5) * w).max(a);
        let hi = (a + (c as f64 + 0.5) * w).min(b);
        if hi <= lo {
            continue;
        }
        let pv = p.cell_value(c);
        let mut start = lo;
        while next_jump < jumps.len() && jumps[next_jump] <= lo {
            next_jump += 1;
        }
        let mut k = next_jump;
        while k < jumps.len() && jumps[k] < hi {
            let s = jumps[k];
            acc += (pv - q.value(0.5 * (start + s))).abs() * (s - start);
            start = s;
            k += 1;
        }
        acc += (pv - q.value(0.5 * (start + hi))).abs() * (hi - start);
    }
    Ok(acc)
}

/// `int_a^b |q(t)| dt` by the midpoint rule with `cells` cells per smooth piece.
pub fn l1_norm<Q: TimePath + ?Sized>(q: &Q, cells: usize) -> f64 {
    let (a, b) = q.domain();
    let mut cuts = vec![a];
    cuts.extend(q.discontinuities().into_iter().filter(|&s| s > a && s < b));
    cuts.push(b);
    let cells = cells.max(1);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let step = (w[1] - w[0]) / cells as f64;
        for i in 0..cells {
            acc += q.value(w[0] + (i as f64 + 0.5) * step).abs() * step;
        }
    }
    acc
}

/// "Decreasing" for noisy error sequences: the last value is the minimum and
/// no value exceeds its predecessor by more than 10% of that predecessor.
pub fn is_decreasing(values: &[f64]) -> bool {
    let Some(&last) = values.last() else {
        return false;
    };
    values.iter().all(|&v| last <= v) && values.windows(2).all(|w| w[1] <= 1.1 * w[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub n_offsets: usize,
    pub scheme: SchemeOptions,
    pub limit: LimitOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            n_offsets: DEFAULT_OFFSETS,
            scheme: SchemeOptions::default(),
            limit: LimitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub n: u64,
    pub h: f64,
    pub l1_error: f64,
    /// `l1_error` divided by the L1 norm of the limit path.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub limit_norm: f64,
    pub limit_final: f64,
    pub decreasing: bool,
}

impl StudyTable {
    pub fn final_relative(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.relative)
    }

    /// Rows as `(n, h_n, metric, value)`.
    pub fn metric_rows(&self) -> Vec<MetricRow> {
        self.rows
            .iter()
            .flat_map(|r| {
                [
                    MetricRow::new(r.n, r.h, "l1_error", r.l1_error),
                    MetricRow::new(r.n, r.h, "relative_l1_error", r.relative),
                ]
            })
            .collect()
    }
}

/// Scheme-versus-limit L1 errors along a schedule, with the limit solved
/// under `mu`. Rows are computed concurrently and returned in mesh order.
pub fn convergence_study(
    field: &ScalarField,
    driver: &BVFunction,
    profile: &MollifierProfile,
    sched: &Schedule,
    mu: &JumpMeasure,
    x0: f64,
    opts: &StudyOptions,
) -> Result<StudyTable> {
    if sched.len() < 3 {
        return Err(Error::InvalidSchedule(format!(
            "a convergence study needs at least 3 meshes, got {}",
            sched.len()
        )));
    }
    let limit = solve_limit(field, driver, mu, x0, &[], opts.limit)?;
    let norm = l1_norm(&limit, 1 << 14);
    let rows = sched
        .entries()
        .into_par_iter()
        .map(|(n, h)| {
            let scheme = Scheme::with_options(field, driver, profile, n, h, opts.scheme.clone())?;
            let path = scheme.solve_grid(|_| x0, opts.n_offsets)?;
            let err = l1_distance(&path, &limit)?;
            Ok(StudyRow {
                n,
                h,
                l1_error: err,
                relative: if norm > 0.0 { err / norm } else { err },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.l1_error).collect();
    Ok(StudyTable {
        decreasing: is_decreasing(&errors),
        rows,
        limit_norm: norm,
        limit_final: limit.final_value(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaGapRow {
    pub n: u64,
    pub h: f64,
    pub u: f64,
    /// `int_a^b |sigma^n(u, t) - sigma(u)| dt`, averaged over lattice offsets.
    pub gap: f64,
}

/// For each mesh and probe, the time integral of the gap between the
/// staircase read of the jump partition and `sigma(u)`. The partition at time
/// `t` depends only on the lattice offset of `t`, so the integral is
/// `(b - a)` times the mean over `n_offsets` equispaced offsets.
pub fn sigma_n_check(
    profile: &MollifierProfile,
    sched: &Schedule,
    zeta: f64,
    sigma: &SigmaG,
    domain: (f64, f64),
    probes: &[f64],
    n_offsets: usize,
) -> Result<Vec<SigmaGapRow>> {
    let (a, b) = domain;
    if !(a < b) || n_offsets == 0 {
        return Err(Error::InvalidArgument(format!(
            "need a < b and at least one offset, got [{a}, {b}] and {n_offsets}"
        )));
    }
    let per_mesh = sched
        .entries()
        .into_par_iter()
        .map(|(n, h)| {
            let grids = (0..n_offsets)
                .map(|j| jump_grid(profile, n, h, a + j as f64 * h / n_offsets as f64, zeta))
                .collect::<Result<Vec<_>>>()?;
            Ok(probes
                .iter()
                .map(|&u| {
                    let target = sigma.eval(u);
                    let mean = grids
                        .iter()
                        .map(|g| (sigma_staircase(g, u) - target).abs())
                        .sum::<f64>()
                        / n_offsets as f64;
                    SigmaGapRow {
                        n,
                        h,
                        u,
                        gap: (b - a) * mean,
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_mesh.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMapRow {
    pub n: u64,
    pub h: f64,
    /// Jump map under `mu`.
    pub target: f64,
    /// Mean over offsets of the discrete jump map.
    pub mean_value: f64,
    /// Mean over offsets of `|discrete - target|`.
    pub mean_gap: f64,
}

/// Discrete jump maps at `zeta` against the jump map under `mu`, per mesh.
#[allow(clippy::too_many_arguments)]
pub fn jump_map_study(
    field: &ScalarField,
    driver: &BVFunction,
    zeta: f64,
    profile: &MollifierProfile,
    sched: &Schedule,
    mu: &JumpMeasure,
    x: f64,
    n_offsets: usize,
) -> Result<Vec<JumpMapRow>> {
    let size = driver.jump_at(zeta);
    if size == 0.0 {
        return Err(Error::NotAJump(zeta));
    }
    if n_offsets == 0 {
        return Err(Error::InvalidArgument(
            "at least one offset is required".into(),
        ));
    }
    let target = phi_solve(&field.frozen(zeta, size), x, 1.0, mu);
    let a = driver.domain().0;
    sched
        .entries()
        .into_par_iter()
        .map(|(n, h)| {
            let values = (0..n_offsets)
                .map(|j| {
                    let tau = a + j as f64 * h / n_offsets as f64;
                    discrete_jump_map(field, driver, zeta, profile, n, h, tau, x)
                })
                .collect::<Result<Vec<_>>>()?;
            let m = n_offsets as f64;
            Ok(JumpMapRow {
                n,
                h,
                target,
                mean_value: values.iter().sum::<f64>() / m,
                mean_gap: values.iter().map(|v| (v - target).abs()).sum::<f64>() / m,
            })
        })
        .collect()
}

/// One line of a long-format study table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub n: u64,
    pub h: f64,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(n: u64, h: f64, metric: &str, value: f64) -> Self {
        Self {
            n,
            h,
            metric: metric.to_string(),
            value,
        }
    }
}

/// CSV with columns `n,h_n,metric,value`.
pub fn write_metric_csv<W: Write>(rows: &[MetricRow], mut out: W) -> io::Result<()> {
    writeln!(out, "n,h_n,metric,value")?;
    for r in rows {
        writeln!(out, "{},{:.16e},{},{:.16e}", r.n, r.h, r.metric, r.value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_grid(value: f64) -> GridPath {
        let h = 0.1;
        let offsets: Vec<f64> = (0..4).map(|j| j as f64 * h / 4.0).collect();
        let rows = offsets.iter().map(|_| vec![value; 12]).collect();
        GridPath::from_rows((0.0, 1.0), 10, h, "uniform", offsets, rows).unwrap()
    }

    #[test]
    fn l1_examples() {
        let p = constant_grid(1.0);
        assert_eq!(
            l1_distance(&p, &FnPath::new(0.0, 1.0, |_| 1.0)).unwrap(),
            0.0
        );
        let z = constant_grid(0.0);
        assert!((l1_distance(&z, &FnPath::new(0.0, 1.0, |_| 1.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((l1_distance(&z, &FnPath::new(0.0, 1.0, |t| t)).unwrap() - 0.5).abs() < 1e-10);
        assert!(matches!(
            l1_distance(&z, &FnPath::new(0.0, 2.0, |t| t)),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn l1_splits_at_discontinuities() {
        let z = constant_grid(0.0);
        let step =
            FnPath::new(0.0, 1.0, |t| if t < 0.3337 { 0.0 } else { 1.0 }).with_jumps(vec![0.3337]);
        assert!((l1_distance(&z, &step).unwrap() - (1.0 - 0.3337)).abs() < 1e-12);
        assert!((l1_norm(&step, 8) - (1.0 - 0.3337)).abs() < 1e-12);
    }

    #[test]
    fn decreasing_rule() {
        assert!(is_decreasing(&[1.0, 0.5, 0.52, 0.3]));
        assert!(!is_decreasing(&[1.0, 0.5, 0.6, 0.3]));
        assert!(!is_decreasing(&[1.0, 0.5, 0.6]));
        assert!(!is_decreasing(&[]));
    }

    #[test]
    fn staircase_gap_at_zero_probe_is_zero() {
        let s = Schedule::power(vec![64, 128, 256], 1.0, 2.0).unwrap();
        let rows = sigma_n_check(
            &MollifierProfile::uniform(),
            &s,
            0.5,
            &SigmaG::identity(),
            (0.0, 1.0),
            &[0.0],
            16,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn metric_csv_format() {
        let mut buf = Vec::new();
        write_metric_csv(&[MetricRow::new(4, 0.25, "l1_error", 0.1)], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "n,h_n,metric,value\n4,2.5000000000000000e-1,l1_error,1.0000000000000001e-1\n"
        );
    }
}
