//! The finite-difference scheme `x_{k+1} = x_k + f_n(t_k, x_k) (L_n(t_{k+1}) - L_n(t_k))`
//! on lattices `t_k = tau + k h` and the discrete jump construction it induces.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::bvfun::BVFunction;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jumpmap::{phi_recursion, XiGrid};
use crate::mollifier::{mollify_driver, mollify_field, MollifierProfile};

/// Largest admissible number of lattice steps across the domain.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// Number of lattice offsets sampled per grid solve.
pub const DEFAULT_OFFSETS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOptions {
    /// Use the smoothed field `f_n` instead of `f` in the update.
    pub mollify_field: bool,
    pub step_cap: u64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            mollify_field: false,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

/// One scheme configuration: field, driver, kernel, mesh index and step.
#[derive(Debug, Clone)]
pub struct Scheme<'a> {
    field: &'a ScalarField,
    driver: &'a BVFunction,
    profile: &'a MollifierProfile,
    n: u64,
    h: f64,
    options: SchemeOptions,
}

impl<'a> Scheme<'a> {
    pub fn new(
        field: &'a ScalarField,
        driver: &'a BVFunction,
        profile: &'a MollifierProfile,
        n: u64,
        h: f64,
    ) -> Result<Self> {
        Self::with_options(field, driver, profile, n, h, SchemeOptions::default())
    }

    pub fn with_options(
        field: &'a ScalarField,
        driver: &'a BVFunction,
        profile: &'a MollifierProfile,
        n: u64,
        h: f64,
        options: SchemeOptions,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh index n must be positive".into(),
            ));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step h = {h} must be positive"
            )));
        }
        let (a, b) = driver.domain();
        check_cap((b - a) / h, options.step_cap)?;
        Ok(Self {
            field,
            driver,
            profile,
            n,
            h,
            options,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Offsets `a + j h / count`, `j = 0..count`.
    pub fn offsets(&self, count: usize) -> Vec<f64> {
        let a = self.driver.domain().0;
        (0..count)
            .map(|j| a + j as f64 * self.h / count as f64)
            .collect()
    }

    /// Number of steps `K` so that `tau + K h >= b`.
    pub fn step_count(&self, tau: f64) -> usize {
        let b = self.driver.domain().1;
        ((b - tau) / self.h).ceil().max(0.0) as usize
    }

    /// Values `x(tau + k h)` for `k = 0..=K` starting from `x0`.
    pub fn solve_offset(&self, tau: f64, x0: f64) -> Result<Vec<f64>> {
        let a = self.driver.domain().0;
        if !(tau >= a && tau < a + self.h) {
            return Err(Error::InvalidArgument(format!(
                "offset {tau} is outside [{a}, {})",
                a + self.h
            )));
        }
        let steps = self.step_count(tau);
        let mut out = Vec::with_capacity(steps + 1);
        let mut x = x0;
        out.push(x);
        let mut t = tau;
        let mut l_prev = mollify_driver(self.profile, self.driver, self.n, t);
        for k in 1..=steps {
            let t_next = tau + k as f64 * self.h;
            let l_next = mollify_driver(self.profile, self.driver, self.n, t_next);
            let slope = if self.options.mollify_field {
                mollify_field(self.profile, self.field, self.n, t, x)
            } else {
                self.field.eval(t, x)
            };
            x += slope * (l_next - l_prev);
            out.push(x);
            t = t_next;
            l_prev = l_next;
        }
        Ok(out)
    }

    /// Solves every offset `a + j h / n_offsets` with `x0_fun(tau)` as the
    /// initial value. Offsets run in parallel.
    pub fn solve_grid<F>(&self, x0_fun: F, n_offsets: usize) -> Result<GridPath>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        if n_offsets == 0 {
            return Err(Error::InvalidArgument(
                "at least one offset is required".into(),
            ));
        }
        let offsets = self.offsets(n_offsets);
        let rows = offsets
            .par_iter()
            .map(|&tau| self.solve_offset(tau, x0_fun(tau)))
            .collect::<Result<Vec<_>>>()?;
        GridPath::from_rows(
            self.driver.domain(),
            self.n,
            self.h,
            self.profile.name(),
            offsets,
            rows,
        )
    }
}

fn check_cap(steps: f64, cap: u64) -> Result<()> {
    if !(steps <= cap as f64) {
        return Err(Error::StepCap { steps, cap });
    }
    Ok(())
}

/// Scheme solution sampled on `n_offsets` shifted lattices.
///
/// Offset `j` sits at `a + j w` with `w = h / n_offsets`, so the value stored
/// for offset `j` and step `m` belongs to the time `a + c w` with
/// `c = m n_offsets + j`. Evaluation snaps `t` to the nearest such time; the
/// path is piecewise constant on cells of width `w` centred there.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    domain: (f64, f64),
    n: u64,
    h: f64,
    profile: String,
    offsets: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl GridPath {
    /// Assembles a path from per-offset rows. Offsets must be the equispaced
    /// `a + j h / count`.
    pub fn from_rows(
        domain: (f64, f64),
        n: u64,
        h: f64,
        profile: &str,
        offsets: Vec<f64>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (a, b) = domain;
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty domain [{a}, {b}]")));
        }
        if offsets.is_empty() || offsets.len() != rows.len() {
            return Err(Error::InvalidArgument(format!(
                "{} offsets for {} rows",
                offsets.len(),
                rows.len()
            )));
        }
        let w = h / offsets.len() as f64;
        for (j, (&tau, row)) in offsets.iter().zip(&rows).enumerate() {
            if (tau - (a + j as f64 * w)).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "offset {j} is {tau}, expected {}",
                    a + j as f64 * w
                )));
            }
            if row.is_empty() || tau + (row.len() - 1) as f64 * h < b - 1e-12 * (1.0 + b.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "row {j} does not reach the end of the domain"
                )));
            }
        }
        Ok(Self {
            domain,
            n,
            h,
            profile: profile.to_string(),
            offsets,
            rows,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn profile(&self) -> &str {
        &self.profile
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Width of one snapping cell, `h / n_offsets`.
    pub fn cell_width(&self) -> f64 {
        self.h / self.offsets.len() as f64
    }

    /// Number of cells whose centre lies in `[a, b + w/2)`.
    pub fn cell_count(&self) -> usize {
        let (a, b) = self.domain;
        ((b - a) / self.cell_width() + 0.5).floor() as usize + 1
    }

    /// Value stored for the time `a + c w`.
    pub fn cell_value(&self, c: usize) -> f64 {
        let count = self.offsets.len();
        let row = &self.rows[c % count];
        row[(c / count).min(row.len() - 1)]
    }

    /// Snapped evaluation at `t`, clamped to the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let (a, b) = self.domain;
        let t = t.clamp(a, b);
        let c = ((t - a) / self.cell_width()).round() as usize;
        self.cell_value(c)
    }

    /// Final value on the base lattice (offset 0).
    pub fn final_value(&self) -> f64 {
        *self.rows[0].last().expect("rows are non-empty")
    }

    /// CSV with columns `offset_index,tau,k,t,x`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "offset_index,tau,k,t,x")?;
        for (j, (&tau, row)) in self.offsets.iter().zip(&self.rows).enumerate() {
            for (k, &x) in row.iter().enumerate() {
                let t = tau + k as f64 * self.h;
                writeln!(out, "{j},{tau:.16e},{k},{t:.16e},{x:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Partition `xi_k = F_n(zeta - t_{j+k})`, `k = 0..=p+2`, where `t_i = tau + i h`,
/// `j` is the last lattice index with `t_j < zeta - 1/n`, and `p = floor(1 / (n h))`.
pub fn jump_grid(
    profile: &MollifierProfile,
    n: u64,
    h: f64,
    tau: f64,
    zeta: f64,
) -> Result<XiGrid> {
    if n == 0 || !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need n > 0 and h > 0, got n = {n}, h = {h}"
        )));
    }
    let nf = n as f64;
    let p = (1.0 / (nf * h)).floor();
    check_cap(p + 3.0, DEFAULT_STEP_CAP)?;
    let p = p as i64;
    let target = zeta - 1.0 / nf;
    let at = |i: i64| tau + i as f64 * h;
    let mut j = ((target - tau) / h).ceil() as i64 - 1;
    while at(j + 1) < target {
        j += 1;
    }
    while at(j) >= target {
        j -= 1;
    }
    let raw: Vec<f64> = (0..=p + 2)
        .map(|k| profile.tail(n, zeta - at(j + k)))
        .collect();
    XiGrid::monotone(&raw)
}

/// The state the scheme carries across the jump at `zeta`, computed as the
/// recursion on [`jump_grid`] with `z = size * f(zeta, .)`.
#[allow(clippy::too_many_arguments)]
pub fn discrete_jump_map(
    field: &ScalarField,
    driver: &BVFunction,
    zeta: f64,
    profile: &MollifierProfile,
    n: u64,
    h: f64,
    tau: f64,
    x: f64,
) -> Result<f64> {
    let size = driver.jump_at(zeta);
    if size == 0.0 {
        return Err(Error::NotAJump(zeta));
    }
    let grid = jump_grid(profile, n, h, tau, zeta)?;
    let z = field.frozen(zeta, size);
    let path = phi_recursion(&z, x, &grid);
    Ok(*path.last().expect("recursion returns at least x"))
}
