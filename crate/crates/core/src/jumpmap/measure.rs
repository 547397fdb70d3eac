//! Probability measures on `[0, 1]` that drive the jump-map equation, and
//! the monotone partitions produced by the discrete scheme.

use crate::error::{Error, Result};

use super::sigma::SigmaG;

const MASS_TOL: f64 = 1e-12;

/// A probability measure on `[0, 1]` made of point masses plus unit-density
/// Lebesgue mass on a few disjoint intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure {
    atoms: Vec<(f64, f64)>,
    segments: Vec<(f64, f64)>,
}

impl JumpMeasure {
    /// Atoms are `(location, mass)`; segments are `(lo, hi)` with density 1.
    pub fn new(mut atoms: Vec<(f64, f64)>, mut segments: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
        segments.sort_by(|p, q| p.0.total_cmp(&q.0));
        for &(v, m) in &atoms {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {v} lies outside [0, 1]"
                )));
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom at {v} has mass {m}")));
            }
        }
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure(format!("two atoms at {}", w[0].0)));
        }
        for &(lo, hi) in &segments {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::InvalidMeasure(format!(
                    "segment [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
                )));
            }
        }
        if let Some(w) = segments.windows(2).find(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidMeasure(format!(
                "segments [{}, {}] and [{}, {}] overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        let measure = Self { atoms, segments };
        let total = measure.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} is not 1"
            )));
        }
        Ok(measure)
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn lebesgue() -> Self {
        Self {
            atoms: Vec::new(),
            segments: vec![(0.0, 1.0)],
        }
    }

    /// Unit point mass at `v`.
    pub fn dirac(v: f64) -> Result<Self> {
        Self::new(vec![(v, 1.0)], Vec::new())
    }

    /// The Stieltjes measure `d sigma`: mass `b_i - a_i` at each `a_i` and unit
    /// density on the complement of the intervals.
    pub fn from_sigma(sigma: &SigmaG) -> Self {
        let mut atoms = Vec::new();
        let mut segments = Vec::new();
        let mut cursor = 0.0;
        for &(a, b) in sigma.intervals() {
            if a > cursor {
                segments.push((cursor, a));
            }
            atoms.push((a, b - a));
            cursor = b;
        }
        if cursor < 1.0 {
            segments.push((cursor, 1.0));
        }
        Self { atoms, segments }
    }

    /// Atom `xi_k` of mass `xi_{k+1} - xi_k` for every positive increment; the
    /// jump-map solution against this measure reproduces the recursion on `grid`.
    pub fn from_grid(grid: &XiGrid) -> Self {
        let atoms = grid
            .values()
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1] - w[0]))
            .collect();
        Self {
            atoms,
            segments: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>()
            + self.segments.iter().map(|s| s.1 - s.0).sum::<f64>()
    }

    /// Mass of the closed interval `[u, v]`.
    pub fn mass_between(&self, u: f64, v: f64) -> f64 {
        if v < u {
            return 0.0;
        }
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.0 >= u && a.0 <= v)
            .map(|a| a.1)
            .sum();
        let lebesgue: f64 = self
            .segments
            .iter()
            .map(|&(lo, hi)| (hi.min(v) - lo.max(u)).max(0.0))
            .sum();
        atoms + lebesgue
    }

    pub fn is_lebesgue(&self) -> bool {
        self.atoms.is_empty() && self.segments == [(0.0, 1.0)]
    }
}

/// Monotone partition `0 = xi_0 <= xi_1 <= ... <= xi_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    values: Vec<f64>,
}

impl XiGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(
                "a partition needs at least two points".into(),
            ));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "partition must run from 0 to 1, got {} .. {}",
                values[0],
                values.last().unwrap()
            )));
        }
        if let Some(w) = values.windows(2).find(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidGrid(format!(
                "partition decreases from {} to {}",
                w[0], w[1]
            )));
        }
        Ok(Self { values })
    }

    /// Forces raw samples into a partition: running maximum, clamped to
    /// `[0, 1]`, with the endpoints pinned.
    pub fn monotone(raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidGrid(
                "a partition needs at least two points".into(),
            ));
        }
        let mut values = Vec::with_capacity(raw.len());
        let mut run = 0.0_f64;
        for &r in raw {
            if r.is_nan() {
                return Err(Error::InvalidGrid("partition contains NaN".into()));
            }
            run = run.max(r.clamp(0.0, 1.0));
            values.push(run);
        }
        values[0] = 0.0;
        *values.last_mut().unwrap() = 1.0;
        Ok(Self { values })
    }

    /// Evenly spaced partition with `cells` cells.
    pub fn uniform(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidGrid("at least one cell is required".into()));
        }
        let mut values: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        values[cells] = 1.0;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Staircase read of a partition: `xi_k` for `xi_{k-1} < u <= xi_k`, and 0 at `u = 0`.
pub fn sigma_staircase(grid: &XiGrid, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let v = grid.values();
    let k = v.partition_point(|&x| x < u);
    v[k.min(v.len() - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_from_sigma_examples() {
        let m = JumpMeasure::from_sigma(&SigmaG::full());
        assert_eq!(m.atoms(), &[(0.0, 1.0)]);
        assert!(m.segments().is_empty());

        let m = JumpMeasure::from_sigma(&SigmaG::identity());
        assert!(m.is_lebesgue());

        let m = JumpMeasure::from_sigma(&SigmaG::new(vec![(0.2, 0.5)]).unwrap());
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].1 - 0.3).abs() < 1e-15);
        assert_eq!(m.segments(), &[(0.0, 0.2), (0.5, 1.0)]);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn measure_validation() {
        assert!(JumpMeasure::new(vec![(0.5, 0.5)], vec![]).is_err());
        assert!(JumpMeasure::new(vec![(0.5, 0.5)], vec![(0.0, 0.5)]).is_ok());
        assert!(JumpMeasure::new(vec![(1.5, 1.0)], vec![]).is_err());
        assert!(JumpMeasure::new(vec![], vec![(0.0, 0.6), (0.5, 0.9)]).is_err());
        assert!(JumpMeasure::dirac(0.3).is_ok());
    }

    #[test]
    fn closed_interval_mass() {
        let m = JumpMeasure::from_sigma(&SigmaG::new(vec![(0.2, 0.5)]).unwrap());
        assert!((m.mass_between(0.0, 0.2) - 0.5).abs() < 1e-15);
        assert!((m.mass_between(0.21, 0.5) - 0.0).abs() < 1e-15);
        assert!((m.mass_between(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn staircase_examples() {
        let g = XiGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(sigma_staircase(&g, 0.3), 0.5);
        assert_eq!(sigma_staircase(&g, 0.0), 0.0);
        assert_eq!(sigma_staircase(&g, 0.5), 0.5);
        assert_eq!(sigma_staircase(&g, 0.51), 1.0);
    }

    #[test]
    fn grid_construction() {
        assert!(XiGrid::new(vec![0.0, 0.6, 0.5, 1.0]).is_err());
        assert!(XiGrid::new(vec![0.1, 1.0]).is_err());
        let g = XiGrid::monotone(&[0.2, 0.6, 0.5, 0.9, 0.95]).unwrap();
        assert_eq!(g.values(), &[0.0, 0.6, 0.6, 0.9, 1.0]);
        let m = JumpMeasure::from_grid(&g);
        assert_eq!(m.atoms().len(), 3);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }
}
