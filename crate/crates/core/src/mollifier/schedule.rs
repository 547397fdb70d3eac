//! Joint refinement of the smoothing index `n` and the lattice step `h`.

use crate::error::{Error, Result};

/// How the lattice step depends on the mesh index.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// `h(n) = c * n^(-alpha)`.
    Power { c: f64, alpha: f64 },
    /// One step per mesh, in mesh order.
    Table(Vec<f64>),
}

/// A strictly increasing list of mesh indices together with their steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    meshes: Vec<u64>,
    rule: StepRule,
}

impl Schedule {
    pub fn power(meshes: Vec<u64>, c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "step scale c = {c} must be positive"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "step exponent alpha = {alpha} must be positive"
            )));
        }
        check_meshes(&meshes)?;
        Ok(Self {
            meshes,
            rule: StepRule::Power { c, alpha },
        })
    }

    pub fn table(meshes: Vec<u64>, steps: Vec<f64>) -> Result<Self> {
        check_meshes(&meshes)?;
        if steps.len() != meshes.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} steps given for {} meshes",
                steps.len(),
                meshes.len()
            )));
        }
        if let Some(h) = steps.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidSchedule(format!("step {h} must be positive")));
        }
        Ok(Self {
            meshes,
            rule: StepRule::Table(steps),
        })
    }

    /// Replaces the mesh list, keeping a power rule. Tables cannot be remeshed.
    pub fn with_meshes(&self, meshes: Vec<u64>) -> Result<Self> {
        match &self.rule {
            StepRule::Power { c, alpha } => Self::power(meshes, *c, *alpha),
            StepRule::Table(_) => Err(Error::InvalidSchedule(
                "an explicit step table is tied to its mesh list".into(),
            )),
        }
    }

    pub fn meshes(&self) -> &[u64] {
        &self.meshes
    }

    pub fn rule(&self) -> &StepRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.meshes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meshes.is_empty()
    }

    /// Step of the `i`-th mesh.
    pub fn step_at(&self, i: usize) -> f64 {
        match &self.rule {
            StepRule::Power { c, alpha } => c * (self.meshes[i] as f64).powf(-alpha),
            StepRule::Table(steps) => steps[i],
        }
    }

    /// `(n, h(n))` pairs in mesh order.
    pub fn entries(&self) -> Vec<(u64, f64)> {
        (0..self.meshes.len())
            .map(|i| (self.meshes[i], self.step_at(i)))
            .collect()
    }
}

fn check_meshes(meshes: &[u64]) -> Result<()> {
    if meshes.is_empty() {
        return Err(Error::InvalidSchedule("mesh list is empty".into()));
    }
    if meshes[0] == 0 {
        return Err(Error::InvalidSchedule(
            "mesh indices must be positive".into(),
        ));
    }
    if let Some(w) = meshes.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(format!(
            "mesh indices must increase strictly ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rule_steps() {
        let s = Schedule::power(vec![4, 16], 1.0, 0.5).unwrap();
        assert_eq!(s.entries(), vec![(4, 0.5), (16, 0.25)]);
        let s = Schedule::power(vec![4], 3.0, 2.0).unwrap();
        assert_eq!(s.step_at(0), 3.0 / 16.0);
    }

    #[test]
    fn validation() {
        assert!(Schedule::power(vec![], 1.0, 1.0).is_err());
        assert!(Schedule::power(vec![0, 1], 1.0, 1.0).is_err());
        assert!(Schedule::power(vec![4, 4], 1.0, 1.0).is_err());
        assert!(Schedule::power(vec![4], 0.0, 1.0).is_err());
        assert!(Schedule::power(vec![4], 1.0, -1.0).is_err());
        assert!(Schedule::table(vec![4, 8], vec![0.1]).is_err());
        assert!(Schedule::table(vec![4, 8], vec![0.1, 0.0]).is_err());
        assert!(Schedule::table(vec![4, 8], vec![0.1, 0.2])
            .unwrap()
            .with_meshes(vec![2])
            .is_err());
    }
}
