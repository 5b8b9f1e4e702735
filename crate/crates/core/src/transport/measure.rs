use crate::error::{LabError, Result};
use crate::particle::sim::TrajectoryBundle;
use crate::pde::grid::{GridDensity, PhaseGridDensity};

/// Atoms with non-negative weights summing to one. `atoms` is flat `n x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub dim: usize,
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const WEIGHT_TOLERANCE: f64 = 1e-12;

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || weights.is_empty() {
            return Err(LabError::invalid("a measure needs at least one atom"));
        }
        if atoms.len() != dim * weights.len() {
            return Err(LabError::Shape(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(LabError::invalid("atoms must be finite and weights non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE * weights.len().max(1) as f64 {
            return Err(LabError::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(DiscreteMeasure { dim, atoms, weights })
    }

    /// Normalises arbitrary non-negative masses.
    pub fn from_masses(dim: usize, atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(LabError::invalid("masses must have positive total"));
        }
        DiscreteMeasure::new(dim, atoms, masses.into_iter().map(|m| m / total).collect())
    }

    /// Equal weights `1/n` on the given points.
    pub fn uniform(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() {
            return Err(LabError::invalid("a measure needs at least one atom"));
        }
        let n = atoms.len() / dim;
        DiscreteMeasure::new(dim, atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: &[f64]) -> Self {
        DiscreteMeasure { dim: point.len(), atoms: point.to_vec(), weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (i, w) in self.weights.iter().enumerate() {
            for (a, v) in self.atom(i).iter().enumerate() {
                m[a] += w * v;
            }
        }
        m
    }

    /// `int |x|^p dmu`.
    pub fn moment(&self, p: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.atom(i).iter().map(|v| v * v).sum::<f64>().sqrt().powf(p))
            .sum()
    }
}

/// Empirical measure of a bundle at `step`; second-order bundles give atoms
/// `(x, v)` in `R^{2d}`.
pub fn empirical_measure(bundle: &TrajectoryBundle, step: usize) -> Result<DiscreteMeasure> {
    if step >= bundle.times.len() {
        return Err(LabError::invalid(format!("step {step} beyond the last stored step {}", bundle.steps())));
    }
    let n = bundle.particles;
    match &bundle.velocities {
        None => DiscreteMeasure::uniform(bundle.dim, bundle.positions[step].clone()),
        Some(vs) => {
            let d = bundle.dim;
            let mut atoms = Vec::with_capacity(2 * n * d);
            for i in 0..n {
                atoms.extend_from_slice(&bundle.positions[step][i * d..(i + 1) * d]);
                atoms.extend_from_slice(&vs[step][i * d..(i + 1) * d]);
            }
            DiscreteMeasure::uniform(2 * d, atoms)
        }
    }
}

/// Cells whose mass is at most this are dropped by [`grid_to_measure`].
pub const DROP_THRESHOLD: f64 = 1e-12;

fn budget_check(kept: usize, budget: usize) -> Result<()> {
    if kept > budget {
        return Err(LabError::TooLarge(format!(
            "{kept} occupied cells exceed the atom budget {budget}; coarsen the grid or raise the budget"
        )));
    }
    Ok(())
}

/// One atom per cell with mass above [`DROP_THRESHOLD`], at the cell centre,
/// renormalised.
pub fn grid_to_measure(density: &GridDensity, atom_budget: usize) -> Result<DiscreteMeasure> {
    let spec = density.spec;
    let d = spec.dim;
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    let mut c = vec![0.0; d];
    for (k, &m) in density.masses.iter().enumerate() {
        if m > DROP_THRESHOLD {
            spec.center_of(k, &mut c);
            atoms.extend_from_slice(&c);
            masses.push(m);
        }
    }
    budget_check(masses.len(), atom_budget)?;
    DiscreteMeasure::from_masses(d, atoms, masses)
}

/// Phase-space version: atoms `(x, v)` at cell centres.
pub fn phase_grid_to_measure(density: &PhaseGridDensity, atom_budget: usize) -> Result<DiscreteMeasure> {
    let gv = density.v.cells;
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for (k, &m) in density.masses.iter().enumerate() {
        if m > DROP_THRESHOLD {
            atoms.push(density.x.center(k / gv));
            atoms.push(density.v.center(k % gv));
            masses.push(m);
        }
    }
    budget_check(masses.len(), atom_budget)?;
    DiscreteMeasure::from_masses(2, atoms, masses)
}
