//! Cell-centred densities on truncated boxes.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform grid on `[-L, L]^d` with `G` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, cells: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::Unsupported(format!("grid dimension {dim}; only d in {{1,2}}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(LabError::invalid("grid half-width must be positive"));
        }
        if cells < 1 {
            return Err(LabError::invalid("grid needs at least one cell per axis"));
        }
        Ok(GridSpec { dim, half_width, cells })
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.width().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre of cell `i` along one axis.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.width()
    }

    /// Coordinates of flat cell `k` (row-major, first axis slowest).
    pub fn center_of(&self, k: usize, out: &mut [f64]) {
        if self.dim == 1 {
            out[0] = self.center(k);
        } else {
            out[0] = self.center(k / self.cells);
            out[1] = self.center(k % self.cells);
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        let mut all = vec![0.0; self.len() * self.dim];
        for k in 0..self.len() {
            self.center_of(k, &mut all[k * self.dim..(k + 1) * self.dim]);
        }
        all
    }

    /// Index of the cell containing `x` along one axis, clamped into range.
    pub fn locate(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.width()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.cells - 1)
        }
    }

    /// Cell diameter (Euclidean).
    pub fn diameter(&self) -> f64 {
        self.width() * (self.dim as f64).sqrt()
    }

    /// The grid with every cell split in two along each axis.
    pub fn refined(&self) -> GridSpec {
        GridSpec { cells: self.cells * 2, ..*self }
    }
}

/// A probability density on a [`GridSpec`], stored as cell masses.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub spec: GridSpec,
    pub masses: Vec<f64>,
    pub time: f64,
}

/// Tolerance on total mass accepted by consumers that need a probability.
pub const MASS_TOLERANCE: f64 = 1e-8;

impl GridDensity {
    pub fn new(spec: GridSpec, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != spec.len() {
            return Err(LabError::Shape(format!(
                "{} masses for a grid of {} cells",
                masses.len(),
                spec.len()
            )));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(LabError::invalid("cell masses must be finite and non-negative"));
        }
        Ok(GridDensity { spec, masses, time: 0.0 })
    }

    /// All mass in the cell containing `point`.
    pub fn point_mass(spec: GridSpec, point: &[f64]) -> Result<Self> {
        if point.len() != spec.dim {
            return Err(LabError::invalid("point dimension does not match grid"));
        }
        let mut masses = vec![0.0; spec.len()];
        let k = if spec.dim == 1 {
            spec.locate(point[0])
        } else {
            spec.locate(point[0]) * spec.cells + spec.locate(point[1])
        };
        masses[k] = 1.0;
        GridDensity::new(spec, masses)
    }

    /// Builds a product density from per-axis CDFs, exact cell integrals,
    /// renormalised to the truncated box.
    pub fn from_axis_cdf(spec: GridSpec, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        let g = spec.cells;
        let axis: Vec<f64> = (0..g)
            .map(|i| {
                let a = -spec.half_width + i as f64 * spec.width();
                (cdf(a + spec.width()) - cdf(a)).max(0.0)
            })
            .collect();
        let masses = if spec.dim == 1 {
            axis.clone()
        } else {
            let mut m = Vec::with_capacity(g * g);
            for a in &axis {
                for b in &axis {
                    m.push(a * b);
                }
            }
            m
        };
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(LabError::DomainTooSmall("initial law puts no mass on the grid".into()));
        }
        GridDensity::new(spec, masses.into_iter().map(|m| m / total).collect())
    }

    /// The same piecewise-constant density on the grid with every cell split
    /// in two along each axis.
    pub fn refined(&self) -> GridDensity {
        let spec = self.spec.refined();
        let g = self.spec.cells;
        let masses = if self.spec.dim == 1 {
            self.masses.iter().flat_map(|m| [0.5 * m, 0.5 * m]).collect()
        } else {
            let mut out = vec![0.0; spec.len()];
            for i in 0..2 * g {
                for j in 0..2 * g {
                    out[i * 2 * g + j] = 0.25 * self.masses[(i / 2) * g + j / 2];
                }
            }
            out
        };
        GridDensity { spec, masses, time: self.time }
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(LabError::Precondition(format!("density has total mass {total}, expected 1")));
        }
        Ok(())
    }

    /// Mean along each axis (cell-centre quadrature).
    pub fn mean(&self) -> Vec<f64> {
        let d = self.spec.dim;
        let mut c = vec![0.0; d];
        let mut m = vec![0.0; d];
        for (k, w) in self.masses.iter().enumerate() {
            self.spec.center_of(k, &mut c);
            for a in 0..d {
                m[a] += w * c[a];
            }
        }
        m
    }

    /// Variance along each axis (cell-centre quadrature).
    pub fn variance(&self) -> Vec<f64> {
        let d = self.spec.dim;
        let mean = self.mean();
        let mut c = vec![0.0; d];
        let mut v = vec![0.0; d];
        for (k, w) in self.masses.iter().enumerate() {
            self.spec.center_of(k, &mut c);
            for a in 0..d {
                v[a] += w * (c[a] - mean[a]).powi(2);
            }
        }
        v
    }

    /// `E |X|^2` over all axes.
    pub fn second_moment(&self) -> f64 {
        let d = self.spec.dim;
        let mut c = vec![0.0; d];
        let mut s = 0.0;
        for (k, w) in self.masses.iter().enumerate() {
            self.spec.center_of(k, &mut c);
            s += w * c.iter().map(|v| v * v).sum::<f64>();
        }
        s
    }

    /// Mass in the outermost ring of cells.
    pub fn boundary_mass(&self) -> f64 {
        let g = self.spec.cells;
        if self.spec.dim == 1 {
            if g == 1 {
                return self.masses[0];
            }
            return self.masses[0] + self.masses[g - 1];
        }
        let mut s = 0.0;
        for i in 0..g {
            for j in 0..g {
                if i == 0 || j == 0 || i == g - 1 || j == g - 1 {
                    s += self.masses[i * g + j];
                }
            }
        }
        s
    }

    /// Density values `mass / volume`.
    pub fn density_values(&self) -> Vec<f64> {
        let vol = self.spec.cell_volume();
        self.masses.iter().map(|m| m / vol).collect()
    }
}

/// Position-velocity density for `d = 1`; row-major over `(x cell, v cell)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGridDensity {
    pub x: GridSpec,
    pub v: GridSpec,
    pub friction: f64,
    pub masses: Vec<f64>,
    pub time: f64,
}

impl PhaseGridDensity {
    pub fn new(x: GridSpec, v: GridSpec, friction: f64, masses: Vec<f64>) -> Result<Self> {
        if x.dim != 1 || v.dim != 1 {
            return Err(LabError::Unsupported("phase-space grids exist only for d = 1".into()));
        }
        if masses.len() != x.cells * v.cells {
            return Err(LabError::Shape("phase masses do not match grid".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(LabError::invalid("cell masses must be finite and non-negative"));
        }
        if !(friction >= 0.0) {
            return Err(LabError::invalid("friction must be non-negative"));
        }
        Ok(PhaseGridDensity { x, v, friction, masses, time: 0.0 })
    }

    /// Product of two one-dimensional densities.
    pub fn product(x: &GridDensity, v: &GridDensity, friction: f64) -> Result<Self> {
        let mut m = Vec::with_capacity(x.masses.len() * v.masses.len());
        for a in &x.masses {
            for b in &v.masses {
                m.push(a * b);
            }
        }
        PhaseGridDensity::new(x.spec, v.spec, friction, m)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn x_marginal(&self) -> GridDensity {
        let gv = self.v.cells;
        let masses = self.masses.chunks(gv).map(|row| row.iter().sum()).collect();
        GridDensity { spec: self.x, masses, time: self.time }
    }

    pub fn v_marginal(&self) -> GridDensity {
        let gv = self.v.cells;
        let mut masses = vec![0.0; gv];
        for row in self.masses.chunks(gv) {
            for (j, m) in row.iter().enumerate() {
                masses[j] += m;
            }
        }
        GridDensity { spec: self.v, masses, time: self.time }
    }

    /// Mass on the outer velocity cells (and outer position cells).
    pub fn boundary_mass(&self) -> f64 {
        let (gx, gv) = (self.x.cells, self.v.cells);
        let mut s = 0.0;
        for i in 0..gx {
            for j in 0..gv {
                if i == 0 || j == 0 || i == gx - 1 || j == gv - 1 {
                    s += self.masses[i * gv + j];
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_symmetric() {
        let s = GridSpec::new(1, 2.0, 8).unwrap();
        for i in 0..8 {
            assert!((s.center(i) + s.center(7 - i)).abs() < 1e-15);
        }
        assert_eq!(s.locate(-5.0), 0);
        assert_eq!(s.locate(5.0), 7);
        assert_eq!(s.locate(0.1), 4);
    }

    #[test]
    fn refinement_keeps_mass_mean_and_density() {
        let s = GridSpec::new(2, 1.0, 3).unwrap();
        let g = GridDensity::new(s, (1..=9).map(|k| k as f64 / 45.0).collect()).unwrap();
        let r = g.refined();
        assert_eq!(r.spec.cells, 6);
        assert!((r.total_mass() - 1.0).abs() < 1e-15);
        for (a, b) in g.mean().iter().zip(r.mean()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(r.density_values()[7], g.density_values()[0]);
    }

    #[test]
    fn product_cdf_density_is_normalised() {
        let s = GridSpec::new(2, 3.0, 16).unwrap();
        let g = GridDensity::from_axis_cdf(s, |x| ((x + 3.0) / 6.0).clamp(0.0, 1.0)).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!(g.mean().iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn marginals_of_product() {
        let s = GridSpec::new(1, 1.0, 4).unwrap();
        let a = GridDensity::new(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = GridDensity::new(s, vec![0.25; 4]).unwrap();
        let p = PhaseGridDensity::product(&a, &b, 0.0).unwrap();
        let xm = p.x_marginal();
        for (u, v) in xm.masses.iter().zip(&a.masses) {
            assert!((u - v).abs() < 1e-15);
        }
    }
}
