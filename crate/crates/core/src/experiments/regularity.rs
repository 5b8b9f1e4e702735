//! Probability that the realised empirical field is rougher than a level
//! `A`, estimated over seeds for each `N`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{check_particle_counts, check_seeds, whole_steps};
use crate::field::{estimate_holder_norm, DriftField, HolderProbe, Kernel};
use crate::particle::{simulate_interacting, F0Spec, NoiseStore, SimConfig};
use crate::transport::mean;

#[derive(Clone, Debug, PartialEq)]
pub struct RegularitySettings {
    pub experiment_id: String,
    pub particles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    /// Levels `A`; empty means eight levels spread up to twice the largest
    /// observed norm.
    pub levels: Vec<f64>,
    /// Probe layout; its `alpha` is replaced by the kernel's and its time
    /// slices by `slices` fractions of the horizon.
    pub probe: HolderProbe,
    pub slices: usize,
}

impl RegularitySettings {
    pub fn new(particles: Vec<usize>, seeds: Vec<u64>) -> Self {
        RegularitySettings {
            experiment_id: "time-regularity".into(),
            particles,
            seeds,
            dt: 1.0 / 512.0,
            horizon: 1.0,
            f0: F0Spec::default(),
            levels: Vec::new(),
            probe: HolderProbe::new(1.0, 0),
            slices: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_particle_counts(&self.particles, 1)?;
        check_seeds(&self.seeds)?;
        whole_steps(self.horizon, self.dt)?;
        if self.slices == 0 {
            return Err(LabError::Config("need at least one time slice".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityCell {
    pub particles: usize,
    pub seed: u64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityRow {
    pub particles: usize,
    pub mean_norm: f64,
    pub median_norm: f64,
    /// `P(norm > A)` for each level.
    pub exceedance: Vec<f64>,
    /// `P(norm > A*)`.
    pub exceedance_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub experiment_id: String,
    pub alpha: f64,
    pub levels: Vec<f64>,
    /// Twice the mean norm at the smallest `N`.
    pub a_star: f64,
    pub cells: Vec<RegularityCell>,
    pub rows: Vec<RegularityRow>,
    /// `P(norm > A*)` does not increase along the `N` grid.
    pub decreasing_at_star: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn exceed(v: &[f64], a: f64) -> f64 {
    v.iter().filter(|x| **x > a).count() as f64 / v.len() as f64
}

pub fn run_time_regularity(kernel: &Kernel, s: &RegularitySettings) -> Result<RegularityReport> {
    s.validate()?;
    let alpha = kernel.holder_alpha();
    let slices: Vec<f64> = (0..s.slices)
        .map(|k| if s.slices == 1 { 0.0 } else { s.horizon * k as f64 / (s.slices - 1) as f64 })
        .collect();
    let probe = HolderProbe { alpha, time_slices: slices, ..s.probe.clone() };
    let steps = whole_steps(s.horizon, s.dt)?;
    let grid: Vec<(usize, u64)> =
        s.particles.iter().flat_map(|&n| s.seeds.iter().map(move |&seed| (n, seed))).collect();
    let cells: Vec<RegularityCell> = grid
        .par_iter()
        .map(|&(n, seed)| {
            let mut config = SimConfig::first_order(n, kernel.dim(), s.horizon, s.dt, seed);
            config.initial = s.f0.clone();
            let noise = NoiseStore::generate(seed, n, kernel.dim(), steps, s.dt)?;
            let bundle = simulate_interacting(&config, kernel, &noise)?;
            let field = DriftField::empirical_sequence(kernel, Arc::new(bundle.positions), s.dt, true)?;
            Ok(RegularityCell { particles: n, seed, norm: estimate_holder_norm(&field, &probe)? })
        })
        .collect::<Result<_>>()?;
    let norms = |n: usize| cells.iter().filter(|c| c.particles == n).map(|c| c.norm).collect::<Vec<f64>>();
    let a_star = 2.0 * mean(&norms(s.particles[0]));
    let levels = if s.levels.is_empty() {
        let top = cells.iter().map(|c| c.norm).fold(0.0, f64::max);
        (1..=8).map(|k| 2.0 * top * k as f64 / 8.0).collect()
    } else {
        s.levels.clone()
    };
    let rows: Vec<RegularityRow> = s
        .particles
        .iter()
        .map(|&n| {
            let v = norms(n);
            RegularityRow {
                particles: n,
                mean_norm: mean(&v),
                median_norm: median(&v),
                exceedance: levels.iter().map(|&a| exceed(&v, a)).collect(),
                exceedance_star: exceed(&v, a_star),
            }
        })
        .collect();
    let decreasing_at_star = rows.windows(2).all(|w| w[1].exceedance_star <= w[0].exceedance_star);
    Ok(RegularityReport { experiment_id: s.experiment_id.clone(), alpha, levels, a_star, cells, rows, decreasing_at_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HolderShape;

    fn small() -> RegularitySettings {
        let mut s = RegularitySettings::new(vec![16, 64], (0..8).collect());
        s.dt = 1.0 / 32.0;
        s.horizon = 0.25;
        s.probe.pair_count = 32;
        s.slices = 2;
        s
    }

    #[test]
    fn zero_kernel_never_exceeds() {
        let r = run_time_regularity(&Kernel::zero(1).unwrap(), &small()).unwrap();
        assert!(r.cells.iter().all(|c| c.norm == 0.0));
        let mut s = small();
        s.levels = vec![0.1, 1.0];
        let r = run_time_regularity(&Kernel::zero(1).unwrap(), &s).unwrap();
        assert!(r.rows.iter().all(|row| row.exceedance.iter().all(|p| *p == 0.0)));
    }

    #[test]
    fn levels_below_median_are_exceeded_often() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap();
        let r = run_time_regularity(&k, &small()).unwrap();
        let mut s = small();
        s.levels = r.rows.iter().map(|row| 0.999 * row.median_norm).collect();
        let r = run_time_regularity(&k, &s).unwrap();
        for (i, row) in r.rows.iter().enumerate() {
            assert!(row.exceedance[i] >= 0.5, "{row:?}");
        }
    }
}
