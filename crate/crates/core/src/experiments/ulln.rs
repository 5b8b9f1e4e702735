//! Uniform law of large numbers for the kernel average along frozen-field
//! particles: `sup_{b,t} || (1/N) sum_i K(., X^{b,i}_t) - E K(., X^b_t) ||`
//! in a weighted norm, with the expectation from a large reference run.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{
    check_particle_counts, check_seeds, fit_decay, summarize, whole_steps, DecayFit, PdeSettings, SeedSummary,
};
use crate::field::drift::SnapshotDrift;
use crate::field::{DriftField, Kernel};
use crate::particle::{simulate_frozen_from, F0Spec, InitialState, NoiseStore, SimConfig, TrajectoryBundle};
use crate::pde::{weighted_norm_values, GridSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct UllnSettings {
    pub experiment_id: String,
    pub particles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    /// Weight `<x>^{-r}` of the norm.
    pub r: f64,
    /// Integrability: 2 or infinity.
    pub q: f64,
    pub reference_particles: usize,
    pub reference_seed: u64,
    /// Evaluation grid and time cadence.
    pub grid: PdeSettings,
    /// Largest `M * cells` of the reference evaluation.
    pub budget: usize,
    pub bootstrap: usize,
}

impl UllnSettings {
    pub fn new(particles: Vec<usize>, seeds: Vec<u64>) -> Self {
        UllnSettings {
            experiment_id: "ulln-kernel".into(),
            particles,
            seeds,
            dt: 1.0 / 256.0,
            horizon: 1.0,
            f0: F0Spec::default(),
            r: 1.0,
            q: 2.0,
            reference_particles: 8192,
            reference_seed: u64::MAX / 3,
            grid: PdeSettings { cells: 256, record_every: 16, ..PdeSettings::default() },
            budget: 1 << 26,
            bootstrap: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_particle_counts(&self.particles, 1)?;
        check_seeds(&self.seeds)?;
        self.grid.validate()?;
        if !(self.q == 2.0 || self.q.is_infinite()) {
            return Err(LabError::Config("q must be 2 or infinity".into()));
        }
        if whole_steps(self.horizon, self.dt)? % self.grid.record_every != 0 {
            return Err(LabError::Config("grid.record_every must divide the number of steps".into()));
        }
        if self.reference_particles.saturating_mul(self.grid.cells) > self.budget {
            return Err(LabError::TooLarge(format!(
                "reference run M * cells = {} exceeds the budget {}",
                self.reference_particles * self.grid.cells,
                self.budget
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UllnCell {
    pub particles: usize,
    pub seed: u64,
    pub per_field: Vec<f64>,
    pub sup_stat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UllnReport {
    pub experiment_id: String,
    pub fields: Vec<String>,
    pub cells: Vec<UllnCell>,
    pub summaries: Vec<SeedSummary>,
    pub fit: DecayFit,
}

/// `(1/N) sum_i K(x, X^i_t)` at the grid centres for each compared step.
fn kernel_averages(kernel: &Kernel, bundle: &TrajectoryBundle, centres: &[f64], every: usize) -> Vec<Vec<f64>> {
    (0..bundle.positions.len())
        .step_by(every)
        .map(|k| {
            let mut out = vec![0.0; centres.len()];
            SnapshotDrift::new(kernel, &bundle.positions[k], true).eval_many(centres, &mut out);
            out
        })
        .collect()
}

fn run_field(
    kernel: &Kernel,
    field: &DriftField,
    s: &UllnSettings,
    n: usize,
    seed: u64,
    steps: usize,
    centres: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let dim = kernel.dim();
    let mut config = SimConfig::first_order(n, dim, s.horizon, s.dt, seed);
    config.initial = s.f0.clone();
    let noise = NoiseStore::generate(seed, n, dim, steps, s.dt)?;
    let initial = InitialState::sample(&config)?;
    let bundle = simulate_frozen_from(&config, field, &noise, &initial)?;
    Ok(kernel_averages(kernel, &bundle, centres, s.grid.record_every))
}

pub fn run_ulln_for_kernel(kernel: &Kernel, net: &[DriftField], s: &UllnSettings) -> Result<UllnReport> {
    s.validate()?;
    if net.is_empty() {
        return Err(LabError::Config("the field net is empty".into()));
    }
    let dim = kernel.dim();
    let steps = whole_steps(s.horizon, s.dt)?;
    let spec: GridSpec = s.grid.spec(dim)?;
    let centres = spec.centers();
    let reference: Vec<Vec<Vec<f64>>> = net
        .par_iter()
        .map(|b| run_field(kernel, b, s, s.reference_particles, s.reference_seed, steps, &centres))
        .collect::<Result<_>>()?;
    let grid: Vec<(usize, u64)> =
        s.particles.iter().flat_map(|&n| s.seeds.iter().map(move |&seed| (n, seed))).collect();
    let cells: Vec<UllnCell> = grid
        .par_iter()
        .map(|&(n, seed)| {
            let per_field = net
                .iter()
                .zip(&reference)
                .map(|(b, expect)| {
                    let avg = run_field(kernel, b, s, n, seed, steps, &centres)?;
                    let mut worst = 0.0f64;
                    for (a, e) in avg.iter().zip(expect) {
                        let diff: Vec<f64> = a.iter().zip(e).map(|(x, y)| x - y).collect();
                        let norm = if dim == 1 {
                            weighted_norm_values(&spec, &diff, -s.r, s.q)?
                        } else {
                            let mag: Vec<f64> =
                                diff.chunks(dim).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
                            weighted_norm_values(&spec, &mag, -s.r, s.q)?
                        };
                        worst = worst.max(norm);
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?;
            let sup_stat = per_field.iter().copied().fold(0.0, f64::max);
            Ok(UllnCell { particles: n, seed, per_field, sup_stat })
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Vec<f64>> = s
        .particles
        .iter()
        .map(|&n| cells.iter().filter(|c| c.particles == n).map(|c| c.sup_stat).collect())
        .collect();
    let summaries = s.particles.iter().zip(&samples).map(|(&n, v)| summarize(n, v, 0)).collect();
    let fit = fit_decay(&s.particles, &samples, s.bootstrap, s.seeds[0])?;
    Ok(UllnReport {
        experiment_id: s.experiment_id.clone(),
        fields: net.iter().map(|b| b.descriptor().to_string()).collect(),
        cells,
        summaries,
        fit,
    })
}
