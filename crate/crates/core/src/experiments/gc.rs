//! Uniform-in-field statistic: independent particles driven by each field of
//! a finite net, sharing initial data and noise, against their linear limits.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{
    check_particle_counts, check_seeds, distance_curve, elapsed_ms, fit_decay, phase_start, summarize, whole_steps,
    DecayFit, LimitPath, PdeSettings, SeedSummary,
};
use crate::field::DriftField;
use crate::particle::{simulate_frozen_from, F0Spec, InitialState, NoiseStore, Order, SimConfig};
use crate::pde::{evolve_kinetic_path, evolve_linear_fp_path, KineticForce};
use crate::transport::{compensate, mean, Compensation};

#[derive(Clone, Debug, PartialEq)]
pub struct GcSettings {
    pub experiment_id: String,
    pub particles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub order: Order,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    pub v0: F0Spec,
    pub friction: f64,
    pub compensation: f64,
    pub pde: PdeSettings,
    pub bootstrap: usize,
}

impl GcSettings {
    pub fn new(particles: Vec<usize>, seeds: Vec<u64>) -> Self {
        GcSettings {
            experiment_id: "gc-sup".into(),
            particles,
            seeds,
            order: Order::First,
            dt: 1.0 / 512.0,
            horizon: 1.0,
            f0: F0Spec::default(),
            v0: F0Spec::default(),
            friction: 0.0,
            compensation: 1.0,
            pde: PdeSettings::default(),
            bootstrap: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_particle_counts(&self.particles, 1)?;
        check_seeds(&self.seeds)?;
        self.pde.validate()?;
        if whole_steps(self.horizon, self.dt)? % self.pde.record_every != 0 {
            return Err(LabError::Config("pde.record_every must divide the number of steps".into()));
        }
        Ok(())
    }

    pub fn sub_runs(&self, net: usize) -> usize {
        self.particles.len() * self.seeds.len() * net
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GcCell {
    pub particles: usize,
    pub seed: u64,
    /// Compensated statistic of each net element.
    pub per_field: Vec<f64>,
    /// Maximum over the net.
    pub sup_stat: f64,
    pub argmax: usize,
    pub wallclock_ms: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GcReport {
    pub experiment_id: String,
    pub fields: Vec<String>,
    pub times: Vec<f64>,
    pub cells: Vec<GcCell>,
    /// Seed summaries of the max statistic, per `N`.
    pub summaries: Vec<SeedSummary>,
    /// `per_field_means[b][k]`: mean statistic of field `b` at the `k`-th `N`.
    pub per_field_means: Vec<Vec<f64>>,
    pub fit: DecayFit,
    /// The max dominates every single-field statistic in every cell.
    pub dominance: bool,
}

/// Law of the frozen-field process for one field.
fn frozen_limit(field: &DriftField, s: &GcSettings, steps: usize) -> Result<LimitPath> {
    match s.order {
        Order::First => {
            let start = s.f0.to_grid(s.pde.spec(field.dim())?)?;
            Ok(LimitPath::Position(evolve_linear_fp_path(
                &start,
                field,
                s.dt,
                steps,
                s.pde.record_every,
                &s.pde.options(),
            )?))
        }
        Order::Second => {
            let start = phase_start(&s.f0, &s.v0, s.friction, &s.pde)?;
            Ok(LimitPath::Phase(evolve_kinetic_path(
                &start,
                KineticForce::Frozen(field),
                s.dt,
                steps,
                s.pde.record_every,
                &s.pde.options(),
            )?))
        }
    }
}

pub fn run_gc_experiment(net: &[DriftField], s: &GcSettings) -> Result<GcReport> {
    s.validate()?;
    let dim = net.first().ok_or_else(|| LabError::Config("the field net is empty".into()))?.dim();
    if net.iter().any(|b| b.dim() != dim) {
        return Err(LabError::Config("net fields differ in dimension".into()));
    }
    let steps = whole_steps(s.horizon, s.dt)?;
    let limits: Vec<LimitPath> = net.par_iter().map(|b| frozen_limit(b, s, steps)).collect::<Result<_>>()?;
    let mode = match s.order {
        Order::First => Compensation::Plain,
        Order::Second => Compensation::PositivePart,
    };
    let grid: Vec<(usize, u64)> =
        s.particles.iter().flat_map(|&n| s.seeds.iter().map(move |&seed| (n, seed))).collect();
    let cells: Vec<GcCell> = grid
        .par_iter()
        .map(|&(n, seed)| {
            let start = Instant::now();
            let run = || -> Result<Vec<f64>> {
                let mut config = match s.order {
                    Order::First => SimConfig::first_order(n, dim, s.horizon, s.dt, seed),
                    Order::Second => SimConfig::second_order(n, dim, s.horizon, s.dt, s.friction, seed),
                };
                config.initial = s.f0.clone();
                config.initial_velocity = s.v0.clone();
                // one noise store and one initial state for every field
                let noise = NoiseStore::generate(seed, n, dim, steps, s.dt)?;
                let initial = InitialState::sample(&config)?;
                net.iter()
                    .zip(&limits)
                    .map(|(b, lim)| {
                        let bundle = simulate_frozen_from(&config, b, &noise, &initial)?;
                        let d = distance_curve(&bundle, lim, s.pde.record_every, s.pde.atom_budget)?;
                        Ok(compensate(d, s.compensation, mode)?.value)
                    })
                    .collect()
            };
            match run() {
                Ok(per_field) => {
                    let (argmax, sup_stat) = per_field
                        .iter()
                        .copied()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
                    GcCell { particles: n, seed, per_field, sup_stat, argmax, wallclock_ms: elapsed_ms(start), error: None }
                }
                Err(e) => GcCell {
                    particles: n,
                    seed,
                    per_field: Vec::new(),
                    sup_stat: f64::NAN,
                    argmax: 0,
                    wallclock_ms: elapsed_ms(start),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let ok = |c: &&GcCell| c.error.is_none();
    let samples: Vec<Vec<f64>> = s
        .particles
        .iter()
        .map(|&n| cells.iter().filter(ok).filter(|c| c.particles == n).map(|c| c.sup_stat).collect())
        .collect();
    let summaries = s
        .particles
        .iter()
        .zip(&samples)
        .map(|(&n, v)| summarize(n, v, s.seeds.len() - v.len()))
        .collect();
    let per_field_means = (0..net.len())
        .map(|b| {
            s.particles
                .iter()
                .map(|&n| {
                    let v: Vec<f64> =
                        cells.iter().filter(ok).filter(|c| c.particles == n).map(|c| c.per_field[b]).collect();
                    if v.is_empty() {
                        f64::NAN
                    } else {
                        mean(&v)
                    }
                })
                .collect()
        })
        .collect();
    let dominance = cells.iter().filter(ok).all(|c| c.per_field.iter().all(|v| c.sup_stat >= *v));
    let fit = fit_decay(&s.particles, &samples, s.bootstrap, s.seeds[0])?;
    Ok(GcReport {
        experiment_id: s.experiment_id.clone(),
        fields: net.iter().map(|b| b.descriptor().to_string()).collect(),
        times: limits[0].times(),
        cells,
        summaries,
        per_field_means,
        fit,
        dominance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::rate::{run_chaos_rate, RateSettings};
    use crate::field::{holder_net, HolderBallSpec, Kernel};

    fn small() -> GcSettings {
        let mut s = GcSettings::new(vec![16, 32, 64, 128], (0..4).collect());
        s.dt = 1.0 / 64.0;
        s.horizon = 0.25;
        s.pde.cells = 256;
        s.pde.record_every = 2;
        s.bootstrap = 0;
        s
    }

    #[test]
    fn zero_net_matches_zero_kernel_rate_run() {
        let s = small();
        let gc = run_gc_experiment(&[DriftField::zero(1)], &s).unwrap();
        let mut r = RateSettings::new(s.particles.clone(), s.seeds.clone());
        r.dt = s.dt;
        r.horizon = s.horizon;
        r.pde = s.pde.clone();
        r.dt_sensitivity = false;
        r.bootstrap = 0;
        let rate = run_chaos_rate(&Kernel::zero(1).unwrap(), &r).unwrap();
        for (a, b) in gc.cells.iter().zip(&rate.cells) {
            assert_eq!(a.sup_stat.to_bits(), b.sup_stat.to_bits());
        }
    }

    #[test]
    fn max_dominates_and_ignores_order() {
        let s = small();
        let mut net = holder_net(&HolderBallSpec::new(1, 0.75, 1.0), 3).unwrap();
        let a = run_gc_experiment(&net, &s).unwrap();
        assert!(a.dominance);
        net.reverse();
        let b = run_gc_experiment(&net, &s).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.sup_stat.to_bits(), y.sup_stat.to_bits());
        }
    }
}
