//! The two routes from the particle system to the mean-field limit: through
//! the linear law `f^{b^N}` of the realised field, and through the
//! independent particles `mu^{b_inf,N}` driven by the limit field.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{whole_steps, PdeSettings};
use crate::field::drift::mean_field_values;
use crate::field::{DriftField, InterpOrder, Kernel};
use crate::particle::{simulate_frozen_from, simulate_interacting_from, F0Spec, InitialState, NoiseStore, SimConfig};
use crate::pde::{evolve_linear_fp_path, evolve_mckean_path};
use crate::transport::{w1_1d, w1_grids_1d, w1_points_to_grid_1d, DiscreteMeasure};

/// Slack allowed in the triangle checks.
pub const TRIANGLE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSettings {
    pub experiment_id: String,
    pub particles: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    pub pde: PdeSettings,
    /// Gaussian smoothing scale applied to the kernel when `b^N` is frozen.
    pub mollify: Option<f64>,
    /// Largest `N * cells` the grid sampling of `b^N` may cost per step.
    pub budget: usize,
}

impl CouplingSettings {
    pub fn new(particles: usize, seed: u64) -> Self {
        CouplingSettings {
            experiment_id: "coupling-decomp".into(),
            particles,
            seed,
            dt: 1.0 / 512.0,
            horizon: 1.0,
            f0: F0Spec::default(),
            pde: PdeSettings::default(),
            mollify: None,
            budget: 1 << 24,
        }
    }
}

/// Distances at each compared time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingDecomposition {
    pub experiment_id: String,
    pub times: Vec<f64>,
    /// `d(mu^N_t, f_t)`.
    pub particles_to_limit: Vec<f64>,
    /// `d(mu^N_t, f^{b^N}_t)`.
    pub particles_to_frozen_law: Vec<f64>,
    /// `d(f^{b^N}_t, f_t)`.
    pub frozen_law_to_limit: Vec<f64>,
    /// `d(mu^N_t, mu^{b_inf,N}_t)`.
    pub particles_to_independent: Vec<f64>,
    /// `d(mu^{b_inf,N}_t, f_t)`.
    pub independent_to_limit: Vec<f64>,
    /// `d(mu^N, f) <= d(mu^N, f^{b^N}) + d(f^{b^N}, f)` at every time.
    pub frozen_route_holds: bool,
    /// `d(mu^N, f) <= d(mu^N, mu^{b_inf,N}) + d(mu^{b_inf,N}, f)` at every time.
    pub independent_route_holds: bool,
    /// Largest violation of either inequality (negative when both hold
    /// with room to spare).
    pub worst_slack: f64,
}

pub fn run_coupling_decomposition(kernel: &Kernel, s: &CouplingSettings) -> Result<CouplingDecomposition> {
    if kernel.dim() != 1 {
        return Err(LabError::Unsupported("the coupling decomposition runs in d = 1".into()));
    }
    s.pde.validate()?;
    let steps = whole_steps(s.horizon, s.dt)?;
    let re = s.pde.record_every;
    if steps % re != 0 {
        return Err(LabError::Config("pde.record_every must divide the number of steps".into()));
    }
    let spec = s.pde.spec(1)?;
    if s.particles.saturating_mul(spec.cells) > s.budget {
        return Err(LabError::TooLarge(format!(
            "N * cells = {} exceeds the budget {}",
            s.particles * spec.cells,
            s.budget
        )));
    }
    let opts = s.pde.options();
    let mut config = SimConfig::first_order(s.particles, 1, s.horizon, s.dt, s.seed);
    config.initial = s.f0.clone();
    let noise = NoiseStore::generate(s.seed, s.particles, 1, steps, s.dt)?;
    let initial = InitialState::sample(&config)?;
    let bundle = simulate_interacting_from(&config, kernel, &noise, &initial)?;

    let start = s.f0.to_grid(spec)?;
    let limit = evolve_mckean_path(&start, kernel, s.dt, steps, 1, &opts)?;

    // b^N sampled on the grid at every step
    let frozen_kernel = match s.mollify {
        Some(scale) => kernel.mollify(scale)?,
        None => kernel.clone(),
    };
    let realised = DriftField::empirical_sequence(&frozen_kernel, Arc::new(bundle.positions.clone()), s.dt, true)?
        .sample_on_grid(spec, s.dt, steps, InterpOrder::Linear)?;
    let frozen_law = evolve_linear_fp_path(&start, &realised, s.dt, steps, re, &opts)?;

    // the limit field, slice by slice, exactly as the mean-field solver froze it
    let slices: Vec<Vec<f64>> = limit.iter().map(|f| mean_field_values(kernel, f)).collect::<Result<_>>()?;
    let limit_field = DriftField::grid(spec, slices, s.dt, InterpOrder::Linear)?;
    let independent = simulate_frozen_from(&config, &limit_field, &noise, &initial)?;

    let n = steps / re + 1;
    let mut out = CouplingDecomposition {
        experiment_id: s.experiment_id.clone(),
        times: Vec::with_capacity(n),
        particles_to_limit: Vec::with_capacity(n),
        particles_to_frozen_law: Vec::with_capacity(n),
        frozen_law_to_limit: Vec::with_capacity(n),
        particles_to_independent: Vec::with_capacity(n),
        independent_to_limit: Vec::with_capacity(n),
        frozen_route_holds: true,
        independent_route_holds: true,
        worst_slack: f64::NEG_INFINITY,
    };
    for k in 0..n {
        let step = k * re;
        let x = &bundle.positions[step];
        let y = &independent.positions[step];
        let f = &limit[step];
        let g = &frozen_law[k];
        let a = w1_points_to_grid_1d(x, f)?;
        let b = w1_points_to_grid_1d(x, g)?;
        let c = w1_grids_1d(g, f)?;
        let e = w1_1d(&DiscreteMeasure::uniform(1, x.clone())?, &DiscreteMeasure::uniform(1, y.clone())?)?;
        let h = w1_points_to_grid_1d(y, f)?;
        let (s1, s2) = (a - b - c, a - e - h);
        out.frozen_route_holds &= s1 <= TRIANGLE_TOLERANCE;
        out.independent_route_holds &= s2 <= TRIANGLE_TOLERANCE;
        out.worst_slack = out.worst_slack.max(s1).max(s2);
        out.times.push(bundle.times[step]);
        out.particles_to_limit.push(a);
        out.particles_to_frozen_law.push(b);
        out.frozen_law_to_limit.push(c);
        out.particles_to_independent.push(e);
        out.independent_to_limit.push(h);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CouplingSettings {
        let mut s = CouplingSettings::new(64, 3);
        s.dt = 1.0 / 64.0;
        s.horizon = 0.5;
        s.pde.cells = 256;
        s.pde.record_every = 4;
        s
    }

    #[test]
    fn both_routes_hold_for_sine_kernel() {
        let r = run_coupling_decomposition(&Kernel::sine(1).unwrap(), &small()).unwrap();
        assert!(r.frozen_route_holds && r.independent_route_holds, "{}", r.worst_slack);
        // common initial data
        assert_eq!(r.particles_to_frozen_law[0], r.particles_to_limit[0]);
        assert_eq!(r.independent_to_limit[0], r.particles_to_limit[0]);
        assert_eq!(r.frozen_law_to_limit[0], 0.0);
        assert_eq!(r.particles_to_independent[0], 0.0);
        assert!(r.particles_to_independent.iter().skip(1).any(|d| *d > 0.0));
    }

    #[test]
    fn zero_kernel_routes_coincide_pathwise() {
        let r = run_coupling_decomposition(&Kernel::zero(1).unwrap(), &small()).unwrap();
        assert!(r.particles_to_independent.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = small();
        s.budget = 10;
        assert!(matches!(
            run_coupling_decomposition(&Kernel::sine(1).unwrap(), &s),
            Err(LabError::TooLarge(_))
        ));
    }
}
