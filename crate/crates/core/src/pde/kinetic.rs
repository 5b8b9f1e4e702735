//! Kinetic Fokker–Planck equation in one space dimension:
//! `d_t f + v d_x f + d_v((b(x) - kappa v) f) = (1/2) d_vv f`.

use crate::error::{LabError, Result};
use crate::field::drift::mean_field_values;
use crate::field::{DriftField, Kernel};
use crate::pde::fokker_planck::{
    check_advection, diffuse_line_explicit, diffuse_line_implicit, upwind_line, DiffusionScheme, FpOptions,
};
use crate::pde::grid::PhaseGridDensity;

/// Mass allowed in the outer ring of phase cells before the run is rejected.
pub const KINETIC_BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Source of the position-dependent force.
#[derive(Clone, Copy, Debug)]
pub enum KineticForce<'a> {
    Frozen(&'a DriftField),
    /// `b = K * rho`, with `rho` the position marginal of the current density.
    MeanField(&'a Kernel),
}

fn boundary_check(density: &PhaseGridDensity, step: usize) -> Result<()> {
    let b = density.boundary_mass();
    if b > KINETIC_BOUNDARY_TOLERANCE {
        return Err(LabError::DomainTooSmall(format!(
            "phase-space boundary mass {b:.2e} exceeds {KINETIC_BOUNDARY_TOLERANCE:.0e} at step {step}; widen the position or velocity box"
        )));
    }
    Ok(())
}

fn step_once(density: &mut PhaseGridDensity, force: &KineticForce, dt: f64, opts: &FpOptions, work: &mut Vec<f64>) -> Result<()> {
    let (xs, vs) = (density.x, density.v);
    let (gx, gv) = (xs.cells, vs.cells);
    let (hx, hv) = (xs.width(), vs.width());
    let kappa = density.friction;
    let x_centres = xs.centers();
    let mut b = vec![0.0; gx];
    match force {
        KineticForce::Frozen(field) => field.eval_many_at(density.time, &x_centres, &mut b),
        KineticForce::MeanField(kernel) => b = mean_field_values(kernel, &density.x_marginal())?,
    }
    let vmax = vs.center(gv - 1).abs().max(vs.center(0).abs());
    check_advection(vmax, dt, hx, "position transport")?;
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check_advection(bmax + kappa * vs.half_width, dt, hv, "velocity drift")?;
    let m = &mut density.masses;
    for j in 0..gv {
        let v = vs.center(j);
        upwind_line(m, j, gv, gx, |_| v, dt / hx);
    }
    for i in 0..gx {
        let bi = b[i];
        upwind_line(m, i * gv, 1, gv, |k| bi - kappa * (-vs.half_width + (k + 1) as f64 * hv), dt / hv);
    }
    let r = 0.5 * dt / (hv * hv);
    match opts.diffusion {
        DiffusionScheme::Explicit => (0..gx).for_each(|i| diffuse_line_explicit(m, i * gv, 1, gv, r)),
        DiffusionScheme::Implicit => (0..gx).for_each(|i| diffuse_line_implicit(m, i * gv, 1, gv, r, work)),
        DiffusionScheme::Off => {}
    }
    density.time += dt;
    Ok(())
}

/// Evolves a phase-space density, recording every `record_every` steps.
pub fn evolve_kinetic_path(
    density: &PhaseGridDensity,
    force: KineticForce,
    dt: f64,
    steps: usize,
    record_every: usize,
    opts: &FpOptions,
) -> Result<Vec<PhaseGridDensity>> {
    if record_every == 0 {
        return Err(LabError::invalid("record_every must be positive"));
    }
    let mut cur = density.clone();
    let mut path = vec![cur.clone()];
    if steps == 0 {
        return Ok(path);
    }
    if !(dt > 0.0) {
        return Err(LabError::invalid("time step must be positive"));
    }
    match force {
        KineticForce::Frozen(f) if f.dim() != 1 => return Err(LabError::invalid("kinetic solver needs a d = 1 field")),
        KineticForce::MeanField(k) if k.dim() != 1 => return Err(LabError::invalid("kinetic solver needs a d = 1 kernel")),
        _ => {}
    }
    if opts.diffusion == DiffusionScheme::Explicit {
        let limit = opts.safety * density.v.width().powi(2);
        if dt > limit * (1.0 + 1e-12) {
            return Err(LabError::Cfl(format!(
                "explicit velocity diffusion needs dt <= h_v^2 = {limit:.3e}, got dt = {dt:.3e}"
            )));
        }
    }
    boundary_check(&cur, 0)?;
    let mut work = Vec::new();
    for k in 1..=steps {
        step_once(&mut cur, &force, dt, opts, &mut work)?;
        boundary_check(&cur, k)?;
        if k % record_every == 0 {
            path.push(cur.clone());
        }
    }
    Ok(path)
}

pub fn evolve_kinetic(
    density: &PhaseGridDensity,
    force: KineticForce,
    dt: f64,
    steps: usize,
    opts: &FpOptions,
) -> Result<PhaseGridDensity> {
    Ok(evolve_kinetic_path(density, force, dt, steps, steps.max(1), opts)?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::{GridDensity, GridSpec};
    use statrs::function::erf::erf;

    fn gaussian(spec: GridSpec, mean: f64, sigma: f64) -> GridDensity {
        GridDensity::from_axis_cdf(spec, |x| 0.5 * (1.0 + erf((x - mean) / (sigma * 2f64.sqrt())))).unwrap()
    }

    #[test]
    fn zero_steps_is_identity() {
        let x = gaussian(GridSpec::new(1, 6.0, 24).unwrap(), 0.0, 1.0);
        let v = gaussian(GridSpec::new(1, 6.0, 24).unwrap(), 0.0, 1.0);
        let f = PhaseGridDensity::product(&x, &v, 0.0).unwrap();
        let zero = DriftField::zero(1);
        assert_eq!(evolve_kinetic(&f, KineticForce::Frozen(&zero), 0.01, 0, &FpOptions::default()).unwrap(), f);
    }

    #[test]
    fn free_velocity_variance_grows_linearly() {
        let xs = GridSpec::new(1, 10.0, 100).unwrap();
        let vs = GridSpec::new(1, 7.0, 140).unwrap();
        let f = PhaseGridDensity::product(&gaussian(xs, 0.0, 1.0), &gaussian(vs, 0.0, 1.0), 0.0).unwrap();
        let v0 = f.v_marginal().variance()[0];
        let zero = DriftField::zero(1);
        let dt = 0.002;
        let out = evolve_kinetic(&f, KineticForce::Frozen(&zero), dt, 500, &FpOptions::default()).unwrap();
        let v1 = out.v_marginal().variance()[0];
        assert!((v1 - (v0 + 1.0)).abs() < 0.02 * (v0 + 1.0), "{v1}");
        assert!((out.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn friction_relaxes_to_stationary_variance() {
        let xs = GridSpec::new(1, 20.0, 80).unwrap();
        let vs = GridSpec::new(1, 4.0, 160).unwrap();
        let f = PhaseGridDensity::product(&gaussian(xs, 0.0, 0.5), &gaussian(vs, 0.0, 0.2), 1.0).unwrap();
        let zero = DriftField::zero(1);
        let out = evolve_kinetic(&f, KineticForce::Frozen(&zero), 0.0025, 2400, &FpOptions::default()).unwrap();
        let var = out.v_marginal().variance()[0];
        assert!((var - 0.5).abs() < 0.03, "{var}");
    }

    #[test]
    fn position_mean_follows_velocity_mean() {
        let xs = GridSpec::new(1, 8.0, 160).unwrap();
        let vs = GridSpec::new(1, 6.0, 96).unwrap();
        let f = PhaseGridDensity::product(&gaussian(xs, 0.0, 0.7), &gaussian(vs, 0.5, 0.5), 0.0).unwrap();
        let zero = DriftField::zero(1);
        let out = evolve_kinetic(&f, KineticForce::Frozen(&zero), 0.004, 250, &FpOptions::default()).unwrap();
        let mean_x = out.x_marginal().mean()[0];
        assert!((mean_x - 0.5).abs() < xs.width(), "{mean_x}");
    }

    #[test]
    fn small_box_is_rejected() {
        let xs = GridSpec::new(1, 1.0, 16).unwrap();
        let vs = GridSpec::new(1, 1.0, 16).unwrap();
        let f = PhaseGridDensity::product(&gaussian(xs, 0.0, 1.0), &gaussian(vs, 0.0, 1.0), 0.0).unwrap();
        let zero = DriftField::zero(1);
        let e = evolve_kinetic(&f, KineticForce::Frozen(&zero), 0.001, 1, &FpOptions::default()).unwrap_err();
        assert!(matches!(e, LabError::DomainTooSmall(_)));
    }

    #[test]
    fn mean_field_mode_runs_and_conserves() {
        let xs = GridSpec::new(1, 8.0, 64).unwrap();
        let vs = GridSpec::new(1, 6.0, 64).unwrap();
        let f = PhaseGridDensity::product(&gaussian(xs, 0.0, 1.0), &gaussian(vs, 0.0, 1.0), 0.5).unwrap();
        let k = Kernel::sine(1).unwrap();
        let out = evolve_kinetic(&f, KineticForce::MeanField(&k), 0.004, 100, &FpOptions::default()).unwrap();
        assert!((out.total_mass() - 1.0).abs() < 1e-12);
        assert!(out.masses.iter().all(|m| *m >= 0.0));
    }
}
