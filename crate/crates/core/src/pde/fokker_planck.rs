//! Finite-volume solver for `d_t f + div(b f) = (1/2) Laplace f` on a box with
//! no-flux walls, and its mean-field closure `b = K * f`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{mean_field_drift, DriftField, Kernel};
use crate::pde::grid::{GridDensity, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    #[default]
    Explicit,
    /// Backward Euler, split by axis (one tridiagonal solve per grid line).
    Implicit,
    /// No diffusion; pure transport for testing the advection step.
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpOptions {
    pub diffusion: DiffusionScheme,
    /// Multiplies the explicit diffusion limit `h^2 / d`.
    pub safety: f64,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions { diffusion: DiffusionScheme::Explicit, safety: 1.0 }
    }
}

impl FpOptions {
    pub fn implicit() -> Self {
        FpOptions { diffusion: DiffusionScheme::Implicit, ..Default::default() }
    }

    pub fn transport_only() -> Self {
        FpOptions { diffusion: DiffusionScheme::Off, ..Default::default() }
    }
}

/// Largest explicit step allowed by the diffusion limit, or infinity.
pub fn diffusion_dt_limit(spec: &GridSpec, opts: &FpOptions) -> f64 {
    match opts.diffusion {
        DiffusionScheme::Explicit => opts.safety * spec.width().powi(2) / spec.dim as f64,
        _ => f64::INFINITY,
    }
}

fn check_diffusion(spec: &GridSpec, dt: f64, opts: &FpOptions) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LabError::invalid("time step must be positive"));
    }
    let limit = diffusion_dt_limit(spec, opts);
    if dt > limit * (1.0 + 1e-12) {
        return Err(LabError::Cfl(format!(
            "explicit diffusion needs dt <= h^2/d = {limit:.3e}, got dt = {dt:.3e}; refine dt or use implicit diffusion"
        )));
    }
    Ok(())
}

pub(crate) fn check_advection(vmax: f64, dt: f64, h: f64, what: &str) -> Result<()> {
    if !vmax.is_finite() || vmax * dt > h * (1.0 + 1e-12) {
        return Err(LabError::Cfl(format!(
            "{what}: sup|b| * dt = {:.3e} exceeds the cell width {h:.3e}",
            vmax * dt
        )));
    }
    Ok(())
}

/// Upwind transport along one grid line. `vel[k]` is the velocity on the face
/// between line cells `k` and `k + 1`; `c = dt / h`.
pub(crate) fn upwind_line(m: &mut [f64], start: usize, stride: usize, n: usize, vel: impl Fn(usize) -> f64, c: f64) {
    if n < 2 {
        return;
    }
    let mut prev_flux = 0.0;
    let mut left_old = m[start];
    for k in 0..n - 1 {
        let i = start + k * stride;
        let j = i + stride;
        let right_old = m[j];
        let v = vel(k);
        let flux = c * (v.max(0.0) * left_old + v.min(0.0) * right_old);
        m[i] = left_old + prev_flux - flux;
        prev_flux = flux;
        left_old = right_old;
    }
    m[start + (n - 1) * stride] = left_old + prev_flux;
}

/// Explicit `r (m_{k+1} - 2 m_k + m_{k-1})` with reflecting ends.
pub(crate) fn diffuse_line_explicit(m: &mut [f64], start: usize, stride: usize, n: usize, r: f64) {
    if n < 2 {
        return;
    }
    let mut prev_flux = 0.0;
    let mut left_old = m[start];
    for k in 0..n - 1 {
        let i = start + k * stride;
        let right_old = m[i + stride];
        let flux = r * (left_old - right_old);
        m[i] = left_old + prev_flux - flux;
        prev_flux = flux;
        left_old = right_old;
    }
    m[start + (n - 1) * stride] = left_old + prev_flux;
}

/// Backward Euler for the same operator (Thomas algorithm).
pub(crate) fn diffuse_line_implicit(m: &mut [f64], start: usize, stride: usize, n: usize, r: f64, work: &mut Vec<f64>) {
    if n < 2 {
        return;
    }
    work.clear();
    work.resize(n, 0.0);
    let diag = |k: usize| 1.0 + r * if k == 0 || k == n - 1 { 1.0 } else { 2.0 };
    // forward sweep: work holds the modified super-diagonal
    let mut beta = diag(0);
    work[0] = -r / beta;
    m[start] /= beta;
    for k in 1..n {
        beta = diag(k) + r * work[k - 1];
        if k < n - 1 {
            work[k] = -r / beta;
        }
        let i = start + k * stride;
        m[i] = (m[i] + r * m[i - stride]) / beta;
    }
    for k in (0..n - 1).rev() {
        let i = start + k * stride;
        m[i] -= work[k] * m[i + stride];
    }
}

/// Face-normal velocities of `drift` at time `t`, one array per axis.
/// Axis `a` faces are ordered by line then position along the line.
fn face_velocities(spec: &GridSpec, drift: &DriftField, t: f64, buf: &mut FaceBuffers) -> f64 {
    let g = spec.cells;
    let d = spec.dim;
    let h = spec.width();
    let mut vmax = 0.0f64;
    for a in 0..d {
        let pts = &mut buf.points[a];
        if pts.is_empty() {
            let lines = if d == 1 { 1 } else { g };
            pts.reserve(lines * (g - 1) * d);
            for line in 0..lines {
                for k in 0..g - 1 {
                    let along = -spec.half_width + (k + 1) as f64 * h;
                    if d == 1 {
                        pts.push(along);
                    } else if a == 0 {
                        pts.push(along);
                        pts.push(spec.center(line));
                    } else {
                        pts.push(spec.center(line));
                        pts.push(along);
                    }
                }
            }
            buf.values[a] = vec![0.0; pts.len()];
        }
        drift.eval_many_at(t, &buf.points[a], &mut buf.values[a]);
        let vals = &buf.values[a];
        for f in 0..vals.len() / d {
            vmax = vmax.max(vals[f * d + a].abs());
        }
    }
    vmax
}

#[derive(Default)]
struct FaceBuffers {
    points: [Vec<f64>; 2],
    values: [Vec<f64>; 2],
    work: Vec<f64>,
}

fn step_once(density: &mut GridDensity, drift: &DriftField, dt: f64, opts: &FpOptions, buf: &mut FaceBuffers) -> Result<()> {
    let spec = density.spec;
    let g = spec.cells;
    let d = spec.dim;
    let h = spec.width();
    let vmax = face_velocities(&spec, drift, density.time, buf);
    check_advection(vmax, dt, h, "advection")?;
    let c = dt / h;
    let m = &mut density.masses;
    for a in 0..d {
        let vals = &buf.values[a];
        let lines = if d == 1 { 1 } else { g };
        for line in 0..lines {
            let (start, stride) = if d == 1 {
                (0, 1)
            } else if a == 0 {
                (line, g)
            } else {
                (line * g, 1)
            };
            let base = line * (g - 1);
            upwind_line(m, start, stride, g, |k| vals[(base + k) * d + a], c);
        }
    }
    if opts.diffusion != DiffusionScheme::Off {
        let r = 0.5 * dt / (h * h);
        for a in 0..d {
            let lines = if d == 1 { 1 } else { g };
            for line in 0..lines {
                let (start, stride) = if d == 1 {
                    (0, 1)
                } else if a == 0 {
                    (line, g)
                } else {
                    (line * g, 1)
                };
                match opts.diffusion {
                    DiffusionScheme::Explicit => diffuse_line_explicit(m, start, stride, g, r),
                    _ => diffuse_line_implicit(m, start, stride, g, r, &mut buf.work),
                }
            }
        }
    }
    density.time += dt;
    Ok(())
}

fn validate(density: &GridDensity, drift: &DriftField, dt: f64, opts: &FpOptions) -> Result<()> {
    if drift.dim() != density.spec.dim {
        return Err(LabError::invalid("drift and density dimensions differ"));
    }
    check_diffusion(&density.spec, dt, opts)
}

/// Evolves `density` by `steps` steps of size `dt` under a frozen drift.
pub fn evolve_linear_fp(
    density: &GridDensity,
    drift: &DriftField,
    dt: f64,
    steps: usize,
    opts: &FpOptions,
) -> Result<GridDensity> {
    let mut out = density.clone();
    if steps == 0 {
        return Ok(out);
    }
    validate(density, drift, dt, opts)?;
    let mut buf = FaceBuffers::default();
    for _ in 0..steps {
        step_once(&mut out, drift, dt, opts, &mut buf)?;
    }
    Ok(out)
}

/// Like [`evolve_linear_fp`] but returns the density after every
/// `record_every` steps, starting with the input.
pub fn evolve_linear_fp_path(
    density: &GridDensity,
    drift: &DriftField,
    dt: f64,
    steps: usize,
    record_every: usize,
    opts: &FpOptions,
) -> Result<Vec<GridDensity>> {
    if record_every == 0 {
        return Err(LabError::invalid("record_every must be positive"));
    }
    let mut cur = density.clone();
    let mut path = vec![cur.clone()];
    if steps == 0 {
        return Ok(path);
    }
    validate(density, drift, dt, opts)?;
    let mut buf = FaceBuffers::default();
    for k in 1..=steps {
        step_once(&mut cur, drift, dt, opts, &mut buf)?;
        if k % record_every == 0 {
            path.push(cur.clone());
        }
    }
    Ok(path)
}

/// Mean-field equation: each step freezes `b = K * f` at the current density
/// and takes one linear step with it.
pub fn evolve_mckean(
    density: &GridDensity,
    kernel: &Kernel,
    dt: f64,
    steps: usize,
    opts: &FpOptions,
) -> Result<GridDensity> {
    Ok(evolve_mckean_path(density, kernel, dt, steps, steps.max(1), opts)?.pop().unwrap())
}

pub fn evolve_mckean_path(
    density: &GridDensity,
    kernel: &Kernel,
    dt: f64,
    steps: usize,
    record_every: usize,
    opts: &FpOptions,
) -> Result<Vec<GridDensity>> {
    if record_every == 0 {
        return Err(LabError::invalid("record_every must be positive"));
    }
    if kernel.dim() != density.spec.dim {
        return Err(LabError::invalid("kernel and density dimensions differ"));
    }
    let mut cur = density.clone();
    let mut path = vec![cur.clone()];
    if steps > 0 {
        check_diffusion(&density.spec, dt, opts)?;
    }
    for k in 1..=steps {
        let b = mean_field_drift(kernel, &cur)?;
        cur = evolve_linear_fp(&cur, &b, dt, 1, opts)?;
        if k % record_every == 0 {
            path.push(cur.clone());
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HolderShape;
    use statrs::function::erf::erf;

    fn gaussian(spec: GridSpec, sigma: f64) -> GridDensity {
        GridDensity::from_axis_cdf(spec, |x| 0.5 * (1.0 + erf(x / (sigma * 2f64.sqrt())))).unwrap()
    }

    #[test]
    fn zero_steps_is_identity() {
        let spec = GridSpec::new(1, 4.0, 32).unwrap();
        let f = gaussian(spec, 1.0);
        // even an illegal dt is fine when nothing is done
        let out = evolve_linear_fp(&f, &DriftField::constant(vec![1e9]), 10.0, 0, &FpOptions::default()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn heat_flow_variance_and_mass() {
        let spec = GridSpec::new(1, 8.0, 256).unwrap();
        let f = gaussian(spec, 1.0);
        let v0 = f.variance()[0];
        let dt = spec.width().powi(2) * 0.5;
        let steps = (0.5 / dt).round() as usize;
        let t = steps as f64 * dt;
        for opts in [FpOptions::default(), FpOptions::implicit()] {
            let out = evolve_linear_fp(&f, &DriftField::zero(1), dt, steps, &opts).unwrap();
            let v = out.variance()[0];
            assert!((v - (v0 + t)).abs() < 0.01 * (v0 + t), "{v} vs {}", v0 + t);
            assert!((out.total_mass() - 1.0).abs() < 1e-12);
            assert!(out.masses.iter().all(|m| *m >= 0.0));
        }
    }

    #[test]
    fn constant_drift_translates_mean() {
        let spec = GridSpec::new(1, 6.0, 240).unwrap();
        let f = gaussian(spec, 0.5);
        let dt = 0.01;
        let out = evolve_linear_fp(&f, &DriftField::constant(vec![0.8]), dt, 200, &FpOptions::transport_only()).unwrap();
        assert!((out.mean()[0] - 1.6).abs() < spec.width());
    }

    #[test]
    fn planar_heat_flow() {
        let spec = GridSpec::new(2, 6.0, 64).unwrap();
        let f = gaussian(spec, 0.8);
        let v0 = f.variance();
        let dt = 0.9 * spec.width().powi(2) / 2.0;
        let steps = (0.4 / dt).round() as usize;
        let t = steps as f64 * dt;
        let out = evolve_linear_fp(&f, &DriftField::constant(vec![0.0, 0.0]), dt, steps, &FpOptions::default()).unwrap();
        for a in 0..2 {
            assert!((out.variance()[a] - v0[a] - t).abs() < 0.01 * (v0[a] + t));
        }
        assert!((out.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_violations_name_the_constraint() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let f = gaussian(spec, 1.0);
        let e = evolve_linear_fp(&f, &DriftField::zero(1), 1.0, 1, &FpOptions::default()).unwrap_err();
        assert!(matches!(&e, LabError::Cfl(m) if m.contains("diffusion")));
        assert!(e.is_config_error());
        let e = evolve_linear_fp(&f, &DriftField::constant(vec![1000.0]), 0.001, 1, &FpOptions::default()).unwrap_err();
        assert!(matches!(&e, LabError::Cfl(m) if m.contains("advection")));
        assert!(evolve_linear_fp(&f, &DriftField::zero(1), 1.0, 3, &FpOptions::implicit()).is_ok());
    }

    #[test]
    fn mckean_with_zero_kernel_is_heat_flow() {
        let spec = GridSpec::new(1, 6.0, 96).unwrap();
        let f = gaussian(spec, 1.0);
        let dt = 0.004;
        let a = evolve_mckean(&f, &Kernel::zero(1).unwrap(), dt, 50, &FpOptions::default()).unwrap();
        let b = evolve_linear_fp(&f, &DriftField::zero(1), dt, 50, &FpOptions::default()).unwrap();
        assert_eq!(a.masses, b.masses);
    }

    #[test]
    fn mckean_matches_externally_frozen_steps() {
        let spec = GridSpec::new(1, 6.0, 96).unwrap();
        let k = Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap();
        let f = gaussian(spec, 1.0);
        let dt = 0.004;
        let a = evolve_mckean(&f, &k, dt, 40, &FpOptions::default()).unwrap();
        let mut b = f.clone();
        for _ in 0..40 {
            let field = mean_field_drift(&k, &b).unwrap();
            b = evolve_linear_fp(&b, &field, dt, 1, &FpOptions::default()).unwrap();
        }
        assert_eq!(a.masses, b.masses);
    }

    #[test]
    fn odd_kernel_keeps_even_density_even() {
        let spec = GridSpec::new(1, 6.0, 120).unwrap();
        let f = gaussian(spec, 1.2);
        let out = evolve_mckean(&f, &Kernel::sine(1).unwrap(), 0.002, 100, &FpOptions::default()).unwrap();
        let g = spec.cells;
        for i in 0..g {
            assert!((out.masses[i] - out.masses[g - 1 - i]).abs() < 1e-14);
        }
    }

    #[test]
    fn attractive_kernel_contracts_spread_out_law() {
        let spec = GridSpec::new(1, 8.0, 160).unwrap();
        let f = gaussian(spec, 2.0);
        let attract = Kernel::displacement(1, -1.0, 1.0).unwrap();
        let out = evolve_mckean(&f, &attract, 0.004, 25, &FpOptions::default()).unwrap();
        assert!(out.second_moment() < f.second_moment());
    }

    #[test]
    fn implicit_line_solve_conserves_and_stays_positive() {
        let mut m = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let mut w = Vec::new();
        diffuse_line_implicit(&mut m, 0, 1, 5, 3.0, &mut w);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(m.iter().all(|v| *v > 0.0));
        assert!((m[0] - m[4]).abs() < 1e-15 && (m[1] - m[3]).abs() < 1e-15);
    }
}
