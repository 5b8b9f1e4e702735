//! Weighted norms and the numerical check of the weighted energy estimate
//! `||f^b_t - f^c_t||_{L^{p,2}} <= C int_0^t ||b_s - c_s||_{L^{-r,q'}} ds`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::DriftField;
use crate::pde::fokker_planck::{evolve_linear_fp_path, FpOptions};
use crate::pde::grid::{GridDensity, GridSpec};

fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `(sum_cells |g|^q <x>^{r q} vol)^{1/q}` for a scalar cell function `g`;
/// `q = inf` gives `max |g| <x>^r`. `r` may be negative.
pub fn weighted_norm_values(spec: &GridSpec, values: &[f64], r: f64, q: f64) -> Result<f64> {
    if values.len() != spec.len() {
        return Err(LabError::Shape(format!("{} values for {} cells", values.len(), spec.len())));
    }
    if !(q >= 1.0) {
        return Err(LabError::invalid("norm order must be at least 1"));
    }
    let d = spec.dim;
    let vol = spec.cell_volume();
    let mut c = vec![0.0; d];
    if q.is_infinite() {
        let mut best = 0.0f64;
        for (k, g) in values.iter().enumerate() {
            spec.center_of(k, &mut c);
            best = best.max(g.abs() * bracket(&c).powf(r));
        }
        return Ok(best);
    }
    let mut s = 0.0;
    for (k, g) in values.iter().enumerate() {
        spec.center_of(k, &mut c);
        s += g.abs().powf(q) * bracket(&c).powf(r * q) * vol;
    }
    Ok(s.powf(1.0 / q))
}

/// Weighted `L^{r,q}` norm of a density (`q` in `{1, 2}`).
pub fn weighted_norm(density: &GridDensity, r: f64, q: u32) -> Result<f64> {
    if q != 1 && q != 2 {
        return Err(LabError::invalid("density norms use q in {1, 2}"));
    }
    if r < 0.0 {
        return Err(LabError::invalid("density weights need r >= 0"));
    }
    weighted_norm_values(&density.spec, &density.density_values(), r, q as f64)
}

/// `q'` with `1/q + 1/q' = 1/2`; `q = 2` maps to infinity and `q = inf` to 2.
pub fn dual_exponent(q: f64) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(LabError::invalid(format!("energy estimate needs q >= 2, got {q}")));
    }
    if q == 2.0 {
        Ok(f64::INFINITY)
    } else if q.is_infinite() {
        Ok(2.0)
    } else {
        Ok(2.0 * q / (q - 2.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    /// Weight exponent on the density side.
    pub p: f64,
    /// Weight exponent (entering as `<x>^{-r}`) on the field side.
    pub r: f64,
    /// Field integrability; the field norm uses the dual `q'`.
    pub q: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights { p: 1.0, r: 1.0, q: f64::INFINITY }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `sup_t lhs / rhs` over times with `rhs > 0`.
    pub fitted_c: f64,
    /// Times where `rhs = 0` but `lhs > 0`, or where `lhs(0) != 0`.
    pub violations: usize,
}

/// Evolves `f0` under both fields and compares the weighted distance of the
/// solutions with the time-integrated weighted distance of the fields.
pub fn verify_energy_estimate(
    b: &DriftField,
    c: &DriftField,
    f0: &GridDensity,
    horizon: f64,
    dt: f64,
    weights: EnergyWeights,
    opts: &FpOptions,
) -> Result<EnergyReport> {
    let qd = dual_exponent(weights.q)?;
    if !(weights.p > 0.0) || !(weights.r > 0.0) {
        return Err(LabError::invalid("weight exponents must be positive"));
    }
    let steps = (horizon / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(LabError::invalid("horizon must be a positive multiple of dt"));
    }
    let fb = evolve_linear_fp_path(f0, b, dt, steps, 1, opts)?;
    let fc = evolve_linear_fp_path(f0, c, dt, steps, 1, opts)?;
    let spec = f0.spec;
    let d = spec.dim;
    let centres = spec.centers();
    let mut vb = vec![0.0; centres.len()];
    let mut vc = vec![0.0; centres.len()];
    let mut times = Vec::with_capacity(steps + 1);
    let mut lhs = Vec::with_capacity(steps + 1);
    let mut rhs = Vec::with_capacity(steps + 1);
    let mut integral = 0.0;
    let vol = spec.cell_volume();
    for k in 0..=steps {
        let t = f0.time + k as f64 * dt;
        let diff: Vec<f64> = fb[k].masses.iter().zip(&fc[k].masses).map(|(x, y)| (x - y) / vol).collect();
        times.push(t);
        lhs.push(weighted_norm_values(&spec, &diff, weights.p, 2.0)?);
        rhs.push(integral);
        if k < steps {
            b.eval_many_at(t, &centres, &mut vb);
            c.eval_many_at(t, &centres, &mut vc);
            let gap: Vec<f64> = vb
                .chunks(d)
                .zip(vc.chunks(d))
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
                .collect();
            integral += dt * weighted_norm_values(&spec, &gap, -weights.r, qd)?;
        }
    }
    let mut fitted_c = 0.0f64;
    let mut violations = usize::from(lhs[0] != 0.0);
    for (l, r) in lhs.iter().zip(&rhs).skip(1) {
        if *r > 0.0 {
            fitted_c = fitted_c.max(l / r);
        } else if *l > 0.0 {
            violations += 1;
        }
    }
    Ok(EnergyReport { times, lhs, rhs, fitted_c, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    fn gaussian(spec: GridSpec) -> GridDensity {
        GridDensity::from_axis_cdf(spec, |x| 0.5 * (1.0 + erf(x / 2f64.sqrt()))).unwrap()
    }

    #[test]
    fn norms_of_simple_densities() {
        let spec = GridSpec::new(1, 1.0, 1).unwrap();
        let f = GridDensity::new(spec, vec![1.0]).unwrap();
        assert!((weighted_norm(&f, 3.0, 1).unwrap() - 1.0).abs() < 1e-15);
        let spec = GridSpec::new(1, 1.0, 10).unwrap();
        let u = GridDensity::new(spec, vec![0.1; 10]).unwrap();
        assert!((weighted_norm(&u, 0.0, 1).unwrap() - 1.0).abs() < 1e-12);
        let g = gaussian(GridSpec::new(1, 10.0, 2000).unwrap());
        assert!((weighted_norm(&g, 2.0, 1).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(dual_exponent(f64::INFINITY).unwrap(), 2.0);
        assert_eq!(dual_exponent(2.0).unwrap(), f64::INFINITY);
        assert!((dual_exponent(4.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(dual_exponent(1.5).is_err());
    }

    #[test]
    fn identical_fields_give_zero_lhs() {
        let f0 = gaussian(GridSpec::new(1, 6.0, 96).unwrap());
        let b = DriftField::constant(vec![0.3]);
        let r = verify_energy_estimate(&b, &b, &f0, 0.2, 0.004, EnergyWeights::default(), &FpOptions::default()).unwrap();
        assert!(r.lhs.iter().all(|v| *v == 0.0));
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn shifted_field_has_finite_constant_and_symmetric_lhs() {
        let f0 = gaussian(GridSpec::new(1, 6.0, 96).unwrap());
        let b = DriftField::zero(1);
        let c = DriftField::constant(vec![0.5]);
        let opts = FpOptions::default();
        let w = EnergyWeights::default();
        let r = verify_energy_estimate(&b, &c, &f0, 0.4, 0.004, w, &opts).unwrap();
        assert_eq!(r.lhs[0], 0.0);
        assert!(r.fitted_c.is_finite() && r.fitted_c > 0.0);
        assert_eq!(r.violations, 0);
        // rhs is linear in t for a constant gap
        let k = r.rhs.len() - 1;
        assert!((r.rhs[k] / r.rhs[k / 2] - 2.0).abs() < 1e-9);
        let s = verify_energy_estimate(&c, &b, &f0, 0.4, 0.004, w, &opts).unwrap();
        assert_eq!(r.lhs, s.lhs);
    }
}
