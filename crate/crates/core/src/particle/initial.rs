//! Initial laws `f_0`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{LabError, Result};
use crate::pde::grid::{GridDensity, GridSpec};
use crate::rng::{stream_rng, INITIAL_STREAM};

/// Stream used for initial velocities of second-order systems.
pub const VELOCITY_STREAM: u64 = u64::MAX - 2;

fn one() -> f64 {
    1.0
}

/// A product law on `R^d`: every coordinate is drawn independently from the
/// same one-dimensional family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum F0Spec {
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    UniformBox {
        #[serde(default = "one")]
        half_width: f64,
    },
    /// Density proportional to `exp(-1/(1-(x/r)^2))` on `|x| < r`.
    Bump {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Deterministic start at `point` in every coordinate.
    Dirac {
        #[serde(default)]
        point: f64,
    },
}

impl Default for F0Spec {
    fn default() -> Self {
        F0Spec::Gaussian { mean: 0.0, sigma: 1.0 }
    }
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// `int_{-1}^{u} bump(s) ds` by composite Simpson.
fn bump_integral(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    let panels = 600;
    let h = (u + 1.0) / panels as f64;
    if h == 0.0 {
        return 0.0;
    }
    let mut s = bump(-1.0) + bump(u);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * bump(-1.0 + i as f64 * h);
    }
    s * h / 3.0
}

impl F0Spec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            F0Spec::Gaussian { sigma, mean } => {
                if !(sigma > 0.0) || !sigma.is_finite() || !mean.is_finite() {
                    return Err(LabError::invalid(format!(
                        "gaussian initial law needs sigma > 0, got {sigma} (use the dirac family for point masses)"
                    )));
                }
            }
            F0Spec::UniformBox { half_width: r } | F0Spec::Bump { radius: r } => {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(LabError::invalid("initial law width must be positive"));
                }
            }
            F0Spec::Dirac { point } => {
                if !point.is_finite() {
                    return Err(LabError::invalid("dirac point must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Largest moment order known to be finite (all families here have
    /// moments of every order).
    pub fn moment_order(&self) -> f64 {
        f64::INFINITY
    }

    /// Per-coordinate variance.
    pub fn variance(&self) -> f64 {
        match *self {
            F0Spec::Gaussian { sigma, .. } => sigma * sigma,
            F0Spec::UniformBox { half_width } => half_width * half_width / 3.0,
            F0Spec::Bump { radius } => {
                // Second moment of the normalised bump by Simpson quadrature.
                let n = 2000;
                let h = 2.0 / n as f64;
                let (mut z, mut m2) = (0.0, 0.0);
                for i in 0..=n {
                    let s = -1.0 + i as f64 * h;
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    z += w * bump(s);
                    m2 += w * s * s * bump(s);
                }
                radius * radius * m2 / z
            }
            F0Spec::Dirac { .. } => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            F0Spec::Gaussian { mean, .. } => mean,
            F0Spec::Dirac { point } => point,
            _ => 0.0,
        }
    }

    /// One-dimensional CDF of a coordinate.
    pub fn axis_cdf(&self, x: f64) -> f64 {
        match *self {
            F0Spec::Gaussian { mean, sigma } => 0.5 * (1.0 + erf((x - mean) / (sigma * 2f64.sqrt()))),
            F0Spec::UniformBox { half_width } => ((x + half_width) / (2.0 * half_width)).clamp(0.0, 1.0),
            F0Spec::Bump { radius } => bump_integral(x / radius) / bump_integral(1.0),
            F0Spec::Dirac { point } => {
                if x >= point {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact cell integrals of the law on `spec`, renormalised to the box.
    pub fn to_grid(&self, spec: GridSpec) -> Result<GridDensity> {
        self.validate()?;
        if let F0Spec::Dirac { point } = *self {
            return GridDensity::point_mass(spec, &vec![point; spec.dim]);
        }
        GridDensity::from_axis_cdf(spec, |x| self.axis_cdf(x))
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            F0Spec::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            F0Spec::UniformBox { half_width } => rng.gen_range(-half_width..=half_width),
            F0Spec::Bump { radius } => loop {
                let s: f64 = rng.gen_range(-1.0..1.0);
                if rng.gen::<f64>() < bump(s) {
                    break radius * s;
                }
            },
            F0Spec::Dirac { point } => point,
        }
    }

    /// `n` i.i.d. points in `R^d` (flat `n x d`) from `stream` of `seed`.
    pub fn sample_stream(&self, n: usize, dim: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(LabError::invalid("sample size must be at least 1"));
        }
        let mut rng = stream_rng(seed, stream);
        Ok((0..n * dim).map(|_| self.draw(&mut rng)).collect())
    }
}

/// `N` i.i.d. draws from `f0` in `R^d`, deterministic in `seed`.
pub fn sample_initial(f0: &F0Spec, n: usize, dim: usize, seed: u64) -> Result<Vec<f64>> {
    f0.sample_stream(n, dim, seed, INITIAL_STREAM)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mean_within_clt_band() {
        let xs = sample_initial(&F0Spec::Gaussian { mean: 0.0, sigma: 1.0 }, 100_000, 1, 4).unwrap();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(m.abs() <= 3.0 / (xs.len() as f64).sqrt());
    }

    #[test]
    fn uniform_variance() {
        let xs = sample_initial(&F0Spec::UniformBox { half_width: 1.0 }, 100_000, 1, 8).unwrap();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        assert!((v - 1.0 / 3.0).abs() < 0.01 / 3.0);
    }

    #[test]
    fn deterministic_and_rejects_degenerate_gaussian() {
        let f = F0Spec::Bump { radius: 2.0 };
        assert_eq!(sample_initial(&f, 50, 2, 1).unwrap(), sample_initial(&f, 50, 2, 1).unwrap());
        assert!(sample_initial(&F0Spec::Gaussian { mean: 0.0, sigma: 0.0 }, 5, 1, 1).is_err());
    }

    fn ks_statistic(f: &F0Spec, seed: u64) -> f64 {
        let mut xs = sample_initial(f, 4000, 1, seed).unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = f.axis_cdf(x);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn samplers_match_cdfs() {
        // 1% critical value of the one-sample KS statistic: 1.63 / sqrt(n).
        let crit = 1.63 / 4000f64.sqrt();
        for f in [
            F0Spec::Gaussian { mean: 0.5, sigma: 2.0 },
            F0Spec::UniformBox { half_width: 1.5 },
            F0Spec::Bump { radius: 1.0 },
        ] {
            assert!(ks_statistic(&f, 21) < crit, "{f:?}");
        }
    }

    #[test]
    fn grid_projection_is_normalised() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        for f in [F0Spec::default(), F0Spec::Bump { radius: 1.0 }, F0Spec::Dirac { point: 0.3 }] {
            let g = f.to_grid(spec).unwrap();
            assert!((g.total_mass() - 1.0).abs() < 1e-12);
        }
    }
}
