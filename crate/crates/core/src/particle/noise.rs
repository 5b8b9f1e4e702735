use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};
use crate::rng::stream_rng;

/// Brownian increments for `N` particles over a fixed time grid.
///
/// Particle `i` draws from ChaCha stream `i` of the seed, so the increments of
/// one particle do not depend on `N`. Storage is `[step][particle][d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseStore {
    pub seed: u64,
    pub particles: usize,
    pub dim: usize,
    pub steps: usize,
    pub dt: f64,
    increments: Vec<f64>,
}

impl NoiseStore {
    pub fn generate(seed: u64, particles: usize, dim: usize, steps: usize, dt: f64) -> Result<Self> {
        if particles == 0 || dim == 0 {
            return Err(LabError::invalid("noise store needs N >= 1 and d >= 1"));
        }
        if !(dt > 0.0) {
            return Err(LabError::invalid("time step must be positive"));
        }
        let sd = dt.sqrt();
        let mut increments = vec![0.0; particles * steps * dim];
        for i in 0..particles {
            let mut rng = stream_rng(seed, i as u64);
            for k in 0..steps {
                let base = (k * particles + i) * dim;
                for a in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    increments[base + a] = sd * z;
                }
            }
        }
        Ok(NoiseStore { seed, particles, dim, steps, dt, increments })
    }

    /// Store with explicitly given increments (layout `[step][particle][d]`).
    pub fn from_increments(particles: usize, dim: usize, steps: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != particles * steps * dim {
            return Err(LabError::Shape("increment array does not match (steps, N, d)".into()));
        }
        Ok(NoiseStore { seed: 0, particles, dim, steps, dt, increments })
    }

    /// Increments of all particles at step `k`, flat `N x d`.
    #[inline]
    pub fn step(&self, k: usize) -> &[f64] {
        let w = self.particles * self.dim;
        &self.increments[k * w..(k + 1) * w]
    }

    #[inline]
    pub fn increment(&self, particle: usize, k: usize) -> &[f64] {
        let base = (k * self.particles + particle) * self.dim;
        &self.increments[base..base + self.dim]
    }

    /// `B_t` of one particle at every grid time (starting at 0).
    pub fn path(&self, particle: usize) -> Vec<Vec<f64>> {
        let mut b = vec![0.0; self.dim];
        let mut out = vec![b.clone()];
        for k in 0..self.steps {
            for (v, inc) in b.iter_mut().zip(self.increment(particle, k)) {
                *v += inc;
            }
            out.push(b.clone());
        }
        out
    }

    pub fn raw(&self) -> &[f64] {
        &self.increments
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_prefix_stable() {
        let a = NoiseStore::generate(11, 4, 2, 8, 0.01).unwrap();
        let b = NoiseStore::generate(11, 4, 2, 8, 0.01).unwrap();
        assert_eq!(a, b);
        let c = NoiseStore::generate(11, 7, 2, 8, 0.01).unwrap();
        for i in 0..4 {
            for k in 0..8 {
                assert_eq!(a.increment(i, k), c.increment(i, k));
            }
        }
    }

    #[test]
    fn moments_match_dt() {
        let dt = 0.02;
        let s = NoiseStore::generate(3, 2000, 1, 50, dt).unwrap();
        let n = s.raw().len() as f64;
        let mean = s.raw().iter().sum::<f64>() / n;
        let var = s.raw().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // Standard errors: sqrt(dt/n) for the mean, dt*sqrt(2/n) for the variance.
        assert!(mean.abs() < 4.0 * (dt / n).sqrt());
        assert!((var - dt).abs() < 4.0 * dt * (2.0 / n).sqrt());
    }

    #[test]
    fn coordinates_uncorrelated() {
        let dt = 0.5;
        let s = NoiseStore::generate(5, 5000, 2, 20, dt).unwrap();
        let n = (s.raw().len() / 2) as f64;
        let cov: f64 = s.raw().chunks(2).map(|p| p[0] * p[1]).sum::<f64>() / n;
        assert!(cov.abs() < 4.0 * dt / n.sqrt());
    }
}
