//! Time stepping for first- and second-order particle systems.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::drift::{DriftField, SnapshotDrift};
use crate::field::kernel::Kernel;
use crate::particle::initial::{sample_initial, F0Spec, VELOCITY_STREAM};
use crate::particle::noise::NoiseStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

fn default_half_width() -> f64 {
    8.0
}

fn yes() -> bool {
    true
}

/// Parameters of one particle run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub order: Order,
    pub particles: usize,
    pub dim: usize,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub friction: f64,
    #[serde(default)]
    pub initial: F0Spec,
    #[serde(default)]
    pub initial_velocity: F0Spec,
    #[serde(default)]
    pub seed: u64,
    /// Half-width `L` of the working domain; runs abort once `|X| > 10 L`.
    #[serde(default = "default_half_width")]
    pub domain_half_width: f64,
    #[serde(default = "yes")]
    pub self_interaction: bool,
}

impl SimConfig {
    pub fn first_order(particles: usize, dim: usize, horizon: f64, dt: f64, seed: u64) -> Self {
        SimConfig {
            order: Order::First,
            particles,
            dim,
            horizon,
            dt,
            friction: 0.0,
            initial: F0Spec::default(),
            initial_velocity: F0Spec::default(),
            seed,
            domain_half_width: default_half_width(),
            self_interaction: true,
        }
    }

    pub fn second_order(particles: usize, dim: usize, horizon: f64, dt: f64, friction: f64, seed: u64) -> Self {
        SimConfig { order: Order::Second, friction, ..SimConfig::first_order(particles, dim, horizon, dt, seed) }
    }

    /// Number of steps `T / dt`; errors unless it is a whole number.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.horizon >= 0.0) {
            return Err(LabError::invalid("need dt > 0 and T >= 0"));
        }
        let r = self.horizon / self.dt;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r.max(1.0) {
            return Err(LabError::invalid(format!("T/dt = {r} is not a whole number of steps")));
        }
        Ok(k as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(LabError::invalid("N must be at least 1"));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(LabError::Unsupported(format!("dimension {}", self.dim)));
        }
        if !(self.friction >= 0.0) {
            return Err(LabError::invalid("friction must be non-negative"));
        }
        if !self.self_interaction && self.particles < 2 {
            return Err(LabError::invalid("excluding self-interaction needs N >= 2"));
        }
        self.initial.validate()?;
        self.initial_velocity.validate()?;
        self.steps()?;
        Ok(())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        Ok((0..=self.steps()?).map(|k| k as f64 * self.dt).collect())
    }
}

/// Positions (and velocities) of all particles at time 0, flat `N x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub positions: Vec<f64>,
    pub velocities: Option<Vec<f64>>,
}

impl InitialState {
    pub fn sample(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let positions = sample_initial(&config.initial, config.particles, config.dim, config.seed)?;
        let velocities = match config.order {
            Order::First => None,
            Order::Second => Some(config.initial_velocity.sample_stream(
                config.particles,
                config.dim,
                config.seed,
                VELOCITY_STREAM,
            )?),
        };
        Ok(InitialState { positions, velocities })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SimConfig,
    pub drift: String,
    pub noise_seed: u64,
}

/// Particle paths on a shared time grid. `positions[step]` is flat `N x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBundle {
    pub order: Order,
    pub particles: usize,
    pub dim: usize,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
    pub provenance: Provenance,
}

impl TrajectoryBundle {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn position(&self, particle: usize, step: usize) -> &[f64] {
        &self.positions[step][particle * self.dim..(particle + 1) * self.dim]
    }

    pub fn velocity(&self, particle: usize, step: usize) -> Option<&[f64]> {
        self.velocities
            .as_ref()
            .map(|v| &v[step][particle * self.dim..(particle + 1) * self.dim])
    }

    /// Full state `(x, v)` or `x` of one particle.
    pub fn state(&self, particle: usize, step: usize) -> Vec<f64> {
        let mut s = self.position(particle, step).to_vec();
        if let Some(v) = self.velocity(particle, step) {
            s.extend_from_slice(v);
        }
        s
    }

    pub fn initial_state(&self) -> InitialState {
        InitialState {
            positions: self.positions[0].clone(),
            velocities: self.velocities.as_ref().map(|v| v[0].clone()),
        }
    }
}

/// Supplies the drift of every particle at a grid step.
pub trait DriftRule {
    /// Writes `b(t_k, X^i_k)` for all particles into `out` (flat `N x d`).
    fn drift(&mut self, step: usize, t: f64, positions: &[f64], out: &mut [f64]) -> Result<()>;
    fn descriptor(&self) -> String;
}

/// Self-consistent empirical drift `b^N` recomputed from each snapshot.
pub struct InteractingRule<'a> {
    pub kernel: &'a Kernel,
    pub self_interaction: bool,
}

impl DriftRule for InteractingRule<'_> {
    fn drift(&mut self, _step: usize, _t: f64, positions: &[f64], out: &mut [f64]) -> Result<()> {
        SnapshotDrift::new(self.kernel, positions, self.self_interaction).eval_many(positions, out);
        Ok(())
    }

    fn descriptor(&self) -> String {
        format!("interacting({},self={})", self.kernel.descriptor(), self.self_interaction)
    }
}

/// An externally supplied field.
pub struct FrozenRule<'a> {
    pub field: &'a DriftField,
}

impl DriftRule for FrozenRule<'_> {
    fn drift(&mut self, step: usize, t: f64, positions: &[f64], out: &mut [f64]) -> Result<()> {
        self.field.eval_all_at_step(step, t, positions, out);
        Ok(())
    }

    fn descriptor(&self) -> String {
        format!("frozen({})", self.field.descriptor())
    }
}

/// Coefficients of the exact Ornstein-Uhlenbeck velocity substep.
#[derive(Clone, Copy, Debug)]
pub struct OuStep {
    pub decay: f64,
    /// `phi_1(kappa dt) dt` with `phi_1(z) = (1 - e^-z)/z`.
    pub drift_weight: f64,
    /// Factor turning a Brownian increment into the exact OU noise.
    pub noise_scale: f64,
}

impl OuStep {
    pub fn new(friction: f64, dt: f64) -> Self {
        if friction == 0.0 {
            return OuStep { decay: 1.0, drift_weight: dt, noise_scale: 1.0 };
        }
        let z = friction * dt;
        let decay = (-z).exp();
        let phi1 = -(-z).exp_m1() / z;
        let var = -(-2.0 * z).exp_m1() / (2.0 * friction);
        OuStep { decay, drift_weight: phi1 * dt, noise_scale: (var / dt).sqrt() }
    }
}

fn check_noise(config: &SimConfig, noise: &NoiseStore, steps: usize) -> Result<()> {
    if noise.particles != config.particles || noise.dim != config.dim || noise.steps != steps {
        return Err(LabError::Shape(format!(
            "noise shape (N={}, d={}, steps={}) does not match config (N={}, d={}, steps={steps})",
            noise.particles, noise.dim, noise.steps, config.particles, config.dim
        )));
    }
    if (noise.dt - config.dt).abs() > 1e-15 * config.dt.max(1.0) {
        return Err(LabError::Shape("noise time step differs from config".into()));
    }
    Ok(())
}

fn guard(step: usize, xs: &[f64], limit: f64) -> Result<()> {
    for v in xs {
        if !v.is_finite() {
            return Err(LabError::Diverged { step, reason: "non-finite state".into() });
        }
        if v.abs() > limit {
            return Err(LabError::Diverged { step, reason: format!("|X| = {} exceeds {limit}", v.abs()) });
        }
    }
    Ok(())
}

/// Integrates a particle system with a given drift rule from `initial`.
///
/// First order: `X_{k+1} = X_k + b dt + dB_k`. Second order:
/// `X_{k+1} = X_k + V_k dt`, `V_{k+1} = e^{-kappa dt} V_k + b phi_1 dt + xi_k`.
pub fn integrate(
    config: &SimConfig,
    initial: &InitialState,
    noise: &NoiseStore,
    rule: &mut dyn DriftRule,
) -> Result<TrajectoryBundle> {
    config.validate()?;
    let steps = config.steps()?;
    check_noise(config, noise, steps)?;
    let nd = config.particles * config.dim;
    if initial.positions.len() != nd {
        return Err(LabError::Shape("initial positions do not match (N, d)".into()));
    }
    let limit = 10.0 * config.domain_half_width;
    let mut x = initial.positions.clone();
    guard(0, &x, limit)?;
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(x.clone());
    let mut b = vec![0.0; nd];
    let dt = config.dt;
    let velocities = match config.order {
        Order::First => {
            for k in 0..steps {
                rule.drift(k, k as f64 * dt, &x, &mut b)?;
                let db = noise.step(k);
                for j in 0..nd {
                    x[j] = x[j] + b[j] * dt + db[j];
                }
                guard(k + 1, &x, limit)?;
                positions.push(x.clone());
            }
            None
        }
        Order::Second => {
            let mut v = initial
                .velocities
                .clone()
                .ok_or_else(|| LabError::invalid("second-order run needs initial velocities"))?;
            if v.len() != nd {
                return Err(LabError::Shape("initial velocities do not match (N, d)".into()));
            }
            let ou = OuStep::new(config.friction, dt);
            let mut vels = Vec::with_capacity(steps + 1);
            vels.push(v.clone());
            for k in 0..steps {
                rule.drift(k, k as f64 * dt, &x, &mut b)?;
                let db = noise.step(k);
                for j in 0..nd {
                    x[j] += v[j] * dt;
                    v[j] = ou.decay * v[j] + b[j] * ou.drift_weight + db[j] * ou.noise_scale;
                }
                guard(k + 1, &x, limit)?;
                guard(k + 1, &v, f64::INFINITY)?;
                positions.push(x.clone());
                vels.push(v.clone());
            }
            Some(vels)
        }
    };
    Ok(TrajectoryBundle {
        order: config.order,
        particles: config.particles,
        dim: config.dim,
        times: config.times()?,
        positions,
        velocities,
        provenance: Provenance { config: config.clone(), drift: rule.descriptor(), noise_seed: noise.seed },
    })
}

/// Interacting system driven by `b^N` of `kernel`, initial data sampled from
/// the config.
pub fn simulate_interacting(config: &SimConfig, kernel: &Kernel, noise: &NoiseStore) -> Result<TrajectoryBundle> {
    let initial = InitialState::sample(config)?;
    simulate_interacting_from(config, kernel, noise, &initial)
}

pub fn simulate_interacting_from(
    config: &SimConfig,
    kernel: &Kernel,
    noise: &NoiseStore,
    initial: &InitialState,
) -> Result<TrajectoryBundle> {
    if kernel.dim() != config.dim {
        return Err(LabError::invalid("kernel dimension differs from config"));
    }
    let mut rule = InteractingRule { kernel, self_interaction: config.self_interaction };
    integrate(config, initial, noise, &mut rule)
}

/// Independent particles driven by a fixed field.
pub fn simulate_frozen(config: &SimConfig, drift: &DriftField, noise: &NoiseStore) -> Result<TrajectoryBundle> {
    let initial = InitialState::sample(config)?;
    simulate_frozen_from(config, drift, noise, &initial)
}

pub fn simulate_frozen_from(
    config: &SimConfig,
    drift: &DriftField,
    noise: &NoiseStore,
    initial: &InitialState,
) -> Result<TrajectoryBundle> {
    if drift.dim() != config.dim {
        return Err(LabError::invalid("drift dimension differs from config"));
    }
    let mut rule = FrozenRule { field: drift };
    integrate(config, initial, noise, &mut rule)
}

/// Zero-drift, zero-noise flow from the initial data: constant paths (first
/// order) or `X_0 + V_0 (1 - e^{-kappa t})/kappa`, `V_0 e^{-kappa t}`.
pub fn reference_trajectories(config: &SimConfig, initial: &InitialState) -> Result<TrajectoryBundle> {
    config.validate()?;
    let times = config.times()?;
    let nd = config.particles * config.dim;
    if initial.positions.len() != nd {
        return Err(LabError::Shape("initial positions do not match (N, d)".into()));
    }
    let (positions, velocities) = match config.order {
        Order::First => (vec![initial.positions.clone(); times.len()], None),
        Order::Second => {
            let v0 = initial
                .velocities
                .as_ref()
                .ok_or_else(|| LabError::invalid("second-order reference needs initial velocities"))?;
            let kappa = config.friction;
            let mut xs = Vec::with_capacity(times.len());
            let mut vs = Vec::with_capacity(times.len());
            for &t in &times {
                let (reach, decay) = reference_factors(kappa, t);
                xs.push(initial.positions.iter().zip(v0).map(|(x, v)| x + v * reach).collect());
                vs.push(v0.iter().map(|v| v * decay).collect());
            }
            (xs, Some(vs))
        }
    };
    Ok(TrajectoryBundle {
        order: config.order,
        particles: config.particles,
        dim: config.dim,
        times,
        positions,
        velocities,
        provenance: Provenance { config: config.clone(), drift: "reference".into(), noise_seed: 0 },
    })
}

/// `((1 - e^{-kappa t})/kappa, e^{-kappa t})`, with the `kappa -> 0` limit `(t, 1)`.
pub fn reference_factors(kappa: f64, t: f64) -> (f64, f64) {
    if kappa == 0.0 {
        (t, 1.0)
    } else {
        (-(-kappa * t).exp_m1() / kappa, (-kappa * t).exp())
    }
}

/// Per-particle path statistics of `Z = X - X~`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementStats {
    /// `sup_t |Z^i_t|` per particle.
    pub sup_norm: Vec<f64>,
    /// For each requested `eps`: per-particle `max |Z_t - Z_s|` over
    /// `|t - s| <= eps^3`.
    pub moduli: Vec<(f64, Vec<f64>)>,
}

/// Sup norms and increment moduli of the compensated paths.
pub fn compensated_increment_stats(
    bundle: &TrajectoryBundle,
    reference: &TrajectoryBundle,
    eps: &[f64],
) -> Result<IncrementStats> {
    if bundle.particles != reference.particles
        || bundle.dim != reference.dim
        || bundle.times.len() != reference.times.len()
        || bundle.order != reference.order
    {
        return Err(LabError::Shape("bundle and reference differ in shape".into()));
    }
    if bundle.times.iter().zip(&reference.times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(LabError::Shape("bundle and reference use different time grids".into()));
    }
    let n = bundle.particles;
    let steps = bundle.steps();
    let dt = if steps > 0 { bundle.times[1] - bundle.times[0] } else { 1.0 };
    let mut sup_norm = vec![0.0; n];
    let mut moduli: Vec<(f64, Vec<f64>)> = eps.iter().map(|&e| (e, vec![0.0; n])).collect();
    for i in 0..n {
        let z: Vec<Vec<f64>> = (0..=steps)
            .map(|k| {
                bundle
                    .state(i, k)
                    .iter()
                    .zip(reference.state(i, k))
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        sup_norm[i] = z.iter().map(|v| norm(v)).fold(0.0, f64::max);
        for (e, out) in moduli.iter_mut() {
            let window = ((e.powi(3) / dt) + 1e-9).floor() as usize;
            let mut m: f64 = 0.0;
            for s in 0..=steps {
                for t in s + 1..=(s + window).min(steps) {
                    let d: f64 = z[t].iter().zip(&z[s]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    m = m.max(d);
                }
            }
            out[i] = m;
        }
    }
    Ok(IncrementStats { sup_norm, moduli })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::kernel::HolderShape;
    use std::sync::Arc;

    fn cfg1(n: usize, steps: usize) -> SimConfig {
        SimConfig::first_order(n, 1, steps as f64 / 64.0, 1.0 / 64.0, 7)
    }

    #[test]
    fn zero_kernel_is_initial_plus_noise_sum() {
        let c = cfg1(5, 64);
        let noise = NoiseStore::generate(3, 5, 1, 64, c.dt).unwrap();
        let k = Kernel::zero(1).unwrap();
        let b = simulate_interacting(&c, &k, &noise).unwrap();
        for i in 0..5 {
            let mut x = b.position(i, 0)[0];
            for s in 0..64 {
                x += noise.increment(i, s)[0];
            }
            assert_eq!(x, b.position(i, 64)[0]);
        }
    }

    #[test]
    fn free_kinetic_motion() {
        let c = SimConfig::second_order(4, 2, 0.5, 1.0 / 32.0, 0.0, 2);
        let noise = NoiseStore::generate(9, 4, 2, 16, c.dt).unwrap();
        let b = simulate_interacting(&c, &Kernel::zero(2).unwrap(), &noise).unwrap();
        for i in 0..4 {
            for a in 0..2 {
                let mut v = b.velocity(i, 0).unwrap()[a];
                let mut x = b.position(i, 0)[a];
                for s in 0..16 {
                    x += v * c.dt;
                    v += noise.increment(i, s)[a];
                }
                assert_eq!(v, b.velocity(i, 16).unwrap()[a]);
                assert_eq!(x, b.position(i, 16)[a]);
            }
        }
    }

    #[test]
    fn frozen_with_own_snapshots_reproduces_interacting_run() {
        for (kernel, self_int) in [
            (Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap(), true),
            (Kernel::sine(1).unwrap(), false),
            (Kernel::holder_power(2, 0.5, HolderShape::Radial).unwrap(), true),
        ] {
            let mut c = SimConfig::first_order(80, kernel.dim(), 0.25, 1.0 / 64.0, 5);
            c.self_interaction = self_int;
            let noise = NoiseStore::generate(1, 80, kernel.dim(), 16, c.dt).unwrap();
            let a = simulate_interacting(&c, &kernel, &noise).unwrap();
            let field =
                DriftField::empirical_sequence(&kernel, Arc::new(a.positions.clone()), c.dt, self_int).unwrap();
            let b = simulate_frozen(&c, &field, &noise).unwrap();
            assert_eq!(a.positions, b.positions);
        }
    }

    #[test]
    fn zero_field_matches_zero_kernel() {
        let c = cfg1(6, 32);
        let noise = NoiseStore::generate(4, 6, 1, 32, c.dt).unwrap();
        let a = simulate_interacting(&c, &Kernel::zero(1).unwrap(), &noise).unwrap();
        let b = simulate_frozen(&c, &DriftField::zero(1), &noise).unwrap();
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn ou_mean_decays() {
        // V_0 = 1, kappa = 1, no drift: E V_T = e^{-T}.
        let m = 10_000;
        let mut c = SimConfig::second_order(m, 1, 1.0, 1.0 / 16.0, 1.0, 0);
        c.initial = F0Spec::Dirac { point: 0.0 };
        c.initial_velocity = F0Spec::Dirac { point: 1.0 };
        let noise = NoiseStore::generate(12, m, 1, 16, c.dt).unwrap();
        let b = simulate_interacting(&c, &Kernel::zero(1).unwrap(), &noise).unwrap();
        let vs = &b.velocities.as_ref().unwrap()[16];
        let mean = vs.iter().sum::<f64>() / m as f64;
        let var_t = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((mean - (-1.0f64).exp()).abs() <= 3.0 * (var_t / m as f64).sqrt());
        let var = vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
        assert!((var - var_t).abs() <= 4.0 * var_t * (2.0 / m as f64).sqrt());
    }

    #[test]
    fn gronwall_bound_between_lipschitz_fields() {
        let c = cfg1(20, 64);
        let noise = NoiseStore::generate(2, 20, 1, 64, c.dt).unwrap();
        let l = 1.0;
        for shift in [0.01, 0.05, 0.1] {
            let f = DriftField::closed_form(1, 1.0, "sin", Arc::new(|_t, x: &[f64], o: &mut [f64]| o[0] = x[0].sin()));
            let g = DriftField::closed_form(
                1,
                1.0 + shift,
                "sin+",
                Arc::new(move |_t, x: &[f64], o: &mut [f64]| o[0] = x[0].sin() + shift),
            );
            let a = simulate_frozen(&c, &f, &noise).unwrap();
            let b = simulate_frozen(&c, &g, &noise).unwrap();
            let bound = c.horizon * (l * c.horizon).exp() * shift;
            for k in 0..=64 {
                for i in 0..20 {
                    assert!((a.position(i, k)[0] - b.position(i, k)[0]).abs() <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn reference_closed_forms() {
        let mut c = SimConfig::second_order(1, 1, 20.0, 0.5, 1.0, 0);
        c.initial = F0Spec::Dirac { point: 0.0 };
        c.initial_velocity = F0Spec::Dirac { point: 1.0 };
        let init = InitialState::sample(&c).unwrap();
        let r = reference_trajectories(&c, &init).unwrap();
        let last = r.steps();
        assert!((r.position(0, last)[0] - 1.0).abs() < 1e-8);
        assert!(r.velocity(0, last).unwrap()[0].abs() < 1e-8);
        c.friction = 0.0;
        c.horizon = 2.0;
        let r = reference_trajectories(&c, &init).unwrap();
        assert_eq!(r.position(0, 4)[0], 2.0);
        assert_eq!(r.velocity(0, 4).unwrap()[0], 1.0);
    }

    #[test]
    fn compensated_zero_drift_is_brownian_sup() {
        let c = cfg1(10, 64);
        let noise = NoiseStore::generate(8, 10, 1, 64, c.dt).unwrap();
        let b = simulate_interacting(&c, &Kernel::zero(1).unwrap(), &noise).unwrap();
        let r = reference_trajectories(&c, &b.initial_state()).unwrap();
        let s = compensated_increment_stats(&b, &r, &[0.5]).unwrap();
        for i in 0..10 {
            let sup_b = noise.path(i).iter().map(|v| v[0].abs()).fold(0.0, f64::max);
            assert!((s.sup_norm[i] - sup_b).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_drift_sup_bound() {
        let c = cfg1(30, 64);
        let noise = NoiseStore::generate(8, 30, 1, 64, c.dt).unwrap();
        let k = Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap();
        let b = simulate_interacting(&c, &k, &noise).unwrap();
        let r = reference_trajectories(&c, &b.initial_state()).unwrap();
        let s = compensated_increment_stats(&b, &r, &[]).unwrap();
        for i in 0..30 {
            let sup_b = noise.path(i).iter().map(|v| v[0].abs()).fold(0.0, f64::max);
            assert!(s.sup_norm[i] <= k.bound() * c.horizon + sup_b + 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let mut c = cfg1(2, 64);
        c.domain_half_width = 0.01;
        c.initial = F0Spec::Dirac { point: 0.0 };
        let noise = NoiseStore::generate(1, 2, 1, 64, c.dt).unwrap();
        let f = DriftField::constant(vec![50.0]);
        match simulate_frozen(&c, &f, &noise) {
            Err(LabError::Diverged { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn noise_shape_checked() {
        let c = cfg1(3, 8);
        let noise = NoiseStore::generate(1, 4, 1, 8, c.dt).unwrap();
        assert!(matches!(simulate_frozen(&c, &DriftField::zero(1), &noise), Err(LabError::Shape(_))));
    }
}
