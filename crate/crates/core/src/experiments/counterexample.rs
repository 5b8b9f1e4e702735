//! Red/blue sorting by an adapted bounded drift: the field sees the particle
//! positions and pushes reds right and blues left whenever no red and blue
//! particle are close.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::experiments::harness::{check_seeds, elapsed_ms, whole_steps};
use crate::particle::sim::DriftRule;
use crate::particle::{integrate, F0Spec, InitialState, NoiseStore, SimConfig};
use crate::rng::sub_seed;
use crate::transport::mean;

/// Required mean fraction of time with `psi_eps = 1`.
pub const UNSUPPRESSED_TARGET: f64 = 0.75;

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleSettings {
    pub experiment_id: String,
    pub particles: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dt: f64,
    pub horizon: f64,
    pub f0: F0Spec,
    /// Width of the smoothed sign `tanh(x / delta_g)`.
    pub delta_g: f64,
    pub pilot_seeds: usize,
    /// Candidates are `2^-k`, `k = 0..=eps_halvings`.
    pub eps_halvings: u32,
    /// Clamp the drift to `[-1, 1]`.
    pub clamp: bool,
}

impl CounterexampleSettings {
    pub fn new(particles: Vec<usize>, seeds: Vec<u64>) -> Self {
        CounterexampleSettings {
            experiment_id: "counterexample".into(),
            particles,
            seeds,
            dt: 1.0 / 64.0,
            horizon: 4.0,
            f0: F0Spec::default(),
            delta_g: 0.1,
            pilot_seeds: 8,
            eps_halvings: 48,
            clamp: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_seeds(&self.seeds)?;
        if self.particles.is_empty() || self.particles.iter().any(|n| *n < 2 || n % 2 != 0) {
            return Err(LabError::Config("the sorting problem needs even N >= 2".into()));
        }
        if !(self.delta_g > 0.0) {
            return Err(LabError::Config("delta_g must be positive".into()));
        }
        if self.pilot_seeds == 0 {
            return Err(LabError::Config("need at least one pilot seed".into()));
        }
        whole_steps(self.horizon, self.dt)?;
        Ok(())
    }
}

/// Quintic smoothstep: 0 for `|x| <= 1/2`, 1 for `|x| >= 1`.
pub fn transition(x: f64) -> f64 {
    let s = ((x.abs() - 0.5) * 2.0).clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// Smooth bump with `bump(0) = 1`, supported in `|x| < 1/2`.
pub fn bump(x: f64) -> f64 {
    let u = 4.0 * x * x;
    if u >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u)).exp()
    }
}

/// The adversarial drift. Particles `0..N/2` are red.
pub struct SortingRule {
    eps: f64,
    dt: f64,
    active: bool,
    clamp: bool,
    order: Vec<usize>,
    /// `psi_eps` at each step.
    pub psi: Vec<f64>,
    /// `int b dt` along each particle.
    pub drift_displacement: Vec<f64>,
}

impl SortingRule {
    pub fn new(n: usize, eps: f64, dt: f64, active: bool, clamp: bool) -> Self {
        SortingRule {
            eps,
            dt,
            active,
            clamp,
            order: (0..n).collect(),
            psi: Vec::new(),
            drift_displacement: vec![0.0; n],
        }
    }

    fn sign(&self, i: usize) -> f64 {
        if i < self.order.len() / 2 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fraction of steps with `psi_eps = 1`.
    pub fn unsuppressed_fraction(&self) -> f64 {
        if self.psi.is_empty() {
            1.0
        } else {
            self.psi.iter().filter(|p| **p == 1.0).count() as f64 / self.psi.len() as f64
        }
    }
}

impl DriftRule for SortingRule {
    fn drift(&mut self, _step: usize, _t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = x.len();
        self.order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let eps = self.eps;
        // product over red-blue pairs closer than eps; others contribute 1
        let mut psi = 1.0;
        'outer: for a in 0..n {
            let i = self.order[a];
            for &j in &self.order[a + 1..] {
                let gap = x[j] - x[i];
                if gap >= eps {
                    break;
                }
                if self.sign(i) != self.sign(j) {
                    psi *= transition(gap / eps);
                    if psi == 0.0 {
                        break 'outer;
                    }
                }
            }
        }
        self.psi.push(psi);
        if !self.active || psi == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            let half = 0.5 * eps;
            for a in 0..n {
                let k = self.order[a];
                let mut s = self.sign(k);
                for &j in self.order[..a].iter().rev() {
                    if x[k] - x[j] >= half {
                        break;
                    }
                    s += self.sign(j) * bump((x[k] - x[j]) / eps);
                }
                for &j in &self.order[a + 1..] {
                    if x[j] - x[k] >= half {
                        break;
                    }
                    s += self.sign(j) * bump((x[k] - x[j]) / eps);
                }
                let b = psi * s;
                out[k] = if self.clamp { b.clamp(-1.0, 1.0) } else { b };
            }
        }
        for (d, b) in self.drift_displacement.iter_mut().zip(out.iter()) {
            *d += b * self.dt;
        }
        Ok(())
    }

    fn descriptor(&self) -> String {
        format!("sorting(eps={},active={})", self.eps, self.active)
    }
}

/// One run of the sorting system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortingRun {
    pub s_n: f64,
    pub fraction: f64,
    /// Mean over red particles of `int b dt`.
    pub red_displacement: f64,
    /// `T (2 fraction - 1)`, the pathwise lower bound on every red push.
    pub push_bound: f64,
    /// Every red push is at least `push_bound`.
    pub push_bound_holds: bool,
}

/// `(1/N) [sum_red g(X_T) - sum_blue g(X_T)]` with `g = tanh(x / delta_g)`.
pub fn sorting_statistic(positions: &[f64], delta_g: f64) -> f64 {
    let n = positions.len();
    let s: f64 = positions
        .iter()
        .enumerate()
        .map(|(i, x)| if i < n / 2 { (x / delta_g).tanh() } else { -(x / delta_g).tanh() })
        .sum();
    s / n as f64
}

pub fn run_sorting(s: &CounterexampleSettings, n: usize, seed: u64, eps: f64, active: bool) -> Result<SortingRun> {
    let steps = whole_steps(s.horizon, s.dt)?;
    let mut config = SimConfig::first_order(n, 1, s.horizon, s.dt, seed);
    config.initial = s.f0.clone();
    let noise = NoiseStore::generate(seed, n, 1, steps, s.dt)?;
    let initial = InitialState::sample(&config)?;
    let mut rule = SortingRule::new(n, eps, s.dt, active, s.clamp);
    let bundle = integrate(&config, &initial, &noise, &mut rule)?;
    let fraction = rule.unsuppressed_fraction();
    let push_bound = s.horizon * (2.0 * fraction - 1.0);
    let reds = &rule.drift_displacement[..n / 2];
    Ok(SortingRun {
        s_n: sorting_statistic(&bundle.positions[steps], s.delta_g),
        fraction,
        red_displacement: mean(reds),
        push_bound,
        push_bound_holds: !active || reds.iter().all(|d| *d >= push_bound - 1e-9),
    })
}

/// Pilot seeds for the scale search; disjoint from the experiment seeds by
/// construction of the splitting function.
fn pilot_seed(n: usize, j: usize) -> u64 {
    sub_seed(0x5EED_0F_50_27, n as u64, j as u64)
}

/// Largest `eps = 2^-k` whose pilot runs spend on average at least
/// [`UNSUPPRESSED_TARGET`] of the time with `psi_eps = 1`.
pub fn choose_scale(s: &CounterexampleSettings, n: usize) -> Result<(f64, f64)> {
    for k in 0..=s.eps_halvings {
        let eps = 2f64.powi(-(k as i32));
        let fractions: Vec<f64> = (0..s.pilot_seeds)
            .into_par_iter()
            .map(|j| run_sorting(s, n, pilot_seed(n, j), eps, true).map(|r| r.fraction))
            .collect::<Result<_>>()?;
        let f = mean(&fractions);
        if f >= UNSUPPRESSED_TARGET {
            return Ok((eps, f));
        }
    }
    Err(LabError::Experiment(format!(
        "scale search failed at N = {n}: no eps >= 2^-{} keeps psi = 1 for 3/4 of the time",
        s.eps_halvings
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleCell {
    pub particles: usize,
    pub seed: u64,
    pub s_n: f64,
    pub s_n_ablation: f64,
    pub fraction: f64,
    pub red_displacement: f64,
    pub push_bound: f64,
    pub wallclock_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub particles: usize,
    pub eps: f64,
    pub pilot_fraction: f64,
    pub fraction: f64,
    pub mean_s: f64,
    /// 95% normal half-width over seeds.
    pub half_width: f64,
    pub ablation_mean: f64,
    pub ablation_half_width: f64,
    pub red_displacement: f64,
    pub push_bound: f64,
    pub push_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub experiment_id: String,
    pub horizon: f64,
    pub cells: Vec<CounterexampleCell>,
    pub rows: Vec<CounterexampleRow>,
}

fn half_width(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    1.96 * (var / v.len() as f64).sqrt()
}

pub fn run_counterexample(s: &CounterexampleSettings) -> Result<CounterexampleReport> {
    s.validate()?;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &n in &s.particles {
        let (eps, pilot_fraction) = choose_scale(s, n)?;
        let runs: Vec<(CounterexampleCell, bool)> = s
            .seeds
            .par_iter()
            .map(|&seed| {
                let start = Instant::now();
                let on = run_sorting(s, n, seed, eps, true)?;
                let off = run_sorting(s, n, seed, eps, false)?;
                Ok((
                    CounterexampleCell {
                        particles: n,
                        seed,
                        s_n: on.s_n,
                        s_n_ablation: off.s_n,
                        fraction: on.fraction,
                        red_displacement: on.red_displacement,
                        push_bound: on.push_bound,
                        wallclock_ms: elapsed_ms(start),
                    },
                    on.push_bound_holds,
                ))
            })
            .collect::<Result<_>>()?;
        let pick = |f: fn(&CounterexampleCell) -> f64| runs.iter().map(|(c, _)| f(&c)).collect::<Vec<f64>>();
        let on = pick(|c| c.s_n);
        let off = pick(|c| c.s_n_ablation);
        rows.push(CounterexampleRow {
            particles: n,
            eps,
            pilot_fraction,
            fraction: mean(&pick(|c| c.fraction)),
            mean_s: mean(&on),
            half_width: half_width(&on),
            ablation_mean: mean(&off),
            ablation_half_width: half_width(&off),
            red_displacement: mean(&pick(|c| c.red_displacement)),
            push_bound: mean(&pick(|c| c.push_bound)),
            push_bound_holds: runs.iter().all(|r| r.1),
        });
        cells.extend(runs.into_iter().map(|r| r.0));
    }
    Ok(CounterexampleReport { experiment_id: s.experiment_id.clone(), horizon: s.horizon, cells, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_functions() {
        assert_eq!(transition(0.3), 0.0);
        assert_eq!(transition(-0.5), 0.0);
        assert_eq!(transition(1.0), 1.0);
        assert_eq!(transition(-3.0), 1.0);
        assert!((transition(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(0.5), 0.0);
        assert!(bump(0.25) > 0.0 && bump(0.25) < 1.0);
    }

    #[test]
    fn isolated_colours_get_unit_push() {
        let mut rule = SortingRule::new(4, 0.1, 0.01, true, true);
        let x = [0.0, 0.02, 1.0, 2.0];
        let mut out = [0.0; 4];
        rule.drift(0, 0.0, &x, &mut out).unwrap();
        assert_eq!(rule.psi, vec![1.0]);
        assert_eq!(out, [1.0, 1.0, -1.0, -1.0]);
        // a red and a blue within eps/2 switch the field off
        let x = [0.0, 3.0, 0.01, 2.0];
        rule.drift(1, 0.0, &x, &mut out).unwrap();
        assert_eq!(rule.psi[1], 0.0);
        assert_eq!(out, [0.0; 4]);
    }

    #[test]
    fn zero_horizon_statistic_is_centred() {
        let mut s = CounterexampleSettings::new(vec![64], (0..64).collect());
        s.horizon = 0.0;
        let r = run_counterexample(&s).unwrap();
        let row = &r.rows[0];
        assert!(row.mean_s.abs() <= row.half_width.max(1e-12) * 1.5, "{row:?}");
        assert_eq!(row.mean_s, row.ablation_mean);
    }

    #[test]
    fn small_system_sorts() {
        let mut s = CounterexampleSettings::new(vec![16], (0..16).collect());
        s.horizon = 2.0;
        let r = run_counterexample(&s).unwrap();
        let row = &r.rows[0];
        assert!(row.pilot_fraction >= UNSUPPRESSED_TARGET);
        assert!(row.mean_s > 0.3, "{row:?}");
        assert!(row.push_bound_holds);
        assert!(row.red_displacement >= row.push_bound);
    }

    #[test]
    fn odd_particle_count_rejected() {
        let s = CounterexampleSettings::new(vec![15], vec![1]);
        assert!(run_counterexample(&s).is_err());
    }
}
