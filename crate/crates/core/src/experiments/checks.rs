//! Deterministic checks that need no particle ensemble: covering-number
//! lemmas, the linear energy estimate on a field net, and solver sanity.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{
    best_cover, change_of_metric_check, covering_number_greedy, lip1_net, lip1_scaling, product_entropy_check,
    FiniteMetricSpace, EXACT_COVER_LIMIT,
};
use crate::error::{LabError, Result};
use crate::experiments::harness::{whole_steps, PdeSettings};
use crate::field::{holder_net, DriftField, HolderBallSpec, Kernel};
use crate::particle::F0Spec;
use crate::pde::{evolve_linear_fp, evolve_mckean, verify_energy_estimate, DiffusionScheme, EnergyWeights, FpOptions, GridDensity, GridSpec};
use crate::rng::stream_rng;
use crate::transport::w1_grids_1d;

#[derive(Clone, Debug, PartialEq)]
pub struct EntropySettings {
    pub eps: Vec<f64>,
    /// Random finite spaces per lemma.
    pub spaces: usize,
    pub seed: u64,
    /// Weight exponent and half-width of the Lipschitz-ball net.
    pub weight: f64,
    pub half_width: f64,
}

impl EntropySettings {
    pub fn new(eps: Vec<f64>) -> Self {
        EntropySettings { eps, spaces: 50, seed: 0, weight: 3.0, half_width: 8.0 }
    }
}

/// One row per `eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyCheckRow {
    pub eps: f64,
    /// Natural log of the Lipschitz-ball net size.
    pub lip1_log_size: f64,
    pub lip1_nodes: usize,
    /// Mean greedy and exact covering numbers over the random spaces.
    pub mean_greedy: f64,
    pub mean_exact: f64,
    pub product_checks: usize,
    pub product_violations: usize,
    pub metric_checks: usize,
    pub metric_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyCheckReport {
    pub rows: Vec<EntropyCheckRow>,
    /// Slope of `ln log N(eps)` against `ln(1/eps)`; NaN with one `eps`.
    pub lip1_exponent: f64,
    pub violations: usize,
}

fn random_space(rng: &mut impl Rng, n: usize) -> Result<FiniteMetricSpace> {
    let dim = rng.gen_range(1..=3);
    let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    FiniteMetricSpace::from_points(&pts, dim)
}

/// Product-space and change-of-metric lemmas on random spaces small enough
/// for exhaustive minimum covers, plus the Lipschitz-ball net growth.
pub fn run_entropy_check(s: &EntropySettings) -> Result<EntropyCheckReport> {
    if s.eps.is_empty() || s.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(LabError::Config("eps values must be positive and non-empty".into()));
    }
    if s.spaces == 0 {
        return Err(LabError::Config("need at least one random space".into()));
    }
    let mut rng = stream_rng(s.seed, 0);
    let mut pairs = Vec::with_capacity(s.spaces);
    let mut singles = Vec::with_capacity(s.spaces);
    for _ in 0..s.spaces {
        let nx = rng.gen_range(2..=4);
        let ny = rng.gen_range(2..=EXACT_COVER_LIMIT / nx);
        pairs.push((random_space(&mut rng, nx)?, random_space(&mut rng, ny)?));
        let n = rng.gen_range(3..=EXACT_COVER_LIMIT);
        let alpha = rng.gen_range(0.2..=1.0);
        singles.push((random_space(&mut rng, n)?, alpha));
    }
    let mut rows = Vec::with_capacity(s.eps.len());
    for &eps in &s.eps {
        let net = lip1_net(eps, s.half_width, s.weight, crate::entropy::lip1::MIN_RESOLUTION, 1)?;
        let (mut pv, mut mv, mut greedy, mut exact) = (0, 0, 0.0, 0.0);
        for (x, y) in &pairs {
            if !product_entropy_check(x, y, eps)?.holds {
                pv += 1;
            }
        }
        for (space, alpha) in &singles {
            if !change_of_metric_check(space, *alpha, eps)?.holds {
                mv += 1;
            }
            greedy += covering_number_greedy(space, eps)?.count() as f64;
            let (cover, is_exact) = best_cover(space, eps)?;
            debug_assert!(is_exact);
            exact += cover.count() as f64;
        }
        rows.push(EntropyCheckRow {
            eps,
            lip1_log_size: net.log_size(),
            lip1_nodes: net.steps(),
            mean_greedy: greedy / s.spaces as f64,
            mean_exact: exact / s.spaces as f64,
            product_checks: pairs.len(),
            product_violations: pv,
            metric_checks: singles.len(),
            metric_violations: mv,
        });
    }
    let lip1_exponent = if s.eps.len() >= 2 { lip1_scaling(&s.eps, s.half_width, s.weight)?.exponent } else { f64::NAN };
    let violations = rows.iter().map(|r| r.product_violations + r.metric_violations).sum();
    Ok(EntropyCheckReport { rows, lip1_exponent, violations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergySettings {
    pub pairs: usize,
    pub ball: HolderBallSpec,
    pub weights: EnergyWeights,
    pub f0: F0Spec,
    pub horizon: f64,
    pub dt: f64,
    pub grid: PdeSettings,
}

impl EnergySettings {
    pub fn new(pairs: usize) -> Self {
        EnergySettings {
            pairs,
            ball: HolderBallSpec::new(1, 0.75, 1.0),
            weights: EnergyWeights::default(),
            f0: F0Spec::default(),
            horizon: 1.0,
            dt: 1.0 / 512.0,
            grid: PdeSettings { cells: 256, record_every: 1, diffusion: DiffusionScheme::Explicit, ..PdeSettings::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyPairRow {
    pub pair: usize,
    pub first: usize,
    pub second: usize,
    pub lhs_initial: f64,
    pub lhs_max: f64,
    pub rhs_max: f64,
    pub fitted_c: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyCheckReport {
    pub times: Vec<f64>,
    pub rows: Vec<EnergyPairRow>,
    /// `lhs(t) / rhs(t)` per pair, NaN where `rhs = 0`.
    pub ratios: Vec<Vec<f64>>,
    pub violations: usize,
}

/// Pairs consecutive elements of a `2 * pairs` net and checks the energy
/// estimate for each pair with its own fitted constant.
pub fn run_energy_check(s: &EnergySettings) -> Result<EnergyCheckReport> {
    if s.pairs == 0 {
        return Err(LabError::Config("energy.pairs must be at least 1".into()));
    }
    whole_steps(s.horizon, s.dt)?;
    s.grid.validate()?;
    let net = holder_net(&s.ball, 2 * s.pairs)?;
    let f0 = s.f0.to_grid(s.grid.spec(s.ball.dim)?)?;
    let opts = s.grid.options();
    let reports: Vec<_> = (0..s.pairs)
        .into_par_iter()
        .map(|k| verify_energy_estimate(&net[2 * k], &net[2 * k + 1], &f0, s.horizon, s.dt, s.weights, &opts))
        .collect::<Result<_>>()?;
    let times = reports[0].times.clone();
    let mut rows = Vec::with_capacity(s.pairs);
    let mut ratios = Vec::with_capacity(s.pairs);
    for (k, r) in reports.iter().enumerate() {
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
        rows.push(EnergyPairRow {
            pair: k,
            first: 2 * k,
            second: 2 * k + 1,
            lhs_initial: r.lhs[0],
            lhs_max: max(&r.lhs),
            rhs_max: max(&r.rhs),
            fitted_c: r.fitted_c,
            violations: r.violations,
        });
        ratios.push(r.lhs.iter().zip(&r.rhs).map(|(l, h)| if *h > 0.0 { l / h } else { f64::NAN }).collect());
    }
    let violations = rows.iter().map(|r| r.violations).sum();
    Ok(EnergyCheckReport { times, rows, ratios, violations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestSettings {
    /// Cells of the heat-flow run on `[-half_width, half_width]`.
    pub cells: usize,
    pub half_width: f64,
    pub horizon: f64,
    pub sigma: f64,
    /// Coarsest grid of the refinement study; it is halved twice.
    pub coarse_cells: usize,
    pub refinement_dt: f64,
}

impl Default for SelftestSettings {
    fn default() -> Self {
        SelftestSettings {
            cells: 512,
            half_width: 8.0,
            horizon: 1.0,
            sigma: 1.0,
            coarse_cells: 128,
            refinement_dt: 1.0 / 1024.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub initial_variance: f64,
    pub final_variance: f64,
    /// `|Var(T) - Var(0) - T| / (Var(0) + T)`.
    pub variance_error: f64,
    pub mass_drift: f64,
    pub dt: f64,
    /// Self-distances between successive refinements, coarse first.
    pub refinement_cells: Vec<usize>,
    pub refinement_distances: Vec<f64>,
    pub contraction: f64,
    /// Heat-flow density at 17 equally spaced times.
    #[serde(skip)]
    pub snapshots: Vec<GridDensity>,
}

fn largest_dyadic_below(limit: f64) -> f64 {
    let mut dt = 1.0;
    while dt > limit {
        dt *= 0.5;
    }
    dt
}

/// Heat flow against the exact variance growth, mass conservation along the
/// run, and the self-convergence of a McKean run (sine kernel) as the grid
/// is halved.
pub fn run_pde_selftest(s: &SelftestSettings) -> Result<SelftestReport> {
    let spec = GridSpec::new(1, s.half_width, s.cells)?;
    let f0 = F0Spec::Gaussian { mean: 0.0, sigma: s.sigma };
    let start = f0.to_grid(spec)?;
    let opts = FpOptions::default();
    let dt = largest_dyadic_below(crate::pde::diffusion_dt_limit(&spec, &opts));
    let steps = whole_steps(s.horizon, dt)?;
    let zero = DriftField::zero(1);
    let mut cur = start.clone();
    let mut mass_drift = 0.0f64;
    let mut snapshots = vec![cur.clone()];
    let every = (steps / 16).max(1);
    for k in 1..=steps {
        cur = evolve_linear_fp(&cur, &zero, dt, 1, &opts)?;
        mass_drift = mass_drift.max((cur.total_mass() - 1.0).abs());
        if k % every == 0 {
            snapshots.push(cur.clone());
        }
    }
    let v0 = start.variance()[0];
    let v1 = cur.variance()[0];

    let kernel = Kernel::sine(1)?;
    let shifted = F0Spec::Gaussian { mean: 0.5, sigma: s.sigma };
    let ref_steps = whole_steps(s.horizon, s.refinement_dt)?;
    let cells: Vec<usize> = (0..3).map(|k| s.coarse_cells << k).collect();
    let mut finals: Vec<GridDensity> = cells
        .par_iter()
        .map(|&g| {
            let f = shifted.to_grid(GridSpec::new(1, s.half_width, g)?)?;
            evolve_mckean(&f, &kernel, s.refinement_dt, ref_steps, &FpOptions::implicit())
        })
        .collect::<Result<_>>()?;
    // Lift everything to the finest grid; the lift is exact.
    for (k, f) in finals.iter_mut().enumerate() {
        for _ in k..2 {
            *f = f.refined();
        }
    }
    let distances = vec![w1_grids_1d(&finals[0], &finals[1])?, w1_grids_1d(&finals[1], &finals[2])?];
    Ok(SelftestReport {
        initial_variance: v0,
        final_variance: v1,
        variance_error: (v1 - v0 - s.horizon).abs() / (v0 + s.horizon),
        mass_drift,
        dt,
        refinement_cells: cells,
        contraction: distances[0] / distances[1],
        refinement_distances: distances,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_check_small() {
        let mut s = EntropySettings::new(vec![0.4, 0.2]);
        s.spaces = 6;
        let r = run_entropy_check(&s).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.violations, 0);
        assert!(r.rows[1].lip1_log_size > r.rows[0].lip1_log_size);
        assert!(r.rows.iter().all(|row| row.mean_exact <= row.mean_greedy));
        assert!(r.lip1_exponent.is_finite());
        assert!(run_entropy_check(&EntropySettings::new(vec![])).unwrap_err().is_config_error());
    }

    #[test]
    fn energy_check_two_pairs() {
        let mut s = EnergySettings::new(2);
        s.horizon = 0.25;
        s.grid.cells = 128;
        let r = run_energy_check(&s).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.violations, 0);
        for row in &r.rows {
            assert_eq!(row.lhs_initial, 0.0);
            assert!(row.fitted_c.is_finite() && row.fitted_c > 0.0);
        }
        assert!(r.ratios[0][0].is_nan());
    }

    #[test]
    fn selftest_small_grid() {
        let s = SelftestSettings { cells: 128, coarse_cells: 32, horizon: 0.25, ..SelftestSettings::default() };
        let r = run_pde_selftest(&s).unwrap();
        assert!(r.variance_error < 0.02, "{r:?}");
        assert!(r.mass_drift < 1e-10);
        assert!(r.contraction > 1.2, "{r:?}");
        assert_eq!(r.snapshots.len(), 17);
    }
}
