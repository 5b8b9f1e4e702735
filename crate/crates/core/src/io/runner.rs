//! Turns a [`RunConfig`] into an experiment run and its files.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::experiments::{
    run_chaos_rate, run_counterexample, run_coupling_decomposition, run_energy_check, run_entropy_check,
    run_gc_experiment, run_nonuniqueness_demo, run_pde_selftest, run_time_regularity, run_ulln_for_kernel,
    CounterexampleSettings, CouplingDecomposition, CouplingSettings, EnergySettings, EntropySettings, GcSettings,
    NonuniquenessSettings, PdeSettings, RateSettings, RegularitySettings, SeedSummary, SelftestSettings,
    UllnSettings,
};
use crate::field::{holder_net, HolderProbe, Kernel};
use crate::io::config::{ExperimentKind, RunConfig};
use crate::io::digest::{sha256_hex, write_atomic};
use crate::io::manifest::{now_rfc3339, ArtifactRecord, DigestCheck, RunManifest};
use crate::io::plot::{render_svg, Heatmap, Plot, PlotKind, Series};
use crate::io::table::{density_table, fmt_f64 as f, Table};

/// Everything an experiment produces, before it touches the disk.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub plots: Vec<(String, Plot)>,
    pub summary: Value,
}

impl Artifacts {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

fn pde_of(c: &RunConfig) -> PdeSettings {
    PdeSettings { atom_budget: c.metric.atom_budget, ..c.grid.clone() }
}

fn experiment_id(c: &RunConfig) -> Result<String> {
    Ok(format!("{}-{}", c.experiment.name(), &c.hash()?[..8]))
}

/// Number of independent simulations the run will perform.
pub fn sub_run_count(c: &RunConfig) -> usize {
    let n = c.particles.len();
    let seeds = c.resolved_seeds().len();
    match c.experiment {
        ExperimentKind::ChaosRate => n * seeds + if c.metric.dt_sensitivity { seeds } else { 0 },
        ExperimentKind::GcSup | ExperimentKind::TimeRegularity => n * seeds,
        ExperimentKind::UllnKernel => n * seeds + 1,
        ExperimentKind::CouplingDecomp => 1 + c.coupling.ablation as usize,
        ExperimentKind::Counterexample => n * (2 * seeds + c.counterexample.pilot_seeds),
        ExperimentKind::Nonuniqueness => {
            c.nonuniqueness.levels.len() * seeds * (1 + c.nonuniqueness.control_alpha.is_some() as usize)
        }
        ExperimentKind::EntropyCheck => c.entropy.eps.len(),
        ExperimentKind::EnergyCheck => c.energy.pairs,
        ExperimentKind::PdeSelftest => 4,
    }
}

fn summary_table(name: &str, summaries: &[SeedSummary], extra: &[(&str, Vec<f64>)]) -> Result<Table> {
    let mut header: Vec<String> =
        ["N", "completed", "failed", "mean", "subgaussian", "std_error"].iter().map(|h| h.to_string()).collect();
    header.extend(extra.iter().map(|(h, _)| h.to_string()));
    let mut t = Table::with_header(name, header);
    for (k, m) in summaries.iter().enumerate() {
        let mut row = vec![s(m.particles), s(m.completed), s(m.failed), f(m.mean), f(m.subgaussian), f(m.std_error)];
        row.extend(extra.iter().map(|(_, v)| f(v[k])));
        t.push(row)?;
    }
    Ok(t)
}

fn means_series(label: &str, summaries: &[SeedSummary]) -> Series {
    Series::new(label, summaries.iter().map(|m| (m.particles as f64, m.mean)).collect())
}

fn chaos_rate(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let settings = RateSettings {
        experiment_id: id.clone(),
        order: c.order,
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        v0: c.v0.clone(),
        friction: c.friction,
        compensation: c.metric.compensation,
        moment: c.metric.moment,
        pde: pde_of(c),
        dt_sensitivity: c.metric.dt_sensitivity,
        bootstrap: c.metric.bootstrap,
        ..RateSettings::new(c.particles.clone(), c.resolved_seeds())
    };
    let r = run_chaos_rate(kernel, &settings)?;
    let mut raw = Table::new("raw.csv", &["experiment_id", "N", "seed", "sup_stat", "w1_initial", "dt", "wallclock_ms"]);
    let mut failures = Table::new("failures.csv", &["N", "seed", "error"]);
    let mut curves = Table::new("distances.csv", &["N", "seed", "t", "w1"]);
    for cell in &r.cells {
        raw.push(vec![
            id.clone(),
            s(cell.particles),
            s(cell.seed),
            f(cell.sup_stat),
            f(cell.w1_initial),
            f(cell.dt),
            s(cell.wallclock_ms),
        ])?;
        if let Some(e) = &cell.error {
            failures.push(vec![s(cell.particles), s(cell.seed), e.clone()])?;
        }
        for (t, d) in r.times.iter().zip(&cell.distances) {
            curves.push(vec![s(cell.particles), s(cell.seed), f(*t), f(*d)])?;
        }
    }
    let bound: Vec<f64> = r
        .summaries
        .iter()
        .map(|m| r.envelope.as_ref().map_or(f64::NAN, |e| e.constant * (m.particles as f64).powf(-e.gamma)))
        .collect();
    let aggregate = summary_table("aggregate.csv", &r.summaries, &[("envelope", bound)])?;
    let mut plot = Plot::new(PlotKind::LogLog, &format!("chaos rate, {}", r.kernel), "N", "mean compensated sup W1")
        .with_series(means_series("mean", &r.summaries));
    plot.gamma_reference = r.gamma_theory;
    let summary = json!({
        "experiment_id": id,
        "kernel": r.kernel,
        "order": r.order,
        "fit": r.fit,
        "gamma_theory": r.gamma_theory,
        "gamma_note": r.gamma_note,
        "envelope": r.envelope,
        "dt_sensitivity": r.dt_sensitivity,
        "failed": r.failed(),
    });
    Ok(Artifacts { tables: vec![raw, aggregate, curves, failures], plots: vec![("rate.svg".into(), plot)], summary })
}

fn gc_sup(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let net = holder_net(&c.net.ball(kernel.dim()), c.net.size)?;
    let settings = GcSettings {
        experiment_id: id.clone(),
        order: c.order,
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        v0: c.v0.clone(),
        friction: c.friction,
        compensation: c.metric.compensation,
        pde: pde_of(c),
        bootstrap: c.metric.bootstrap,
        ..GcSettings::new(c.particles.clone(), c.resolved_seeds())
    };
    let r = run_gc_experiment(&net, &settings)?;
    let k = r.fields.len();
    let mut header: Vec<String> = ["experiment_id", "N", "seed", "sup_stat", "argmax"].iter().map(|h| s(h)).collect();
    header.extend((0..k).map(|b| format!("field_{b}")));
    header.extend(["wallclock_ms".to_string(), "error".to_string()]);
    let mut raw = Table::with_header("raw.csv", header);
    for cell in &r.cells {
        let mut row = vec![id.clone(), s(cell.particles), s(cell.seed), f(cell.sup_stat), s(cell.argmax)];
        row.extend((0..k).map(|b| f(cell.per_field.get(b).copied().unwrap_or(f64::NAN))));
        row.extend([s(cell.wallclock_ms), cell.error.clone().unwrap_or_default()]);
        raw.push(row)?;
    }
    let names: Vec<String> = (0..k).map(|b| format!("mean_field_{b}")).collect();
    let extra: Vec<(&str, Vec<f64>)> = names.iter().map(|n| n.as_str()).zip(r.per_field_means.iter().cloned()).collect();
    let aggregate = summary_table("aggregate.csv", &r.summaries, &extra)?;
    let mut plot = Plot::new(PlotKind::LogLog, "uniform statistic over the field net", "N", "mean compensated sup W1")
        .with_series(means_series("sup over net", &r.summaries));
    for (b, means) in r.per_field_means.iter().enumerate() {
        plot.series.push(Series::new(
            format!("field {b}"),
            r.summaries.iter().zip(means).map(|(m, v)| (m.particles as f64, *v)).collect(),
        ));
    }
    let summary = json!({ "experiment_id": id, "fields": r.fields, "fit": r.fit, "dominance": r.dominance });
    Ok(Artifacts { tables: vec![raw, aggregate], plots: vec![("gc.svg".into(), plot)], summary })
}

fn decomposition_table(name: &str, d: &CouplingDecomposition) -> Result<Table> {
    let mut t = Table::new(
        name,
        &[
            "t",
            "particles_to_limit",
            "particles_to_frozen_law",
            "frozen_law_to_limit",
            "particles_to_independent",
            "independent_to_limit",
            "frozen_slack",
            "independent_slack",
        ],
    );
    for k in 0..d.times.len() {
        let lhs = d.particles_to_limit[k];
        t.push(vec![
            f(d.times[k]),
            f(lhs),
            f(d.particles_to_frozen_law[k]),
            f(d.frozen_law_to_limit[k]),
            f(d.particles_to_independent[k]),
            f(d.independent_to_limit[k]),
            f(d.particles_to_frozen_law[k] + d.frozen_law_to_limit[k] - lhs),
            f(d.particles_to_independent[k] + d.independent_to_limit[k] - lhs),
        ])?;
    }
    Ok(t)
}

fn coupling(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let seed = *c.resolved_seeds().first().ok_or_else(|| LabError::Config("need a seed".into()))?;
    let settings = CouplingSettings {
        experiment_id: id.clone(),
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        pde: pde_of(c),
        mollify: c.coupling.mollify,
        ..CouplingSettings::new(c.particles[0], seed)
    };
    let d = run_coupling_decomposition(kernel, &settings)?;
    let mut tables = vec![decomposition_table("decomposition.csv", &d)?];
    let mut plot = Plot::new(PlotKind::Lines, "coupling decomposition", "t", "W1");
    let curves: [(&str, &Vec<f64>); 5] = [
        ("particles to limit", &d.particles_to_limit),
        ("particles to frozen law", &d.particles_to_frozen_law),
        ("frozen law to limit", &d.frozen_law_to_limit),
        ("particles to independent", &d.particles_to_independent),
        ("independent to limit", &d.independent_to_limit),
    ];
    for (label, v) in curves {
        plot.series.push(Series::new(label, d.times.iter().copied().zip(v.iter().copied()).collect()));
    }
    let mut summary = json!({
        "experiment_id": id,
        "particles": c.particles[0],
        "seed": seed,
        "frozen_route_holds": d.frozen_route_holds,
        "independent_route_holds": d.independent_route_holds,
        "worst_slack": d.worst_slack,
    });
    if c.coupling.ablation {
        let zero = Kernel::zero(kernel.dim())?;
        let a = run_coupling_decomposition(&zero, &settings)?;
        let worst = a.particles_to_independent.iter().fold(0.0f64, |m, v| m.max(*v));
        summary["ablation_max_particles_to_independent"] = json!(worst);
        tables.push(decomposition_table("ablation.csv", &a)?);
    }
    Ok(Artifacts { tables, plots: vec![("coupling.svg".into(), plot)], summary })
}

fn counterexample(c: &RunConfig) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let ce = &c.counterexample;
    let settings = CounterexampleSettings {
        experiment_id: id.clone(),
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        delta_g: ce.delta_g,
        pilot_seeds: ce.pilot_seeds,
        eps_halvings: ce.eps_halvings,
        clamp: ce.clamp,
        ..CounterexampleSettings::new(c.particles.clone(), c.resolved_seeds())
    };
    let r = run_counterexample(&settings)?;
    let mut raw = Table::new(
        "raw.csv",
        &[
            "experiment_id",
            "N",
            "seed",
            "s_n",
            "s_n_ablation",
            "unsuppressed_fraction",
            "red_displacement",
            "push_bound",
            "wallclock_ms",
        ],
    );
    for cell in &r.cells {
        raw.push(vec![
            id.clone(),
            s(cell.particles),
            s(cell.seed),
            f(cell.s_n),
            f(cell.s_n_ablation),
            f(cell.fraction),
            f(cell.red_displacement),
            f(cell.push_bound),
            s(cell.wallclock_ms),
        ])?;
    }
    let mut agg = Table::new(
        "aggregate.csv",
        &[
            "N",
            "eps",
            "pilot_fraction",
            "unsuppressed_fraction",
            "mean_s_n",
            "half_width",
            "ablation_mean",
            "ablation_half_width",
            "ablation_bound",
            "red_displacement",
            "push_bound",
            "push_bound_holds",
        ],
    );
    for row in &r.rows {
        agg.push(vec![
            s(row.particles),
            f(row.eps),
            f(row.pilot_fraction),
            f(row.fraction),
            f(row.mean_s),
            f(row.half_width),
            f(row.ablation_mean),
            f(row.ablation_half_width),
            f(3.0 / (row.particles as f64).sqrt()),
            f(row.red_displacement),
            f(row.push_bound),
            s(row.push_bound_holds),
        ])?;
    }
    let pts = |g: &dyn Fn(&crate::experiments::counterexample::CounterexampleRow) -> f64| {
        r.rows.iter().map(|row| (row.particles as f64, g(row))).collect::<Vec<_>>()
    };
    let plot = Plot::new(PlotKind::Lines, "sorting statistic", "N", "mean S_N")
        .with_series(Series::new("adversarial drift", pts(&|row| row.mean_s)))
        .with_series(Series::new("zero drift", pts(&|row| row.ablation_mean)))
        .with_series(Series::new("3 / sqrt(N)", pts(&|row| 3.0 / (row.particles as f64).sqrt())));
    let summary = json!({ "experiment_id": id, "horizon": r.horizon, "rows": r.rows });
    Ok(Artifacts { tables: vec![raw, agg], plots: vec![("counterexample.svg".into(), plot)], summary })
}

fn nonuniqueness(c: &RunConfig) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let nu = &c.nonuniqueness;
    let mut alphas = vec![nu.alpha];
    alphas.extend(nu.control_alpha);
    let mut raw = Table::new("raw.csv", &["alpha", "level", "seed", "plus_terminal", "minus_terminal", "gap"]);
    let mut agg = Table::new("aggregate.csv", &["alpha", "level", "mean_gap", "min_gap", "max_gap", "fraction_above"]);
    let mut plot = Plot::new(PlotKind::Lines, "terminal gap between the two schedules", "mollification level n", "mean gap");
    let mut reports = Vec::new();
    for alpha in alphas {
        let settings = NonuniquenessSettings {
            experiment_id: id.clone(),
            levels: nu.levels.clone(),
            horizon: c.horizon,
            dt: nu.ode_dt,
            threshold: nu.threshold,
            ..NonuniquenessSettings::new(alpha, c.resolved_seeds())
        };
        let r = run_nonuniqueness_demo(&settings)?;
        for cell in &r.cells {
            raw.push(vec![f(alpha), s(cell.level), s(cell.seed), f(cell.plus_terminal), f(cell.minus_terminal), f(cell.gap)])?;
        }
        for row in &r.rows {
            agg.push(vec![f(alpha), s(row.level), f(row.mean_gap), f(row.min_gap), f(row.max_gap), f(row.fraction_above)])?;
        }
        plot.series.push(Series::new(
            format!("alpha = {alpha}"),
            r.rows.iter().map(|row| (row.level as f64, row.mean_gap)).collect(),
        ));
        reports.push(json!({ "alpha": alpha, "threshold": r.threshold, "rows": r.rows }));
    }
    let summary = json!({ "experiment_id": id, "runs": reports });
    Ok(Artifacts { tables: vec![raw, agg], plots: vec![("nonuniqueness.svg".into(), plot)], summary })
}

fn time_regularity(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let rc = &c.regularity;
    let probe = HolderProbe { pair_count: rc.pair_count, ..HolderProbe::new(1.0, c.master_seed) };
    let settings = RegularitySettings {
        experiment_id: id.clone(),
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        levels: rc.levels.clone(),
        probe,
        slices: rc.slices,
        ..RegularitySettings::new(c.particles.clone(), c.resolved_seeds())
    };
    let r = run_time_regularity(kernel, &settings)?;
    let mut raw = Table::new("raw.csv", &["experiment_id", "N", "seed", "holder_norm"]);
    for cell in &r.cells {
        raw.push(vec![id.clone(), s(cell.particles), s(cell.seed), f(cell.norm)])?;
    }
    let mut agg = Table::new("aggregate.csv", &["N", "mean_norm", "median_norm", "exceedance_star"]);
    let mut exc = Table::new("exceedance.csv", &["N", "level", "exceedance"]);
    let mut plot = Plot::new(PlotKind::Lines, "exceedance of the empirical field norm", "level A", "P(norm > A)");
    for row in &r.rows {
        agg.push(vec![s(row.particles), f(row.mean_norm), f(row.median_norm), f(row.exceedance_star)])?;
        for (a, p) in r.levels.iter().zip(&row.exceedance) {
            exc.push(vec![s(row.particles), f(*a), f(*p)])?;
        }
        plot.series.push(Series::new(
            format!("N = {}", row.particles),
            r.levels.iter().copied().zip(row.exceedance.iter().copied()).collect(),
        ));
    }
    let summary = json!({
        "experiment_id": id,
        "alpha": r.alpha,
        "a_star": r.a_star,
        "levels": r.levels,
        "decreasing_at_star": r.decreasing_at_star,
    });
    Ok(Artifacts { tables: vec![raw, agg, exc], plots: vec![("regularity.svg".into(), plot)], summary })
}

fn ulln(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let id = experiment_id(c)?;
    let net = holder_net(&c.net.ball(kernel.dim()), c.net.size)?;
    let settings = UllnSettings {
        experiment_id: id.clone(),
        dt: c.dt,
        horizon: c.horizon,
        f0: c.f0.clone(),
        r: c.ulln.r,
        q: c.ulln.q_value()?,
        reference_particles: c.ulln.reference_particles,
        grid: c.grid.clone(),
        bootstrap: c.metric.bootstrap,
        ..UllnSettings::new(c.particles.clone(), c.resolved_seeds())
    };
    let r = run_ulln_for_kernel(kernel, &net, &settings)?;
    let k = r.fields.len();
    let mut header: Vec<String> = ["experiment_id", "N", "seed", "sup_stat"].iter().map(|h| s(h)).collect();
    header.extend((0..k).map(|b| format!("field_{b}")));
    let mut raw = Table::with_header("raw.csv", header);
    for cell in &r.cells {
        let mut row = vec![id.clone(), s(cell.particles), s(cell.seed), f(cell.sup_stat)];
        row.extend(cell.per_field.iter().map(|v| f(*v)));
        raw.push(row)?;
    }
    let aggregate = summary_table("aggregate.csv", &r.summaries, &[])?;
    let plot = Plot::new(PlotKind::LogLog, "kernel-weighted uniform LLN", "N", "mean sup over net")
        .with_series(means_series("mean", &r.summaries));
    let summary = json!({ "experiment_id": id, "fields": r.fields, "fit": r.fit });
    Ok(Artifacts { tables: vec![raw, aggregate], plots: vec![("ulln.svg".into(), plot)], summary })
}

fn entropy(c: &RunConfig) -> Result<Artifacts> {
    let e = &c.entropy;
    let settings = EntropySettings {
        eps: e.eps.clone(),
        spaces: e.spaces,
        seed: c.master_seed,
        weight: e.weight,
        half_width: e.half_width,
    };
    let r = run_entropy_check(&settings)?;
    let mut t = Table::new(
        "entropy.csv",
        &[
            "eps",
            "lip1_log_size",
            "lip1_nodes",
            "mean_greedy",
            "mean_exact",
            "product_checks",
            "product_violations",
            "metric_checks",
            "metric_violations",
        ],
    );
    for row in &r.rows {
        t.push(vec![
            f(row.eps),
            f(row.lip1_log_size),
            s(row.lip1_nodes),
            f(row.mean_greedy),
            f(row.mean_exact),
            s(row.product_checks),
            s(row.product_violations),
            s(row.metric_checks),
            s(row.metric_violations),
        ])?;
    }
    let plot = Plot::new(PlotKind::LogLog, "Lipschitz-ball net", "1/eps", "log N(eps)")
        .with_series(Series::new("log size", r.rows.iter().map(|row| (1.0 / row.eps, row.lip1_log_size)).collect()));
    let summary = json!({ "lip1_exponent": r.lip1_exponent, "violations": r.violations });
    Ok(Artifacts { tables: vec![t], plots: vec![("entropy.svg".into(), plot)], summary })
}

fn energy(c: &RunConfig, kernel: &Kernel) -> Result<Artifacts> {
    let settings = EnergySettings {
        pairs: c.energy.pairs,
        ball: c.net.ball(kernel.dim()),
        weights: c.energy.weights()?,
        f0: c.f0.clone(),
        horizon: c.horizon,
        dt: c.dt,
        grid: c.grid.clone(),
    };
    let r = run_energy_check(&settings)?;
    let mut t = Table::new(
        "energy.csv",
        &["pair", "first", "second", "lhs_initial", "lhs_max", "rhs_max", "fitted_c", "violations"],
    );
    for row in &r.rows {
        t.push(vec![
            s(row.pair),
            s(row.first),
            s(row.second),
            f(row.lhs_initial),
            f(row.lhs_max),
            f(row.rhs_max),
            f(row.fitted_c),
            s(row.violations),
        ])?;
    }
    let mut ratios = Table::new("ratios.csv", &["pair", "t", "lhs_over_rhs"]);
    let mut plot = Plot::new(PlotKind::Lines, "energy estimate", "t", "lhs / rhs");
    for (p, v) in r.ratios.iter().enumerate() {
        for (time, q) in r.times.iter().zip(v) {
            ratios.push(vec![s(p), f(*time), f(*q)])?;
        }
        plot.series.push(Series::new(format!("pair {p}"), r.times.iter().copied().zip(v.iter().copied()).collect()));
    }
    let summary = json!({ "violations": r.violations, "rows": r.rows });
    Ok(Artifacts { tables: vec![t, ratios], plots: vec![("energy.svg".into(), plot)], summary })
}

fn selftest(c: &RunConfig) -> Result<Artifacts> {
    let settings = SelftestSettings {
        cells: c.grid.cells,
        half_width: c.grid.half_width,
        horizon: c.horizon,
        ..SelftestSettings::default()
    };
    let r = run_pde_selftest(&settings)?;
    let mut t = Table::new(
        "selftest.csv",
        &["initial_variance", "final_variance", "variance_error", "mass_drift", "dt", "contraction"],
    );
    t.push(vec![
        f(r.initial_variance),
        f(r.final_variance),
        f(r.variance_error),
        f(r.mass_drift),
        f(r.dt),
        f(r.contraction),
    ])?;
    let mut refine = Table::new("refinement.csv", &["cells", "w1_to_next"]);
    for (g, d) in r.refinement_cells.iter().zip(&r.refinement_distances) {
        refine.push(vec![s(g), f(*d)])?;
    }
    let last = r.snapshots.last().ok_or_else(|| LabError::Experiment("no heat-flow snapshots".into()))?;
    let density = density_table("heat_final.csv", last)?;
    let spec = last.spec;
    let mut values = Vec::with_capacity(spec.len() * r.snapshots.len());
    for snap in &r.snapshots {
        values.extend(snap.density_values());
    }
    let mut plot = Plot::new(PlotKind::Heatmap, "heat flow density", "x", "t");
    plot.heatmap = Some(Heatmap {
        x_range: (-spec.half_width, spec.half_width),
        y_range: (0.0, c.horizon.max(f64::MIN_POSITIVE)),
        nx: spec.cells,
        ny: r.snapshots.len(),
        values,
    });
    let summary = serde_json::to_value(&r)?;
    Ok(Artifacts { tables: vec![t, refine, density], plots: vec![("heat.svg".into(), plot)], summary })
}

/// Runs the configured experiment without writing anything.
pub fn build_artifacts(c: &RunConfig) -> Result<Artifacts> {
    c.validate()?;
    let kernel = c.kernel.build()?;
    match c.experiment {
        ExperimentKind::ChaosRate => chaos_rate(c, &kernel),
        ExperimentKind::GcSup => gc_sup(c, &kernel),
        ExperimentKind::CouplingDecomp => coupling(c, &kernel),
        ExperimentKind::Counterexample => counterexample(c),
        ExperimentKind::Nonuniqueness => nonuniqueness(c),
        ExperimentKind::TimeRegularity => time_regularity(c, &kernel),
        ExperimentKind::UllnKernel => ulln(c, &kernel),
        ExperimentKind::EntropyCheck => entropy(c),
        ExperimentKind::EnergyCheck => energy(c, &kernel),
        ExperimentKind::PdeSelftest => selftest(c),
    }
}

fn record(dir: &Path, name: &str, bytes: &[u8], digest: String, masked: Vec<String>) -> Result<ArtifactRecord> {
    write_atomic(&dir.join(name), bytes)?;
    Ok(ArtifactRecord { path: name.into(), sha256: digest, bytes: bytes.len() as u64, masked_columns: masked })
}

/// Writes artifacts to `dir`; returns their manifest records.
pub fn write_artifacts(dir: &Path, config: &RunConfig, a: &Artifacts) -> Result<Vec<ArtifactRecord>> {
    let mut out = Vec::new();
    let mut text = serde_json::to_string_pretty(&RunConfig { output: None, ..config.clone() })?;
    text.push('\n');
    out.push(record(dir, "config.json", text.as_bytes(), sha256_hex(text.as_bytes()), Vec::new())?);
    for t in &a.tables {
        let bytes = t.to_bytes()?;
        out.push(record(dir, &t.name, &bytes, t.digest()?, t.masked_columns())?);
    }
    let mut summary = serde_json::to_string_pretty(&a.summary)?;
    summary.push('\n');
    out.push(record(dir, "summary.json", summary.as_bytes(), sha256_hex(summary.as_bytes()), Vec::new())?);
    for (name, plot) in &a.plots {
        let svg = render_svg(plot)?;
        out.push(record(dir, name, svg.as_bytes(), sha256_hex(svg.as_bytes()), Vec::new())?);
    }
    Ok(out)
}

/// Runs, writes every artifact into `dir` and finishes with the manifest.
pub fn execute(config: &RunConfig, dir: &Path) -> Result<RunManifest> {
    let started = now_rfc3339();
    let artifacts = build_artifacts(config)?;
    let records = write_artifacts(dir, config, &artifacts)?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment,
        config_hash: config.hash()?,
        config: RunConfig { output: Some(dir.to_path_buf()), ..config.clone() },
        seeds: config.resolved_seeds(),
        sub_runs: sub_run_count(config),
        started,
        finished: now_rfc3339(),
        artifacts: records,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Re-runs the configuration recorded in a manifest into `dir` and compares
/// every digest with the recorded one.
pub fn rerun_from_manifest(manifest_path: &Path, dir: &Path) -> Result<(RunManifest, Vec<DigestCheck>)> {
    let old = RunManifest::load(manifest_path)?;
    let config = RunConfig { output: Some(PathBuf::from(dir)), ..old.config.clone() };
    let new = execute(&config, dir)?;
    Ok((new, old.verify(dir)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{KernelConfig, KernelFamilyName};

    #[test]
    fn entropy_run_writes_and_reproduces() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::preset(ExperimentKind::EntropyCheck);
        c.entropy.spaces = 4;
        let m = execute(&c, dir.path()).unwrap();
        let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(names, ["config.json", "entropy.csv", "summary.json", "entropy.svg"]);
        assert!(m.verify(dir.path()).iter().all(|d| d.matches()));
        let again = tempfile::tempdir().unwrap();
        let (_, checks) = rerun_from_manifest(&dir.path().join("manifest.json"), again.path()).unwrap();
        assert!(checks.iter().all(|d| d.matches()), "{checks:?}");
    }

    #[test]
    fn sub_run_counts() {
        let mut c = RunConfig::new(ExperimentKind::ChaosRate, KernelConfig::new(KernelFamilyName::Sine));
        assert_eq!(sub_run_count(&c), 4 * 32 + 32);
        c.metric.dt_sensitivity = false;
        c.seeds = Some(vec![1, 2]);
        assert_eq!(sub_run_count(&c), 8);
    }
}
