//! The experiments: each takes a kernel or field family plus settings, runs
//! its sub-run grid in parallel and returns a serialisable report.

pub mod checks;
pub mod counterexample;
pub mod coupling;
pub mod gc;
pub mod harness;
pub mod nonuniqueness;
pub mod rate;
pub mod regularity;
pub mod ulln;

pub use checks::{
    run_energy_check, run_entropy_check, run_pde_selftest, EnergyCheckReport, EnergySettings, EntropyCheckReport,
    EntropySettings, SelftestReport, SelftestSettings,
};
pub use counterexample::{run_counterexample, CounterexampleReport, CounterexampleSettings};
pub use coupling::{run_coupling_decomposition, CouplingDecomposition, CouplingSettings};
pub use gc::{run_gc_experiment, GcCell, GcReport, GcSettings};
pub use harness::{LimitPath, PdeSettings, SeedSummary, DecayFit};
pub use nonuniqueness::{run_nonuniqueness_demo, NonuniquenessReport, NonuniquenessSettings};
pub use rate::{run_chaos_rate, theory_exponent, RateCell, RateReport, RateSettings};
pub use regularity::{run_time_regularity, RegularityReport, RegularitySettings};
pub use ulln::{run_ulln_for_kernel, UllnReport, UllnSettings};
