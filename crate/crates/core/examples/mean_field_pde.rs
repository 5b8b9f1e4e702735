//! McKean-Vlasov density on a grid, the kinetic equation in phase space,
//! and the output formats for densities.
//!
//! ```text
//! cargo run --release --example mean_field_pde -- [out_dir]
//! ```

use std::path::PathBuf;

use chaoslab::field::Kernel;
use chaoslab::io::table::density_table;
use chaoslab::io::{emit_plot, Heatmap, Plot, PlotKind, Series};
use chaoslab::particle::F0Spec;
use chaoslab::pde::{evolve_kinetic, evolve_mckean_path, FpOptions, GridSpec, KineticForce, PhaseGridDensity};

fn main() -> chaoslab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/example-pde".into()));
    let spec = GridSpec::new(1, 8.0, 512)?;
    let f0 = F0Spec::Gaussian { mean: 1.0, sigma: 0.7 }.to_grid(spec)?;
    let kernel = Kernel::sine(1)?;

    let path = evolve_mckean_path(&f0, &kernel, 1.0 / 256.0, 256, 16, &FpOptions::implicit())?;
    for f in [&path[0], path.last().unwrap()] {
        println!("t = {:.3}: mass {:.12}, mean {:.4}, variance {:.4}", f.time, f.total_mass(), f.mean()[0], f.variance()[0]);
    }
    density_table("final_density.csv", path.last().unwrap())?.write(&out)?;

    let mut heat = Plot::new(PlotKind::Heatmap, "mean-field density", "x", "t");
    heat.heatmap = Some(Heatmap {
        x_range: (-8.0, 8.0),
        y_range: (0.0, 1.0),
        nx: spec.cells,
        ny: path.len(),
        values: path.iter().flat_map(|f| f.density_values()).collect(),
    });
    emit_plot(&heat, &out.join("density.svg"))?;
    let lines = Plot::new(PlotKind::Lines, "initial and final density", "x", "density")
        .with_series(Series::new("t = 0", spec.centers().into_iter().zip(path[0].density_values()).collect()))
        .with_series(Series::new("t = 1", spec.centers().into_iter().zip(path.last().unwrap().density_values()).collect()));
    emit_plot(&lines, &out.join("profiles.svg"))?;

    // Kinetic equation: positions and velocities, friction 1.
    let xs = GridSpec::new(1, 8.0, 96)?;
    let vs = GridSpec::new(1, 6.0, 96)?;
    let start = PhaseGridDensity::product(&F0Spec::default().to_grid(xs)?, &F0Spec::default().to_grid(vs)?, 1.0)?;
    let end = evolve_kinetic(&start, KineticForce::MeanField(&kernel), 1.0 / 256.0, 256, &FpOptions::implicit())?;
    println!(
        "kinetic: velocity variance {:.4} -> {:.4} (stationary value 0.5)",
        start.v_marginal().variance()[0],
        end.v_marginal().variance()[0]
    );
    println!("files written to {}", out.display());
    Ok(())
}
