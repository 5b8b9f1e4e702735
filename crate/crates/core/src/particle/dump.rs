//! Trajectory persistence: CSV or little-endian binary plus a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::io::digest::{canonical_hash, write_atomic};
use crate::particle::sim::{SimConfig, TrajectoryBundle};

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: String,
    seed: u64,
    noise_seed: u64,
    drift: &'a str,
    particles: usize,
    dim: usize,
    steps: usize,
    config: &'a SimConfig,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_sidecar(bundle: &TrajectoryBundle, path: &Path) -> Result<()> {
    let p = &bundle.provenance;
    let side = Sidecar {
        config_hash: canonical_hash(&p.config)?,
        seed: p.config.seed,
        noise_seed: p.noise_seed,
        drift: &p.drift,
        particles: bundle.particles,
        dim: bundle.dim,
        steps: bundle.steps(),
        config: &p.config,
    };
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())
}

/// Columns `particle, step, t, x1..xd[, v1..vd]`; writes `<path>.json` too.
pub fn write_trajectory_csv(bundle: &TrajectoryBundle, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["particle".to_string(), "step".into(), "t".into()];
    header.extend((1..=bundle.dim).map(|a| format!("x{a}")));
    if bundle.velocities.is_some() {
        header.extend((1..=bundle.dim).map(|a| format!("v{a}")));
    }
    w.write_record(&header)?;
    for i in 0..bundle.particles {
        for (k, t) in bundle.times.iter().enumerate() {
            let mut row = vec![i.to_string(), k.to_string(), format!("{t:?}")];
            row.extend(bundle.state(i, k).iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
    write_atomic(path, &bytes)?;
    write_sidecar(bundle, path)
}

/// Binary layout: magic `CHLB`, u32 version, u64 N, u64 d, u64 steps,
/// u8 has_velocity, then for each step the f64 time followed by all
/// positions and (optionally) velocities, little-endian.
pub fn write_trajectory_binary(bundle: &TrajectoryBundle, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(b"CHLB");
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(bundle.particles as u64).to_le_bytes());
    out.extend_from_slice(&(bundle.dim as u64).to_le_bytes());
    out.extend_from_slice(&(bundle.steps() as u64).to_le_bytes());
    out.push(bundle.velocities.is_some() as u8);
    for (k, t) in bundle.times.iter().enumerate() {
        out.extend_from_slice(&t.to_le_bytes());
        for v in &bundle.positions[k] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(vs) = &bundle.velocities {
            for v in &vs[k] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    write_atomic(path, &out)?;
    write_sidecar(bundle, path)
}

/// Reads back `(times, positions, velocities)` from a binary dump.
#[allow(clippy::type_complexity)]
pub fn read_trajectory_binary(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> {
    let bytes = std::fs::read(path)?;
    let bad = || LabError::Shape("not a trajectory dump".into());
    if bytes.len() < 33 || &bytes[0..4] != b"CHLB" {
        return Err(bad());
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let (n, d, steps) = (u64_at(8), u64_at(16), u64_at(24));
    let has_v = bytes[32] == 1;
    let per = 1 + n * d * if has_v { 2 } else { 1 };
    if bytes.len() != 33 + (steps + 1) * per * 8 {
        return Err(bad());
    }
    let f = |i: usize| f64::from_le_bytes(bytes[33 + i * 8..41 + i * 8].try_into().unwrap());
    let mut times = Vec::new();
    let mut pos = Vec::new();
    let mut vel = Vec::new();
    for k in 0..=steps {
        let base = k * per;
        times.push(f(base));
        pos.push((0..n * d).map(|j| f(base + 1 + j)).collect());
        if has_v {
            vel.push((0..n * d).map(|j| f(base + 1 + n * d + j)).collect());
        }
    }
    Ok((times, pos, has_v.then_some(vel)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::kernel::Kernel;
    use crate::particle::noise::NoiseStore;
    use crate::particle::sim::simulate_interacting;

    #[test]
    fn binary_round_trip_and_sidecar() {
        let c = SimConfig::second_order(3, 1, 0.25, 0.125, 0.5, 4);
        let noise = NoiseStore::generate(1, 3, 1, 2, c.dt).unwrap();
        let b = simulate_interacting(&c, &Kernel::sine(1).unwrap(), &noise).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.bin");
        write_trajectory_binary(&b, &p).unwrap();
        let (t, x, v) = read_trajectory_binary(&p).unwrap();
        assert_eq!(t, b.times);
        assert_eq!(x, b.positions);
        assert_eq!(v, b.velocities);
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.bin.json")).unwrap()).unwrap();
        assert_eq!(side["seed"], 4);
        assert_eq!(side["config_hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn csv_has_one_row_per_particle_step() {
        let c = SimConfig::first_order(2, 2, 0.5, 0.25, 1);
        let noise = NoiseStore::generate(1, 2, 2, 2, c.dt).unwrap();
        let b = simulate_interacting(&c, &Kernel::zero(2).unwrap(), &noise).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("traj.csv");
        write_trajectory_csv(&b, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "particle,step,t,x1,x2");
        assert_eq!(lines.len(), 1 + 2 * 3);
    }
}
