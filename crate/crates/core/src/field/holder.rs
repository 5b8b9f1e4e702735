//! Hölder-ball nets of smooth fields and sampled Hölder-norm estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::drift::{DriftField, FourierMode};
use crate::rng::{halton, stream_rng, PROBE_STREAM};

/// A finite family of Fourier-feature fields inside the ball of radius `radius`
/// of the `alpha`-Hölder space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderBallSpec {
    #[serde(default = "one")]
    pub dim: usize,
    pub alpha: f64,
    pub radius: f64,
    #[serde(default = "default_modes")]
    pub mode_count: usize,
    #[serde(default = "default_cap")]
    pub frequency_cap: f64,
}

fn one() -> usize {
    1
}
fn default_modes() -> usize {
    3
}
fn default_cap() -> f64 {
    4.0
}

impl HolderBallSpec {
    pub fn new(dim: usize, alpha: f64, radius: f64) -> Self {
        HolderBallSpec { dim, alpha, radius, mode_count: default_modes(), frequency_cap: default_cap() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(LabError::invalid(format!("Hölder ball radius must be > 0, got {}", self.radius)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LabError::invalid(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(LabError::Unsupported(format!("net dimension {}", self.dim)));
        }
        if self.mode_count == 0 || !(self.frequency_cap > 0.0) {
            return Err(LabError::invalid("net needs at least one mode and a positive frequency cap"));
        }
        Ok(())
    }

    /// Analytic bound `sup|b| + [b]_alpha` of a mode list.
    pub fn analytic_norm(&self, modes: &[FourierMode]) -> f64 {
        let c = 2f64.powf(1.0 - self.alpha);
        modes
            .iter()
            .map(|m| {
                let w = m.frequency.iter().map(|v| v * v).sum::<f64>().sqrt();
                m.amplitude.abs() * (1.0 + c * w.powf(self.alpha))
            })
            .sum()
    }
}

/// Mode lists of the first `count` net elements; element 0 is empty (zero).
pub fn net_coefficients(spec: &HolderBallSpec, count: usize) -> Result<Vec<Vec<FourierMode>>> {
    spec.validate()?;
    if count == 0 {
        return Err(LabError::invalid("net size must be at least 1"));
    }
    let tau = std::f64::consts::TAU;
    let mut out = vec![Vec::new()];
    for k in 1..count {
        let mut modes = Vec::with_capacity(spec.mode_count);
        for m in 0..spec.mode_count {
            let u = halton(((k - 1) * spec.mode_count + m + 1) as u64, 5);
            let w = spec.frequency_cap * (0.25 + 0.75 * u[0]);
            let phase = tau * u[1];
            let mut a = 2.0 * u[2] - 1.0;
            if a.abs() < 0.1 {
                a = if a < 0.0 { -0.1 } else { 0.1 };
            }
            let (frequency, direction) = if spec.dim == 1 {
                (vec![w], vec![1.0])
            } else {
                let th = tau * u[3];
                let ph = tau * u[4];
                (vec![w * th.cos(), w * th.sin()], vec![ph.cos(), ph.sin()])
            };
            modes.push(FourierMode { amplitude: a, frequency, phase, direction });
        }
        let scale = spec.radius * (1.0 - 1e-12) / spec.analytic_norm(&modes);
        for md in &mut modes {
            md.amplitude *= scale;
        }
        out.push(modes);
    }
    Ok(out)
}

/// `count` deterministic smooth fields of Hölder norm at most `spec.radius`.
pub fn holder_net(spec: &HolderBallSpec, count: usize) -> Result<Vec<DriftField>> {
    Ok(net_coefficients(spec, count)?
        .into_iter()
        .enumerate()
        .map(|(k, modes)| DriftField::net_element(spec.dim, modes, format!("net[{k}]")))
        .collect())
}

/// Where and when a field is probed by [`estimate_holder_norm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderProbe {
    pub alpha: f64,
    #[serde(default = "default_pairs")]
    pub pair_count: usize,
    #[serde(default = "default_min_sep")]
    pub min_separation: f64,
    #[serde(default = "one_f")]
    pub max_separation: f64,
    #[serde(default = "default_slices")]
    pub time_slices: Vec<f64>,
    #[serde(default = "default_centers")]
    pub center_count: usize,
    #[serde(default = "default_radius")]
    pub center_radius: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_pairs() -> usize {
    256
}
fn default_min_sep() -> f64 {
    2f64.powi(-12)
}
fn one_f() -> f64 {
    1.0
}
fn default_slices() -> Vec<f64> {
    vec![0.0]
}
fn default_centers() -> usize {
    8
}
fn default_radius() -> f64 {
    3.0
}

impl HolderProbe {
    pub fn new(alpha: f64, seed: u64) -> Self {
        HolderProbe {
            alpha,
            pair_count: default_pairs(),
            min_separation: default_min_sep(),
            max_separation: 1.0,
            time_slices: default_slices(),
            center_count: default_centers(),
            center_radius: default_radius(),
            seed,
        }
    }

    pub fn with_slices(mut self, slices: Vec<f64>) -> Self {
        self.time_slices = slices;
        self
    }

    /// Probe point pairs: dyadic separations `2^-k`, `k = 0..=12`, around the
    /// origin and random centres, then random pairs.
    fn pairs(&self, d: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = stream_rng(self.seed, PROBE_STREAM);
        let mut centers = vec![vec![0.0; d]];
        for _ in 0..self.center_count {
            centers.push((0..d).map(|_| rng.gen_range(-self.center_radius..=self.center_radius)).collect());
        }
        let mut pairs = Vec::new();
        for c in &centers {
            for k in 0..=12 {
                let delta = 2f64.powi(-k);
                if delta < self.min_separation || delta > self.max_separation {
                    continue;
                }
                for a in 0..d {
                    let mut y = c.clone();
                    y[a] += delta;
                    pairs.push((c.clone(), y));
                    let mut lo = c.clone();
                    let mut hi = c.clone();
                    lo[a] -= delta / 2.0;
                    hi[a] += delta / 2.0;
                    pairs.push((lo, hi));
                }
            }
        }
        let (lmin, lmax) = (self.min_separation.ln(), self.max_separation.ln());
        for _ in 0..self.pair_count {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-self.center_radius..=self.center_radius)).collect();
            let r = if lmax > lmin { rng.gen_range(lmin..=lmax).exp() } else { self.max_separation };
            let dir: Vec<f64> = if d == 1 {
                vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }]
            } else {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![th.cos(), th.sin()]
            };
            let y = x.iter().zip(&dir).map(|(a, e)| a + r * e).collect();
            pairs.push((x, y));
        }
        pairs
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Sampled lower bound of the parabolic Hölder norm:
/// `sup |b| + max |b_t(x) - b_s(y)| / (|x-y|^alpha + |t-s|^(alpha/2))`
/// over the probe set.
pub fn estimate_holder_norm(field: &DriftField, probe: &HolderProbe) -> Result<f64> {
    if probe.pair_count == 0 {
        return Err(LabError::invalid("probe pair_count must be at least 1"));
    }
    if !(probe.alpha > 0.0 && probe.alpha <= 1.0) {
        return Err(LabError::invalid(format!("alpha must lie in (0,1], got {}", probe.alpha)));
    }
    if probe.time_slices.is_empty() {
        return Err(LabError::invalid("probe needs at least one time slice"));
    }
    if !(probe.min_separation > 0.0 && probe.min_separation <= probe.max_separation) {
        return Err(LabError::invalid("probe separations must satisfy 0 < min <= max"));
    }
    let d = field.dim();
    let a = probe.alpha;
    let pairs = probe.pairs(d);
    let mut sup: f64 = 0.0;
    let mut quotient: f64 = 0.0;
    let mut prev: Option<(f64, Vec<(Vec<f64>, Vec<f64>)>)> = None;
    let mut bx = vec![0.0; d];
    let mut by = vec![0.0; d];
    for &t in &probe.time_slices {
        let mut vals = Vec::with_capacity(pairs.len());
        for (x, y) in &pairs {
            field.eval_into(t, x, &mut bx);
            field.eval_into(t, y, &mut by);
            sup = sup.max(dist(&bx, &vec![0.0; d])).max(dist(&by, &vec![0.0; d]));
            let sep = dist(x, y);
            if sep > 0.0 {
                quotient = quotient.max(dist(&bx, &by) / sep.powf(a));
            }
            vals.push((bx.clone(), by.clone()));
        }
        if let Some((s, old)) = &prev {
            let dt = (t - s).abs();
            if dt > 0.0 {
                let tw = dt.powf(a / 2.0);
                for (((x, y), (nx, ny)), (ox, oy)) in pairs.iter().zip(&vals).zip(old) {
                    quotient = quotient.max(dist(nx, ox) / tw).max(dist(ny, oy) / tw);
                    let sep = dist(x, y).powf(a) + tw;
                    quotient = quotient.max(dist(nx, oy) / sep).max(dist(ny, ox) / sep);
                }
            }
        }
        prev = Some((t, vals));
    }
    Ok(sup + quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn constant_field_norm_is_its_length() {
        let f = DriftField::constant(vec![0.3, 0.4]);
        let est = estimate_holder_norm(&f, &HolderProbe::new(0.5, 1)).unwrap();
        assert!((est - 0.5).abs() < 1e-15);
    }

    #[test]
    fn capped_root_probed_across_origin() {
        let f = DriftField::closed_form(
            1,
            1.0,
            "root",
            Arc::new(|_t, x: &[f64], out: &mut [f64]| out[0] = x[0].abs().sqrt().min(1.0)),
        );
        let est = estimate_holder_norm(&f, &HolderProbe::new(0.5, 3)).unwrap();
        // Centred pair at separation 2^-k: |b(d/2) - b(-d/2)| = 0, but the
        // one-sided pair (0, d) gives quotient exactly 1.
        assert!(est >= 1.0);
    }

    #[test]
    fn time_independent_field_ignores_extra_slices() {
        let spec = HolderBallSpec::new(1, 0.75, 1.0);
        let f = holder_net(&spec, 3).unwrap().pop().unwrap();
        let one = estimate_holder_norm(&f, &HolderProbe::new(0.75, 9)).unwrap();
        let two = estimate_holder_norm(&f, &HolderProbe::new(0.75, 9).with_slices(vec![0.0, 0.5])).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn net_starts_with_zero_and_is_deterministic() {
        let spec = HolderBallSpec::new(1, 0.75, 1.0);
        let a = net_coefficients(&spec, 5).unwrap();
        let b = net_coefficients(&spec, 5).unwrap();
        assert_eq!(a, b);
        assert!(a[0].is_empty());
        assert_eq!(holder_net(&spec, 1).unwrap().len(), 1);
        assert!(net_coefficients(&HolderBallSpec::new(1, 0.75, 0.0), 2).is_err());
    }

    #[test]
    fn single_mode_element_respects_analytic_bound() {
        let mut spec = HolderBallSpec::new(1, 0.5, 1.0);
        spec.mode_count = 1;
        let coeffs = net_coefficients(&spec, 2).unwrap();
        let m = &coeffs[1][0];
        let c = m.amplitude.abs();
        let w = m.frequency[0].abs();
        assert!(c * w.powf(0.5) <= 1.0);
        assert!(c * (1.0 + 2f64.sqrt() * w.sqrt()) <= 1.0 + 1e-12);
    }

    #[test]
    fn net_elements_within_ball_and_distinct() {
        for dim in [1, 2] {
            let spec = HolderBallSpec::new(dim, 0.75, 1.0);
            let net = holder_net(&spec, 8).unwrap();
            for f in &net {
                let est = estimate_holder_norm(f, &HolderProbe::new(0.75, 5)).unwrap();
                assert!(est <= spec.radius, "{}: {est}", f.descriptor());
            }
            let probe: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64; dim]).collect();
            for i in 0..net.len() {
                for j in 0..i {
                    let gap = probe
                        .iter()
                        .map(|x| dist(&net[i].eval(0.0, x).unwrap(), &net[j].eval(0.0, x).unwrap()))
                        .fold(0.0, f64::max);
                    assert!(gap > 0.0);
                }
            }
        }
    }
}
