//! Time-dependent drift fields `b_t(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field::kernel::{HolderShape, Kernel, KernelFamily};
use crate::pde::grid::{GridDensity, GridSpec};

/// Interpolation used by grid-backed fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpOrder {
    Nearest,
    Linear,
}

pub type FieldFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// One Fourier feature `amplitude * sin(frequency . x + phase) * direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMode {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    pub phase: f64,
    pub direction: Vec<f64>,
}

/// Particle-backed field `b^N`, one snapshot per time step.
#[derive(Clone, Debug)]
pub struct EmpiricalField {
    pub kernel: Kernel,
    pub snapshots: Arc<Vec<Vec<f64>>>,
    pub particles: usize,
    pub dt: f64,
    pub self_interaction: bool,
}

/// Node samples at cell centres, one vector per time step.
#[derive(Clone, Debug)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Arc<Vec<Vec<f64>>>,
    pub dt: f64,
    pub order: InterpOrder,
}

#[derive(Clone)]
pub enum DriftBacking {
    Constant(Vec<f64>),
    ClosedForm(FieldFn),
    Empirical(EmpiricalField),
    Grid(GridField),
    NetElement(Vec<FourierMode>),
}

impl fmt::Debug for DriftBacking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftBacking::Constant(c) => write!(f, "Constant({c:?})"),
            DriftBacking::ClosedForm(_) => write!(f, "ClosedForm"),
            DriftBacking::Empirical(e) => write!(f, "Empirical(N={}, steps={})", e.particles, e.snapshots.len()),
            DriftBacking::Grid(g) => write!(f, "Grid({:?}, steps={})", g.spec, g.values.len()),
            DriftBacking::NetElement(m) => write!(f, "NetElement({} modes)", m.len()),
        }
    }
}

/// A bounded vector field on `[0, T] x R^d`.
#[derive(Clone, Debug)]
pub struct DriftField {
    dim: usize,
    horizon: f64,
    backing: DriftBacking,
    sup_bound: f64,
    descriptor: String,
}

#[inline]
fn step_index(t: f64, dt: f64, len: usize) -> usize {
    if len <= 1 || !(t > 0.0) {
        return 0;
    }
    let k = (t / dt + 1e-9).floor() as usize;
    k.min(len - 1)
}

impl DriftField {
    pub fn zero(dim: usize) -> Self {
        DriftField::constant(vec![0.0; dim])
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let sup = value.iter().map(|v| v * v).sum::<f64>().sqrt();
        DriftField {
            dim: value.len(),
            horizon: f64::INFINITY,
            descriptor: format!("constant{value:?}"),
            backing: DriftBacking::Constant(value),
            sup_bound: sup,
        }
    }

    /// Wraps a closure `(t, x, out)`. `sup_bound` is trusted.
    pub fn closed_form(dim: usize, sup_bound: f64, descriptor: impl Into<String>, f: FieldFn) -> Self {
        DriftField {
            dim,
            horizon: f64::INFINITY,
            backing: DriftBacking::ClosedForm(f),
            sup_bound,
            descriptor: descriptor.into(),
        }
    }

    pub fn net_element(dim: usize, modes: Vec<FourierMode>, descriptor: impl Into<String>) -> Self {
        let sup = modes.iter().map(|m| m.amplitude.abs()).sum();
        DriftField {
            dim,
            horizon: f64::INFINITY,
            backing: DriftBacking::NetElement(modes),
            sup_bound: sup,
            descriptor: descriptor.into(),
        }
    }

    /// `b^N` driven by a sequence of snapshots (`positions[step]`, flat
    /// `N x d`), sampled at times `k * dt`.
    pub fn empirical_sequence(
        kernel: &Kernel,
        snapshots: Arc<Vec<Vec<f64>>>,
        dt: f64,
        self_interaction: bool,
    ) -> Result<Self> {
        let d = kernel.dim();
        let first = snapshots
            .first()
            .ok_or_else(|| LabError::invalid("empirical drift needs at least one snapshot"))?;
        if first.is_empty() || first.len() % d != 0 {
            return Err(LabError::invalid("empirical drift needs a non-empty snapshot of d-points"));
        }
        let n = first.len() / d;
        if snapshots.iter().any(|s| s.len() != n * d) {
            return Err(LabError::Shape("snapshots differ in particle count".into()));
        }
        if !self_interaction && n < 2 {
            return Err(LabError::invalid("excluding self-interaction needs N >= 2"));
        }
        let sup = if self_interaction || kernel.vanishes_on_diagonal() {
            kernel.bound() * if self_interaction { 1.0 } else { n as f64 / (n - 1) as f64 }
        } else {
            kernel.bound() * (n + 1) as f64 / (n - 1) as f64
        };
        Ok(DriftField {
            dim: d,
            horizon: if snapshots.len() == 1 { f64::INFINITY } else { dt * (snapshots.len() - 1) as f64 },
            descriptor: format!(
                "empirical(kernel={},N={n},self={self_interaction},steps={})",
                kernel.descriptor(),
                snapshots.len()
            ),
            backing: DriftBacking::Empirical(EmpiricalField {
                kernel: kernel.clone(),
                snapshots,
                particles: n,
                dt,
                self_interaction,
            }),
            sup_bound: sup,
        })
    }

    /// Grid-backed field from node samples per time step.
    pub fn grid(spec: GridSpec, values: Vec<Vec<f64>>, dt: f64, order: InterpOrder) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::invalid("grid field needs at least one time slice"));
        }
        let expected = spec.len() * spec.dim;
        if values.iter().any(|v| v.len() != expected) {
            return Err(LabError::Shape(format!("grid field slices must hold {expected} values")));
        }
        let d = spec.dim;
        let mut sup: f64 = 0.0;
        for slice in &values {
            for node in slice.chunks(d) {
                sup = sup.max(node.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
        }
        Ok(DriftField {
            dim: d,
            horizon: if values.len() == 1 { f64::INFINITY } else { dt * (values.len() - 1) as f64 },
            descriptor: format!("grid(G={},L={},steps={})", spec.cells, spec.half_width, values.len()),
            backing: DriftBacking::Grid(GridField { spec, values: Arc::new(values), dt, order }),
            sup_bound: sup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn backing(&self) -> &DriftBacking {
        &self.backing
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.backing {
            DriftBacking::Constant(_) | DriftBacking::NetElement(_) => true,
            DriftBacking::ClosedForm(_) => false,
            DriftBacking::Empirical(e) => e.snapshots.len() == 1,
            DriftBacking::Grid(g) => g.values.len() == 1,
        }
    }

    /// Checked evaluation at `(t, x)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(LabError::invalid(format!(
                "field of dimension {} evaluated at a point of dimension {}",
                self.dim,
                x.len()
            )));
        }
        if t < 0.0 || t > self.horizon * (1.0 + 1e-12) + 1e-12 {
            return Err(LabError::invalid(format!("time {t} outside [0, {}]", self.horizon)));
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into `out`.
    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.backing {
            DriftBacking::Constant(c) => out.copy_from_slice(c),
            DriftBacking::ClosedForm(f) => f(t, x, out),
            DriftBacking::NetElement(modes) => eval_modes(modes, x, out),
            DriftBacking::Empirical(e) => {
                let k = step_index(t, e.dt, e.snapshots.len());
                SnapshotDrift::new(&e.kernel, &e.snapshots[k], e.self_interaction).eval_into(x, out);
            }
            DriftBacking::Grid(g) => {
                let k = step_index(t, g.dt, g.values.len());
                interp(&g.spec, &g.values[k], g.order, x, out);
            }
        }
    }

    /// Evaluates the field at every particle of a flat `N x d` array at grid
    /// step `step` (time `t`). Snapshot- and grid-backed fields are indexed by
    /// step, which keeps the arithmetic identical to the run that produced
    /// them.
    pub fn eval_all_at_step(&self, step: usize, t: f64, positions: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.backing {
            DriftBacking::Empirical(e) => {
                let k = step.min(e.snapshots.len() - 1);
                let prepared = SnapshotDrift::new(&e.kernel, &e.snapshots[k], e.self_interaction);
                prepared.eval_many(positions, out);
            }
            DriftBacking::Grid(g) => {
                let k = step.min(g.values.len() - 1);
                for (x, o) in positions.chunks(d).zip(out.chunks_mut(d)) {
                    interp(&g.spec, &g.values[k], g.order, x, o);
                }
            }
            _ => {
                for (x, o) in positions.chunks(d).zip(out.chunks_mut(d)) {
                    self.eval_into(t, x, o);
                }
            }
        }
    }

    /// Evaluates at many points at time `t`, picking stored slices the same
    /// way as [`DriftField::eval_into`].
    pub fn eval_many_at(&self, t: f64, points: &[f64], out: &mut [f64]) {
        let step = match &self.backing {
            DriftBacking::Empirical(e) => step_index(t, e.dt, e.snapshots.len()),
            DriftBacking::Grid(g) => step_index(t, g.dt, g.values.len()),
            _ => 0,
        };
        self.eval_all_at_step(step, t, points, out);
    }

    /// Pointwise sum `self + other` as a closed-form field.
    pub fn plus(&self, other: &DriftField) -> Result<DriftField> {
        if self.dim != other.dim {
            return Err(LabError::invalid("cannot add fields of different dimension"));
        }
        let (a, b) = (self.clone(), other.clone());
        let d = self.dim;
        let f: FieldFn = Arc::new(move |t, x, out| {
            let mut tmp = [0.0; 4];
            a.eval_into(t, x, out);
            b.eval_into(t, x, &mut tmp[..d]);
            for k in 0..d {
                out[k] += tmp[k];
            }
        });
        Ok(DriftField {
            dim: d,
            horizon: self.horizon.min(other.horizon),
            backing: DriftBacking::ClosedForm(f),
            sup_bound: self.sup_bound + other.sup_bound,
            descriptor: format!("({})+({})", self.descriptor, other.descriptor),
        })
    }

    /// Samples the field at the centres of `spec` at times `k * dt`,
    /// `k = 0..steps`, producing a grid-backed field.
    pub fn sample_on_grid(&self, spec: GridSpec, dt: f64, steps: usize, order: InterpOrder) -> Result<DriftField> {
        if spec.dim != self.dim {
            return Err(LabError::invalid("grid and field dimensions differ"));
        }
        let centers = spec.centers();
        let slices = if self.is_time_independent() { 1 } else { steps + 1 };
        let values: Vec<Vec<f64>> = (0..slices)
            .map(|k| {
                let mut out = vec![0.0; centers.len()];
                self.eval_all_at_step(k, k as f64 * dt, &centers, &mut out);
                out
            })
            .collect();
        let mut field = DriftField::grid(spec, values, dt, order)?;
        field.descriptor = format!("sampled({})", self.descriptor);
        Ok(field)
    }
}

fn eval_modes(modes: &[FourierMode], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for m in modes {
        let arg: f64 = m.frequency.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + m.phase;
        let s = m.amplitude * arg.sin();
        for (o, e) in out.iter_mut().zip(&m.direction) {
            *o += s * e;
        }
    }
}

fn interp(spec: &GridSpec, values: &[f64], order: InterpOrder, x: &[f64], out: &mut [f64]) {
    let g = spec.cells;
    let h = spec.width();
    let c0 = spec.center(0);
    let axis = |v: f64| -> (usize, f64) {
        if g == 1 {
            return (0, 0.0);
        }
        let s = ((v - c0) / h).clamp(0.0, (g - 1) as f64);
        match order {
            InterpOrder::Nearest => ((s.round() as usize).min(g - 1), 0.0),
            InterpOrder::Linear => {
                let i = (s.floor() as usize).min(g - 2);
                (i, s - i as f64)
            }
        }
    };
    if spec.dim == 1 {
        let (i, w) = axis(x[0]);
        out[0] = if w == 0.0 { values[i] } else { (1.0 - w) * values[i] + w * values[i + 1] };
        return;
    }
    let (i, wi) = axis(x[0]);
    let (j, wj) = axis(x[1]);
    let at = |a: usize, b: usize, c: usize| values[(a * g + b) * 2 + c];
    for c in 0..2 {
        let mut v = (1.0 - wi) * (1.0 - wj) * at(i, j, c);
        if wj != 0.0 {
            v += (1.0 - wi) * wj * at(i, j + 1, c);
        }
        if wi != 0.0 {
            v += wi * (1.0 - wj) * at(i + 1, j, c);
            if wj != 0.0 {
                v += wi * wj * at(i + 1, j + 1, c);
            }
        }
        out[c] = v;
    }
}

/// The empirical field of one snapshot, prepared for repeated evaluation.
///
/// `b(x) = (1/N) sum_i K(x, X^i)`, or without self-interaction
/// `(sum_i K(x, X^i) - K(x, x)) / (N-1)`, which at `x = X^j` is the average
/// over the other particles.
pub struct SnapshotDrift<'a> {
    kernel: &'a Kernel,
    positions: &'a [f64],
    n: usize,
    self_interaction: bool,
    /// Sine kernel: per-axis `(sum cos y, sum sin y)`.
    trig: Option<Vec<(f64, f64)>>,
}

impl<'a> SnapshotDrift<'a> {
    pub fn new(kernel: &'a Kernel, positions: &'a [f64], self_interaction: bool) -> Self {
        let d = kernel.dim();
        let n = positions.len() / d;
        let trig = match kernel.family() {
            KernelFamily::Sine => {
                let mut sums = vec![(0.0, 0.0); d];
                for p in positions.chunks(d) {
                    for (k, y) in p.iter().enumerate() {
                        let (s, c) = y.sin_cos();
                        sums[k].0 += c;
                        sums[k].1 += s;
                    }
                }
                Some(sums)
            }
            _ => None,
        };
        SnapshotDrift { kernel, positions, n, self_interaction, trig }
    }

    fn denominator(&self) -> f64 {
        if self.self_interaction {
            self.n as f64
        } else {
            (self.n - 1) as f64
        }
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.kernel.dim();
        if let KernelFamily::Constant { value } = self.kernel.family() {
            out.copy_from_slice(value);
            return;
        }
        let denom = self.denominator();
        if let Some(trig) = &self.trig {
            for k in 0..d {
                let (s, c) = x[k].sin_cos();
                out[k] = (s * trig[k].0 - c * trig[k].1) / denom;
            }
            return;
        }
        if d == 1 {
            let mut s = sum_kernel_1d(self.kernel, x[0], self.positions);
            if !self.self_interaction && !self.kernel.vanishes_on_diagonal() {
                s -= self.kernel.eval1(x[0], x[0]);
            }
            out[0] = s / denom;
            return;
        }
        let mut acc = [0.0; 2];
        let mut tmp = [0.0; 2];
        for y in self.positions.chunks(d) {
            self.kernel.eval_into(x, y, &mut tmp);
            acc[0] += tmp[0];
            acc[1] += tmp[1];
        }
        if !self.self_interaction && !self.kernel.vanishes_on_diagonal() {
            self.kernel.eval_into(x, x, &mut tmp);
            acc[0] -= tmp[0];
            acc[1] -= tmp[1];
        }
        out[0] = acc[0] / denom;
        out[1] = acc[1] / denom;
    }

    /// Evaluates at every point of a flat array.
    pub fn eval_many(&self, points: &[f64], out: &mut [f64]) {
        use rayon::prelude::*;
        let d = self.kernel.dim();
        let cheap = self.trig.is_some() || matches!(self.kernel.family(), KernelFamily::Constant { .. });
        if cheap || points.len() / d < 64 {
            for (x, o) in points.chunks(d).zip(out.chunks_mut(d)) {
                self.eval_into(x, o);
            }
        } else {
            points
                .par_chunks(d)
                .zip(out.par_chunks_mut(d))
                .for_each(|(x, o)| self.eval_into(x, o));
        }
    }
}

/// `sum_i K(x, y_i)` for `d = 1` with a fixed accumulation order (four
/// interleaved partial sums, combined pairwise).
pub(crate) fn sum_kernel_1d(kernel: &Kernel, x: f64, ys: &[f64]) -> f64 {
    #[inline(always)]
    fn lanes(ys: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = [0.0f64; 4];
        let chunks = ys.chunks_exact(4);
        let rest = chunks.remainder();
        for c in chunks {
            acc[0] += f(c[0]);
            acc[1] += f(c[1]);
            acc[2] += f(c[2]);
            acc[3] += f(c[3]);
        }
        let mut tail = 0.0;
        for &y in rest {
            tail += f(y);
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    }
    match kernel.family() {
        KernelFamily::HolderPower { alpha, .. } | KernelFamily::SobolevSingular { alpha, .. }
            if *alpha == 0.5 || *alpha == 1.0 || *alpha == 0.75 =>
        {
            let radial = !matches!(
                kernel.family(),
                KernelFamily::HolderPower { shape: HolderShape::Magnitude, .. }
            );
            let a = *alpha;
            let mag = move |r: f64| -> f64 {
                let r = r.min(1.0);
                if a == 0.5 {
                    r.sqrt()
                } else if a == 1.0 {
                    r
                } else {
                    let q = r.sqrt();
                    q * q.sqrt()
                }
            };
            if radial {
                lanes(ys, |y| {
                    let z = x - y;
                    mag(z.abs()).copysign(z)
                })
            } else {
                lanes(ys, |y| mag((x - y).abs()))
            }
        }
        _ => lanes(ys, |y| kernel.eval1(x, y)),
    }
}

/// Empirical field `b^N` of a single snapshot (flat `N x d` positions).
pub fn empirical_drift(kernel: &Kernel, snapshot: &[f64], self_interaction: bool) -> Result<DriftField> {
    if snapshot.is_empty() {
        return Err(LabError::invalid("empirical drift of an empty snapshot"));
    }
    DriftField::empirical_sequence(kernel, Arc::new(vec![snapshot.to_vec()]), 1.0, self_interaction)
}

/// Node values `b(c_a) = sum_c mass_c K(c_a, c_c)` of the mean-field drift,
/// flat `cells x d`.
pub fn mean_field_values(kernel: &Kernel, density: &GridDensity) -> Result<Vec<f64>> {
    let spec = density.spec;
    if kernel.dim() != spec.dim {
        return Err(LabError::invalid("kernel and density dimensions differ"));
    }
    density.check_normalized()?;
    let d = spec.dim;
    let g = spec.cells;
    let cells = spec.len();
    let mut out = vec![0.0; cells * d];
    let h = spec.width();
    let occupied: Vec<usize> = (0..cells).filter(|&c| density.masses[c] > 0.0).collect();
    if kernel.is_translation_invariant() {
        if d == 1 {
            // W[o] = K((o - (g-1)) h, 0)
            let table: Vec<f64> = (0..2 * g - 1)
                .map(|o| kernel.eval1((o as f64 - (g - 1) as f64) * h, 0.0))
                .collect();
            for a in 0..g {
                let mut s = 0.0;
                for &c in &occupied {
                    s += density.masses[c] * table[a + g - 1 - c];
                }
                out[a] = s;
            }
        } else {
            let span = 2 * g - 1;
            let mut table = vec![0.0; span * span * 2];
            let mut tmp = [0.0; 2];
            for oi in 0..span {
                for oj in 0..span {
                    let z = [(oi as f64 - (g - 1) as f64) * h, (oj as f64 - (g - 1) as f64) * h];
                    kernel.eval_into(&z, &[0.0, 0.0], &mut tmp);
                    table[(oi * span + oj) * 2] = tmp[0];
                    table[(oi * span + oj) * 2 + 1] = tmp[1];
                }
            }
            for a in 0..cells {
                let (ai, aj) = (a / g, a % g);
                let mut s = [0.0; 2];
                for &c in &occupied {
                    let (ci, cj) = (c / g, c % g);
                    let o = ((ai + g - 1 - ci) * span + (aj + g - 1 - cj)) * 2;
                    s[0] += density.masses[c] * table[o];
                    s[1] += density.masses[c] * table[o + 1];
                }
                out[a * 2] = s[0];
                out[a * 2 + 1] = s[1];
            }
        }
    } else {
        let centers = spec.centers();
        let mut tmp = vec![0.0; d];
        for a in 0..cells {
            for &c in &occupied {
                kernel.eval_into(&centers[a * d..(a + 1) * d], &centers[c * d..(c + 1) * d], &mut tmp);
                for k in 0..d {
                    out[a * d + k] += density.masses[c] * tmp[k];
                }
            }
        }
    }
    Ok(out)
}

/// Grid-backed mean-field drift `b(x) = sum_cells mass K(x, centre)`,
/// linearly interpolated between cell centres.
pub fn mean_field_drift(kernel: &Kernel, density: &GridDensity) -> Result<DriftField> {
    let values = mean_field_values(kernel, density)?;
    Ok(DriftField::grid(density.spec, vec![values], 1.0, InterpOrder::Linear)?
        .with_descriptor(format!("mean_field({})", kernel.descriptor())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::kernel::HolderShape;
    use proptest::prelude::*;

    #[test]
    fn single_particle_equals_kernel() {
        let kernels = vec![
            Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap(),
            Kernel::holder_power(1, 0.3, HolderShape::Magnitude).unwrap(),
            Kernel::sine(1).unwrap(),
            Kernel::sine(2).unwrap(),
            Kernel::displacement(2, 1.0, 2.0).unwrap(),
        ];
        for k in kernels {
            let d = k.dim();
            let p: Vec<f64> = (0..d).map(|i| 0.3 + i as f64).collect();
            let x: Vec<f64> = (0..d).map(|i| -0.7 * i as f64 + 0.1).collect();
            let f = empirical_drift(&k, &p, true).unwrap();
            let got = f.eval(0.0, &x).unwrap();
            let want = k.eval(&x, &p).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()), "{}", k.descriptor());
            }
        }
    }

    #[test]
    fn two_particle_hand_sum() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Magnitude).unwrap();
        let f = empirical_drift(&k, &[-1.0, 1.0], true).unwrap();
        assert_eq!(f.eval(0.0, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn sine_symmetric_cancels() {
        let k = Kernel::sine(1).unwrap();
        let f = empirical_drift(&k, &[0.4, 1.6, -0.3, 2.3], true).unwrap();
        assert!(f.eval(0.0, &[1.0]).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn no_self_interaction_excludes_own_term() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Magnitude).unwrap();
        let pts = [0.0, 0.25, 1.0];
        let f = empirical_drift(&k, &pts, false).unwrap();
        let got = f.eval(0.0, &[0.0]).unwrap()[0];
        let want = (k.eval1(0.0, 0.25) + k.eval1(0.0, 1.0)) / 2.0;
        assert!((got - want).abs() < 1e-15);
        assert!(empirical_drift(&k, &[0.0], false).is_err());
        assert!(empirical_drift(&k, &[], true).is_err());
    }

    #[test]
    fn constant_kernel_mean_field() {
        let spec = GridSpec::new(1, 3.0, 30).unwrap();
        let dens = GridDensity::from_axis_cdf(spec, |x| ((x + 3.0) / 6.0).clamp(0.0, 1.0)).unwrap();
        let k = Kernel::constant(vec![0.7]).unwrap();
        let b = mean_field_drift(&k, &dens).unwrap();
        for x in [-2.9, 0.0, 1.3] {
            assert!((b.eval(0.0, &[x]).unwrap()[0] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_mean_field_of_point_mass_is_identity() {
        let spec = GridSpec::new(1, 12.0, 240).unwrap();
        let dens = GridDensity::point_mass(spec, &[0.01]).unwrap();
        let k = Kernel::displacement(1, 1.0, 10.0).unwrap();
        let b = mean_field_drift(&k, &dens).unwrap();
        for x in [-9.0, -3.3, 0.0, 2.2, 9.5] {
            assert!((b.eval(0.0, &[x]).unwrap()[0] - x).abs() <= spec.width());
        }
    }

    #[test]
    fn non_normalised_density_rejected() {
        let spec = GridSpec::new(1, 1.0, 4).unwrap();
        let dens = GridDensity::new(spec, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        let k = Kernel::sine(1).unwrap();
        assert!(matches!(mean_field_drift(&k, &dens), Err(LabError::Precondition(_))));
    }

    #[test]
    fn mean_field_of_point_mass_converges_first_order() {
        let k = Kernel::holder_power(1, 1.0, HolderShape::Radial).unwrap();
        let y0 = 0.123;
        let mut errs = Vec::new();
        for g in [40usize, 80, 160] {
            let spec = GridSpec::new(1, 2.0, g).unwrap();
            let dens = GridDensity::point_mass(spec, &[y0]).unwrap();
            let b = mean_field_drift(&k, &dens).unwrap();
            let err = [-1.5, -0.6, 0.9, 1.7]
                .iter()
                .map(|&x| (b.eval(0.0, &[x]).unwrap()[0] - k.eval1(x, y0)).abs())
                .fold(0.0, f64::max);
            errs.push((spec.width(), err));
        }
        for (h, e) in &errs {
            assert!(*e <= h + 1e-12, "error {e} exceeds cell width {h}");
        }
    }

    #[test]
    fn two_dimensional_mean_field_table_matches_direct_sum() {
        let spec = GridSpec::new(2, 2.0, 6).unwrap();
        let masses: Vec<f64> = (0..36).map(|i| ((i * 7) % 5) as f64 + 1.0).collect();
        let total: f64 = masses.iter().sum();
        let dens = GridDensity::new(spec, masses.iter().map(|m| m / total).collect()).unwrap();
        let k = Kernel::holder_power(2, 0.5, HolderShape::Radial).unwrap();
        let vals = mean_field_values(&k, &dens).unwrap();
        let centers = spec.centers();
        for a in 0..36 {
            let mut s = [0.0; 2];
            for c in 0..36 {
                let v = k.eval(&centers[a * 2..a * 2 + 2], &centers[c * 2..c * 2 + 2]).unwrap();
                s[0] += dens.masses[c] * v[0];
                s[1] += dens.masses[c] * v[1];
            }
            assert!((s[0] - vals[a * 2]).abs() < 1e-12 && (s[1] - vals[a * 2 + 1]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn fast_sum_matches_generic(xs in prop::collection::vec(-3.0f64..3.0, 1..40), x in -3.0f64..3.0) {
            for alpha in [0.5, 0.75, 1.0] {
                for shape in [HolderShape::Radial, HolderShape::Magnitude] {
                    let k = Kernel::holder_power(1, alpha, shape).unwrap();
                    let fast = sum_kernel_1d(&k, x, &xs);
                    let slow: f64 = xs.iter().map(|&y| k.eval1(x, y)).sum();
                    prop_assert!((fast - slow).abs() < 1e-12 * xs.len() as f64);
                }
            }
        }

        #[test]
        fn empirical_sup_bound_holds(xs in prop::collection::vec(-3.0f64..3.0, 2..20), x in -5.0f64..5.0) {
            let k = Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap();
            for self_int in [true, false] {
                let f = empirical_drift(&k, &xs, self_int).unwrap();
                prop_assert!(f.eval(0.0, &[x]).unwrap()[0].abs() <= f.sup_bound() + 1e-12);
            }
        }
    }
}
