//! Interaction kernels `K(x, y)`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// How a capped power kernel turns the scalar `min(|x-y|^alpha, 1)` into a
/// vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderShape {
    /// `min(|x-y|^alpha, 1) * (x-y)/|x-y|`, zero on the diagonal. In one
    /// dimension this is the sign structure `min(|x-y|^alpha,1) sign(x-y)`.
    Radial,
    /// Every component equals `min(|x-y|^alpha, 1)`.
    Magnitude,
}

/// Rectangular table of kernel values for `d = 1`, bilinearly interpolated
/// and clamped outside the node range.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major over `(x index, y index)`.
    values: Vec<f64>,
}

impl KernelTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || ys.len() < 2 {
            return Err(LabError::invalid("kernel table needs at least 2 nodes per axis"));
        }
        if values.len() != xs.len() * ys.len() {
            return Err(LabError::invalid(format!(
                "kernel table has {} values for a {}x{} grid",
                values.len(),
                xs.len(),
                ys.len()
            )));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(LabError::invalid("kernel table nodes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::invalid("kernel table contains non-finite values"));
        }
        Ok(KernelTable { xs, ys, values })
    }

    /// Reads a CSV with header `x,y,k1` whose rows cover a full grid.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols.len() != 3 || cols[0] != "x" || cols[1] != "y" || cols[2] != "k1" {
            return Err(LabError::invalid(format!(
                "tabulated kernel CSV must have columns x,y,k1 (d = 1), got {:?}",
                cols
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::invalid(format!("bad number {:?}: {e}", &rec[i])))
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        Self::from_rows(&rows)
    }

    pub fn from_rows(rows: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let mut values = vec![f64::NAN; xs.len() * ys.len()];
        for &(x, y, k) in rows {
            let i = xs.binary_search_by(|v| v.total_cmp(&x)).unwrap();
            let j = ys.binary_search_by(|v| v.total_cmp(&y)).unwrap();
            values[i * ys.len() + j] = k;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(LabError::invalid("tabulated kernel rows do not cover a full grid"));
        }
        Self::new(xs, ys, values)
    }

    fn locate(nodes: &[f64], v: f64) -> (usize, f64) {
        let n = nodes.len();
        if v <= nodes[0] {
            return (0, 0.0);
        }
        if v >= nodes[n - 1] {
            return (n - 2, 1.0);
        }
        let hi = nodes.partition_point(|&u| u <= v);
        let lo = hi - 1;
        (lo, (v - nodes[lo]) / (nodes[hi] - nodes[lo]))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, s) = Self::locate(&self.xs, x);
        let (j, u) = Self::locate(&self.ys, y);
        let ny = self.ys.len();
        let v00 = self.values[i * ny + j];
        let v01 = self.values[i * ny + j + 1];
        let v10 = self.values[(i + 1) * ny + j];
        let v11 = self.values[(i + 1) * ny + j + 1];
        (1.0 - s) * ((1.0 - u) * v00 + u * v01) + s * ((1.0 - u) * v10 + u * v11)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest slope between neighbouring nodes; a Lipschitz constant of the
    /// bilinear interpolant in each variable.
    pub fn max_slope(&self) -> f64 {
        let ny = self.ys.len();
        let mut s: f64 = 0.0;
        for i in 0..self.xs.len() {
            for j in 0..ny {
                if i + 1 < self.xs.len() {
                    let d = (self.values[(i + 1) * ny + j] - self.values[i * ny + j]).abs();
                    s = s.max(d / (self.xs[i + 1] - self.xs[i]));
                }
                if j + 1 < ny {
                    let d = (self.values[i * ny + j + 1] - self.values[i * ny + j]).abs();
                    s = s.max(d / (self.ys[j + 1] - self.ys[j]));
                }
            }
        }
        s
    }
}

/// Gaussian smoothing stencil: `(offset, weight)` pairs, weights summing to 1.
pub const MOLLIFIER_POINTS: usize = 33;
const MOLLIFIER_HALF_SPAN: f64 = 4.0;

pub(crate) fn gaussian_stencil() -> Vec<(f64, f64)> {
    let h = 2.0 * MOLLIFIER_HALF_SPAN / (MOLLIFIER_POINTS - 1) as f64;
    let raw: Vec<(f64, f64)> = (0..MOLLIFIER_POINTS)
        .map(|k| {
            let z = -MOLLIFIER_HALF_SPAN + k as f64 * h;
            (z, (-0.5 * z * z).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    raw.into_iter().map(|(z, w)| (z, w / total)).collect()
}

#[derive(Clone, Debug)]
pub enum KernelFamily {
    /// `K(x, y) = c`.
    Constant { value: Vec<f64> },
    /// Componentwise `sin(x_k - y_k)`.
    Sine,
    /// `gain * (x - y)` radially truncated at length `cap`.
    Displacement { gain: f64, cap: f64 },
    /// `min(|x-y|^alpha, 1)` with the given vector shape.
    HolderPower { alpha: f64, shape: HolderShape },
    /// Radial power kernel carrying declared Sobolev data `W^{s,q}`, `s = 1`.
    SobolevSingular { alpha: f64, q: f64 },
    /// Bilinear table (d = 1).
    Tabulated(Arc<KernelTable>),
    /// Gaussian smoothing of `base` in the first argument.
    Mollified { base: Box<Kernel>, scale: f64, stencil: Arc<Vec<(f64, f64)>> },
}

/// An interaction kernel with its declared bound and Hölder data.
#[derive(Clone, Debug)]
pub struct Kernel {
    dim: usize,
    family: KernelFamily,
    bound: f64,
    holder_alpha: f64,
    holder_constant: f64,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(LabError::Unsupported(format!("kernel dimension {dim}; only d in {{1,2}}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(LabError::invalid(format!("alpha must lie in (0,1], got {alpha}")))
    }
}

impl Kernel {
    pub fn zero(dim: usize) -> Result<Self> {
        Self::constant(vec![0.0; dim])
    }

    pub fn constant(value: Vec<f64>) -> Result<Self> {
        check_dim(value.len())?;
        let bound = norm(&value);
        Ok(Kernel {
            dim: value.len(),
            family: KernelFamily::Constant { value },
            bound,
            holder_alpha: 1.0,
            holder_constant: 0.0,
        })
    }

    pub fn sine(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Kernel {
            dim,
            family: KernelFamily::Sine,
            bound: (dim as f64).sqrt(),
            holder_alpha: 1.0,
            holder_constant: 1.0,
        })
    }

    /// `gain * (x - y)` truncated to length `cap`. Negative gain attracts.
    pub fn displacement(dim: usize, gain: f64, cap: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(cap > 0.0) || !gain.is_finite() {
            return Err(LabError::invalid("displacement kernel needs cap > 0 and finite gain"));
        }
        Ok(Kernel {
            dim,
            family: KernelFamily::Displacement { gain, cap },
            bound: gain.abs() * cap,
            holder_alpha: 1.0,
            holder_constant: gain.abs(),
        })
    }

    pub fn holder_power(dim: usize, alpha: f64, shape: HolderShape) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        let (bound, constant) = match shape {
            // Reflection through the diagonal costs at most a factor 2.
            HolderShape::Radial => (1.0, 2.0),
            HolderShape::Magnitude => ((dim as f64).sqrt(), (dim as f64).sqrt()),
        };
        Ok(Kernel {
            dim,
            family: KernelFamily::HolderPower { alpha, shape },
            bound,
            holder_alpha: alpha,
            holder_constant: constant,
        })
    }

    /// Radial power kernel `min(|z|^alpha,1) z/|z|`, declared as `W^{1,q}`.
    /// Locally `|z|^alpha` lies in `W^{1,q}` only for `q < d/(1-alpha)`.
    pub fn sobolev_singular(dim: usize, alpha: f64, q: f64) -> Result<Self> {
        check_dim(dim)?;
        check_alpha(alpha)?;
        if alpha < 1.0 && q >= dim as f64 / (1.0 - alpha) {
            return Err(LabError::invalid(format!(
                "q = {q} too large: |z|^{alpha} is only locally W^(1,q) for q < {}",
                dim as f64 / (1.0 - alpha)
            )));
        }
        if !(q > 2.0) {
            return Err(LabError::invalid("Sobolev integrability q must exceed 2"));
        }
        Ok(Kernel {
            dim,
            family: KernelFamily::SobolevSingular { alpha, q },
            bound: 1.0,
            holder_alpha: alpha,
            holder_constant: 2.0,
        })
    }

    pub fn tabulated(table: KernelTable) -> Self {
        let bound = table.max_abs();
        let slope = table.max_slope();
        Kernel {
            dim: 1,
            family: KernelFamily::Tabulated(Arc::new(table)),
            bound,
            holder_alpha: 1.0,
            holder_constant: slope,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// `M = sup |K|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn holder_alpha(&self) -> f64 {
        self.holder_alpha
    }

    pub fn holder_constant(&self) -> f64 {
        self.holder_constant
    }

    /// Declared Sobolev data `(s, q)` for singular kernels.
    pub fn sobolev_data(&self) -> Option<(f64, f64)> {
        match &self.family {
            KernelFamily::SobolevSingular { q, .. } => Some((1.0, *q)),
            KernelFamily::Mollified { base, .. } => base.sobolev_data(),
            _ => None,
        }
    }

    /// True when `K(x, y)` depends only on `x - y`.
    pub fn is_translation_invariant(&self) -> bool {
        match &self.family {
            KernelFamily::Tabulated(_) => false,
            KernelFamily::Mollified { base, .. } => base.is_translation_invariant(),
            _ => true,
        }
    }

    /// True when every component of `K(x, x)` vanishes for all `x`.
    pub fn vanishes_on_diagonal(&self) -> bool {
        match &self.family {
            KernelFamily::Constant { value } => value.iter().all(|v| *v == 0.0),
            KernelFamily::Sine | KernelFamily::Displacement { .. } => true,
            KernelFamily::HolderPower { .. } | KernelFamily::SobolevSingular { .. } => true,
            KernelFamily::Tabulated(_) | KernelFamily::Mollified { .. } => false,
        }
    }

    /// Human readable descriptor used in provenance records.
    pub fn descriptor(&self) -> String {
        match &self.family {
            KernelFamily::Constant { value } => format!("constant{value:?}"),
            KernelFamily::Sine => "sine".into(),
            KernelFamily::Displacement { gain, cap } => format!("displacement(gain={gain},cap={cap})"),
            KernelFamily::HolderPower { alpha, shape } => format!("holder_power(alpha={alpha},{shape:?})"),
            KernelFamily::SobolevSingular { alpha, q } => format!("sobolev_singular(alpha={alpha},q={q})"),
            KernelFamily::Tabulated(t) => format!("tabulated({}x{})", t.xs.len(), t.ys.len()),
            KernelFamily::Mollified { base, scale, .. } => {
                format!("mollified({},eps={scale})", base.descriptor())
            }
        }
    }

    /// Returns a kernel smoothed by a Gaussian of standard deviation `scale`
    /// in its first argument, sharing this kernel's bound and Hölder data.
    pub fn mollify(&self, scale: f64) -> Result<Kernel> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(LabError::invalid(format!("mollification scale must be > 0, got {scale}")));
        }
        Ok(Kernel {
            dim: self.dim,
            family: KernelFamily::Mollified {
                base: Box::new(self.clone()),
                scale,
                stencil: Arc::new(gaussian_stencil()),
            },
            bound: self.bound,
            holder_alpha: self.holder_alpha,
            holder_constant: self.holder_constant,
        })
    }

    /// Checked evaluation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(LabError::invalid(format!(
                "kernel of dimension {} evaluated at points of dimension {} and {}",
                self.dim,
                x.len(),
                y.len()
            )));
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, y, &mut out);
        Ok(out)
    }

    /// Writes `K(x, y)` into `out`. Slices must have length `dim`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        if self.dim == 1 {
            out[0] = self.eval1(x[0], y[0]);
            return;
        }
        match &self.family {
            KernelFamily::Constant { value } => out.copy_from_slice(value),
            KernelFamily::Sine => {
                for k in 0..self.dim {
                    out[k] = (x[k] - y[k]).sin();
                }
            }
            KernelFamily::Displacement { gain, cap } => {
                let r = dist(x, y);
                let s = if r > *cap { cap / r } else { 1.0 };
                for k in 0..self.dim {
                    out[k] = gain * s * (x[k] - y[k]);
                }
            }
            KernelFamily::HolderPower { alpha, shape } => power_vec(*alpha, *shape, x, y, out),
            KernelFamily::SobolevSingular { alpha, .. } => {
                power_vec(*alpha, HolderShape::Radial, x, y, out)
            }
            KernelFamily::Tabulated(_) => unreachable!("tabulated kernels are one-dimensional"),
            KernelFamily::Mollified { base, scale, stencil } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp = [0.0; 2];
                let mut shifted = [0.0; 2];
                for &(za, wa) in stencil.iter() {
                    for &(zb, wb) in stencil.iter() {
                        shifted[0] = x[0] - scale * za;
                        shifted[1] = x[1] - scale * zb;
                        base.eval_into(&shifted, y, &mut tmp);
                        out[0] += wa * wb * tmp[0];
                        out[1] += wa * wb * tmp[1];
                    }
                }
            }
        }
    }

    /// Scalar fast path for `d = 1`.
    #[inline]
    pub fn eval1(&self, x: f64, y: f64) -> f64 {
        match &self.family {
            KernelFamily::Constant { value } => value[0],
            KernelFamily::Sine => (x - y).sin(),
            KernelFamily::Displacement { gain, cap } => gain * (x - y).clamp(-cap, *cap),
            KernelFamily::HolderPower { alpha, shape } => power1(*alpha, *shape, x - y),
            KernelFamily::SobolevSingular { alpha, .. } => power1(*alpha, HolderShape::Radial, x - y),
            KernelFamily::Tabulated(t) => t.eval(x, y),
            KernelFamily::Mollified { base, scale, stencil } => stencil
                .iter()
                .map(|&(z, w)| w * base.eval1(x - scale * z, y))
                .sum(),
        }
    }
}

#[inline]
fn capped_power(alpha: f64, r: f64) -> f64 {
    if r >= 1.0 {
        1.0
    } else if alpha == 0.5 {
        r.sqrt()
    } else if alpha == 1.0 {
        r
    } else {
        r.powf(alpha)
    }
}

#[inline]
fn power1(alpha: f64, shape: HolderShape, z: f64) -> f64 {
    let m = capped_power(alpha, z.abs());
    match shape {
        HolderShape::Radial => {
            if z > 0.0 {
                m
            } else if z < 0.0 {
                -m
            } else {
                0.0
            }
        }
        HolderShape::Magnitude => m,
    }
}

fn power_vec(alpha: f64, shape: HolderShape, x: &[f64], y: &[f64], out: &mut [f64]) {
    let r = dist(x, y);
    let m = capped_power(alpha, r);
    match shape {
        HolderShape::Radial => {
            if r == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
            } else {
                for k in 0..out.len() {
                    out[k] = m * (x[k] - y[k]) / r;
                }
            }
        }
        HolderShape::Magnitude => out.iter_mut().for_each(|o| *o = m),
    }
}

#[inline]
pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Checked kernel evaluation `K(x, y)`.
pub fn eval_kernel(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    kernel.eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn radial_power_vanishes_on_diagonal() {
        let k = Kernel::holder_power(1, 1.0, HolderShape::Radial).unwrap();
        assert_eq!(k.eval(&[0.0], &[0.0]).unwrap(), vec![0.0]);
        let k2 = Kernel::holder_power(2, 1.0, HolderShape::Radial).unwrap();
        assert_eq!(k2.eval(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn magnitude_power_half() {
        let k = Kernel::holder_power(1, 0.5, HolderShape::Magnitude).unwrap();
        assert_eq!(k.eval(&[0.25], &[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn table_node_lookup_returns_stored_value() {
        let xs = vec![-1.0, 0.0, 1.0];
        let ys = vec![-1.0, 0.0, 1.0];
        let values: Vec<f64> = (0..9).map(|i| i as f64 * 0.1 - 0.4).collect();
        let table = KernelTable::new(xs.clone(), ys.clone(), values.clone()).unwrap();
        let k = Kernel::tabulated(table);
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                assert_eq!(k.eval1(*x, *y), values[i * 3 + j]);
            }
        }
    }

    #[test]
    fn table_rows_must_cover_grid() {
        let rows = vec![(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0)];
        assert!(KernelTable::from_rows(&rows).is_err());
    }

    #[test]
    fn dimension_mismatch_is_invalid_argument() {
        let k = Kernel::sine(2).unwrap();
        assert!(matches!(k.eval(&[0.0], &[0.0, 1.0]), Err(LabError::InvalidArgument(_))));
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        assert!(Kernel::holder_power(1, 1.5, HolderShape::Radial).is_err());
        assert!(Kernel::holder_power(1, 0.0, HolderShape::Radial).is_err());
        assert!(Kernel::holder_power(3, 0.5, HolderShape::Radial).is_err());
    }

    #[test]
    fn displacement_is_capped_identity() {
        let k = Kernel::displacement(1, 1.0, 10.0).unwrap();
        assert_eq!(k.eval1(3.0, 0.0), 3.0);
        assert_eq!(k.eval1(30.0, 0.0), 10.0);
        let k2 = Kernel::displacement(2, 1.0, 10.0).unwrap();
        let v = k2.eval(&[30.0, 40.0], &[0.0, 0.0]).unwrap();
        assert!((v[0] - 6.0).abs() < 1e-12 && (v[1] - 8.0).abs() < 1e-12);
    }

    fn kernels() -> Vec<Kernel> {
        vec![
            Kernel::sine(1).unwrap(),
            Kernel::sine(2).unwrap(),
            Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap(),
            Kernel::holder_power(2, 0.3, HolderShape::Radial).unwrap(),
            Kernel::holder_power(2, 0.75, HolderShape::Magnitude).unwrap(),
            Kernel::displacement(2, -1.0, 1.0).unwrap(),
            Kernel::sobolev_singular(1, 0.8, 4.0).unwrap(),
            Kernel::holder_power(1, 0.5, HolderShape::Radial).unwrap().mollify(0.1).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn bound_and_holder_hold_on_samples(
            a in prop::collection::vec(-3.0f64..3.0, 8),
            scale in 1e-4f64..1.0,
        ) {
            for k in kernels() {
                let d = k.dim();
                let x = &a[0..d];
                let y = &a[2..2 + d];
                let dx: Vec<f64> = a[4..4 + d].iter().map(|v| v * scale).collect();
                let dy: Vec<f64> = a[6..6 + d].iter().map(|v| v * scale).collect();
                let x2: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
                let y2: Vec<f64> = y.iter().zip(&dy).map(|(p, q)| p + q).collect();
                let v1 = k.eval(x, y).unwrap();
                let v2 = k.eval(&x2, &y2).unwrap();
                prop_assert!(norm(&v1) <= k.bound() + 1e-12);
                let diff = dist(&v1, &v2);
                let sep = norm(&dx) + norm(&dy);
                prop_assert!(diff <= k.holder_constant() * sep.powf(k.holder_alpha()) + 1e-9,
                    "{}: diff {diff} sep {sep}", k.descriptor());
            }
        }
    }
}
