//! Nets for 1-Lipschitz functions on `[-L, L]` that vanish at 0, in the
//! weighted sup norm `sup |h(x)| <x>^{-p}`.
//!
//! Nodes start at 0 and step by `eps <x_k>^p / resolution`, so they thin
//! out where the weight forgives large errors. A net element is piecewise
//! linear through the nodes with increment `-s, 0, +s` on each step `s`,
//! which keeps slopes in `[-1, 1]`.

use crate::error::{LabError, Result};
use crate::transport::stats::ols;

/// Smallest resolution for which the covering guarantee holds.
pub const MIN_RESOLUTION: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Lip1Net {
    pub eps: f64,
    pub half_width: f64,
    pub weight: f64,
    /// Positive node positions `x_1 < ... < x_n`, last one at `L`.
    pub right: Vec<f64>,
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Builds the net. Every 1-Lipschitz `h` with `h(0) = 0` is within `eps` of
/// [`Lip1Net::project`]`(h)` in the weighted norm.
pub fn lip1_net(eps: f64, half_width: f64, weight: f64, resolution: f64, dim: usize) -> Result<Lip1Net> {
    if dim != 1 {
        return Err(LabError::Unsupported("Lipschitz nets are built for d = 1 only".into()));
    }
    if !(eps > 0.0) || !(half_width > 0.0) || !(weight >= 0.0) {
        return Err(LabError::invalid("eps and L must be positive, p non-negative"));
    }
    if !(resolution >= MIN_RESOLUTION) {
        return Err(LabError::invalid(format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    let mut right = Vec::new();
    let mut x = 0.0;
    while x < half_width {
        x = (x + eps * bracket(x).powf(weight) / resolution).min(half_width);
        right.push(x);
    }
    Ok(Lip1Net { eps, half_width, weight, right })
}

impl Lip1Net {
    /// Number of free increments; the net has `3^steps` elements.
    pub fn steps(&self) -> usize {
        2 * self.right.len()
    }

    pub fn log_size(&self) -> f64 {
        self.steps() as f64 * 3f64.ln()
    }

    /// Exact size when it fits in a `u128`.
    pub fn size(&self) -> Option<u128> {
        3u128.checked_pow(self.steps() as u32)
    }

    /// All nodes in increasing order, including 0.
    pub fn nodes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.right.iter().rev().map(|x| -x).collect();
        v.push(0.0);
        v.extend_from_slice(&self.right);
        v
    }

    /// Node values of the element with the given increments (`-1, 0, 1`),
    /// listed outward: first the right side, then the left side.
    pub fn element(&self, code: &[i8]) -> Result<Vec<f64>> {
        let n = self.right.len();
        if code.len() != 2 * n || code.iter().any(|c| c.abs() > 1) {
            return Err(LabError::invalid("a code needs one increment in {-1,0,1} per step"));
        }
        let mut vals = vec![0.0; 2 * n + 1];
        let mut prev = (0.0, 0.0);
        for k in 0..n {
            let s = self.right[k] - prev.0;
            let v = prev.1 + code[k] as f64 * s;
            vals[n + 1 + k] = v;
            prev = (self.right[k], v);
        }
        prev = (0.0, 0.0);
        for k in 0..n {
            let s = self.right[k] - prev.0;
            let v = prev.1 + code[n + k] as f64 * s;
            vals[n - 1 - k] = v;
            prev = (self.right[k], v);
        }
        Ok(vals)
    }

    /// The net element tracking `h`: at each step choose the increment that
    /// lands nearest to `h` at the next node.
    pub fn project(&self, h: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.right.len();
        let mut code = vec![0i8; 2 * n];
        for (side, sign) in [(0usize, 1.0f64), (n, -1.0)] {
            let mut prev = (0.0, 0.0);
            for k in 0..n {
                let x = self.right[k];
                let s = x - prev.0;
                let target = h(sign * x) - prev.1;
                let c = (target / s).round().clamp(-1.0, 1.0);
                code[side + k] = c as i8;
                prev = (x, prev.1 + c * s);
            }
        }
        self.element(&code).expect("well-formed code")
    }

    /// Piecewise-linear interpolation of node values at `x` in `[-L, L]`.
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let nodes = self.nodes();
        let x = x.clamp(-self.half_width, self.half_width);
        let k = nodes.partition_point(|v| *v <= x).clamp(1, nodes.len() - 1);
        let (a, b) = (nodes[k - 1], nodes[k]);
        let w = (x - a) / (b - a);
        values[k - 1] * (1.0 - w) + values[k] * w
    }

    /// `sup |h - g| <x>^{-p}` over `samples` evenly spaced points of `[-L, L]`
    /// plus the nodes.
    pub fn weighted_distance(&self, h: impl Fn(f64) -> f64, values: &[f64], samples: usize) -> f64 {
        let l = self.half_width;
        let mut pts: Vec<f64> = (0..=samples).map(|i| -l + 2.0 * l * i as f64 / samples as f64).collect();
        pts.extend(self.nodes());
        pts.iter()
            .map(|&x| (h(x) - self.eval(values, x)).abs() / bracket(x).powf(self.weight))
            .fold(0.0, f64::max)
    }

    /// Every element, for nets with at most `limit` elements.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Vec<f64>>> {
        let size = self.size().filter(|s| *s <= limit as u128).ok_or_else(|| {
            LabError::TooLarge(format!("net has 3^{} elements, above the limit {limit}", self.steps()))
        })? as usize;
        let m = self.steps();
        let mut out = Vec::with_capacity(size);
        let mut code = vec![-1i8; m];
        for _ in 0..size {
            out.push(self.element(&code)?);
            for c in code.iter_mut() {
                if *c < 1 {
                    *c += 1;
                    break;
                }
                *c = -1;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lip1Scaling {
    pub eps: Vec<f64>,
    pub log_sizes: Vec<f64>,
    /// Slope of `ln log N` against `ln(1/eps)`.
    pub exponent: f64,
}

/// Fits the growth exponent of the net's log-size over `eps_list`.
pub fn lip1_scaling(eps_list: &[f64], half_width: f64, weight: f64) -> Result<Lip1Scaling> {
    let mut log_sizes = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        log_sizes.push(lip1_net(e, half_width, weight, MIN_RESOLUTION, 1)?.log_size());
    }
    let xs: Vec<f64> = eps_list.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = log_sizes.iter().map(|v| v.ln()).collect();
    let (exponent, _) = ols(&xs, &ys)?;
    Ok(Lip1Scaling { eps: eps_list.to_vec(), log_sizes, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn zero_and_identity() {
        let net = lip1_net(0.2, 4.0, 3.0, MIN_RESOLUTION, 1).unwrap();
        let zero = net.project(|_| 0.0);
        assert!(zero.iter().all(|v| *v == 0.0));
        let id = net.project(|x| x);
        assert!(net.weighted_distance(|x| x, &id, 2000) <= 0.2);
        assert!(lip1_net(0.2, 4.0, 3.0, MIN_RESOLUTION, 2).is_err());
    }

    #[test]
    fn random_lipschitz_functions_are_covered() {
        let mut rng = stream_rng(31, 0);
        for eps in [0.4, 0.2, 0.1] {
            let net = lip1_net(eps, 5.0, 3.0, MIN_RESOLUTION, 1).unwrap();
            for _ in 0..20 {
                // random walk with slopes in [-1, 1], pinned at 0
                let knots: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
                let slopes: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let mut vals = vec![0.0; 201];
                for i in 1..201 {
                    vals[i] = vals[i - 1] + 0.05 * slopes[i - 1];
                }
                let shift = vals[100];
                let h = |x: f64| {
                    let i = (((x + 5.0) / 0.05).floor() as usize).min(199);
                    vals[i] + (x - knots[i]) * slopes[i] - shift
                };
                let g = net.project(h);
                let err = net.weighted_distance(h, &g, 4000);
                assert!(err <= eps * (1.0 + 1e-9), "eps {eps}: error {err}");
            }
        }
    }

    #[test]
    fn enumeration_matches_count_and_members_are_lipschitz() {
        let net = lip1_net(1.5, 1.0, 3.0, MIN_RESOLUTION, 1).unwrap();
        let all = net.enumerate(100_000).unwrap();
        assert_eq!(all.len() as u128, net.size().unwrap());
        let nodes = net.nodes();
        let mid = nodes.len() / 2;
        for g in &all {
            assert_eq!(g[mid], 0.0);
            for k in 1..g.len() {
                assert!((g[k] - g[k - 1]).abs() <= nodes[k] - nodes[k - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn log_size_roughly_doubles_when_eps_halves() {
        let s = lip1_scaling(&[0.4, 0.2, 0.1], 8.0, 3.0).unwrap();
        for w in s.log_sizes.windows(2) {
            let r = w[1] / w[0];
            assert!((1.6..=2.6).contains(&r), "{r}");
        }
        assert!((0.7..=1.4).contains(&s.exponent), "{}", s.exponent);
    }
}
