use crate::error::{LabError, Result};

/// Relative slack used when deciding whether a point is within `eps`.
pub const COVER_SLACK: f64 = 1e-12;

/// A finite (semi-)metric space given by its distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    table: Vec<f64>,
    metric: bool,
}

impl FiniteMetricSpace {
    /// Validates zero diagonal and symmetry, plus the triangle inequality when
    /// `metric` is set.
    pub fn from_table(n: usize, table: Vec<f64>, metric: bool) -> Result<Self> {
        if n == 0 || table.len() != n * n {
            return Err(LabError::Shape(format!("distance table of length {} for {n} elements", table.len())));
        }
        for i in 0..n {
            if table[i * n + i] != 0.0 {
                return Err(LabError::invalid(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let a = table[i * n + j];
                if !(a >= 0.0) || !a.is_finite() || a != table[j * n + i] {
                    return Err(LabError::invalid(format!("d({i},{j}) is negative or not symmetric")));
                }
            }
        }
        if metric {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if table[i * n + k] > (table[i * n + j] + table[j * n + k]) * (1.0 + 1e-12) + 1e-15 {
                            return Err(LabError::invalid(format!("triangle inequality fails at ({i},{j},{k})")));
                        }
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { n, table, metric })
    }

    pub fn from_fn(n: usize, metric: bool, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                table[i * n + j] = if i == j { 0.0 } else { d(i.min(j), i.max(j)) };
            }
        }
        FiniteMetricSpace::from_table(n, table, metric)
    }

    /// Euclidean distances between `n` points of dimension `dim` (flat).
    pub fn from_points(points: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(LabError::Shape("point array is not a multiple of the dimension".into()));
        }
        let n = points.len() / dim;
        FiniteMetricSpace::from_fn(n, true, |i, j| {
            (0..dim).map(|a| (points[i * dim + a] - points[j * dim + a]).powi(2)).sum::<f64>().sqrt()
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_metric(&self) -> bool {
        self.metric
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.n + j]
    }

    /// The space with distances raised to `alpha`; a metric again for
    /// `alpha in (0, 1]`.
    pub fn powered(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(LabError::invalid("alpha must lie in (0,1]"));
        }
        let table = self.table.iter().map(|v| v.powf(alpha)).collect();
        Ok(FiniteMetricSpace { n: self.n, table, metric: self.metric })
    }

    /// `X x Y` with `max(d_X, d_Y)`; element `(i, j)` has index `i * |Y| + j`.
    pub fn product_max(&self, other: &FiniteMetricSpace) -> FiniteMetricSpace {
        let (a, b) = (self.n, other.n);
        let n = a * b;
        let mut table = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                table[p * n + q] = self.d(p / b, q / b).max(other.d(p % b, q % b));
            }
        }
        FiniteMetricSpace { n, table, metric: self.metric && other.metric }
    }
}

#[inline]
pub(crate) fn within(d: f64, eps: f64) -> bool {
    d <= eps * (1.0 + COVER_SLACK)
}

/// An `eps`-net: every element within `eps` of some listed element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    pub net: Vec<usize>,
}

impl Cover {
    pub fn count(&self) -> usize {
        self.net.len()
    }

    pub fn covers(&self, space: &FiniteMetricSpace, eps: f64) -> bool {
        (0..space.len()).all(|i| self.net.iter().any(|&c| within(space.d(i, c), eps)))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::invalid("eps must be positive"));
    }
    Ok(())
}

/// Farthest-point net: start at element 0 and keep adding the element
/// farthest from the current net until everything is within `eps`. The
/// insertion order does not depend on `eps`, so counts are monotone in `eps`.
pub fn covering_number_greedy(space: &FiniteMetricSpace, eps: f64) -> Result<Cover> {
    check_eps(eps)?;
    let n = space.len();
    let mut gap: Vec<f64> = (0..n).map(|i| space.d(i, 0)).collect();
    let mut net = vec![0];
    loop {
        let (far, r) = gap
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if within(r, eps) {
            break;
        }
        net.push(far);
        for i in 0..n {
            gap[i] = gap[i].min(space.d(i, far));
        }
    }
    let cover = Cover { net };
    assert!(cover.covers(space, eps), "greedy net failed to cover");
    Ok(cover)
}

/// Largest space handled by [`minimum_cover`].
pub const EXACT_COVER_LIMIT: usize = 12;

/// Smallest `eps`-net by exhaustive search over subsets.
pub fn minimum_cover(space: &FiniteMetricSpace, eps: f64) -> Result<Cover> {
    check_eps(eps)?;
    let n = space.len();
    if n > EXACT_COVER_LIMIT {
        return Err(LabError::TooLarge(format!("exact covers need at most {EXACT_COVER_LIMIT} elements, got {n}")));
    }
    let full: u32 = (1u32 << n) - 1;
    let reach: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&i| within(space.d(i, c), eps)).fold(0u32, |m, i| m | (1 << i)))
        .collect();
    let mut best: Option<u32> = None;
    for subset in 1..=full {
        if let Some(b) = best {
            if subset.count_ones() >= b.count_ones() {
                continue;
            }
        }
        let mut covered = 0u32;
        let mut s = subset;
        while s != 0 {
            let c = s.trailing_zeros() as usize;
            covered |= reach[c];
            s &= s - 1;
        }
        if covered == full {
            best = Some(subset);
        }
    }
    let b = best.expect("the whole space is a net");
    Ok(Cover { net: (0..n).filter(|i| b & (1 << i) != 0).collect() })
}

/// Exact minimum when small enough, greedy otherwise; the flag says which.
pub fn best_cover(space: &FiniteMetricSpace, eps: f64) -> Result<(Cover, bool)> {
    if space.len() <= EXACT_COVER_LIMIT {
        Ok((minimum_cover(space, eps)?, true))
    } else {
        Ok((covering_number_greedy(space, eps)?, false))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductEntropyReport {
    pub eps: f64,
    pub count_x: usize,
    pub count_y: usize,
    /// Size of the product of the two nets, checked to cover `X x Y`.
    pub product_net: usize,
    pub product_net_covers: bool,
    /// Greedy count on `X x Y` itself.
    pub greedy_product: usize,
    /// Exact minimum on `X x Y` when it has at most 12 elements.
    pub exact_product: Option<usize>,
    /// `H(eps, X x Y) <= H(eps, X) + H(eps, Y)` as certified above.
    pub holds: bool,
}

/// Checks the entropy of a max-product against the sum of the entropies.
pub fn product_entropy_check(x: &FiniteMetricSpace, y: &FiniteMetricSpace, eps: f64) -> Result<ProductEntropyReport> {
    let (nx, _) = best_cover(x, eps)?;
    let (ny, _) = best_cover(y, eps)?;
    let prod = x.product_max(y);
    let b = y.len();
    let net = Cover { net: nx.net.iter().flat_map(|&i| ny.net.iter().map(move |&j| i * b + j)).collect() };
    let covers = net.covers(&prod, eps);
    let greedy = covering_number_greedy(&prod, eps)?.count();
    let exact = if prod.len() <= EXACT_COVER_LIMIT { Some(minimum_cover(&prod, eps)?.count()) } else { None };
    let bound = nx.count() * ny.count();
    let holds = covers && exact.map_or(true, |e| e <= bound);
    Ok(ProductEntropyReport {
        eps,
        count_x: nx.count(),
        count_y: ny.count(),
        product_net: net.count(),
        product_net_covers: covers,
        greedy_product: greedy,
        exact_product: exact,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChangeOfMetricReport {
    pub alpha: f64,
    pub eps: f64,
    /// Minimal net size for `d^alpha` at `eps`.
    pub count_powered: usize,
    /// Minimal net size for `d` at `eps^{1/alpha}`.
    pub count_base: usize,
    /// Whether the `d`-net is an `eps`-net for `d^alpha`.
    pub base_net_valid: bool,
    pub exact: bool,
    pub holds: bool,
}

/// A net for `d` at level `eps^{1/alpha}` is an `eps`-net for `d^alpha`.
pub fn change_of_metric_check(space: &FiniteMetricSpace, alpha: f64, eps: f64) -> Result<ChangeOfMetricReport> {
    let powered = space.powered(alpha)?;
    let (base_net, exact) = best_cover(space, eps.powf(1.0 / alpha))?;
    let (pow_net, _) = best_cover(&powered, eps)?;
    let valid = base_net.covers(&powered, eps);
    Ok(ChangeOfMetricReport {
        alpha,
        eps,
        count_powered: pow_net.count(),
        count_base: base_net.count(),
        base_net_valid: valid,
        exact,
        holds: valid && (!exact || pow_net.count() <= base_net.count()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn grid(eps: f64) -> FiniteMetricSpace {
        let k = (1.0 / eps + 1e-9).floor() as usize;
        FiniteMetricSpace::from_points(&(0..=k).map(|i| i as f64 * eps).collect::<Vec<_>>(), 1).unwrap()
    }

    fn random_space(rng: &mut impl Rng, n: usize) -> FiniteMetricSpace {
        let dim = rng.gen_range(1..=3);
        let pts: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        FiniteMetricSpace::from_points(&pts, dim).unwrap()
    }

    #[test]
    fn tables_are_validated() {
        assert!(FiniteMetricSpace::from_table(2, vec![0.0, 1.0, 2.0, 0.0], false).is_err());
        assert!(FiniteMetricSpace::from_table(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0], true).is_err());
        assert!(FiniteMetricSpace::from_table(3, vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0], false).is_ok());
    }

    #[test]
    fn single_point_and_arithmetic_grid() {
        let one = FiniteMetricSpace::from_points(&[0.3], 1).unwrap();
        assert_eq!(covering_number_greedy(&one, 0.1).unwrap().count(), 1);
        assert!(covering_number_greedy(&grid(0.1), 0.1).unwrap().count() <= 11);
    }

    #[test]
    fn greedy_versus_exact() {
        let mut rng = stream_rng(21, 0);
        for _ in 0..50 {
            let n = rng.gen_range(1..=12);
            let s = random_space(&mut rng, n);
            let eps = rng.gen_range(0.05..0.6);
            let g = covering_number_greedy(&s, eps).unwrap();
            let e = minimum_cover(&s, eps).unwrap();
            assert!(e.covers(&s, eps));
            assert!(e.count() <= g.count() && g.count() <= 2 * e.count(), "{} {}", g.count(), e.count());
        }
    }

    #[test]
    fn counts_are_monotone_in_eps() {
        let mut rng = stream_rng(22, 0);
        let s = random_space(&mut rng, 40);
        let mut last = 0;
        for k in 0..20 {
            let eps = 1.0 - 0.045 * k as f64;
            let c = covering_number_greedy(&s, eps).unwrap().count();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn product_of_grids() {
        let g = grid(0.1);
        let r = product_entropy_check(&g, &g, 0.1).unwrap();
        assert!(r.product_net <= 121 && r.holds);
        let one = FiniteMetricSpace::from_points(&[0.0], 1).unwrap();
        let s = FiniteMetricSpace::from_points(&[0.0, 0.25, 0.5, 0.9], 1).unwrap();
        let r = product_entropy_check(&s, &one, 0.1).unwrap();
        assert_eq!(r.product_net, minimum_cover(&s, 0.1).unwrap().count());
        assert_eq!(r.exact_product, Some(r.product_net));
    }

    #[test]
    fn change_of_metric_examples() {
        let s = FiniteMetricSpace::from_points(&[0.0, 0.04], 1).unwrap();
        let r = change_of_metric_check(&s, 0.5, 0.2).unwrap();
        assert_eq!((r.count_powered, r.count_base), (1, 1));
        assert!(r.holds);
        let mut rng = stream_rng(23, 0);
        let t = random_space(&mut rng, 10);
        let r = change_of_metric_check(&t, 1.0, 0.3).unwrap();
        assert_eq!(r.count_powered, r.count_base);
    }
}
