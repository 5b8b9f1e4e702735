use crate::error::{LabError, Result};
use crate::pde::grid::GridDensity;
use crate::transport::measure::DiscreteMeasure;
use crate::transport::simplex::{solve_transport, TransportPlan};

/// A distance together with its optimality certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    pub value: f64,
    /// `(i, j, mass)` between atoms of the first and second measure.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual potentials on the atoms of the first and second measure.
    pub potentials: (Vec<f64>, Vec<f64>),
    pub method: &'static str,
}

/// Exact `W1` on the line: `int |F_mu - F_nu| dx` over the merged atoms.
pub fn w1_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim != 1 || nu.dim != 1 {
        return Err(LabError::invalid("w1_1d needs one-dimensional measures"));
    }
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    events.extend(mu.atoms.iter().zip(&mu.weights).map(|(&x, &w)| (x, w)));
    events.extend(nu.atoms.iter().zip(&nu.weights).map(|(&x, &w)| (x, -w)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0;
    let mut total = 0.0;
    for k in 0..events.len() {
        cdf += events[k].1;
        if k + 1 < events.len() {
            total += cdf.abs() * (events[k + 1].0 - events[k].0);
        }
    }
    Ok(total)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Keeps atoms with positive weight; returns the kept indices.
fn positive_part(m: &DiscreteMeasure) -> (Vec<usize>, Vec<f64>) {
    let idx: Vec<usize> = (0..m.len()).filter(|&i| m.weights[i] > 0.0).collect();
    let w = idx.iter().map(|&i| m.weights[i]).collect();
    (idx, w)
}

/// Exact `W1` with Euclidean ground cost by network simplex.
pub fn w1_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    if mu.dim != nu.dim {
        return Err(LabError::invalid("measures live in different dimensions"));
    }
    let (ia, a) = positive_part(mu);
    let (ib, b) = positive_part(nu);
    let cost = |i: usize, j: usize| euclid(mu.atom(ia[i]), nu.atom(ib[j]));
    let sol: TransportPlan = solve_transport(&a, &b, &cost)?;
    let mut u = vec![0.0; mu.len()];
    let mut v = vec![0.0; nu.len()];
    for (k, &i) in ia.iter().enumerate() {
        u[i] = sol.u[k];
    }
    for (k, &j) in ib.iter().enumerate() {
        v[j] = sol.v[k];
    }
    Ok(TransportResult {
        value: sol.cost,
        plan: sol.plan.iter().map(|&(i, j, f)| (ia[i], ib[j], f)).collect(),
        potentials: (u, v),
        method: "network_simplex",
    })
}

/// `W1` choosing the quantile formula in one dimension.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim == 1 && nu.dim == 1 {
        w1_1d(mu, nu)
    } else {
        Ok(w1_exact(mu, nu)?.value)
    }
}


/// `|int_a^b (c - F)|` for `F` linear from `fa` to `fb` on `[a, b]`.
fn abs_gap(c: f64, fa: f64, fb: f64, len: f64) -> f64 {
    let (ga, gb) = (c - fa, c - fb);
    if ga * gb >= 0.0 {
        0.5 * (ga.abs() + gb.abs()) * len
    } else {
        // sign change: two triangles
        0.5 * (ga * ga + gb * gb) / (ga - gb).abs() * len
    }
}

/// Exact `W1` on the line between equal-weight points and a density that is
/// constant on each cell of a one-dimensional grid.
///
/// Unlike `w1_1d` against cell-centre atoms this has no `h/4` quantisation
/// error; the grid CDF is piecewise linear.
pub fn w1_points_to_grid_1d(points: &[f64], density: &GridDensity) -> Result<f64> {
    let spec = density.spec;
    if spec.dim != 1 {
        return Err(LabError::invalid("w1_points_to_grid_1d needs a one-dimensional grid"));
    }
    if points.is_empty() {
        return Err(LabError::invalid("no points"));
    }
    let total = density.total_mass();
    if !(total > 0.0) {
        return Err(LabError::invalid("density has no mass"));
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let w = 1.0 / n as f64;
    let h = spec.width();
    let lo = -spec.half_width;
    let g = spec.cells;
    // Breakpoints are cell edges and points; walk them in order.
    let mut acc = 0.0;
    let mut k = 0usize; // points at or left of the cursor
    let mut x = xs[0].min(lo);
    while k < n && xs[k] <= x {
        k += 1;
    }
    let grid_cdf = |x: f64, cell: usize, below: f64| -> f64 {
        if x <= lo {
            0.0
        } else if cell >= g {
            1.0
        } else {
            (below + density.masses[cell] * ((x - (lo + cell as f64 * h)) / h).clamp(0.0, 1.0)) / total
        }
    };
    let mut cell = 0usize;
    let mut below = 0.0;
    let end = xs[n - 1].max(-lo);
    while x < end {
        let next_edge = if x < lo { lo } else if cell < g { lo + (cell + 1) as f64 * h } else { f64::INFINITY };
        let next_point = if k < n { xs[k] } else { f64::INFINITY };
        let nx = next_edge.min(next_point).min(end);
        if nx > x {
            let c = k as f64 * w;
            let (fa, fb) = if x < lo { (0.0, 0.0) } else { (grid_cdf(x, cell, below), grid_cdf(nx, cell, below)) };
            acc += abs_gap(c, fa, fb, nx - x);
        }
        x = nx;
        if x >= lo && cell < g && x >= lo + (cell + 1) as f64 * h {
            below += density.masses[cell];
            cell += 1;
        }
        while k < n && xs[k] <= x {
            k += 1;
        }
    }
    Ok(acc)
}

/// Exact `W1` between two cell-constant densities on the same 1D grid.
pub fn w1_grids_1d(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.spec != b.spec || a.spec.dim != 1 {
        return Err(LabError::invalid("w1_grids_1d needs two densities on one 1D grid"));
    }
    let (za, zb) = (a.total_mass(), b.total_mass());
    if !(za > 0.0 && zb > 0.0) {
        return Err(LabError::invalid("density has no mass"));
    }
    let h = a.spec.width();
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut acc = 0.0;
    for (ma, mb) in a.masses.iter().zip(&b.masses) {
        let (na, nb) = (fa + ma / za, fb + mb / zb);
        // difference of two linear functions is linear
        acc += abs_gap(0.0, fa - fb, na - nb, h);
        fa = na;
        fb = nb;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diracs() {
        let a = DiscreteMeasure::dirac(&[0.0]);
        let b = DiscreteMeasure::dirac(&[1.0]);
        assert_eq!(w1_1d(&a, &b).unwrap(), 1.0);
        assert_eq!(w1_1d(&a, &a).unwrap(), 0.0);
        assert!(w1_1d(&DiscreteMeasure::dirac(&[0.0, 1.0]), &a).is_err());
    }

    #[test]
    fn crossing_pair_in_plane() {
        let a = DiscreteMeasure::uniform(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let b = DiscreteMeasure::uniform(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let r = w1_exact(&a, &b).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(w1_exact(&a, &a).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn identical_measures_have_diagonal_plan() {
        let a = DiscreteMeasure::uniform(1, vec![0.0, 0.5, 2.0]).unwrap();
        let r = w1_exact(&a, &a).unwrap();
        assert_eq!(r.value, 0.0);
        for (i, j, _) in r.plan {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn two_identical_atoms_collapse() {
        let a = DiscreteMeasure::uniform(1, vec![0.3, 0.3]).unwrap();
        assert_eq!(w1_1d(&a, &DiscreteMeasure::dirac(&[0.3])).unwrap(), 0.0);
    }

    #[test]
    fn points_to_grid_matches_fine_atoms() {
        use crate::pde::grid::GridSpec;
        use crate::rng::stream_rng;
        use rand::Rng;
        let mut rng = stream_rng(3, 0);
        for trial in 0..20 {
            let cells = 1 + trial % 7;
            let spec = GridSpec::new(1, 1.5, cells).unwrap();
            let masses: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.0..1.0)).collect();
            let z: f64 = masses.iter().sum();
            let density = GridDensity::new(spec, masses.iter().map(|m| m / z).collect()).unwrap();
            let pts: Vec<f64> = (0..1 + trial % 5).map(|_| rng.gen_range(-2.5..2.5)).collect();
            let exact = w1_points_to_grid_1d(&pts, &density).unwrap();
            // oracle: each cell split into many equal atoms
            let sub = 4000;
            let h = spec.width();
            let mut atoms = Vec::new();
            let mut ws = Vec::new();
            for c in 0..cells {
                for s in 0..sub {
                    atoms.push(-1.5 + c as f64 * h + (s as f64 + 0.5) * h / sub as f64);
                    ws.push(density.masses[c] / sub as f64);
                }
            }
            let fine = DiscreteMeasure::from_masses(1, atoms, ws).unwrap();
            let emp = DiscreteMeasure::uniform(1, pts.clone()).unwrap();
            let oracle = w1_1d(&emp, &fine).unwrap();
            assert!((exact - oracle).abs() < h / sub as f64, "{trial}: {exact} vs {oracle}");
        }
    }

    #[test]
    fn grid_distance_of_shifted_cell() {
        use crate::pde::grid::GridSpec;
        let spec = GridSpec::new(1, 2.0, 4).unwrap();
        let a = GridDensity::new(spec, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = GridDensity::new(spec, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((w1_grids_1d(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(w1_grids_1d(&a, &a).unwrap(), 0.0);
        // half the mass moves one cell: crossing-free, 0.5 * h
        let c = GridDensity::new(spec, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((w1_grids_1d(&a, &c).unwrap() - 0.5).abs() < 1e-15);
    }
}
