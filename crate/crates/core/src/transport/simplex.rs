//! Network simplex for the balanced transportation problem.
//!
//! Supply nodes `0..m`, demand nodes `m..m+n` and an artificial root. The
//! initial basis routes every supply through the root with expensive
//! artificial arcs; primal pivots keep a strongly feasible spanning tree.

use crate::error::{LabError, Result};

/// Result of a transportation solve.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    /// `(i, j, mass)` with positive mass.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual potentials `u_i`, `v_j` with `u_i + v_j <= c_ij`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
}

impl TransportPlan {
    pub fn dual_value(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(&self.u).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(&self.v).map(|(x, y)| x * y).sum::<f64>()
    }
}

struct Tree {
    parent: Vec<usize>,
    /// Arc id joining a node to its parent.
    pred: Vec<usize>,
    /// True when that arc points from the node to its parent.
    up: Vec<bool>,
    flow: Vec<f64>,
    depth: Vec<usize>,
    pot: Vec<f64>,
}

pub const MAX_ARCS: usize = 4_000_000;

/// Solves `min sum c_ij f_ij` subject to row sums `a` and column sums `b`.
/// Both must be positive and have (nearly) equal totals.
pub fn solve_transport(a: &[f64], b: &[f64], cost: &(dyn Fn(usize, usize) -> f64 + Sync)) -> Result<TransportPlan> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(LabError::invalid("transport needs non-empty marginals"));
    }
    if m.saturating_mul(n) > MAX_ARCS {
        return Err(LabError::TooLarge(format!(
            "{m} x {n} transport exceeds the {MAX_ARCS}-arc guard; subsample the measures"
        )));
    }
    if a.iter().chain(b).any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(LabError::invalid("transport marginals must be positive"));
    }
    let real = m * n;
    let root = m + n;
    let nodes = m + n + 1;
    let mut max_cost: f64 = 0.0;
    for i in 0..m {
        for j in 0..n {
            max_cost = max_cost.max(cost(i, j).abs());
        }
    }
    let art = (max_cost + 1.0) * nodes as f64;
    let tol = 1e-12 * (max_cost + 1.0);

    // Arc ids: real i*n + j (i -> m+j); artificial real + v joins v and root.
    let tail = |e: usize| -> usize {
        if e < real {
            e / n
        } else {
            let v = e - real;
            if v < m {
                v
            } else {
                root
            }
        }
    };
    let arc_cost = |e: usize| -> f64 {
        if e < real {
            cost(e / n, e % n)
        } else {
            art
        }
    };

    let mut t = Tree {
        parent: vec![root; nodes],
        pred: (0..nodes).map(|v| real + v).collect(),
        up: (0..nodes).map(|v| v < m).collect(),
        flow: (0..nodes).map(|v| if v < m { a[v] } else if v < m + n { b[v - m] } else { 0.0 }).collect(),
        depth: vec![1; nodes],
        pot: vec![0.0; nodes],
    };
    t.depth[root] = 0;
    for v in 0..m + n {
        t.pot[v] = if v < m { -art } else { art };
    }

    let arcs_total = real + m + n;
    let block = ((arcs_total as f64).sqrt().ceil() as usize).max(10);
    let mut next = 0usize;
    let mut pivots = 0usize;
    let reduced = |t: &Tree, e: usize| -> f64 {
        let (u, w) = if e < real {
            (e / n, m + e % n)
        } else {
            let v = e - real;
            if v < m {
                (v, root)
            } else {
                (root, v)
            }
        };
        arc_cost(e) + t.pot[u] - t.pot[w]
    };

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    loop {
        // Block pricing.
        let mut best = None;
        let mut best_rc = -tol;
        let mut scanned = 0;
        while scanned < arcs_total {
            let stop = (scanned + block).min(arcs_total);
            while scanned < stop {
                let e = next;
                next += 1;
                if next == arcs_total {
                    next = 0;
                }
                scanned += 1;
                let rc = reduced(&t, e);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(e);
                }
            }
            if best.is_some() {
                break;
            }
        }
        let Some(e) = best else { break };
        pivots += 1;
        if pivots > 50 * nodes * nodes + 1000 {
            return Err(LabError::Experiment("network simplex failed to converge".into()));
        }
        let (u, w) = if e < real {
            (e / n, m + e % n)
        } else {
            let v = e - real;
            if v < m {
                (v, root)
            } else {
                (root, v)
            }
        };
        // Find apex.
        let (mut x, mut y) = (u, w);
        while x != y {
            if t.depth[x] >= t.depth[y] {
                x = t.parent[x];
            } else {
                y = t.parent[y];
            }
        }
        let apex = x;
        // Cycle orientation: apex .. u -> w .. apex. Flow decreases on arcs
        // traversed against their direction.
        let mut theta = f64::INFINITY;
        let mut leave: Option<(usize, bool)> = None; // (node owning the arc, on w side)
        // u side, traversed apex -> u: arc of node x is traversed parent -> x.
        let mut path_u = Vec::new();
        let mut x = u;
        while x != apex {
            path_u.push(x);
            x = t.parent[x];
        }
        for &x in path_u.iter().rev() {
            // parent -> x is backward iff the arc points x -> parent.
            // Later arcs in the traversal win ties.
            if t.up[x] && t.flow[x] <= theta {
                theta = t.flow[x];
                leave = Some((x, false));
            }
        }
        let mut y = w;
        let mut path_w = Vec::new();
        while y != apex {
            path_w.push(y);
            y = t.parent[y];
        }
        for &y in &path_w {
            // Traversed y -> parent: backward iff the arc points parent -> y.
            if !t.up[y] && t.flow[y] <= theta {
                theta = t.flow[y];
                leave = Some((y, true));
            }
        }
        let Some((q, on_w)) = leave else {
            return Err(LabError::Experiment("unbounded transport problem".into()));
        };
        // Update flows around the cycle.
        if theta > 0.0 {
            for &x in &path_u {
                if t.up[x] {
                    t.flow[x] -= theta;
                } else {
                    t.flow[x] += theta;
                }
            }
            for &y in &path_w {
                if t.up[y] {
                    t.flow[y] += theta;
                } else {
                    t.flow[y] -= theta;
                }
            }
        }
        t.flow[q] = 0.0;
        // Re-hang the detached subtree (containing `a`) below `b`.
        let (a_node, b_node) = if on_w { (w, u) } else { (u, w) };
        let mut child = a_node;
        let mut new_parent = b_node;
        let mut new_arc = e;
        let mut new_up = tail(e) == a_node;
        let mut new_flow = theta;
        loop {
            let (op, oa, ou, of) = (t.parent[child], t.pred[child], t.up[child], t.flow[child]);
            t.parent[child] = new_parent;
            t.pred[child] = new_arc;
            t.up[child] = new_up;
            t.flow[child] = new_flow;
            if child == q {
                break;
            }
            new_parent = child;
            new_arc = oa;
            new_up = !ou;
            new_flow = of;
            child = op;
        }
        // Recompute depths and potentials top-down.
        for c in children.iter_mut() {
            c.clear();
        }
        for v in 0..nodes {
            if v != root {
                children[t.parent[v]].push(v);
            }
        }
        let mut stack = vec![root];
        while let Some(p) = stack.pop() {
            for &c in &children[p] {
                t.depth[c] = t.depth[p] + 1;
                let ce = arc_cost(t.pred[c]);
                t.pot[c] = if t.up[c] { t.pot[p] - ce } else { t.pot[p] + ce };
                stack.push(c);
            }
        }
    }

    let mut plan = Vec::new();
    let mut total = 0.0;
    for v in 0..m + n {
        let e = t.pred[v];
        if e < real && t.flow[v] > 0.0 {
            let (i, j) = (e / n, e % n);
            plan.push((i, j, t.flow[v]));
            total += t.flow[v] * cost(i, j);
        }
    }
    plan.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
    // Dual: u_i = -(pi_i - pi_0), v_j = pi_j - pi_0 (shift keeps values small).
    let shift = t.pot[0];
    let u: Vec<f64> = (0..m).map(|i| -(t.pot[i] - shift)).collect();
    let v: Vec<f64> = (0..n).map(|j| t.pot[m + j] - shift).collect();
    Ok(TransportPlan { cost: total, plan, u, v, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_permutation(c: &[Vec<f64>]) -> f64 {
        // Minimum-cost perfect matching by enumerating permutations.
        fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == c.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..c.len() {
                if !used[j] {
                    used[j] = true;
                    rec(c, row + 1, used, acc + c[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, 0, &mut vec![false; c.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn uniform_weights_match_assignment_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let k = rng.gen_range(1..=6);
            let c: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0.0..5.0)).collect()).collect();
            let w = vec![1.0 / k as f64; k];
            let sol = solve_transport(&w, &w, &|i, j| c[i][j]).unwrap();
            let want = brute_force_permutation(&c) / k as f64;
            assert!((sol.cost - want).abs() < 1e-12, "{} vs {want}", sol.cost);
        }
    }

    #[test]
    fn marginals_and_complementary_slackness() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = rng.gen_range(1..15);
            let n = rng.gen_range(1..15);
            let mut a: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let c: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
            let sol = solve_transport(&a, &b, &|i, j| c[i][j]).unwrap();
            let mut ra = vec![0.0; m];
            let mut rb = vec![0.0; n];
            for &(i, j, f) in &sol.plan {
                ra[i] += f;
                rb[j] += f;
                assert!((sol.u[i] + sol.v[j] - c[i][j]).abs() < 1e-9);
            }
            for i in 0..m {
                assert!((ra[i] - a[i]).abs() < 1e-9);
                for j in 0..n {
                    assert!(sol.u[i] + sol.v[j] <= c[i][j] + 1e-9);
                }
            }
            for j in 0..n {
                assert!((rb[j] - b[j]).abs() < 1e-9);
            }
            assert!((sol.cost - sol.dual_value(&a, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn guard_rejects_large_problems() {
        let a = vec![1.0 / 2001.0; 2001];
        assert!(matches!(solve_transport(&a, &a, &|_, _| 0.0), Err(LabError::TooLarge(_))));
    }
}
