//! Dense two-phase primal simplex with Bland's rule.
//!
//! Desk-scale only (dimension ≤ 8, tens of constraints): used for polytope
//! support values, gauges of vertex polytopes and conic/convex hull
//! membership. Bland's rule guarantees termination on degenerate bases.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

struct Tableau {
    /// rows[i] has n columns followed by the rhs.
    rows: Vec<Vec<f64>>,
    /// reduced costs followed by minus the current objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i != row {
                let f = self.rows[i][col];
                if f != 0.0 {
                    for j in 0..=self.n {
                        let upd = self.rows[row][j] * f;
                        self.rows[i][j] -= upd;
                    }
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..=self.n {
                let upd = self.rows[row][j] * f;
                self.cost[j] -= upd;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex to optimality. Returns false on unboundedness.
    fn optimize(&mut self) -> bool {
        loop {
            // Bland: entering variable = smallest index with negative reduced cost.
            let Some(col) = (0..self.n).find(|&j| self.cost[j] < -COST_TOL) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rows[i][self.n] / a;
                    let better = match leave {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - PIVOT_TOL
                                || (ratio < br + PIVOT_TOL && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn solution(&self, nvars: usize) -> Vec<f64> {
        let mut x = vec![0.0; nvars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nvars {
                x[b] = self.rows[i][self.n];
            }
        }
        x
    }

    fn set_costs(&mut self, c: &[f64]) {
        self.cost = vec![0.0; self.n + 1];
        self.cost[..c.len()].copy_from_slice(c);
        // Canonicalize: subtract multiples of basic rows so basic columns cost 0.
        for i in 0..self.rows.len() {
            let f = self.cost[self.basis[i]];
            if f != 0.0 {
                for j in 0..=self.n {
                    let upd = self.rows[i][j] * f;
                    self.cost[j] -= upd;
                }
            }
        }
    }
}

/// Minimizes cᵀx subject to Ax = b, x ≥ 0 (two-phase).
pub fn solve_standard(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpResult {
    let m = a.len();
    let nvars = c.len();
    let n = nvars + m; // artificials appended
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), nvars);
        let mut r = vec![0.0; n + 1];
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            r[j] = sgn * v;
        }
        r[nvars + i] = 1.0;
        r[n] = sgn * b[i];
        rows.push(r);
    }
    let mut t = Tableau {
        rows,
        cost: vec![],
        basis: (nvars..n).collect(),
        n,
    };
    let mut phase1 = vec![0.0; n];
    for v in phase1[nvars..].iter_mut() {
        *v = 1.0;
    }
    t.set_costs(&phase1);
    t.optimize();
    let infeas = -t.cost[t.n];
    if infeas > FEAS_TOL {
        return LpResult::Infeasible;
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut drop_rows = Vec::new();
    for i in 0..t.rows.len() {
        if t.basis[i] >= nvars {
            match (0..nvars).find(|&j| t.rows[i][j].abs() > 1e-9) {
                Some(j) => t.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        t.rows.remove(i);
        t.basis.remove(i);
    }
    // Forbid artificials from re-entering.
    for r in t.rows.iter_mut() {
        for v in r[nvars..n].iter_mut() {
            *v = 0.0;
        }
    }
    t.set_costs(c);
    if !t.optimize() {
        return LpResult::Unbounded;
    }
    LpResult::Optimal {
        x: t.solution(nvars),
        value: -t.cost[t.n],
    }
}

/// Maximizes ⟨objective, x⟩ over {x : Ax ≤ b}; `witness` must satisfy the
/// constraints strictly. Returns the optimum and an attaining point, or
/// `Unbounded`.
pub fn max_over_halfspaces(
    objective: &[f64],
    normals: &[Vec<f64>],
    offsets: &[f64],
    witness: &[f64],
) -> LpResult {
    let dim = objective.len();
    let m = normals.len();
    // Shift by the witness so the slack basis is feasible, split x free into x⁺−x⁻.
    let n = 2 * dim + m;
    let mut rows = Vec::with_capacity(m);
    for (i, nm) in normals.iter().enumerate() {
        let rhs = offsets[i] - crate::numeric::dot(nm, witness);
        let mut r = vec![0.0; n + 1];
        for j in 0..dim {
            r[j] = nm[j];
            r[dim + j] = -nm[j];
        }
        r[2 * dim + i] = 1.0;
        r[n] = rhs.max(0.0);
        rows.push(r);
    }
    let mut t = Tableau {
        rows,
        cost: vec![],
        basis: (2 * dim..n).collect(),
        n,
    };
    let mut c = vec![0.0; n];
    for j in 0..dim {
        c[j] = -objective[j];
        c[dim + j] = objective[j];
    }
    t.set_costs(&c);
    if !t.optimize() {
        return LpResult::Unbounded;
    }
    let y = t.solution(2 * dim);
    let x: Vec<f64> = (0..dim).map(|j| witness[j] + y[j] - y[dim + j]).collect();
    LpResult::Optimal {
        value: crate::numeric::dot(objective, &x),
        x,
    }
}

/// Least t ≥ 0 with `target` = Σ μᵢ genᵢ, Σ μᵢ = t, μ ≥ 0 — i.e. the gauge of
/// conv(generators) at `target` when 0 is interior. `None` when infeasible.
pub fn min_total_weight_combination(generators: &[Vec<f64>], target: &[f64]) -> Option<f64> {
    let dim = target.len();
    let k = generators.len();
    let c = vec![1.0; k];
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| generators.iter().map(|g| g[i]).collect())
        .collect();
    match solve_standard(&c, &rows, target) {
        LpResult::Optimal { value, .. } => Some(value.max(0.0)),
        _ => None,
    }
}

/// Membership of `target` in the convex hull of `points`.
pub fn in_convex_hull(points: &[Vec<f64>], target: &[f64]) -> bool {
    let dim = target.len();
    let k = points.len();
    let c = vec![0.0; k];
    let mut rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| points.iter().map(|p| p[i]).collect())
        .collect();
    rows.push(vec![1.0; k]);
    let mut b = target.to_vec();
    b.push(1.0);
    matches!(solve_standard(&c, &rows, &b), LpResult::Optimal { .. })
}

/// Membership of `target` in the conic hull of `generators`.
pub fn in_conic_hull(generators: &[Vec<f64>], target: &[f64]) -> bool {
    let dim = target.len();
    let k = generators.len();
    let c = vec![0.0; k];
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| generators.iter().map(|g| g[i]).collect())
        .collect();
    matches!(solve_standard(&c, &rows, target), LpResult::Optimal { .. })
}
