//! Small dense vector helpers and the quintic smoothstep family used by all
//! C² corner blends.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| x * t).collect()
}

/// a + t*b
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Quintic smoothstep S(u) = 6u⁵ − 15u⁴ + 10u³ clamped to [0,1].
///
/// S(0)=0, S(1)=1 and S', S'' vanish at both endpoints, so blends built from
/// it glue C² onto the adjacent pieces.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// S'(u) = 30u⁴ − 60u³ + 30u².
pub fn smoothstep_d1(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 + u * (-2.0 + u))
    }
}

/// S''(u) = 120u³ − 180u² + 60u.
pub fn smoothstep_d2(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        60.0 * u * (1.0 + u * (-3.0 + 2.0 * u))
    }
}

/// Antiderivative ∫₀ᵘ S = u⁶ − 3u⁵ + 2.5u⁴ on [0,1]; for u > 1 continues as
/// S₂(1) + (u−1) = u − 0.5.
pub fn smoothstep_int(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        u - 0.5
    } else {
        u * u * u * u * (2.5 + u * (-3.0 + u))
    }
}

/// Bisection for the smallest root of a monotone predicate: returns t where
/// `pred` flips from false to true on [lo, hi]; `pred(hi)` must hold.
pub fn bisect_first_true(mut lo: f64, mut hi: f64, iters: usize, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Row echelon reduction with partial pivoting; returns reduced rows and the
/// pivot column of each.
fn row_echelon(rows: &[Vec<f64>], tol: f64) -> Vec<(Vec<f64>, usize)> {
    let mut work: Vec<Vec<f64>> = rows.to_vec();
    let ncols = work.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(piv) = (row..work.len()).max_by(|&a, &b| {
            work[a][col].abs().partial_cmp(&work[b][col].abs()).unwrap()
        }) else {
            break;
        };
        if work[piv][col].abs() <= tol {
            continue;
        }
        work.swap(row, piv);
        let p = work[row][col];
        for v in work[row].iter_mut() {
            *v /= p;
        }
        for i in 0..work.len() {
            if i != row && work[i][col].abs() > 0.0 {
                let f = work[i][col];
                for j in 0..ncols {
                    let upd = f * work[row][j];
                    work[i][j] -= upd;
                }
            }
        }
        out.push((work[row].clone(), col));
        row += 1;
        if row == work.len() {
            break;
        }
    }
    out
}

pub fn matrix_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    row_echelon(rows, tol).len()
}

/// Orthonormal bases of the null space and the row space of the given rows.
pub fn nullspace_and_rowspace(rows: &[Vec<f64>], tol: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ncols = rows.first().map_or(0, |r| r.len());
    let reduced = row_echelon(rows, tol);
    let pivots: Vec<usize> = reduced.iter().map(|(_, c)| *c).collect();
    let mut null_basis = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; ncols];
        v[free] = 1.0;
        for (r, c) in &reduced {
            v[*c] = -r[free];
        }
        null_basis.push(v);
    }
    let row_basis: Vec<Vec<f64>> = reduced.into_iter().map(|(r, _)| r).collect();
    (orthonormalize(&null_basis), orthonormalize(&row_basis))
}

/// Modified Gram–Schmidt, dropping near-dependent vectors.
pub fn orthonormalize(vecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vecs {
        let mut w = v.clone();
        for b in &basis {
            let c = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let n = norm(&w);
        if n > 1e-10 {
            for wi in w.iter_mut() {
                *wi /= n;
            }
            basis.push(w);
        }
    }
    basis
}

/// Solves the symmetric cyclic tridiagonal system M x = d with constant
/// diagonal `c`, constant off-diagonal `e` and corner entries `e`
/// (Sherman–Morrison around a Thomas sweep). Requires diagonal dominance.
pub fn solve_constant_cyclic_tridiag(c: f64, e: f64, d: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert!(n >= 3);
    let gamma = -c;
    let d_first = c - gamma;
    let d_last = c - e * e / gamma;
    let thomas = |rhs: &[f64]| -> Vec<f64> {
        let diag = |i: usize| {
            if i == 0 {
                d_first
            } else if i == n - 1 {
                d_last
            } else {
                c
            }
        };
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = e / diag(0);
        dp[0] = rhs[0] / diag(0);
        for i in 1..n {
            let m = diag(i) - e * cp[i - 1];
            cp[i] = e / m;
            dp[i] = (rhs[i] - e * dp[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };
    let y = thomas(d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = e;
    let z = thomas(&u);
    let vy = y[0] + (e / gamma) * y[n - 1];
    let vz = z[0] + (e / gamma) * z[n - 1];
    let f = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - f * zi).collect()
}

/// Visits every k-subset of {0,…,m−1}.
pub fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(smoothstep_d1(0.0), 0.0);
        assert_eq!(smoothstep_d1(1.0), 0.0);
        assert_eq!(smoothstep_d2(1.0), 0.0);
    }

    #[test]
    fn smoothstep_derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..20 {
            let u = i as f64 / 20.0;
            let fd1 = (smoothstep(u + h) - smoothstep(u - h)) / (2.0 * h);
            assert!((fd1 - smoothstep_d1(u)).abs() < 1e-8, "u={u}");
            let fd2 = (smoothstep_d1(u + h) - smoothstep_d1(u - h)) / (2.0 * h);
            assert!((fd2 - smoothstep_d2(u)).abs() < 1e-7, "u={u}");
            let fdi = (smoothstep_int(u + h) - smoothstep_int(u - h)) / (2.0 * h);
            assert!((fdi - smoothstep(u)).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn smoothstep_int_total_area() {
        assert!((smoothstep_int(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cyclic_tridiag_solver_round_trip() {
        let n = 24;
        let (c, e) = (1.0 + 2.0 * 24.0, -24.0);
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let x = solve_constant_cyclic_tridiag(c, e, &rhs);
        for i in 0..n {
            let prev = x[(i + n - 1) % n];
            let next = x[(i + 1) % n];
            let mx = c * x[i] + e * prev + e * next;
            assert!((mx - rhs[i]).abs() < 1e-9, "row {i}");
        }
    }
}
