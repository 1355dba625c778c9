#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            let (top, bottom) = m.split_at_mut(r);
            for (dst, src) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *dst -= f * src;
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `min ||theta||_1` subject to `||b - A theta||_inf <= lambda` by vertex
/// enumeration: the minimum sits where `p` of the hyperplanes
/// `theta_j = 0`, `a_i' theta = b_i - lambda`, `a_i' theta = b_i + lambda`
/// meet. Returns `None` when no candidate is feasible.
pub fn brute_force_dantzig(a: &[Vec<f64>], b: &[f64], lambda: f64) -> Option<f64> {
    let p = b.len();
    // hyperplane k: (normal, offset)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    for i in 0..p {
        planes.push((a[i].clone(), b[i] - lambda));
        planes.push((a[i].clone(), b[i] + lambda));
    }
    let tol = 1e-9 * (1.0 + lambda);
    let mut best: Option<f64> = None;
    for combo in combinations(planes.len(), p) {
        let m: Vec<Vec<f64>> = combo.iter().map(|&k| planes[k].0.clone()).collect();
        let r: Vec<f64> = combo.iter().map(|&k| planes[k].1).collect();
        let Some(theta) = solve_dense(m, r) else { continue };
        let feasible = (0..p).all(|i| {
            let ai: f64 = a[i].iter().zip(&theta).map(|(x, y)| x * y).sum();
            (b[i] - ai).abs() <= lambda + tol
        });
        if feasible {
            let obj: f64 = theta.iter().map(|x| x.abs()).sum();
            best = Some(best.map_or(obj, |o: f64| o.min(obj)));
        }
    }
    best
}

/// Random symmetric positive definite `A = M'M / p + 0.1 I`, `b` and a
/// `lambda` below `||b||_inf` half of the time.
pub fn random_instance(rng: &mut impl Rng, p: usize) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let m: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut a = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..p).map(|k| m[k][i] * m[k][j]).sum::<f64>() / p as f64;
        }
        a[i][i] += 0.1;
    }
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let top = b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let lambda = rng.random_range(0.01..1.2) * top;
    (a, b, lambda)
}
