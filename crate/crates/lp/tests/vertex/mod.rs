//! Random dense LPs and a brute-force vertex-enumeration oracle.

#![allow(dead_code)]

use alm_lp::{LpProblem, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub sense: Vec<Sense>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
}

pub fn random_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Dense {
    let a = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(-5i32..=5) as f64
                    }
                })
                .collect()
        })
        .collect::<Vec<Vec<f64>>>();
    let sense = (0..m)
        .map(|_| if rng.gen_bool(0.7) { Sense::Le } else { Sense::Ge })
        .collect();
    let b = (0..m).map(|_| rng.gen_range(-4i32..=12) as f64).collect();
    let c = (0..n).map(|_| rng.gen_range(-6i32..=6) as f64).collect();
    let lo = (0..n).map(|_| rng.gen_range(-2i32..=1) as f64).collect();
    let up = (0..n).map(|_| rng.gen_range(2i32..=6) as f64).collect();
    Dense { a, sense, b, c, lo, up }
}

pub fn build(d: &Dense) -> LpProblem {
    let mut p = LpProblem::new("rand");
    for j in 0..d.c.len() {
        p.add_col(format!("x{j}"), d.lo[j], d.up[j], d.c[j]).unwrap();
    }
    for (i, row) in d.a.iter().enumerate() {
        p.add_row(
            format!("r{i}"),
            row.iter().enumerate().map(|(j, &v)| (j, v)),
            d.sense[i],
            d.b[i],
        )
        .unwrap();
    }
    p
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            let (top, rest) = a.split_at_mut(i);
            for (x, y) in rest[0][k..n].iter_mut().zip(&top[k][k..n]) {
                *x -= f * y;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn feasible(d: &Dense, x: &[f64]) -> bool {
    let tol = 1e-9;
    if x.iter().zip(&d.lo).zip(&d.up).any(|((v, lo), up)| *v < lo - tol || *v > up + tol) {
        return false;
    }
    d.a.iter().zip(&d.sense).zip(&d.b).all(|((row, s), &b)| {
        let act: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        match s {
            Sense::Le => act <= b + tol,
            Sense::Ge => act >= b - tol,
            Sense::Eq => (act - b).abs() <= tol,
        }
    })
}

/// Minimum objective over all basic solutions, or `None` if infeasible.
/// Bounds are finite, so the LP is never unbounded.
pub fn vertex_oracle(d: &Dense) -> Option<f64> {
    let n = d.c.len();
    // hyperplanes: rows, then lower bounds, then upper bounds
    let mut planes: Vec<(Vec<f64>, f64)> = d.a.iter().cloned().zip(d.b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), d.lo[j]));
        planes.push((e, d.up[j]));
    }
    let k = planes.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(d, &x) {
                let obj: f64 = d.c.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

