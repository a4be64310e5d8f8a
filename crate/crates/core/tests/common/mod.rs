//! Test-side oracles and generators, independent of the library's own
//! matrix code.

#![allow(dead_code)]

pub mod cases;
pub mod suites;

use rand::seq::SliceRandom;
use rand::Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Dense {
    vec![vec![0.0; n]; n]
}

pub fn identity(n: usize) -> Dense {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            let aip = a[i][p];
            if aip == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += aip * b[p][j];
            }
        }
    }
    c
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

fn inf_norm(a: &Dense) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^{A}` by scaling and squaring around a truncated Taylor series.
pub fn expm(a: &Dense) -> Dense {
    let n = a.len();
    let norm = inf_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let scaled: Dense = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=24 {
        term = matmul(&term, &scaled);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `L_o` straight from a 1-based edge list: row `h` gets `+1` at `h` and
/// `−1` at `t` for every edge `(h, t)`.
pub fn out_laplacian(n: usize, edges: &[(usize, usize)]) -> Dense {
    let mut l = zeros(n);
    for &(h, t) in edges {
        l[h - 1][h - 1] += 1.0;
        l[h - 1][t - 1] -= 1.0;
    }
    l
}

/// Undirected Laplacian `EEᵀ` from a 1-based edge list.
pub fn undirected_laplacian(n: usize, edges: &[(usize, usize)]) -> Dense {
    let mut l = zeros(n);
    for &(h, t) in edges {
        let (h, t) = (h - 1, t - 1);
        l[h][h] += 1.0;
        l[t][t] += 1.0;
        l[h][t] -= 1.0;
        l[t][h] -= 1.0;
    }
    l
}

/// Oracle for integrator agents with unit static gains: `e^{−L_o t}·x0`.
pub fn linear_consensus(n: usize, edges: &[(usize, usize)], x0: &[f64], t: f64) -> Vec<f64> {
    let l = out_laplacian(n, edges);
    let a: Dense = l.iter().map(|r| r.iter().map(|v| -v * t).collect()).collect();
    matvec(&expm(&a), x0)
}

/// Random simple digraph on `n` vertices whose vertex 1 (after a random
/// relabeling) is reachable from every other vertex: a random in-tree plus
/// `extra` random edges. Edges are 1-based `(head, tail)`; information flows
/// from tail to head, so each tree edge points a child at its parent.
pub fn random_reachable<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        edges.push((order[i], parent));
    }
    add_random_edges(rng, n, extra, &mut edges);
    edges
}

/// Random balanced digraph: a Hamiltonian cycle plus `cycles` extra random
/// directed cycles, without duplicate edges.
pub fn random_balanced<R: Rng>(rng: &mut R, n: usize, cycles: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    for _ in 0..cycles {
        let len = rng.gen_range(2..=n);
        let mut verts: Vec<usize> = (1..=n).collect();
        verts.shuffle(rng);
        verts.truncate(len);
        let cycle: Vec<(usize, usize)> = (0..len).map(|i| (verts[i], verts[(i + 1) % len])).collect();
        if cycle.iter().all(|e| !edges.contains(e)) {
            edges.extend(cycle);
        }
    }
    edges
}

/// Random simple digraph with no structural guarantees.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    add_random_edges(rng, n, m, &mut edges);
    edges
}

fn add_random_edges<R: Rng>(rng: &mut R, n: usize, count: usize, edges: &mut Vec<(usize, usize)>) {
    if n < 2 {
        return;
    }
    let capacity = n * (n - 1);
    let mut added = 0;
    while added < count && edges.len() < capacity {
        let h = rng.gen_range(1..=n);
        let t = rng.gen_range(1..=n);
        if h != t && !edges.contains(&(h, t)) {
            edges.push((h, t));
            added += 1;
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
