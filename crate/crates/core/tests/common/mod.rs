//! Independent reference implementations and random instances shared by the
//! integration tests. Nothing here calls into the field code under test.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Naive double loop over all ordered pairs. Neighbor status is decided from
/// the raw initial distances, not from a prebuilt graph.
pub fn oracle_field(initial: &[Vec<f64>], current: &[Vec<f64>], r: f64, k1: f64, k2: f64) -> Vec<Vec<f64>> {
    let n = initial.len();
    let dim = initial[0].len();
    let mut out = vec![vec![0.0; dim]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d0 = norm(&sub(&initial[i], &initial[j]));
            let neighbor = d0 > 0.0 && d0 < r;
            let diff = sub(&current[i], &current[j]);
            let d = norm(&diff);
            let unit: Vec<f64> = diff.iter().map(|x| x / d).collect();
            for k in 0..dim {
                out[i][k] += if neighbor {
                    k1 * unit[k] * (d0 - d)
                } else {
                    k2 * unit[k]
                };
            }
        }
    }
    out
}

/// Elastic part only, same construction as [`oracle_field`].
pub fn oracle_elastic(initial: &[Vec<f64>], current: &[Vec<f64>], r: f64, k1: f64) -> Vec<Vec<f64>> {
    let n = initial.len();
    let dim = initial[0].len();
    let mut out = vec![vec![0.0; dim]; n];
    for i in 0..n {
        for j in 0..n {
            let d0 = norm(&sub(&initial[i], &initial[j]));
            if i == j || !(d0 > 0.0 && d0 < r) {
                continue;
            }
            let diff = sub(&current[i], &current[j]);
            let d = norm(&diff);
            for k in 0..dim {
                out[i][k] += k1 * diff[k] / d * (d0 - d);
            }
        }
    }
    out
}

/// Brute-force neighbor lists: `j` such that `0 < |p_i - p_j| < r`.
pub fn oracle_neighbors(points: &[Vec<f64>], r: f64) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            (0..points.len())
                .filter(|&j| {
                    let d = norm(&sub(&points[i], &points[j]));
                    d > 0.0 && d < r
                })
                .collect()
        })
        .collect()
}

/// Two explicit Euler steps written out directly.
pub fn oracle_two_steps(initial: &[Vec<f64>], r: f64, k1: f64, k2: f64, dt: f64) -> Vec<Vec<f64>> {
    let mut cur = initial.to_vec();
    for _ in 0..2 {
        let v = oracle_field(initial, &cur, r, k1, k2);
        for (p, vi) in cur.iter_mut().zip(&v) {
            for (x, y) in p.iter_mut().zip(vi) {
                *x += dt * y;
            }
        }
    }
    cur
}

/// Singular values of a centered 2-D cloud from the closed-form eigenvalues
/// of its 2x2 scatter matrix, descending.
pub fn singular_values_2d(points: &[Vec<f64>]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p[0] - mx, p[1] - my);
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = (tr / 2.0 - disc).max(0.0);
    (l1.sqrt(), l2.sqrt())
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize, span: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-span..span)).collect())
        .collect()
}

/// Random initial cloud plus a perturbed current cloud and a radius that
/// gives a mix of neighbor and non-neighbor pairs.
pub struct Instance {
    pub initial: Vec<Vec<f64>>,
    pub current: Vec<Vec<f64>>,
    pub r: f64,
    pub k1: f64,
    pub k2: f64,
}

pub fn random_instance(rng: &mut impl Rng, max_n: usize, max_dim: usize) -> Instance {
    let n = rng.gen_range(2..=max_n);
    let dim = rng.gen_range(1..=max_dim);
    let initial = random_points(rng, n, dim, 5.0);
    let current = initial
        .iter()
        .map(|p| p.iter().map(|x| x + rng.gen_range(-0.5..0.5)).collect())
        .collect();
    Instance {
        initial,
        current,
        r: rng.gen_range(0.5..6.0),
        k1: rng.gen_range(0.01..1.0),
        k2: rng.gen_range(1e-4..1e-2),
    }
}

/// Product of Givens rotations with random angles in every coordinate plane.
pub fn random_rotation(rng: &mut impl Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for a in 0..dim {
        for b in a + 1..dim {
            let (s, c) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
            for row in m.iter_mut() {
                let (x, y) = (row[a], row[b]);
                row[a] = c * x - s * y;
                row[b] = s * x + c * y;
            }
        }
    }
    m
}

pub fn apply(m: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}
