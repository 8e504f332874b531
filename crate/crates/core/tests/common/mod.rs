//! Random switch systems shared by the property and acceptance tests.
#![allow(dead_code)]

use num_traits::ToPrimitive;
use qcgraft::tracks::{covering_bound, rational_nullspace, IntMatrix};
use rand::Rng;

/// `rows` switch conditions with entries in {−1, 0, 1} on `n` branches and a
/// positive real solution. A positive integer vector `p` is drawn first, rows
/// orthogonal to it are collected by rejection, and `p` is perturbed along the
/// nullspace. Returns `None` when rejection fails.
pub fn random_system(rng: &mut impl Rng, n: usize, rows: usize) -> Option<(IntMatrix, Vec<f64>)> {
    let p: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let mut m: IntMatrix = Vec::new();
    for _ in 0..10_000 {
        if m.len() == rows {
            break;
        }
        let row: Vec<i64> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        if row.iter().all(|&v| v == 0) || row.iter().zip(&p).map(|(a, b)| a * b).sum::<i64>() != 0 {
            continue;
        }
        m.push(row);
    }
    if m.len() < rows {
        return None;
    }
    let basis = rational_nullspace(&m, n);
    for _ in 0..100 {
        let mut x: Vec<f64> = p.iter().map(|&v| v as f64).collect();
        for v in &basis.vectors {
            let d: f64 = rng.gen_range(-0.4..0.4);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += d * vi.to_f64().unwrap();
            }
        }
        if x.iter().all(|&v| v > 0.05) {
            return Some((m, x));
        }
    }
    None
}

/// Scale comfortably above the rounding threshold `C / min x`.
pub fn scale_above_threshold(m: &IntMatrix, x: &[f64]) -> f64 {
    let c = covering_bound(&rational_nullspace(m, x.len()).vectors).value;
    let min_x = x.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    1.5 * c / min_x + 1.0
}

pub fn deviation(t: f64, x: &[f64], k: &[i64]) -> f64 {
    x.iter().zip(k).map(|(a, &b)| (t * a - b as f64).abs()).fold(0.0, f64::max)
}

/// Closest positive integer solution of `M k = 0` within `radius` of `t x`
/// in the sup norm, by scanning the whole box. `None` if the box holds more
/// than `budget` points or no solution.
pub fn brute_force_round(m: &IntMatrix, x: &[f64], t: f64, radius: f64, budget: u64) -> Option<(Vec<i64>, f64)> {
    let ranges: Vec<(i64, i64)> = x
        .iter()
        .map(|&v| (((t * v - radius).ceil() as i64).max(1), (t * v + radius).floor() as i64))
        .collect();
    let size = ranges.iter().try_fold(1u64, |acc, &(a, b)| acc.checked_mul((b - a + 1).max(0) as u64))?;
    if size == 0 || size > budget {
        return None;
    }
    let mut best: Option<(Vec<i64>, f64)> = None;
    let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        if m.iter().all(|row| row.iter().zip(&k).map(|(a, b)| a * b).sum::<i64>() == 0) {
            let d = deviation(t, x, &k);
            if best.as_ref().map_or(true, |b| d < b.1) {
                best = Some((k.clone(), d));
            }
        }
        let mut i = 0;
        loop {
            if i == k.len() {
                return best;
            }
            if k[i] < ranges[i].1 {
                k[i] += 1;
                break;
            }
            k[i] = ranges[i].0;
            i += 1;
        }
    }
}
