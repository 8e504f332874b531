//! Train tracks with exact rational arithmetic.
//!
//! A switch lists its incoming and outgoing branches; the switch condition
//! says the incoming weights and the outgoing weights have equal sums. The
//! condition matrix has one row per switch with entries in {0, 1, −1}.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switch {
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub branches: usize,
    pub switches: Vec<Switch>,
}

impl TrainTrack {
    pub fn new(branches: usize, switches: Vec<Switch>) -> Result<Self> {
        for (i, s) in switches.iter().enumerate() {
            if s.incoming.is_empty() || s.outgoing.is_empty() {
                return Err(Error::invalid(format!("switch {i} needs branches on both sides")));
            }
            if let Some(&b) = s.incoming.iter().chain(&s.outgoing).find(|&&b| b >= branches) {
                return Err(Error::invalid(format!("switch {i} names missing branch {b}")));
            }
        }
        let mut ends = vec![0usize; branches];
        let mut starts = vec![0usize; branches];
        for s in &switches {
            s.incoming.iter().for_each(|&b| ends[b] += 1);
            s.outgoing.iter().for_each(|&b| starts[b] += 1);
        }
        if ends.iter().chain(&starts).any(|&c| c > 1) {
            return Err(Error::invalid("a branch end belongs to more than one switch side"));
        }
        Ok(Self { branches, switches })
    }

    /// The closed track with branches a, b, c, a switch where a splits into
    /// b and c, and a switch where b and c merge back into a.
    pub fn split_merge() -> Self {
        Self::new(
            3,
            vec![
                Switch { incoming: vec![0], outgoing: vec![1, 2] },
                Switch { incoming: vec![1, 2], outgoing: vec![0] },
            ],
        )
        .expect("valid track")
    }

    /// Every branch end is attached to a switch.
    pub fn is_closed(&self) -> bool {
        let mut ends = vec![false; self.branches];
        let mut starts = vec![false; self.branches];
        for s in &self.switches {
            s.incoming.iter().for_each(|&b| ends[b] = true);
            s.outgoing.iter().for_each(|&b| starts[b] = true);
        }
        ends.iter().chain(&starts).all(|&e| e)
    }

    pub fn is_connected(&self) -> bool {
        if self.branches == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.branches).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for s in &self.switches {
            let all: Vec<usize> = s.incoming.iter().chain(&s.outgoing).copied().collect();
            for w in all.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let r = find(&mut parent, 0);
        (0..self.branches).all(|b| find(&mut parent, b) == r)
    }
}

pub type IntMatrix = Vec<Vec<i64>>;

pub fn switch_matrix(track: &TrainTrack) -> IntMatrix {
    track
        .switches
        .iter()
        .map(|s| {
            let mut row = vec![0i64; track.branches];
            s.incoming.iter().for_each(|&b| row[b] += 1);
            s.outgoing.iter().for_each(|&b| row[b] -= 1);
            row
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scalar", content = "values", rename_all = "snake_case")]
pub enum WeightVector {
    Exact(Vec<(i64, i64)>),
    Real(Vec<f64>),
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Admissible means nonnegative and satisfying every switch condition,
/// exactly for rational weights and within 1e−12 for real ones.
pub fn is_admissible(m: &IntMatrix, w: &WeightVector) -> bool {
    match w {
        WeightVector::Exact(v) => {
            let q: Vec<BigRational> = v.iter().map(|&(n, d)| ratio(n, d)).collect();
            q.iter().all(|x| !x.is_negative())
                && m.iter().all(|row| {
                    row.iter().zip(&q).fold(BigRational::zero(), |acc, (&a, x)| acc + x * BigInt::from(a)).is_zero()
                })
        }
        WeightVector::Real(v) => {
            v.iter().all(|&x| x >= 0.0)
                && m.iter().all(|row| row.iter().zip(v).map(|(&a, x)| a as f64 * x).sum::<f64>().abs() <= 1e-12)
        }
    }
}

/// Exact basis of `{w : M w = 0}` with the reduced row-echelon form kept
/// as a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    pub ncols: usize,
    pub rref: Vec<Vec<BigRational>>,
    pub pivots: Vec<usize>,
    pub free: Vec<usize>,
    pub vectors: Vec<Vec<BigRational>>,
}

pub fn rref(m: &IntMatrix, ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut a: Vec<Vec<BigRational>> =
        m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == a.len() {
            break;
        }
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..ncols {
                    let d = &f * &a[row][c];
                    a[r][c] = &a[r][c] - d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    a.truncate(row);
    (a, pivots)
}

pub fn rational_nullspace(m: &IntMatrix, ncols: usize) -> NullspaceBasis {
    let (r, pivots) = rref(m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let vectors = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[i][f].clone();
            }
            v
        })
        .collect();
    NullspaceBasis { ncols, rref: r, pivots, free, vectors }
}

pub fn mul_exact(m: &IntMatrix, v: &[BigRational]) -> Vec<BigRational> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (&a, x)| acc + x * BigInt::from(a)))
        .collect()
}

pub fn mul_int(m: &IntMatrix, v: &[i64]) -> Vec<i64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Covering-radius bound for the lattice spanned by the LCM-scaled basis:
/// half the sum of the basis vector lengths.
///
/// The lattice and the squared norms are exact; `value` is the square-root
/// sum rounded upward.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringBound {
    pub lcm: BigInt,
    pub lattice: Vec<Vec<BigInt>>,
    pub squared_norms: Vec<BigInt>,
    pub value: f64,
}

pub fn covering_bound(vectors: &[Vec<BigRational>]) -> CoveringBound {
    let mut l = BigInt::one();
    for v in vectors {
        for x in v {
            l = l.lcm(x.denom());
        }
    }
    let lattice: Vec<Vec<BigInt>> =
        vectors.iter().map(|v| v.iter().map(|x| (x * &l).to_integer()).collect()).collect();
    let squared_norms: Vec<BigInt> = lattice.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
    let mut value = 0.0;
    for n in &squared_norms {
        value += n.to_f64().unwrap_or(f64::INFINITY).sqrt();
    }
    value *= 0.5 * (1.0 + 8.0 * f64::EPSILON);
    CoveringBound { lcm: l, lattice, squared_norms, value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerRounding {
    pub k: Vec<i64>,
    pub bound_c: f64,
    pub t: f64,
    pub threshold: f64,
    pub max_deviation: f64,
}

/// Largest number of box points examined by the exact refinement step.
pub const ENUMERATION_BUDGET: u64 = 400_000;

/// Integer solution `k` of `M k = 0` with `‖t x − k‖∞ ≤ C` and `k > 0`.
///
/// Nearest-plane rounding against the LCM-scaled lattice gives a point within
/// `C`. When the free coordinates span a small enough box, every integer
/// solution in the `C`-box is then examined and the closest positive one is
/// returned; otherwise ±1 perturbations of the lattice coefficients are tried.
pub fn lattice_round(m: &IntMatrix, x: &[f64], t: f64) -> Result<IntegerRounding> {
    let n = x.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix and weight vector sizes differ"));
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("weights must be positive"));
    }
    let scale = x.iter().fold(0.0f64, |a, &b| a.max(b));
    if m.iter().any(|row| row.iter().zip(x).map(|(&a, v)| a as f64 * v).sum::<f64>().abs() > 1e-9 * scale) {
        return Err(Error::invalid("weights violate the switch conditions"));
    }
    let basis = rational_nullspace(m, n);
    let bound = covering_bound(&basis.vectors);
    let min_x = x.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let threshold = bound.value / min_x;
    if !(t > threshold) {
        return Err(Error::BelowThreshold { t, threshold });
    }
    let target: Vec<f64> = x.iter().map(|v| t * v).collect();
    let dev = |k: &[i64]| target.iter().zip(k).map(|(a, &b)| (a - b as f64).abs()).fold(0.0, f64::max);

    let lattice: Vec<Vec<i64>> = bound
        .lattice
        .iter()
        .map(|v| v.iter().map(|z| z.to_i64().expect("lattice entry fits i64")).collect())
        .collect();
    let coeffs = nearest_plane(&lattice, &target);
    let combine = |c: &[i64]| -> Vec<i64> {
        let mut k = vec![0i64; n];
        for (cj, b) in c.iter().zip(&lattice) {
            for i in 0..n {
                k[i] += cj * b[i];
            }
        }
        k
    };
    let mut best = combine(&coeffs);
    let mut best_dev = dev(&best);
    let positive = |k: &[i64]| k.iter().all(|&v| v > 0);

    let span = 2 * bound.value.floor() as u64 + 1;
    let box_size = span.checked_pow(basis.free.len() as u32).unwrap_or(u64::MAX);
    if box_size <= ENUMERATION_BUDGET {
        if let Some((k, d)) = enumerate_box(&basis, &target, bound.value, &dev) {
            if d <= best_dev || !positive(&best) {
                best = k;
                best_dev = d;
            }
        }
    } else {
        let d = lattice.len();
        let mut improved = true;
        while improved {
            improved = false;
            let base = best.clone();
            for j in 0..d {
                for s in [-1i64, 1] {
                    let k: Vec<i64> = base.iter().zip(&lattice[j]).map(|(a, b)| a + s * b).collect();
                    let dk = dev(&k);
                    let better = match (positive(&k), positive(&best)) {
                        (true, false) => true,
                        (false, true) => false,
                        _ => dk < best_dev - 1e-15,
                    };
                    if better && dk <= bound.value {
                        best = k;
                        best_dev = dk;
                        improved = true;
                    }
                }
            }
        }
    }
    if !positive(&best) {
        return Err(Error::Regime("no positive integer solution found within the covering bound".into()));
    }
    debug_assert!(mul_int(m, &best).iter().all(|&v| v == 0));
    Ok(IntegerRounding { k: best, bound_c: bound.value, t, threshold, max_deviation: best_dev })
}

/// Babai nearest-plane coefficients of `target` in the lattice basis.
fn nearest_plane(lattice: &[Vec<i64>], target: &[f64]) -> Vec<i64> {
    let d = lattice.len();
    let b: Vec<Vec<f64>> = lattice.iter().map(|v| v.iter().map(|&z| z as f64).collect()).collect();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let mut gs: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = b[j].clone();
        for g in &gs {
            let f = dot(&b[j], g) / dot(g, g);
            v.iter_mut().zip(g).for_each(|(a, c)| *a -= f * c);
        }
        gs.push(v);
    }
    let mut r = target.to_vec();
    let mut c = vec![0i64; d];
    for j in (0..d).rev() {
        let cj = (dot(&r, &gs[j]) / dot(&gs[j], &gs[j])).round();
        c[j] = cj as i64;
        r.iter_mut().zip(&b[j]).for_each(|(a, bb)| *a -= cj * bb);
    }
    c
}

/// Closest positive integer solution in the box `|k_f − target_f| ≤ C` over
/// the free coordinates; pivot coordinates follow from the echelon form.
fn enumerate_box(
    basis: &NullspaceBasis,
    target: &[f64],
    c: f64,
    dev: &dyn Fn(&[i64]) -> f64,
) -> Option<(Vec<i64>, f64)> {
    let free = &basis.free;
    let ranges: Vec<(i64, i64)> =
        free.iter().map(|&f| ((target[f] - c).ceil() as i64, (target[f] + c).floor() as i64)).collect();
    if ranges.iter().any(|(a, b)| a > b) {
        return None;
    }
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut best: Option<(Vec<i64>, f64)> = None;
    loop {
        let mut k = vec![0i64; basis.ncols];
        for (i, &f) in free.iter().enumerate() {
            k[f] = cur[i];
        }
        let mut integral = true;
        for (r, &p) in basis.pivots.iter().enumerate() {
            let mut s = BigRational::zero();
            for (i, &f) in free.iter().enumerate() {
                s -= &basis.rref[r][f] * BigInt::from(cur[i]);
            }
            if !s.is_integer() {
                integral = false;
                break;
            }
            k[p] = s.to_integer().to_i64().unwrap_or(i64::MAX);
        }
        if integral && k.iter().all(|&v| v > 0) {
            let d = dev(&k);
            if d <= c && best.as_ref().map_or(true, |(_, bd)| d < *bd) {
                best = Some((k, d));
            }
        }
        let mut i = 0;
        loop {
            if i == cur.len() {
                return best;
            }
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                break;
            }
            cur[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Closed components of the multicurve with `k_b` strands on branch `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multicurve {
    pub components: Vec<Vec<usize>>,
    pub crossings: usize,
}

impl Multicurve {
    pub fn count(&self) -> usize {
        self.components.len()
    }
}

/// Traces the multicurve carried by integer weights `k`.
///
/// At each switch, incoming strands are ordered by branch (in the switch's
/// listed order) and then by position across the branch; the `j`-th incoming
/// strand continues as the `j`-th outgoing strand.
pub fn multicurve_from_weights(track: &TrainTrack, k: &[i64]) -> Result<Multicurve> {
    if k.len() != track.branches || k.iter().any(|&v| v < 0) {
        return Err(Error::invalid("weights must be nonnegative integers, one per branch"));
    }
    if !track.is_closed() {
        return Err(Error::invalid("tracing needs every branch end attached to a switch"));
    }
    let m = switch_matrix(track);
    if mul_int(&m, k).iter().any(|&v| v != 0) {
        return Err(Error::Pairing("weights violate a switch condition".into()));
    }
    let mut end_switch = vec![0usize; track.branches];
    for (si, s) in track.switches.iter().enumerate() {
        s.incoming.iter().for_each(|&b| end_switch[b] = si);
    }
    let offset: Vec<usize> = {
        let mut o = vec![0usize; track.branches];
        for s in &track.switches {
            let mut acc = 0;
            for &b in &s.incoming {
                o[b] = acc;
                acc += k[b] as usize;
            }
        }
        o
    };
    let next = |b: usize, j: usize| -> Result<(usize, usize)> {
        let s = &track.switches[end_switch[b]];
        let mut g = offset[b] + j;
        for &ob in &s.outgoing {
            let kb = k[ob] as usize;
            if g < kb {
                return Ok((ob, g));
            }
            g -= kb;
        }
        Err(Error::Pairing(format!("strand {j} of branch {b} has no partner")))
    };
    let mut seen: Vec<Vec<bool>> = k.iter().map(|&v| vec![false; v as usize]).collect();
    let mut components = Vec::new();
    let mut crossings = 0;
    for b0 in 0..track.branches {
        for j0 in 0..k[b0] as usize {
            if seen[b0][j0] {
                continue;
            }
            let mut word = Vec::new();
            let (mut b, mut j) = (b0, j0);
            loop {
                seen[b][j] = true;
                word.push(b);
                crossings += 1;
                let (nb, nj) = next(b, j)?;
                if (nb, nj) == (b0, j0) {
                    break;
                }
                if seen[nb][nj] {
                    return Err(Error::Pairing("strand revisited before closing".into()));
                }
                (b, j) = (nb, nj);
            }
            components.push(word);
        }
    }
    Ok(Multicurve { components, crossings })
}
