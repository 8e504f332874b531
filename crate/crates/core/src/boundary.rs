//! Almost-isometries of intervals, the Beurling–Ahlfors extension, and the
//! extension of almost-isometric rectangle boundary maps.
//!
//! Boundary correspondences are piecewise linear ([`PiecewiseLinear`]), which
//! keeps every integral in the averaging extension exact.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::maps::{Domain, PiecewiseMap, PlanarC1Map};
use crate::{Error, Result};

pub const DYADIC_DEPTH: u32 = 10;
const CERT_SLACK: f64 = 1e-12;

/// Continuous piecewise-linear function with linear extension past the end
/// nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::invalid("piecewise-linear map needs at least two matching nodes"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("piecewise-linear nodes must be strictly increasing"));
        }
        let mut cum = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cum[i] = cum[i - 1] + 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
        }
        Ok(Self { xs, ys, cum })
    }

    pub fn identity(a: f64, b: f64) -> Self {
        Self::new(vec![a, b], vec![a, b]).expect("a < b")
    }

    /// Affine map of `[0, l1]` onto `[0, l2]`.
    pub fn affine(l1: f64, l2: f64) -> Result<Self> {
        Self::new(vec![0.0, l1], vec![0.0, l2])
    }

    /// Samples `f` at `n + 1` evenly spaced nodes of `[a, b]`.
    pub fn sample(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<Self> {
        let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn start(&self) -> f64 {
        self.xs[0]
    }

    pub fn end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn slope_of_segment(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        self.ys[i] + self.slope_of_segment(i) * (x - self.xs[i])
    }

    /// Right derivative.
    pub fn slope(&self, x: f64) -> f64 {
        self.slope_of_segment(self.segment(x))
    }

    /// ∫ from the first node to `x`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let dx = x - self.xs[i];
        self.cum_at(i) + dx * (self.ys[i] + 0.5 * self.slope_of_segment(i) * dx)
    }

    fn cum_at(&self, i: usize) -> f64 {
        if self.cum.len() == self.xs.len() {
            self.cum[i]
        } else {
            // deserialized without the cache
            (1..=i).map(|k| 0.5 * (self.ys[k] + self.ys[k - 1]) * (self.xs[k] - self.xs[k - 1])).sum()
        }
    }

    pub fn is_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] > w[0])
    }

    /// Restriction to `[a, b]`, re-based so that it starts at 0 in both
    /// source and target.
    pub fn window(&self, a: f64, b: f64) -> Result<Self> {
        let fa = self.eval(a);
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > a + 1e-12 * (b - a) && x < b - 1e-12 * (b - a) {
                xs.push(x - a);
                ys.push(y - fa);
            }
        }
        xs.push(b - a);
        ys.push(self.eval(b) - fa);
        Self::new(xs, ys)
    }

    /// Concatenation of pieces, each starting at 0 in source and target.
    pub fn concat(pieces: &[PiecewiseLinear]) -> Result<Self> {
        let (mut xs, mut ys) = (vec![0.0], vec![0.0]);
        let (mut ox, mut oy) = (0.0, 0.0);
        for p in pieces {
            for k in 1..p.xs.len() {
                xs.push(ox + p.xs[k] - p.xs[0]);
                ys.push(oy + p.ys[k] - p.ys[0]);
            }
            ox = *xs.last().unwrap();
            oy = *ys.last().unwrap();
        }
        Self::new(xs, ys)
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_increasing() {
            return Err(Error::invalid("only increasing maps can be inverted"));
        }
        Self::new(self.ys.clone(), self.xs.clone())
    }

    pub fn compose(&self, inner: &PiecewiseLinear) -> Result<Self> {
        // breakpoints of the composite: inner's nodes and preimages of ours
        let inv = inner.inverse()?;
        let mut xs: Vec<f64> = inner.xs.clone();
        for &y in &self.xs {
            if y > inner.ys[0] && y < *inner.ys.last().unwrap() {
                xs.push(inv.eval(y));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * (1.0 + b.abs()));
        let ys = xs.iter().map(|&x| self.eval(inner.eval(x))).collect();
        Self::new(xs, ys)
    }

    /// CSV table of `(s, f(s))` nodes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,f\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push_str(&format!("{x:.12e},{y:.12e}\n"));
        }
        out
    }
}

/// Monotone map between two arclength-parametrized arcs `[0, l1] → [0, l2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMap {
    pub map: PiecewiseLinear,
}

impl IntervalMap {
    pub fn new(map: PiecewiseLinear) -> Result<Self> {
        if map.start() != 0.0 || map.eval(0.0) != 0.0 {
            return Err(Error::invalid("interval map must send 0 to 0"));
        }
        if !map.is_increasing() {
            return Err(Error::invalid("interval map must be strictly increasing"));
        }
        Ok(Self { map })
    }

    pub fn identity(l: f64) -> Self {
        Self { map: PiecewiseLinear::identity(0.0, l) }
    }

    pub fn affine(l1: f64, l2: f64) -> Result<Self> {
        Self::new(PiecewiseLinear::affine(l1, l2)?)
    }

    pub fn concat(pieces: &[IntervalMap]) -> Result<Self> {
        let maps: Vec<_> = pieces.iter().map(|p| p.map.clone()).collect();
        Self::new(PiecewiseLinear::concat(&maps)?)
    }

    pub fn source_len(&self) -> f64 {
        self.map.end()
    }

    pub fn target_len(&self) -> f64 {
        self.map.eval(self.map.end())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubInterval {
    pub a: f64,
    pub b: f64,
    pub error: f64,
}

/// `(eps, C)` certificate: derivative within `eps` of 1 and additive length
/// error at most `C` on every tested sub-interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmostIsometryCert {
    pub eps: f64,
    pub c: f64,
    pub measured_eps: f64,
    pub measured_c: f64,
    pub witness: Option<SubInterval>,
}

impl AlmostIsometryCert {
    pub fn identity() -> Self {
        Self { eps: 0.0, c: 0.0, measured_eps: 0.0, measured_c: 0.0, witness: None }
    }
}

/// Largest additive error over the dyadic sub-intervals of `[0, L]` down to
/// `depth`, with the worst interval.
pub fn dyadic_additive_error(f: &IntervalMap, depth: u32) -> SubInterval {
    let l = f.source_len();
    let mut worst = SubInterval { a: 0.0, b: l, error: 0.0 };
    for d in 0..=depth {
        let n = 1u64 << d;
        for k in 0..n {
            let a = l * k as f64 / n as f64;
            let b = l * (k + 1) as f64 / n as f64;
            let e = ((f.map.eval(b) - f.map.eval(a)) - (b - a)).abs();
            if e > worst.error {
                worst = SubInterval { a, b, error: e };
            }
        }
    }
    worst
}

pub fn max_slope_deviation(f: &IntervalMap) -> f64 {
    let n = f.map.nodes().0.len();
    (0..n - 1).map(|i| (f.map.slope_of_segment(i) - 1.0).abs()).fold(0.0, f64::max)
}

pub fn check_almost_isometry(f: &IntervalMap, eps: f64, c: f64) -> Result<AlmostIsometryCert> {
    let de = max_slope_deviation(f);
    if de > eps + CERT_SLACK {
        return Err(Error::CertViolation(format!("derivative deviates by {de} > eps = {eps}")));
    }
    let w = dyadic_additive_error(f, DYADIC_DEPTH);
    if w.error > c + CERT_SLACK * (1.0 + f.source_len()) {
        return Err(Error::CertViolation(format!(
            "additive error {} on [{}, {}] exceeds C = {c}",
            w.error, w.a, w.b
        )));
    }
    Ok(AlmostIsometryCert {
        eps,
        c,
        measured_eps: de,
        measured_c: w.error,
        witness: if w.error > 0.0 { Some(w) } else { None },
    })
}

/// Certificate for `outer ∘ inner`: slacks multiply, additive errors add.
pub fn compose_certs(outer: &AlmostIsometryCert, inner: &AlmostIsometryCert) -> AlmostIsometryCert {
    let e = outer.eps + inner.eps + outer.eps * inner.eps;
    let me = outer.measured_eps + inner.measured_eps + outer.measured_eps * inner.measured_eps;
    AlmostIsometryCert {
        eps: e,
        c: outer.c + inner.c,
        measured_eps: me,
        measured_c: outer.measured_c + inner.measured_c,
        witness: None,
    }
}

/// Certificate for the inverse map: the additive error is unchanged and the
/// slack becomes `eps / (1 − eps)`, at most `2 eps` for `eps ≤ 1/2`.
pub fn inverse_cert(a: &AlmostIsometryCert) -> Result<AlmostIsometryCert> {
    if !(a.eps < 1.0) {
        return Err(Error::invalid("inverse certificate needs eps < 1"));
    }
    Ok(AlmostIsometryCert {
        eps: a.eps / (1.0 - a.eps),
        c: a.c,
        measured_eps: a.measured_eps / (1.0 - a.measured_eps),
        measured_c: a.measured_c,
        witness: a.witness,
    })
}

/// Sampled quasisymmetry constant `sup (h(x+t) − h(x)) / (h(x) − h(x−t))`
/// over `x` in `[a, b]` and `t` in a geometric range.
pub fn quasisymmetry_estimate(h: &PiecewiseLinear, a: f64, b: f64) -> f64 {
    let mut m: f64 = 1.0;
    let n = 200;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let mut t = (b - a) * 1e-3;
        while t <= (b - a) {
            let r = (h.eval(x + t) - h.eval(x)) / (h.eval(x) - h.eval(x - t));
            m = m.max(r).max(1.0 / r);
            t *= 1.5;
        }
    }
    m
}

/// Averaging extension of an increasing map of the line:
/// `u = ½∫₀¹ [h(x+ty) + h(x−ty)] dt`, `v = ∫₀¹ [h(x+ty) − h(x−ty)] dt`.
///
/// With this normalization the identity extends to the identity. `window`
/// is the rectangle `[x0, x1, y0, y1]` used as the map's domain for scans.
pub fn beurling_ahlfors_extend(h: &PiecewiseLinear, window: [f64; 4]) -> Result<PlanarC1Map> {
    if !h.is_increasing() {
        return Err(Error::invalid("boundary map is not increasing"));
    }
    let (hv, hd) = (Arc::new(h.clone()), Arc::new(h.clone()));
    let eval = move |p: Complex64| {
        let (x, y) = (p.re, p.im);
        if y == 0.0 {
            return Complex64::new(hv.eval(x), 0.0);
        }
        let (ap, a0, am) = (hv.antiderivative(x + y), hv.antiderivative(x), hv.antiderivative(x - y));
        Complex64::new(0.5 * (ap - am) / y, (ap - 2.0 * a0 + am) / y)
    };
    let partials = move |p: Complex64| {
        let (x, y) = (p.re, p.im);
        if y == 0.0 {
            let s = hd.slope(x);
            return (Complex64::new(s, 0.0), Complex64::new(0.0, s));
        }
        let (hp, h0, hm) = (hd.eval(x + y), hd.eval(x), hd.eval(x - y));
        let (ap, a0, am) = (hd.antiderivative(x + y), hd.antiderivative(x), hd.antiderivative(x - y));
        let u = 0.5 * (ap - am) / y;
        let v = (ap - 2.0 * a0 + am) / y;
        let ux = (hp - hm) / (2.0 * y);
        let uy = (hp + hm) / (2.0 * y) - u / y;
        let vx = (hp + hm - 2.0 * h0) / y;
        let vy = (hp - hm) / y - v / y;
        (Complex64::new(ux, vx), Complex64::new(uy, vy))
    };
    let [x0, x1, y0, y1] = window;
    Ok(PlanarC1Map::new(Domain::rect(x0, x1, y0, y1), eval, partials))
}

/// Odd, `2w`-periodic extension of a displacement `d` on `[0, w]` with
/// `d(0) = d(w) = 0`, together with its averaging extension to `y > 0`.
#[derive(Debug, Clone)]
struct OddPeriodic {
    d: PiecewiseLinear,
    w: f64,
}

impl OddPeriodic {
    fn reduce(&self, x: f64) -> f64 {
        let p = 2.0 * self.w;
        let r = (x + self.w).rem_euclid(p) - self.w;
        r.clamp(-self.w, self.w)
    }

    fn value(&self, x: f64) -> f64 {
        let r = self.reduce(x);
        r.signum() * self.d.eval(r.abs())
    }

    fn slope(&self, x: f64) -> f64 {
        self.d.slope(self.reduce(x).abs())
    }

    fn primitive(&self, x: f64) -> f64 {
        self.d.antiderivative(self.reduce(x).abs())
    }

    /// `(U, U_x, U_y)` with `U(x, y) = ½∫₀¹ [d(x+ty) + d(x−ty)] dt`.
    fn average(&self, x: f64, y: f64) -> (f64, f64, f64) {
        if y <= 1e-12 * self.w {
            return (self.value(x), self.slope(x), 0.0);
        }
        let u = 0.5 * (self.primitive(x + y) - self.primitive(x - y)) / y;
        let (dp, dm) = (self.value(x + y), self.value(x - y));
        (u, 0.5 * (dp - dm) / y, 0.5 * (dp + dm) / y - u / y)
    }
}

/// Boundary map between rectangles `[0, w1] × [0, h]` and `[0, w2] × [0, h]`
/// that is the identity in `y` on the vertical sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectBoundaryMap {
    pub w1: f64,
    pub w2: f64,
    pub h: f64,
    pub bottom: PiecewiseLinear,
    pub top: PiecewiseLinear,
}

impl RectBoundaryMap {
    pub fn new(w1: f64, w2: f64, h: f64, bottom: PiecewiseLinear, top: PiecewiseLinear) -> Result<Self> {
        for (name, e) in [("bottom", &bottom), ("top", &top)] {
            let ok = (e.start()).abs() < 1e-12
                && (e.end() - w1).abs() < 1e-9 * w1
                && e.eval(0.0).abs() < 1e-12
                && (e.eval(w1) - w2).abs() < 1e-9 * w2
                && e.is_increasing();
            if !ok {
                return Err(Error::invalid(format!("{name} edge map is not a vertex-preserving homeomorphism")));
            }
        }
        Ok(Self { w1, w2, h, bottom, top })
    }

    pub fn identity(w: f64, h: f64) -> Self {
        Self::new(w, w, h, PiecewiseLinear::identity(0.0, w), PiecewiseLinear::identity(0.0, w)).unwrap()
    }

    /// Image of a boundary point of the source rectangle.
    pub fn apply(&self, p: Complex64) -> Option<Complex64> {
        let tol = 1e-12 * (self.w1 + self.h);
        if p.im.abs() <= tol {
            Some(Complex64::new(self.bottom.eval(p.re), 0.0))
        } else if (p.im - self.h).abs() <= tol {
            Some(Complex64::new(self.top.eval(p.re), self.h))
        } else if p.re.abs() <= tol {
            Some(Complex64::new(0.0, p.im))
        } else if (p.re - self.w1).abs() <= tol {
            Some(Complex64::new(self.w2, p.im))
        } else {
            None
        }
    }
}

/// Result of extending a rectangle boundary map.
#[derive(Debug, Clone)]
pub struct RectExtension {
    pub map: PiecewiseMap,
    /// Subdivision points `p_i` on the source's horizontal sides.
    pub cuts: Vec<f64>,
    pub bottom_cert: AlmostIsometryCert,
    pub top_cert: AlmostIsometryCert,
}

/// Greedy left-to-right subdivision of `[0, w]` into pieces of length in
/// `[h, 2h]`, taking the longest admissible piece each time.
pub fn subdivide(w: f64, h: f64) -> Result<Vec<f64>> {
    if !(w >= h) {
        return Err(Error::Regime(format!("modulus {w}/{h} is below 1")));
    }
    let mut cuts = vec![0.0];
    let mut p = 0.0;
    while w - p > 2.0 * h {
        let len = (2.0 * h).min(w - p - h);
        p += len;
        cuts.push(p);
    }
    cuts.push(w);
    Ok(cuts)
}

/// Extends `f` to a map of the rectangles.
///
/// The source is cut at points `p_i` into sub-rectangles of modulus in
/// `[1, 2]`. Each cut segment goes affinely to the segment joining
/// `f(p_i, 0)` and `f(p_i, h)`; each piece is a horizontal restretch onto the
/// quadrilateral between consecutive image segments, precomposed with a
/// height-preserving correction built from the averaging extension of the
/// residual boundary displacement.
pub fn extend_rect_boundary(f: &RectBoundaryMap, eps: f64, c: f64) -> Result<RectExtension> {
    let h = f.h;
    if !(f.w1 > h && f.w2 > h) {
        return Err(Error::Regime(format!(
            "moduli {} and {} must exceed 1",
            f.w1 / h,
            f.w2 / h
        )));
    }
    if !(h > 1.0 || c / h <= eps + CERT_SLACK) {
        return Err(Error::Regime("need h > 1 or C/h <= eps".into()));
    }
    let bottom_cert = check_almost_isometry(&IntervalMap::new(f.bottom.clone())?, eps, c)?;
    let top_cert = check_almost_isometry(&IntervalMap::new(f.top.clone())?, eps, c)?;

    let cuts = subdivide(f.w1, h)?;
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    for (i, win) in cuts.windows(2).enumerate() {
        let (p0, p1) = (win[0], win[1]);
        pieces.push((format!("sub{i}"), sub_extension(f, p0, p1)?));
    }
    Ok(RectExtension { map: PiecewiseMap::new(pieces), cuts, bottom_cert, top_cert })
}

fn sub_extension(f: &RectBoundaryMap, p0: f64, p1: f64) -> Result<PlanarC1Map> {
    let h = f.h;
    let w = p1 - p0;
    let (b0, b1) = (f.bottom.eval(p0), f.bottom.eval(p1));
    let (t0, t1) = (f.top.eval(p0), f.top.eval(p1));
    let normalized = |e: &PiecewiseLinear, a: f64, z: f64| -> Result<OddPeriodic> {
        let win = e.window(p0, p1)?;
        let (xs, ys) = win.nodes();
        let ys: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| w * y / (z - a) - x).collect();
        let mut ys = ys;
        let n = ys.len();
        ys[0] = 0.0;
        ys[n - 1] = 0.0;
        Ok(OddPeriodic { d: PiecewiseLinear::new(xs.to_vec(), ys)?, w })
    };
    let db = Arc::new(normalized(&f.bottom, b0, b1)?);
    let dt = Arc::new(normalized(&f.top, t0, t1)?);
    let s1 = (t0 - b0) / h;
    let s2 = (t1 - b1) / h;

    // local correction Φ(x, y) = (x + δ(x, y), y)
    let local = move |x: f64, y: f64| -> (f64, f64, f64) {
        let a = y / h;
        let (ub, ubx, uby) = db.average(x, y);
        let (ut, utx, uty) = dt.average(x, h - y);
        let big_x = x + (1.0 - a) * ub + a * ut;
        let xx = 1.0 + (1.0 - a) * ubx + a * utx;
        let xy = -ub / h + (1.0 - a) * uby + ut / h - a * uty;
        (big_x, xx, xy)
    };
    let local2 = local.clone();
    Ok(PlanarC1Map::new(
        Domain::rect(p0, p1, 0.0, h),
        move |p| {
            let y = p.im;
            let (bx, _, _) = local(p.re - p0, y);
            let g1 = b0 + s1 * y;
            let g2 = b1 + s2 * y;
            Complex64::new(g1 + bx * (g2 - g1) / w, y)
        },
        move |p| {
            let y = p.im;
            let (bx, xx, xy) = local2(p.re - p0, y);
            let sc = (b1 - b0 + (s2 - s1) * y) / w;
            let dsc = (s2 - s1) / w;
            (Complex64::new(sc * xx, 0.0), Complex64::new(s1 + xy * sc + bx * dsc, 1.0))
        },
    ))
}
