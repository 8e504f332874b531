//! Planar C¹ maps, their Beltrami coefficients, and the explicit
//! straightening constructors.
//!
//! Points and tangent vectors are both stored as [`Complex64`]. A map's
//! partials `(f_x, f_y)` are the images of the unit vectors `1` and `i`, and
//! the Beltrami coefficient is `μ = f_z̄ / f_z` with
//! `f_z = ½(f_x − i f_y)` and `f_z̄ = ½(f_x + i f_y)`. Dilatation uses the
//! usual orientation `K = (1+|μ|)/(1−|μ|) ≥ 1`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::hyp::{ThinRectangle, TruncatedSector};
use crate::{Error, Result};

pub type PointFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type PartialsFn = Arc<dyn Fn(Complex64) -> (Complex64, Complex64) + Send + Sync>;
type ParamFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
type ContainsFn = Arc<dyn Fn(Complex64) -> bool + Send + Sync>;
/// Scalar function returning its value and derivative.
pub type ScalarFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Region on which a map is defined.
///
/// `param` maps the unit square onto the region; dilatation scans sample it
/// at cell centres, so the region's edges are never evaluated.
#[derive(Clone)]
pub struct Domain {
    pub kind: String,
    pub bbox: [f64; 4],
    param: ParamFn,
    contains: ContainsFn,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain").field("kind", &self.kind).field("bbox", &self.bbox).finish()
    }
}

impl Domain {
    pub fn custom(
        kind: impl Into<String>,
        bbox: [f64; 4],
        param: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        contains: impl Fn(Complex64) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { kind: kind.into(), bbox, param: Arc::new(param), contains: Arc::new(contains) }
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self::custom(
            "rectangle",
            [x0, x1, y0, y1],
            move |u, v| Complex64::new(x0 + u * (x1 - x0), y0 + v * (y1 - y0)),
            move |p| p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1,
        )
    }

    /// Rectangle in the half-plane sampled uniformly in `ln y`.
    pub fn log_strip(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (l0, l1) = (y0.ln(), y1.ln());
        Self::custom(
            "log_strip",
            [x0, x1, y0, y1],
            move |u, v| Complex64::new(x0 + u * (x1 - x0), (l0 + v * (l1 - l0)).exp()),
            move |p| p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1,
        )
    }

    /// `{center + r e^{iθ} : r0 ≤ r ≤ r1, t0 ≤ θ ≤ t1}`, sampled uniformly in
    /// `ln r` and θ.
    pub fn annular_sector(center: Complex64, r0: f64, r1: f64, t0: f64, t1: f64) -> Self {
        let (l0, l1) = (r0.ln(), r1.ln());
        Self::custom(
            "annular_sector",
            [center.re - r1, center.re + r1, center.im - r1, center.im + r1],
            move |u, v| {
                let r = (l0 + u * (l1 - l0)).exp();
                let t = t0 + v * (t1 - t0);
                center + Complex64::from_polar(r, t)
            },
            move |p| {
                let w = p - center;
                let (r, mut t) = (w.norm(), w.arg());
                if t < t0 - 1e-12 {
                    t += std::f64::consts::TAU;
                }
                r >= r0 && r <= r1 && t >= t0 - 1e-12 && t <= t1 + 1e-12
            },
        )
    }

    /// `{(x, y) : g1(y) ≤ x ≤ g2(y), y0 ≤ y ≤ y1}`.
    pub fn between_graphs_of_y(g1: ScalarFn, g2: ScalarFn, y0: f64, y1: f64, xr: [f64; 2]) -> Self {
        let (a1, a2) = (g1.clone(), g2.clone());
        Self::custom(
            "graph_region",
            [xr[0], xr[1], y0, y1],
            move |u, v| {
                let y = y0 + v * (y1 - y0);
                let (l, r) = (a1(y).0, a2(y).0);
                Complex64::new(l + u * (r - l), y)
            },
            move |p| p.im >= y0 && p.im <= y1 && p.re >= g1(p.im).0 && p.re <= g2(p.im).0,
        )
    }

    /// `{(x, y) : g1(x) ≤ y ≤ g2(x), x0 ≤ x ≤ x1}`.
    pub fn between_graphs_of_x(g1: ScalarFn, g2: ScalarFn, x0: f64, x1: f64, yr: [f64; 2]) -> Self {
        let (a1, a2) = (g1.clone(), g2.clone());
        Self::custom(
            "vertical_graph_region",
            [x0, x1, yr[0], yr[1]],
            move |u, v| {
                let x = x0 + u * (x1 - x0);
                let (b, t) = (a1(x).0, a2(x).0);
                Complex64::new(x, b + v * (t - b))
            },
            move |p| p.re >= x0 && p.re <= x1 && p.im >= g1(p.re).0 && p.im <= g2(p.re).0,
        )
    }

    pub fn sample(&self, u: f64, v: f64) -> Complex64 {
        (self.param)(u, v)
    }

    pub fn contains(&self, p: Complex64) -> bool {
        (self.contains)(p)
    }

    /// Image of this domain's parametrization under `f`.
    pub fn mapped(&self, kind: impl Into<String>, f: PointFn, inverse_contains: ContainsFn) -> Self {
        let param = self.param.clone();
        Self {
            kind: kind.into(),
            bbox: self.bbox,
            param: Arc::new(move |u, v| f(param(u, v))),
            contains: inverse_contains,
        }
    }
}

#[derive(Clone)]
pub enum Partials {
    Analytic(PartialsFn),
    FiniteDifference { step: f64 },
}

/// A C¹ planar map with a domain and partial derivatives.
#[derive(Clone)]
pub struct PlanarC1Map {
    pub domain: Domain,
    eval: PointFn,
    partials: Partials,
}

impl fmt::Debug for PlanarC1Map {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.partials {
            Partials::Analytic(_) => "analytic".to_string(),
            Partials::FiniteDifference { step } => format!("finite-difference({step})"),
        };
        f.debug_struct("PlanarC1Map").field("domain", &self.domain).field("partials", &p).finish()
    }
}

impl PlanarC1Map {
    pub fn new(
        domain: Domain,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        partials: impl Fn(Complex64) -> (Complex64, Complex64) + Send + Sync + 'static,
    ) -> Self {
        Self { domain, eval: Arc::new(eval), partials: Partials::Analytic(Arc::new(partials)) }
    }

    /// Map whose partials are taken by central differences with `step`.
    pub fn sampled(
        domain: Domain,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        step: f64,
    ) -> Self {
        Self { domain, eval: Arc::new(eval), partials: Partials::FiniteDifference { step } }
    }

    /// Holomorphic map given with its complex derivative.
    pub fn holomorphic(
        domain: Domain,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        df: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(domain, f, move |z| {
            let d = df(z);
            (d, I * d)
        })
    }

    pub fn identity(domain: Domain) -> Self {
        Self::new(domain, |z| z, |_| (Complex64::new(1.0, 0.0), I))
    }

    /// `(x, y) ↦ (a x + b y + e, c x + d y + f)`.
    pub fn affine(domain: Domain, m: [[f64; 2]; 2], t: [f64; 2]) -> Self {
        let fx = Complex64::new(m[0][0], m[1][0]);
        let fy = Complex64::new(m[0][1], m[1][1]);
        let t = Complex64::new(t[0], t[1]);
        Self::new(domain, move |p| fx * p.re + fy * p.im + t, move |_| (fx, fy))
    }

    pub fn eval(&self, p: Complex64) -> Complex64 {
        (self.eval)(p)
    }

    pub fn eval_fn(&self) -> PointFn {
        self.eval.clone()
    }

    pub fn partials(&self, p: Complex64) -> (Complex64, Complex64) {
        match &self.partials {
            Partials::Analytic(d) => d(p),
            Partials::FiniteDifference { step } => {
                let h = *step;
                let fx = (self.eval(p + h) - self.eval(p - h)) / (2.0 * h);
                let fy = (self.eval(p + I * h) - self.eval(p - I * h)) / (2.0 * h);
                (fx, fy)
            }
        }
    }

    pub fn with_finite_differences(&self, step: f64) -> Self {
        Self { domain: self.domain.clone(), eval: self.eval.clone(), partials: Partials::FiniteDifference { step } }
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        Self { domain, eval: self.eval.clone(), partials: self.partials.clone() }
    }

    /// `outer ∘ self`, defined on `self`'s domain.
    pub fn then(&self, outer: &PlanarC1Map) -> PlanarC1Map {
        let (fi, fo) = (self.clone(), outer.clone());
        let (gi, go) = (self.clone(), outer.clone());
        PlanarC1Map::new(
            self.domain.clone(),
            move |p| fo.eval(fi.eval(p)),
            move |p| {
                let q = gi.eval(p);
                let (ix, iy) = gi.partials(p);
                let (ox, oy) = go.partials(q);
                (ox * ix.re + oy * ix.im, ox * iy.re + oy * iy.im)
            },
        )
    }
}

/// Beltrami coefficient and dilatation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dilatation {
    pub mu: Complex64,
    pub k: f64,
}

pub fn dilatation_from_partials(fx: Complex64, fy: Complex64) -> Option<Dilatation> {
    let fz = 0.5 * (fx - I * fy);
    let fzb = 0.5 * (fx + I * fy);
    let (a, b) = (fz.norm(), fzb.norm());
    if !(a > b) {
        return None;
    }
    let mu = fzb / fz;
    let m = b / a;
    Some(Dilatation { mu, k: (1.0 + m) / (1.0 - m) })
}

pub fn dilatation_at(map: &PlanarC1Map, p: Complex64) -> Result<Dilatation> {
    let (fx, fy) = map.partials(p);
    dilatation_from_partials(fx, fy).ok_or(Error::Orientation { x: p.re, y: p.im })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilatationSample {
    pub p: Complex64,
    pub mu_abs: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilatationReport {
    pub k_max: f64,
    pub argmax: Complex64,
    pub grid: GridSpec,
    #[serde(skip)]
    pub samples: Vec<DilatationSample>,
}

impl DilatationReport {
    pub fn mu_max(&self) -> f64 {
        self.samples.iter().map(|s| s.mu_abs).fold(0.0, f64::max)
    }

    /// CSV body with one `x,y,mu_abs,k` row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,mu_abs,k\n");
        for s in &self.samples {
            out.push_str(&format!("{:.12e},{:.12e},{:.12e},{:.12e}\n", s.p.re, s.p.im, s.mu_abs, s.k));
        }
        out
    }

    fn merge(reports: Vec<DilatationReport>, kind: &str) -> DilatationReport {
        let mut best = DilatationReport {
            k_max: 1.0,
            argmax: Complex64::new(f64::NAN, f64::NAN),
            grid: GridSpec { nu: 0, nv: 0, domain: kind.to_string() },
            samples: Vec::new(),
        };
        for r in reports {
            if r.k_max > best.k_max || best.argmax.re.is_nan() {
                best.k_max = r.k_max;
                best.argmax = r.argmax;
            }
            best.grid.nu = best.grid.nu.max(r.grid.nu);
            best.grid.nv += r.grid.nv;
            best.samples.extend(r.samples);
        }
        best
    }
}

/// Pointwise dilatation on an `nu × nv` grid of cell centres of the domain
/// parametrization. Rows run in parallel; the result does not depend on the
/// thread count.
pub fn scan(map: &PlanarC1Map, nu: usize, nv: usize) -> Result<DilatationReport> {
    let rows: Vec<Result<Vec<DilatationSample>>> = (0..nv)
        .into_par_iter()
        .map(|j| {
            let v = (j as f64 + 0.5) / nv as f64;
            (0..nu)
                .map(|i| {
                    let u = (i as f64 + 0.5) / nu as f64;
                    let p = map.domain.sample(u, v);
                    let d = dilatation_at(map, p)?;
                    Ok(DilatationSample { p, mu_abs: d.mu.norm(), k: d.k })
                })
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(nu * nv);
    for r in rows {
        samples.extend(r?);
    }
    let (mut k_max, mut argmax) = (1.0, Complex64::new(f64::NAN, f64::NAN));
    for s in &samples {
        if s.k > k_max || argmax.re.is_nan() {
            k_max = s.k;
            argmax = s.p;
        }
    }
    Ok(DilatationReport { k_max, argmax, grid: GridSpec { nu, nv, domain: map.domain.kind.clone() }, samples })
}

/// A map assembled from pieces on domains that meet along arcs.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    pub pieces: Vec<(String, PlanarC1Map)>,
}

impl PiecewiseMap {
    pub fn new(pieces: Vec<(String, PlanarC1Map)>) -> Self {
        Self { pieces }
    }

    pub fn piece_at(&self, p: Complex64) -> Option<&PlanarC1Map> {
        self.pieces.iter().map(|(_, m)| m).find(|m| m.domain.contains(p))
    }

    pub fn eval(&self, p: Complex64) -> Option<Complex64> {
        self.piece_at(p).map(|m| m.eval(p))
    }

    /// Scans every piece and keeps the worst point.
    pub fn scan(&self, nu: usize, nv: usize) -> Result<DilatationReport> {
        let reports = self.pieces.iter().map(|(_, m)| scan(m, nu, nv)).collect::<Result<Vec<_>>>()?;
        Ok(DilatationReport::merge(reports, "piecewise"))
    }

    pub fn then(&self, outer: &PlanarC1Map) -> PiecewiseMap {
        PiecewiseMap { pieces: self.pieces.iter().map(|(n, m)| (n.clone(), m.then(outer))).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Straightens the horocyclic foliation of a thin rectangle:
/// `(x, y) ↦ ((x − c(y))/y, ln(y/y_low))` where `x = c(y)` is the pinned side.
///
/// Each leaf goes isometrically to a horizontal segment and the pinned side
/// becomes `{0} × [0, height]`.
pub fn straighten_horocyclic(r: &ThinRectangle, side: Side) -> Result<PlanarC1Map> {
    if r.y_low < 1.0 {
        return Err(Error::invalid("rectangle is not normalized above y = 1"));
    }
    if side == Side::Right && !(r.height > 1.0) {
        return Err(Error::invalid("pinning the right side needs height > 1"));
    }
    let pin = match side {
        Side::Left => r.left,
        Side::Right => r.right,
    };
    let (left, right) = (r.left, r.right);
    let (y0, y1) = (r.y_low, r.y_high);
    let (l0, l1) = (y0.ln(), y1.ln());
    let xl = move |y: f64| left.x_at(y).unwrap_or(f64::NAN);
    let xr = move |y: f64| right.x_at(y).unwrap_or(f64::NAN);
    let domain = Domain::custom(
        "thin_rectangle",
        [f64::NAN, f64::NAN, y0, y1],
        move |u, v| {
            let y = (l0 + v * (l1 - l0)).exp();
            let (a, b) = (xl(y), xr(y));
            Complex64::new(a + u * (b - a), y)
        },
        move |p| {
            p.im >= y0 && p.im <= y1 && {
                let (a, b) = (xl(p.im), xr(p.im));
                p.re >= a.min(b) && p.re <= a.max(b)
            }
        },
    );
    let c = move |y: f64| pin.x_at(y).unwrap_or(f64::NAN);
    let dc = move |y: f64| pin.slope_at(y).unwrap_or(f64::NAN);
    Ok(PlanarC1Map::new(
        domain,
        move |p| Complex64::new((p.re - c(p.im)) / p.im, (p.im / y0).ln()),
        move |p| {
            let (x, y) = (p.re, p.im);
            let fx = Complex64::new(1.0 / y, 0.0);
            let fy = Complex64::new(-dc(y) / y - (x - c(y)) / (y * y), 1.0 / y);
            (fx, fy)
        },
    ))
}

/// `z ↦ π/2 + i ln z` from `{a ≤ |z| ≤ b, α ≤ arg z ≤ π/2}` onto
/// `[0, π/2 − α] × [ln a, ln b]`. Holomorphic, so μ vanishes identically.
pub fn sector_to_rect(a: f64, b: f64, alpha: f64) -> Result<PlanarC1Map> {
    if !(0.0 < a && a < b) {
        return Err(Error::invalid(format!("sector radii need 0 < a < b, got a = {a}, b = {b}")));
    }
    if !(0.0 < alpha && alpha < FRAC_PI_2) {
        return Err(Error::invalid(format!("sector angle needs 0 < alpha < π/2, got {alpha}")));
    }
    let domain = Domain::annular_sector(Complex64::new(0.0, 0.0), a, b, alpha, FRAC_PI_2);
    Ok(PlanarC1Map::holomorphic(domain, |z| FRAC_PI_2 + I * z.ln(), |z| I / z))
}

/// Region `{g1(y) ≤ x ≤ g2(y), 0 ≤ y ≤ a}`; `g1`, `g2` return value and slope.
#[derive(Clone)]
pub struct GraphBoundedRegion {
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub a: f64,
}

impl GraphBoundedRegion {
    pub fn new(
        g1: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        g2: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        a: f64,
    ) -> Self {
        Self { g1: Arc::new(g1), g2: Arc::new(g2), a }
    }

    /// Largest gap `g2 − g1`, sampled.
    pub fn max_width(&self) -> f64 {
        (0..=1000)
            .map(|i| {
                let y = self.a * i as f64 / 1000.0;
                (self.g2)(y).0 - (self.g1)(y).0
            })
            .fold(f64::MIN, f64::max)
    }
}

/// `(x, y) ↦ (b (x − g1(y)) / (g2(y) − g1(y)), y)` onto `[0, b] × [0, a]`.
pub fn restretch_horizontal(d: &GraphBoundedRegion, b: f64) -> Result<PlanarC1Map> {
    let n = 1000;
    for i in 0..=n {
        let y = d.a * i as f64 / n as f64;
        let w = (d.g2)(y).0 - (d.g1)(y).0;
        if !(w > 0.0) {
            return Err(Error::invalid(format!("graphs meet or cross at y = {y}")));
        }
    }
    let (g1, g2) = (d.g1.clone(), d.g2.clone());
    let (h1, h2) = (d.g1.clone(), d.g2.clone());
    let lo = (0..=n).map(|i| (d.g1)(d.a * i as f64 / n as f64).0).fold(f64::MAX, f64::min);
    let hi = (0..=n).map(|i| (d.g2)(d.a * i as f64 / n as f64).0).fold(f64::MIN, f64::max);
    let domain = Domain::between_graphs_of_y(d.g1.clone(), d.g2.clone(), 0.0, d.a, [lo, hi]);
    Ok(PlanarC1Map::new(
        domain,
        move |p| {
            let (a, c) = (g1(p.im).0, g2(p.im).0);
            Complex64::new(b * (p.re - a) / (c - a), p.im)
        },
        move |p| {
            let ((a, da), (c, dc)) = (h1(p.im), h2(p.im));
            let w = c - a;
            let t = (p.re - a) / w;
            let fx = Complex64::new(b / w, 0.0);
            // d/dy of b (x − g1) / (g2 − g1)
            let fy = Complex64::new(b * (-da - t * (dc - da)) / w, 1.0);
            (fx, fy)
        },
    ))
}

/// Region `{g1(x) ≤ y ≤ g2(x), 0 ≤ x ≤ w}`.
#[derive(Clone)]
pub struct VerticalGraphRegion {
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub w: f64,
}

impl VerticalGraphRegion {
    pub fn new(
        g1: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        g2: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        w: f64,
    ) -> Self {
        Self { g1: Arc::new(g1), g2: Arc::new(g2), w }
    }
}

/// `(x, y) ↦ (x, l (y − g1(x)) / (g2(x) − g1(x)))` onto `[0, w] × [0, l]`.
///
/// Checks `g2 > g1 ≥ 0`, `|g1'|, |g2'| < eps` and `|l/(g2 − g1) − 1| < eps`
/// on a sample of abscissae and reports the first offending one.
pub fn restretch_vertical(s: &VerticalGraphRegion, l: f64, eps: f64) -> Result<PlanarC1Map> {
    let n = 2000;
    for i in 0..=n {
        let x = s.w * i as f64 / n as f64;
        let ((a, da), (c, dc)) = ((s.g1)(x), (s.g2)(x));
        if !(c > a && a >= 0.0) {
            return Err(Error::Regime(format!("need g2 > g1 >= 0 at x = {x}")));
        }
        if !(da.abs() < eps && dc.abs() < eps) {
            return Err(Error::Regime(format!("graph slope exceeds {eps} at x = {x}")));
        }
        if !((l / (c - a) - 1.0).abs() < eps) {
            return Err(Error::Regime(format!("height ratio off by more than {eps} at x = {x}")));
        }
    }
    let (g1, g2) = (s.g1.clone(), s.g2.clone());
    let (h1, h2) = (s.g1.clone(), s.g2.clone());
    let lo = (0..=n).map(|i| (s.g1)(s.w * i as f64 / n as f64).0).fold(f64::MAX, f64::min);
    let hi = (0..=n).map(|i| (s.g2)(s.w * i as f64 / n as f64).0).fold(f64::MIN, f64::max);
    let domain = Domain::between_graphs_of_x(s.g1.clone(), s.g2.clone(), 0.0, s.w, [lo, hi]);
    Ok(PlanarC1Map::new(
        domain,
        move |p| {
            let (a, c) = (g1(p.re).0, g2(p.re).0);
            Complex64::new(p.re, l * (p.im - a) / (c - a))
        },
        move |p| {
            let ((a, da), (c, dc)) = (h1(p.re), h2(p.re));
            let w = c - a;
            let t = (p.im - a) / w;
            let fx = Complex64::new(1.0, l * (-da - t * (dc - da)) / w);
            let fy = Complex64::new(0.0, l / w);
            (fx, fy)
        },
    ))
}

/// Straightening of a truncated sector, together with the leaf-length
/// profile `g` describing the image of the geodesic side.
#[derive(Debug, Clone)]
pub struct StraightenedSector {
    pub map: PiecewiseMap,
    pub sector: TruncatedSector,
}

impl StraightenedSector {
    /// Abscissa of the image of γ at height `y`.
    pub fn g(&self, y: f64) -> f64 {
        self.sector.leaf_length_fn(y)
    }
}

/// Maps each leaf of the sector foliation isometrically onto the horizontal
/// segment `[0, g(s)] × {s}`.
///
/// The nonnegative half is modelled on `{−1/2 ≤ x ≤ 0, 1 ≤ y ≤ e^H}` with
/// leaves at constant `y`; above the interpolation height this is exactly the
/// horocyclic straightening `(x, y) ↦ ((x + 1/2)/y, ln y)`. The negative half
/// is the mirror image under reflection in the unit circle.
pub fn straighten_sector(s: &TruncatedSector) -> Result<StraightenedSector> {
    let sec = *s;
    let h = s.truncation_height;
    let upper = PlanarC1Map::new(
        Domain::log_strip(-0.5, 0.0, 1.0, h.exp()),
        move |p| {
            let t = p.im.ln();
            Complex64::new((2.0 * p.re + 1.0) * sec.leaf_length_fn(t), t)
        },
        move |p| {
            let t = p.im.ln();
            let (g, dg) = sec.leaf_length_with_slope(t);
            let fx = Complex64::new(2.0 * g, 0.0);
            let fy = Complex64::new((2.0 * p.re + 1.0) * dg / p.im, 1.0 / p.im);
            (fx, fy)
        },
    );
    // reflection in the unit circle: z ↦ 1 / z̄
    let up_eval = upper.clone();
    let lower_domain = upper.domain.mapped(
        "reflected_log_strip",
        Arc::new(|z: Complex64| 1.0 / z.conj()),
        Arc::new(move |z: Complex64| up_eval.domain.contains(1.0 / z.conj())),
    );
    let reflect = PlanarC1Map::new(lower_domain, |z| 1.0 / z.conj(), |z| {
        let w = z.conj();
        (-1.0 / (w * w), I / (w * w))
    });
    let mirror = PlanarC1Map::affine(Domain::rect(-1.0, 1.0, -h, h), [[1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]);
    let lower = reflect.then(&upper).then(&mirror);
    Ok(StraightenedSector {
        map: PiecewiseMap::new(vec![("upper".into(), upper), ("lower".into(), lower)]),
        sector: sec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn identity_has_zero_mu() {
        let m = PlanarC1Map::identity(Domain::rect(0.0, 1.0, 0.0, 1.0));
        let d = dilatation_at(&m, c(0.3, 0.4)).unwrap();
        assert_eq!(d.mu.norm(), 0.0);
        assert_eq!(d.k, 1.0);
    }

    #[test]
    fn shear_dilatation() {
        let m = PlanarC1Map::affine(Domain::rect(0.0, 1.0, 0.0, 1.0), [[1.0, -0.05], [0.0, 1.0]], [0.0, 0.0]);
        let d = dilatation_at(&m, c(0.5, 0.5)).unwrap();
        // |μ| = s/√(4+s²), K = (1+|μ|)/(1−|μ|)
        let s: f64 = 0.05;
        let mu = s / (4.0 + s * s).sqrt();
        assert!((d.k - (1.0 + mu) / (1.0 - mu)).abs() < 1e-14);
        assert!((d.k - 1.05127).abs() < 1e-5);
    }

    #[test]
    fn reflection_is_orientation_failure() {
        let m = PlanarC1Map::affine(Domain::rect(0.0, 1.0, 0.0, 1.0), [[1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]);
        assert!(matches!(dilatation_at(&m, c(0.5, 0.5)), Err(Error::Orientation { .. })));
    }

    #[test]
    fn sector_to_rect_corners() {
        let (a, b, al) = (0.5, 3.0, 0.3);
        let m = sector_to_rect(a, b, al).unwrap();
        let p = m.eval(c(0.0, a));
        assert!(p.re.abs() < 1e-15 && (p.im - a.ln()).abs() < 1e-15);
        let q = m.eval(Complex64::from_polar(b, al));
        assert!((q.re - (FRAC_PI_2 - al)).abs() < 1e-14 && (q.im - b.ln()).abs() < 1e-14);
    }

    #[test]
    fn horocyclic_pin_left_is_vertical() {
        let r = ThinRectangle::vertical(0.0, 0.1, 1.0, 100.0).unwrap();
        let m = straighten_horocyclic(&r, Side::Left).unwrap();
        for y in [1.0, 3.0, 50.0, 100.0] {
            let p = m.eval(c(0.0, y));
            assert_eq!(p.re, 0.0);
            assert!((p.im - y.ln()).abs() < 1e-15);
        }
    }
}
