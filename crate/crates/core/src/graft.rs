//! Grafted thin rectangles, their euclidean models, pentagon pieces, and the
//! comparison of two graftings of a branch complex.
//!
//! A grafted rectangle is a thin rectangle with vertical sides in which a
//! euclidean crescent of angle `w_j` has been inserted along each vertical
//! arc `x = a_j`. Each piece lives in its own chart: hyperbolic pieces in the
//! upper half-plane, crescents as unions of plane sectors of angle below π/4
//! carrying the metric `|dz|/|z|`. Leaves at height `y` are the horocyclic
//! segments together with the circular arcs of radius `y` in the crescents.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    check_almost_isometry, dyadic_additive_error, extend_rect_boundary, max_slope_deviation,
    AlmostIsometryCert, IntervalMap, PiecewiseLinear, RectBoundaryMap, DYADIC_DEPTH,
};
use crate::hyp::{GeodesicArc, ThinRectangle, TruncatedSector};
use crate::maps::{
    restretch_vertical, scan, sector_to_rect, straighten_horocyclic, straighten_sector, Domain,
    PiecewiseMap, PlanarC1Map, Side, VerticalGraphRegion,
};
use crate::tracks::{mul_int, switch_matrix, TrainTrack};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraftedRectangle {
    pub base: ThinRectangle,
    pub arcs: Vec<GeodesicArc>,
    pub weights: Vec<f64>,
    pub eps: f64,
    /// Hyperbolic width of the base (its bottom leaf).
    pub w_h: f64,
    /// Euclidean width, the sum of the weights.
    pub w_e: f64,
    pub w: f64,
}

impl GraftedRectangle {
    /// Abscissae of the grafting arcs, left to right.
    pub fn arc_positions(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.x_at(self.base.y_low).unwrap_or(f64::NAN)).collect()
    }

    /// Total length of the leaf at euclidean height `y`.
    pub fn leaf_length(&self, y: f64) -> Result<f64> {
        Ok(self.base.leaf_length(y)? + self.w_e)
    }
}

/// `n` vertical arcs splitting the base into `n + 1` equal parts.
pub fn evenly_spaced_arcs(r: &ThinRectangle, n: usize) -> Result<Vec<GeodesicArc>> {
    let (x0, x1) = vertical_sides(r)?;
    Ok((1..=n).map(|j| GeodesicArc::vertical(x0 + (x1 - x0) * j as f64 / (n + 1) as f64)).collect())
}

fn vertical_sides(r: &ThinRectangle) -> Result<(f64, f64)> {
    match (r.left, r.right) {
        (GeodesicArc::Vertical { x: a }, GeodesicArc::Vertical { x: b }) => Ok((a, b)),
        _ => Err(Error::invalid("grafting needs a base rectangle with vertical sides")),
    }
}

fn arcs_cross(a: &GeodesicArc, b: &GeodesicArc, y0: f64, y1: f64) -> bool {
    let n = 256;
    let mut sign = 0.0;
    for i in 0..=n {
        let y = (y0.ln() + (y1 / y0).ln() * i as f64 / n as f64).exp();
        let (Ok(xa), Ok(xb)) = (a.x_at(y), b.x_at(y)) else { continue };
        let d = xa - xb;
        if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
            return true;
        }
        sign = d.signum();
    }
    false
}

pub fn graft_rectangle(r: &ThinRectangle, arcs: Vec<GeodesicArc>, weights: Vec<f64>, eps: f64) -> Result<GraftedRectangle> {
    if arcs.len() != weights.len() {
        return Err(Error::invalid("one weight per arc"));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("weights must be positive"));
    }
    if !(r.hyperbolic_width < eps) {
        return Err(Error::Regime(format!("hyperbolic width {} is not below eps = {eps}", r.hyperbolic_width)));
    }
    if !(r.height > 1.0 / eps) {
        return Err(Error::Regime(format!("height {} is not above 1/eps = {}", r.height, 1.0 / eps)));
    }
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            if arcs_cross(&arcs[i], &arcs[j], r.y_low, r.y_high) {
                return Err(Error::invalid(format!("arcs {i} and {j} intersect")));
            }
        }
    }
    let (x0, x1) = vertical_sides(r)?;
    let mut order: Vec<usize> = (0..arcs.len()).collect();
    let mut pos = Vec::with_capacity(arcs.len());
    for a in &arcs {
        match a {
            GeodesicArc::Vertical { x } if *x > x0 && *x < x1 => pos.push(*x),
            GeodesicArc::Vertical { .. } => return Err(Error::invalid("arc does not cross the base")),
            _ => return Err(Error::invalid("grafting arcs must be vertical geodesics")),
        }
    }
    order.sort_by(|&i, &j| pos[i].total_cmp(&pos[j]));
    let arcs: Vec<GeodesicArc> = order.iter().map(|&i| arcs[i]).collect();
    let weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
    let w_e: f64 = weights.iter().sum();
    let w_h = (x1 - x0) / r.y_low;
    Ok(GraftedRectangle { base: *r, arcs, weights, eps, w_h, w_e, w: w_h + w_e })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelRectangle {
    pub h: f64,
    pub w_e: f64,
}

impl ModelRectangle {
    pub fn new(h: f64, w_e: f64) -> Result<Self> {
        if !(h > 0.0 && w_e > 0.0) {
            return Err(Error::invalid("model rectangle needs positive height and width"));
        }
        Ok(Self { h, w_e })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraftOptions {
    /// Smallest euclidean width accepted by `model_map`.
    pub min_euclidean_width: f64,
    /// Scan resolution per piece.
    pub scan: usize,
}

impl Default for GraftOptions {
    fn default() -> Self {
        Self { min_euclidean_width: 1.0, scan: 24 }
    }
}

#[derive(Debug, Clone)]
pub struct ModelMap {
    /// Pieces in their own charts, left to right.
    pub pieces: PiecewiseMap,
    pub model: ModelRectangle,
    pub bottom: IntervalMap,
    pub top: IntervalMap,
    pub bottom_cert: AlmostIsometryCert,
    pub top_cert: AlmostIsometryCert,
    pub k_max: f64,
    /// Whether the euclidean width exceeds `1/ε²`.
    pub asymptotic_regime: bool,
}

/// Sends a raw straightened coordinate `(u, Y_in)` to the model:
/// `Y = Y_in − shift`, `X = u + c0 + c1 e^{−Y}`, then the horizontal
/// restretch `X′ = W_e X / (W_e + c e^{−Y})` (skipped when `W_e = 0`).
fn post_map(c0: f64, c1: f64, c: f64, w_e: f64, shift: f64) -> PlanarC1Map {
    let dom = Domain::rect(-1.0, 1.0, -1.0, 1.0);
    PlanarC1Map::new(
        dom,
        move |p| {
            let y = p.im - shift;
            let e = (-y).exp();
            let x = p.re + c0 + c1 * e;
            if w_e == 0.0 {
                return Complex64::new(x, y);
            }
            Complex64::new(w_e * x / (w_e + c * e), y)
        },
        move |p| {
            let y = p.im - shift;
            let e = (-y).exp();
            if w_e == 0.0 {
                return (Complex64::new(1.0, 0.0), Complex64::new(-c1 * e, 1.0));
            }
            let d = w_e + c * e;
            let n = p.re + c0 + c1 * e;
            let xy = w_e * (-c1 * e * d + n * c * e) / (d * d);
            (Complex64::new(w_e / d, 0.0), Complex64::new(xy, 1.0))
        },
    )
}

fn subsectors(weight: f64) -> (usize, f64) {
    let m = (weight / FRAC_PI_4).floor() as usize + 1;
    (m, weight / m as f64)
}

/// One model piece with the chart points of its bottom and top leaves.
struct Piece {
    label: String,
    map: PlanarC1Map,
    bottom: Vec<(f64, Complex64)>,
    top: Vec<(f64, Complex64)>,
}

fn build_pieces(g: &GraftedRectangle) -> Result<Vec<Piece>> {
    let r = &g.base;
    let (x0, x1) = vertical_sides(r)?;
    let (y0, y1) = (r.y_low, r.y_high);
    let c = g.w_h;
    let mut bounds = vec![x0];
    bounds.extend(g.arc_positions());
    bounds.push(x1);
    let samples = 8;
    let mut pieces = Vec::new();
    let mut e_acc = 0.0;
    for j in 0..bounds.len() - 1 {
        let (a, b) = (bounds[j], bounds[j + 1]);
        let piece = ThinRectangle::vertical(a, b, y0, y1)?;
        let local = straighten_horocyclic(&piece, Side::Left)?;
        let map = local.then(&post_map(e_acc, (a - x0) / y0, c, g.w_e, 0.0));
        let leaf = |y: f64| -> Vec<(f64, Complex64)> {
            (0..=samples)
                .map(|i| {
                    let x = a + (b - a) * i as f64 / samples as f64;
                    ((x - a) / y, Complex64::new(x, y))
                })
                .collect()
        };
        pieces.push(Piece { label: format!("hyperbolic{j}"), map, bottom: leaf(y0), top: leaf(y1) });
        if j < g.arcs.len() {
            let (m, beta) = subsectors(g.weights[j]);
            for i in 0..m {
                let local = sector_to_rect(y0, y1, FRAC_PI_2 - beta)?;
                let post = post_map(e_acc + i as f64 * beta, (b - x0) / y0, c, g.w_e, y0.ln());
                let map = local.then(&post);
                let leaf = |rho: f64| -> Vec<(f64, Complex64)> {
                    (0..=samples)
                        .map(|k| {
                            let th = beta * k as f64 / samples as f64;
                            (th, Complex64::from_polar(rho, FRAC_PI_2 - th))
                        })
                        .collect()
                };
                pieces.push(Piece { label: format!("crescent{j}.{i}"), map, bottom: leaf(y0), top: leaf(y1) });
            }
            e_acc += g.weights[j];
        }
    }
    Ok(pieces)
}

/// Edge map from leaf arclength to model abscissa, sampled piece by piece.
fn edge_map(pieces: &[Piece], top: bool) -> Result<IntervalMap> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut offset = 0.0;
    for p in pieces {
        let pts = if top { &p.top } else { &p.bottom };
        let start = if xs.is_empty() { 0 } else { 1 };
        for &(s, z) in &pts[start..] {
            xs.push(offset + s);
            ys.push(p.map.eval(z).re);
        }
        offset += pts.last().map_or(0.0, |q| q.0);
    }
    ys[0] = 0.0;
    IntervalMap::new(PiecewiseLinear::new(xs, ys)?)
}

/// Euclidean model of a grafted rectangle.
///
/// Hyperbolic pieces are straightened leaf by leaf, crescent sectors go to
/// rectangles under `π/2 + i ln z`, all pieces are shifted into place, and a
/// horizontal restretch absorbs the hyperbolic width so that the image is
/// `[0, W_e] × [0, h]`. Heights are preserved. Without arcs the model is the
/// straightened base itself and `model.w_e` is 0.
pub fn model_map(g: &GraftedRectangle, opts: GraftOptions) -> Result<ModelMap> {
    if !g.arcs.is_empty() && g.w_e < opts.min_euclidean_width {
        return Err(Error::Regime(format!(
            "euclidean width {} is below the threshold {}",
            g.w_e, opts.min_euclidean_width
        )));
    }
    let pieces = build_pieces(g)?;
    let mut k_max: f64 = 1.0;
    for p in &pieces {
        k_max = k_max.max(scan(&p.map, opts.scan, opts.scan)?.k_max);
    }
    let bottom = edge_map(&pieces, false)?;
    let top = edge_map(&pieces, true)?;
    let (bottom_cert, top_cert) = if g.arcs.is_empty() {
        (AlmostIsometryCert::identity(), AlmostIsometryCert::identity())
    } else {
        (check_almost_isometry(&bottom, g.eps, g.eps)?, check_almost_isometry(&top, g.eps, g.eps)?)
    };
    let model = ModelRectangle { h: g.base.height, w_e: g.w_e };
    Ok(ModelMap {
        pieces: PiecewiseMap::new(pieces.into_iter().map(|p| (p.label, p.map)).collect()),
        model,
        bottom,
        top,
        bottom_cert,
        top_cert,
        k_max,
        asymptotic_regime: g.w_e > 1.0 / (g.eps * g.eps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafAudit {
    pub y: f64,
    pub grafted: f64,
    pub hyperbolic: f64,
    pub model: f64,
}

/// Leaf lengths at `n` heights: grafted total, its hyperbolic part, and the
/// model width.
pub fn leaf_audit(g: &GraftedRectangle, n: usize) -> Result<Vec<LeafAudit>> {
    let r = &g.base;
    (0..n)
        .map(|i| {
            let y = (r.y_low.ln() + (r.y_high / r.y_low).ln() * (i as f64 + 0.5) / n as f64).exp();
            let hyp = r.leaf_length(y)?;
            Ok(LeafAudit { y, grafted: hyp + g.w_e, hyperbolic: hyp, model: g.w_e })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SmoothedTop {
    pub grafted: GraftedRectangle,
    /// Defect per crescent strip.
    pub defects: Vec<f64>,
    pub map: PiecewiseMap,
    pub k_max: f64,
    pub top_cert: AlmostIsometryCert,
}

/// Replaces the top of each crescent strip, whose corners make angle
/// `π/2 ± δ_j` with the sides, by the C¹ graph
/// `y = h + δ_j (w_j/π) sin(π x / w_j)` of slope at most `δ_j`, and maps
/// the strip back onto `[0, w_j] × [0, h]` with `restretch_vertical`. The
/// maps act in the straightened strip coordinates, shifted to the strip's
/// position in the model.
pub fn smooth_top(g: &GraftedRectangle, defects: &[f64]) -> Result<SmoothedTop> {
    if defects.len() != g.arcs.len() {
        return Err(Error::invalid("one defect per crescent strip"));
    }
    if let Some(d) = defects.iter().find(|d| !(d.abs() < g.eps)) {
        return Err(Error::Regime(format!("angle defect {d} is not below eps = {}", g.eps)));
    }
    let h = g.base.height;
    let mut pieces = Vec::new();
    let mut k_max: f64 = 1.0;
    let mut offset = 0.0;
    let (mut xs, mut ys) = (vec![0.0], vec![0.0]);
    for (j, (&w, &d)) in g.weights.iter().zip(defects).enumerate() {
        let amp = d * w / PI;
        let region = VerticalGraphRegion::new(
            |_| (0.0, 0.0),
            move |x| (h + amp * (PI * x / w).sin(), d * (PI * x / w).cos()),
            w,
        );
        let local = restretch_vertical(&region, h, g.eps)?;
        k_max = k_max.max(scan(&local, 32, 32)?.k_max);
        let shift = offset;
        let shifted = PlanarC1Map::affine(Domain::rect(0.0, w, 0.0, h), [[1.0, 0.0], [0.0, 1.0]], [shift, 0.0]);
        pieces.push((format!("strip{j}"), local.then(&shifted)));
        // arclength of the smoothed top against its image abscissa
        let n = 64;
        let mut s = *xs.last().unwrap();
        for k in 1..=n {
            let (xa, xb) = (w * (k - 1) as f64 / n as f64, w * k as f64 / n as f64);
            let (ya, yb) = (amp * (PI * xa / w).sin(), amp * (PI * xb / w).sin());
            s += (xb - xa).hypot(yb - ya);
            xs.push(s);
            ys.push(offset + xb);
        }
        offset += w;
    }
    let top_cert = if g.weights.is_empty() {
        AlmostIsometryCert::identity()
    } else {
        check_almost_isometry(&IntervalMap::new(PiecewiseLinear::new(xs, ys)?)?, g.eps, g.eps)?
    };
    Ok(SmoothedTop { grafted: g.clone(), defects: defects.to_vec(), map: PiecewiseMap::new(pieces), k_max, top_cert })
}

/// Truncated sector with a euclidean strip of width `strip_width` glued
/// along its geodesic side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PentagonPiece {
    pub sector: TruncatedSector,
    pub strip_width: f64,
}

#[derive(Debug, Clone)]
pub struct PentagonMap {
    pub map: PiecewiseMap,
    pub height: f64,
    pub width: f64,
}

/// Height-preserving map of the pentagon onto `[0, 2] × [−H, H]`: leaves are
/// straightened, the strip is appended at abscissa `g(s)`, and each leaf of
/// length `g(s) + 2` is rescaled to length 2.
pub fn pentagon_map(p: &PentagonPiece) -> Result<PentagonMap> {
    if (p.strip_width - 2.0).abs() > 1e-12 {
        return Err(Error::invalid("the strip must have euclidean width 2"));
    }
    let s = p.sector;
    if !(s.truncation_height > s.interpolation_height) {
        return Err(Error::Regime("truncation height must exceed ln(1/eps)".into()));
    }
    let h = s.truncation_height;
    let st = straighten_sector(&s)?;
    let restretch = PlanarC1Map::new(
        Domain::rect(0.0, 3.0, -h, h),
        move |q| {
            let g = s.leaf_length_fn(q.im);
            Complex64::new(2.0 * q.re / (g + 2.0), q.im)
        },
        move |q| {
            let (g, dg) = s.leaf_length_with_slope(q.im);
            let d = g + 2.0;
            (Complex64::new(2.0 / d, 0.0), Complex64::new(-2.0 * q.re * dg / (d * d), 1.0))
        },
    );
    let mut pieces: Vec<(String, PlanarC1Map)> =
        st.map.pieces.iter().map(|(n, m)| (format!("sector.{n}"), m.then(&restretch))).collect();
    let strip = PlanarC1Map::new(
        Domain::rect(0.0, 2.0, -h, h),
        move |q| {
            let g = s.leaf_length_fn(q.im);
            Complex64::new(2.0 * (g + q.re) / (g + 2.0), q.im)
        },
        move |q| {
            let (g, dg) = s.leaf_length_with_slope(q.im);
            let d = g + 2.0;
            (Complex64::new(2.0 / d, 0.0), Complex64::new(2.0 * dg * (2.0 - q.re) / (d * d), 1.0))
        },
    );
    pieces.push(("strip".into(), strip));
    Ok(PentagonMap { map: PiecewiseMap::new(pieces), height: 2.0 * h, width: 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub eps: f64,
    pub hyperbolic_width: f64,
    pub height: f64,
    pub graft: GraftOptions,
    pub extension_scan: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { eps: 0.1, hyperbolic_width: 0.05, height: 12.0, graft: GraftOptions::default(), extension_scan: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchComparison {
    pub branch: usize,
    pub k: i64,
    pub scaled_weight: f64,
    pub k_f: f64,
    pub k_h: f64,
    pub k_g: f64,
    pub product: f64,
    pub edge_eps: f64,
    pub edge_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub t: f64,
    pub branches: Vec<BranchComparison>,
    pub k_max: f64,
    pub distance_bound: f64,
    /// `‖t w − k‖∞ / (t min w)`, the relative additive error of the edge maps.
    pub relative_edge_error: f64,
}

/// Relative additive error `c / (2π t min w)` of the horizontal-edge map for
/// an additive discrepancy `c`.
pub fn relative_edge_error(c: f64, t: f64, min_w: f64) -> f64 {
    c / (TAU * t * min_w)
}

/// Per-switch map between the common horizontal edges: breakpoints at the
/// cumulative widths of both sides, affine in between.
fn switch_edge(ins: &[usize], outs: &[usize], src: &[f64], dst: &[f64]) -> Result<PiecewiseLinear> {
    let mut pts = vec![(0.0, 0.0)];
    for side in [ins, outs] {
        let (mut a, mut b) = (0.0, 0.0);
        for &i in side {
            a += src[i];
            b += dst[i];
            pts.push((a, b));
        }
    }
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    pts.dedup_by(|p, q| (p.0 - q.0).abs() <= 1e-9 * (1.0 + q.0));
    if pts.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        return Err(Error::Regime("breakpoints of the two graftings are ordered differently".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    PiecewiseLinear::new(xs, ys)
}

/// Compares the grafting along `2πt·w` with the grafting along the multicurve
/// `2π·k` branch by branch.
///
/// For branch `i`, `f_i` is the model map of the base rectangle grafted along
/// `k_i` arcs of weight 2π and `g_i` that of the same base grafted along
/// `max(k_i, 1)` equal arcs of total weight `2πt w_i`. The model rectangles
/// are joined by the extension `H_i` of the affine-per-subarc edge maps
/// induced at the switches. The composite `g_i⁻¹ ∘ H_i ∘ f_i` has dilatation
/// at most `K_f K_H K_g`; the report gives the largest such product and
/// `½ ln K_max`.
pub fn compare_graftings(
    track: &TrainTrack,
    w: &[f64],
    t: f64,
    k: &[i64],
    opts: CompareOptions,
) -> Result<ComparisonReport> {
    let n = track.branches;
    if w.len() != n || k.len() != n {
        return Err(Error::invalid("one weight and one integer per branch"));
    }
    let m = switch_matrix(track);
    if k.iter().any(|&v| v <= 0) || mul_int(&m, k).iter().any(|&v| v != 0) {
        return Err(Error::invalid("k is not a positive solution of the switch conditions"));
    }
    if w.iter().any(|&v| !(v > 0.0)) || !(t > 0.0) {
        return Err(Error::invalid("weights and t must be positive"));
    }
    let src: Vec<f64> = k.iter().map(|&v| TAU * v as f64).collect();
    let dst: Vec<f64> = w.iter().map(|&v| TAU * t * v).collect();
    let h = opts.height;
    let base = ThinRectangle::vertical(0.0, opts.hyperbolic_width, 1.0, h.exp())?;

    // edge maps: bottom at the switch where the branch leaves, top where it arrives
    let mut bottom: Vec<Option<PiecewiseLinear>> = vec![None; n];
    let mut top: Vec<Option<PiecewiseLinear>> = vec![None; n];
    for s in &track.switches {
        let e = switch_edge(&s.incoming, &s.outgoing, &src, &dst)?;
        for (side, out) in [(&s.incoming, &mut top), (&s.outgoing, &mut bottom)] {
            let mut a = 0.0;
            for &i in side.iter() {
                let win = e.window(a, a + src[i])?;
                let (xs, ys) = win.nodes();
                let y0 = ys[0];
                let ys: Vec<f64> = ys.iter().map(|y| y - y0).collect();
                out[i] = Some(PiecewiseLinear::new(xs.to_vec(), ys)?);
                a += src[i];
            }
        }
    }
    let affine = |i: usize| PiecewiseLinear::affine(src[i], dst[i]);

    let mut branches = Vec::with_capacity(n);
    for i in 0..n {
        let ki = k[i] as usize;
        let gf = graft_rectangle(&base, evenly_spaced_arcs(&base, ki)?, vec![TAU; ki], opts.eps)?;
        let gg = graft_rectangle(&base, evenly_spaced_arcs(&base, ki)?, vec![dst[i] / ki as f64; ki], opts.eps)?;
        let mf = model_map(&gf, opts.graft)?;
        let mg = model_map(&gg, opts.graft)?;
        let b = match bottom[i].take() {
            Some(p) => p,
            None => affine(i)?,
        };
        let tp = match top[i].take() {
            Some(p) => p,
            None => affine(i)?,
        };
        let fb = IntervalMap::new(b.clone())?;
        let ft = IntervalMap::new(tp.clone())?;
        let edge_eps = max_slope_deviation(&fb).max(max_slope_deviation(&ft));
        let edge_c = dyadic_additive_error(&fb, DYADIC_DEPTH).error.max(dyadic_additive_error(&ft, DYADIC_DEPTH).error);
        let rb = RectBoundaryMap::new(src[i], dst[i], h, b, tp)?;
        let ext = extend_rect_boundary(&rb, edge_eps, edge_c)?;
        let k_h = ext.map.scan(opts.extension_scan, opts.extension_scan)?.k_max;
        branches.push(BranchComparison {
            branch: i,
            k: k[i],
            scaled_weight: t * w[i],
            k_f: mf.k_max,
            k_h,
            k_g: mg.k_max,
            product: mf.k_max * k_h * mg.k_max,
            edge_eps,
            edge_c,
        });
    }
    let k_max = branches.iter().map(|b| b.product).fold(1.0, f64::max);
    let dev = w.iter().zip(k).map(|(&x, &v)| (t * x - v as f64).abs()).fold(0.0, f64::max);
    let min_w = w.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport {
        t,
        branches,
        k_max,
        distance_bound: 0.5 * k_max.ln(),
        relative_edge_error: relative_edge_error(TAU * dev, t, min_w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ThinRectangle {
        ThinRectangle::vertical(0.0, 0.05, 1.0, 25f64.exp()).unwrap()
    }

    #[test]
    fn widths_add() {
        let b = base();
        let g = graft_rectangle(&b, evenly_spaced_arcs(&b, 2).unwrap(), vec![1.5, 2.5], 0.1).unwrap();
        assert_eq!(g.w_e, 4.0);
        assert!((g.w - g.w_h - 4.0).abs() < 1e-15);
        let g0 = graft_rectangle(&b, vec![], vec![], 0.1).unwrap();
        assert_eq!(g0.w_e, 0.0);
        assert_eq!(g0.w, g0.w_h);
    }

    #[test]
    fn coincident_arcs_rejected() {
        let b = base();
        let a = GeodesicArc::vertical(0.02);
        assert!(graft_rectangle(&b, vec![a, a], vec![1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn subsector_angles_below_quarter_turn() {
        for w in [0.1, FRAC_PI_4, 3.0, TAU] {
            let (m, beta) = subsectors(w);
            assert!(beta < FRAC_PI_4 && (beta * m as f64 - w).abs() < 1e-12);
        }
    }
}
