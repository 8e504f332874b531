//! Upper half-plane primitives: points, geodesic arcs, horocyclic leaves,
//! thin rectangles and truncated 2π/3-sectors.
//!
//! Lengths are hyperbolic (metric |dz|/Im z) unless stated otherwise. A
//! horizontal segment at height `y` is a horocyclic leaf based at ∞ and its
//! length is its euclidean length divided by `y`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// ln √3, the length of the perpendicular from the centre of an ideal
/// triangle to one of its sides.
pub const LN_SQRT3: f64 = 0.549_306_144_334_054_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    pub x: f64,
    pub y: f64,
}

impl HalfPlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid(format!("half-plane point needs y > 0, got ({x}, {y})")));
        }
        Ok(Self { x, y })
    }

    pub fn distance(&self, other: &HalfPlanePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let arg = 1.0 + (dx * dx + dy * dy) / (2.0 * self.y * other.y);
        arg.acosh()
    }
}

/// A geodesic arc in the upper half-plane.
///
/// A semicircle is parametrized by `center + radius·e^{iθ}` for θ in
/// `[theta_min, theta_max] ⊂ (0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeodesicArc {
    Vertical { x: f64 },
    Semicircle { center: f64, radius: f64, theta_min: f64, theta_max: f64 },
}

impl GeodesicArc {
    pub fn vertical(x: f64) -> Self {
        GeodesicArc::Vertical { x }
    }

    pub fn semicircle(center: f64, radius: f64, theta_min: f64, theta_max: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("semicircle radius must be positive"));
        }
        if !(0.0 <= theta_min && theta_min < theta_max && theta_max <= std::f64::consts::PI) {
            return Err(Error::invalid("semicircle parameter interval must be nondegenerate in [0, π]"));
        }
        Ok(GeodesicArc::Semicircle { center, radius, theta_min, theta_max })
    }

    /// Right quarter of a semicircle (θ ∈ [0, π/2]).
    pub fn semicircle_east(center: f64, radius: f64) -> Result<Self> {
        Self::semicircle(center, radius, 0.0, std::f64::consts::FRAC_PI_2)
    }

    /// Left quarter of a semicircle (θ ∈ [π/2, π]).
    pub fn semicircle_west(center: f64, radius: f64) -> Result<Self> {
        Self::semicircle(center, radius, std::f64::consts::FRAC_PI_2, std::f64::consts::PI)
    }

    fn theta_at(&self, y: f64) -> Result<f64> {
        match *self {
            GeodesicArc::Vertical { .. } => unreachable!(),
            GeodesicArc::Semicircle { radius, theta_min, theta_max, .. } => {
                if !(y > 0.0) || y > radius {
                    return Err(Error::NoIntersection { y });
                }
                let t1 = (y / radius).asin();
                let t2 = std::f64::consts::PI - t1;
                let tol = 1e-14;
                let in1 = t1 >= theta_min - tol && t1 <= theta_max + tol;
                let in2 = t2 >= theta_min - tol && t2 <= theta_max + tol;
                match (in1, in2) {
                    (true, false) => Ok(t1),
                    (false, true) => Ok(t2),
                    // at the apex the two candidates coincide
                    (true, true) if (t1 - t2).abs() < 1e-12 => Ok(t1),
                    (true, true) => Err(Error::invalid(format!(
                        "arc meets the horizontal line at height {y} twice"
                    ))),
                    (false, false) => Err(Error::NoIntersection { y }),
                }
            }
        }
    }

    /// Abscissa of the arc at euclidean height `y`.
    pub fn x_at(&self, y: f64) -> Result<f64> {
        match *self {
            GeodesicArc::Vertical { x } => {
                if y > 0.0 {
                    Ok(x)
                } else {
                    Err(Error::NoIntersection { y })
                }
            }
            GeodesicArc::Semicircle { center, radius, .. } => {
                let t = self.theta_at(y)?;
                Ok(center + radius * t.cos())
            }
        }
    }

    /// dx/dy along the arc at height `y`.
    pub fn slope_at(&self, y: f64) -> Result<f64> {
        match *self {
            GeodesicArc::Vertical { .. } => Ok(0.0),
            GeodesicArc::Semicircle { .. } => {
                let t = self.theta_at(y)?;
                // x = c + R cos θ, y = R sin θ
                Ok(-t.tan())
            }
        }
    }

    /// Hyperbolic length of the part of the arc between heights `y0 < y1`.
    pub fn length_between(&self, y0: f64, y1: f64) -> Result<f64> {
        match *self {
            GeodesicArc::Vertical { .. } => {
                if !(y0 > 0.0 && y1 > 0.0) {
                    return Err(Error::NoIntersection { y: y0.min(y1) });
                }
                Ok((y1 / y0).ln().abs())
            }
            GeodesicArc::Semicircle { .. } => {
                let a = self.theta_at(y0)?;
                let b = self.theta_at(y1)?;
                let f = |t: f64| (t / 2.0).tan().ln();
                Ok((f(b) - f(a)).abs())
            }
        }
    }

    fn scaled(&self, s: f64) -> Self {
        match *self {
            GeodesicArc::Vertical { x } => GeodesicArc::Vertical { x: s * x },
            GeodesicArc::Semicircle { center, radius, theta_min, theta_max } => {
                GeodesicArc::Semicircle { center: s * center, radius: s * radius, theta_min, theta_max }
            }
        }
    }
}

/// Hyperbolic length of the horocyclic segment at height `y` between two arcs.
pub fn leaf_length(left: &GeodesicArc, right: &GeodesicArc, y: f64) -> Result<f64> {
    let xl = left.x_at(y)?;
    let xr = right.x_at(y)?;
    Ok((xr - xl).abs() / y)
}

/// Guaranteed truncation height ln(1/L) when horocyclic edges have length O(L).
pub fn truncation_height(l: f64) -> Result<f64> {
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::invalid(format!("truncation height needs 0 < L < 1, got {l}")));
    }
    Ok(-l.ln())
}

/// Region between two geodesic sides and two horocyclic leaves, normalized
/// so that the lower leaf sits at or above y = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinRectangle {
    pub left: GeodesicArc,
    pub right: GeodesicArc,
    pub y_low: f64,
    pub y_high: f64,
    pub hyperbolic_width: f64,
    pub height: f64,
}

impl ThinRectangle {
    /// Builds the rectangle, rescaling vertically first when `y_low < 1`.
    pub fn new(left: GeodesicArc, right: GeodesicArc, y_low: f64, y_high: f64) -> Result<Self> {
        if !(y_low > 0.0 && y_high > y_low) {
            return Err(Error::invalid("thin rectangle needs 0 < y_low < y_high"));
        }
        let s = if y_low < 1.0 { 1.0 / y_low } else { 1.0 };
        let (left, right) = (left.scaled(s), right.scaled(s));
        let (y_low, y_high) = (s * y_low, s * y_high);

        let mut width = 0.0f64;
        let n = 512;
        let (l0, l1) = (y_low.ln(), y_high.ln());
        for i in 0..=n {
            let y = (l0 + (l1 - l0) * i as f64 / n as f64).exp();
            width = width.max(leaf_length(&left, &right, y)?);
        }
        let height = left.length_between(y_low, y_high)?;
        Ok(Self { left, right, y_low, y_high, hyperbolic_width: width, height })
    }

    /// Rectangle with vertical sides `x = x0` and `x = x1`.
    pub fn vertical(x0: f64, x1: f64, y_low: f64, y_high: f64) -> Result<Self> {
        if !(x1 >= x0) {
            return Err(Error::invalid("right side must not lie left of the left side"));
        }
        Self::new(GeodesicArc::vertical(x0), GeodesicArc::vertical(x1), y_low, y_high)
    }

    pub fn leaf_length(&self, y: f64) -> Result<f64> {
        leaf_length(&self.left, &self.right, y)
    }

    pub fn has_vertical_sides(&self) -> bool {
        matches!(self.left, GeodesicArc::Vertical { .. }) && matches!(self.right, GeodesicArc::Vertical { .. })
    }
}

/// Truncated 2π/3-sector of the ideal triangle with vertices −1, 0, ∞.
///
/// The geodesic side γ is the line x = 0 and the sector is the part of the
/// triangle closest to γ, so the horocyclic leaf at height s (y = e^s) runs
/// from x = −1/2 to x = 0 and has length e^{−s}/2. Below the interpolation
/// height D the leaf lengths are a monotone cubic Hermite blend down to the
/// perpendicular from the centre, whose length is ln √3. Negative heights are
/// the mirror image across that perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSector {
    pub eps: f64,
    pub truncation_height: f64,
    pub interpolation_height: f64,
    pub vertex: HalfPlanePoint,
    pub geodesic_side: GeodesicArc,
}

pub const SECTOR_EPS_THRESHOLD: f64 = 0.1;

pub fn build_sector(eps: f64, h: f64) -> Result<TruncatedSector> {
    if !(eps > 0.0 && eps <= SECTOR_EPS_THRESHOLD) {
        return Err(Error::invalid(format!(
            "sector needs 0 < eps <= {SECTOR_EPS_THRESHOLD}, got {eps}"
        )));
    }
    let d = (1.0 / eps).ln();
    if !(h > d) {
        return Err(Error::invalid(format!("truncation height {h} must exceed D = {d}")));
    }
    Ok(TruncatedSector {
        eps,
        truncation_height: h,
        interpolation_height: d,
        vertex: HalfPlanePoint { x: -0.5, y: 3f64.sqrt() / 2.0 },
        geodesic_side: GeodesicArc::vertical(0.0),
    })
}

impl TruncatedSector {
    /// Length of the horocyclic leaf at height `s ≥ 0`.
    pub fn horocyclic_length(s: f64) -> f64 {
        0.5 * (-s).exp()
    }

    fn hermite(&self, s: f64) -> (f64, f64) {
        let d = self.interpolation_height;
        let p0 = LN_SQRT3;
        let p1 = Self::horocyclic_length(d);
        let m0 = 0.0;
        let m1 = -p1;
        let t = s / d;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * p0 + h10 * d * m0 + h01 * p1 + h11 * d * m1;
        let dh00 = (6.0 * t2 - 6.0 * t) / d;
        let dh10 = (3.0 * t2 - 4.0 * t + 1.0) / d;
        let dh01 = (-6.0 * t2 + 6.0 * t) / d;
        let dh11 = (3.0 * t2 - 2.0 * t) / d;
        let dv = dh00 * p0 + dh10 * d * m0 + dh01 * p1 + dh11 * d * m1;
        (v, dv)
    }

    /// Leaf length as a function of signed height.
    pub fn leaf_length_fn(&self, s: f64) -> f64 {
        self.leaf_length_with_slope(s).0
    }

    /// Leaf length and its derivative in the signed height.
    pub fn leaf_length_with_slope(&self, s: f64) -> (f64, f64) {
        let a = s.abs();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        if a >= self.interpolation_height {
            let v = Self::horocyclic_length(a);
            (v, -sign * v)
        } else {
            let (v, dv) = self.hermite(a);
            (v, sign * dv)
        }
    }
}
