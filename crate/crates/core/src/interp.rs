//! Interpolating a univalent map to the identity near the origin, and the
//! same construction transported to half-infinite cylinders.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::maps::{scan, Domain, PlanarC1Map};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesForm {
    /// `z + Σ a_k z^k` with the listed coefficients.
    Polynomial,
    /// `z / (1 − z)²`, all coefficients `a_k = k`.
    Koebe,
}

/// `g(z) = z + a₂z² + … + a_N z^N` on the disk of radius `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivalentSeries {
    /// `a₂, a₃, …`.
    pub coefficients: Vec<Complex64>,
    pub radius: f64,
    pub form: SeriesForm,
}

impl UnivalentSeries {
    pub fn identity() -> Self {
        Self { coefficients: Vec::new(), radius: 1.0, form: SeriesForm::Polynomial }
    }

    pub fn polynomial(coefficients: Vec<Complex64>) -> Self {
        Self { coefficients, radius: 1.0, form: SeriesForm::Polynomial }
    }

    pub fn koebe() -> Self {
        Self { coefficients: (2..=8).map(|k| Complex64::new(k as f64, 0.0)).collect(), radius: 1.0, form: SeriesForm::Koebe }
    }

    /// `Σ k |a_k|`; below 1 the polynomial is univalent on the unit disk.
    pub fn coefficient_budget(&self) -> f64 {
        self.coefficients.iter().enumerate().map(|(i, a)| (i + 2) as f64 * a.norm()).sum()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        z + self.psi(z)
    }

    /// `ψ(z) = g(z) − z`.
    pub fn psi(&self, z: Complex64) -> Complex64 {
        match self.form {
            SeriesForm::Koebe => {
                let w = 1.0 - z;
                z * z * (2.0 - z) / (w * w)
            }
            SeriesForm::Polynomial => {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in self.coefficients.iter().rev() {
                    acc = (acc + a) * z;
                }
                acc * z
            }
        }
    }

    pub fn psi_derivative(&self, z: Complex64) -> Complex64 {
        match self.form {
            SeriesForm::Koebe => {
                let w = 1.0 - z;
                (1.0 + z) / (w * w * w) - 1.0
            }
            SeriesForm::Polynomial => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, a) in self.coefficients.iter().enumerate().rev() {
                    acc = acc * z + a * (i + 2) as f64;
                }
                acc * z
            }
        }
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        1.0 + self.psi_derivative(z)
    }

    /// Spot check of univalence on `|z| ≤ rho`: `g′ ≠ 0` at the samples and
    /// the image of each of 16 concentric circles winds once about 0.
    pub fn check_injective(&self, rho: f64) -> Result<()> {
        let rho = rho.min(self.radius);
        let n = 4096;
        for j in 1..=16 {
            let r = rho * j as f64 / 16.0;
            let r = if self.form == SeriesForm::Koebe { r.min(0.995) } else { r };
            let mut wind = 0.0;
            let mut prev = self.eval(Complex64::new(r, 0.0));
            for k in 1..=n {
                let z = Complex64::from_polar(r, TAU * k as f64 / n as f64);
                if self.derivative(z).norm() == 0.0 {
                    return Err(Error::Injectivity { radius: r });
                }
                let w = self.eval(z);
                wind += (w / prev).arg();
                prev = w;
            }
            if (wind / TAU - 1.0).abs() > 1e-6 {
                return Err(Error::Injectivity { radius: r });
            }
        }
        Ok(())
    }

    /// `1/(1+|z|)² ≤ |g(z)/z| ≤ 1/(1−|z|)²`.
    pub fn koebe_sandwich(&self, z: Complex64) -> bool {
        let r = z.norm();
        let q = (self.eval(z) / z).norm();
        let tol = 1e-12;
        q >= 1.0 / (1.0 + r).powi(2) - tol && q <= 1.0 / (1.0 - r).powi(2) + tol
    }
}

/// Quintic smoothstep from 0 on `[0, ε]` to 1 on `[2ε, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub eps: f64,
}

impl BumpProfile {
    /// `sup |φ′| = SLOPE / ε`.
    pub const SLOPE: f64 = 1.875;

    pub fn value(&self, t: f64) -> f64 {
        let s = ((t - self.eps) / self.eps).clamp(0.0, 1.0);
        s * s * s * (10.0 + s * (6.0 * s - 15.0))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = (t - self.eps) / self.eps;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        30.0 * s * s * (1.0 - s) * (1.0 - s) / self.eps
    }
}

pub const MAX_INTERP_EPS: f64 = 0.1;

pub fn unit_disk() -> Domain {
    Domain::custom(
        "unit_disk",
        [-1.0, 1.0, -1.0, 1.0],
        |u, v| Complex64::from_polar(u, TAU * v),
        |p| p.norm() <= 1.0,
    )
}

/// `G(z) = z + φ(|z|) ψ(z)` with the bump rising on `[s, 2s]`, together with
/// its Wirtinger derivatives `(G_z, G_z̄)`.
fn blend(g: &UnivalentSeries, s: f64) -> (impl Fn(Complex64) -> Complex64 + Clone, impl Fn(Complex64) -> (Complex64, Complex64) + Clone) {
    let bump = BumpProfile { eps: s };
    let (g1, g2) = (g.clone(), g.clone());
    let eval = move |z: Complex64| {
        let r = z.norm();
        if r <= s {
            z
        } else if r >= 2.0 * s {
            g1.eval(z)
        } else {
            z + bump.value(r) * g1.psi(z)
        }
    };
    let wirt = move |z: Complex64| {
        let r = z.norm();
        let one = Complex64::new(1.0, 0.0);
        if r <= s {
            (one, Complex64::new(0.0, 0.0))
        } else if r >= 2.0 * s {
            (g2.derivative(z), Complex64::new(0.0, 0.0))
        } else {
            let (ph, dph) = (bump.value(r), bump.derivative(r));
            let psi = g2.psi(z);
            let gz = one + ph * g2.psi_derivative(z) + 0.5 * dph * psi * z.conj() / r;
            let gzb = 0.5 * dph * psi * z / r;
            (gz, gzb)
        }
    };
    (eval, wirt)
}

fn partials_from_wirtinger(gz: Complex64, gzb: Complex64) -> (Complex64, Complex64) {
    (gz + gzb, I * (gz - gzb))
}

/// The map equal to the identity on `B_ε` and to `g` outside `B_{2ε}`.
pub fn interpolate_identity(g: &UnivalentSeries, eps: f64) -> Result<PlanarC1Map> {
    if !(eps > 0.0 && eps <= MAX_INTERP_EPS) {
        return Err(Error::invalid(format!("eps must lie in (0, {MAX_INTERP_EPS}]")));
    }
    if g.radius < 1.0 {
        return Err(Error::invalid("g must be defined on the unit disk"));
    }
    let (eval, wirt) = blend(g, eps);
    let w2 = wirt.clone();
    let map = PlanarC1Map::new(unit_disk(), eval, move |z| {
        let (a, b) = w2(z);
        partials_from_wirtinger(a, b)
    });
    for j in 0..=64 {
        let r = eps * (1.0 + j as f64 / 64.0);
        for k in 0..256 {
            let z = Complex64::from_polar(r, TAU * k as f64 / 256.0);
            let (a, b) = wirt(z);
            if a.norm_sqr() - b.norm_sqr() <= 0.0 {
                return Err(Error::Injectivity { radius: r });
            }
        }
    }
    Ok(map)
}

/// Maximal dilatation of the interpolated map over the band `ε ≤ |z| ≤ 2ε`,
/// the only place it is not holomorphic.
pub fn interpolation_k(g: &UnivalentSeries, eps: f64, n_r: usize, n_theta: usize) -> Result<f64> {
    let map = interpolate_identity(g, eps)?;
    let band = Domain::annular_sector(Complex64::new(0.0, 0.0), eps, 2.0 * eps, 0.0, TAU);
    Ok(scan(&map.with_domain(band), n_r, n_theta)?.k_max)
}

/// Point of the unit-circumference cylinder: height `h ≥ 0`, angle θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub h: f64,
    pub theta: f64,
}

/// `z = e^{−2πh} e^{iθ}`; the cylinder end at `h = ∞` goes to 0.
pub fn cylinder_to_disk(p: CylinderPoint) -> Result<Complex64> {
    if !(p.h >= 0.0) || !p.h.is_finite() {
        return Err(Error::invalid("height must be finite and nonnegative"));
    }
    Ok(Complex64::from_polar((-TAU * p.h).exp(), p.theta))
}

pub fn disk_to_cylinder(z: Complex64) -> Result<CylinderPoint> {
    let r = z.norm();
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("point must satisfy 0 < |z| ≤ 1"));
    }
    Ok(CylinderPoint { h: -r.ln() / TAU, theta: z.arg().rem_euclid(TAU) })
}

/// Cylinder coordinate `ζ = θ/2π + i h`, so that `z = e^{2πiζ}`.
pub fn zeta(p: CylinderPoint) -> Complex64 {
    Complex64::new(p.theta / TAU, p.h)
}

/// Cylinder map `z ↦ e^{2πi d} g(z)` in the disk model; on the cylinder it
/// is `g` followed by translation by `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMap {
    pub series: UnivalentSeries,
    pub translation: Complex64,
}

#[derive(Debug, Clone)]
pub struct CylinderInterpolation {
    pub h0: f64,
    pub h1: f64,
    /// Disk radius below which the map is a translation.
    pub s: f64,
    pub k_max: f64,
    /// Interpolated map in the disk model.
    pub disk: PlanarC1Map,
    /// Interpolated map in the coordinate `ζ` on the strip `[0,1] × [0, h_top]`.
    pub cylinder: PlanarC1Map,
}

/// Interpolates `f` to a translation high on the cylinder, keeping it equal
/// to `f` for heights up to `h0`. The disk radius `s` starts at
/// `e^{−2π h0}/2` and is halved until the measured dilatation is at most
/// `1 + eps`; `h1 = −ln(s)/2π`.
pub fn cylinder_interpolate(f: &CylinderMap, h0: f64, eps: f64) -> Result<CylinderInterpolation> {
    if !(h0 > 0.0 && eps > 0.0) {
        return Err(Error::invalid("h0 and eps must be positive"));
    }
    let g = &f.series;
    let r0 = (-TAU * h0).exp();
    if r0 >= g.radius {
        return Err(Error::invalid("h0 lies outside the validity disk"));
    }
    let outer = (0..1024)
        .map(|k| g.eval(Complex64::from_polar(r0, TAU * k as f64 / 1024.0)).norm())
        .fold(0.0, f64::max)
        * (-TAU * f.translation.im).exp();
    if outer >= 1.0 {
        return Err(Error::Regime(format!("image of the end above h0 reaches |z| = {outer:.6}")));
    }
    let mut s = (r0 / 2.0).min(MAX_INTERP_EPS);
    let mut k_max = f64::INFINITY;
    for _ in 0..60 {
        k_max = band_k(g, s, 48, 256);
        if k_max <= 1.0 + eps {
            break;
        }
        s /= 2.0;
    }
    if k_max > 1.0 + eps {
        return Err(Error::Regime("dilatation target not reached".into()));
    }
    let h1 = -s.ln() / TAU;
    let (eval, wirt) = blend(g, s);
    let w2 = wirt.clone();
    let rot = (2.0 * PI * I * f.translation).exp();
    let disk = PlanarC1Map::new(unit_disk(), {
        let e = eval.clone();
        move |z| rot * e(z)
    }, move |z| {
        let (a, b) = w2(z);
        let (px, py) = partials_from_wirtinger(a, b);
        (rot * px, rot * py)
    });
    let cylinder = lift_cylinder(eval, wirt, f.translation, h1 + 1.0);
    Ok(CylinderInterpolation { h0, h1, s, k_max, disk, cylinder })
}

/// Lifts a disk-level map with Wirtinger derivatives to the cylinder
/// coordinate: `F(ζ) = ζ + d + log(G(z)/z)/(2πi)`.
fn lift_cylinder(
    eval: impl Fn(Complex64) -> Complex64 + Send + Sync + Clone + 'static,
    wirt: impl Fn(Complex64) -> (Complex64, Complex64) + Send + Sync + Clone + 'static,
    d: Complex64,
    h_top: f64,
) -> PlanarC1Map {
    let e2 = eval.clone();
    PlanarC1Map::new(
        Domain::rect(0.0, 1.0, 0.0, h_top),
        move |w| {
            let z = (2.0 * PI * I * w).exp();
            w + d + (eval(z) / z).ln() / (2.0 * PI * I)
        },
        move |w| {
            let z = (2.0 * PI * I * w).exp();
            let g = e2(z);
            let (gz, gzb) = wirt(z);
            let fz = z * gz / g;
            let fzb = -z.conj() * gzb / g;
            partials_from_wirtinger(fz, fzb)
        },
    )
}

/// Dilatation over the band `s ≤ |z| ≤ 2s` from the analytic derivatives.
fn band_k(g: &UnivalentSeries, s: f64, n_r: usize, n_theta: usize) -> f64 {
    let (_, wirt) = blend(g, s);
    let mut k_max: f64 = 1.0;
    for i in 0..n_r {
        let r = s * (1.0 + (i as f64 + 0.5) / n_r as f64);
        for j in 0..n_theta {
            let z = Complex64::from_polar(r, TAU * j as f64 / n_theta as f64);
            let (a, b) = wirt(z);
            let mu = b.norm() / a.norm();
            k_max = k_max.max((1.0 + mu) / (1.0 - mu));
        }
    }
    k_max
}

/// Residue of the Strebel differential at the pole of a cylinder of
/// circumference `l`.
pub fn residue(l: f64) -> f64 {
    -(l / TAU).powi(2)
}

/// One half-infinite cylinder of a glued pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderEnd {
    pub circumference: f64,
    pub map: CylinderMap,
    /// Height (in circumference units) below which the map must be kept.
    pub h0: f64,
    pub partner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndReport {
    pub circumference: f64,
    pub residue: f64,
    pub s: f64,
    pub h1: f64,
    pub k_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub t: f64,
    pub k_max: f64,
    pub distance_bound: f64,
    pub ends: Vec<EndReport>,
}

/// Truncates every end at height `t` and glues partners along the
/// truncating circles. Each map is interpolated to a translation with disk
/// radius `s = e^{−πt}` (interpolation height `t/2`), so the gluing circles
/// are matched isometrically; `K_max(t)` is the largest dilatation over all
/// interpolation bands.
pub fn truncate_and_glue(ends: &[CylinderEnd], t: f64) -> Result<GlueReport> {
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    for (i, e) in ends.iter().enumerate() {
        let p = ends.get(e.partner).ok_or_else(|| Error::invalid(format!("end {i} has no partner")))?;
        if p.partner != i {
            return Err(Error::invalid(format!("end {i} and its partner are not mutually paired")));
        }
        if (p.circumference - e.circumference).abs() > 1e-12 * e.circumference.max(1.0) {
            return Err(Error::invalid(format!(
                "circumference mismatch: {} vs {}",
                e.circumference, p.circumference
            )));
        }
    }
    let s = (-PI * t).exp();
    let mut reports = Vec::with_capacity(ends.len());
    for e in ends {
        let need = e.h0 + 2f64.ln() / TAU;
        if t / 2.0 < need {
            return Err(Error::Regime(format!("t = {t} must be at least {}", 2.0 * need)));
        }
        let k = band_k(&e.map.series, s, 48, 256);
        reports.push(EndReport {
            circumference: e.circumference,
            residue: residue(e.circumference),
            s,
            h1: t / 2.0,
            k_max: k,
        });
    }
    let k_max = reports.iter().map(|r| r.k_max).fold(1.0, f64::max);
    Ok(GlueReport { t, k_max, distance_bound: 0.5 * k_max.ln(), ends: reports })
}
