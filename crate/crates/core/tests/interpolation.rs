use std::f64::consts::TAU;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use qcgraft::interp::{
    cylinder_interpolate, cylinder_to_disk, disk_to_cylinder, interpolate_identity, interpolation_k, residue,
    truncate_and_glue, CylinderEnd, CylinderMap, CylinderPoint, UnivalentSeries,
};
use qcgraft::Error;

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

// K of z + φ(|z|)·0.2z² over ε ≤ |z| ≤ 2ε, from a dense finite-difference scan.
const K_QUADRATIC: [(f64, f64); 3] = [(0.1, 1.102_169_973_983_929), (0.05, 1.047_526_821_784_890_5), (0.02, 1.018_250_620_770_820_2)];

fn quadratic() -> UnivalentSeries {
    UnivalentSeries::polynomial(vec![c(0.2, 0.0)])
}

#[test]
fn identity_series_needs_no_interpolation() {
    assert_eq!(interpolation_k(&UnivalentSeries::identity(), 0.05, 16, 64).unwrap(), 1.0);
}

#[test]
fn quadratic_interpolation_dilatation() {
    for (eps, k) in K_QUADRATIC {
        let got = interpolation_k(&quadratic(), eps, 96, 360).unwrap();
        assert_abs_diff_eq!(got, k, epsilon = 2e-3);
    }
}

#[test]
fn interpolant_matches_pieces() {
    let g = quadratic();
    let f = interpolate_identity(&g, 0.05).unwrap();
    for z in [c(0.01, 0.02), c(-0.03, 0.0), c(0.0, 0.049)] {
        assert_eq!(f.eval(z), z);
    }
    for z in [c(0.2, 0.1), c(-0.5, 0.3), c(0.0, -0.101)] {
        assert!((f.eval(z) - g.eval(z)).norm() < 1e-15);
    }
    assert!(matches!(interpolate_identity(&g, 0.2), Err(Error::InvalidInput(_))));
}

#[test]
fn koebe_function_values() {
    let k = UnivalentSeries::koebe();
    // z/(1−z)² − z at 0.1
    assert_abs_diff_eq!(k.psi(c(0.1, 0.0)).re, 0.023_456_790_123_456_79, epsilon = 1e-15);
    assert!(k.psi(c(0.1, 0.0)).norm() <= 4.0 * 0.01 / (1.0 - 0.01f64).powi(2));
    // the sandwich is attained by the Koebe function on the real axis
    assert!(k.koebe_sandwich(c(0.5, 0.0)) && k.koebe_sandwich(c(-0.5, 0.0)));
    assert_abs_diff_eq!((k.eval(c(0.5, 0.0)) / 0.5).norm(), 4.0, epsilon = 1e-14);
    k.check_injective(0.9).unwrap();
}

#[test]
fn non_univalent_polynomial_is_detected() {
    // z + 2z² vanishes at −1/2 as well as at 0
    assert!(matches!(UnivalentSeries::polynomial(vec![c(2.0, 0.0)]).check_injective(1.0), Err(Error::Injectivity { .. })));
    assert!(quadratic().check_injective(1.0).is_ok());
}

#[test]
fn cylinder_disk_conjugation() {
    let z = cylinder_to_disk(CylinderPoint { h: 0.5, theta: 0.0 }).unwrap();
    assert_abs_diff_eq!(z.re, (-std::f64::consts::PI).exp(), epsilon = 1e-16);
    assert_abs_diff_eq!(z.re, 0.043_213_918_263_772_25, epsilon = 1e-15);
    let p = disk_to_cylinder(c(0.0, 0.5)).unwrap();
    assert_abs_diff_eq!(p.h, 2f64.ln() / TAU, epsilon = 1e-15);
    assert_abs_diff_eq!(p.theta, TAU / 4.0, epsilon = 1e-15);
    assert!(disk_to_cylinder(c(0.0, 0.0)).is_err());
    assert!(cylinder_to_disk(CylinderPoint { h: -1.0, theta: 0.0 }).is_err());
}

#[test]
fn cylinder_interpolation_keeps_map_low_and_translates_high() {
    let d = c(0.1, 0.05);
    let f = CylinderMap { series: quadratic(), translation: d };
    let h0 = 0.3;
    let ci = cylinder_interpolate(&f, h0, 0.05).unwrap();
    assert!(ci.h1 > h0 && ci.k_max <= 1.05);
    let lift = |w: Complex64| {
        let z = (c(0.0, TAU) * w).exp();
        w + d + (f.series.eval(z) / z).ln() / c(0.0, TAU)
    };
    for x in [0.0, 0.3, 0.77] {
        for h in [0.0, 0.1, h0] {
            let w = c(x, h);
            assert!((ci.cylinder.eval(w) - lift(w)).norm() < 1e-12);
        }
        for h in [ci.h1 + 0.01, ci.h1 + 0.5] {
            let w = c(x, h);
            assert!((ci.cylinder.eval(w) - (w + d)).norm() < 1e-12);
        }
    }
}

#[test]
fn interpolation_rejects_ends_that_escape() {
    let f = CylinderMap { series: quadratic(), translation: c(0.0, -0.5) };
    assert!(matches!(cylinder_interpolate(&f, 0.01, 0.05), Err(Error::Regime(_))));
}

fn pair(a: UnivalentSeries, b: UnivalentSeries) -> Vec<CylinderEnd> {
    vec![
        CylinderEnd { circumference: 1.0, map: CylinderMap { series: a, translation: c(0.0, 0.0) }, h0: 0.3, partner: 1 },
        CylinderEnd { circumference: 1.0, map: CylinderMap { series: b, translation: c(0.1, 0.0) }, h0: 0.3, partner: 0 },
    ]
}

#[test]
fn gluing_identity_ends_is_conformal() {
    let r = truncate_and_glue(&pair(UnivalentSeries::identity(), UnivalentSeries::identity()), 4.0).unwrap();
    assert_eq!(r.k_max, 1.0);
    assert_eq!(r.distance_bound, 0.0);
    assert!(r.ends.iter().all(|e| e.h1 == 2.0));
}

#[test]
fn gluing_improves_with_truncation_height() {
    let ends = pair(quadratic(), UnivalentSeries::polynomial(vec![c(0.0, 0.15), c(0.05, 0.0)]));
    let ks: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&t| truncate_and_glue(&ends, t).unwrap().k_max).collect();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    assert!(matches!(truncate_and_glue(&ends, 0.5), Err(Error::Regime(_))));
}

#[test]
fn gluing_validates_pairing() {
    let mut ends = pair(quadratic(), quadratic());
    ends[1].circumference = 2.0;
    assert!(matches!(truncate_and_glue(&ends, 4.0), Err(Error::InvalidInput(_))));
    ends[1].circumference = 1.0;
    ends[1].partner = 1;
    assert!(matches!(truncate_and_glue(&ends, 4.0), Err(Error::InvalidInput(_))));
}

#[test]
fn residue_of_cylinder_end() {
    assert_abs_diff_eq!(residue(1.0), -1.0 / (TAU * TAU), epsilon = 1e-17);
    assert_abs_diff_eq!(residue(TAU), -1.0, epsilon = 1e-15);
}
