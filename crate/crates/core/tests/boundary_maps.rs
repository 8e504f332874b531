use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use qcgraft::boundary::{
    beurling_ahlfors_extend, check_almost_isometry, compose_certs, extend_rect_boundary, inverse_cert,
    quasisymmetry_estimate, subdivide, AlmostIsometryCert, IntervalMap, PiecewiseLinear, RectBoundaryMap,
};
use qcgraft::maps::scan;
use qcgraft::Error;

#[test]
fn identity_has_zero_certificate() {
    let cert = check_almost_isometry(&IntervalMap::identity(5.0), 0.0, 0.0).unwrap();
    assert_eq!((cert.measured_eps, cert.measured_c), (0.0, 0.0));
    assert_eq!(cert.witness, None);
}

#[test]
fn affine_stretch_certificate() {
    let (l1, l2) = (10.0, 10.4);
    let (eps, c) = (0.05, 0.5);
    let f = IntervalMap::affine(l1, l2).unwrap();
    let cert = check_almost_isometry(&f, eps, c).unwrap();
    assert_abs_diff_eq!(cert.measured_eps, 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(cert.measured_c, 0.4, epsilon = 1e-12);
    assert!(matches!(check_almost_isometry(&f, 0.03, c), Err(Error::CertViolation(_))));
    assert!(matches!(check_almost_isometry(&f, eps, 0.3), Err(Error::CertViolation(_))));
}

#[test]
fn concatenation_adds_additive_errors() {
    let piece = IntervalMap::affine(4.0, 4.2).unwrap();
    let n = 5;
    let whole = IntervalMap::concat(&vec![piece; n]).unwrap();
    assert_abs_diff_eq!(whole.target_len(), 21.0, epsilon = 1e-12);
    let cert = check_almost_isometry(&whole, 0.05, n as f64 * 0.2).unwrap();
    assert!(cert.measured_c <= n as f64 * 0.2 + 1e-9);
}

#[test]
fn composition_and_inverse() {
    let a = check_almost_isometry(&IntervalMap::affine(10.0, 10.3).unwrap(), 0.05, 0.3).unwrap();
    let id = AlmostIsometryCert::identity();
    assert_eq!(compose_certs(&a, &id).c, a.c);
    assert_eq!(compose_certs(&a, &id).eps, a.eps);
    let b = compose_certs(&a, &a);
    assert_abs_diff_eq!(b.c, 0.6, epsilon = 1e-15);
    assert!(b.eps <= 3.0 * a.eps);
    let inv = inverse_cert(&a).unwrap();
    assert!(inv.eps <= 2.0 * a.eps && inv.c == a.c);
    // the inverse map itself carries the claimed certificate
    let g = IntervalMap::new(PiecewiseLinear::affine(10.0, 10.3).unwrap().inverse().unwrap()).unwrap();
    check_almost_isometry(&g, inv.eps, inv.c).unwrap();
}

#[test]
fn piecewise_linear_operations() {
    let f = PiecewiseLinear::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
    assert_abs_diff_eq!(f.eval(0.5), 1.0);
    assert_abs_diff_eq!(f.eval(2.0), 2.5);
    assert_abs_diff_eq!(f.antiderivative(3.0), 1.0 + 5.0);
    let g = f.inverse().unwrap();
    for x in [0.0, 0.3, 1.7, 3.0] {
        assert_abs_diff_eq!(g.eval(f.eval(x)), x, epsilon = 1e-14);
    }
    assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap().inverse().is_err());
}

#[test]
fn averaging_extension_of_identity_and_dilation() {
    let window = [-1.0, 1.0, 0.1, 1.0];
    let id = beurling_ahlfors_extend(&PiecewiseLinear::identity(-3.0, 3.0), window).unwrap();
    let dbl = beurling_ahlfors_extend(&PiecewiseLinear::new(vec![-3.0, 3.0], vec![-6.0, 6.0]).unwrap(), window).unwrap();
    for z in [Complex64::new(0.2, 0.3), Complex64::new(-0.7, 0.9)] {
        assert!((id.eval(z) - z).norm() < 1e-12);
        assert!((dbl.eval(z) - 2.0 * z).norm() < 1e-12);
    }
    assert_abs_diff_eq!(scan(&id, 20, 20).unwrap().k_max, 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(scan(&dbl, 20, 20).unwrap().k_max, 1.0, epsilon = 1e-10);
}

#[test]
fn averaging_extension_of_a_kink() {
    let h = PiecewiseLinear::new(vec![-3.0, 0.0, 3.0], vec![-3.0, 0.0, 3.3]).unwrap();
    let f = beurling_ahlfors_extend(&h, [-1.0, 1.0, 0.05, 1.0]).unwrap();
    let k = scan(&f, 60, 60).unwrap().k_max;
    // fitted constant of K ≤ 1 + C·0.1
    assert!(k > 1.0 && (k - 1.0) / 0.1 <= 2.0, "K = {k}");
    assert!(quasisymmetry_estimate(&h, -1.0, 1.0) <= 1.1 + 1e-12);
}

#[test]
fn subdivision_pieces_have_modulus_between_one_and_two() {
    for (w, h) in [(1.0, 1.0), (4.5, 1.0), (7.0, 2.0), (80.0, 20.0), (3.01, 1.5)] {
        let cuts = subdivide(w, h).unwrap();
        assert_eq!(cuts[0], 0.0);
        assert_eq!(*cuts.last().unwrap(), w);
        for p in cuts.windows(2) {
            let len = p[1] - p[0];
            assert!(len >= h - 1e-12 && len <= 2.0 * h + 1e-12, "{w} {h} {cuts:?}");
        }
    }
    assert!(subdivide(0.5, 1.0).is_err());
}

fn stretch_rectangle(w: f64, h: f64, eps: f64) -> RectBoundaryMap {
    let e = PiecewiseLinear::affine(w, w * (1.0 + eps)).unwrap();
    RectBoundaryMap::new(w, w * (1.0 + eps), h, e.clone(), e).unwrap()
}

#[test]
fn identity_boundary_extends_to_identity() {
    let f = RectBoundaryMap::identity(4.0, 1.0);
    let ext = extend_rect_boundary(&f, 0.1, 0.0).unwrap();
    assert_abs_diff_eq!(ext.map.scan(40, 20).unwrap().k_max, 1.0, epsilon = 1e-12);
    let z = Complex64::new(2.3, 0.4);
    assert!((ext.map.eval(z).unwrap() - z).norm() < 1e-12);
}

#[test]
fn stretched_rectangle_extension() {
    // horizontal edges stretched by 1 + eps on a pair of modulus-4 rectangles;
    // the extension is affine with K = 1 + eps
    for eps in [0.1, 0.05] {
        let f = stretch_rectangle(8.0, 2.0, eps);
        let ext = extend_rect_boundary(&f, eps, 8.0 * eps).unwrap();
        let k = ext.map.scan(80, 20).unwrap().k_max;
        assert_abs_diff_eq!(k, 1.0 + eps, epsilon = 1e-9);
    }
}

#[test]
fn extension_agrees_with_boundary_data() {
    let (w1, w2, h) = (80.0, 80.5, 20.0);
    let bottom = PiecewiseLinear::new(vec![0.0, 30.0, 80.0], vec![0.0, 30.25, 80.5]).unwrap();
    let top = PiecewiseLinear::new(vec![0.0, 50.0, 80.0], vec![0.0, 50.4, 80.5]).unwrap();
    let f = RectBoundaryMap::new(w1, w2, h, bottom, top).unwrap();
    let ext = extend_rect_boundary(&f, 0.05, 0.5).unwrap();
    let mut err: f64 = 0.0;
    for i in 0..=400 {
        let s = w1 * i as f64 / 400.0;
        for p in [Complex64::new(s, 0.0), Complex64::new(s, h)] {
            err = err.max((ext.map.eval(p).unwrap() - f.apply(p).unwrap()).norm());
        }
        let t = h * i as f64 / 400.0;
        for p in [Complex64::new(0.0, t), Complex64::new(w1, t)] {
            err = err.max((ext.map.eval(p).unwrap() - f.apply(p).unwrap()).norm());
        }
    }
    assert!(err <= 1e-9, "boundary error {err:e}");
    let k = ext.map.scan(160, 40).unwrap().k_max;
    assert!(k - 1.0 <= 20.0 * 0.025, "K = {k}");
}
