use approx::assert_abs_diff_eq;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use qcgraft::tracks::{
    covering_bound, is_admissible, lattice_round, mul_exact, multicurve_from_weights, ratio, rational_nullspace,
    switch_matrix, Switch, TrainTrack, WeightVector,
};
use qcgraft::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[test]
fn two_independent_switches_have_disjoint_rows() {
    let t = TrainTrack::new(
        6,
        vec![Switch { incoming: vec![0], outgoing: vec![1, 2] }, Switch { incoming: vec![3, 4], outgoing: vec![5] }],
    )
    .unwrap();
    let m = switch_matrix(&t);
    assert_eq!(m, vec![vec![1, -1, -1, 0, 0, 0], vec![0, 0, 0, 1, 1, -1]]);
}

#[test]
fn admissibility_is_exact() {
    let m = switch_matrix(&TrainTrack::split_merge());
    assert!(is_admissible(&m, &WeightVector::Exact(vec![(1, 1), (3, 10), (7, 10)])));
    assert!(!is_admissible(&m, &WeightVector::Exact(vec![(1, 1), (3, 10), (71, 100)])));
    assert!(!is_admissible(&m, &WeightVector::Exact(vec![(1, 1), (-3, 10), (13, 10)])));
    assert!(is_admissible(&m, &WeightVector::Real(vec![1.0, 0.3, 0.7])));
}

#[test]
fn random_nullspace_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let m: Vec<Vec<i64>> = (0..4).map(|_| (0..7).map(|_| rng.gen_range(-1..=1)).collect()).collect();
        let b = rational_nullspace(&m, 7);
        assert_eq!(b.pivots.len() + b.vectors.len(), 7);
        for v in &b.vectors {
            assert!(mul_exact(&m, v).iter().all(Zero::is_zero));
        }
        // identity block on the free columns makes the basis independent
        for (i, v) in b.vectors.iter().enumerate() {
            for (j, &f) in b.free.iter().enumerate() {
                assert_eq!(v[f], ratio(i64::from(i == j), 1));
            }
        }
    }
}

#[test]
fn identity_block_has_trivial_bound() {
    let b = rational_nullspace(&vec![vec![1, 0], vec![0, 1]], 2);
    assert!(b.vectors.is_empty());
    assert_eq!(covering_bound(&b.vectors).value, 0.0);
}

#[test]
fn segment_lattice_bound() {
    // 1-dim lattice spanned by (2, 2): half the fundamental segment has length √2
    let v = vec![vec![ratio(2, 1), ratio(2, 1)]];
    let c = covering_bound(&v);
    assert_abs_diff_eq!(c.value, std::f64::consts::SQRT_2, epsilon = 1e-14);
    assert!(c.value >= std::f64::consts::SQRT_2);
}

#[test]
fn plane_lattice_covers_random_points() {
    // lattice spanned by (1,1,0) and (1,0,1); every point of its span lies
    // within C of a lattice point
    let b = rational_nullspace(&vec![vec![1, -1, -1]], 3);
    let cb = covering_bound(&b.vectors);
    let basis: Vec<Vec<f64>> = cb.lattice.iter().map(|v| v.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (s, t): (f64, f64) = (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let p: Vec<f64> = (0..3).map(|i| s * basis[0][i] + t * basis[1][i]).collect();
        let mut best = f64::INFINITY;
        for a in (s.floor() as i64 - 1)..=(s.ceil() as i64 + 1) {
            for c in (t.floor() as i64 - 1)..=(t.ceil() as i64 + 1) {
                let d = (0..3)
                    .map(|i| (p[i] - a as f64 * basis[0][i] - c as f64 * basis[1][i]).abs())
                    .fold(0.0, f64::max);
                best = best.min(d);
            }
        }
        assert!(best <= cb.value);
    }
}

#[test]
fn integral_scaling_is_returned_unchanged() {
    let m = switch_matrix(&TrainTrack::split_merge());
    let r = lattice_round(&m, &[1.0, 0.3, 0.7], 10.0).unwrap();
    assert_eq!(r.k, vec![10, 3, 7]);
    assert!(r.max_deviation < 1e-12);
}

#[test]
fn split_merge_at_t_ten() {
    let m = switch_matrix(&TrainTrack::split_merge());
    let r = lattice_round(&m, &[1.0, INV_SQRT2, 1.0 - INV_SQRT2], 10.0).unwrap();
    assert_eq!(r.k, vec![10, 7, 3]);
    // 10/√2 − 7
    assert_abs_diff_eq!(r.max_deviation, 0.071_067_811_865_475_24, epsilon = 1e-12);
    assert!(r.max_deviation <= r.bound_c);
}

#[test]
fn below_threshold_reports_threshold() {
    let m = switch_matrix(&TrainTrack::split_merge());
    let x = [1.0, 0.95, 0.05];
    match lattice_round(&m, &x, 1.0) {
        Err(Error::BelowThreshold { t, threshold }) => {
            assert_eq!(t, 1.0);
            let c = covering_bound(&rational_nullspace(&m, 3).vectors).value;
            assert_abs_diff_eq!(threshold, c / 0.05, epsilon = 1e-9);
        }
        other => panic!("expected a threshold error, got {other:?}"),
    }
}

#[test]
fn tracing_split_merge_multicurve() {
    let t = TrainTrack::split_merge();
    let mc = multicurve_from_weights(&t, &[10, 7, 3]).unwrap();
    assert_eq!(mc.count(), 10);
    // each strand of each branch is traversed exactly once
    assert_eq!(mc.crossings, 20);
    let through_b = mc.components.iter().filter(|w| w.contains(&1)).count();
    let through_c = mc.components.iter().filter(|w| w.contains(&2)).count();
    assert_eq!((through_b, through_c), (7, 3));
    assert!(mc.components.iter().all(|w| w.len() == 2 && w.contains(&0)));

    assert_eq!(multicurve_from_weights(&t, &[0, 0, 0]).unwrap().count(), 0);
    assert!(matches!(multicurve_from_weights(&t, &[10, 7, 4]), Err(Error::Pairing(_))));
}

#[test]
fn loop_branch_gives_parallel_curves() {
    let t = TrainTrack::new(1, vec![Switch { incoming: vec![0], outgoing: vec![0] }]).unwrap();
    let mc = multicurve_from_weights(&t, &[3]).unwrap();
    assert_eq!(mc.count(), 3);
    assert!(mc.components.iter().all(|w| w == &vec![0]));
}

#[test]
fn exact_weights_round_trip_through_serde() {
    let w = WeightVector::Exact(vec![(1, 2), (3, 4)]);
    let s = serde_json::to_string(&w).unwrap();
    assert_eq!(serde_json::from_str::<WeightVector>(&s).unwrap(), w);
    let _: BigRational = ratio(1, 2);
}
