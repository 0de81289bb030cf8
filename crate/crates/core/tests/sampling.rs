mod common;

use common::*;
use proptest::prelude::*;
use vnl::io::triplets::{parse_triplets_csv, triplets_csv};
use vnl::sampling::sample_triplets_with_threads;
use vnl::{sample_triplets, satisfies_r1, satisfies_r2, Point3, SamplingConfig};

fn lift_triplet(d: &vnl::DepthMap, k: &vnl::CameraIntrinsics, t: &vnl::Triplet) -> [V3; 3] {
    t.map(|(r, c)| lift(k, r, c, d.get(r, c).unwrap()))
}

#[test]
fn standard_scene_triplets_reverify() {
    let (gt, _, k) = standard_scene();
    let set = sample_triplets(&gt, &k, &SamplingConfig::new(20_000, 7)).unwrap();
    assert_eq!(set.len(), 20_000);
    assert!(!set.underfull);
    for t in &set.triplets {
        assert!(t.iter().all(|&(r, c)| gt.is_valid(r, c)));
        assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
        assert!(naive_r1_r2(lift_triplet(&gt, &k, t), 120.0, 30.0, 0.6), "{t:?}");
    }
}

#[test]
fn csv_identical_across_thread_counts() {
    let (gt, _, k) = standard_scene();
    let cfg = SamplingConfig::new(5_000, 99);
    let one = triplets_csv(&sample_triplets_with_threads(&gt, &k, &cfg, 1).unwrap());
    let eight = triplets_csv(&sample_triplets_with_threads(&gt, &k, &cfg, 8).unwrap());
    assert_eq!(one.as_bytes(), eight.as_bytes());
    let set = sample_triplets(&gt, &k, &cfg).unwrap();
    assert_eq!(parse_triplets_csv(&one).unwrap(), set.triplets);
}

#[test]
fn different_seeds_differ() {
    let (gt, _, k) = standard_scene();
    let a = sample_triplets(&gt, &k, &SamplingConfig::new(100, 1)).unwrap();
    let b = sample_triplets(&gt, &k, &SamplingConfig::new(100, 2)).unwrap();
    assert_ne!(a.triplets, b.triplets);
}

#[test]
fn impossible_constraints_are_underfull() {
    let (gt, _, k) = standard_scene();
    let cfg = SamplingConfig {
        theta_m: 50.0,
        max_attempts_per_group: 5,
        ..SamplingConfig::new(10, 1)
    };
    let set = sample_triplets(&gt, &k, &cfg).unwrap();
    assert!(set.is_empty() && set.underfull);
    assert_eq!(set.attempts_used, 50);
}

#[test]
fn invalid_config_rejected() {
    let (gt, _, k) = standard_scene();
    for cfg in [
        SamplingConfig { alpha_deg: 20.0, ..SamplingConfig::new(10, 1) },
        SamplingConfig { theta_m: 0.0, ..SamplingConfig::new(10, 1) },
        SamplingConfig::new(0, 1),
    ] {
        assert!(sample_triplets(&gt, &k, &cfg).is_err());
    }
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-3.0..3.0f64, -3.0..3.0f64, 0.5..6.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn r1_r2_agree_with_naive(a in point(), b in point(), c in point(), theta in 0.1..2.0f64) {
        let lib = satisfies_r1(&a.into(), &b.into(), &c.into(), 120.0, 30.0) && satisfies_r2(&a.into(), &b.into(), &c.into(), theta);
        let naive = naive_r1_r2([a, b, c], 120.0, 30.0, theta);
        // The two angle formulas may only disagree at an exact boundary.
        let at_a = vertex_angle_deg(a, b, c);
        let at_b = vertex_angle_deg(b, a, c);
        let near = [at_a, at_b].iter().any(|x| (x - 30.0).abs() < 1e-9 || (x - 120.0).abs() < 1e-9);
        prop_assert!(lib == naive || near);
    }

    #[test]
    fn scaling_up_preserves_acceptance(a in point(), b in point(), c in point(), s in 1.0..5.0f64) {
        let (pa, pb, pc): (Point3, Point3, Point3) = (a.into(), b.into(), c.into());
        if satisfies_r2(&pa, &pb, &pc, 0.6) {
            prop_assert!(satisfies_r2(&(pa * s), &(pb * s), &(pc * s), 0.6));
        }
        let r1 = satisfies_r1(&pa, &pb, &pc, 120.0, 30.0);
        let ang = |o: Point3, p: Point3, q: Point3| vnl::angle_deg(&(p - o), &(q - o)).unwrap_or(f64::NAN);
        let before = ang(pa, pb, pc);
        let after = ang(pa * s, pb * s, pc * s);
        prop_assert!((before - after).abs() < 1e-9 || before.is_nan());
        if r1 && (before - 30.0).abs() > 1e-9 && (before - 120.0).abs() > 1e-9 {
            let b2 = ang(pb, pa, pc);
            if (b2 - 30.0).abs() > 1e-9 && (b2 - 120.0).abs() > 1e-9 {
                prop_assert!(satisfies_r1(&(pa * s), &(pb * s), &(pc * s), 120.0, 30.0));
            }
        }
    }

    #[test]
    fn sampled_triplets_always_valid(seed in 0u64..500) {
        let (_, gt) = smooth_pair(12, 12, 0.0, seed);
        let k = vnl::CameraIntrinsics::new(12.0, 12.0, 5.5, 5.5, 0.001).unwrap();
        let cfg = SamplingConfig { theta_m: 0.2, ..SamplingConfig::new(50, seed) };
        let set = sample_triplets(&gt, &k, &cfg).unwrap();
        for t in &set.triplets {
            let p = lift_triplet(&gt, &k, t);
            prop_assert!(naive_r1_r2(p, 120.0, 30.0, 0.2));
        }
    }
}
