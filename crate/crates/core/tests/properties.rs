use std::collections::HashMap;

use imdeg_core::benchgen::{group_pool, plan_cartesian, plan_random_chains, plan_round_robin, OperatorRef, SourceImage};
use imdeg_core::calibration::{derive_canonical_levels, extrapolate_levels, map_canonical_to_native, StrengthTable};
use imdeg_core::degradations::{catalog, ChainSpec, DegradationSpec, Degrader};
use imdeg_core::image::{decode_image, encode_image, FileFormat, Image};
use imdeg_core::metrics::{psnr, ssim, MetricId};
use imdeg_core::taxonomy::{group_of, Backend, GroupCause, Registry};
use imdeg_core::DeltaPolicy;
use proptest::prelude::*;

fn image(max_side: usize) -> impl Strategy<Value = Image> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0f32..=1.0, w * h * 3).prop_map(move |d| Image::new(w, h, d).unwrap())
    })
}

fn image_pair(min: usize, max: usize) -> impl Strategy<Value = (Image, Image)> {
    (min..=max, min..=max).prop_flat_map(|(w, h)| {
        let n = w * h * 3;
        (prop::collection::vec(0.0f32..=1.0, n), prop::collection::vec(0.0f32..=1.0, n))
            .prop_map(move |(a, b)| (Image::new(w, h, a).unwrap(), Image::new(w, h, b).unwrap()))
    })
}

/// Five strictly monotone strengths in the metric's "stronger" direction.
fn monotone_table() -> impl Strategy<Value = StrengthTable> {
    (any::<bool>(), -50.0f64..50.0, prop::array::uniform5(0.001f64..10.0)).prop_map(|(psnr_like, start, steps)| {
        let (metric, sign) = if psnr_like {
            (MetricId::Psnr, -1.0)
        } else {
            (MetricId::OneMinusSsim, 1.0)
        };
        let mut v = start;
        let strengths = steps
            .iter()
            .map(|s| {
                v += sign * s;
                v
            })
            .collect();
        StrengthTable::new(Backend::Arniqa, "gaussian_blur", metric, strengths, 1, "").unwrap()
    })
}

fn sources(n: usize) -> Vec<SourceImage> {
    (0..n).map(|i| SourceImage::new(format!("i{i}"), format!("{i}.png"))).collect()
}

fn hendrycks_ops() -> Vec<OperatorRef> {
    imdeg_core::list_operators(Backend::Hendrycks).iter().map(OperatorRef::from).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn png_round_trip_is_identity_on_quantized(img in image(24)) {
        let q = img.quantize8();
        let bytes = encode_image(&q, FileFormat::Png).unwrap();
        prop_assert_eq!(decode_image(&bytes).unwrap(), q);
    }

    #[test]
    fn psnr_symmetric_exactly((a, b) in image_pair(1, 20)) {
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn ssim_symmetric((a, b) in image_pair(11, 20)) {
        let d = ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap();
        prop_assert!(d.abs() <= 1e-12, "{}", d);
    }

    #[test]
    fn identity_conventions(img in image(24).prop_filter("ssim window", |i| i.width() >= 11 && i.height() >= 11)) {
        prop_assert_eq!(psnr(&img, &img).unwrap(), 50.0);
        prop_assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn psnr_nonincreasing_in_noise_amplitude(
        noise in prop::collection::vec(-1.0f32..1.0, 8 * 8 * 3),
        amps in prop::collection::vec(0.0f32..0.4, 2..6),
    ) {
        let x = Image::filled(8, 8, [0.5; 3]);
        let mut amps = amps;
        amps.sort_by(f32::total_cmp);
        let mut last = f64::INFINITY;
        for a in amps {
            let y = Image::new(8, 8, noise.iter().map(|n| 0.5 + a * n).collect()).unwrap().clamp();
            let p = psnr(&x, &y).unwrap();
            prop_assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn calibration_self_consistency(t in monotone_table()) {
        let axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        for k in 1..=5 {
            let m = map_canonical_to_native(&axis, &t, k).unwrap();
            prop_assert_eq!(m.level as usize, k);
            prop_assert!(!m.saturated);
        }
        let m = map_canonical_to_native(&axis, &t, 6).unwrap();
        prop_assert_eq!(m.level, 5);
        prop_assert!(m.saturated);
    }

    #[test]
    fn extrapolation_is_linear(t in monotone_table(), m_max in 1usize..10) {
        let axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        let ext = extrapolate_levels(&axis, m_max).unwrap();
        prop_assert_eq!(ext.levels.len(), 5 + m_max);
        prop_assert_eq!(&ext.levels[..5], &t.strengths[..]);
        for w in ext.levels[4..].windows(2) {
            let step = w[1] - w[0];
            prop_assert!((step - axis.delta).abs() <= 1e-12 * axis.delta.abs().max(w[1].abs()).max(1.0));
        }
    }

    #[test]
    fn mapping_is_global_argmin(t in monotone_table(), target in -80.0f64..80.0) {
        let mut axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        axis.levels[0] = target;
        let m = map_canonical_to_native(&axis, &t, 1).unwrap();
        let got = (t.strengths[m.level as usize - 1] - target).abs();
        for (i, v) in t.strengths.iter().enumerate() {
            let d = (v - target).abs();
            prop_assert!(got < d || (got == d && m.level as usize - 1 <= i));
        }
    }

    #[test]
    fn cartesian_cardinality(n in 1usize..12, d in 1usize..=19) {
        let plan = plan_cartesian(&sources(n), &hendrycks_ops()[..d], &[1, 2, 3, 4, 5], 0).unwrap();
        prop_assert_eq!(plan.assignments.len(), n * d * 5);
    }

    #[test]
    fn round_robin_balance(n in 1usize..300, d in 1usize..=19) {
        let ops = &hendrycks_ops()[..d];
        let plan = plan_round_robin(&sources(n), ops, &[1, 2, 3, 4, 5], 0).unwrap();
        let mut counts: HashMap<(String, u8), usize> = HashMap::new();
        for op in ops {
            for l in 1..=5 {
                counts.insert((op.term.clone(), l), 0);
            }
        }
        for a in &plan.assignments {
            let s = &a.chain.specs()[0];
            *counts.get_mut(&(s.term.clone(), s.severity)).unwrap() += 1;
        }
        let max = counts.values().max().unwrap();
        let min = counts.values().min().unwrap();
        prop_assert!(max - min <= 1);
    }

    #[test]
    fn random_chains_have_distinct_groups(seed in any::<u64>(), k in 1usize..=6) {
        let reg = Registry::shipped();
        let pool: Vec<OperatorRef> = Backend::ALL
            .iter()
            .flat_map(|&b| imdeg_core::list_operators(b))
            .map(|d| OperatorRef::from(&d))
            .collect();
        let plan = plan_random_chains(&sources(20), &pool, &reg, k, seed).unwrap();
        let again = plan_random_chains(&sources(20), &pool, &reg, k, seed).unwrap();
        prop_assert_eq!(&plan, &again);
        for a in &plan.assignments {
            let mut groups: Vec<_> =
                a.chain.specs().iter().map(|s| reg.lookup(s.backend, &s.term).unwrap().group).collect();
            groups.sort();
            groups.dedup();
            prop_assert_eq!(groups.len(), k);
        }
    }

    #[test]
    fn chains_stay_in_range(img in image(20).prop_filter("min side", |i| i.width() >= 4 && i.height() >= 4),
                            picks in prop::collection::vec((any::<prop::sample::Index>(), 1u8..=5), 1..4),
                            seed in any::<u64>()) {
        let ops: Vec<_> = catalog().iter().filter(|d| d.available() && !d.needs_assets()).collect();
        let specs = picks
            .iter()
            .map(|(i, l)| {
                let d = ops[i.index(ops.len())];
                DegradationSpec::new(d.backend, d.key, *l, seed).unwrap()
            })
            .collect();
        let chain = ChainSpec::new(specs).unwrap();
        let deg = Degrader::shipped();
        let out = deg.apply_chain(&img, &chain, "p").unwrap();
        prop_assert!(out.same_shape(&img));
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(out, deg.apply_chain(&img, &chain, "p").unwrap());
    }
}

#[test]
fn every_registered_group_round_trips() {
    let reg = Registry::shipped();
    for e in reg.entries() {
        let g = e.canonical_group().expect("valid group");
        if let GroupCause::Fixed(cause) = g.primary_cause {
            assert_eq!(group_of(cause, g.primary_effect).map(|g| g.id), Some(e.group), "{}/{}", e.backend, e.term);
        }
    }
}

#[test]
fn pool_groups_cover_operator_families() {
    let reg = Registry::shipped();
    let groups = group_pool(&hendrycks_ops(), &reg).unwrap();
    assert!(groups.len() >= 8);
}
