//! Randomized invariants over geometry, labels, the model and the metrics.

use proptest::prelude::*;

use reactmix::datasets::{stratified_split, synthetic_skeleton};
use reactmix::embedding::{encode_label, make_unbounded, partition_and_encode, LabelVector, Structure};
use reactmix::metrics::{afd, fid, nn_baseline};
use reactmix::model::{discriminate, Discriminator, Generator, ModelConfig, Widths};
use reactmix::motion::{
    bone_lengths, forward_kinematics, standardize_pair, InteractionPair, MotionSequence, Skeleton, YawTransform,
};
use reactmix::training::{discriminator_config, loss_continuity, loss_continuity_masked, loss_l1, loss_l1_masked};

const JOINTS: usize = 6;
const TINY: Widths = Widths {
    fc: Some(3),
    slice: 4,
    decoder_hidden: 3,
    attention: 4,
    discriminator_hidden: 3,
};

fn skeleton() -> Skeleton {
    synthetic_skeleton(JOINTS).unwrap()
}

fn angles(frames: usize) -> impl Strategy<Value = Vec<Vec<[f64; 3]>>> {
    prop::collection::vec(prop::collection::vec(prop::array::uniform3(-80.0..80.0f64), JOINTS), frames)
}

fn fk_motion(frames: usize) -> impl Strategy<Value = MotionSequence> {
    (angles(frames), prop::collection::vec(prop::array::uniform3(-2.0..2.0f64), frames)).prop_map(|(a, r)| {
        forward_kinematics(&skeleton(), &a, &r, 30.0).unwrap()
    })
}

fn pair() -> impl Strategy<Value = InteractionPair> {
    (2usize..6).prop_flat_map(|t| (fk_motion(t), fk_motion(t))).prop_map(|(a, b)| {
        InteractionPair::new("p", a, b, 0, "s", "d").unwrap()
    })
}

fn raw(frames: std::ops::Range<usize>, joints: usize) -> impl Strategy<Value = MotionSequence> {
    frames.prop_flat_map(move |t| {
        prop::collection::vec(-3.0..3.0f64, t * joints * 3)
            .prop_map(move |c| MotionSequence::new(c, t, joints, 30.0, "s").unwrap())
    })
}

fn max_diff(x: &MotionSequence, y: &MotionSequence) -> f64 {
    x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn distances(seq: &MotionSequence, other: &MotionSequence, t: usize) -> Vec<f64> {
    let mut d = Vec::new();
    for i in 0..seq.joints() {
        for (k, s) in [seq, other].into_iter().enumerate() {
            for j in 0..s.joints() {
                if k == 0 && j <= i {
                    continue;
                }
                let (p, q) = (seq.joint(t, i), s.joint(t, j));
                d.push(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt());
            }
        }
    }
    d
}

fn model(classes: usize) -> (Generator, Discriminator) {
    let cfg = ModelConfig::for_skeleton(&skeleton(), classes, TINY, true).unwrap();
    let d = Discriminator::init(discriminator_config(&cfg), 5).unwrap();
    (Generator::init(cfg, 4).unwrap(), d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fk_preserves_bone_lengths(seq in (1usize..8).prop_flat_map(fk_motion)) {
        let s = skeleton();
        let rest = s.rest_bone_lengths();
        for frame in bone_lengths(&seq, &s).unwrap() {
            for (l, r) in frame.iter().zip(&rest) {
                prop_assert!((l - r).abs() <= 1e-9 * r.max(1.0));
            }
        }
    }

    #[test]
    fn standardization_is_idempotent_and_rigid(p in pair()) {
        let s = skeleton();
        let once = standardize_pair(&p, &s).unwrap();
        let twice = standardize_pair(&once, &s).unwrap();
        prop_assert!(max_diff(&once.motion_a, &twice.motion_a) < 1e-9);
        prop_assert!(max_diff(&once.motion_b, &twice.motion_b) < 1e-9);
        for t in 0..p.frames() {
            let before = distances(&p.motion_a, &p.motion_b, t);
            let after = distances(&once.motion_a, &once.motion_b, t);
            for (x, y) in before.iter().zip(&after) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn standardization_ignores_global_yaw_and_shift(
        p in pair(),
        yaw in -180.0..180.0f64,
        dx in -5.0..5.0f64,
        dz in -5.0..5.0f64,
    ) {
        let s = skeleton();
        let f = YawTransform::rotate_then_shift(yaw, [dx, 0.0, dz]);
        let moved = |m: &MotionSequence| {
            let frames: Vec<Vec<[f64; 3]>> = m.to_frames().into_iter().map(|fr| fr.into_iter().map(&f).collect()).collect();
            MotionSequence::from_frames(&frames, m.frame_rate, m.skeleton_ref.clone()).unwrap()
        };
        let q = InteractionPair { motion_a: moved(&p.motion_a), motion_b: moved(&p.motion_b), ..p.clone() };
        let (x, y) = (standardize_pair(&p, &s).unwrap(), standardize_pair(&q, &s).unwrap());
        prop_assert!(max_diff(&x.motion_a, &y.motion_a) < 1e-6);
        prop_assert!(max_diff(&x.motion_b, &y.motion_b) < 1e-6);
    }

    #[test]
    fn split_partitions_indices(
        classes in prop::collection::vec(0usize..5, 1..60),
        a in 1usize..4,
        b in 1usize..4,
        seed in any::<u64>(),
    ) {
        let fold = stratified_split(&classes, a, b, seed);
        let mut all: Vec<usize> = fold.train.iter().chain(&fold.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..classes.len()).collect::<Vec<_>>());
        prop_assert_eq!(fold.test.len(), classes.len() * b / (a + b));
        prop_assert_eq!(stratified_split(&classes, a, b, seed), fold);
    }

    #[test]
    fn one_hot_is_an_indicator(n in 1usize..12, c in 0usize..12) {
        let label = encode_label(c, n);
        if c >= n {
            prop_assert!(label.is_err());
        } else {
            let v = label.unwrap().values;
            prop_assert_eq!(v.len(), n);
            for (k, x) in v.iter().enumerate() {
                prop_assert_eq!(*x, if k == c { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn labels_reach_only_the_whole_body_channel(
        seq in (1usize..5).prop_flat_map(fk_motion),
        x in prop::collection::vec(-1.0..1.0f64, 3),
        y in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let (g, _) = model(3);
        let s = skeleton();
        let label = |v: &[f64]| make_unbounded(&v.iter().copied().enumerate().collect(), 3).unwrap();
        let ex = partition_and_encode(&seq, &s, &label(&x), &g.config.layout, &g.params).unwrap();
        let ey = partition_and_encode(&seq, &s, &label(&y), &g.config.layout, &g.params).unwrap();
        for st in Structure::ALL {
            if st != Structure::WholeBody {
                prop_assert_eq!(ex.get(st), ey.get(st));
            }
        }
        if x != y {
            prop_assert_ne!(ex.get(Structure::WholeBody), ey.get(Structure::WholeBody));
        }
    }

    #[test]
    fn generator_keeps_length_and_attention_is_a_simplex(
        seq in (1usize..7).prop_flat_map(fk_motion),
        c in 0usize..3,
    ) {
        let (g, d) = model(3);
        let tr = g.trace(&seq, &encode_label(c, 3).unwrap()).unwrap();
        prop_assert_eq!(tr.output.frames(), seq.frames());
        prop_assert_eq!(tr.output.joints(), seq.joints());
        for row in tr.attention_forward.iter().chain(&tr.attention_backward) {
            prop_assert_eq!(row.len(), seq.frames());
            prop_assert!(row.iter().all(|&w| w >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        let probs = discriminate(&tr.output, &d).unwrap();
        prop_assert_eq!(probs.len(), 4);
        prop_assert!(probs.iter().all(|&p| p >= 0.0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn masked_losses_ignore_padding(
        g in raw(1..6, 2),
        pad in prop::collection::vec(-3.0..3.0f64, 2 * 6 * 2),
        extra in 1usize..3,
    ) {
        let t = g.frames();
        let truth = g.map_coords(|v| 0.5 * v + 0.1).unwrap();
        let padded = |m: &MotionSequence, fill: &[f64]| {
            let mut c = m.coords().to_vec();
            c.extend_from_slice(&fill[..extra * 6]);
            MotionSequence::new(c, t + extra, 2, 30.0, "s").unwrap()
        };
        let mask: Vec<bool> = (0..t + extra).map(|k| k < t).collect();
        let (pg, pt) = (padded(&g, &pad), padded(&truth, &pad[12..]));
        prop_assert_eq!(loss_l1_masked(&pg, &pt, &mask).unwrap(), loss_l1(&g, &truth).unwrap());
        if t > 1 {
            prop_assert_eq!(
                loss_continuity_masked(&pg, &pt, &mask).unwrap(),
                loss_continuity(&g, &truth).unwrap()
            );
        }
    }

    #[test]
    fn afd_is_a_pseudometric(
        (x, y, z) in (1usize..8, 1usize..5).prop_flat_map(|(t, j)| (raw(t..t + 1, j), raw(t..t + 1, j), raw(t..t + 1, j))),
    ) {
        let (xy, yx, xz, zy) = (afd(&x, &y).unwrap(), afd(&y, &x).unwrap(), afd(&x, &z).unwrap(), afd(&z, &y).unwrap());
        prop_assert!(xy >= 0.0);
        prop_assert_eq!(afd(&x, &x).unwrap(), 0.0);
        prop_assert!((xy - yx).abs() < 1e-12);
        prop_assert!(xy <= xz + zy + 1e-12);
    }

    #[test]
    fn fid_is_zero_on_itself_and_symmetric(
        (x, y) in (1usize..5).prop_flat_map(|d| {
            let set = prop::collection::vec(prop::collection::vec(-2.0..2.0f64, d), 3..24);
            (set.clone(), set)
        }),
    ) {
        prop_assert!(fid(&x, &x).unwrap().value.abs() <= 1e-6);
        let (a, b) = (fid(&x, &y).unwrap().value, fid(&y, &x).unwrap().value);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-6 * a.max(1.0));
    }

    #[test]
    fn nn_baseline_is_the_afd_argmin(
        train in prop::collection::vec((raw(2..7, 2), raw(2..3, 2)), 1..6),
        query in raw(2..7, 2),
    ) {
        let pairs: Vec<InteractionPair> = train
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let b = b.resample(a.frames()).unwrap();
                InteractionPair::new(format!("p{i}"), a, b, 0, "s", "d").unwrap()
            })
            .collect();
        let (k, b) = nn_baseline(&pairs, &query).unwrap();
        let d = |p: &InteractionPair| afd(&query.resample(p.motion_a.frames()).unwrap(), &p.motion_a).unwrap();
        let best = d(&pairs[k]);
        prop_assert!(pairs.iter().all(|p| best <= d(p)));
        prop_assert!(pairs[..k].iter().all(|p| best < d(p)));
        prop_assert_eq!(&b, &pairs[k].motion_b);
    }

    #[test]
    fn zero_label_generation_is_deterministic(seq in (1usize..5).prop_flat_map(fk_motion)) {
        let (g, _) = model(2);
        let zero = g.generate(&seq, &LabelVector::zeros(2)).unwrap();
        prop_assert_eq!(&zero, &g.generate(&seq, &LabelVector::zeros(2)).unwrap());
    }
}
