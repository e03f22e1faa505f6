//! Property tests over seeded random inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigskin::animation::{apply_lbs, blend_transforms, compute_frame_features, deform_clip, ContactConfig};
use rigskin::fixtures::{make_character, CharacterParams, Template};
use rigskin::io::{parse_bvh, parse_obj, read_descriptors, read_skeleton_json, read_weights};
use rigskin::math::{axis_angle, compute_facing_frame, yaw, UP};
use rigskin::mesh::extract_edges;
use rigskin::metrics::{ade_mde, cd_b2b, cd_j2b, cd_j2j, deformation_cd, els};
use rigskin::skeleton::{augment_skeleton, ground_skeleton, infer_symmetry_map, AugmentConfig};
use rigskin::solvers::{chamfer, solve_skinning, SolverConfig, TrainingSample};
use rigskin::{Mat3, Mesh, RigidTransform, Rotation6D, Skeleton, Vec3, WeightMatrix};

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = Mat3> {
    (vec3(1.0), 0.0..std::f64::consts::PI)
        .prop_filter("axis", |(a, _)| a.norm() > 1e-3)
        .prop_map(|(a, t)| axis_angle(&a, t))
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (rotation(), vec3(3.0)).prop_map(|(r, t)| RigidTransform::new(r, t))
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(vec3(1.0), 1..max)
}

/// Random tree: joint `j > 0` picks its parent from the joints before it.
fn skeleton(max_joints: usize) -> impl Strategy<Value = Skeleton> {
    (1..=max_joints, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parents = (0..n).map(|j| (j > 0).then(|| rng.gen_range(0..j))).collect();
        let offsets = (0..n)
            .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Skeleton::new((0..n).map(|j| format!("j{j}")).collect(), parents, offsets, None).unwrap()
    })
}

fn stochastic(rows: usize, cols: usize, seed: u64) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect();
    WeightMatrix::from_rows(&rows).unwrap()
}

fn biped(seed: u64) -> Skeleton {
    make_character(Template::BipedBranchy, seed, &CharacterParams::default()).unwrap().skeleton
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation6d_decode_encode(r in rotation()) {
        let back = Rotation6D::encode(&r).unwrap().decode().unwrap();
        prop_assert!((back - r).amax() < 1e-9);
    }

    #[test]
    fn rotation6d_decode_is_rotation(a in vec3(2.0), b in vec3(2.0)) {
        prop_assume!(a.norm() > 1e-3 && a.cross(&b).norm() > 1e-3 * a.norm() * b.norm().max(1e-3));
        let m = Rotation6D::new(a, b).decode().unwrap();
        prop_assert!((m.transpose() * m - Mat3::identity()).amax() < 1e-9);
        prop_assert!((m.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn facing_frame_is_equivariant(
        pts in prop::collection::vec(vec3(1.0), 5),
        angle in -3.0f64..3.0,
        dx in -5.0f64..5.0,
        dz in -5.0f64..5.0,
    ) {
        let f = compute_facing_frame(&pts[0], &pts[1], &pts[2], &pts[3], &pts[4]);
        prop_assume!(f.is_ok());
        let f = f.unwrap();
        prop_assert!(f.lateral.dot(&f.facing).abs() < 1e-9);
        prop_assert!(f.lateral.cross(&f.up).dot(&f.facing) > 0.0);
        prop_assert_eq!(f.origin.dot(&UP), 0.0);
        let g = RigidTransform::new(yaw(angle), Vec3::new(dx, 0.0, dz));
        let m: Vec<Vec3> = pts.iter().map(|p| g.apply(p)).collect();
        let h = compute_facing_frame(&m[0], &m[1], &m[2], &m[3], &m[4]).unwrap();
        prop_assert!((h.facing - g.apply_vector(&f.facing)).amax() < 1e-9);
        prop_assert!((h.lateral - g.apply_vector(&f.lateral)).amax() < 1e-9);
        prop_assert!((h.origin - g.apply(&f.origin)).amax() < 1e-9);
    }

    #[test]
    fn rest_fk_reproduces_globals(s in skeleton(8)) {
        let pose = s.forward_kinematics(&vec![Mat3::identity(); s.joint_count()], Vec3::zeros()).unwrap();
        let g = pose.positions();
        prop_assert_eq!(g.as_slice(), s.globals());
    }

    #[test]
    fn symmetry_map_is_involution(seed in 0u64..20, aug in 0u64..1000) {
        let s = biped(seed);
        let rho = infer_symmetry_map(&s);
        prop_assert!((0..rho.len()).all(|j| rho[rho[j]] == j));
        let cfg = AugmentConfig { insert: 2, remove: 2, ..Default::default() };
        let a = augment_skeleton(&s, aug, &cfg).unwrap();
        let rho = a.rho();
        prop_assert!((0..rho.len()).all(|j| rho[rho[j]] == j));
        prop_assert_eq!(a.parents().iter().filter(|p| p.is_none()).count(), 1);
        prop_assert!(a.bone_segments().iter().all(|(p, q)| (p - q).norm() >= cfg.min_bone_length * (1.0 - 1e-9)));
    }

    #[test]
    fn grounding_is_idempotent(seed in 0u64..20, aug in 0u64..1000) {
        let s = augment_skeleton(&biped(seed), aug, &AugmentConfig::default()).unwrap();
        let once = ground_skeleton(&s);
        let twice = ground_skeleton(&once);
        prop_assert!(once.ground_contact_height().abs() < 1e-12);
        for (a, b) in twice.globals().iter().zip(once.globals()) {
            prop_assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn edges_ignore_face_order(seed in any::<u64>()) {
        let c = make_character(Template::TwoBoneCylinder, 0, &CharacterParams::default()).unwrap();
        let mut faces = c.mesh.faces().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..faces.len()).rev() {
            faces.swap(i, rng.gen_range(0..=i));
        }
        let n = c.mesh.vertex_count();
        prop_assert_eq!(extract_edges(&faces, n).unwrap(), extract_edges(c.mesh.faces(), n).unwrap());
    }

    #[test]
    fn lbs_rest_and_rigid(v in points(30), cols in 1usize..6, seed in any::<u64>(), g in rigid()) {
        let m = Mesh::new(v.clone(), vec![]).unwrap();
        let w = stochastic(v.len(), cols, seed);
        let rest = apply_lbs(&m, &w, &vec![RigidTransform::IDENTITY; cols]).unwrap();
        for (a, b) in rest.vertices.iter().zip(&v) {
            prop_assert!((a - b).amax() < 1e-12);
        }
        let moved = apply_lbs(&m, &w, &vec![g; cols]).unwrap();
        for (a, b) in moved.vertices.iter().zip(&v) {
            prop_assert!((a - g.apply(b)).amax() < 1e-9);
        }
    }

    #[test]
    fn lbs_is_linear_in_weights(
        ts in prop::collection::vec(rigid(), 1..6),
        seed in any::<u64>(),
        alpha in 0.0f64..1.0,
    ) {
        let cols = ts.len();
        let w = stochastic(2, cols, seed);
        let (w1, w2) = (w.row(0), w.row(1));
        let mix: Vec<f64> = w1.iter().zip(w2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let (r, t) = blend_transforms(&mix, &ts);
        let (r1, t1) = blend_transforms(w1, &ts);
        let (r2, t2) = blend_transforms(w2, &ts);
        prop_assert!((r - (r1 * alpha + r2 * (1.0 - alpha))).amax() < 1e-12);
        prop_assert!((t - (t1 * alpha + t2 * (1.0 - alpha))).amax() < 1e-12);
    }

    #[test]
    fn frame_features_ignore_yaw_and_planar_shift(
        seed in any::<u64>(),
        angle in -3.0f64..3.0,
        dx in -5.0f64..5.0,
        dz in -5.0f64..5.0,
    ) {
        let s = biped(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pose = || {
            let local: Vec<Mat3> = (0..s.joint_count())
                .map(|_| axis_angle(&Vec3::new(rng.gen_range(-1.0..1.0), 1.0, rng.gen_range(-1.0..1.0)), rng.gen_range(-0.5..0.5)))
                .collect();
            s.forward_kinematics(&local, Vec3::new(rng.gen_range(-1.0..1.0), 0.0, rng.gen_range(-1.0..1.0))).unwrap()
        };
        let (a, b) = (pose(), pose());
        let g = RigidTransform::new(yaw(angle), Vec3::new(dx, 0.0, dz));
        let moved = |p: &rigskin::PoseTransforms| {
            let mut local = p.local_rotation.clone();
            local[s.root()] = g.rotation * local[s.root()];
            let root = g.apply(&p.global[s.root()].translation);
            s.forward_kinematics(&local, root - s.offsets()[s.root()]).unwrap()
        };
        let cfg = ContactConfig::default();
        let f = compute_frame_features(&s, &a, &b, 1.0 / 30.0, &cfg).unwrap();
        let h = compute_frame_features(&s, &moved(&a), &moved(&b), 1.0 / 30.0, &cfg).unwrap();
        for (x, y) in f.p.iter().zip(&h.p).chain(f.v.iter().zip(&h.v)) {
            prop_assert!((x - y).amax() < 1e-8);
        }
        for (x, y) in f.r.to_array().iter().zip(h.r.to_array()) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn chamfer_symmetric_and_zero(a in points(30), b in points(30)) {
        prop_assert_eq!(chamfer(&a, &b).unwrap(), chamfer(&b, &a).unwrap());
        prop_assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(cd_j2j(&a, &b).unwrap(), cd_j2j(&b, &a).unwrap());
        prop_assert_eq!(deformation_cd(&a, &b).unwrap(), deformation_cd(&b, &a).unwrap());
        prop_assert_eq!(deformation_cd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn bone_metrics_symmetric_and_zero(sa in skeleton(6), sb in skeleton(6)) {
        prop_assume!(sa.joint_count() > 1 && sb.joint_count() > 1);
        let (ba, bb) = (sa.bone_segments(), sb.bone_segments());
        let j2b = cd_j2b(sa.globals(), &ba, sb.globals(), &bb).unwrap();
        prop_assert_eq!(j2b, cd_j2b(sb.globals(), &bb, sa.globals(), &ba).unwrap());
        prop_assert_eq!(cd_j2b(sa.globals(), &ba, sa.globals(), &ba).unwrap(), 0.0);
        prop_assert_eq!(cd_b2b(&ba, &bb).unwrap(), cd_b2b(&bb, &ba).unwrap());
        prop_assert!(cd_b2b(&ba, &ba).unwrap() < 1e-24);
    }

    #[test]
    fn deformation_metric_bounds(a in points(30), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<Vec3> = a.iter().map(|p| p + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 0.0)).collect();
        let (ade, mde) = ade_mde(&a, &b).unwrap();
        prop_assert!(ade <= mde);
        let edges: Vec<(usize, usize)> = (1..a.len()).map(|i| (i - 1, i)).filter(|&(i, j)| a[i] != a[j]).collect();
        prop_assume!(!edges.is_empty());
        prop_assert_eq!(els(&a, &a, &edges).unwrap(), 1.0);
        prop_assert!(els(&b, &a, &edges).unwrap() <= 1.0);
    }

    #[test]
    fn parsers_survive_mutations(seed in any::<u64>(), edits in 1usize..8) {
        let fixtures = [
            include_str!("../fixtures/cube.obj"),
            include_str!("../fixtures/minimal.bvh"),
            include_str!("../fixtures/rotation_orders.bvh"),
            include_str!("../fixtures/arms.json"),
            include_str!("../fixtures/cube.weights"),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet: Vec<char> = " \n\t{}[],.-+e0123456789abcXYZ:\"".chars().collect();
        for text in fixtures {
            let mut chars: Vec<char> = text.chars().collect();
            for _ in 0..edits {
                let i = rng.gen_range(0..chars.len().max(1));
                match rng.gen_range(0..3) {
                    0 if !chars.is_empty() => {
                        chars.remove(i.min(chars.len() - 1));
                    }
                    1 => chars.insert(i.min(chars.len()), alphabet[rng.gen_range(0..alphabet.len())]),
                    _ if !chars.is_empty() => {
                        let k = i.min(chars.len() - 1);
                        chars[k] = alphabet[rng.gen_range(0..alphabet.len())];
                    }
                    _ => {}
                }
            }
            let mutated: String = chars.into_iter().collect();
            // any outcome but a panic is acceptable
            let _ = parse_obj(&mutated);
            let _ = parse_bvh(&mutated);
            let _ = read_skeleton_json(&mutated);
            let _ = read_weights(&mutated);
            let _ = read_descriptors(&mutated);
        }
    }
}

#[test]
fn parsed_bvh_rest_pose_matches_offsets() {
    for text in [include_str!("../fixtures/minimal.bvh"), include_str!("../fixtures/rotation_orders.bvh")] {
        let doc = parse_bvh(text).unwrap();
        let s = &doc.skeleton;
        let pose = s.forward_kinematics(&vec![Mat3::identity(); s.joint_count()], Vec3::zeros()).unwrap();
        for j in 0..s.joint_count() {
            let mut want = Vec3::zeros();
            let mut k = Some(j);
            while let Some(i) = k {
                want += s.offsets()[i];
                k = s.parent(i);
            }
            assert_eq!(pose.global[j].translation, want);
        }
    }
}

#[test]
fn skinning_ignores_sample_order() {
    let c = make_character(Template::TwoBoneCylinder, 3, &CharacterParams::default()).unwrap();
    let clip = &c.gt_clips[0];
    let frames = deform_clip(&c.mesh, &c.gt_weights, &c.skeleton, clip).unwrap();
    let mut samples: Vec<TrainingSample> = clip
        .iter()
        .zip(frames)
        .map(|(pose, gt_deformed)| TrainingSample { pose: pose.clone(), gt_deformed })
        .collect();
    let cfg = SolverConfig::default();
    let a = solve_skinning(&c.mesh, &c.skeleton, &samples, &cfg).unwrap();
    samples.reverse();
    samples.swap(0, 3);
    let b = solve_skinning(&c.mesh, &c.skeleton, &samples, &cfg).unwrap();
    assert!((a.final_loss() - b.final_loss()).abs() <= 1e-6, "{} vs {}", a.final_loss(), b.final_loss());
}
