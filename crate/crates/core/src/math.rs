//! Rotation representations, rigid transforms and the character facing frame.
//!
//! World up is `+y` and the ground is the plane `y = 0`. A character whose
//! left side points along `+x` faces `+z`.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;

/// World up axis.
pub const UP: Vec3 = Vec3::new(0.0, 1.0, 0.0);

/// Mirror across the sagittal (`x = 0`) plane, applied component-wise.
pub const MIRROR: Vec3 = Vec3::new(-1.0, 1.0, 1.0);

const ORTHONORMAL_TOL: f64 = 1e-6;
const MIN_PARALLEL_ANGLE: f64 = 1e-6;

/// Continuous 6D rotation encoding: the first two columns of a rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation6D {
    pub a: Vec3,
    pub b: Vec3,
}

impl Rotation6D {
    pub const IDENTITY: Rotation6D = Rotation6D {
        a: Vec3::new(1.0, 0.0, 0.0),
        b: Vec3::new(0.0, 1.0, 0.0),
    };

    pub fn new(a: Vec3, b: Vec3) -> Self {
        Rotation6D { a, b }
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Rotation6D {
            a: Vec3::new(v[0], v[1], v[2]),
            b: Vec3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a.x, self.a.y, self.a.z, self.b.x, self.b.y, self.b.z]
    }

    /// Gram-Schmidt on the two stored columns; the third column is their cross product.
    pub fn decode(&self) -> Result<Mat3> {
        if !self.a.iter().chain(self.b.iter()).all(|v| v.is_finite()) {
            return Err(Error::DegenerateRotation("non-finite component"));
        }
        let a_norm = self.a.norm();
        if a_norm < 1e-12 {
            return Err(Error::DegenerateRotation("first column is zero"));
        }
        let x = self.a / a_norm;
        let b_perp = self.b - x * x.dot(&self.b);
        let b_norm = self.b.norm();
        if b_norm < 1e-12 || b_perp.norm() <= b_norm * MIN_PARALLEL_ANGLE.sin() {
            return Err(Error::DegenerateRotation("columns are parallel"));
        }
        let y = b_perp / b_perp.norm();
        let z = x.cross(&y);
        Ok(Mat3::from_columns(&[x, y, z]))
    }

    pub fn encode(m: &Mat3) -> Result<Rotation6D> {
        check_rotation(m)?;
        Ok(Rotation6D {
            a: m.column(0).into_owned(),
            b: m.column(1).into_owned(),
        })
    }
}

/// Largest absolute entry of `MᵀM − I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).abs().max()
}

pub fn check_rotation(m: &Mat3) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NotARotation(f64::INFINITY));
    }
    let err = orthonormality_error(m);
    if err > ORTHONORMAL_TOL || m.determinant() <= 0.0 {
        return Err(Error::NotARotation(err));
    }
    Ok(())
}

/// Rotation of `angle` radians about a unit `axis`.
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let unit = nalgebra::Unit::new_normalize(*axis);
    nalgebra::Rotation3::from_axis_angle(&unit, angle).into_inner()
}

/// Rotation about the world up axis.
pub fn yaw(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.index()] = 1.0;
        v
    }

    pub fn rotation(self, angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        match self {
            Axis::X => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            Axis::Y => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            Axis::Z => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }
}

/// Intrinsic Euler composition `R = R_a0(θ0) · R_a1(θ1) · R_a2(θ2)`, radians.
pub fn euler_to_matrix(order: [Axis; 3], angles: [f64; 3]) -> Mat3 {
    order[0].rotation(angles[0]) * order[1].rotation(angles[1]) * order[2].rotation(angles[2])
}

/// Inverse of [`euler_to_matrix`] for Tait-Bryan orders (three distinct axes).
///
/// The middle angle is returned in `[-π/2, π/2]`. At gimbal lock the last
/// angle is set to zero.
pub fn matrix_to_euler(order: [Axis; 3], m: &Mat3) -> [f64; 3] {
    let (i, j, k) = (order[0].index(), order[1].index(), order[2].index());
    debug_assert!(i != j && j != k && i != k);
    // +1 for cyclic orders (XYZ, YZX, ZXY)
    let s = if (j + 3 - i) % 3 == 1 { 1.0 } else { -1.0 };
    let sin_mid = (s * m[(i, k)]).clamp(-1.0, 1.0);
    let mid = sin_mid.asin();
    let cos_mid = (m[(i, i)].powi(2) + m[(i, j)].powi(2)).sqrt();
    if cos_mid > 1e-9 {
        let first = (-s * m[(j, k)]).atan2(m[(k, k)]);
        let last = (-s * m[(i, j)]).atan2(m[(i, i)]);
        [first, mid, last]
    } else {
        // R_first = M · R_mid⁻¹ with the last angle pinned at zero
        let first_rot = m * order[1].rotation(mid).transpose();
        let a = (i + 1) % 3;
        let b = (i + 2) % 3;
        let first = first_rot[(b, a)].atan2(first_rot[(a, a)]);
        [first, mid, 0.0]
    }
}

/// Rotation plus translation; acts on points as `R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vec3::new(0.0, 0.0, 0.0),
    };

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    pub fn from_rotation(r: Mat3) -> Self {
        RigidTransform {
            rotation: r,
            translation: Vec3::zeros(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Mat4 {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.rotation - other.rotation)
            .abs()
            .max()
            .max((self.translation - other.translation).abs().max())
    }
}

/// Character-centric orthonormal frame on the ground plane.
///
/// `lateral` points from the character's right to its left, `facing` is
/// `lateral × up`, so `[lateral, up, facing]` is right-handed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacingFrame {
    pub origin: Vec3,
    pub lateral: Vec3,
    pub up: Vec3,
    pub facing: Vec3,
}

impl Default for FacingFrame {
    fn default() -> Self {
        FacingFrame::world()
    }
}

impl FacingFrame {
    /// Frame at the world origin facing `+z`.
    pub fn world() -> Self {
        FacingFrame {
            origin: Vec3::zeros(),
            lateral: Vec3::x(),
            up: UP,
            facing: Vec3::z(),
        }
    }

    pub fn from_facing(origin: Vec3, facing: Vec3) -> Result<Self> {
        let f = facing - UP * facing.dot(&UP);
        let n = f.norm();
        if n < 1e-9 {
            return Err(Error::DegenerateFrame);
        }
        let facing = f / n;
        Ok(FacingFrame {
            origin: Vec3::new(origin.x, 0.0, origin.z),
            lateral: UP.cross(&facing),
            up: UP,
            facing,
        })
    }

    /// Basis matrix with columns `[lateral, up, facing]`.
    pub fn basis(&self) -> Mat3 {
        Mat3::from_columns(&[self.lateral, self.up, self.facing])
    }

    /// World-from-frame transform.
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::new(self.basis(), self.origin)
    }

    pub fn from_transform(t: &RigidTransform) -> Result<Self> {
        let facing = t.rotation.column(2).into_owned();
        Self::from_facing(t.translation, facing)
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.basis().transpose() * (p - self.origin)
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.basis() * p + self.origin
    }

    /// Signed rotation about up that carries `self.facing` onto `other.facing`.
    pub fn yaw_to(&self, other: &FacingFrame) -> f64 {
        let cross = self.facing.cross(&other.facing).dot(&UP);
        cross.atan2(self.facing.dot(&other.facing))
    }
}

/// Builds the facing frame from the hip and shoulder pairs.
///
/// The lateral direction is the equal-weight average of the left-minus-right
/// hip and shoulder vectors, orthogonalized against up.
pub fn compute_facing_frame(
    left_hip: &Vec3,
    right_hip: &Vec3,
    left_shoulder: &Vec3,
    right_shoulder: &Vec3,
    root: &Vec3,
) -> Result<FacingFrame> {
    let hips = left_hip - right_hip;
    let shoulders = left_shoulder - right_shoulder;
    if hips.norm() < 1e-12 || shoulders.norm() < 1e-12 {
        return Err(Error::DegenerateFrame);
    }
    lateral_frame(&((hips + shoulders) * 0.5), root)
}

/// Facing frame from an arbitrary lateral vector.
pub fn lateral_frame(lateral: &Vec3, root: &Vec3) -> Result<FacingFrame> {
    let planar = lateral - UP * lateral.dot(&UP);
    let n = planar.norm();
    if !n.is_finite() || n < 1e-9 * lateral.norm().max(1e-300) || n < 1e-12 {
        return Err(Error::DegenerateFrame);
    }
    let lateral = planar / n;
    let facing = lateral.cross(&UP);
    Ok(FacingFrame {
        origin: Vec3::new(root.x, 0.0, root.z),
        lateral,
        up: UP,
        facing,
    })
}

/// [`compute_facing_frame`] with the degenerate-case fallback: keep the
/// previous facing direction if there is one, else world `+z`.
pub fn compute_facing_frame_or(
    left_hip: &Vec3,
    right_hip: &Vec3,
    left_shoulder: &Vec3,
    right_shoulder: &Vec3,
    root: &Vec3,
    previous: Option<&FacingFrame>,
) -> FacingFrame {
    compute_facing_frame(left_hip, right_hip, left_shoulder, right_shoulder, root).unwrap_or_else(
        |_| {
            let facing = previous.map(|p| p.facing).unwrap_or_else(Vec3::z);
            FacingFrame {
                origin: Vec3::new(root.x, 0.0, root.z),
                lateral: UP.cross(&facing),
                up: UP,
                facing,
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot_z(theta: f64) -> Mat3 {
        let (s, c) = theta.sin_cos();
        Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    pub(crate) fn random_rotation(rng: &mut impl Rng) -> Mat3 {
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        axis_angle(&(axis + Vec3::new(1e-3, 0.0, 0.0)), rng.gen_range(-3.1..3.1))
    }

    #[test]
    fn decode_canonical_and_scaled_columns() {
        let id = Rotation6D::IDENTITY.decode().unwrap();
        assert_eq!(id, Mat3::identity());
        let scaled = Rotation6D::new(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 0.0));
        assert_abs_diff_eq!(scaled.decode().unwrap(), Mat3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn decode_quarter_turn_about_z() {
        let r = Rotation6D::new(Vec3::new(0.0, 1.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let m = r.decode().unwrap();
        assert_abs_diff_eq!(m, rot_z(std::f64::consts::FRAC_PI_2), epsilon = 1e-12);
        // the decoded matrix carries x onto y
        assert_abs_diff_eq!(m * Vec3::x(), Vec3::y(), epsilon = 1e-12);
    }

    #[test]
    fn decode_rejects_degenerate_columns() {
        let zero = Rotation6D::new(Vec3::zeros(), Vec3::y());
        assert!(matches!(zero.decode(), Err(Error::DegenerateRotation(_))));
        let parallel = Rotation6D::new(Vec3::x(), Vec3::new(2.0, 0.0, 0.0));
        assert!(matches!(parallel.decode(), Err(Error::DegenerateRotation(_))));
        let nan = Rotation6D::new(Vec3::new(f64::NAN, 0.0, 0.0), Vec3::y());
        assert!(nan.decode().is_err());
    }

    #[test]
    fn encode_reads_columns() {
        let e = Rotation6D::encode(&Mat3::identity()).unwrap();
        assert_eq!(e, Rotation6D::IDENTITY);
        let e = Rotation6D::encode(&rot_z(std::f64::consts::FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(e.a, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(e.b, Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn encode_rejects_non_rotation() {
        let shear = Mat3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(Rotation6D::encode(&shear), Err(Error::NotARotation(_))));
        let reflect = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(Rotation6D::encode(&reflect).is_err());
    }

    #[test]
    fn random_rotation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = random_rotation(&mut rng);
            let back = Rotation6D::encode(&m).unwrap().decode().unwrap();
            assert!((back - m).abs().max() < 1e-9);
            assert!(orthonormality_error(&back) < 1e-9);
            assert!((back.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn euler_round_trip_all_orders() {
        use Axis::*;
        let orders = [
            [X, Y, Z],
            [X, Z, Y],
            [Y, X, Z],
            [Y, Z, X],
            [Z, X, Y],
            [Z, Y, X],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for order in orders {
            for _ in 0..200 {
                let angles = [
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-3.0..3.0),
                ];
                let m = euler_to_matrix(order, angles);
                let back = matrix_to_euler(order, &m);
                for (a, b) in angles.iter().zip(back.iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-9);
                }
            }
            // gimbal lock still reproduces the matrix
            let m = euler_to_matrix(order, [0.7, std::f64::consts::FRAC_PI_2, 0.2]);
            let back = matrix_to_euler(order, &m);
            assert_abs_diff_eq!(euler_to_matrix(order, back), m, epsilon = 1e-9);
        }
    }

    #[test]
    fn transform_compose_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = RigidTransform::new(random_rotation(&mut rng), Vec3::new(1.0, 2.0, 3.0));
        let id = a.compose(&a.inverse());
        assert!(id.max_abs_diff(&RigidTransform::IDENTITY) < 1e-12);
        let p = Vec3::new(0.3, -0.2, 0.9);
        let h = a.to_homogeneous() * p.push(1.0);
        assert_abs_diff_eq!(h.xyz(), a.apply(&p), epsilon = 1e-12);
    }

    #[test]
    fn facing_frame_hand_example() {
        let f = compute_facing_frame(
            &Vec3::new(1.0, 1.0, 0.0),
            &Vec3::new(-1.0, 1.0, 0.0),
            &Vec3::new(1.0, 2.0, 0.0),
            &Vec3::new(-1.0, 2.0, 0.0),
            &Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        // lateral +x, up +y → facing = x × y = +z
        assert_abs_diff_eq!(f.facing, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(f.lateral, Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.origin, Vec3::zeros(), epsilon = 1e-15);
        assert!((f.basis().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn facing_frame_origin_projection() {
        let f = compute_facing_frame(
            &Vec3::new(1.0, 1.0, 0.0),
            &Vec3::new(-1.0, 1.0, 0.0),
            &Vec3::new(1.0, 2.0, 0.0),
            &Vec3::new(-1.0, 2.0, 0.0),
            &Vec3::new(3.0, 5.0, 4.0),
        )
        .unwrap();
        assert_eq!(f.origin, Vec3::new(3.0, 0.0, 4.0));
    }

    #[test]
    fn facing_frame_yaw_and_translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let pts: Vec<Vec3> = (0..5)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..2.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let theta = rng.gen_range(-3.0..3.0);
            let shift = Vec3::new(rng.gen_range(-5.0..5.0), 0.0, rng.gen_range(-5.0..5.0));
            let r = yaw(theta);
            let moved: Vec<Vec3> = pts.iter().map(|p| r * p + shift).collect();
            let (Ok(a), Ok(b)) = (
                compute_facing_frame(&pts[0], &pts[1], &pts[2], &pts[3], &pts[4]),
                compute_facing_frame(&moved[0], &moved[1], &moved[2], &moved[3], &moved[4]),
            ) else {
                continue;
            };
            assert_abs_diff_eq!(r * a.facing, b.facing, epsilon = 1e-9);
            assert_abs_diff_eq!(r * a.origin + shift, b.origin, epsilon = 1e-9);
            let basis = b.basis();
            assert!(orthonormality_error(&basis) < 1e-9);
        }
    }

    #[test]
    fn quarter_yaw_rotates_facing() {
        let hips = [Vec3::new(1.0, 1.0, 0.0), Vec3::new(-1.0, 1.0, 0.0)];
        let sh = [Vec3::new(1.0, 2.0, 0.0), Vec3::new(-1.0, 2.0, 0.0)];
        let r = yaw(std::f64::consts::FRAC_PI_2);
        let a = compute_facing_frame(&hips[0], &hips[1], &sh[0], &sh[1], &Vec3::zeros()).unwrap();
        let b = compute_facing_frame(
            &(r * hips[0]),
            &(r * hips[1]),
            &(r * sh[0]),
            &(r * sh[1]),
            &Vec3::zeros(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.yaw_to(&b), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_frame_falls_back() {
        let up = Vec3::new(0.0, 1.0, 0.0);
        let err = compute_facing_frame(&up, &Vec3::zeros(), &up, &Vec3::zeros(), &Vec3::zeros());
        assert!(matches!(err, Err(Error::DegenerateFrame)));
        let fb = compute_facing_frame_or(&up, &Vec3::zeros(), &up, &Vec3::zeros(), &Vec3::zeros(), None);
        assert_eq!(fb.facing, Vec3::z());
        let prev = FacingFrame::from_facing(Vec3::zeros(), Vec3::x()).unwrap();
        let fb = compute_facing_frame_or(
            &up,
            &Vec3::zeros(),
            &up,
            &Vec3::zeros(),
            &Vec3::zeros(),
            Some(&prev),
        );
        assert_eq!(fb.facing, Vec3::x());
    }
}
