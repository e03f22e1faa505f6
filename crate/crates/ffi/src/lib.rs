//! C ABI for rigskin.
//!
//! Objects cross the boundary as opaque handles created by `*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`RigskinStatus`]; on failure [`rigskin_last_error`] describes
//! what went wrong on the calling thread. Strings returned through `char**`
//! outputs must be released with [`rigskin_string_free`]. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rigskin::animation::apply_lbs;
use rigskin::io::{parse_bvh, parse_obj, read_skeleton_json, read_weights, write_skeleton_json, BvhDocument};
use rigskin::skeleton::skinning_transforms;
use rigskin::solvers::{solve_rig, SolverConfig};
use rigskin::{Error, Mesh, Skeleton, Vec3, WeightMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigskinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    SolverError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Triangle mesh.
pub struct RigskinMesh(Mesh);
/// Rest skeleton.
pub struct RigskinSkeleton(Skeleton);
/// Per-vertex skinning weights with joint names.
pub struct RigskinWeights {
    names: Vec<String>,
    weights: WeightMatrix,
}
/// Parsed BVH motion.
pub struct RigskinMotion(BvhDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RigskinStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidConfig(_) => RigskinStatus::InvalidArgument,
            e if e.is_parse_error() => RigskinStatus::ParseError,
            _ => RigskinStatus::SolverError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RigskinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RigskinStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RigskinStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RigskinStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("text"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(RigskinStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn fill(out: *mut f64, len: usize, values: impl ExactSizeIterator<Item = f64>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err(Failure(
            RigskinStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    for (k, v) in values.enumerate() {
        *out.add(k) = v;
    }
    Ok(())
}

fn flat(points: &[Vec3]) -> impl ExactSizeIterator<Item = f64> + '_ {
    (0..points.len() * 3).map(move |k| points[k / 3][k % 3])
}

unsafe fn points(p: *const f64, count: usize) -> Result<Vec<Vec3>, Failure> {
    if p.is_null() {
        return Err(null("point buffer"));
    }
    Ok(std::slice::from_raw_parts(p, count * 3)
        .chunks(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rigskin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn rigskin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rigskin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses Wavefront OBJ text.
///
/// # Safety
/// `obj` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_mesh_from_obj(obj: *const c_char, out: *mut *mut RigskinMesh) -> RigskinStatus {
    guard(|| emit(out, RigskinMesh(parse_obj(text(obj)?)?)))
}

/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rigskin_mesh_free(mesh: *mut RigskinMesh) {
    free(mesh)
}

/// # Safety
/// `mesh` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rigskin_mesh_vertex_count(mesh: *const RigskinMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.vertex_count())
}

/// # Safety
/// `mesh` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rigskin_mesh_face_count(mesh: *const RigskinMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.faces().len())
}

/// Copies `3 × vertex_count` coordinates into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rigskin_mesh_vertices(mesh: *const RigskinMesh, out: *mut f64, len: usize) -> RigskinStatus {
    guard(|| fill(out, len, flat(handle(mesh, "mesh")?.0.vertices())))
}

/// Parses a skeleton JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_from_json(
    json: *const c_char,
    out: *mut *mut RigskinSkeleton,
) -> RigskinStatus {
    guard(|| emit(out, RigskinSkeleton(read_skeleton_json(text(json)?)?)))
}

/// Takes the skeleton from a BVH hierarchy.
///
/// # Safety
/// `bvh` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_from_bvh(
    bvh: *const c_char,
    out: *mut *mut RigskinSkeleton,
) -> RigskinStatus {
    guard(|| emit(out, RigskinSkeleton(parse_bvh(text(bvh)?)?.skeleton)))
}

/// Serializes a skeleton to JSON; free the result with `rigskin_string_free`.
///
/// # Safety
/// `skeleton` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_to_json(
    skeleton: *const RigskinSkeleton,
    out: *mut *mut c_char,
) -> RigskinStatus {
    guard(|| {
        let json = write_skeleton_json(&handle(skeleton, "skeleton")?.0);
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `skeleton` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_free(skeleton: *mut RigskinSkeleton) {
    free(skeleton)
}

/// # Safety
/// `skeleton` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_joint_count(skeleton: *const RigskinSkeleton) -> usize {
    skeleton.as_ref().map_or(0, |s| s.0.joint_count())
}

/// Copies rest-pose joint positions (`3 × joint_count` doubles).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rigskin_skeleton_globals(
    skeleton: *const RigskinSkeleton,
    out: *mut f64,
    len: usize,
) -> RigskinStatus {
    guard(|| fill(out, len, flat(handle(skeleton, "skeleton")?.0.globals())))
}

/// Parses a weights file.
///
/// # Safety
/// `weights` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_weights_from_text(
    weights: *const c_char,
    out: *mut *mut RigskinWeights,
) -> RigskinStatus {
    guard(|| {
        let (names, weights) = read_weights(text(weights)?)?;
        emit(out, RigskinWeights { names, weights })
    })
}

/// # Safety
/// `weights` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rigskin_weights_free(weights: *mut RigskinWeights) {
    free(weights)
}

/// # Safety
/// `weights` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rigskin_weights_joint_count(weights: *const RigskinWeights) -> usize {
    weights.as_ref().map_or(0, |w| w.weights.joint_count())
}

/// Copies the row-major weight matrix.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rigskin_weights_values(
    weights: *const RigskinWeights,
    out: *mut f64,
    len: usize,
) -> RigskinStatus {
    guard(|| {
        let w = &handle(weights, "weights")?.weights;
        fill(out, len, w.as_slice().iter().copied())
    })
}

/// Parses a BVH motion.
///
/// # Safety
/// `bvh` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rigskin_motion_from_bvh(bvh: *const c_char, out: *mut *mut RigskinMotion) -> RigskinStatus {
    guard(|| emit(out, RigskinMotion(parse_bvh(text(bvh)?)?)))
}

/// # Safety
/// `motion` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rigskin_motion_free(motion: *mut RigskinMotion) {
    free(motion)
}

/// # Safety
/// `motion` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rigskin_motion_frame_count(motion: *const RigskinMotion) -> usize {
    motion.as_ref().map_or(0, |m| m.0.frame_count())
}

/// Deforms `mesh` to one motion frame with linear blend skinning. Weight
/// columns must name the motion's joints in hierarchy order. Writes
/// `3 × vertex_count` doubles.
///
/// # Safety
/// Handles must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rigskin_deform(
    mesh: *const RigskinMesh,
    weights: *const RigskinWeights,
    motion: *const RigskinMotion,
    frame: usize,
    out: *mut f64,
    len: usize,
) -> RigskinStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let w = handle(weights, "weights")?;
        let doc = &handle(motion, "motion")?.0;
        if w.names != doc.skeleton.names() {
            return Err(Failure(
                RigskinStatus::InvalidArgument,
                "weight columns do not match the motion's joints".into(),
            ));
        }
        let pose = doc.pose(frame)?;
        let transforms = skinning_transforms(&doc.skeleton.rest_pose(), &pose)?;
        let deformed = apply_lbs(mesh, &w.weights, &transforms)?;
        fill(out, len, flat(&deformed.vertices))
    })
}

/// Fits `source` to `mesh` with default solver settings. `gt_joints` may be
/// NULL; otherwise it holds `3 × gt_count` coordinates to fit against.
///
/// # Safety
/// Handles must be live, `gt_joints` NULL or readable, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rigskin_solve_rig(
    mesh: *const RigskinMesh,
    source: *const RigskinSkeleton,
    gt_joints: *const f64,
    gt_count: usize,
    seed: u64,
    out: *mut *mut RigskinSkeleton,
) -> RigskinStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let source = &handle(source, "source skeleton")?.0;
        let gt = if gt_joints.is_null() { None } else { Some(points(gt_joints, gt_count)?) };
        let cfg = SolverConfig {
            seed,
            ..Default::default()
        };
        let solution = solve_rig(mesh, source, &cfg, gt.as_deref())?;
        emit(out, RigskinSkeleton(solution.target_skeleton))
    })
}

/// Joint-to-joint Chamfer distance between two point sets.
///
/// # Safety
/// `a` and `b` must hold `3 × na` and `3 × nb` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rigskin_cd_j2j(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut f64,
) -> RigskinStatus {
    guard(|| {
        let value = rigskin::metrics::cd_j2j(&points(a, na)?, &points(b, nb)?)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = value;
        Ok(())
    })
}
