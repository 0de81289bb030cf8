//! C ABI for `vnl`.
//!
//! Depth maps and triplet sets cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns a [`VnlStatus`]; on failure [`vnl_last_error`] describes the error
//! for the calling thread. Panics are caught and reported as
//! `VNL_STATUS_PANIC`.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the documented number of
//! elements for the duration of the call. Handles must come from this
//! library and must not be used after being freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use vnl::io::DepthFormat;
use vnl::sampling::{SamplingConfig, Triplet, TripletSet};
use vnl::{CameraIntrinsics, DepthMap, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Degenerate = 3,
    EmptySample = 4,
    DimensionMismatch = 5,
    Format = 6,
    Io = 7,
    Diverged = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Pinhole intrinsics; `depth_scale` converts 16-bit PNG raw values to meters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VnlIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub depth_scale: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VnlPoint3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VnlSamplingConfig {
    pub n_groups: usize,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub theta_m: f64,
    pub seed: u64,
    pub max_attempts_per_group: u32,
}

/// Pixel coordinates of the three triplet vertices, `(row, col)` each.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VnlTriplet {
    pub row_a: usize,
    pub col_a: usize,
    pub row_b: usize,
    pub col_b: usize,
    pub row_c: usize,
    pub col_c: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VnlLossResult {
    pub value: f64,
    /// Triplets that contributed after skipping and hard-example filtering.
    pub n_effective: usize,
    /// Triplets that were not skipped as degenerate.
    pub n_scored: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VnlDepthMetrics {
    pub rel: f64,
    pub log10: f64,
    pub rms: f64,
    pub rms_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_pixels: usize,
    pub n_clipped: usize,
}

/// Opaque depth map.
pub struct VnlDepthMap {
    inner: DepthMap,
}

/// Opaque set of sampled triplets.
pub struct VnlTripletSet {
    inner: TripletSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VnlStatus {
    match e {
        Error::InvalidInput(_) => VnlStatus::InvalidInput,
        Error::DegenerateTriplet { .. } | Error::DegenerateFit(_) => VnlStatus::Degenerate,
        Error::EmptySample(_) => VnlStatus::EmptySample,
        Error::DimensionMismatch(_) => VnlStatus::DimensionMismatch,
        Error::Format { .. } | Error::Json(_) => VnlStatus::Format,
        Error::Io(_) => VnlStatus::Io,
        Error::Diverged { .. } => VnlStatus::Diverged,
    }
}

struct Fail(VnlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> VnlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VnlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside vnl".into());
            VnlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(VnlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(VnlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail(VnlStatus::NullPointer, "path is null".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(VnlStatus::InvalidInput, "path is not UTF-8".into()))
}

fn intrinsics(k: &VnlIntrinsics) -> Result<CameraIntrinsics, Fail> {
    Ok(CameraIntrinsics::new(k.fx, k.fy, k.u0, k.v0, k.depth_scale)?)
}

fn to_ffi_triplet(t: &Triplet) -> VnlTriplet {
    VnlTriplet {
        row_a: t[0].0,
        col_a: t[0].1,
        row_b: t[1].0,
        col_b: t[1].1,
        row_c: t[2].0,
        col_c: t[2].1,
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vnl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vnl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a depth map from `width * height` row-major values in meters.
/// `mask` may be null, in which case finite positive values are valid;
/// otherwise a nonzero mask byte marks a valid pixel.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_new(
    width: usize,
    height: usize,
    values: *const f64,
    mask: *const u8,
    out_map: *mut *mut VnlDepthMap,
) -> VnlStatus {
    guard(|| {
        let out_map = out(out_map, "out_map")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Fail(VnlStatus::InvalidInput, "dimensions overflow".into()))?;
        if values.is_null() {
            return Err(Fail(VnlStatus::NullPointer, "values is null".into()));
        }
        let vals = slice::from_raw_parts(values, n).to_vec();
        let inner = if mask.is_null() {
            DepthMap::from_values(width, height, vals)?
        } else {
            let m = slice::from_raw_parts(mask, n).iter().map(|&b| b != 0).collect();
            DepthMap::new(width, height, vals, m)?
        };
        *out_map = Box::into_raw(Box::new(VnlDepthMap { inner }));
        Ok(())
    })
}

/// Reads a one-channel PFM depth map.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_read_pfm(path: *const c_char, out_map: *mut *mut VnlDepthMap) -> VnlStatus {
    guard(|| {
        let out_map = out(out_map, "out_map")?;
        let path = path_arg(path)?;
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1.0)?;
        let inner = vnl::io::read_depth(path, DepthFormat::Pfm, &k)?;
        *out_map = Box::into_raw(Box::new(VnlDepthMap { inner }));
        Ok(())
    })
}

/// Reads a 16-bit single-channel PNG, scaling raw values by
/// `k->depth_scale`; raw 0 is invalid.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_read_png16(
    path: *const c_char,
    k: *const VnlIntrinsics,
    out_map: *mut *mut VnlDepthMap,
) -> VnlStatus {
    guard(|| {
        let out_map = out(out_map, "out_map")?;
        let k = intrinsics(deref(k, "k")?)?;
        let inner = vnl::io::read_depth(path_arg(path)?, DepthFormat::Png16, &k)?;
        *out_map = Box::into_raw(Box::new(VnlDepthMap { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_write_pfm(map: *const VnlDepthMap, path: *const c_char) -> VnlStatus {
    guard(|| {
        let map = deref(map, "map")?;
        Ok(vnl::io::write_pfm(path_arg(path)?, &map.inner)?)
    })
}

/// Null-safe.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_free(map: *mut VnlDepthMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Width of `map`, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_width(map: *const VnlDepthMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.width())
}

/// Height of `map`, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_height(map: *const VnlDepthMap) -> usize {
    map.as_ref().map_or(0, |m| m.inner.height())
}

/// Copies the row-major values (invalid pixels as 0) into `buf`, which must
/// hold `width * height` doubles.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_map_values(map: *const VnlDepthMap, buf: *mut f64, len: usize) -> VnlStatus {
    guard(|| {
        let map = deref(map, "map")?;
        let vals = map.inner.values();
        if buf.is_null() {
            return Err(Fail(VnlStatus::NullPointer, "buf is null".into()));
        }
        if len < vals.len() {
            return Err(Fail(VnlStatus::BufferTooSmall, format!("need {} values, got {len}", vals.len())));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), buf, vals.len());
        Ok(())
    })
}

/// Camera-frame point of pixel `(u, v)` (column, row) at depth `d`.
#[no_mangle]
pub unsafe extern "C" fn vnl_backproject_pixel(
    u: f64,
    v: f64,
    d: f64,
    k: *const VnlIntrinsics,
    out_point: *mut VnlPoint3,
) -> VnlStatus {
    guard(|| {
        let out_point = out(out_point, "out_point")?;
        let p = vnl::backproject_pixel(u, v, d, &intrinsics(deref(k, "k")?)?)?;
        *out_point = VnlPoint3 { x: p.x, y: p.y, z: p.z };
        Ok(())
    })
}

/// Unit normal of triangle `(a, b, c)` as `(b - a) x (c - a)` normalized.
#[no_mangle]
pub unsafe extern "C" fn vnl_triangle_normal(
    a: *const VnlPoint3,
    b: *const VnlPoint3,
    c: *const VnlPoint3,
    out_normal: *mut VnlPoint3,
) -> VnlStatus {
    guard(|| {
        let out_normal = out(out_normal, "out_normal")?;
        let v = |p: &VnlPoint3| vnl::Point3::new(p.x, p.y, p.z);
        let n = vnl::triangle_normal(&v(deref(a, "a")?), &v(deref(b, "b")?), &v(deref(c, "c")?))?;
        *out_normal = VnlPoint3 { x: n.x, y: n.y, z: n.z };
        Ok(())
    })
}

/// Sampling configuration with the default angle and distance thresholds.
#[no_mangle]
pub extern "C" fn vnl_sampling_config_default(n_groups: usize, seed: u64) -> VnlSamplingConfig {
    let c = SamplingConfig::new(n_groups, seed);
    VnlSamplingConfig {
        n_groups: c.n_groups,
        alpha_deg: c.alpha_deg,
        beta_deg: c.beta_deg,
        theta_m: c.theta_m,
        seed: c.seed,
        max_attempts_per_group: c.max_attempts_per_group,
    }
}

/// Samples triplets on the valid pixels of `gt`. A set with fewer triplets
/// than requested is still returned; see [`vnl_triplet_set_underfull`].
#[no_mangle]
pub unsafe extern "C" fn vnl_sample_triplets(
    gt: *const VnlDepthMap,
    k: *const VnlIntrinsics,
    cfg: *const VnlSamplingConfig,
    out_set: *mut *mut VnlTripletSet,
) -> VnlStatus {
    guard(|| {
        let out_set = out(out_set, "out_set")?;
        let gt = deref(gt, "gt")?;
        let k = intrinsics(deref(k, "k")?)?;
        let c = deref(cfg, "cfg")?;
        let cfg = SamplingConfig {
            n_groups: c.n_groups,
            alpha_deg: c.alpha_deg,
            beta_deg: c.beta_deg,
            theta_m: c.theta_m,
            seed: c.seed,
            max_attempts_per_group: c.max_attempts_per_group,
        };
        let inner = vnl::sample_triplets(&gt.inner, &k, &cfg)?;
        *out_set = Box::into_raw(Box::new(VnlTripletSet { inner }));
        Ok(())
    })
}

/// Builds a set from caller-supplied triplets.
#[no_mangle]
pub unsafe extern "C" fn vnl_triplet_set_new(
    triplets: *const VnlTriplet,
    len: usize,
    out_set: *mut *mut VnlTripletSet,
) -> VnlStatus {
    guard(|| {
        let out_set = out(out_set, "out_set")?;
        let ts: Vec<Triplet> = if len == 0 {
            Vec::new()
        } else {
            if triplets.is_null() {
                return Err(Fail(VnlStatus::NullPointer, "triplets is null".into()));
            }
            slice::from_raw_parts(triplets, len)
                .iter()
                .map(|t| [(t.row_a, t.col_a), (t.row_b, t.col_b), (t.row_c, t.col_c)])
                .collect()
        };
        let inner = TripletSet {
            config: SamplingConfig::new(len.max(1), 0),
            attempts_used: 0,
            underfull: false,
            triplets: ts,
        };
        *out_set = Box::into_raw(Box::new(VnlTripletSet { inner }));
        Ok(())
    })
}

/// Null-safe.
#[no_mangle]
pub unsafe extern "C" fn vnl_triplet_set_free(set: *mut VnlTripletSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of triplets, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn vnl_triplet_set_len(set: *const VnlTripletSet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.len())
}

/// Whether sampling stopped short of the requested count.
#[no_mangle]
pub unsafe extern "C" fn vnl_triplet_set_underfull(set: *const VnlTripletSet) -> bool {
    set.as_ref().is_some_and(|s| s.inner.underfull)
}

#[no_mangle]
pub unsafe extern "C" fn vnl_triplet_set_get(
    set: *const VnlTripletSet,
    index: usize,
    out_triplet: *mut VnlTriplet,
) -> VnlStatus {
    guard(|| {
        let out_triplet = out(out_triplet, "out_triplet")?;
        let set = deref(set, "set")?;
        let t = set
            .inner
            .triplets
            .get(index)
            .ok_or_else(|| Fail(VnlStatus::InvalidInput, format!("index {index} out of range")))?;
        *out_triplet = to_ffi_triplet(t);
        Ok(())
    })
}

/// Virtual-normal loss of `pred` against `gt` over `set`, keeping the
/// `ohem_keep` fraction of largest residuals.
#[no_mangle]
pub unsafe extern "C" fn vnl_vn_loss(
    pred: *const VnlDepthMap,
    gt: *const VnlDepthMap,
    k: *const VnlIntrinsics,
    set: *const VnlTripletSet,
    ohem_keep: f64,
    out_result: *mut VnlLossResult,
) -> VnlStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let r = vnl::vn_loss(
            &deref(pred, "pred")?.inner,
            &deref(gt, "gt")?.inner,
            &intrinsics(deref(k, "k")?)?,
            &deref(set, "set")?.inner.triplets,
            ohem_keep,
        )?;
        *out_result = VnlLossResult {
            value: r.value,
            n_effective: r.n_effective,
            n_scored: r.per_sample.len(),
        };
        Ok(())
    })
}

/// Loss plus its gradient with respect to every predicted depth, written
/// row-major into `grad` (at least `width * height` doubles).
#[no_mangle]
pub unsafe extern "C" fn vnl_vn_loss_grad(
    pred: *const VnlDepthMap,
    gt: *const VnlDepthMap,
    k: *const VnlIntrinsics,
    set: *const VnlTripletSet,
    ohem_keep: f64,
    out_result: *mut VnlLossResult,
    grad: *mut f64,
    grad_len: usize,
) -> VnlStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let pred = deref(pred, "pred")?;
        if grad.is_null() {
            return Err(Fail(VnlStatus::NullPointer, "grad is null".into()));
        }
        if grad_len < pred.inner.len() {
            return Err(Fail(
                VnlStatus::BufferTooSmall,
                format!("need {} gradient slots, got {grad_len}", pred.inner.len()),
            ));
        }
        let (r, g) = vnl::vn_loss_grad(
            &pred.inner,
            &deref(gt, "gt")?.inner,
            &intrinsics(deref(k, "k")?)?,
            &deref(set, "set")?.inner.triplets,
            ohem_keep,
        )?;
        ptr::copy_nonoverlapping(g.values.as_ptr(), grad, g.values.len());
        *out_result = VnlLossResult {
            value: r.value,
            n_effective: r.n_effective,
            n_scored: r.per_sample.len(),
        };
        Ok(())
    })
}

/// Standard depth metrics over pixels valid in `gt`.
#[no_mangle]
pub unsafe extern "C" fn vnl_depth_metrics(
    pred: *const VnlDepthMap,
    gt: *const VnlDepthMap,
    out_metrics: *mut VnlDepthMetrics,
) -> VnlStatus {
    guard(|| {
        let out_metrics = out(out_metrics, "out_metrics")?;
        let r = vnl::depth_metrics(&deref(pred, "pred")?.inner, &deref(gt, "gt")?.inner)?;
        *out_metrics = VnlDepthMetrics {
            rel: r.rel,
            log10: r.log10,
            rms: r.rms,
            rms_log: r.rms_log,
            delta1: r.delta1,
            delta2: r.delta2,
            delta3: r.delta3,
            n_pixels: r.n_pixels,
            n_clipped: r.n_clipped,
        };
        Ok(())
    })
}
