//! C ABI over `vispart`.
//!
//! Sets and measures cross the boundary as opaque handles owned by the caller
//! and released with the matching `*_free`. Every entry point returns a
//! [`VpStatus`]; on failure the message is kept per thread and can be fetched
//! with [`vp_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use vispart::dimension::{box_counts, dim_estimate};
use vispart::dyadic::{dyadic_content, CubeId, GridSet};
use vispart::fractals::{generate_percolation, PercolationSpec};
use vispart::measures::{frostman_build, GridMeasure};
use vispart::transforms::{spatial_energy, Direction};
use vispart::visibility::visible_cells_general;
use vispart::Error;

/// Opaque handle to a set of same-level dyadic cells.
pub struct VpGridSet(GridSet);

/// Opaque handle to a measure on dyadic cells.
pub struct VpGridMeasure(GridMeasure);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Invariant = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> VpStatus {
    match err {
        Error::Io { .. } => VpStatus::Io,
        Error::Parse { .. } | Error::Json { .. } => VpStatus::Parse,
        Error::Invariant(_) => VpStatus::Invariant,
        _ => VpStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> VpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VpStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            VpStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            VpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a set from `count` cells given as `count * dim` row-major coordinates.
///
/// # Safety
/// `coords` must point to `count * dim` values; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_from_coords(
    dim: usize,
    level: u32,
    coords: *const u32,
    count: usize,
    out_set: *mut *mut VpGridSet,
) -> VpStatus {
    guard(|| {
        let dst = out(out_set, "out_set")?;
        let total = count
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidArgument("cell count overflows".into()))?;
        let flat = slice(coords, total, "coords")?;
        let cells = if dim == 0 {
            Vec::new()
        } else {
            flat.chunks(dim).map(|c| CubeId::new(level, c)).collect::<Result<Vec<_>, _>>()?
        };
        let set = GridSet::new(dim, level, cells)?;
        *dst = Box::into_raw(Box::new(VpGridSet(set)));
        Ok(())
    })
}

/// Read a set from the text format written by the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_read(path: *const c_char, out_set: *mut *mut VpGridSet) -> VpStatus {
    guard(|| {
        let dst = out(out_set, "out_set")?;
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        *dst = Box::into_raw(Box::new(VpGridSet(GridSet::read(path)?)));
        Ok(())
    })
}

/// Mandelbrot percolation in `[0,1]^dim` down to `depth`.
///
/// # Safety
/// `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_percolation(
    dim: usize,
    p: f64,
    depth: u32,
    seed: u64,
    out_set: *mut *mut VpGridSet,
) -> VpStatus {
    guard(|| {
        let dst = out(out_set, "out_set")?;
        let set = generate_percolation(&PercolationSpec { dim, p, depth, seed })?;
        *dst = Box::into_raw(Box::new(VpGridSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_len(set: *const VpGridSet, out_len: *mut usize) -> VpStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(set, "set")?.0.len();
        Ok(())
    })
}

/// Copy the cell coordinates (row-major, `len * dim` values) into `buf`,
/// which must hold `cap` values.
///
/// # Safety
/// `set` must be a live handle; `buf` must point to `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_coords(set: *const VpGridSet, buf: *mut u32, cap: usize) -> VpStatus {
    guard(|| {
        let set = &deref(set, "set")?.0;
        let need = set.len() * set.dim();
        if cap < need {
            return Err(Error::InvalidArgument(format!("buffer holds {cap} values, need {need}")).into());
        }
        if need == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (row, c) in dst.chunks_mut(set.dim()).zip(set.iter()) {
            row.copy_from_slice(c.coords());
        }
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vp_gridset_free(set: *mut VpGridSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Dyadic `s`-content of the set below the unit cube.
///
/// # Safety
/// `set` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_dyadic_content(set: *const VpGridSet, s: f64, out_value: *mut f64) -> VpStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let set = &deref(set, "set")?.0;
        *dst = dyadic_content(set, s, &CubeId::root(set.dim())?)?;
        Ok(())
    })
}

/// Box-counting slope over levels `0..=level`, dropping `drop` coarse levels.
///
/// # Safety
/// `set` must be a live handle; `out_slope` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_box_dimension(set: *const VpGridSet, drop: usize, out_slope: *mut f64) -> VpStatus {
    guard(|| {
        let dst = out(out_slope, "out_slope")?;
        let set = &deref(set, "set")?.0;
        *dst = dim_estimate(&box_counts(set, 0..=set.level())?, drop)?.slope;
        Ok(())
    })
}

/// Cells seen first from direction `e` (length `dim`).
///
/// # Safety
/// `set` must be a live handle, `e` must point to `dim` values and
/// `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_visible_cells(
    set: *const VpGridSet,
    e: *const f64,
    dim: usize,
    net_level: u32,
    out_set: *mut *mut VpGridSet,
) -> VpStatus {
    guard(|| {
        let dst = out(out_set, "out_set")?;
        let set = &deref(set, "set")?.0;
        let d = Direction::new(slice(e, dim, "e")?)?;
        *dst = Box::into_raw(Box::new(VpGridSet(visible_cells_general(set, &d, net_level)?)));
        Ok(())
    })
}

/// Frostman measure of exponent `s` supported on the set.
///
/// # Safety
/// `set` must be a live handle; `out_measure` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_frostman_build(
    set: *const VpGridSet,
    s: f64,
    out_measure: *mut *mut VpGridMeasure,
) -> VpStatus {
    guard(|| {
        let dst = out(out_measure, "out_measure")?;
        let m = frostman_build(&deref(set, "set")?.0, s)?;
        *dst = Box::into_raw(Box::new(VpGridMeasure(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `out_mass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_measure_total_mass(m: *const VpGridMeasure, out_mass: *mut f64) -> VpStatus {
    guard(|| {
        *out(out_mass, "out_mass")? = deref(m, "measure")?.0.total_mass();
        Ok(())
    })
}

/// Mass of the dyadic cube at `level` with the given `dim` coordinates.
///
/// # Safety
/// `m` must be a live handle, `coords` must point to `dim` values and
/// `out_mass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_measure_mass_of(
    m: *const VpGridMeasure,
    level: u32,
    coords: *const u32,
    dim: usize,
    out_mass: *mut f64,
) -> VpStatus {
    guard(|| {
        let dst = out(out_mass, "out_mass")?;
        let m = &deref(m, "measure")?.0;
        let q = CubeId::new(level, slice(coords, dim, "coords")?)?;
        if q.dim() != m.dim() {
            return Err(Error::GridMismatch(format!("cube of dimension {} in a {}-dimensional measure", q.dim(), m.dim())).into());
        }
        *dst = m.mass_of(&q);
        Ok(())
    })
}

/// Discrete Riesz `s`-energy (cell centres, diagonal omitted).
///
/// # Safety
/// `m` must be a live handle; `out_energy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_spatial_energy(m: *const VpGridMeasure, s: f64, out_energy: *mut f64) -> VpStatus {
    guard(|| {
        let dst = out(out_energy, "out_energy")?;
        *dst = spatial_energy(&deref(m, "measure")?.0, s)?.value;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vp_measure_free(m: *mut VpGridMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
