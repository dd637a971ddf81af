//! C ABI over `pimvc`.
//!
//! Clouds are opaque `PimCloud` handles owned by the caller and released
//! with `pim_cloud_free`. Every fallible call returns a `PimStatus`; on
//! failure `pim_last_error_message` describes the error on the calling
//! thread. Bandwidth arguments `t <= 0` select the default balanced policy.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use pimvc::harness::Discretization;
use pimvc::operator::Field;
use pimvc::pointcloud::{load_cloud, sample_unit_disk};
use pimvc::{
    BandwidthPolicy, CgConfig, CloudFormat, NeighborIndex, PimError, PointCloud, SourceField,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    InvalidCloud = 5,
    DegenerateGeometry = 6,
    MissingData = 7,
    EmptyInterior = 8,
    Coverage = 9,
    NotConverged = 10,
    Indefinite = 11,
    Singular = 12,
    Stagnation = 13,
    Panic = 14,
}

/// Opaque point cloud handle.
pub struct PimCloud {
    cloud: PointCloud,
}

/// Summary of a Poisson solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PimSolveInfo {
    pub t: f64,
    pub interior_count: usize,
    pub constrained_count: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// Summary of an eigensolve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PimEigenInfo {
    pub t: f64,
    /// 1 when the consistent mass matrix was replaced by its lumped form.
    pub lumped_mass: u8,
    pub max_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &PimError) -> PimStatus {
    match e.root() {
        PimError::Io { .. } => PimStatus::Io,
        PimError::Format { .. } => PimStatus::Format,
        PimError::InvalidCloud(_) => PimStatus::InvalidCloud,
        PimError::Parameter(_) => PimStatus::InvalidArgument,
        PimError::DegenerateGeometry(_) => PimStatus::DegenerateGeometry,
        PimError::MissingData(_) => PimStatus::MissingData,
        PimError::EmptyInterior { .. } => PimStatus::EmptyInterior,
        PimError::Coverage => PimStatus::Coverage,
        PimError::NotConverged { .. } => PimStatus::NotConverged,
        PimError::Indefinite(_) => PimStatus::Indefinite,
        PimError::Singular(_) => PimStatus::Singular,
        PimError::Stagnation(_) => PimStatus::Stagnation,
        PimError::Stage { .. } => unreachable!("root strips stages"),
    }
}

enum Failure {
    Status(PimStatus, String),
    Core(PimError),
}

impl From<PimError> for Failure {
    fn from(e: PimError) -> Self {
        Failure::Core(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(PimStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PimStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PimStatus::Panic
        }
    }
}

fn policy(t: f64) -> BandwidthPolicy {
    if t > 0.0 {
        BandwidthPolicy::Fixed(t)
    } else {
        BandwidthPolicy::default()
    }
}

unsafe fn cloud_ref<'a>(cloud: *const PimCloud) -> Result<&'a PimCloud, Failure> {
    cloud.as_ref().ok_or_else(|| null("cloud"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn store(out: *mut *mut PimCloud, cloud: PointCloud) {
    *out = Box::into_raw(Box::new(PimCloud { cloud }));
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a cloud file (`.csv` or whitespace-separated text).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_load(path: *const c_char, out: *mut *mut PimCloud) -> PimStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::Status(PimStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let path = Path::new(path);
        let cloud = load_cloud(path, CloudFormat::from_path(path))?;
        store(out, cloud);
        Ok(())
    })
}

/// Quasi-uniform sampling of the unit disk with about `n_target` points.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_sample_disk(
    n_target: usize,
    seed: u64,
    out: *mut *mut PimCloud,
) -> PimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        store(out, sample_unit_disk(n_target, seed)?);
        Ok(())
    })
}

/// Builds a cloud from `n` row-major points of dimension `dim` and `n`
/// boundary flags (nonzero = boundary).
///
/// # Safety
/// `coords` must hold `n * dim` values, `boundary` `n` bytes, and `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_from_arrays(
    coords: *const f64,
    n: usize,
    dim: usize,
    intrinsic_dim: usize,
    boundary: *const u8,
    out: *mut *mut PimCloud,
) -> PimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n.checked_mul(dim).ok_or_else(|| {
            Failure::Status(PimStatus::InvalidArgument, "n * dim overflows".into())
        })?;
        let coords = slice(coords, len, "coords")?.to_vec();
        let flags = slice(boundary, n, "boundary")?
            .iter()
            .map(|b| *b != 0)
            .collect();
        store(out, PointCloud::new(coords, dim, intrinsic_dim, flags)?);
        Ok(())
    })
}

/// Releases a cloud; null is ignored.
///
/// # Safety
/// `cloud` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_free(cloud: *mut PimCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Number of samples, or 0 for null.
///
/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_len(cloud: *const PimCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.cloud.len())
}

/// Estimates missing volume and boundary weights from `neighbors` nearest
/// samples (0 selects the default).
///
/// # Safety
/// `cloud` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_estimate_weights(
    cloud: *mut PimCloud,
    neighbors: usize,
) -> PimStatus {
    guard(|| {
        let c = cloud.as_mut().ok_or_else(|| null("cloud"))?;
        let index = NeighborIndex::build(&c.cloud);
        let m = if neighbors == 0 {
            pimvc::geometry::DEFAULT_NEIGHBORS
        } else {
            neighbors
        };
        pimvc::geometry::ensure_weights(&mut c.cloud, &index, m)?;
        Ok(())
    })
}

/// Copies the volume weights into `out` (length `len` = cloud size).
///
/// # Safety
/// `cloud` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pim_cloud_volume_weights(
    cloud: *const PimCloud,
    out: *mut f64,
    len: usize,
) -> PimStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        let v = c.cloud.volume_weights().ok_or_else(|| {
            Failure::Status(PimStatus::MissingData, "volume weights not set".into())
        })?;
        if len != v.len() {
            return Err(Failure::Status(
                PimStatus::InvalidArgument,
                format!("expected {} values", v.len()),
            ));
        }
        slice_mut(out, len, "out")?.copy_from_slice(v);
        Ok(())
    })
}

/// Volume-constrained Poisson solve with per-sample `f` and `g` (each of
/// length `len` = cloud size); writes the solution to `u_out`. Missing
/// weights are estimated on a copy. `info` may be null.
///
/// # Safety
/// Pointers must be valid for `len` doubles; `cloud` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pim_solve_poisson(
    cloud: *const PimCloud,
    t: f64,
    f: *const f64,
    g: *const f64,
    u_out: *mut f64,
    len: usize,
    info: *mut PimSolveInfo,
) -> PimStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        if len != c.cloud.len() {
            return Err(Failure::Status(
                PimStatus::InvalidArgument,
                format!("expected {} values, got {len}", c.cloud.len()),
            ));
        }
        let f = slice(f, len, "f")?.to_vec();
        let g = slice(g, len, "g")?.to_vec();
        let u_out = slice_mut(u_out, len, "u_out")?;
        let d = Discretization::prepare(c.cloud.clone(), policy(t), None)?;
        let a = d.stiffness()?;
        let src = SourceField::new(Field::Samples(Arc::new(f)), Field::Samples(Arc::new(g)));
        let rep = d.solve_poisson(&a, &src, &CgConfig::default())?;
        u_out.copy_from_slice(&rep.solution);
        if let Some(info) = info.as_mut() {
            *info = PimSolveInfo {
                t: d.t(),
                interior_count: rep.interior_count,
                constrained_count: rep.constrained_count,
                iterations: rep.iterations,
                residual: rep.residual,
            };
        }
        Ok(())
    })
}

/// The `m` smallest Dirichlet eigenvalues of the volume-constrained
/// discretization, ascending, written to `values_out`. `info` may be null.
///
/// # Safety
/// `values_out` must hold `m` doubles; `cloud` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pim_eigenvalues(
    cloud: *const PimCloud,
    t: f64,
    m: usize,
    seed: u64,
    values_out: *mut f64,
    info: *mut PimEigenInfo,
) -> PimStatus {
    guard(|| {
        let c = cloud_ref(cloud)?;
        let out = slice_mut(values_out, m, "values_out")?;
        let d = Discretization::prepare(c.cloud.clone(), policy(t), None)?;
        let a = d.stiffness()?;
        let cfg = pimvc::solvers::EigenConfig {
            seed,
            ..Default::default()
        };
        let res = d.eigenpairs(&a, m, &cfg)?;
        for (o, p) in out.iter_mut().zip(&res.pairs) {
            *o = p.value;
        }
        if let Some(info) = info.as_mut() {
            *info = PimEigenInfo {
                t: d.t(),
                lumped_mass: (res.mass == pimvc::solvers::MassUsed::Lumped) as u8,
                max_residual: res.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
            };
        }
        Ok(())
    })
}
