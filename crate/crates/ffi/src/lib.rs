//! C interface to shredsim.
//!
//! Objects are opaque handles created by `shred_*_new`/`shred_*_sample`
//! functions and released with the matching `shred_*_free`. Every fallible
//! call returns a [`ShredStatus`]; on failure the message is available
//! from [`shred_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shredsim::codec::{slits_of, SlitList};
use shredsim::excursion::{sample_excursion, DiscreteExcursion};
use shredsim::heightvar::v_on_walk;
use shredsim::map::{bfs, build_map, CausalMap};
use shredsim::metrics::WalkTreeMetrics;
use shredsim::rng;
use shredsim::steps::StepLaw;
use shredsim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShredStatus {
    Ok = 0,
    InvalidParameter = 1,
    InfeasibleLaw = 2,
    RetryBudgetExceeded = 3,
    MalformedInput = 4,
    Violation = 5,
    NullPointer = 6,
    OutOfRange = 7,
    Internal = 8,
}

/// Step law handle.
pub struct ShredLaw(StepLaw);

/// Excursion handle.
pub struct ShredExcursion(DiscreteExcursion);

/// Causal map handle with the tree metrics and slits of its excursion.
pub struct ShredMap {
    excursion: DiscreteExcursion,
    map: CausalMap,
    union: Vec<Vec<u32>>,
    metrics: WalkTreeMetrics,
    slits: SlitList,
}

/// Distances between two coded vertices.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShredPairMetrics {
    pub d: f64,
    pub d_up: f64,
    pub d_down: f64,
    pub d_star: f64,
    pub v: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ShredStatus {
    match err {
        Error::InvalidParameter(_) => ShredStatus::InvalidParameter,
        Error::InfeasibleLaw { .. } => ShredStatus::InfeasibleLaw,
        Error::RetryBudgetExceeded { .. } => ShredStatus::RetryBudgetExceeded,
        Error::MalformedWalk(_) | Error::MalformedConfig(_) | Error::Parse(_) => ShredStatus::MalformedInput,
        e if e.is_violation() => ShredStatus::Violation,
        _ => ShredStatus::Internal,
    }
}

fn guard<F: FnOnce() -> Result<(), (ShredStatus, String)>>(f: F) -> ShredStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ShredStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ShredStatus::Internal
        }
    }
}

fn lib<T>(r: shredsim::Result<T>) -> Result<T, (ShredStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (ShredStatus, String) {
    (ShredStatus::NullPointer, "null pointer argument".into())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next shredsim call on the same thread.
#[no_mangle]
pub extern "C" fn shred_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Stable-domain step law with index `alpha` in (1, 2).
///
/// # Safety
/// `out` must be a valid pointer to write a handle to.
#[no_mangle]
pub unsafe extern "C" fn shred_law_stable(alpha: f64, out: *mut *mut ShredLaw) -> ShredStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let law = lib(StepLaw::stable(alpha))?;
        *out = Box::into_raw(Box::new(ShredLaw(law)));
        Ok(())
    })
}

/// # Safety
/// `law` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shred_law_free(law: *mut ShredLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Probability of step `k`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_law_pmf(law: *const ShredLaw, k: i64, out: *mut f64) -> ShredStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        *out = law.0.pmf(k);
        Ok(())
    })
}

/// Samples an excursion with `n + 1` steps from `seed`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_excursion_sample(
    law: *const ShredLaw,
    n: usize,
    seed: u64,
    out: *mut *mut ShredExcursion,
) -> ShredStatus {
    guard(|| {
        let law = law.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let e = lib(sample_excursion(&law.0, n, &mut rng::from_seed(seed)))?;
        *out = Box::into_raw(Box::new(ShredExcursion(e)));
        Ok(())
    })
}

/// Excursion from an explicit step sequence.
///
/// # Safety
/// `steps` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn shred_excursion_from_steps(
    steps: *const i64,
    len: usize,
    out: *mut *mut ShredExcursion,
) -> ShredStatus {
    guard(|| {
        if steps.is_null() || out.is_null() {
            return Err(null());
        }
        let s = std::slice::from_raw_parts(steps, len).to_vec();
        let e = lib(DiscreteExcursion::from_steps(s))?;
        *out = Box::into_raw(Box::new(ShredExcursion(e)));
        Ok(())
    })
}

/// Number of steps, `n + 1`.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shred_excursion_len(e: *const ShredExcursion) -> usize {
    e.as_ref().map_or(0, |e| e.0.steps().len())
}

/// Copies up to `cap` steps into `buf` and returns the total step count.
///
/// # Safety
/// `e` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn shred_excursion_steps(e: *const ShredExcursion, buf: *mut i64, cap: usize) -> usize {
    let Some(e) = e.as_ref() else { return 0 };
    let steps = e.0.steps();
    if !buf.is_null() {
        let k = steps.len().min(cap);
        ptr::copy_nonoverlapping(steps.as_ptr(), buf, k);
    }
    steps.len()
}

/// # Safety
/// `e` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shred_excursion_free(e: *mut ShredExcursion) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Builds the causal map of an excursion. The map keeps its own copy.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_map_build(e: *const ShredExcursion, out: *mut *mut ShredMap) -> ShredStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let map = lib(build_map(&e.0))?;
        let union = map.build_trees().union_adjacency();
        let m = ShredMap {
            excursion: e.0.clone(),
            metrics: WalkTreeMetrics::new(&e.0),
            slits: slits_of(&e.0),
            union,
            map,
        };
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// Number of vertices: coded vertices plus the top.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shred_map_vertex_count(m: *const ShredMap) -> usize {
    m.as_ref().map_or(0, |m| m.map.vertex_count())
}

/// Graph distance between vertices `u` and `v`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_map_distance(m: *const ShredMap, u: usize, v: usize, out: *mut u32) -> ShredStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let count = m.map.vertex_count();
        if u >= count || v >= count {
            return Err((ShredStatus::OutOfRange, format!("vertex out of range 0..{count}")));
        }
        *out = m.map.bfs(u)[v];
        Ok(())
    })
}

/// All five distances between the coded vertices of down-steps `ku`
/// and `kv`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shred_map_pair_metrics(
    m: *const ShredMap,
    ku: usize,
    kv: usize,
    out: *mut ShredPairMetrics,
) -> ShredStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let ct = m.excursion.coded_times();
        let (a, b) = match (ct.position_of(ku), ct.position_of(kv)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err((ShredStatus::OutOfRange, format!("({ku}, {kv}) are not both down-steps"))),
        };
        *out = ShredPairMetrics {
            d: m.map.bfs(a)[b] as f64,
            d_up: m.metrics.d_up(ku, kv) as f64,
            d_down: m.metrics.d_down(ku, kv) as f64,
            d_star: bfs(&m.union, a)[b] as f64,
            v: v_on_walk(&m.excursion, &m.slits, ku, kv),
        };
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shred_map_free(m: *mut ShredMap) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
