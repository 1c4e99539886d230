//! C ABI over the `teich` library.
//!
//! Every function returns a [`TeichStatus`]; on failure the message is
//! available from [`teich_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Strings returned by the
//! library are owned by the caller and released with [`teich_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use teich::graphs::{enumerate_trivalent, StableGraph};
use teich::kz::{self, NilpotentPair, OdeOptions, QMatrix, UniversalAssociator};
use teich::qseries::rat_int;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeichStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    NotSupported = 5,
    Panic = 6,
}

/// Opaque stable graph.
pub struct TeichGraph(StableGraph);

/// Opaque universal associator.
pub struct TeichAssociator(UniversalAssociator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

struct Failure(TeichStatus, String);

impl Failure {
    fn new(status: TeichStatus, e: impl ToString) -> Self {
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TeichStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TeichStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TeichStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(TeichStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(TeichStatus::InvalidUtf8, e))
}

fn out_ptr<T>(p: *mut T) -> Result<&'static mut T, Failure> {
    // SAFETY: callers pass a valid, writable pointer or null
    unsafe { p.as_mut() }.ok_or_else(|| Failure::new(TeichStatus::NullPointer, "null output pointer"))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let out = out_ptr(out)?;
    let c = CString::new(s).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn teich_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn teich_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a graph from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_from_json(json: *const c_char, out: *mut *mut TeichGraph) -> TeichStatus {
    guard(|| {
        let s = read_str(json)?;
        let out = out_ptr(out)?;
        let g = StableGraph::from_json_str(s).map_err(|e| Failure::new(TeichStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(TeichGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`teich_graph_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_free(g: *mut TeichGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn graph_ref<'a>(g: *const TeichGraph) -> Result<&'a StableGraph, Failure> {
    g.as_ref()
        .map(|g| &g.0)
        .ok_or_else(|| Failure::new(TeichStatus::NullPointer, "null graph"))
}

/// First Betti number of a connected graph.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_genus(g: *const TeichGraph, out: *mut u32) -> TeichStatus {
    guard(|| {
        let g = graph_ref(g)?;
        *out_ptr(out)? = g.genus().map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        Ok(())
    })
}

/// Type `(g, n)` of a stable graph.
///
/// # Safety
/// `g` must be a live handle; `genus` and `tails` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_type(g: *const TeichGraph, genus: *mut u32, tails: *mut u32) -> TeichStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let (a, b) = g.type_of().map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        *out_ptr(genus)? = a;
        *out_ptr(tails)? = b;
        Ok(())
    })
}

/// Validation report as JSON; `*ok` is set to 1 when the graph is stable and
/// well formed.
///
/// # Safety
/// `g` must be a live handle; `ok` and `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_validate(
    g: *const TeichGraph,
    ok: *mut i32,
    report: *mut *mut c_char,
) -> TeichStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let r = g.validate();
        *out_ptr(ok)? = i32::from(r.ok);
        let s = serde_json::to_string(&r).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        give_string(s, report)
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_graph_to_json(g: *const TeichGraph, out: *mut *mut c_char) -> TeichStatus {
    guard(|| give_string(graph_ref(g)?.to_json_string(), out))
}

/// Trivalent graphs of type `(g, n)` as a JSON array; `*count` receives
/// their number.
///
/// # Safety
/// `count` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_enumerate_trivalent(
    g: u32,
    n: u32,
    count: *mut usize,
    out: *mut *mut c_char,
) -> TeichStatus {
    guard(|| {
        let list = enumerate_trivalent(g, n).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        *out_ptr(count)? = list.len();
        let json: Vec<_> = list.iter().map(StableGraph::to_json).collect();
        give_string(
            serde_json::to_string(&json).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?,
            out,
        )
    })
}

/// Multiple zeta value `zeta(s[0], .., s[len-1])`.
///
/// # Safety
/// `s` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_mzv(s: *const u32, len: usize, out: *mut f64) -> TeichStatus {
    guard(|| {
        if s.is_null() {
            return Err(Failure::new(TeichStatus::NullPointer, "null index array"));
        }
        let idx = std::slice::from_raw_parts(s, len);
        *out_ptr(out)? = kz::mzv(idx).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        Ok(())
    })
}

/// Universal associator to weight `weight` with default ODE settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_associator_new(weight: u32, out: *mut *mut TeichAssociator) -> TeichStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let u = kz::universal_associator(weight as usize, &OdeOptions::default())
            .map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        *out = Box::into_raw(Box::new(TeichAssociator(u)));
        Ok(())
    })
}

/// # Safety
/// `a` must come from [`teich_associator_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn teich_associator_free(a: *mut TeichAssociator) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Coefficient of a word in the letters `a` and `b`, e.g. `"ab"`.
///
/// # Safety
/// `a` must be a live handle, `word` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn teich_associator_coefficient(
    a: *const TeichAssociator,
    word: *const c_char,
    out: *mut f64,
) -> TeichStatus {
    guard(|| {
        let a = a
            .as_ref()
            .ok_or_else(|| Failure::new(TeichStatus::NullPointer, "null associator"))?;
        let w = read_str(word)?;
        let letters = teich::freenc::parse_word(w)
            .filter(|l| l.iter().all(|&x| x < 2))
            .ok_or_else(|| Failure::new(TeichStatus::ParseError, format!("bad word {w:?}")))?;
        if letters.len() > a.0.weight {
            return Err(Failure::new(TeichStatus::InvalidInput, "word longer than the weight bound"));
        }
        *out_ptr(out)? = a.0.coeff(&letters);
        Ok(())
    })
}

fn matrix_from(n: usize, data: &[i64]) -> QMatrix {
    let mut m = QMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rat_int(data[i * n + j]));
        }
    }
    m
}

/// Connection matrix of an integer nilpotent pair `(A, B)`, both `n x n`
/// row-major. Writes `2 n^2` doubles (real, imaginary interleaved) to `out`
/// and the error estimate to `error`.
///
/// # Safety
/// `a`, `b` must hold `n*n` values, `out` room for `2*n*n`, `error` writable.
#[no_mangle]
pub unsafe extern "C" fn teich_phi(
    n: usize,
    a: *const i64,
    b: *const i64,
    out: *mut f64,
    error: *mut f64,
) -> TeichStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(Failure::new(TeichStatus::NullPointer, "null matrix pointer"));
        }
        if n == 0 {
            return Err(Failure::new(TeichStatus::InvalidInput, "empty matrix"));
        }
        let am = matrix_from(n, std::slice::from_raw_parts(a, n * n));
        let bm = matrix_from(n, std::slice::from_raw_parts(b, n * n));
        let pair = NilpotentPair::new(am, bm).map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        let phi = kz::ode_connection_matrix(&pair, &OdeOptions::default())
            .map_err(|e| Failure::new(TeichStatus::InvalidInput, e))?;
        let dst = std::slice::from_raw_parts_mut(out, 2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = phi.matrix[(i, j)];
                dst[2 * (i * n + j)] = z.re;
                dst[2 * (i * n + j) + 1] = z.im;
            }
        }
        *out_ptr(error)? = phi.error_estimate;
        Ok(())
    })
}

/// Witt dimension for `r` letters in degree `k`, if it fits in 64 bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teich_witt_dim(r: u64, k: u64, out: *mut u64) -> TeichStatus {
    guard(|| {
        if k == 0 {
            return Err(Failure::new(TeichStatus::InvalidInput, "degree must be positive"));
        }
        let d = teich::freenc::witt_dim(r, k);
        *out_ptr(out)? = u64::try_from(d).map_err(|_| Failure::new(TeichStatus::NotSupported, "value exceeds 64 bits"))?;
        Ok(())
    })
}
