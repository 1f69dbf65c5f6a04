//! C ABI over the `csbp` library.
//!
//! Every function returns a [`CsbpStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`csbp_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use csbp::analytics;
use csbp::conditioning::{self, Regime};
use csbp::decorate;
use csbp::metric;
use csbp::samplers;
use csbp::tree_core::{self, PointedTree};
use csbp::{Error, ModelParams, RandomStream};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsbpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Overflow = 3,
    Quadrature = 4,
    InvalidTree = 5,
    Parse = 6,
    SizeLimit = 7,
    Unsupported = 8,
    Config = 9,
    Io = 10,
    FourPoint = 11,
    Utf8 = 12,
    Panic = 13,
}

/// Conditioning regime selector for [`csbp_limit_value`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsbpRegime {
    Extinction = 0,
    Kesten = 1,
    Poisson = 2,
    High = 3,
}

/// Model parameters `(beta, theta, alpha)`.
pub struct CsbpParams(ModelParams);

/// Deterministic random stream.
pub struct CsbpStream(RandomStream);

/// Pointed, possibly marked, real tree.
pub struct CsbpTree(PointedTree);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CsbpStatus {
    match e {
        Error::Domain(_) => CsbpStatus::Domain,
        Error::Overflow(_) => CsbpStatus::Overflow,
        Error::Quadrature(_) => CsbpStatus::Quadrature,
        Error::FourPoint(..) => CsbpStatus::FourPoint,
        Error::InvalidTree(_) => CsbpStatus::InvalidTree,
        Error::SizeLimit(_) => CsbpStatus::SizeLimit,
        Error::Unsupported(_) => CsbpStatus::Unsupported,
        Error::Config(_) => CsbpStatus::Config,
        Error::Parse { .. } => CsbpStatus::Parse,
        Error::Io(_) => CsbpStatus::Io,
    }
}

struct Fail(CsbpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

fn null(what: &str) -> Fail {
    Fail(CsbpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Res<()>) -> CsbpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsbpStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            CsbpStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T) -> Res<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, v: T) -> Res<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(v)));
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char) -> Res<&'a str> {
    if s.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Fail(CsbpStatus::Utf8, e.to_string()))
}

fn string_out(s: String) -> Res<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail(CsbpStatus::Utf8, e.to_string()))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn csbp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn csbp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csbp_params_new(
    beta: f64,
    theta: f64,
    alpha: f64,
    out: *mut *mut CsbpParams,
) -> CsbpStatus {
    guard(|| boxed(out, CsbpParams(ModelParams::new(beta, theta, alpha)?)))
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csbp_params_free(p: *mut CsbpParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csbp_stream_new(seed: u64, out: *mut *mut CsbpStream) -> CsbpStatus {
    guard(|| boxed(out, CsbpStream(RandomStream::new(seed))))
}

/// Independent child stream `index` of `s`.
///
/// # Safety
/// `s` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_stream_split(
    s: *const CsbpStream,
    index: u64,
    out: *mut *mut CsbpStream,
) -> CsbpStatus {
    guard(|| {
        let s = get(s, "stream")?;
        boxed(out, CsbpStream(s.0.split(index)))
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csbp_stream_free(s: *mut CsbpStream) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Survival rate `c_t`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_c_t(p: *const CsbpParams, t: f64, out: *mut f64) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::c_t(p, t)?)
    })
}

/// Exponential rate `c~_t` of the surviving mass.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_c_tilde_t(p: *const CsbpParams, t: f64, out: *mut f64) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::c_tilde_t(p, t)?)
    })
}

/// Laplace exponent `u(lambda, t)`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_u(
    p: *const CsbpParams,
    lambda: f64,
    t: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::u(p, lambda, t)?)
    })
}

/// Entrance density of the excursion measure at time `t`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_entrance_density(
    p: *const CsbpParams,
    t: f64,
    x: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::entrance_density(p, t, x)?)
    })
}

/// Transition density from `x` to `y`, absolutely continuous part.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_transition_density(
    p: *const CsbpParams,
    t: f64,
    x: f64,
    y: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::transition_density(p, t, x, y)?.density)
    })
}

/// Martingale `M_t` at mass `z`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_martingale_m(
    p: *const CsbpParams,
    t: f64,
    z: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::martingale_m(p, t, z)?)
    })
}

/// Size-biased Laplace transform of the Poisson limit.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_biased_laplace_poisson(
    p: *const CsbpParams,
    s: f64,
    lambda: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, analytics::biased_laplace_poisson(p, s, lambda)?)
    })
}

/// Conditional Laplace transform given mass `a` at time `t + s`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_conditional_laplace(
    p: *const CsbpParams,
    lambda: f64,
    s: f64,
    t: f64,
    a: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(
            out,
            conditioning::conditional_laplace_at(p, lambda, s, t, a)?,
        )
    })
}

/// Mass of `1 - exp(-lambda Z_s)` on extinction by time `t + s`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_extinction_functional(
    p: *const CsbpParams,
    lambda: f64,
    s: f64,
    t: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        put(out, conditioning::extinction_functional(p, lambda, s, t)?)
    })
}

/// `n`-th moment of the entrance law at time `t`.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_moment(
    p: *const CsbpParams,
    t: f64,
    n: u32,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| put(out, analytics::moment_n(&get(p, "params")?.0, t, n)?))
}

/// Limit of the conditioned Laplace transform in `regime`. `alpha` is only
/// read for the Poisson regime.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_limit_value(
    p: *const CsbpParams,
    regime: CsbpRegime,
    alpha: f64,
    lambda: f64,
    s: f64,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let r = match regime {
            CsbpRegime::Extinction => Regime::Extinction,
            CsbpRegime::Kesten => Regime::Kesten,
            CsbpRegime::Poisson => Regime::Poisson { alpha },
            CsbpRegime::High => Regime::High,
        };
        put(
            out,
            conditioning::limit_value(&get(p, "params")?.0, r, lambda, s)?,
        )
    })
}

/// Draws `Z_t` started from mass `x`.
///
/// # Safety
/// `p`, `rng` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_sample_transition(
    p: *const CsbpParams,
    x: f64,
    t: f64,
    rng: *mut CsbpStream,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let rng = &mut get_mut(rng, "stream")?.0;
        put(out, samplers::sample_transition(p, x, t, rng)?)
    })
}

/// Draws `Z_t` under the excursion measure conditioned on survival.
///
/// # Safety
/// `p`, `rng` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_sample_entrance(
    p: *const CsbpParams,
    t: f64,
    rng: *mut CsbpStream,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let rng = &mut get_mut(rng, "stream")?.0;
        put(out, samplers::sample_entrance_survival(p, t, rng)?)
    })
}

/// Draws the process with immigration at time `t` from zero.
///
/// # Safety
/// `p`, `rng` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_sample_zalpha(
    p: *const CsbpParams,
    t: f64,
    rng: *mut CsbpStream,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let rng = &mut get_mut(rng, "stream")?.0;
        put(out, samplers::sample_zalpha_exact(p, t, rng)?.value)
    })
}

/// Draws the mass at level `s` under the Kesten limit.
///
/// # Safety
/// `p`, `rng` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_sample_kesten(
    p: *const CsbpParams,
    s: f64,
    rng: *mut CsbpStream,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let rng = &mut get_mut(rng, "stream")?.0;
        put(out, decorate::sample_kesten_zs(p, s, rng)?)
    })
}

/// Draws the mass at level `s` of a decorated Kesten backbone.
///
/// # Safety
/// `p`, `rng` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_sample_decorated(
    p: *const CsbpParams,
    s: f64,
    rng: *mut CsbpStream,
    out: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let rng = &mut get_mut(rng, "stream")?.0;
        put(out, decorate::sample_decorated_zs(p, s, rng)?)
    })
}

/// Parses a tree from its text form.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csbp_tree_from_text(
    text: *const c_char,
    out: *mut *mut CsbpTree,
) -> CsbpStatus {
    guard(|| boxed(out, CsbpTree(tree_core::from_text(read_str(text)?)?)))
}

/// Text form of a tree. Release the result with [`csbp_string_free`].
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_tree_to_text(
    t: *const CsbpTree,
    out: *mut *mut c_char,
) -> CsbpStatus {
    guard(|| put(out, string_out(tree_core::to_text(&get(t, "tree")?.0))?))
}

/// Canonical representative of a tree.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn csbp_tree_canonical(
    t: *const CsbpTree,
    out: *mut *mut CsbpTree,
) -> CsbpStatus {
    guard(|| {
        let c = tree_core::canonical(&get(t, "tree")?.0);
        boxed(out, CsbpTree(c.tree().clone()))
    })
}

/// Number of pointed vertices and total length.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn csbp_tree_info(
    t: *const CsbpTree,
    n_pointed: *mut usize,
    total_length: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let t = &get(t, "tree")?.0;
        put(n_pointed, t.n_pointed())?;
        put(total_length, t.total_length())
    })
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csbp_tree_free(t: *mut CsbpTree) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Two-sided bound on the Gromov-Hausdorff distance of pointed trees.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn csbp_gh_bounds(
    a: *const CsbpTree,
    b: *const CsbpTree,
    lower: *mut f64,
    upper: *mut f64,
) -> CsbpStatus {
    guard(|| {
        let d = metric::gh_bounds(&get(a, "tree")?.0, &get(b, "tree")?.0)?;
        put(lower, d.lower)?;
        put(upper, d.upper)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panic_is_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CsbpStatus::Panic);
        let msg = unsafe { CStr::from_ptr(csbp_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn every_error_has_a_status() {
        assert_eq!(
            status_of(&Error::Parse {
                line: 1,
                msg: "x".into()
            }),
            CsbpStatus::Parse
        );
        assert_eq!(
            status_of(&Error::FourPoint(0, 1, 2, 3)),
            CsbpStatus::FourPoint
        );
    }
}
