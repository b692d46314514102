//! C ABI over `bec-sweep`.
//!
//! Every fallible function returns a [`BecStatus`] and writes its result
//! through an out-pointer. Objects are opaque handles released with the
//! matching `*_free`. After a non-`Ok` status, [`bec_last_error_message`]
//! copies a description of the failure for the calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bec_sweep::cat::{build_cat_state, glauber_overlap, squeezing_ratio, CatState};
use bec_sweep::exact::{corner_probability, forward_distribution, lz_phase, reverse_distribution, Distribution, SweepParams};
use bec_sweep::sector::{enumerate_basis, verify_integrability, SectorBasis, SectorSpec};
use bec_sweep::tdse::{transition_probabilities, IntegrationPlan};
use bec_sweep::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct BecSector {
    spec: SectorSpec,
    basis: SectorBasis,
}

pub struct BecDistribution {
    inner: Distribution,
}

pub struct BecCatState {
    inner: CatState,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BecStatus {
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::BasisMismatch | Error::Config(_) => {
            BecStatus::InvalidArgument
        }
        Error::Capacity { .. } => BecStatus::Capacity,
        Error::Io(_) => BecStatus::Io,
        _ => BecStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BecStatus, String)>) -> BecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BecStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside bec-sweep".into());
            BecStatus::Panic
        }
    }
}

fn lib<T>(r: bec_sweep::Result<T>) -> Result<T, (BecStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BecStatus, String) {
    (BecStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (BecStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (BecStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread as a NUL-terminated string.
///
/// Returns the message length excluding the terminator. Nothing is written
/// when `buf` is null or `len` is too small to hold the message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bec_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > bytes.len() {
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        bytes.len()
    })
}

/// Creates a sector with `channels` reaction channels.
///
/// # Safety
/// `q` and `eps` must point to `channels` values; `out_sector` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_new(
    n_total: u32,
    q: *const u32,
    eps: *const f64,
    channels: usize,
    g: f64,
    beta: f64,
    tau: f64,
    out_sector: *mut *mut BecSector,
) -> BecStatus {
    guard(|| {
        let out_sector = out(out_sector, "out_sector")?;
        let q = slice(q, channels, "q")?.to_vec();
        let eps = slice(eps, channels, "eps")?.to_vec();
        let spec = lib(SectorSpec::new(n_total, q, g, beta, tau, eps))?;
        let basis = lib(enumerate_basis(&spec))?;
        *out_sector = Box::into_raw(Box::new(BecSector { spec, basis }));
        Ok(())
    })
}

/// # Safety
/// `sector` must be null or a handle from [`bec_sector_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_free(sector: *mut BecSector) {
    if !sector.is_null() {
        drop(Box::from_raw(sector));
    }
}

/// Number of basis states in the sector.
///
/// # Safety
/// `sector` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_dim(sector: *const BecSector, out_dim: *mut usize) -> BecStatus {
    guard(|| {
        let s = sector.as_ref().ok_or_else(|| null("sector"))?;
        *out(out_dim, "out_dim")? = s.basis.len();
        Ok(())
    })
}

/// Occupations of basis state `index`: molecule number and `channels` pair numbers.
///
/// # Safety
/// `sector` must be a live handle; `out_m` must hold `channels` values.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_state(
    sector: *const BecSector,
    index: usize,
    out_n: *mut u32,
    out_m: *mut u32,
    channels: usize,
) -> BecStatus {
    guard(|| {
        let s = sector.as_ref().ok_or_else(|| null("sector"))?;
        if index >= s.basis.len() {
            return Err((BecStatus::InvalidArgument, format!("index {index} out of range")));
        }
        if channels < s.spec.channels() {
            return Err((BecStatus::BufferTooSmall, format!("need {} channel slots", s.spec.channels())));
        }
        let st = s.basis.state(index);
        *out(out_n, "out_n")? = st.n;
        if out_m.is_null() {
            return Err(null("out_m"));
        }
        std::slice::from_raw_parts_mut(out_m, channels)[..st.m.len()].copy_from_slice(&st.m);
        Ok(())
    })
}

/// Largest relative commutator residual and the integrability derivative residual.
///
/// # Safety
/// `times` must point to `count` values; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_integrability(
    sector: *const BecSector,
    times: *const f64,
    count: usize,
    out_commutator: *mut f64,
    out_derivative: *mut f64,
) -> BecStatus {
    guard(|| {
        let s = sector.as_ref().ok_or_else(|| null("sector"))?;
        let ts = slice(times, count, "times")?;
        let r = lib(verify_integrability(&s.spec, ts))?;
        *out(out_commutator, "out_commutator")? = r.commutator_residual;
        *out(out_derivative, "out_derivative")? = r.derivative_residual;
        Ok(())
    })
}

/// Propagates from basis state `initial` over `[−half_width, half_width]` and
/// writes the final occupation probabilities in basis order.
///
/// # Safety
/// `sector` must be a live handle; `out_probs` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn bec_sector_transition(
    sector: *const BecSector,
    initial: usize,
    half_width: f64,
    resolution: f64,
    out_probs: *mut f64,
    len: usize,
) -> BecStatus {
    guard(|| {
        let s = sector.as_ref().ok_or_else(|| null("sector"))?;
        if initial >= s.basis.len() {
            return Err((BecStatus::InvalidArgument, format!("initial state {initial} out of range")));
        }
        if len < s.basis.len() {
            return Err((BecStatus::BufferTooSmall, format!("need {} slots", s.basis.len())));
        }
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        let h = lib(bec_sweep::sector::build_hamiltonian(&s.spec, &s.basis))?;
        let plan = lib(IntegrationPlan::symmetric(&h, half_width, resolution))?;
        let r = lib(transition_probabilities(&s.spec, s.basis.state(initial), &plan))?;
        std::slice::from_raw_parts_mut(out_probs, len)[..r.probs.len()].copy_from_slice(&r.probs);
        Ok(())
    })
}

unsafe fn new_distribution(
    out_dist: *mut *mut BecDistribution,
    make: impl FnOnce() -> bec_sweep::Result<Distribution>,
) -> BecStatus {
    guard(|| {
        let o = out(out_dist, "out_dist")?;
        *o = Box::into_raw(Box::new(BecDistribution { inner: lib(make())? }));
        Ok(())
    })
}

/// Pairs formed from `n_total` molecules in one dissociating sweep.
///
/// # Safety
/// `out_dist` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_reverse_distribution(n_total: u32, q: u32, x: f64, out_dist: *mut *mut BecDistribution) -> BecStatus {
    new_distribution(out_dist, || Ok(reverse_distribution(n_total, q, &SweepParams::from_x(x)?)))
}

/// Molecules formed from `n_total` atom pairs in one associating sweep.
///
/// # Safety
/// `out_dist` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_forward_distribution(n_total: u32, q: u32, x: f64, out_dist: *mut *mut BecDistribution) -> BecStatus {
    new_distribution(out_dist, || forward_distribution(n_total, q, &SweepParams::from_x(x)?))
}

/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_distribution_free(dist: *mut BecDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of support points; the first one is the value 0.
///
/// # Safety
/// `dist` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_distribution_len(dist: *const BecDistribution, out_len: *mut usize) -> BecStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        *out(out_len, "out_len")? = d.inner.len();
        Ok(())
    })
}

/// # Safety
/// `dist` must be a live handle; `out_probs` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn bec_distribution_probs(dist: *const BecDistribution, out_probs: *mut f64, len: usize) -> BecStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        let p = d.inner.probs();
        if len < p.len() {
            return Err((BecStatus::BufferTooSmall, format!("need {} slots", p.len())));
        }
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        std::slice::from_raw_parts_mut(out_probs, len)[..p.len()].copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `dist` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_distribution_mean(dist: *const BecDistribution, out_mean: *mut f64) -> BecStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        *out(out_mean, "out_mean")? = d.inner.mean();
        Ok(())
    })
}

/// Two-level scattering phase `3π/4 − arg Γ(iy)`.
///
/// # Safety
/// `out_phase` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_lz_phase(y: f64, out_phase: *mut f64) -> BecStatus {
    guard(|| {
        let o = out(out_phase, "out_phase")?;
        *o = lib(lz_phase(y))?;
        Ok(())
    })
}

/// Probability of converting every atom pair in one associating sweep.
///
/// # Safety
/// `out_prob` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_corner_probability(n_total: u32, q: u32, x: f64, out_prob: *mut f64) -> BecStatus {
    guard(|| {
        let o = out(out_prob, "out_prob")?;
        *o = corner_probability(n_total, q, &lib(SweepParams::from_x(x))?);
        Ok(())
    })
}

/// Cat state left behind by dissociating a coherent molecular condensate.
///
/// # Safety
/// `out_state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_cat_state_new(
    alpha_re: f64,
    alpha_im: f64,
    lambda: f64,
    tol: f64,
    out_state: *mut *mut BecCatState,
) -> BecStatus {
    guard(|| {
        let o = out(out_state, "out_state")?;
        let inner = lib(build_cat_state(num_complex::Complex64::new(alpha_re, alpha_im), lambda, tol))?;
        *o = Box::into_raw(Box::new(BecCatState { inner }));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_cat_state_free(state: *mut BecCatState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Overlap `⟨α|A⟩` with a Glauber coherent state.
///
/// # Safety
/// `state` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bec_cat_overlap(
    state: *const BecCatState,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BecStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let z = glauber_overlap(&s.inner, num_complex::Complex64::new(re, im));
        *out(out_re, "out_re")? = z.re;
        *out(out_im, "out_im")? = z.im;
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bec_cat_squeezing_ratio(state: *const BecCatState, out_ratio: *mut f64) -> BecStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        *out(out_ratio, "out_ratio")? = squeezing_ratio(&s.inner);
        Ok(())
    })
}
