//! C ABI over `dpot`.
//!
//! Every fallible function returns a [`DpotStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`dpot_last_error`] on the calling thread. Handles are opaque and owned by
//! the caller, who releases them with the matching `_free` function. Strings
//! returned by the library are released with [`dpot_string_free`].

use dpot::awec::{run_awec, AwecParams};
use dpot::channels::{Channel, ChannelKind, ChannelSpec};
use dpot::harness::pipeline::{pipeline_report, PipelineConfig};
use dpot::harness::report::to_json;
use dpot::wec::{bucket, decimal, gl_bits, ot_feasible};
use dpot::{Error, RandomStream, SignVector};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpotStatus {
    Ok = 0,
    InvalidParameter = 1,
    DimensionMismatch = 2,
    ProtocolFault = 3,
    RetriesExhausted = 4,
    Config = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

/// A validated channel.
pub struct DpotChannel(Channel);

/// A seeded random stream.
pub struct DpotStream(RandomStream);

/// One AWEC execution. `o_b` is meaningful only when `erased` is false.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DpotAwecResult {
    pub erased: bool,
    pub o_a: i64,
    pub o_b: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DpotStatus {
    match e {
        Error::InvalidParameter(_) => DpotStatus::InvalidParameter,
        Error::DimensionMismatch { .. } => DpotStatus::DimensionMismatch,
        Error::ProtocolFault { .. } => DpotStatus::ProtocolFault,
        Error::RetriesExhausted(_) => DpotStatus::RetriesExhausted,
        Error::Config(_) => DpotStatus::Config,
        Error::Io(_) => DpotStatus::Io,
    }
}

enum Fault {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Fault {
    fn from(e: Error) -> Self {
        Fault::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fault>) -> DpotStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DpotStatus::Ok,
        Ok(Err(Fault::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fault::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            DpotStatus::NullPointer
        }
        Ok(Err(Fault::Utf8(name))) => {
            set_error(format!("{name} is not valid UTF-8"));
            DpotStatus::InvalidParameter
        }
        Err(_) => {
            set_error("internal panic".into());
            DpotStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fault> {
    p.as_ref().ok_or(Fault::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fault> {
    p.as_mut().ok_or(Fault::Null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fault> {
    if p.is_null() {
        return Err(Fault::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fault::Utf8(name))
}

unsafe fn signs(p: *const i8, n: usize, name: &'static str) -> Result<SignVector, Fault> {
    if p.is_null() {
        return Err(Fault::Null(name));
    }
    let raw = std::slice::from_raw_parts(p, n);
    let wide: Vec<i64> = raw.iter().map(|&s| s as i64).collect();
    Ok(SignVector::from_signs(&wide)?)
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn dpot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpot_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a channel. `kind` is a channel key such as `trusted-laplace`;
/// `leak_index` is 1-based and 0 means none.
///
/// # Safety
/// `kind` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_channel_new(
    kind: *const c_char,
    n: usize,
    eps: f64,
    delta: f64,
    leak_index: usize,
    out_channel: *mut *mut DpotChannel,
) -> DpotStatus {
    guard(|| {
        let slot = out(out_channel, "out_channel")?;
        let kind: ChannelKind = text(kind, "kind")?.parse()?;
        let mut spec = ChannelSpec::new(kind, n, eps, delta);
        if leak_index > 0 {
            spec = spec.with_leak_index(leak_index - 1);
        }
        *slot = Box::into_raw(Box::new(DpotChannel(Channel::new(spec)?)));
        Ok(())
    })
}

/// # Safety
/// `channel` must be null or a handle from [`dpot_channel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpot_channel_free(channel: *mut DpotChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

#[no_mangle]
pub extern "C" fn dpot_stream_new(seed: u64) -> *mut DpotStream {
    Box::into_raw(Box::new(DpotStream(RandomStream::from_seed(seed))))
}

/// # Safety
/// `stream` must be null or a handle from [`dpot_stream_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpot_stream_free(stream: *mut DpotStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// `<x, y>` for two arrays of `n` signs in {-1, +1}.
///
/// # Safety
/// `x` and `y` must point to `n` readable bytes and `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_inner_product(x: *const i8, y: *const i8, n: usize, out_value: *mut i64) -> DpotStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = signs(x, n, "x")?.inner(&signs(y, n, "y")?)?;
        Ok(())
    })
}

/// `ceil((o + s) / (1000 ell))` for an offset `s` in `[1, 1000 ell]`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_bucket(o: i64, s: i64, ell: u64, out_value: *mut i64) -> DpotStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = bucket(o, s, ell)?;
        Ok(())
    })
}

/// Parity of `bits & r`.
#[no_mangle]
pub extern "C" fn dpot_gl(bits: u64, r: u64) -> u8 {
    gl_bits(bits, r)
}

/// `44 (alpha + p) <= 1 - q`, evaluated exactly on decimal strings.
///
/// # Safety
/// The three strings must be nul-terminated and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_ot_feasible(alpha: *const c_char, p: *const c_char, q: *const c_char, out_value: *mut bool) -> DpotStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let (a, p, q) = (decimal(text(alpha, "alpha")?)?, decimal(text(p, "p")?)?, decimal(text(q, "q")?)?);
        *slot = ot_feasible(&a, &p, &q)?;
        Ok(())
    })
}

fn awec_params(channel: &Channel, ell: u64, lambda1: f64, lambda2: f64, k: usize) -> dpot::Result<AwecParams> {
    let spec = channel.spec();
    if k == 0 {
        AwecParams::new(spec.n, ell, spec.eps, lambda1, lambda2)
    } else {
        AwecParams::overridden(spec.n, ell, spec.eps, lambda1, lambda2, k)
    }
}

/// One AWEC execution over `channel`, advancing `stream`. `k = 0` uses the derived value.
///
/// # Safety
/// `channel` and `stream` must be live handles and `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_run_awec(
    channel: *const DpotChannel,
    ell: u64,
    lambda1: f64,
    lambda2: f64,
    k: usize,
    stream: *mut DpotStream,
    out_result: *mut DpotAwecResult,
) -> DpotStatus {
    guard(|| {
        let channel = &non_null(channel, "channel")?.0;
        let stream = &mut out(stream, "stream")?.0;
        let slot = out(out_result, "out_result")?;
        let o = run_awec(channel, &awec_params(channel, ell, lambda1, lambda2, k)?, stream)?;
        *slot = DpotAwecResult { erased: o.erased(), o_a: o.o_a, o_b: o.o_b.unwrap_or(0) };
        Ok(())
    })
}

/// Full pipeline report as JSON, with the baseline adversaries and default lambdas.
/// Release the string with [`dpot_string_free`].
///
/// # Safety
/// `channel` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn dpot_pipeline_json(channel: *const DpotChannel, ell: u64, trials: u64, seed: u64, out_json: *mut *mut c_char) -> DpotStatus {
    guard(|| {
        let channel = &non_null(channel, "channel")?.0;
        let slot = out(out_json, "out_json")?;
        let awec = awec_params(channel, ell, dpot::awec::DEFAULT_LAMBDA1, dpot::awec::DEFAULT_LAMBDA2, 0)?;
        let config = PipelineConfig { channel: channel.spec().clone(), awec, adversaries: Vec::new(), trials };
        let json = to_json("pipeline", seed, &config, &pipeline_report(&config, seed)?)?;
        *slot = CString::new(json).map_err(|e| Error::Io(e.to_string()))?.into_raw();
        Ok(())
    })
}
