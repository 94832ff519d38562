//! C interface to the anokat engine.
//!
//! Objects cross the boundary as opaque handles created by `anokat_*_new`
//! style constructors and released with the matching `*_free`. Every fallible
//! call returns an [`AnokatStatus`]; on failure the message is available from
//! [`anokat_last_error`] on the same thread. Strings returned by the library
//! must be released with [`anokat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use anokat::dynamics::{build_box_shuffle, pushforward, AreaMap, Rational};
use anokat::ot::hull::{dist_to_hull_with, HullOptions};
use anokat::ot::{w1, HullReference};
use anokat::scheme::{self, RunConfig};
use anokat::surface::{sample_leb, sample_mu_y, DiscreteMeasure, SurfacePoint, SurfaceTag};
use anokat::verify::{run_suite, Suite, VerifyOptions};
use anokat::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnokatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeCap = 3,
    SeamHit = 4,
    NonConvergence = 5,
    Config = 6,
    StepRejected = 7,
    Io = 8,
    Internal = 9,
}

/// Surface selector: cylinder, sphere or disk.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnokatSurface {
    Cylinder = 0,
    Sphere = 1,
    Disk = 2,
}

impl From<AnokatSurface> for SurfaceTag {
    fn from(s: AnokatSurface) -> SurfaceTag {
        match s {
            AnokatSurface::Cylinder => SurfaceTag::Cylinder,
            AnokatSurface::Sphere => SurfaceTag::Sphere,
            AnokatSurface::Disk => SurfaceTag::Disk,
        }
    }
}

/// Opaque finite measure on a surface.
pub struct AnokatMeasure(DiscreteMeasure);

/// Opaque area-preserving map.
pub struct AnokatMap(AreaMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AnokatStatus {
    match e {
        Error::InvalidArgument(_) | Error::TagMismatch(..) | Error::OscillationCap { .. } | Error::OrbitCap { .. } => {
            AnokatStatus::InvalidArgument
        }
        Error::SizeCap { .. } => AnokatStatus::SizeCap,
        Error::SeamHit { .. } => AnokatStatus::SeamHit,
        Error::NonConvergence { .. } | Error::InfeasiblePlan(_) => AnokatStatus::NonConvergence,
        Error::Config(_) | Error::Json(_) => AnokatStatus::Config,
        Error::StepRejected { .. } => AnokatStatus::StepRejected,
        Error::Io(_) | Error::Csv(_) => AnokatStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (AnokatStatus, String)>) -> AnokatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AnokatStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AnokatStatus::Internal
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (AnokatStatus, String)>;
}

impl<T> IntoFfi<T> for anokat::Result<T> {
    fn ffi(self) -> Result<T, (AnokatStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (AnokatStatus, String) {
    (AnokatStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (AnokatStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (AnokatStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (AnokatStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (AnokatStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, or 0 when none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn anokat_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn anokat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn anokat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn measure_out(out: *mut *mut AnokatMeasure, m: DiscreteMeasure) -> Result<(), (AnokatStatus, String)> {
    unsafe { write_out(out, Box::into_raw(Box::new(AnokatMeasure(m)))) }
}

fn map_out(out: *mut *mut AnokatMap, m: AreaMap) -> Result<(), (AnokatStatus, String)> {
    unsafe { write_out(out, Box::into_raw(Box::new(AnokatMap(m)))) }
}

/// Builds a measure from `n` atoms `(theta[i], y[i])` with weights `w[i]`,
/// normalised to total mass 1.
///
/// # Safety
/// The three arrays must hold `n` values each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_measure_new(
    surface: AnokatSurface,
    theta: *const f64,
    y: *const f64,
    w: *const f64,
    n: usize,
    out: *mut *mut AnokatMeasure,
) -> AnokatStatus {
    guard(|| {
        if n > 0 && (theta.is_null() || y.is_null() || w.is_null()) {
            return Err(null("atom array"));
        }
        let tag = SurfaceTag::from(surface);
        let mut atoms = Vec::with_capacity(n);
        for i in 0..n {
            let p = SurfacePoint::new(*theta.add(i), *y.add(i), tag).ffi()?;
            atoms.push((p, *w.add(i)));
        }
        measure_out(out, DiscreteMeasure::normalized(tag, atoms, "ffi").ffi()?)
    })
}

/// The stratified longitude measure `μ_y` with `m` atoms.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_measure_longitude(
    surface: AnokatSurface,
    y: f64,
    m: usize,
    out: *mut *mut AnokatMeasure,
) -> AnokatStatus {
    guard(|| measure_out(out, sample_mu_y(y, m, surface.into()).ffi()?))
}

/// The stratified Lebesgue measure on an `m_theta × m_y` grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_measure_leb(
    surface: AnokatSurface,
    m_theta: usize,
    m_y: usize,
    out: *mut *mut AnokatMeasure,
) -> AnokatStatus {
    guard(|| measure_out(out, sample_leb(m_theta, m_y, surface.into()).ffi()?))
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn anokat_measure_len(m: *const AnokatMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `m` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn anokat_measure_free(m: *mut AnokatMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Exact Kantorovich distance between two measures on the same surface.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_w1(mu: *const AnokatMeasure, nu: *const AnokatMeasure, out: *mut f64) -> AnokatStatus {
    guard(|| {
        let (mu, nu) = (borrow(mu, "mu")?, borrow(nu, "nu")?);
        write_out(out, w1(&mu.0, &nu.0).ffi()?)
    })
}

/// Distance from `mu` to the hull of Leb (on an `leb_theta × leb_y` grid) and
/// the two boundary measures (with `ref_atoms` atoms each).
///
/// # Safety
/// `mu` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_dist_to_hull(
    mu: *const AnokatMeasure,
    leb_theta: usize,
    leb_y: usize,
    ref_atoms: usize,
    out: *mut f64,
) -> AnokatStatus {
    guard(|| {
        let mu = borrow(mu, "mu")?;
        let opts = HullOptions {
            cap: usize::MAX,
            ..HullOptions::default()
        };
        let reference = HullReference::standard(mu.0.tag(), leb_theta, leb_y, ref_atoms, opts.cap).ffi()?;
        let r = dist_to_hull_with(&mu.0, &reference, &opts).ffi()?;
        write_out(out, r.distance)
    })
}

/// The identity map.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_identity(out: *mut *mut AnokatMap) -> AnokatStatus {
    guard(|| map_out(out, AreaMap::identity()))
}

/// Rotation by the exact rational `p/q`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_rotation(p: i64, q: i64, out: *mut *mut AnokatMap) -> AnokatStatus {
    guard(|| map_out(out, AreaMap::rotation(Rational::from_ints(p, q).ffi()?)))
}

/// The box shuffle commuting with `R_{1/q}` at scale `eps`, default schedule.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_box_shuffle(q: u64, eps: f64, out: *mut *mut AnokatMap) -> AnokatStatus {
    guard(|| map_out(out, build_box_shuffle(q, eps).ffi()?.0))
}

/// `outer ∘ inner`. Both inputs stay owned by the caller.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_compose(
    outer: *const AnokatMap,
    inner: *const AnokatMap,
    out: *mut *mut AnokatMap,
) -> AnokatStatus {
    guard(|| {
        let (a, b) = (borrow(outer, "outer")?, borrow(inner, "inner")?);
        map_out(out, AreaMap::compose(vec![a.0.clone(), b.0.clone()]))
    })
}

/// The inverse map.
///
/// # Safety
/// `m` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_inverse(m: *const AnokatMap, out: *mut *mut AnokatMap) -> AnokatStatus {
    guard(|| map_out(out, borrow(m, "map")?.0.clone().inverse()))
}

/// Image of the point `(theta, y)`.
///
/// # Safety
/// `m` must be live; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_eval(
    m: *const AnokatMap,
    surface: AnokatSurface,
    theta: f64,
    y: f64,
    out_theta: *mut f64,
    out_y: *mut f64,
) -> AnokatStatus {
    guard(|| {
        let m = borrow(m, "map")?;
        let p = SurfacePoint::new(theta, y, surface.into()).ffi()?;
        let img = m.0.eval(&p).ffi()?;
        write_out(out_theta, img.theta())?;
        write_out(out_y, img.y)
    })
}

/// Atomwise pushforward of `mu`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_pushforward(
    m: *const AnokatMap,
    mu: *const AnokatMeasure,
    out: *mut *mut AnokatMeasure,
) -> AnokatStatus {
    guard(|| {
        let (m, mu) = (borrow(m, "map")?, borrow(mu, "mu")?);
        measure_out(out, pushforward(&m.0, &mu.0).ffi()?)
    })
}

/// # Safety
/// `m` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn anokat_map_free(m: *mut AnokatMap) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Runs a scheme from a JSON config and returns the ledger as JSON in
/// `out_ledger` (release with [`anokat_string_free`]). A rejected stage yields
/// `StepRejected` and still fills `out_ledger` with the ledger so far.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_ledger` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_scheme_run(config_json: *const c_char, out_ledger: *mut *mut c_char) -> AnokatStatus {
    guard(|| {
        let cfg = RunConfig::from_json(read_str(config_json, "config")?).ffi()?;
        let outcome = scheme::run(&cfg, |_| Ok(())).ffi()?;
        let text = serde_json::to_string_pretty(&outcome.ledger(&cfg)).map_err(|e| (AnokatStatus::Internal, e.to_string()))?;
        write_out(out_ledger, CString::new(text).expect("JSON has no NUL").into_raw())?;
        match outcome.rejection {
            Some(e) => Err((status_of(&e), e.to_string())),
            None => Ok(()),
        }
    })
}

/// Runs a verification suite by name with default options and `trials`
/// (0 keeps the suite default). Writes 1 to `out_passed` iff it passed.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `out_passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn anokat_verify(suite: *const c_char, trials: usize, out_passed: *mut i32) -> AnokatStatus {
    guard(|| {
        let suite = Suite::parse(read_str(suite, "suite")?).ffi()?;
        let opts = VerifyOptions {
            trials: (trials > 0).then_some(trials),
            ..VerifyOptions::default()
        };
        let report = run_suite(suite, &opts).ffi()?;
        write_out(out_passed, report.passed() as i32)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_and_map_round_trip() {
        unsafe {
            let mut mu = ptr::null_mut();
            assert_eq!(anokat_measure_longitude(AnokatSurface::Cylinder, 0.2, 16, &mut mu), AnokatStatus::Ok);
            assert_eq!(anokat_measure_len(mu), 16);
            let mut rot = ptr::null_mut();
            assert_eq!(anokat_map_rotation(1, 4, &mut rot), AnokatStatus::Ok);
            let mut pushed = ptr::null_mut();
            assert_eq!(anokat_map_pushforward(rot, mu, &mut pushed), AnokatStatus::Ok);
            let mut d = -1.0;
            assert_eq!(anokat_w1(mu, pushed, &mut d), AnokatStatus::Ok);
            assert!(d.abs() < 1e-12);
            let (mut t, mut y) = (0.0, 0.0);
            assert_eq!(anokat_map_eval(rot, AnokatSurface::Cylinder, 0.1, 0.3, &mut t, &mut y), AnokatStatus::Ok);
            assert!((t - 0.35).abs() < 1e-15 && y == 0.3);
            anokat_measure_free(pushed);
            anokat_measure_free(mu);
            anokat_map_free(rot);
        }
    }

    #[test]
    fn errors_carry_a_message() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(anokat_map_rotation(1, 0, &mut m), AnokatStatus::InvalidArgument);
            let n = anokat_last_error(ptr::null_mut(), 0);
            assert!(n > 0);
            let mut buf = vec![0 as c_char; n + 1];
            anokat_last_error(buf.as_mut_ptr(), buf.len());
            assert!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap().contains("invalid"));
            assert_eq!(anokat_w1(ptr::null(), ptr::null(), ptr::null_mut()), AnokatStatus::NullPointer);
            let name = CString::new("nope").unwrap();
            let mut ok = 0;
            assert_eq!(anokat_verify(name.as_ptr(), 0, &mut ok), AnokatStatus::Config);
        }
    }

    #[test]
    fn shuffle_and_its_inverse_compose_to_the_identity() {
        unsafe {
            let (mut g, mut gi, mut both) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
            assert_eq!(anokat_map_box_shuffle(2, 0.4, &mut g), AnokatStatus::Ok);
            assert_eq!(anokat_map_inverse(g, &mut gi), AnokatStatus::Ok);
            assert_eq!(anokat_map_compose(gi, g, &mut both), AnokatStatus::Ok);
            let (mut t, mut y) = (0.0, 0.0);
            assert_eq!(anokat_map_eval(both, AnokatSurface::Cylinder, 0.123, 0.456, &mut t, &mut y), AnokatStatus::Ok);
            assert!((t - 0.123).abs() < 1e-12 && (y - 0.456).abs() < 1e-12);
            for m in [g, gi, both] {
                anokat_map_free(m);
            }
        }
    }

    #[test]
    fn scheme_run_returns_a_ledger() {
        unsafe {
            let cfg = CString::new(include_str!("../../../configs/smoke.json")).unwrap();
            let mut out = ptr::null_mut();
            assert_eq!(anokat_scheme_run(cfg.as_ptr(), &mut out), AnokatStatus::Ok);
            let ledger: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
            assert_eq!(ledger["passed"], true);
            anokat_string_free(out);

            let bad = CString::new("{\"atoms\": }").unwrap();
            assert_eq!(anokat_scheme_run(bad.as_ptr(), &mut out), AnokatStatus::Config);
        }
    }
}
