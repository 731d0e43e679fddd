//! C interface to `cogstab`.
//!
//! Every fallible function returns a [`CsStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`cs_last_error_message`]. Regions are opaque handles created by
//! [`cs_region_new`] and released with [`cs_region_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cogstab::regions::{self, FrontierPoint, StabilityRegion, SubregionKind};
use cogstab::sim::{self, SimConfig, SimMode};
use cogstab::{AccessPolicy, ArrivalRates, Capacity, ChannelModel, EnergyModel, Error, Scenario};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    InvalidArgument = 1,
    PreconditionViolated = 2,
    OutOfRegion = 3,
    DegenerateChannel = 4,
    NullPointer = 5,
    InvalidConfig = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsBranch {
    R1Prime = 0,
    R1DoublePrime = 1,
    R1EtaNonPositive = 2,
    R2Prime = 3,
    R2DoublePrime = 4,
    CollisionR1 = 5,
    CollisionR2 = 6,
}

impl From<SubregionKind> for CsBranch {
    fn from(k: SubregionKind) -> Self {
        match k {
            SubregionKind::R1Prime => CsBranch::R1Prime,
            SubregionKind::R1DoublePrime => CsBranch::R1DoublePrime,
            SubregionKind::R1EtaNonPositive => CsBranch::R1EtaNonPositive,
            SubregionKind::R2Prime => CsBranch::R2Prime,
            SubregionKind::R2DoublePrime => CsBranch::R2DoublePrime,
            SubregionKind::CollisionR1 => CsBranch::CollisionR1,
            SubregionKind::CollisionR2 => CsBranch::CollisionR2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsMode {
    Original = 0,
    Dominant1 = 1,
    Dominant2 = 2,
    SaturatedBoth = 3,
}

impl From<CsMode> for SimMode {
    fn from(m: CsMode) -> Self {
        match m {
            CsMode::Original => SimMode::Original,
            CsMode::Dominant1 => SimMode::Dominant1,
            CsMode::Dominant2 => SimMode::Dominant2,
            CsMode::SaturatedBoth => SimMode::SaturatedBoth,
        }
    }
}

/// Reception success probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsChannel {
    pub q11: f64,
    pub q22: f64,
    pub q112: f64,
    pub q212: f64,
}

/// Harvest probability and battery capacity; capacity 0 means unbounded.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsEnergy {
    pub delta: f64,
    pub capacity: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsFrontierPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub branch: CsBranch,
}

impl From<FrontierPoint> for CsFrontierPoint {
    fn from(p: FrontierPoint) -> Self {
        CsFrontierPoint {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            branch: p.branch.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsPStar {
    pub value: f64,
    pub branch: CsBranch,
}

/// Aggregate means over replications, with 95% half-widths of the
/// throughputs, and majority stability verdicts.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsSimSummary {
    pub throughput1: f64,
    pub throughput1_ci95: f64,
    pub throughput2: f64,
    pub throughput2_ci95: f64,
    pub service_rate1: f64,
    pub service_rate2: f64,
    pub active_fraction1: f64,
    pub battery_nonempty_fraction: f64,
    pub stable1: bool,
    pub stable2: bool,
}

/// Opaque stability region.
pub struct CsRegion {
    inner: StabilityRegion,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CsStatus {
    match err {
        Error::InvalidParameter { .. } => CsStatus::InvalidArgument,
        Error::PreconditionViolated(_) => CsStatus::PreconditionViolated,
        Error::OutOfRegion { .. } => CsStatus::OutOfRegion,
        Error::DegenerateChannel(_) => CsStatus::DegenerateChannel,
        Error::InvalidConfig(_) => CsStatus::InvalidConfig,
        _ => CsStatus::Internal,
    }
}

enum Failure {
    Status(CsStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(name: &str) -> Failure {
    Failure::Status(CsStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body`, records any error and converts panics into `Internal`.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CsStatus::Internal
        }
    }
}

unsafe fn read<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(ptr: *mut T, name: &str, value: T) -> Result<(), Failure> {
    let slot = ptr.as_mut().ok_or_else(|| null(name))?;
    *slot = value;
    Ok(())
}

fn channel_of(c: &CsChannel) -> Result<ChannelModel, Failure> {
    Ok(ChannelModel::new(c.q11, c.q22, c.q112, c.q212)?)
}

fn energy_of(e: &CsEnergy) -> Result<EnergyModel, Failure> {
    let capacity = match e.capacity {
        0 => Capacity::Unbounded,
        n => Capacity::finite(n)?,
    };
    Ok(EnergyModel::new(e.delta, capacity)?)
}

unsafe fn inputs(ch: *const CsChannel, en: *const CsEnergy) -> Result<(ChannelModel, EnergyModel), Failure> {
    Ok((
        channel_of(read(ch, "channel")?)?,
        energy_of(read(en, "energy")?)?,
    ))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `channel` must be null or point to a valid `CsChannel`; `out` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_channel_eta(channel: *const CsChannel, out: *mut f64) -> CsStatus {
    guard(|| write(out, "out", channel_of(read(channel, "channel")?)?.eta()))
}

/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_battery_nonempty_prob(energy: *const CsEnergy, out: *mut f64) -> CsStatus {
    guard(|| write(out, "out", energy_of(read(energy, "energy")?)?.battery_nonempty_prob()))
}

/// Builds the region; the handle must be released with `cs_region_free`.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_region_new(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    out: *mut *mut CsRegion,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let handle = Box::new(CsRegion {
            inner: regions::build_region(&ch, &en),
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// Releases a region. Null is ignored.
///
/// # Safety
/// `region` must come from `cs_region_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cs_region_free(region: *mut CsRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// # Safety
/// `region` must be a live handle or null; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_region_contains(
    region: *const CsRegion,
    lambda1: f64,
    lambda2: f64,
    out: *mut bool,
) -> CsStatus {
    guard(|| write(out, "out", read(region, "region")?.inner.contains(lambda1, lambda2)))
}

/// `beta * q11`, the supremum of admissible primary rates.
///
/// # Safety
/// `region` must be a live handle or null; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_region_lambda1_extent(region: *const CsRegion, out: *mut f64) -> CsStatus {
    guard(|| write(out, "out", read(region, "region")?.inner.lambda1_extent()))
}

/// Supremum of admissible `lambda2` at `lambda1`; `OutOfRegion` when none.
///
/// # Safety
/// `region` must be a live handle or null; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_region_max_lambda2(region: *const CsRegion, lambda1: f64, out: *mut f64) -> CsStatus {
    guard(|| {
        let region = read(region, "region")?;
        match region.inner.max_lambda2(lambda1) {
            Some(v) => write(out, "out", v),
            None => Err(Error::OutOfRegion {
                rate: lambda1,
                extent: region.inner.lambda1_extent(),
            }
            .into()),
        }
    })
}

/// Frontier polyline with `n_points` samples. `*written` receives the vertex
/// count; if `buffer` is null or `capacity` is smaller, nothing is copied and
/// `BufferTooSmall` is returned (a null buffer is a size query).
///
/// # Safety
/// `buffer` must be null or valid for `capacity` elements; other pointers
/// must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn cs_region_polyline(
    region: *const CsRegion,
    n_points: usize,
    buffer: *mut CsFrontierPoint,
    capacity: usize,
    written: *mut usize,
) -> CsStatus {
    guard(|| {
        let region = read(region, "region")?;
        let poly = regions::boundary_polyline(&region.inner, n_points)?;
        let n = poly.vertices.len();
        write(written, "written", n)?;
        if buffer.is_null() || capacity < n {
            return Err(Failure::Status(
                CsStatus::BufferTooSmall,
                format!("polyline needs {n} entries, buffer holds {capacity}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buffer, n);
        for (slot, v) in out.iter_mut().zip(poly.vertices) {
            *slot = v.into();
        }
        Ok(())
    })
}

/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_mu1_dominant1(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    p: f64,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let p = AccessPolicy::new(p)?.p();
        write(out, "out", regions::mu1_dominant1(&ch, &en, p))
    })
}

/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_mu2_dominant2(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    p: f64,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let p = AccessPolicy::new(p)?.p();
        write(out, "out", regions::mu2_dominant2(&ch, &en, p))
    })
}

/// Secondary service rate with the primary queue stable at `lambda1`.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_mu2_dominant1(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    p: f64,
    lambda1: f64,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let p = AccessPolicy::new(p)?.p();
        write(out, "out", regions::mu2_dominant1(&ch, &en, p, lambda1)?)
    })
}

/// Primary service rate with the secondary queue stable at `lambda2`.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_mu1_dominant2(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    p: f64,
    lambda2: f64,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let p = AccessPolicy::new(p)?.p();
        write(out, "out", regions::mu1_dominant2(&ch, &en, p, lambda2)?)
    })
}

/// Optimal access probability at primary rate `lambda1`.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_optimal_p(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    lambda1: f64,
    out: *mut CsPStar,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let star = regions::optimal_p(&ch, &en, lambda1)?;
        write(out, "out", CsPStar {
            value: star.value,
            branch: star.branch.into(),
        })
    })
}

/// Optimal access probability at secondary rate `lambda2`.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
pub unsafe extern "C" fn cs_optimal_p_secondary_axis(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    lambda2: f64,
    out: *mut CsPStar,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        let star = regions::optimal_p_secondary_axis(&ch, &en, lambda2)?;
        write(out, "out", CsPStar {
            value: star.value,
            branch: star.branch.into(),
        })
    })
}

/// Simulates the scenario and writes the aggregate summary.
///
/// # Safety
/// Pointers must be null or valid for their types.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cs_simulate(
    channel: *const CsChannel,
    energy: *const CsEnergy,
    lambda1: f64,
    lambda2: f64,
    p: f64,
    mode: CsMode,
    horizon: u64,
    burn_in: u64,
    seed: u64,
    replications: u32,
    out: *mut CsSimSummary,
) -> CsStatus {
    guard(|| {
        let (ch, en) = inputs(channel, energy)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = Scenario::new(ch, en, ArrivalRates::new(lambda1, lambda2)?, AccessPolicy::new(p)?);
        let config = SimConfig {
            scenario,
            mode: mode.into(),
            horizon,
            burn_in,
            seed,
            replications: replications as usize,
            trajectory_stride: None,
        };
        let report = sim::run(&config)?;
        let (t1, t2) = (report.throughput1(), report.throughput2());
        write(out, "out", CsSimSummary {
            throughput1: t1.mean,
            throughput1_ci95: t1.ci_halfwidth,
            throughput2: t2.mean,
            throughput2_ci95: t2.ci_halfwidth,
            service_rate1: report.service_rate1().mean,
            service_rate2: report.service_rate2().mean,
            active_fraction1: report.active_fraction1().mean,
            battery_nonempty_fraction: report.battery_nonempty_fraction().mean,
            stable1: report.stable1,
            stable2: report.stable2,
        })
    })
}
