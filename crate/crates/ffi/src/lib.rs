//! C ABI over the simulator, trainer and closed-form channel model.
//!
//! Handles are opaque heap objects owned by the caller and released with the
//! matching `*_free`. Every entry point returns an [`AoiStatus`]; on failure
//! [`aoi_last_error`] describes the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use aoi_rrm::drqn::{train_from_config, Checkpoint};
use aoi_rrm::harness::env::{stream_rng, streams};
use aoi_rrm::harness::{decide_baseline, run_episode, Environment, ExperimentConfig, PolicyKind, SlotMetrics};
use aoi_rrm::mobility::{LinkClass, Point};
use aoi_rrm::phy::{self, PhyParams};
use aoi_rrm::Error;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AoiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AoiPolicy {
    Proposed = 0,
    ChannelAware = 1,
    PacketAware = 2,
    AoiAware = 3,
    Random = 4,
}

impl From<AoiPolicy> for PolicyKind {
    fn from(p: AoiPolicy) -> Self {
        match p {
            AoiPolicy::Proposed => PolicyKind::Proposed,
            AoiPolicy::ChannelAware => PolicyKind::ChannelAware,
            AoiPolicy::PacketAware => PolicyKind::PacketAware,
            AoiPolicy::AoiAware => PolicyKind::AoiAware,
            AoiPolicy::Random => PolicyKind::Random,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AoiLinkClass {
    Los = 0,
    Wlos = 1,
    Nlos = 2,
}

/// Linear-scale channel and traffic constants.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AoiPhyParams {
    pub phi: f64,
    pub rho: f64,
    pub eta: f64,
    pub ell0_m: f64,
    pub psi: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub slot_s: f64,
    pub packet_bits: f64,
    pub p_max_w: f64,
    pub interference_w: f64,
}

impl From<PhyParams> for AoiPhyParams {
    fn from(p: PhyParams) -> Self {
        Self {
            phi: p.phi,
            rho: p.rho,
            eta: p.eta,
            ell0_m: p.ell0_m,
            psi: p.psi,
            bandwidth_hz: p.bandwidth_hz,
            noise_psd_w_per_hz: p.noise_psd_w_per_hz,
            slot_s: p.slot_s,
            packet_bits: p.packet_bits,
            p_max_w: p.p_max_w,
            interference_w: p.interference_w,
        }
    }
}

impl From<AoiPhyParams> for PhyParams {
    fn from(p: AoiPhyParams) -> Self {
        Self {
            phi: p.phi,
            rho: p.rho,
            eta: p.eta,
            ell0_m: p.ell0_m,
            psi: p.psi,
            bandwidth_hz: p.bandwidth_hz,
            noise_psd_w_per_hz: p.noise_psd_w_per_hz,
            slot_s: p.slot_s,
            packet_bits: p.packet_bits,
            p_max_w: p.p_max_w,
            interference_w: p.interference_w,
        }
    }
}

/// Horizon means of one episode; AoI in slots and seconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AoiEpisodeSummary {
    pub slots: u64,
    pub avg_power_w: f64,
    pub avg_drops: f64,
    pub avg_aoi_slots: f64,
    pub avg_aoi_s: f64,
    pub avg_utility: f64,
    pub discounted_return: f64,
}

/// Across-pair means of one slot.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AoiSlotMetrics {
    pub slot: u64,
    pub avg_power_w: f64,
    pub avg_drops: f64,
    pub avg_aoi_slots: f64,
    pub avg_aoi_s: f64,
    pub avg_utility: f64,
}

impl From<SlotMetrics> for AoiSlotMetrics {
    fn from(m: SlotMetrics) -> Self {
        Self {
            slot: m.slot,
            avg_power_w: m.avg_power_w,
            avg_drops: m.avg_drops,
            avg_aoi_slots: m.avg_aoi_slots,
            avg_aoi_s: m.avg_aoi_s,
            avg_utility: m.avg_utility,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AoiTrainSummary {
    pub slots_run: u64,
    pub gradient_steps: u64,
    /// Mean of the last `loss_ma_window` losses; NaN when no step was taken.
    pub final_loss: f64,
    pub stopped_on_plateau: bool,
}

/// Opaque experiment configuration.
pub struct AoiConfig(ExperimentConfig);

/// Opaque trained network parameters.
pub struct AoiCheckpoint(Checkpoint);

/// Opaque slot-loop environment driven by a baseline policy.
pub struct AoiEnv {
    env: Environment,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> AoiStatus {
    match err {
        Error::Config(_) | Error::Toml(_) | Error::InvalidMap(_) | Error::MissingCheckpoint => AoiStatus::Config,
        Error::Io(_) | Error::Csv(_) | Error::Checkpoint(_) => AoiStatus::Io,
        Error::Singularity(_)
        | Error::EigenNoConvergence { .. }
        | Error::NonFiniteGradient(_)
        | Error::ZeroRowSum(_)
        | Error::NonStochastic { .. } => AoiStatus::Numerical,
        _ => AoiStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AoiStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            AoiStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error(msg);
            AoiStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AoiStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let out = unsafe { deref_mut(out, "out") }?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn aoi_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_default(out: *mut *mut AoiConfig) -> AoiStatus {
    guard(|| unsafe { put(out, AoiConfig(ExperimentConfig::default())) })
}

/// Parses a configuration from TOML text; missing keys take defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_from_toml(toml: *const c_char, out: *mut *mut AoiConfig) -> AoiStatus {
    guard(|| unsafe {
        let text = c_str(toml, "toml")?;
        put(out, AoiConfig(ExperimentConfig::from_toml_str(text)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_load(path: *const c_char, out: *mut *mut AoiConfig) -> AoiStatus {
    guard(|| unsafe {
        let path = c_str(path, "path")?;
        put(out, AoiConfig(ExperimentConfig::load(Path::new(path))?))
    })
}

/// Number of VUE-pairs in the configuration.
///
/// # Safety
/// `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_num_pairs(cfg: *const AoiConfig, out: *mut usize) -> AoiStatus {
    guard(|| unsafe {
        *deref_mut(out, "out")? = deref(cfg, "cfg")?.0.num_pairs;
        Ok(())
    })
}

/// Linear channel constants derived from the configuration.
///
/// # Safety
/// `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_phy_params(cfg: *const AoiConfig, out: *mut AoiPhyParams) -> AoiStatus {
    guard(|| unsafe {
        *deref_mut(out, "out")? = deref(cfg, "cfg")?.0.phy_params().into();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from `aoi_config_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aoi_config_free(cfg: *mut AoiConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoi_phy_default(out: *mut AoiPhyParams) -> AoiStatus {
    guard(|| unsafe {
        *deref_mut(out, "out")? = PhyParams::default().into();
        Ok(())
    })
}

/// Distance-based channel gain for a given link class.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_channel_gain(
    params: *const AoiPhyParams,
    link: AoiLinkClass,
    tx_x: f64,
    tx_y: f64,
    rx_x: f64,
    rx_y: f64,
    out: *mut f64,
) -> AoiStatus {
    guard(|| unsafe {
        let p: PhyParams = (*deref(params, "params")?).into();
        let link = match link {
            AoiLinkClass::Los => LinkClass::Los,
            AoiLinkClass::Wlos => LinkClass::Wlos,
            AoiLinkClass::Nlos => LinkClass::Nlos,
        };
        let h = phy::channel_gain(link, Point::new(tx_x, tx_y), Point::new(rx_x, rx_y), &p)?;
        *deref_mut(out, "out")? = h;
        Ok(())
    })
}

/// Transmit power needed to deliver `packets` within one slot.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_tx_power(
    params: *const AoiPhyParams,
    gain: f64,
    band: bool,
    packets: u32,
    out: *mut f64,
) -> AoiStatus {
    guard(|| unsafe {
        let p: PhyParams = (*deref(params, "params")?).into();
        *deref_mut(out, "out")? = phy::tx_power(gain, band, packets, &p)?;
        Ok(())
    })
}

/// Largest packet count deliverable under the power budget, capped at `r_max_global`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_max_packets(
    params: *const AoiPhyParams,
    gain: f64,
    band: bool,
    r_max_global: u32,
    out: *mut u32,
) -> AoiStatus {
    guard(|| unsafe {
        let p: PhyParams = (*deref(params, "params")?).into();
        *deref_mut(out, "out")? = phy::max_packets(gain, band, &p, r_max_global);
        Ok(())
    })
}

/// Per-pair, per-slot utility; AoI in slots.
#[no_mangle]
pub extern "C" fn aoi_utility(power_w: f64, drops: f64, aoi_slots: f64, vartheta: f64, xi: f64) -> f64 {
    aoi_rrm::mdp::utility(power_w, drops, aoi_slots, vartheta, xi)
}

/// Trains the shared network under `cfg` from its own seed.
///
/// # Safety
/// `cfg` and `out` must be valid pointers; `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn aoi_train(
    cfg: *const AoiConfig,
    out: *mut *mut AoiCheckpoint,
    summary: *mut AoiTrainSummary,
) -> AoiStatus {
    guard(|| unsafe {
        let cfg = &deref(cfg, "cfg")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let (outcome, ckpt) = train_from_config(cfg, None)?;
        if let Some(s) = summary.as_mut() {
            let tail = &outcome.loss_trace[outcome.loss_trace.len().saturating_sub(cfg.loss_ma_window)..];
            *s = AoiTrainSummary {
                slots_run: outcome.slots_run,
                gradient_steps: outcome.loss_trace.len() as u64,
                final_loss: tail.iter().map(|p| p.loss).sum::<f64>() / tail.len() as f64,
                stopped_on_plateau: outcome.stopped_on_plateau,
            };
        }
        put(out, AoiCheckpoint(ckpt))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoi_checkpoint_load(path: *const c_char, out: *mut *mut AoiCheckpoint) -> AoiStatus {
    guard(|| unsafe {
        let path = c_str(path, "path")?;
        put(out, AoiCheckpoint(Checkpoint::load(Path::new(path))?))
    })
}

/// # Safety
/// `ckpt` must be a valid handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aoi_checkpoint_save(ckpt: *const AoiCheckpoint, path: *const c_char) -> AoiStatus {
    guard(|| unsafe {
        let ckpt = deref(ckpt, "ckpt")?;
        ckpt.0.save(Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `ckpt` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aoi_checkpoint_free(ckpt: *mut AoiCheckpoint) {
    if !ckpt.is_null() {
        drop(unsafe { Box::from_raw(ckpt) });
    }
}

/// Runs one episode; `ckpt` may be null except for the proposed policy.
///
/// # Safety
/// `cfg` and `out` must be valid pointers; `ckpt` null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn aoi_run_episode(
    cfg: *const AoiConfig,
    policy: AoiPolicy,
    ckpt: *const AoiCheckpoint,
    slots: u64,
    seed: u64,
    out: *mut AoiEpisodeSummary,
) -> AoiStatus {
    guard(|| unsafe {
        let cfg = &deref(cfg, "cfg")?.0;
        let params = ckpt.as_ref().map(|c| &c.0.params);
        let out = deref_mut(out, "out")?;
        let s = run_episode(cfg, policy.into(), params, slots, seed)?.summary;
        *out = AoiEpisodeSummary {
            slots: s.slots,
            avg_power_w: s.avg_power_w,
            avg_drops: s.avg_drops,
            avg_aoi_slots: s.avg_aoi_slots,
            avg_aoi_s: s.avg_aoi_s,
            avg_utility: s.avg_utility,
            discounted_return: s.discounted_return,
        };
        Ok(())
    })
}

/// # Safety
/// `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_env_new(cfg: *const AoiConfig, seed: u64, out: *mut *mut AoiEnv) -> AoiStatus {
    guard(|| unsafe {
        let cfg = &deref(cfg, "cfg")?.0;
        let env = Environment::new(cfg, seed)?;
        put(
            out,
            AoiEnv {
                env,
                rng: stream_rng(seed, streams::POLICY, 0),
            },
        )
    })
}

/// Advances one slot under a baseline policy.
///
/// # Safety
/// `env` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aoi_env_step(env: *mut AoiEnv, policy: AoiPolicy, out: *mut AoiSlotMetrics) -> AoiStatus {
    guard(|| unsafe {
        let h = deref_mut(env, "env")?;
        let out = deref_mut(out, "out")?;
        if policy == AoiPolicy::Proposed {
            return Err(Failure::Invalid("environment stepping supports baseline policies only".into()));
        }
        let slot = h.env.slot();
        let caps = h.env.caps();
        let d = decide_baseline(
            policy.into(),
            h.env.states(),
            &caps,
            h.env.grouping(),
            h.env.num_bands(),
            &mut h.rng,
        )?;
        let o = h.env.step(&d)?;
        *out = SlotMetrics::from_outcome(slot, &o, h.env.slot_s()).into();
        Ok(())
    })
}

/// Current group label of every pair, written to `groups[0..len]`.
///
/// # Safety
/// `env` must be valid and `groups` must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn aoi_env_groups(env: *const AoiEnv, groups: *mut usize, len: usize) -> AoiStatus {
    guard(|| unsafe {
        let h = deref(env, "env")?;
        if groups.is_null() {
            return Err(Failure::Null("groups"));
        }
        let labels = &h.env.grouping().group_of;
        if len != labels.len() {
            return Err(Failure::Invalid(format!("buffer holds {len} labels, {} pairs", labels.len())));
        }
        ptr::copy_nonoverlapping(labels.as_ptr(), groups, len);
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aoi_env_free(env: *mut AoiEnv) {
    if !env.is_null() {
        drop(unsafe { Box::from_raw(env) });
    }
}
