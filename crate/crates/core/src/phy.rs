//! Closed-form link and traffic dynamics.
//!
//! All quantities are linear SI: gains are dimensionless, powers in watts,
//! bandwidth in hertz, noise as a power spectral density in W/Hz. AoI is an
//! integer count of slots; multiply by the slot duration for seconds.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::{LinkClass, Point};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhyParams {
    /// LOS/WLOS path-loss coefficient (linear).
    pub phi: f64,
    /// NLOS path-loss coefficient (linear).
    pub rho: f64,
    pub eta: f64,
    pub ell0_m: f64,
    /// Averaged fast-fading factor.
    pub psi: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub slot_s: f64,
    pub packet_bits: f64,
    pub p_max_w: f64,
    /// Aggregate inter-group interference, held constant.
    pub interference_w: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        let bandwidth_hz = 800e3;
        let noise_psd_w_per_hz = dbm_to_watts(-174.0);
        Self {
            phi: db_to_linear(-68.5),
            rho: db_to_linear(-54.5),
            eta: 1.61,
            ell0_m: 15.0,
            psi: 1.0,
            bandwidth_hz,
            noise_psd_w_per_hz,
            slot_s: 3e-3,
            packet_bits: 2000.0,
            p_max_w: 2.0,
            interference_w: bandwidth_hz * noise_psd_w_per_hz,
        }
    }
}

impl PhyParams {
    /// Interference plus noise power over one band.
    pub fn interference_plus_noise(&self) -> f64 {
        self.interference_w + self.bandwidth_hz * self.noise_psd_w_per_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("phi", self.phi),
            ("rho", self.rho),
            ("eta", self.eta),
            ("ell0_m", self.ell0_m),
            ("psi", self.psi),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd_w_per_hz", self.noise_psd_w_per_hz),
            ("slot_s", self.slot_s),
            ("packet_bits", self.packet_bits),
            ("p_max_w", self.p_max_w),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.interference_w.is_finite() && self.interference_w >= 0.0) {
            return Err(Error::Config(format!(
                "interference_w must be non-negative, got {}",
                self.interference_w
            )));
        }
        let bound = self.phi * (self.ell0_m / 2.0).powf(self.eta);
        if self.rho >= bound {
            return Err(Error::Config(format!(
                "path-loss coefficients violate rho < phi * (ell0/2)^eta: {:e} >= {:e}",
                self.rho, bound
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    /// Mean Poisson arrivals per slot.
    pub lambda_pkts_per_slot: f64,
    pub x_max: u32,
    pub r_max_global: u32,
    pub a_max_slots: u32,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            lambda_pkts_per_slot: 5.0,
            x_max: 15,
            r_max_global: 15,
            a_max_slots: 100,
        }
    }
}

impl TrafficParams {
    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda_pkts_per_slot;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("arrival rate must be non-negative, got {lambda}")));
        }
        if (self.x_max as f64) < lambda {
            return Err(Error::Config(format!(
                "x_max ({}) must be at least the arrival rate ({lambda})",
                self.x_max
            )));
        }
        if self.r_max_global < 1 {
            return Err(Error::Config("r_max_global must be at least 1".into()));
        }
        if self.a_max_slots < 2 {
            return Err(Error::Config("a_max_slots must be at least 2".into()));
        }
        Ok(())
    }
}

/// Path-loss gain `H = psi * h` for the given link class. Errors when the
/// relevant norm or coordinate product is zero.
pub fn channel_gain(link: LinkClass, vtx: Point, vrx: Point, params: &PhyParams) -> Result<f64> {
    let metric = link_metric(link, vtx, vrx, 0.0);
    if metric <= 0.0 {
        return Err(Error::Singularity(link));
    }
    Ok(gain_from_metric(link, metric, params))
}

/// As [`channel_gain`], with every distance factor floored at `min_m` so the
/// gain stays finite when the two ends coincide.
pub fn channel_gain_floored(
    link: LinkClass,
    vtx: Point,
    vrx: Point,
    params: &PhyParams,
    min_m: f64,
) -> f64 {
    gain_from_metric(link, link_metric(link, vtx, vrx, min_m), params)
}

fn link_metric(link: LinkClass, vtx: Point, vrx: Point, floor: f64) -> f64 {
    match link {
        LinkClass::Los => vtx.distance(vrx).max(floor),
        LinkClass::Wlos => vtx.l1_distance(vrx).max(floor),
        // Each vehicle's own coordinate difference, as the model prints it.
        LinkClass::Nlos => (vtx.x - vtx.y).abs().max(floor) * (vrx.x - vrx.y).abs().max(floor),
    }
}

fn gain_from_metric(link: LinkClass, metric: f64, params: &PhyParams) -> f64 {
    let coefficient = match link {
        LinkClass::Los | LinkClass::Wlos => params.phi,
        LinkClass::Nlos => params.rho,
    };
    params.psi * coefficient * metric.powf(-params.eta)
}

/// Packets deliverable in one slot at full power, before any global cap.
pub fn capacity_packets(h: f64, band: bool, params: &PhyParams) -> u32 {
    if !band || h <= 0.0 {
        return 0;
    }
    let snr = h * params.p_max_w / params.interference_plus_noise();
    let bits = params.slot_s * params.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2;
    let packets = (bits / params.packet_bits).floor();
    if packets >= u32::MAX as f64 {
        u32::MAX
    } else {
        packets as u32
    }
}

/// Per-slot departure cap: the full-power capacity clamped to `r_max_global`.
pub fn max_packets(h: f64, band: bool, params: &PhyParams, r_max_global: u32) -> u32 {
    capacity_packets(h, band, params).min(r_max_global)
}

/// Transmit power needed to deliver `r` packets in one slot.
pub fn tx_power(h: f64, band: bool, r: u32, params: &PhyParams) -> Result<f64> {
    let cap = capacity_packets(h, band, params);
    if r > cap {
        return Err(Error::PowerBudget { requested: r, cap });
    }
    if !band || r == 0 {
        return Ok(0.0);
    }
    let exponent = params.packet_bits * r as f64 / (params.bandwidth_hz * params.slot_s);
    Ok(params.interference_plus_noise() / h * (exponent.exp2() - 1.0))
}

/// One slot's arrivals: a Poisson draw clamped to `x_max`.
pub fn sample_arrivals<R: Rng + ?Sized>(params: &TrafficParams, rng: &mut R) -> u32 {
    let lambda = params.lambda_pkts_per_slot;
    if lambda <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(lambda).expect("validated rate").sample(rng);
    if draw >= params.x_max as f64 {
        params.x_max
    } else {
        draw as u32
    }
}

/// Distribution of [`sample_arrivals`]: Poisson mass with the tail folded
/// onto `x_max`.
pub fn arrival_pmf(lambda: f64, x_max: u32) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(x_max as usize + 1);
    let mut term = (-lambda).exp();
    let mut total = 0.0;
    for x in 0..x_max {
        pmf.push(term);
        total += term;
        term *= lambda / (x + 1) as f64;
    }
    pmf.push((1.0 - total).max(0.0));
    pmf
}

/// Packets dropped at the end of the slot.
pub fn packet_drops(x: u32, band: bool, r: u32) -> Result<u32> {
    if !band && r > 0 {
        return Err(Error::Precondition(format!("{r} packets scheduled without a band")));
    }
    if r > x {
        return Err(Error::Precondition(format!("{r} packets scheduled but only {x} arrived")));
    }
    Ok(x - if band { r } else { 0 })
}

/// AoI (in slots) at the start of the next slot, capped at `a_max`.
pub fn advance_aoi(a_slots: u32, band: bool, r: u32, a_max: u32) -> u32 {
    if band && r > 0 {
        1
    } else {
        (a_slots + 1).min(a_max)
    }
}
