use crate::mdp::{Observation, VuePairState};
use crate::phy::PhyParams;

pub const FEATURE_DIM: usize = 9;

/// Scales that map every feature into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureNorms {
    pub side_m: f64,
    pub log_gain_min: f64,
    pub log_gain_max: f64,
    pub x_max: u32,
    pub a_max: u32,
    pub r_max: u32,
}

impl FeatureNorms {
    /// Gain range reachable on a square of side `side_m` when every distance
    /// factor is floored at `min_link_m`.
    pub fn new(phy: &PhyParams, side_m: f64, min_link_m: f64, x_max: u32, a_max: u32, r_max: u32) -> Self {
        let los = |d: f64| phy.psi * phy.phi * d.powf(-phy.eta);
        let nlos = |prod: f64| phy.psi * phy.rho * prod.powf(-phy.eta);
        let hi = los(min_link_m).max(nlos(min_link_m * min_link_m));
        let lo = los(2.0 * side_m).min(nlos(side_m * side_m));
        Self {
            side_m,
            log_gain_min: lo.ln(),
            log_gain_max: hi.ln(),
            x_max,
            a_max,
            r_max,
        }
    }

    /// `[x_tx, y_tx, x_rx, y_rx, log-gain, X, A, F, R]`, each scaled to `[0, 1]`.
    pub fn encode(&self, s: &VuePairState, o: Observation) -> [f64; FEATURE_DIM] {
        let span = self.log_gain_max - self.log_gain_min;
        let gain = if span > 0.0 && s.gain > 0.0 {
            ((s.gain.ln() - self.log_gain_min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let unit = |v: f64| v.clamp(0.0, 1.0);
        [
            unit(s.vtx.x / self.side_m),
            unit(s.vtx.y / self.side_m),
            unit(s.vrx.x / self.side_m),
            unit(s.vrx.y / self.side_m),
            gain,
            unit(s.arrivals as f64 / self.x_max.max(1) as f64),
            unit(s.aoi_slots as f64 / self.a_max.max(1) as f64),
            if o.prev_band { 1.0 } else { 0.0 },
            unit(o.prev_scheduled as f64 / self.r_max.max(1) as f64),
        ]
    }
}
