use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Result};

/// Singles, coincidences and accidentals of one measured configuration,
/// in counts per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub sc1: f64,
    pub sc2: f64,
    pub cc: f64,
    pub acc: f64,
}

/// Measured rates: dual pump, each single pump alone, pump delay line blocked.
pub const DUAL_PUMP: RateRow = RateRow { sc1: 112_119.0, sc2: 92_293.0, cc: 1135.0, acc: 18.0 };
pub const SINGLE_PUMP_1545: RateRow = RateRow { sc1: 50_908.0, sc2: 43_910.0, cc: 35.0, acc: 4.8 };
pub const SINGLE_PUMP_1557: RateRow = RateRow { sc1: 16_864.0, sc2: 14_506.0, cc: 14.0, acc: 0.5 };
pub const DELAY_BLOCKED: RateRow = RateRow { sc1: 1660.0, sc2: 14_231.0, cc: 0.5, acc: 0.5 };

/// Background-subtracted heralding efficiency and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Klyshko {
    pub net_coincidences: f64,
    pub net_singles: f64,
    pub efficiency: f64,
}

/// `(CC - ACC) / (SC - SC_single_a - SC_single_b)` on the chosen channel.
pub fn klyshko(dual: &RateRow, single_a: &RateRow, single_b: &RateRow, channel: usize) -> Result<Klyshko> {
    let pick = |r: &RateRow| match channel {
        1 => Ok(r.sc1),
        2 => Ok(r.sc2),
        _ => Err(spec_err(format!("channel must be 1 or 2, got {channel}"))),
    };
    let net_singles = pick(dual)? - pick(single_a)? - pick(single_b)?;
    let net_coincidences = dual.cc - dual.acc;
    if net_singles <= 0.0 {
        return Err(spec_err("background singles exceed the dual-pump singles"));
    }
    Ok(Klyshko {
        net_coincidences,
        net_singles,
        efficiency: net_coincidences / net_singles,
    })
}

pub fn klyshko_measured() -> Result<Klyshko> {
    klyshko(&DUAL_PUMP, &SINGLE_PUMP_1545, &SINGLE_PUMP_1557, 1)
}

/// Forward model of a heralded pair source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    /// Pair probability per pulse.
    pub p: f64,
    /// Repetition rate in Hz.
    pub rep_rate: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
    #[serde(default)]
    pub dark_signal: f64,
    #[serde(default)]
    pub dark_idler: f64,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.p) || !unit(self.eta_signal) || !unit(self.eta_idler) {
            return Err(spec_err("p and efficiencies must lie in [0, 1]"));
        }
        if !(self.rep_rate > 0.0) || self.dark_signal < 0.0 || self.dark_idler < 0.0 {
            return Err(spec_err("rates must be non-negative and rep_rate positive"));
        }
        Ok(())
    }

    pub fn rates(&self) -> Result<RateRow> {
        self.validate()?;
        let pf = self.p * self.rep_rate;
        let sc1 = pf * self.eta_signal + self.dark_signal;
        let sc2 = pf * self.eta_idler + self.dark_idler;
        let acc = sc1 * sc2 / self.rep_rate;
        Ok(RateRow {
            sc1,
            sc2,
            cc: pf * self.eta_signal * self.eta_idler + acc,
            acc,
        })
    }
}

/// Fourfold rate per second from two pairs split across four detectors.
pub fn fourfold_rate(p: f64, rep_rate: f64, etas: [f64; 4]) -> f64 {
    24.0 * p * p * rep_rate * etas.iter().product::<f64>()
}

/// Fourfold rate per second from two measured pair-coincidence rows.
pub fn fourfold_from_pairs(ab: &RateRow, cd: &RateRow, rep_rate: f64) -> f64 {
    24.0 * (ab.cc - ab.acc) * (cd.cc - cd.acc) / rep_rate
}

pub fn per_hour(rate_hz: f64) -> f64 {
    rate_hz * 3600.0
}

/// `10^(-db/10)`
pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Overlap of two pulses of Lorentzian linewidth `linewidth_hz` offset by
/// `delay_s`.
pub fn pulse_overlap(delay_s: f64, linewidth_hz: f64) -> f64 {
    (-2.0 * PI * linewidth_hz * delay_s.abs()).exp()
}

/// Full width at half maximum of [`pulse_overlap`] in seconds.
pub fn overlap_fwhm(linewidth_hz: f64) -> f64 {
    LN_2 / (PI * linewidth_hz)
}
