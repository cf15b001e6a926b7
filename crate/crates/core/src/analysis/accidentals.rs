use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::circuit::build_dicke_network;
use crate::error::{spec_err, Result};
use crate::pipeline::source_pipeline;
use crate::postselect::click_probability;
use crate::sources::{Family, PairSelector, SourceModel};

/// `1 + purity`
pub fn accidental_ratio(purity: f64) -> f64 {
    1.0 + purity
}

/// Per-pulse singles and accidental coincidences of the leading-order
/// two-source model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccidentalRates {
    pub sc_a: f64,
    pub sc_b: f64,
    pub acc_measured: f64,
    pub acc_psi_min: f64,
    pub acc_phi_min: f64,
}

pub fn accidental_model(model: &SourceModel, eta_a: f64, eta_b: f64) -> Result<AccidentalRates> {
    model.validate()?;
    let flux = 0.5 * model.g.powi(2) + 0.25 * model.g1.powi(2) + 0.25 * model.g2.powi(2);
    let sc_a = flux * eta_a;
    let sc_b = flux * eta_b;
    let acc = sc_a * sc_b;
    Ok(AccidentalRates {
        sc_a,
        sc_b,
        acc_measured: acc,
        acc_psi_min: acc,
        acc_phi_min: accidental_ratio(model.purity()) * acc,
    })
}

/// Fraction of singles produced by the single-pump processes.
pub fn single_pump_fraction(model: &SourceModel) -> f64 {
    let single = 0.25 * (model.g1.powi(2) + model.g2.powi(2));
    single / (0.5 * model.g.powi(2) + single)
}

/// Full multimode simulation of the two fringe minima on the two-port
/// network with threshold detectors of efficiency `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedAccidentals {
    /// `A0 B0` coincidence at `phi = 0` over the product of its singles.
    pub phi_min_ratio: f64,
    /// `A0 B1` coincidence at `phi = pi/2` over the product of its singles.
    pub psi_min_ratio: f64,
    pub sc_a0: f64,
}

pub fn simulate_accidentals(model: &SourceModel, eta: f64) -> Result<SimulatedAccidentals> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(spec_err("detector efficiency must lie in (0, 1]"));
    }
    let spec = build_dicke_network(2)?;
    let ratio = |phi: f64, a: usize, b: usize| -> Result<(f64, f64)> {
        let m = SourceModel {
            phi,
            ..model.clone()
        };
        let run = source_pipeline(&m, &spec, PairSelector::UpTo(2))?;
        let ga = run.layout.group(a, Family::Z);
        let gb = run.layout.group(b, Family::Z);
        let cc = click_probability(&run.output, &[ga.clone(), gb.clone()], eta);
        let sa = click_probability(&run.output, &[ga], eta);
        let sb = click_probability(&run.output, &[gb], eta);
        Ok((cc / (sa * sb), sa))
    };
    let a0 = spec.ports[0].rail0;
    let b0 = spec.ports[1].rail0;
    let b1 = spec.ports[1].rail1;
    let (phi_min_ratio, sc_a0) = ratio(0.0, a0, b0)?;
    let (psi_min_ratio, _) = ratio(FRAC_PI_2, a0, b1)?;
    Ok(SimulatedAccidentals {
        phi_min_ratio,
        psi_min_ratio,
        sc_a0,
    })
}
