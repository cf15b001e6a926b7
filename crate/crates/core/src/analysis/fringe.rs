use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::circuit::CircuitSpec;
use crate::error::{spec_err, Result};
use crate::pipeline::source_pipeline;
use crate::postselect::click_probability;
use crate::sources::{Family, PairSelector, SourceModel};

/// Two-detector coincidence versus pump phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeCurve {
    pub pair: (String, String),
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
    /// Product of the two singles probabilities at each phase.
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    /// One-pair sector only, unit-efficiency detectors.
    Ideal,
    /// Up to two pairs, threshold detectors of efficiency `eta`.
    Threshold { eta: f64 },
}

/// Every unordered pair of port modes of `spec`.
pub fn all_pairs(spec: &CircuitSpec) -> Vec<(String, String)> {
    let names = spec.names();
    let modes: Vec<usize> = spec
        .ports
        .iter()
        .flat_map(|p| [p.rail0, p.rail1])
        .collect();
    let mut out = Vec::new();
    for (i, &a) in modes.iter().enumerate() {
        for &b in &modes[i + 1..] {
            out.push((names[a].clone(), names[b].clone()));
        }
    }
    out
}

/// True when both detectors sit on the same rail (the `Phi` family).
pub fn same_rail(spec: &CircuitSpec, pair: &(String, String)) -> Result<bool> {
    let rail = |name: &str| -> Result<usize> {
        let idx = spec
            .names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| spec_err(format!("unknown detector {name:?}")))?;
        spec.ports
            .iter()
            .find_map(|p| {
                (p.rail0 == idx)
                    .then_some(0)
                    .or_else(|| (p.rail1 == idx).then_some(1))
            })
            .ok_or_else(|| spec_err(format!("{name:?} is not a port mode")))
    };
    Ok(rail(&pair.0)? == rail(&pair.1)?)
}

pub fn rhom_fringe(
    model: &SourceModel,
    spec: &CircuitSpec,
    pairs: &[(String, String)],
    phi_grid: &[f64],
    detection: Detection,
) -> Result<Vec<FringeCurve>> {
    if phi_grid.is_empty() {
        return Err(spec_err("phase grid is empty"));
    }
    let names = spec.names();
    let lookup = |n: &str| {
        names
            .iter()
            .position(|x| x == n)
            .ok_or_else(|| spec_err(format!("unknown detector {n:?}")))
    };
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<_>>()?;

    let (sel, eta) = match detection {
        Detection::Ideal => (PairSelector::Exactly(1), 1.0),
        Detection::Threshold { eta } => {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(spec_err("detector efficiency must lie in (0, 1]"));
            }
            (PairSelector::UpTo(2), eta)
        }
    };
    let mut curves: Vec<FringeCurve> = pairs
        .iter()
        .map(|p| FringeCurve {
            pair: p.clone(),
            phi: phi_grid.to_vec(),
            values: Vec::with_capacity(phi_grid.len()),
            baseline: Vec::with_capacity(phi_grid.len()),
        })
        .collect();
    for &phi in phi_grid {
        let m = SourceModel {
            phi,
            ..model.clone()
        };
        let run = source_pipeline(&m, spec, sel)?;
        let group = |mode: usize| run.layout.group(mode, Family::Z);
        for (curve, &(a, b)) in curves.iter_mut().zip(&idx) {
            let (ga, gb) = (group(a), group(b));
            let cc = click_probability(&run.output, &[ga.clone(), gb.clone()], eta);
            let sa = click_probability(&run.output, &[ga], eta);
            let sb = click_probability(&run.output, &[gb], eta);
            curve.values.push(cc);
            curve.baseline.push(sa * sb);
        }
    }
    Ok(curves)
}

/// Least-squares fit of `a cos 2phi + b sin 2phi + c`; returns
/// `sqrt(a^2 + b^2) / c`, or 0 for a flat or non-positive curve.
pub fn visibility_fit(phi: &[f64], values: &[f64]) -> Result<f64> {
    if phi.len() != values.len() || phi.len() < 3 {
        return Err(spec_err("need at least three matching fringe samples"));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&p, &v) in phi.iter().zip(values) {
        let row = Vector3::new((2.0 * p).cos(), (2.0 * p).sin(), 1.0);
        ata += row * row.transpose();
        atb += row * v;
    }
    let Some(sol) = ata.lu().solve(&atb) else {
        return Err(spec_err("phase grid does not resolve a 2-phi sinusoid"));
    };
    let amp = sol[0].hypot(sol[1]);
    let offset = sol[2];
    if offset <= 0.0 || amp <= 1e-12 * offset {
        return Ok(0.0);
    }
    Ok(amp / offset)
}

/// `(max - min) / (max + min)` of the raw samples.
pub fn visibility_raw(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    if max + min <= 0.0 {
        return 0.0;
    }
    (max - min) / (max + min)
}

pub fn visibility(curve: &FringeCurve) -> Result<f64> {
    visibility_fit(&curve.phi, &curve.values)
}
