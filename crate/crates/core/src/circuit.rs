//! Linear-optical circuits: element lists, compiled mode transforms and
//! their action on Fock states.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Error, Result};
use crate::fock::{FockVector, ModeSpace, Occupation, Polynomial};

pub const DEFAULT_CROSS_LOSS_DB: f64 = 0.25;

/// Preset names accepted by [`preset`].
pub const PRESETS: [&str; 3] = ["bell2", "dicke4", "dicke8"];

fn default_cross_loss() -> f64 {
    DEFAULT_CROSS_LOSS_DB
}

/// Amplitude transmission for a loss given in dB.
pub fn db_to_amplitude(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitElement {
    /// Balanced coupler `(1/sqrt2) [[1, i], [i, 1]]` on modes `(i, j)`.
    Mmi { modes: [usize; 2] },
    /// `diag(e^{i phi}, 1)`: a phase on one mode.
    Phase { mode: usize, phi: f64 },
    /// Waveguide crossing; both modes keep their route and lose `loss_db`.
    Cross {
        modes: [usize; 2],
        #[serde(default = "default_cross_loss")]
        loss_db: f64,
    },
    Attenuator { mode: usize, loss_db: f64 },
}

impl CircuitElement {
    pub fn mmi(i: usize, j: usize) -> Self {
        CircuitElement::Mmi { modes: [i, j] }
    }

    pub fn phase(mode: usize, phi: f64) -> Self {
        CircuitElement::Phase { mode, phi }
    }

    fn modes(&self) -> Vec<usize> {
        match *self {
            CircuitElement::Mmi { modes } | CircuitElement::Cross { modes, .. } => modes.to_vec(),
            CircuitElement::Phase { mode, .. } | CircuitElement::Attenuator { mode, .. } => {
                vec![mode]
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let modes = self.modes();
        if let Some(&m) = modes.iter().find(|&&m| m >= dim) {
            return Err(spec_err(format!("{self:?}: mode {m} outside 0..{dim}")));
        }
        if modes.len() == 2 && modes[0] == modes[1] {
            return Err(spec_err(format!("{self:?}: modes must be distinct")));
        }
        match *self {
            CircuitElement::Cross { loss_db, .. } | CircuitElement::Attenuator { loss_db, .. }
                if !(loss_db >= 0.0 && loss_db.is_finite()) =>
            {
                Err(spec_err(format!("{self:?}: loss must be a finite value >= 0 dB")))
            }
            CircuitElement::Phase { phi, .. } if !phi.is_finite() => {
                Err(spec_err(format!("{self:?}: phase must be finite")))
            }
            _ => Ok(()),
        }
    }

    /// Left-multiply `m` by this element's embedding.
    fn apply_left(&self, m: &mut DMatrix<Complex64>) {
        match *self {
            CircuitElement::Mmi { modes: [i, j] } => {
                let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                let t = Complex64::new(0.0, FRAC_1_SQRT_2);
                for c in 0..m.ncols() {
                    let (a, b) = (m[(i, c)], m[(j, c)]);
                    m[(i, c)] = s * a + t * b;
                    m[(j, c)] = t * a + s * b;
                }
            }
            CircuitElement::Phase { mode, phi } => {
                let p = Complex64::from_polar(1.0, phi);
                m.row_mut(mode).iter_mut().for_each(|x| *x *= p);
            }
            CircuitElement::Cross {
                modes: [i, j],
                loss_db,
            } => {
                let l = db_to_amplitude(loss_db);
                m.row_mut(i).iter_mut().for_each(|x| *x *= l);
                m.row_mut(j).iter_mut().for_each(|x| *x *= l);
            }
            CircuitElement::Attenuator { mode, loss_db } => {
                let l = db_to_amplitude(loss_db);
                m.row_mut(mode).iter_mut().for_each(|x| *x *= l);
            }
        }
    }
}

/// A dual-rail output port. `phase` is the calibration phase of rail 1
/// relative to rail 0 that qubit extraction removes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub label: String,
    pub rail0: usize,
    pub rail1: usize,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_names: Option<Vec<String>>,
    pub elements: Vec<CircuitElement>,
    #[serde(default)]
    pub ports: Vec<Port>,
}

impl CircuitSpec {
    pub fn new(modes: usize) -> Self {
        CircuitSpec {
            modes,
            mode_names: None,
            elements: Vec::new(),
            ports: Vec::new(),
        }
    }

    pub fn push(mut self, e: CircuitElement) -> Self {
        self.elements.push(e);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(spec_err("circuit needs at least one mode"));
        }
        if let Some(names) = &self.mode_names {
            if names.len() != self.modes {
                return Err(spec_err(format!(
                    "{} mode names for {} modes",
                    names.len(),
                    self.modes
                )));
            }
        }
        for e in &self.elements {
            e.validate(self.modes)?;
        }
        let mut used = vec![false; self.modes];
        let mut labels: Vec<&str> = Vec::new();
        for p in &self.ports {
            for m in [p.rail0, p.rail1] {
                if m >= self.modes {
                    return Err(spec_err(format!("port {}: mode {m} out of range", p.label)));
                }
                if used[m] {
                    return Err(spec_err(format!("port {}: mode {m} already used", p.label)));
                }
                used[m] = true;
            }
            if labels.contains(&p.label.as_str()) {
                return Err(spec_err(format!("duplicate port label {}", p.label)));
            }
            labels.push(&p.label);
        }
        Ok(())
    }

    /// Mode names: explicit, else `<label><rail>` for port modes and `m<k>`
    /// for the rest.
    pub fn names(&self) -> Vec<String> {
        if let Some(n) = &self.mode_names {
            return n.clone();
        }
        let mut names: Vec<String> = (0..self.modes).map(|k| format!("m{k}")).collect();
        for p in &self.ports {
            if p.rail0 < self.modes {
                names[p.rail0] = format!("{}0", p.label);
            }
            if p.rail1 < self.modes {
                names[p.rail1] = format!("{}1", p.label);
            }
        }
        names
    }

    pub fn space(&self, truncation: usize) -> Result<Arc<ModeSpace>> {
        Ok(ModeSpace::new(self.names())?
            .with_truncation(truncation)
            .shared())
    }

    pub fn mmi_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, CircuitElement::Mmi { .. }))
            .count()
    }
}

/// Compiled circuit: `a_k^+ -> sum_j U[j,k] b_j^+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    matrix: DMatrix<Complex64>,
}

impl ModeTransform {
    pub fn identity(dim: usize) -> Self {
        ModeTransform {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Space(format!(
                "transform must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(ModeTransform { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `then` applied after `self`.
    pub fn then(&self, then: &ModeTransform) -> Result<Self> {
        if self.dim() != then.dim() {
            return Err(Error::Space(format!(
                "cannot compose {}-mode and {}-mode transforms",
                self.dim(),
                then.dim()
            )));
        }
        Ok(ModeTransform {
            matrix: &then.matrix * &self.matrix,
        })
    }

    /// `max |U^dag U - I|`
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.adjoint() * &self.matrix - DMatrix::identity(self.dim(), self.dim());
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_singular_value(&self) -> f64 {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Act identically on `k` internal sub-modes of every mode:
    /// `U (x) I_k`, so mode `m` sub-index `s` maps to `m*k + s`.
    pub fn lift(&self, k: usize) -> Self {
        let d = self.dim();
        let mut out = DMatrix::zeros(d * k, d * k);
        for r in 0..d {
            for c in 0..d {
                let u = self.matrix[(r, c)];
                if u != Complex64::default() {
                    for s in 0..k {
                        out[(r * k + s, c * k + s)] = u;
                    }
                }
            }
        }
        ModeTransform { matrix: out }
    }

    /// Substitute every creation operator and expand.
    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        let space = state.space();
        if space.len() != self.dim() {
            return Err(Error::Space(format!(
                "{}-mode transform on {}-mode state",
                self.dim(),
                space.len()
            )));
        }
        let columns: Vec<Vec<(usize, Complex64)>> = (0..self.dim())
            .map(|k| {
                self.matrix
                    .column(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| u.norm() > 0.0)
                    .map(|(j, &u)| (j, u))
                    .collect()
            })
            .collect();
        let input = Polynomial::from_state(state);
        let mut acc: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (powers, c) in input.terms() {
            let mut poly = Polynomial::constant(self.dim(), c);
            for (k, &n) in powers.iter().enumerate() {
                for _ in 0..n {
                    poly = poly.mul_linear(&columns[k]);
                }
            }
            for (e, c) in poly.terms() {
                *acc.entry(e.to_vec()).or_default() += c;
            }
        }
        FockVector::from_terms(
            space.clone(),
            acc.into_iter().map(|(e, c)| {
                let occ = Occupation::new(e);
                let amp = c * occ.sqrt_factorial();
                (occ, amp)
            }),
        )
    }
}

/// Ordered product of element embeddings.
pub fn compile(spec: &CircuitSpec) -> Result<ModeTransform> {
    spec.validate()?;
    let mut m = DMatrix::identity(spec.modes, spec.modes);
    for e in &spec.elements {
        e.apply_left(&mut m);
    }
    Ok(ModeTransform { matrix: m })
}

pub fn apply(t: &ModeTransform, s: &FockVector) -> Result<FockVector> {
    t.apply(s)
}

/// Port label for index `p`: `A`, `B`, ..., `Z`, `P26`, ...
pub fn port_label(p: usize) -> String {
    if p < 26 {
        char::from(b'A' + p as u8).to_string()
    } else {
        format!("P{p}")
    }
}

/// Source-rail coupler followed by a balanced binary splitter tree on each
/// rail. Port `p` owns modes `(2p, 2p+1)`; the source enters modes 0 and 1.
pub fn build_dicke_network(n: usize) -> Result<CircuitSpec> {
    if !matches!(n, 2 | 4 | 8 | 16) {
        return Err(spec_err(format!(
            "network size {n} unsupported: only N in {{2, 4, 8, 16}} has a balanced splitter tree"
        )));
    }
    let mode = |rail: usize, port: usize| 2 * port + rail;
    let mut spec = CircuitSpec::new(2 * n).push(CircuitElement::mmi(0, 1));
    for rail in 0..2 {
        let mut h = 1;
        while h < n {
            for p in 0..h {
                spec.elements
                    .push(CircuitElement::mmi(mode(rail, p), mode(rail, p + h)));
            }
            h *= 2;
        }
    }
    spec.ports = (0..n)
        .map(|p| Port {
            label: port_label(p),
            rail0: mode(0, p),
            rail1: mode(1, p),
            phase: 0.0,
        })
        .collect();
    calibrate_ports(&mut spec)?;
    Ok(spec)
}

/// Set each port's calibration phase from the splitter tree alone (all
/// elements after the first), comparing the phases with which source rails
/// 0 and 1 reach the port.
pub fn calibrate_ports(spec: &mut CircuitSpec) -> Result<()> {
    let tree = CircuitSpec {
        elements: spec.elements.iter().skip(1).cloned().collect(),
        ports: Vec::new(),
        ..spec.clone()
    };
    let u = compile(&tree)?;
    let m = u.matrix();
    for p in spec.ports.iter_mut() {
        let a0 = m[(p.rail0, 0)];
        let a1 = m[(p.rail1, 1)];
        p.phase = if a0.norm() > 0.0 && a1.norm() > 0.0 {
            let d = (a1 / a0).arg();
            if d.abs() < 1e-14 {
                0.0
            } else {
                d
            }
        } else {
            0.0
        };
    }
    Ok(())
}

pub fn preset(name: &str) -> Result<CircuitSpec> {
    match name {
        "bell2" => build_dicke_network(2),
        "dicke4" => build_dicke_network(4),
        "dicke8" => build_dicke_network(8),
        other => Err(spec_err(format!(
            "unknown preset {other:?} (known: {})",
            PRESETS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mmi_matrix() {
        let u = compile(&CircuitSpec::new(2).push(CircuitElement::mmi(0, 1))).unwrap();
        let s = FRAC_1_SQRT_2;
        let expect = [[c(s, 0.0), c(0.0, s)], [c(0.0, s), c(s, 0.0)]];
        for (r, row) in expect.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                assert!((u.matrix()[(r, k)] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn phase_matrix_and_identity() {
        let u = compile(&CircuitSpec::new(2).push(CircuitElement::phase(0, 0.3))).unwrap();
        assert!((u.matrix()[(0, 0)] - Complex64::from_polar(1.0, 0.3)).norm() < 1e-15);
        assert_eq!(u.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(compile(&CircuitSpec::new(3)).unwrap(), ModeTransform::identity(3));
    }

    #[test]
    fn attenuator_and_cross_are_subunitary() {
        let spec = CircuitSpec::new(3)
            .push(CircuitElement::mmi(0, 1))
            .push(CircuitElement::Attenuator { mode: 1, loss_db: 3.0 })
            .push(CircuitElement::Cross { modes: [1, 2], loss_db: 0.25 });
        let u = compile(&spec).unwrap();
        assert!(u.max_singular_value() <= 1.0 + 1e-10);
        assert!((u.matrix()[(1, 1)].norm() - FRAC_1_SQRT_2 * db_to_amplitude(3.25)).abs() < 1e-14);
    }

    #[test]
    fn invalid_elements_rejected() {
        for e in [
            CircuitElement::mmi(0, 0),
            CircuitElement::mmi(0, 5),
            CircuitElement::Attenuator { mode: 0, loss_db: -1.0 },
        ] {
            assert!(matches!(compile(&CircuitSpec::new(2).push(e)), Err(Error::Spec(_))));
        }
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let space = ModeSpace::new(["a", "b"]).unwrap().shared();
        let input = FockVector::basis(space, Occupation::new(vec![1, 1])).unwrap();
        let u = compile(&CircuitSpec::new(2).push(CircuitElement::mmi(0, 1))).unwrap();
        let out = u.apply(&input).unwrap();
        assert!((out.amplitude(&[2, 0]) - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((out.amplitude(&[0, 2]) - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-14);
        assert_eq!(out.amplitude(&[1, 1]), c(0.0, 0.0));
    }

    #[test]
    fn rhom_splits_into_three_parts() {
        let space = ModeSpace::new(["z0", "z1"]).unwrap().shared();
        let u = compile(&CircuitSpec::new(2).push(CircuitElement::mmi(0, 1))).unwrap();
        for &phi in &[0.0, 0.4, 1.1, std::f64::consts::FRAC_PI_2] {
            let e2 = Complex64::from_polar(1.0, 2.0 * phi);
            let input = FockVector::from_terms(
                space.clone(),
                [
                    (Occupation::new(vec![2, 0]), c(FRAC_1_SQRT_2, 0.0)),
                    (Occupation::new(vec![0, 2]), e2 * FRAC_1_SQRT_2),
                ],
            )
            .unwrap();
            let out = u.apply(&input).unwrap();
            // i e^{i phi} [cos phi z0 z1 - 1/2 sin phi (z0^2 - z1^2)] |vac>
            let g = c(0.0, 1.0) * Complex64::from_polar(1.0, phi);
            let half_sin = -0.5 * phi.sin() * 2f64.sqrt();
            assert!((out.amplitude(&[1, 1]) - g * phi.cos()).norm() < 1e-13);
            assert!((out.amplitude(&[2, 0]) - g * half_sin).norm() < 1e-13);
            assert!((out.amplitude(&[0, 2]) + g * half_sin).norm() < 1e-13);
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn network_sizes() {
        assert_eq!(build_dicke_network(2).unwrap().mmi_count(), 3);
        assert_eq!(build_dicke_network(4).unwrap().mmi_count(), 7);
        assert!(matches!(build_dicke_network(6), Err(Error::Spec(_))));
        let spec = build_dicke_network(4).unwrap();
        assert_eq!(spec.names()[..4], ["A0", "A1", "B0", "B1"]);
        assert!(spec.ports.iter().all(|p| p.phase == 0.0));
    }

    #[test]
    fn network_spreads_each_rail_evenly() {
        for n in [2usize, 4, 8, 16] {
            let spec = build_dicke_network(n).unwrap();
            let tree = CircuitSpec {
                elements: spec.elements[1..].to_vec(),
                ..spec.clone()
            };
            let u = compile(&tree).unwrap();
            for rail in 0..2 {
                for p in &spec.ports {
                    let m = if rail == 0 { p.rail0 } else { p.rail1 };
                    let amp = u.matrix()[(m, rail)].norm();
                    assert!((amp - 1.0 / (n as f64).sqrt()).abs() < 1e-12, "n={n}");
                }
            }
            assert!(compile(&spec).unwrap().unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = preset("dicke4").unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""kind":"mmi""#));
        let back: CircuitSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let cross: CircuitElement =
            serde_json::from_str(r#"{"kind":"cross","modes":[0,1]}"#).unwrap();
        assert_eq!(cross, CircuitElement::Cross { modes: [0, 1], loss_db: 0.25 });
    }

    #[test]
    fn lift_is_kronecker_with_identity() {
        let u = compile(&preset("bell2").unwrap()).unwrap();
        let l = u.lift(3);
        assert_eq!(l.dim(), 12);
        assert!(l.unitarity_defect() < 1e-12);
        assert_eq!(l.matrix()[(5, 2)], u.matrix()[(1, 0)]);
        assert_eq!(l.matrix()[(3 + 2, 1)], c(0.0, 0.0));
    }

    fn arb_element(dim: usize) -> impl Strategy<Value = CircuitElement> {
        prop_oneof![
            (0..dim, 1..dim).prop_map(move |(i, d)| CircuitElement::mmi(i, (i + d) % dim)),
            (0..dim, -3.2f64..3.2).prop_map(|(m, p)| CircuitElement::phase(m, p)),
        ]
    }

    fn arb_state() -> impl Strategy<Value = FockVector> {
        prop::collection::vec(
            (prop::collection::vec(0u8..=1, 3), -1.0f64..1.0, -1.0f64..1.0),
            1..4,
        )
        .prop_map(|terms| {
            let space = ModeSpace::anonymous(3).shared();
            FockVector::from_terms(
                space,
                terms
                    .into_iter()
                    .map(|(mut o, re, im)| {
                        // fix photon number at two
                        o = match o.iter().map(|&x| x as usize).sum::<usize>() {
                            2 => o,
                            _ => vec![1, 1, 0],
                        };
                        (Occupation::new(o), Complex64::new(re, im))
                    }),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn lossless_compiles_unitary(els in prop::collection::vec(arb_element(4), 0..12)) {
            let spec = CircuitSpec { elements: els, ..CircuitSpec::new(4) };
            prop_assert!(compile(&spec).unwrap().unitarity_defect() < 1e-10);
        }

        #[test]
        fn apply_preserves_photon_number_and_norm(
            els in prop::collection::vec(arb_element(3), 0..6),
            s in arb_state(),
        ) {
            let u = compile(&CircuitSpec { elements: els, ..CircuitSpec::new(3) }).unwrap();
            let out = u.apply(&s).unwrap();
            prop_assert!((out.norm() - s.norm()).abs() < 1e-10);
            prop_assert!(out.terms().all(|(o, _)| o.total() == 2));
        }

        #[test]
        fn apply_is_linear(
            els in prop::collection::vec(arb_element(3), 0..6),
            a in arb_state(), b in arb_state(),
            alpha in -1.0f64..1.0, beta in -1.0f64..1.0,
        ) {
            let u = compile(&CircuitSpec { elements: els, ..CircuitSpec::new(3) }).unwrap();
            let (al, be) = (c(alpha, 0.3), c(beta, -0.2));
            let lhs = u.apply(&a.scale_add(al, &b, be).unwrap()).unwrap();
            let rhs = u.apply(&a).unwrap().scale_add(al, &u.apply(&b).unwrap(), be).unwrap();
            let d = lhs.scale_add(c(1.0, 0.0), &rhs, c(-1.0, 0.0)).unwrap();
            prop_assert!(d.norm() < 1e-10);
        }

        #[test]
        fn composition_is_consistent(
            e1 in prop::collection::vec(arb_element(3), 0..5),
            e2 in prop::collection::vec(arb_element(3), 0..5),
            s in arb_state(),
        ) {
            let both = CircuitSpec {
                elements: e1.iter().chain(e2.iter()).cloned().collect(),
                ..CircuitSpec::new(3)
            };
            let u1 = compile(&CircuitSpec { elements: e1, ..CircuitSpec::new(3) }).unwrap();
            let u2 = compile(&CircuitSpec { elements: e2, ..CircuitSpec::new(3) }).unwrap();
            let direct = compile(&both).unwrap().apply(&s).unwrap();
            let staged = u2.apply(&u1.apply(&s).unwrap()).unwrap();
            let d = direct.scale_add(c(1.0, 0.0), &staged, c(-1.0, 0.0)).unwrap();
            prop_assert!(d.norm() < 1e-10);
            let composed = u1.then(&u2).unwrap();
            prop_assert!((composed.matrix() - compile(&both).unwrap().matrix()).norm() < 1e-12);
        }
    }
}
