//! Coincidence post-selection onto dual-rail qubits.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::circuit::{build_dicke_network, compile, CircuitSpec};
use crate::error::{spec_err, Error, Result};
use crate::fock::{FockVector, Occupation};
use crate::qubits::{dicke, DensityMatrix, Ket};
use crate::sources::{Family, Layout};

/// One dual-rail port. Each rail may be a group of modes (for example the
/// Schmidt components of a spatial mode); which member holds the photon is
/// treated as environment.
#[derive(Debug, Clone, PartialEq)]
pub struct PortGroup {
    pub label: String,
    pub rail0: Vec<usize>,
    pub rail1: Vec<usize>,
    pub phase: f64,
}

/// Ports ordered by label; the first port is the most significant qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct PortMap {
    ports: Vec<PortGroup>,
}

impl PortMap {
    pub fn new(mut ports: Vec<PortGroup>) -> Result<Self> {
        if ports.is_empty() {
            return Err(spec_err("port map is empty"));
        }
        ports.sort_by(|a, b| a.label.cmp(&b.label));
        if ports.windows(2).any(|w| w[0].label == w[1].label) {
            return Err(spec_err("duplicate port label"));
        }
        let mut seen = Vec::new();
        for p in &ports {
            if p.rail0.is_empty() || p.rail1.is_empty() {
                return Err(spec_err(format!("port {} has an empty rail", p.label)));
            }
            for &m in p.rail0.iter().chain(&p.rail1) {
                if seen.contains(&m) {
                    return Err(spec_err(format!("mode {m} used by two rails")));
                }
                seen.push(m);
            }
        }
        Ok(PortMap { ports })
    }

    pub fn from_spec(spec: &CircuitSpec) -> Result<Self> {
        PortMap::new(
            spec.ports
                .iter()
                .map(|p| PortGroup {
                    label: p.label.clone(),
                    rail0: vec![p.rail0],
                    rail1: vec![p.rail1],
                    phase: p.phase,
                })
                .collect(),
        )
    }

    /// Ports of `spec` on a multimode registry; detectors keep only the
    /// `Z` family.
    pub fn from_spec_lifted(spec: &CircuitSpec, layout: &Layout) -> Result<Self> {
        PortMap::new(
            spec.ports
                .iter()
                .map(|p| PortGroup {
                    label: p.label.clone(),
                    rail0: layout.group(p.rail0, Family::Z),
                    rail1: layout.group(p.rail1, Family::Z),
                    phase: p.phase,
                })
                .collect(),
        )
    }

    pub fn ports(&self) -> &[PortGroup] {
        &self.ports
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.ports.iter().map(|p| p.label.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QubitState {
    Pure(Ket),
    Mixed(DensityMatrix),
    /// No term survived post-selection.
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostselectResult {
    pub labels: Vec<String>,
    pub state: QubitState,
    /// Surviving weight relative to the input norm.
    pub probability: f64,
    /// Number of distinct environment configurations traced out.
    pub environments: usize,
}

impl PostselectResult {
    pub fn is_null(&self) -> bool {
        matches!(self.state, QubitState::Null)
    }

    pub fn ket(&self) -> Option<&Ket> {
        match &self.state {
            QubitState::Pure(k) => Some(k),
            _ => None,
        }
    }

    pub fn density(&self) -> Option<DensityMatrix> {
        match &self.state {
            QubitState::Pure(k) => Some(k.to_density()),
            QubitState::Mixed(r) => Some(r.clone()),
            QubitState::Null => None,
        }
    }

    /// `<psi| rho |psi>`, zero for a null result.
    pub fn fidelity_to(&self, psi: &Ket) -> Result<f64> {
        match &self.state {
            QubitState::Pure(k) => k.overlap(psi),
            QubitState::Mixed(r) => r.expectation(psi),
            QubitState::Null => Ok(0.0),
        }
    }

    pub fn to_json(&self) -> Value {
        let state = match &self.state {
            QubitState::Pure(k) => serde_json::to_value(k.to_json(&self.labels))
                .expect("plain data serializes"),
            QubitState::Mixed(r) => {
                let mut v = serde_json::to_value(r.to_json()).expect("plain data serializes");
                v["modes"] = json!(self.labels);
                v
            }
            QubitState::Null => json!({ "modes": self.labels, "terms": [] }),
        };
        let kind = match self.state {
            QubitState::Pure(_) => "pure",
            QubitState::Mixed(_) => "mixed",
            QubitState::Null => "null",
        };
        json!({
            "kind": kind,
            "probability": self.probability,
            "state": state,
        })
    }
}

#[derive(Clone, Copy)]
struct Slot {
    port: usize,
    rail: usize,
    member: usize,
}

/// Keep terms with exactly one photon per port, read off the qubit string
/// and trace every other degree of freedom.
pub fn postselect(s: &FockVector, ports: &PortMap) -> Result<PostselectResult> {
    let m = s.space().len();
    let mut slots: Vec<Option<Slot>> = vec![None; m];
    for (pi, p) in ports.ports.iter().enumerate() {
        for (rail, group) in [&p.rail0, &p.rail1].into_iter().enumerate() {
            for (member, &mode) in group.iter().enumerate() {
                if mode >= m {
                    return Err(Error::Space(format!("port mode {mode} outside {m}-mode state")));
                }
                slots[mode] = Some(Slot {
                    port: pi,
                    rail,
                    member,
                });
            }
        }
    }
    let n = ports.len();
    let phases: Vec<Complex64> = ports
        .ports
        .iter()
        .map(|p| Complex64::from_polar(1.0, -p.phase))
        .collect();

    let total = s.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut envs: BTreeMap<(Vec<u8>, Vec<usize>), Vec<Complex64>> = BTreeMap::new();
    let mut kept = 0.0;
    'terms: for (occ, amp) in s.terms() {
        let mut count = vec![0u8; n];
        let mut bits = vec![0usize; n];
        let mut members = vec![0usize; n];
        let mut rest = Vec::new();
        for (mode, &k) in occ.counts().iter().enumerate() {
            match slots[mode] {
                Some(slot) => {
                    if k > 0 {
                        count[slot.port] += k;
                        if count[slot.port] > 1 {
                            continue 'terms;
                        }
                        bits[slot.port] = slot.rail;
                        members[slot.port] = slot.member;
                    }
                }
                None => rest.push(k),
            }
        }
        if count.iter().any(|&c| c != 1) {
            continue;
        }
        let mut index = 0;
        let mut a = amp;
        for (q, &b) in bits.iter().enumerate() {
            index = (index << 1) | b;
            if b == 1 {
                a *= phases[q];
            }
        }
        kept += amp.norm_sqr();
        envs.entry((rest, members))
            .or_insert_with(|| vec![Complex64::default(); 1 << n])[index] += a;
    }

    let labels = ports.labels();
    let probability = kept / total;
    let environments = envs.len();
    let state = if kept == 0.0 {
        QubitState::Null
    } else if environments == 1 {
        let v = envs.into_values().next().expect("one environment");
        QubitState::Pure(Ket::new(v)?.normalize()?)
    } else {
        let d = 1 << n;
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for v in envs.values() {
            for r in 0..d {
                if v[r] == Complex64::default() {
                    continue;
                }
                for c in 0..d {
                    rho[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        QubitState::Mixed(DensityMatrix::new_unchecked(rho.unscale(kept))?)
    };
    Ok(PostselectResult {
        labels,
        state,
        probability,
        environments,
    })
}

/// Probability that every listed threshold detector clicks, each detector
/// seeing the total photon number of its mode group with efficiency `eta`.
pub fn click_probability(s: &FockVector, detectors: &[Vec<usize>], eta: f64) -> f64 {
    let total = s.norm_sqr();
    s.terms()
        .map(|(occ, a)| {
            let p: f64 = detectors
                .iter()
                .map(|d| {
                    let k: u32 = d.iter().map(|&m| u32::from(occ.counts()[m])).sum();
                    1.0 - (1.0 - eta).powi(k as i32)
                })
                .product();
            p * a.norm_sqr()
        })
        .sum::<f64>()
        / total
}

/// Monomial fed through the splitter tree of the `n`-port network.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeProjection {
    pub state: Ket,
    pub probability: f64,
    /// Component of the (unnormalized) projected qubit vector along `|D_n^m>`.
    pub amplitude: Complex64,
}

/// Feed the normalized monomial `z0^{n-m} z1^m` (so `m` photons on rail 1)
/// through the splitter tree and post-select.
pub fn dicke_projection_check(m: usize, n: usize) -> Result<DickeProjection> {
    if m > n {
        return Err(spec_err(format!("m = {m} exceeds N = {n}")));
    }
    let spec = build_dicke_network(n)?;
    let tree = CircuitSpec {
        elements: spec.elements[1..].to_vec(),
        ..spec.clone()
    };
    let space = spec.space(n)?;
    let mut occ = vec![0u8; spec.modes];
    occ[0] = (n - m) as u8;
    occ[1] = m as u8;
    let input = FockVector::basis(space, Occupation::new(occ))?;
    let out = compile(&tree)?.apply(&input)?;
    let res = postselect(&out, &PortMap::from_spec(&spec)?)?;
    let state = match res.state {
        QubitState::Pure(k) => k,
        _ => return Err(Error::Data("projection did not yield a pure state".into())),
    };
    let target = dicke(n, m)?;
    let amplitude = target.inner(&state)? * res.probability.sqrt();
    Ok(DickeProjection {
        state,
        probability: res.probability,
        amplitude,
    })
}

/// `N!/N^N`
pub fn max_efficiency(n: usize) -> f64 {
    (1..=n).map(|k| k as f64 / n as f64).product()
}

/// `N!/N^N` as a reduced fraction, for `2 <= N <= 20`.
pub fn max_efficiency_exact(n: usize) -> Result<(u128, u128)> {
    if !(2..=20).contains(&n) {
        return Err(spec_err(format!("exact efficiency supports 2..=20, got {n}")));
    }
    let num: u128 = (1..=n as u128).product();
    let den: u128 = (n as u128).pow(n as u32);
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
