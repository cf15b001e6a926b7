//! Sparse multimode Fock states.
//!
//! A [`FockVector`] is a map from occupation-number vectors to complex
//! amplitudes over a named [`ModeSpace`]. States are usually built as
//! polynomials in commuting creation operators acting on the vacuum
//! ([`Polynomial`]) and converted with the bosonic rule
//! `c * prod (a_k^+)^{n_k} |vac> = c * prod sqrt(n_k!) |n>`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 4;
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

/// Named modes plus the photon-number truncation and prune tolerance that
/// every vector over this space obeys.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpace {
    names: Vec<String>,
    truncation: usize,
    prune_tol: f64,
}

impl ModeSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut sorted = names.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Space(format!("duplicate mode name {:?}", w[0])));
        }
        Ok(ModeSpace {
            names,
            truncation: DEFAULT_TRUNCATION,
            prune_tol: DEFAULT_PRUNE_TOL,
        })
    }

    /// Modes named `m0, m1, ...`.
    pub fn anonymous(modes: usize) -> Self {
        ModeSpace::new((0..modes).map(|k| format!("m{k}"))).expect("generated names are unique")
    }

    pub fn with_truncation(mut self, photons: usize) -> Self {
        self.truncation = photons;
        self
    }

    pub fn with_prune_tol(mut self, tol: f64) -> Self {
        self.prune_tol = tol;
        self
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }

    fn check(&self, occ: &Occupation) -> Result<()> {
        if occ.0.len() != self.names.len() {
            return Err(Error::Space(format!(
                "occupation has {} modes, space has {}",
                occ.0.len(),
                self.names.len()
            )));
        }
        let photons = occ.total();
        if photons > self.truncation {
            return Err(Error::Truncation {
                photons,
                limit: self.truncation,
            });
        }
        Ok(())
    }
}

/// Photons per mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn new(counts: Vec<u8>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    /// `prod_k sqrt(n_k!)`
    pub fn sqrt_factorial(&self) -> f64 {
        self.0.iter().map(|&n| sqrt_factorial(n)).product()
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

pub(crate) fn sqrt_factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product::<f64>().sqrt()
}

/// A polynomial in commuting creation operators, keyed by exponent vectors.
///
/// This is the working representation for circuit substitution and
/// squeezer expansions; convert to a ket with [`Polynomial::to_state`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    modes: usize,
    terms: BTreeMap<Vec<u8>, Complex64>,
}

impl Polynomial {
    /// The constant polynomial `c` (so `c |vac>`).
    pub fn constant(modes: usize, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; modes], c);
        Polynomial { modes, terms }
    }

    pub fn monomial(powers: &[u8], c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(powers.to_vec(), c);
        Polynomial {
            modes: powers.len(),
            terms,
        }
    }

    /// Read a ket back as the polynomial that creates it from vacuum.
    pub fn from_state(state: &FockVector) -> Self {
        let terms = state
            .terms
            .iter()
            .map(|(occ, &amp)| (occ.0.clone(), amp / occ.sqrt_factorial()))
            .collect();
        Polynomial {
            modes: state.space.len(),
            terms,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8], Complex64)> {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Multiply by the linear form `sum_j coeffs[j].1 * a_{coeffs[j].0}^+`.
    pub fn mul_linear(&self, coeffs: &[(usize, Complex64)]) -> Self {
        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (exp, &c) in &self.terms {
            for &(mode, u) in coeffs {
                let mut e = exp.clone();
                e[mode] += 1;
                *out.entry(e).or_default() += c * u;
            }
        }
        Polynomial {
            modes: self.modes,
            terms: out,
        }
    }

    /// Multiply by a quadratic form `sum c * a_i^+ a_j^+`.
    pub fn mul_quadratic(&self, pairs: &[(usize, usize, Complex64)]) -> Self {
        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (exp, &c) in &self.terms {
            for &(i, j, g) in pairs {
                let mut e = exp.clone();
                e[i] += 1;
                e[j] += 1;
                *out.entry(e).or_default() += c * g;
            }
        }
        Polynomial {
            modes: self.modes,
            terms: out,
        }
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut terms = self.terms.clone();
        for (k, &v) in &other.terms {
            *terms.entry(k.clone()).or_default() += v;
        }
        Polynomial {
            modes: self.modes,
            terms,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Polynomial {
            modes: self.modes,
            terms: self.terms.iter().map(|(k, &v)| (k.clone(), v * s)).collect(),
        }
    }

    /// Apply the bosonic factorial map and produce a ket on `space`.
    pub fn to_state(&self, space: &Arc<ModeSpace>) -> Result<FockVector> {
        if self.modes != space.len() {
            return Err(Error::Space(format!(
                "polynomial over {} modes, space has {}",
                self.modes,
                space.len()
            )));
        }
        FockVector::from_terms(
            space.clone(),
            self.terms.iter().map(|(exp, &c)| {
                let occ = Occupation(exp.clone());
                let amp = c * occ.sqrt_factorial();
                (occ, amp)
            }),
        )
    }
}

/// A sparse ket over a [`ModeSpace`].
///
/// Values are immutable after construction; every operation returns a new
/// vector. Stored amplitudes are never below the space's prune tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    space: Arc<ModeSpace>,
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockVector {
    pub fn zero(space: Arc<ModeSpace>) -> Self {
        FockVector {
            space,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(space: Arc<ModeSpace>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(space.len()), Complex64::new(1.0, 0.0));
        FockVector { space, terms }
    }

    /// `coeff * prod_k (a_k^+)^{powers_k} |vac>`
    pub fn from_monomial(space: Arc<ModeSpace>, powers: &[u8], coeff: Complex64) -> Result<Self> {
        let occ = Occupation(powers.to_vec());
        space.check(&occ)?;
        let amp = coeff * occ.sqrt_factorial();
        Self::from_terms(space, std::iter::once((occ, amp)))
    }

    /// Normalized number state `|occ>`.
    pub fn basis(space: Arc<ModeSpace>, occ: Occupation) -> Result<Self> {
        Self::from_terms(space, std::iter::once((occ, Complex64::new(1.0, 0.0))))
    }

    /// Build from (occupation, amplitude) pairs; duplicates are summed.
    pub fn from_terms(
        space: Arc<ModeSpace>,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            space.check(&occ)?;
            *map.entry(occ).or_default() += amp;
        }
        let tol = space.prune_tol;
        map.retain(|_, a| a.norm() >= tol && a.norm() > 0.0);
        Ok(FockVector { space, terms: map })
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, Complex64)> {
        self.terms.iter().map(|(o, &a)| (o, a))
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.terms
            .get(&Occupation(occ.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Distinct total photon numbers present, ascending.
    pub fn photon_numbers(&self) -> Vec<usize> {
        let mut n: Vec<usize> = self.terms.keys().map(Occupation::total).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn same_space(&self, other: &FockVector) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || self.space.names == other.space.names {
            Ok(())
        } else {
            Err(Error::Space(format!(
                "modes {:?} vs {:?}",
                self.space.names, other.space.names
            )))
        }
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        self.same_space(other)?;
        let (small, large, flip) = if self.terms.len() <= other.terms.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::default();
        for (occ, a) in &small.terms {
            if let Some(b) = large.terms.get(occ) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, s: Complex64) -> FockVector {
        let terms = self.terms.iter().map(|(o, &a)| (o.clone(), a * s));
        Self::from_terms(self.space.clone(), terms).expect("occupations already valid")
    }

    /// `alpha * self + beta * other`
    pub fn scale_add(&self, alpha: Complex64, other: &FockVector, beta: Complex64) -> Result<Self> {
        self.same_space(other)?;
        let terms = self
            .terms
            .iter()
            .map(|(o, &a)| (o.clone(), a * alpha))
            .chain(other.terms.iter().map(|(o, &b)| (o.clone(), b * beta)));
        Self::from_terms(self.space.clone(), terms)
    }

    pub fn add(&self, other: &FockVector) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        self.scale_add(one, other, one)
    }

    /// Tensor product; the mode registry of `other` is appended to ours and
    /// the truncations add.
    pub fn tensor(&self, other: &FockVector) -> Result<Self> {
        let names = self
            .space
            .names
            .iter()
            .chain(other.space.names.iter())
            .cloned();
        let space = ModeSpace::new(names)?
            .with_truncation(self.space.truncation + other.space.truncation)
            .with_prune_tol(self.space.prune_tol.min(other.space.prune_tol))
            .shared();
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (oa, a) in &self.terms {
            for (ob, b) in &other.terms {
                let mut occ = oa.0.clone();
                occ.extend_from_slice(&ob.0);
                terms.push((Occupation(occ), a * b));
            }
        }
        Self::from_terms(space, terms)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// Drop amplitudes with magnitude below `tol`; returns the pruned vector
    /// and the probability weight discarded.
    pub fn prune(&self, tol: f64) -> (FockVector, f64) {
        let mut kept = BTreeMap::new();
        let mut discarded = 0.0;
        for (o, &a) in &self.terms {
            if a.norm() < tol {
                discarded += a.norm_sqr();
            } else {
                kept.insert(o.clone(), a);
            }
        }
        (
            FockVector {
                space: self.space.clone(),
                terms: kept,
            },
            discarded,
        )
    }

    /// Re-home this state on `target`, sending mode `k` to `mapping[k]`.
    pub fn embed(&self, target: Arc<ModeSpace>, mapping: &[usize]) -> Result<Self> {
        if mapping.len() != self.space.len() {
            return Err(Error::Space(format!(
                "mapping covers {} modes, state has {}",
                mapping.len(),
                self.space.len()
            )));
        }
        if let Some(&bad) = mapping.iter().find(|&&m| m >= target.len()) {
            return Err(Error::Space(format!("target mode {bad} out of range")));
        }
        let mut seen = mapping.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != mapping.len() {
            return Err(Error::Space("mapping is not injective".into()));
        }
        let width = target.len();
        let terms = self.terms.iter().map(|(o, &a)| {
            let mut occ = vec![0u8; width];
            for (k, &n) in o.0.iter().enumerate() {
                occ[mapping[k]] = n;
            }
            (Occupation(occ), a)
        });
        Self::from_terms(target, terms)
    }

    pub fn to_json(&self) -> FockVectorJson {
        FockVectorJson {
            modes: self.space.names.clone(),
            terms: self
                .terms
                .iter()
                .map(|(o, a)| TermJson {
                    occ: o.0.clone(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &FockVectorJson) -> Result<Self> {
        let max_photons = doc
            .terms
            .iter()
            .map(|t| t.occ.iter().map(|&n| n as usize).sum::<usize>())
            .max()
            .unwrap_or(0);
        let space = ModeSpace::new(doc.modes.iter().cloned())?
            .with_truncation(max_photons.max(DEFAULT_TRUNCATION))
            .with_prune_tol(0.0)
            .shared();
        Self::from_terms(
            space,
            doc.terms
                .iter()
                .map(|t| (Occupation(t.occ.clone()), Complex64::new(t.re, t.im))),
        )
    }
}

/// Canonical serialized form: terms sorted lexicographically by occupation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVectorJson {
    pub modes: Vec<String>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub occ: Vec<u8>,
    pub re: f64,
    pub im: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_modes() -> Arc<ModeSpace> {
        ModeSpace::new(["a", "b"]).unwrap().shared()
    }

    #[test]
    fn monomial_factorials() {
        let s = two_modes();
        let v = FockVector::from_monomial(s.clone(), &[2, 0], c(1.0)).unwrap();
        assert!((v.amplitude(&[2, 0]) - c(2f64.sqrt())).norm() < 1e-15);

        let v = FockVector::from_monomial(s.clone(), &[1, 1], c(1.0)).unwrap();
        assert_eq!(v.amplitude(&[1, 1]), c(1.0));

        // 1/(2 sqrt 6) (a^+)^4 |vac> is exactly |4,0>
        let v = FockVector::from_monomial(s, &[4, 0], c(1.0 / (2.0 * 6f64.sqrt()))).unwrap();
        assert!((v.amplitude(&[4, 0]) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn truncation_enforced() {
        let s = two_modes();
        let err = FockVector::from_monomial(s, &[3, 2], c(1.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation { photons: 5, limit: 4 }));
    }

    #[test]
    fn inner_products() {
        let s = two_modes();
        let a = FockVector::basis(s.clone(), Occupation::new(vec![1, 0])).unwrap();
        let b = FockVector::basis(s, Occupation::new(vec![0, 1])).unwrap();
        assert_eq!(a.inner(&a).unwrap(), c(1.0));
        assert_eq!(a.inner(&b).unwrap(), c(0.0));
    }

    #[test]
    fn space_mismatch() {
        let a = FockVector::vacuum(two_modes());
        let b = FockVector::vacuum(ModeSpace::new(["x", "y"]).unwrap().shared());
        assert!(matches!(a.inner(&b), Err(Error::Space(_))));
    }

    #[test]
    fn normalize_and_zero() {
        let s = two_modes();
        let v = FockVector::basis(s.clone(), Occupation::new(vec![1, 0]))
            .unwrap()
            .scale(c(2.0));
        let n = v.normalize().unwrap();
        assert!((n.amplitude(&[1, 0]) - c(1.0)).norm() < 1e-15);
        assert!(matches!(FockVector::zero(s).normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn tensor_concatenates() {
        let a = FockVector::basis(
            ModeSpace::new(["A"]).unwrap().shared(),
            Occupation::new(vec![1]),
        )
        .unwrap();
        let b = FockVector::basis(
            ModeSpace::new(["B"]).unwrap().shared(),
            Occupation::new(vec![1]),
        )
        .unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.space().names(), &["A".to_string(), "B".to_string()]);
        assert_eq!(ab.amplitude(&[1, 1]), c(1.0));
    }

    #[test]
    fn prune_reports_discarded_weight() {
        let s = ModeSpace::new(["a", "b"]).unwrap().with_prune_tol(0.0).shared();
        let v = FockVector::from_terms(
            s,
            [
                (Occupation::new(vec![1, 0]), c(1.0)),
                (Occupation::new(vec![0, 1]), c(1e-15)),
            ],
        )
        .unwrap();
        let (p, w) = v.prune(1e-12);
        assert_eq!(p.len(), 1);
        assert!((w - 1e-30).abs() < 1e-44);
    }

    #[test]
    fn construction_prunes_at_space_tolerance() {
        let s = two_modes();
        let v = FockVector::from_terms(
            s,
            [
                (Occupation::new(vec![1, 0]), c(1.0)),
                (Occupation::new(vec![0, 1]), c(1e-15)),
            ],
        )
        .unwrap();
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let s = two_modes();
        let v = FockVector::from_terms(
            s,
            [
                (Occupation::new(vec![0, 2]), Complex64::new(0.0, 0.5)),
                (Occupation::new(vec![2, 0]), c(0.5)),
                (Occupation::new(vec![1, 1]), c(-0.5)),
            ],
        )
        .unwrap();
        let doc = v.to_json();
        let occs: Vec<_> = doc.terms.iter().map(|t| t.occ.clone()).collect();
        assert_eq!(occs, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.starts_with(r#"{"modes":["a","b"],"terms":[{"occ":[0,2],"re":0.0,"im":0.5}"#));
        let back = FockVector::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_json(), doc);
    }

    fn arb_vector(modes: usize) -> impl Strategy<Value = FockVector> {
        prop::collection::vec(
            (prop::collection::vec(0u8..=2, modes), -1.0f64..1.0, -1.0f64..1.0),
            1..6,
        )
        .prop_map(move |terms| {
            let space = ModeSpace::anonymous(modes).with_truncation(2 * modes).shared();
            FockVector::from_terms(
                space,
                terms
                    .into_iter()
                    .map(|(o, re, im)| (Occupation::new(o), Complex64::new(re, im))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn monomial_norm_is_factorial(powers in prop::collection::vec(0u8..=4, 1..4), re in -2.0f64..2.0) {
            let total: usize = powers.iter().map(|&n| n as usize).sum();
            let space = ModeSpace::anonymous(powers.len()).with_truncation(total.max(1)).shared();
            let v = FockVector::from_monomial(space, &powers, Complex64::new(re, 0.5)).unwrap();
            let expect = Complex64::new(re, 0.5).norm()
                * powers.iter().map(|&n| (1..=n as u32).product::<u32>() as f64).product::<f64>().sqrt();
            prop_assert!((v.norm() - expect).abs() < 1e-12 * (1.0 + expect));
        }

        #[test]
        fn inner_is_hermitian(a in arb_vector(3), b in arb_vector(3)) {
            let ab = a.inner(&b).unwrap();
            let ba = b.inner(&a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
            prop_assert!(a.inner(&a).unwrap().re >= 0.0);
            prop_assert!(a.inner(&a).unwrap().im.abs() < 1e-15);
        }

        #[test]
        fn tensor_norm_multiplies(a in arb_vector(2), b in arb_vector(2)) {
            let b = b.embed(ModeSpace::new(["x", "y"]).unwrap().with_truncation(4).shared(), &[0, 1]).unwrap();
            let ab = a.tensor(&b).unwrap();
            prop_assert!((ab.norm() - a.norm() * b.norm()).abs() < 1e-10);
        }
    }
}
