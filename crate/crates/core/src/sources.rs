//! Coherently pumped photon-pair sources.
//!
//! Two degenerate squeezers share a dual-color pump with relative phase
//! `phi`. The impure model adds frequency-correlated Schmidt modes and the
//! two single-pump processes whose partner photons land in the `U` and `V`
//! families.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Result};
use crate::fock::{FockVector, ModeSpace, Polynomial};

/// Frequency families of the three processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Z,
    U,
    V,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Z, Family::U, Family::V];

    fn index(self) -> usize {
        self as usize
    }

    fn tag(self) -> &'static str {
        match self {
            Family::Z => "Z",
            Family::U => "U",
            Family::V => "V",
        }
    }
}

fn default_schmidt() -> Vec<f64> {
    vec![1.0]
}

fn default_max_pairs() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    /// Magnitude of the dual-pump squeeze strength.
    pub g: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_schmidt")]
    pub schmidt: Vec<f64>,
    #[serde(default)]
    pub g1: f64,
    #[serde(default)]
    pub g2: f64,
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
}

impl Default for SourceModel {
    fn default() -> Self {
        SourceModel {
            g: 0.1,
            phi: 0.0,
            schmidt: default_schmidt(),
            g1: 0.0,
            g2: 0.0,
            max_pairs: default_max_pairs(),
        }
    }
}

/// Normalize to unit 2-norm and sort descending.
pub fn normalize_schmidt(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(spec_err("Schmidt list is empty"));
    }
    if raw.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(spec_err("Schmidt coefficients must be positive"));
    }
    let n = raw.iter().map(|l| l * l).sum::<f64>().sqrt();
    let mut out: Vec<f64> = raw.iter().map(|l| l / n).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Which pair-number sectors of the truncated exponential to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelector {
    Exactly(usize),
    UpTo(usize),
}

impl PairSelector {
    fn contains(self, k: usize) -> bool {
        match self {
            PairSelector::Exactly(n) => k == n,
            PairSelector::UpTo(n) => k <= n,
        }
    }

    fn max(self) -> usize {
        match self {
            PairSelector::Exactly(n) | PairSelector::UpTo(n) => n,
        }
    }
}

/// Mode index layout `(spatial * 3 + family) * K + schmidt` of the
/// multimode registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub spatial: usize,
    pub schmidt: usize,
}

impl Layout {
    pub fn new(spatial: usize, schmidt: usize) -> Self {
        Layout { spatial, schmidt }
    }

    /// Sub-modes carried by every spatial mode.
    pub fn per_spatial(&self) -> usize {
        3 * self.schmidt
    }

    pub fn modes(&self) -> usize {
        self.spatial * self.per_spatial()
    }

    pub fn index(&self, spatial: usize, family: Family, k: usize) -> usize {
        (spatial * 3 + family.index()) * self.schmidt + k
    }

    /// Indices of one family on a spatial mode, all Schmidt components.
    pub fn group(&self, spatial: usize, family: Family) -> Vec<usize> {
        (0..self.schmidt)
            .map(|k| self.index(spatial, family, k))
            .collect()
    }

    /// Registry named `<spatial>.<family><k>`.
    pub fn space(&self, spatial_names: &[String], truncation: usize) -> Result<Arc<ModeSpace>> {
        if spatial_names.len() != self.spatial {
            return Err(spec_err(format!(
                "{} names for {} spatial modes",
                spatial_names.len(),
                self.spatial
            )));
        }
        let mut names = Vec::with_capacity(self.modes());
        for s in spatial_names {
            for f in Family::ALL {
                for k in 0..self.schmidt {
                    names.push(format!("{s}.{}{k}", f.tag()));
                }
            }
        }
        Ok(ModeSpace::new(names)?.with_truncation(truncation).shared())
    }
}

impl SourceModel {
    pub fn ideal(phi: f64) -> Self {
        SourceModel {
            phi,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schmidt.is_empty() {
            return Err(spec_err("Schmidt list is empty"));
        }
        if self.schmidt.iter().any(|&l| !(l > 0.0)) {
            return Err(spec_err("Schmidt coefficients must be positive"));
        }
        if self.schmidt.windows(2).any(|w| w[0] < w[1]) {
            return Err(spec_err("Schmidt coefficients must be sorted descending"));
        }
        let s: f64 = self.schmidt.iter().map(|l| l * l).sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(spec_err(format!("Schmidt squares sum to {s}, expected 1")));
        }
        for (name, v) in [("g", self.g), ("g1", self.g1), ("g2", self.g2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(spec_err(format!("{name} must be finite and >= 0")));
            }
        }
        if !self.phi.is_finite() {
            return Err(spec_err("phi must be finite"));
        }
        if self.max_pairs == 0 {
            return Err(spec_err("max_pairs must be at least 1"));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        purity(&self.schmidt)
    }

    /// Quadratic generator on source rails 0 and 1 (spatial modes of
    /// `layout`): `-(g/2)(Z0Z0 + e^{2i phi} Z1Z1) - (g1/sqrt2)(Z0U0 + ...) - ...`.
    pub fn generator(&self, layout: &Layout) -> Vec<(usize, usize, Complex64)> {
        let e2 = Complex64::from_polar(1.0, 2.0 * self.phi);
        let rails = [Complex64::new(1.0, 0.0), e2];
        let processes = [
            (Family::Z, -0.5 * self.g),
            (Family::U, -FRAC_1_SQRT_2 * self.g1),
            (Family::V, -FRAC_1_SQRT_2 * self.g2),
        ];
        let mut out = Vec::new();
        for (rail, &ph) in rails.iter().enumerate() {
            for &(partner, strength) in &processes {
                if strength == 0.0 {
                    continue;
                }
                for (k, &l) in self.schmidt.iter().enumerate() {
                    out.push((
                        layout.index(rail, Family::Z, k),
                        layout.index(rail, partner, k),
                        ph * strength * l,
                    ));
                }
            }
        }
        out
    }

    /// `sum_{k in sel} G^k / k! |vac>` on the multimode registry of `space`,
    /// whose layout must place the two source rails on spatial modes 0 and 1.
    /// The result is not normalized.
    pub fn joint_state(
        &self,
        space: &Arc<ModeSpace>,
        layout: &Layout,
        sel: PairSelector,
    ) -> Result<FockVector> {
        self.validate()?;
        if layout.schmidt != self.schmidt.len() || layout.spatial < 2 {
            return Err(spec_err("layout does not match the source model"));
        }
        if space.len() != layout.modes() {
            return Err(spec_err("space does not match the layout"));
        }
        if sel.max() > self.max_pairs {
            return Err(spec_err(format!(
                "requested {} pairs but max_pairs is {}",
                sel.max(),
                self.max_pairs
            )));
        }
        let poly = self.expansion(layout, sel);
        poly.to_state(space)
    }

    fn expansion(&self, layout: &Layout, sel: PairSelector) -> Polynomial {
        let gen = self.generator(layout);
        let mut term = Polynomial::constant(layout.modes(), Complex64::new(1.0, 0.0));
        let mut acc: Vec<Polynomial> = Vec::new();
        for k in 0..=sel.max() {
            if k > 0 {
                term = term.mul_quadratic(&gen).scale(Complex64::new(1.0 / k as f64, 0.0));
            }
            if sel.contains(k) {
                acc.push(term.clone());
            }
        }
        acc.into_iter()
            .reduce(|a, b| a.add(&b))
            .unwrap_or_else(|| Polynomial::constant(layout.modes(), Complex64::default()))
    }

    /// Norm squared of the first neglected sector relative to the kept
    /// expansion up to `max_pairs`.
    pub fn truncation_weight(&self, layout: &Layout) -> Result<f64> {
        self.validate()?;
        let n = self.max_pairs;
        let space = ModeSpace::anonymous(layout.modes())
            .with_truncation(2 * (n + 1))
            .with_prune_tol(0.0)
            .shared();
        let kept = self.expansion(layout, PairSelector::UpTo(n)).to_state(&space)?;
        let next = self
            .expansion(layout, PairSelector::Exactly(n + 1))
            .to_state(&space)?;
        Ok(next.norm_sqr() / kept.norm_sqr())
    }
}

/// `sum lambda_i^4`
pub fn purity(schmidt: &[f64]) -> f64 {
    schmidt.iter().map(|l| l.powi(4)).sum()
}

/// Normalized single-mode-per-rail source term on modes `z0, z1`:
/// order 1 is `(z0^2 + e^{2i phi} z1^2)`, order 2 its square.
pub fn ideal_pair_state(phi: f64, order: usize) -> Result<FockVector> {
    if !(1..=2).contains(&order) {
        return Err(spec_err(format!("pair order {order} not in 1..=2")));
    }
    let space = ModeSpace::new(["z0", "z1"])?
        .with_truncation(2 * order)
        .shared();
    let e2 = Complex64::from_polar(1.0, 2.0 * phi);
    let one = Polynomial::constant(2, Complex64::new(1.0, 0.0));
    let quad = [(0, 0, Complex64::new(1.0, 0.0)), (1, 1, e2)];
    let mut p = one;
    for _ in 0..order {
        p = p.mul_quadratic(&quad);
    }
    p.to_state(&space)?.normalize()
}
