//! Qubit states, reference families and entanglement metrics.
//!
//! Qubit 0 is the most significant bit of a basis index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Error, Result};
use crate::fock::{FockVectorJson, TermJson};
use crate::optim::nelder_mead;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::Space(format!("dimension {dim} is not 2^n with n >= 1")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if bit(index, q, n) == 1 { '1' } else { '0' })
        .collect()
}

/// Pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: DVector<C>,
}

impl Ket {
    pub fn new(amps: Vec<C>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        Ok(Ket {
            amps: DVector::from_vec(amps),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Ket::new(amps.iter().map(|&a| C::new(a, 0.0)).collect())
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(spec_err(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Ket::new(v)
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &DVector<C> {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Ket {
            amps: self.amps.unscale(n),
        })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::Space(format!(
                "dimension {} vs {}",
                self.dim(),
                dim
            )));
        }
        Ok(())
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket) -> Result<C> {
        self.check_dim(other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|<self|other>|^2`
    pub fn overlap(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution after measuring each qubit in `bases`.
    pub fn probabilities_in(&self, bases: &[QubitBasis]) -> Result<Vec<f64>> {
        Ok(self.change_basis(bases)?.probabilities())
    }

    pub fn change_basis(&self, bases: &[QubitBasis]) -> Result<Self> {
        let u = basis_transform(bases, self.n_qubits())?;
        Ok(Ket {
            amps: u * &self.amps,
        })
    }

    /// Canonical term list with one "mode" per qubit label.
    pub fn to_json(&self, labels: &[String]) -> FockVectorJson {
        let n = self.n_qubits();
        FockVectorJson {
            modes: labels.to_vec(),
            terms: self
                .amps
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(i, a)| TermJson {
                    occ: (0..n).map(|q| bit(i, q, n) as u8).collect(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }
}

/// Density operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub dim: usize,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

impl DensityMatrix {
    /// Wrap a matrix and check Hermiticity, unit trace and positivity.
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        let rho = Self::new_unchecked(m)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wrap a square `2^n` matrix without checking physicality.
    pub fn new_unchecked(m: DMatrix<C>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Space("density matrix must be square".into()));
        }
        qubits_for_dim(m.nrows())?;
        Ok(DensityMatrix { m })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        DensityMatrix {
            m: DMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> C {
        self.m.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.m - self.m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::Data(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::Data(format!("trace {tr} is not 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-9 {
            return Err(Error::Data(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// `Re Tr(self other)`
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Space(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok((&self.m * &other.m).trace().re)
    }

    /// `<psi| rho |psi>`
    pub fn expectation(&self, psi: &Ket) -> Result<f64> {
        psi.check_dim(self.dim())?;
        Ok(psi.amps.dotc(&(&self.m * &psi.amps)).re)
    }

    /// Reduced state on the qubits in `keep` (in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_qubits();
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(spec_err("partial trace must keep at least one qubit"));
        }
        if let Some(&q) = keep.iter().find(|&&q| q >= n) {
            return Err(spec_err(format!("qubit {q} out of range for {n} qubits")));
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let compose = |kept_bits: usize, env_bits: usize| -> usize {
            let mut idx = 0;
            for (j, &q) in keep.iter().enumerate() {
                idx |= bit(kept_bits, j, k) << (n - 1 - q);
            }
            for (j, &q) in traced.iter().enumerate() {
                idx |= bit(env_bits, j, traced.len().max(1)) << (n - 1 - q);
            }
            idx
        };
        let dk = 1usize << k;
        let de = 1usize << traced.len();
        let mut out = DMatrix::zeros(dk, dk);
        for r in 0..dk {
            for c in 0..dk {
                let mut s = ZERO;
                for e in 0..de {
                    s += self.m[(compose(r, e), compose(c, e))];
                }
                out[(r, c)] = s;
            }
        }
        Ok(DensityMatrix { m: out })
    }

    pub fn change_basis(&self, bases: &[QubitBasis]) -> Result<Self> {
        let u = basis_transform(bases, self.n_qubits())?;
        Ok(DensityMatrix {
            m: &u * &self.m * u.adjoint(),
        })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn probabilities_in(&self, bases: &[QubitBasis]) -> Result<Vec<f64>> {
        Ok(self.change_basis(bases)?.probabilities())
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        let d = self.dim();
        DensityMatrixJson {
            dim: d,
            entries: (0..d * d)
                .map(|k| {
                    let z = self.m[(k / d, k % d)];
                    [z.re, z.im]
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &DensityMatrixJson) -> Result<Self> {
        let d = doc.dim;
        if doc.entries.len() != d * d {
            return Err(Error::Data(format!(
                "{} entries for dimension {d}",
                doc.entries.len()
            )));
        }
        let m = DMatrix::from_fn(d, d, |r, c| {
            let [re, im] = doc.entries[r * d + c];
            C::new(re, im)
        });
        DensityMatrix::new(m)
    }
}

/// Single-qubit measurement basis. Outcome 0 is the first listed vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitBasis {
    /// `{|0>, |1>}`
    Z,
    /// `{|+>, |->}`
    X,
    /// `{|L>, |R>}` with `|L> = (|0> + i|1>)/sqrt2`.
    Y,
    /// `{|theta>, |theta_perp>}` with `|theta> = (-sin theta/2, cos theta/2)`
    /// and `|theta_perp> = (cos theta/2, sin theta/2)`.
    Rotated(f64),
}

impl QubitBasis {
    /// The two basis kets as columns.
    pub fn vectors(&self) -> [[C; 2]; 2] {
        let s = FRAC_1_SQRT_2;
        match *self {
            QubitBasis::Z => [[ONE, ZERO], [ZERO, ONE]],
            QubitBasis::X => [[C::new(s, 0.0), C::new(s, 0.0)], [C::new(s, 0.0), C::new(-s, 0.0)]],
            QubitBasis::Y => [[C::new(s, 0.0), C::new(0.0, s)], [C::new(s, 0.0), C::new(0.0, -s)]],
            QubitBasis::Rotated(t) => {
                let (sn, cs) = (t / 2.0).sin_cos();
                [[C::new(-sn, 0.0), C::new(cs, 0.0)], [C::new(cs, 0.0), C::new(sn, 0.0)]]
            }
        }
    }

    pub fn ket(&self, outcome: usize) -> Ket {
        let v = self.vectors()[outcome & 1];
        Ket::new(v.to_vec()).expect("two amplitudes")
    }

    /// Rows are the bras of the basis vectors.
    pub fn matrix(&self) -> DMatrix<C> {
        let v = self.vectors();
        DMatrix::from_fn(2, 2, |r, c| v[r][c].conj())
    }
}

impl fmt::Display for QubitBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitBasis::Z => write!(f, "Z"),
            QubitBasis::X => write!(f, "X"),
            QubitBasis::Y => write!(f, "Y"),
            QubitBasis::Rotated(t) => write!(f, "R({t})"),
        }
    }
}

impl FromStr for QubitBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(QubitBasis::Z),
            "X" | "x" => Ok(QubitBasis::X),
            "Y" | "y" => Ok(QubitBasis::Y),
            _ => s
                .strip_prefix("R(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|t| t.parse().ok())
                .map(QubitBasis::Rotated)
                .ok_or_else(|| spec_err(format!("unknown basis {s:?}"))),
        }
    }
}

/// Kronecker product of per-qubit basis matrices; a single basis is
/// broadcast to every qubit.
pub fn basis_transform(bases: &[QubitBasis], n: usize) -> Result<DMatrix<C>> {
    let per: Vec<QubitBasis> = match bases.len() {
        1 => vec![bases[0]; n],
        k if k == n => bases.to_vec(),
        k => {
            return Err(Error::Space(format!("{k} bases for {n} qubits")));
        }
    };
    Ok(per
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, b| acc.kronecker(&b.matrix())))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `|D_n^m>`: equal superposition of all weight-`m` strings.
pub fn dicke(n: usize, m: usize) -> Result<Ket> {
    if n == 0 || n > 10 || m > n {
        return Err(spec_err(format!("Dicke state D{n}m{m} out of range")));
    }
    let a = 1.0 / (binomial(n, m) as f64).sqrt();
    let amps = (0..1usize << n)
        .map(|i| if i.count_ones() as usize == m { a } else { 0.0 })
        .collect::<Vec<_>>();
    Ket::from_real(&amps)
}

pub fn ghz(n: usize) -> Result<Ket> {
    if n == 0 || n > 16 {
        return Err(spec_err(format!("GHZ size {n} out of range")));
    }
    let mut amps = vec![0.0; 1 << n];
    amps[0] = FRAC_1_SQRT_2;
    amps[(1 << n) - 1] = FRAC_1_SQRT_2;
    Ket::from_real(&amps)
}

pub fn w3() -> Ket {
    dicke(3, 1).expect("valid")
}

/// `(|001>+|010>+|100>-|011>-|101>-|110>)/sqrt6`
pub fn g3() -> Ket {
    let a = 1.0 / 6f64.sqrt();
    Ket::from_real(&[0.0, a, a, -a, a, -a, -a, 0.0]).expect("valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus];

    pub fn ket(self) -> Ket {
        let s = FRAC_1_SQRT_2;
        let amps = match self {
            Bell::PhiPlus => [s, 0.0, 0.0, s],
            Bell::PhiMinus => [s, 0.0, 0.0, -s],
            Bell::PsiPlus => [0.0, s, s, 0.0],
            Bell::PsiMinus => [0.0, s, -s, 0.0],
        };
        Ket::from_real(&amps).expect("valid")
    }
}

/// `cos phi |Psi+> - sin phi |Phi->`
pub fn psi2(phi: f64) -> Ket {
    let (s, c) = phi.sin_cos();
    let a = FRAC_1_SQRT_2;
    Ket::from_real(&[-s * a, c * a, c * a, s * a]).expect("valid")
}

/// Coefficients of `|D_4^m>`, `m = 0..=4`, in the four-photon family.
pub fn psi4_dicke_weights(phi: f64) -> [f64; 5] {
    let (s, c) = phi.sin_cos();
    let k = 1.0 / (2.0 * 6f64.sqrt());
    [
        3.0 * s * s * k,
        -6.0 * s * c * k,
        6f64.sqrt() * (3.0 * c * c - 1.0) * k,
        6.0 * s * c * k,
        3.0 * s * s * k,
    ]
}

pub fn psi4(phi: f64) -> Ket {
    let w = psi4_dicke_weights(phi);
    let amps: Vec<f64> = (0..16usize)
        .map(|i| {
            let m = i.count_ones() as usize;
            w[m] / (binomial(4, m) as f64).sqrt()
        })
        .collect();
    Ket::from_real(&amps).expect("valid")
}

/// Named reference states: `D<n>m<m>`, `GHZ<n>`, `W3`, `G3`, `PhiPlus`,
/// `PhiMinus`, `PsiPlus`, `PsiMinus`, `psi2:<phi>`, `psi4:<phi>`.
pub fn reference_state(name: &str) -> Result<Ket> {
    let bad = || spec_err(format!("unknown reference state {name:?}"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    if let Some(phi) = name.strip_prefix("psi4:") {
        return Ok(psi4(num(phi)?));
    }
    if let Some(phi) = name.strip_prefix("psi2:") {
        return Ok(psi2(num(phi)?));
    }
    match name {
        "W3" => return Ok(w3()),
        "G3" => return Ok(g3()),
        "PhiPlus" => return Ok(Bell::PhiPlus.ket()),
        "PhiMinus" => return Ok(Bell::PhiMinus.ket()),
        "PsiPlus" => return Ok(Bell::PsiPlus.ket()),
        "PsiMinus" => return Ok(Bell::PsiMinus.ket()),
        _ => {}
    }
    if let Some(n) = name.strip_prefix("GHZ") {
        return ghz(n.parse().map_err(|_| bad())?);
    }
    if let Some((n, m)) = name.strip_prefix('D').and_then(|r| r.split_once('m')) {
        return dicke(n.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
    }
    Err(bad())
}

pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.fidelity(b)
}

/// Best overlap with a maximally entangled state reachable by local
/// unitaries.
pub fn max_singlet_fraction(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Space(format!(
            "singlet fraction needs two qubits, got dimension {}",
            rho.dim()
        )));
    }
    let bells: Vec<Ket> = Bell::ALL.iter().map(|b| b.ket()).collect();
    let mut diag = [0.0; 4];
    let mut off: f64 = 0.0;
    for (i, bi) in bells.iter().enumerate() {
        for (j, bj) in bells.iter().enumerate() {
            let v = bi.amps.dotc(&(rho.matrix() * &bj.amps));
            if i == j {
                diag[i] = v.re;
            } else {
                off = off.max(v.norm());
            }
        }
    }
    let best_diag = diag.iter().copied().fold(f64::MIN, f64::max);
    if off < 1e-10 {
        return Ok(best_diag);
    }

    let phi_plus = &bells[0];
    let value = |x: &[f64]| -> f64 {
        let u = su2(x[0], x[1], x[2]).kronecker(&su2(x[3], x[4], x[5]));
        let v = u.adjoint() * &phi_plus.amps;
        -v.dotc(&(rho.matrix() * &v)).re
    };
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let mut best = best_diag;
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; 6]];
    starts.extend(
        (0..11).map(|_| (0..6).map(|_| rng.random_range(-3.2..3.2)).collect()),
    );
    for x0 in starts {
        let first = nelder_mead(value, &x0, 0.6, 1e-12, 4000);
        let polished = nelder_mead(value, &first.x, 0.05, 1e-14, 4000);
        best = best.max(-polished.value);
    }
    Ok(best)
}

fn su2(a: f64, b: f64, c: f64) -> DMatrix<C> {
    let rz = |t: f64| {
        DMatrix::from_row_slice(
            2,
            2,
            &[C::from_polar(1.0, -t / 2.0), ZERO, ZERO, C::from_polar(1.0, t / 2.0)],
        )
    };
    let (s, co) = (b / 2.0).sin_cos();
    let ry = DMatrix::from_row_slice(
        2,
        2,
        &[C::new(co, 0.0), C::new(-s, 0.0), C::new(s, 0.0), C::new(co, 0.0)],
    );
    rz(a) * ry * rz(c)
}

/// `(f d + 1) / (d + 1)`
pub fn teleport_fidelity(f_msf: f64, d: usize) -> f64 {
    let d = d as f64;
    (f_msf * d + 1.0) / (d + 1.0)
}

/// Result of projecting one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Remaining qubits, renormalized; `None` when the outcome is impossible.
    pub state: Option<Ket>,
    pub probability: f64,
}

/// Project `qubit` onto `onto`, returning the state of the other qubits.
pub fn project_qubit(state: &Ket, qubit: usize, onto: &Ket) -> Result<Projection> {
    let n = state.n_qubits();
    if onto.dim() != 2 {
        return Err(Error::Space("projector must be a single-qubit ket".into()));
    }
    if (onto.norm() - 1.0).abs() > 1e-10 {
        return Err(spec_err("projector ket must be normalized"));
    }
    if qubit >= n || n < 2 {
        return Err(spec_err(format!("cannot project qubit {qubit} of {n}")));
    }
    let rest = n - 1;
    let mut out = vec![ZERO; 1 << rest];
    for (i, &a) in state.amps.iter().enumerate() {
        let b = bit(i, qubit, n);
        let high = i >> (n - qubit);
        let low = i & ((1 << (n - 1 - qubit)) - 1);
        let j = (high << (n - 1 - qubit)) | low;
        out[j] += onto.amps[b].conj() * a;
    }
    let ket = Ket::new(out)?;
    let p = ket.norm().powi(2) / state.norm().powi(2);
    if p < 1e-24 {
        return Ok(Projection {
            state: None,
            probability: 0.0,
        });
    }
    Ok(Projection {
        state: Some(ket.normalize()?),
        probability: p,
    })
}
