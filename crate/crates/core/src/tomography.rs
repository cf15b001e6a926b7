//! Pauli-basis tomography: simulated Poisson counts, linear inversion with
//! a physical projection, and Monte Carlo error bars.
//!
//! Randomness comes from ChaCha20 seeded with the run seed; Monte Carlo
//! trial `t` uses stream `t` of the same seed.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Error, Result};
use crate::qubits::{bitstring, DensityMatrix, Ket, QubitBasis};

const LETTERS: [char; 3] = ['X', 'Y', 'Z'];

/// All `3^n` Pauli settings in canonical order (`X < Y < Z`, qubit 0 first).
pub fn settings(n: usize) -> Vec<String> {
    (0..3usize.pow(n as u32))
        .map(|mut k| {
            let mut s = vec!['X'; n];
            for q in (0..n).rev() {
                s[q] = LETTERS[k % 3];
                k /= 3;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// Parse a setting string such as `"ZXYY"`.
pub fn setting_bases(setting: &str) -> Result<Vec<QubitBasis>> {
    setting
        .chars()
        .map(|c| match c {
            'X' => Ok(QubitBasis::X),
            'Y' => Ok(QubitBasis::Y),
            'Z' => Ok(QubitBasis::Z),
            _ => Err(spec_err(format!("bad setting {setting:?}"))),
        })
        .collect()
}

/// Coincidence counts per setting, indexed by outcome bitstring value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    n: usize,
    counts: BTreeMap<String, Vec<u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    setting: String,
    outcome: String,
    count: u64,
}

impl CountsTable {
    pub fn new(n: usize) -> Self {
        CountsTable {
            n,
            counts: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, setting: &str, counts: Vec<u64>) -> Result<()> {
        setting_bases(setting)?;
        if setting.len() != self.n || counts.len() != 1 << self.n {
            return Err(Error::Data(format!(
                "setting {setting:?} with {} outcomes does not fit {} qubits",
                counts.len(),
                self.n
            )));
        }
        self.counts.insert(setting.to_string(), counts);
        Ok(())
    }

    pub fn get(&self, setting: &str) -> Option<&[u64]> {
        self.counts.get(setting).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[u64])> {
        self.counts.iter().map(|(s, c)| (s.as_str(), c.as_slice()))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().flatten().sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (setting, counts) in &self.counts {
            for (i, &count) in counts.iter().enumerate() {
                wtr.serialize(CountRow {
                    setting: setting.clone(),
                    outcome: bitstring(i, self.n),
                    count,
                })?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut table: Option<CountsTable> = None;
        for row in rdr.deserialize() {
            let row: CountRow = row?;
            let n = row.setting.len();
            let t = table.get_or_insert_with(|| CountsTable::new(n));
            if n != t.n || row.outcome.len() != n {
                return Err(Error::Data(format!(
                    "row {} {} does not match {} qubits",
                    row.setting, row.outcome, t.n
                )));
            }
            setting_bases(&row.setting)?;
            let idx = usize::from_str_radix(&row.outcome, 2)
                .map_err(|_| Error::Data(format!("bad outcome {:?}", row.outcome)))?;
            t.counts
                .entry(row.setting)
                .or_insert_with(|| vec![0; 1 << n])[idx] += row.count;
        }
        table.ok_or_else(|| Error::Data("counts file has no rows".into()))
    }
}

/// Born probabilities for every setting.
pub fn expected_frequencies(rho: &DensityMatrix, settings: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
    settings
        .iter()
        .map(|s| {
            let p = rho.probabilities_in(&setting_bases(s)?)?;
            Ok((s.clone(), p))
        })
        .collect()
}

/// Each outcome count drawn from `Poisson(total_per_setting * Tr(rho Pi))`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[String],
    total_per_setting: f64,
    seed: u64,
) -> Result<CountsTable> {
    if !(total_per_setting > 0.0 && total_per_setting.is_finite()) {
        return Err(spec_err("total per setting must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut table = CountsTable::new(rho.n_qubits());
    for (s, probs) in expected_frequencies(rho, settings)? {
        let counts = probs
            .iter()
            .map(|&p| poisson(&mut rng, total_per_setting * p.max(0.0)))
            .collect();
        table.insert(&s, counts)?;
    }
    Ok(table)
}

fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Linear inversion over Pauli strings, pooling every compatible setting,
/// followed by projection onto the closest physical state.
pub fn reconstruct(counts: &CountsTable) -> Result<DensityMatrix> {
    let n = counts.n;
    let data: Vec<(String, Vec<f64>)> = counts
        .counts
        .iter()
        .map(|(s, c)| (s.clone(), c.iter().map(|&x| x as f64).collect()))
        .collect();
    reconstruct_weighted(n, &data)
}

/// As [`reconstruct`] but from exact outcome frequencies.
pub fn reconstruct_frequencies(n: usize, freqs: &[(String, Vec<f64>)]) -> Result<DensityMatrix> {
    reconstruct_weighted(n, freqs)
}

fn reconstruct_weighted(n: usize, data: &[(String, Vec<f64>)]) -> Result<DensityMatrix> {
    let by_setting: BTreeMap<&str, &[f64]> =
        data.iter().map(|(s, c)| (s.as_str(), c.as_slice())).collect();
    let all = settings(n);
    if let Some(missing) = all.iter().find(|s| !by_setting.contains_key(s.as_str())) {
        return Err(spec_err(format!(
            "settings are incomplete: {missing} missing of {}",
            all.len()
        )));
    }
    let d = 1usize << n;
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    // Pauli string encoded per qubit: 0 = I, 1 = X, 2 = Y, 3 = Z
    for code in 0..4usize.pow(n as u32) {
        let ops: Vec<usize> = (0..n).map(|q| (code >> (2 * (n - 1 - q))) & 3).collect();
        let expectation = if ops.iter().all(|&o| o == 0) {
            1.0
        } else {
            pauli_expectation(&ops, &by_setting, &all)
        };
        if expectation == 0.0 {
            continue;
        }
        add_pauli(&mut rho, &ops, expectation / d as f64);
    }
    project_physical(&rho)
}

fn pauli_expectation(ops: &[usize], data: &BTreeMap<&str, &[f64]>, all: &[String]) -> f64 {
    let n = ops.len();
    let support: usize = ops
        .iter()
        .enumerate()
        .filter(|(_, &o)| o != 0)
        .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)));
    let (mut signed, mut total) = (0.0, 0.0);
    for s in all {
        let compatible = s
            .chars()
            .zip(ops)
            .all(|(c, &o)| o == 0 || LETTERS[o - 1] == c);
        if !compatible {
            continue;
        }
        for (i, &c) in data[s.as_str()].iter().enumerate() {
            let sign = if (i & support).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            signed += sign * c;
            total += c;
        }
    }
    if total > 0.0 {
        signed / total
    } else {
        0.0
    }
}

fn add_pauli(rho: &mut DMatrix<Complex64>, ops: &[usize], weight: f64) {
    let n = ops.len();
    let d = 1usize << n;
    let flip: usize = ops
        .iter()
        .enumerate()
        .filter(|(_, &o)| o == 1 || o == 2)
        .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)));
    for r in 0..d {
        let c = r ^ flip;
        let mut v = Complex64::new(weight, 0.0);
        for (q, &o) in ops.iter().enumerate() {
            let b = (r >> (n - 1 - q)) & 1;
            match o {
                2 => v *= if b == 1 { Complex64::i() } else { -Complex64::i() },
                3 if b == 1 => v = -v,
                _ => {}
            }
        }
        rho[(r, c)] += v;
    }
}

/// Closest unit-trace positive matrix: clip negative eigenvalues and spread
/// their weight uniformly over the remaining ones.
pub fn project_physical(m: &DMatrix<Complex64>) -> Result<DensityMatrix> {
    let h = (m + m.adjoint()).scale(0.5);
    let tr = h.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::Data(format!("cannot project matrix with trace {tr}")));
    }
    let eig = h.unscale(tr).symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut lambda = vec![0.0; d];
    let mut acc = 0.0;
    let mut keep = d;
    while keep > 0 && mu[keep - 1] + acc / (keep as f64) < 0.0 {
        acc += mu[keep - 1];
        keep -= 1;
    }
    for j in 0..keep {
        lambda[j] = mu[j] + acc / keep as f64;
    }
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for (j, &i) in order.iter().enumerate() {
        if lambda[j] == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        rho += (v * v.adjoint()).scale(lambda[j]);
    }
    let rho = (&rho + rho.adjoint()).scale(0.5);
    let t = rho.trace().re;
    DensityMatrix::new_unchecked(rho.unscale(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub purity_mean: f64,
    pub purity_std: f64,
}

/// Resample every count as `Poisson(observed)`, reconstruct each trial and
/// report mean and sample standard deviation against `reference`.
pub fn monte_carlo(
    counts: &CountsTable,
    reference: &Ket,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if trials < 2 {
        return Err(spec_err("Monte Carlo needs at least two trials"));
    }
    if reference.n_qubits() != counts.n {
        return Err(Error::Space("reference and counts differ in qubit count".into()));
    }
    let results: Vec<Result<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut table = CountsTable::new(counts.n);
            for (s, c) in &counts.counts {
                let resampled = c.iter().map(|&x| poisson(&mut rng, x as f64)).collect();
                table.counts.insert(s.clone(), resampled);
            }
            let rho = reconstruct(&table)?;
            Ok((rho.expectation(reference)?, rho.purity()))
        })
        .collect();
    let results: Vec<(f64, f64)> = results.into_iter().collect::<Result<_>>()?;
    let (fm, fs) = mean_std(results.iter().map(|r| r.0));
    let (pm, ps) = mean_std(results.iter().map(|r| r.1));
    Ok(MonteCarloSummary {
        trials,
        fidelity_mean: fm,
        fidelity_std: fs,
        purity_mean: pm,
        purity_std: ps,
    })
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
