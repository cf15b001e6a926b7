//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{calibration, fringe, jsi, rates, similarity::similarity};
use crate::circuit::{preset, CircuitSpec, PRESETS};
use crate::config::{DetectionConfig, LoadedConfig, RunConfig};
use crate::error::{spec_err, Error, Result};
use crate::pipeline::{ideal_pipeline, source_pipeline};
use crate::postselect::{PostselectResult, QubitState};
use crate::qubits::{bitstring, psi2, psi4, reference_state, Ket, QubitBasis};
use crate::sources::{PairSelector, SourceModel};
use crate::tomography;

#[derive(Debug, Parser)]
#[command(name = "dickesim", version, about = "Linear-optical multiphoton Dicke-state simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Pump phase in radians, overriding the config.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Post-selected state at one phase.
    State,
    /// Outcome distributions over the phase grid.
    Sweep,
    /// Simulated tomography with Monte Carlo error bars.
    Tomo,
    #[command(subcommand)]
    Analyze(Analyze),
    #[command(subcommand)]
    Presets(Presets),
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    Fringe,
    Jsi,
    Rates,
    Klyshko,
    Fitloss,
}

#[derive(Debug, Subcommand)]
pub enum Presets {
    List,
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => 2,
                _ => 1,
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::Presets(Presets::List) = cli.command {
        return list_presets();
    }
    let loaded = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => LoadedConfig::default(),
    };
    let mut cfg = loaded.config.clone();
    if let Some(phi) = cli.common.phi {
        if !phi.is_finite() {
            return Err(Error::Config { path: "--phi".into(), message: "must be finite".into() });
        }
        cfg.phi = phi;
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.common.out {
        cfg.output.dir = out.clone();
    }
    let base = loaded
        .path
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut em = Emitter::new(&cfg, &loaded.raw, command_name(&cli.command), cli)?;
    match &cli.command {
        Command::State => cmd_state(&cfg, &mut em),
        Command::Sweep => cmd_sweep(&cfg, &mut em),
        Command::Tomo => cmd_tomo(&cfg, &mut em),
        Command::Analyze(a) => match a {
            Analyze::Fringe => cmd_fringe(&cfg, &mut em),
            Analyze::Jsi => cmd_jsi(&cfg, &mut em),
            Analyze::Rates => cmd_rates(&cfg, &mut em),
            Analyze::Klyshko => cmd_klyshko(&cfg, &mut em),
            Analyze::Fitloss => cmd_fitloss(&cfg, &base, &mut em),
        },
        Command::Presets(_) => unreachable!("handled above"),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::State => "state",
        Command::Sweep => "sweep",
        Command::Tomo => "tomo",
        Command::Analyze(Analyze::Fringe) => "analyze fringe",
        Command::Analyze(Analyze::Jsi) => "analyze jsi",
        Command::Analyze(Analyze::Rates) => "analyze rates",
        Command::Analyze(Analyze::Klyshko) => "analyze klyshko",
        Command::Analyze(Analyze::Fitloss) => "analyze fitloss",
        Command::Presets(_) => "presets list",
    }
}

fn list_presets() -> Result<()> {
    let mut out = std::io::stdout().lock();
    for name in PRESETS {
        let spec = preset(name)?;
        writeln!(out, "{name}\t{} ports\t{} modes\t{} mmi", spec.ports.len(), spec.modes, spec.mmi_count())?;
    }
    Ok(())
}

/// Writes artifacts and their provenance sidecars.
struct Emitter {
    dir: PathBuf,
    json: bool,
    csv: bool,
    provenance: Value,
}

impl Emitter {
    fn new(cfg: &RunConfig, raw: &[u8], command: &str, cli: &Cli) -> Result<Self> {
        std::fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::Config {
            path: cfg.output.dir.clone(),
            message: format!("output directory is not writable: {e}"),
        })?;
        let hash = Sha256::digest(raw);
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Emitter {
            dir: cfg.output.dir.clone(),
            json: cfg.output.json,
            csv: cfg.output.csv,
            provenance: json!({
                "command": command,
                "config_sha256": hex,
                "overrides": { "phi": cli.common.phi, "seed": cli.common.seed },
                "seed": cfg.seed,
                "version": env!("CARGO_PKG_VERSION"),
            }),
        })
    }

    fn sidecar(&self, path: &Path) -> Result<()> {
        let mut name = path.file_name().expect("artifact has a name").to_os_string();
        name.push(".provenance.json");
        write_json(&path.with_file_name(name), &self.provenance)
    }

    fn json(&self, name: &str, v: &Value) -> Result<()> {
        if !self.json {
            return Ok(());
        }
        let path = self.dir.join(name);
        write_json(&path, v)?;
        self.sidecar(&path)?;
        println!("{}", path.display());
        Ok(())
    }

    fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        if !self.csv {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.sidecar(&path)?;
        println!("{}", path.display());
        Ok(())
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    writeln!(f)?;
    Ok(())
}

fn strings<const N: usize>(h: [&str; N]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

fn circuit(cfg: &RunConfig) -> Result<CircuitSpec> {
    cfg.circuit.resolve()
}

/// Post-selected state at `phi` for the configured source and circuit.
pub fn pipeline_state(cfg: &RunConfig, spec: &CircuitSpec, phi: f64) -> Result<PostselectResult> {
    let photons = spec.ports.len();
    if photons == 0 || photons % 2 == 1 {
        return Err(spec_err("circuit needs an even, non-zero number of ports"));
    }
    let pairs = photons / 2;
    match &cfg.source {
        None => ideal_pipeline(spec, phi, pairs),
        Some(m) => {
            let m = SourceModel { phi, ..m.clone() };
            source_pipeline(&m, spec, PairSelector::Exactly(pairs))?.postselect()
        }
    }
}

/// Reference name and state: the configured one, or the analytic ideal.
fn reference(cfg: &RunConfig, spec: &CircuitSpec, phi: f64) -> Result<(String, Ket)> {
    if let Some(name) = &cfg.reference {
        return Ok((name.clone(), reference_state(name)?));
    }
    match spec.ports.len() {
        2 => Ok((format!("psi2:{phi}"), psi2(phi))),
        4 => Ok((format!("psi4:{phi}"), psi4(phi))),
        _ => {
            let ideal = ideal_pipeline(spec, phi, spec.ports.len() / 2)?;
            let ket = ideal.ket().cloned().ok_or_else(|| Error::Data("ideal state is not pure".into()))?;
            Ok(("ideal".into(), ket))
        }
    }
}

fn probabilities(res: &PostselectResult, bases: &[QubitBasis]) -> Result<Vec<f64>> {
    match &res.state {
        QubitState::Pure(k) => k.probabilities_in(bases),
        QubitState::Mixed(r) => r.probabilities_in(bases),
        QubitState::Null => Err(Error::Data("no term survived post-selection".into())),
    }
}

fn cmd_state(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let spec = circuit(cfg)?;
    let res = pipeline_state(cfg, &spec, cfg.phi)?;
    let (name, reference) = reference(cfg, &spec, cfg.phi)?;
    let fidelity = if reference.n_qubits() == res.labels.len() {
        json!(res.fidelity_to(&reference)?)
    } else {
        Value::Null
    };
    let mut doc = res.to_json();
    doc["phi"] = json!(cfg.phi);
    doc["reference"] = json!(name);
    doc["fidelity"] = fidelity;
    doc["environments"] = json!(res.environments);
    em.json("state.json", &doc)
}

const SWEEP_BASES: [&str; 3] = ["Z", "Y", "R"];

fn cmd_sweep(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let spec = circuit(cfg)?;
    let grid = cfg.sweep.grid().map_err(spec_err)?;
    let n = spec.ports.len();
    let rows: Vec<Result<Vec<Vec<String>>>> = grid
        .par_iter()
        .map(|&phi| {
            let res = pipeline_state(cfg, &spec, phi)?;
            let (_, ideal) = reference(cfg, &spec, phi)?;
            SWEEP_BASES
                .iter()
                .map(|&b| {
                    let basis = match b {
                        "Z" => QubitBasis::Z,
                        "Y" => QubitBasis::Y,
                        _ => QubitBasis::Rotated(phi),
                    };
                    let bases = vec![basis; n];
                    let p = probabilities(&res, &bases)?;
                    let q = ideal.probabilities_in(&bases)?;
                    let mut row = vec![phi.to_string(), b.to_string(), similarity(&p, &q)?.to_string()];
                    row.extend(p.iter().map(|v| v.to_string()));
                    Ok(row)
                })
                .collect()
        })
        .collect();
    let mut flat = Vec::new();
    for r in rows {
        flat.extend(r?);
    }
    let mut header = strings(["phi", "basis", "similarity"]);
    header.extend((0..1usize << n).map(|i| bitstring(i, n)));
    em.csv("sweep.csv", &header, &flat)?;

    let spread = |basis: &str| -> f64 {
        let sel: Vec<&Vec<String>> = flat.iter().filter(|r| r[1] == basis).collect();
        (3..header.len())
            .map(|c| {
                let col: Vec<f64> = sel.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect();
                let hi = col.iter().copied().fold(f64::MIN, f64::max);
                let lo = col.iter().copied().fold(f64::MAX, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    };
    let min_sim = |basis: &str| -> f64 {
        flat.iter()
            .filter(|r| r[1] == basis)
            .map(|r| r[2].parse().unwrap_or(f64::NAN))
            .fold(f64::MAX, f64::min)
    };
    let summary: serde_json::Map<String, Value> = SWEEP_BASES
        .iter()
        .map(|&b| (b.to_string(), json!({ "max_spread": spread(b), "min_similarity": min_sim(b) })))
        .collect();
    em.json("sweep.json", &json!({ "bases": summary, "points": grid.len() }))
}

fn cmd_tomo(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let spec = circuit(cfg)?;
    let res = pipeline_state(cfg, &spec, cfg.phi)?;
    let rho = res.density().ok_or_else(|| Error::Data("no term survived post-selection".into()))?;
    let (name, reference) = reference(cfg, &spec, cfg.phi)?;
    let n = rho.n_qubits();
    let t = &cfg.tomography;
    let counts = tomography::simulate_counts(&rho, &tomography::settings(n), t.shots_per_setting, cfg.seed)?;
    let est = tomography::reconstruct(&counts)?;
    let mc = tomography::monte_carlo(&counts, &reference, t.trials, cfg.seed.wrapping_add(1))?;

    let rows: Vec<Vec<String>> = counts
        .iter()
        .flat_map(|(s, c)| {
            c.iter()
                .enumerate()
                .map(|(i, v)| vec![s.to_string(), bitstring(i, n), v.to_string()])
                .collect::<Vec<_>>()
        })
        .collect();
    em.csv("counts.csv", &strings(["setting", "outcome", "count"]), &rows)?;
    em.json(
        "tomo.json",
        &json!({
            "fidelity": est.expectation(&reference)?,
            "monte_carlo": mc,
            "purity": est.purity(),
            "reference": name,
            "rho": est.to_json(),
            "shots_per_setting": t.shots_per_setting,
            "settings": counts.iter().count(),
        }),
    )
}

fn cmd_fringe(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let spec = circuit(cfg)?;
    let fc = &cfg.analysis.fringe;
    if fc.points < 3 {
        return Err(spec_err("fringe needs at least three points"));
    }
    let grid: Vec<f64> = (0..fc.points).map(|k| std::f64::consts::PI * k as f64 / fc.points as f64).collect();
    let pairs = fc.pairs.clone().unwrap_or_else(|| fringe::all_pairs(&spec));
    let model = cfg.source.clone().unwrap_or_else(|| SourceModel::ideal(0.0));
    let detection = match fc.detection {
        DetectionConfig::Ideal => fringe::Detection::Ideal,
        DetectionConfig::Threshold { eta } => fringe::Detection::Threshold { eta },
    };
    let curves = fringe::rhom_fringe(&model, &spec, &pairs, &grid, detection)?;
    let mut rows = Vec::new();
    let mut vis = Vec::new();
    for c in &curves {
        for ((phi, v), b) in c.phi.iter().zip(&c.values).zip(&c.baseline) {
            rows.push(vec![c.pair.0.clone(), c.pair.1.clone(), phi.to_string(), v.to_string(), b.to_string()]);
        }
        let v = if fc.raw { fringe::visibility_raw(&c.values) } else { fringe::visibility(c)? };
        let family = if fringe::same_rail(&spec, &c.pair)? { "phi_minus" } else { "psi_plus" };
        vis.push(json!({ "a": c.pair.0, "b": c.pair.1, "family": family, "visibility": v }));
    }
    em.csv("fringe.csv", &strings(["a", "b", "phi", "coincidence", "baseline"]), &rows)?;
    em.json("fringe.json", &json!({ "method": if fc.raw { "raw" } else { "fit" }, "visibilities": vis }))
}

fn cmd_jsi(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let jc = cfg.analysis.jsi.clone().unwrap_or_else(|| jsi::JsiConfig::new(0.5));
    let grid = jsi::jsi(&jc)?;
    let int = grid.intensity();
    let peak = int.max();
    let mut rows = Vec::with_capacity(jc.n * jc.n);
    for (i, x) in grid.detuning.iter().enumerate() {
        for (j, y) in grid.detuning.iter().enumerate() {
            rows.push(vec![x.to_string(), y.to_string(), (int[(i, j)] / peak).to_string()]);
        }
    }
    em.csv("jsi.csv", &strings(["signal_hz", "idler_hz", "intensity"]), &rows)?;
    em.json("jsi.json", &grid.metadata(&jc))
}

fn cmd_rates(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let rc = &cfg.analysis.rates;
    let params = rates::RateParams {
        p: rc.p,
        rep_rate: rc.rep_rate,
        eta_signal: rates::db_to_transmission(rc.loss_signal_db),
        eta_idler: rates::db_to_transmission(rc.loss_idler_db),
        dark_signal: 0.0,
        dark_idler: 0.0,
    };
    let pair = params.rates()?;
    let (es, ei) = (params.eta_signal, params.eta_idler);
    let fourfold = rates::fourfold_rate(rc.p, rc.rep_rate, [es, ei, es, ei]);
    let anchored = rates::fourfold_from_pairs(&rates::DUAL_PUMP, &rates::DUAL_PUMP, rc.rep_rate);
    if rc.delay_points < 2 {
        return Err(spec_err("delay_points must be at least 2"));
    }
    let rows: Vec<Vec<String>> = (0..rc.delay_points)
        .map(|k| {
            let ps = -rc.max_delay_ps + 2.0 * rc.max_delay_ps * k as f64 / (rc.delay_points - 1) as f64;
            vec![ps.to_string(), rates::pulse_overlap(ps * 1e-12, rc.linewidth_hz).to_string()]
        })
        .collect();
    em.csv("overlap.csv", &strings(["delay_ps", "overlap"]), &rows)?;
    em.json(
        "rates.json",
        &json!({
            "eta_idler": ei,
            "eta_signal": es,
            "fourfold_measured_per_hour": rates::per_hour(anchored),
            "fourfold_per_hour": rates::per_hour(fourfold),
            "fourfold_per_second": fourfold,
            "overlap_fwhm_ps": rates::overlap_fwhm(rc.linewidth_hz) * 1e12,
            "pair_rates": pair,
            "params": rc,
        }),
    )
}

fn cmd_klyshko(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let k = &cfg.analysis.klyshko;
    let c1 = rates::klyshko(&k.dual, &k.single_a, &k.single_b, 1)?;
    let c2 = rates::klyshko(&k.dual, &k.single_a, &k.single_b, 2)?;
    em.json("klyshko.json", &json!({ "channel1": c1, "channel2": c2, "rows": k }))
}

fn cmd_fitloss(cfg: &RunConfig, base: &Path, em: &mut Emitter) -> Result<()> {
    let fc = &cfg.analysis.fitloss;
    let mut samples = fc.samples.clone();
    if let Some(p) = &fc.csv {
        let path = if p.is_absolute() { p.clone() } else { base.join(p) };
        let mut r = csv::Reader::from_path(&path)?;
        for rec in r.deserialize() {
            samples.push(rec?);
        }
    }
    let fit = if samples.is_empty() {
        Value::Null
    } else {
        json!(calibration::fit_interferometer(&samples)?)
    };
    let slope = calibration::per_cross_loss(&fc.losses, &fc.crossings_path0, &fc.crossings_path1)?;
    em.json("fitloss.json", &json!({ "fit": fit, "per_cross_loss_db": slope, "samples": samples.len() }))
}
