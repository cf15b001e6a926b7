//! Numbered acceptance criteria; one PASS/FAIL line each.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use dickesim::analysis::{accidentals, calibration, jsi, rates};
use dickesim::pipeline::{bell_pair, four_photon};
use dickesim::postselect::{dicke_projection_check, max_efficiency_exact};
use dickesim::qubits::{
    max_singlet_fraction, project_qubit, psi4, teleport_fidelity, DensityMatrix, Ket, QubitBasis,
};
use dickesim::sources::{normalize_schmidt, SourceModel};
use dickesim::tomography;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect()
}

/// Dicke-family coefficients written out term by term.
fn family_coefficients(phi: f64) -> [f64; 5] {
    let (s, c) = phi.sin_cos();
    let k = 2.0 * 6f64.sqrt();
    [3.0 * s * s / k, -6.0 * s * c / k, 6f64.sqrt() * (3.0 * c * c - 1.0) / k, 6.0 * s * c / k, 3.0 * s * s / k]
}

fn family_ket(phi: f64) -> Ket {
    let w = family_coefficients(phi);
    let amps: Vec<f64> = (0..16u32)
        .map(|i| {
            let m = i.count_ones() as usize;
            w[m] / binom(4, m).sqrt()
        })
        .collect();
    Ket::from_real(&amps).unwrap()
}

fn dicke_ket(n: usize, m: usize) -> Ket {
    let a = 1.0 / binom(n, m).sqrt();
    let amps: Vec<f64> = (0..1u32 << n).map(|i| if i.count_ones() as usize == m { a } else { 0.0 }).collect();
    Ket::from_real(&amps).unwrap()
}

fn projector(amps: [f64; 4]) -> nalgebra::DMatrix<C> {
    let v = nalgebra::DVector::from_iterator(4, amps.iter().map(|&a| C::new(a, 0.0)));
    &v * v.adjoint()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let mut worst_f: f64 = 1.0;
    let mut worst_p: f64 = 0.0;
    for phi in phases(21) {
        let r = four_photon(phi).map_err(|e| e.to_string())?;
        let k = r.ket().ok_or("mixed output")?;
        let f = k.overlap(&family_ket(phi)).map_err(|e| e.to_string())?;
        worst_f = worst_f.min(f);
        worst_p = worst_p.max((r.probability - 3.0 / 32.0).abs());
    }
    let t = start.elapsed();
    check(worst_f >= 1.0 - 1e-10, format!("min fidelity {worst_f}"))?;
    check(worst_p <= 1e-12, format!("probability off by {worst_p:e}"))?;
    check(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!("min fidelity {worst_f:.15}, |p - 3/32| <= {worst_p:.1e}"))
}

fn c2() -> Outcome {
    let s = FRAC_1_SQRT_2;
    for phi in [0.0, FRAC_PI_4, FRAC_PI_2] {
        let (sn, cs) = phi.sin_cos();
        // cos|Psi+> - sin|Phi->
        let expected = Ket::from_real(&[-sn * s, cs * s, cs * s, sn * s]).unwrap();
        let r = bell_pair(phi).map_err(|e| e.to_string())?;
        let f = r.ket().ok_or("mixed output")?.overlap(&expected).map_err(|e| e.to_string())?;
        check(f >= 1.0 - 1e-10, format!("phi {phi}: fidelity {f}"))?;
        check((r.probability - 0.5).abs() <= 1e-10, format!("phi {phi}: probability {}", r.probability))?;
    }
    Ok("phi in {0, pi/4, pi/2}: fidelity 1, probability 1/2".into())
}

fn c3() -> Outcome {
    for n in [2usize, 4] {
        let weight = (1..=n).map(|k| k as f64).product::<f64>().sqrt() / (n as f64).powf(n as f64 / 2.0);
        for m in 0..=n {
            let d = dicke_projection_check(m, n).map_err(|e| e.to_string())?;
            let f = d.state.overlap(&dicke_ket(n, m)).map_err(|e| e.to_string())?;
            check(f >= 1.0 - 1e-10, format!("N={n} m={m}: fidelity {f}"))?;
            check((d.amplitude.norm() - weight).abs() <= 1e-10, format!("N={n} m={m}: weight {}", d.amplitude.norm()))?;
        }
    }
    check((6f64.sqrt() / 8.0 - (24.0f64 / 256.0).sqrt()).abs() < 1e-15, "N=4 weight")?;
    for n in 2..=12u32 {
        let num: u128 = (1..=n as u128).product();
        let den: u128 = (n as u128).pow(n);
        let (a, b) = max_efficiency_exact(n as usize).map_err(|e| e.to_string())?;
        check(a * den == b * num, format!("N={n}: {a}/{b}"))?;
    }
    Ok("N in {2,4}: all m project to D_N^m with weight sqrt(N!/N^N); N!/N^N exact for N <= 12".into())
}

fn c4() -> Outcome {
    let grid = phases(21);
    let n = 4;
    let dist = |phi: f64, b: QubitBasis| -> Result<Vec<f64>, String> {
        let r = four_photon(phi).map_err(|e| e.to_string())?;
        r.ket().ok_or("mixed")?.probabilities_in(&vec![b; n]).map_err(|e| e.to_string())
    };
    let y0 = dist(0.0, QubitBasis::Y)?;
    let d42: Vec<f64> = (0..16u32).map(|i| if i.count_ones() == 2 { 1.0 / 6.0 } else { 0.0 }).collect();
    let (mut dy, mut dr, mut dz) = (0.0f64, 0.0f64, 0.0f64);
    for &phi in &grid {
        let y = dist(phi, QubitBasis::Y)?;
        let r = dist(phi, QubitBasis::Rotated(phi))?;
        let z = dist(phi, QubitBasis::Z)?;
        let w = family_coefficients(phi);
        for i in 0..16 {
            dy = dy.max((y[i] - y0[i]).abs());
            dr = dr.max((r[i] - d42[i]).abs());
            let m = (i as u32).count_ones() as usize;
            dz = dz.max((z[i] - w[m] * w[m] / binom(4, m)).abs());
        }
    }
    // all-left amplitude -3/(2 sqrt 6) in magnitude
    check((y0[0] - 9.0 / 24.0).abs() < 1e-10, format!("P(LLLL) = {}", y0[0]))?;
    check(dy < 1e-10 && dr < 1e-10 && dz < 1e-10, format!("Y {dy:e}, R {dr:e}, Z {dz:e}"))?;
    Ok(format!("max deviation Y {dy:.1e}, Rotated {dr:.1e}, Z vs coefficients {dz:.1e}"))
}

fn c5() -> Outcome {
    let s = FRAC_1_SQRT_2;
    let (pp, pm, sp) = ([s, 0.0, 0.0, s], [s, 0.0, 0.0, -s], [0.0, s, s, 0.0]);
    let mut fmsf = Vec::new();
    for (phi, w) in [(0.0, [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]), (FRAC_PI_2, [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])] {
        let expected = projector(pp) * C::from(w[0]) + projector(pm) * C::from(w[1]) + projector(sp) * C::from(w[2]);
        let rho = psi4(phi).to_density();
        for a in 0..4 {
            for b in a + 1..4 {
                let r = rho.partial_trace(&[a, b]).map_err(|e| e.to_string())?;
                let d = (r.matrix() - &expected).map(|z| z.norm()).max();
                check(d < 1e-10, format!("phi {phi} pair ({a},{b}) off by {d:e}"))?;
                fmsf.push(max_singlet_fraction(&r).map_err(|e| e.to_string())?);
            }
        }
    }
    check(fmsf.iter().all(|f| (f - 2.0 / 3.0).abs() < 1e-8), format!("F_msf {fmsf:?}"))?;
    let tf = teleport_fidelity(fmsf[0], 2);
    check((tf - 7.0 / 9.0).abs() < 1e-8 && (tf - 0.78).abs() < 0.005, format!("teleport {tf}"))?;
    let classical = teleport_fidelity(0.5, 2);
    check((classical - 2.0 / 3.0).abs() < 1e-12 && (classical - 0.67).abs() < 0.005, "classical limit")?;
    Ok(format!("12 traced pairs match Bell mixtures, F_msf 2/3, teleport {tf:.6} (7/9), classical {classical:.4}"))
}

fn c6() -> Outcome {
    let d42 = dicke_ket(4, 2);
    let one = Ket::from_real(&[0.0, 1.0]).unwrap();
    let minus = Ket::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
    let a = 1.0 / 3f64.sqrt();
    let w3 = Ket::from_real(&[0.0, a, a, 0.0, a, 0.0, 0.0, 0.0]).unwrap();
    let b = 1.0 / 6f64.sqrt();
    let g3 = Ket::from_real(&[0.0, b, b, -b, b, -b, -b, 0.0]).unwrap();
    for q in 0..4 {
        let pw = project_qubit(&d42, q, &one).map_err(|e| e.to_string())?;
        let fw = pw.state.ok_or("W3 outcome impossible")?.overlap(&w3).map_err(|e| e.to_string())?;
        let pg = project_qubit(&d42, q, &minus).map_err(|e| e.to_string())?;
        let fg = pg.state.ok_or("G3 outcome impossible")?.overlap(&g3).map_err(|e| e.to_string())?;
        check(fw >= 1.0 - 1e-10 && fg >= 1.0 - 1e-10, format!("qubit {q}: W3 {fw}, G3 {fg}"))?;
    }
    Ok("every qubit: |1> gives W3, |-> gives G3 with fidelity 1".into())
}

fn c7() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let k = rng.random_range(1..=3usize);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let g = rng.random_range(0.01..0.04);
        let model = SourceModel {
            g,
            g1: rng.random_range(0.0..g),
            g2: rng.random_range(0.0..g),
            schmidt: normalize_schmidt(&raw).map_err(|e| e.to_string())?,
            ..Default::default()
        };
        let lambda4: f64 = model.schmidt.iter().map(|l| l.powi(4)).sum();
        let sim = accidentals::simulate_accidentals(&model, 1e-3).map_err(|e| e.to_string())?;
        let rel = (sim.phi_min_ratio / (1.0 + lambda4) - 1.0).abs();
        worst = worst.max(rel);
    }
    check(worst < 0.02, format!("worst relative deviation {worst}"))?;
    let r = accidentals::accidental_ratio(0.83);
    check((r - 1.83).abs() < 1e-12 && (r - 1.786).abs() <= 0.049, format!("ratio {r}"))?;
    Ok(format!("10 random models within {:.3}% of 1 + sum lambda^4; purity 0.83 -> {r:.2}", 100.0 * worst))
}

fn c8() -> Outcome {
    let mut t = Duration::ZERO;
    let p: Vec<f64> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&r| {
            let start = Instant::now();
            let v = jsi::jsi(&jsi::JsiConfig::new(r)).map(|g| g.purity()).map_err(|e| e.to_string());
            t = t.max(start.elapsed());
            v
        })
        .collect::<Result<_, _>>()?;
    check((p[1] - 0.83).abs() <= 0.03, format!("ratio 0.5: {}", p[1]))?;
    check((p[2] - 0.93).abs() <= 0.02, format!("ratio 1: {}", p[2]))?;
    check(p.windows(2).all(|w| w[0] < w[1]), format!("not monotone {p:?}"))?;
    check(t < Duration::from_secs(10), format!("slowest grid took {t:?}"))?;
    Ok(format!("purity {:.4}, {:.4}, {:.4}, {:.4} at ratios 0.25, 0.5, 1, 2; slowest 256x256 grid {t:.2?}", p[0], p[1], p[2], p[3]))
}

fn physical(rho: &DensityMatrix) -> bool {
    (rho.trace().re - 1.0).abs() < 1e-10 && rho.eigenvalues().iter().all(|&e| e > -1e-10)
}

fn c9() -> Outcome {
    let start = Instant::now();
    let target = dicke_ket(4, 2);
    let rho = target.to_density();
    let settings = tomography::settings(4);
    check(settings.len() == 81, "settings")?;
    let est = tomography::reconstruct(&tomography::simulate_counts(&rho, &settings, 1e6, 11).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let f = est.expectation(&target).map_err(|e| e.to_string())?;
    check(f >= 0.999, format!("fidelity at 1e6: {f}"))?;
    check(physical(&est), "reconstruction at 1e6 not physical")?;
    let mut stds = Vec::new();
    for n in [1e3, 1e4, 1e5] {
        let counts = tomography::simulate_counts(&rho, &settings, n, 12).map_err(|e| e.to_string())?;
        let one = tomography::reconstruct(&counts).map_err(|e| e.to_string())?;
        check(physical(&one), format!("reconstruction at {n} not physical"))?;
        let mc = tomography::monte_carlo(&counts, &target, 100, 13).map_err(|e| e.to_string())?;
        check(mc.fidelity_std.is_finite() && mc.fidelity_std > 0.0, format!("std {}", mc.fidelity_std))?;
        stds.push(mc.fidelity_std);
    }
    check(stds.windows(2).all(|w| w[1] < w[0]), format!("std not decreasing {stds:?}"))?;
    let t = start.elapsed();
    check(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("fidelity {f:.5} at 1e6; MC std {:.2e}, {:.2e}, {:.2e}; {t:?}", stds[0], stds[1], stds[2]))
}

fn c10() -> Outcome {
    let k = rates::klyshko(&rates::DUAL_PUMP, &rates::SINGLE_PUMP_1545, &rates::SINGLE_PUMP_1557, 1)
        .map_err(|e| e.to_string())?;
    let oracle = (1135.0 - 18.0) / (112_119.0 - 50_908.0 - 16_864.0);
    check((k.efficiency - oracle).abs() < 1e-15, "klyshko arithmetic")?;
    check((0.024..=0.028).contains(&k.efficiency), format!("klyshko {}", k.efficiency))?;
    let (es, ei) = (10f64.powf(-1.5), 10f64.powf(-1.6));
    let hour = 3600.0 * rates::fourfold_rate(0.003, 5e8, [es, ei, es, ei]);
    check((200.0..=440.0).contains(&hour), format!("fourfold {hour}/h"))?;
    let fwhm = rates::overlap_fwhm(5.5e9) * 1e12;
    let half = rates::pulse_overlap(fwhm * 0.5e-12, 5.5e9);
    check((fwhm - 40.0).abs() <= 2.0 && (half - 0.5).abs() < 1e-12, format!("fwhm {fwhm} ps"))?;
    Ok(format!("klyshko {:.4}, fourfold {hour:.0}/h, overlap FWHM {fwhm:.2} ps", k.efficiency))
}

fn synthetic(rng: &mut ChaCha20Rng, scale: f64, loss: f64, noise: f64) -> Vec<calibration::Sample> {
    let normal = Normal::new(0.0, noise * scale).unwrap();
    let mut out = Vec::new();
    for i in 0..16 {
        for j in 0..16 {
            let (phi1, phi2) = (2.0 * PI * i as f64 / 16.0, 2.0 * PI * j as f64 / 16.0);
            let value = calibration::fringe_model(scale, loss, phi1, phi2) + normal.sample(rng);
            out.push(calibration::Sample { phi1, phi2, value });
        }
    }
    out
}

fn c11() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let loss = rng.random_range(-0.8..0.8);
        let scale = rng.random_range(100.0..5000.0);
        let fit = calibration::fit_interferometer(&synthetic(&mut rng, scale, loss, 0.01)).map_err(|e| e.to_string())?;
        worst = worst.max((fit.loss_db - loss).abs());
    }
    check(worst <= 0.02, format!("worst loss error {worst}"))?;
    let c0 = calibration::CROSSINGS_PATH0;
    let c1 = calibration::CROSSINGS_PATH1;
    let per_cross = 0.25;
    let fitted: Vec<f64> = c0
        .iter()
        .zip(&c1)
        .map(|(&a, &b)| {
            let truth = per_cross * (f64::from(a) - f64::from(b));
            calibration::fit_interferometer(&synthetic(&mut rng, 1000.0, truth, 0.01)).map(|f| f.loss_db)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let s_synth = calibration::per_cross_loss(&fitted, &c0, &c1).map_err(|e| e.to_string())?;
    let s_table = calibration::per_cross_loss(&calibration::INTERFEROMETER_LOSS, &c0, &c1).map_err(|e| e.to_string())?;
    check((0.2..=0.3).contains(&s_synth) && (0.2..=0.3).contains(&s_table), format!("{s_synth} {s_table}"))?;
    Ok(format!("max loss error {worst:.4}; per cross {s_synth:.4} (synthetic), {s_table:.4} (table)"))
}

fn run_cli(args: &[&str], config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dickesim"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let p = e.map_err(|e| e.to_string())?.path();
            let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn c12() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "source": {"g": 0.1, "schmidt": [0.9, 0.4242640687119285, 0.1], "g1": 0.05, "g2": 0.03},
  "circuit": "bell2",
  "phi": 0.3,
  "seed": 42,
  "sweep": {"points": 5},
  "tomography": {"shots_per_setting": 500, "trials": 20},
  "analysis": {"fringe": {"points": 9}, "jsi": {"q_ratio": 0.5, "n": 64, "quad_points": 401}}
}"#,
    )
    .map_err(|e| e.to_string())?;
    let commands: [&[&str]; 8] = [
        &["state"],
        &["sweep"],
        &["tomo"],
        &["analyze", "fringe"],
        &["analyze", "jsi"],
        &["analyze", "rates"],
        &["analyze", "klyshko"],
        &["analyze", "fitloss"],
    ];
    let mut total = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let a = tmp.path().join(format!("a{i}"));
        let b = tmp.path().join(format!("b{i}"));
        run_cli(cmd, &config, &a)?;
        run_cli(cmd, &config, &b)?;
        let (sa, sb) = (snapshot(&a)?, snapshot(&b)?);
        check(!sa.is_empty(), format!("{cmd:?} wrote nothing"))?;
        check(sa == sb, format!("{cmd:?} outputs differ"))?;
        total += sa.len();
    }
    Ok(format!("{} commands, {total} files byte-identical across runs", commands.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("four-photon pipeline equals the Dicke-family state, p = 3/32", c1),
        ("two-photon pipeline equals the Bell superposition, p = 1/2", c2),
        ("Dicke projection and N!/N^N efficiency", c3),
        ("Y / rotated-basis invariance, Z-basis coefficients", c4),
        ("two-qubit marginals, singlet fraction, teleportation", c5),
        ("three-photon projections W3 and G3", c6),
        ("accidental ratio 1 + purity by brute force", c7),
        ("JSI purity anchors and monotonicity", c8),
        ("tomography consistency and Monte Carlo scaling", c9),
        ("Klyshko, fourfold rate, pulse overlap", c10),
        ("interferometer calibration fit", c11),
        ("CLI determinism", c12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
