use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{spec_err, Result};

const C_LIGHT: f64 = 299_792_458.0;

fn nm_to_hz(nm: f64) -> f64 {
    C_LIGHT / (nm * 1e-9)
}

fn default_n() -> usize {
    256
}
fn default_pump_q() -> [f64; 2] {
    [36_600.0, 30_800.0]
}
fn default_pump_nm() -> [f64; 2] {
    [1557.0, 1544.9]
}
fn default_center_nm() -> f64 {
    1550.9
}
fn default_flat_top_ghz() -> f64 {
    40.0
}
fn default_span() -> f64 {
    8.0
}
fn default_quad() -> usize {
    8001
}

/// Dual-pump resonant source spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsiConfig {
    /// Signal/idler loaded Q over the mean pump loaded Q.
    pub q_ratio: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_pump_q")]
    pub pump_q: [f64; 2],
    #[serde(default = "default_pump_nm")]
    pub pump_nm: [f64; 2],
    #[serde(default = "default_center_nm")]
    pub center_nm: f64,
    /// Full width of the flat-top pump filter.
    #[serde(default = "default_flat_top_ghz")]
    pub flat_top_ghz: f64,
    /// Grid half-width in units of the widest linewidth.
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_quad")]
    pub quad_points: usize,
}

impl JsiConfig {
    pub fn new(q_ratio: f64) -> Self {
        JsiConfig {
            q_ratio,
            n: default_n(),
            pump_q: default_pump_q(),
            pump_nm: default_pump_nm(),
            center_nm: default_center_nm(),
            flat_top_ghz: default_flat_top_ghz(),
            span: default_span(),
            quad_points: default_quad(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_ratio > 0.0) || !self.q_ratio.is_finite() {
            return Err(spec_err("q_ratio must be positive"));
        }
        if self.n < 64 {
            return Err(spec_err(format!("grid needs at least 64 points, got {}", self.n)));
        }
        if self.pump_q.iter().chain(&self.pump_nm).any(|v| !(*v > 0.0)) || !(self.center_nm > 0.0) {
            return Err(spec_err("Q factors and wavelengths must be positive"));
        }
        if !(self.flat_top_ghz > 0.0) || !(self.span > 0.0) {
            return Err(spec_err("flat_top_ghz and span must be positive"));
        }
        if self.quad_points < 3 || self.quad_points.is_multiple_of(2) {
            return Err(spec_err("quad_points must be odd and at least 3"));
        }
        Ok(())
    }

    /// Pump linewidths (FWHM, Hz).
    pub fn pump_linewidths(&self) -> [f64; 2] {
        [0, 1].map(|k| nm_to_hz(self.pump_nm[k]) / self.pump_q[k])
    }

    /// Q of a resonance at the centre with the mean pump linewidth.
    pub fn mean_pump_q(&self) -> f64 {
        let [a, b] = self.pump_linewidths();
        nm_to_hz(self.center_nm) / (0.5 * (a + b))
    }

    pub fn signal_q(&self) -> f64 {
        self.q_ratio * self.mean_pump_q()
    }

    pub fn signal_linewidth(&self) -> f64 {
        nm_to_hz(self.center_nm) / self.signal_q()
    }
}

fn lorentzian(linewidth: f64, detuning: f64) -> Complex64 {
    Complex64::new(0.5 * linewidth, -detuning).inv()
}

/// Joint spectral amplitude sampled on a square detuning grid.
#[derive(Debug, Clone)]
pub struct JsiGrid {
    /// Signal and idler detunings from the centre, Hz.
    pub detuning: Vec<f64>,
    pub amplitude: DMatrix<Complex64>,
}

pub fn jsi(cfg: &JsiConfig) -> Result<JsiGrid> {
    cfg.validate()?;
    let [gp1, gp2] = cfg.pump_linewidths();
    let gs = cfg.signal_linewidth();
    let half = cfg.span * gs.max(gp1).max(gp2);
    let n = cfg.n;
    let h = 2.0 * half / (n - 1) as f64;
    let detuning: Vec<f64> = (0..n).map(|k| -half + k as f64 * h).collect();

    let b = 0.5 * cfg.flat_top_ghz * 1e9;
    let pump: Vec<Complex64> = (0..2 * n - 1)
        .map(|k| {
            let s = -2.0 * half + k as f64 * h;
            let (lo, hi) = ((s - b).max(-b), (s + b).min(b));
            if hi <= lo {
                return Complex64::new(0.0, 0.0);
            }
            let m = cfg.quad_points;
            let du = (hi - lo) / (m - 1) as f64;
            let sum: Complex64 = (0..m)
                .map(|j| {
                    let u = lo + j as f64 * du;
                    let w = if j == 0 || j == m - 1 {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    lorentzian(gp1, u) * lorentzian(gp2, s - u) * w
                })
                .sum();
            sum * (du / 3.0)
        })
        .collect();

    let ls: Vec<Complex64> = detuning.iter().map(|&d| lorentzian(gs, d)).collect();
    let mut amplitude = DMatrix::from_fn(n, n, |i, j| pump[i + j] * ls[i] * ls[j]);
    let norm = amplitude.norm();
    if !(norm > 0.0) {
        return Err(spec_err("joint spectral amplitude vanishes on the grid"));
    }
    amplitude /= Complex64::from(norm);
    Ok(JsiGrid { detuning, amplitude })
}

/// `sum s^4 / (sum s^2)^2` over the singular values of `amplitude`.
pub fn schmidt_purity(amplitude: &DMatrix<Complex64>) -> f64 {
    let s = amplitude.clone().singular_values();
    let s2: f64 = s.iter().map(|v| v * v).sum();
    s.iter().map(|v| v.powi(4)).sum::<f64>() / (s2 * s2)
}

impl JsiGrid {
    pub fn intensity(&self) -> DMatrix<f64> {
        self.amplitude.map(|a| a.norm_sqr())
    }

    /// Singular values normalized to unit 2-norm, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.amplitude.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        s.iter().map(|v| v / norm).collect()
    }

    pub fn purity(&self) -> f64 {
        schmidt_purity(&self.amplitude)
    }

    /// Rows `signal_hz,idler_hz,intensity`, intensity scaled to unit peak.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let int = self.intensity();
        let peak = int.max();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["signal_hz", "idler_hz", "intensity"])?;
        for (i, x) in self.detuning.iter().enumerate() {
            for (j, y) in self.detuning.iter().enumerate() {
                w.write_record(&[x.to_string(), y.to_string(), (int[(i, j)] / peak).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata(&self, cfg: &JsiConfig) -> Value {
        let schmidt = self.schmidt_coefficients();
        json!({
            "config": cfg,
            "grid_points": self.detuning.len(),
            "half_span_hz": self.detuning.last().copied().unwrap_or(0.0),
            "mean_pump_q": cfg.mean_pump_q(),
            "purity": crate::sources::purity(&schmidt),
            "schmidt_leading": schmidt.iter().take(8).collect::<Vec<_>>(),
            "signal_q": cfg.signal_q(),
        })
    }

    pub fn write_metadata(&self, cfg: &JsiConfig, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &self.metadata(cfg))?;
        writeln!(f)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(r: f64) -> JsiConfig {
        JsiConfig { n: 96, quad_points: 1001, ..JsiConfig::new(r) }
    }

    #[test]
    fn mean_pump_q() {
        let q = JsiConfig::new(1.0).mean_pump_q();
        assert!((q - 33_450.0).abs() < 100.0, "{q}");
    }

    #[test]
    fn purity_grows_with_ratio() {
        let p: Vec<f64> = [0.25, 0.5, 1.0, 2.0].iter().map(|&r| jsi(&small(r)).unwrap().purity()).collect();
        assert!(p.windows(2).all(|w| w[0] < w[1]), "{p:?}");
        assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn symmetric_amplitude() {
        let g = jsi(&small(0.5)).unwrap();
        let a = &g.amplitude;
        assert!((a - a.transpose()).map(|z| z.norm()).max() < 1e-12 * a.map(|z| z.norm()).max());
    }

    #[test]
    fn unit_norm_and_separable_limit() {
        let g = jsi(&small(1.0)).unwrap();
        assert!((g.amplitude.norm() - 1.0).abs() < 1e-12);
        let u = DMatrix::from_fn(70, 1, |i, _| Complex64::new(1.0 + i as f64, 0.5));
        let v = DMatrix::from_fn(1, 70, |_, j| Complex64::new((j as f64).sin(), 1.0));
        assert!((schmidt_purity(&(u * v)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_refinement() {
        let coarse = jsi(&JsiConfig { n: 64, ..JsiConfig::new(0.5) }).unwrap().purity();
        let fine = jsi(&JsiConfig::new(0.5)).unwrap().purity();
        assert!((coarse / fine - 1.0).abs() < 0.01, "{coarse} {fine}");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(jsi(&JsiConfig { n: 10, ..JsiConfig::new(1.0) }).is_err());
        assert!(jsi(&JsiConfig::new(-1.0)).is_err());
    }
}
