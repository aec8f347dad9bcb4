//! Point-source experiments: axis profiles of `u` and plane snapshots of the
//! energy density with the caustic overlay.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InitialFamily;
use crate::dispersion::{caustic_alignment, caustic_slice, DispersionModel};
use crate::error::{Error, Result};
use crate::fft::{flat, wrap};
use crate::lattice::{evolve_spectral, inversion_imag_residual, to_normal_mode, NormalMode};

/// Extra sites kept free on each side of the ballistic front.
const HORIZON_MARGIN: usize = 4;

/// The fastest signal travels one site per unit time, so a box of side `N`
/// holds the solution up to `t` without wrap-around when `N ≥ 2⌈t⌉ + 2·margin`.
fn check_horizon(n: usize, t: f64) -> Result<()> {
    let needed = 2 * t.ceil() as usize + 2 * HORIZON_MARGIN;
    if n < needed {
        return Err(Error::Horizon { t, needed, n });
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Report {
    pub n: usize,
    pub eps: f64,
    /// Lattice times.
    pub times: Vec<f64>,
    /// `Σ |ψ₊|²` per time.
    pub energy: Vec<f64>,
    /// `max_t |E(t) − E(0)| / E(0)`.
    pub energy_drift: f64,
    /// Fraction of `Σ|ψ₊|²` within `|γ| ≤ 1.1 t`, per time (1 at `t = 0`).
    pub fraction_within: Vec<f64>,
    /// Same for `Σ (u² + v²)`.
    pub uv_fraction_within: Vec<f64>,
    /// Largest imaginary part produced by mode inversion.
    pub max_imag: f64,
    /// `u(γ₁, 0, 0)` for `γ₁ = −N/2 … N/2 − 1`, per time.
    pub profiles: Vec<Vec<f64>>,
}

fn radius(g: [i64; 3]) -> f64 {
    ((g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) as f64).sqrt()
}

fn fraction_within(n: usize, density: impl Fn(usize) -> f64, r: f64) -> f64 {
    let (mut inside, mut total) = (0.0, 0.0);
    for i in 0..n * n * n {
        let d = density(i);
        total += d;
        if radius(crate::fft::coords(i, n)) <= r {
            inside += d;
        }
    }
    inside / total
}

/// Point source `u(0) = 1` evolved to lattice times `{0, 0.1/ε, 0.9/ε}`.
/// Writes `fig2_profiles.csv` and `fig2_report.json` into `out_dir`.
pub fn reproduce_fig2(
    disp: &DispersionModel,
    eps: f64,
    n: usize,
    out_dir: Option<&Path>,
) -> Result<Fig2Report> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps}")));
    }
    let times = vec![0.0, 0.1 / eps, 0.9 / eps];
    check_horizon(n, times[2])?;
    let state0 = InitialFamily::PointSource.build_initial(n, disp)?;
    let mode0 = to_normal_mode(&state0, disp)?;
    let h = (n / 2) as i64;
    let mut report = Fig2Report {
        n,
        eps,
        times: times.clone(),
        energy: Vec::new(),
        energy_drift: 0.0,
        fraction_within: Vec::new(),
        uv_fraction_within: Vec::new(),
        max_imag: 0.0,
        profiles: Vec::new(),
    };
    for &t in &times {
        let mode = evolve_spectral(&mode0, disp, t)?;
        // zero time is the identity; the initial data are emitted unchanged
        let state = if t == 0.0 {
            state0.clone()
        } else {
            state0.evolve_exact(disp, t)?
        };
        let e = mode
            .psi_plus()
            .iter()
            .map(|z| z.norm_sqr())
            .collect::<Vec<_>>();
        report.energy.push(mode.mass());
        let r = 1.1 * t;
        report.fraction_within.push(if t == 0.0 {
            1.0
        } else {
            fraction_within(n, |i| e[i], r)
        });
        report.uv_fraction_within.push(if t == 0.0 {
            1.0
        } else {
            fraction_within(n, |i| state.u[i].powi(2) + state.v[i].powi(2), r)
        });
        report.max_imag = report.max_imag.max(inversion_imag_residual(&mode, disp)?);
        report
            .profiles
            .push((-h..h).map(|g| state.u[state.index([g, 0, 0])]).collect());
    }
    let e0 = report.energy[0];
    report.energy_drift = report
        .energy
        .iter()
        .map(|e| (e - e0).abs() / e0)
        .fold(0.0, f64::max);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_file(&dir.join("fig2_profiles.csv"), |w| {
            write!(w, "gamma1")?;
            for t in &times {
                write!(w, ",u_t{t}")?;
            }
            writeln!(w)?;
            for (j, g) in (-h..h).enumerate() {
                write!(w, "{g}")?;
                for p in &report.profiles {
                    write!(w, ",{:e}", p[j])?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        std::fs::write(
            dir.join("fig2_report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Report {
    pub n: usize,
    pub eps: f64,
    /// Macroscopic times; the lattice times are `t/ε`.
    pub times: Vec<f64>,
    /// `Σ |ψ₊|²` over the whole box, per time.
    pub energy: Vec<f64>,
    pub energy_drift: f64,
    /// `Σ |ψ₊|²` over the plane `γ₃ = 0`, per time; the heatmap total.
    pub plane_energy: Vec<f64>,
    /// Rendering cut-off relative to the maximum.
    pub cutoff: f64,
    /// Largest `ε|γ|` in the plane with density above the cut-off, per time.
    pub front_radius: Vec<f64>,
    /// Fraction of plane energy within macroscopic radius `1.05 t`, per time.
    pub fraction_within: Vec<f64>,
    /// `max |e(g) − e(σg)| / max e` over the eight symmetries of the square.
    pub symmetry_error: f64,
    /// Fraction of the top 1% plane cells within 2 cells of a caustic point
    /// at the last time.
    pub caustic_alignment: f64,
    pub caustic_points: usize,
}

/// Density on the plane `γ₃ = 0`, rows `γ₁`, columns `γ₂`, both running
/// `−N/2 … N/2 − 1`.
fn plane_density(mode: &NormalMode) -> Vec<f64> {
    let n = mode.n;
    let psi = mode.psi_plus();
    let h = (n / 2) as i64;
    (-h..h)
        .flat_map(|a| (-h..h).map(move |b| (a, b)))
        .map(|(a, b)| psi[flat([wrap(a, n), wrap(b, n), 0], n)].norm_sqr())
        .collect()
}

fn symmetry_error(e: &[f64], n: usize) -> f64 {
    let h = (n / 2) as i64;
    let at = |a: i64, b: i64| e[wrap(a + h, n) * n + wrap(b + h, n)];
    let max = e.iter().cloned().fold(0.0, f64::max);
    let mut err = 0.0f64;
    for a in -h..h {
        for b in -h..h {
            let v = at(a, b);
            for (x, y) in [
                (b, a),
                (-a, b),
                (a, -b),
                (-a, -b),
                (-b, a),
                (b, -a),
                (-b, -a),
            ] {
                err = err.max((v - at(x, y)).abs());
            }
        }
    }
    err / max
}

/// Gray levels of `log₁₀(e / max)` on `[log₁₀ cutoff, 0]`; black is the
/// maximum and everything below the cut-off is white.
fn log_pixels(e: &[f64], cutoff: f64) -> Vec<u8> {
    let max = e.iter().cloned().fold(0.0, f64::max);
    let lc = cutoff.log10();
    e.iter()
        .map(|&v| {
            if max == 0.0 || v < cutoff * max {
                255
            } else {
                (255.0 * (v / max).log10() / lc).round().clamp(0.0, 254.0) as u8
            }
        })
        .collect()
}

/// Plain (ASCII) PGM.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::GridMismatch {
            expected: width * height,
            got: pixels.len(),
        });
    }
    write_file(path, |w| {
        writeln!(w, "P2\n{width} {height}\n255")?;
        for row in pixels.chunks(width) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    })
}

/// Point source in a box of side `n`, snapshots at macroscopic times
/// `{0.1, 0.3, 0.95}` (lattice times `t/ε`). The box must hold the front at
/// the last time, so `n` is roughly `2/ε`. Writes one PGM per time,
/// `fig1_caustics.csv`, and `fig1_report.json` into `out_dir`.
pub fn reproduce_fig1(
    disp: &DispersionModel,
    eps: f64,
    n: usize,
    cutoff: f64,
    out_dir: Option<&Path>,
) -> Result<Fig1Report> {
    if !(eps > 0.0 && cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps}, cutoff = {cutoff}"
        )));
    }
    let times = vec![0.1, 0.3, 0.95];
    check_horizon(n, times[2] / eps)?;
    let mode0 = InitialFamily::PointSource.build_mode(n, disp)?;
    let h = (n / 2) as i64;
    let mut report = Fig1Report {
        n,
        eps,
        times: times.clone(),
        energy: Vec::new(),
        energy_drift: 0.0,
        plane_energy: Vec::new(),
        cutoff,
        front_radius: Vec::new(),
        fraction_within: Vec::new(),
        symmetry_error: 0.0,
        caustic_alignment: 0.0,
        caustic_points: 0,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut last = Vec::new();
    for &t in &times {
        let mode = evolve_spectral(&mode0, disp, t / eps)?;
        report.energy.push(mode.mass());
        let e = plane_density(&mode);
        drop(mode);
        let total: f64 = e.iter().sum();
        let max = e.iter().cloned().fold(0.0, f64::max);
        let (mut front, mut inside) = (0.0f64, 0.0);
        for (i, &v) in e.iter().enumerate() {
            let (a, b) = ((i / n) as i64 - h, (i % n) as i64 - h);
            let r = eps * ((a * a + b * b) as f64).sqrt();
            if v >= cutoff * max {
                front = front.max(r);
            }
            if r <= 1.05 * t {
                inside += v;
            }
        }
        report.plane_energy.push(total);
        report.front_radius.push(front);
        report.fraction_within.push(inside / total);
        report.symmetry_error = report.symmetry_error.max(symmetry_error(&e, n));
        if let Some(dir) = out_dir {
            write_pgm(
                &dir.join(format!("fig1_t{t}.pgm")),
                n,
                n,
                &log_pixels(&e, cutoff),
            )?;
        }
        last = e;
    }
    let e0 = report.energy[0];
    report.energy_drift = report
        .energy
        .iter()
        .map(|e| (e - e0).abs() / e0)
        .fold(0.0, f64::max);
    let t_last = times[times.len() - 1];
    let caustics = caustic_slice(disp, t_last, 2048);
    let cell_of = |x: [f64; 2]| {
        let a = (x[0] / eps).round() as i64 + h;
        let b = (x[1] / eps).round() as i64 + h;
        (a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n)
            .then_some((a as usize, b as usize))
    };
    report.caustic_alignment = caustic_alignment(&last, n, cell_of, &caustics, 0.01, 2);
    report.caustic_points = caustics.len();
    if let Some(dir) = out_dir {
        write_file(&dir.join("fig1_caustics.csv"), |w| {
            writeln!(w, "x1,x2,k1,k2,k3")?;
            for p in &caustics {
                writeln!(w, "{},{},{},{},{}", p.x[0], p.x[1], p.k[0], p.k[1], p.k[2])?;
            }
            Ok(())
        })?;
        std::fs::write(
            dir.join("fig1_report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
    }
    Ok(report)
}
