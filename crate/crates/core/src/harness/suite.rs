use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::Result;
use crate::fft::C64;
use crate::lattice::evolve_spectral;
use crate::multiscale::energy_equality_report;
use crate::transport::{evolve_phi, verify_limit};
use crate::wigner::PairingOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub family: String,
    pub n: usize,
    pub rho: f64,
    pub m_cut: f64,
    pub t: f64,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// `abs_error` not larger than at the previous `N` (true for the first).
    pub monotone: bool,
    pub total: f64,
    pub mu_mass: f64,
    pub muh_mass: f64,
    pub phi_mass: f64,
    pub energy_relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SuiteRow>,
    pub monotone_fraction: f64,
    /// Largest relative error at the finest `N`.
    pub finest_rel_error: f64,
    pub passed: bool,
}

/// Monotone-trend threshold over rows and the relative error allowed at the
/// finest grid.
const MONOTONE_SHARE: f64 = 0.8;
const FINEST_TOLERANCE: f64 = 0.1;

/// Runs `verify_limit` and the energy audit over the configured grid and
/// writes `suite_report.json` into the output directory.
pub fn run_convergence_suite(config: &ExperimentConfig, write: bool) -> Result<SuiteReport> {
    config.validate()?;
    let disp = config.dispersion()?;
    let acoustic = disp.compute_a0();
    let n_max = *config.n_list.iter().max().expect("validated non-empty");
    let opts = PairingOptions::default();
    let mut rows = Vec::new();
    for family in &config.families {
        let limit = family.known_limit(n_max)?;
        for &t in &config.times {
            let table = verify_limit(
                |n| family.build_mode(n, &disp),
                &limit,
                &disp,
                &config.symbol,
                t,
                &config.n_list,
                None,
                config.p_max,
                opts,
            )?;
            for &rho in &config.rho {
                for &m_cut in &config.m_cut {
                    let mut prev: Option<f64> = None;
                    for lr in &table.rows {
                        let n = lr.n;
                        let mode =
                            evolve_spectral(&family.build_mode(n, &disp)?, &disp, t * n as f64)?;
                        let phi = evolve_phi(&family.phi0(n)?, &acoustic, t);
                        let e = energy_equality_report(&mode, rho, m_cut, &phi, &config.cells)?;
                        rows.push(SuiteRow {
                            family: family.name().into(),
                            n,
                            rho,
                            m_cut,
                            t,
                            lhs: lr.lhs,
                            rhs: lr.rhs,
                            abs_error: lr.abs_error,
                            rel_error: lr.rel_error,
                            monotone: prev.is_none_or(|p| lr.abs_error <= p),
                            total: e.total,
                            mu_mass: e.mu_mass,
                            muh_mass: e.muh_mass,
                            phi_mass: e.phi_mass,
                            energy_relative_residual: e.relative_residual,
                        });
                        prev = Some(lr.abs_error);
                    }
                }
            }
        }
    }
    let monotone_fraction =
        rows.iter().filter(|r| r.monotone).count() as f64 / rows.len().max(1) as f64;
    let finest_rel_error = rows
        .iter()
        .filter(|r| r.n == n_max)
        .map(|r| r.rel_error)
        .fold(0.0, f64::max);
    let report = SuiteReport {
        config: config.clone(),
        rows,
        monotone_fraction,
        finest_rel_error,
        passed: monotone_fraction >= MONOTONE_SHARE && finest_rel_error <= FINEST_TOLERANCE,
    };
    if write {
        std::fs::create_dir_all(&config.output_dir)?;
        std::fs::write(
            config.output_dir.join("suite_report.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
    }
    Ok(report)
}
