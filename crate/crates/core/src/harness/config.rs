use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::InitialFamily;
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::fft::C64;
use crate::lattice::CouplingStencil;
use crate::multiscale::CellSpec;
use crate::wigner::{AdmissibleTestFunction, DirectionFn, KAtom, QAtom, Term, XAtom};

/// Test function used by the convergence suite: a centered Gaussian in `x`
/// times `1 + ½cos(2πk₁)`, plus a direction-sensitive term supported near
/// `k = 0` that probes the intermediate scale.
pub fn default_symbol() -> AdmissibleTestFunction {
    let x = XAtom::gaussian([0.0; 3], 0.4);
    let one = C64::new(1.0, 0.0);
    let quarter = C64::new(0.25, 0.0);
    AdmissibleTestFunction::new(vec![
        Term {
            x: x.clone(),
            k: KAtom::Trig {
                coeffs: vec![
                    ([0, 0, 0], one),
                    ([1, 0, 0], quarter),
                    ([-1, 0, 0], quarter),
                ],
            },
            q: QAtom::one(),
        },
        Term {
            x,
            k: KAtom::Bump {
                amplitude: one,
                center: [0.0; 3],
                radius: 0.125,
            },
            q: QAtom::Directional {
                r0: 1.0,
                y: DirectionFn::Poly2 {
                    c0: 1.0,
                    c1: [0.5, 0.0, 0.0],
                    c2: [[0.0; 3]; 3],
                },
            },
        },
    ])
    .expect("default symbol is admissible")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `"nn"` or a path to a stencil file.
    pub stencil: String,
    pub n_list: Vec<usize>,
    pub families: Vec<InitialFamily>,
    /// Macroscopic times.
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub m_cut: Vec<f64>,
    pub p_max: usize,
    pub cells: CellSpec,
    pub symbol: AdmissibleTestFunction,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            stencil: "nn".into(),
            n_list: vec![32, 64, 128],
            families: vec![
                InitialFamily::macroscopic(),
                InitialFamily::packet([0.25, 0.0, 0.0]),
                InitialFamily::mesoscopic(),
            ],
            times: vec![0.5],
            rho: vec![0.125],
            m_cut: vec![4.0],
            p_max: 6,
            cells: CellSpec::default(),
            symbol: default_symbol(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        for &n in &self.n_list {
            if n < 8 || n % 2 != 0 {
                return bad(format!("N = {n} must be even and at least 8"));
            }
            if 2 * self.p_max > n {
                return Err(Error::PMaxTooLarge {
                    p_max: self.p_max,
                    half: n / 2,
                });
            }
        }
        if self.p_max == 0 {
            return bad("p_max must be positive".into());
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite()) {
            return bad(format!("time {t}"));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0 && **r <= 0.25)) {
            return bad(format!("rho = {r} outside (0, 1/4]"));
        }
        if let Some(m) = self.m_cut.iter().find(|m| !(**m >= 4.0)) {
            return bad(format!("M = {m} must be at least 4"));
        }
        if self.cells.x_cells == 0 || self.cells.k_cells == 0 || self.cells.dir_cells == 0 {
            return bad("cell counts must be positive".into());
        }
        self.families.iter().try_for_each(InitialFamily::validate)
    }

    pub fn dispersion(&self) -> Result<DispersionModel> {
        Ok(DispersionModel::new(CouplingStencil::from_name_or_path(
            &self.stencil,
        )?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
