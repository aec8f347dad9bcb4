use serde::{Deserialize, Serialize};

use super::{estimate_mu, estimate_muh, intermediate_field, CellSpec, MacroField};
use crate::error::Result;
use crate::lattice::NormalMode;

/// Mass balance `‖ψ‖² = μ-mass + μ^H-mass + ‖φ₀‖² + residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub rho: f64,
    pub m_cut: f64,
    pub total: f64,
    pub mu_mass: f64,
    pub muh_mass: f64,
    pub phi_mass: f64,
    pub residual: f64,
    /// `|residual| / total`.
    pub relative_residual: f64,
    /// μ^H mass and relative residual without the `(1 − φ)(q/2M)` factor.
    pub muh_mass_uncut: f64,
    pub relative_residual_uncut: f64,
    pub mu_min_cell: f64,
    pub muh_min_cell: f64,
}

pub fn energy_equality_report(
    mode: &NormalMode,
    rho: f64,
    m_cut: f64,
    phi0_ref: &MacroField,
    cells: &CellSpec,
) -> Result<EnergyReport> {
    let total = mode.mass();
    let mu = estimate_mu(mode, rho, cells)?;
    let muh = estimate_muh(mode, rho, Some(m_cut), phi0_ref, cells)?;
    let uncut = intermediate_field(mode, rho, None, phi0_ref)?.norm_sqr();
    let mu_mass = mu.total();
    let muh_mass = muh.total();
    let phi_mass = phi0_ref.norm_sqr();
    let residual = total - (mu_mass + muh_mass + phi_mass);
    let residual_uncut = total - (mu_mass + uncut + phi_mass);
    Ok(EnergyReport {
        n: mode.n,
        rho,
        m_cut,
        total,
        mu_mass,
        muh_mass,
        phi_mass,
        residual,
        relative_residual: residual.abs() / total,
        muh_mass_uncut: uncut,
        relative_residual_uncut: residual_uncut.abs() / total,
        mu_min_cell: mu.min_weight(),
        muh_min_cell: muh.min_weight(),
    })
}
