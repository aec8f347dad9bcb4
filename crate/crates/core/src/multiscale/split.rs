use serde::{Deserialize, Serialize};

use super::{embed_phi0_at, phi, MacroField};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::fft::C64;
use crate::lattice::{evolve_spectral, NormalMode};
use crate::wigner::engine::{correlate, HalfGrid, KWeights, Support};
use crate::wigner::{
    combine_terms, drop_factor, term_weights, wigner_pair_with, AdmissibleTestFunction,
    PairingOptions,
};

/// The pairing `⟨a, W^ε[ψ_{t/ε}]⟩` split by the cutoff
/// `χ = φ(k₊/ρ) φ(k₋/ρ)` and by `ψ = A + B`, where `A` is the lattice
/// embedding of the evolved reference field and `B` the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeScaleSplit {
    /// `(1 − χ)` part.
    pub i_large: C64,
    /// `χ` part of `W[B, B]`.
    pub i_intermediate: C64,
    /// `χ` part of `W[A, A]`.
    pub i_small: C64,
    /// `χ` part of the cross terms `W[A, B] + W[B, A]`.
    pub remainder: C64,
    /// Independently computed full pairing.
    pub full: C64,
    pub rho: f64,
    pub t: f64,
    pub truncation_error_bound: f64,
}

impl ThreeScaleSplit {
    pub fn sum(&self) -> C64 {
        self.i_large + self.i_intermediate + self.i_small + self.remainder
    }

    /// `|sum − full| / |full|`.
    pub fn identity_residual(&self) -> f64 {
        (self.sum() - self.full).norm() / self.full.norm().max(f64::MIN_POSITIVE)
    }
}

pub fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 0.25) {
        return Err(Error::InvalidParameter(format!(
            "rho = {rho} outside (0, 1/4]"
        )));
    }
    Ok(())
}

/// Evolves `mode` to lattice time `t/ε` and the reference field by the
/// continuum flow to time `t`, then evaluates the four parts on a shared
/// sparse support.
#[allow(clippy::too_many_arguments)]
pub fn split_three_scale(
    mode: &NormalMode,
    disp: &DispersionModel,
    a: &AdmissibleTestFunction,
    rho: f64,
    phi0_ref: &MacroField,
    t: f64,
    p_max: usize,
    opts: PairingOptions,
) -> Result<ThreeScaleSplit> {
    check_rho(rho)?;
    let n = mode.n;
    if p_max > n / 2 {
        return Err(Error::PMaxTooLarge { p_max, half: n / 2 });
    }
    let eps = mode.eps;
    let psi_t = evolve_spectral(mode, disp, t / eps)?;
    let a_mode = embed_phi0_at(&phi0_ref.evolve(&disp.compute_a0(), t), n)?;
    let b_hat: Vec<C64> = psi_t
        .psi_hat_plus
        .iter()
        .zip(&a_mode.psi_hat_plus)
        .map(|(x, y)| x - y)
        .collect();
    let b_mode = NormalMode::from_hat(n, b_hat)?;

    let full = wigner_pair_with(&psi_t, a, p_max, opts)?;

    let hp = HalfGrid::from_field(&psi_t.psi_plus(), n);
    let ha = HalfGrid::from_field(&a_mode.psi_plus(), n);
    let hb = HalfGrid::from_field(&b_mode.psi_plus(), n);
    let cut = |h: &HalfGrid| {
        let mut c = h.clone();
        c.map_k(|k| C64::new(phi([k[0] / rho, k[1] / rho, k[2] / rho]), 0.0));
        c
    };
    let (cp, ca, cb) = (cut(&hp), cut(&ha), cut(&hb));
    drop((ha, hb));
    let terms = a.terms();
    // the cut fields live in |k| ≤ 2ρ and share their own, smaller support;
    // all cut correlations use it, so the parts still add up exactly
    let support = Support::build(&[&hp], opts.drop_tol);
    let weights = KWeights::build(&support, 1, p_max, terms.len(), term_weights(terms, eps));
    let uncut = combine_terms(
        terms,
        &correlate(&hp, &hp, &support, &weights, 1, p_max),
        p_max,
    );
    drop(weights);
    let cut_support = Support::build(&[&cp, &ca, &cb], opts.drop_tol);
    let cut_weights = KWeights::build(
        &cut_support,
        1,
        p_max,
        terms.len(),
        term_weights(terms, eps),
    );
    let pair = |x: &HalfGrid, y: &HalfGrid| {
        combine_terms(
            terms,
            &correlate(x, y, &cut_support, &cut_weights, 1, p_max),
            p_max,
        )
    };
    let i_large = uncut - pair(&cp, &cp);
    let i_small = pair(&ca, &ca);
    let i_intermediate = pair(&cb, &cb);
    let remainder = pair(&ca, &cb) + pair(&cb, &ca);
    let drop = drop_factor(terms)
        * (support.drop_bound(0, 0)
            + cut_support.drop_bound(0, 0)
            + cut_support.drop_bound(1, 1)
            + cut_support.drop_bound(2, 2)
            + 2.0 * cut_support.drop_bound(1, 2));
    Ok(ThreeScaleSplit {
        i_large,
        i_intermediate,
        i_small,
        remainder,
        full: full.value,
        rho,
        t,
        truncation_error_bound: full.truncation_error_bound + drop,
    })
}
