//! Dispersion relation, acoustic data, caustics and regularity constants.

mod caustic;
mod lemma;
mod model;

pub use caustic::{
    ballistic_density, ballistic_plane_density, caustic_alignment, caustic_slice, hessian_det,
    CausticPoint, DensityHistogram,
};
pub use lemma::{
    omega0_second_difference, omega_vs_omega0_difference, verify_lemma_bounds, LemmaConstant,
    LemmaReport,
};
pub use model::{AcousticCertificate, AcousticData, CertificateFailure, DispersionModel};
