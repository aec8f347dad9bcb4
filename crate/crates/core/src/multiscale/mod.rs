//! Three-scale decomposition of the Wigner pairing.

mod cutoff;
mod energy;
mod field;
mod measure;
mod split;

pub use cutoff::{cutoff, phi, ramp, CutoffFunction};
pub use energy::{energy_equality_report, EnergyReport};
pub use field::{embed_phi0, embed_phi0_at, extract_phi0, window_mass, MacroField};
pub use measure::{
    estimate_mu, estimate_muh, intermediate_field, BumpCells, CellSpec, DirectionCells, FejerCells,
    LabelKind, MeasureHistogram,
};
pub use split::{check_rho, split_three_scale, ThreeScaleSplit};
