//! Multiscale test functions and lattice / continuum Wigner pairings.

pub mod engine;
mod pair;
mod symbol;

pub(crate) use pair::{combine_terms, drop_factor, term_weights};
pub use pair::{
    l2_wigner_pair, l2_wigner_pair_with, wigner_pair, wigner_pair_exact, wigner_pair_with,
    PairingMethod, PairingOptions, PairingResult,
};
pub use symbol::{AdmissibleTestFunction, DirectionFn, KAtom, QAtom, Term, TermList, XAtom};
