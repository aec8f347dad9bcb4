//! Initial-data families, experiment configuration, figure reproduction and
//! convergence sweeps.

mod config;
mod family;
mod figures;
mod suite;

pub use config::{default_symbol, ExperimentConfig};
pub use family::{tail_audit, Envelope, InitialFamily, MixtureComponent, TailAudit};
pub use figures::{reproduce_fig1, reproduce_fig2, write_pgm, Fig1Report, Fig2Report};
pub use suite::{run_convergence_suite, SuiteReport, SuiteRow};
