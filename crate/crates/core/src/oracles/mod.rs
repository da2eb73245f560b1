//! Independent validators: a truncated Fock-space simulator and a Monte Carlo
//! photon-counting sampler.

pub mod fock;
pub mod mc;

pub use fock::{
    amplifier_equivalence_distance, select_cutoff, trace_distance, verify_amplifier_equivalence,
    FockState, Generator,
};
pub use mc::{mc_twin_beam, sample_counts, McConfig, McResult};
