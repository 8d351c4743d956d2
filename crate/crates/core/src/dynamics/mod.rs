//! Lindblad dynamics: generators, time integration, steady states and frames.

pub mod frame;
pub mod integrate;
pub mod lindblad;
pub mod steady;

pub use frame::{frame_transform, polaron};
pub use integrate::{evolve, evolve_observed, EvolveOptions, EvolveStats, StepDiagnostics, Trajectory};
pub use lindblad::{
    assemble, dissipator_apply, effective_spec, full_spec, liouvillian, standard_collapse, LindbladSpec, SourceFrame,
};
pub use steady::{mechanical_charge, steady_state, steady_state_with, Sector, SteadyOptions, SteadyReport};
