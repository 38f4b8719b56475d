//! Symbolic dynamics: shifts of finite type, transfer operators, the
//! pressure function and suspension flows.

pub mod curve;
pub mod shift;
pub mod suspension;
pub mod transfer;

pub use curve::{covariance_sigma, legendre_h, pressure_root, PressureCurve, UGrid};
pub use shift::{birkhoff_sum, jump_sum, Potential, ShiftDef, ShiftModel, States, BUILTIN_MODELS};
pub use suspension::{local_stable_length, suspension_sample, Suspension, SuspensionSample};
pub use transfer::{pressure, rpf_eigendata, transfer_adjoint, transfer_apply, RpfData};
