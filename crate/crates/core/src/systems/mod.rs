//! Data generators for the test systems and POD reduction of field data.

mod ks;
mod ode;
mod pod;

pub use ks::{integrate_ks_etdrk4, InitialField, KsSpec};
pub use ode::{integrate_rk4, rk4_integrate, OdeSpec, OdeSystem};
pub use pod::{pod_reconstruct, pod_reduce, PodBasis};
