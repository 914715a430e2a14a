//! Parallel transport along (super)paths and the functors it defines.

mod checks;
mod curve;
mod engine;
mod functor;
mod recover;

pub use checks::{constant_path_residual, endpoint_map, gluing_residual, q_naturality, reparam_residual, s_naturality_residual, EndpointReport, QNaturalityReport};
pub use curve::{odd_flow_curve, FlowCurve, MappedParameters, Projected, Reparametrization, ReparametrizedCurve, SuperCurve, SuperPath, ZeroSection, THETA};
pub use engine::{pairing_split, path_transport, transport_along, BaseField, ConnectionField, GMatrix, ParallelSection, PiTField};
pub use functor::{flow_transport, generic_point, section_at, Base, ConnectionTransport, FlowFamily, FlowGenerator, LiftedTransport, ProjectedTransport, TransportFunctor};
pub use recover::{connection_at, recover_connection, roundtrip_residual, RecoveredConnection, RecoveredSample, RoundtripReport, RECOVERY_STEPS};
