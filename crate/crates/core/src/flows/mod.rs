//! Flows of even and odd vector fields on M and ΠTM and their action on forms.

pub mod even;
pub mod odd;
pub mod pullback;
pub mod super_flow;

pub use even::{
    even_flow, even_flow_super, reparam_flow_even, trajectory_equivalence_check, trotter_flow, trotter_table, TrajectoryReport,
    TrotterRow, TrotterTable,
};
pub use odd::{compose_odd_flows, flow_f_iota, odd_flow, FIotaFlow, FIotaMode, OddFlowAction, ThetaForm};
pub use pullback::{flow_with_jacobian, pullback_along_even_flow, pullback_coefficients_at};
pub use super_flow::{super_flow, verify_odd_reparam_lemma, OddReparamReport, ScalingFamily, SuperFlow, SuperFlowRegime};
