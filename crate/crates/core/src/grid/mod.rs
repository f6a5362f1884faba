//! Grid case model, admittance assembly, and graph operators.

pub mod case;
pub mod laplacian;
pub mod topology;
pub mod ybus;

pub use case::{bundled, resolve_case, Branch, Bus, BusKind, GridCase};
pub use laplacian::GraphOperators;
pub use ybus::{branch_admittances, build_ybus, BranchAdmittance};
