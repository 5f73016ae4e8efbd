//! Drift-free references: Barenblatt solutions and the porous-medium interface law.

pub(crate) mod barenblatt;
mod oracle;

pub use barenblatt::BarenblattProfile;
pub use oracle::{knerr_interface, pme_error, PmeErrorRow};
