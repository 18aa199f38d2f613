//! Exact and numeric tools for third-order polynomial ODEs of Chazy type:
//! accessible singular points, local indices, Laurent/Painlevé series, and
//! verification of birational maps, Bäcklund transformations and first integrals.

pub mod exact;
pub mod mpoly;
pub mod upoly;
pub mod linalg;
pub mod solve;
pub mod catalog;
pub mod geometry;
pub mod series;
pub mod transforms;
pub mod flow;
pub mod ledger;

pub use catalog::{Entry, PfaffianDef, SystemDef};
pub use exact::{CScalar, QuadExt};
pub use flow::{IntegratorConfig, PathSpec, Trajectory};
pub use geometry::{LocalIndex, SingularPoint};
pub use ledger::{Claim, LedgerEntry, LedgerReport, Status};
pub use mpoly::{MPoly, RatFun, Vars};
pub use transforms::Check;
