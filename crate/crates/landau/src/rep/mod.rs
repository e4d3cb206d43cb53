//! Finite representation of the Landau problem: Hermite-level × momentum-
//! channel states, ladder and multiplication operators, the intertwining
//! chain with its constructive eigenfunction, and the fiber flat-band
//! verification.

pub mod chain_ops;
pub mod fiber;
pub mod overlap;
pub mod state;

pub use chain_ops::{b_chain_apply, build_eigenfunction, Eigenfunction, EigenfunctionError};
pub use fiber::{fiber_matrix, flat_band_scan, hermiticity_defect, BandPoint, BandScan};
pub use overlap::{displaced_overlap, mul_matrix, MulOperator};
pub use state::{ChannelState, Ladder};
