pub mod array;
pub mod bench;
pub mod classical;
pub mod error;
pub mod labeler;
pub mod metrics;
pub mod reductions;
pub mod seesaw;
pub mod workloads;

pub use array::{Category, CostLedger, Key, LabeledArray};
pub use error::{Error, Result};
