//! Three-server secure computation of ROC and PR curve areas over
//! additively shared prediction scores.
//!
//! S0 and S1 hold shares; S2 deals correlated randomness and evaluates masked
//! intermediate values. Ties, sorting and the curve areas are all computed
//! without any server seeing a score or label in the clear.

pub mod auc;
pub mod error;
pub mod exec;
pub mod oracle;
pub mod party;
pub mod primitives;
pub mod protocols;
pub mod random;
pub mod ring;
pub mod sort;
pub mod tag;
pub mod transport;

pub use error::{Error, Result};
pub use exec::Execution;
pub use party::{run_local, run_on, Party};
pub use primitives::{Share, SharedVec};
pub use ring::{Ring, RingElement};
pub use tag::ProtocolTag;
pub use transport::{Role, Transcript};
