use thiserror::Error;

use crate::ring::Ring;
use crate::tag::ProtocolTag;
use crate::transport::Role;

/// Errors raised by the three-party runtime and its protocols.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(Ring, Ring),

    #[error("value {value} is not a residue of {ring}")]
    OutOfRange { value: u128, ring: Ring },

    #[error("shares must come from S0 and S1, got {0} and {1}")]
    OwnerMismatch(Role, Role),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation is not available to {0}")]
    WrongRole(Role),

    #[error("link to {0} is closed")]
    LinkClosed(Role),

    #[error("no link to {0}")]
    NoLink(Role),

    #[error("protocol desync: expected a {expected} message, received tag {received}")]
    Desync {
        expected: ProtocolTag,
        received: u8,
    },

    #[error("no invocation of {0} was recorded")]
    UnknownTag(ProtocolTag),

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error("party {0} panicked")]
    PartyPanicked(Role),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
