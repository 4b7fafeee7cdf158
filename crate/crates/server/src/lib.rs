//! Newline-delimited JSON protocol over TCP.
//!
//! Each connection owns one [`Session`] and therefore one environment.
//! Requests and responses are single-line JSON objects; see
//! `docs/protocol.md` for the schema.

pub mod client;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;

pub use client::{Client, ClientError};
pub use protocol::{ErrorBody, ErrorCode, Request, SpecResponse, StepResponse, PROTOCOL_VERSION};
pub use replay::{digest_in_process, digest_over_wire, replay_check, Digest, ReplayError, Transcript};
pub use server::{serve, Server};
pub use session::Session;
