//! Secure cut-through fragmentation of signed named content.
//!
//! Signed content objects are split into block-aligned fragments, each
//! carrying the SHA-256 internal state at its start offset. Routers can then
//! check the hash chain incrementally and forward fragments as they arrive,
//! holding back only the final fragment until the whole object verifies.

pub mod crypto;
pub mod forwarder;
pub mod fragmenter;
pub mod hashstate;
pub mod time;
pub mod verifier;
pub mod wire;
