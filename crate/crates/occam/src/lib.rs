//! Front ends for the occam engine. The `occam` CLI and the `occamd` HTTP
//! service both translate their input into the same [`occam_core::Command`]s
//! through [`requests`], so either surface produces the same event log.

pub mod cli;
pub mod http;
pub mod requests;
