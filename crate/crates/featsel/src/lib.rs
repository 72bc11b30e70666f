//! Files, transports and experiment orchestration around [`featsel_core`].
//!
//! * [`io`] loads CSV datasets and JSON descriptors.
//! * [`client`] and [`transcript`] send prompts to a chat-completions
//!   endpoint and record or replay the exchanges.
//! * [`scoring`] scores every feature of a dataset with one prompt each.
//! * [`rafs`] retrieves per-feature metadata and injects it into prompts.
//! * [`runner`] sweeps datasets, methods, shot budgets and seeds into
//!   resumable reports.

pub mod client;
pub mod error;
pub mod io;
pub mod rafs;
pub mod report;
pub mod runner;
pub mod scoring;
pub mod transcript;

mod ratelimit;

pub use error::{Error, Result};
pub use featsel_core;
pub use ratelimit::RateLimiter;
