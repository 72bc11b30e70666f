//! Feature-selection algorithms with no I/O.
//!
//! The crate builds on `core` + `alloc` only. It holds the tabular data
//! model, the classic selectors (mutual-information filter, mRMR, recursive
//! feature elimination, random), the prompt builders and score parser used
//! for LLM-scored selection, retrieval-augmented prompt assembly, and the
//! downstream evaluation protocol (L2-penalised linear models, stratified
//! cross-validation, AUROC / MAE, rank aggregation).
//!
//! Everything that touches files, the network, clocks or threads lives in the
//! `featsel` companion crate.

#![no_std]
#![cfg_attr(docsrs, feature(doc_cfg))]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod classic;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod llm;
pub mod rafs;
pub mod selection;
pub mod tabular;

mod rng;

pub use error::{Error, Result};
pub use selection::{selected_count, SelectionResult};
pub use tabular::{Column, ColumnData, ColumnKind, Dataset, Descriptor, SamplePairs, Task};
