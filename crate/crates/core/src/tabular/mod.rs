//! Tabular data model, k-shot sampling and preprocessing.

mod dataset;
mod preprocess;
mod sampling;

pub use dataset::{Column, ColumnData, ColumnKind, Dataset, Descriptor, Task};
pub use preprocess::{preprocess, Design, Encoder};
pub use sampling::{make_sample_pairs, subsample_shots, SamplePairs};
pub(crate) use sampling::class_groups;
