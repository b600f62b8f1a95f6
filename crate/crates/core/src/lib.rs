//! Disk-backed construction of the Burrows–Wheeler Transform and LCP array of
//! a set of equal-length strings.
//!
//! The build runs in two phases over files that are only read and written
//! sequentially:
//!
//! 1. [`partition`] computes, for every suffix length `l`, the column `B_l`
//!    of symbols preceding the sorted `l`-suffixes.
//! 2. [`merge`] finds how those columns interleave in the full suffix order,
//!    refining the order one prefix symbol per iteration and producing the
//!    LCP array on the way.
//!
//! [`interleave`] then assembles the BWT from the columns. [`oracle`] is an
//! independent in-memory reference used by the tests and by `--verify`.

pub mod cli;
pub mod error;
pub mod ext;
pub mod interleave;
pub mod merge;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod pipeline;

pub use error::{Error, Location, Result};
pub use interleave::{emit_outputs, reconstruct_interleave, OutputBundle};
pub use merge::{merge_suffixes, MergeOptions, MergeResult, MergeState};
pub use model::{compare_suffixes_prec_p, validate_collection, Alphabet, Code, StringCollection, SuffixRef, SENTINEL};
pub use oracle::{oracle_all, OracleResult};
pub use partition::{build_columns, partition_suffixes, PartialBwtColumns, PartitionOptions};
pub use pipeline::{build, BuildOptions};
