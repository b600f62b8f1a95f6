use std::path::Path;

use log::info;

use crate::error::Result;
use crate::ext::{Phase, Store, DEFAULT_BUFFER_SIZE};
use crate::interleave::{emit_outputs, OutputBundle};
use crate::merge::{merge_suffixes, MergeOptions, DEFAULT_SPILL_THRESHOLD};
use crate::model::StringCollection;
use crate::partition::{build_columns, partition_suffixes, PartitionOptions};

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub buffer_size: usize,
    /// Remove per-iteration arrays once the next iteration no longer needs them.
    pub rolling: bool,
    /// Check every suffix order permutation of phase 1.
    pub verify_permutations: bool,
    pub spill_threshold: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            buffer_size: DEFAULT_BUFFER_SIZE,
            rolling: true,
            verify_permutations: false,
            spill_threshold: DEFAULT_SPILL_THRESHOLD,
        }
    }
}

impl BuildOptions {
    pub fn partition(&self) -> PartitionOptions {
        PartitionOptions {
            verify: self.verify_permutations,
            rolling: self.rolling,
        }
    }

    pub fn merge(&self) -> MergeOptions {
        MergeOptions {
            rolling: self.rolling,
            spill_threshold: self.spill_threshold,
        }
    }
}

/// Runs both phases in `workdir` and emits `BWT_final.bin` / `LCP_final.bin`.
///
/// Returns the store the files live in, for reading the outputs back.
pub fn build(
    coll: &StringCollection,
    workdir: &Path,
    opts: &BuildOptions,
) -> Result<(Store, OutputBundle)> {
    let store = Store::new(workdir, opts.buffer_size)?;
    let p1 = store.with_phase(Phase::Partition);
    let columns = build_columns(coll, &p1)?;
    let b = partition_suffixes(&columns, &p1, opts.partition())?;
    info!(
        "partitioned {} strings of length {}: {} bytes moved",
        coll.m(),
        coll.k(),
        store.stats().phase(Phase::Partition).bytes_moved()
    );
    let merged = merge_suffixes(&b, &store.with_phase(Phase::Merge), opts.merge())?;
    info!(
        "merged in {} iterations: {} bytes moved",
        merged.iterations,
        store.stats().phase(Phase::Merge).bytes_moved()
    );
    let out = emit_outputs(&merged, &b, &store)?;
    Ok((store, out))
}
