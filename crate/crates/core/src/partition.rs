//! Phase 1: the per-length partial BWT columns.
//!
//! `B_l[i]` is the symbol preceding the `i`-th smallest `l`-suffix. The sorted
//! order of the `l`-suffixes is carried as the permutation `N_l` of string
//! indexes; `N_l` is `N_{l-1}` stably bucketed by `B_{l-1}`, since an
//! `l`-suffix is its preceding symbol followed by an `(l-1)`-suffix.

use crate::error::{Error, Result};
use crate::ext::{concat_buckets, BucketSet, BucketWriters, ExtSequence, Index, Store, Symbol};
use crate::model::{Code, StringCollection, SENTINEL};

/// Columns `S_0..S_k` on disk: `S_l[i]` is the symbol preceding the
/// `l`-suffix of string `i`, and `S_k` is all sentinels.
#[derive(Debug, Clone)]
pub struct ColumnMatrix {
    columns: Vec<ExtSequence<Symbol>>,
    m: usize,
    sigma: usize,
}

impl ColumnMatrix {
    pub fn k(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn column(&self, l: usize) -> &ExtSequence<Symbol> {
        &self.columns[l]
    }

    /// Loads `S_l` into memory; the only array phase 1 accesses at random.
    pub fn load(&self, l: usize, store: &Store) -> Result<Vec<Code>> {
        let col = self
            .columns
            .get(l)
            .ok_or_else(|| Error::MissingColumn(format!("S_{l}")))?;
        store.read_all(col)
    }
}

/// Splits the input into columns in one pass over the strings.
pub fn build_columns(coll: &StringCollection, store: &Store) -> Result<ColumnMatrix> {
    let k = coll.k();
    let mut writers = (0..=k)
        .map(|l| store.create::<Symbol>("S", l))
        .collect::<Result<Vec<_>>>()?;
    for s in coll.strings() {
        for (l, w) in writers.iter_mut().enumerate() {
            w.append(if l < k { s[k - l - 1] } else { SENTINEL })?;
        }
    }
    Ok(ColumnMatrix {
        columns: writers
            .into_iter()
            .map(|w| w.finish())
            .collect::<Result<_>>()?,
        m: coll.m(),
        sigma: coll.sigma(),
    })
}

/// `B_0..B_k`, each `m` symbols long.
#[derive(Debug, Clone)]
pub struct PartialBwtColumns {
    columns: Vec<ExtSequence<Symbol>>,
    m: usize,
    sigma: usize,
}

impl PartialBwtColumns {
    /// Attaches to the files `B_0.bin .. B_k.bin` in `store`.
    pub fn open(store: &Store, k: usize, m: usize, sigma: usize) -> Result<Self> {
        let columns = (0..=k)
            .map(|l| {
                let path = store.path("B", l);
                if !path.exists() {
                    return Err(Error::MissingColumn(format!("B_{l}")));
                }
                let col = ExtSequence::<Symbol>::from_file(path)?;
                if col.len() != m as u64 {
                    return Err(Error::LengthMismatch {
                        what: "partial BWT column",
                        expected: m as u64,
                        found: col.len(),
                    });
                }
                Ok(col)
            })
            .collect::<Result<_>>()?;
        Ok(PartialBwtColumns { columns, m, sigma })
    }

    pub fn k(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn column(&self, l: usize) -> &ExtSequence<Symbol> {
        &self.columns[l]
    }

    pub fn columns(&self) -> &[ExtSequence<Symbol>] {
        &self.columns
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionOptions {
    /// Check that every `N_l` is a permutation of `1..=m`.
    pub verify: bool,
    /// Delete `N_{l-1}`, its buckets and `S_l` once they have been consumed.
    pub rolling: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            verify: false,
            rolling: true,
        }
    }
}

/// Appends each `N_prev[i]` to the bucket of `B_prev[i]`, keeping scan order.
///
/// The buckets are written as `NB_<l>_<code>.bin`.
pub fn project(
    n_prev: &ExtSequence<Index>,
    b_prev: &ExtSequence<Symbol>,
    sigma: usize,
    l: usize,
    store: &Store,
) -> Result<BucketSet<Index>> {
    if n_prev.len() != b_prev.len() {
        return Err(Error::LengthMismatch {
            what: "projection inputs",
            expected: n_prev.len(),
            found: b_prev.len(),
        });
    }
    let mut buckets = BucketWriters::create(store, "NB", l, sigma)?;
    let mut nr = store.open(n_prev)?;
    let mut br = store.open(b_prev)?;
    while let Some(n) = nr.next_value()? {
        buckets.push(br.expect_value()?, n)?;
    }
    buckets.finish()
}

/// Computes `B_0..B_k` with `k` streaming passes.
///
/// Writes `B_<l>.bin` (kept) and `N_<l>.bin` (removed in rolling mode).
pub fn partition_suffixes(
    cm: &ColumnMatrix,
    store: &Store,
    opts: PartitionOptions,
) -> Result<PartialBwtColumns> {
    let (m, k, sigma) = (cm.m(), cm.k(), cm.sigma());
    let mut b_cols = Vec::with_capacity(k + 1);

    let mut n_prev = store.write_all::<Index>("N", 0, 1..=m)?;
    let mut b0 = store.create::<Symbol>("B", 0)?;
    let mut s0 = store.open(cm.column(0))?;
    while let Some(c) = s0.next_value()? {
        b0.append(c)?;
    }
    b_cols.push(b0.finish()?);
    if opts.rolling {
        cm.column(0).clone().remove()?;
    }

    let mut seen = vec![false; if opts.verify { m } else { 0 }];
    for l in 1..=k {
        let buckets = project(&n_prev, &b_cols[l - 1], sigma, l - 1, store)?;
        let n_cur = concat_buckets(&buckets, store.create("N", l)?, store)?;
        if opts.rolling {
            buckets.remove()?;
            n_prev.remove()?;
        }

        let column = cm.load(l, store)?;
        let mut out = store.create::<Symbol>("B", l)?;
        let mut nr = store.open(&n_cur)?;
        seen.iter_mut().for_each(|s| *s = false);
        while let Some(n) = nr.next_value()? {
            if n == 0 || n > m {
                return Err(Error::InvariantViolation(format!(
                    "N_{l} holds string index {n} outside 1..={m}"
                )));
            }
            if opts.verify {
                if seen[n - 1] {
                    return Err(Error::InvariantViolation(format!(
                        "N_{l} repeats string index {n}"
                    )));
                }
                seen[n - 1] = true;
            }
            out.append(column[n - 1])?;
        }
        if n_cur.len() != m as u64 {
            return Err(Error::LengthMismatch {
                what: "suffix order permutation",
                expected: m as u64,
                found: n_cur.len(),
            });
        }
        b_cols.push(out.finish()?);
        if opts.rolling {
            cm.column(l).clone().remove()?;
        }
        n_prev = n_cur;
    }
    if opts.rolling {
        n_prev.remove()?;
    }
    Ok(PartialBwtColumns {
        columns: b_cols,
        m,
        sigma,
    })
}
