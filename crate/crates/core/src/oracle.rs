//! In-memory brute-force reference.
//!
//! Sorts every suffix with the full-depth comparator and derives SA, BWT, LCP,
//! the interleave encoding, the partial columns and the longest repeat length
//! directly from their definitions. Quadratic and meant for test-sized input.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{all_suffixes, compare_suffixes_prec_p, Code, StringCollection, SuffixRef, SENTINEL};

/// Largest `(k + 1) * m` the oracle accepts.
pub const ORACLE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub sa: Vec<SuffixRef>,
    pub bwt: Vec<Code>,
    /// First entry is -1.
    pub lcp: Vec<i64>,
    pub encoding: Vec<usize>,
    /// `partial_b[l]` lists the symbols preceding the sorted `l`-suffixes.
    pub partial_b: Vec<Vec<Code>>,
    /// Longest substring occurring at least twice.
    pub longest_repeat: usize,
}

fn guard(coll: &StringCollection) -> Result<()> {
    let positions = coll.positions();
    if positions > ORACLE_LIMIT {
        return Err(Error::TooLargeForOracle {
            positions,
            limit: ORACLE_LIMIT,
        });
    }
    Ok(())
}

pub fn oracle_all(coll: &StringCollection) -> Result<OracleResult> {
    guard(coll)?;
    let sa = sorted_suffixes(coll, coll.k() + 1);
    let bwt = sa.iter().map(|&s| coll.preceding_symbol(s)).collect();
    let lcp = std::iter::once(-1)
        .chain(
            sa.windows(2)
                .map(|w| common_prefix(coll.suffix(w[0]), coll.suffix(w[1])) as i64),
        )
        .collect();
    let encoding = sa.iter().map(|s| s.length).collect();
    let partial_b = (0..=coll.k())
        .map(|l| {
            sa.iter()
                .filter(|s| s.length == l)
                .map(|&s| coll.preceding_symbol(s))
                .collect()
        })
        .collect();
    Ok(OracleResult {
        sa,
        bwt,
        lcp,
        encoding,
        partial_b,
        longest_repeat: longest_repeat(coll),
    })
}

/// All suffixes in p-precedence order: the p-interleave.
pub fn sorted_suffixes(coll: &StringCollection, p: usize) -> Vec<SuffixRef> {
    let mut sa = all_suffixes(coll);
    sa.sort_by(|&a, &b| compare_suffixes_prec_p(a, b, p, coll));
    sa
}

/// Segment end flags of the p-interleave: position `i` ends a segment when
/// the next suffix has a different sentinel-terminated p-prefix.
///
/// Exhausted suffixes are distinct from everything, so a suffix shorter than
/// `p` is always alone in its segment.
pub fn segment_ends(coll: &StringCollection, p: usize) -> Vec<bool> {
    let sa = sorted_suffixes(coll, p);
    let key = |s: SuffixRef| -> Option<&[Code]> {
        (s.length >= p).then(|| &coll.suffix(s)[..p])
    };
    (0..sa.len())
        .map(|i| match sa.get(i + 1) {
            None => true,
            Some(&next) => match (key(sa[i]), key(next)) {
                (Some(a), Some(b)) => a != b,
                _ => true,
            },
        })
        .collect()
}

/// `Q_l^p` by definition: the p-th symbol of each sorted `l`-suffix.
pub fn q_column(coll: &StringCollection, l: usize, p: usize) -> Vec<Code> {
    sorted_suffixes(coll, coll.k() + 1)
        .into_iter()
        .filter(|s| s.length == l)
        .map(|s| coll.suffix_symbol(s, p))
        .collect()
}

/// String indexes in sorted order of their `l`-suffixes.
pub fn suffix_order(coll: &StringCollection, l: usize) -> Vec<usize> {
    sorted_suffixes(coll, coll.k() + 1)
        .into_iter()
        .filter(|s| s.length == l)
        .map(|s| s.string)
        .collect()
}

fn common_prefix(a: &[Code], b: &[Code]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Length of the longest substring with at least two occurrences, counting
/// occurrences at distinct (string, offset) positions.
pub fn longest_repeat(coll: &StringCollection) -> usize {
    let mut counts: HashMap<&[Code], usize> = HashMap::new();
    for s in coll.strings() {
        for i in 0..s.len() {
            for j in i + 1..=s.len() {
                *counts.entry(&s[i..j]).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n >= 2)
        .map(|(w, _)| w.len())
        .max()
        .unwrap_or(0)
}

/// BWT and LCP from a second route: every suffix is spelled out with a
/// string-specific sentinel and the spellings are sorted as plain vectors.
pub fn direct_bwt_lcp(coll: &StringCollection) -> Result<(Vec<Code>, Vec<i64>)> {
    guard(coll)?;
    let m = coll.m() as u32;
    let mut spelled: Vec<(Vec<u32>, Code)> = Vec::with_capacity(coll.positions());
    for (j, s) in coll.strings().iter().enumerate() {
        for start in 0..=s.len() {
            let mut w: Vec<u32> = s[start..].iter().map(|&c| m + c as u32).collect();
            w.push(j as u32);
            let before = if start == 0 { SENTINEL } else { s[start - 1] };
            spelled.push((w, before));
        }
    }
    spelled.sort();
    let bwt = spelled.iter().map(|(_, c)| *c).collect();
    let lcp = std::iter::once(-1)
        .chain(spelled.windows(2).map(|w| {
            w[0].0
                .iter()
                .zip(&w[1].0)
                .take_while(|(a, b)| a == b && **a >= m)
                .count() as i64
        }))
        .collect();
    Ok((bwt, lcp))
}
