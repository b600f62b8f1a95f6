//! Alphabet, validated string collections and the suffix orders shared by
//! every phase.
//!
//! Symbols are small integer codes: the sentinel is `0` and the `i`-th letter
//! of the alphabet is `i`. Strings are stored without their terminating
//! sentinel; an `l`-suffix of a string is its last `l` letters followed by the
//! sentinel, and the 0-suffix is the bare sentinel.

use std::cmp::Ordering;

use crate::error::{Error, Location, Result};

/// Symbol code. `SENTINEL` sorts before every letter.
pub type Code = u8;

pub const SENTINEL: Code = 0;
pub const SENTINEL_CHAR: char = '$';

/// Ordered alphabet of at most 255 letters plus the sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    /// Builds an alphabet from its letters in increasing order.
    ///
    /// Letters are upper-cased; they must be distinct and must not include
    /// the sentinel character `$`.
    pub fn new(letters: &str) -> Result<Self> {
        let letters: Vec<char> = letters.chars().flat_map(char::to_uppercase).collect();
        if letters.is_empty() {
            return Err(Error::InvalidAlphabet("no letters".into()));
        }
        if letters.len() > 255 {
            return Err(Error::InvalidAlphabet(format!(
                "{} letters, at most 255 are supported",
                letters.len()
            )));
        }
        for (i, &c) in letters.iter().enumerate() {
            if c == SENTINEL_CHAR {
                return Err(Error::InvalidAlphabet(
                    "'$' is reserved for the sentinel".into(),
                ));
            }
            if c.is_whitespace() || c.is_control() {
                return Err(Error::InvalidAlphabet(format!("unprintable letter {c:?}")));
            }
            if letters[..i].contains(&c) {
                return Err(Error::InvalidAlphabet(format!("duplicate letter {c:?}")));
            }
        }
        Ok(Alphabet { letters })
    }

    pub fn dna() -> Self {
        Alphabet::new("ACGT").expect("static alphabet")
    }

    /// Number of letters, not counting the sentinel.
    pub fn sigma(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    /// Code of a letter (1-based); the sentinel has no code lookup.
    pub fn code(&self, c: char) -> Option<Code> {
        self.letters
            .iter()
            .position(|&l| l == c)
            .map(|i| (i + 1) as Code)
    }

    pub fn symbol(&self, code: Code) -> Option<char> {
        match code {
            SENTINEL => Some(SENTINEL_CHAR),
            c => self.letters.get(c as usize - 1).copied(),
        }
    }

    /// Renders codes as text, with `?` for codes outside the alphabet.
    pub fn render(&self, codes: &[Code]) -> String {
        codes
            .iter()
            .map(|&c| self.symbol(c).unwrap_or('?'))
            .collect()
    }
}

/// `m` strings of `k` letters each, encoded as symbol codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringCollection {
    alphabet: Alphabet,
    strings: Vec<Vec<Code>>,
    k: usize,
}

impl StringCollection {
    /// Wraps already-encoded strings, checking the collection invariants.
    pub fn from_codes(alphabet: Alphabet, strings: Vec<Vec<Code>>) -> Result<Self> {
        let first = strings.first().ok_or(Error::EmptyInput)?;
        let k = first.len();
        if k == 0 {
            return Err(Error::EmptyString {
                at: Location::String(1),
            });
        }
        let sigma = alphabet.sigma() as Code;
        for (i, s) in strings.iter().enumerate() {
            if s.len() != k {
                return Err(Error::UnequalLength {
                    at: Location::String(i + 1),
                    expected: k,
                    found: s.len(),
                });
            }
            if let Some(col) = s.iter().position(|&c| c == SENTINEL || c > sigma) {
                return Err(Error::UnknownSymbol {
                    at: Location::String(i + 1),
                    symbol: alphabet.symbol(s[col]).unwrap_or('?'),
                    column: col + 1,
                });
            }
        }
        Ok(StringCollection {
            alphabet,
            strings,
            k,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn m(&self) -> usize {
        self.strings.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> usize {
        self.alphabet.sigma()
    }

    /// Number of suffixes, `(k + 1) * m`.
    pub fn positions(&self) -> usize {
        (self.k + 1) * self.strings.len()
    }

    pub fn strings(&self) -> &[Vec<Code>] {
        &self.strings
    }

    /// String with 1-based index `j`.
    pub fn string(&self, j: usize) -> &[Code] {
        &self.strings[j - 1]
    }

    /// Letters of a suffix, without the sentinel.
    pub fn suffix(&self, s: SuffixRef) -> &[Code] {
        &self.string(s.string)[self.k - s.length..]
    }

    /// The `t`-th symbol (1-based) of a suffix; sentinel once the suffix is exhausted.
    pub fn suffix_symbol(&self, s: SuffixRef, t: usize) -> Code {
        debug_assert!(t >= 1);
        if t <= s.length {
            self.string(s.string)[self.k - s.length + t - 1]
        } else {
            SENTINEL
        }
    }

    /// Symbol preceding a suffix in its string; sentinel for the whole string.
    pub fn preceding_symbol(&self, s: SuffixRef) -> Code {
        if s.length == self.k {
            SENTINEL
        } else {
            self.string(s.string)[self.k - s.length - 1]
        }
    }
}

/// Encodes raw text strings against `alphabet`, upper-casing first.
///
/// Violations are reported, never repaired.
pub fn validate_collection<S: AsRef<str>>(
    raw_strings: &[S],
    alphabet: &Alphabet,
) -> Result<StringCollection> {
    validate_located(
        raw_strings
            .iter()
            .enumerate()
            .map(|(i, s)| (Location::String(i + 1), s.as_ref())),
        alphabet,
    )
}

pub(crate) fn validate_located<'a>(
    raw: impl IntoIterator<Item = (Location, &'a str)>,
    alphabet: &Alphabet,
) -> Result<StringCollection> {
    let mut strings = Vec::new();
    let mut k = None;
    for (at, text) in raw {
        let mut codes = Vec::with_capacity(text.len());
        for (col, ch) in text.chars().flat_map(char::to_uppercase).enumerate() {
            let code = alphabet.code(ch).ok_or(Error::UnknownSymbol {
                at,
                symbol: ch,
                column: col + 1,
            })?;
            codes.push(code);
        }
        match k {
            None if codes.is_empty() => return Err(Error::EmptyString { at }),
            None => k = Some(codes.len()),
            Some(expected) if codes.len() != expected => {
                return Err(Error::UnequalLength {
                    at,
                    expected,
                    found: codes.len(),
                })
            }
            Some(_) => {}
        }
        strings.push(codes);
    }
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    StringCollection::from_codes(alphabet.clone(), strings)
}

/// The `length`-suffix of string `string` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SuffixRef {
    pub string: usize,
    pub length: usize,
}

impl SuffixRef {
    pub fn new(string: usize, length: usize) -> Self {
        SuffixRef { string, length }
    }
}

/// The p-precedence order.
///
/// Suffixes are compared on their first `p` symbols (sentinel-padded past the
/// end), then by length, then by string index. Distinct suffixes never compare
/// equal. For `p >= k + 1` this is the full lexicographic order in which the
/// sentinel of a lower-indexed string is the smaller one.
pub fn compare_suffixes_prec_p(
    a: SuffixRef,
    b: SuffixRef,
    p: usize,
    coll: &StringCollection,
) -> Ordering {
    (1..=p)
        .map(|t| coll.suffix_symbol(a, t).cmp(&coll.suffix_symbol(b, t)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(a.length.cmp(&b.length))
        .then(a.string.cmp(&b.string))
}

/// All `(k + 1) * m` suffix references, grouped by length then string index.
pub fn all_suffixes(coll: &StringCollection) -> Vec<SuffixRef> {
    (0..=coll.k())
        .flat_map(|l| (1..=coll.m()).map(move |j| SuffixRef::new(j, l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ac() -> Alphabet {
        Alphabet::new("AC").unwrap()
    }

    #[test]
    fn alphabet_codes() {
        let a = Alphabet::dna();
        assert_eq!(a.sigma(), 4);
        assert_eq!(a.code('A'), Some(1));
        assert_eq!(a.code('T'), Some(4));
        assert_eq!(a.code('$'), None);
        assert_eq!(a.symbol(0), Some('$'));
        assert_eq!(a.symbol(2), Some('C'));
        assert_eq!(a.symbol(5), None);
        assert_eq!(Alphabet::new("acg").unwrap().letters(), &['A', 'C', 'G']);
    }

    #[test]
    fn alphabet_rejects_bad_letters() {
        assert!(Alphabet::new("").is_err());
        assert!(Alphabet::new("A$").is_err());
        assert!(Alphabet::new("ACA").is_err());
        assert!(Alphabet::new("Aa").is_err());
        let many: String = (0..256u32).map(|i| char::from_u32(0x100 + i).unwrap()).collect();
        assert!(Alphabet::new(&many).is_err());
    }

    #[test]
    fn validates_small_collections() {
        let c = validate_collection(&["AC", "CA"], &ac()).unwrap();
        assert_eq!((c.m(), c.k()), (2, 2));
        assert_eq!(c.string(1), &[1, 2]);
        assert_eq!(c.string(2), &[2, 1]);

        let c = validate_collection(&["A"], &Alphabet::new("A").unwrap()).unwrap();
        assert_eq!((c.m(), c.k()), (1, 1));

        let c = validate_collection(&["ac"], &ac()).unwrap();
        assert_eq!(c.string(1), &[1, 2]);
    }

    #[test]
    fn validation_errors() {
        let dna = Alphabet::dna();
        assert!(matches!(
            validate_collection(&["AC", "CAT"], &dna),
            Err(Error::UnequalLength {
                at: Location::String(2),
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            validate_collection(&["AC", "CN"], &dna),
            Err(Error::UnknownSymbol {
                symbol: 'N',
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            validate_collection(&["A$"], &dna),
            Err(Error::UnknownSymbol { symbol: '$', .. })
        ));
        assert!(matches!(
            validate_collection::<&str>(&[], &dna),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            validate_collection(&[""], &dna),
            Err(Error::EmptyString { .. })
        ));
    }

    #[test]
    fn prec_p_examples() {
        let c = validate_collection(&["AC", "CA"], &ac()).unwrap();
        // "A$" of s2 against "AC$" of s1 on one symbol: shorter first.
        assert_eq!(
            compare_suffixes_prec_p(SuffixRef::new(2, 1), SuffixRef::new(1, 2), 1, &c),
            Ordering::Less
        );
        assert_eq!(
            compare_suffixes_prec_p(SuffixRef::new(1, 0), SuffixRef::new(2, 0), 0, &c),
            Ordering::Less
        );
        // "C$" against "CA$": the sentinel beats A.
        assert_eq!(
            compare_suffixes_prec_p(SuffixRef::new(1, 1), SuffixRef::new(2, 2), 2, &c),
            Ordering::Less
        );
        assert_eq!(
            compare_suffixes_prec_p(SuffixRef::new(2, 2), SuffixRef::new(2, 2), 2, &c),
            Ordering::Equal
        );
    }

    #[test]
    fn suffix_symbols() {
        let c = validate_collection(&["AC", "CA"], &ac()).unwrap();
        let s = SuffixRef::new(1, 1);
        assert_eq!(c.suffix(s), &[2]);
        assert_eq!(c.suffix_symbol(s, 1), 2);
        assert_eq!(c.suffix_symbol(s, 2), SENTINEL);
        assert_eq!(c.suffix_symbol(s, 5), SENTINEL);
        assert_eq!(c.preceding_symbol(s), 1);
        assert_eq!(c.preceding_symbol(SuffixRef::new(1, 2)), SENTINEL);
    }

    fn collection() -> impl Strategy<Value = StringCollection> {
        (1usize..=6, 1usize..=8, 2u8..=4).prop_flat_map(|(k, m, sigma)| {
            proptest::collection::vec(proptest::collection::vec(1..=sigma, k), m).prop_map(
                move |strings| {
                    let letters = &"ACGT"[..sigma as usize];
                    StringCollection::from_codes(Alphabet::new(letters).unwrap(), strings)
                        .unwrap()
                },
            )
        })
    }

    /// Full order written out independently: letters then a per-string sentinel.
    fn explicit_key(c: &StringCollection, s: SuffixRef) -> Vec<(u8, usize)> {
        c.suffix(s)
            .iter()
            .map(|&x| (x, 0))
            .chain(std::iter::once((0, s.string)))
            .collect()
    }

    proptest! {
        #[test]
        fn prec_p_is_a_strict_total_order(c in collection(), p in 0usize..=8) {
            let all = all_suffixes(&c);
            for &a in &all {
                for &b in &all {
                    let ab = compare_suffixes_prec_p(a, b, p, &c);
                    prop_assert_eq!(ab, compare_suffixes_prec_p(b, a, p, &c).reverse());
                    prop_assert_eq!(ab == Ordering::Equal, a == b);
                }
            }
            let mut sorted = all.clone();
            sorted.sort_by(|&a, &b| compare_suffixes_prec_p(a, b, p, &c));
            for w in sorted.windows(2) {
                prop_assert_eq!(compare_suffixes_prec_p(w[0], w[1], p, &c), Ordering::Less);
            }
            for w in sorted.windows(3) {
                prop_assert_eq!(compare_suffixes_prec_p(w[0], w[2], p, &c), Ordering::Less);
            }
        }

        #[test]
        fn full_depth_matches_explicit_sentinels(c in collection()) {
            let all = all_suffixes(&c);
            for &a in &all {
                for &b in &all {
                    prop_assert_eq!(
                        compare_suffixes_prec_p(a, b, c.k() + 1, &c),
                        explicit_key(&c, a).cmp(&explicit_key(&c, b))
                    );
                }
            }
        }

        #[test]
        fn prefix_decisions_survive_deeper_comparison(c in collection(), p in 0usize..=7) {
            let all = all_suffixes(&c);
            for &a in &all {
                for &b in &all {
                    let pa: Vec<_> = (1..=p).map(|t| c.suffix_symbol(a, t)).collect();
                    let pb: Vec<_> = (1..=p).map(|t| c.suffix_symbol(b, t)).collect();
                    if pa < pb {
                        for q in p..=c.k() + 1 {
                            prop_assert_eq!(compare_suffixes_prec_p(a, b, q, &c), Ordering::Less);
                        }
                    }
                }
            }
        }
    }
}
