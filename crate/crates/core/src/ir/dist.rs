//! Whitespace tokenization and token-level edit distance.
//!
//! IR texts are compared as token sequences: maximal runs of
//! non-whitespace characters. The normalized edit distance divides the
//! unit-cost Levenshtein distance by the reference length.

use std::error::Error;
use std::fmt;

/// Split on whitespace and newlines; never fails.
pub fn tokenize_ir(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Unit-cost Levenshtein distance over arbitrary comparable tokens.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ta) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = diag + usize::from(ta != tb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistanceError {
    /// Normalization by an empty reference is undefined.
    EmptyReference,
}

impl fmt::Display for DistanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceError::EmptyReference => write!(f, "empty reference token list"),
        }
    }
}

impl Error for DistanceError {}

/// Levenshtein distance between the hypothesis and the reference, divided
/// by the reference length.
pub fn normalized_edit_distance<T: PartialEq>(
    hyp: &[T],
    reference: &[T],
) -> Result<f64, DistanceError> {
    if reference.is_empty() {
        return Err(DistanceError::EmptyReference);
    }
    Ok(levenshtein(hyp, reference) as f64 / reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize_ir("jmp node_2\n.handlers node_1"),
            vec!["jmp", "node_2", ".handlers", "node_1"]
        );
        assert_eq!(tokenize_ir(""), Vec::<&str>::new());
        assert_eq!(tokenize_ir("a  b\t\nc"), vec!["a", "b", "c"]);
    }

    #[test]
    fn ned_identical_is_zero() {
        let toks = vec!["a", "b", "c"];
        assert_eq!(normalized_edit_distance(&toks, &toks).unwrap(), 0.0);
    }

    #[test]
    fn ned_single_substitution() {
        let reference: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        let mut hyp = reference.clone();
        hyp[7] = "other".to_string();
        assert_eq!(normalized_edit_distance(&hyp, &reference).unwrap(), 0.05);
    }

    #[test]
    fn ned_empty_reference_errors() {
        let hyp = vec!["a"];
        let reference: Vec<&str> = vec![];
        assert_eq!(
            normalized_edit_distance(&hyp, &reference),
            Err(DistanceError::EmptyReference)
        );
    }

    /// Memo-free exponential recursion, kept deliberately independent of
    /// the DP implementation.
    fn oracle(a: &[u8], b: &[u8]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let sub = oracle(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
        let del = oracle(&a[1..], b) + 1;
        let ins = oracle(a, &b[1..]) + 1;
        sub.min(del).min(ins)
    }

    proptest! {
        #[test]
        fn matches_recursive_oracle(a in proptest::collection::vec(0u8..4, 0..8),
                                    b in proptest::collection::vec(0u8..4, 0..8)) {
            prop_assert_eq!(levenshtein(&a, &b), oracle(&a, &b));
        }

        #[test]
        fn zero_iff_equal(a in proptest::collection::vec(0u8..4, 1..8),
                          b in proptest::collection::vec(0u8..4, 1..8)) {
            let ned = normalized_edit_distance(&a, &b).unwrap();
            prop_assert_eq!(ned == 0.0, a == b);
        }

        #[test]
        fn rejoined_tokens_retokenize(words in proptest::collection::vec("[a-z]{1,5}", 0..10)) {
            let joined = words.join(" ");
            let tokens = tokenize_ir(&joined);
            prop_assert_eq!(tokens, words.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        }
    }
}
