use std::fmt;

use crate::error::{Error, Result};

/// The `2W` trits of one inner window, centre dropped.
///
/// Digit `j` compares the `j`-th non-central sample (left to right) with the
/// centre `c`: `0` when the neighbour exceeds `c` by more than `T`, `1` when
/// they differ by at most `T`, `2` when `c` exceeds the neighbour by more
/// than `T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TritCode(Vec<u8>);

impl TritCode {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() || !digits.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "trit code length must be a positive even number, got {}",
                digits.len()
            )));
        }
        if let Some(d) = digits.iter().find(|&&d| d > 2) {
            return Err(Error::invalid(format!("trit digit {d} is outside 0..=2")));
        }
        Ok(TritCode(digits))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn half_width(&self) -> usize {
        self.0.len() / 2
    }
}

/// Decimal form of a [`TritCode`]: `sum(t_j * 3^j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternCode(pub u64);

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[inline]
fn trit(neighbour: u32, centre: u32, threshold: u32) -> u8 {
    let diff = i64::from(neighbour) - i64::from(centre);
    let t = i64::from(threshold);
    if diff > t {
        0
    } else if -diff > t {
        2
    } else {
        1
    }
}

pub fn encode_trits(window: &[u32], threshold: u32) -> Result<TritCode> {
    if window.len() < 3 || window.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "inner window must have odd length 2W+1 >= 3, got {}",
            window.len()
        )));
    }
    let mid = window.len() / 2;
    let centre = window[mid];
    let digits = window
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mid)
        .map(|(_, &c)| trit(c, centre, threshold))
        .collect();
    Ok(TritCode(digits))
}

pub fn trits_to_decimal(code: &TritCode) -> PatternCode {
    let value = code.0.iter().rev().fold(0u64, |acc, &d| acc * 3 + u64::from(d));
    PatternCode(value)
}

/// Inverse of [`trits_to_decimal`] for codes of `2 * half_width` digits.
pub fn decimal_to_trits(code: PatternCode, half_width: usize) -> Result<TritCode> {
    let len = 2 * half_width;
    if half_width == 0 || code.0 >= 3u64.pow(len as u32) {
        return Err(Error::invalid(format!(
            "pattern code {} does not fit {len} trits",
            code.0
        )));
    }
    let mut rest = code.0;
    let digits = (0..len)
        .map(|_| {
            let d = (rest % 3) as u8;
            rest /= 3;
            d
        })
        .collect();
    Ok(TritCode(digits))
}

/// Encodes an inner window straight to its pattern code without allocating.
/// `window.len()` must be odd; callers validate.
#[inline]
pub fn encode_pattern(window: &[u32], threshold: u32) -> PatternCode {
    debug_assert!(window.len() % 2 == 1);
    let mid = window.len() / 2;
    let centre = window[mid];
    let mut value = 0u64;
    let mut weight = 1u64;
    for (i, &c) in window.iter().enumerate() {
        if i == mid {
            continue;
        }
        value += u64::from(trit(c, centre, threshold)) * weight;
        weight *= 3;
    }
    PatternCode(value)
}

/// The all-ones code `(3^(2W) - 1) / 2`: no neighbour differs from the centre by more than `T`.
pub fn quiet_code(half_width: usize) -> PatternCode {
    PatternCode((3u64.pow(2 * half_width as u32) - 1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_trits(&[4, 4, 4, 4, 4], 2).unwrap().digits(), &[1, 1, 1, 1]);
        assert_eq!(encode_trits(&[2, 3, 10, 3, 2], 3).unwrap().digits(), &[2, 2, 2, 2]);
        assert_eq!(encode_trits(&[9, 8, 1, 8, 9], 3).unwrap().digits(), &[0, 0, 0, 0]);
    }

    #[test]
    fn encode_threshold_boundary() {
        // |diff| == T is unchanged, T + 1 is not.
        assert_eq!(encode_trits(&[5, 3, 8], 3).unwrap().digits(), &[1, 0]);
        assert_eq!(encode_trits(&[4, 8, 12], 3).unwrap().digits(), &[2, 0]);
    }

    #[test]
    fn encode_rejects_bad_lengths() {
        assert!(encode_trits(&[1, 2, 3, 4], 1).is_err());
        assert!(encode_trits(&[1], 1).is_err());
        assert!(encode_trits(&[], 1).is_err());
    }

    #[test]
    fn decimal_examples() {
        let dec = |d: &[u8]| trits_to_decimal(&TritCode::new(d.to_vec()).unwrap()).0;
        assert_eq!(dec(&[0, 0, 0, 0]), 0);
        assert_eq!(dec(&[1, 1, 1, 1]), 40);
        assert_eq!(dec(&[2, 1, 0, 1]), 32);
    }

    #[test]
    fn quiet_code_is_geometric_sum() {
        for w in 1..=5 {
            let oracle: u64 = (0..2 * w as u32).map(|j| 3u64.pow(j)).sum();
            assert_eq!(quiet_code(w).0, oracle);
        }
    }

    #[test]
    fn exhaustive_round_trip_2w_4() {
        let mut seen = std::collections::HashSet::new();
        for v in 0..81u64 {
            let code = decimal_to_trits(PatternCode(v), 2).unwrap();
            assert_eq!(trits_to_decimal(&code).0, v);
            seen.insert(code);
        }
        assert_eq!(seen.len(), 81);
        assert!(decimal_to_trits(PatternCode(81), 2).is_err());
    }

    #[test]
    fn trit_code_validation() {
        assert!(TritCode::new(vec![0, 3]).is_err());
        assert!(TritCode::new(vec![0, 1, 2]).is_err());
        assert!(TritCode::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn fast_path_matches_trit_path(w in 1usize..5, t in 0u32..6, seed in proptest::collection::vec(0u32..20, 9)) {
            let window = &seed[..2 * w + 1];
            let code = encode_trits(window, t).unwrap();
            prop_assert_eq!(trits_to_decimal(&code), encode_pattern(window, t));
        }

        #[test]
        fn reversing_window_reverses_digits(w in 1usize..5, t in 0u32..6, seed in proptest::collection::vec(0u32..20, 9)) {
            let window = &seed[..2 * w + 1];
            let reversed: Vec<u32> = window.iter().rev().copied().collect();
            let mut digits = encode_trits(window, t).unwrap().digits().to_vec();
            digits.reverse();
            let rev = encode_trits(&reversed, t).unwrap();
            prop_assert_eq!(rev.digits(), &digits[..]);
        }

        #[test]
        fn shift_leaves_code_unchanged(t in 0u32..6, k in 0u32..1000, window in proptest::collection::vec(0u32..20, 5)) {
            let shifted: Vec<u32> = window.iter().map(|c| c + k).collect();
            prop_assert_eq!(encode_pattern(&window, t), encode_pattern(&shifted, t));
        }
    }

    #[test]
    fn quiet_code_is_palindrome() {
        for w in 1..5 {
            let d = decimal_to_trits(quiet_code(w), w).unwrap();
            let mut r = d.digits().to_vec();
            r.reverse();
            assert_eq!(d.digits(), &r[..]);
        }
    }
}
