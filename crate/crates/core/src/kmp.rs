//! Knuth-Morris-Pratt search over arbitrary symbol slices.

/// Longest proper border of every pattern prefix.
fn failure_table<T: Eq>(pattern: &[T]) -> Vec<usize> {
    let mut fail = vec![0; pattern.len()];
    let mut k = 0;
    for i in 1..pattern.len() {
        while k > 0 && pattern[i] != pattern[k] {
            k = fail[k - 1];
        }
        if pattern[i] == pattern[k] {
            k += 1;
        }
        fail[i] = k;
    }
    fail
}

pub struct Matcher<'p, T> {
    pattern: &'p [T],
    fail: Vec<usize>,
}

impl<'p, T: Eq> Matcher<'p, T> {
    pub fn new(pattern: &'p [T]) -> Self {
        Self {
            pattern,
            fail: failure_table(pattern),
        }
    }

    /// Start offsets of every (possibly overlapping) occurrence.
    pub fn find_iter<'a>(&'a self, text: &'a [T]) -> impl Iterator<Item = usize> + 'a {
        let m = self.pattern.len();
        let mut k = 0;
        text.iter().enumerate().filter_map(move |(i, symbol)| {
            if m == 0 {
                return None;
            }
            while k > 0 && *symbol != self.pattern[k] {
                k = self.fail[k - 1];
            }
            if *symbol == self.pattern[k] {
                k += 1;
            }
            if k == m {
                k = self.fail[k - 1];
                Some(i + 1 - m)
            } else {
                None
            }
        })
    }

    pub fn find_first(&self, text: &[T]) -> Option<usize> {
        self.find_iter(text).next()
    }
}

/// First occurrence of a nonempty `pattern` in `text`.
pub fn find_first<T: Eq>(text: &[T], pattern: &[T]) -> Option<usize> {
    Matcher::new(pattern).find_first(text)
}

pub fn find_all<T: Eq>(text: &[T], pattern: &[T]) -> Vec<usize> {
    Matcher::new(pattern).find_iter(text).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_occurrence() {
        let text = b"xxabcxxabc";
        assert_eq!(find_first(text, b"abc"), Some(2));
        assert_eq!(find_all(text, b"abc"), vec![2, 7]);
        assert_eq!(find_first(text, b"abd"), None);
    }

    #[test]
    fn overlapping_matches() {
        assert_eq!(find_all(b"aaaa", b"aa"), vec![0, 1, 2]);
        assert_eq!(find_all(b"abababa", b"aba"), vec![0, 2, 4]);
    }

    #[test]
    fn empty_pattern_matches_nothing() {
        assert_eq!(find_first(b"abc", b""), None);
        assert_eq!(find_first(b"", b"a"), None);
    }

    #[test]
    fn agrees_with_windows() {
        let text: Vec<u8> = (0..500u32).map(|i| ((i * 31 + i / 7) % 3) as u8).collect();
        for len in 1..6 {
            for start in (0..text.len() - len).step_by(17) {
                let pat = &text[start..start + len];
                let naive: Vec<usize> = text
                    .windows(len)
                    .enumerate()
                    .filter(|(_, w)| *w == pat)
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(find_all(&text, pat), naive);
            }
        }
    }
}
