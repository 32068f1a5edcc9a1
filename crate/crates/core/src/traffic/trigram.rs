use std::collections::BTreeSet;

/// Word trigrams: lowercase alphanumeric words, each padded with two
/// leading blanks and one trailing blank.
pub fn trigrams(s: &str) -> BTreeSet<[char; 3]> {
    let mut out = BTreeSet::new();
    for word in s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = "  ".chars().chain(word.chars().flat_map(char::to_lowercase)).chain([' ']).collect();
        for w in padded.windows(3) {
            out.insert([w[0], w[1], w[2]]);
        }
    }
    out
}

/// Jaccard index of the trigram sets; 0 when either side has none.
pub fn trigram_similarity(a: &str, b: &str) -> f64 {
    let ta = trigrams(a);
    let tb = trigrams(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let shared = ta.intersection(&tb).count();
    shared as f64 / (ta.len() + tb.len() - shared) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_trigrams() {
        let t = trigrams("Cat");
        let got: Vec<String> = t.iter().map(|g| g.iter().collect()).collect();
        assert_eq!(got, vec!["  c", " ca", "at ", "cat"]);
    }

    #[test]
    fn similarity_values() {
        assert_eq!(trigram_similarity("PL DE TEST", "pl de test"), 1.0);
        assert_eq!(trigram_similarity("", "x"), 0.0);
        assert_eq!(trigram_similarity("abc", "xyz"), 0.0);
        // "word" -> 5 trigrams, "words" -> 6, 4 shared
        assert!((trigram_similarity("word", "words") - 4.0 / 7.0).abs() < 1e-12);
    }
}
