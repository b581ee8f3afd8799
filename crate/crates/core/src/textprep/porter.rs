//! The Porter (1980) suffix-stripping stemmer.
//!
//! Implements the five steps as originally published. Within each rule list the
//! first suffix that matches wins; if its measure condition fails, no later rule
//! of the same step is tried. Words of one or two letters are returned
//! unchanged, as in the reference implementations.
//!
//! Only ASCII-alphabetic input is stemmed. Anything else is passed through.

/// Stem a single lowercase token.
pub fn porter_stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut word = token.as_bytes().to_vec();
    step1a(&mut word);
    step1b(&mut word);
    step1c(&mut word);
    step2(&mut word);
    step3(&mut word);
    step4(&mut word);
    step5a(&mut word);
    step5b(&mut word);
    // Only ASCII bytes were ever written.
    String::from_utf8(word).expect("porter stemmer produced non-ASCII output")
}

fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC)^m[V]`.
fn measure(stem: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..stem.len() {
        let vowel = !is_consonant(stem, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn contains_vowel(stem: &[u8]) -> bool {
    (0..stem.len()).any(|i| !is_consonant(stem, i))
}

fn ends_double_consonant(word: &[u8]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_consonant(word, n - 1)
}

/// `*o`: ends consonant-vowel-consonant, the last consonant not w, x or y.
fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

fn replace_suffix(word: &mut Vec<u8>, suffix_len: usize, replacement: &str) {
    word.truncate(word.len() - suffix_len);
    word.extend_from_slice(replacement.as_bytes());
}

/// Apply the first rule whose suffix matches, if the stem passes `min_measure`.
fn apply_rules(word: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    for &(suffix, replacement) in rules {
        if word.ends_with(suffix.as_bytes()) {
            let stem_len = word.len() - suffix.len();
            if measure(&word[..stem_len]) > min_measure {
                replace_suffix(word, suffix.len(), replacement);
            }
            return;
        }
    }
}

fn step1a(word: &mut Vec<u8>) {
    if word.ends_with(b"sses") || word.ends_with(b"ies") {
        word.truncate(word.len() - 2);
    } else if word.ends_with(b"ss") {
    } else if word.ends_with(b"s") {
        word.pop();
    }
}

fn step1b(word: &mut Vec<u8>) {
    if word.ends_with(b"eed") {
        if measure(&word[..word.len() - 3]) > 0 {
            word.pop();
        }
        return;
    }
    let stripped = [b"ed".as_slice(), b"ing".as_slice()]
        .iter()
        .find(|suffix| word.ends_with(suffix) && contains_vowel(&word[..word.len() - suffix.len()]))
        .map(|suffix| suffix.len());
    let Some(len) = stripped else { return };
    word.truncate(word.len() - len);

    if word.ends_with(b"at") || word.ends_with(b"bl") || word.ends_with(b"iz") {
        word.push(b'e');
    } else if ends_double_consonant(word) && !matches!(word.last(), Some(b'l' | b's' | b'z')) {
        word.pop();
    } else if measure(word) == 1 && ends_cvc(word) {
        word.push(b'e');
    }
}

fn step1c(word: &mut [u8]) {
    if word.ends_with(b"y") && contains_vowel(&word[..word.len() - 1]) {
        *word.last_mut().unwrap() = b'i';
    }
}

fn step2(word: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("tional", "tion"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("entli", "ent"),
        ("eli", "e"),
        ("ousli", "ous"),
        ("ization", "ize"),
        ("ation", "ate"),
        ("ator", "ate"),
        ("alism", "al"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("biliti", "ble"),
    ];
    apply_rules(word, RULES, 0);
}

fn step3(word: &mut Vec<u8>) {
    const RULES: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ful", ""),
        ("ness", ""),
    ];
    apply_rules(word, RULES, 0);
}

fn step4(word: &mut Vec<u8>) {
    const SUFFIXES: &[&str] = &[
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
        "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ];
    for &suffix in SUFFIXES {
        if word.ends_with(suffix.as_bytes()) {
            let stem = &word[..word.len() - suffix.len()];
            let ok = measure(stem) > 1
                && (suffix != "ion" || matches!(stem.last(), Some(b's' | b't')));
            if ok {
                word.truncate(stem.len());
            }
            return;
        }
    }
}

fn step5a(word: &mut Vec<u8>) {
    if word.ends_with(b"e") {
        let stem = &word[..word.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            word.pop();
        }
    }
}

fn step5b(word: &mut Vec<u8>) {
    if word.ends_with(b"l") && ends_double_consonant(word) && measure(word) > 1 {
        word.pop();
    }
}
