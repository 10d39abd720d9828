// SPDX-License-Identifier: MIT OR Apache-2.0

//! CISTEM stemmer for German (Weissweiler & Fraser, 2017), case-insensitive
//! mode: the trailing-`t` rule applies regardless of the input's initial case.

/// Stems one token. Empty input yields empty output.
pub fn stem(token: &str) -> String {
    if token.is_empty() {
        return String::new();
    }
    let mut word: Vec<char> = Vec::with_capacity(token.len() + 2);
    for c in token.to_lowercase().chars() {
        match c {
            'ü' => word.push('u'),
            'ö' => word.push('o'),
            'ä' => word.push('a'),
            'ß' => {
                word.push('s');
                word.push('s');
            }
            _ => word.push(c),
        }
    }
    if word.len() >= 6 && word[0] == 'g' && word[1] == 'e' {
        word.drain(..2);
    }

    let mut word = encode(&word);

    while word.len() > 3 {
        let n = word.len();
        if n > 5 {
            if word[n - 2] == 'e' && matches!(word[n - 1], 'm' | 'r') {
                word.truncate(n - 2);
                continue;
            }
            if word[n - 2] == 'n' && word[n - 1] == 'd' {
                word.truncate(n - 2);
                continue;
            }
        }
        if matches!(word[n - 1], 't' | 'e' | 's' | 'n') {
            word.truncate(n - 1);
        } else {
            break;
        }
    }

    decode(&word)
}

/// Substitutes `sch`, `ei`, `ie` by single placeholder characters and marks
/// the second letter of each doubled pair with `*`.
fn encode(word: &[char]) -> Vec<char> {
    let word = replace_seq(word, &['s', 'c', 'h'], '$');
    let word = replace_seq(&word, &['e', 'i'], '%');
    let word = replace_seq(&word, &['i', 'e'], '&');
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == word[i + 1] {
            out.push(word[i]);
            out.push('*');
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

fn decode(word: &[char]) -> String {
    let mut undoubled = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i + 1] == '*' {
            undoubled.push(word[i]);
            undoubled.push(word[i]);
            i += 2;
        } else {
            undoubled.push(word[i]);
            i += 1;
        }
    }
    let mut out = String::with_capacity(undoubled.len() + 4);
    for c in undoubled {
        match c {
            '%' => out.push_str("ei"),
            '&' => out.push_str("ie"),
            '$' => out.push_str("sch"),
            _ => out.push(c),
        }
    }
    out
}

fn replace_seq(word: &[char], pat: &[char], with: char) -> Vec<char> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if word[i..].starts_with(pat) {
            out.push(with);
            i += pat.len();
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}
