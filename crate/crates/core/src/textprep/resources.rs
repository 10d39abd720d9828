// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_LEMMAS: &str = include_str!("../../resources/lemma.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../../resources/stopwords.txt");
const BUNDLED_PLACES: &str = include_str!("../../resources/places.txt");
const BUNDLED_FIRSTNAMES: &str = include_str!("../../resources/firstnames.txt");

/// Maps inflected surface forms to a root form. Lookup is exact and
/// case-sensitive.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaDictionary {
    entries: HashMap<String, String>,
}

impl LemmaDictionary {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (k, v) in entries {
            if k.is_empty() {
                return Err(Error::invalid("lemma dictionary keys must be non-empty"));
            }
            map.insert(k, v);
        }
        Ok(LemmaDictionary { entries: map })
    }

    /// Parses `surface<TAB>root` lines. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::invalid(format!("lemma line {}: expected surface<TAB>root", n + 1)))?;
            entries.push((k.to_string(), v.to_string()));
        }
        Self::new(entries)
    }

    pub fn bundled() -> Self {
        Self::parse_tsv(BUNDLED_LEMMAS).expect("bundled lemma sample is well-formed")
    }

    pub fn lookup(&self, token: &str) -> Option<&str> {
        self.entries.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StopResources {
    pub stop_words: HashSet<String>,
    pub place_names: HashSet<String>,
    pub first_names: HashSet<String>,
}

impl StopResources {
    pub fn bundled() -> Self {
        StopResources {
            stop_words: word_list(BUNDLED_STOPWORDS),
            place_names: word_list(BUNDLED_PLACES),
            first_names: word_list(BUNDLED_FIRSTNAMES),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.stop_words.contains(token) || self.place_names.contains(token) || self.first_names.contains(token)
    }
}

fn word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Everything the preprocessing chain needs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Resources {
    pub lemmas: LemmaDictionary,
    pub stop: StopResources,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources {
            lemmas: LemmaDictionary::bundled(),
            stop: StopResources::bundled(),
        }
    }

    /// Loads `lemma.tsv`, `stopwords.txt`, `places.txt` and `firstnames.txt`
    /// from `dir`. Missing files are treated as empty.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let p = dir.join(name);
            match fs::read_to_string(&p) {
                Ok(s) => Ok(s),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(e) => Err(Error::io(p.display().to_string(), e)),
            }
        };
        Ok(Resources {
            lemmas: LemmaDictionary::parse_tsv(&read("lemma.tsv")?)?,
            stop: StopResources {
                stop_words: word_list(&read("stopwords.txt")?),
                place_names: word_list(&read("places.txt")?),
                first_names: word_list(&read("firstnames.txt")?),
            },
        })
    }
}
