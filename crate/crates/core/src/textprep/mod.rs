//! Text preprocessing: tokenization, stopword removal and Porter stemming.

mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use porter::porter_stem;

/// The bundled English stopword list.
pub const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Parse a stopword list: one word per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub stopwords: BTreeSet<String>,
    pub min_token_len: usize,
    pub drop_numeric: bool,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            stopwords: parse_stopwords(BUNDLED_STOPWORDS),
            min_token_len: 2,
            drop_numeric: true,
        }
    }
}

impl PrepConfig {
    pub fn with_stopwords_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = PrepConfig {
            stopwords: parse_stopwords(&text),
            ..PrepConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stopwords.is_empty() {
            return Err(Error::InvalidConfig("stopword list is empty".into()));
        }
        if let Some(w) = self.stopwords.iter().find(|w| w.to_lowercase() != **w) {
            return Err(Error::InvalidConfig(format!("stopword `{w}` is not lowercase")));
        }
        if self.min_token_len == 0 {
            return Err(Error::InvalidConfig("min_token_len must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the sorted stopword list, newline separated.
    pub fn stopwords_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.stopwords {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    fn keep_token(&self, token: &str) -> bool {
        token.chars().count() >= self.min_token_len
            && !(self.drop_numeric && token.chars().all(char::is_numeric))
    }

    /// Lowercase and split on any non-alphanumeric character.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && self.keep_token(t))
            .map(str::to_string)
            .collect()
    }

    pub fn remove_stopwords(&self, tokens: Vec<String>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }

    /// Full pipeline: tokenize, drop stopwords, stem.
    ///
    /// Stems are taken to their fixed point under [`porter_stem`] and filtered
    /// again, so that running the pipeline over its own joined output is a no-op.
    pub fn process(&self, text: &str) -> Vec<String> {
        self.remove_stopwords(self.tokenize(text))
            .into_iter()
            .map(|t| stem_fixed_point(&t))
            .filter(|t| self.keep_token(t) && !self.stopwords.contains(t))
            .collect()
    }
}

fn stem_fixed_point(token: &str) -> String {
    let mut current = porter_stem(token);
    loop {
        let next = porter_stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_splits_on_non_alphanumerics() {
        let cfg = PrepConfig::default();
        assert_eq!(
            cfg.tokenize("Fix NPE in parser-core!"),
            toks(&["fix", "npe", "in", "parser", "core"])
        );
        assert!(cfg.tokenize("").is_empty());
        assert!(cfg.tokenize("2016 404").is_empty());
    }

    #[test]
    fn numeric_tokens_kept_when_configured() {
        let cfg = PrepConfig {
            drop_numeric: false,
            ..PrepConfig::default()
        };
        assert_eq!(cfg.tokenize("2016 404"), toks(&["2016", "404"]));
    }

    #[test]
    fn short_tokens_dropped() {
        let cfg = PrepConfig::default();
        assert_eq!(cfg.tokenize("a b cd"), toks(&["cd"]));
    }

    #[test]
    fn stopword_removal() {
        let cfg = PrepConfig::default();
        assert_eq!(cfg.remove_stopwords(toks(&["the", "fix", "on", "it"])), toks(&["fix"]));
        assert!(cfg.remove_stopwords(vec![]).is_empty());
        assert_eq!(
            cfg.remove_stopwords(toks(&["parser", "lexer"])),
            toks(&["parser", "lexer"])
        );
    }

    #[test]
    fn bundled_list_is_valid() {
        let cfg = PrepConfig::default();
        cfg.validate().unwrap();
        assert!((150..=200).contains(&cfg.stopwords.len()));
        for w in ["the", "it", "and", "on"] {
            assert!(cfg.stopwords.contains(w));
        }
    }

    #[test]
    fn empty_stopword_list_rejected() {
        let cfg = PrepConfig {
            stopwords: BTreeSet::new(),
            ..PrepConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn stopword_file_comments_ignored() {
        let set = parse_stopwords("# header\nThe\n\n  foo \n#bar\n");
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec!["foo", "the"]);
    }

    #[test]
    fn stems_that_become_stopwords_are_dropped() {
        let cfg = PrepConfig {
            stopwords: parse_stopwords("fix"),
            ..PrepConfig::default()
        };
        assert!(cfg.process("fixing fixes").is_empty());
    }

    #[test]
    fn process_handles_non_idempotent_stems() {
        let cfg = PrepConfig::default();
        let once = cfg.process("agreed");
        assert_eq!(once, toks(&["agr"]));
        assert_eq!(cfg.process(&once.join(" ")), once);
    }
}
