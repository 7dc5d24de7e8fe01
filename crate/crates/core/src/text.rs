//! Tokenization of papers into the two fields.
//!
//! A complete author name is one coauthor token. Every other attribute
//! (title, abstract, keywords, venue, affiliation) is split into lowercase
//! words with punctuation treated as a separator and stop words removed.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::candidates::normalize_name;
use crate::corpus::{FieldTag, Paper};

const STOP_WORDS: &str = include_str!("../data/stopwords_en.txt");

pub const MAX_NAMES: usize = 100;
pub const MAX_WORDS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub surface: String,
    pub tag: FieldTag,
}

/// Token lists of one paper, already capped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PaperTokens {
    pub coauthors: Vec<String>,
    pub content: Vec<String>,
}

impl PaperTokens {
    pub fn field(&self, tag: FieldTag) -> &[String] {
        match tag {
            FieldTag::Coauthors => &self.coauthors,
            FieldTag::Content => &self.content,
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        let names = self.coauthors.iter().map(|s| Token {
            surface: s.clone(),
            tag: FieldTag::Coauthors,
        });
        let words = self.content.iter().map(|s| Token {
            surface: s.clone(),
            tag: FieldTag::Content,
        });
        names.chain(words)
    }
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    stop_words: BTreeSet<String>,
    pub stem: bool,
    pub max_names: usize,
    pub max_words: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(false)
    }
}

impl Tokenizer {
    pub fn new(stem: bool) -> Self {
        let stop_words = STOP_WORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        Tokenizer {
            stop_words,
            stem,
            max_names: MAX_NAMES,
            max_words: MAX_WORDS,
        }
    }

    pub fn is_stop_word(&self, w: &str) -> bool {
        self.stop_words.contains(w)
    }

    /// Lowercase words of free text, stop words removed.
    pub fn words(&self, text: &str) -> Vec<String> {
        let lowered: String = text
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .flat_map(char::to_lowercase)
            .collect();
        lowered
            .split_whitespace()
            .filter(|w| !self.is_stop_word(w))
            .map(|w| if self.stem { stem(w) } else { String::from(w) })
            .collect()
    }

    /// Tokenize a paper. With a target slot, the coauthor field holds every
    /// other author and the content field includes that slot's affiliation.
    /// Without one, all authors and all affiliations are used (the form the
    /// embedding pre-training consumes).
    pub fn paper(&self, paper: &Paper, target: Option<usize>) -> PaperTokens {
        let mut coauthors: Vec<String> = paper
            .authors
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != target)
            .filter_map(|(_, a)| normalize_name(&a.name).ok().map(|n| n.joined()))
            .collect();
        coauthors.truncate(self.max_names);

        let mut content = self.words(&paper.title);
        content.extend(self.words(&paper.abstract_text));
        for k in &paper.keywords {
            content.extend(self.words(k));
        }
        content.extend(self.words(&paper.venue));
        match target {
            Some(i) => {
                if let Some(a) = paper.authors.get(i) {
                    content.extend(self.words(&a.org));
                }
            }
            None => {
                for a in &paper.authors {
                    content.extend(self.words(&a.org));
                }
            }
        }
        content.truncate(self.max_words);
        PaperTokens { coauthors, content }
    }
}

/// Light English suffix stripping (plural, -ing, -ed). Only active when the
/// tokenizer is built with stemming on.
pub fn stem(word: &str) -> String {
    let w = word;
    let n = w.len();
    let out = if n > 4 && w.ends_with("sses") {
        &w[..n - 2]
    } else if n > 4 && w.ends_with("ies") {
        &w[..n - 2]
    } else if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        &w[..n - 1]
    } else if n > 5 && w.ends_with("ing") {
        &w[..n - 3]
    } else if n > 4 && w.ends_with("ed") {
        &w[..n - 2]
    } else {
        w
    };
    String::from(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AuthorSlot;
    use alloc::vec;

    fn sample() -> Paper {
        Paper {
            id: "p".into(),
            title: "Deep Learning for the Web".into(),
            abstract_text: String::new(),
            keywords: vec![],
            venue: String::new(),
            year: 2020,
            authors: vec![
                AuthorSlot {
                    name: "Jing Zhang".into(),
                    org: "Tsinghua University".into(),
                },
                AuthorSlot {
                    name: "Wei Chen".into(),
                    org: "Other Org".into(),
                },
                AuthorSlot {
                    name: "J.-P. Martin".into(),
                    org: String::new(),
                },
            ],
        }
    }

    #[test]
    fn target_excluded_from_coauthors() {
        let t = Tokenizer::default();
        let toks = t.paper(&sample(), Some(0));
        assert_eq!(toks.coauthors, vec!["wei chen", "jp martin"]);
        assert_eq!(
            toks.content,
            vec!["deep", "learning", "web", "tsinghua", "university"]
        );
    }

    #[test]
    fn stop_words_removed() {
        let t = Tokenizer::default();
        assert_eq!(
            t.words("Deep Learning for the Web"),
            vec!["deep", "learning", "web"]
        );
    }

    #[test]
    fn content_capped_in_order() {
        let mut p = sample();
        p.title = (0..600)
            .map(|i| alloc::format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ");
        let toks = Tokenizer::default().paper(&p, Some(0));
        assert_eq!(toks.content.len(), 500);
        assert_eq!(toks.content[0], "w0");
        assert_eq!(toks.content[499], "w499");
    }

    #[test]
    fn untargeted_uses_all_authors() {
        let toks = Tokenizer::default().paper(&sample(), None);
        assert_eq!(toks.coauthors.len(), 3);
        assert!(toks.content.contains(&String::from("org")));
    }

    #[test]
    fn stemming_is_opt_in() {
        let on = Tokenizer::new(true);
        assert_eq!(on.words("networks learning"), vec!["network", "learn"]);
        assert_eq!(Tokenizer::default().words("networks"), vec!["networks"]);
    }
}
