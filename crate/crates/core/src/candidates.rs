//! Candidate generation: name normalization, name variants, the Jaro-Winkler
//! fallback and the same-coauthor ratio used to stratify difficulty.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::{max, min};

use crate::corpus::{CandidateSet, Corpus, Gold, PersonId, TargetPair};
use crate::{Error, Result};

/// Lowercase name parts with punctuation removed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalizedName(Vec<String>);

impl NormalizedName {
    pub fn parts(&self) -> &[String] {
        &self.0
    }

    /// Parts joined by single spaces; the key used by the name index and by
    /// coauthor tokens.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }

    fn rotated(&self) -> Self {
        let mut parts = self.0.clone();
        if let Some(last) = parts.pop() {
            parts.insert(0, last);
        }
        NormalizedName(parts)
    }

    fn initialed(&self) -> Self {
        let n = self.0.len();
        let parts = self
            .0
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i + 1 < n {
                    p.chars().next().map(String::from).unwrap_or_default()
                } else {
                    p.clone()
                }
            })
            .collect();
        NormalizedName(parts)
    }
}

/// Lowercase, drop every character that is neither alphanumeric nor
/// whitespace (this covers '-' and '.'), split on whitespace.
pub fn normalize_name(raw: &str) -> Result<NormalizedName> {
    let cleaned: String = raw
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    let parts: Vec<String> = cleaned.split_whitespace().map(String::from).collect();
    if parts.is_empty() {
        return Err(Error::EmptyName(raw.into()));
    }
    Ok(NormalizedName(parts))
}

/// The name itself, the last part moved to the front, all-but-last reduced
/// to initials, and the initials form of the rotation.
///
/// "jing zhang" gives {jing zhang, zhang jing, j zhang, z jing}. Returned
/// sorted and deduplicated.
pub fn name_variants(name: &NormalizedName) -> Vec<NormalizedName> {
    let mut set = BTreeSet::new();
    set.insert(name.clone());
    if name.0.len() >= 2 {
        let rotated = name.rotated();
        set.insert(name.initialed());
        set.insert(rotated.initialed());
        set.insert(rotated);
    }
    set.into_iter().collect()
}

/// True when either name is one of the other's variants.
pub fn names_compatible(a: &NormalizedName, b: &NormalizedName) -> bool {
    a == b || name_variants(a).contains(b) || name_variants(b).contains(a)
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let radius = (max(a.len(), b.len()) / 2).saturating_sub(1);
    let mut a_hit = alloc::vec![false; a.len()];
    let mut b_hit = alloc::vec![false; b.len()];
    let mut matches = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(radius);
        let hi = min(i + radius + 1, b.len());
        for j in lo..hi {
            if !b_hit[j] && b[j] == ca {
                a_hit[i] = true;
                b_hit[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let a_seq = a.iter().zip(&a_hit).filter(|(_, &h)| h).map(|(c, _)| c);
    let b_seq = b.iter().zip(&b_hit).filter(|(_, &h)| h).map(|(c, _)| c);
    let mismatched = a_seq.zip(b_seq).filter(|(x, y)| x != y).count();
    let m = matches as f64;
    let t = mismatched as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro-Winkler with prefix scale 0.1, prefix capped at 4 characters and the
/// usual boost threshold of 0.7.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let sim = jaro(a, b);
    if sim <= 0.7 {
        return sim;
    }
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count() as f64;
    sim + 0.1 * prefix * (1.0 - sim)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CandidateMode {
    /// Persons whose name is a variant of the target name (or vice versa).
    Variants,
    /// Persons whose Jaro-Winkler similarity to the target name exceeds the
    /// threshold (0.5 for corpora without usable variants).
    JaroWinkler { threshold: f64 },
}

impl Default for CandidateMode {
    fn default() -> Self {
        CandidateMode::Variants
    }
}

/// Candidate persons for a target pair, ordered by person id. Gold is left
/// [`Gold::Unknown`]; the caller fills it in when labels exist.
pub fn find_candidates(
    corpus: &Corpus,
    target: &TargetPair,
    mode: CandidateMode,
) -> Result<CandidateSet> {
    let slot = corpus.author_slot(target)?;
    let name = normalize_name(&slot.name)?;
    let mut found: BTreeSet<PersonId> = BTreeSet::new();
    match mode {
        CandidateMode::Variants => {
            // Persons whose own name is one of our variants.
            for variant in name_variants(&name) {
                let key = variant.joined();
                for pid in corpus.persons_with_variant(&key) {
                    let person = corpus.person(pid)?;
                    if normalize_name(&person.name)?.joined() == key {
                        found.insert(pid.clone());
                    }
                }
            }
            // Persons that list our name among their variants.
            for pid in corpus.persons_with_variant(&name.joined()) {
                found.insert(pid.clone());
            }
        }
        CandidateMode::JaroWinkler { threshold } => {
            let key = name.joined();
            for person in corpus.persons() {
                let other = normalize_name(&person.name)?.joined();
                if jaro_winkler(&other, &key) > threshold {
                    found.insert(person.id.clone());
                }
            }
        }
    }
    Ok(CandidateSet {
        target: target.clone(),
        candidates: found.into_iter().collect(),
        gold: Gold::Unknown,
    })
}

/// Normalized coauthor names of the target author (every other slot).
pub fn target_coauthors(corpus: &Corpus, target: &TargetPair) -> Result<BTreeSet<String>> {
    let paper = corpus.paper(&target.paper)?;
    corpus.author_slot(target)?;
    Ok(paper
        .authors
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target.author)
        .filter_map(|(_, a)| normalize_name(&a.name).ok().map(|n| n.joined()))
        .collect())
}

/// Distinct normalized coauthor names over a person's papers, excluding the
/// person's own slot. `exclude` removes one paper (the target) from the
/// profile.
pub fn person_coauthors(
    corpus: &Corpus,
    person: &PersonId,
    exclude: Option<&crate::corpus::PaperId>,
) -> Result<BTreeSet<String>> {
    let person = corpus.person(person)?;
    let mut names = BTreeSet::new();
    for pid in &person.papers {
        if Some(pid) == exclude {
            continue;
        }
        let paper = corpus.paper(pid)?;
        let own = corpus.slot_of_person(person, paper);
        for (i, a) in paper.authors.iter().enumerate() {
            if Some(i) == own {
                continue;
            }
            if let Ok(n) = normalize_name(&a.name) {
                names.insert(n.joined());
            }
        }
    }
    Ok(names)
}

/// S_c for every candidate: how many distinct coauthor names of the target
/// author also appear among the candidate's coauthors (exact match on the
/// normalized full name).
pub fn coauthor_overlaps(corpus: &Corpus, set: &CandidateSet) -> Result<Vec<usize>> {
    let mine = target_coauthors(corpus, &set.target)?;
    set.candidates
        .iter()
        .map(|c| {
            let theirs = person_coauthors(corpus, c, Some(&set.target.paper))?;
            Ok(mine.intersection(&theirs).count())
        })
        .collect()
}

/// Outcome of the gap computation before the degenerate-denominator rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoauthorGap {
    Ratio(f64),
    /// Every candidate has the same overlap count.
    Flat,
}

/// (max - second) / (max - min) over overlap counts, where "second" is the
/// second-largest value counting duplicates.
pub fn coauthor_gap(counts: &[usize]) -> Result<CoauthorGap> {
    if counts.len() < 2 {
        return Err(Error::UndefinedRatio(counts.len()));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let (top, second, bottom) = (sorted[0], sorted[1], sorted[sorted.len() - 1]);
    if top == bottom {
        return Ok(CoauthorGap::Flat);
    }
    Ok(CoauthorGap::Ratio(
        (top - second) as f64 / (top - bottom) as f64,
    ))
}

/// Same-coauthor ratio from raw counts; a flat list yields 0.
pub fn ratio_from_counts(counts: &[usize]) -> Result<f64> {
    Ok(match coauthor_gap(counts)? {
        CoauthorGap::Ratio(r) => r,
        CoauthorGap::Flat => 0.0,
    })
}

pub fn same_coauthor_ratio(corpus: &Corpus, set: &CandidateSet) -> Result<f64> {
    if set.candidates.len() < 2 {
        return Err(Error::UndefinedRatio(set.candidates.len()));
    }
    ratio_from_counts(&coauthor_overlaps(corpus, set)?)
}
