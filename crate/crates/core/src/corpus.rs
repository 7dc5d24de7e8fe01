//! Bibliographic data model: papers, persons, target pairs and candidate
//! sets, plus the evaluation split and a planted synthetic generator.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::candidates::{
    find_candidates, name_variants, names_compatible, normalize_name, CandidateMode,
};
use crate::{math, seed, Error, Result};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
        #[cfg_attr(feature = "serde", serde(transparent))]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl core::fmt::Display for $name {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

id_type!(PaperId);
id_type!(PersonId);

/// The two attribute groups a token can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FieldTag {
    Coauthors,
    Content,
}

impl FieldTag {
    pub const ALL: [FieldTag; 2] = [FieldTag::Coauthors, FieldTag::Content];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldTag::Coauthors => "coauthors",
            FieldTag::Content => "content",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AuthorSlot {
    pub name: String,
    /// Affiliation; may be empty.
    pub org: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Paper {
    pub id: PaperId,
    pub title: String,
    #[cfg_attr(feature = "serde", serde(rename = "abstract"))]
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub venue: String,
    pub year: i64,
    pub authors: Vec<AuthorSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Person {
    pub id: PersonId,
    pub name: String,
    pub papers: Vec<PaperId>,
}

/// A paper plus the index of the author slot to disambiguate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetPair {
    pub paper: PaperId,
    pub author: usize,
}

impl core::fmt::Display for TargetPair {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}#{}", self.paper, self.author)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Gold {
    Person(PersonId),
    Nil,
    Unknown,
}

/// One disambiguation instance.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateSet {
    pub target: TargetPair,
    pub candidates: Vec<PersonId>,
    pub gold: Gold,
}

impl CandidateSet {
    pub fn gold_person(&self) -> Option<&PersonId> {
        match &self.gold {
            Gold::Person(p) => Some(p),
            _ => None,
        }
    }

    /// Checks the set-level invariants: distinct candidates and a gold person
    /// (if any) present among them.
    pub fn validate(&self) -> Result<()> {
        let distinct: BTreeSet<_> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err(Error::InvalidRecord {
                kind: "candidate set",
                id: self.target.to_string(),
                reason: "duplicate candidates".into(),
            });
        }
        if let Some(g) = self.gold_person() {
            if !distinct.contains(g) {
                return Err(Error::MissingGold(g.0.clone()));
            }
        }
        Ok(())
    }

    /// The NIL version of a positive sample: the right person removed.
    pub fn without_gold(&self) -> CandidateSet {
        let gold = self.gold_person();
        CandidateSet {
            target: self.target.clone(),
            candidates: self
                .candidates
                .iter()
                .filter(|c| Some(*c) != gold)
                .cloned()
                .collect(),
            gold: Gold::Nil,
        }
    }
}

/// Validated, immutable corpus with a variant index over person names.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: BTreeMap<PaperId, Paper>,
    persons: BTreeMap<PersonId, Person>,
    /// Every variant of every person name -> persons carrying it.
    name_index: BTreeMap<String, Vec<PersonId>>,
}

impl Corpus {
    pub fn new(papers: Vec<Paper>, persons: Vec<Person>) -> Result<Self> {
        let mut paper_map = BTreeMap::new();
        for p in papers {
            if p.authors.is_empty() {
                return Err(invalid("paper", &p.id.0, "no authors"));
            }
            if p.year < 0 {
                return Err(invalid("paper", &p.id.0, "negative year"));
            }
            for a in &p.authors {
                normalize_name(&a.name)
                    .map_err(|_| invalid("paper", &p.id.0, "author with empty name"))?;
            }
            if paper_map.contains_key(&p.id) {
                return Err(Error::DuplicateId {
                    kind: "paper",
                    id: p.id.0,
                });
            }
            paper_map.insert(p.id.clone(), p);
        }
        let mut person_map = BTreeMap::new();
        let mut name_index: BTreeMap<String, Vec<PersonId>> = BTreeMap::new();
        for c in persons {
            if c.papers.is_empty() {
                return Err(invalid("person", &c.id.0, "no papers"));
            }
            let mut seen = BTreeSet::new();
            for pid in &c.papers {
                if !paper_map.contains_key(pid) {
                    return Err(Error::DanglingPaper {
                        person: c.id.0.clone(),
                        paper: pid.0.clone(),
                    });
                }
                if !seen.insert(pid) {
                    return Err(invalid("person", &c.id.0, "paper listed twice"));
                }
            }
            let name = normalize_name(&c.name)?;
            if person_map.contains_key(&c.id) {
                return Err(Error::DuplicateId {
                    kind: "person",
                    id: c.id.0,
                });
            }
            for v in name_variants(&name) {
                name_index.entry(v.joined()).or_default().push(c.id.clone());
            }
            person_map.insert(c.id.clone(), c);
        }
        Ok(Corpus {
            papers: paper_map,
            persons: person_map,
            name_index,
        })
    }

    pub fn paper(&self, id: &PaperId) -> Result<&Paper> {
        self.papers
            .get(id)
            .ok_or_else(|| Error::UnknownPaper(id.0.clone()))
    }

    pub fn person(&self, id: &PersonId) -> Result<&Person> {
        self.persons
            .get(id)
            .ok_or_else(|| Error::UnknownPerson(id.0.clone()))
    }

    /// Papers in id order.
    pub fn papers(&self) -> impl Iterator<Item = &Paper> {
        self.papers.values()
    }

    /// Persons in id order.
    pub fn persons(&self) -> impl Iterator<Item = &Person> {
        self.persons.values()
    }

    pub fn num_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn num_persons(&self) -> usize {
        self.persons.len()
    }

    pub fn name_index(&self) -> &BTreeMap<String, Vec<PersonId>> {
        &self.name_index
    }

    pub fn persons_with_variant(&self, key: &str) -> &[PersonId] {
        self.name_index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn author_slot(&self, target: &TargetPair) -> Result<&AuthorSlot> {
        let paper = self.paper(&target.paper)?;
        paper
            .authors
            .get(target.author)
            .ok_or_else(|| Error::BadTarget {
                paper: target.paper.0.clone(),
                index: target.author,
            })
    }

    /// The author slot of `paper` that belongs to `person`: an exact
    /// normalized-name match first, then any variant-compatible name.
    pub fn slot_of_person(&self, person: &Person, paper: &Paper) -> Option<usize> {
        let name = normalize_name(&person.name).ok()?;
        let names: Vec<_> = paper
            .authors
            .iter()
            .map(|a| normalize_name(&a.name).ok())
            .collect();
        names
            .iter()
            .position(|n| n.as_ref() == Some(&name))
            .or_else(|| {
                names
                    .iter()
                    .position(|n| n.as_ref().is_some_and(|n| names_compatible(n, &name)))
            })
    }

    /// Same papers, persons restricted to the given profiles (persons absent
    /// from the map are dropped, empty profiles are dropped).
    pub fn with_profiles(&self, profiles: &BTreeMap<PersonId, Vec<PaperId>>) -> Result<Corpus> {
        let papers = self.papers.values().cloned().collect();
        let persons = self
            .persons
            .values()
            .filter_map(|c| {
                let papers = profiles.get(&c.id)?;
                (!papers.is_empty()).then(|| Person {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    papers: papers.clone(),
                })
            })
            .collect();
        Corpus::new(papers, persons)
    }

    /// Person ids in the same name group (mutually compatible names).
    pub fn same_name_persons(&self, person: &PersonId) -> Result<Vec<PersonId>> {
        let name = normalize_name(&self.person(person)?.name)?;
        let mut out = BTreeSet::new();
        for p in self.persons.values() {
            if &p.id != person && names_compatible(&normalize_name(&p.name)?, &name) {
                out.insert(p.id.clone());
            }
        }
        Ok(out.into_iter().collect())
    }
}

fn invalid(kind: &'static str, id: &str, reason: &str) -> Error {
    Error::InvalidRecord {
        kind,
        id: id.into(),
        reason: reason.into(),
    }
}

/// Outcome of the evaluation split.
#[derive(Debug, Clone)]
pub struct Split {
    /// Every person reduced to its profile (the earliest papers). Held-out
    /// papers stay in the paper table so targets resolve.
    pub profiles: Corpus,
    pub train: Vec<CandidateSet>,
    pub test: Vec<CandidateSet>,
    pub train_persons: Vec<PersonId>,
    pub test_persons: Vec<PersonId>,
    /// Persons with fewer than two papers, excluded from target generation.
    pub skipped_persons: usize,
    /// Held-out papers where the person's author slot could not be located.
    pub skipped_targets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub person_test_fraction: f64,
    pub paper_holdout_fraction: f64,
    pub seed: u64,
    pub mode: CandidateMode,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            person_test_fraction: 0.2,
            paper_holdout_fraction: 0.2,
            seed: 0,
            mode: CandidateMode::Variants,
        }
    }
}

/// Number of held-out papers for a person with `n` papers.
pub fn holdout_count(n: usize, fraction: f64) -> usize {
    // the small slack keeps 0.2 * 10 from rounding up to 3
    let k = math::ceil(fraction * n as f64 - 1e-9) as usize;
    k.clamp(1, n.saturating_sub(1))
}

/// Randomly pick test persons, then hold out each person's latest papers
/// (sorted by year, ties broken by paper id) as target pairs.
pub fn split_corpus(corpus: &Corpus, cfg: &SplitConfig) -> Result<Split> {
    for f in [cfg.person_test_fraction, cfg.paper_holdout_fraction] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("fraction {f} outside (0, 1)")));
        }
    }
    let mut ids: Vec<PersonId> = corpus.persons.keys().cloned().collect();
    let n_test = math::round(cfg.person_test_fraction * ids.len() as f64) as usize;
    let mut rng = seed::rng(cfg.seed);
    ids.shuffle(&mut rng);
    let test_set: BTreeSet<PersonId> = ids.iter().take(n_test).cloned().collect();

    let mut profiles = BTreeMap::new();
    let mut held: Vec<(PersonId, Vec<PaperId>)> = Vec::new();
    let mut skipped_persons = 0;
    for person in corpus.persons.values() {
        if person.papers.len() < 2 {
            skipped_persons += 1;
            profiles.insert(person.id.clone(), person.papers.clone());
            continue;
        }
        let mut papers: Vec<&Paper> = person
            .papers
            .iter()
            .map(|p| corpus.paper(p))
            .collect::<Result<_>>()?;
        papers.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.id.cmp(&b.id)));
        let k = holdout_count(papers.len(), cfg.paper_holdout_fraction);
        let cut = papers.len() - k;
        profiles.insert(
            person.id.clone(),
            papers[..cut].iter().map(|p| p.id.clone()).collect(),
        );
        held.push((
            person.id.clone(),
            papers[cut..].iter().map(|p| p.id.clone()).collect(),
        ));
    }
    let profile_corpus = corpus.with_profiles(&profiles)?;

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut skipped_targets = 0;
    for (pid, papers) in held {
        let person = corpus.person(&pid)?;
        for paper_id in papers {
            let paper = corpus.paper(&paper_id)?;
            let Some(slot) = corpus.slot_of_person(person, paper) else {
                skipped_targets += 1;
                continue;
            };
            let target = TargetPair {
                paper: paper_id,
                author: slot,
            };
            let mut set = find_candidates(&profile_corpus, &target, cfg.mode)?;
            if !set.candidates.contains(&pid) {
                // The gold person's name must be reachable for a positive sample.
                skipped_targets += 1;
                continue;
            }
            set.gold = Gold::Person(pid.clone());
            if test_set.contains(&pid) {
                test.push(set);
            } else {
                train.push(set);
            }
        }
    }
    let (test_persons, train_persons): (Vec<_>, Vec<_>) = corpus
        .persons
        .keys()
        .cloned()
        .partition(|p| test_set.contains(p));
    Ok(Split {
        profiles: profile_corpus,
        train,
        test,
        train_persons,
        test_persons,
        skipped_persons,
        skipped_targets,
    })
}

/// Knobs of the planted synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    /// Number of ambiguous names.
    pub names: usize,
    pub persons_per_name: usize,
    pub papers_per_person: usize,
    /// Private topic words per person.
    pub topic_vocab: usize,
    /// Words every person may use.
    pub shared_vocab: usize,
    /// Size of each person's coauthor pool.
    pub clique_size: usize,
    /// Probability that a coauthor slot is drawn from a same-name person's
    /// pool instead of one's own.
    pub coauthor_overlap: f64,
    pub coauthors_per_paper: usize,
    pub title_words: usize,
    pub abstract_words: usize,
    pub keywords_per_paper: usize,
    /// Probability a content word comes from the person's own topic.
    pub topic_share: f64,
    /// Probability the person's affiliation is recorded on a paper.
    pub org_rate: f64,
    /// Probability the person's name is written as an abbreviated variant.
    pub variant_rate: f64,
    pub first_year: i64,
    pub year_span: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            names: 10,
            persons_per_name: 4,
            papers_per_person: 25,
            topic_vocab: 30,
            shared_vocab: 200,
            clique_size: 8,
            coauthor_overlap: 0.1,
            coauthors_per_paper: 3,
            title_words: 8,
            abstract_words: 16,
            keywords_per_paper: 3,
            topic_share: 0.5,
            org_rate: 0.7,
            variant_rate: 0.2,
            first_year: 2000,
            year_span: 16,
        }
    }
}

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "bu", "da", "fe", "gi", "ho", "ju", "pa",
    "qi", "ro", "su", "wa",
];
const STOPS: [&str; 4] = ["the", "of", "for", "and"];

/// Deterministic pseudo-word for an index; `prefix` keeps namespaces apart.
fn synth_word(prefix: &str, mut i: usize, syllables: usize) -> String {
    let mut w = String::from(prefix);
    for _ in 0..syllables {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    w
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct SynthPerson {
    id: PersonId,
    name: (String, String),
    topic: Vec<String>,
    clique: Vec<String>,
    org: String,
    venues: Vec<String>,
}

/// Generate a planted corpus: each ambiguous name is shared by
/// `persons_per_name` persons with private topic words, private coauthor
/// pools and private affiliations.
pub fn gen_synthetic(cfg: &SynthConfig, seed: u64) -> Result<Corpus> {
    if cfg.topic_vocab == 0 || cfg.shared_vocab == 0 {
        return Err(Error::Config("vocabulary sizes must be positive".into()));
    }
    if cfg.papers_per_person == 0 || cfg.names == 0 || cfg.persons_per_name == 0 {
        return Err(Error::Config(
            "names, persons and papers must be positive".into(),
        ));
    }
    if cfg.coauthors_per_paper > 0 && cfg.clique_size == 0 {
        return Err(Error::Config("coauthors need a non-empty clique".into()));
    }
    for p in [
        cfg.coauthor_overlap,
        cfg.topic_share,
        cfg.org_rate,
        cfg.variant_rate,
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("probability {p} outside [0, 1]")));
        }
    }
    let mut rng = seed::rng(seed);
    let shared: Vec<String> = (0..cfg.shared_vocab)
        .map(|i| synth_word("", i, 3))
        .collect();
    let venue_pool: Vec<String> = (0..12)
        .map(|i| format!("Journal of {}", capitalize(&synth_word("ve", i, 2))))
        .collect();

    let mut groups: Vec<Vec<SynthPerson>> = Vec::new();
    let mut topic_cursor = 0;
    let mut clique_cursor = 0;
    let mut org_cursor = 0;
    for g in 0..cfg.names {
        // distinct first and last names per group keep variants from colliding
        let first = synth_word("an", g, 2);
        let last = synth_word("yo", g, 2);
        let mut members = Vec::new();
        for k in 0..cfg.persons_per_name {
            let topic = (0..cfg.topic_vocab)
                .map(|_| {
                    topic_cursor += 1;
                    synth_word("t", topic_cursor, 3)
                })
                .collect();
            let clique = (0..cfg.clique_size)
                .map(|_| {
                    clique_cursor += 1;
                    format!(
                        "{} {}",
                        capitalize(&synth_word("c", clique_cursor, 2)),
                        capitalize(&synth_word("e", clique_cursor / 7 + 3 * clique_cursor, 2))
                    )
                })
                .collect();
            org_cursor += 1;
            let org = format!(
                "{} Institute of {}",
                capitalize(&synth_word("or", org_cursor, 2)),
                capitalize(&synth_word("ga", org_cursor, 2))
            );
            let venues = venue_pool.choose_multiple(&mut rng, 3).cloned().collect();
            members.push(SynthPerson {
                id: PersonId(format!("per{g:03}-{k}")),
                name: (capitalize(&first), capitalize(&last)),
                topic,
                clique,
                org,
                venues,
            });
        }
        groups.push(members);
    }

    let mut papers = Vec::new();
    let mut persons = Vec::new();
    for members in &groups {
        for (k, me) in members.iter().enumerate() {
            let mut ids = Vec::new();
            for i in 0..cfg.papers_per_person {
                let id = PaperId(format!("{}-{i:03}", me.id));
                let draw_word = |rng: &mut seed::StageRng| {
                    if rng.gen_bool(cfg.topic_share) {
                        me.topic[rng.gen_range(0..me.topic.len())].clone()
                    } else {
                        shared[rng.gen_range(0..shared.len())].clone()
                    }
                };
                let sentence = |rng: &mut seed::StageRng, n: usize| {
                    let mut words: Vec<String> = Vec::with_capacity(n + 2);
                    for j in 0..n {
                        if j > 0 && rng.gen_bool(0.15) {
                            words.push(STOPS[rng.gen_range(0..STOPS.len())].into());
                        }
                        words.push(draw_word(rng));
                    }
                    words.join(" ")
                };
                let title = capitalize(&sentence(&mut rng, cfg.title_words));
                let abstract_text = sentence(&mut rng, cfg.abstract_words);
                let keywords = (0..cfg.keywords_per_paper)
                    .map(|_| me.topic[rng.gen_range(0..me.topic.len())].clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let venue = if rng.gen_bool(0.7) {
                    me.venues[rng.gen_range(0..me.venues.len())].clone()
                } else {
                    venue_pool[rng.gen_range(0..venue_pool.len())].clone()
                };
                let mut coauthors: BTreeSet<String> = BTreeSet::new();
                for _ in 0..cfg.coauthors_per_paper {
                    let pool = if members.len() > 1 && rng.gen_bool(cfg.coauthor_overlap) {
                        let mut other = rng.gen_range(0..members.len() - 1);
                        if other >= k {
                            other += 1;
                        }
                        &members[other].clique
                    } else {
                        &me.clique
                    };
                    coauthors.insert(pool[rng.gen_range(0..pool.len())].clone());
                }
                let mut authors: Vec<AuthorSlot> = coauthors
                    .into_iter()
                    .map(|name| AuthorSlot {
                        name,
                        org: String::new(),
                    })
                    .collect();
                authors.shuffle(&mut rng);
                let display = if rng.gen_bool(cfg.variant_rate) {
                    let initial: String = me.name.0.chars().take(1).collect();
                    format!("{initial}. {}", me.name.1)
                } else {
                    format!("{} {}", me.name.0, me.name.1)
                };
                let org = if rng.gen_bool(cfg.org_rate) {
                    me.org.clone()
                } else {
                    String::new()
                };
                let slot = rng.gen_range(0..=authors.len());
                authors.insert(slot, AuthorSlot { name: display, org });
                let year = cfg.first_year + rng.gen_range(0..cfg.year_span.max(1));
                papers.push(Paper {
                    id: id.clone(),
                    title,
                    abstract_text,
                    keywords,
                    venue,
                    year,
                    authors,
                });
                ids.push(id);
            }
            persons.push(Person {
                id: me.id.clone(),
                name: format!("{} {}", me.name.0, me.name.1),
                papers: ids,
            });
        }
    }
    Corpus::new(papers, persons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn paper(id: &str, year: i64, authors: &[&str]) -> Paper {
        Paper {
            id: id.into(),
            title: "A title".into(),
            abstract_text: String::new(),
            keywords: vec![],
            venue: "Venue".into(),
            year,
            authors: authors
                .iter()
                .map(|a| AuthorSlot {
                    name: (*a).into(),
                    org: String::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn rejects_dangling_reference() {
        let papers = vec![paper("p1", 2000, &["Jing Zhang"])];
        let persons = vec![Person {
            id: "a".into(),
            name: "Jing Zhang".into(),
            papers: vec!["p1".into(), "px".into()],
        }];
        assert_eq!(
            Corpus::new(papers, persons).unwrap_err(),
            Error::DanglingPaper {
                person: "a".into(),
                paper: "px".into()
            }
        );
    }

    #[test]
    fn rejects_duplicates_and_empty_authors() {
        let dup = vec![paper("p1", 2000, &["A B"]), paper("p1", 2001, &["A B"])];
        assert!(matches!(
            Corpus::new(dup, vec![]),
            Err(Error::DuplicateId { kind: "paper", .. })
        ));
        let empty = vec![paper("p1", 2000, &[])];
        assert!(Corpus::new(empty, vec![]).is_err());
        let neg = vec![paper("p1", -1, &["A B"])];
        assert!(Corpus::new(neg, vec![]).is_err());
    }

    #[test]
    fn holdout_counts() {
        assert_eq!(holdout_count(10, 0.2), 2);
        assert_eq!(holdout_count(25, 0.2), 5);
        assert_eq!(holdout_count(2, 0.2), 1);
        assert_eq!(holdout_count(11, 0.2), 3);
    }

    #[test]
    fn split_holds_out_latest_years() {
        let papers: Vec<Paper> = (0..10)
            .map(|i| paper(&format!("q{i}"), 2001 + i, &["Jing Zhang", "Wei Chen"]))
            .collect();
        let ids = papers.iter().rev().map(|p| p.id.clone()).collect();
        let persons = vec![Person {
            id: "a".into(),
            name: "Jing Zhang".into(),
            papers: ids,
        }];
        let corpus = Corpus::new(papers, persons).unwrap();
        let split = split_corpus(
            &corpus,
            &SplitConfig {
                person_test_fraction: 0.5,
                ..SplitConfig::default()
            },
        )
        .unwrap();
        let targets: Vec<_> = split
            .train
            .iter()
            .chain(&split.test)
            .map(|s| corpus.paper(&s.target.paper).unwrap().year)
            .collect();
        assert_eq!(targets, vec![2009, 2010]);
        let profile = &split.profiles.person(&"a".into()).unwrap().papers;
        assert_eq!(profile.len(), 8);
        assert!(profile
            .iter()
            .all(|p| split.profiles.paper(p).unwrap().year <= 2008));
    }

    #[test]
    fn year_ties_break_by_id() {
        let papers = vec![
            paper("b", 2000, &["Jing Zhang"]),
            paper("a", 2000, &["Jing Zhang"]),
        ];
        let persons = vec![Person {
            id: "x".into(),
            name: "Jing Zhang".into(),
            papers: vec!["b".into(), "a".into()],
        }];
        let corpus = Corpus::new(papers, persons).unwrap();
        let split = split_corpus(&corpus, &SplitConfig::default()).unwrap();
        let all: Vec<_> = split.train.iter().chain(&split.test).collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].target.paper, PaperId::from("b"));
    }

    #[test]
    fn synthetic_counts() {
        let cfg = SynthConfig {
            names: 2,
            persons_per_name: 2,
            papers_per_person: 5,
            ..SynthConfig::default()
        };
        let c = gen_synthetic(&cfg, 3).unwrap();
        assert_eq!(c.num_papers(), 20);
        assert_eq!(c.num_persons(), 4);
        assert_eq!(c, gen_synthetic(&cfg, 3).unwrap());
        assert_ne!(c, gen_synthetic(&cfg, 4).unwrap());
    }

    #[test]
    fn synthetic_config_errors() {
        let zero_vocab = SynthConfig {
            topic_vocab: 0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            gen_synthetic(&zero_vocab, 0),
            Err(Error::Config(_))
        ));
        let zero_papers = SynthConfig {
            papers_per_person: 0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            gen_synthetic(&zero_papers, 0),
            Err(Error::Config(_))
        ));
    }
}
