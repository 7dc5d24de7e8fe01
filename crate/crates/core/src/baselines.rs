//! Feature-engineered baselines: 22 hand-made match features scored by
//! gradient-boosted trees, and a score threshold for NIL decisions.
//!
//! Feature definitions, with `p` the target paper, `a` the target author
//! slot and `c` the candidate person (profile without `p`):
//!
//! | #  | feature |
//! |----|---------|
//! | 1  | number of `c`'s papers |
//! | 2  | distinct coauthor names of `a` in `p` |
//! | 3  | distinct coauthor names of `c` |
//! | 4  | names shared by 2 and 3 |
//! | 5  | 4 / 2 |
//! | 6  | 4 / 3 |
//! | 7  | papers of `c` whose affiliation equals `a`'s (normalized string) |
//! | 8  | 7 / papers of `c` with a non-empty affiliation |
//! | 9  | cosine of affiliation word counts |
//! | 10 | Jaccard of affiliation word sets |
//! | 11 | distinct venues of `c` |
//! | 12 | papers of `c` in `p`'s venue |
//! | 13 | 12 / 1 |
//! | 14 | cosine of venue word counts |
//! | 15 | Jaccard of venue word sets |
//! | 16 | cosine of title word counts |
//! | 17 | Jaccard of title word sets |
//! | 18 | distinct keywords of `c` |
//! | 19 | occurrences of `p`'s keywords among `c`'s keywords |
//! | 20 | 19 / all keyword occurrences of `c` |
//! | 21 | cosine of keyword counts |
//! | 22 | Jaccard of keyword sets |
//!
//! Keywords are compared as whole normalized phrases; every other text
//! attribute as stop-word-filtered words. Ratios with a zero denominator
//! are 0.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::candidates::{person_coauthors, target_coauthors};
use crate::corpus::{Corpus, Paper, PersonId, TargetPair};
use crate::text::Tokenizer;
use crate::{math, Error, Result};

pub const NUM_FEATURES: usize = 22;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "papers",
    "target_coauthors",
    "person_coauthors",
    "shared_coauthors",
    "shared_over_target",
    "shared_over_person",
    "org_frequency",
    "org_ratio",
    "org_cosine",
    "org_jaccard",
    "venues",
    "venue_frequency",
    "venue_ratio",
    "venue_cosine",
    "venue_jaccard",
    "title_cosine",
    "title_jaccard",
    "keywords",
    "keyword_frequency",
    "keyword_ratio",
    "keyword_cosine",
    "keyword_jaccard",
];

pub type FeatureVector = [f64; NUM_FEATURES];

fn counts<I: IntoIterator<Item = String>>(items: I) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for t in items {
        *m.entry(t).or_insert(0.0) += 1.0;
    }
    m
}

/// Cosine of two count vectors; 0 if either is empty.
pub fn tf_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = math::sqrt(a.values().map(|x| x * x).sum());
    let nb = math::sqrt(b.values().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).min(1.0)
    }
}

/// |A ∩ B| / |A ∪ B|; 0 for two empty sets.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

fn keys(m: &BTreeMap<String, f64>) -> BTreeSet<&String> {
    m.keys().collect()
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn phrase(tok: &Tokenizer, s: &str) -> String {
    tok.words(s).join(" ")
}

/// All 22 features for one (target pair, candidate) pair.
pub fn extract_features(
    corpus: &Corpus,
    tok: &Tokenizer,
    target: &TargetPair,
    person: &PersonId,
) -> Result<FeatureVector> {
    let slot = corpus.author_slot(target)?;
    let p = corpus.paper(&target.paper)?;
    let c = corpus.person(person)?;
    let papers: Vec<&Paper> = c
        .papers
        .iter()
        .filter(|id| **id != target.paper)
        .map(|id| corpus.paper(id))
        .collect::<Result<_>>()?;
    let own_orgs: Vec<&str> = papers
        .iter()
        .map(|q| {
            corpus
                .slot_of_person(c, q)
                .map(|i| q.authors[i].org.as_str())
                .unwrap_or("")
        })
        .collect();

    let mut f = [0.0; NUM_FEATURES];
    let n = papers.len() as f64;
    f[0] = n;

    let mine = target_coauthors(corpus, target)?;
    let theirs = person_coauthors(corpus, person, Some(&target.paper))?;
    let shared = mine.intersection(&theirs).count() as f64;
    f[1] = mine.len() as f64;
    f[2] = theirs.len() as f64;
    f[3] = shared;
    f[4] = div(shared, f[1]);
    f[5] = div(shared, f[2]);

    let org = phrase(tok, &slot.org);
    let org_norm: Vec<String> = own_orgs.iter().map(|o| phrase(tok, o)).collect();
    if !org.is_empty() {
        f[6] = org_norm.iter().filter(|o| **o == org).count() as f64;
    }
    f[7] = div(
        f[6],
        org_norm.iter().filter(|o| !o.is_empty()).count() as f64,
    );
    let org_a = counts(tok.words(&slot.org));
    let org_c = counts(own_orgs.iter().flat_map(|o| tok.words(o)));
    f[8] = tf_cosine(&org_a, &org_c);
    f[9] = jaccard(&keys(&org_a), &keys(&org_c));

    let venue = phrase(tok, &p.venue);
    let venues: Vec<String> = papers.iter().map(|q| phrase(tok, &q.venue)).collect();
    f[10] = venues
        .iter()
        .filter(|v| !v.is_empty())
        .collect::<BTreeSet<_>>()
        .len() as f64;
    if !venue.is_empty() {
        f[11] = venues.iter().filter(|v| **v == venue).count() as f64;
    }
    f[12] = div(f[11], n);
    let ven_a = counts(tok.words(&p.venue));
    let ven_c = counts(papers.iter().flat_map(|q| tok.words(&q.venue)));
    f[13] = tf_cosine(&ven_a, &ven_c);
    f[14] = jaccard(&keys(&ven_a), &keys(&ven_c));

    let tit_a = counts(tok.words(&p.title));
    let tit_c = counts(papers.iter().flat_map(|q| tok.words(&q.title)));
    f[15] = tf_cosine(&tit_a, &tit_c);
    f[16] = jaccard(&keys(&tit_a), &keys(&tit_c));

    let kw_a = counts(
        p.keywords
            .iter()
            .map(|k| phrase(tok, k))
            .filter(|k| !k.is_empty()),
    );
    let kw_c = counts(
        papers
            .iter()
            .flat_map(|q| q.keywords.iter().map(|k| phrase(tok, k)))
            .filter(|k| !k.is_empty()),
    );
    f[17] = kw_c.len() as f64;
    f[18] = kw_a.keys().filter_map(|k| kw_c.get(k)).sum();
    f[19] = div(f[18], kw_c.values().sum());
    f[20] = tf_cosine(&kw_a, &kw_c);
    f[21] = jaccard(&keys(&kw_a), &keys(&kw_c));
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BoostConfig {
    pub rounds: usize,
    pub depth: usize,
    pub shrinkage: f64,
    /// Training is deterministic; kept so every stage carries a seed.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 100,
            depth: 3,
            shrinkage: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Node {
    Leaf(f64),
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in a flat list, root first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoostedModel {
    pub prior: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
}

impl BoostedModel {
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.prior + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        math::sigmoid(self.log_odds(x))
    }
}

struct Fit<'a> {
    xs: &'a [Vec<f64>],
    resid: Vec<f64>,
    hess: Vec<f64>,
    depth: usize,
}

impl Fit<'_> {
    fn leaf(&self, idx: &[usize]) -> f64 {
        let g: f64 = idx.iter().map(|&i| self.resid[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        g / h.max(1e-12)
    }

    /// Best split by squared-error reduction of the residuals.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let total: f64 = idx.iter().map(|&i| self.resid[i]).sum();
        let n = idx.len() as f64;
        let base = total * total / n;
        let mut best: Option<(usize, f64, f64)> = None;
        let width = self.xs[idx[0]].len();
        let mut sorted = idx.to_vec();
        for f in 0..width {
            sorted.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]).then(a.cmp(&b)));
            let mut left = 0.0;
            for k in 0..sorted.len() - 1 {
                left += self.resid[sorted[k]];
                let (lo, hi) = (self.xs[sorted[k]][f], self.xs[sorted[k + 1]][f]);
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let right = total - left;
                let gain = left * left / nl + right * right / (n - nl) - base;
                if gain > 1e-12 && best.map_or(true, |b| gain > b.2) {
                    best = Some((f, lo + (hi - lo) / 2.0, gain));
                }
            }
        }
        best
    }

    fn grow(&self, idx: &[usize], depth: usize, nodes: &mut Vec<Node>) -> usize {
        let me = nodes.len();
        nodes.push(Node::Leaf(self.leaf(idx)));
        if depth >= self.depth || idx.len() < 2 {
            return me;
        }
        let Some((feature, threshold, _)) = self.best_split(idx) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.xs[i][feature] <= threshold);
        let left = self.grow(&l, depth + 1, nodes);
        let right = self.grow(&r, depth + 1, nodes);
        nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

/// Gradient boosting on logistic loss: each tree fits the residuals
/// `y - p` by squared error and its leaves take a Newton step.
pub fn train_boosted(xs: &[Vec<f64>], ys: &[bool], cfg: &BoostConfig) -> Result<BoostedModel> {
    let pos = ys.iter().filter(|y| **y).count();
    if pos == 0 || pos == ys.len() {
        return Err(Error::SingleClass);
    }
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            expected: ys.len(),
            found: xs.len(),
        });
    }
    let rate = pos as f64 / ys.len() as f64;
    let mut model = BoostedModel {
        prior: math::ln(rate / (1.0 - rate)),
        shrinkage: cfg.shrinkage,
        trees: Vec::with_capacity(cfg.rounds),
    };
    let mut f = vec![model.prior; xs.len()];
    let all: Vec<usize> = (0..xs.len()).collect();
    for _ in 0..cfg.rounds {
        let p: Vec<f64> = f.iter().map(|v| math::sigmoid(*v)).collect();
        let fit = Fit {
            xs,
            resid: ys
                .iter()
                .zip(&p)
                .map(|(&y, p)| y as u8 as f64 - p)
                .collect(),
            hess: p.iter().map(|p| p * (1.0 - p)).collect(),
            depth: cfg.depth,
        };
        let mut nodes = Vec::new();
        fit.grow(&all, 0, &mut nodes);
        let tree = Tree { nodes };
        for (fi, x) in f.iter_mut().zip(xs) {
            *fi += cfg.shrinkage * tree.predict(x);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

/// Accept the top candidate iff its score is at least `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdFit {
    pub threshold: f64,
    pub accuracy: f64,
}

pub fn threshold_accuracy(data: &[(f64, bool)], threshold: f64) -> f64 {
    let right = data.iter().filter(|(s, y)| (*s >= threshold) == *y).count();
    right as f64 / data.len().max(1) as f64
}

/// Candidate thresholds: one below the minimum, the midpoints between
/// consecutive distinct scores, one above the maximum; ascending.
pub fn threshold_candidates(data: &[(f64, bool)]) -> Vec<f64> {
    let mut s: Vec<f64> = data.iter().map(|d| d.0).collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let mut out = Vec::with_capacity(s.len() + 1);
    if let (Some(lo), Some(hi)) = (s.first(), s.last()) {
        out.push(lo - 1.0);
        out.extend(s.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        out.push(hi + 1.0);
    }
    out
}

/// Validation-accuracy-maximizing threshold; ties go to the smallest.
pub fn threshold_baseline(data: &[(f64, bool)]) -> Result<ThresholdFit> {
    if data.is_empty() {
        return Err(Error::Config("threshold needs validation scores".into()));
    }
    if data.iter().any(|d| !d.0.is_finite()) {
        return Err(Error::NonFinite("validation score".into()));
    }
    let mut best = ThresholdFit {
        threshold: f64::NAN,
        accuracy: -1.0,
    };
    for t in threshold_candidates(data) {
        let acc = threshold_accuracy(data, t);
        if acc > best.accuracy {
            best = ThresholdFit {
                threshold: t,
                accuracy: acc,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_threshold_is_midpoint() {
        let fit = threshold_baseline(&[(0.9, true), (0.1, false)]).unwrap();
        assert_eq!(fit.threshold, 0.5);
        assert_eq!(fit.accuracy, 1.0);
    }

    #[test]
    fn one_label_thresholds() {
        let all_right = threshold_baseline(&[(0.3, true), (0.7, true)]).unwrap();
        assert!(all_right.threshold < 0.3);
        let all_wrong = threshold_baseline(&[(0.3, false), (0.7, false)]).unwrap();
        assert!(all_wrong.threshold > 0.7);
    }

    #[test]
    fn zero_rounds_predict_prior() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let ys = [false, true, true, true];
        let m = train_boosted(
            &xs,
            &ys,
            &BoostConfig {
                rounds: 0,
                ..BoostConfig::default()
            },
        )
        .unwrap();
        assert!((m.probability(&[7.0]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(
            train_boosted(&[vec![1.0]], &[true], &BoostConfig::default()).unwrap_err(),
            Error::SingleClass
        );
    }

    #[test]
    fn jaccard_and_cosine_edges() {
        let a: BTreeSet<u8> = [1, 2].into_iter().collect();
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&BTreeSet::<u8>::new(), &BTreeSet::new()), 0.0);
        let e = BTreeMap::new();
        assert_eq!(tf_cosine(&e, &counts([String::from("x")])), 0.0);
    }
}
