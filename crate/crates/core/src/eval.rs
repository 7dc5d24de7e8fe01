//! Ranking and decision metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::candidates::CoauthorGap;
use crate::corpus::{Gold, PersonId};
use crate::decider::{predict, DeciderParams};
use crate::matcher::RankedInstance;
use crate::{Error, Result};

fn gold_rank(ranking: &[PersonId], gold: &PersonId) -> Result<usize> {
    ranking
        .iter()
        .position(|p| p == gold)
        .ok_or_else(|| Error::MissingGold(String::from(gold.as_str())))
}

/// Fraction of lists whose gold person sits at zero-based index `< k`.
pub fn hr_at_k(lists: &[(Vec<PersonId>, PersonId)], k: usize) -> Result<f64> {
    if lists.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (ranking, gold) in lists {
        if gold_rank(ranking, gold)? < k {
            hits += 1;
        }
    }
    Ok(hits as f64 / lists.len() as f64)
}

/// Mean reciprocal (one-based) rank of the gold person.
pub fn mrr(lists: &[(Vec<PersonId>, PersonId)]) -> Result<f64> {
    if lists.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (ranking, gold) in lists {
        total += 1.0 / (gold_rank(ranking, gold)? + 1) as f64;
    }
    Ok(total / lists.len() as f64)
}

/// One assignment: the truth, the top-ranked candidate and the decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub gold: Gold,
    pub top: Option<PersonId>,
    pub accept: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

/// * tp: gold person, ranked first, accepted.
/// * fn: gold person, rejected.
/// * tn: NIL, rejected.
/// * fp: NIL accepted, or gold person not ranked first but accepted.
pub fn decision_confusion(records: &[DecisionRecord]) -> Confusion {
    let mut c = Confusion::default();
    for r in records {
        match &r.gold {
            Gold::Person(g) => match (r.accept, r.top.as_ref() == Some(g)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, _) => c.fn_ += 1,
            },
            Gold::Nil | Gold::Unknown => {
                if r.accept {
                    c.fp += 1
                } else {
                    c.tn += 1
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionScores {
    /// Population `c* = c+`.
    pub positive: Prf,
    /// Population `c* = NIL`.
    pub nil: Prf,
    /// Set when some denominator was zero and the value defaulted to 0.
    pub degenerate: bool,
}

impl DecisionScores {
    pub fn mean_f1(&self) -> f64 {
        (self.positive.f1 + self.nil.f1) / 2.0
    }
}

fn ratio(num: usize, den: usize, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64, degenerate: &mut bool) -> f64 {
    if p + r == 0.0 {
        *degenerate = true;
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn pr_f1(c: &Confusion) -> DecisionScores {
    let mut deg = false;
    let pp = ratio(c.tp, c.tp + c.fp, &mut deg);
    let pr = ratio(c.tp, c.tp + c.fn_, &mut deg);
    let np = ratio(c.tn, c.tn + c.fn_, &mut deg);
    let nr = ratio(c.tn, c.tn + c.fp, &mut deg);
    DecisionScores {
        positive: Prf {
            precision: pp,
            recall: pr,
            f1: f1(pp, pr, &mut deg),
        },
        nil: Prf {
            precision: np,
            recall: nr,
            f1: f1(np, nr, &mut deg),
        },
        degenerate: deg,
    }
}

/// HR@1 over one group of instances; `hr1` is `None` when empty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bucket {
    pub label: String,
    pub count: usize,
    pub hits: usize,
    pub hr1: Option<f64>,
}

impl Bucket {
    fn new(label: String) -> Self {
        Bucket {
            label,
            count: 0,
            hits: 0,
            hr1: None,
        }
    }

    fn add(&mut self, hit: bool) {
        self.count += 1;
        self.hits += hit as usize;
        self.hr1 = Some(self.hits as f64 / self.count as f64);
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Strata {
    /// `bins` equal-width buckets over [0, 1]: the first is closed
    /// `[0, w]`, the rest `(lo, hi]`.
    pub bins: Vec<Bucket>,
    /// Ratio at or above the split.
    pub easy: Bucket,
    pub hard: Bucket,
    /// Fewer than two candidates, or all overlap counts equal.
    pub degenerate: Bucket,
}

/// Bin index of a ratio in [0, 1].
pub fn bin_of(ratio: f64, bins: usize) -> usize {
    let scaled = ratio * bins as f64;
    let mut i = crate::math::ceil(scaled) as usize;
    // guard against 0.3 * 10 = 3.0000000000000004 style noise
    if i > 0 && (scaled - (i - 1) as f64).abs() < 1e-9 {
        i -= 1;
    }
    i.saturating_sub(1).min(bins - 1)
}

/// Buckets `(gap, top-1 hit)` pairs; `None` gaps are degenerate.
pub fn stratified_report(items: &[(Option<CoauthorGap>, bool)], bins: usize, split: f64) -> Strata {
    let w = 1.0 / bins as f64;
    let mut out = Strata {
        bins: (0..bins)
            .map(|i| {
                let (lo, hi) = (i as f64 * w, (i + 1) as f64 * w);
                let open = if i == 0 { '[' } else { '(' };
                Bucket::new(format!("{open}{lo:.1}, {hi:.1}]"))
            })
            .collect(),
        easy: Bucket::new(format!("easy (>= {split})")),
        hard: Bucket::new(format!("hard (< {split})")),
        degenerate: Bucket::new(String::from("degenerate")),
    };
    for (gap, hit) in items {
        match gap {
            Some(CoauthorGap::Ratio(r)) => {
                out.bins[bin_of(*r, bins)].add(*hit);
                if *r >= split {
                    out.easy.add(*hit)
                } else {
                    out.hard.add(*hit)
                }
            }
            _ => out.degenerate.add(*hit),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub positives: usize,
    pub nils: usize,
    pub hr1: f64,
    pub hr3: f64,
    pub hr5: f64,
    pub mrr: f64,
    pub confusion: Confusion,
    pub scores: DecisionScores,
    pub strata: Strata,
}

/// Ranks are taken as given; decisions come from `decider` on each top
/// candidate. `gaps` runs parallel to `positives` and is bucketed into
/// `bins` equal bins plus the easy/hard split at `easy_split`.
pub fn evaluate(
    positives: &[RankedInstance],
    nils: &[RankedInstance],
    gaps: &[Option<CoauthorGap>],
    decider: &DeciderParams,
    bins: usize,
    easy_split: f64,
) -> Result<EvalReport> {
    let records = positives
        .iter()
        .chain(nils)
        .map(|r| decision_record(r, decider))
        .collect::<Result<Vec<_>>>()?;
    report_from_records(positives, nils.len(), &records, gaps, bins, easy_split)
}

/// Like [`evaluate`] with the decisions already made; `records` covers
/// the positives first, then the NIL samples.
pub fn report_from_records(
    positives: &[RankedInstance],
    nils: usize,
    records: &[DecisionRecord],
    gaps: &[Option<CoauthorGap>],
    bins: usize,
    easy_split: f64,
) -> Result<EvalReport> {
    if bins == 0 {
        return Err(Error::Config("need at least one ratio bin".into()));
    }
    let lists: Vec<(Vec<PersonId>, PersonId)> = positives
        .iter()
        .map(|r| {
            let gold = r
                .set
                .gold_person()
                .ok_or_else(|| Error::Config(format!("{} has no gold person", r.set.target)))?;
            Ok((r.ids(), gold.clone()))
        })
        .collect::<Result<_>>()?;
    let confusion = decision_confusion(records);
    let items: Vec<(Option<CoauthorGap>, bool)> = gaps
        .iter()
        .zip(&lists)
        .map(|(g, (ranking, gold))| (*g, ranking.first() == Some(gold)))
        .collect();
    Ok(EvalReport {
        positives: positives.len(),
        nils,
        hr1: hr_at_k(&lists, 1)?,
        hr3: hr_at_k(&lists, 3)?,
        hr5: hr_at_k(&lists, 5)?,
        mrr: mrr(&lists)?,
        confusion,
        scores: pr_f1(&confusion),
        strata: stratified_report(&items, bins, easy_split),
    })
}

pub fn decision_record(r: &RankedInstance, decider: &DeciderParams) -> Result<DecisionRecord> {
    let top = r.top();
    let accept = match top {
        Some(t) => predict(&t.phi, decider)?.0,
        None => false,
    };
    Ok(DecisionRecord {
        gold: r.set.gold.clone(),
        top: top.map(|t| t.person.clone()),
        accept,
    })
}
