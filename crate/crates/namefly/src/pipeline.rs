//! The offline pipeline, one function per stage. Every stage reads its
//! inputs from and writes its outputs to the run directory, so a stage run
//! on its own behaves exactly like the same stage inside a full run.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use namefly_core::baselines::{
    extract_features, threshold_accuracy, threshold_baseline, train_boosted, BoostedModel,
    ThresholdFit,
};
use namefly_core::candidates::{coauthor_gap, coauthor_overlaps, find_candidates, CoauthorGap};
use namefly_core::corpus::{
    gen_synthetic, split_corpus, CandidateSet, Corpus, FieldTag, Gold, Split, TargetPair,
};
use namefly_core::decider::{
    build_decision_dataset, predict, train_decider, DeciderParams, DecisionInstance,
};
use namefly_core::embeddings::{train_skipgram_docs, EmbeddingTable};
use namefly_core::eval::{
    decision_confusion, evaluate as eval_report, hr_at_k, mrr, pr_f1, Confusion, DecisionRecord,
    DecisionScores, EvalReport,
};
use namefly_core::joint::{joint_train, RoundRecord};
use namefly_core::matcher::{
    sample_triplets, train_matcher, EncodedInstance, Encoder, MatcherParams, RankedInstance,
    Triplet, TripletSet,
};
use namefly_core::seed;
use namefly_core::text::Tokenizer;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::{stage, RunConfig};
use crate::error::{AppError, Result};
use crate::formats::{self, FeatureRow};
use crate::par::par_map;
use crate::report;

/// A run directory plus its resolved configuration.
#[derive(Debug, Clone)]
pub struct Run {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

pub const CORPUS: &str = "corpus.json";
pub const EMBED_MANIFEST: &str = "embed.manifest";
pub const EMBED_BIN: &str = "embed.bin";
pub const TRIPLETS: &str = "triplets.jsonl";
pub const MATCHER: &str = "matcher.ckpt";
pub const MATCHER_PRE: &str = "matcher.pre.ckpt";
pub const DECISION: &str = "decision.jsonl";
pub const DECIDER: &str = "decider.ckpt";
pub const DECIDER_PRE: &str = "decider.pre.ckpt";
pub const HISTORY: &str = "history.jsonl";
pub const REPORT: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_PRE: &str = "report.pre.json";
pub const FEATURES: &str = "features.csv";
pub const FEATURES_TEST: &str = "features.test.csv";
pub const BASELINE: &str = "baseline.json";
pub const RUN_CONFIG: &str = "run_config.json";
pub const TRAIN_LOG: &str = "train_log.json";

impl Run {
    pub fn new(cfg: &RunConfig, out: &Path) -> Self {
        Run {
            cfg: cfg.resolved(),
            out: out.to_path_buf(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.cfg.corpus.clone().unwrap_or_else(|| self.path(CORPUS))
    }

    pub fn write_config(&self) -> Result<()> {
        formats::write_json(&self.path(RUN_CONFIG), &self.cfg)
    }

    pub fn tokenizer(&self) -> Tokenizer {
        self.cfg.tokenizer.build()
    }

    fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() {
            return Err(AppError::data(format!(
                "missing input {} (run the stage that produces it first)",
                p.display()
            )));
        }
        Ok(p)
    }
}

/// Disambiguation samples derived from the split.
#[derive(Debug, Clone)]
pub struct Samples {
    /// Training targets (gold known) that feed triplet sampling.
    pub triplet_sources: Vec<CandidateSet>,
    /// Decider and joint-training samples: positives and NIL samples.
    pub train: Vec<CandidateSet>,
    /// Validation positives followed by their NIL versions.
    pub validation: Vec<CandidateSet>,
    pub test_positive: Vec<CandidateSet>,
    /// Test positives with the right person removed.
    pub test_nil: Vec<CandidateSet>,
}

pub struct Data {
    pub corpus: Corpus,
    pub split: Split,
    pub samples: Samples,
    pub tokenizer: Tokenizer,
}

fn take_fraction(items: &mut Vec<CandidateSet>, fraction: f64) -> Vec<CandidateSet> {
    let n = (fraction * items.len() as f64).round() as usize;
    let rest = items.split_off(n.min(items.len()));
    std::mem::replace(items, rest)
}

fn by_target(mut v: Vec<CandidateSet>) -> Vec<CandidateSet> {
    v.sort_by(|a, b| a.target.cmp(&b.target));
    v
}

pub fn make_samples(split: &Split, cfg: &RunConfig) -> Samples {
    let mut rng = seed::rng(cfg.stage_seed(stage::SAMPLES));
    let mut train = by_target(split.train.clone());
    train.shuffle(&mut rng);
    let validation = by_target(take_fraction(&mut train, cfg.split.validation_fraction));
    let mut rest = train;
    let triplet_sources = by_target(rest.clone());
    let nil = by_target(take_fraction(&mut rest, cfg.split.nil_fraction));
    let mut samples = by_target(rest);
    samples.extend(nil.iter().map(CandidateSet::without_gold));
    let mut val = validation.clone();
    val.extend(validation.iter().map(CandidateSet::without_gold));
    let test_positive = by_target(split.test.clone());
    let test_nil = test_positive
        .iter()
        .map(CandidateSet::without_gold)
        .collect();
    Samples {
        triplet_sources,
        train: samples,
        validation: val,
        test_positive,
        test_nil,
    }
}

pub fn load_data(run: &Run) -> Result<Data> {
    let corpus = formats::load_corpus(&run.corpus_path())?;
    let split = split_corpus(&corpus, &run.cfg.split_config())?;
    let samples = make_samples(&split, &run.cfg);
    Ok(Data {
        corpus,
        split,
        samples,
        tokenizer: run.tokenizer(),
    })
}

impl Data {
    pub fn encoder<'a>(&'a self, table: &'a EmbeddingTable, run: &Run) -> Encoder<'a> {
        let mut e = Encoder::new(&self.split.profiles, table, &self.tokenizer);
        e.max_papers = run.cfg.tokenizer.max_papers;
        e
    }

    fn test_papers(&self) -> BTreeSet<&namefly_core::corpus::PaperId> {
        self.samples
            .test_positive
            .iter()
            .map(|s| &s.target.paper)
            .collect()
    }
}

fn encode_all(encoder: &Encoder<'_>, sets: &[CandidateSet]) -> Result<Vec<EncodedInstance>> {
    par_map(sets, |s| EncodedInstance::encode(encoder, s))
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .map_err(AppError::from)
}

fn rank_all(theta: &MatcherParams, data: &[EncodedInstance]) -> Result<Vec<RankedInstance>> {
    par_map(data, |x| x.rank(theta))
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .map_err(AppError::from)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    #[serde(flatten)]
    pub values: serde_json::Map<String, serde_json::Value>,
}

fn summary(stage: &str, values: serde_json::Value) -> StageSummary {
    StageSummary {
        stage: stage.into(),
        values: match values {
            serde_json::Value::Object(m) => m,
            _ => Default::default(),
        },
    }
}

/// Per-stage training curves, keyed by stage name.
fn log_training(run: &Run, summary: &StageSummary) -> Result<()> {
    let path = run.path(TRAIN_LOG);
    let mut log: serde_json::Map<String, serde_json::Value> = if path.exists() {
        formats::read_json(&path)?
    } else {
        Default::default()
    };
    log.insert(
        summary.stage.clone(),
        serde_json::Value::Object(summary.values.clone()),
    );
    formats::write_json(&path, &log)
}

pub fn gen_synth(run: &Run) -> Result<StageSummary> {
    let corpus = gen_synthetic(&run.cfg.synth, run.cfg.stage_seed(stage::SYNTH))?;
    let path = run.corpus_path();
    formats::save_corpus(&corpus, &path)?;
    run.write_config()?;
    Ok(summary(
        "gen-synth",
        serde_json::json!({
            "papers": corpus.num_papers(),
            "persons": corpus.num_persons(),
            "path": path.display().to_string(),
        }),
    ))
}

/// Skip-gram pre-training on every paper except the test targets.
pub fn train_embed(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let held = data.test_papers();
    let papers: Vec<_> = data
        .corpus
        .papers()
        .filter(|p| !held.contains(&p.id))
        .collect();
    let mut blocks = Vec::new();
    let mut losses = serde_json::Map::new();
    for tag in FieldTag::ALL {
        let docs: Vec<Vec<String>> = papers
            .iter()
            .map(|p| data.tokenizer.paper(p, None).field(tag).to_vec())
            .collect();
        let mut cfg = run.cfg.embed.clone();
        cfg.seed = seed::derive(run.cfg.embed.seed, tag.as_str());
        let r = train_skipgram_docs(&docs, tag, &cfg)?;
        losses.insert(tag.as_str().into(), serde_json::json!(r.epoch_losses));
        blocks.push(r.block);
    }
    let content = blocks.pop().unwrap();
    let coauthors = blocks.pop().unwrap();
    let table = EmbeddingTable::new(coauthors, content)?;
    formats::save_embeddings(&table, &run.path(EMBED_MANIFEST), &run.path(EMBED_BIN))?;
    run.write_config()?;
    Ok(summary(
        "train-embed",
        serde_json::json!({
            "documents": papers.len(),
            "vocab_coauthors": table.coauthors.vocab.len(),
            "vocab_content": table.content.vocab.len(),
            "epoch_losses": losses,
        }),
    ))
}

pub fn load_table(run: &Run) -> Result<EmbeddingTable> {
    formats::load_embeddings(&run.require(EMBED_MANIFEST)?, &run.require(EMBED_BIN)?)
}

pub fn sample_triplets_stage(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let (triplets, skipped) = sample_triplets(
        &data.samples.triplet_sources,
        run.cfg.triplets.negatives_per_target,
        run.cfg.stage_seed(stage::TRIPLETS),
    );
    formats::write_jsonl(&run.path(TRIPLETS), &triplets)?;
    run.write_config()?;
    Ok(summary(
        "sample-triplets",
        serde_json::json!({
            "targets": data.samples.triplet_sources.len(),
            "triplets": triplets.len(),
            "skipped": skipped,
        }),
    ))
}

pub fn train_match(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let table = load_table(run)?;
    let triplets: Vec<Triplet> = formats::read_jsonl(&run.require(TRIPLETS)?)?;
    let encoder = data.encoder(&table, run);
    let set = TripletSet::encode(&encoder, &triplets)?;
    let init = MatcherParams::new(
        &run.cfg.matcher,
        &table,
        run.cfg.stage_seed(stage::MATCHER_INIT),
    )?;
    let out = train_matcher(&set, init, &run.cfg.matcher_train)?;
    formats::save_matcher(&out.params, &run.path(MATCHER))?;
    run.write_config()?;
    let s = summary(
        "train-match",
        serde_json::json!({
            "variant": out.params.variant.as_str(),
            "triplets": set.len(),
            "epoch_losses": out.epoch_losses,
        }),
    );
    log_training(run, &s)?;
    Ok(s)
}

pub fn load_matcher_checked(run: &Run, name: &str) -> Result<MatcherParams> {
    let m = formats::load_matcher(&run.require(name)?)?;
    if m.variant != run.cfg.matcher.variant {
        return Err(AppError::data(format!(
            "shape mismatch: checkpoint {} holds variant {} (φ width {}), configuration asks for {} (φ width {})",
            name,
            m.variant.as_str(),
            m.phi_width(),
            run.cfg.matcher.variant.as_str(),
            run.cfg.matcher.variant.phi_width(m.kernels.len())
        )));
    }
    Ok(m)
}

pub fn build_decision(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let table = load_table(run)?;
    let theta = load_matcher_checked(run, MATCHER)?;
    let encoder = data.encoder(&table, run);
    let encoded = encode_all(&encoder, &data.samples.train)?;
    let ranked = rank_all(&theta, &encoded)?;
    let dataset = build_decision_dataset(&ranked);
    formats::write_jsonl(&run.path(DECISION), &dataset.instances)?;
    run.write_config()?;
    let positives = dataset.instances.iter().filter(|x| x.label).count();
    Ok(summary(
        "build-decision",
        serde_json::json!({
            "instances": dataset.instances.len(),
            "positives": positives,
            "negatives": dataset.instances.len() - positives,
            "warnings": dataset.warnings,
        }),
    ))
}

pub fn train_decide(run: &Run) -> Result<StageSummary> {
    let data: Vec<DecisionInstance> = formats::read_jsonl(&run.require(DECISION)?)?;
    let width = data.first().map_or(0, |x| x.phi.len());
    let init = DeciderParams::new(
        &run.cfg.decider,
        width,
        run.cfg.stage_seed(stage::DECIDER_INIT),
    );
    let out = train_decider(&data, init, &run.cfg.decider_train)?;
    formats::save_decider(&out.params, &run.path(DECIDER))?;
    run.write_config()?;
    let s = summary(
        "train-decide",
        serde_json::json!({
            "instances": data.len(),
            "final_loss": out.epoch_losses.last(),
            "accuracy": namefly_core::decider::accuracy(&out.params, &data)?,
        }),
    );
    let mut logged = s.clone();
    logged
        .values
        .insert("epoch_losses".into(), serde_json::json!(out.epoch_losses));
    log_training(run, &logged)?;
    Ok(s)
}

pub fn joint_finetune(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let table = load_table(run)?;
    let theta = load_matcher_checked(run, MATCHER)?;
    let decider = formats::load_decider(&run.require(DECIDER)?)?;
    formats::copy_checkpoint(&run.path(MATCHER), &run.path(MATCHER_PRE))?;
    formats::copy_checkpoint(&run.path(DECIDER), &run.path(DECIDER_PRE))?;
    let encoder = data.encoder(&table, run);
    let train = encode_all(&encoder, &data.samples.train)?;
    let validation = encode_all(&encoder, &data.samples.validation)?;
    let out = joint_train(&train, &validation, theta, decider, &run.cfg.joint)?;
    formats::write_jsonl::<RoundRecord>(&run.path(HISTORY), &out.history)?;
    formats::save_matcher(&out.matcher, &run.path(MATCHER))?;
    formats::save_decider(&out.decider, &run.path(DECIDER))?;
    run.write_config()?;
    Ok(summary(
        "joint-finetune",
        serde_json::json!({
            "rounds": out.history.len(),
            "initial_validation": {
                "hr1": out.initial.hr1,
                "f1_pos": out.initial.f1_pos,
                "f1_nil": out.initial.f1_nil,
            },
            "history": out.history,
        }),
    ))
}

/// Test-set evaluation of one matcher/decider pair.
pub fn evaluate_pair(
    run: &Run,
    data: &Data,
    table: &EmbeddingTable,
    theta: &MatcherParams,
    decider: &DeciderParams,
) -> Result<EvalReport> {
    let encoder = data.encoder(table, run);
    let pos = rank_all(theta, &encode_all(&encoder, &data.samples.test_positive)?)?;
    let nil = rank_all(theta, &encode_all(&encoder, &data.samples.test_nil)?)?;
    let gaps = test_gaps(data)?;
    Ok(eval_report(
        &pos,
        &nil,
        &gaps,
        decider,
        run.cfg.eval.bins,
        run.cfg.eval.easy_split,
    )?)
}

fn test_gaps(data: &Data) -> Result<Vec<Option<CoauthorGap>>> {
    data.samples
        .test_positive
        .iter()
        .map(|s| {
            let counts = coauthor_overlaps(&data.split.profiles, s)?;
            Ok(coauthor_gap(&counts).ok())
        })
        .collect()
}

pub fn evaluate(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let table = load_table(run)?;
    let theta = load_matcher_checked(run, MATCHER)?;
    let decider = formats::load_decider(&run.require(DECIDER)?)?;
    let rep = evaluate_pair(run, &data, &table, &theta, &decider)?;
    formats::write_json(&run.path(REPORT), &rep)?;
    std::fs::write(run.path(REPORT_TXT), report::text(&rep))?;
    let mut values = serde_json::json!({
        "hr1": rep.hr1,
        "mrr": rep.mrr,
        "f1_pos": rep.scores.positive.f1,
        "f1_nil": rep.scores.nil.f1,
    });
    if run.path(MATCHER_PRE).exists() && run.path(DECIDER_PRE).exists() {
        let theta0 = load_matcher_checked(run, MATCHER_PRE)?;
        let decider0 = formats::load_decider(&run.path(DECIDER_PRE))?;
        let pre = evaluate_pair(run, &data, &table, &theta0, &decider0)?;
        formats::write_json(&run.path(REPORT_PRE), &pre)?;
        values["pre_joint"] = serde_json::json!({
            "hr1": pre.hr1,
            "f1_pos": pre.scores.positive.f1,
            "f1_nil": pre.scores.nil.f1,
        });
    }
    run.write_config()?;
    Ok(summary("evaluate", values))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    pub target: TargetPair,
    pub candidates: Vec<ScoredCandidate>,
    /// Person id, or `null` for NIL.
    pub assignment: Option<String>,
    /// Decider probability that the top candidate is right.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub person: String,
    pub score: f64,
}

/// Rank and decide one target pair of the configured corpus, whose person
/// profiles serve as the candidate pool.
pub fn predict_target(run: &Run, target: &TargetPair) -> Result<Prediction> {
    let corpus = formats::load_corpus(&run.corpus_path())?;
    let table = load_table(run)?;
    let theta = load_matcher_checked(run, MATCHER)?;
    let decider = formats::load_decider(&run.require(DECIDER)?)?;
    let tokenizer = run.tokenizer();
    let mut encoder = Encoder::new(&corpus, &table, &tokenizer);
    encoder.max_papers = run.cfg.tokenizer.max_papers;
    let set = find_candidates(&corpus, target, run.cfg.split.candidate_mode)?;
    let ranked = EncodedInstance::encode(&encoder, &set)?.rank(&theta)?;
    let (assignment, probability) = match ranked.top() {
        Some(top) => {
            let (accept, p) = predict(&top.phi, &decider)?;
            (accept.then(|| top.person.to_string()), Some(p))
        }
        None => (None, None),
    };
    Ok(Prediction {
        target: target.clone(),
        candidates: ranked
            .ranking
            .iter()
            .map(|r| ScoredCandidate {
                person: r.person.to_string(),
                score: r.score,
            })
            .collect(),
        assignment,
        probability,
    })
}

fn feature_rows(run: &Run, data: &Data, sets: &[CandidateSet]) -> Result<Vec<FeatureRow>> {
    let jobs: Vec<(&CandidateSet, &namefly_core::corpus::PersonId)> = sets
        .iter()
        .flat_map(|s| s.candidates.iter().map(move |c| (s, c)))
        .collect();
    let _ = run;
    par_map(&jobs, |(s, c)| {
        let features = extract_features(&data.split.profiles, &data.tokenizer, &s.target, c)?;
        Ok(FeatureRow {
            features,
            target: s.target.to_string(),
            person: c.to_string(),
            label: s.gold_person() == Some(*c),
        })
    })
    .into_iter()
    .collect()
}

pub fn features(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let train = feature_rows(run, &data, &data.samples.triplet_sources)?;
    let test = feature_rows(run, &data, &data.samples.test_positive)?;
    formats::write_features_csv(&run.path(FEATURES), &train)?;
    formats::write_features_csv(&run.path(FEATURES_TEST), &test)?;
    run.write_config()?;
    Ok(summary(
        "features",
        serde_json::json!({ "train_rows": train.len(), "test_rows": test.len() }),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    /// Test ranking by boosted-tree probability.
    pub gbdt: RankingScores,
    /// NIL threshold on the top matcher score, fitted on validation.
    pub threshold: Option<ThresholdReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingScores {
    pub hr1: f64,
    pub hr3: f64,
    pub hr5: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub fit: ThresholdFit,
    pub test_accuracy: f64,
    pub confusion: Confusion,
    pub scores: DecisionScores,
}

fn gbdt_rank(
    model: &BoostedModel,
    rows: &[FeatureRow],
    set: &CandidateSet,
) -> Vec<namefly_core::corpus::PersonId> {
    let target = set.target.to_string();
    let mut scored: Vec<(f64, &str)> = rows
        .iter()
        .filter(|r| r.target == target)
        .map(|r| (model.probability(&r.features), r.person.as_str()))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().map(|(_, p)| p.into()).collect()
}

pub fn baseline(run: &Run) -> Result<StageSummary> {
    let data = load_data(run)?;
    let train = feature_rows(run, &data, &data.samples.triplet_sources)?;
    let test = feature_rows(run, &data, &data.samples.test_positive)?;
    let xs: Vec<Vec<f64>> = train.iter().map(|r| r.features.to_vec()).collect();
    let ys: Vec<bool> = train.iter().map(|r| r.label).collect();
    let model = train_boosted(&xs, &ys, &run.cfg.boost)?;
    let lists: Vec<_> = data
        .samples
        .test_positive
        .iter()
        .map(|s| {
            (
                gbdt_rank(&model, &test, s),
                s.gold_person().unwrap().clone(),
            )
        })
        .collect();
    let gbdt = RankingScores {
        hr1: hr_at_k(&lists, 1)?,
        hr3: hr_at_k(&lists, 3)?,
        hr5: hr_at_k(&lists, 5)?,
        mrr: mrr(&lists)?,
    };
    let threshold = if run.path(MATCHER).exists() && run.path(EMBED_MANIFEST).exists() {
        let table = load_table(run)?;
        let theta = load_matcher_checked(run, MATCHER)?;
        let encoder = data.encoder(&table, run);
        let top_scores = |sets: &[CandidateSet]| -> Result<Vec<(RankedInstance, Option<f64>)>> {
            Ok(rank_all(&theta, &encode_all(&encoder, sets)?)?
                .into_iter()
                .map(|r| {
                    let s = r.top().map(|t| t.score);
                    (r, s)
                })
                .collect())
        };
        let labelled = |ranked: &[(RankedInstance, Option<f64>)]| -> Vec<(f64, bool)> {
            ranked
                .iter()
                .filter_map(|(r, s)| {
                    let right = matches!(&r.set.gold, Gold::Person(g) if r.top().map(|t| &t.person) == Some(g));
                    s.map(|s| (s, right))
                })
                .collect()
        };
        let val = top_scores(&data.samples.validation)?;
        let fit = threshold_baseline(&labelled(&val))?;
        let mut test_sets = data.samples.test_positive.clone();
        test_sets.extend(data.samples.test_nil.iter().cloned());
        let tested = top_scores(&test_sets)?;
        let records: Vec<DecisionRecord> = tested
            .iter()
            .map(|(r, s)| DecisionRecord {
                gold: r.set.gold.clone(),
                top: r.top().map(|t| t.person.clone()),
                accept: s.is_some_and(|s| s >= fit.threshold),
            })
            .collect();
        let confusion = decision_confusion(&records);
        Some(ThresholdReport {
            fit,
            test_accuracy: threshold_accuracy(&labelled(&tested), fit.threshold),
            confusion,
            scores: pr_f1(&confusion),
        })
    } else {
        None
    };
    let rep = BaselineReport { gbdt, threshold };
    formats::write_json(&run.path(BASELINE), &rep)?;
    run.write_config()?;
    Ok(summary("baseline", serde_json::to_value(&rep)?))
}

/// Every stage in order.
pub fn run_all(run: &Run, synthesize: bool) -> Result<Vec<StageSummary>> {
    let mut out = Vec::new();
    if synthesize {
        out.push(gen_synth(run)?);
    }
    out.push(train_embed(run)?);
    out.push(sample_triplets_stage(run)?);
    out.push(train_match(run)?);
    out.push(build_decision(run)?);
    out.push(train_decide(run)?);
    out.push(joint_finetune(run)?);
    out.push(evaluate(run)?);
    Ok(out)
}
