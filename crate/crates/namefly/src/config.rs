//! Run configuration: every knob of every stage, loadable from TOML or
//! JSON and overridable with dotted `key=value` pairs.

use std::path::{Path, PathBuf};

use namefly_core::baselines::BoostConfig;
use namefly_core::candidates::CandidateMode;
use namefly_core::corpus::{SplitConfig, SynthConfig};
use namefly_core::decider::{DeciderConfig, DeciderTrainConfig};
use namefly_core::embeddings::SkipGramConfig;
use namefly_core::joint::JointConfig;
use namefly_core::matcher::{MatcherConfig, MatcherTrainConfig, Variant, MAX_PAPERS};
use namefly_core::seed;
use namefly_core::text::{Tokenizer, MAX_NAMES, MAX_WORDS};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub person_test_fraction: f64,
    pub paper_holdout_fraction: f64,
    pub candidate_mode: CandidateMode,
    /// Share of training targets held back to validate joint training.
    pub validation_fraction: f64,
    /// Share of the remaining training targets turned into NIL samples
    /// (right person removed) for the decider and joint training. By
    /// default joint training sees positive targets only and the decider's
    /// negatives come from their wrong candidates.
    pub nil_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            person_test_fraction: 0.2,
            paper_holdout_fraction: 0.2,
            candidate_mode: CandidateMode::Variants,
            validation_fraction: 0.2,
            nil_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    pub stem: bool,
    pub max_names: usize,
    pub max_words: usize,
    /// Profile papers per candidate.
    pub max_papers: usize,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        TokenizerSection {
            stem: false,
            max_names: MAX_NAMES,
            max_words: MAX_WORDS,
            max_papers: MAX_PAPERS,
        }
    }
}

impl TokenizerSection {
    pub fn build(&self) -> Tokenizer {
        let mut t = Tokenizer::new(self.stem);
        t.max_names = self.max_names;
        t.max_words = self.max_words;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripletSection {
    pub negatives_per_target: usize,
}

impl Default for TripletSection {
    fn default() -> Self {
        TripletSection {
            negatives_per_target: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub bins: usize,
    pub easy_split: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            bins: 10,
            easy_split: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage seed is derived from it.
    pub seed: u64,
    /// Input corpus; defaults to `corpus.json` in the output directory.
    pub corpus: Option<PathBuf>,
    pub synth: SynthConfig,
    pub split: SplitSection,
    pub tokenizer: TokenizerSection,
    pub embed: SkipGramConfig,
    pub triplets: TripletSection,
    pub matcher: MatcherConfig,
    pub matcher_train: MatcherTrainConfig,
    pub decider: DeciderConfig,
    pub decider_train: DeciderTrainConfig,
    pub joint: JointConfig,
    pub boost: BoostConfig,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            corpus: None,
            synth: SynthConfig::default(),
            split: SplitSection::default(),
            tokenizer: TokenizerSection::default(),
            embed: SkipGramConfig::default(),
            triplets: TripletSection::default(),
            matcher: MatcherConfig::default(),
            matcher_train: MatcherTrainConfig::default(),
            decider: DeciderConfig::default(),
            decider_train: DeciderTrainConfig::default(),
            joint: JointConfig::default(),
            boost: BoostConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

/// Stage names used to derive per-stage seeds.
pub mod stage {
    pub const SYNTH: &str = "synth";
    pub const SPLIT: &str = "split";
    pub const SAMPLES: &str = "samples";
    pub const EMBED: &str = "embed";
    pub const TRIPLETS: &str = "triplets";
    pub const MATCHER_INIT: &str = "matcher-init";
    pub const MATCHER_TRAIN: &str = "matcher-train";
    pub const DECIDER_INIT: &str = "decider-init";
    pub const DECIDER_TRAIN: &str = "decider-train";
    pub const JOINT: &str = "joint";
    pub const BOOST: &str = "boost";
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AppError::usage(e.to_string()).at(path))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| AppError::usage(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| AppError::usage(e.to_string()))
        };
        parsed.map_err(|e| e.at(path))
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        seed::derive(self.seed, stage)
    }

    /// Every stage seed filled in from the root seed, so the written
    /// configuration shows the exact values used. Seeds given per stage
    /// are replaced.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.embed.seed = self.stage_seed(stage::EMBED);
        c.matcher_train.seed = self.stage_seed(stage::MATCHER_TRAIN);
        c.decider_train.seed = self.stage_seed(stage::DECIDER_TRAIN);
        c.joint.seed = self.stage_seed(stage::JOINT);
        c.boost.seed = self.stage_seed(stage::BOOST);
        c
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            person_test_fraction: self.split.person_test_fraction,
            paper_holdout_fraction: self.split.paper_holdout_fraction,
            seed: self.stage_seed(stage::SPLIT),
            mode: self.split.candidate_mode,
        }
    }

    pub fn set_variant(&mut self, v: Variant) {
        self.matcher.variant = v;
    }

    /// Apply `section.key=value`. The value is read as JSON when it parses
    /// (numbers, booleans, arrays, objects), otherwise as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| AppError::usage(format!("override {assignment:?} is not key=value")))?;
        let value: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut root = serde_json::to_value(&*self).map_err(|e| AppError::usage(e.to_string()))?;
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = match slot {
                Value::Object(map) if map.contains_key(part) => map.get_mut(part).unwrap(),
                _ => {
                    return Err(AppError::usage(format!(
                        "unknown configuration key {key:?}"
                    )))
                }
            };
        }
        *slot = value;
        *self = serde_json::from_value(root)
            .map_err(|e| AppError::usage(format!("override {assignment:?}: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
