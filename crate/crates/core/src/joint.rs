//! Reward-weighted joint fine-tuning of matcher and decider.
//!
//! Each round walks the training samples in turn. The decider judges the
//! current top candidate; when its verdict agrees with the truth (reward 1)
//! the matcher takes a descent step on the summed triplet loss that keeps
//! that top candidate above every other candidate. After the walk the
//! samples are re-ranked, the decision dataset is rebuilt and the decider is
//! retrained from its current parameters.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corpus::{Gold, TargetPair};
use crate::decider::{
    build_decision_dataset, mean_loss, predict, train_decider, DeciderParams, DeciderTrainConfig,
};
use crate::eval::{decision_confusion, decision_record, hr_at_k, pr_f1};
use crate::matcher::{phi, triplet_step, EncodedInstance, MatcherParams, RankedInstance};
use crate::optim::Parameters;
use crate::{seed, Error, Result};

/// 1 when the decision agrees with the truth.
pub fn reward(y: bool, y_hat: bool) -> u8 {
    (y == y_hat) as u8
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardRecord {
    pub target: TargetPair,
    pub y: bool,
    pub y_hat: bool,
    pub reward: u8,
}

/// Result of one fine-tuning step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub record: RewardRecord,
    /// Summed triplet loss before the update.
    pub loss: f64,
    pub updated: bool,
}

/// One step on a sample whose candidates are given in ranked order (top
/// first). `y` says whether the top candidate is the right person.
pub fn finetune_step(
    theta: &mut MatcherParams,
    decider: &DeciderParams,
    sample: &EncodedInstance,
    order: &[usize],
    y: bool,
    lr: f64,
    fine_tune_embeddings: bool,
    allow_update: bool,
) -> Result<Option<StepOutcome>> {
    if order.len() < 2 {
        return Ok(None);
    }
    let top = &sample.inputs[order[0]];
    let (y_hat, _) = predict(&phi(theta, top), decider)?;
    let r = reward(y, y_hat);
    let mut grad = theta.zeros_like();
    let mut loss = 0.0;
    let active = r == 1 && allow_update;
    for &neg in &order[1..] {
        let g = active.then_some((&mut grad, 1.0));
        loss += triplet_step(theta, top, &sample.inputs[neg], g, fine_tune_embeddings);
    }
    let updated = active && loss > 0.0;
    if updated {
        if !grad.all_finite() {
            return Err(Error::NonFinite(format!(
                "joint gradient at {}",
                sample.set.target
            )));
        }
        for (p, g) in theta.groups_mut().into_iter().zip(grad.groups()) {
            for (x, d) in p.iter_mut().zip(g) {
                *x -= lr * d;
            }
        }
    }
    Ok(Some(StepOutcome {
        record: RewardRecord {
            target: sample.set.target.clone(),
            y,
            y_hat,
            reward: r,
        },
        loss,
        updated,
    }))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct JointConfig {
    pub max_rounds: usize,
    pub lr: f64,
    pub seed: u64,
    /// Leave the matcher untouched on NIL samples.
    pub skip_nil_reward_updates: bool,
    pub fine_tune_embeddings: bool,
    /// Stop once validation F1 gained less than this for `patience`
    /// consecutive rounds.
    pub min_improvement: f64,
    pub patience: usize,
    pub decider: DeciderTrainConfig,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig {
            max_rounds: 10,
            lr: 1e-4,
            seed: 0,
            skip_nil_reward_updates: false,
            fine_tune_embeddings: true,
            min_improvement: 1e-3,
            patience: 2,
            decider: DeciderTrainConfig {
                epochs: 10,
                ..DeciderTrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    /// Mean summed triplet loss over the samples of the round.
    pub matcher_loss: f64,
    /// Decider cross-entropy after retraining.
    pub decider_loss: f64,
    pub hr1: f64,
    pub f1_pos: f64,
    pub f1_nil: f64,
}

/// Validation numbers of one matcher/decider pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub hr1: f64,
    pub f1_pos: f64,
    pub f1_nil: f64,
}

impl Validation {
    pub fn f1(&self) -> f64 {
        (self.f1_pos + self.f1_nil) / 2.0
    }
}

fn rank_all(theta: &MatcherParams, data: &[EncodedInstance]) -> Result<Vec<RankedInstance>> {
    data.iter().map(|x| x.rank(theta)).collect()
}

pub fn validate(
    theta: &MatcherParams,
    decider: &DeciderParams,
    data: &[EncodedInstance],
) -> Result<Validation> {
    let ranked = rank_all(theta, data)?;
    let lists: Vec<_> = ranked
        .iter()
        .filter_map(|r| Some((r.ids(), r.set.gold_person()?.clone())))
        .collect();
    let records = ranked
        .iter()
        .map(|r| decision_record(r, decider))
        .collect::<Result<Vec<_>>>()?;
    let s = pr_f1(&decision_confusion(&records));
    Ok(Validation {
        hr1: hr_at_k(&lists, 1)?,
        f1_pos: s.positive.f1,
        f1_nil: s.nil.f1,
    })
}

#[derive(Debug, Clone)]
pub struct JointRun {
    pub matcher: MatcherParams,
    pub decider: DeciderParams,
    pub history: Vec<RoundRecord>,
    /// Validation before the first round.
    pub initial: Validation,
}

/// Joint training over `train` samples (positive and NIL), validated on
/// `validation` after every round.
pub fn joint_train(
    train: &[EncodedInstance],
    validation: &[EncodedInstance],
    mut theta: MatcherParams,
    mut decider: DeciderParams,
    cfg: &JointConfig,
) -> Result<JointRun> {
    let mut rng = seed::rng(cfg.seed);
    let initial = validate(&theta, &decider, validation)?;
    let mut history = Vec::new();
    let mut prev = initial.f1();
    let mut stalled = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for round in 1..=cfg.max_rounds {
        let ranked = rank_all(&theta, train)?;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        for &i in &order {
            let sample = &train[i];
            let r = &ranked[i];
            let idx: Vec<usize> = r
                .ranking
                .iter()
                .map(|x| {
                    sample
                        .set
                        .candidates
                        .iter()
                        .position(|c| *c == x.person)
                        .unwrap()
                })
                .collect();
            let (y, nil) = match &sample.set.gold {
                Gold::Person(g) => (r.top().map(|t| &t.person) == Some(g), false),
                _ => (false, true),
            };
            let allow = !(nil && cfg.skip_nil_reward_updates);
            let out = finetune_step(
                &mut theta,
                &decider,
                sample,
                &idx,
                y,
                cfg.lr,
                cfg.fine_tune_embeddings,
                allow,
            )
            .map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("round {round}: {m}")),
                e => e,
            })?;
            if let Some(o) = out {
                total += o.loss;
                steps += 1;
            }
        }
        if !theta.all_finite() {
            return Err(Error::NonFinite(format!(
                "matcher diverged in round {round}"
            )));
        }
        let reranked = rank_all(&theta, train)?;
        let data = build_decision_dataset(&reranked).instances;
        let dcfg = DeciderTrainConfig {
            seed: seed::derive(cfg.seed, &format!("decider-round-{round}")),
            ..cfg.decider.clone()
        };
        decider = train_decider(&data, decider, &dcfg)
            .map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("round {round}: {m}")),
                e => e,
            })?
            .params;
        let v = validate(&theta, &decider, validation)?;
        history.push(RoundRecord {
            round,
            matcher_loss: total / steps.max(1) as f64,
            decider_loss: mean_loss(&decider, &data),
            hr1: v.hr1,
            f1_pos: v.f1_pos,
            f1_nil: v.f1_nil,
        });
        if v.f1() - prev < cfg.min_improvement {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev = v.f1();
        if stalled >= cfg.patience {
            break;
        }
    }
    Ok(JointRun {
        matcher: theta,
        decider,
        history,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_table() {
        assert_eq!(reward(true, true), 1);
        assert_eq!(reward(true, false), 0);
        assert_eq!(reward(false, false), 1);
        assert_eq!(reward(false, true), 0);
    }
}
