//! NIL decision: is the top-ranked candidate the right person?
//!
//! A perceptron `h` maps the top candidate's similarity embedding to two
//! softmax probabilities, class 1 meaning "right person".

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corpus::{Gold, PersonId, TargetPair};
use crate::matcher::RankedInstance;
use crate::mlp::{Mlp, MlpTape};
use crate::optim::{Optimizer, OptimizerKind, Parameters};
use crate::{math, seed, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeciderConfig {
    /// Hidden widths; two hidden layers make three weight layers, add a
    /// third width for the four-layer form.
    pub hidden: Vec<usize>,
}

impl Default for DeciderConfig {
    fn default() -> Self {
        DeciderConfig {
            hidden: vec![64, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeciderParams {
    pub net: Mlp,
}

impl DeciderParams {
    pub fn new(cfg: &DeciderConfig, input_width: usize, seed: u64) -> Self {
        let mut widths = vec![input_width];
        widths.extend(&cfg.hidden);
        widths.push(2);
        DeciderParams {
            net: Mlp::new(&widths, &mut seed::rng(seed)),
        }
    }

    pub fn input_width(&self) -> usize {
        self.net.input_width()
    }

    pub fn zeros_like(&self) -> Self {
        DeciderParams {
            net: self.net.zeros_like(),
        }
    }

    fn check(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                found: phi.len(),
            });
        }
        Ok(())
    }

    /// `(P(y=0), P(y=1))`.
    pub fn probabilities(&self, phi: &[f64]) -> Result<[f64; 2]> {
        self.check(phi)?;
        Ok(softmax2(&self.net.forward(phi)))
    }
}

impl Parameters for DeciderParams {
    fn group_names(&self) -> Vec<alloc::string::String> {
        self.net.group_names("decider")
    }

    fn groups(&self) -> Vec<&[f64]> {
        self.net.groups()
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.groups_mut()
    }
}

pub fn softmax2(logits: &[f64]) -> [f64; 2] {
    let top = logits[0].max(logits[1]);
    let e0 = math::exp(logits[0] - top);
    let e1 = math::exp(logits[1] - top);
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// `-ln p_label`, from logits.
pub fn cross_entropy(logits: &[f64], label: bool) -> f64 {
    let top = logits[0].max(logits[1]);
    let lse = top + math::ln(math::exp(logits[0] - top) + math::exp(logits[1] - top));
    lse - logits[label as usize]
}

/// `(ŷ, P(y=1))`; an exact tie predicts NIL.
pub fn predict(phi: &[f64], params: &DeciderParams) -> Result<(bool, f64)> {
    let p = params.probabilities(phi)?;
    Ok((p[1] > p[0], p[1]))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionInstance {
    pub target: TargetPair,
    pub person: PersonId,
    pub label: bool,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionDataset {
    pub instances: Vec<DecisionInstance>,
    /// Positive samples whose only candidate is the gold person, and NIL
    /// samples without any candidate.
    pub warnings: usize,
}

/// Positive samples give `(c+, 1)` and `(first wrong, 0)`; NIL samples
/// give `(top, 0)`.
pub fn build_decision_dataset(ranked: &[RankedInstance]) -> DecisionDataset {
    let mut out = DecisionDataset::default();
    for r in ranked {
        let emit = |x: &crate::matcher::Ranked, label| DecisionInstance {
            target: r.set.target.clone(),
            person: x.person.clone(),
            label,
            phi: x.phi.clone(),
        };
        match &r.set.gold {
            Gold::Person(gold) => {
                if let Some(pos) = r.ranking.iter().find(|x| &x.person == gold) {
                    out.instances.push(emit(pos, true));
                }
                match r.ranking.iter().find(|x| &x.person != gold) {
                    Some(neg) => out.instances.push(emit(neg, false)),
                    None => out.warnings += 1,
                }
            }
            Gold::Nil | Gold::Unknown => match r.ranking.first() {
                Some(top) => out.instances.push(emit(top, false)),
                None => out.warnings += 1,
            },
        }
    }
    out
}

fn example_step(
    p: &DeciderParams,
    x: &DecisionInstance,
    grad: Option<(&mut DeciderParams, f64)>,
) -> f64 {
    let tape: MlpTape = p.net.forward_tape(&x.phi);
    let loss = cross_entropy(&tape.output, x.label);
    if let Some((g, weight)) = grad {
        let probs = softmax2(&tape.output);
        let y = x.label as usize;
        let d: Vec<f64> = (0..2)
            .map(|k| weight * (probs[k] - if k == y { 1.0 } else { 0.0 }))
            .collect();
        p.net.backward(&tape, &d, &mut g.net);
    }
    loss
}

/// Mean cross-entropy over `which` and its gradient.
pub fn loss_and_gradient(
    p: &DeciderParams,
    data: &[DecisionInstance],
    which: &[usize],
) -> (f64, DeciderParams) {
    let mut grad = p.zeros_like();
    let n = which.len().max(1) as f64;
    let total: f64 = which
        .iter()
        .map(|&i| example_step(p, &data[i], Some((&mut grad, 1.0 / n))))
        .sum();
    (total / n, grad)
}

pub fn mean_loss(p: &DeciderParams, data: &[DecisionInstance]) -> f64 {
    let n = data.len().max(1) as f64;
    data.iter().map(|x| example_step(p, x, None)).sum::<f64>() / n
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeciderTrainConfig {
    pub batch: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for DeciderTrainConfig {
    fn default() -> Self {
        DeciderTrainConfig {
            batch: 128,
            lr: 0.001,
            epochs: 50,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeciderRun {
    pub params: DeciderParams,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch descent on mean cross-entropy.
pub fn train_decider(
    data: &[DecisionInstance],
    mut params: DeciderParams,
    cfg: &DeciderTrainConfig,
) -> Result<DeciderRun> {
    if !data.iter().any(|x| x.label) || !data.iter().any(|x| !x.label) {
        return Err(Error::SingleClass);
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    for x in data {
        params.check(&x.phi)?;
    }
    let mut rng = seed::rng(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let (loss, grad) = loss_and_gradient(&params, data, chunk);
            if !loss.is_finite() || !grad.all_finite() {
                return Err(Error::NonFinite(format!("decider loss in epoch {epoch}")));
            }
            total += loss * chunk.len() as f64;
            opt.step(&mut params, &grad);
            if !params.all_finite() {
                return Err(Error::NonFinite(format!(
                    "decider parameters in epoch {epoch}"
                )));
            }
        }
        epoch_losses.push(total / data.len() as f64);
    }
    Ok(DeciderRun {
        params,
        epoch_losses,
    })
}

pub fn accuracy(p: &DeciderParams, data: &[DecisionInstance]) -> Result<f64> {
    let mut right = 0usize;
    for x in data {
        if predict(&x.phi, p)?.0 == x.label {
            right += 1;
        }
    }
    Ok(right as f64 / data.len().max(1) as f64)
}

/// The final verdict for a ranked instance: the top candidate when the
/// decider accepts it, otherwise NIL (`None`).
pub fn assign(ranked: &RankedInstance, p: &DeciderParams) -> Result<Option<PersonId>> {
    let Some(top) = ranked.top() else {
        return Ok(None);
    };
    Ok(predict(&top.phi, p)?.0.then(|| top.person.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CandidateSet;
    use crate::matcher::Ranked;

    fn inst(gold: Gold, ranking: &[&str]) -> RankedInstance {
        RankedInstance {
            set: CandidateSet {
                target: TargetPair {
                    paper: "p".into(),
                    author: 0,
                },
                candidates: ranking.iter().map(|s| PersonId::from(*s)).collect(),
                gold,
            },
            ranking: ranking
                .iter()
                .enumerate()
                .map(|(i, s)| Ranked {
                    person: (*s).into(),
                    score: -(i as f64),
                    phi: vec![i as f64],
                })
                .collect(),
        }
    }

    #[test]
    fn dataset_construction_rules() {
        let pos = inst(Gold::Person("b".into()), &["a", "b", "c"]);
        let nil = inst(Gold::Nil, &["x", "y"]);
        let lone = inst(Gold::Person("a".into()), &["a"]);
        let d = build_decision_dataset(&[pos, nil, lone]);
        let got: Vec<(&str, bool)> = d
            .instances
            .iter()
            .map(|x| (x.person.as_str(), x.label))
            .collect();
        assert_eq!(got, [("b", true), ("a", false), ("x", false), ("a", true)]);
        assert_eq!(d.warnings, 1);
    }

    #[test]
    fn cross_entropy_limits() {
        assert!((cross_entropy(&[0.0, 0.0], true) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(cross_entropy(&[-40.0, 40.0], true) < 1e-30);
    }

    #[test]
    fn tie_predicts_nil() {
        let p = DeciderParams::new(&DeciderConfig::default(), 22, 1).zeros_like();
        assert_eq!(predict(&[0.5; 22], &p).unwrap(), (false, 0.5));
        assert!(matches!(
            predict(&[0.5; 11], &p),
            Err(Error::Shape {
                expected: 22,
                found: 11
            })
        ));
    }

    #[test]
    fn empty_candidates_assign_nil() {
        let p = DeciderParams::new(&DeciderConfig::default(), 1, 1);
        assert_eq!(assign(&inst(Gold::Nil, &[]), &p).unwrap(), None);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = DecisionInstance {
            target: TargetPair {
                paper: "p".into(),
                author: 0,
            },
            person: "a".into(),
            label: true,
            phi: vec![0.0; 2],
        };
        let p = DeciderParams::new(&DeciderConfig::default(), 2, 1);
        assert_eq!(
            train_decider(&[x], p, &DeciderTrainConfig::default()).unwrap_err(),
            Error::SingleClass
        );
    }
}
