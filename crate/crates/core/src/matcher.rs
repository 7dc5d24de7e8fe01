//! Interaction-based matcher.
//!
//! A target pair and a candidate person are compared token by token: cosine
//! similarity matrices between their embeddings are kernel pooled into a
//! similarity embedding φ, which a small perceptron `g` turns into a score.
//! Four ways of building φ are supported:
//!
//! * [`Variant::Bp`]: one matrix over all tokens of both fields.
//! * [`Variant::Mfp`]: one matrix per field, combined by field attention.
//! * [`Variant::Mfmi`]: an MFP embedding per profile paper, combined by
//!   instance attention.
//! * [`Variant::Combined`]: MFP and MFMI concatenated.
//!
//! Training minimizes the triplet hinge `max(0, g(φ⁻) - g(φ⁺) + m)` with
//! gradients derived by hand through every stage, down to the token
//! embeddings.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::attention::{attend, attend_backward, Attended, AttentionParams};
use crate::corpus::{CandidateSet, Corpus, FieldTag, PersonId, TargetPair};
use crate::embeddings::EmbeddingTable;
use crate::kernel::{pool_weighted, pool_weighted_backward, KernelBank};
use crate::mlp::Mlp;
use crate::optim::{Optimizer, OptimizerKind, Parameters};
use crate::text::Tokenizer;
use crate::{math, seed, Error, Result};

pub const MAX_PAPERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    Bp,
    Mfp,
    Mfmi,
    Combined,
}

impl Variant {
    pub fn phi_width(self, kernels: usize) -> usize {
        match self {
            Variant::Combined => 2 * kernels,
            _ => kernels,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Bp => "bp",
            Variant::Mfp => "mfp",
            Variant::Mfmi => "mfmi",
            Variant::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Some(match s {
            "bp" => Variant::Bp,
            "mfp" => Variant::Mfp,
            "mfmi" => Variant::Mfmi,
            "combined" => Variant::Combined,
            _ => return None,
        })
    }
}

/// A token resolved against the embedding vocabulary; `id == None` is an
/// out-of-vocabulary token (zero vector).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tok {
    pub tag: FieldTag,
    pub id: Option<u32>,
}

/// Distinct tokens with multiplicities. Pooling sums over tokens, so a
/// token seen `n` times is one row/column of weight `n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bag {
    pub toks: Vec<Tok>,
    pub counts: Vec<f64>,
}

impl Bag {
    pub fn from_toks<I: IntoIterator<Item = Tok>>(toks: I) -> Self {
        let mut map: BTreeMap<Tok, f64> = BTreeMap::new();
        for t in toks {
            *map.entry(t).or_default() += 1.0;
        }
        let (toks, counts) = map.into_iter().unzip();
        Bag { toks, counts }
    }

    pub fn is_empty(&self) -> bool {
        self.toks.is_empty()
    }

    /// Total token count (with multiplicity).
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn concat(a: &Bag, b: &Bag) -> Bag {
        Bag {
            toks: a.toks.iter().chain(&b.toks).copied().collect(),
            counts: a.counts.iter().chain(&b.counts).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldBags {
    pub coauthors: Bag,
    pub content: Bag,
}

impl FieldBags {
    fn merged(&self) -> Bag {
        Bag::concat(&self.coauthors, &self.content)
    }
}

/// Everything the matcher needs about one (target pair, person) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairInput {
    pub target: FieldBags,
    /// All profile papers merged.
    pub profile: FieldBags,
    /// One entry per profile paper.
    pub instances: Vec<FieldBags>,
}

/// Trainable copies of the two embedding tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedWeights {
    pub dim: usize,
    pub coauthors: Vec<f64>,
    pub content: Vec<f64>,
}

impl EmbedWeights {
    pub fn from_table(table: &EmbeddingTable) -> Self {
        EmbedWeights {
            dim: table.dim,
            coauthors: table.coauthors.vectors.clone(),
            content: table.content.vectors.clone(),
        }
    }

    pub fn vector(&self, t: Tok) -> Option<&[f64]> {
        let id = t.id? as usize;
        let block = match t.tag {
            FieldTag::Coauthors => &self.coauthors,
            FieldTag::Content => &self.content,
        };
        Some(&block[id * self.dim..(id + 1) * self.dim])
    }

    fn row_mut(&mut self, t: Tok) -> Option<&mut [f64]> {
        let id = t.id? as usize;
        let dim = self.dim;
        let block = match t.tag {
            FieldTag::Coauthors => &mut self.coauthors,
            FieldTag::Content => &mut self.content,
        };
        Some(&mut block[id * dim..(id + 1) * dim])
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MatcherConfig {
    pub variant: Variant,
    /// Hidden widths of the scoring perceptron.
    pub hidden: Vec<usize>,
    pub margin: f64,
    pub kernels: KernelBank,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            variant: Variant::Combined,
            hidden: vec![64, 32],
            margin: 1.0,
            kernels: KernelBank::default(),
        }
    }
}

/// All matcher parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MatcherParams {
    pub variant: Variant,
    pub kernels: KernelBank,
    pub margin: f64,
    pub embeddings: EmbedWeights,
    pub field_attention: AttentionParams,
    pub instance_attention: AttentionParams,
    /// The scoring function `g`.
    pub scorer: Mlp,
}

impl MatcherParams {
    /// Attention starts at zero (uniform), `g` is Glorot-initialized.
    pub fn new(cfg: &MatcherConfig, table: &EmbeddingTable, seed: u64) -> Result<Self> {
        if !(cfg.margin > 0.0) {
            return Err(Error::Config("margin must be positive".into()));
        }
        let k = cfg.kernels.len();
        let mut widths = vec![cfg.variant.phi_width(k)];
        widths.extend(&cfg.hidden);
        widths.push(1);
        Ok(MatcherParams {
            variant: cfg.variant,
            kernels: cfg.kernels.clone(),
            margin: cfg.margin,
            embeddings: EmbedWeights::from_table(table),
            field_attention: AttentionParams::zeros(k),
            instance_attention: AttentionParams::zeros(k),
            scorer: Mlp::new(&widths, &mut seed::rng(seed)),
        })
    }

    pub fn phi_width(&self) -> usize {
        self.variant.phi_width(self.kernels.len())
    }

    /// Same shapes, every value zero; the gradient container.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }
}

impl Parameters for MatcherParams {
    fn group_names(&self) -> Vec<String> {
        let mut names: Vec<String> = [
            "embeddings.coauthors",
            "embeddings.content",
            "field_attention.w",
            "field_attention.b",
            "instance_attention.w",
            "instance_attention.b",
        ]
        .iter()
        .map(|s| String::from(*s))
        .collect();
        names.extend(self.scorer.group_names("scorer"));
        names
    }

    fn groups(&self) -> Vec<&[f64]> {
        let mut g: Vec<&[f64]> = vec![
            &self.embeddings.coauthors,
            &self.embeddings.content,
            &self.field_attention.w,
            core::slice::from_ref(&self.field_attention.b),
            &self.instance_attention.w,
            core::slice::from_ref(&self.instance_attention.b),
        ];
        g.extend(self.scorer.groups());
        g
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut g: Vec<&mut [f64]> = vec![
            &mut self.embeddings.coauthors,
            &mut self.embeddings.content,
            &mut self.field_attention.w,
            core::slice::from_mut(&mut self.field_attention.b),
            &mut self.instance_attention.w,
            core::slice::from_mut(&mut self.instance_attention.b),
        ];
        g.extend(self.scorer.groups_mut());
        g
    }
}

/// Turns corpus records into [`PairInput`]s.
pub struct Encoder<'a> {
    pub corpus: &'a Corpus,
    pub table: &'a EmbeddingTable,
    pub tokenizer: &'a Tokenizer,
    pub max_papers: usize,
}

impl<'a> Encoder<'a> {
    pub fn new(corpus: &'a Corpus, table: &'a EmbeddingTable, tokenizer: &'a Tokenizer) -> Self {
        Encoder {
            corpus,
            table,
            tokenizer,
            max_papers: MAX_PAPERS,
        }
    }

    fn resolve(&self, tag: FieldTag, tokens: &[String]) -> impl Iterator<Item = Tok> + '_ {
        let block = self.table.block(tag);
        tokens
            .iter()
            .map(move |t| Tok {
                tag,
                id: block.vocab.get(t),
            })
            .collect::<Vec<_>>()
            .into_iter()
    }

    fn bags(&self, coauthors: &[String], content: &[String]) -> FieldBags {
        FieldBags {
            coauthors: Bag::from_toks(self.resolve(FieldTag::Coauthors, coauthors)),
            content: Bag::from_toks(self.resolve(FieldTag::Content, content)),
        }
    }

    pub fn target(&self, target: &TargetPair) -> Result<FieldBags> {
        self.corpus.author_slot(target)?;
        let paper = self.corpus.paper(&target.paper)?;
        let t = self.tokenizer.paper(paper, Some(target.author));
        Ok(self.bags(&t.coauthors, &t.content))
    }

    /// The target paper itself is never part of the person's profile here.
    pub fn pair(&self, target: &TargetPair, person: &PersonId) -> Result<PairInput> {
        let target_bags = self.target(target)?;
        let person = self.corpus.person(person)?;
        let mut names: Vec<String> = Vec::new();
        let mut words: Vec<String> = Vec::new();
        let mut instances = Vec::new();
        for pid in person
            .papers
            .iter()
            .filter(|p| **p != target.paper)
            .take(self.max_papers)
        {
            let paper = self.corpus.paper(pid)?;
            let slot = self.corpus.slot_of_person(person, paper);
            let t = self.tokenizer.paper(paper, slot);
            instances.push(self.bags(&t.coauthors, &t.content));
            names.extend(t.coauthors);
            words.extend(t.content);
        }
        names.truncate(self.tokenizer.max_names);
        words.truncate(self.tokenizer.max_words);
        Ok(PairInput {
            target: target_bags,
            profile: self.bags(&names, &words),
            instances,
        })
    }
}

// ---------------------------------------------------------------------------
// forward / backward

struct Units {
    unit: Vec<f64>,
    norms: Vec<f64>,
}

fn units(p: &MatcherParams, bag: &Bag) -> Units {
    let dim = p.embeddings.dim;
    let mut unit = vec![0.0; bag.toks.len() * dim];
    let mut norms = vec![0.0; bag.toks.len()];
    for (i, &t) in bag.toks.iter().enumerate() {
        if let Some(v) = p.embeddings.vector(t) {
            let n = math::norm(v);
            if n > 0.0 {
                norms[i] = n;
                for (u, x) in unit[i * dim..(i + 1) * dim].iter_mut().zip(v) {
                    *u = x / n;
                }
            }
        }
    }
    Units { unit, norms }
}

#[derive(Debug, Clone)]
struct BlockTape {
    sims: Vec<f64>,
    kvals: Vec<f64>,
    phi: Vec<f64>,
}

fn block_forward(p: &MatcherParams, rows: &Bag, cols: &Bag) -> BlockTape {
    let dim = p.embeddings.dim;
    let (ru, cu) = (units(p, rows), units(p, cols));
    let (nr, nc) = (rows.toks.len(), cols.toks.len());
    let mut sims = vec![0.0; nr * nc];
    for i in 0..nr {
        if ru.norms[i] == 0.0 {
            continue;
        }
        let a = &ru.unit[i * dim..(i + 1) * dim];
        for j in 0..nc {
            if cu.norms[j] != 0.0 {
                sims[i * nc + j] = math::dot(a, &cu.unit[j * dim..(j + 1) * dim]);
            }
        }
    }
    let (phi, kvals) = pool_weighted(&sims, &rows.counts, &cols.counts, &p.kernels);
    BlockTape { sims, kvals, phi }
}

fn block_backward(
    p: &MatcherParams,
    rows: &Bag,
    cols: &Bag,
    tape: &BlockTape,
    dphi: &[f64],
    grad: &mut MatcherParams,
) {
    let dim = p.embeddings.dim;
    let (nr, nc) = (rows.toks.len(), cols.toks.len());
    let mut ds = vec![0.0; nr * nc];
    pool_weighted_backward(
        &tape.sims,
        &rows.counts,
        &cols.counts,
        &p.kernels,
        &tape.kvals,
        dphi,
        &mut ds,
    );
    let (ru, cu) = (units(p, rows), units(p, cols));
    // dS/du = (v̂ - S û) / |u| and symmetrically for v.
    let mut col_acc = vec![0.0; nc * dim];
    let mut col_self = vec![0.0; nc];
    let mut row_acc = vec![0.0; dim];
    for i in 0..nr {
        if ru.norms[i] == 0.0 {
            continue;
        }
        let ui = &ru.unit[i * dim..(i + 1) * dim];
        row_acc.iter_mut().for_each(|x| *x = 0.0);
        let mut row_self = 0.0;
        for j in 0..nc {
            let g = ds[i * nc + j];
            if g == 0.0 || cu.norms[j] == 0.0 {
                continue;
            }
            let s = tape.sims[i * nc + j];
            let vj = &cu.unit[j * dim..(j + 1) * dim];
            for d in 0..dim {
                row_acc[d] += g * vj[d];
                col_acc[j * dim + d] += g * ui[d];
            }
            row_self += g * s;
            col_self[j] += g * s;
        }
        if let Some(out) = grad.embeddings.row_mut(rows.toks[i]) {
            let inv = 1.0 / ru.norms[i];
            for d in 0..dim {
                out[d] += inv * (row_acc[d] - row_self * ui[d]);
            }
        }
    }
    for j in 0..nc {
        if cu.norms[j] == 0.0 {
            continue;
        }
        if let Some(out) = grad.embeddings.row_mut(cols.toks[j]) {
            let inv = 1.0 / cu.norms[j];
            let vj = &cu.unit[j * dim..(j + 1) * dim];
            for d in 0..dim {
                out[d] += inv * (col_acc[j * dim + d] - col_self[j] * vj[d]);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct FieldTape {
    coauthors: BlockTape,
    content: BlockTape,
    attn: Attended,
}

fn mfp_forward(p: &MatcherParams, target: &FieldBags, person: &FieldBags) -> FieldTape {
    let coauthors = block_forward(p, &target.coauthors, &person.coauthors);
    let content = block_forward(p, &target.content, &person.content);
    let attn = attend(&[&coauthors.phi, &content.phi], &p.field_attention);
    FieldTape {
        coauthors,
        content,
        attn,
    }
}

fn mfp_backward(
    p: &MatcherParams,
    target: &FieldBags,
    person: &FieldBags,
    tape: &FieldTape,
    d_out: &[f64],
    grad: &mut MatcherParams,
    embed_grads: bool,
) {
    let d = attend_backward(
        &[&tape.coauthors.phi, &tape.content.phi],
        &p.field_attention,
        &tape.attn.weights,
        d_out,
        &mut grad.field_attention,
    );
    if embed_grads {
        block_backward(
            p,
            &target.coauthors,
            &person.coauthors,
            &tape.coauthors,
            &d[0],
            grad,
        );
        block_backward(
            p,
            &target.content,
            &person.content,
            &tape.content,
            &d[1],
            grad,
        );
    }
}

#[derive(Debug, Clone)]
struct InstanceTape {
    papers: Vec<FieldTape>,
    attn: Option<Attended>,
}

fn mfmi_forward(p: &MatcherParams, input: &PairInput) -> InstanceTape {
    let papers: Vec<FieldTape> = input
        .instances
        .iter()
        .map(|inst| mfp_forward(p, &input.target, inst))
        .collect();
    let attn = (!papers.is_empty()).then(|| {
        let phis: Vec<&[f64]> = papers.iter().map(|t| t.attn.pooled.as_slice()).collect();
        attend(&phis, &p.instance_attention)
    });
    InstanceTape { papers, attn }
}

fn mfmi_backward(
    p: &MatcherParams,
    input: &PairInput,
    tape: &InstanceTape,
    d_out: &[f64],
    grad: &mut MatcherParams,
    embed_grads: bool,
) {
    let Some(attn) = &tape.attn else { return };
    let phis: Vec<&[f64]> = tape
        .papers
        .iter()
        .map(|t| t.attn.pooled.as_slice())
        .collect();
    let d = attend_backward(
        &phis,
        &p.instance_attention,
        &attn.weights,
        d_out,
        &mut grad.instance_attention,
    );
    for ((inst, t), di) in input.instances.iter().zip(&tape.papers).zip(&d) {
        mfp_backward(p, &input.target, inst, t, di, grad, embed_grads);
    }
}

/// Forward state of one φ computation.
#[derive(Debug, Clone)]
pub struct PhiTape {
    bp: Option<BlockTape>,
    mfp: Option<FieldTape>,
    mfmi: Option<InstanceTape>,
    pub phi: Vec<f64>,
}

impl PhiTape {
    /// Field attention weights (coauthors, content) of the profile-level
    /// comparison, when the variant has one.
    pub fn field_weights(&self) -> Option<&[f64]> {
        self.mfp.as_ref().map(|t| t.attn.weights.as_slice())
    }

    /// Instance attention weights over profile papers, when present.
    pub fn instance_weights(&self) -> Option<&[f64]> {
        self.mfmi
            .as_ref()
            .and_then(|t| t.attn.as_ref())
            .map(|a| a.weights.as_slice())
    }
}

fn zeros_if_empty(v: Option<&Attended>, k: usize) -> Vec<f64> {
    v.map(|a| a.pooled.clone()).unwrap_or_else(|| vec![0.0; k])
}

pub fn phi_forward(p: &MatcherParams, input: &PairInput) -> PhiTape {
    let k = p.kernels.len();
    match p.variant {
        Variant::Bp => {
            let t = block_forward(p, &input.target.merged(), &input.profile.merged());
            PhiTape {
                phi: t.phi.clone(),
                bp: Some(t),
                mfp: None,
                mfmi: None,
            }
        }
        Variant::Mfp => {
            let t = mfp_forward(p, &input.target, &input.profile);
            PhiTape {
                phi: t.attn.pooled.clone(),
                bp: None,
                mfp: Some(t),
                mfmi: None,
            }
        }
        Variant::Mfmi => {
            let t = mfmi_forward(p, input);
            PhiTape {
                phi: zeros_if_empty(t.attn.as_ref(), k),
                bp: None,
                mfp: None,
                mfmi: Some(t),
            }
        }
        Variant::Combined => {
            let a = mfp_forward(p, &input.target, &input.profile);
            let b = mfmi_forward(p, input);
            let mut phi = a.attn.pooled.clone();
            phi.extend(zeros_if_empty(b.attn.as_ref(), k));
            PhiTape {
                phi,
                bp: None,
                mfp: Some(a),
                mfmi: Some(b),
            }
        }
    }
}

/// Adds `∂(dphi·φ)/∂Θ` into `grad`. Without `embed_grads` the embeddings
/// are treated as constants and the similarity stages are skipped.
pub fn phi_backward(
    p: &MatcherParams,
    input: &PairInput,
    tape: &PhiTape,
    dphi: &[f64],
    grad: &mut MatcherParams,
    embed_grads: bool,
) {
    let k = p.kernels.len();
    if let Some(t) = &tape.bp {
        if embed_grads {
            block_backward(
                p,
                &input.target.merged(),
                &input.profile.merged(),
                t,
                dphi,
                grad,
            );
        }
    }
    match (&tape.mfp, &tape.mfmi) {
        (Some(a), Some(b)) => {
            mfp_backward(
                p,
                &input.target,
                &input.profile,
                a,
                &dphi[..k],
                grad,
                embed_grads,
            );
            mfmi_backward(p, input, b, &dphi[k..], grad, embed_grads);
        }
        (Some(a), None) => {
            mfp_backward(p, &input.target, &input.profile, a, dphi, grad, embed_grads)
        }
        (None, Some(b)) => mfmi_backward(p, input, b, dphi, grad, embed_grads),
        (None, None) => {}
    }
}

/// φ for the configured variant.
pub fn phi(p: &MatcherParams, input: &PairInput) -> Vec<f64> {
    phi_forward(p, input).phi
}

fn with_variant(p: &MatcherParams, v: Variant) -> MatcherParams {
    // Only `variant` differs; the scorer is not consulted by φ.
    let mut q = p.clone();
    q.variant = v;
    q
}

pub fn phi_bp(p: &MatcherParams, input: &PairInput) -> Vec<f64> {
    phi(&with_variant(p, Variant::Bp), input)
}

pub fn phi_mfp(p: &MatcherParams, input: &PairInput) -> Vec<f64> {
    phi(&with_variant(p, Variant::Mfp), input)
}

pub fn phi_mfmi(p: &MatcherParams, input: &PairInput) -> Vec<f64> {
    phi(&with_variant(p, Variant::Mfmi), input)
}

pub fn phi_combined(p: &MatcherParams, input: &PairInput) -> Vec<f64> {
    phi(&with_variant(p, Variant::Combined), input)
}

/// `g(φ)`.
pub fn score(phi: &[f64], p: &MatcherParams) -> Result<f64> {
    if phi.len() != p.scorer.input_width() {
        return Err(Error::Shape {
            expected: p.scorer.input_width(),
            found: phi.len(),
        });
    }
    Ok(p.scorer.forward(phi)[0])
}

pub fn triplet_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    (s_neg - s_pos + margin).max(0.0)
}

/// Hinge loss of one triplet; when `grad` is given and the hinge is active,
/// its gradient is added (scaled by `weight`).
pub fn triplet_step(
    p: &MatcherParams,
    pos: &PairInput,
    neg: &PairInput,
    grad: Option<(&mut MatcherParams, f64)>,
    embed_grads: bool,
) -> f64 {
    let tp = phi_forward(p, pos);
    let tn = phi_forward(p, neg);
    let gp = p.scorer.forward_tape(&tp.phi);
    let gn = p.scorer.forward_tape(&tn.phi);
    let loss = triplet_loss(gp.output[0], gn.output[0], p.margin);
    if let Some((grad, weight)) = grad {
        if loss > 0.0 && weight != 0.0 {
            let dphi_p = p.scorer.backward(&gp, &[-weight], &mut grad.scorer);
            let dphi_n = p.scorer.backward(&gn, &[weight], &mut grad.scorer);
            phi_backward(p, pos, &tp, &dphi_p, grad, embed_grads);
            phi_backward(p, neg, &tn, &dphi_n, grad, embed_grads);
        }
    }
    loss
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triplet {
    pub target: TargetPair,
    pub positive: PersonId,
    pub negative: PersonId,
}

/// Up to `negatives_per_target` distinct wrong candidates per instance,
/// drawn uniformly. Returns the triplets and the number of instances
/// skipped for lacking a gold person or a wrong candidate.
pub fn sample_triplets(
    instances: &[CandidateSet],
    negatives_per_target: usize,
    seed: u64,
) -> (Vec<Triplet>, usize) {
    let mut rng = seed::rng(seed);
    let mut out = Vec::new();
    let mut skipped = 0;
    for inst in instances {
        let Some(gold) = inst.gold_person() else {
            skipped += 1;
            continue;
        };
        let wrong: Vec<&PersonId> = inst.candidates.iter().filter(|c| *c != gold).collect();
        if wrong.is_empty() {
            skipped += 1;
            continue;
        }
        let n = negatives_per_target.min(wrong.len());
        for neg in wrong.choose_multiple(&mut rng, n) {
            out.push(Triplet {
                target: inst.target.clone(),
                positive: gold.clone(),
                negative: (*neg).clone(),
            });
        }
    }
    (out, skipped)
}

/// Triplets with their pair inputs encoded once and shared.
#[derive(Debug, Clone, Default)]
pub struct TripletSet {
    pub pairs: Vec<PairInput>,
    /// `(positive pair, negative pair)` indices into `pairs`.
    pub index: Vec<(usize, usize)>,
    pub triplets: Vec<Triplet>,
}

impl TripletSet {
    pub fn encode(encoder: &Encoder<'_>, triplets: &[Triplet]) -> Result<Self> {
        let mut keys: BTreeMap<(TargetPair, PersonId), usize> = BTreeMap::new();
        let mut set = TripletSet::default();
        let mut slot = |set: &mut TripletSet, t: &TargetPair, c: &PersonId| -> Result<usize> {
            if let Some(&i) = keys.get(&(t.clone(), c.clone())) {
                return Ok(i);
            }
            set.pairs.push(encoder.pair(t, c)?);
            keys.insert((t.clone(), c.clone()), set.pairs.len() - 1);
            Ok(set.pairs.len() - 1)
        };
        for t in triplets {
            let a = slot(&mut set, &t.target, &t.positive)?;
            let b = slot(&mut set, &t.target, &t.negative)?;
            set.index.push((a, b));
            set.triplets.push(t.clone());
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Mean hinge loss over `which` triplets and its gradient.
pub fn loss_and_gradient(
    p: &MatcherParams,
    set: &TripletSet,
    which: &[usize],
    embed_grads: bool,
) -> (f64, MatcherParams) {
    let mut grad = p.zeros_like();
    let n = which.len().max(1) as f64;
    let mut total = 0.0;
    for &t in which {
        let (a, b) = set.index[t];
        total += triplet_step(
            p,
            &set.pairs[a],
            &set.pairs[b],
            Some((&mut grad, 1.0 / n)),
            embed_grads,
        );
    }
    (total / n, grad)
}

/// Mean hinge loss over `which` triplets (forward only).
pub fn mean_loss(p: &MatcherParams, set: &TripletSet, which: &[usize]) -> f64 {
    let n = which.len().max(1) as f64;
    which
        .iter()
        .map(|&t| {
            let (a, b) = set.index[t];
            triplet_step(p, &set.pairs[a], &set.pairs[b], None, false)
        })
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MatcherTrainConfig {
    pub batch: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub fine_tune_embeddings: bool,
    pub optimizer: OptimizerKind,
}

impl Default for MatcherTrainConfig {
    fn default() -> Self {
        MatcherTrainConfig {
            batch: 80,
            lr: 0.001,
            epochs: 10,
            seed: 0,
            fine_tune_embeddings: true,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatcherRun {
    pub params: MatcherParams,
    /// Mean triplet loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch descent on the mean triplet hinge loss.
pub fn train_matcher(
    set: &TripletSet,
    mut params: MatcherParams,
    cfg: &MatcherTrainConfig,
) -> Result<MatcherRun> {
    if cfg.batch == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            let (loss, grad) = loss_and_gradient(&params, set, chunk, cfg.fine_tune_embeddings);
            if !loss.is_finite() || !grad.all_finite() {
                let t = &set.triplets[chunk[0]];
                return Err(Error::NonFinite(format!(
                    "matcher loss at batch {b} (first triplet {} / {} / {})",
                    t.target, t.positive, t.negative
                )));
            }
            total += loss * chunk.len() as f64;
            opt.step(&mut params, &grad);
            if !params.all_finite() {
                return Err(Error::NonFinite(format!(
                    "matcher parameters after batch {b}"
                )));
            }
        }
        epoch_losses.push(total / set.len().max(1) as f64);
    }
    Ok(MatcherRun {
        params,
        epoch_losses,
    })
}

/// One ranked candidate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ranked {
    pub person: PersonId,
    pub score: f64,
    pub phi: Vec<f64>,
}

/// A disambiguation instance with its pair inputs, parallel to
/// `set.candidates`.
#[derive(Debug, Clone)]
pub struct EncodedInstance {
    pub set: CandidateSet,
    pub inputs: Vec<PairInput>,
}

impl EncodedInstance {
    pub fn encode(encoder: &Encoder<'_>, set: &CandidateSet) -> Result<Self> {
        let inputs = set
            .candidates
            .iter()
            .map(|c| encoder.pair(&set.target, c))
            .collect::<Result<_>>()?;
        Ok(EncodedInstance {
            set: set.clone(),
            inputs,
        })
    }

    /// Same inputs, gold replaced by NIL and the gold person dropped.
    pub fn without_gold(&self) -> EncodedInstance {
        let set = self.set.without_gold();
        let inputs = self
            .set
            .candidates
            .iter()
            .zip(&self.inputs)
            .filter(|(c, _)| set.candidates.contains(c))
            .map(|(_, i)| i.clone())
            .collect();
        EncodedInstance { set, inputs }
    }

    pub fn rank(&self, p: &MatcherParams) -> Result<RankedInstance> {
        Ok(RankedInstance {
            set: self.set.clone(),
            ranking: rank_inputs(p, self.set.candidates.iter().zip(&self.inputs))?,
        })
    }
}

/// An instance with its candidates ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedInstance {
    pub set: CandidateSet,
    pub ranking: Vec<Ranked>,
}

impl RankedInstance {
    pub fn top(&self) -> Option<&Ranked> {
        self.ranking.first()
    }

    /// Zero-based rank of the gold person.
    pub fn gold_rank(&self) -> Option<usize> {
        let gold = self.set.gold_person()?;
        self.ranking.iter().position(|r| &r.person == gold)
    }

    pub fn ids(&self) -> Vec<PersonId> {
        self.ranking.iter().map(|r| r.person.clone()).collect()
    }
}

/// Descending score, ties by person id.
pub fn sort_ranking(list: &mut [Ranked]) {
    list.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.person.cmp(&b.person))
    });
}

pub fn rank_inputs<'a, I>(p: &MatcherParams, inputs: I) -> Result<Vec<Ranked>>
where
    I: IntoIterator<Item = (&'a PersonId, &'a PairInput)>,
{
    let mut out = Vec::new();
    for (person, input) in inputs {
        let phi = phi(p, input);
        let score = score(&phi, p)?;
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("score of {person}")));
        }
        out.push(Ranked {
            person: person.clone(),
            score,
            phi,
        });
    }
    sort_ranking(&mut out);
    Ok(out)
}

pub fn rank_candidates(
    encoder: &Encoder<'_>,
    p: &MatcherParams,
    set: &CandidateSet,
) -> Result<Vec<Ranked>> {
    let inputs: Vec<PairInput> = set
        .candidates
        .iter()
        .map(|c| encoder.pair(&set.target, c))
        .collect::<Result<_>>()?;
    rank_inputs(p, set.candidates.iter().zip(&inputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(tag: FieldTag, id: u32) -> Tok {
        Tok { tag, id: Some(id) }
    }

    pub(crate) fn params(variant: Variant, dim: usize, vocab: usize, seed: u64) -> MatcherParams {
        use rand::Rng;
        let mut rng = crate::seed::rng(seed);
        let mut gen = |n: usize| {
            (0..n)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        };
        let embeddings = EmbedWeights {
            dim,
            coauthors: gen(vocab * dim),
            content: gen(vocab * dim),
        };
        let cfg = MatcherConfig {
            variant,
            ..MatcherConfig::default()
        };
        let k = cfg.kernels.len();
        let mut widths = vec![variant.phi_width(k)];
        widths.extend(&cfg.hidden);
        widths.push(1);
        MatcherParams {
            variant,
            kernels: cfg.kernels,
            margin: 1.0,
            embeddings,
            field_attention: AttentionParams::zeros(k),
            instance_attention: AttentionParams::zeros(k),
            scorer: Mlp::new(&widths, &mut crate::seed::rng(seed + 1)),
        }
    }

    fn bags(names: &[u32], words: &[u32]) -> FieldBags {
        FieldBags {
            coauthors: Bag::from_toks(names.iter().map(|&i| tok(FieldTag::Coauthors, i))),
            content: Bag::from_toks(words.iter().map(|&i| tok(FieldTag::Content, i))),
        }
    }

    fn pair(target: FieldBags, papers: Vec<FieldBags>) -> PairInput {
        let mut all_names = Vec::new();
        let mut all_words = Vec::new();
        for p in &papers {
            for (t, c) in p.coauthors.toks.iter().zip(&p.coauthors.counts) {
                all_names.extend(core::iter::repeat(*t).take(*c as usize));
            }
            for (t, c) in p.content.toks.iter().zip(&p.content.counts) {
                all_words.extend(core::iter::repeat(*t).take(*c as usize));
            }
        }
        PairInput {
            target,
            profile: FieldBags {
                coauthors: Bag::from_toks(all_names),
                content: Bag::from_toks(all_words),
            },
            instances: papers,
        }
    }

    #[test]
    fn one_paper_person_has_equal_halves() {
        let p = params(Variant::Combined, 8, 10, 3);
        let input = pair(bags(&[0, 1], &[2, 3, 4]), vec![bags(&[1, 5], &[3, 7, 7])]);
        let phi = phi_combined(&p, &input);
        assert_eq!(phi.len(), 22);
        for k in 0..11 {
            assert!((phi[k] - phi[k + 11]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_profile_is_zero() {
        let input = pair(bags(&[0], &[1]), vec![]);
        for v in [Variant::Bp, Variant::Mfp, Variant::Mfmi, Variant::Combined] {
            let p = params(v, 4, 3, 1);
            assert!(phi(&p, &input).iter().all(|x| *x == 0.0), "{v:?}");
        }
    }

    #[test]
    fn two_identical_papers_equal_one() {
        let p = params(Variant::Mfmi, 6, 10, 5);
        let paper = bags(&[1, 2], &[4, 5, 6]);
        let one = pair(bags(&[1, 3], &[4, 9]), vec![paper.clone()]);
        let two = pair(bags(&[1, 3], &[4, 9]), vec![paper.clone(), paper]);
        let a = phi_mfmi(&p, &one);
        let b = phi_mfmi(&p, &two);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a[0] - phi_mfp(&p, &one)[0]).abs() < 1e-12);
    }

    #[test]
    fn score_width_is_checked() {
        let p = params(Variant::Bp, 4, 3, 1);
        assert_eq!(
            score(&[0.0; 22], &p).unwrap_err(),
            Error::Shape {
                expected: 11,
                found: 22
            }
        );
    }

    #[test]
    fn triplet_loss_cases() {
        assert_eq!(triplet_loss(0.4, 0.4, 1.0), 1.0);
        assert_eq!(triplet_loss(2.0, 0.5, 1.0), 0.0);
        assert!((triplet_loss(0.2, 0.5, 1.0) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn ranking_ties_by_id() {
        let mut list = vec![
            Ranked {
                person: "b".into(),
                score: 0.5,
                phi: vec![],
            },
            Ranked {
                person: "a".into(),
                score: 0.5,
                phi: vec![],
            },
            Ranked {
                person: "c".into(),
                score: 0.9,
                phi: vec![],
            },
        ];
        sort_ranking(&mut list);
        let ids: Vec<_> = list.iter().map(|r| r.person.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn sampling_caps_at_available() {
        let inst = CandidateSet {
            target: TargetPair {
                paper: "p".into(),
                author: 0,
            },
            candidates: vec!["a".into(), "b".into(), "c".into()],
            gold: crate::corpus::Gold::Person("a".into()),
        };
        let lonely = CandidateSet {
            candidates: vec!["a".into()],
            ..inst.clone()
        };
        let (t, skipped) = sample_triplets(&[inst.clone(), lonely], 9, 1);
        assert_eq!(t.len(), 2);
        assert_eq!(skipped, 1);
        let negs: alloc::collections::BTreeSet<_> = t.iter().map(|x| &x.negative).collect();
        assert_eq!(negs.len(), 2);
        assert_eq!(
            sample_triplets(&[inst.clone()], 1, 7),
            sample_triplets(&[inst], 1, 7)
        );
    }
}
