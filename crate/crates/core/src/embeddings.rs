//! Token embeddings, pre-trained with skip-gram and negative sampling.
//!
//! Author names and content words live in separate tables. The context of a
//! token is every other token of the same field in the same paper.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Corpus, FieldTag};
use crate::text::Tokenizer;
use crate::{math, seed, Error, Result};

/// Token -> row index, rows in lexicographic token order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocab {
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let index: BTreeMap<String, u32> = tokens.into_iter().map(|t| (t, 0)).collect();
        let tokens: Vec<String> = index.keys().cloned().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Vectors of one field, row-major `len × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBlock {
    pub tag: FieldTag,
    pub dim: usize,
    pub vocab: Vocab,
    pub vectors: Vec<f64>,
}

impl EmbeddingBlock {
    pub fn row(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.vectors[i..i + self.dim]
    }
}

/// Both per-field blocks. Unknown tokens map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub coauthors: EmbeddingBlock,
    pub content: EmbeddingBlock,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(coauthors: EmbeddingBlock, content: EmbeddingBlock) -> Result<Self> {
        if coauthors.dim != content.dim {
            return Err(Error::Shape {
                expected: coauthors.dim,
                found: content.dim,
            });
        }
        for b in [&coauthors, &content] {
            if b.vectors.len() != b.vocab.len() * b.dim {
                return Err(Error::Shape {
                    expected: b.vocab.len() * b.dim,
                    found: b.vectors.len(),
                });
            }
        }
        let dim = coauthors.dim;
        Ok(EmbeddingTable {
            dim,
            coauthors,
            content,
            zero: vec![0.0; dim],
        })
    }

    pub fn block(&self, tag: FieldTag) -> &EmbeddingBlock {
        match tag {
            FieldTag::Coauthors => &self.coauthors,
            FieldTag::Content => &self.content,
        }
    }

    pub fn id(&self, tag: FieldTag, token: &str) -> Option<u32> {
        self.block(tag).vocab.get(token)
    }

    /// The token's vector, or the all-zero out-of-vocabulary vector.
    pub fn lookup(&self, tag: FieldTag, token: &str) -> &[f64] {
        let block = self.block(tag);
        match block.vocab.get(token) {
            Some(id) => block.row(id),
            None => &self.zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SkipGramConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly to `lr * 1e-4`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 0,
        }
    }
}

/// Trained block plus the mean per-pair loss of each epoch.
#[derive(Debug, Clone)]
pub struct SkipGramRun {
    pub block: EmbeddingBlock,
    pub epoch_losses: Vec<f64>,
}

/// Per-paper token bags of one field, in paper-id order.
pub fn field_documents(corpus: &Corpus, tokenizer: &Tokenizer, tag: FieldTag) -> Vec<Vec<String>> {
    corpus
        .papers()
        .map(|p| tokenizer.paper(p, None).field(tag).to_vec())
        .collect()
}

pub fn train_skipgram(
    corpus: &Corpus,
    tokenizer: &Tokenizer,
    tag: FieldTag,
    cfg: &SkipGramConfig,
) -> Result<SkipGramRun> {
    train_skipgram_docs(&field_documents(corpus, tokenizer, tag), tag, cfg)
}

/// Skip-gram with negative sampling where every token of a document is
/// context for every other token of that document.
pub fn train_skipgram_docs(
    docs: &[Vec<String>],
    tag: FieldTag,
    cfg: &SkipGramConfig,
) -> Result<SkipGramRun> {
    if cfg.dim == 0 || cfg.lr <= 0.0 {
        return Err(Error::Config("skip-gram needs dim > 0 and lr > 0".into()));
    }
    if !docs.iter().any(|d| d.len() >= 2) {
        return Err(Error::EmptyVocabulary(tag));
    }
    let vocab = Vocab::from_tokens(docs.iter().flatten().cloned());
    let dim = cfg.dim;
    let encoded: Vec<Vec<u32>> = docs
        .iter()
        .filter(|d| d.len() >= 2)
        .map(|d| d.iter().map(|t| vocab.get(t).unwrap()).collect())
        .collect();

    // unigram^0.75 cumulative table for negatives
    let mut counts = vec![0u64; vocab.len()];
    for d in docs {
        for t in d {
            counts[vocab.get(t).unwrap() as usize] += 1;
        }
    }
    let mut cumulative = Vec::with_capacity(counts.len());
    let mut acc = 0.0;
    for &c in &counts {
        acc += math::powf(c as f64, 0.75);
        cumulative.push(acc);
    }

    let mut rng = seed::rng(cfg.seed);
    let scale = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    let mut output = vec![0.0; vocab.len() * dim];

    let pairs_per_epoch: usize = encoded.iter().map(|d| d.len() * (d.len() - 1)).sum();
    let total = (pairs_per_epoch * cfg.epochs).max(1) as f64;
    let mut done = 0usize;
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut grad = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut negs = Vec::with_capacity(cfg.negatives);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &di in &order {
            let doc = &encoded[di];
            for (i, &center) in doc.iter().enumerate() {
                for (j, &context) in doc.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let lr = cfg.lr * (1.0 - done as f64 / total).max(1e-4);
                    done += 1;
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let r = rng.gen::<f64>() * acc;
                        let k = cumulative.partition_point(|&c| c <= r).min(vocab.len() - 1);
                        negs.push(k as u32);
                    }
                    let h = center as usize * dim;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let targets =
                        core::iter::once((context, 1.0)).chain(negs.iter().map(|&n| (n, 0.0)));
                    for (t, label) in targets {
                        if label == 0.0 && t == context {
                            continue;
                        }
                        let o = t as usize * dim;
                        let score = math::dot(&input[h..h + dim], &output[o..o + dim]);
                        loss += if label == 1.0 {
                            math::softplus(-score)
                        } else {
                            math::softplus(score)
                        };
                        let g = lr * (label - math::sigmoid(score));
                        for d in 0..dim {
                            grad[d] += g * output[o + d];
                            output[o + d] += g * input[h + d];
                        }
                    }
                    for d in 0..dim {
                        input[h + d] += grad[d];
                    }
                }
            }
        }
        epoch_losses.push(loss / pairs_per_epoch.max(1) as f64);
    }
    if input.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("skip-gram vectors".into()));
    }
    Ok(SkipGramRun {
        block: EmbeddingBlock {
            tag,
            dim,
            vocab,
            vectors: input,
        },
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        math::dot(a, b) / (math::norm(a) * math::norm(b))
    }

    fn planted() -> Vec<Vec<String>> {
        // x and y always co-occur; z only with w.
        let mut docs = Vec::new();
        for i in 0..60 {
            let filler = alloc::format!("f{}", i % 7);
            docs.push(vec!["x".to_string(), "y".to_string(), filler.clone()]);
            docs.push(vec![
                "z".to_string(),
                "w".to_string(),
                alloc::format!("g{}", i % 5),
            ]);
        }
        docs
    }

    #[test]
    fn cooccurring_tokens_end_up_closer() {
        let cfg = SkipGramConfig {
            dim: 16,
            epochs: 20,
            ..SkipGramConfig::default()
        };
        let run = train_skipgram_docs(&planted(), FieldTag::Content, &cfg).unwrap();
        let b = &run.block;
        let v = |t: &str| b.row(b.vocab.get(t).unwrap());
        assert!(cosine(v("x"), v("y")) > cosine(v("x"), v("z")));
    }

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SkipGramConfig::default();
        let a = train_skipgram_docs(&planted(), FieldTag::Content, &cfg).unwrap();
        let b = train_skipgram_docs(&planted(), FieldTag::Content, &cfg).unwrap();
        assert_eq!(a.block, b.block);
        assert_eq!(a.block.vectors.len(), a.block.vocab.len() * 100);
    }

    #[test]
    fn loss_trends_down() {
        let cfg = SkipGramConfig {
            dim: 16,
            epochs: 4,
            ..SkipGramConfig::default()
        };
        let run = train_skipgram_docs(&planted(), FieldTag::Content, &cfg).unwrap();
        assert!(
            run.epoch_losses.windows(2).all(|w| w[1] < w[0]),
            "{:?}",
            run.epoch_losses
        );
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let docs = vec![vec!["solo".to_string()], vec![]];
        assert_eq!(
            train_skipgram_docs(&docs, FieldTag::Coauthors, &SkipGramConfig::default())
                .unwrap_err(),
            Error::EmptyVocabulary(FieldTag::Coauthors)
        );
    }

    #[test]
    fn lookup_falls_back_to_zero() {
        let run =
            train_skipgram_docs(&planted(), FieldTag::Content, &SkipGramConfig::default()).unwrap();
        let names =
            train_skipgram_docs(&planted(), FieldTag::Coauthors, &SkipGramConfig::default())
                .unwrap();
        let table = EmbeddingTable::new(names.block, run.block).unwrap();
        assert_eq!(table.lookup(FieldTag::Content, "unseen"), &[0.0; 100][..]);
        let x = table.lookup(FieldTag::Content, "x");
        assert!(x.iter().any(|v| *v != 0.0));
    }
}
