//! On-disk formats: corpus JSON, embedding tables, checkpoints, JSON-lines
//! and CSV dumps.
//!
//! Floating-point blocks are little-endian `f32`, row-major.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use namefly_core::attention::AttentionParams;
use namefly_core::baselines::{FeatureVector, FEATURE_NAMES};
use namefly_core::corpus::{Corpus, FieldTag, Paper, Person};
use namefly_core::decider::DeciderParams;
use namefly_core::embeddings::{EmbeddingBlock, EmbeddingTable, Vocab};
use namefly_core::kernel::KernelBank;
use namefly_core::matcher::{EmbedWeights, MatcherParams, Variant};
use namefly_core::mlp::{Dense, Mlp};
use namefly_core::optim::Parameters;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const FORMAT_VERSION: u32 = 1;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::data(e.to_string()).at(path))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::data(e.to_string()).at(dir))?;
    }
    fs::write(path, bytes).map_err(|e| AppError::data(e.to_string()).at(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| AppError::from(e).at(path))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    write_bytes(path, &out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| AppError::data(e.to_string()).at(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line)
                .map_err(|e| AppError::data(format!("line {}: {e}", i + 1)).at(path))?,
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusFile {
    pub papers: Vec<Paper>,
    pub persons: Vec<Person>,
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let file: CorpusFile = serde_json::from_str(text)?;
    Ok(Corpus::new(file.papers, file.persons)?)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus(&read_text(path)?).map_err(|e| e.at(path))
}

/// Papers and persons in id order.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = CorpusFile {
        papers: corpus.papers().cloned().collect(),
        persons: corpus.persons().cloned().collect(),
    };
    write_json(path, &file)
}

fn push_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
}

fn read_f32s(bytes: &[u8], offset: usize, len: usize, path: &Path) -> Result<Vec<f64>> {
    let end = offset + len * 4;
    if end > bytes.len() {
        return Err(AppError::data(format!(
            "block at byte {offset} with {len} floats runs past the end ({} bytes)",
            bytes.len()
        ))
        .at(path));
    }
    Ok(bytes[offset..end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedBlockManifest {
    pub tag: FieldTag,
    pub vocab_size: usize,
    /// Row `i` of the block belongs to `vocab[i]`.
    pub vocab: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedManifest {
    pub format_version: u32,
    pub dim: usize,
    /// In file order: coauthors, then content.
    pub blocks: Vec<EmbedBlockManifest>,
}

fn check_version(found: u32, path: &Path) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(AppError::data(format!(
            "unsupported format version {found} (expected {FORMAT_VERSION})"
        ))
        .at(path));
    }
    Ok(())
}

pub fn save_embeddings(table: &EmbeddingTable, manifest: &Path, bin: &Path) -> Result<()> {
    let blocks = [&table.coauthors, &table.content];
    let m = EmbedManifest {
        format_version: FORMAT_VERSION,
        dim: table.dim,
        blocks: blocks
            .iter()
            .map(|b| EmbedBlockManifest {
                tag: b.tag,
                vocab_size: b.vocab.len(),
                vocab: b.vocab.tokens().to_vec(),
            })
            .collect(),
    };
    let mut bytes = Vec::new();
    for b in blocks {
        push_f32s(&mut bytes, &b.vectors);
    }
    write_json(manifest, &m)?;
    write_bytes(bin, &bytes)
}

pub fn load_embeddings(manifest: &Path, bin: &Path) -> Result<EmbeddingTable> {
    let m: EmbedManifest = read_json(manifest)?;
    check_version(m.format_version, manifest)?;
    let bytes = fs::read(bin).map_err(|e| AppError::data(e.to_string()).at(bin))?;
    let want = [FieldTag::Coauthors, FieldTag::Content];
    if m.blocks.len() != 2 || m.blocks.iter().map(|b| b.tag).ne(want) {
        return Err(AppError::data("expected a coauthors block then a content block").at(manifest));
    }
    let mut offset = 0;
    let mut built = Vec::new();
    for b in &m.blocks {
        if b.vocab.len() != b.vocab_size {
            return Err(AppError::data("vocab_size disagrees with vocab").at(manifest));
        }
        let vectors = read_f32s(&bytes, offset, b.vocab_size * m.dim, bin)?;
        offset += b.vocab_size * m.dim * 4;
        let vocab = Vocab::from_tokens(b.vocab.iter().cloned());
        if vocab.tokens() != b.vocab.as_slice() {
            return Err(AppError::data("vocabulary must be sorted and distinct").at(manifest));
        }
        built.push(EmbeddingBlock {
            tag: b.tag,
            dim: m.dim,
            vocab,
            vectors,
        });
    }
    if offset != bytes.len() {
        return Err(AppError::data(format!("{} trailing bytes", bytes.len() - offset)).at(bin));
    }
    let content = built.pop().unwrap();
    let coauthors = built.pop().unwrap();
    Ok(EmbeddingTable::new(coauthors, content)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub name: String,
    pub len: usize,
    /// Byte offset into `params.bin`.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherManifest {
    pub format_version: u32,
    pub kind: String,
    pub variant: Variant,
    #[serde(rename = "K")]
    pub k: usize,
    pub kernels: KernelBank,
    pub dim: usize,
    pub vocab_sizes: [usize; 2],
    pub margin: f64,
    /// `(inputs, outputs)` per scorer layer.
    pub layer_shapes: Vec<(usize, usize)>,
    pub blocks: Vec<BlockEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeciderManifest {
    pub format_version: u32,
    pub kind: String,
    pub layer_shapes: Vec<(usize, usize)>,
    pub blocks: Vec<BlockEntry>,
}

fn pack<P: Parameters>(p: &P) -> (Vec<BlockEntry>, Vec<u8>) {
    let mut bytes = Vec::new();
    let mut entries = Vec::new();
    for (name, g) in p.group_names().into_iter().zip(p.groups()) {
        entries.push(BlockEntry {
            name,
            len: g.len(),
            offset: bytes.len(),
        });
        push_f32s(&mut bytes, g);
    }
    (entries, bytes)
}

fn unpack<P: Parameters>(
    p: &mut P,
    entries: &[BlockEntry],
    bytes: &[u8],
    path: &Path,
) -> Result<()> {
    let names = p.group_names();
    let found: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
    if names.iter().map(String::as_str).ne(found.iter().copied()) {
        return Err(
            AppError::data(format!("parameter blocks {found:?} do not match {names:?}")).at(path),
        );
    }
    let mut end = 0;
    for (g, e) in p.groups_mut().into_iter().zip(entries) {
        if g.len() != e.len {
            return Err(AppError::data(format!(
                "block {} has {} values, expected {}",
                e.name,
                e.len,
                g.len()
            ))
            .at(path));
        }
        g.copy_from_slice(&read_f32s(bytes, e.offset, e.len, path)?);
        end = end.max(e.offset + e.len * 4);
    }
    if end != bytes.len() {
        return Err(AppError::data("parameter file size disagrees with manifest").at(path));
    }
    Ok(())
}

fn mlp_of(shapes: &[(usize, usize)], path: &Path) -> Result<Mlp> {
    if shapes.is_empty() || shapes.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err(AppError::data(format!("inconsistent layer shapes {shapes:?}")).at(path));
    }
    Ok(Mlp {
        layers: shapes.iter().map(|&(i, o)| Dense::zeros(i, o)).collect(),
    })
}

pub fn save_matcher(p: &MatcherParams, dir: &Path) -> Result<()> {
    let (blocks, bytes) = pack(p);
    let dim = p.embeddings.dim;
    let m = MatcherManifest {
        format_version: FORMAT_VERSION,
        kind: "matcher".into(),
        variant: p.variant,
        k: p.kernels.len(),
        kernels: p.kernels.clone(),
        dim,
        vocab_sizes: [
            p.embeddings.coauthors.len() / dim.max(1),
            p.embeddings.content.len() / dim.max(1),
        ],
        margin: p.margin,
        layer_shapes: p.scorer.shapes(),
        blocks,
    };
    write_json(&dir.join("manifest.json"), &m)?;
    write_bytes(&dir.join("params.bin"), &bytes)
}

pub fn load_matcher(dir: &Path) -> Result<MatcherParams> {
    let mpath = dir.join("manifest.json");
    let m: MatcherManifest = read_json(&mpath)?;
    check_version(m.format_version, &mpath)?;
    if m.kind != "matcher" {
        return Err(
            AppError::data(format!("checkpoint kind {:?} is not a matcher", m.kind)).at(&mpath),
        );
    }
    let kernels = KernelBank::new(m.kernels.mu.clone(), m.kernels.sigma.clone())
        .map_err(|e| AppError::data(e.to_string()).at(&mpath))?;
    let scorer = mlp_of(&m.layer_shapes, &mpath)?;
    if scorer.input_width() != m.variant.phi_width(kernels.len()) || scorer.output_width() != 1 {
        return Err(AppError::data(format!(
            "shape mismatch: scorer input width {} does not fit variant {}",
            scorer.input_width(),
            m.variant.as_str()
        ))
        .at(&mpath));
    }
    let k = kernels.len();
    let mut p = MatcherParams {
        variant: m.variant,
        kernels,
        margin: m.margin,
        embeddings: EmbedWeights {
            dim: m.dim,
            coauthors: vec![0.0; m.vocab_sizes[0] * m.dim],
            content: vec![0.0; m.vocab_sizes[1] * m.dim],
        },
        field_attention: AttentionParams::zeros(k),
        instance_attention: AttentionParams::zeros(k),
        scorer,
    };
    let bpath = dir.join("params.bin");
    let bytes = fs::read(&bpath).map_err(|e| AppError::data(e.to_string()).at(&bpath))?;
    unpack(&mut p, &m.blocks, &bytes, &bpath)?;
    Ok(p)
}

pub fn save_decider(p: &DeciderParams, dir: &Path) -> Result<()> {
    let (blocks, bytes) = pack(p);
    let m = DeciderManifest {
        format_version: FORMAT_VERSION,
        kind: "decider".into(),
        layer_shapes: p.net.shapes(),
        blocks,
    };
    write_json(&dir.join("manifest.json"), &m)?;
    write_bytes(&dir.join("params.bin"), &bytes)
}

pub fn load_decider(dir: &Path) -> Result<DeciderParams> {
    let mpath = dir.join("manifest.json");
    let m: DeciderManifest = read_json(&mpath)?;
    check_version(m.format_version, &mpath)?;
    if m.kind != "decider" {
        return Err(
            AppError::data(format!("checkpoint kind {:?} is not a decider", m.kind)).at(&mpath),
        );
    }
    let net = mlp_of(&m.layer_shapes, &mpath)?;
    if net.output_width() != 2 {
        return Err(AppError::data("decider must have two outputs").at(&mpath));
    }
    let mut p = DeciderParams { net };
    let bpath = dir.join("params.bin");
    let bytes = fs::read(&bpath).map_err(|e| AppError::data(e.to_string()).at(&bpath))?;
    unpack(&mut p, &m.blocks, &bytes, &bpath)?;
    Ok(p)
}

/// Copy a checkpoint directory (manifest and parameters).
pub fn copy_checkpoint(from: &Path, to: &Path) -> Result<()> {
    fs::create_dir_all(to).map_err(|e| AppError::data(e.to_string()).at(to))?;
    for name in ["manifest.json", "params.bin"] {
        fs::copy(from.join(name), to.join(name))
            .map_err(|e| AppError::data(e.to_string()).at(&from.join(name)))?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row of the feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub features: FeatureVector,
    pub target: String,
    pub person: String,
    pub label: bool,
}

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(path).map_err(|e| AppError::data(e.to_string()).at(path))?;
    let mut w = BufWriter::new(file);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.extend(["target", "person", "label"]);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells: Vec<String> = r.features.iter().map(|v| format!("{v}")).collect();
        cells.push(csv_field(&r.target));
        cells.push(csv_field(&r.person));
        cells.push((r.label as u8).to_string());
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_file_is_a_parse_error() {
        let e = parse_corpus("").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.reason.contains("line 1"), "{}", e.reason);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"papers": [], "persons": [], "extra": 1}"#;
        assert!(parse_corpus(text).is_err());
    }

    #[test]
    fn dangling_person_paper() {
        let text = r#"{"papers": [], "persons": [{"id": "a", "name": "A B", "papers": ["px"]}]}"#;
        let e = parse_corpus(text).unwrap_err();
        assert!(e.reason.contains("px"), "{}", e.reason);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
