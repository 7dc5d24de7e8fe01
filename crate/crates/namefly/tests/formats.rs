//! File format round trips and rejection of malformed inputs.

use namefly::formats::{self, FeatureRow};
use namefly_core::corpus::{
    gen_synthetic, AuthorSlot, Corpus, FieldTag, Paper, Person, SynthConfig,
};
use namefly_core::decider::{DeciderConfig, DeciderParams};
use namefly_core::embeddings::{EmbeddingBlock, EmbeddingTable, Vocab};
use namefly_core::matcher::{MatcherConfig, MatcherParams, Variant};
use namefly_core::optim::Parameters;
use proptest::prelude::*;

fn block(tag: FieldTag, words: &[&str], dim: usize) -> EmbeddingBlock {
    let vocab = Vocab::from_tokens(words.iter().map(|w| w.to_string()));
    let vectors = (0..vocab.len() * dim)
        .map(|i| (i as f64 * 0.37).sin() / 3.0)
        .collect();
    EmbeddingBlock {
        tag,
        dim,
        vocab,
        vectors,
    }
}

fn table() -> EmbeddingTable {
    EmbeddingTable::new(
        block(
            FieldTag::Coauthors,
            &["ann lee", "bo chen", "ivo petrov"],
            6,
        ),
        block(
            FieldTag::Content,
            &["kernel", "pooling", "ranking", "graph"],
            6,
        ),
    )
    .unwrap()
}

/// What a parameter vector looks like after a trip through f32 storage.
fn f32_rounded<P: Parameters + Clone>(p: &P) -> P {
    let mut q = p.clone();
    for g in q.groups_mut() {
        g.iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    q
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z ]{0,12}",
        Just("quote \" and \\ back".to_string()),
        Just("Ünïcødé — 名前".to_string()),
    ]
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (
        1usize..5,
        prop::collection::vec((text(), text(), 1990i64..2030), 1..6),
    )
        .prop_map(|(persons, papers)| {
            let papers: Vec<Paper> = papers
                .into_iter()
                .enumerate()
                .map(|(i, (title, abs, year))| Paper {
                    id: format!("x{i}").into(),
                    title,
                    abstract_text: abs,
                    keywords: vec!["k w".into()],
                    venue: "V".into(),
                    year,
                    authors: (0..persons)
                        .map(|p| AuthorSlot {
                            name: format!("Person Number{p}"),
                            org: String::new(),
                        })
                        .collect(),
                })
                .collect();
            let ids: Vec<_> = papers.iter().map(|p| p.id.clone()).collect();
            let persons = (0..persons)
                .map(|p| Person {
                    id: format!("u{p}").into(),
                    name: format!("Person Number{p}"),
                    papers: ids.clone(),
                })
                .collect();
            Corpus::new(papers, persons).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn corpus_round_trips(c in corpus_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        formats::save_corpus(&c, &path).unwrap();
        prop_assert_eq!(formats::load_corpus(&path).unwrap(), c);
    }

    #[test]
    fn synthetic_corpus_round_trips(seed in any::<u64>()) {
        let cfg = SynthConfig { names: 2, persons_per_name: 2, papers_per_person: 4, ..SynthConfig::default() };
        let c = gen_synthetic(&cfg, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        formats::save_corpus(&c, &path).unwrap();
        prop_assert_eq!(formats::load_corpus(&path).unwrap(), c);
    }
}

#[test]
fn embeddings_round_trip_through_f32() {
    let dir = tempfile::tempdir().unwrap();
    let (m, b) = (dir.path().join("e.manifest"), dir.path().join("e.bin"));
    let t = table();
    formats::save_embeddings(&t, &m, &b).unwrap();
    let back = formats::load_embeddings(&m, &b).unwrap();
    for tag in FieldTag::ALL {
        let (x, y) = (t.block(tag), back.block(tag));
        assert_eq!(x.vocab, y.vocab);
        let want: Vec<f64> = x.vectors.iter().map(|v| *v as f32 as f64).collect();
        assert_eq!(y.vectors, want);
    }
}

#[test]
fn truncated_embedding_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (m, b) = (dir.path().join("e.manifest"), dir.path().join("e.bin"));
    formats::save_embeddings(&table(), &m, &b).unwrap();
    let bytes = std::fs::read(&b).unwrap();
    std::fs::write(&b, &bytes[..bytes.len() - 4]).unwrap();
    assert_eq!(formats::load_embeddings(&m, &b).unwrap_err().exit_code(), 2);
    std::fs::write(&b, [bytes.as_slice(), &[0u8; 4]].concat()).unwrap();
    assert_eq!(formats::load_embeddings(&m, &b).unwrap_err().exit_code(), 2);
}

#[test]
fn matcher_checkpoints_round_trip() {
    for variant in [Variant::Bp, Variant::Mfp, Variant::Mfmi, Variant::Combined] {
        let cfg = MatcherConfig {
            variant,
            ..MatcherConfig::default()
        };
        let p = MatcherParams::new(&cfg, &table(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("matcher.ckpt");
        formats::save_matcher(&p, &path).unwrap();
        let back = formats::load_matcher(&path).unwrap();
        assert_eq!(back, f32_rounded(&p), "{variant:?}");
        // a second trip is lossless
        let again = dir.path().join("again.ckpt");
        formats::save_matcher(&back, &again).unwrap();
        assert_eq!(formats::load_matcher(&again).unwrap(), back);
    }
}

#[test]
fn decider_checkpoints_round_trip() {
    let p = DeciderParams::new(&DeciderConfig::default(), 22, 8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decider.ckpt");
    formats::save_decider(&p, &path).unwrap();
    assert_eq!(formats::load_decider(&path).unwrap(), f32_rounded(&p));
}

#[test]
fn missing_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = formats::load_matcher(&dir.path().join("nope.ckpt")).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn feature_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let rows = vec![FeatureRow {
        features: [0.5; 22],
        target: "p1#0".into(),
        person: "a,b".into(),
        label: true,
    }];
    formats::write_features_csv(&path, &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 25);
    assert!(lines[1].ends_with("p1#0,\"a,b\",1"));
}
