//! Finite-difference gradient fixtures shared by the core gradient tests
//! and the acceptance suite.

use namefly_core::attention::AttentionParams;
use namefly_core::corpus::{FieldTag, TargetPair};
use namefly_core::decider::{self, DeciderConfig, DeciderParams, DecisionInstance};
use namefly_core::kernel::KernelBank;
use namefly_core::matcher::{
    self, Bag, EmbedWeights, FieldBags, MatcherParams, PairInput, Tok, Triplet, TripletSet, Variant,
};
use namefly_core::mlp::Mlp;
use namefly_core::optim::Parameters;
use namefly_core::seed;
use rand::Rng;

pub const H: f64 = 1e-5;

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn bag(rng: &mut impl Rng, tag: FieldTag, vocab: u32, n: usize) -> Bag {
    Bag::from_toks((0..n).map(|_| Tok {
        tag,
        // an occasional out-of-vocabulary token
        id: if rng.gen_bool(0.1) {
            None
        } else {
            Some(rng.gen_range(0..vocab))
        },
    }))
}

fn fields(rng: &mut impl Rng, vocab: u32) -> FieldBags {
    let names = rng.gen_range(1..5);
    let words = rng.gen_range(2..8);
    FieldBags {
        coauthors: bag(rng, FieldTag::Coauthors, vocab, names),
        content: bag(rng, FieldTag::Content, vocab, words),
    }
}

fn pair(rng: &mut impl Rng, target: &FieldBags, vocab: u32) -> PairInput {
    let papers: Vec<FieldBags> = (0..rng.gen_range(1..4))
        .map(|_| fields(rng, vocab))
        .collect();
    let merge = |f: fn(&FieldBags) -> &Bag| {
        Bag::from_toks(papers.iter().flat_map(|p| {
            let b = f(p);
            b.toks
                .iter()
                .zip(&b.counts)
                .flat_map(|(t, c)| std::iter::repeat(*t).take(*c as usize))
                .collect::<Vec<_>>()
        }))
    };
    PairInput {
        target: target.clone(),
        profile: FieldBags {
            coauthors: merge(|p| &p.coauthors),
            content: merge(|p| &p.content),
        },
        instances: papers,
    }
}

pub fn fixture(variant: Variant, seed_value: u64) -> (MatcherParams, TripletSet) {
    let mut rng = seed::rng(seed_value);
    let (dim, vocab) = (5, 9u32);
    let bank = KernelBank::default();
    let k = bank.len();
    let width = variant.phi_width(k);
    let mut scorer = Mlp::new(&[width, 8, 4, 1], &mut rng);
    // keep g's input scale moderate so the hinge stays active
    for w in &mut scorer.layers[0].weights {
        *w *= 0.05;
    }
    let params = MatcherParams {
        variant,
        kernels: bank,
        margin: 1.0,
        embeddings: EmbedWeights {
            dim,
            coauthors: random_vec(&mut rng, vocab as usize * dim, 1.0),
            content: random_vec(&mut rng, vocab as usize * dim, 1.0),
        },
        field_attention: AttentionParams {
            w: random_vec(&mut rng, k, 0.05),
            b: 0.1,
        },
        instance_attention: AttentionParams {
            w: random_vec(&mut rng, k, 0.05),
            b: -0.2,
        },
        scorer,
    };
    let mut set = TripletSet::default();
    for t in 0..3 {
        let target = fields(&mut rng, vocab);
        set.pairs.push(pair(&mut rng, &target, vocab));
        set.pairs.push(pair(&mut rng, &target, vocab));
        set.index.push((2 * t, 2 * t + 1));
        set.triplets.push(Triplet {
            target: TargetPair {
                paper: format!("p{t}").into(),
                author: 0,
            },
            positive: "a".into(),
            negative: "b".into(),
        });
    }
    (params, set)
}

/// Largest per-component |a - n| / max(|a|, |n|, floor).
pub fn compare<P: Parameters + Clone>(
    params: &P,
    analytic: &P,
    loss: impl Fn(&P) -> f64,
    floor: f64,
) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let grads: Vec<Vec<f64>> = analytic.groups().iter().map(|g| g.to_vec()).collect();
    for (gi, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.groups_mut()[gi][i] += H;
            let mut minus = params.clone();
            minus.groups_mut()[gi][i] -= H;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * H);
            let a = g[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, checked)
}

/// Worst relative error, number of checked components and the loss of the
/// matcher fixture.
pub fn matcher_check(variant: Variant, seed_value: u64) -> (f64, usize, f64) {
    let (params, set) = fixture(variant, seed_value);
    let all: Vec<usize> = (0..set.len()).collect();
    let (loss, grad) = matcher::loss_and_gradient(&params, &set, &all, true);
    let (worst, n) = compare(&params, &grad, |p| matcher::mean_loss(p, &set, &all), 1e-6);
    (worst, n, loss)
}

pub fn decider_check(s: u64) -> (f64, usize) {
    let mut rng = seed::rng(200 + s);
    let params = DeciderParams::new(&DeciderConfig::default(), 22, 300 + s);
    let data: Vec<DecisionInstance> = (0..10)
        .map(|i| DecisionInstance {
            target: TargetPair {
                paper: format!("p{i}").into(),
                author: 0,
            },
            person: "a".into(),
            label: i % 2 == 0,
            phi: random_vec(&mut rng, 22, 3.0),
        })
        .collect();
    let all: Vec<usize> = (0..data.len()).collect();
    let (_, grad) = decider::loss_and_gradient(&params, &data, &all);
    compare(&params, &grad, |p| decider::mean_loss(p, &data), 1e-6)
}
