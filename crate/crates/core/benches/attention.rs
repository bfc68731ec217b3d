//! Additive vs dot-product attention scoring, forward plus backward, over a
//! grid of source lengths and hidden widths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lyricgen_core::flops::default_grid;
use lyricgen_core::kernels::{
    attn_scores, attn_scores_backward, AttentionParams, EncoderStates, StateGrads,
};
use lyricgen_core::model::AttentionVariant;
use lyricgen_core::tensor::Tensor;
use lyricgen_core::util::seeded_rng;

use rand::Rng as _;

fn rand_tensor(shape: &[usize], rng: &mut lyricgen_core::util::Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-0.5..0.5);
    }
    t
}

fn setup(
    src_len: usize,
    hidden: usize,
    variant: AttentionVariant,
) -> (Tensor, EncoderStates, AttentionParams) {
    let mut rng = seeded_rng(42);
    let enc = 2 * hidden;
    let states = EncoderStates {
        sentence_states: (0..src_len).map(|_| rand_tensor(&[enc], &mut rng)).collect(),
        theme_states: [rand_tensor(&[enc], &mut rng), rand_tensor(&[enc], &mut rng)],
        final_state: rand_tensor(&[enc], &mut rng),
    };
    let params = match variant {
        AttentionVariant::Additive => AttentionParams::Additive {
            w: rand_tensor(&[hidden, hidden], &mut rng),
            u: rand_tensor(&[hidden, enc], &mut rng),
            v: rand_tensor(&[hidden], &mut rng),
        },
        AttentionVariant::Dot => AttentionParams::Dot {
            w: rand_tensor(&[hidden, enc], &mut rng),
        },
    };
    let s_prev = rand_tensor(&[hidden], &mut rng);
    (s_prev, states, params)
}

fn score_fwd_bwd(s_prev: &Tensor, states: &EncoderStates, params: &AttentionParams) -> f64 {
    let (scores, cache) = attn_scores(s_prev, states, params).unwrap();
    let de = vec![1.0; scores.len()];
    let mut grads = match params {
        AttentionParams::Additive { w, u, v } => AttentionParams::Additive {
            w: w.zeros_like(),
            u: u.zeros_like(),
            v: v.zeros_like(),
        },
        AttentionParams::Dot { w } => AttentionParams::Dot { w: w.zeros_like() },
    };
    let mut dstates = StateGrads::zeros_for(states);
    let ds = attn_scores_backward(&de, s_prev, states, &cache, params, &mut grads, &mut dstates);
    scores.data().iter().sum::<f64>() + ds[0]
}

fn bench_attention(c: &mut Criterion) {
    let mut group = c.benchmark_group("attention_scoring");
    for point in default_grid() {
        let (l, h) = (point.src_len as usize, point.hidden as usize);
        let id = format!("L{l}_H{h}");
        let (s, states, params) = setup(l, h, AttentionVariant::Additive);
        group.bench_with_input(BenchmarkId::new("additive", &id), &(), |b, _| {
            b.iter(|| black_box(score_fwd_bwd(&s, &states, &params)))
        });
        let (s, states, params) = setup(l, h, AttentionVariant::Dot);
        group.bench_with_input(BenchmarkId::new("dot", &id), &(), |b, _| {
            b.iter(|| black_box(score_fwd_bwd(&s, &states, &params)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_attention);
criterion_main!(benches);
