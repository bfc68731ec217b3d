//! `bench`: analytic flop counts plus measured wall times for the two
//! attention variants over a (src length, hidden width) grid. Flop columns
//! are exact and reproducible; wall times are informational only.

use std::time::Instant;

use clap::Args;

use lyricgen_core::error::Result;
use lyricgen_core::flops::default_grid;
use lyricgen_core::kernels::{
    attn_scores, attn_scores_backward, AttentionParams, EncoderStates, StateGrads,
};
use lyricgen_core::tensor::Tensor;
use lyricgen_core::util::seeded_rng;

use crate::config::RunConfig;

use rand::Rng as _;

#[derive(Args)]
pub struct BenchArgs {
    /// Scoring repetitions per measurement.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Measurements per grid point; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
}

fn rand_tensor(shape: &[usize], rng: &mut lyricgen_core::util::Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-0.5..0.5);
    }
    t
}

fn time_variant(
    src_len: usize,
    hidden: usize,
    additive: bool,
    reps: usize,
    samples: usize,
    rng: &mut lyricgen_core::util::Rng,
) -> f64 {
    let enc = 2 * hidden;
    let states = EncoderStates {
        sentence_states: (0..src_len).map(|_| rand_tensor(&[enc], rng)).collect(),
        theme_states: [rand_tensor(&[enc], rng), rand_tensor(&[enc], rng)],
        final_state: rand_tensor(&[enc], rng),
    };
    let params = if additive {
        AttentionParams::Additive {
            w: rand_tensor(&[hidden, hidden], rng),
            u: rand_tensor(&[hidden, enc], rng),
            v: rand_tensor(&[hidden], rng),
        }
    } else {
        AttentionParams::Dot {
            w: rand_tensor(&[hidden, enc], rng),
        }
    };
    let s_prev = rand_tensor(&[hidden], rng);
    let de = vec![1.0; src_len + 2];

    let mut medians = Vec::with_capacity(samples);
    for _ in 0..samples {
        let start = Instant::now();
        let mut sink = 0.0;
        for _ in 0..reps {
            let (scores, cache) = attn_scores(&s_prev, &states, &params).unwrap();
            let mut grads = match &params {
                AttentionParams::Additive { w, u, v } => AttentionParams::Additive {
                    w: w.zeros_like(),
                    u: u.zeros_like(),
                    v: v.zeros_like(),
                },
                AttentionParams::Dot { w } => AttentionParams::Dot { w: w.zeros_like() },
            };
            let mut dstates = StateGrads::zeros_for(&states);
            let ds = attn_scores_backward(
                &de, &s_prev, &states, &cache, &params, &mut grads, &mut dstates,
            );
            sink += scores.data()[0] + ds[0];
        }
        std::hint::black_box(sink);
        medians.push(start.elapsed().as_secs_f64() / reps as f64);
    }
    medians.sort_by(|a, b| a.partial_cmp(b).unwrap());
    medians[medians.len() / 2]
}

pub fn run(cfg: &RunConfig, args: BenchArgs) -> Result<u8> {
    let mut rng = seeded_rng(cfg.seed_for("bench"));
    println!(
        "{:>5} {:>5} {:>14} {:>14} {:>14} {:>14}",
        "L_src", "H", "additive_flops", "dot_flops", "additive_us", "dot_us"
    );
    for point in default_grid() {
        let (l, h) = (point.src_len as usize, point.hidden as usize);
        let t_add = time_variant(l, h, true, args.reps, args.samples, &mut rng);
        let t_dot = time_variant(l, h, false, args.reps, args.samples, &mut rng);
        println!(
            "{:>5} {:>5} {:>14} {:>14} {:>14.2} {:>14.2}",
            l,
            h,
            point.additive_flops(),
            point.dot_flops(),
            t_add * 1e6,
            t_dot * 1e6
        );
    }
    println!("flop counts are analytic per decode step over L_src+2 slots; times are medians and hardware-dependent");
    Ok(0)
}
