//! Exactness check for the collapsed Gibbs sampler: on a corpus small enough
//! to enumerate every assignment vector, the post-burn-in chain must visit
//! states with the frequencies of the exact collapsed joint.
//!
//! The oracle below derives the joint from scratch (log-gamma by Lanczos,
//! full 2^8 enumeration) and shares no code with the sampler.

use std::f64::consts::PI;

use lyricgen_core::lda::{GibbsSampler, LdaConfig};

/// Lanczos log-gamma (g = 7, 9 coefficients), accurate to ~1e-13 here.
#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let mut a = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// The corpus: two documents of four tokens each, a vocabulary of two words.
/// Document 0 is four copies of word 0, document 1 four copies of word 1.
const DOC_WORDS: [[usize; 4]; 2] = [[0, 0, 0, 0], [1, 1, 1, 1]];
const K: usize = 2;
const V: usize = 2;
const N_TOKENS: usize = 8;

/// Unnormalized log-probability of one assignment vector under the collapsed
/// LDA joint with symmetric priors: Π_d Π_t Γ(n_dt+α) · Π_t Π_w Γ(n_tw+β) / Γ(n_t+Vβ),
/// dropping factors that do not depend on the assignments.
fn log_joint(z: &[usize; N_TOKENS], alpha: f64, beta: f64) -> f64 {
    let mut n_dt = [[0u32; K]; 2];
    let mut n_tw = [[0u32; V]; K];
    let mut n_t = [0u32; K];
    for (i, &t) in z.iter().enumerate() {
        let d = i / 4;
        let w = DOC_WORDS[d][i % 4];
        n_dt[d][t] += 1;
        n_tw[t][w] += 1;
        n_t[t] += 1;
    }
    let mut lp = 0.0;
    for row in &n_dt {
        for &c in row {
            lp += ln_gamma(c as f64 + alpha);
        }
    }
    for t in 0..K {
        for &c in &n_tw[t] {
            lp += ln_gamma(c as f64 + beta);
        }
        lp -= ln_gamma(n_t[t] as f64 + V as f64 * beta);
    }
    lp
}

/// Exact distribution over all 2^8 assignment states.
fn exact_distribution(alpha: f64, beta: f64) -> Vec<f64> {
    let n_states = 1usize << N_TOKENS;
    let mut logs = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let mut z = [0usize; N_TOKENS];
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (s >> i) & 1;
        }
        logs.push(log_joint(&z, alpha, beta));
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}

fn state_index(assignments: &[Vec<u32>]) -> usize {
    let mut s = 0usize;
    let mut bit = 0;
    for doc in assignments {
        for &z in doc {
            s |= (z as usize) << bit;
            bit += 1;
        }
    }
    s
}

#[test]
fn ln_gamma_oracle_sanity() {
    assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-12);
    assert!(ln_gamma(1.0).abs() < 1e-12);
    assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-11);
    // Recurrence Γ(x+1) = xΓ(x) at a non-integer point.
    assert!((ln_gamma(3.7) - (2.7f64.ln() + ln_gamma(2.7))).abs() < 1e-11);
}

#[test]
fn exact_joint_is_topic_swap_symmetric() {
    let probs = exact_distribution(0.5, 0.5);
    // Swapping topic labels everywhere flips every bit of the state index.
    let mask = (1usize << N_TOKENS) - 1;
    for s in 0..probs.len() {
        let swapped = !s & mask;
        assert!(
            (probs[s] - probs[swapped]).abs() < 1e-12,
            "joint must be symmetric under topic relabeling"
        );
    }
}

#[test]
fn gibbs_state_distribution_matches_exact_joint_within_tv_005() {
    let alpha = 0.5;
    let beta = 0.5;
    let exact = exact_distribution(alpha, beta);

    let cfg = LdaConfig {
        k: K,
        alpha: Some(alpha),
        beta,
        iterations: 10,
        burn_in: 5,
        seed: 20_240_817,
    };
    let docs: Vec<Vec<usize>> = DOC_WORDS.iter().map(|d| d.to_vec()).collect();
    let mut sampler = GibbsSampler::new(&docs, V, cfg).unwrap();

    let burn_in = 2_000;
    let kept = 400_000usize;
    let thin = 2;
    for _ in 0..burn_in {
        sampler.sweep();
    }
    let mut counts = vec![0u64; exact.len()];
    for _ in 0..kept {
        for _ in 0..thin {
            sampler.sweep();
        }
        counts[state_index(sampler.assignments())] += 1;
    }

    let tv: f64 = exact
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p - c as f64 / kept as f64).abs())
        .sum::<f64>()
        / 2.0;
    assert!(
        tv < 0.05,
        "total variation between Gibbs and the exact joint was {tv:.4}"
    );
}

#[test]
fn gibbs_chain_is_deterministic_given_seed() {
    let cfg = LdaConfig {
        k: K,
        alpha: Some(0.5),
        beta: 0.5,
        iterations: 10,
        burn_in: 5,
        seed: 99,
    };
    let docs: Vec<Vec<usize>> = DOC_WORDS.iter().map(|d| d.to_vec()).collect();
    let mut a = GibbsSampler::new(&docs, V, cfg.clone()).unwrap();
    let mut b = GibbsSampler::new(&docs, V, cfg).unwrap();
    for _ in 0..200 {
        a.sweep();
        b.sweep();
        assert_eq!(a.assignments(), b.assignments());
    }
}
