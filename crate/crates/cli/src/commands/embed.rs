//! `embed-train`: skip-gram pretraining over the prepared pairs.

use clap::Args;

use lyricgen_core::corpus::{read_pairs_jsonl, Vocab};
use lyricgen_core::embed::{sgns_train, EmbedConfig};
use lyricgen_core::error::Result;

use crate::config::RunConfig;

use super::require_file;

#[derive(Args)]
pub struct EmbedTrainArgs {}

/// Rebuild the cleaned corpus lines from the pairs file: every pair's source
/// plus its (un-reversed) target, deduplicated in first-seen order. Because
/// cleaning already removed duplicate lines, this recovers each corpus line
/// exactly once.
fn corpus_lines(pairs: &[lyricgen_core::corpus::PairRecord]) -> Vec<Vec<String>> {
    let mut seen = std::collections::HashSet::new();
    let mut lines = Vec::new();
    let mut push = |line: Vec<String>| {
        if seen.insert(line.clone()) {
            lines.push(line);
        }
    };
    for p in pairs {
        push(p.src.clone());
        let trg = if p.trg_reversed {
            p.trg.iter().rev().cloned().collect()
        } else {
            p.trg.clone()
        };
        push(trg);
    }
    lines
}

pub fn run(cfg: &RunConfig, _args: EmbedTrainArgs) -> Result<u8> {
    require_file(&cfg.paths.pairs, "pairs file")?;
    require_file(&cfg.paths.vocab, "vocab file")?;
    let pairs = read_pairs_jsonl(&cfg.paths.pairs)?;
    let vocab = Vocab::load(&cfg.paths.vocab, cfg.prepare.min_count)?;

    let lines = corpus_lines(&pairs);
    let encoded: Vec<Vec<u32>> = lines.iter().map(|l| vocab.encode(l)).collect();

    let embed_cfg = EmbedConfig {
        seed: cfg.seed_for("embed"),
        ..cfg.embed.clone()
    };
    let table = sgns_train(&encoded, &vocab, &embed_cfg)?;
    table.save(&cfg.paths.embeddings)?;
    println!(
        "trained {}-dim embeddings over {} lines ({} epochs)",
        table.dim,
        lines.len(),
        embed_cfg.epochs
    );
    println!("wrote {}", cfg.paths.embeddings.display());
    Ok(0)
}
