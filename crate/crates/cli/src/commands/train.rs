//! `train`: teacher-forced AdaDelta training with per-epoch checkpointing.

use clap::Args;

use lyricgen_core::corpus::{encode_pairs, read_pairs_jsonl, Vocab};
use lyricgen_core::embed::{load_pretrained, EmbeddingTable};
use lyricgen_core::error::{Error, Result};
use lyricgen_core::model::{
    init_params, save_checkpoint, train_with, Checkpoint, Dataset, TrainConfig,
};

use crate::config::RunConfig;

use super::{require_file, resolve_theme_keywords};

#[derive(Args)]
pub struct TrainArgs {
    /// Start from random embeddings instead of the pretrained table.
    #[arg(long)]
    pub no_pretrain: bool,
    /// Override the configured epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
}

pub fn run(cfg: &RunConfig, args: TrainArgs) -> Result<u8> {
    require_file(&cfg.paths.pairs, "pairs file")?;
    require_file(&cfg.paths.vocab, "vocab file")?;
    let records = read_pairs_jsonl(&cfg.paths.pairs)?;
    if records.is_empty() {
        return Err(Error::data("pairs file holds no pairs"));
    }
    let vocab = Vocab::load(&cfg.paths.vocab, cfg.prepare.min_count)?;

    let target_reversed = records[0].trg_reversed;
    if records.iter().any(|r| r.trg_reversed != target_reversed) {
        return Err(Error::data(
            "pairs file mixes reversed and unreversed targets",
        ));
    }

    let pairs = encode_pairs(&records, &vocab);
    let theme_keywords = resolve_theme_keywords(cfg, &vocab)?;
    let dataset = Dataset {
        pairs,
        theme_keywords: theme_keywords.clone(),
        target_reversed,
    };

    let model_cfg = cfg.model.to_config(vocab.len());
    let train_cfg = TrainConfig {
        seed: cfg.seed_for("train"),
        epochs: args.epochs.unwrap_or(cfg.train.epochs),
        ..cfg.train.clone()
    };

    let mut params = init_params(&model_cfg, cfg.seed_for("init"))?;
    if !args.no_pretrain && cfg.paths.embeddings.is_file() {
        let table = EmbeddingTable::load(&cfg.paths.embeddings)?;
        load_pretrained(&table, &vocab, &mut params)?;
        println!("loaded pretrained embeddings from {}", cfg.paths.embeddings.display());
    } else {
        println!("using randomly initialized embeddings");
    }

    let fingerprint = vocab.fingerprint();
    let ckpt_path = cfg.paths.checkpoint.clone();
    let outcome = train_with(params, &dataset, &model_cfg, &train_cfg, |report| {
        println!("epoch {:4}  loss {:.6}", report.epoch, report.mean_loss);
        let ckpt = Checkpoint::new(
            model_cfg.clone(),
            train_cfg.clone(),
            report.epoch,
            report.history.to_vec(),
            target_reversed,
            theme_keywords.clone(),
            fingerprint,
            report.params,
            Some(report.opt_state),
        );
        save_checkpoint(&ckpt_path, &ckpt)
    })?;

    println!(
        "final loss {:.6} after {} epochs",
        outcome.loss_history.last().copied().unwrap_or(f64::NAN),
        train_cfg.epochs
    );
    println!("wrote {}", ckpt_path.display());
    Ok(0)
}
