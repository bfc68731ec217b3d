//! `generate`: decode a themed paragraph line by line, with an optional
//! attention trace sidecar.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use lyricgen_core::corpus::Vocab;
use lyricgen_core::error::{Error, Result};
use lyricgen_core::generate::{generate_paragraph, DecodeStrategy, GenerateRequest};
use lyricgen_core::lda::LdaModel;
use lyricgen_core::model::load_checkpoint;

use crate::config::RunConfig;

use super::{keyword_ids, require_file};

#[derive(Args)]
pub struct GenerateArgs {
    /// Theme id in [0, k).
    #[arg(long)]
    pub theme: Option<usize>,
    /// The opening line the first generated line responds to.
    #[arg(long)]
    pub seed_line: Option<String>,
    /// Number of lines to generate.
    #[arg(long)]
    pub n_lines: Option<usize>,
    /// Beam width; omitted means greedy decoding.
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Override the theme keywords with exactly two characters.
    #[arg(long)]
    pub keywords: Option<String>,
    /// Resolve keywords from this LDA model instead of the checkpoint.
    #[arg(long)]
    pub lda_model: Option<PathBuf>,
    /// Override the reversal-undo wired from the checkpoint.
    #[arg(long)]
    pub undo_reversal: Option<bool>,
    /// Experimental: reverse each source line before encoding.
    #[arg(long)]
    pub reverse_src: bool,
    /// Write per-step attention weights to this JSON Lines file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

pub fn run(cfg: &RunConfig, args: GenerateArgs) -> Result<u8> {
    require_file(&cfg.paths.checkpoint, "checkpoint")?;
    require_file(&cfg.paths.vocab, "vocab file")?;
    let ckpt = load_checkpoint(&cfg.paths.checkpoint)?;
    let vocab = Vocab::load(&cfg.paths.vocab, cfg.prepare.min_count)?;
    if ckpt.vocab_fingerprint != vocab.fingerprint() {
        return Err(Error::data(
            "checkpoint was trained against a different vocabulary",
        ));
    }
    let params = ckpt.to_params()?;

    let theme_id = args.theme.unwrap_or(cfg.generate.theme_id);
    let keyword_pair: [u32; 2] = if let Some(kw) = &args.keywords {
        keyword_ids(kw, &vocab)?
    } else if let Some(path) = &args.lda_model {
        let model = LdaModel::load(path)?;
        let kws = lyricgen_core::lda::top_keywords(&model, 1)?;
        let phrase = kws
            .first(theme_id)
            .ok_or_else(|| Error::data(format!("theme {theme_id} out of range")))?;
        keyword_ids(phrase, &vocab)?
    } else {
        *ckpt
            .theme_keywords
            .get(theme_id)
            .ok_or_else(|| Error::data(format!("theme {theme_id} out of range")))?
    };

    let seed_line = args
        .seed_line
        .clone()
        .or_else(|| cfg.generate.seed_line.clone())
        .ok_or_else(|| Error::config("generate needs --seed-line"))?;
    let decode = match args.beam {
        Some(w) => DecodeStrategy::Beam(w),
        None => cfg.generate.decode,
    };
    let req = GenerateRequest {
        theme_id,
        seed_line,
        n_lines: args.n_lines.unwrap_or(cfg.generate.n_lines),
        decode,
        max_len: args.max_len.unwrap_or(cfg.generate.max_len),
        undo_reversal: args.undo_reversal.unwrap_or(ckpt.target_reversed),
        reverse_src: args.reverse_src,
    };

    let lines = generate_paragraph(&params, &vocab, keyword_pair, &req)?;
    for line in &lines {
        println!("{}", line.text());
    }

    if let Some(trace_path) = &args.trace {
        let mut w = std::io::BufWriter::new(std::fs::File::create(trace_path)?);
        for (i, line) in lines.iter().enumerate() {
            for (step, alpha) in line.raw.attention.iter().enumerate() {
                let record = serde_json::json!({
                    "line": i,
                    "step": step,
                    "alpha": alpha,
                });
                serde_json::to_writer(&mut w, &record)?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
    }
    Ok(0)
}
