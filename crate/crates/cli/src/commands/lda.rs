//! `lda-train`, `lda-keywords`, `lda-infer`.

use std::path::PathBuf;

use clap::Args;

use lyricgen_core::corpus::tokenize;
use lyricgen_core::error::{Error, Result};
use lyricgen_core::lda::{lda_fit, lda_infer, line_bigrams, song_document, LdaConfig, LdaModel};

use crate::config::RunConfig;

use super::load_cleaned_corpus;

#[derive(Args)]
pub struct LdaTrainArgs {}

pub fn run_train(cfg: &RunConfig, _args: LdaTrainArgs) -> Result<u8> {
    let (corpus, stopwords) = load_cleaned_corpus(cfg)?;
    let docs: Vec<_> = corpus
        .songs
        .iter()
        .zip(&corpus.names)
        .map(|(song, name)| song_document(name, song, &stopwords))
        .collect();

    let lda_cfg = LdaConfig {
        seed: cfg.seed_for("lda"),
        ..cfg.lda.clone()
    };
    let model = lda_fit(&docs, &lda_cfg)?;
    model.save(&cfg.paths.lda_model)?;

    println!(
        "fitted {} themes over {} documents, {} phrases",
        model.cfg.k,
        docs.len(),
        model.vocab_size()
    );
    let kws = lyricgen_core::lda::top_keywords(&model, 1)?;
    println!("theme  keyword");
    for t in 0..model.cfg.k {
        println!("{t:>5}  {}", kws.first(t).unwrap_or("-"));
    }
    println!("wrote {}", cfg.paths.lda_model.display());
    Ok(0)
}

#[derive(Args)]
pub struct LdaKeywordsArgs {
    /// How many keywords to list per theme.
    #[arg(long, default_value_t = 1)]
    pub top: usize,
}

pub fn run_keywords(cfg: &RunConfig, args: LdaKeywordsArgs) -> Result<u8> {
    let model = LdaModel::load(&cfg.paths.lda_model)?;
    let kws = lyricgen_core::lda::top_keywords(&model, args.top)?;
    println!("theme  keywords");
    for (t, ranked) in kws.themes.iter().enumerate() {
        let joined: Vec<String> = ranked
            .iter()
            .map(|(p, s)| format!("{p} ({s:.4})"))
            .collect();
        println!("{t:>5}  {}", joined.join("  "));
    }
    Ok(0)
}

#[derive(Args)]
pub struct LdaInferArgs {
    /// Text to classify (tokenized character-wise, bigrammed internally).
    #[arg(long, conflicts_with = "file")]
    pub text: Option<String>,
    /// Read the document from a file instead (all lines form one document).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Gibbs sweeps for inference.
    #[arg(long, default_value_t = 100)]
    pub sweeps: usize,
}

pub fn run_infer(cfg: &RunConfig, args: LdaInferArgs) -> Result<u8> {
    let model = LdaModel::load(&cfg.paths.lda_model)?;
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => lyricgen_core::corpus::load_stopwords(p)?,
        None => Default::default(),
    };

    let phrases: Vec<String> = match (&args.text, &args.file) {
        (Some(text), _) => line_bigrams(&tokenize(text), &stopwords),
        (None, Some(path)) => {
            let content = std::fs::read_to_string(path)?;
            let lines: Vec<Vec<String>> = content.lines().map(tokenize).collect();
            song_document("query", &lines, &stopwords).phrases
        }
        (None, None) => {
            return Err(Error::config("lda-infer needs --text or --file"));
        }
    };

    let inf = lda_infer(&phrases, &model, args.sweeps, cfg.seed_for("lda-infer"))?;
    for (t, p) in inf.probs.iter().enumerate() {
        println!("theme {t}: {p:.6}");
    }
    println!("argmax: {}", inf.argmax());
    if inf.oov_only {
        println!("note: no in-vocabulary phrases; distribution is the uniform prior");
    }
    Ok(0)
}
