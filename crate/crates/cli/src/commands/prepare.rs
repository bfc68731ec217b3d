//! `prepare`: raw lyrics in, pairs.jsonl + vocab.json out.

use clap::Args;

use lyricgen_core::corpus::{build_pairs, build_vocab, write_pairs_jsonl, PairRecord};
use lyricgen_core::error::{Error, Result};
use lyricgen_core::lda::{lda_infer, song_document, LdaModel};
use lyricgen_core::util::derive_seed;

use crate::config::RunConfig;

use super::{load_cleaned_corpus, print_drop_report};

#[derive(Args)]
pub struct PrepareArgs {
    /// Fix every song to this theme id instead of inferring themes.
    #[arg(long)]
    pub theme: Option<usize>,
    /// Store targets reversed (overrides the configured choice).
    #[arg(long)]
    pub reverse_target: Option<bool>,
    /// Experimental: store sources reversed as well.
    #[arg(long)]
    pub reverse_src: Option<bool>,
}

pub fn run(cfg: &RunConfig, args: PrepareArgs) -> Result<u8> {
    let (corpus, stopwords) = load_cleaned_corpus(cfg)?;
    let theme_override = args.theme.or(cfg.prepare.theme);
    let reverse_target = args.reverse_target.unwrap_or(cfg.prepare.reverse_target);
    let reverse_src = args.reverse_src.unwrap_or(cfg.prepare.reverse_src);

    // Theme per song: a fixed override, or LDA inference over the song's
    // bigrams with a seed derived per song index.
    let themes: Vec<usize> = match theme_override {
        Some(t) => vec![t; corpus.songs.len()],
        None => {
            let model = LdaModel::load(&cfg.paths.lda_model).map_err(|e| {
                Error::config(format!(
                    "prepare needs --theme or a fitted LDA model ({e})"
                ))
            })?;
            let sweeps = cfg.prepare.infer_sweeps;
            let base = cfg.seed_for("prepare-infer");
            corpus
                .songs
                .iter()
                .enumerate()
                .map(|(i, song)| {
                    let doc = song_document(&corpus.names[i], song, &stopwords);
                    let inf = lda_infer(&doc.phrases, &model, sweeps, derive_seed(base, &i.to_string()))?;
                    Ok(inf.argmax())
                })
                .collect::<Result<_>>()?
        }
    };

    let mut pairs: Vec<PairRecord> = Vec::new();
    for (song, &theme) in corpus.songs.iter().zip(&themes) {
        let song_pairs = if reverse_src {
            let reversed: Vec<Vec<String>> = song
                .iter()
                .map(|line| line.iter().rev().cloned().collect())
                .collect();
            // Reverse only the source side: pair with natural targets.
            song.windows(2)
                .zip(reversed.windows(2))
                .map(|(nat, rev)| {
                    let mut p = build_pairs(&[rev[0].clone(), nat[1].clone()], theme, reverse_target);
                    p.pop().unwrap()
                })
                .collect()
        } else {
            build_pairs(song, theme, reverse_target)
        };
        pairs.extend(song_pairs);
    }

    print_drop_report(&corpus.report);
    println!("pairs out:           {}", pairs.len());

    if pairs.is_empty() {
        return Err(Error::data(
            "no pairs survived cleaning; see the drop report above",
        ));
    }

    let lines: Vec<Vec<String>> = corpus.songs.iter().flatten().cloned().collect();
    let vocab = build_vocab(&lines, cfg.prepare.min_count)?;
    write_pairs_jsonl(&cfg.paths.pairs, &pairs)?;
    vocab.save(&cfg.paths.vocab)?;
    println!("vocab size:          {}", vocab.len());
    println!("wrote {}", cfg.paths.pairs.display());
    println!("wrote {}", cfg.paths.vocab.display());
    Ok(0)
}
