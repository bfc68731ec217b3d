pub mod bench;
pub mod embed;
pub mod generate;
pub mod gradcheck;
pub mod lda;
pub mod prepare;
pub mod train;

use std::collections::BTreeSet;
use std::path::Path;

use lyricgen_core::corpus::{self, CleanConfig, RawSong};
use lyricgen_core::error::{Error, Result};
use lyricgen_core::util::par_map;

use crate::config::RunConfig;

/// Tokenized and cleaned corpus: one entry per song, plus the drop report.
pub struct CleanedCorpus {
    pub names: Vec<String>,
    pub songs: Vec<Vec<Vec<String>>>,
    pub report: corpus::DropReport,
}

/// Shared front half of `prepare` and `lda-train`: read the raw songs,
/// tokenize, and clean.
pub fn load_cleaned_corpus(cfg: &RunConfig) -> Result<(CleanedCorpus, BTreeSet<String>)> {
    let raw_dir = cfg
        .paths
        .raw_dir
        .as_ref()
        .ok_or_else(|| Error::config("paths.raw_dir is not set"))?;
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => corpus::load_stopwords(p)?,
        None => BTreeSet::new(),
    };
    let clean_cfg = CleanConfig {
        stopwords: stopwords.clone(),
        ..cfg.clean.clone()
    };
    clean_cfg.validate()?;

    let raw: Vec<RawSong> = corpus::read_songs_dir(raw_dir)?;
    let names: Vec<String> = raw.iter().map(|s| s.name.clone()).collect();
    let tokenized: Vec<Vec<Vec<String>>> = par_map(&raw, |song| {
        song.lines.iter().map(|l| corpus::tokenize(l)).collect()
    });
    let (songs, report) = corpus::clean_songs(&tokenized, &clean_cfg);
    Ok((
        CleanedCorpus {
            names,
            songs,
            report,
        },
        stopwords,
    ))
}

pub fn print_drop_report(report: &corpus::DropReport) {
    println!("songs in:            {}", report.songs_in);
    println!("lines in:            {}", report.lines_in);
    println!("dropped stopword-only: {}", report.stopword_only);
    println!("dropped too short:     {}", report.too_short);
    println!("dropped too long:      {}", report.too_long);
    println!("dropped duplicate:     {}", report.duplicate);
    println!("lines kept:          {}", report.lines_kept);
}

/// Resolve the two keyword token ids for every theme, either from the
/// configured keyword strings or from the fitted LDA model's rank-1 phrases.
pub fn resolve_theme_keywords(
    cfg: &RunConfig,
    vocab: &lyricgen_core::corpus::Vocab,
) -> Result<Vec<[u32; 2]>> {
    let phrases: Vec<String> = match &cfg.theme_keywords {
        Some(list) => list.clone(),
        None => {
            let model = lyricgen_core::lda::LdaModel::load(&cfg.paths.lda_model)?;
            let kws = lyricgen_core::lda::top_keywords(&model, 1)?;
            (0..model.cfg.k)
                .map(|t| {
                    kws.first(t)
                        .map(str::to_string)
                        .ok_or_else(|| Error::data(format!("theme {t} has no keywords")))
                })
                .collect::<Result<_>>()?
        }
    };
    phrases.iter().map(|p| keyword_ids(p, vocab)).collect()
}

/// Encode one two-character keyword phrase into its token ids.
pub fn keyword_ids(phrase: &str, vocab: &lyricgen_core::corpus::Vocab) -> Result<[u32; 2]> {
    let chars = corpus::tokenize(phrase);
    if chars.len() != 2 {
        return Err(Error::data(format!(
            "theme keyword {phrase:?} must be exactly two characters"
        )));
    }
    let ids = vocab.encode(&chars);
    Ok([ids[0], ids[1]])
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(Error::data(format!(
            "{what} not found at {}",
            path.display()
        )));
    }
    Ok(())
}
