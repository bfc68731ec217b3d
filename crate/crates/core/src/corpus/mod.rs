//! Corpus preparation: tokenize raw lyrics, apply the cleaning rules, build
//! the vocabulary, and emit (theme, source, target) sentence pairs.

mod vocab;

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::par_map;

pub use vocab::{Vocab, EOS, PAD, SOS, SPECIAL_TOKENS, UNK};

/// Line-filtering rules. Lines survive only if they are not stopword-only,
/// have between `min_len` and `max_len` tokens, and (with `dedupe`) have not
/// been seen before anywhere in the corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanConfig {
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
    #[serde(default = "default_true")]
    pub drop_stopword_only: bool,
    #[serde(default = "default_true")]
    pub dedupe: bool,
}

fn default_min_len() -> usize {
    3
}
fn default_max_len() -> usize {
    18
}
fn default_true() -> bool {
    true
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_len: default_min_len(),
            max_len: default_max_len(),
            stopwords: BTreeSet::new(),
            drop_stopword_only: true,
            dedupe: true,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 1 {
            return Err(Error::config("min_len must be >= 1"));
        }
        if self.min_len > self.max_len {
            return Err(Error::config("min_len must be <= max_len"));
        }
        Ok(())
    }
}

/// Character-level tokenization: every non-whitespace Unicode scalar is one
/// token, in order. Length filtering and the vocabulary both count characters,
/// so no word segmentation is involved anywhere.
pub fn tokenize(line: &str) -> Vec<String> {
    line.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_string())
        .collect()
}

/// Why each dropped line was dropped, plus totals. The rule order is fixed:
/// stopword-only, then length, then duplicate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub songs_in: usize,
    pub lines_in: usize,
    pub stopword_only: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub duplicate: usize,
    pub lines_kept: usize,
}

enum LineFate {
    Keep,
    StopwordOnly,
    TooShort,
    TooLong,
}

fn classify(line: &[String], cfg: &CleanConfig) -> LineFate {
    if cfg.drop_stopword_only && !line.is_empty() && line.iter().all(|t| cfg.stopwords.contains(t))
    {
        return LineFate::StopwordOnly;
    }
    if line.len() < cfg.min_len {
        return LineFate::TooShort;
    }
    if line.len() > cfg.max_len {
        return LineFate::TooLong;
    }
    LineFate::Keep
}

/// Clean a corpus organized as songs of tokenized lines. Rule filtering runs
/// per song (parallel when enabled); duplicate removal is a sequential pass
/// over the whole corpus in order, keeping first occurrences, so the result
/// does not depend on thread scheduling.
pub fn clean_songs(
    songs: &[Vec<Vec<String>>],
    cfg: &CleanConfig,
) -> (Vec<Vec<Vec<String>>>, DropReport) {
    let mut report = DropReport {
        songs_in: songs.len(),
        ..DropReport::default()
    };

    // (kept lines, lines in, stopword-only, too short, too long) per song.
    type SongFilter = (Vec<Vec<String>>, usize, usize, usize, usize);
    let filtered: Vec<SongFilter> = par_map(songs, |song| {
        let mut kept = Vec::with_capacity(song.len());
        let (mut sw, mut short, mut long) = (0usize, 0usize, 0usize);
        for line in song {
            match classify(line, cfg) {
                LineFate::Keep => kept.push(line.clone()),
                LineFate::StopwordOnly => sw += 1,
                LineFate::TooShort => short += 1,
                LineFate::TooLong => long += 1,
            }
        }
        (kept, song.len(), sw, short, long)
    });

    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = Vec::with_capacity(songs.len());
    for (kept, n_in, sw, short, long) in filtered {
        report.lines_in += n_in;
        report.stopword_only += sw;
        report.too_short += short;
        report.too_long += long;
        let mut song_out = Vec::with_capacity(kept.len());
        for line in kept {
            if cfg.dedupe {
                if seen.contains(&line) {
                    report.duplicate += 1;
                    continue;
                }
                seen.insert(line.clone());
            }
            song_out.push(line);
        }
        report.lines_kept += song_out.len();
        out.push(song_out);
    }
    (out, report)
}

/// Clean a flat list of tokenized lines, preserving the order of survivors.
pub fn clean_lines(lines: &[Vec<String>], cfg: &CleanConfig) -> Vec<Vec<String>> {
    let (mut songs, _) = clean_songs(std::slice::from_ref(&lines.to_vec()), cfg);
    songs.pop().unwrap_or_default()
}

/// One training pair in its on-disk form: token strings, not ids, so the
/// dataset stays independent of any particular vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub src: Vec<String>,
    pub trg: Vec<String>,
    pub theme: usize,
    pub trg_reversed: bool,
}

/// A pair encoded against a vocabulary: the unit the model trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Vec<u32>,
    pub trg: Vec<u32>,
    pub theme: usize,
    pub trg_reversed: bool,
}

/// Emit one pair per adjacent line couple of a cleaned song: line i becomes
/// the source of line i+1, so n lines yield n−1 pairs and pairs never cross
/// song boundaries. With `reverse_target` the stored target token order is
/// reversed and flagged, which puts the rhyme-bearing final character first
/// during decoding.
pub fn build_pairs(song: &[Vec<String>], theme: usize, reverse_target: bool) -> Vec<PairRecord> {
    song.windows(2)
        .map(|w| {
            let trg = if reverse_target {
                w[1].iter().rev().cloned().collect()
            } else {
                w[1].clone()
            };
            PairRecord {
                src: w[0].clone(),
                trg,
                theme,
                trg_reversed: reverse_target,
            }
        })
        .collect()
}

pub fn encode_pairs(records: &[PairRecord], vocab: &Vocab) -> Vec<SentencePair> {
    records
        .iter()
        .map(|r| SentencePair {
            src: vocab.encode(&r.src),
            trg: vocab.encode(&r.trg),
            theme: r.theme,
            trg_reversed: r.trg_reversed,
        })
        .collect()
}

/// Build the vocabulary from the cleaned lines that source the pairs. Each
/// corpus line is counted once (pairs duplicate interior lines, so counting
/// pairs directly would double-count).
pub fn build_vocab(lines: &[Vec<String>], min_count: usize) -> Result<Vocab> {
    Vocab::build(lines, min_count)
}

/// A raw song: a name for error reporting plus its untouched text lines.
#[derive(Debug, Clone)]
pub struct RawSong {
    pub name: String,
    pub lines: Vec<String>,
}

/// Read every UTF-8 file under `dir` (sorted by file name for reproducible
/// ordering). Blank lines split a file into multiple songs.
pub fn read_songs_dir(dir: &Path) -> Result<Vec<RawSong>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_file())
        .map(|e| e.path())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::data(format!("no corpus files in {}", dir.display())));
    }

    let mut songs = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(&path)?;
        let stem = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut current: Vec<String> = Vec::new();
        let mut idx = 0usize;
        for line in text.lines() {
            if line.trim().is_empty() {
                if !current.is_empty() {
                    songs.push(RawSong {
                        name: format!("{stem}#{idx}"),
                        lines: std::mem::take(&mut current),
                    });
                    idx += 1;
                }
            } else {
                current.push(line.to_string());
            }
        }
        if !current.is_empty() {
            songs.push(RawSong {
                name: format!("{stem}#{idx}"),
                lines: current,
            });
        }
    }
    Ok(songs)
}

/// Stopword file: UTF-8, one token per line.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Write pairs as JSON Lines, one object per pair.
pub fn write_pairs_jsonl(path: &Path, pairs: &[PairRecord]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs_jsonl(path: &Path) -> Result<Vec<PairRecord>> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PairRecord = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("bad pair record on line {}: {e}", i + 1)))?;
        pairs.push(p);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_splits_scalars_and_drops_whitespace() {
        assert_eq!(toks("想见到你"), vec!["想", "见", "到", "你"]);
        assert_eq!(toks(""), Vec::<String>::new());
        assert_eq!(toks("a b"), vec!["a", "b"]);
        assert_eq!(toks(" 雨\t夜 "), vec!["雨", "夜"]);
    }

    fn cfg_with_stopwords(words: &[&str]) -> CleanConfig {
        CleanConfig {
            stopwords: words.iter().map(|s| s.to_string()).collect(),
            ..CleanConfig::default()
        }
    }

    #[test]
    fn clean_drops_stopword_only_lines() {
        let cfg = cfg_with_stopwords(&["啦"]);
        let lines = vec![toks("啦啦啦啦"), toks("夜里风吹过")];
        let out = clean_lines(&lines, &cfg);
        assert_eq!(out, vec![toks("夜里风吹过")]);
    }

    #[test]
    fn clean_enforces_length_bounds() {
        let cfg = CleanConfig::default();
        let lines = vec![
            toks("夜风"),                       // 2 tokens: too short
            toks("夜风吹"),                     // 3 tokens: boundary, kept
            toks("一二三四五六七八九十一二三四五六七八"), // 18: kept
            toks("一二三四五六七八九十一二三四五六七八九"), // 19: too long
        ];
        let out = clean_lines(&lines, &cfg);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], toks("夜风吹"));
    }

    #[test]
    fn clean_dedupes_globally_keeping_first() {
        let cfg = CleanConfig::default();
        let songs = vec![
            vec![toks("夜里风吹过"), toks("灯下人未眠")],
            vec![toks("夜里风吹过"), toks("窗外雨不停")],
        ];
        let (out, report) = clean_songs(&songs, &cfg);
        assert_eq!(out[0].len(), 2);
        assert_eq!(out[1], vec![toks("窗外雨不停")]);
        assert_eq!(report.duplicate, 1);
        assert_eq!(report.lines_kept, 3);
    }

    #[test]
    fn clean_is_idempotent() {
        let cfg = cfg_with_stopwords(&["啦", "哦"]);
        let lines = vec![
            toks("啦啦啦啦"),
            toks("夜里风吹过"),
            toks("夜里风吹过"),
            toks("灯下"),
            toks("灯下人未眠"),
        ];
        let once = clean_lines(&lines, &cfg);
        let twice = clean_lines(&once, &cfg);
        assert_eq!(once, twice);
    }

    #[test]
    fn pairs_chain_adjacent_lines() {
        let song = vec![toks("风吹过山岗"), toks("吹动我衣裳"), toks("带来远方消息")];
        let pairs = build_pairs(&song, 2, false);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].src, song[0]);
        assert_eq!(pairs[0].trg, song[1]);
        assert_eq!(pairs[1].src, song[1]);
        assert_eq!(pairs[1].trg, song[2]);
        assert!(pairs.iter().all(|p| p.theme == 2 && !p.trg_reversed));
    }

    #[test]
    fn single_line_song_yields_no_pairs() {
        assert!(build_pairs(&[toks("只有一行")], 0, false).is_empty());
        assert!(build_pairs(&[], 0, false).is_empty());
    }

    #[test]
    fn reversal_stores_reversed_target_and_flags_it() {
        let song = vec![toks("你别再回头看"), toks("让爱情继续")];
        let pairs = build_pairs(&song, 0, true);
        assert_eq!(pairs[0].trg, toks("续继情爱让"));
        assert!(pairs[0].trg_reversed);
        // Reversing twice restores the original.
        let back: Vec<String> = pairs[0].trg.iter().rev().cloned().collect();
        assert_eq!(back, toks("让爱情继续"));
    }

    #[test]
    fn encode_pairs_maps_against_vocab() {
        let song = vec![toks("甲乙丙"), toks("乙丙丁")];
        let vocab = Vocab::build(&song, 1).unwrap();
        let pairs = build_pairs(&song, 0, false);
        let enc = encode_pairs(&pairs, &vocab);
        assert_eq!(enc[0].src.len(), 3);
        assert!(enc[0].src.iter().all(|&id| id != PAD));
        assert_eq!(vocab.decode(&enc[0].trg).unwrap(), song[1]);
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        let pairs = build_pairs(&[toks("风吹过山岗"), toks("吹动我衣裳")], 1, true);
        write_pairs_jsonl(&path, &pairs).unwrap();
        let back = read_pairs_jsonl(&path).unwrap();
        assert_eq!(pairs, back);
    }

    #[test]
    fn songs_split_on_blank_lines_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "甲乙丙\n\n丁戊己\n庚辛壬\n").unwrap();
        std::fs::write(dir.path().join("a.txt"), "子丑寅\n").unwrap();
        let songs = read_songs_dir(dir.path()).unwrap();
        assert_eq!(songs.len(), 3);
        assert_eq!(songs[0].name, "a.txt#0");
        assert_eq!(songs[1].lines, vec!["甲乙丙"]);
        assert_eq!(songs[2].lines, vec!["丁戊己", "庚辛壬"]);
    }
}
