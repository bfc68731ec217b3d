//! Theme extraction by latent Dirichlet allocation with collapsed Gibbs
//! sampling. The token unit is the overlapping adjacent-character bigram of a
//! cleaned line, which makes every rankable phrase exactly two characters.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{seeded_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Symmetric document-topic prior; defaults to 50/k.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    6
}
fn default_beta() -> f64 {
    0.01
}
fn default_iterations() -> usize {
    200
}
fn default_burn_in() -> usize {
    50
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: default_k(),
            alpha: None,
            beta: default_beta(),
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::config("lda k must be >= 1"));
        }
        if self.alpha().is_nan() || self.alpha() <= 0.0 {
            return Err(Error::config("lda alpha must be > 0"));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::config("lda beta must be > 0"));
        }
        if self.iterations < 1 {
            return Err(Error::config("lda iterations must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config("lda burn_in must be < iterations"));
        }
        Ok(())
    }
}

/// A document for LDA: a name (for error messages) plus its phrase tokens.
#[derive(Debug, Clone)]
pub struct LdaDocument {
    pub name: String,
    pub phrases: Vec<String>,
}

/// Overlapping adjacent-character bigrams of one tokenized line, after
/// stopword characters are removed.
pub fn line_bigrams(tokens: &[String], stopwords: &BTreeSet<String>) -> Vec<String> {
    let kept: Vec<&String> = tokens.iter().filter(|t| !stopwords.contains(*t)).collect();
    kept.windows(2).map(|w| format!("{}{}", w[0], w[1])).collect()
}

/// One document per song: the concatenated bigrams of all its lines.
pub fn song_document(
    name: impl Into<String>,
    lines: &[Vec<String>],
    stopwords: &BTreeSet<String>,
) -> LdaDocument {
    let phrases = lines
        .iter()
        .flat_map(|l| line_bigrams(l, stopwords))
        .collect();
    LdaDocument {
        name: name.into(),
        phrases,
    }
}

/// Fitted model: count matrices, per-token assignments, and the phrase
/// vocabulary they index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    pub cfg: LdaConfig,
    pub phrases: Vec<String>,
    /// k×V topic-word counts.
    pub topic_word: Vec<Vec<u32>>,
    /// D×k document-topic counts.
    pub doc_topic: Vec<Vec<u32>>,
    /// Per-topic totals; always the row sums of `topic_word`.
    pub topic_totals: Vec<u32>,
    /// Topic label of every token, per document.
    pub assignments: Vec<Vec<u32>>,
}

/// The collapsed Gibbs chain, exposed so callers can step sweeps themselves
/// (several acceptance checks watch the chain, not just its endpoint).
pub struct GibbsSampler {
    pub cfg: LdaConfig,
    docs: Vec<Vec<usize>>,
    vocab_size: usize,
    topic_word: Vec<Vec<u32>>,
    doc_topic: Vec<Vec<u32>>,
    topic_totals: Vec<u32>,
    assignments: Vec<Vec<u32>>,
    rng: Rng,
    weights_buf: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: &[Vec<usize>], vocab_size: usize, cfg: LdaConfig) -> Result<Self> {
        cfg.validate()?;
        if docs.is_empty() {
            return Err(Error::data("lda: empty corpus"));
        }
        let k = cfg.k;
        let mut rng = seeded_rng(cfg.seed);
        let mut topic_word = vec![vec![0u32; vocab_size]; k];
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_totals = vec![0u32; k];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut z = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.random_range(0..k);
                topic_word[t][w] += 1;
                doc_topic[d][t] += 1;
                topic_totals[t] += 1;
                z.push(t as u32);
            }
            assignments.push(z);
        }
        Ok(GibbsSampler {
            weights_buf: vec![0.0; cfg.k],
            cfg,
            docs: docs.to_vec(),
            vocab_size,
            topic_word,
            doc_topic,
            topic_totals,
            assignments,
            rng,
        })
    }

    /// One full sweep: resample the topic of every token from its collapsed
    /// conditional (doc_topic−self + α)(topic_word−self + β)/(totals−self + Vβ).
    pub fn sweep(&mut self) {
        let k = self.cfg.k;
        let alpha = self.cfg.alpha();
        let beta = self.cfg.beta;
        let v_beta = self.vocab_size as f64 * beta;
        for d in 0..self.docs.len() {
            for n in 0..self.docs[d].len() {
                let w = self.docs[d][n];
                let old = self.assignments[d][n] as usize;
                self.topic_word[old][w] -= 1;
                self.doc_topic[d][old] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let wgt = (self.doc_topic[d][t] as f64 + alpha)
                        * (self.topic_word[t][w] as f64 + beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                    self.weights_buf[t] = wgt;
                    total += wgt;
                }
                let mut u = self.rng.random::<f64>() * total;
                let mut new = k - 1;
                for (t, &wgt) in self.weights_buf.iter().enumerate() {
                    u -= wgt;
                    if u <= 0.0 {
                        new = t;
                        break;
                    }
                }

                self.topic_word[new][w] += 1;
                self.doc_topic[d][new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][n] = new as u32;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn total_count(&self) -> u64 {
        self.topic_word
            .iter()
            .map(|row| row.iter().map(|&c| c as u64).sum::<u64>())
            .sum()
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    pub fn topic_word(&self) -> &[Vec<u32>] {
        &self.topic_word
    }

    fn into_model(self, phrases: Vec<String>) -> LdaModel {
        LdaModel {
            cfg: self.cfg,
            phrases,
            topic_word: self.topic_word,
            doc_topic: self.doc_topic,
            topic_totals: self.topic_totals,
            assignments: self.assignments,
        }
    }
}

/// (phrase vocab in first-seen order, phrase index, docs as phrase ids).
type IndexedDocs = (Vec<String>, HashMap<String, usize>, Vec<Vec<usize>>);

fn index_docs(docs: &[LdaDocument]) -> Result<IndexedDocs> {
    let mut phrases: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut indexed = Vec::with_capacity(docs.len());
    for doc in docs {
        if doc.phrases.is_empty() {
            return Err(Error::data(format!(
                "lda: document {:?} has no phrases left after cleaning",
                doc.name
            )));
        }
        let mut ids = Vec::with_capacity(doc.phrases.len());
        for p in &doc.phrases {
            let id = *index.entry(p.clone()).or_insert_with(|| {
                phrases.push(p.clone());
                phrases.len() - 1
            });
            ids.push(id);
        }
        indexed.push(ids);
    }
    Ok((phrases, index, indexed))
}

/// Fit by collapsed Gibbs sampling: `iterations` full sweeps, counts taken
/// from the final sweep. Fully deterministic given the seed.
pub fn lda_fit(docs: &[LdaDocument], cfg: &LdaConfig) -> Result<LdaModel> {
    let (phrases, _, indexed) = index_docs(docs)?;
    let mut sampler = GibbsSampler::new(&indexed, phrases.len(), cfg.clone())?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model(phrases))
}

/// Theme proportions inferred for one new document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaInference {
    /// Smoothed document-topic proportions; always sums to 1.
    pub probs: Vec<f64>,
    /// True when the document had no in-vocabulary phrases and the result is
    /// just the uniform prior.
    pub oov_only: bool,
}

impl LdaInference {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

impl LdaModel {
    pub fn phrase_id(&self, phrase: &str) -> Option<usize> {
        // Linear scan is fine at these vocabulary sizes; hot callers go
        // through `lda_infer`, which builds its own index.
        self.phrases.iter().position(|p| p == phrase)
    }

    pub fn vocab_size(&self) -> usize {
        self.phrases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cfg.k;
        if self.topic_word.len() != k || self.topic_totals.len() != k {
            return Err(Error::data("lda model: topic dimension mismatch"));
        }
        for (t, row) in self.topic_word.iter().enumerate() {
            if row.len() != self.phrases.len() {
                return Err(Error::data("lda model: vocab dimension mismatch"));
            }
            let sum: u64 = row.iter().map(|&c| c as u64).sum();
            if sum != self.topic_totals[t] as u64 {
                return Err(Error::data(format!(
                    "lda model: topic {t} total {} disagrees with row sum {sum}",
                    self.topic_totals[t]
                )));
            }
        }
        for z in self.assignments.iter().flatten() {
            if *z as usize >= k {
                return Err(Error::data("lda model: assignment out of range"));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: LdaModel = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("invalid lda model {}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }
}

/// Infer theme proportions for a new document with the topic-word counts
/// held fixed. Runs `sweeps` Gibbs sweeps over the document's assignments and
/// averages the smoothed proportions over the second half of the chain.
pub fn lda_infer(doc: &[String], model: &LdaModel, sweeps: usize, seed: u64) -> Result<LdaInference> {
    let k = model.cfg.k;
    let alpha = model.cfg.alpha();
    if sweeps < 1 {
        return Err(Error::config("lda_infer: sweeps must be >= 1"));
    }
    let index: HashMap<&str, usize> = model
        .phrases
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let ids: Vec<usize> = doc
        .iter()
        .filter_map(|p| index.get(p.as_str()).copied())
        .collect();
    if ids.is_empty() {
        return Ok(LdaInference {
            probs: vec![1.0 / k as f64; k],
            oov_only: true,
        });
    }

    let beta = model.cfg.beta;
    let v_beta = model.vocab_size() as f64 * beta;
    let mut rng = seeded_rng(seed);
    let mut doc_topic = vec![0u32; k];
    let mut z: Vec<usize> = Vec::with_capacity(ids.len());
    for _ in &ids {
        let t = rng.random_range(0..k);
        doc_topic[t] += 1;
        z.push(t);
    }

    let mut weights = vec![0.0; k];
    let mut acc = vec![0.0; k];
    let mut n_acc = 0usize;
    let keep_from = sweeps / 2;
    for sweep in 0..sweeps {
        for (n, &w) in ids.iter().enumerate() {
            let old = z[n];
            doc_topic[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                // topic_word is frozen; only the doc side resamples.
                let wgt = (doc_topic[t] as f64 + alpha)
                    * (model.topic_word[t][w] as f64 + beta)
                    / (model.topic_totals[t] as f64 + v_beta);
                weights[t] = wgt;
                total += wgt;
            }
            let mut u = rng.random::<f64>() * total;
            let mut new = k - 1;
            for (t, &wgt) in weights.iter().enumerate() {
                u -= wgt;
                if u <= 0.0 {
                    new = t;
                    break;
                }
            }
            doc_topic[new] += 1;
            z[n] = new;
        }
        if sweep >= keep_from {
            let denom = ids.len() as f64 + k as f64 * alpha;
            for t in 0..k {
                acc[t] += (doc_topic[t] as f64 + alpha) / denom;
            }
            n_acc += 1;
        }
    }

    let mut probs: Vec<f64> = acc.iter().map(|a| a / n_acc as f64).collect();
    // Renormalize away accumulated rounding so the sum is 1 within 1e-12.
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    Ok(LdaInference {
        probs,
        oov_only: false,
    })
}

/// Ranked keyword list per theme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeKeywords {
    /// `themes[t]` is the ranked (phrase, score) list of theme t, scores
    /// non-increasing, ties broken by lexicographic phrase order.
    pub themes: Vec<Vec<(String, f64)>>,
}

impl ThemeKeywords {
    /// The rank-1 phrase of a theme, the pipeline's "theme keyword".
    pub fn first(&self, theme: usize) -> Option<&str> {
        self.themes
            .get(theme)
            .and_then(|t| t.first())
            .map(|(p, _)| p.as_str())
    }
}

/// Rank phrases per theme by smoothed probability (count+β)/(total+Vβ).
pub fn top_keywords(model: &LdaModel, n: usize) -> Result<ThemeKeywords> {
    if n < 1 {
        return Err(Error::config("top_keywords: n must be >= 1"));
    }
    let v = model.vocab_size();
    let v_beta = v as f64 * model.cfg.beta;
    let take = n.min(v);
    let themes = model
        .topic_word
        .iter()
        .zip(&model.topic_totals)
        .map(|(row, &total)| {
            let mut scored: Vec<(String, f64)> = row
                .iter()
                .enumerate()
                .map(|(wid, &c)| {
                    let score = (c as f64 + model.cfg.beta) / (total as f64 + v_beta);
                    (model.phrases[wid].clone(), score)
                })
                .collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            scored.truncate(take);
            scored
        })
        .collect();
    Ok(ThemeKeywords { themes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(name: &str, phrases: &[&str]) -> LdaDocument {
        LdaDocument {
            name: name.into(),
            phrases: phrases.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn pure_corpus() -> Vec<LdaDocument> {
        vec![doc("a", &["甲乙"; 4]), doc("b", &["丙丁"; 4])]
    }

    #[test]
    fn bigrams_skip_stopwords_and_pair_neighbors() {
        let stop: BTreeSet<String> = ["的"].iter().map(|s| s.to_string()).collect();
        let toks: Vec<String> = ["夜", "的", "风", "声"].iter().map(|s| s.to_string()).collect();
        assert_eq!(line_bigrams(&toks, &stop), vec!["夜风", "风声"]);
        assert!(line_bigrams(&toks[..2], &stop).is_empty());
        for p in line_bigrams(&toks, &stop) {
            assert_eq!(p.chars().count(), 2);
        }
    }

    #[test]
    fn k_equals_one_assigns_everything_to_topic_zero() {
        let cfg = LdaConfig {
            k: 1,
            iterations: 5,
            burn_in: 1,
            ..LdaConfig::default()
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        assert!(model.assignments.iter().flatten().all(|&z| z == 0));
    }

    #[test]
    fn counts_are_conserved_after_every_sweep() {
        let cfg = LdaConfig {
            k: 3,
            iterations: 10,
            burn_in: 2,
            seed: 5,
            ..LdaConfig::default()
        };
        let docs = vec![
            vec![0usize, 1, 2, 1, 0],
            vec![2, 2, 3],
            vec![3, 0],
        ];
        let mut sampler = GibbsSampler::new(&docs, 4, cfg).unwrap();
        let n: u64 = docs.iter().map(|d| d.len() as u64).sum();
        for _ in 0..10 {
            sampler.sweep();
            assert_eq!(sampler.total_count(), n);
            for (t, row) in sampler.topic_word().iter().enumerate() {
                let sum: u64 = row.iter().map(|&c| c as u64).sum();
                assert_eq!(sum, sampler.topic_totals()[t] as u64);
            }
        }
    }

    #[test]
    fn two_pure_documents_separate_into_pure_topics() {
        let cfg = LdaConfig {
            k: 2,
            alpha: Some(0.1),
            beta: 0.1,
            iterations: 500,
            burn_in: 100,
            seed: 42,
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        let kws = top_keywords(&model, 1).unwrap();
        let first0 = kws.first(0).unwrap();
        let first1 = kws.first(1).unwrap();
        assert_ne!(first0, first1, "each topic should own one pure word");
        // The dominant topic of each document is pure: all 4 of one word.
        for t in 0..2 {
            let top = model.topic_word[t].iter().max().unwrap();
            assert_eq!(*top, 4);
        }
    }

    #[test]
    fn fit_is_deterministic_given_seed() {
        let cfg = LdaConfig {
            k: 2,
            iterations: 50,
            burn_in: 10,
            seed: 9,
            ..LdaConfig::default()
        };
        let a = lda_fit(&pure_corpus(), &cfg).unwrap();
        let b = lda_fit(&pure_corpus(), &cfg).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.topic_word, b.topic_word);
    }

    #[test]
    fn empty_corpus_and_empty_document_error() {
        let cfg = LdaConfig::default();
        assert!(lda_fit(&[], &cfg).is_err());
        let err = lda_fit(&[doc("empty-song", &[])], &cfg)
            .unwrap_err()
            .to_string();
        assert!(err.contains("empty-song"), "error should name the document: {err}");
    }

    #[test]
    fn infer_points_at_the_pure_topic() {
        let cfg = LdaConfig {
            k: 2,
            alpha: Some(0.1),
            beta: 0.1,
            iterations: 500,
            burn_in: 100,
            seed: 42,
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        let kws = top_keywords(&model, 1).unwrap();
        // Which topic owns 甲乙?
        let topic_of_a = (0..2)
            .find(|&t| kws.first(t).unwrap() == "甲乙")
            .expect("one topic must rank 甲乙 first");

        let query: Vec<String> = vec!["甲乙".into(), "甲乙".into(), "甲乙".into()];
        let inf = lda_infer(&query, &model, 100, 7).unwrap();
        assert_eq!(inf.argmax(), topic_of_a);
        assert!(!inf.oov_only);
        let sum: f64 = inf.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(inf.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn infer_of_oov_document_is_uniform_and_flagged() {
        let cfg = LdaConfig {
            k: 4,
            iterations: 10,
            burn_in: 2,
            ..LdaConfig::default()
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        let inf = lda_infer(&["未见".to_string()], &model, 50, 1).unwrap();
        assert!(inf.oov_only);
        assert_eq!(inf.probs, vec![0.25; 4]);
    }

    #[test]
    fn keyword_ties_break_lexicographically() {
        // Two phrases with equal counts in a topic.
        let model = LdaModel {
            cfg: LdaConfig {
                k: 1,
                iterations: 1,
                burn_in: 0,
                ..LdaConfig::default()
            },
            phrases: vec!["乙丙".into(), "甲乙".into()],
            topic_word: vec![vec![3, 3]],
            doc_topic: vec![vec![6]],
            topic_totals: vec![6],
            assignments: vec![vec![0; 6]],
        };
        let kws = top_keywords(&model, 2).unwrap();
        assert_eq!(kws.first(0).unwrap(), "乙丙");
        let scores: Vec<f64> = kws.themes[0].iter().map(|(_, s)| *s).collect();
        assert!(scores[0] >= scores[1]);
    }

    #[test]
    fn n_larger_than_vocab_returns_everything() {
        let cfg = LdaConfig {
            k: 2,
            iterations: 5,
            burn_in: 1,
            ..LdaConfig::default()
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        let kws = top_keywords(&model, 100).unwrap();
        assert_eq!(kws.themes[0].len(), model.vocab_size());
    }

    #[test]
    fn model_save_load_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lda.json");
        let cfg = LdaConfig {
            k: 2,
            iterations: 20,
            burn_in: 5,
            ..LdaConfig::default()
        };
        let model = lda_fit(&pure_corpus(), &cfg).unwrap();
        model.save(&path).unwrap();
        let back = LdaModel::load(&path).unwrap();
        assert_eq!(model.topic_word, back.topic_word);
        assert_eq!(model.phrases, back.phrases);

        // Corrupt the totals: load must reject.
        let mut bad = model.clone();
        bad.topic_totals[0] += 1;
        bad.save(&path).unwrap();
        assert!(LdaModel::load(&path).is_err());
    }
}
