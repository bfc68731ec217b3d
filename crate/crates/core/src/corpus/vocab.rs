use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Reserved token ids. Specials always occupy ids 0–3 in this order.
pub const PAD: u32 = 0;
pub const SOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;

pub const SPECIAL_TOKENS: [&str; 4] = ["<pad>", "<sos>", "<eos>", "<unk>"];

/// Bidirectional token ↔ id map. Ids are contiguous from 0, specials first,
/// then every corpus token whose frequency reached `min_count`, ordered by
/// descending frequency with lexicographic tie-break so builds are
/// reproducible.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_count: usize,
}

impl Vocab {
    /// Build from tokenized lines. Tokens seen fewer than `min_count` times
    /// are left out and will encode to UNK.
    pub fn build<S: AsRef<str>>(lines: &[Vec<S>], min_count: usize) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::config("min_count must be >= 1"));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for line in lines {
            for tok in line {
                *counts.entry(tok.as_ref()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, n)| n >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
        Self::from_tokens(tokens, min_count)
    }

    /// Rebuild from an id-ordered token list (the on-disk form).
    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> Result<Self> {
        if tokens.len() < SPECIAL_TOKENS.len() {
            return Err(Error::data("vocab is missing the reserved specials"));
        }
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            if tokens[i] != *s {
                return Err(Error::data(format!(
                    "vocab id {} must be the special {:?}, found {:?}",
                    i, s, tokens[i]
                )));
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::data(format!("duplicate token {t:?} in vocab")));
            }
        }
        Ok(Vocab {
            tokens,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Encode tokens to ids; anything unknown becomes UNK.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(UNK))
            .collect()
    }

    /// Decode ids back to token strings. An out-of-range id means the data
    /// stream is corrupt, so it is an error rather than a fallback.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| {
                self.token(id)
                    .map(str::to_string)
                    .ok_or_else(|| Error::data(format!("token id {id} out of range (vocab size {})", self.len())))
            })
            .collect()
    }

    /// Stable hash of the token list, used to tie serialized artifacts
    /// (embeddings, checkpoints) to the vocabulary they were built against.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tokens {
            for b in t.as_bytes() {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= 0x1f; // token separator
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Save as a JSON array of token strings in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.tokens)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path, min_count: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let tokens: Vec<String> = serde_json::from_str(&text)?;
        Self::from_tokens(tokens, min_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|l| l.chars().map(|c| c.to_string()).collect())
            .collect()
    }

    #[test]
    fn min_count_boundary() {
        // "甲" appears 5 times, "乙" 4 times.
        let ls = lines(&["甲甲甲甲甲", "乙乙乙乙"]);
        let v = Vocab::build(&ls, 5).unwrap();
        assert!(v.id("甲").is_some());
        assert_eq!(v.id("乙"), None);
        assert_eq!(v.encode(&["乙"]), vec![UNK]);
    }

    #[test]
    fn empty_corpus_keeps_specials_only() {
        let v = Vocab::build::<String>(&[], 5).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.token(PAD), Some("<pad>"));
        assert_eq!(v.token(UNK), Some("<unk>"));
    }

    #[test]
    fn roundtrip_and_unk() {
        let ls = lines(&["春夏秋冬", "春夏秋冬"]);
        let v = Vocab::build(&ls, 2).unwrap();
        let toks: Vec<String> = "春秋".chars().map(|c| c.to_string()).collect();
        let ids = v.encode(&toks);
        assert_eq!(v.decode(&ids).unwrap(), toks);
        // OOV round-trips to the UNK marker.
        let ids = v.encode(&["雪".to_string()]);
        assert_eq!(v.decode(&ids).unwrap(), vec!["<unk>".to_string()]);
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let v = Vocab::build::<String>(&[], 1).unwrap();
        assert!(v.decode(&[v.len() as u32]).is_err());
    }

    #[test]
    fn ids_are_unique_and_contiguous() {
        let ls = lines(&["甲乙丙", "甲乙丙", "丁戊己"]);
        let v = Vocab::build(&ls, 1).unwrap();
        for id in 0..v.len() as u32 {
            let t = v.token(id).unwrap();
            assert_eq!(v.id(t), Some(id));
        }
    }

    #[test]
    fn build_order_is_deterministic() {
        let ls = lines(&["甲乙", "乙甲", "丙丙"]);
        let a = Vocab::build(&ls, 1).unwrap();
        let b = Vocab::build(&ls, 1).unwrap();
        assert_eq!(a.tokens(), b.tokens());
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
