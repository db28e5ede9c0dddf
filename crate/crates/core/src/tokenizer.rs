//! Frequent-consecutive-subsequence tokenization.
//!
//! Vocabulary training starts from the character alphabet and repeatedly
//! merges the most frequent adjacent token pair (ties broken by the
//! lexicographic order of the pair's strings). Tokenization replays the
//! merges in training order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::path::Path;

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
    merges: Vec<(String, String)>,
    merge_rank: HashMap<(u32, u32), (usize, u32)>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: BTreeMap<String, u32>,
    merges: Vec<(String, String)>,
}

impl Vocabulary {
    fn from_parts(id_to_token: Vec<String>, merges: Vec<(String, String)>) -> Result<Self> {
        let token_to_id: HashMap<String, u32> = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        if token_to_id.len() != id_to_token.len() {
            return Err(DtiError::Invalid("duplicate token in vocabulary".into()));
        }
        if id_to_token.first().map(String::as_str) != Some(PAD_TOKEN)
            || id_to_token.get(1).map(String::as_str) != Some(UNK_TOKEN)
        {
            return Err(DtiError::Invalid("vocabulary must start with <pad>=0, <unk>=1".into()));
        }
        let mut merge_rank = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            let get = |t: &str| {
                token_to_id
                    .get(t)
                    .copied()
                    .ok_or_else(|| DtiError::Invalid(format!("merge part {t:?} missing from vocabulary")))
            };
            let (li, ri) = (get(l)?, get(r)?);
            let merged = get(&format!("{l}{r}"))?;
            merge_rank.entry((li, ri)).or_insert((rank, merged));
        }
        Ok(Vocabulary {
            id_to_token,
            token_to_id,
            merges,
            merge_rank,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VocabFile {
            tokens: self
                .id_to_token
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32))
                .collect(),
            merges: self.merges.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Load a vocabulary file, either one written by [`Vocabulary::to_json`]
    /// or a pre-built one with the same schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(text)?;
        let n = file.tokens.len();
        let mut id_to_token = vec![None; n];
        for (t, id) in file.tokens {
            let slot = id_to_token
                .get_mut(id as usize)
                .ok_or_else(|| DtiError::Invalid(format!("token id {id} not dense")))?;
            *slot = Some(t);
        }
        let id_to_token = id_to_token
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| DtiError::Invalid("token ids not dense".into()))?;
        Self::from_parts(id_to_token, file.merges)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| DtiError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DtiError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Heap entry ordered by count, then by reversed lexicographic pair.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    key: Reverse<(String, String)>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.cmp(&other.count).then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Train a merge vocabulary. `target_size` counts non-special tokens.
pub fn train_vocab(corpus: &[String], target_size: usize, min_pair_freq: usize) -> Result<Vocabulary> {
    if corpus.is_empty() || corpus.iter().all(|s| s.is_empty()) {
        return Err(DtiError::Invalid("vocabulary corpus is empty".into()));
    }
    let alphabet: BTreeSet<char> = corpus.iter().flat_map(|s| s.chars()).collect();
    let mut tokens: Vec<String> = vec![PAD_TOKEN.into(), UNK_TOKEN.into()];
    tokens.extend(alphabet.iter().map(|c| c.to_string()));
    let char_id: HashMap<char, u32> = alphabet
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i as u32 + 2))
        .collect();

    // Distinct words with multiplicities.
    let mut word_counts: BTreeMap<&str, i64> = BTreeMap::new();
    for s in corpus {
        *word_counts.entry(s.as_str()).or_default() += 1;
    }
    let mut words: Vec<Vec<u32>> = Vec::with_capacity(word_counts.len());
    let mut freqs: Vec<i64> = Vec::with_capacity(word_counts.len());
    for (w, c) in &word_counts {
        words.push(w.chars().map(|ch| char_id[&ch]).collect());
        freqs.push(*c);
    }

    let mut pair_counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (wi, w) in words.iter().enumerate() {
        for p in w.windows(2) {
            let pair = (p[0], p[1]);
            *pair_counts.entry(pair).or_default() += freqs[wi];
            where_.entry(pair).or_default().insert(wi);
        }
    }

    let key_of = |tokens: &[String], pair: (u32, u32)| {
        Reverse((tokens[pair.0 as usize].clone(), tokens[pair.1 as usize].clone()))
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| Candidate {
            count,
            key: key_of(&tokens, pair),
            pair,
        })
        .collect();

    let mut merges = Vec::new();
    let mut known: std::collections::HashSet<String> = tokens.iter().cloned().collect();
    let mut banned: std::collections::HashSet<(u32, u32)> = Default::default();
    let budget = target_size.saturating_sub(alphabet.len());
    while merges.len() < budget {
        let Some(best) = heap.pop() else { break };
        let current = pair_counts.get(&best.pair).copied().unwrap_or(0);
        if current != best.count {
            // Stale entry; the live count was pushed separately.
            continue;
        }
        if current <= 0 || (current as usize) < min_pair_freq {
            break;
        }
        let (l, r) = best.pair;
        let merged_str = format!("{}{}", tokens[l as usize], tokens[r as usize]);
        if known.contains(&merged_str) {
            // A different split of an existing token; never merge it.
            banned.insert(best.pair);
            continue;
        }
        known.insert(merged_str.clone());
        let new_id = tokens.len() as u32;
        tokens.push(merged_str);
        merges.push((tokens[l as usize].clone(), tokens[r as usize].clone()));

        let affected: Vec<usize> = where_.remove(&best.pair).map(|s| s.into_iter().collect()).unwrap_or_default();
        let mut touched: BTreeSet<(u32, u32)> = BTreeSet::new();
        for wi in affected {
            let f = freqs[wi];
            let old = std::mem::take(&mut words[wi]);
            for p in old.windows(2) {
                let pair = (p[0], p[1]);
                *pair_counts.entry(pair).or_default() -= f;
                touched.insert(pair);
            }
            let merged = apply_pair(&old, l, r, new_id);
            for p in merged.windows(2) {
                let pair = (p[0], p[1]);
                *pair_counts.entry(pair).or_default() += f;
                where_.entry(pair).or_default().insert(wi);
                touched.insert(pair);
            }
            words[wi] = merged;
        }
        pair_counts.remove(&best.pair);
        for pair in touched {
            if banned.contains(&pair) {
                continue;
            }
            if let Some(&count) = pair_counts.get(&pair) {
                if count > 0 {
                    heap.push(Candidate {
                        count,
                        key: key_of(&tokens, pair),
                        pair,
                    });
                }
            }
        }
    }

    Vocabulary::from_parts(tokens, merges)
}

fn apply_pair(seq: &[u32], l: u32, r: u32, merged: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == l && seq[i + 1] == r {
            out.push(merged);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub token_ids: Vec<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Ids right-padded with PAD to `width`, and the matching validity mask.
    pub fn padded(&self, width: usize) -> (Vec<u32>, Vec<bool>) {
        let mut ids = self.token_ids.clone();
        ids.truncate(width);
        let mut mask = vec![true; ids.len()];
        ids.resize(width, PAD_ID);
        mask.resize(width, false);
        (ids, mask)
    }
}

/// Segment a sequence by replaying merges in training order, then
/// truncate to `max_len`.
pub fn tokenize(sequence: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if sequence.is_empty() {
        return Err(DtiError::Invalid("cannot tokenize an empty sequence".into()));
    }
    let mut ids: Vec<u32> = sequence
        .chars()
        .map(|c| {
            let mut buf = [0u8; 4];
            vocab.id(c.encode_utf8(&mut buf)).unwrap_or(UNK_ID)
        })
        .collect();
    // Lowest-rank pair first. A merge only creates pairs of higher rank
    // than itself, so this matches applying the rules one by one.
    loop {
        let best = ids
            .windows(2)
            .filter_map(|p| vocab.merge_rank.get(&(p[0], p[1])).map(|&(rank, new)| (rank, p[0], p[1], new)))
            .min_by_key(|t| t.0);
        match best {
            Some((_, l, r, new)) => ids = apply_pair(&ids, l, r, new),
            None => break,
        }
    }
    ids.truncate(max_len);
    Ok(TokenSequence { token_ids: ids })
}

/// Concatenate token strings; UNK renders as `?`.
pub fn detokenize(tokens: &TokenSequence, vocab: &Vocabulary) -> String {
    tokens
        .token_ids
        .iter()
        .filter(|&&id| id != PAD_ID)
        .map(|&id| match id {
            UNK_ID => "?",
            _ => vocab.token(id).unwrap_or("?"),
        })
        .collect()
}

/// Content + position embedding lookup: row `i` is
/// `content[id_i] + position[i]`.
pub fn embed_tokens(tokens: &TokenSequence, content_table: &Tensor, position_table: &Tensor) -> Result<Tensor> {
    let (vocab_rows, dim) = content_table.dims2()?;
    let (pos_rows, pos_dim) = position_table.dims2()?;
    if dim != pos_dim {
        return Err(DtiError::Dimension(format!("content dim {dim} vs position dim {pos_dim}")));
    }
    if tokens.is_empty() {
        return Err(DtiError::Invalid("empty token sequence".into()));
    }
    if tokens.len() > pos_rows {
        return Err(DtiError::Bounds {
            what: "position",
            index: tokens.len() - 1,
            size: pos_rows,
        });
    }
    if let Some(&bad) = tokens.token_ids.iter().find(|&&id| id as usize >= vocab_rows) {
        return Err(DtiError::Bounds {
            what: "token id",
            index: bad as usize,
            size: vocab_rows,
        });
    }
    let ids = Tensor::new(tokens.token_ids.as_slice(), content_table.device())?;
    let content = content_table.index_select(&ids, 0)?;
    let pos = position_table.narrow(0, 0, tokens.len())?;
    debug_assert_eq!(content.dim(D::Minus1)?, dim);
    Ok((content + pos)?)
}
