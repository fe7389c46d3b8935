//! Text evaluation metrics: ROUGE-L, a simplified METEOR, and sharpened
//! cosine similarity over pluggable embeddings.
//!
//! METEOR here is the exact-match unigram variant (no stemming or synonym
//! stages), keeping scores deterministic and dependency-free. The default
//! embedding provider is a transparent bag-of-words baseline; an external
//! sentence encoder can be slotted in through [`EmbeddingProvider`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

/// Errors from metric computation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("reference text has no tokens")]
    EmptyReference,
    #[error("cannot score a zero-magnitude embedding")]
    ZeroVector,
    #[error("embedding dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("prediction and reference files differ in line count ({predictions} vs {references})")]
    PairCountMismatch { predictions: usize, references: usize },
    #[error("no pairs")]
    NoPairs,
    #[error("embedding vocabulary is empty")]
    EmptyVocabulary,
    #[error("embedding backend failed: {0}")]
    Provider(String),
}

/// Lowercase tokens split on non-alphanumeric characters; never empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// ROUGE-L precision, recall, and balanced F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Longest-common-subsequence length via dynamic programming.
fn lcs_length<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let cols = b.len() + 1;
    let mut table = alloc::vec![0usize; (a.len() + 1) * cols];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i * cols + j] = if a[i - 1].as_ref() == b[j - 1].as_ref() {
                table[(i - 1) * cols + (j - 1)] + 1
            } else {
                table[(i - 1) * cols + j].max(table[i * cols + (j - 1)])
            };
        }
    }
    table[a.len() * cols + b.len()]
}

/// ROUGE-L over token sequences: `P = LCS/|cand|`, `R = LCS/|ref|`,
/// `F1 = 2PR/(P+R)`. An empty candidate scores zero everywhere.
pub fn rouge_l<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<RougeScore, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(RougeScore { precision: 0.0, recall: 0.0, f1: 0.0 });
    }
    let lcs = lcs_length(candidate, reference) as f64;
    let precision = lcs / candidate.len() as f64;
    let recall = lcs / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RougeScore { precision, recall, f1 })
}

/// Simplified METEOR: greedy left-to-right exact unigram alignment, harmonic
/// mean `10PR/(R+9P)`, chunk penalty `0.5 * (chunks/m)^3`.
pub fn meteor<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<f64, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }

    // Align each candidate token to an unused reference occurrence, preferring
    // the position that extends the previous match contiguously.
    let mut used = alloc::vec![false; reference.len()];
    let mut matches: Vec<usize> = Vec::new(); // reference index per matched candidate token
    let mut prev: Option<usize> = None;
    for token in candidate {
        let token = token.as_ref();
        let contiguous = prev
            .map(|p| p + 1)
            .filter(|&next| next < reference.len() && !used[next] && reference[next].as_ref() == token);
        let chosen = contiguous.or_else(|| {
            (0..reference.len()).find(|&j| !used[j] && reference[j].as_ref() == token)
        });
        if let Some(j) = chosen {
            used[j] = true;
            matches.push(j);
            prev = Some(j);
        } else {
            prev = None;
        }
    }

    let m = matches.len();
    if m == 0 {
        return Ok(0.0);
    }
    let mut chunks = 1usize;
    for window in matches.windows(2) {
        if window[1] != window[0] + 1 {
            chunks += 1;
        }
    }

    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let ratio = chunks as f64 / m as f64;
    let penalty = 0.5 * ratio * ratio * ratio;
    Ok(f_mean * (1.0 - penalty))
}

/// Which sharpening rule [`scs`] applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScsVariant {
    /// `cos^3 * sgn(cos)`, i.e. `|cos|^3`.
    #[default]
    Literal,
    /// Plain signed `cos^3`.
    Signed,
}

/// Sharpened cosine similarity between two embeddings.
pub fn scs(u: &[f64], v: &[f64], variant: ScsVariant) -> Result<f64, MetricsError> {
    if u.len() != v.len() {
        return Err(MetricsError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let mut dot = 0.0f64;
    let mut norm_u = 0.0f64;
    let mut norm_v = 0.0f64;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        norm_u += u[i] * u[i];
        norm_v += v[i] * v[i];
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    let cosine = (dot / (libm::sqrt(norm_u) * libm::sqrt(norm_v))).clamp(-1.0, 1.0);
    let cubed = cosine * cosine * cosine;
    Ok(match variant {
        ScsVariant::Literal => cubed * sign(cosine),
        ScsVariant::Signed => cubed,
    })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Text-to-vector backend for the semantic similarity metric.
pub trait EmbeddingProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError>;
}

/// L2-normalized unigram count vectors over a corpus-built vocabulary.
#[derive(Debug, Clone)]
pub struct BowEmbedding {
    vocabulary: BTreeMap<String, usize>,
}

impl BowEmbedding {
    /// Builds the vocabulary from every text the metric will see.
    pub fn from_corpus<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, MetricsError> {
        let mut vocabulary = BTreeMap::new();
        for text in texts {
            for token in tokenize(text) {
                let next = vocabulary.len();
                vocabulary.entry(token).or_insert(next);
            }
        }
        if vocabulary.is_empty() {
            return Err(MetricsError::EmptyVocabulary);
        }
        Ok(Self { vocabulary })
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len()
    }
}

impl EmbeddingProvider for BowEmbedding {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        let mut vector = alloc::vec![0.0f64; self.vocabulary.len()];
        for token in tokenize(text) {
            if let Some(&index) = self.vocabulary.get(&token) {
                vector[index] += 1.0;
            }
        }
        let norm = libm::sqrt(vector.iter().map(|x| x * x).sum::<f64>());
        if norm > 0.0 {
            for x in &mut vector {
                *x /= norm;
            }
        }
        Ok(vector)
    }
}

/// Which metrics a corpus evaluation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricSelection {
    pub rouge: bool,
    pub meteor: bool,
    pub scs: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self { rouge: true, meteor: true, scs: true }
    }
}

/// Per-pair scores for one prediction/reference line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScores {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<RougeScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meteor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scs: Option<f64>,
}

/// Corpus-level evaluation report: per-pair scores and arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub pairs: usize,
    pub meteor_variant: &'static str,
    pub scs_variant: ScsVariant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rouge_l_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_meteor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_scs: Option<f64>,
    pub per_pair: Vec<PairScores>,
}

/// Mean over scores summed in value order, so the result is invariant to
/// any permutation of the pairs.
fn order_independent_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Scores line-aligned prediction/reference pairs and averages each selected
/// metric. An empty candidate line scores zero; a tokenless reference line is
/// an error.
pub fn evaluate_corpus(
    predictions: &[String],
    references: &[String],
    selection: MetricSelection,
    scs_variant: ScsVariant,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<CorpusReport, MetricsError> {
    if predictions.len() != references.len() {
        return Err(MetricsError::PairCountMismatch {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::NoPairs);
    }

    let mut per_pair = Vec::with_capacity(predictions.len());
    let mut rouge_scores = Vec::new();
    let mut meteor_scores = Vec::new();
    let mut scs_scores = Vec::new();

    for (index, (pred, reference)) in predictions.iter().zip(references).enumerate() {
        let pred_tokens = tokenize(pred);
        let ref_tokens = tokenize(reference);
        let mut scores = PairScores { index, rouge_l: None, meteor: None, scs: None };

        if selection.rouge {
            let score = rouge_l(&pred_tokens, &ref_tokens)?;
            rouge_scores.push(score.f1);
            scores.rouge_l = Some(score);
        }
        if selection.meteor {
            let score = meteor(&pred_tokens, &ref_tokens)?;
            meteor_scores.push(score);
            scores.meteor = Some(score);
        }
        if selection.scs {
            if ref_tokens.is_empty() {
                return Err(MetricsError::EmptyReference);
            }
            let score = if pred_tokens.is_empty() {
                0.0
            } else {
                let embedder = embedder.ok_or_else(|| {
                    MetricsError::Provider(String::from("no embedding provider configured"))
                })?;
                scs(&embedder.embed(pred)?, &embedder.embed(reference)?, scs_variant)?
            };
            scs_scores.push(score);
            scores.scs = Some(score);
        }

        per_pair.push(scores);
    }

    Ok(CorpusReport {
        pairs: predictions.len(),
        meteor_variant: "exact-match unigrams",
        scs_variant,
        mean_rouge_l_f1: selection.rouge.then(|| order_independent_mean(rouge_scores)),
        mean_meteor: selection.meteor.then(|| order_independent_mean(meteor_scores)),
        mean_scs: selection.scs.then(|| order_independent_mean(scs_scores)),
        per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("Top zone, and BOTTOM-zone!"), toks(&["top", "zone", "and", "bottom", "zone"]));
        assert_eq!(tokenize("  "), Vec::<String>::new());
        assert_eq!(tokenize("3 intact buildings (120 px)"), toks(&["3", "intact", "buildings", "120", "px"]));
    }

    #[test]
    fn rouge_identity_is_one() {
        let t = toks(&["a", "b", "c"]);
        let score = rouge_l(&t, &t).unwrap();
        assert_eq!((score.precision, score.recall, score.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_disjoint_is_zero() {
        let score = rouge_l(&toks(&["x", "y"]), &toks(&["a", "b"])).unwrap();
        assert_eq!((score.precision, score.recall, score.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge_partial_overlap() {
        // LCS([a,b], [a,b,c]) = 2 -> P = 1, R = 2/3, F1 = 0.8.
        let score = rouge_l(&toks(&["a", "b"]), &toks(&["a", "b", "c"])).unwrap();
        assert_eq!(score.precision, 1.0);
        assert!((score.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((score.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rouge_empty_candidate_and_reference() {
        let empty: Vec<String> = vec![];
        let score = rouge_l(&empty, &toks(&["a"])).unwrap();
        assert_eq!(score.f1, 0.0);
        assert_eq!(rouge_l(&toks(&["a"]), &empty), Err(MetricsError::EmptyReference));
    }

    #[test]
    fn meteor_identity_keeps_residual_penalty() {
        let t = toks(&["a", "b", "c"]);
        let score = meteor(&t, &t).unwrap();
        assert!((score - 0.981481).abs() < 1e-6, "got {score}");
    }

    #[test]
    fn meteor_permutation_pays_chunk_penalty() {
        let score = meteor(&toks(&["c", "a", "b"]), &toks(&["a", "b", "c"])).unwrap();
        assert!((score - 0.851852).abs() < 1e-6, "got {score}");
    }

    #[test]
    fn meteor_no_match_is_zero() {
        assert_eq!(meteor(&toks(&["x"]), &toks(&["a"])).unwrap(), 0.0);
    }

    #[test]
    fn meteor_stays_in_unit_interval() {
        let cases = [
            (vec!["a"], vec!["a"]),
            (vec!["a", "a", "b"], vec!["b", "a"]),
            (vec!["q", "w", "e", "r"], vec!["r", "e", "w", "q"]),
        ];
        for (cand, reference) in cases {
            let score = meteor(&toks(&cand), &toks(&reference)).unwrap();
            assert!((0.0..=1.0).contains(&score), "{cand:?} vs {reference:?} -> {score}");
        }
    }

    #[test]
    fn scs_matches_literal_rule() {
        let u = [1.0, 0.0];
        assert_eq!(scs(&u, &u, ScsVariant::Literal).unwrap(), 1.0);
        assert_eq!(scs(&u, &[0.0, 1.0], ScsVariant::Literal).unwrap(), 0.0);

        // cos = -0.5 -> literal (-0.5)^3 * (-1) = 0.125, signed -0.125.
        let v = [-0.5, libm::sqrt(3.0) / 2.0];
        let literal = scs(&u, &v, ScsVariant::Literal).unwrap();
        let signed = scs(&u, &v, ScsVariant::Signed).unwrap();
        assert!((literal - 0.125).abs() < 1e-12);
        assert!((signed + 0.125).abs() < 1e-12);
    }

    #[test]
    fn scs_rejects_zero_vectors() {
        assert_eq!(scs(&[0.0, 0.0], &[1.0, 0.0], ScsVariant::Literal), Err(MetricsError::ZeroVector));
        assert!(matches!(
            scs(&[1.0], &[1.0, 0.0], ScsVariant::Literal),
            Err(MetricsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bow_embedding_normalizes_counts() {
        let bow = BowEmbedding::from_corpus(["a a b"]).unwrap();
        let vector = bow.embed("a a b").unwrap();
        let expected = [2.0 / libm::sqrt(5.0), 1.0 / libm::sqrt(5.0)];
        assert!((vector[0] - expected[0]).abs() < 1e-15);
        assert!((vector[1] - expected[1]).abs() < 1e-15);

        // Identical texts embed identically.
        assert_eq!(bow.embed("a a b").unwrap(), vector);
        assert!(BowEmbedding::from_corpus([""]).is_err());
    }

    #[test]
    fn corpus_eval_identity_means_one() {
        let lines: Vec<String> = vec!["the top zone".into(), "two intact buildings".into()];
        let bow = BowEmbedding::from_corpus(lines.iter().map(|s| s.as_str())).unwrap();
        let report = evaluate_corpus(
            &lines,
            &lines.clone(),
            MetricSelection::default(),
            ScsVariant::Literal,
            Some(&bow),
        )
        .unwrap();
        assert_eq!(report.mean_rouge_l_f1, Some(1.0));
        assert!((report.mean_scs.unwrap() - 1.0).abs() < 1e-12);
        assert!(report.mean_meteor.unwrap() > 0.9);
    }

    #[test]
    fn corpus_eval_single_pair_mean() {
        let preds = vec!["a b".to_string()];
        let refs = vec!["a b c".to_string()];
        let report = evaluate_corpus(
            &preds,
            &refs,
            MetricSelection { rouge: true, meteor: false, scs: false },
            ScsVariant::Literal,
            None,
        )
        .unwrap();
        assert!((report.mean_rouge_l_f1.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn corpus_means_survive_pair_permutation() {
        let preds: Vec<String> = vec![
            "the top zone holds two buildings".into(),
            "no structures".into(),
            "one destroyed building in the left zone".into(),
            "damaged roofs near the center".into(),
            "intact housing across the bottom".into(),
        ];
        let refs: Vec<String> = vec![
            "two buildings sit in the top zone".into(),
            "nothing detected".into(),
            "the left zone lost one building".into(),
            "central roofs are damaged".into(),
            "bottom housing remains intact".into(),
        ];
        let bow = BowEmbedding::from_corpus(preds.iter().chain(&refs).map(|s| s.as_str())).unwrap();
        let forward =
            evaluate_corpus(&preds, &refs, MetricSelection::default(), ScsVariant::Literal, Some(&bow))
                .unwrap();

        let mut shuffled: Vec<(String, String)> =
            preds.iter().cloned().zip(refs.iter().cloned()).collect();
        shuffled.rotate_left(2);
        shuffled.swap(0, 3);
        let (sp, sr): (Vec<String>, Vec<String>) = shuffled.into_iter().unzip();
        let permuted =
            evaluate_corpus(&sp, &sr, MetricSelection::default(), ScsVariant::Literal, Some(&bow))
                .unwrap();

        assert_eq!(forward.mean_rouge_l_f1, permuted.mean_rouge_l_f1);
        assert_eq!(forward.mean_meteor, permuted.mean_meteor);
        assert_eq!(forward.mean_scs, permuted.mean_scs);
    }

    #[test]
    fn corpus_eval_rejects_mismatch_and_empty() {
        let one = vec!["a".to_string()];
        let two = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            evaluate_corpus(&one, &two, MetricSelection::default(), ScsVariant::Literal, None),
            Err(MetricsError::PairCountMismatch { .. })
        ));
        assert_eq!(
            evaluate_corpus(&[], &[], MetricSelection::default(), ScsVariant::Literal, None),
            Err(MetricsError::NoPairs)
        );
    }
}
