//! Synthetic multi-task legal-style corpora with controlled confusing charge
//! pairs, number-sensitive charges, and scattered relevant/distractor
//! amounts, plus the canonical JSONL on-disk format.
//!
//! Documents are token-id sequences. A monetary amount appears as a single
//! `NUM` token; its integer value and relevance live in the instance's
//! `numeric_spans`, so a text-only model never sees the magnitude.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// One number occurrence inside a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericSpan {
    pub sent: usize,
    pub pos: usize,
    pub value: u64,
    pub relevant: bool,
}

/// A fact description with three task labels and an optional known total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInstance {
    pub sentences: Vec<Vec<u32>>,
    pub numeric_spans: Vec<NumericSpan>,
    pub charge: usize,
    pub law: usize,
    pub term: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_amount: Option<u64>,
}

impl CaseInstance {
    /// Sum of the per-sentence amounts, one aggregate per sentence.
    pub fn sentence_amounts(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.sentences.len()];
        for span in &self.numeric_spans {
            sums[span.sent] += span.value;
        }
        sums
    }
}

fn default_vocab_size() -> Option<usize> {
    None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub num_charges: usize,
    pub num_laws: usize,
    pub num_terms: usize,
    /// Total embedding-table size; `None` derives the minimum from the
    /// layout below. Explicit values must cover the layout.
    #[serde(default = "default_vocab_size")]
    pub vocab_size: Option<usize>,
    pub sentences_per_doc: (usize, usize),
    pub tokens_per_sentence: (usize, usize),
    pub relevant_per_doc: (usize, usize),
    pub distractors_per_doc: (usize, usize),
    /// Charge-id pairs whose documents draw most content tokens from a
    /// shared pool.
    pub confusing_pairs: Vec<(usize, usize)>,
    /// Charges whose term label is the bucket index of the total amount.
    pub number_sensitive: BTreeSet<usize>,
    /// Fraction of content-token draws that confusing charges take from
    /// their pair's shared pool.
    pub overlap_ratio: f64,
    /// Probability that a document's law label is resampled uniformly.
    pub law_noise: f64,
    pub amount_range: (u64, u64),
    /// Strictly increasing bucket edges; `len + 1 == num_terms`.
    pub bucket_edges: Vec<u64>,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_charges: 20,
            num_laws: 15,
            num_terms: 11,
            vocab_size: None,
            sentences_per_doc: (5, 15),
            tokens_per_sentence: (6, 10),
            relevant_per_doc: (1, 4),
            distractors_per_doc: (0, 5),
            confusing_pairs: vec![(1, 2), (5, 6), (9, 10)],
            number_sensitive: [0, 4, 8, 12, 16].into_iter().collect(),
            overlap_ratio: 0.8,
            law_noise: 0.05,
            amount_range: (500, 60_000),
            bucket_edges: vec![
                2_000, 4_000, 8_000, 15_000, 30_000, 50_000, 80_000, 120_000, 170_000, 230_000,
            ],
            train_size: 4000,
            val_size: 500,
            test_size: 1000,
            seed: 42,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CorpusError::InvalidConfig(msg));
        if self.num_charges < 2 {
            return fail(format!("need at least 2 charges, got {}", self.num_charges));
        }
        if self.num_laws == 0 || self.num_terms == 0 {
            return fail("law and term class counts must be positive".into());
        }
        if self.vocab_size == Some(0) {
            return fail("vocabulary is empty".into());
        }
        let required = VocabLayout::for_config(self).required_vocab;
        if let Some(v) = self.vocab_size {
            if v < required {
                return fail(format!(
                    "vocab_size {v} is smaller than the {required} tokens the layout needs"
                ));
            }
        }
        if !self.bucket_edges.windows(2).all(|w| w[0] < w[1]) {
            return fail("bucket edges must be strictly increasing".into());
        }
        if self.bucket_edges.len() + 1 != self.num_terms {
            return fail(format!(
                "{} bucket edges define {} buckets but num_terms is {}",
                self.bucket_edges.len(),
                self.bucket_edges.len() + 1,
                self.num_terms
            ));
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.confusing_pairs {
            if a == b {
                return fail(format!("confusing pair ({a}, {b}) is not a pair"));
            }
            if a >= self.num_charges || b >= self.num_charges {
                return fail(format!("confusing pair ({a}, {b}) outside charge range"));
            }
            if !seen.insert(a) || !seen.insert(b) {
                return fail("confusing pairs must be disjoint".into());
            }
        }
        if self.number_sensitive.iter().any(|&c| c >= self.num_charges) {
            return fail("number_sensitive contains an out-of-range charge".into());
        }
        if !(0.0..=1.0).contains(&self.overlap_ratio) {
            return fail(format!("overlap_ratio {} outside [0, 1]", self.overlap_ratio));
        }
        if !(0.0..=1.0).contains(&self.law_noise) {
            return fail(format!("law_noise {} outside [0, 1]", self.law_noise));
        }
        for (name, (lo, hi)) in [
            ("sentences_per_doc", self.sentences_per_doc),
            ("tokens_per_sentence", self.tokens_per_sentence),
            ("relevant_per_doc", self.relevant_per_doc),
            ("distractors_per_doc", self.distractors_per_doc),
        ] {
            if lo > hi {
                return fail(format!("{name}: min {lo} > max {hi}"));
            }
        }
        if self.relevant_per_doc.0 < 1 {
            return fail("relevant_per_doc must be at least 1".into());
        }
        if self.tokens_per_sentence.0 < 3 {
            return fail("tokens_per_sentence must allow at least 3 tokens".into());
        }
        if self.amount_range.0 < 1 || self.amount_range.0 > self.amount_range.1 {
            return fail(format!("bad amount_range {:?}", self.amount_range));
        }
        if self.train_size == 0 || self.val_size == 0 || self.test_size == 0 {
            return fail("all three split sizes must be positive".into());
        }
        Ok(())
    }

    /// Index of the term bucket that `total` falls into.
    pub fn bucket_of(&self, total: u64) -> usize {
        self.bucket_edges.iter().take_while(|&&e| total >= e).count()
    }

    pub fn effective_vocab_size(&self) -> usize {
        let required = VocabLayout::for_config(self).required_vocab;
        self.vocab_size.map_or(required, |v| v.max(required))
    }

    pub fn is_confusing(&self, charge: usize) -> bool {
        self.confusing_pairs
            .iter()
            .any(|&(a, b)| a == charge || b == charge)
    }

    /// All charge ids that belong to some confusing pair.
    pub fn confusing_set(&self) -> BTreeSet<usize> {
        self.confusing_pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect()
    }
}

const FILLER_TOKENS: u32 = 4;
const AMOUNT_CONTEXT_TOKENS: u32 = 8;
const DISTRACTOR_CONTEXT_TOKENS: u32 = 8;
const OWN_POOL_CONFUSING: u32 = 3;
const OWN_POOL_PLAIN: u32 = 30;
const SHARED_POOL: u32 = 40;

/// Deterministic partition of the token-id space. Function tokens (number
/// marker, filler, amount/distractor context) come first; charge-topic
/// content pools start at `content_base`.
#[derive(Clone, Debug)]
pub struct VocabLayout {
    pub num_token: u32,
    pub filler: Range<u32>,
    pub amount_ctx: Range<u32>,
    pub distractor_ctx: Range<u32>,
    pub content_base: u32,
    /// Per-charge own pool.
    pub own_pools: Vec<Range<u32>>,
    /// Per confusing pair, in config order.
    pub shared_pools: Vec<Range<u32>>,
    pub required_vocab: usize,
}

impl VocabLayout {
    pub fn for_config(cfg: &CorpusConfig) -> Self {
        fn take(next: &mut u32, n: u32) -> Range<u32> {
            let r = *next..*next + n;
            *next += n;
            r
        }
        let num_token = 0;
        let mut next = 1;
        let filler = take(&mut next, FILLER_TOKENS);
        let amount_ctx = take(&mut next, AMOUNT_CONTEXT_TOKENS);
        let distractor_ctx = take(&mut next, DISTRACTOR_CONTEXT_TOKENS);
        let content_base = next;
        let own_pools = (0..cfg.num_charges)
            .map(|c| {
                if cfg.is_confusing(c) {
                    take(&mut next, OWN_POOL_CONFUSING)
                } else {
                    take(&mut next, OWN_POOL_PLAIN)
                }
            })
            .collect();
        let shared_pools = cfg
            .confusing_pairs
            .iter()
            .map(|_| take(&mut next, SHARED_POOL))
            .collect();
        Self {
            num_token,
            filler,
            amount_ctx,
            distractor_ctx,
            content_base,
            own_pools,
            shared_pools,
            required_vocab: next as usize,
        }
    }

    fn shared_pool_of(&self, cfg: &CorpusConfig, charge: usize) -> Option<Range<u32>> {
        cfg.confusing_pairs
            .iter()
            .position(|&(a, b)| a == charge || b == charge)
            .map(|i| self.shared_pools[i].clone())
    }
}

pub struct CorpusSplits {
    pub train: Vec<CaseInstance>,
    pub val: Vec<CaseInstance>,
    pub test: Vec<CaseInstance>,
}

/// Generate the three splits. Deterministic for a fixed config: each split
/// draws from its own RNG stream derived from the seed.
pub fn generate(cfg: &CorpusConfig) -> Result<CorpusSplits> {
    cfg.validate()?;
    let layout = VocabLayout::for_config(cfg);
    let gen_split = |stream: u64, size: usize| -> Vec<CaseInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        // Stratified charge assignment keeps the marginal near-uniform.
        let mut charges: Vec<usize> = (0..size).map(|i| i % cfg.num_charges).collect();
        charges.shuffle(&mut rng);
        charges
            .into_iter()
            .map(|c| generate_instance(&mut rng, cfg, &layout, c))
            .collect()
    };
    Ok(CorpusSplits {
        train: gen_split(1, cfg.train_size),
        val: gen_split(2, cfg.val_size),
        test: gen_split(3, cfg.test_size),
    })
}

fn pick(rng: &mut ChaCha8Rng, pool: &Range<u32>) -> u32 {
    rng.gen_range(pool.clone())
}

fn generate_instance(
    rng: &mut ChaCha8Rng,
    cfg: &CorpusConfig,
    layout: &VocabLayout,
    charge: usize,
) -> CaseInstance {
    let law = if rng.gen_bool(cfg.law_noise) {
        rng.gen_range(0..cfg.num_laws)
    } else {
        charge % cfg.num_laws
    };

    let k_rel = rng.gen_range(cfg.relevant_per_doc.0..=cfg.relevant_per_doc.1);
    let relevant_values: Vec<u64> = (0..k_rel)
        .map(|_| rng.gen_range(cfg.amount_range.0..=cfg.amount_range.1))
        .collect();
    let total: u64 = relevant_values.iter().sum();

    let term = if cfg.number_sensitive.contains(&charge) {
        cfg.bucket_of(total)
    } else if rng.gen_bool(0.75) {
        charge % cfg.num_terms
    } else {
        rng.gen_range(0..cfg.num_terms)
    };

    let k_dis = rng.gen_range(cfg.distractors_per_doc.0..=cfg.distractors_per_doc.1);
    let distractor_values: Vec<u64> = (0..k_dis)
        .map(|_| rng.gen_range(cfg.amount_range.0..=cfg.amount_range.1))
        .collect();

    // Group relevant values into amount sentences; occasionally two values
    // share one sentence, exercising per-sentence amount aggregation.
    let mut groups: Vec<Vec<u64>> = relevant_values.iter().map(|&v| vec![v]).collect();
    if groups.len() >= 2 && rng.gen_bool(0.2) {
        let merged = groups.pop().unwrap();
        groups.last_mut().unwrap().extend(merged);
    }

    let n_special = groups.len() + k_dis;
    let n_sent = rng
        .gen_range(cfg.sentences_per_doc.0..=cfg.sentences_per_doc.1)
        .max(n_special + 1);

    // Which sentence slots hold amounts / distractors.
    let mut slots: Vec<usize> = (0..n_sent).collect();
    slots.shuffle(rng);
    let amount_slots: Vec<usize> = slots[..groups.len()].to_vec();
    let distractor_slots: Vec<usize> = slots[groups.len()..n_special].to_vec();

    let shared = layout.shared_pool_of(cfg, charge);
    let own = layout.own_pools[charge].clone();

    let mut sentences = Vec::with_capacity(n_sent);
    let mut spans: Vec<NumericSpan> = Vec::new();
    for s in 0..n_sent {
        let len = rng.gen_range(cfg.tokens_per_sentence.0..=cfg.tokens_per_sentence.1);
        if let Some(gi) = amount_slots.iter().position(|&slot| slot == s) {
            let (tokens, positions) =
                number_sentence(rng, &layout.amount_ctx, len, groups[gi].len());
            for (pos, &value) in positions.iter().zip(&groups[gi]) {
                spans.push(NumericSpan {
                    sent: s,
                    pos: *pos,
                    value,
                    relevant: true,
                });
            }
            sentences.push(tokens);
        } else if let Some(di) = distractor_slots.iter().position(|&slot| slot == s) {
            let (tokens, positions) = number_sentence(rng, &layout.distractor_ctx, len, 1);
            spans.push(NumericSpan {
                sent: s,
                pos: positions[0],
                value: distractor_values[di],
                relevant: false,
            });
            sentences.push(tokens);
        } else {
            let tokens = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        pick(rng, &layout.filler)
                    } else {
                        match &shared {
                            Some(pool) if rng.gen_bool(cfg.overlap_ratio) => pick(rng, pool),
                            _ => pick(rng, &own),
                        }
                    }
                })
                .collect();
            sentences.push(tokens);
        }
    }
    spans.sort_by_key(|sp| (sp.sent, sp.pos));

    CaseInstance {
        sentences,
        numeric_spans: spans,
        charge,
        law,
        term,
        total_amount: Some(total),
    }
}

/// A sentence of context tokens with `count` number tokens at distinct
/// positions; returns the tokens and the number positions in span order.
fn number_sentence(
    rng: &mut ChaCha8Rng,
    ctx: &Range<u32>,
    len: usize,
    count: usize,
) -> (Vec<u32>, Vec<usize>) {
    let len = len.max(count + 1);
    let mut tokens: Vec<u32> = (0..len).map(|_| pick(rng, ctx)).collect();
    let mut positions: Vec<usize> = (0..len).collect();
    positions.shuffle(rng);
    let mut num_positions: Vec<usize> = positions[..count].to_vec();
    num_positions.sort_unstable();
    for &p in &num_positions {
        tokens[p] = 0; // the NUM token
    }
    (tokens, num_positions)
}

/// Jaccard overlap between the content-token vocabularies (ids at or beyond
/// `layout.content_base`) of two instance sets.
pub fn vocabulary_overlap(
    a: &[CaseInstance],
    b: &[CaseInstance],
    layout: &VocabLayout,
) -> f64 {
    let content = |docs: &[CaseInstance]| -> BTreeSet<u32> {
        docs.iter()
            .flat_map(|d| d.sentences.iter().flatten().copied())
            .filter(|&t| t >= layout.content_base)
            .collect()
    };
    let va = content(a);
    let vb = content(b);
    let inter = va.intersection(&vb).count() as f64;
    let union = va.union(&vb).count() as f64;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

pub fn write_jsonl(instances: &[CaseInstance], path: &Path) -> Result<()> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for inst in instances {
        let line = serde_json::to_string(inst).expect("instances always serialize");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<CaseInstance>> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let inst: CaseInstance =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> CorpusConfig {
        CorpusConfig {
            num_charges: 6,
            num_laws: 4,
            num_terms: 3,
            confusing_pairs: vec![(1, 2)],
            number_sensitive: [0].into_iter().collect(),
            bucket_edges: vec![5_000, 20_000],
            sentences_per_doc: (3, 6),
            relevant_per_doc: (1, 2),
            distractors_per_doc: (0, 2),
            train_size: 120,
            val_size: 12,
            test_size: 12,
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = small_config();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        let ser = |split: &[CaseInstance]| {
            split
                .iter()
                .map(|i| serde_json::to_string(i).unwrap())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(ser(&a.train), ser(&b.train));
        assert_eq!(ser(&a.val), ser(&b.val));
        assert_eq!(ser(&a.test), ser(&b.test));
    }

    #[test]
    fn relevant_values_sum_to_total() {
        let splits = generate(&small_config()).unwrap();
        for inst in splits.train.iter().chain(&splits.val).chain(&splits.test) {
            let sum: u64 = inst
                .numeric_spans
                .iter()
                .filter(|s| s.relevant)
                .map(|s| s.value)
                .sum();
            assert_eq!(Some(sum), inst.total_amount);
        }
    }

    #[test]
    fn spans_lie_inside_documents_and_labels_in_range() {
        let cfg = small_config();
        let splits = generate(&cfg).unwrap();
        for inst in &splits.train {
            assert!(inst.charge < cfg.num_charges);
            assert!(inst.law < cfg.num_laws);
            assert!(inst.term < cfg.num_terms);
            for span in &inst.numeric_spans {
                assert!(span.sent < inst.sentences.len());
                assert!(span.pos < inst.sentences[span.sent].len());
                assert_eq!(inst.sentences[span.sent][span.pos], 0);
            }
        }
    }

    #[test]
    fn bucket_lookup_matches_case_study_figure() {
        // amounts 3000 + 7400 with edges [5000, 20000] land in bucket 1
        let cfg = small_config();
        assert_eq!(cfg.bucket_of(3000 + 7400), 1);
        assert_eq!(cfg.bucket_of(4999), 0);
        assert_eq!(cfg.bucket_of(5000), 1);
        assert_eq!(cfg.bucket_of(20000), 2);
    }

    #[test]
    fn number_sensitive_term_is_bucket_of_total() {
        let cfg = small_config();
        let splits = generate(&cfg).unwrap();
        for inst in splits.train.iter().filter(|i| i.charge == 0) {
            assert_eq!(inst.term, cfg.bucket_of(inst.total_amount.unwrap()));
        }
    }

    #[test]
    fn zero_distractors_means_every_span_relevant() {
        let cfg = CorpusConfig {
            distractors_per_doc: (0, 0),
            ..small_config()
        };
        let splits = generate(&cfg).unwrap();
        for inst in &splits.train {
            assert!(inst.numeric_spans.iter().all(|s| s.relevant));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let ok = small_config();
        let cases: Vec<(&str, CorpusConfig)> = vec![
            (
                "one charge",
                CorpusConfig {
                    num_charges: 1,
                    confusing_pairs: vec![],
                    number_sensitive: BTreeSet::new(),
                    ..ok.clone()
                },
            ),
            (
                "empty vocab",
                CorpusConfig {
                    vocab_size: Some(0),
                    ..ok.clone()
                },
            ),
            (
                "non-increasing edges",
                CorpusConfig {
                    bucket_edges: vec![5_000, 5_000],
                    ..ok.clone()
                },
            ),
            (
                "overlapping pairs",
                CorpusConfig {
                    num_charges: 6,
                    confusing_pairs: vec![(1, 2), (2, 3)],
                    ..ok.clone()
                },
            ),
            (
                "self pair",
                CorpusConfig {
                    confusing_pairs: vec![(1, 1)],
                    ..ok.clone()
                },
            ),
            (
                "number sensitive out of range",
                CorpusConfig {
                    number_sensitive: [99].into_iter().collect(),
                    ..ok.clone()
                },
            ),
        ];
        for (name, cfg) in cases {
            assert!(cfg.validate().is_err(), "{name} should be rejected");
        }
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn marginal_charge_distribution_is_near_uniform() {
        let cfg = CorpusConfig::default();
        let splits = generate(&cfg).unwrap();
        assert_eq!(splits.train.len(), 4000);
        let mut counts = vec![0usize; cfg.num_charges];
        for inst in &splits.train {
            counts[inst.charge] += 1;
        }
        let uniform = 4000.0 / cfg.num_charges as f64;
        for &c in &counts {
            let dev = (c as f64 - uniform).abs() / uniform;
            assert!(dev < 0.05, "class deviation {dev} >= 5%");
        }
    }

    #[test]
    fn confusing_pairs_share_vocabulary_others_do_not() {
        let cfg = small_config();
        let layout = VocabLayout::for_config(&cfg);
        let splits = generate(&cfg).unwrap();
        let of_charge = |c: usize| -> Vec<CaseInstance> {
            splits
                .train
                .iter()
                .filter(|i| i.charge == c)
                .cloned()
                .collect()
        };
        let confusing = vocabulary_overlap(&of_charge(1), &of_charge(2), &layout);
        assert!(
            confusing >= cfg.overlap_ratio,
            "confusing pair overlap {confusing} below {}",
            cfg.overlap_ratio
        );
        let plain = vocabulary_overlap(&of_charge(3), &of_charge(4), &layout);
        assert!(
            plain < cfg.overlap_ratio / 2.0,
            "non-confusing overlap {plain} too high"
        );
        let mixed = vocabulary_overlap(&of_charge(1), &of_charge(3), &layout);
        assert!(mixed < cfg.overlap_ratio / 2.0);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let splits = generate(&small_config()).unwrap();
        write_jsonl(&splits.train, &path).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(back, splits.train);
    }

    #[test]
    fn jsonl_empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_jsonl(&[], &path).unwrap();
        assert!(read_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn absent_total_amount_is_omitted_and_restored_absent() {
        let inst = CaseInstance {
            sentences: vec![vec![1, 2]],
            numeric_spans: vec![],
            charge: 0,
            law: 0,
            term: 0,
            total_amount: None,
        };
        let line = serde_json::to_string(&inst).unwrap();
        assert!(!line.contains("total_amount"));
        let back: CaseInstance = serde_json::from_str(&line).unwrap();
        assert_eq!(back.total_amount, None);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let splits = generate(&small_config()).unwrap();
        let good = serde_json::to_string(&splits.train[0]).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        match read_jsonl(&path) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing.jsonl");
        std::fs::write(&path, "{\"sentences\": [[1]]}\n").unwrap();
        match read_jsonl(&path) {
            Err(CorpusError::Parse { message, .. }) => {
                assert!(message.contains("numeric_spans"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
