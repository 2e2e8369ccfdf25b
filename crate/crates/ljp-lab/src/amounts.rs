//! Weak supervision for amount extraction: select sentences whose amounts
//! sum exactly to the known total, then emit BIO-tagged training data.
//!
//! Selection is depth-first in ascending sentence order with strict 0-1
//! semantics (a sentence is used at most once); the first solution found is
//! returned, which makes labeling deterministic. An exact dynamic-programming
//! subset-sum oracle cross-checks the search.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CaseInstance;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("target {target} exceeds the subset-sum table cap {cap}")]
    TargetAboveCap { target: u64, cap: u64 },
    #[error("no sentence amounts given")]
    EmptyAmounts,
    #[error("instance {index} has no total_amount")]
    MissingTotal { index: usize },
    #[error("labeling produced an empty dataset ({dropped} of {total} instances unsolvable)")]
    EmptyDataset { dropped: usize, total: usize },
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

pub type Result<T> = std::result::Result<T, LabelError>;

/// Per-sentence aggregate amounts and the target total.
#[derive(Clone, Debug)]
pub struct SentenceAmounts {
    pub amounts: Vec<u64>,
    pub target: u64,
}

impl SentenceAmounts {
    pub fn new(amounts: Vec<u64>, target: u64) -> Result<Self> {
        if amounts.is_empty() {
            return Err(LabelError::EmptyAmounts);
        }
        Ok(Self { amounts, target })
    }

    pub fn of_instance(inst: &CaseInstance, index: usize) -> Result<Self> {
        let target = inst.total_amount.ok_or(LabelError::MissingTotal { index })?;
        Self::new(inst.sentence_amounts(), target)
    }
}

/// First index set (in depth-first, ascending-index order) whose amounts sum
/// exactly to the target; `None` when no subset works.
pub fn select_sentences(sa: &SentenceAmounts) -> Option<BTreeSet<usize>> {
    fn dfs(amounts: &[u64], remaining: u64, from: usize, picked: &mut Vec<usize>) -> bool {
        if remaining == 0 {
            return true;
        }
        for i in from..amounts.len() {
            if amounts[i] <= remaining {
                picked.push(i);
                if dfs(amounts, remaining - amounts[i], i + 1, picked) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }
    let mut picked = Vec::new();
    if dfs(&sa.amounts, sa.target, 0, &mut picked) {
        Some(picked.into_iter().collect())
    } else {
        None
    }
}

pub const DEFAULT_TARGET_CAP: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleAnswer {
    pub exists: bool,
    /// One witness subset when a solution exists.
    pub witness: Option<BTreeSet<usize>>,
}

/// Exact 0-1 subset-sum decision by dynamic programming over (items x target),
/// with the witness reconstructed by backtracking.
pub fn subset_sum_oracle(sa: &SentenceAmounts) -> Result<OracleAnswer> {
    subset_sum_oracle_with_cap(sa, DEFAULT_TARGET_CAP)
}

pub fn subset_sum_oracle_with_cap(sa: &SentenceAmounts, cap: u64) -> Result<OracleAnswer> {
    if sa.target > cap {
        return Err(LabelError::TargetAboveCap {
            target: sa.target,
            cap,
        });
    }
    let target = sa.target as usize;
    // reached_by[s] = item that first made sum s reachable; usize::MAX marks
    // the empty sum. Descending sums per item keep the 0-1 constraint.
    let mut reached_by = vec![None::<usize>; target + 1];
    reached_by[0] = Some(usize::MAX);
    for (item, &amount) in sa.amounts.iter().enumerate() {
        let amount = amount as usize;
        if amount > target {
            continue;
        }
        for s in (amount..=target).rev() {
            if reached_by[s].is_none() && reached_by[s - amount].is_some() {
                reached_by[s] = Some(item);
            }
        }
    }
    if reached_by[target].is_none() {
        return Ok(OracleAnswer {
            exists: false,
            witness: None,
        });
    }
    let mut witness = BTreeSet::new();
    let mut s = target;
    while s > 0 {
        let item = reached_by[s].expect("reachable sums have a provenance item");
        witness.insert(item);
        s -= sa.amounts[item] as usize;
    }
    Ok(OracleAnswer {
        exists: true,
        witness: Some(witness),
    })
}

/// Number of subsets summing to the target; exponential, for short inputs.
pub fn count_subsets(amounts: &[u64], target: u64) -> u64 {
    let mut count = 0;
    for mask in 0u32..(1 << amounts.len()) {
        let sum: u64 = amounts
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .sum();
        if sum == target {
            count += 1;
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BioTag {
    #[serde(rename = "O")]
    Outside,
    #[serde(rename = "B-AMT")]
    Begin,
    #[serde(rename = "I-AMT")]
    Inside,
}

impl BioTag {
    /// Tag index used by the CRF: O=0, B-AMT=1, I-AMT=2.
    pub fn index(self) -> usize {
        match self {
            BioTag::Outside => 0,
            BioTag::Begin => 1,
            BioTag::Inside => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(BioTag::Outside),
            1 => Some(BioTag::Begin),
            2 => Some(BioTag::Inside),
            _ => None,
        }
    }
}

pub const TAG_COUNT: usize = 3;

/// A document's tokens with per-token BIO tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BioTaggedDoc {
    pub tokens: Vec<Vec<u32>>,
    pub tags: Vec<Vec<BioTag>>,
}

impl BioTaggedDoc {
    /// I-AMT never follows O and never begins a sentence; lengths match.
    pub fn is_well_formed(&self) -> bool {
        if self.tokens.len() != self.tags.len() {
            return false;
        }
        for (toks, tags) in self.tokens.iter().zip(&self.tags) {
            if toks.len() != tags.len() {
                return false;
            }
            let mut prev = BioTag::Outside;
            for (i, &tag) in tags.iter().enumerate() {
                if tag == BioTag::Inside && (i == 0 || prev == BioTag::Outside) {
                    return false;
                }
                prev = tag;
            }
        }
        true
    }
}

/// Tag every numeric token inside a selected sentence `B-AMT` (amounts here
/// are single tokens), everything else `O`.
pub fn to_bio(doc: &CaseInstance, selected: &BTreeSet<usize>) -> BioTaggedDoc {
    let mut tags: Vec<Vec<BioTag>> = doc
        .sentences
        .iter()
        .map(|s| vec![BioTag::Outside; s.len()])
        .collect();
    for span in &doc.numeric_spans {
        if selected.contains(&span.sent) {
            tags[span.sent][span.pos] = BioTag::Begin;
        }
    }
    BioTaggedDoc {
        tokens: doc.sentences.clone(),
        tags,
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LabelReport {
    pub total_instances: usize,
    pub solvable_fraction: f64,
    /// Instances (at most 12 sentences) with more than one valid subset.
    pub ambiguous_count: usize,
    pub dropped_count: usize,
}

/// Run sentence selection over a labeled corpus, keeping solvable instances
/// as BIO training data and reporting the rest.
pub fn build_caener(corpus: &[CaseInstance]) -> Result<(Vec<BioTaggedDoc>, LabelReport)> {
    let mut dataset = Vec::new();
    let mut dropped = 0usize;
    let mut ambiguous = 0usize;
    for (index, inst) in corpus.iter().enumerate() {
        let sa = SentenceAmounts::of_instance(inst, index)?;
        match select_sentences(&sa) {
            Some(selected) => {
                // Zero-amount sentences never carry numbers; ambiguity is
                // about which amounts make up the total.
                let nonzero: Vec<u64> =
                    sa.amounts.iter().copied().filter(|&a| a > 0).collect();
                if sa.amounts.len() <= 12 && count_subsets(&nonzero, sa.target) > 1 {
                    ambiguous += 1;
                }
                dataset.push(to_bio(inst, &selected));
            }
            None => dropped += 1,
        }
    }
    if dataset.is_empty() {
        return Err(LabelError::EmptyDataset {
            dropped,
            total: corpus.len(),
        });
    }
    let report = LabelReport {
        total_instances: corpus.len(),
        solvable_fraction: dataset.len() as f64 / corpus.len() as f64,
        ambiguous_count: ambiguous,
        dropped_count: dropped,
    };
    Ok((dataset, report))
}

pub fn write_bio_jsonl(docs: &[BioTaggedDoc], path: &Path) -> Result<()> {
    let io_err = |source| LabelError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("tagged docs always serialize");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_bio_jsonl(path: &Path) -> Result<Vec<BioTaggedDoc>> {
    let file = File::open(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| LabelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc: BioTaggedDoc = serde_json::from_str(&line).map_err(|e| LabelError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(doc);
    }
    Ok(out)
}
