//! Numerical-evidence extraction: a bidirectional recurrent token encoder
//! with a linear-chain CRF head, trained on weakly labeled BIO data. The
//! predicted crime amount of a document is the sum of the values of numeric
//! tokens decoded as amount entities.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amounts::{BioTag, BioTaggedDoc, TAG_COUNT};
use crate::autodiff::{Adam, BoundParams, ParamId, ParamSet, Tape, TensorError, Var};
use crate::corpus::CaseInstance;
use crate::nn::{embed_tokens, GruCell, Linear, ParamBuilder};

/// Score used to forbid a transition at decode time.
pub const FORBIDDEN_SCORE: f64 = -1e9;

#[derive(Debug, Error)]
pub enum TagError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("empty token sequence")]
    EmptySequence,
    #[error("sequence has {tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("token id {token} outside vocabulary of size {vocab}")]
    TokenOutOfVocab { token: u32, vocab: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
}

pub type Result<T> = std::result::Result<T, TagError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub embed: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self {
            embed: 32,
            hidden: 32,
            epochs: 8,
            batch_size: 16,
            learning_rate: 3e-3,
            seed: 42,
        }
    }
}

/// Token embedding + bidirectional recurrent encoder + emission projection
/// + CRF transition/start/end scores over the tag set {O, B-AMT, I-AMT}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaggerModel {
    pub dims: TaggerDims,
    pub params: ParamSet,
}

struct TaggerIds {
    embed: ParamId,
    fwd: GruCell,
    bwd: GruCell,
    emit: Linear,
    transitions: ParamId,
    start: ParamId,
    end: ParamId,
}

impl TaggerModel {
    pub fn init(vocab: usize, config: &TaggerConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut pb = ParamBuilder::new(rng);
        pb.matrix("embed", vocab, config.embed)?;
        GruCell::register(&mut pb, "fwd", config.embed, config.hidden)?;
        GruCell::register(&mut pb, "bwd", config.embed, config.hidden)?;
        Linear::register(&mut pb, "emit", 2 * config.hidden, TAG_COUNT)?;
        pb.matrix("transitions", TAG_COUNT, TAG_COUNT)?;
        pb.random_vector("start", TAG_COUNT)?;
        pb.random_vector("end", TAG_COUNT)?;
        Ok(Self {
            dims: TaggerDims {
                vocab,
                embed: config.embed,
                hidden: config.hidden,
            },
            params: pb.finish(),
        })
    }

    fn ids(&self) -> TaggerIds {
        let id = |name: &str| self.params.id(name).expect("tagger params are complete");
        TaggerIds {
            embed: id("embed"),
            fwd: GruCell::from_set(&self.params, "fwd", self.dims.hidden).expect("fwd present"),
            bwd: GruCell::from_set(&self.params, "bwd", self.dims.hidden).expect("bwd present"),
            emit: Linear::from_set(&self.params, "emit").expect("emit present"),
            transitions: id("transitions"),
            start: id("start"),
            end: id("end"),
        }
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(TagError::EmptySequence);
        }
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.dims.vocab) {
            return Err(TagError::TokenOutOfVocab {
                token: t,
                vocab: self.dims.vocab,
            });
        }
        Ok(())
    }

    /// Per-token emission scores as tape vars ([K] each).
    fn emissions(
        &self,
        ids: &TaggerIds,
        tape: &mut Tape,
        bound: &BoundParams,
        tokens: &[u32],
    ) -> Result<Vec<Var>> {
        let xs = embed_tokens(tape, bound, ids.embed, tokens)?;
        let fwd_states = ids.fwd.run(tape, bound, &xs)?;
        let mut rev = xs.clone();
        rev.reverse();
        let mut bwd_states = ids.bwd.run(tape, bound, &rev)?;
        bwd_states.reverse();
        fwd_states
            .into_iter()
            .zip(bwd_states)
            .map(|(f, b)| {
                let both = tape.concat(f, b)?;
                Ok(ids.emit.apply(tape, bound, both)?)
            })
            .collect()
    }

    /// Negative log-likelihood of the gold tag path: log-partition (forward
    /// algorithm in log space) minus the gold path score.
    pub fn crf_nll(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        tokens: &[u32],
        tags: &[BioTag],
    ) -> Result<Var> {
        self.check_tokens(tokens)?;
        if tokens.len() != tags.len() {
            return Err(TagError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        let ids = self.ids();
        let emis = self.emissions(&ids, tape, bound, tokens)?;
        let trans = bound.var(ids.transitions);
        let start = bound.var(ids.start);
        let end = bound.var(ids.end);

        let mut alpha = tape.add(emis[0], start)?;
        for &e in &emis[1..] {
            let scores = tape.add_col_vec(trans, alpha)?; // [j][k] = trans + alpha_j
            let reduced = tape.logsumexp(scores, 0)?;
            alpha = tape.add(reduced, e)?;
        }
        let with_end = tape.add(alpha, end)?;
        let log_z = tape.logsumexp(with_end, 0)?;

        let emis_mat = tape.stack_rows(emis)?;
        let emit_idx: Vec<usize> = tags
            .iter()
            .enumerate()
            .map(|(t, tag)| t * TAG_COUNT + tag.index())
            .collect();
        let mut gold = tape.gather_sum(emis_mat, emit_idx)?;
        if tags.len() > 1 {
            let trans_idx: Vec<usize> = tags
                .windows(2)
                .map(|w| w[0].index() * TAG_COUNT + w[1].index())
                .collect();
            let t_sum = tape.gather_sum(trans, trans_idx)?;
            gold = tape.add(gold, t_sum)?;
        }
        let s = tape.gather_sum(start, vec![tags[0].index()])?;
        gold = tape.add(gold, s)?;
        let e = tape.gather_sum(end, vec![tags[tags.len() - 1].index()])?;
        gold = tape.add(gold, e)?;

        Ok(tape.sub(log_z, gold)?)
    }

    /// Detached per-token emission scores.
    pub fn emission_values(&self, tokens: &[u32]) -> Result<Vec<Vec<f64>>> {
        self.check_tokens(tokens)?;
        let ids = self.ids();
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let emis = self.emissions(&ids, &mut tape, &bound, tokens)?;
        Ok(emis
            .into_iter()
            .map(|v| tape.value(v).data().to_vec())
            .collect())
    }

    /// Transition/start/end scores as plain values.
    pub fn scores(&self) -> CrfScores {
        let get = |name: &str| {
            self.params
                .tensor(self.params.id(name).expect("tagger params are complete"))
                .data()
                .to_vec()
        };
        CrfScores {
            transitions: get("transitions"),
            start: get("start"),
            end: get("end"),
        }
    }

    /// Decode one sequence under the BIO constraint.
    pub fn decode(&self, tokens: &[u32]) -> Result<Vec<BioTag>> {
        let emissions = self.emission_values(tokens)?;
        let path = viterbi(&emissions, &self.scores().bio_constrained());
        Ok(path
            .into_iter()
            .map(|i| BioTag::from_index(i).expect("tag index in range"))
            .collect())
    }
}

#[derive(Clone, Debug)]
pub struct CrfScores {
    /// Row-major [K x K]; `transitions[from * K + to]`.
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfScores {
    /// Copy with BIO-invalid moves (O -> I-AMT, starting on I-AMT) forbidden.
    pub fn bio_constrained(&self) -> CrfScores {
        let mut out = self.clone();
        let (o, i) = (BioTag::Outside.index(), BioTag::Inside.index());
        out.transitions[o * TAG_COUNT + i] = FORBIDDEN_SCORE;
        out.start[i] = FORBIDDEN_SCORE;
        out
    }
}

/// Max-scoring tag path; ties break toward the lowest tag index.
pub fn viterbi(emissions: &[Vec<f64>], scores: &CrfScores) -> Vec<usize> {
    assert!(!emissions.is_empty(), "viterbi needs at least one token");
    let k = TAG_COUNT;
    let len = emissions.len();
    let mut delta: Vec<f64> = (0..k).map(|t| scores.start[t] + emissions[0][t]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(len);
    for emit in &emissions[1..] {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut ptr = vec![0usize; k];
        for to in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut best_from = 0;
            for (from, &d) in delta.iter().enumerate() {
                let s = d + scores.transitions[from * k + to];
                if s > best {
                    best = s;
                    best_from = from;
                }
            }
            next[to] = best + emit[to];
            ptr[to] = best_from;
        }
        delta = next;
        back.push(ptr);
    }
    let mut best_tag = 0;
    let mut best = f64::NEG_INFINITY;
    for (t, &d) in delta.iter().enumerate() {
        let s = d + scores.end[t];
        if s > best {
            best = s;
            best_tag = t;
        }
    }
    let mut path = vec![best_tag];
    for ptr in back.iter().rev() {
        path.push(ptr[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Sum of the values of numeric tokens decoded as part of an amount entity.
pub fn extract_amount(doc: &CaseInstance, model: &TaggerModel) -> Result<u64> {
    let mut total = 0u64;
    for (s, sentence) in doc.sentences.iter().enumerate() {
        if sentence.is_empty() {
            continue;
        }
        let tags = model.decode(sentence)?;
        for span in doc.numeric_spans.iter().filter(|sp| sp.sent == s) {
            if tags[span.pos] != BioTag::Outside {
                total += span.value;
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TaggerEpochStats {
    pub mean_train_loss: f64,
    pub val_token_accuracy: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TaggerHistory {
    pub epochs: Vec<TaggerEpochStats>,
    pub best_epoch: Option<usize>,
}

/// Token accuracy plus exact-span entity precision/recall/F1.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TaggerEval {
    pub token_accuracy: f64,
    pub entity_precision: f64,
    pub entity_recall: f64,
    pub entity_f1: f64,
}

fn spans_of(tags: &[BioTag]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            BioTag::Begin => {
                if let Some(s) = open.take() {
                    spans.push((s, i));
                }
                open = Some(i);
            }
            BioTag::Inside => {
                if open.is_none() {
                    open = Some(i); // tolerate stray I at evaluation time
                }
            }
            BioTag::Outside => {
                if let Some(s) = open.take() {
                    spans.push((s, i));
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push((s, tags.len()));
    }
    spans
}

pub fn evaluate_tagger(model: &TaggerModel, docs: &[BioTaggedDoc]) -> Result<TaggerEval> {
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut gold_spans = 0usize;
    let mut pred_spans = 0usize;
    let mut matched = 0usize;
    for doc in docs {
        for (tokens, gold) in doc.tokens.iter().zip(&doc.tags) {
            if tokens.is_empty() {
                continue;
            }
            let pred = model.decode(tokens)?;
            correct += pred
                .iter()
                .zip(gold)
                .filter(|(p, g)| p == g)
                .count();
            total += tokens.len();
            let gs = spans_of(gold);
            let ps = spans_of(&pred);
            matched += ps.iter().filter(|p| gs.contains(p)).count();
            gold_spans += gs.len();
            pred_spans += ps.len();
        }
    }
    let token_accuracy = if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    };
    let precision = if pred_spans == 0 {
        0.0
    } else {
        matched as f64 / pred_spans as f64
    };
    let recall = if gold_spans == 0 {
        0.0
    } else {
        matched as f64 / gold_spans as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(TaggerEval {
        token_accuracy,
        entity_precision: precision,
        entity_recall: recall,
        entity_f1: f1,
    })
}

/// Train by minibatch gradient descent on the mean sequence NLL; returns the
/// checkpoint with the best validation token accuracy.
pub fn train_tagger(
    train: &[BioTaggedDoc],
    val: &[BioTaggedDoc],
    vocab: usize,
    config: &TaggerConfig,
) -> Result<(TaggerModel, TaggerHistory)> {
    if train.is_empty() {
        return Err(TagError::EmptySplit("train"));
    }
    if val.is_empty() {
        return Err(TagError::EmptySplit("validation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0x7a67);
    let mut model = TaggerModel::init(vocab, config, &mut rng)?;
    let mut adam = Adam::new(&model.params, config.learning_rate);

    let sequences: Vec<(&[u32], &[BioTag])> = train
        .iter()
        .flat_map(|d| {
            d.tokens
                .iter()
                .zip(&d.tags)
                .filter(|(t, _)| !t.is_empty())
                .map(|(t, g)| (t.as_slice(), g.as_slice()))
        })
        .collect();

    let mut history = TaggerHistory::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }

    let mut best: Option<(f64, TaggerModel, usize)> = None;
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size.max(1)).enumerate() {
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape);
            let mut losses = Vec::with_capacity(batch.len());
            for &i in batch {
                let (tokens, tags) = sequences[i];
                losses.push(model.crf_nll(&mut tape, &bound, tokens, tags)?);
            }
            let sum = tape.sum_vars(&losses)?;
            let mean = tape.scale(sum, 1.0 / batch.len() as f64)?;
            let loss_value = tape.value(mean).scalar_value();
            if !loss_value.is_finite() {
                return Err(TagError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_sum += loss_value * batch.len() as f64;
            let grads = tape.backward(mean)?;
            let flat = model.params.collect_grads(&grads, &bound);
            adam.step(&mut model.params, &flat)?;
        }
        let eval = evaluate_tagger(&model, val)?;
        history.epochs.push(TaggerEpochStats {
            mean_train_loss: loss_sum / sequences.len() as f64,
            val_token_accuracy: eval.token_accuracy,
        });
        let better = best
            .as_ref()
            .map_or(true, |(acc, _, _)| eval.token_accuracy > *acc);
        if better {
            best = Some((eval.token_accuracy, model.clone(), epoch));
        }
    }
    let (_, best_model, best_epoch) = best.expect("at least one epoch ran");
    history.best_epoch = Some(best_epoch);
    Ok((best_model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amounts::build_caener;
    use crate::autodiff::{finite_diff_check, ParamSet, Tensor};
    use crate::corpus::{generate, CorpusConfig};
    use std::collections::BTreeSet;

    fn tiny_model(seed: u64) -> TaggerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TaggerModel::init(
            8,
            &TaggerConfig {
                embed: 4,
                hidden: 3,
                ..TaggerConfig::default()
            },
            &mut rng,
        )
        .unwrap()
    }

    /// Brute-force log-partition and best path score over all K^L paths.
    fn brute_force(emissions: &[Vec<f64>], scores: &CrfScores) -> (f64, f64) {
        let k = TAG_COUNT;
        let len = emissions.len();
        let mut all = Vec::new();
        let mut path = vec![0usize; len];
        loop {
            let mut s = scores.start[path[0]] + emissions[0][path[0]];
            for t in 1..len {
                s += scores.transitions[path[t - 1] * k + path[t]] + emissions[t][path[t]];
            }
            s += scores.end[path[len - 1]];
            all.push(s);
            // next path in odometer order
            let mut pos = len;
            loop {
                if pos == 0 {
                    let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max
                        + all.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    return (lse, max);
                }
                pos -= 1;
                path[pos] += 1;
                if path[pos] < k {
                    break;
                }
                path[pos] = 0;
            }
        }
    }

    fn with_scores(model: &TaggerModel, f: impl FnOnce(&mut ParamSet)) -> TaggerModel {
        let mut m = model.clone();
        f(&mut m.params);
        m
    }

    #[test]
    fn uniform_zero_scores_length_two_partition_is_ln9() {
        let model = tiny_model(1);
        let zeroed = with_scores(&model, |p| {
            for name in ["transitions", "start", "end"] {
                let id = p.id(name).unwrap();
                let shape = p.tensor(id).shape().to_vec();
                *p.tensor_mut(id) = Tensor::zeros(&shape);
            }
        });
        // zero emissions via zero embedding/encoder output is awkward; instead
        // call the partition through crf_nll with handcrafted zero emissions:
        // log Z for two positions of three zero-score tags is ln 9.
        let scores = zeroed.scores();
        let emissions = vec![vec![0.0; 3], vec![0.0; 3]];
        let (log_z, _) = brute_force(&emissions, &scores);
        assert!((log_z - 9.0f64.ln()).abs() < 1e-12);
        // and the differentiable path agrees once emissions are forced to zero
        let forced = with_scores(&zeroed, |p| {
            for name in ["embed", "emit.w"] {
                let id = p.id(name).unwrap();
                let shape = p.tensor(id).shape().to_vec();
                *p.tensor_mut(id) = Tensor::zeros(&shape);
            }
        });
        let mut tape = Tape::new();
        let bound = forced.params.bind(&mut tape);
        let nll = forced
            .crf_nll(&mut tape, &bound, &[1, 2], &[BioTag::Outside, BioTag::Outside])
            .unwrap();
        // gold path score is 0, so the loss equals the log-partition
        assert!((tape.value(nll).scalar_value() - 9.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn length_one_nll_equals_softmax_cross_entropy() {
        let model = tiny_model(2);
        let tokens = [3u32];
        let gold = BioTag::Begin;
        let mut tape = Tape::new();
        let bound = model.params.bind(&mut tape);
        let nll = model.crf_nll(&mut tape, &bound, &tokens, &[gold]).unwrap();
        let nll_value = tape.value(nll).scalar_value();

        let emis = model.emission_values(&tokens).unwrap();
        let scores = model.scores();
        let logits: Vec<f64> = (0..TAG_COUNT)
            .map(|t| emis[0][t] + scores.start[t] + scores.end[t])
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let expected = lse - logits[gold.index()];
        assert!((nll_value - expected).abs() < 1e-12);
    }

    #[test]
    fn partition_and_viterbi_match_brute_force() {
        for seed in 0..50u64 {
            let model = tiny_model(seed + 100);
            let len = (seed % 6 + 1) as usize;
            let tokens: Vec<u32> = (0..len).map(|i| ((seed as usize + i) % 8) as u32).collect();
            let emissions = model.emission_values(&tokens).unwrap();
            let scores = model.scores();
            let (log_z_bf, best_bf) = brute_force(&emissions, &scores);

            // log-partition via the differentiable path: gold score of an
            // arbitrary path cancels out by adding it back
            let tags = vec![BioTag::Outside; len];
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape);
            let nll = model.crf_nll(&mut tape, &bound, &tokens, &tags).unwrap();
            let mut gold = scores.start[0] + scores.end[0];
            for (t, e) in emissions.iter().enumerate() {
                gold += e[0];
                if t > 0 {
                    gold += scores.transitions[0];
                }
            }
            let log_z = tape.value(nll).scalar_value() + gold;
            assert!(
                (log_z - log_z_bf).abs() < 1e-8,
                "seed {seed}: partition {log_z} vs {log_z_bf}"
            );

            let path = viterbi(&emissions, &scores);
            let mut score = scores.start[path[0]] + emissions[0][path[0]];
            for t in 1..len {
                score +=
                    scores.transitions[path[t - 1] * TAG_COUNT + path[t]] + emissions[t][path[t]];
            }
            score += scores.end[path[len - 1]];
            assert!(
                (score - best_bf).abs() < 1e-8,
                "seed {seed}: viterbi {score} vs {best_bf}"
            );
        }
    }

    #[test]
    fn loss_is_nonnegative() {
        for seed in 0..20u64 {
            let model = tiny_model(seed + 500);
            let tokens: Vec<u32> = vec![1, 5, 2, 7];
            let tags = vec![BioTag::Outside, BioTag::Begin, BioTag::Inside, BioTag::Outside];
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape);
            let nll = model.crf_nll(&mut tape, &bound, &tokens, &tags).unwrap();
            assert!(tape.value(nll).scalar_value() >= -1e-10);
        }
    }

    #[test]
    fn length_one_viterbi_is_argmax() {
        let model = tiny_model(3);
        let emissions = model.emission_values(&[2]).unwrap();
        let scores = model.scores();
        let logits: Vec<f64> = (0..TAG_COUNT)
            .map(|t| emissions[0][t] + scores.start[t] + scores.end[t])
            .collect();
        let argmax = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(viterbi(&emissions, &scores), vec![argmax]);
    }

    #[test]
    fn forbidden_transition_never_decoded() {
        let model = tiny_model(4);
        let constrained = model.scores().bio_constrained();
        for seed in 0..30u64 {
            let m = tiny_model(seed + 40);
            let tokens: Vec<u32> = (0..6).map(|i| ((seed as usize + i) % 8) as u32).collect();
            let emissions = m.emission_values(&tokens).unwrap();
            let path = viterbi(&emissions, &constrained);
            assert_ne!(path[0], BioTag::Inside.index());
            for w in path.windows(2) {
                assert!(
                    !(w[0] == BioTag::Outside.index() && w[1] == BioTag::Inside.index()),
                    "O -> I-AMT decoded"
                );
            }
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        let model = tiny_model(5);
        let mut tape = Tape::new();
        let bound = model.params.bind(&mut tape);
        assert!(matches!(
            model.crf_nll(&mut tape, &bound, &[], &[]),
            Err(TagError::EmptySequence)
        ));
    }

    #[test]
    fn crf_nll_gradients_pass_finite_differences() {
        let model = tiny_model(6);
        let tokens = vec![1u32, 4, 2];
        let tags = vec![BioTag::Outside, BioTag::Begin, BioTag::Inside];
        let dims = model.dims;
        let err = finite_diff_check(&model.params, 1e-4, &mut |p: &ParamSet| {
            let probe = TaggerModel {
                dims,
                params: p.clone(),
            };
            let mut tape = Tape::new();
            let bound = p.bind(&mut tape);
            let loss = probe
                .crf_nll(&mut tape, &bound, &tokens, &tags)
                .map_err(|e| match e {
                    TagError::Tensor(t) => t,
                    other => TensorError::Invalid(other.to_string()),
                })?;
            Ok((tape, loss, bound))
        })
        .unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    fn toy_bio_corpus() -> (Vec<BioTaggedDoc>, usize) {
        let cfg = CorpusConfig {
            num_charges: 4,
            num_laws: 3,
            num_terms: 3,
            bucket_edges: vec![5_000, 20_000],
            confusing_pairs: vec![],
            number_sensitive: BTreeSet::new(),
            sentences_per_doc: (3, 4),
            tokens_per_sentence: (4, 6),
            train_size: 10,
            val_size: 4,
            test_size: 4,
            ..CorpusConfig::default()
        };
        let splits = generate(&cfg).unwrap();
        let (docs, _) = build_caener(&splits.train).unwrap();
        (docs, cfg.effective_vocab_size())
    }

    #[test]
    fn overfits_a_toy_set() {
        let (docs, vocab) = toy_bio_corpus();
        let config = TaggerConfig {
            epochs: 50,
            batch_size: 4,
            learning_rate: 1e-2,
            embed: 12,
            hidden: 12,
            seed: 9,
        };
        let (model, _) = train_tagger(&docs, &docs, vocab, &config).unwrap();
        let eval = evaluate_tagger(&model, &docs).unwrap();
        assert_eq!(eval.token_accuracy, 1.0, "did not overfit: {eval:?}");
    }

    #[test]
    fn zero_epochs_returns_init_and_empty_history() {
        let (docs, vocab) = toy_bio_corpus();
        let config = TaggerConfig {
            epochs: 0,
            ..TaggerConfig::default()
        };
        let (model, history) = train_tagger(&docs, &docs, vocab, &config).unwrap();
        assert!(history.epochs.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0x7a67);
        let fresh = TaggerModel::init(vocab, &config, &mut rng).unwrap();
        assert_eq!(model.params, fresh.params);
    }

    #[test]
    fn training_is_deterministic() {
        let (docs, vocab) = toy_bio_corpus();
        let config = TaggerConfig {
            epochs: 3,
            ..TaggerConfig::default()
        };
        let (_, h1) = train_tagger(&docs, &docs, vocab, &config).unwrap();
        let (_, h2) = train_tagger(&docs, &docs, vocab, &config).unwrap();
        assert_eq!(
            h1.epochs.last().unwrap().mean_train_loss,
            h2.epochs.last().unwrap().mean_train_loss
        );
    }

    #[test]
    fn extract_amount_from_gold_style_tags() {
        // decode-free check of the summation rule via a hand model is brittle;
        // instead verify on a trained model over a doc it has memorized
        let (docs, vocab) = toy_bio_corpus();
        let config = TaggerConfig {
            epochs: 60,
            batch_size: 4,
            learning_rate: 1e-2,
            embed: 12,
            hidden: 12,
            seed: 11,
        };
        let (model, _) = train_tagger(&docs, &docs, vocab, &config).unwrap();

        let cfg = CorpusConfig {
            num_charges: 4,
            num_laws: 3,
            num_terms: 3,
            bucket_edges: vec![5_000, 20_000],
            confusing_pairs: vec![],
            number_sensitive: BTreeSet::new(),
            sentences_per_doc: (3, 4),
            tokens_per_sentence: (4, 6),
            train_size: 10,
            val_size: 4,
            test_size: 4,
            ..CorpusConfig::default()
        };
        let splits = generate(&cfg).unwrap();
        let mut hits = 0;
        for doc in &splits.train {
            if extract_amount(doc, &model).unwrap() == doc.total_amount.unwrap() {
                hits += 1;
            }
        }
        assert!(hits >= 8, "only {hits}/10 totals recovered");
    }

    #[test]
    fn all_outside_decode_extracts_zero() {
        let doc = CaseInstance {
            sentences: vec![vec![1, 0, 2]],
            numeric_spans: vec![crate::corpus::NumericSpan {
                sent: 0,
                pos: 1,
                value: 777,
                relevant: true,
            }],
            charge: 0,
            law: 0,
            term: 0,
            total_amount: Some(777),
        };
        // force every emission toward O by a huge O bias
        let model = with_scores(&tiny_model(12), |p| {
            let id = p.id("emit.b").unwrap();
            *p.tensor_mut(id) = Tensor::vector(vec![100.0, 0.0, 0.0]).unwrap();
        });
        assert_eq!(extract_amount(&doc, &model).unwrap(), 0);
    }

    #[test]
    fn gold_tag_sum_example() {
        // tags taken as given: values 5000 and 300 tagged -> 5300
        let tags = vec![BioTag::Begin, BioTag::Outside, BioTag::Begin];
        let values = [5000u64, 0, 300];
        let sum: u64 = tags
            .iter()
            .zip(values)
            .filter(|(t, _)| **t != BioTag::Outside)
            .map(|(_, v)| v)
            .sum();
        assert_eq!(sum, 5300);
    }
}
