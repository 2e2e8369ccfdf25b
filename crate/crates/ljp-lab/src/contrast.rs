//! Momentum-queue supervised contrastive learning: FIFO feature/label
//! queues, queue-based supervised contrastive loss, the momentum key-encoder
//! update, and the two positive-pair selection strategies.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde_json::json;
use thiserror::Error;

use crate::autodiff::{ParamSet, Result as TensorResult, Tape, Tensor, TensorError, Var};

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("queue capacity must be positive")]
    ZeroCapacity,
    #[error("feature has dimension {got}, queue holds {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("batch of {batch} exceeds queue capacity {capacity}")]
    BatchTooLarge { batch: usize, capacity: usize },
    #[error("{features} features with {labels} labels")]
    LabelMismatch { features: usize, labels: usize },
    #[error("feature {index} is not unit-norm (|1 - norm| = {deviation:.3e})")]
    NotUnitNorm { index: usize, deviation: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LabelTriple {
    pub charge: usize,
    pub law: usize,
    pub term: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Charge,
    Law,
    Term,
}

impl LabelTriple {
    pub fn of(&self, task: Task) -> usize {
        match task {
            Task::Charge => self.charge,
            Task::Law => self.law,
            Task::Term => self.term,
        }
    }
}

const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Fixed-capacity FIFO dictionary of unit-norm key features with three
/// parallel label buffers. Entry index 0 is always the oldest entry.
#[derive(Clone, Debug)]
pub struct MomentumQueue {
    capacity: usize,
    dim: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<LabelTriple>,
    head: usize,
    fill: usize,
}

impl MomentumQueue {
    pub fn new(capacity: usize, dim: usize) -> Result<Self, QueueError> {
        if capacity == 0 {
            return Err(QueueError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            dim,
            features: vec![Vec::new(); capacity],
            labels: vec![
                LabelTriple {
                    charge: 0,
                    law: 0,
                    term: 0
                };
                capacity
            ],
            head: 0,
            fill: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.fill
    }

    pub fn is_empty(&self) -> bool {
        self.fill == 0
    }

    fn slot(&self, index: usize) -> usize {
        debug_assert!(index < self.fill);
        (self.head + index) % self.capacity
    }

    /// Feature at FIFO position `index` (0 = oldest).
    pub fn feature(&self, index: usize) -> &[f64] {
        &self.features[self.slot(index)]
    }

    pub fn label(&self, index: usize) -> LabelTriple {
        self.labels[self.slot(index)]
    }

    /// Push a batch; evicts the oldest entries once full. Insertion order
    /// within the batch is preserved.
    pub fn enqueue(
        &mut self,
        features: &[Vec<f64>],
        labels: &[LabelTriple],
    ) -> Result<(), QueueError> {
        if features.len() != labels.len() {
            return Err(QueueError::LabelMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        if features.len() > self.capacity {
            return Err(QueueError::BatchTooLarge {
                batch: features.len(),
                capacity: self.capacity,
            });
        }
        for (i, f) in features.iter().enumerate() {
            if f.len() != self.dim {
                return Err(QueueError::DimensionMismatch {
                    got: f.len(),
                    want: self.dim,
                });
            }
            let norm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            let deviation = (norm - 1.0).abs();
            if deviation > UNIT_NORM_TOLERANCE {
                return Err(QueueError::NotUnitNorm {
                    index: i,
                    deviation,
                });
            }
        }
        for (f, &l) in features.iter().zip(labels) {
            let slot = (self.head + self.fill) % self.capacity;
            self.features[slot] = f.clone();
            self.labels[slot] = l;
            if self.fill < self.capacity {
                self.fill += 1;
            } else {
                // overwrite the oldest entry and advance
                self.head = (self.head + 1) % self.capacity;
            }
        }
        Ok(())
    }

    /// Indices of filled entries whose `task` label equals `label`.
    pub fn positives_strategy1(&self, label: usize, task: Task) -> Vec<usize> {
        (0..self.fill)
            .filter(|&i| self.label(i).of(task) == label)
            .collect()
    }

    /// Indices where all three labels match the query's triple.
    pub fn positives_strategy2(&self, query: LabelTriple) -> Vec<usize> {
        (0..self.fill)
            .filter(|&i| self.label(i) == query)
            .collect()
    }

    /// Debug snapshot: capacity, fill, and label triples; features only when
    /// `include_features`, base64-encoded little-endian f64.
    pub fn snapshot(&self, include_features: bool) -> serde_json::Value {
        let labels: Vec<LabelTriple> = (0..self.fill).map(|i| self.label(i)).collect();
        let mut value = json!({
            "capacity": self.capacity,
            "fill": self.fill,
            "dim": self.dim,
            "labels": labels,
        });
        if include_features {
            let feats: Vec<String> = (0..self.fill)
                .map(|i| {
                    let bytes: Vec<u8> = self
                        .feature(i)
                        .iter()
                        .flat_map(|v| v.to_le_bytes())
                        .collect();
                    BASE64.encode(bytes)
                })
                .collect();
            value["features"] = json!(feats);
        }
        value
    }
}

/// Gradient-trained query parameters paired with their momentum-averaged
/// key-side mirror. The mirror holds the subset of parameters that feed the
/// contrasted features; it starts as an exact copy and is only ever moved by
/// `momentum_update`.
#[derive(Clone, Debug)]
pub struct EncoderPair {
    pub query: ParamSet,
    pub key: ParamSet,
    pub momentum: f64,
}

impl EncoderPair {
    pub fn new<F: Fn(&str) -> bool>(
        query: ParamSet,
        mirror: F,
        momentum: f64,
    ) -> TensorResult<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(TensorError::Invalid(format!(
                "momentum {momentum} outside [0, 1)"
            )));
        }
        let key = query.subset(mirror);
        Ok(Self {
            query,
            key,
            momentum,
        })
    }

    /// `key <- m * key + (1 - m) * query`, elementwise over the mirrored
    /// subset; runs once per optimizer step, after the query-side update.
    pub fn momentum_update(&mut self) -> TensorResult<()> {
        let m = self.momentum;
        for id in 0..self.key.len() {
            let name = self.key.name(id).to_string();
            let query_id = self.query.id(&name).ok_or_else(|| {
                TensorError::Invalid(format!("key parameter {name} missing on query side"))
            })?;
            let q = self.query.tensor(query_id);
            if q.shape() != self.key.tensor(id).shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "momentum_update",
                    left: self.key.tensor(id).shape().to_vec(),
                    right: q.shape().to_vec(),
                });
            }
            let q_data = q.data().to_vec();
            let k = self.key.tensor_mut(id).data_mut();
            for (kv, qv) in k.iter_mut().zip(q_data) {
                *kv = m * *kv + (1.0 - m) * qv;
            }
        }
        Ok(())
    }
}

/// One query: an L2-normalized feature var plus its positive queue indices.
pub struct SclQuery {
    pub feature: Var,
    pub positives: Vec<usize>,
}

pub struct SclOutcome {
    pub loss: Var,
    /// Queries that contributed (nonempty positive set).
    pub used: usize,
    /// Queries skipped for lack of positives; when every query is skipped the
    /// loss is the constant zero.
    pub skipped: usize,
}

/// Queue-based supervised contrastive loss:
/// `sum_i -(1/|P(i)|) sum_{p in P(i)} log( exp(q_i . k_p / t) / sum_a exp(q_i . k_a / t) )`
/// over all filled queue entries `a`, stabilized by log-sum-exp. Keys are
/// constants; gradients flow only into the query features.
pub fn scl_loss(
    tape: &mut Tape,
    queries: &[SclQuery],
    queue: &MomentumQueue,
    temperature: f64,
) -> TensorResult<SclOutcome> {
    if temperature <= 0.0 {
        return Err(TensorError::Invalid(format!(
            "temperature {temperature} must be positive"
        )));
    }
    let usable: Vec<&SclQuery> = queries.iter().filter(|q| !q.positives.is_empty()).collect();
    let skipped = queries.len() - usable.len();
    if queue.is_empty() || usable.is_empty() {
        let zero = tape.scalar(0.0)?;
        return Ok(SclOutcome {
            loss: zero,
            used: 0,
            skipped: queries.len(),
        });
    }

    // Key matrix in FIFO order; rows align with positive indices.
    let fill = queue.len();
    let mut key_data = Vec::with_capacity(fill * queue.dim());
    for i in 0..fill {
        key_data.extend_from_slice(queue.feature(i));
    }
    let keys = tape.leaf(Tensor::matrix(fill, queue.dim(), key_data)?);

    let mut per_query = Vec::with_capacity(usable.len());
    for q in &usable {
        let logits_raw = tape.matvec(keys, q.feature)?;
        let logits = tape.scale(logits_raw, 1.0 / temperature)?;
        let lse = tape.logsumexp(logits, 0)?;
        let pos_sum = tape.gather_sum(logits, q.positives.clone())?;
        let mean_pos = tape.scale(pos_sum, -1.0 / q.positives.len() as f64)?;
        per_query.push(tape.add(lse, mean_pos)?);
    }
    let loss = tape.sum_vars(&per_query)?;
    Ok(SclOutcome {
        loss,
        used: usable.len(),
        skipped,
    })
}
