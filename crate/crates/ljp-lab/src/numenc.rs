//! Numeracy-preserving number encoder: a recurrent encoder over decimal
//! digit sequences, pretrained so that the cosine distance between two
//! numbers' representations matches their relative numerical distance
//! `2|x - y| / (|x| + |y|)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Adam, BoundParams, ParamId, ParamSet, Tape, TensorError, Var};
use crate::nn::{GruCell, ParamBuilder};

/// 0-9 plus the end marker.
pub const DIGIT_SYMBOLS: usize = 11;
const END_MARKER: usize = 10;

#[derive(Debug, Error)]
pub enum NumEncError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("number {number} outside encoder range [{min}, {max}]")]
    OutOfRange { number: u64, min: u64, max: u64 },
    #[error("a number pair may not be (0, 0)")]
    ZeroPair,
    #[error("invalid sampling range [{min}, {max}]")]
    BadRange { min: u64, max: u64 },
    #[error("pair count must be positive")]
    NoPairs,
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
}

pub type Result<T> = std::result::Result<T, NumEncError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberPair {
    pub x: u64,
    pub y: u64,
}

impl NumberPair {
    pub fn new(x: u64, y: u64) -> Result<Self> {
        if x == 0 && y == 0 {
            return Err(NumEncError::ZeroPair);
        }
        Ok(Self { x, y })
    }
}

/// Relative numerical distance `2|x - y| / (|x| + |y|)`, in [0, 2].
pub fn relative_distance(x: u64, y: u64) -> f64 {
    let diff = x.abs_diff(y) as f64;
    2.0 * diff / (x as f64 + y as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumEncoderConfig {
    pub digit_embed: usize,
    /// Hidden state size; also the output dimension.
    pub hidden: usize,
    pub min_number: u64,
    pub max_number: u64,
    pub pair_count: usize,
    pub holdout_pairs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for NumEncoderConfig {
    fn default() -> Self {
        Self {
            digit_embed: 16,
            hidden: 32,
            min_number: 0,
            max_number: 300_000,
            pair_count: 20_000,
            holdout_pairs: 2_000,
            epochs: 30,
            batch_size: 128,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

impl NumEncoderConfig {
    /// Restore the full-scale published hyperparameters.
    pub fn paper_scale(mut self) -> Self {
        self.hidden = 256;
        self.digit_embed = 200;
        self.pair_count = 128_000;
        self.epochs = 100;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumEncDims {
    pub digit_embed: usize,
    pub hidden: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumEncoderModel {
    pub dims: NumEncDims,
    pub min_number: u64,
    pub max_number: u64,
    pub params: ParamSet,
}

struct NumEncIds {
    digit_table: ParamId,
    cell: GruCell,
}

/// Decimal digits most-significant first, then the end marker.
pub fn digit_sequence(n: u64) -> Vec<usize> {
    let mut digits = Vec::new();
    let mut n = n;
    loop {
        digits.push((n % 10) as usize);
        n /= 10;
        if n == 0 {
            break;
        }
    }
    digits.reverse();
    digits.push(END_MARKER);
    digits
}

impl NumEncoderModel {
    pub fn init(config: &NumEncoderConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut pb = ParamBuilder::new(rng);
        pb.matrix("digits", DIGIT_SYMBOLS, config.digit_embed)?;
        GruCell::register(&mut pb, "cell", config.digit_embed, config.hidden)?;
        Ok(Self {
            dims: NumEncDims {
                digit_embed: config.digit_embed,
                hidden: config.hidden,
            },
            min_number: config.min_number,
            max_number: config.max_number,
            params: pb.finish(),
        })
    }

    fn ids(&self) -> NumEncIds {
        NumEncIds {
            digit_table: self.params.id("digits").expect("digit table present"),
            cell: GruCell::from_set(&self.params, "cell", self.dims.hidden)
                .expect("cell present"),
        }
    }

    pub fn check_range(&self, n: u64) -> Result<()> {
        if n < self.min_number || n > self.max_number {
            return Err(NumEncError::OutOfRange {
                number: n,
                min: self.min_number,
                max: self.max_number,
            });
        }
        Ok(())
    }

    /// Final hidden state of the recurrent cell over the digit sequence.
    pub fn encode_on_tape(&self, tape: &mut Tape, bound: &BoundParams, n: u64) -> Result<Var> {
        self.check_range(n)?;
        let ids = self.ids();
        let xs: Vec<Var> = digit_sequence(n)
            .into_iter()
            .map(|d| tape.select_row(bound.var(ids.digit_table), d))
            .collect::<std::result::Result<_, _>>()?;
        let states = ids.cell.run(tape, bound, &xs)?;
        Ok(*states.last().expect("digit sequences are nonempty"))
    }

    /// Detached encoding of one number.
    pub fn encode(&self, n: u64) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let v = self.encode_on_tape(&mut tape, &bound, n)?;
        Ok(tape.value(v).data().to_vec())
    }

    /// `| relative_distance(x, y) - cosdist(enc(x), enc(y)) |`.
    pub fn pair_loss_on_tape(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        pair: NumberPair,
    ) -> Result<Var> {
        let ex = self.encode_on_tape(tape, bound, pair.x)?;
        let ey = self.encode_on_tape(tape, bound, pair.y)?;
        let cd = tape.cosine_distance(ex, ey)?;
        let target = tape.scalar(relative_distance(pair.x, pair.y))?;
        let diff = tape.sub(target, cd)?;
        Ok(tape.abs(diff)?)
    }

    pub fn pair_loss(&self, pair: NumberPair) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let loss = self.pair_loss_on_tape(&mut tape, &bound, pair)?;
        Ok(tape.value(loss).scalar_value())
    }

    /// Cosine distance between two encoded numbers.
    pub fn cosine_distance(&self, x: u64, y: u64) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let ex = self.encode_on_tape(&mut tape, &bound, x)?;
        let ey = self.encode_on_tape(&mut tape, &bound, y)?;
        let cd = tape.cosine_distance(ex, ey)?;
        Ok(tape.value(cd).scalar_value())
    }
}

/// Independent uniform integer pairs over `[min, max]`; the all-zero pair is
/// resampled. Deterministic for a fixed seed.
pub fn sample_pairs(count: usize, min: u64, max: u64, seed: u64) -> Result<Vec<NumberPair>> {
    if count == 0 {
        return Err(NumEncError::NoPairs);
    }
    if max <= min {
        return Err(NumEncError::BadRange { min, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x6e75);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = rng.gen_range(min..=max);
        let y = rng.gen_range(min..=max);
        if x == 0 && y == 0 {
            continue;
        }
        out.push(NumberPair { x, y });
    }
    Ok(out)
}

/// Pearson correlation between encoded cosine distance and the relative
/// numerical distance over a pair set.
pub fn numeracy_correlation(model: &NumEncoderModel, pairs: &[NumberPair]) -> Result<f64> {
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &pair in pairs {
        xs.push(model.cosine_distance(pair.x, pair.y)?);
        ys.push(relative_distance(pair.x, pair.y));
    }
    Ok(pearson(&xs, &ys))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Minimize the mean pair loss with Adam; returns the per-epoch mean loss.
pub fn pretrain(
    pairs: &[NumberPair],
    config: &NumEncoderConfig,
) -> Result<(NumEncoderModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(NumEncError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0x6e63);
    let mut model = NumEncoderModel::init(config, &mut rng)?;
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in pairs.chunks(config.batch_size.max(1)).enumerate() {
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape);
            let mut losses = Vec::with_capacity(batch.len());
            for &pair in batch {
                losses.push(model.pair_loss_on_tape(&mut tape, &bound, pair)?);
            }
            let sum = tape.sum_vars(&losses)?;
            let mean = tape.scale(sum, 1.0 / batch.len() as f64)?;
            let value = tape.value(mean).scalar_value();
            if !value.is_finite() {
                return Err(NumEncError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_sum += value * batch.len() as f64;
            let grads = tape.backward(mean)?;
            let flat = model.params.collect_grads(&grads, &bound);
            adam.step(&mut model.params, &flat)?;
        }
        history.push(loss_sum / pairs.len() as f64);
    }
    Ok((model, history))
}
