//! Recurrent cells, attention pooling, and linear layers shared by the
//! taggers and classifiers, plus parameter initialization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{BoundParams, ParamId, ParamSet, Result, Tape, Tensor, Var};

/// Registers parameters with Xavier-uniform matrices and zero biases.
pub struct ParamBuilder<'r> {
    set: ParamSet,
    rng: &'r mut ChaCha8Rng,
}

impl<'r> ParamBuilder<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng) -> Self {
        Self {
            set: ParamSet::new(),
            rng,
        }
    }

    pub fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| self.rng.gen_range(-bound..bound))
            .collect();
        self.set.add(name, Tensor::matrix(rows, cols, data)?)
    }

    pub fn zero_vector(&mut self, name: &str, n: usize) -> Result<ParamId> {
        self.set.add(name, Tensor::zeros(&[n]))
    }

    pub fn random_vector(&mut self, name: &str, n: usize) -> Result<ParamId> {
        let bound = (3.0 / n as f64).sqrt();
        let data = (0..n).map(|_| self.rng.gen_range(-bound..bound)).collect();
        self.set.add(name, Tensor::vector(data)?)
    }

    pub fn finish(self) -> ParamSet {
        self.set
    }
}

/// Gated recurrent unit; update gate keeps the previous state:
/// `h' = (1 - z) ⊙ h + z ⊙ h̃`.
#[derive(Clone, Copy, Debug)]
pub struct GruCell {
    wz: ParamId,
    uz: ParamId,
    bz: ParamId,
    wr: ParamId,
    ur: ParamId,
    br: ParamId,
    wh: ParamId,
    uh: ParamId,
    bh: ParamId,
    pub hidden: usize,
}

impl GruCell {
    pub fn register(
        pb: &mut ParamBuilder,
        prefix: &str,
        input: usize,
        hidden: usize,
    ) -> Result<Self> {
        Ok(Self {
            wz: pb.matrix(&format!("{prefix}.wz"), hidden, input)?,
            uz: pb.matrix(&format!("{prefix}.uz"), hidden, hidden)?,
            bz: pb.zero_vector(&format!("{prefix}.bz"), hidden)?,
            wr: pb.matrix(&format!("{prefix}.wr"), hidden, input)?,
            ur: pb.matrix(&format!("{prefix}.ur"), hidden, hidden)?,
            br: pb.zero_vector(&format!("{prefix}.br"), hidden)?,
            wh: pb.matrix(&format!("{prefix}.wh"), hidden, input)?,
            uh: pb.matrix(&format!("{prefix}.uh"), hidden, hidden)?,
            bh: pb.zero_vector(&format!("{prefix}.bh"), hidden)?,
            hidden,
        })
    }

    /// Resolve a registered cell's parameters by name in `set`.
    pub fn from_set(set: &ParamSet, prefix: &str, hidden: usize) -> Option<Self> {
        let id = |suffix: &str| set.id(&format!("{prefix}.{suffix}"));
        Some(Self {
            wz: id("wz")?,
            uz: id("uz")?,
            bz: id("bz")?,
            wr: id("wr")?,
            ur: id("ur")?,
            br: id("br")?,
            wh: id("wh")?,
            uh: id("uh")?,
            bh: id("bh")?,
            hidden,
        })
    }

    pub fn step(&self, tape: &mut Tape, bound: &BoundParams, x: Var, h: Var) -> Result<Var> {
        let zx = tape.matvec(bound.var(self.wz), x)?;
        let zh = tape.matvec(bound.var(self.uz), h)?;
        let z_pre = tape.add(zx, zh)?;
        let z_pre = tape.add(z_pre, bound.var(self.bz))?;
        let z = tape.sigmoid(z_pre)?;

        let rx = tape.matvec(bound.var(self.wr), x)?;
        let rh = tape.matvec(bound.var(self.ur), h)?;
        let r_pre = tape.add(rx, rh)?;
        let r_pre = tape.add(r_pre, bound.var(self.br))?;
        let r = tape.sigmoid(r_pre)?;

        let hx = tape.matvec(bound.var(self.wh), x)?;
        let rh_gated = tape.mul(r, h)?;
        let hh = tape.matvec(bound.var(self.uh), rh_gated)?;
        let h_pre = tape.add(hx, hh)?;
        let h_pre = tape.add(h_pre, bound.var(self.bh))?;
        let h_cand = tape.tanh(h_pre)?;

        let one_minus_z = tape.affine(z, -1.0, 1.0)?;
        let keep = tape.mul(one_minus_z, h)?;
        let update = tape.mul(z, h_cand)?;
        tape.add(keep, update)
    }

    /// Run over a sequence from a zero initial state; returns every state.
    pub fn run(&self, tape: &mut Tape, bound: &BoundParams, xs: &[Var]) -> Result<Vec<Var>> {
        let mut h = tape.leaf(Tensor::zeros(&[self.hidden]));
        let mut states = Vec::with_capacity(xs.len());
        for &x in xs {
            h = self.step(tape, bound, x, h)?;
            states.push(h);
        }
        Ok(states)
    }
}

/// Additive attention pooling: `score_i = v · tanh(W s_i + b)`, softmax over
/// positions, weighted sum of states.
#[derive(Clone, Copy, Debug)]
pub struct AttentionPool {
    w: ParamId,
    b: ParamId,
    v: ParamId,
}

impl AttentionPool {
    pub fn register(
        pb: &mut ParamBuilder,
        prefix: &str,
        state: usize,
        attn: usize,
    ) -> Result<Self> {
        Ok(Self {
            w: pb.matrix(&format!("{prefix}.w"), attn, state)?,
            b: pb.zero_vector(&format!("{prefix}.b"), attn)?,
            v: pb.random_vector(&format!("{prefix}.v"), attn)?,
        })
    }

    pub fn from_set(set: &ParamSet, prefix: &str) -> Option<Self> {
        Some(Self {
            w: set.id(&format!("{prefix}.w"))?,
            b: set.id(&format!("{prefix}.b"))?,
            v: set.id(&format!("{prefix}.v"))?,
        })
    }

    pub fn apply(&self, tape: &mut Tape, bound: &BoundParams, states: &[Var]) -> Result<Var> {
        let stacked = tape.stack_rows(states.to_vec())?; // [n, state]
        let wt = tape.transpose(bound.var(self.w))?; // [state, attn]
        let proj = tape.matmul(stacked, wt)?; // [n, attn]
        let proj = tape.add_row_vec(proj, bound.var(self.b))?;
        let act = tape.tanh(proj)?;
        let scores = tape.matvec(act, bound.var(self.v))?; // [n]
        let weights = tape.softmax(scores)?;
        let stacked_t = tape.transpose(stacked)?; // [state, n]
        tape.matvec(stacked_t, weights)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    w: ParamId,
    b: ParamId,
}

impl Linear {
    pub fn register(
        pb: &mut ParamBuilder,
        prefix: &str,
        input: usize,
        output: usize,
    ) -> Result<Self> {
        Ok(Self {
            w: pb.matrix(&format!("{prefix}.w"), output, input)?,
            b: pb.zero_vector(&format!("{prefix}.b"), output)?,
        })
    }

    pub fn from_set(set: &ParamSet, prefix: &str) -> Option<Self> {
        Some(Self {
            w: set.id(&format!("{prefix}.w"))?,
            b: set.id(&format!("{prefix}.b"))?,
        })
    }

    pub fn apply(&self, tape: &mut Tape, bound: &BoundParams, x: Var) -> Result<Var> {
        let y = tape.matvec(bound.var(self.w), x)?;
        tape.add(y, bound.var(self.b))
    }
}

/// Embedding lookups for a sequence of token ids.
pub fn embed_tokens(
    tape: &mut Tape,
    bound: &BoundParams,
    table: ParamId,
    tokens: &[u32],
) -> Result<Vec<Var>> {
    tokens
        .iter()
        .map(|&t| tape.select_row(bound.var(table), t as usize))
        .collect()
}
