//! LSTM and GRU cells and layers with backpropagation through time.
//!
//! Equations are the standard formulations, fixed here once and relied on
//! by the serialized model format:
//!
//! **LSTM** (with forget gate; `s` is the logistic function, `.` is
//! element-wise product):
//!
//! ```text
//! i_t = s(Wi x_t + Ui h_{t-1} + bi)
//! f_t = s(Wf x_t + Uf h_{t-1} + bf)
//! o_t = s(Wo x_t + Uo h_{t-1} + bo)
//! g_t = tanh(Wc x_t + Uc h_{t-1} + bc)
//! c_t = f_t . c_{t-1} + i_t . g_t
//! h_t = o_t . tanh(c_t)
//! ```
//!
//! **GRU** (reset-before-candidate variant):
//!
//! ```text
//! z_t = s(Wz x_t + Uz h_{t-1} + bz)
//! r_t = s(Wr x_t + Ur h_{t-1} + br)
//! g_t = tanh(Wh x_t + Uh (r_t . h_{t-1}) + bh)
//! h_t = (1 - z_t) . h_{t-1} + z_t . g_t
//! ```
//!
//! The LSTM layer returns every hidden state (`L x H`, "return
//! sequences"); the GRU layer returns only the final hidden state (`H`).
//! Both start from all-zero states. Forward passes record a tape of
//! per-step activations; the backward passes consume the tape and
//! accumulate exact analytic gradients for every parameter and for the
//! input sequence. Initialization is Glorot-uniform for all weight
//! matrices, zero for all biases except the LSTM forget-gate bias, which
//! starts at 1 (the standard guard against early vanishing gradients).

use crate::error::{Error, Result};
use crate::nn::ops::{axpy, dot, init_params};
use crate::nn::rng::RngStream;
use crate::nn::tensor::{Parameter, Tensor};

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden (and, for LSTM, cell) state carried between timesteps.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    /// Hidden vector, length H.
    pub h: Vec<f64>,
    /// Cell vector, length H (LSTM only; empty for GRU).
    pub c: Vec<f64>,
}

impl RecurrentState {
    /// All-zero initial state for a hidden size.
    pub fn zeros(hidden: usize) -> Self {
        RecurrentState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// One gate's parameter triple: input weights `W` (H x D), recurrent
/// weights `U` (H x H), bias `b` (H).
#[derive(Debug, Clone)]
pub struct GateParams {
    /// Input weights, shape `[H, D]`.
    pub w: Parameter,
    /// Recurrent weights, shape `[H, H]`.
    pub u: Parameter,
    /// Bias, shape `[H]`.
    pub b: Parameter,
}

impl GateParams {
    fn zeros(input: usize, hidden: usize, bias_value: f64) -> Self {
        GateParams {
            w: Parameter::new(Tensor::zeros(&[hidden, input])),
            u: Parameter::new(Tensor::zeros(&[hidden, hidden])),
            b: Parameter::new(Tensor::full(&[hidden], bias_value)),
        }
    }

    /// Glorot-initialized weights (W first, then U — the canonical draw
    /// order) with a constant bias.
    fn init(input: usize, hidden: usize, bias_value: f64, rng: &mut RngStream) -> Result<Self> {
        let w = init_params(&[hidden, input], input, hidden, rng)?;
        let u = init_params(&[hidden, hidden], hidden, hidden, rng)?;
        Ok(GateParams {
            w: Parameter::new(w),
            u: Parameter::new(u),
            b: Parameter::new(Tensor::full(&[hidden], bias_value)),
        })
    }

    fn count(&self) -> usize {
        self.w.count() + self.u.count() + self.b.count()
    }

    /// Pre-activation `b + W x + U h` for every hidden unit.
    fn preactivation(&self, x: &[f64], h: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.b.value.at1(j) + dot(self.w.value.row(j), x) + dot(self.u.value.row(j), h);
        }
    }

    /// Accumulates gradients for one step given the pre-activation
    /// gradient `da`: `dW += da x^T`, `dU += da h^T`, `db += da`, and adds
    /// `W^T da` into `dx` and `U^T da` into `dh`.
    fn accumulate(&mut self, da: &[f64], x: &[f64], h: &[f64], dx: &mut [f64], dh: &mut [f64]) {
        for (j, &g) in da.iter().enumerate() {
            self.b.grad.data_mut()[j] += g;
            axpy(g, x, self.w.grad.row_mut(j));
            axpy(g, h, self.u.grad.row_mut(j));
            axpy(g, self.w.value.row(j), dx);
            axpy(g, self.u.value.row(j), dh);
        }
    }
}

/// LSTM parameters: four gates (input `i`, forget `f`, output `o`,
/// candidate `c`).
#[derive(Debug, Clone)]
pub struct LstmParams {
    /// Input gate.
    pub i: GateParams,
    /// Forget gate (bias initialized to 1).
    pub f: GateParams,
    /// Output gate.
    pub o: GateParams,
    /// Candidate ("cell input") gate.
    pub c: GateParams,
    input: usize,
    hidden: usize,
}

impl LstmParams {
    /// All-zero parameters (test fixtures).
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            i: GateParams::zeros(input, hidden, 0.0),
            f: GateParams::zeros(input, hidden, 0.0),
            o: GateParams::zeros(input, hidden, 0.0),
            c: GateParams::zeros(input, hidden, 0.0),
            input,
            hidden,
        }
    }

    /// Glorot-initialized parameters. Draw order: gates `i, f, o, c`,
    /// each `W` before `U`; biases draw nothing. Forget-gate bias is 1.
    pub fn init(input: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(LstmParams {
            i: GateParams::init(input, hidden, 0.0, rng)?,
            f: GateParams::init(input, hidden, 1.0, rng)?,
            o: GateParams::init(input, hidden, 0.0, rng)?,
            c: GateParams::init(input, hidden, 0.0, rng)?,
            input,
            hidden,
        })
    }

    /// Input size D.
    pub fn input_size(&self) -> usize {
        self.input
    }

    /// Hidden size H.
    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    /// Total trainable scalar count: `4 (H D + H^2 + H)`.
    pub fn count(&self) -> usize {
        self.i.count() + self.f.count() + self.o.count() + self.c.count()
    }

    /// Canonical `(name, parameter)` pairs for serialization/optimizers.
    pub fn named(&self) -> Vec<(&'static str, &Parameter)> {
        vec![
            ("Wi", &self.i.w),
            ("Ui", &self.i.u),
            ("bi", &self.i.b),
            ("Wf", &self.f.w),
            ("Uf", &self.f.u),
            ("bf", &self.f.b),
            ("Wo", &self.o.w),
            ("Uo", &self.o.u),
            ("bo", &self.o.b),
            ("Wc", &self.c.w),
            ("Uc", &self.c.u),
            ("bc", &self.c.b),
        ]
    }

    /// Mutable variant of [`LstmParams::named`].
    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Parameter)> {
        vec![
            ("Wi", &mut self.i.w),
            ("Ui", &mut self.i.u),
            ("bi", &mut self.i.b),
            ("Wf", &mut self.f.w),
            ("Uf", &mut self.f.u),
            ("bf", &mut self.f.b),
            ("Wo", &mut self.o.w),
            ("Uo", &mut self.o.u),
            ("bo", &mut self.o.b),
            ("Wc", &mut self.c.w),
            ("Uc", &mut self.c.u),
            ("bc", &mut self.c.b),
        ]
    }
}

/// GRU parameters: update `z`, reset `r`, candidate `h` gates.
#[derive(Debug, Clone)]
pub struct GruParams {
    /// Update gate.
    pub z: GateParams,
    /// Reset gate.
    pub r: GateParams,
    /// Candidate gate.
    pub h: GateParams,
    input: usize,
    hidden: usize,
}

impl GruParams {
    /// All-zero parameters (test fixtures).
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruParams {
            z: GateParams::zeros(input, hidden, 0.0),
            r: GateParams::zeros(input, hidden, 0.0),
            h: GateParams::zeros(input, hidden, 0.0),
            input,
            hidden,
        }
    }

    /// Glorot-initialized parameters. Draw order: gates `z, r, h`, each
    /// `W` before `U`; all biases zero.
    pub fn init(input: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(GruParams {
            z: GateParams::init(input, hidden, 0.0, rng)?,
            r: GateParams::init(input, hidden, 0.0, rng)?,
            h: GateParams::init(input, hidden, 0.0, rng)?,
            input,
            hidden,
        })
    }

    /// Input size D.
    pub fn input_size(&self) -> usize {
        self.input
    }

    /// Hidden size H.
    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    /// Total trainable scalar count: `3 (H D + H^2 + H)`.
    pub fn count(&self) -> usize {
        self.z.count() + self.r.count() + self.h.count()
    }

    /// Canonical `(name, parameter)` pairs for serialization/optimizers.
    pub fn named(&self) -> Vec<(&'static str, &Parameter)> {
        vec![
            ("Wz", &self.z.w),
            ("Uz", &self.z.u),
            ("bz", &self.z.b),
            ("Wr", &self.r.w),
            ("Ur", &self.r.u),
            ("br", &self.r.b),
            ("Wh", &self.h.w),
            ("Uh", &self.h.u),
            ("bh", &self.h.b),
        ]
    }

    /// Mutable variant of [`GruParams::named`].
    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Parameter)> {
        vec![
            ("Wz", &mut self.z.w),
            ("Uz", &mut self.z.u),
            ("bz", &mut self.z.b),
            ("Wr", &mut self.r.w),
            ("Ur", &mut self.r.u),
            ("br", &mut self.r.b),
            ("Wh", &mut self.h.w),
            ("Uh", &mut self.h.u),
            ("bh", &mut self.h.b),
        ]
    }
}

/// Single LSTM step.
pub fn lstm_cell(x: &[f64], state: &RecurrentState, p: &LstmParams) -> Result<RecurrentState> {
    if x.len() != p.input || state.h.len() != p.hidden || state.c.len() != p.hidden {
        return Err(Error::Shape(format!(
            "lstm_cell expects input {} and state {}, got input {} state ({}, {})",
            p.input,
            p.hidden,
            x.len(),
            state.h.len(),
            state.c.len()
        )));
    }
    let h = p.hidden;
    let mut buf = vec![0.0; h];
    let mut next = RecurrentState::zeros(h);

    p.i.preactivation(x, &state.h, &mut buf);
    let i_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
    p.f.preactivation(x, &state.h, &mut buf);
    let f_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
    p.o.preactivation(x, &state.h, &mut buf);
    let o_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
    p.c.preactivation(x, &state.h, &mut buf);
    let g_gate: Vec<f64> = buf.iter().map(|&a| a.tanh()).collect();

    for j in 0..h {
        next.c[j] = f_gate[j] * state.c[j] + i_gate[j] * g_gate[j];
        next.h[j] = o_gate[j] * next.c[j].tanh();
    }
    Ok(next)
}

/// Single GRU step; `h` is the previous hidden state.
pub fn gru_cell(x: &[f64], h: &[f64], p: &GruParams) -> Result<Vec<f64>> {
    if x.len() != p.input || h.len() != p.hidden {
        return Err(Error::Shape(format!(
            "gru_cell expects input {} and state {}, got input {} state {}",
            p.input,
            p.hidden,
            x.len(),
            h.len()
        )));
    }
    let hs = p.hidden;
    let mut buf = vec![0.0; hs];

    p.z.preactivation(x, h, &mut buf);
    let z_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
    p.r.preactivation(x, h, &mut buf);
    let r_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();

    let reset_h: Vec<f64> = r_gate.iter().zip(h).map(|(r, hv)| r * hv).collect();
    p.h.preactivation(x, &reset_h, &mut buf);
    let g_gate: Vec<f64> = buf.iter().map(|&a| a.tanh()).collect();

    Ok((0..hs)
        .map(|j| (1.0 - z_gate[j]) * h[j] + z_gate[j] * g_gate[j])
        .collect())
}

/// Per-step activations recorded by [`lstm_layer`] for its backward pass.
#[derive(Debug, Clone)]
pub struct LstmTape {
    /// Hidden states `h_0..h_L` (index 0 is the zero initial state).
    hs: Vec<Vec<f64>>,
    /// Cell states `c_0..c_L`.
    cs: Vec<Vec<f64>>,
    /// Gate activations per step: input, forget, output, candidate,
    /// and `tanh(c_t)`.
    i: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    tc: Vec<Vec<f64>>,
}

/// LSTM layer over an `L x D` sequence, returning all hidden states as an
/// `L x H` tensor ("return sequences") plus the backward tape.
pub fn lstm_layer(seq: &Tensor, p: &LstmParams) -> Result<(Tensor, LstmTape)> {
    let (l, d) = match seq.shape() {
        [l, d] => (*l, *d),
        s => {
            return Err(Error::Shape(format!(
                "lstm_layer input must be rank 2, got {s:?}"
            )))
        }
    };
    if l == 0 {
        return Err(Error::Shape(
            "lstm_layer requires a non-empty sequence".into(),
        ));
    }
    if d != p.input {
        return Err(Error::Shape(format!(
            "lstm_layer expects input size {}, got {d}",
            p.input
        )));
    }
    let h = p.hidden;
    let mut tape = LstmTape {
        hs: vec![vec![0.0; h]],
        cs: vec![vec![0.0; h]],
        i: Vec::with_capacity(l),
        f: Vec::with_capacity(l),
        o: Vec::with_capacity(l),
        g: Vec::with_capacity(l),
        tc: Vec::with_capacity(l),
    };
    let mut out = Tensor::zeros(&[l, h]);
    let mut buf = vec![0.0; h];

    for t in 0..l {
        let x = seq.row(t);
        let h_prev = &tape.hs[t];
        let c_prev = &tape.cs[t];

        p.i.preactivation(x, h_prev, &mut buf);
        let i_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
        p.f.preactivation(x, h_prev, &mut buf);
        let f_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
        p.o.preactivation(x, h_prev, &mut buf);
        let o_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
        p.c.preactivation(x, h_prev, &mut buf);
        let g_gate: Vec<f64> = buf.iter().map(|&a| a.tanh()).collect();

        let mut c_t = vec![0.0; h];
        let mut tc_t = vec![0.0; h];
        let mut h_t = vec![0.0; h];
        for j in 0..h {
            c_t[j] = f_gate[j] * c_prev[j] + i_gate[j] * g_gate[j];
            tc_t[j] = c_t[j].tanh();
            h_t[j] = o_gate[j] * tc_t[j];
        }
        out.row_mut(t).copy_from_slice(&h_t);

        tape.i.push(i_gate);
        tape.f.push(f_gate);
        tape.o.push(o_gate);
        tape.g.push(g_gate);
        tape.tc.push(tc_t);
        tape.cs.push(c_t);
        tape.hs.push(h_t);
    }
    Ok((out, tape))
}

/// BPTT backward for [`lstm_layer`].
///
/// `d_out` is the upstream gradient for every hidden state (`L x H`).
/// Parameter gradients accumulate into `p`; the input-sequence gradient
/// accumulates into `d_seq`.
pub fn lstm_layer_backward(
    seq: &Tensor,
    p: &mut LstmParams,
    tape: &LstmTape,
    d_out: &Tensor,
    d_seq: &mut Tensor,
) -> Result<()> {
    let (l, _d) = match seq.shape() {
        [l, d] if *d == p.input => (*l, *d),
        s => return Err(Error::Shape(format!("lstm backward sequence shape {s:?}"))),
    };
    let h = p.hidden;
    if tape.i.len() != l {
        return Err(Error::State(format!(
            "lstm tape covers {} steps but the sequence has {l}",
            tape.i.len()
        )));
    }
    if d_out.shape() != [l, h] || d_seq.shape() != seq.shape() {
        return Err(Error::Shape(
            "lstm backward gradient shapes disagree".into(),
        ));
    }

    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da_i = vec![0.0; h];
    let mut da_f = vec![0.0; h];
    let mut da_o = vec![0.0; h];
    let mut da_g = vec![0.0; h];

    for t in (0..l).rev() {
        let (i_g, f_g, o_g, g_g, tc) =
            (&tape.i[t], &tape.f[t], &tape.o[t], &tape.g[t], &tape.tc[t]);
        let c_prev = &tape.cs[t];
        let h_prev = &tape.hs[t];

        for j in 0..h {
            let dh = d_out.at2(t, j) + dh_next[j];
            let dc = dh * o_g[j] * (1.0 - tc[j] * tc[j]) + dc_next[j];
            da_o[j] = dh * tc[j] * o_g[j] * (1.0 - o_g[j]);
            da_f[j] = dc * c_prev[j] * f_g[j] * (1.0 - f_g[j]);
            da_i[j] = dc * g_g[j] * i_g[j] * (1.0 - i_g[j]);
            da_g[j] = dc * i_g[j] * (1.0 - g_g[j] * g_g[j]);
            dc_next[j] = dc * f_g[j];
        }

        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let x = seq.row(t);
        let dx = d_seq.row_mut(t);
        p.i.accumulate(&da_i, x, h_prev, dx, &mut dh_next);
        p.f.accumulate(&da_f, x, h_prev, dx, &mut dh_next);
        p.o.accumulate(&da_o, x, h_prev, dx, &mut dh_next);
        p.c.accumulate(&da_g, x, h_prev, dx, &mut dh_next);
    }
    Ok(())
}

/// Per-step activations recorded by [`gru_layer`] for its backward pass.
#[derive(Debug, Clone)]
pub struct GruTape {
    /// Hidden states `h_0..h_L` (index 0 is the zero initial state).
    hs: Vec<Vec<f64>>,
    /// Gate activations per step: update, reset, candidate, and the reset
    /// product `r . h_{t-1}`.
    z: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    rh: Vec<Vec<f64>>,
}

/// GRU layer over an `L x D` sequence, returning only the final hidden
/// state (length H) plus the backward tape.
pub fn gru_layer(seq: &Tensor, p: &GruParams) -> Result<(Tensor, GruTape)> {
    let (l, d) = match seq.shape() {
        [l, d] => (*l, *d),
        s => {
            return Err(Error::Shape(format!(
                "gru_layer input must be rank 2, got {s:?}"
            )))
        }
    };
    if l == 0 {
        return Err(Error::Shape(
            "gru_layer requires a non-empty sequence".into(),
        ));
    }
    if d != p.input {
        return Err(Error::Shape(format!(
            "gru_layer expects input size {}, got {d}",
            p.input
        )));
    }
    let h = p.hidden;
    let mut tape = GruTape {
        hs: vec![vec![0.0; h]],
        z: Vec::with_capacity(l),
        r: Vec::with_capacity(l),
        g: Vec::with_capacity(l),
        rh: Vec::with_capacity(l),
    };
    let mut buf = vec![0.0; h];

    for t in 0..l {
        let x = seq.row(t);
        let h_prev = &tape.hs[t];

        p.z.preactivation(x, h_prev, &mut buf);
        let z_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
        p.r.preactivation(x, h_prev, &mut buf);
        let r_gate: Vec<f64> = buf.iter().map(|&a| sigmoid(a)).collect();
        let reset_h: Vec<f64> = r_gate.iter().zip(h_prev).map(|(r, hv)| r * hv).collect();
        p.h.preactivation(x, &reset_h, &mut buf);
        let g_gate: Vec<f64> = buf.iter().map(|&a| a.tanh()).collect();

        let h_t: Vec<f64> = (0..h)
            .map(|j| (1.0 - z_gate[j]) * h_prev[j] + z_gate[j] * g_gate[j])
            .collect();

        tape.z.push(z_gate);
        tape.r.push(r_gate);
        tape.g.push(g_gate);
        tape.rh.push(reset_h);
        tape.hs.push(h_t);
    }
    let final_h = tape.hs.last().expect("at least one step").clone();
    Ok((Tensor::from_vec(&[h], final_h)?, tape))
}

/// BPTT backward for [`gru_layer`].
///
/// `d_final` is the upstream gradient for the final hidden state (length
/// H). Parameter gradients accumulate into `p`; the input-sequence
/// gradient accumulates into `d_seq`.
pub fn gru_layer_backward(
    seq: &Tensor,
    p: &mut GruParams,
    tape: &GruTape,
    d_final: &Tensor,
    d_seq: &mut Tensor,
) -> Result<()> {
    let (l, _d) = match seq.shape() {
        [l, d] if *d == p.input => (*l, *d),
        s => return Err(Error::Shape(format!("gru backward sequence shape {s:?}"))),
    };
    let h = p.hidden;
    if tape.z.len() != l {
        return Err(Error::State(format!(
            "gru tape covers {} steps but the sequence has {l}",
            tape.z.len()
        )));
    }
    if d_final.shape() != [h] || d_seq.shape() != seq.shape() {
        return Err(Error::Shape("gru backward gradient shapes disagree".into()));
    }

    let mut dh: Vec<f64> = d_final.data().to_vec();
    let mut da_z = vec![0.0; h];
    let mut da_r = vec![0.0; h];
    let mut da_g = vec![0.0; h];
    let mut d_rh = vec![0.0; h];
    let mut dh_prev = vec![0.0; h];

    for t in (0..l).rev() {
        let (z_g, r_g, g_g, rh) = (&tape.z[t], &tape.r[t], &tape.g[t], &tape.rh[t]);
        let h_prev = &tape.hs[t];

        for j in 0..h {
            da_z[j] = dh[j] * (g_g[j] - h_prev[j]) * z_g[j] * (1.0 - z_g[j]);
            da_g[j] = dh[j] * z_g[j] * (1.0 - g_g[j] * g_g[j]);
        }
        // d(r . h_prev) = Uh^T da_g.
        d_rh.iter_mut().for_each(|v| *v = 0.0);
        for (j, &g) in da_g.iter().enumerate() {
            axpy(g, p.h.u.value.row(j), &mut d_rh);
        }
        for j in 0..h {
            da_r[j] = d_rh[j] * h_prev[j] * r_g[j] * (1.0 - r_g[j]);
        }

        // Direct carry plus the reset-path contribution; the U^T terms
        // from the z and r gates are added by `accumulate` below.
        for j in 0..h {
            dh_prev[j] = dh[j] * (1.0 - z_g[j]) + d_rh[j] * r_g[j];
        }

        let x = seq.row(t);
        let dx = d_seq.row_mut(t);
        p.z.accumulate(&da_z, x, h_prev, dx, &mut dh_prev);
        p.r.accumulate(&da_r, x, h_prev, dx, &mut dh_prev);
        // The candidate gate's recurrent input was `r . h_prev`, not
        // `h_prev`: route its U-gradient through the reset product. Its
        // U^T contribution is already in d_rh, so only W/b/dx remain.
        for (j, &g) in da_g.iter().enumerate() {
            p.h.b.grad.data_mut()[j] += g;
            axpy(g, x, p.h.w.grad.row_mut(j));
            axpy(g, rh, p.h.u.grad.row_mut(j));
            axpy(g, p.h.w.value.row(j), dx);
        }

        std::mem::swap(&mut dh, &mut dh_prev);
    }
    Ok(())
}
