//! Float forward pass and hand-written backward pass of the policy network:
//! two ReLU layers, one LSTM cell and a linear head.

use alloc::vec::Vec;
use core::borrow::Borrow;

use crate::error::PolicyError;
use crate::policy::params::{PolicyParams, TensorSpec, GATES, HIDDEN1, HIDDEN2, LSTM};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyState {
    pub h: [f64; LSTM],
    pub c: [f64; LSTM],
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTape {
    pub x: Vec<f64>,
    pub h1: [f64; HIDDEN1],
    pub h2: [f64; HIDDEN2],
    pub h_prev: [f64; LSTM],
    pub c_prev: [f64; LSTM],
    /// Post-activation gates in i, f, g, o order.
    pub gates: [f64; GATES],
    pub c: [f64; LSTM],
    pub tanh_c: [f64; LSTM],
    pub raw: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Map the network output onto a multiplicative rate change in (0.8, 1.2).
pub fn action_map(raw: f64) -> f64 {
    1.0 + 0.2 * libm::tanh(raw)
}

/// d action / d raw.
pub fn action_grad(raw: f64) -> f64 {
    let t = libm::tanh(raw);
    0.2 * (1.0 - t * t)
}

fn matvec_acc(p: &PolicyParams, w: TensorSpec, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), w.cols);
    debug_assert_eq!(y.len(), w.rows);
    let wd = p.tensor(w);
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &wd[r * w.cols..(r + 1) * w.cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += *a as f64 * b;
        }
        *yr += acc;
    }
}

fn bias(p: &PolicyParams, b: TensorSpec, y: &mut [f64]) {
    for (yr, bv) in y.iter_mut().zip(p.tensor(b)) {
        *yr = *bv as f64;
    }
}

/// One step of the policy. Does not touch `state`; the new state is returned.
pub fn forward(p: &PolicyParams, state: &PolicyState, obs: &[f64]) -> Result<(f64, PolicyState, StepTape), PolicyError> {
    let l = &p.layout;
    if obs.len() != l.input {
        return Err(PolicyError::ShapeMismatch {
            expected: l.input,
            got: obs.len(),
        });
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(PolicyError::NonFinite("observation"));
    }
    let mut h1 = [0.0; HIDDEN1];
    bias(p, l.b1, &mut h1);
    matvec_acc(p, l.w1, obs, &mut h1);
    h1.iter_mut().for_each(|v| *v = v.max(0.0));

    let mut h2 = [0.0; HIDDEN2];
    bias(p, l.b2, &mut h2);
    matvec_acc(p, l.w2, &h1, &mut h2);
    h2.iter_mut().for_each(|v| *v = v.max(0.0));

    let mut z = [0.0; GATES];
    bias(p, l.bl, &mut z);
    matvec_acc(p, l.wx, &h2, &mut z);
    matvec_acc(p, l.wh, &state.h, &mut z);
    let tape_gates = lstm_gates(&z);

    let mut next = PolicyState::default();
    let mut tanh_c = [0.0; LSTM];
    for k in 0..LSTM {
        let (i, f, g, o) = (tape_gates[k], tape_gates[LSTM + k], tape_gates[2 * LSTM + k], tape_gates[3 * LSTM + k]);
        next.c[k] = f * state.c[k] + i * g;
        tanh_c[k] = libm::tanh(next.c[k]);
        next.h[k] = o * tanh_c[k];
    }
    let mut out = [0.0; 1];
    bias(p, l.b3, &mut out);
    matvec_acc(p, l.w3, &next.h, &mut out);
    let raw = out[0];
    if !raw.is_finite() {
        return Err(PolicyError::NonFinite("policy output"));
    }
    let tape = StepTape {
        x: obs.to_vec(),
        h1,
        h2,
        h_prev: state.h,
        c_prev: state.c,
        gates: tape_gates,
        c: next.c,
        tanh_c,
        raw,
    };
    Ok((raw, next, tape))
}

pub(crate) fn lstm_gates(z: &[f64; GATES]) -> [f64; GATES] {
    let mut g = [0.0; GATES];
    for k in 0..LSTM {
        g[k] = sigmoid(z[k]);
        g[LSTM + k] = sigmoid(z[LSTM + k]);
        g[2 * LSTM + k] = libm::tanh(z[2 * LSTM + k]);
        g[3 * LSTM + k] = sigmoid(z[3 * LSTM + k]);
    }
    g
}

/// Accumulate `upstream * d action_T / d params` into `grads`, where `T` is the
/// last step of `window`. Earlier tapes in `window` must be the consecutive
/// steps leading up to it; the recurrent state entering `window[0]` is held
/// constant (truncated backpropagation through time).
pub fn backward_window<T: Borrow<StepTape>>(p: &PolicyParams, window: &[T], upstream: f64, grads: &mut [f64]) {
    assert_eq!(grads.len(), p.len(), "gradient buffer has the wrong size");
    let Some(last) = window.last().map(Borrow::borrow) else {
        return;
    };
    if upstream == 0.0 {
        return;
    }
    let l = &p.layout;
    let d_raw = upstream * action_grad(last.raw);

    let w3 = p.tensor(l.w3);
    let mut dh = [0.0; LSTM];
    for k in 0..LSTM {
        grads[l.w3.offset + k] += d_raw * last_h(last, k);
        dh[k] = d_raw * w3[k] as f64;
    }
    grads[l.b3.offset] += d_raw;

    let mut dc = [0.0; LSTM];
    let wx = p.tensor(l.wx);
    let wh = p.tensor(l.wh);
    let w2 = p.tensor(l.w2);
    for tape in window.iter().rev().map(Borrow::borrow) {
        let mut dz = [0.0; GATES];
        let mut dc_prev = [0.0; LSTM];
        for k in 0..LSTM {
            let (i, f, g, o) = (tape.gates[k], tape.gates[LSTM + k], tape.gates[2 * LSTM + k], tape.gates[3 * LSTM + k]);
            let tc = tape.tanh_c[k];
            let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
            let d_o = dh[k] * tc;
            dz[k] = dck * g * i * (1.0 - i);
            dz[LSTM + k] = dck * tape.c_prev[k] * f * (1.0 - f);
            dz[2 * LSTM + k] = dck * i * (1.0 - g * g);
            dz[3 * LSTM + k] = d_o * o * (1.0 - o);
            dc_prev[k] = dck * f;
        }
        let mut dh2 = [0.0; HIDDEN2];
        let mut dh_prev = [0.0; LSTM];
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            grads[l.bl.offset + r] += dzr;
            let gx = &mut grads[l.wx.offset + r * HIDDEN2..l.wx.offset + (r + 1) * HIDDEN2];
            for (c, gv) in gx.iter_mut().enumerate() {
                *gv += dzr * tape.h2[c];
            }
            let gh = &mut grads[l.wh.offset + r * LSTM..l.wh.offset + (r + 1) * LSTM];
            for (c, gv) in gh.iter_mut().enumerate() {
                *gv += dzr * tape.h_prev[c];
            }
            for c in 0..HIDDEN2 {
                dh2[c] += dzr * wx[r * HIDDEN2 + c] as f64;
            }
            for c in 0..LSTM {
                dh_prev[c] += dzr * wh[r * LSTM + c] as f64;
            }
        }

        let mut dh1 = [0.0; HIDDEN1];
        for r in 0..HIDDEN2 {
            if tape.h2[r] <= 0.0 {
                continue;
            }
            let d = dh2[r];
            grads[l.b2.offset + r] += d;
            for c in 0..HIDDEN1 {
                grads[l.w2.offset + r * HIDDEN1 + c] += d * tape.h1[c];
                dh1[c] += d * w2[r * HIDDEN1 + c] as f64;
            }
        }
        let input = l.input;
        for r in 0..HIDDEN1 {
            if tape.h1[r] <= 0.0 {
                continue;
            }
            let d = dh1[r];
            grads[l.b1.offset + r] += d;
            for c in 0..input {
                grads[l.w1.offset + r * input + c] += d * tape.x[c];
            }
        }
        dh = dh_prev;
        dc = dc_prev;
    }
}

fn last_h(t: &StepTape, k: usize) -> f64 {
    t.gates[3 * LSTM + k] * t.tanh_c[k]
}

/// `upstream * d action / d params` for a single step.
pub fn backward(p: &PolicyParams, tape: &StepTape, upstream: f64) -> Vec<f64> {
    let mut g = alloc::vec![0.0; p.len()];
    backward_window(p, core::slice::from_ref(tape), upstream, &mut g);
    g
}
