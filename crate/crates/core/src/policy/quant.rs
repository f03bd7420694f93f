//! Int8 mirror of the policy: per-tensor symmetric weights, activations
//! quantized on the fly, int32 accumulation, then dequantization before each
//! nonlinearity and requantization for the next product.

use alloc::vec::Vec;

use crate::error::PolicyError;
use crate::policy::net::{lstm_gates, PolicyState};
use crate::policy::params::{PolicyParams, TensorSpec, GATES, HIDDEN1, HIDDEN2, LSTM};

#[derive(Debug, Clone, PartialEq)]
pub struct QTensor {
    pub rows: usize,
    pub cols: usize,
    pub scale: f32,
    pub data: Vec<i8>,
}

/// Symmetric per-tensor scale; an all-zero tensor gets scale 1.
pub fn symmetric_scale(values: impl Iterator<Item = f64>) -> f64 {
    let m = values.fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        1.0
    } else {
        m / 127.0
    }
}

fn q8(v: f64, scale: f64) -> i8 {
    libm::round(v / scale).clamp(-127.0, 127.0) as i8
}

impl QTensor {
    pub fn quantize(values: &[f32], rows: usize, cols: usize) -> Self {
        let scale = symmetric_scale(values.iter().map(|&v| v as f64));
        QTensor {
            rows,
            cols,
            scale: scale as f32,
            data: values.iter().map(|&v| q8(v as f64, scale)).collect(),
        }
    }

    pub fn dequantize(&self) -> Vec<f32> {
        self.data.iter().map(|&q| q as f32 * self.scale).collect()
    }

    /// `y += dequant(W * quant(x))` with int32 accumulation.
    fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        let sx = symmetric_scale(x.iter().copied());
        let qx: Vec<i32> = x.iter().map(|&v| q8(v, sx) as i32).collect();
        let s = self.scale as f64 * sx;
        for (r, yr) in y.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let acc: i32 = row.iter().zip(&qx).map(|(&w, &xv)| w as i32 * xv).sum();
            *yr += acc as f64 * s;
        }
    }
}

/// Int8 weights with float biases.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPolicy {
    pub input: usize,
    pub w1: QTensor,
    pub b1: Vec<f32>,
    pub w2: QTensor,
    pub b2: Vec<f32>,
    pub wx: QTensor,
    pub wh: QTensor,
    pub bl: Vec<f32>,
    pub w3: QTensor,
    pub b3: Vec<f32>,
}

impl QuantizedPolicy {
    pub fn quantize(p: &PolicyParams) -> Result<Self, PolicyError> {
        if !p.is_finite() {
            return Err(PolicyError::NonFinite("parameters"));
        }
        let l = &p.layout;
        let q = |t: TensorSpec| QTensor::quantize(p.tensor(t), t.rows, t.cols);
        let b = |t: TensorSpec| p.tensor(t).to_vec();
        Ok(QuantizedPolicy {
            input: l.input,
            w1: q(l.w1),
            b1: b(l.b1),
            w2: q(l.w2),
            b2: b(l.b2),
            wx: q(l.wx),
            wh: q(l.wh),
            bl: b(l.bl),
            w3: q(l.w3),
            b3: b(l.b3),
        })
    }

    /// Weight tensors in declaration order, for serialization.
    pub fn weights(&self) -> [&QTensor; 5] {
        [&self.w1, &self.w2, &self.wx, &self.wh, &self.w3]
    }

    pub fn forward(&self, state: &PolicyState, obs: &[f64]) -> Result<(f64, PolicyState), PolicyError> {
        if obs.len() != self.input {
            return Err(PolicyError::ShapeMismatch {
                expected: self.input,
                got: obs.len(),
            });
        }
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite("observation"));
        }
        let fill = |b: &[f32], y: &mut [f64]| y.iter_mut().zip(b).for_each(|(y, &b)| *y = b as f64);

        let mut h1 = [0.0; HIDDEN1];
        fill(&self.b1, &mut h1);
        self.w1.matvec_acc(obs, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.max(0.0));

        let mut h2 = [0.0; HIDDEN2];
        fill(&self.b2, &mut h2);
        self.w2.matvec_acc(&h1, &mut h2);
        h2.iter_mut().for_each(|v| *v = v.max(0.0));

        let mut z = [0.0; GATES];
        fill(&self.bl, &mut z);
        self.wx.matvec_acc(&h2, &mut z);
        self.wh.matvec_acc(&state.h, &mut z);
        let g = lstm_gates(&z);

        let mut next = PolicyState::default();
        for k in 0..LSTM {
            next.c[k] = g[LSTM + k] * state.c[k] + g[k] * g[2 * LSTM + k];
            next.h[k] = g[3 * LSTM + k] * libm::tanh(next.c[k]);
        }
        let mut out = [0.0; 1];
        fill(&self.b3, &mut out);
        self.w3.matvec_acc(&next.h, &mut out);
        if !out[0].is_finite() {
            return Err(PolicyError::NonFinite("policy output"));
        }
        Ok((out[0], next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::net::forward;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_within_half_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PolicyParams::init_uniform(4, 0.3, &mut rng);
        let q = QuantizedPolicy::quantize(&p).unwrap();
        let l = p.layout;
        for (t, qt) in [l.w1, l.w2, l.wx, l.wh, l.w3].into_iter().zip(q.weights()) {
            let back = qt.dequantize();
            for (a, b) in p.tensor(t).iter().zip(&back) {
                assert!((a - b).abs() <= qt.scale / 2.0 + 1e-7);
            }
        }
    }

    #[test]
    fn zero_tensor_gets_unit_scale() {
        let t = QTensor::quantize(&[0.0; 6], 2, 3);
        assert_eq!(t.scale, 1.0);
        assert!(t.data.iter().all(|&v| v == 0));
    }

    #[test]
    fn zero_input_follows_bias_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = PolicyParams::zeros(4);
        for t in [p.layout.b1, p.layout.b2, p.layout.bl, p.layout.b3] {
            for i in t.range() {
                p.data[i] = rng.gen_range(-0.5..0.5);
            }
        }
        let q = QuantizedPolicy::quantize(&p).unwrap();
        let s = PolicyState::default();
        let (rf, _, _) = forward(&p, &s, &[0.0; 4]).unwrap();
        let (rq, _) = q.forward(&s, &[0.0; 4]).unwrap();
        assert_eq!(rf, rq);
        assert_eq!(rf, p.data[p.layout.b3.offset] as f64);
    }

    #[test]
    fn quantized_tracks_float() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PolicyParams::init_uniform(4, 0.3, &mut rng);
        let q = QuantizedPolicy::quantize(&p).unwrap();
        let mut s = PolicyState::default();
        let mut sq = PolicyState::default();
        for _ in 0..50 {
            let obs: [f64; 4] = core::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let (rf, ns, _) = forward(&p, &s, &obs).unwrap();
            let (rq, nsq) = q.forward(&sq, &obs).unwrap();
            assert!((rf - rq).abs() < 0.02, "{rf} {rq}");
            s = ns;
            sq = nsq;
        }
    }
}
