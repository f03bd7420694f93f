use alloc::vec::Vec;

use rand::Rng;

use crate::error::PolicyError;

pub const HIDDEN1: usize = 32;
pub const HIDDEN2: usize = 16;
pub const LSTM: usize = 16;
/// Gate rows in LSTM weight matrices, ordered input, forget, cell, output.
pub const GATES: usize = 4 * LSTM;

/// A named tensor inside the flat parameter vector. Matrices are row-major
/// `[rows, cols]` with `rows` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of every tensor for a given input width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub input: usize,
    pub w1: TensorSpec,
    pub b1: TensorSpec,
    pub w2: TensorSpec,
    pub b2: TensorSpec,
    pub wx: TensorSpec,
    pub wh: TensorSpec,
    pub bl: TensorSpec,
    pub w3: TensorSpec,
    pub b3: TensorSpec,
}

impl Layout {
    pub fn new(input: usize) -> Self {
        let mut off = 0;
        let mut t = |name, rows, cols| {
            let s = TensorSpec { name, rows, cols, offset: off };
            off += rows * cols;
            s
        };
        Layout {
            input,
            w1: t("fc1.weight", HIDDEN1, input),
            b1: t("fc1.bias", HIDDEN1, 1),
            w2: t("fc2.weight", HIDDEN2, HIDDEN1),
            b2: t("fc2.bias", HIDDEN2, 1),
            wx: t("lstm.weight_ih", GATES, HIDDEN2),
            wh: t("lstm.weight_hh", GATES, LSTM),
            bl: t("lstm.bias", GATES, 1),
            w3: t("head.weight", 1, LSTM),
            b3: t("head.bias", 1, 1),
        }
    }

    /// Tensors in declaration order.
    pub fn tensors(&self) -> [TensorSpec; 9] {
        [self.w1, self.b1, self.w2, self.b2, self.wx, self.wh, self.bl, self.w3, self.b3]
    }

    pub fn total(&self) -> usize {
        self.b3.offset + self.b3.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub layout: Layout,
    pub data: Vec<f32>,
}

impl PolicyParams {
    pub fn zeros(input: usize) -> Self {
        let layout = Layout::new(input);
        PolicyParams {
            data: alloc::vec![0.0; layout.total()],
            layout,
        }
    }

    /// Uniform in `[-scale, scale]`.
    pub fn init_uniform<R: Rng + ?Sized>(input: usize, scale: f32, rng: &mut R) -> Self {
        let mut p = Self::zeros(input);
        for w in p.data.iter_mut() {
            *w = rng.gen_range(-scale..=scale);
        }
        p
    }

    pub fn from_data(input: usize, data: Vec<f32>) -> Result<Self, PolicyError> {
        let layout = Layout::new(input);
        if data.len() != layout.total() {
            return Err(PolicyError::ShapeMismatch {
                expected: layout.total(),
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite("parameters"));
        }
        Ok(PolicyParams { layout, data })
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, t: TensorSpec) -> &[f32] {
        &self.data[t.range()]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self, t: TensorSpec) -> f64 {
        libm::sqrt(self.tensor(t).iter().map(|&v| v as f64 * v as f64).sum())
    }
}
