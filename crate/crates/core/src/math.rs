//! Small numeric helpers shared by the model code.

use ndarray::{Array1, ArrayView1};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid_vec(x: ArrayView1<'_, f64>) -> Array1<f64> {
    x.mapv(sigmoid)
}

/// Bernoulli entropy of a single unit with mean `p`, in nats.
#[inline]
pub fn bernoulli_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::default();
    for v in values {
        acc.push(v);
    }
    acc.value()
}

/// Writes the bits of `index` (least significant first) into `out` as 0/1 floats.
pub fn fill_bits(index: u64, out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = ((index >> i) & 1) as f64;
    }
}

pub fn bits_of(index: u64, len: usize) -> Array1<f64> {
    let mut out = Array1::zeros(len);
    fill_bits(index, out.as_slice_mut().expect("contiguous"));
    out
}

/// Inverse of [`fill_bits`] for a 0/1 vector.
pub fn index_of_bits(bits: ArrayView1<'_, f64>) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| if b > 0.5 { acc | (1 << i) } else { acc })
}
