//! Restricted Boltzmann Machine primitives.
//!
//! Energy `E(v, h) = -vᵀWh - bᵀv - cᵀh` over binary visible `v` (length `J`)
//! and hidden `h` (length `H`), with `W` stored as a `J × H` matrix.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::math::{fill_bits, sigmoid, softplus, LogSumExp};
use crate::rng::{rng_from_seed, ModelRng};
use crate::{Error, Result};

/// Largest `J + H` for which exact enumeration is attempted.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// `J × H` interaction weights.
    pub weights: Array2<f64>,
    /// Visible bias `b`, length `J`.
    pub visible_bias: Array1<f64>,
    /// Hidden bias `c`, length `H`.
    pub hidden_bias: Array1<f64>,
}

impl RbmParams {
    pub fn new(weights: Array2<f64>, visible_bias: Array1<f64>, hidden_bias: Array1<f64>) -> Result<Self> {
        let (j, h) = weights.dim();
        check_dim("visible bias", j, visible_bias.len())?;
        check_dim("hidden bias", h, hidden_bias.len())?;
        let p = Self {
            weights,
            visible_bias,
            hidden_bias,
        };
        if !p.is_finite() {
            return Err(Error::InvalidConfig("RBM parameters must be finite".into()));
        }
        Ok(p)
    }

    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Self {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    /// Gaussian weights with standard deviation `std`, zero biases.
    pub fn random(visible: usize, hidden: usize, std: f64, rng: &mut ModelRng) -> Self {
        let mut p = Self::zeros(visible, hidden);
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("positive std");
            p.weights.mapv_inplace(|_| normal.sample(rng));
        }
        p
    }

    pub fn visible_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|x| x.is_finite())
            && self.visible_bias.iter().all(|x| x.is_finite())
            && self.hidden_bias.iter().all(|x| x.is_finite())
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { what, expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CdConfig {
    /// Gibbs steps per update.
    pub k: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_init_std: f64,
    pub seed: u64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Initialise the visible bias to the logit of the empirical unit means.
    pub init_visible_from_data: bool,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            k: 1,
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 10,
            weight_init_std: 0.01,
            seed: 0,
            momentum: 0.0,
            weight_decay: 0.0,
            init_visible_from_data: false,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("CD k must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning rate must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if !(self.weight_init_std >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(
                "init std and weight decay must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

pub fn energy(v: ArrayView1<'_, f64>, h: ArrayView1<'_, f64>, params: &RbmParams) -> Result<f64> {
    check_dim("visible vector", params.visible_dim(), v.len())?;
    check_dim("hidden vector", params.hidden_dim(), h.len())?;
    Ok(-v.dot(&params.weights.dot(&h)) - params.visible_bias.dot(&v) - params.hidden_bias.dot(&h))
}

/// `P(h_j = 1 | v) = σ(c_j + (Wᵀv)_j)`.
pub fn hidden_conditional(v: ArrayView1<'_, f64>, params: &RbmParams) -> Result<Array1<f64>> {
    check_dim("visible vector", params.visible_dim(), v.len())?;
    Ok((params.weights.t().dot(&v) + &params.hidden_bias).mapv(sigmoid))
}

/// `P(v_i = 1 | h) = σ(b_i + (Wh)_i)`.
pub fn visible_conditional(h: ArrayView1<'_, f64>, params: &RbmParams) -> Result<Array1<f64>> {
    check_dim("hidden vector", params.hidden_dim(), h.len())?;
    Ok((params.weights.dot(&h) + &params.visible_bias).mapv(sigmoid))
}

/// `F(v) = -bᵀv - Σ_j softplus(c_j + (Wᵀv)_j)`, i.e. `-log Σ_h exp(-E(v, h))`.
pub fn free_energy_rbm(v: ArrayView1<'_, f64>, params: &RbmParams) -> Result<f64> {
    check_dim("visible vector", params.visible_dim(), v.len())?;
    let pre = params.weights.t().dot(&v) + &params.hidden_bias;
    Ok(-params.visible_bias.dot(&v) - pre.iter().map(|&x| softplus(x)).sum::<f64>())
}

fn hidden_probs_batch(v: &Array2<f64>, params: &RbmParams) -> Array2<f64> {
    (v.dot(&params.weights) + &params.hidden_bias).mapv(sigmoid)
}

fn visible_probs_batch(h: &Array2<f64>, params: &RbmParams) -> Array2<f64> {
    (h.dot(&params.weights.t()) + &params.visible_bias).mapv(sigmoid)
}

pub(crate) fn bernoulli<R: Rng + ?Sized>(probs: &Array2<f64>, rng: &mut R) -> Array2<f64> {
    probs.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

pub(crate) fn bernoulli_vec<R: Rng + ?Sized>(probs: &Array1<f64>, rng: &mut R) -> Array1<f64> {
    probs.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

/// Log-likelihood gradient estimate, averaged over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
}

impl RbmGradient {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Self {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    /// Flattened `[W (row-major); b; c]`, handy for inner products.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdStats {
    /// Mean squared difference between the batch and its mean reconstruction.
    pub reconstruction_error: f64,
    pub batch_size: usize,
}

/// CD-k gradient estimate.
///
/// Positive statistics use the data-clamped hidden means. The chain samples
/// binary hidden and visible states, except on the last visible step where the
/// mean reconstruction is used; the negative hidden statistics are the means
/// given that reconstruction.
pub fn cd_gradient(
    params: &RbmParams,
    batch: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut ModelRng,
) -> Result<(RbmGradient, CdStats)> {
    let n = batch.nrows();
    if n == 0 {
        return Err(Error::Empty("CD batch"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("CD k must be at least 1".into()));
    }
    check_dim("batch width", params.visible_dim(), batch.ncols())?;
    let v0 = batch.to_owned();
    let ph0 = hidden_probs_batch(&v0, params);
    let mut h = bernoulli(&ph0, rng);
    let mut vk = Array2::zeros(v0.dim());
    let mut phk = ph0.clone();
    for step in 1..=k {
        let pv = visible_probs_batch(&h, params);
        vk = if step == k { pv } else { bernoulli(&pv, rng) };
        phk = hidden_probs_batch(&vk, params);
        if step < k {
            h = bernoulli(&phk, rng);
        }
    }
    let scale = 1.0 / n as f64;
    let grad = RbmGradient {
        weights: (v0.t().dot(&ph0) - vk.t().dot(&phk)) * scale,
        visible_bias: (&v0 - &vk).sum_axis(Axis(0)) * scale,
        hidden_bias: (&ph0 - &phk).sum_axis(Axis(0)) * scale,
    };
    let diff = &v0 - &vk;
    let stats = CdStats {
        reconstruction_error: diff.mapv(|x| x * x).mean().unwrap_or(0.0),
        batch_size: n,
    };
    Ok((grad, stats))
}

fn apply_step(params: &RbmParams, step: &RbmGradient) -> RbmParams {
    RbmParams {
        weights: &params.weights + &step.weights,
        visible_bias: &params.visible_bias + &step.visible_bias,
        hidden_bias: &params.hidden_bias + &step.hidden_bias,
    }
}

/// One plain CD-k ascent step (weight decay honoured, momentum ignored).
pub fn cd_update(
    params: &RbmParams,
    batch: ArrayView2<'_, f64>,
    cfg: &CdConfig,
    rng: &mut ModelRng,
) -> Result<(RbmParams, CdStats)> {
    cfg.validate()?;
    let (grad, stats) = cd_gradient(params, batch, cfg.k, rng)?;
    let lr = cfg.learning_rate;
    let step = RbmGradient {
        weights: (grad.weights - &params.weights * cfg.weight_decay) * lr,
        visible_bias: grad.visible_bias * lr,
        hidden_bias: grad.hidden_bias * lr,
    };
    Ok((apply_step(params, &step), stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub reconstruction_error: f64,
}

fn logit_clamped(p: f64) -> f64 {
    let p = p.clamp(1e-3, 1.0 - 1e-3);
    (p / (1.0 - p)).ln()
}

/// Trains an RBM with CD-k over shuffled mini-batches.
///
/// Returns the trained parameters and one log entry per epoch. The
/// reconstruction error of epoch 0 is measured at the initial parameters.
pub fn train_rbm(data: ArrayView2<'_, f64>, hidden: usize, cfg: &CdConfig) -> Result<(RbmParams, Vec<EpochLog>)> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut params = RbmParams::random(data.ncols(), hidden, cfg.weight_init_std, &mut rng);
    if cfg.init_visible_from_data && data.nrows() > 0 {
        let means = data.mean_axis(Axis(0)).expect("nonempty");
        params.visible_bias = means.mapv(logit_clamped);
    }
    let mut log = vec![EpochLog {
        epoch: 0,
        reconstruction_error: reconstruction_error(data, &params),
    }];
    if cfg.epochs == 0 || data.nrows() == 0 {
        return Ok((params, log));
    }
    let mut velocity = RbmGradient::zeros(data.ncols(), hidden);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    for epoch in 1..=cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.select(Axis(0), chunk);
            let (grad, _) = cd_gradient(&params, batch.view(), cfg.k, &mut rng)?;
            let lr = cfg.learning_rate;
            let m = cfg.momentum;
            velocity.weights = &velocity.weights * m + (grad.weights - &params.weights * cfg.weight_decay) * lr;
            velocity.visible_bias = &velocity.visible_bias * m + grad.visible_bias * lr;
            velocity.hidden_bias = &velocity.hidden_bias * m + grad.hidden_bias * lr;
            params = apply_step(&params, &velocity);
        }
        log.push(EpochLog {
            epoch,
            reconstruction_error: reconstruction_error(data, &params),
        });
    }
    Ok((params, log))
}

/// Mean squared error of the deterministic mean-field reconstruction
/// `σ(b + W σ(c + Wᵀv))`.
pub fn reconstruction_error(data: ArrayView2<'_, f64>, params: &RbmParams) -> f64 {
    if data.nrows() == 0 {
        return 0.0;
    }
    let v = data.to_owned();
    let recon = visible_probs_batch(&hidden_probs_batch(&v, params), params);
    (&v - &recon).mapv(|x| x * x).mean().unwrap_or(0.0)
}

fn guard(units: usize) -> Result<()> {
    if units > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            units,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// `log Z` by enumerating whichever layer is smaller and marginalising the
/// other analytically.
pub fn log_partition(params: &RbmParams) -> Result<f64> {
    let (j, h) = (params.visible_dim(), params.hidden_dim());
    guard(j + h)?;
    let mut acc = LogSumExp::default();
    if j <= h {
        let mut v = Array1::zeros(j);
        for idx in 0..(1u64 << j) {
            fill_bits(idx, v.as_slice_mut().expect("contiguous"));
            acc.push(-free_energy_rbm(v.view(), params)?);
        }
    } else {
        let mut hv = Array1::zeros(h);
        for idx in 0..(1u64 << h) {
            fill_bits(idx, hv.as_slice_mut().expect("contiguous"));
            let pre = params.weights.dot(&hv) + &params.visible_bias;
            acc.push(params.hidden_bias.dot(&hv) + pre.iter().map(|&x| softplus(x)).sum::<f64>());
        }
    }
    Ok(acc.value())
}

/// Mean of `log P(v)` over the rows of `data`, with `Z` by enumeration.
pub fn exact_log_likelihood(data: ArrayView2<'_, f64>, params: &RbmParams) -> Result<f64> {
    if data.nrows() == 0 {
        return Err(Error::Empty("log-likelihood dataset"));
    }
    check_dim("dataset width", params.visible_dim(), data.ncols())?;
    let log_z = log_partition(params)?;
    let mut total = 0.0;
    for row in data.rows() {
        total += -free_energy_rbm(row, params)? - log_z;
    }
    Ok(total / data.nrows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain {
    pub v: Array1<f64>,
    /// Last hidden sample; `None` when no step was taken.
    pub h: Option<Array1<f64>>,
    pub steps: usize,
    /// Mean of the visible states visited after each step (the initial state
    /// when `steps == 0`).
    pub visible_means: Array1<f64>,
}

/// Block Gibbs chain `h ~ P(h|v)`, `v ~ P(v|h)` repeated `steps` times.
pub fn gibbs_chain(params: &RbmParams, init_v: ArrayView1<'_, f64>, steps: usize, seed: u64) -> Result<GibbsChain> {
    gibbs_chain_observe(params, init_v, steps, seed, |_, _| {})
}

/// Like [`gibbs_chain`], calling `observe(v, h)` after every step.
pub fn gibbs_chain_observe<F>(
    params: &RbmParams,
    init_v: ArrayView1<'_, f64>,
    steps: usize,
    seed: u64,
    mut observe: F,
) -> Result<GibbsChain>
where
    F: FnMut(&Array1<f64>, &Array1<f64>),
{
    check_dim("initial visible vector", params.visible_dim(), init_v.len())?;
    let mut rng = rng_from_seed(seed);
    let mut v = init_v.to_owned();
    let mut h = None;
    let mut sum = Array1::zeros(v.len());
    for _ in 0..steps {
        let hs = bernoulli_vec(&hidden_conditional(v.view(), params)?, &mut rng);
        v = bernoulli_vec(&visible_conditional(hs.view(), params)?, &mut rng);
        sum += &v;
        observe(&v, &hs);
        h = Some(hs);
    }
    let visible_means = if steps == 0 { v.clone() } else { sum / steps as f64 };
    Ok(GibbsChain {
        v,
        h,
        steps,
        visible_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{bits_of, index_of_bits, log_sum_exp};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand_distr::Uniform;

    fn random_params(j: usize, h: usize, scale: f64, seed: u64) -> RbmParams {
        let mut rng = rng_from_seed(seed);
        let u = Uniform::new(-scale, scale).unwrap();
        RbmParams {
            weights: Array2::from_shape_fn((j, h), |_| u.sample(&mut rng)),
            visible_bias: Array1::from_shape_fn(j, |_| u.sample(&mut rng)),
            hidden_bias: Array1::from_shape_fn(h, |_| u.sample(&mut rng)),
        }
    }

    /// Brute-force `-log Σ_h exp(-E(v, h))`.
    fn enumerated_free_energy(v: ArrayView1<'_, f64>, p: &RbmParams) -> f64 {
        let h = p.hidden_dim();
        -log_sum_exp((0..1u64 << h).map(|i| -energy(v, bits_of(i, h).view(), p).unwrap()))
    }

    /// Exact model distribution over visible states by full joint enumeration.
    fn enumerated_visible_marginal(p: &RbmParams) -> Vec<f64> {
        let (j, h) = (p.visible_dim(), p.hidden_dim());
        let logs: Vec<f64> = (0..1u64 << j)
            .map(|vi| {
                let v = bits_of(vi, j);
                log_sum_exp((0..1u64 << h).map(|hi| -energy(v.view(), bits_of(hi, h).view(), p).unwrap()))
            })
            .collect();
        let log_z = log_sum_exp(logs.iter().copied());
        logs.iter().map(|l| (l - log_z).exp()).collect()
    }

    /// Exact gradient of the mean log-likelihood by enumeration.
    fn exact_gradient(data: &Array2<f64>, p: &RbmParams) -> RbmGradient {
        let (j, h) = (p.visible_dim(), p.hidden_dim());
        let mut g = RbmGradient::zeros(j, h);
        for row in data.rows() {
            let ph = hidden_conditional(row, p).unwrap();
            for a in 0..j {
                for b in 0..h {
                    g.weights[[a, b]] += row[a] * ph[b];
                }
            }
            g.visible_bias += &row;
            g.hidden_bias += &ph;
        }
        let n = data.nrows() as f64;
        g.weights /= n;
        g.visible_bias /= n;
        g.hidden_bias /= n;
        let marginal = enumerated_visible_marginal(p);
        for (vi, pv) in marginal.iter().enumerate() {
            let v = bits_of(vi as u64, j);
            let ph = hidden_conditional(v.view(), p).unwrap();
            for a in 0..j {
                for b in 0..h {
                    g.weights[[a, b]] -= pv * v[a] * ph[b];
                }
            }
            g.visible_bias.scaled_add(-pv, &v);
            g.hidden_bias.scaled_add(-pv, &ph);
        }
        g
    }

    #[test]
    fn energy_examples() {
        let p = random_params(3, 2, 1.0, 1);
        assert_eq!(
            energy(Array1::zeros(3).view(), Array1::zeros(2).view(), &p).unwrap(),
            0.0
        );

        let mut p = RbmParams::zeros(3, 2);
        p.visible_bias = array![0.3, -1.2, 0.7];
        assert_abs_diff_eq!(
            energy(array![0.0, 1.0, 0.0].view(), array![1.0, 1.0].view(), &p).unwrap(),
            1.2
        );

        let p = RbmParams::new(array![[1.0, 0.0], [0.0, 1.0]], Array1::zeros(2), Array1::zeros(2)).unwrap();
        assert_eq!(
            energy(array![1.0, 1.0].view(), array![1.0, 1.0].view(), &p).unwrap(),
            -2.0
        );
        assert!(matches!(
            energy(array![1.0].view(), array![1.0, 1.0].view(), &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conditional_examples() {
        let mut p = RbmParams::zeros(2, 3);
        assert_eq!(
            hidden_conditional(array![1.0, 0.0].view(), &p).unwrap(),
            array![0.5, 0.5, 0.5]
        );
        assert_eq!(
            visible_conditional(array![1.0, 0.0, 1.0].view(), &p).unwrap(),
            array![0.5, 0.5]
        );
        p.hidden_bias = array![0.0, 2.0, -1.0];
        p.visible_bias = array![1.0, -3.0];
        let hc = hidden_conditional(array![1.0, 1.0].view(), &p).unwrap();
        let vc = visible_conditional(array![0.0, 1.0, 1.0].view(), &p).unwrap();
        for (a, &c) in hc.iter().zip(&p.hidden_bias) {
            assert_abs_diff_eq!(*a, sigmoid(c));
        }
        for (a, &b) in vc.iter().zip(&p.visible_bias) {
            assert_abs_diff_eq!(*a, sigmoid(b));
        }

        let p = RbmParams::new(array![[2.0]], array![-1.0], array![-1.0]).unwrap();
        assert_abs_diff_eq!(
            hidden_conditional(array![1.0].view(), &p).unwrap()[0],
            0.731_058_578_630_004_9,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            visible_conditional(array![1.0].view(), &p).unwrap()[0],
            0.731_058_578_630_004_9,
            epsilon = 1e-12
        );
        assert!(hidden_conditional(array![1.0, 0.0].view(), &p).is_err());
    }

    #[test]
    fn free_energy_examples() {
        let p = RbmParams::zeros(4, 5);
        assert_abs_diff_eq!(
            free_energy_rbm(array![1.0, 0.0, 1.0, 1.0].view(), &p).unwrap(),
            -5.0 * 2f64.ln(),
            epsilon = 1e-14
        );
        let p = RbmParams::new(array![[1.0]], array![0.0], array![0.0]).unwrap();
        assert_abs_diff_eq!(
            free_energy_rbm(array![1.0].view(), &p).unwrap(),
            -1.313_261_687_518_222_8,
            epsilon = 1e-12
        );
        for seed in 0..10 {
            let p = random_params(3, 3, 2.0, seed);
            for vi in 0..8 {
                let v = bits_of(vi, 3);
                assert_abs_diff_eq!(
                    free_energy_rbm(v.view(), &p).unwrap(),
                    enumerated_free_energy(v.view(), &p),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn hidden_conditional_matches_enumerated_posterior() {
        let p = random_params(3, 3, 1.5, 77);
        for vi in 0..8 {
            let v = bits_of(vi, 3);
            let f = enumerated_free_energy(v.view(), &p);
            let mut marg = Array1::<f64>::zeros(3);
            for hi in 0..8u64 {
                let h = bits_of(hi, 3);
                let post = (-energy(v.view(), h.view(), &p).unwrap() + f).exp();
                marg.scaled_add(post, &h);
            }
            let hc = hidden_conditional(v.view(), &p).unwrap();
            for (a, b) in marg.iter().zip(&hc) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cd_update_examples() {
        let mut rng = rng_from_seed(3);
        let p = random_params(4, 3, 0.5, 5);
        let batch = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 1.0]];
        let cfg = CdConfig {
            learning_rate: 0.0,
            ..CdConfig::default()
        };
        let (next, stats) = cd_update(&p, batch.view(), &cfg, &mut rng).unwrap();
        assert_eq!(next, p);
        assert_eq!(stats.batch_size, 2);

        // Zero weights and hidden bias make the hidden means constant; a
        // batch at σ(b) reconstructs itself, so positive and negative
        // statistics coincide.
        let mut p = RbmParams::zeros(2, 3);
        p.visible_bias = array![0.4, -0.8];
        let v = p.visible_bias.mapv(sigmoid);
        let batch = v.clone().insert_axis(Axis(0));
        let cfg = CdConfig {
            learning_rate: 1.0,
            ..CdConfig::default()
        };
        let (next, _) = cd_update(&p, batch.view(), &cfg, &mut rng).unwrap();
        for x in &next.weights {
            assert_abs_diff_eq!(*x, 0.0, epsilon = 1e-15);
        }

        let empty = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            cd_update(&p, empty.view(), &cfg, &mut rng),
            Err(Error::Empty(_))
        ));
        let bad = CdConfig {
            k: 0,
            ..CdConfig::default()
        };
        assert!(cd_update(&p, batch.view(), &bad, &mut rng).is_err());
    }

    #[test]
    fn cd1_direction_agrees_with_exact_gradient() {
        let p = random_params(4, 3, 0.5, 21);
        let data = array![
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 1.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 0.0]
        ];
        let exact = exact_gradient(&data, &p).flatten();
        let mut rng = rng_from_seed(99);
        let mut mean = vec![0.0; exact.len()];
        for _ in 0..1_000 {
            let (g, _) = cd_gradient(&p, data.view(), 1, &mut rng).unwrap();
            for (m, x) in mean.iter_mut().zip(g.flatten()) {
                *m += x / 1_000.0;
            }
        }
        let dot: f64 = mean.iter().zip(&exact).map(|(a, b)| a * b).sum();
        assert!(dot > 0.0, "inner product {dot}");
    }

    #[test]
    fn exact_gradient_ascent_increases_likelihood() {
        let mut p = random_params(4, 3, 0.1, 8);
        let data = array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 0.0, 1.0]];
        let mut last = exact_log_likelihood(data.view(), &p).unwrap();
        for _ in 0..30 {
            let g = exact_gradient(&data, &p);
            p = apply_step(
                &p,
                &RbmGradient {
                    weights: g.weights * 0.2,
                    visible_bias: g.visible_bias * 0.2,
                    hidden_bias: g.hidden_bias * 0.2,
                },
            );
            let ll = exact_log_likelihood(data.view(), &p).unwrap();
            assert!(ll > last, "{ll} <= {last}");
            last = ll;
        }
    }

    #[test]
    fn log_likelihood_examples() {
        let p = RbmParams::zeros(5, 3);
        let data = array![[1.0, 0.0, 0.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0, 0.0]];
        assert_abs_diff_eq!(
            exact_log_likelihood(data.view(), &p).unwrap(),
            (2f64.powi(-5)).ln(),
            epsilon = 1e-12
        );

        let mut strong = RbmParams::zeros(3, 1);
        strong.visible_bias = array![8.0, -8.0, 8.0];
        let one = array![[1.0, 0.0, 1.0]];
        let ll = exact_log_likelihood(one.view(), &strong).unwrap();
        assert!(ll < 0.0 && ll > -0.01, "{ll}");

        for (seed, (j, h)) in [(2, (3, 2)), (4, (2, 5))] {
            let p = random_params(j, h, 1.5, seed);
            let data = Array2::from_shape_fn((3, j), |(r, c)| ((r + c) % 2) as f64);
            let log_z = log_sum_exp(
                (0..1u64 << j)
                    .flat_map(|vi| {
                        let v = bits_of(vi, j);
                        (0..1u64 << h).map(move |hi| (vi, hi, v.clone()))
                    })
                    .map(|(_, hi, v)| -energy(v.view(), bits_of(hi, h).view(), &p).unwrap()),
            );
            let oracle = data
                .rows()
                .into_iter()
                .map(|v| -enumerated_free_energy(v, &p) - log_z)
                .sum::<f64>()
                / 3.0;
            assert_abs_diff_eq!(exact_log_likelihood(data.view(), &p).unwrap(), oracle, epsilon = 1e-10);
        }

        let big = RbmParams::zeros(20, 5);
        assert!(matches!(
            exact_log_likelihood(Array2::zeros((1, 20)).view(), &big),
            Err(Error::EnumerationGuard { units: 25, limit: 24 })
        ));
    }

    #[test]
    fn gibbs_chain_examples() {
        let p = random_params(3, 2, 1.0, 4);
        let init = array![1.0, 0.0, 1.0];
        let c = gibbs_chain(&p, init.view(), 0, 1).unwrap();
        assert_eq!(c.v, init);
        assert!(c.h.is_none());
        let a = gibbs_chain(&p, init.view(), 50, 7).unwrap();
        let b = gibbs_chain(&p, init.view(), 50, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gibbs_marginal_converges_to_boltzmann() {
        let p = random_params(3, 2, 1.5, 12);
        let exact = enumerated_visible_marginal(&p);
        let burn_in = 1_000;
        let total = 200_000;
        let mut counts = [0u64; 8];
        let mut seen = 0usize;
        gibbs_chain_observe(&p, Array1::zeros(3).view(), burn_in + total, 5, |v, _| {
            seen += 1;
            if seen > burn_in {
                counts[index_of_bits(v.view()) as usize] += 1;
            }
        })
        .unwrap();
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn training_reduces_reconstruction_error() {
        let data = Array2::from_shape_fn((200, 6), |(r, c)| if (r % 2 == 0) == (c < 3) { 1.0 } else { 0.0 });
        let cfg = CdConfig {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 10,
            seed: 1,
            ..CdConfig::default()
        };
        let (_, log) = train_rbm(data.view(), 4, &cfg).unwrap();
        assert_eq!(log.len(), 31);
        assert!(
            log[30].reconstruction_error < 0.5 * log[0].reconstruction_error,
            "{log:?}"
        );
        let (a, _) = train_rbm(data.view(), 4, &cfg).unwrap();
        let (b, _) = train_rbm(data.view(), 4, &cfg).unwrap();
        assert_eq!(a, b);
        let momentum = CdConfig {
            momentum: 0.5,
            weight_decay: 1e-4,
            ..cfg
        };
        let (m, _) = train_rbm(data.view(), 4, &momentum).unwrap();
        assert_ne!(m, a);
    }

    proptest! {
        #[test]
        fn free_energy_equals_enumeration(seed in 0u64..10_000, j in 1usize..6, h in 1usize..6, vi in 0u64..64) {
            let p = random_params(j, h, 3.0, seed);
            let v = bits_of(vi % (1 << j), j);
            let a = free_energy_rbm(v.view(), &p).unwrap();
            let b = enumerated_free_energy(v.view(), &p);
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }
}
