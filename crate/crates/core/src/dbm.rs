//! Deep Boltzmann Machine over a binary visible layer and `L` hidden layers.
//!
//! Layer `0` is the visible vector; `W^(l)` (stored at `weights[l - 1]`) has
//! shape `H_{l-1} × H_l`. The joint energy is
//!
//! ```text
//! E(v, h¹..hᴸ) = -Σ_l h^(l-1)ᵀ W^(l) h^(l) - bᵀv - Σ_l c^(l)ᵀ h^(l)
//! ```
//!
//! Layers of equal parity are conditionally independent given the others,
//! which both the block-Gibbs sampler and the exact enumerators exploit.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::math::{bernoulli_entropy, fill_bits, sigmoid, softplus, LogSumExp};
use crate::rbm::{self, bernoulli, check_dim, CdConfig, RbmParams, ENUMERATION_LIMIT};
use crate::rng::{derive_seed, rng_from_seed, ModelRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DbmParams {
    pub weights: Vec<Array2<f64>>,
    pub visible_bias: Array1<f64>,
    pub hidden_biases: Vec<Array1<f64>>,
}

impl DbmParams {
    pub fn new(weights: Vec<Array2<f64>>, visible_bias: Array1<f64>, hidden_biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("a DBM needs at least one hidden layer".into()));
        }
        check_dim("hidden bias count", weights.len(), hidden_biases.len())?;
        let mut below = visible_bias.len();
        for (w, c) in weights.iter().zip(&hidden_biases) {
            check_dim("weight rows", below, w.nrows())?;
            check_dim("hidden bias", w.ncols(), c.len())?;
            below = w.ncols();
        }
        let p = Self {
            weights,
            visible_bias,
            hidden_biases,
        };
        if !p.is_finite() {
            return Err(Error::InvalidConfig("DBM parameters must be finite".into()));
        }
        Ok(p)
    }

    pub fn zeros(visible: usize, hidden: &[usize]) -> Self {
        let mut below = visible;
        let mut weights = Vec::with_capacity(hidden.len());
        for &h in hidden {
            weights.push(Array2::zeros((below, h)));
            below = h;
        }
        Self {
            weights,
            visible_bias: Array1::zeros(visible),
            hidden_biases: hidden.iter().map(|&h| Array1::zeros(h)).collect(),
        }
    }

    pub fn from_rbm(rbm: RbmParams) -> Self {
        Self {
            weights: vec![rbm.weights],
            visible_bias: rbm.visible_bias,
            hidden_biases: vec![rbm.hidden_bias],
        }
    }

    /// The single-hidden-layer model as an RBM, if `L = 1`.
    pub fn as_rbm(&self) -> Option<RbmParams> {
        (self.depth() == 1).then(|| RbmParams {
            weights: self.weights[0].clone(),
            visible_bias: self.visible_bias.clone(),
            hidden_bias: self.hidden_biases[0].clone(),
        })
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn visible_dim(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden_biases.iter().map(Array1::len).collect()
    }

    pub fn total_hidden(&self) -> usize {
        self.hidden_biases.iter().map(Array1::len).sum()
    }

    /// Unit count of layer `l`, with layer 0 the visible layer.
    pub fn layer_size(&self, l: usize) -> usize {
        if l == 0 {
            self.visible_dim()
        } else {
            self.hidden_biases[l - 1].len()
        }
    }

    fn bias(&self, l: usize) -> &Array1<f64> {
        if l == 0 {
            &self.visible_bias
        } else {
            &self.hidden_biases[l - 1]
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.visible_dim() + self.total_hidden()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|x| x.is_finite())
            && self.visible_bias.iter().all(|x| x.is_finite())
            && self.hidden_biases.iter().flatten().all(|x| x.is_finite())
    }

    /// Net input to layer `l` from the states of its neighbours.
    fn layer_input(&self, l: usize, states: &[Array1<f64>]) -> Array1<f64> {
        let mut x = self.bias(l).clone();
        if l > 0 {
            x += &self.weights[l - 1].t().dot(&states[l - 1]);
        }
        if l < self.depth() {
            x += &self.weights[l].dot(&states[l + 1]);
        }
        x
    }

    /// Batched version of [`Self::layer_input`]; rows are chains.
    fn layer_input_batch(&self, l: usize, states: &[Array2<f64>]) -> Array2<f64> {
        let mut x = Array2::zeros((states[l].nrows(), self.layer_size(l)));
        x += self.bias(l);
        if l > 0 {
            x += &states[l - 1].dot(&self.weights[l - 1]);
        }
        if l < self.depth() {
            x += &states[l + 1].dot(&self.weights[l].t());
        }
        x
    }
}

impl fmt::Display for DbmParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DBM {}", self.visible_dim())?;
        for h in self.hidden_sizes() {
            write!(f, "-{h}")?;
        }
        write!(f, " ({} parameters)", self.parameter_count())
    }
}

fn check_visible(params: &DbmParams, v: ArrayView1<'_, f64>) -> Result<()> {
    check_dim("visible vector", params.visible_dim(), v.len())
}

/// Joint energy of a full configuration; `hidden[l - 1]` is `h^(l)`.
pub fn energy_dbm(v: ArrayView1<'_, f64>, hidden: &[Array1<f64>], params: &DbmParams) -> Result<f64> {
    check_visible(params, v)?;
    check_dim("hidden layer count", params.depth(), hidden.len())?;
    let mut e = -params.visible_bias.dot(&v);
    let mut below = v.to_owned();
    for ((w, c), h) in params.weights.iter().zip(&params.hidden_biases).zip(hidden) {
        check_dim("hidden layer", c.len(), h.len())?;
        e -= below.dot(&w.dot(h)) + c.dot(h);
        below = h.clone();
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanFieldConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute change in one sweep.
    pub tolerance: f64,
    /// Weight on the previous value when blending updates, in `[0, 1)`.
    pub damping: f64,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            damping: 0.0,
        }
    }
}

impl MeanFieldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("mean field needs at least one iteration".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("mean-field tolerance must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig("damping must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Converged mean-field parameters `μ^(1..L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub mu: Vec<Array1<f64>>,
    pub iterations: usize,
    /// Largest absolute change during the final sweep.
    pub residual: f64,
    pub converged: bool,
}

/// Concatenation `[μ^(1); …; μ^(L)]`.
pub fn belief_vector(state: &BeliefState) -> Array1<f64> {
    state.mu.iter().flat_map(|m| m.iter().copied()).collect()
}

/// Fixed-point iteration `μ^(l) ← σ(W^(l)ᵀμ^(l-1) + W^(l+1)μ^(l+1) + c^(l))`.
///
/// Starts from one bottom-up pass without top-down input, then sweeps
/// `l = 1..L` in place until the largest change drops below the tolerance.
/// Running out of iterations is reported through [`BeliefState::converged`].
pub fn mean_field_infer(v: ArrayView1<'_, f64>, params: &DbmParams, cfg: &MeanFieldConfig) -> Result<BeliefState> {
    check_visible(params, v)?;
    cfg.validate()?;
    let depth = params.depth();
    let mut states: Vec<Array1<f64>> = Vec::with_capacity(depth + 1);
    states.push(v.to_owned());
    for l in 1..=depth {
        let x = params.weights[l - 1].t().dot(&states[l - 1]) + &params.hidden_biases[l - 1];
        states.push(x.mapv(sigmoid));
    }
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        residual = 0.0;
        for l in 1..=depth {
            let target = params.layer_input(l, &states).mapv(sigmoid);
            let layer = &mut states[l];
            for (m, t) in layer.iter_mut().zip(&target) {
                let next = cfg.damping * *m + (1.0 - cfg.damping) * t;
                residual = f64::max(residual, (next - *m).abs());
                *m = next;
            }
        }
        if residual < cfg.tolerance {
            converged = true;
            break;
        }
    }
    states.remove(0);
    Ok(BeliefState {
        mu: states,
        iterations,
        residual,
        converged,
    })
}

/// `max_l max_k |σ(input_k^(l)(μ)) − μ_k^(l)|`: how far `state` is from a
/// fixed point when every layer is updated simultaneously.
pub fn fixed_point_residual(v: ArrayView1<'_, f64>, params: &DbmParams, state: &BeliefState) -> Result<f64> {
    check_visible(params, v)?;
    check_dim("belief layers", params.depth(), state.mu.len())?;
    let mut states = Vec::with_capacity(params.depth() + 1);
    states.push(v.to_owned());
    states.extend(state.mu.iter().cloned());
    let mut worst = 0.0f64;
    for l in 1..=params.depth() {
        let target = params.layer_input(l, &states).mapv(sigmoid);
        for (a, b) in target.iter().zip(&states[l]) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Sign of the entropy term in the variational free energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyTerm {
    /// `E_q[E] − H(q)`: an upper bound on the exact free energy.
    #[default]
    Subtract,
    /// `E_q[E] + H(q)`: literal plus sign, no bound guarantee.
    Add,
}

/// Variational free energy evaluated at the given beliefs.
pub fn variational_free_energy_at(
    v: ArrayView1<'_, f64>,
    params: &DbmParams,
    state: &BeliefState,
    entropy: EntropyTerm,
) -> Result<f64> {
    check_visible(params, v)?;
    check_dim("belief layers", params.depth(), state.mu.len())?;
    let mut f = -params.visible_bias.dot(&v);
    let mut below = v.to_owned();
    let mut h = 0.0;
    for ((w, c), mu) in params.weights.iter().zip(&params.hidden_biases).zip(&state.mu) {
        f -= below.dot(&w.dot(mu)) + c.dot(mu);
        h += mu.iter().map(|&p| bernoulli_entropy(p)).sum::<f64>();
        below = mu.clone();
    }
    Ok(match entropy {
        EntropyTerm::Subtract => f - h,
        EntropyTerm::Add => f + h,
    })
}

/// Runs mean field and returns `(F̃(v), beliefs)`.
pub fn score_visible(
    v: ArrayView1<'_, f64>,
    params: &DbmParams,
    cfg: &MeanFieldConfig,
    entropy: EntropyTerm,
) -> Result<(f64, BeliefState)> {
    let state = mean_field_infer(v, params, cfg)?;
    let f = variational_free_energy_at(v, params, &state, entropy)?;
    Ok((f, state))
}

/// [`score_visible`] for every row of `data`, in row order.
pub fn score_rows(
    data: ArrayView2<'_, f64>,
    params: &DbmParams,
    cfg: &MeanFieldConfig,
    entropy: EntropyTerm,
) -> Result<Vec<(f64, BeliefState)>> {
    (0..data.nrows())
        .into_par_iter()
        .map(|i| score_visible(data.row(i), params, cfg, entropy))
        .collect()
}

/// Mean-field variational free energy with the bound-preserving sign.
pub fn variational_free_energy(v: ArrayView1<'_, f64>, params: &DbmParams, cfg: &MeanFieldConfig) -> Result<f64> {
    score_visible(v, params, cfg, EntropyTerm::Subtract).map(|(f, _)| f)
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

/// Enumerates every joint state of the layers in `enumerated` (ascending
/// layer indices; layer 0 may be clamped through `clamped_visible`) and sums
/// the remaining layers analytically. Requires that no two layers in the
/// marginalised set are adjacent.
fn enumerate_log_sum(params: &DbmParams, clamped_visible: Option<ArrayView1<'_, f64>>, enumerated: &[usize]) -> f64 {
    let depth = params.depth();
    let mut states: Vec<Array1<f64>> = (0..=depth).map(|l| Array1::zeros(params.layer_size(l))).collect();
    if let Some(v) = clamped_visible {
        states[0].assign(&v);
    }
    let is_enumerated = |l: usize| enumerated.contains(&l) || (l == 0 && clamped_visible.is_some());
    let bits: usize = enumerated.iter().map(|&l| params.layer_size(l)).sum();
    let mut acc = LogSumExp::default();
    for idx in 0..(1u64 << bits) {
        let mut shift = 0;
        for &l in enumerated {
            let n = params.layer_size(l);
            fill_bits(idx >> shift, states[l].as_slice_mut().expect("contiguous"));
            shift += n;
        }
        let mut log_term = 0.0;
        for l in 0..=depth {
            if is_enumerated(l) {
                log_term += params.bias(l).dot(&states[l]);
                if l < depth && is_enumerated(l + 1) {
                    log_term += states[l].dot(&params.weights[l].dot(&states[l + 1]));
                }
            } else {
                log_term += params.layer_input(l, &states).iter().map(|&x| softplus(x)).sum::<f64>();
            }
        }
        acc.push(log_term);
    }
    acc.value()
}

/// Exact `F(v) = −log Σ_{h¹..hᴸ} exp(−E)`: enumerates the odd hidden layers
/// and marginalises the even ones in closed form.
pub fn exact_free_energy(v: ArrayView1<'_, f64>, params: &DbmParams) -> Result<f64> {
    check_visible(params, v)?;
    guard(params.total_hidden())?;
    let odd: Vec<usize> = (1..=params.depth()).step_by(2).collect();
    Ok(-enumerate_log_sum(params, Some(v), &odd))
}

/// Exact `log Z`: enumerates the visible and even hidden layers.
pub fn log_partition_dbm(params: &DbmParams) -> Result<f64> {
    guard(params.visible_dim() + params.total_hidden())?;
    let even: Vec<usize> = (0..=params.depth()).step_by(2).collect();
    Ok(enumerate_log_sum(params, None, &even))
}

/// Mean exact `log P(v)` over the rows of `data`.
pub fn exact_log_likelihood_dbm(data: ArrayView2<'_, f64>, params: &DbmParams) -> Result<f64> {
    if data.nrows() == 0 {
        return Err(Error::Empty("log-likelihood dataset"));
    }
    check_dim("dataset width", params.visible_dim(), data.ncols())?;
    let log_z = log_partition_dbm(params)?;
    let mut total = 0.0;
    for row in data.rows() {
        total += -exact_free_energy(row, params)? - log_z;
    }
    Ok(total / data.nrows() as f64)
}

/// Mean squared error between each row and `σ(b + W^(1)μ^(1))` at its
/// mean-field beliefs.
pub fn mean_field_reconstruction_error(
    data: ArrayView2<'_, f64>,
    params: &DbmParams,
    cfg: &MeanFieldConfig,
) -> Result<f64> {
    if data.nrows() == 0 {
        return Ok(0.0);
    }
    let errs = (0..data.nrows())
        .into_par_iter()
        .map(|i| {
            let v = data.row(i);
            let state = mean_field_infer(v, params, cfg)?;
            let recon = (params.weights[0].dot(&state.mu[0]) + &params.visible_bias).mapv(sigmoid);
            Ok((&v - &recon).mapv(|x| x * x).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.iter().sum::<f64>() / (data.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerLog {
    pub layer: usize,
    /// Reconstruction error per epoch, epoch 0 at initialisation.
    pub epochs: Vec<rbm::EpochLog>,
}

/// Initial parameters of the layer-wise pretraining run for `cfg`; equals the
/// pretraining result when `cfg.epochs == 0`.
pub fn initial_params(visible: usize, layer_sizes: &[usize], cfg: &CdConfig) -> DbmParams {
    let mut below = visible;
    let mut rbms = Vec::with_capacity(layer_sizes.len());
    for (i, &h) in layer_sizes.iter().enumerate() {
        let mut rng = rng_from_seed(layer_seed(cfg.seed, i + 1));
        rbms.push(RbmParams::random(below, h, cfg.weight_init_std, &mut rng));
        below = h;
    }
    assemble(rbms)
}

fn layer_seed(seed: u64, layer: usize) -> u64 {
    derive_seed(seed, &format!("layer-{layer}"))
}

/// Stacks trained RBMs into a DBM and doubles the intermediate weights
/// `W^(2..L-1)`. Hidden biases come from each RBM; the visible bias from the
/// first.
fn assemble(rbms: Vec<RbmParams>) -> DbmParams {
    let depth = rbms.len();
    let mut weights = Vec::with_capacity(depth);
    let mut hidden_biases = Vec::with_capacity(depth);
    let mut visible_bias = None;
    for (i, r) in rbms.into_iter().enumerate() {
        let layer = i + 1;
        if visible_bias.is_none() {
            visible_bias = Some(r.visible_bias);
        }
        let w = if layer > 1 && layer < depth {
            r.weights * 2.0
        } else {
            r.weights
        };
        weights.push(w);
        hidden_biases.push(r.hidden_bias);
    }
    DbmParams {
        weights,
        visible_bias: visible_bias.expect("at least one layer"),
        hidden_biases,
    }
}

/// Greedy layer-wise pretraining: RBM `l` is trained with CD on the posterior
/// means of layer `l − 1` over the data.
pub fn pretrain_layerwise(
    data: ArrayView2<'_, f64>,
    layer_sizes: &[usize],
    cfg: &CdConfig,
) -> Result<(DbmParams, Vec<LayerLog>)> {
    if layer_sizes.is_empty() || layer_sizes.contains(&0) {
        return Err(Error::InvalidConfig("layer sizes must be nonempty and positive".into()));
    }
    cfg.validate()?;
    let mut input = data.to_owned();
    let mut rbms = Vec::with_capacity(layer_sizes.len());
    let mut logs = Vec::with_capacity(layer_sizes.len());
    for (i, &h) in layer_sizes.iter().enumerate() {
        let layer_cfg = CdConfig {
            seed: layer_seed(cfg.seed, i + 1),
            init_visible_from_data: cfg.init_visible_from_data && i == 0,
            ..cfg.clone()
        };
        let (r, epochs) = rbm::train_rbm(input.view(), h, &layer_cfg)?;
        input = (input.dot(&r.weights) + &r.hidden_bias).mapv(sigmoid);
        logs.push(LayerLog { layer: i + 1, epochs });
        rbms.push(r);
    }
    Ok((assemble(rbms), logs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcdConfig {
    /// Number of persistent chains; defaults to `batch_size`.
    pub chain_count: Option<usize>,
    pub gibbs_steps_per_update: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for PcdConfig {
    fn default() -> Self {
        Self {
            chain_count: None,
            gibbs_steps_per_update: 1,
            learning_rate: 0.01,
            epochs: 10,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl PcdConfig {
    pub fn chains(&self) -> usize {
        self.chain_count.unwrap_or(self.batch_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains() == 0 {
            return Err(Error::InvalidConfig("PCD needs at least one chain".into()));
        }
        if self.gibbs_steps_per_update == 0 {
            return Err(Error::InvalidConfig(
                "PCD needs at least one Gibbs step per update".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Binary states of a set of block-Gibbs chains; `layers[l]` is
/// `chains × H_l` with layer 0 visible.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStates {
    pub layers: Vec<Array2<f64>>,
}

impl ChainStates {
    /// Uniform random binary initial states.
    pub fn random(params: &DbmParams, chains: usize, rng: &mut ModelRng) -> Self {
        let layers = (0..=params.depth())
            .map(|l| Array2::from_shape_fn((chains, params.layer_size(l)), |_| f64::from(rng.random::<bool>())))
            .collect();
        Self { layers }
    }

    pub fn chain_count(&self) -> usize {
        self.layers[0].nrows()
    }

    /// One sweep: odd layers given even, then even layers (including the
    /// visible layer) given odd.
    pub fn step(&mut self, params: &DbmParams, rng: &mut ModelRng) {
        let depth = params.depth();
        for parity in [1, 0] {
            for l in (parity..=depth).step_by(2) {
                let probs = params.layer_input_batch(l, &self.layers).mapv(sigmoid);
                self.layers[l] = bernoulli(&probs, rng);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinetuneEpoch {
    pub epoch: usize,
    /// Mean variational free energy of the data after the epoch.
    pub mean_free_energy: f64,
    pub reconstruction_error: f64,
    /// Mean Frobenius norm of the weight gradient over the epoch's updates.
    pub weight_gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    pub params: DbmParams,
    pub chains: ChainStates,
    pub log: Vec<FinetuneEpoch>,
}

fn data_summary(data: ArrayView2<'_, f64>, params: &DbmParams, mf: &MeanFieldConfig) -> Result<(f64, f64)> {
    let fs = (0..data.nrows())
        .into_par_iter()
        .map(|i| variational_free_energy(data.row(i), params, mf))
        .collect::<Result<Vec<f64>>>()?;
    let mean_f = fs.iter().sum::<f64>() / fs.len().max(1) as f64;
    Ok((mean_f, mean_field_reconstruction_error(data, params, mf)?))
}

/// Joint fine-tuning with mean-field positive phase and persistent-chain
/// negative phase. All weights and biases are updated.
pub fn finetune_pcd(
    params: &DbmParams,
    data: ArrayView2<'_, f64>,
    mf: &MeanFieldConfig,
    cfg: &PcdConfig,
) -> Result<FinetuneOutcome> {
    if data.nrows() == 0 {
        return Err(Error::Empty("fine-tuning dataset"));
    }
    check_dim("dataset width", params.visible_dim(), data.ncols())?;
    mf.validate()?;
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut chains = ChainStates::random(params, cfg.chains(), &mut rng);
    let mut params = params.clone();
    let depth = params.depth();
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let (f0, r0) = data_summary(data, &params, mf)?;
    let mut log = vec![FinetuneEpoch {
        epoch: 0,
        mean_free_energy: f0,
        reconstruction_error: r0,
        weight_gradient_norm: 0.0,
    }];
    for epoch in 1..=cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut norm_sum = 0.0;
        let mut updates = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let beliefs = chunk
                .par_iter()
                .map(|&i| mean_field_infer(data.row(i), &params, mf).map(|s| s.mu))
                .collect::<Result<Vec<_>>>()?;
            let n = chunk.len() as f64;
            // positive phase: layer 0 is the clamped data, layers 1.. are μ
            let mut positive: Vec<Array2<f64>> = Vec::with_capacity(depth + 1);
            positive.push(data.select(Axis(0), chunk));
            for l in 0..depth {
                let mut m = Array2::zeros((chunk.len(), params.layer_size(l + 1)));
                for (mut row, mu) in m.rows_mut().into_iter().zip(&beliefs) {
                    row.assign(&mu[l]);
                }
                positive.push(m);
            }
            for _ in 0..cfg.gibbs_steps_per_update {
                chains.step(&params, &mut rng);
            }
            let m = chains.chain_count() as f64;
            let lr = cfg.learning_rate;
            let mut norm = 0.0;
            for l in 0..depth {
                let grad =
                    positive[l].t().dot(&positive[l + 1]) / n - chains.layers[l].t().dot(&chains.layers[l + 1]) / m;
                norm += grad.iter().map(|x| x * x).sum::<f64>();
                params.weights[l].scaled_add(lr, &grad);
            }
            for l in 0..=depth {
                let grad = positive[l].sum_axis(Axis(0)) / n - chains.layers[l].sum_axis(Axis(0)) / m;
                if l == 0 {
                    params.visible_bias.scaled_add(lr, &grad);
                } else {
                    params.hidden_biases[l - 1].scaled_add(lr, &grad);
                }
            }
            norm_sum += norm.sqrt();
            updates += 1;
        }
        let (f, r) = data_summary(data, &params, mf)?;
        log.push(FinetuneEpoch {
            epoch,
            mean_free_energy: f,
            reconstruction_error: r,
            weight_gradient_norm: norm_sum / updates.max(1) as f64,
        });
    }
    if !params.is_finite() {
        return Err(Error::InvalidConfig(
            "fine-tuning diverged to non-finite parameters".into(),
        ));
    }
    Ok(FinetuneOutcome { params, chains, log })
}

/// Single block-Gibbs chain from a uniform random start.
pub struct DbmSampler<'a> {
    params: &'a DbmParams,
    chains: ChainStates,
    rng: ModelRng,
}

impl<'a> DbmSampler<'a> {
    pub fn new(params: &'a DbmParams, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let chains = ChainStates::random(params, 1, &mut rng);
        Self { params, chains, rng }
    }

    pub fn step(&mut self) {
        self.chains.step(self.params, &mut self.rng);
    }

    pub fn visible(&self) -> ArrayView1<'_, f64> {
        self.chains.layers[0].row(0)
    }

    /// Current state of layer `l` (0 is visible).
    pub fn layer(&self, l: usize) -> ArrayView1<'_, f64> {
        self.chains.layers[l].row(0)
    }
}

/// Visible samples from one block-Gibbs chain: `burn_in` sweeps are
/// discarded, then a sample is emitted every `thin` sweeps (`thin = 0` is
/// treated as 1).
pub fn gibbs_sample_dbm(
    params: &DbmParams,
    n_samples: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Vec<Array1<f64>> {
    let mut sampler = DbmSampler::new(params, seed);
    let thin = thin.max(1);
    let mut out = Vec::with_capacity(n_samples);
    if n_samples == 0 {
        return out;
    }
    for _ in 0..burn_in {
        sampler.step();
    }
    while out.len() < n_samples {
        for _ in 0..thin {
            sampler.step();
        }
        out.push(sampler.visible().to_owned());
    }
    out
}
