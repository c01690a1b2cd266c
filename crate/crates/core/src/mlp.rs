//! Feedforward fully connected network trained by full-batch gradient descent
//! on the mean squared error between softmax outputs and one-hot targets.
//!
//! Hidden layers use ReLU or leaky ReLU; the output layer is always softmax.
//! Training supports an L2 penalty on weights, inverted dropout on hidden
//! activations and early stopping on a stratified holdout.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed;

/// Training sets smaller than this never use dropout.
pub const MIN_INSTANCES_FOR_DROPOUT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Relu,
}

impl Activation {
    #[inline]
    fn slope(self) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => slope,
            Activation::Relu => 0.0,
        }
    }

    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        if x >= T::zero() {
            x
        } else {
            x * T::of(self.slope())
        }
    }

    #[inline]
    pub fn derivative<T: Scalar>(self, x: T) -> T {
        if x >= T::zero() {
            T::one()
        } else {
            T::of(self.slope())
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Relu => "relu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopping {
    pub holdout_fraction: f64,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Input size, hidden sizes..., output size.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2_lambda: f64,
    pub dropout_rate: f64,
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl MlpConfig {
    /// Network used inside the fitness function while generating data.
    pub fn generation(n_attributes: usize, hidden: &[usize], n_classes: usize) -> Self {
        Self {
            layer_sizes: chain(n_attributes, hidden, n_classes),
            hidden_activation: Activation::LeakyRelu { slope: 0.01 },
            learning_rate: 2.0,
            max_epochs: 200,
            l2_lambda: 0.0,
            dropout_rate: 0.0,
            early_stopping: None,
            seed: 0,
        }
    }

    /// Downstream classifier used to compare generated and real training data.
    /// Early stopping is off by default; see [`MlpConfig::with_early_stopping`].
    pub fn evaluation(n_attributes: usize, hidden: &[usize], n_classes: usize) -> Self {
        Self {
            layer_sizes: chain(n_attributes, hidden, n_classes),
            hidden_activation: Activation::Relu,
            learning_rate: 2.0,
            max_epochs: 500,
            l2_lambda: 1e-4,
            dropout_rate: 0.2,
            early_stopping: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_early_stopping(mut self, holdout_fraction: f64, patience: usize) -> Self {
        self.early_stopping = Some(EarlyStopping { holdout_fraction, patience });
        self
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("validated config has layers")
    }

    /// Number of trainable parameters (weights and biases).
    pub fn parameter_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.layer_sizes.len() < 2 {
            return bad(format!("need at least input and output layers, got {:?}", self.layer_sizes));
        }
        if self.layer_sizes.contains(&0) {
            return bad(format!("layer sizes must be positive: {:?}", self.layer_sizes));
        }
        if let Activation::LeakyRelu { slope } = self.hidden_activation {
            if !(slope > 0.0 && slope < 1.0) {
                return bad(format!("leaky slope {slope} outside (0, 1)"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad(format!("l2_lambda {} must be non-negative", self.l2_lambda));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if let Some(es) = self.early_stopping {
            if !(es.holdout_fraction > 0.0 && es.holdout_fraction < 1.0) {
                return bad(format!("holdout fraction {} outside (0, 1)", es.holdout_fraction));
            }
            if es.patience == 0 {
                return bad("patience must be positive".into());
            }
        }
        Ok(())
    }
}

fn chain(n_in: usize, hidden: &[usize], n_out: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(n_in);
    sizes.extend_from_slice(hidden);
    sizes.push(n_out);
    sizes
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_train_mse: f64,
    pub stopped_early: bool,
    /// Training MSE measured during each epoch's forward pass.
    pub loss_history: Vec<f64>,
    /// Holdout MSE of the returned parameters, when early stopping ran.
    pub best_holdout_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    /// `weights[l]` maps layer `l` to layer `l + 1`; shape `out x in`.
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
    config: MlpConfig,
}

/// Parameter gradients, laid out like the model.
#[derive(Debug, Clone)]
struct Gradients<T> {
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(model: &MlpModel<T>) -> Self {
        Self {
            weights: model.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: model.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for w in &mut self.weights {
            w.as_mut_slice().iter_mut().for_each(|v| *v = T::zero());
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
    }
}

/// Per-sample activation buffers for [`MlpModel::forward`].
#[derive(Debug, Clone)]
struct Workspace<T> {
    /// `pre[l]`: pre-activation of layer `l + 1`.
    pre: Vec<Vec<T>>,
    /// `post[l]`: output of layer `l` (post[0] is the input).
    post: Vec<Vec<T>>,
}

impl<T: Scalar> Workspace<T> {
    fn new(sizes: &[usize]) -> Self {
        Self {
            pre: sizes[1..].iter().map(|&n| vec![T::zero(); n]).collect(),
            post: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }
}

/// Activations of a whole batch, stored unit-major (`units x m`) so that the
/// inner loops run over samples.
#[derive(Debug, Clone)]
struct Batch<T> {
    m: usize,
    pre: Vec<Vec<T>>,
    post: Vec<Vec<T>>,
    /// Dropout multipliers for hidden layers (0 or 1/(1-rate)).
    keep: Vec<Vec<T>>,
    delta: Vec<Vec<T>>,
    col_a: Vec<T>,
    col_b: Vec<T>,
}

impl<T: Scalar> Batch<T> {
    fn new(sizes: &[usize], features: &Matrix<T>) -> Self {
        let m = features.rows();
        let mut input = vec![T::zero(); sizes[0] * m];
        for (s, row) in features.iter_rows().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                input[i * m + s] = v;
            }
        }
        let layer = |n: usize, v: T| vec![v; n * m];
        let mut post = vec![input];
        post.extend(sizes[1..].iter().map(|&n| layer(n, T::zero())));
        Self {
            m,
            pre: sizes[1..].iter().map(|&n| layer(n, T::zero())).collect(),
            post,
            keep: sizes[1..sizes.len() - 1].iter().map(|&n| layer(n, T::one())).collect(),
            delta: sizes[1..].iter().map(|&n| layer(n, T::zero())).collect(),
            col_a: vec![T::zero(); m],
            col_b: vec![T::zero(); m],
        }
    }

    fn output(&self) -> &[T] {
        self.post.last().expect("output layer")
    }

    fn squared_error(&self, labels: &[usize]) -> T {
        let m = self.m;
        let mut total = T::zero();
        for (j, row) in self.output().chunks_exact(m).enumerate() {
            for (&p, &label) in row.iter().zip(labels) {
                let err = p - if label == j { T::one() } else { T::zero() };
                total += err * err;
            }
        }
        total
    }
}

/// Dot product with four interleaved partial sums (vectorizes).
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (a4, a_rest) = a.split_at(a.len() / 4 * 4);
    let (b4, b_rest) = b.split_at(a4.len());
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in a_rest.iter().zip(b_rest) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Column-wise softmax of a unit-major `k x m` block.
fn softmax_columns<T: Scalar>(out: &mut [T], m: usize, max: &mut [T], sum: &mut [T]) {
    max.fill(T::neg_infinity());
    for row in out.chunks_exact(m) {
        for (mx, &v) in max.iter_mut().zip(row) {
            *mx = mx.max(v);
        }
    }
    sum.fill(T::zero());
    for row in out.chunks_exact_mut(m) {
        for ((v, &mx), sm) in row.iter_mut().zip(max.iter()).zip(sum.iter_mut()) {
            *v = (*v - mx).exp();
            *sm += *v;
        }
    }
    for row in out.chunks_exact_mut(m) {
        for (v, &sm) in row.iter_mut().zip(sum.iter()) {
            *v /= sm;
        }
    }
}

/// Numerically stable softmax in place.
pub fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl<T: Scalar> MlpModel<T> {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(config.seed);
        let mut weights = Vec::with_capacity(config.layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(config.layer_sizes.len() - 1);
        for w in config.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| T::of(rng.gen_range(-limit..=limit))).collect();
            weights.push(Matrix::from_vec(fan_out, fan_in, data)?);
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Self { weights, biases, config })
    }

    /// Model with the given parameters; shapes must chain with `config.layer_sizes`.
    pub fn from_parameters(config: MlpConfig, weights: Vec<Matrix<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        config.validate()?;
        let sizes = &config.layer_sizes;
        if weights.len() != sizes.len() - 1 || biases.len() != sizes.len() - 1 {
            return Err(Error::Dimension(format!("{} weight matrices for {} layers", weights.len(), sizes.len())));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != sizes[l + 1] || w.cols() != sizes[l] || b.len() != sizes[l + 1] {
                return Err(Error::Dimension(format!(
                    "layer {l}: weights {}x{}, biases {}, expected {}x{}",
                    w.rows(),
                    w.cols(),
                    b.len(),
                    sizes[l + 1],
                    sizes[l]
                )));
            }
        }
        Ok(Self { weights, biases, config })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn parameters_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite) && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.config.n_inputs() {
            return Err(Error::Dimension(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.config.n_inputs()
            )));
        }
        let mut ws = Workspace::new(&self.config.layer_sizes);
        self.forward_ws(x, &mut ws);
        Ok(ws.post.last().expect("output layer").clone())
    }

    fn forward_ws(&self, x: &[T], ws: &mut Workspace<T>) {
        let last = self.weights.len() - 1;
        ws.post[0].copy_from_slice(x);
        for l in 0..=last {
            let w = &self.weights[l];
            let (input, rest) = ws.post.split_at_mut(l + 1);
            let input = &input[l];
            let z = &mut ws.pre[l];
            for (o, zo) in z.iter_mut().enumerate() {
                let mut acc = self.biases[l][o];
                for (wi, xi) in w.row(o).iter().zip(input) {
                    acc += *wi * *xi;
                }
                *zo = acc;
            }
            let out = &mut rest[0];
            if l < last {
                let act = self.config.hidden_activation;
                for (a, &zv) in out.iter_mut().zip(z.iter()) {
                    *a = act.apply(zv);
                }
            } else {
                out.copy_from_slice(z);
                softmax_in_place(out);
            }
        }
    }

    fn forward_batch(&self, b: &mut Batch<T>, dropout: bool) {
        let m = b.m;
        let last = self.weights.len() - 1;
        for l in 0..=last {
            let w = &self.weights[l];
            let (lower, upper) = b.post.split_at_mut(l + 1);
            let input = &lower[l];
            let z = &mut b.pre[l];
            for (o, zo) in z.chunks_exact_mut(m).enumerate() {
                zo.fill(self.biases[l][o]);
                for (&wv, xi) in w.row(o).iter().zip(input.chunks_exact(m)) {
                    for (zv, &xv) in zo.iter_mut().zip(xi) {
                        *zv += wv * xv;
                    }
                }
            }
            let out = &mut upper[0];
            if l < last {
                let act = self.config.hidden_activation;
                for (a, &zv) in out.iter_mut().zip(z.iter()) {
                    *a = act.apply(zv);
                }
                if dropout {
                    for (a, &k) in out.iter_mut().zip(&b.keep[l]) {
                        *a *= k;
                    }
                }
            } else {
                out.copy_from_slice(z);
                softmax_columns(out, m, &mut b.col_a, &mut b.col_b);
            }
        }
    }

    /// Backpropagates the batch (after `forward_batch`) into `grads`.
    /// `scale` multiplies `(p - y)` to give dJ/dp. Returns the summed squared error.
    fn backward_batch(&self, labels: &[usize], scale: T, b: &mut Batch<T>, grads: &mut Gradients<T>, dropout: bool) -> T {
        let m = b.m;
        let last = self.weights.len() - 1;
        let mut sq = T::zero();
        {
            let p = &b.post[last + 1];
            let d = &mut b.delta[last];
            let dot = &mut b.col_a;
            dot.fill(T::zero());
            for (j, (drow, prow)) in d.chunks_exact_mut(m).zip(p.chunks_exact(m)).enumerate() {
                for (((dv, &pv), &label), dt) in drow.iter_mut().zip(prow).zip(labels).zip(dot.iter_mut()) {
                    let err = pv - if label == j { T::one() } else { T::zero() };
                    sq += err * err;
                    *dv = scale * err;
                    *dt += pv * *dv;
                }
            }
            for (drow, prow) in d.chunks_exact_mut(m).zip(p.chunks_exact(m)) {
                for ((dv, &pv), &dt) in drow.iter_mut().zip(prow).zip(dot.iter()) {
                    *dv = pv * (*dv - dt);
                }
            }
        }
        let act = self.config.hidden_activation;
        for l in (0..=last).rev() {
            let input = &b.post[l];
            let gw = &mut grads.weights[l];
            for (o, drow) in b.delta[l].chunks_exact(m).enumerate() {
                grads.biases[l][o] += drow.iter().copied().sum::<T>();
                for (g, xi) in gw.row_mut(o).iter_mut().zip(input.chunks_exact(m)) {
                    *g += dot(drow, xi);
                }
            }
            if l > 0 {
                let (lower, upper) = b.delta.split_at_mut(l);
                let below = &mut lower[l - 1];
                let above = &upper[0];
                let w = &self.weights[l];
                below.fill(T::zero());
                for (o, drow) in above.chunks_exact(m).enumerate() {
                    for (&wv, brow) in w.row(o).iter().zip(below.chunks_exact_mut(m)) {
                        for (bv, &dv) in brow.iter_mut().zip(drow) {
                            *bv += wv * dv;
                        }
                    }
                }
                for (bv, &zv) in below.iter_mut().zip(&b.pre[l - 1]) {
                    *bv *= act.derivative(zv);
                }
                if dropout {
                    for (bv, &k) in below.iter_mut().zip(&b.keep[l - 1]) {
                        *bv *= k;
                    }
                }
            }
        }
        sq
    }

    fn check_data(&self, data: &Dataset<T>) -> Result<()> {
        if data.is_empty() {
            return Err(Error::Empty("dataset has no instances".into()));
        }
        if data.n_attributes() != self.config.n_inputs() {
            return Err(Error::Dimension(format!(
                "data has {} attributes, network expects {}",
                data.n_attributes(),
                self.config.n_inputs()
            )));
        }
        if data.n_classes() != self.config.n_outputs() {
            return Err(Error::Dimension(format!(
                "data has {} classes, network has {} outputs",
                data.n_classes(),
                self.config.n_outputs()
            )));
        }
        Ok(())
    }

    /// Mean over instances and output dimensions of `(one_hot - softmax)^2`.
    pub fn mse(&self, data: &Dataset<T>) -> Result<f64> {
        self.check_data(data)?;
        Ok(self.mse_unchecked(data.features(), data.labels()).to_f64_lossy())
    }

    fn mse_unchecked(&self, features: &Matrix<T>, labels: &[usize]) -> T {
        let mut batch = Batch::new(&self.config.layer_sizes, features);
        self.mse_batch(&mut batch, labels)
    }

    fn mse_batch(&self, batch: &mut Batch<T>, labels: &[usize]) -> T {
        self.forward_batch(batch, false);
        batch.squared_error(labels) / T::of((labels.len() * self.config.n_outputs()) as f64)
    }

    /// Fraction of instances whose argmax output equals the label.
    pub fn accuracy(&self, data: &Dataset<T>) -> Result<f64> {
        self.check_data(data)?;
        let mut batch = Batch::new(&self.config.layer_sizes, data.features());
        self.forward_batch(&mut batch, false);
        let m = batch.m;
        let out = batch.output();
        let correct = data
            .labels()
            .iter()
            .enumerate()
            .filter(|&(s, &label)| {
                let mut best = 0;
                for j in 1..self.config.n_outputs() {
                    if out[j * m + s] > out[best * m + s] {
                        best = j;
                    }
                }
                best == label
            })
            .count();
        Ok(correct as f64 / data.n_instances() as f64)
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    fn l2_norm_sq(&self) -> T {
        self.weights.iter().flat_map(|w| w.as_slice()).map(|&v| v * v).sum()
    }

    /// Training objective: MSE plus `l2_lambda * ||W||^2` (weights only).
    pub fn objective(&self, data: &Dataset<T>) -> Result<f64> {
        self.check_data(data)?;
        let penalty = T::of(self.config.l2_lambda) * self.l2_norm_sq();
        Ok((self.mse_unchecked(data.features(), data.labels()) + penalty).to_f64_lossy())
    }

    /// Gradient of [`MlpModel::objective`] without dropout.
    fn objective_gradient(&self, features: &Matrix<T>, labels: &[usize]) -> Gradients<T> {
        let mut grads = Gradients::zeros_like(self);
        let mut batch = Batch::new(&self.config.layer_sizes, features);
        let scale = T::of(2.0 / (labels.len() * self.config.n_outputs()) as f64);
        self.forward_batch(&mut batch, false);
        self.backward_batch(labels, scale, &mut batch, &mut grads, false);
        self.add_penalty_gradient(&mut grads);
        grads
    }

    fn add_penalty_gradient(&self, grads: &mut Gradients<T>) {
        let two_lambda = T::of(2.0 * self.config.l2_lambda);
        if two_lambda == T::zero() {
            return;
        }
        for (g, w) in grads.weights.iter_mut().zip(&self.weights) {
            for (gv, &wv) in g.as_mut_slice().iter_mut().zip(w.as_slice()) {
                *gv += two_lambda * wv;
            }
        }
    }

    fn apply_gradients(&mut self, grads: &Gradients<T>, lr: T) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            for (wv, &gv) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *wv -= lr * gv;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            for (bv, &gv) in b.iter_mut().zip(g) {
                *bv -= lr * gv;
            }
        }
    }

    /// Trains a copy of this model on `data`.
    pub fn train(&self, data: &Dataset<T>) -> Result<(Self, TrainReport)> {
        let mut model = self.clone();
        let report = model.fit(data)?;
        Ok((model, report))
    }

    /// Trains in place. See the module docs for the procedure.
    pub fn fit(&mut self, data: &Dataset<T>) -> Result<TrainReport> {
        self.check_data(data)?;
        let cfg = self.config.clone();
        let mut rng = seed::rng(seed::derive(cfg.seed, &[seed::tag::HOLDOUT]));
        let (train_idx, holdout_idx) = match cfg.early_stopping {
            Some(es) => holdout_split(data, es.holdout_fraction, &mut rng),
            None => ((0..data.n_instances()).collect(), Vec::new()),
        };
        let use_holdout = !holdout_idx.is_empty();
        let (train_x, train_y, hold_x, hold_y);
        let (features, labels, holdout): (&Matrix<T>, &[usize], Option<(&Matrix<T>, &[usize])>) = if use_holdout {
            train_x = data.features().select_rows(&train_idx);
            train_y = train_idx.iter().map(|&i| data.labels()[i]).collect::<Vec<_>>();
            hold_x = data.features().select_rows(&holdout_idx);
            hold_y = holdout_idx.iter().map(|&i| data.labels()[i]).collect::<Vec<_>>();
            (&train_x, &train_y, Some((&hold_x, &hold_y)))
        } else {
            (data.features(), data.labels(), None)
        };

        let m = labels.len();
        let dropout = cfg.dropout_rate > 0.0 && m >= MIN_INSTANCES_FOR_DROPOUT;
        let keep_scale = T::of(1.0 / (1.0 - cfg.dropout_rate));
        let mut dropout_rng = seed::rng(seed::derive(cfg.seed, &[seed::tag::DROPOUT]));
        let scale = T::of(2.0 / (m * cfg.n_outputs()) as f64);
        let inv_count = T::of(1.0 / (m * cfg.n_outputs()) as f64);
        let lr = T::of(cfg.learning_rate);
        let penalty_on = cfg.l2_lambda > 0.0;

        let mut grads = Gradients::zeros_like(self);
        let mut batch = Batch::new(&cfg.layer_sizes, features);
        let mut hold_batch = holdout.map(|(hx, _)| Batch::new(&cfg.layer_sizes, hx));
        let mut history = Vec::with_capacity(cfg.max_epochs);

        let mut best = match (holdout, hold_batch.as_mut()) {
            (Some((_, hy)), Some(hb)) => Some((self.mse_batch(hb, hy), self.clone())),
            _ => None,
        };
        let mut since_best = 0;
        let mut stopped_early = false;

        for epoch in 0..cfg.max_epochs {
            grads.clear();
            if dropout {
                draw_keep_mask(&mut batch.keep, cfg.dropout_rate, keep_scale, &mut dropout_rng);
            }
            self.forward_batch(&mut batch, dropout);
            let sq = self.backward_batch(labels, scale, &mut batch, &mut grads, dropout);
            let loss = sq * inv_count;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            history.push(loss.to_f64_lossy());
            if penalty_on {
                self.add_penalty_gradient(&mut grads);
            }
            self.apply_gradients(&grads, lr);

            if let (Some((_, hy)), Some(hb), Some((best_mse, snapshot))) = (holdout, hold_batch.as_mut(), best.as_mut()) {
                let current = self.mse_batch(hb, hy);
                if !current.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                if current < *best_mse {
                    *best_mse = current;
                    *snapshot = self.clone();
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= cfg.early_stopping.map_or(usize::MAX, |es| es.patience) {
                        stopped_early = true;
                        break;
                    }
                }
            }
        }

        let best_holdout_mse = best.map(|(best_mse, snapshot)| {
            *self = snapshot;
            best_mse.to_f64_lossy()
        });
        if !self.parameters_finite() {
            return Err(Error::Diverged { epoch: history.len() });
        }
        let final_train_mse = self.mse_batch(&mut batch, labels).to_f64_lossy();
        Ok(TrainReport {
            epochs_run: history.len(),
            final_train_mse,
            stopped_early,
            loss_history: history,
            best_holdout_mse,
        })
    }

    /// Flat text dump: a line with the layer sizes, then for every layer the
    /// row-major weights and the biases, one value per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sizes: Vec<String> = self.config.layer_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.as_slice().iter().chain(b) {
                let _ = writeln!(out, "{:.16e}", v.to_f64_lossy());
            }
        }
        out
    }

    /// Reads a dump produced by [`MlpModel::to_text`]; layer sizes must match `config`.
    pub fn from_text(text: &str, config: MlpConfig) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Empty("empty model dump".into()))?;
        let sizes: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse { line: 1, message: format!("bad layer size {s:?}") }))
            .collect::<Result<_>>()?;
        if sizes != config.layer_sizes {
            return Err(Error::Dimension(format!("dump has layers {sizes:?}, config {:?}", config.layer_sizes)));
        }
        let mut next = || -> Result<T> {
            let (idx, line) = lines.next().ok_or_else(|| Error::Empty("truncated model dump".into()))?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: idx + 1, message: format!("bad parameter {line:?}") })?;
            Ok(T::of(v))
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let data = (0..w[0] * w[1]).map(|_| next()).collect::<Result<Vec<_>>>()?;
            weights.push(Matrix::from_vec(w[1], w[0], data)?);
            biases.push((0..w[1]).map(|_| next()).collect::<Result<Vec<_>>>()?);
        }
        Self::from_parameters(config, weights, biases)
    }

    fn parameters_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.as_mut_slice().iter_mut().chain(b.iter_mut()))
    }
}

fn draw_keep_mask<T: Scalar>(keep: &mut [Vec<T>], rate: f64, keep_scale: T, rng: &mut ChaCha8Rng) {
    for layer in keep {
        for k in layer.iter_mut() {
            *k = if rng.gen::<f64>() < rate { T::zero() } else { keep_scale };
        }
    }
}

/// Stratified holdout: `round(fraction * count)` per class, capped so that
/// every class keeps at least one training instance.
fn holdout_split<T: Scalar>(data: &Dataset<T>, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut in_holdout = vec![false; data.n_instances()];
    for mut members in data.class_indices() {
        if members.is_empty() {
            continue;
        }
        let take = ((fraction * members.len() as f64).round() as usize).min(members.len() - 1);
        members.shuffle(rng);
        for &i in &members[..take] {
            in_holdout[i] = true;
        }
    }
    (0..data.n_instances()).partition(|&i| !in_holdout[i])
}

/// Largest relative difference between the backpropagated gradient of the
/// training objective and central finite differences with step `epsilon`,
/// over every parameter of a freshly initialized network. Dropout is ignored.
pub fn gradient_check<T: Scalar>(config: &MlpConfig, data: &Dataset<T>, epsilon: f64) -> Result<f64> {
    let model = MlpModel::<T>::init(config.clone())?;
    model.check_data(data)?;
    gradient_check_model(&model, data, epsilon)
}

/// [`gradient_check`] for an existing model.
pub fn gradient_check_model<T: Scalar>(model: &MlpModel<T>, data: &Dataset<T>, epsilon: f64) -> Result<f64> {
    model.check_data(data)?;
    let grads = model.objective_gradient(data.features(), data.labels());
    let analytic: Vec<f64> = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.as_slice().iter().chain(b).map(|v| v.to_f64_lossy()))
        .collect();

    let mut probe = model.clone();
    let n_params = analytic.len();
    let mut worst = 0.0f64;
    for (k, &ga) in analytic.iter().enumerate().take(n_params) {
        let original = *probe.parameters_mut().nth(k).expect("parameter index");
        *probe.parameters_mut().nth(k).expect("parameter index") = original + T::of(epsilon);
        let plus = probe.objective(data)?;
        *probe.parameters_mut().nth(k).expect("parameter index") = original - T::of(epsilon);
        let minus = probe.objective(data)?;
        *probe.parameters_mut().nth(k).expect("parameter index") = original;
        let gn = (plus - minus) / (2.0 * epsilon);
        let rel = (ga - gn).abs() / ga.abs().max(gn.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
