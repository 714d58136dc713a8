//! Three-layer feed-forward network (inputs → logsig hidden layer → one
//! linear output) trained by full-batch momentum gradient descent.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub n_in: usize,
    pub n_hidden: usize,
}

impl NetConfig {
    /// Eight lagged inputs, `hidden` logsig units, one output.
    pub fn forecaster(hidden: usize) -> Self {
        Self {
            n_in: 8,
            n_hidden: hidden,
        }
    }

    /// Number of weights and biases: `H·n_in + H + H + 1`.
    pub fn n_params(&self) -> usize {
        self.n_hidden * self.n_in + 2 * self.n_hidden + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_hidden == 0 {
            return Err(Error::Config(format!(
                "network needs at least one input and one hidden unit, got {}-{}-1",
                self.n_in, self.n_hidden
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn logsig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weights and biases. `w1` is `n_hidden × n_in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub config: NetConfig,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl NetParams {
    pub fn zeros(config: NetConfig) -> Self {
        Self {
            config,
            w1: vec![0.0; config.n_hidden * config.n_in],
            b1: vec![0.0; config.n_hidden],
            w2: vec![0.0; config.n_hidden],
            b2: 0.0,
        }
    }

    pub fn random_uniform<R: Rng + ?Sized>(config: NetConfig, lo: f64, hi: f64, rng: &mut R) -> Self {
        let genes: Vec<f64> = (0..config.n_params()).map(|_| rng.gen_range(lo..=hi)).collect();
        Self::from_flat(config, &genes).expect("length matches by construction")
    }

    /// Slices a flat vector laid out as `w1 | b1 | w2 | b2`.
    pub fn from_flat(config: NetConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.n_params() {
            return Err(Error::Dimension(format!(
                "{} genes for a {}-{}-1 network ({} expected)",
                flat.len(),
                config.n_in,
                config.n_hidden,
                config.n_params()
            )));
        }
        let h = config.n_hidden;
        let (w1, rest) = flat.split_at(h * config.n_in);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        Ok(Self {
            config,
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: rest[0],
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.n_params());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.config.n_in {
            return Err(Error::Dimension(format!(
                "input of length {} for {} network inputs",
                input.len(),
                self.config.n_in
            )));
        }
        Ok(())
    }

    /// Output and hidden activations for one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(input)?;
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        let mut hidden = vec![0.0; self.config.n_hidden];
        let out = self.forward_into(input, &mut hidden);
        Ok((out, hidden))
    }

    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        self.forward(input).map(|(o, _)| o)
    }

    // caller guarantees dimensions
    fn forward_into(&self, input: &[f64], hidden: &mut [f64]) -> f64 {
        let n_in = self.config.n_in;
        let mut out = self.b2;
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * n_in..(j + 1) * n_in];
            let z = self.b1[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *h = logsig(z);
            out += self.w2[j] * *h;
        }
        out
    }
}

/// One supervised pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: f64,
}

fn check_samples(params: &NetParams, samples: &[Sample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no training samples".into()));
    }
    samples.iter().try_for_each(|s| params.check_input(&s.input))
}

/// Sum of squared errors `Σ (y - o)²`.
pub fn sse_loss(params: &NetParams, samples: &[Sample]) -> Result<f64> {
    check_samples(params, samples)?;
    let mut hidden = vec![0.0; params.config.n_hidden];
    Ok(samples
        .iter()
        .map(|s| {
            let o = params.forward_into(&s.input, &mut hidden);
            (s.target - o).powi(2)
        })
        .sum())
}

/// Mean absolute error scaled by `scale`.
pub fn error_rate(params: &NetParams, samples: &[Sample], scale: f64) -> Result<f64> {
    check_samples(params, samples)?;
    let mut hidden = vec![0.0; params.config.n_hidden];
    let total: f64 = samples
        .iter()
        .map(|s| (s.target - params.forward_into(&s.input, &mut hidden)).abs())
        .sum();
    Ok(scale * total / samples.len() as f64)
}

/// Analytic gradient of [`sse_loss`], shaped like the parameters.
pub fn backprop_grads(params: &NetParams, samples: &[Sample]) -> Result<NetParams> {
    check_samples(params, samples)?;
    let mut grad = NetParams::zeros(params.config);
    let mut hidden = vec![0.0; params.config.n_hidden];
    accumulate_grads(params, samples, &mut grad, &mut hidden);
    Ok(grad)
}

// Returns the SSE as a by-product.
fn accumulate_grads(params: &NetParams, samples: &[Sample], grad: &mut NetParams, hidden: &mut [f64]) -> f64 {
    let n_in = params.config.n_in;
    grad.w1.fill(0.0);
    grad.b1.fill(0.0);
    grad.w2.fill(0.0);
    grad.b2 = 0.0;
    let mut sse = 0.0;
    for s in samples {
        let o = params.forward_into(&s.input, hidden);
        let r = s.target - o;
        sse += r * r;
        let d_out = -2.0 * r;
        grad.b2 += d_out;
        for j in 0..hidden.len() {
            let h = hidden[j];
            grad.w2[j] += d_out * h;
            let delta = d_out * params.w2[j] * h * (1.0 - h);
            grad.b1[j] += delta;
            let row = &mut grad.w1[j * n_in..(j + 1) * n_in];
            for (g, x) in row.iter_mut().zip(&s.input) {
                *g += delta * x;
            }
        }
    }
    sse
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_start: f64,
    pub lr_end: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_error_rate: f64,
    /// Multiplies the mean absolute error (in network units) to give the
    /// error rate compared against `target_error_rate`.
    pub error_scale: f64,
    /// Seeds random initialization when no evolved start is supplied.
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_start: 0.9,
            lr_end: 0.02,
            momentum: 0.9,
            max_epochs: 10_000,
            target_error_rate: 0.005,
            error_scale: 1.0,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lr_end && self.lr_end <= self.lr_start && self.lr_start.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate schedule {} -> {} must satisfy 0 <= end <= start",
                self.lr_start, self.lr_end
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} not in [0, 1)", self.momentum)));
        }
        if !(self.error_scale > 0.0) {
            return Err(Error::Config("error scale must be positive".into()));
        }
        Ok(())
    }

    /// Geometric decay from `lr_start` at epoch 0 to `lr_end` at `max_epochs`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if self.lr_start == 0.0 || self.max_epochs == 0 {
            return self.lr_start;
        }
        let frac = epoch as f64 / self.max_epochs as f64;
        self.lr_start * (self.lr_end / self.lr_start).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Loss at the start of every epoch, plus the final loss.
    pub losses: Vec<f64>,
    pub epochs_run: usize,
    pub final_error_rate: f64,
    pub reached_target: bool,
}

/// Full-batch momentum descent on the mean squared error `L = SSE / n`:
/// `Δθ(t) = momentum·Δθ(t-1) - lr(t)·(1 - momentum)·∇L`. Stops as soon
/// as the error rate reaches the target or after `max_epochs` updates.
/// `history.losses` records the SSE.
pub fn train(config: NetConfig, tcfg: &TrainConfig, init: NetParams, samples: &[Sample]) -> Result<(NetParams, TrainHistory)> {
    config.validate()?;
    tcfg.validate()?;
    if init.config != config {
        return Err(Error::Dimension(format!(
            "initial parameters are {:?}, network is {:?}",
            init.config, config
        )));
    }
    check_samples(&init, samples)?;

    let mut params = init;
    let mut grad = NetParams::zeros(config);
    let mut velocity = NetParams::zeros(config);
    let mut hidden = vec![0.0; config.n_hidden];
    let mut history = TrainHistory::default();

    for epoch in 0..=tcfg.max_epochs {
        let rate = error_rate(&params, samples, tcfg.error_scale)?;
        let loss = accumulate_grads(&params, samples, &mut grad, &mut hidden);
        if !loss.is_finite() || !rate.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.losses.push(loss);
        history.final_error_rate = rate;
        history.epochs_run = epoch;
        if rate <= tcfg.target_error_rate {
            history.reached_target = true;
            break;
        }
        if epoch == tcfg.max_epochs {
            break;
        }

        // gradient of the mean squared error, damped by (1 - momentum)
        let m = tcfg.momentum;
        let step = tcfg.learning_rate(epoch) * (1.0 - m) / samples.len() as f64;
        let update = |v: &mut f64, g: f64, p: &mut f64| {
            *v = m * *v - step * g;
            *p += *v;
        };
        for ((v, g), p) in velocity.w1.iter_mut().zip(&grad.w1).zip(params.w1.iter_mut()) {
            update(v, *g, p);
        }
        for ((v, g), p) in velocity.b1.iter_mut().zip(&grad.b1).zip(params.b1.iter_mut()) {
            update(v, *g, p);
        }
        for ((v, g), p) in velocity.w2.iter_mut().zip(&grad.w2).zip(params.w2.iter_mut()) {
            update(v, *g, p);
        }
        update(&mut velocity.b2, grad.b2, &mut params.b2);
    }
    Ok((params, history))
}
