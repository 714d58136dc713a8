//! Least-mean-square adaptive FIR filter.
//!
//! ```text
//! y(k)   = w(k)ᵀ x(k)
//! e(k)   = d(k) - y(k)
//! w(k+1) = w(k) + μ e(k) x(k)
//! ```
//!
//! `x(k)` is the delay line `[x(k), x(k-1), .., x(k-N+1)]`, most recent
//! first. Stability needs `0 < μ < 1/λ_max` of the input autocorrelation
//! matrix; [`estimate_mu_bound`] gives the usual power-based surrogate.
//!
//! For single-sensor denoising the filter runs as a one-step line enhancer
//! ([`LineEnhancer`]): the desired signal is the raw sample and the input
//! is the raw signal delayed by one step, so `y` is the cleaned estimate
//! and `e` the unpredictable residue.

use crate::error::{Error, Result};
use crate::signals::VitalChannel;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub order: usize,
    pub mu: f64,
    pub initial_weights: Vec<f64>,
}

impl FilterConfig {
    /// Order `n`, step `mu`, zero initial weights.
    pub fn new(order: usize, mu: f64) -> Self {
        Self {
            order,
            mu,
            initial_weights: vec![0.0; order],
        }
    }

    /// Starts from an `n`-tap moving average instead of zeros, so the
    /// output tracks the input level from the first sample.
    pub fn smoothing(order: usize, mu: f64) -> Self {
        Self {
            order,
            mu,
            initial_weights: vec![1.0 / order.max(1) as f64; order],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("filter order must be positive".into()));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if self.initial_weights.len() != self.order {
            return Err(Error::Dimension(format!(
                "{} initial weights for order {}",
                self.initial_weights.len(),
                self.order
            )));
        }
        if self.initial_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("initial filter weights"));
        }
        Ok(())
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::new(8, 0.01)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub weights: Vec<f64>,
    /// Most recent input first.
    pub delay_line: Vec<f64>,
    steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub y: f64,
    pub e: f64,
}

pub fn lms_init(config: &FilterConfig) -> Result<FilterState> {
    config.validate()?;
    Ok(FilterState {
        weights: config.initial_weights.clone(),
        delay_line: vec![0.0; config.order],
        steps: 0,
    })
}

impl FilterState {
    pub fn order(&self) -> usize {
        self.weights.len()
    }

    /// Output for the current delay line without adapting.
    pub fn output(&self) -> f64 {
        self.weights.iter().zip(&self.delay_line).map(|(w, x)| w * x).sum()
    }

    /// Shifts `x_new` into the delay line, filters, and adapts the weights
    /// toward `d`. A non-finite output or weight is reported as divergence
    /// and leaves the state poisoned; callers should drop it.
    pub fn step(&mut self, x_new: f64, d: f64, mu: f64) -> Result<StepOutput> {
        if !x_new.is_finite() || !d.is_finite() {
            return Err(Error::NonFinite("filter input"));
        }
        self.delay_line.rotate_right(1);
        self.delay_line[0] = x_new;

        let y = self.output();
        let e = d - y;
        if !y.is_finite() || !e.is_finite() {
            return Err(Error::FilterDiverged { step: self.steps });
        }
        let g = mu * e;
        for (w, &x) in self.weights.iter_mut().zip(&self.delay_line) {
            if x != 0.0 {
                *w += g * x;
            }
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::FilterDiverged { step: self.steps });
        }
        self.steps += 1;
        Ok(StepOutput { y, e })
    }
}

pub fn lms_step(state: &mut FilterState, x_new: f64, d: f64, mu: f64) -> Result<StepOutput> {
    state.step(x_new, d, mu)
}

/// Runs the filter over paired input/desired sequences and returns the
/// output and error traces.
pub fn lms_run(config: &FilterConfig, x: &[f64], d: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != d.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: d.len(),
        });
    }
    let mut state = lms_init(config)?;
    let mut ys = Vec::with_capacity(x.len());
    let mut es = Vec::with_capacity(x.len());
    for (&xi, &di) in x.iter().zip(d) {
        let out = state.step(xi, di, config.mu)?;
        ys.push(out.y);
        es.push(out.e);
    }
    Ok((ys, es))
}

/// Conservative step-size bound `1 / (N · P)`, with `P` the mean input power.
/// Since `λ_max ≤ tr(R) = N · P`, any `μ` below this is also below `1/λ_max`.
pub fn estimate_mu_bound(x: &[f64], order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::Config("filter order must be positive".into()));
    }
    if x.len() < order {
        return Err(Error::InsufficientData(format!(
            "{} samples for order {order}",
            x.len()
        )));
    }
    let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    if power == 0.0 {
        return Err(Error::InsufficientData("input power is zero".into()));
    }
    if !power.is_finite() {
        return Err(Error::NonFinite("filter input"));
    }
    Ok(1.0 / (order as f64 * power))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filtered {
    pub raw: f64,
    pub filtered: f64,
    pub error: f64,
}

/// One-step line enhancer over a single channel. Values are mapped to
/// `(raw - offset) / span` before filtering so that one `μ` suits every
/// channel; outputs are mapped back to channel units.
#[derive(Debug, Clone)]
pub struct LineEnhancer {
    state: FilterState,
    mu: f64,
    offset: f64,
    span: f64,
    prev: Option<f64>,
}

impl LineEnhancer {
    pub fn new(config: &FilterConfig, offset: f64, span: f64) -> Result<Self> {
        if !(span > 0.0) || !span.is_finite() || !offset.is_finite() {
            return Err(Error::Config(format!("bad filter scaling {offset}/{span}")));
        }
        Ok(Self {
            state: lms_init(config)?,
            mu: config.mu,
            offset,
            span,
            prev: None,
        })
    }

    /// Scales by the channel's plausibility range.
    pub fn for_channel(channel: VitalChannel, config: &FilterConfig) -> Result<Self> {
        let (lo, hi) = channel.plausibility();
        Self::new(config, lo, hi - lo)
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn process(&mut self, raw: f64) -> Result<Filtered> {
        if !raw.is_finite() {
            return Err(Error::NonFinite("filter input"));
        }
        let z = (raw - self.offset) / self.span;
        let prev = match self.prev {
            Some(p) => p,
            None => {
                // no history yet: treat the signal as having been constant
                self.state.delay_line.fill(z);
                z
            }
        };
        let out = self.state.step(prev, z, self.mu)?;
        self.prev = Some(z);
        Ok(Filtered {
            raw,
            filtered: out.y * self.span + self.offset,
            error: out.e * self.span,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_examples() {
        let s = lms_init(&FilterConfig::new(4, 0.01)).unwrap();
        assert_eq!(s.weights, vec![0.0; 4]);
        assert_eq!(s.delay_line, vec![0.0; 4]);

        let cfg = FilterConfig {
            order: 2,
            mu: 0.1,
            initial_weights: vec![0.5, 0.5],
        };
        assert_eq!(lms_init(&cfg).unwrap().weights, vec![0.5, 0.5]);

        assert!(lms_init(&FilterConfig::new(0, 0.01)).is_err());
        let nan = FilterConfig {
            order: 1,
            mu: 0.1,
            initial_weights: vec![f64::NAN],
        };
        assert!(matches!(lms_init(&nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_weights_pass_desired_to_error() {
        let mut s = lms_init(&FilterConfig::new(4, 0.01)).unwrap();
        let out = s.step(3.7, 5.0, 0.01).unwrap();
        assert_eq!(out.y, 0.0);
        assert_eq!(out.e, 5.0);
    }

    #[test]
    fn zero_excitation_keeps_weights() {
        let cfg = FilterConfig {
            order: 3,
            mu: 0.5,
            initial_weights: vec![0.3, -0.0, 1e-9],
        };
        let mut s = lms_init(&cfg).unwrap();
        let before: Vec<u64> = s.weights.iter().map(|w| w.to_bits()).collect();
        s.step(0.0, -4.0, 0.5).unwrap();
        let after: Vec<u64> = s.weights.iter().map(|w| w.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn hand_evaluated_step() {
        let cfg = FilterConfig {
            order: 2,
            mu: 0.1,
            initial_weights: vec![0.5, 0.5],
        };
        let mut s = lms_init(&cfg).unwrap();
        s.delay_line = vec![2.0, 0.0];
        // shift in 1.0 -> delay line (1, 2)
        let out = s.step(1.0, 2.0, 0.1).unwrap();
        assert_eq!(s.delay_line, vec![1.0, 2.0]);
        assert!((out.y - 1.5).abs() < 1e-15);
        assert!((out.e - 0.5).abs() < 1e-15);
        assert!((s.weights[0] - 0.55).abs() < 1e-15);
        assert!((s.weights[1] - 0.60).abs() < 1e-15);
    }

    #[test]
    fn run_on_zeros() {
        let (y, e) = lms_run(&FilterConfig::new(4, 0.1), &[0.0; 16], &[0.0; 16]).unwrap();
        assert!(y.iter().chain(&e).all(|v| *v == 0.0));
        assert!(matches!(
            lms_run(&FilterConfig::new(4, 0.1), &[0.0; 3], &[0.0; 4]),
            Err(Error::LengthMismatch { left: 3, right: 4 })
        ));
    }

    fn system_identification(mu_frac: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Result<FilterState>) {
        let w_star = vec![0.4, -0.3, 0.2, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut hist = [0.0; 4];
        let d: Vec<f64> = x
            .iter()
            .map(|&xi| {
                hist.rotate_right(1);
                hist[0] = xi;
                hist.iter().zip(&w_star).map(|(a, b)| a * b).sum()
            })
            .collect();
        let bound = estimate_mu_bound(&x, 4).unwrap();
        let cfg = FilterConfig::new(4, mu_frac * bound);
        let mut s = lms_init(&cfg).unwrap();
        let mut res = Ok(());
        for (&xi, &di) in x.iter().zip(&d) {
            if let Err(e) = s.step(xi, di, cfg.mu) {
                res = Err(e);
                break;
            }
        }
        (w_star, x, res.map(|_| s))
    }

    #[test]
    fn identifies_known_system() {
        let (w_star, _, s) = system_identification(0.5, 5000, 3);
        let s = s.unwrap();
        let dist: f64 = s.weights.iter().zip(&w_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dist < 1e-3, "{dist}");
    }

    #[test]
    fn large_mu_diverges() {
        let (_, _, s) = system_identification(10.0, 5000, 3);
        assert!(matches!(s, Err(Error::FilterDiverged { .. })));
    }

    #[test]
    fn mu_bound_examples() {
        let x: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(estimate_mu_bound(&x, 4).unwrap(), 0.25);
        assert!(estimate_mu_bound(&[0.0; 8], 4).is_err());
        let c = 3.0;
        assert!((estimate_mu_bound(&[c; 5], 2).unwrap() - 1.0 / (2.0 * c * c)).abs() < 1e-15);
        assert!(estimate_mu_bound(&[1.0; 3], 4).is_err());
    }

    #[test]
    fn output_is_linear_in_delay_line() {
        let mut s = lms_init(&FilterConfig {
            order: 3,
            mu: 0.1,
            initial_weights: vec![0.2, -0.7, 1.3],
        })
        .unwrap();
        s.delay_line = vec![1.5, -2.0, 0.25];
        let y1 = s.output();
        for v in &mut s.delay_line {
            *v *= 4.0;
        }
        assert!((s.output() - 4.0 * y1).abs() < 1e-12);
    }

    #[test]
    fn converges_close_to_noise_floor() {
        let n = 10_000;
        let w_star = [0.5, -0.25, 0.125, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut hist = [0.0; 4];
        let mut clean = Vec::with_capacity(n);
        for &xi in &x {
            hist.rotate_right(1);
            hist[0] = xi;
            clean.push(hist.iter().zip(&w_star).map(|(a, b)| a * b).sum::<f64>());
        }
        let sig_rms = (clean.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        let sigma = 0.01 * sig_rms;
        let noise: Vec<f64> = (0..n).map(|_| sigma * rng.gen_range(-1.7320508..1.7320508)).collect();
        let d: Vec<f64> = clean.iter().zip(&noise).map(|(c, v)| c + v).collect();

        let mu = 0.5 * estimate_mu_bound(&x, 4).unwrap();
        let (_, e) = lms_run(&FilterConfig::new(4, mu), &x, &d).unwrap();
        let tail = n / 10;
        let adaptive: f64 = e[n - tail..].iter().map(|v| v * v).sum::<f64>() / tail as f64;
        // oracle: weights frozen at w*, so the error is exactly the noise
        let oracle: f64 = noise[n - tail..].iter().map(|v| v * v).sum::<f64>() / tail as f64;
        assert!(adaptive <= 2.0 * oracle, "{adaptive} vs {oracle}");
    }

    #[test]
    fn enhancer_passes_constant_signal() {
        let mut f = LineEnhancer::for_channel(VitalChannel::Hr, &FilterConfig::smoothing(8, 0.01)).unwrap();
        for _ in 0..50 {
            let out = f.process(80.0).unwrap();
            assert!((out.filtered - 80.0).abs() < 1e-9);
        }
    }

    #[test]
    fn enhancer_reduces_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = LineEnhancer::for_channel(VitalChannel::Hr, &FilterConfig::smoothing(8, 0.01)).unwrap();
        let (mut raw_se, mut filt_se) = (0.0, 0.0);
        for k in 0..2000 {
            let v = 80.0 + rng.gen_range(-3.0..3.0);
            let out = f.process(v).unwrap();
            if k >= 100 {
                raw_se += (v - 80.0f64).powi(2);
                filt_se += (out.filtered - 80.0).powi(2);
            }
        }
        assert!(filt_se < 0.5 * raw_se, "{filt_se} vs {raw_se}");
    }
}
