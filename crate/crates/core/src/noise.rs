//! Noise generators and densities: Mixed Gaussian, Middleton Class-A,
//! renewal impulse trains with memory, and deterministic periodic trains.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{Complex, RandomStream};
use crate::error::{Error, Result};

/// Default series truncation for the Class-A density.
pub const DEFAULT_MIDDLETON_TERMS: usize = 20;

fn gaussian_pdf(x: f64, variance: f64) -> f64 {
    (-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

fn require(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(name, reason()))
    }
}

/// Channel state of one noise sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseState {
    Background,
    Impulse,
}

/// Two-state memoryless impulse noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedGaussianParams {
    /// Probability of the impulse state.
    pub a: f64,
    pub sigma_g2: f64,
    pub sigma_i2: f64,
}

impl MixedGaussianParams {
    pub fn new(a: f64, sigma_g2: f64, sigma_i2: f64) -> Result<Self> {
        let p = Self { a, sigma_g2, sigma_i2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require((0.0..=1.0).contains(&self.a), "a", || {
            format!("must lie in [0, 1], got {}", self.a)
        })?;
        require(self.sigma_g2 > 0.0 && self.sigma_g2.is_finite(), "sigma_g2", || {
            format!("must be > 0, got {}", self.sigma_g2)
        })?;
        require(self.sigma_i2 >= 0.0 && self.sigma_i2.is_finite(), "sigma_i2", || {
            format!("must be >= 0, got {}", self.sigma_i2)
        })
    }

    /// `σ_G² + σ_I²/A`; `None` when the impulse state never occurs.
    pub fn impulse_state_variance(&self) -> Option<f64> {
        (self.a > 0.0).then(|| self.sigma_g2 + self.sigma_i2 / self.a)
    }

    pub fn total_variance(&self) -> f64 {
        self.sigma_g2 + self.sigma_i2
    }

    fn state_variance(&self, state: NoiseState) -> f64 {
        match state {
            NoiseState::Background => self.sigma_g2,
            // only reachable with a > 0
            NoiseState::Impulse => self.sigma_g2 + self.sigma_i2 / self.a,
        }
    }

    fn draw_state(&self, rng: &mut impl Rng) -> NoiseState {
        if self.a > 0.0 && rng.random::<f64>() < self.a {
            NoiseState::Impulse
        } else {
            NoiseState::Background
        }
    }
}

/// Real Mixed Gaussian samples with the true state of each sample.
pub fn sample_mixed_gaussian(
    p: &MixedGaussianParams,
    n: usize,
    stream: RandomStream,
) -> Result<(Vec<f64>, Vec<NoiseState>)> {
    p.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = stream.rng();
    let mut states = Vec::with_capacity(n);
    let samples = (0..n)
        .map(|_| {
            let s = p.draw_state(&mut rng);
            states.push(s);
            let z: f64 = StandardNormal.sample(&mut rng);
            z * p.state_variance(s).sqrt()
        })
        .collect();
    Ok((samples, states))
}

/// Complex Mixed Gaussian samples; the state applies to both quadratures and
/// the state variance is the total `E|z|²`.
pub fn sample_mixed_gaussian_complex(
    p: &MixedGaussianParams,
    n: usize,
    stream: RandomStream,
) -> Result<(Vec<Complex>, Vec<NoiseState>)> {
    p.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = stream.rng();
    let mut states = Vec::with_capacity(n);
    let samples = (0..n)
        .map(|_| {
            let s = p.draw_state(&mut rng);
            states.push(s);
            let sd = (p.state_variance(s) / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(sd * re, sd * im)
        })
        .collect();
    Ok((samples, states))
}

pub fn pdf_mixed_gaussian(p: &MixedGaussianParams, x: f64) -> Result<f64> {
    p.validate()?;
    let mut d = (1.0 - p.a) * gaussian_pdf(x, p.sigma_g2);
    if let Some(v) = p.impulse_state_variance() {
        d += p.a * gaussian_pdf(x, v);
    }
    Ok(d)
}

/// Middleton Class-A parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiddletonAParams {
    /// Impulsive index.
    pub a: f64,
    /// Gaussian-to-impulsive power ratio `σ_G²/σ_I²`.
    pub gamma: f64,
    /// Total variance `σ_G² + σ_I²`.
    pub sigma2: f64,
    #[serde(default = "default_terms")]
    pub truncation_m: usize,
}

fn default_terms() -> usize {
    DEFAULT_MIDDLETON_TERMS
}

impl MiddletonAParams {
    pub fn new(a: f64, gamma: f64, sigma2: f64) -> Result<Self> {
        let p = Self {
            a,
            gamma,
            sigma2,
            truncation_m: DEFAULT_MIDDLETON_TERMS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_terms(mut self, m: usize) -> Result<Self> {
        self.truncation_m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.a > 0.0 && self.a.is_finite(), "a", || {
            format!("must be > 0, got {}", self.a)
        })?;
        require(self.gamma > 0.0 && self.gamma.is_finite(), "gamma", || {
            format!("must be > 0, got {}", self.gamma)
        })?;
        require(self.sigma2 > 0.0 && self.sigma2.is_finite(), "sigma2", || {
            format!("must be > 0, got {}", self.sigma2)
        })
    }

    /// Poisson weights `e^{-A} A^m / m!`, `m = 0..=M`, renormalized.
    pub fn weights(&self) -> Vec<f64> {
        // log domain: A^m/m! overflows long before M = 200 for large A
        let mut log_w = Vec::with_capacity(self.truncation_m + 1);
        let mut acc = 0.0;
        for m in 0..=self.truncation_m {
            if m > 0 {
                acc += self.a.ln() - (m as f64).ln();
            }
            log_w.push(acc);
        }
        let peak = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - peak).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// Variance of the `m`-th mixture component, `σ²(m/A + Γ)/(1 + Γ)`.
    pub fn component_variance(&self, m: usize) -> f64 {
        self.sigma2 * (m as f64 / self.a + self.gamma) / (1.0 + self.gamma)
    }

    /// Variance of the truncated mixture `Σ w_m σ_m²`.
    pub fn mixture_variance(&self) -> f64 {
        self.weights()
            .iter()
            .enumerate()
            .map(|(m, w)| w * self.component_variance(m))
            .sum()
    }

    /// Draws a mixture component index.
    fn component_sampler(&self) -> impl Fn(&mut rand_chacha::ChaCha8Rng) -> usize {
        let cdf: Vec<f64> = self
            .weights()
            .iter()
            .scan(0.0, |s, w| {
                *s += w;
                Some(*s)
            })
            .collect();
        move |rng| {
            let u: f64 = rng.random();
            cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
        }
    }
}

/// Truncated Class-A density.
pub fn pdf_middleton_a(p: &MiddletonAParams, x: f64) -> Result<f64> {
    p.validate()?;
    Ok(p.weights()
        .iter()
        .enumerate()
        .map(|(m, w)| w * gaussian_pdf(x, p.component_variance(m)))
        .sum())
}

/// Real Class-A samples drawn from the truncated mixture.
pub fn sample_middleton_a(p: &MiddletonAParams, n: usize, stream: RandomStream) -> Result<Vec<f64>> {
    p.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = stream.rng();
    let component = p.component_sampler();
    Ok((0..n)
        .map(|_| {
            let v = p.component_variance(component(&mut rng));
            let z: f64 = StandardNormal.sample(&mut rng);
            z * v.sqrt()
        })
        .collect())
}

/// Complex Class-A samples with the mixture component index of each sample
/// (0 = background only).
pub fn sample_middleton_a_complex(
    p: &MiddletonAParams,
    n: usize,
    stream: RandomStream,
) -> Result<(Vec<Complex>, Vec<usize>)> {
    p.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = stream.rng();
    let component = p.component_sampler();
    let mut components = Vec::with_capacity(n);
    let samples = (0..n)
        .map(|_| {
            let m = component(&mut rng);
            components.push(m);
            let sd = (p.component_variance(m) / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(sd * re, sd * im)
        })
        .collect();
    Ok((samples, components))
}

/// Distribution of pulse durations or inter-arrival gaps around a given mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalDistribution {
    #[default]
    Exponential,
    /// Always exactly the mean.
    Constant,
    /// Uniform on `[0, 2·mean]`.
    Uniform,
}

impl IntervalDistribution {
    fn draw(self, mean: f64, rng: &mut impl Rng) -> f64 {
        match self {
            IntervalDistribution::Exponential => Exp::new(1.0 / mean).expect("positive rate").sample(rng),
            IntervalDistribution::Constant => mean,
            IntervalDistribution::Uniform => rng.random_range(0.0..2.0 * mean),
        }
    }
}

/// How the inter-arrival time of an impulse train is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterarrivalConvention {
    /// From the end of one pulse to the start of the next.
    #[default]
    Gap,
    /// From the start of one pulse to the start of the next.
    StartToStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseTrainParams {
    /// Mean pulse duration in seconds.
    pub mean_duration: f64,
    /// Mean inter-arrival time in seconds, measured per `convention`.
    pub mean_interarrival: f64,
    /// Per-sample impulse power while a pulse is active.
    pub impulse_variance_per_sample: f64,
    #[serde(default)]
    pub duration_distribution: IntervalDistribution,
    #[serde(default)]
    pub interarrival_distribution: IntervalDistribution,
    #[serde(default)]
    pub convention: InterarrivalConvention,
}

impl ImpulseTrainParams {
    /// Exponential durations and gaps with the gap convention.
    pub fn new(mean_duration: f64, mean_interarrival: f64, impulse_variance_per_sample: f64) -> Result<Self> {
        let p = Self {
            mean_duration,
            mean_interarrival,
            impulse_variance_per_sample,
            duration_distribution: IntervalDistribution::default(),
            interarrival_distribution: IntervalDistribution::default(),
            convention: InterarrivalConvention::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_convention(mut self, convention: InterarrivalConvention) -> Result<Self> {
        self.convention = convention;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.mean_duration > 0.0 && self.mean_duration.is_finite(),
            "mean_duration",
            || format!("must be > 0, got {}", self.mean_duration),
        )?;
        require(
            self.mean_interarrival > 0.0 && self.mean_interarrival.is_finite(),
            "mean_interarrival",
            || format!("must be > 0, got {}", self.mean_interarrival),
        )?;
        require(
            self.impulse_variance_per_sample >= 0.0 && self.impulse_variance_per_sample.is_finite(),
            "impulse_variance_per_sample",
            || format!("must be >= 0, got {}", self.impulse_variance_per_sample),
        )?;
        if self.convention == InterarrivalConvention::StartToStart {
            require(self.mean_interarrival > self.mean_duration, "mean_interarrival", || {
                "start-to-start spacing must exceed the mean pulse duration".into()
            })?;
        }
        Ok(())
    }

    /// Long-run fraction of time spent inside pulses.
    pub fn expected_duty_cycle(&self) -> f64 {
        match self.convention {
            InterarrivalConvention::Gap => self.mean_duration / (self.mean_duration + self.mean_interarrival),
            InterarrivalConvention::StartToStart => self.mean_duration / self.mean_interarrival,
        }
    }

    fn mean_gap(&self) -> f64 {
        match self.convention {
            InterarrivalConvention::Gap => self.mean_interarrival,
            InterarrivalConvention::StartToStart => self.mean_interarrival - self.mean_duration,
        }
    }

    /// Per-sample pulse power that makes the long-run average impulse power
    /// equal `target_sigma_i2`.
    pub fn calibrated_for(mut self, target_sigma_i2: f64) -> Result<Self> {
        require(target_sigma_i2 >= 0.0, "target_sigma_i2", || "must be >= 0".into())?;
        self.impulse_variance_per_sample = target_sigma_i2 / self.expected_duty_cycle();
        Ok(self)
    }
}

/// One pulse, aligned to the sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseEvent {
    pub start_time: f64,
    pub duration: f64,
    pub first_sample: usize,
    pub sample_count: usize,
}

impl ImpulseEvent {
    pub fn end_sample(&self) -> usize {
        self.first_sample + self.sample_count
    }
}

/// A sampled impulse-noise trace with its burst structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseTrain {
    /// Sorted, non-overlapping pulses.
    pub events: Vec<ImpulseEvent>,
    /// Impulse amplitudes; exactly zero outside events.
    pub waveform: Vec<f64>,
    pub sample_rate: f64,
    pub convention: InterarrivalConvention,
}

impl ImpulseTrain {
    /// Indicator of samples covered by a pulse.
    pub fn support(&self) -> Vec<bool> {
        let mut mask = vec![false; self.waveform.len()];
        for e in &self.events {
            mask[e.first_sample..e.end_sample()].fill(true);
        }
        mask
    }

    pub fn durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.duration)
    }

    /// Inter-arrival times between consecutive pulses, per the train's convention.
    pub fn interarrivals(&self) -> Vec<f64> {
        self.events
            .windows(2)
            .map(|w| match self.convention {
                InterarrivalConvention::Gap => w[1].start_time - (w[0].start_time + w[0].duration),
                InterarrivalConvention::StartToStart => w[1].start_time - w[0].start_time,
            })
            .collect()
    }
}

/// Renewal-process impulse train of the given length.
///
/// Pulse boundaries are drawn in continuous time and snapped up to the sample
/// grid; every pulse keeps at least one sample and the final pulse is cut at
/// the end of the trace.
pub fn sample_impulse_train(
    p: &ImpulseTrainParams,
    duration: f64,
    sample_rate: f64,
    stream: RandomStream,
) -> Result<ImpulseTrain> {
    p.validate()?;
    require(sample_rate > 0.0 && sample_rate.is_finite(), "sample_rate", || {
        format!("must be > 0, got {sample_rate}")
    })?;
    require(duration >= p.mean_interarrival, "duration", || {
        format!(
            "trace of {duration} s is shorter than one mean inter-arrival time ({} s)",
            p.mean_interarrival
        )
    })?;
    let total = (duration * sample_rate).round() as usize;
    let mut timing = stream.fork(0).rng();
    let mean_gap = p.mean_gap();

    let mut events = Vec::new();
    let mut t = 0.0;
    let mut prev_end = 0usize;
    loop {
        let start = t + p.interarrival_distribution.draw(mean_gap, &mut timing);
        let end = start + p.duration_distribution.draw(p.mean_duration, &mut timing);
        t = end;
        let first = ((start * sample_rate).ceil() as usize).max(prev_end);
        if first >= total {
            break;
        }
        let last = ((end * sample_rate).ceil() as usize).max(first + 1).min(total);
        events.push(ImpulseEvent {
            start_time: first as f64 / sample_rate,
            duration: (last - first) as f64 / sample_rate,
            first_sample: first,
            sample_count: last - first,
        });
        prev_end = last;
    }

    let mut waveform = vec![0.0; total];
    if p.impulse_variance_per_sample > 0.0 {
        let sd = p.impulse_variance_per_sample.sqrt();
        let mut amp = stream.fork(1).rng();
        for e in &events {
            for w in &mut waveform[e.first_sample..e.end_sample()] {
                let z: f64 = StandardNormal.sample(&mut amp);
                *w = sd * z;
            }
        }
    }
    Ok(ImpulseTrain {
        events,
        waveform,
        sample_rate,
        convention: p.convention,
    })
}

/// Deterministic periodic pulse train; all times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicNoiseParams {
    pub period: f64,
    pub pulse_width: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase_offset: f64,
}

impl PeriodicNoiseParams {
    /// Builds the parameters from sample counts at `sample_rate`.
    pub fn from_samples(period: f64, width: f64, amplitude: f64, offset: f64, sample_rate: f64) -> Result<Self> {
        let p = Self {
            period: period / sample_rate,
            pulse_width: width / sample_rate,
            amplitude,
            phase_offset: offset / sample_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.period > 0.0 && self.period.is_finite(), "period", || {
            format!("must be > 0, got {}", self.period)
        })?;
        require(
            self.pulse_width > 0.0 && self.pulse_width <= self.period,
            "pulse_width",
            || format!("must lie in (0, period], got {}", self.pulse_width),
        )?;
        require(self.amplitude.is_finite(), "amplitude", || "must be finite".into())?;
        require(
            self.phase_offset >= 0.0 && self.phase_offset < self.period,
            "phase_offset",
            || format!("must lie in [0, period), got {}", self.phase_offset),
        )
    }
}

/// Snaps values within rounding error of an integer onto it.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// `n` samples of a periodic train: `amplitude` inside each pulse window,
/// zero elsewhere, pulses starting at `phase_offset + k·period`.
pub fn sample_periodic_train(p: &PeriodicNoiseParams, n: usize, sample_rate: f64) -> Result<Vec<f64>> {
    periodic_train_from(p, 0, n, sample_rate)
}

/// Like [`sample_periodic_train`] but starting at absolute sample `start`.
pub fn periodic_train_from(p: &PeriodicNoiseParams, start: usize, n: usize, sample_rate: f64) -> Result<Vec<f64>> {
    p.validate()?;
    let period = snap(p.period * sample_rate);
    let width = snap(p.pulse_width * sample_rate);
    let offset = snap(p.phase_offset * sample_rate);
    require(period >= 1.0, "period", || {
        format!("must span at least one sample, got {period} samples")
    })?;
    require(width >= 1.0, "pulse_width", || {
        format!("pulse narrower than one sample ({width} samples)")
    })?;
    Ok((start..start + n)
        .map(|i| {
            let phase = (i as f64 - offset).rem_euclid(period);
            if phase < width {
                p.amplitude
            } else {
                0.0
            }
        })
        .collect())
}
