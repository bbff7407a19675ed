//! Monte Carlo frame chain shared by the BER, mitigation and periodic-noise
//! experiments.
//!
//! Signal power is normalized to one per used carrier, so noise powers here
//! are per complex time sample relative to that symbol energy. Frames are
//! processed in fixed-size blocks in parallel; each block draws from its own
//! random stream and block results are reduced in block order, so output is
//! independent of thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::dsp::{complex_gaussian_vector, Complex, RandomStream};
use crate::error::{Error, Result};
use crate::mitigation::{apply_mitigation, MitigationSpec};
use crate::noise::{
    periodic_train_from, sample_impulse_train, sample_middleton_a_complex, sample_mixed_gaussian_complex,
    ImpulseTrainParams, MiddletonAParams, MixedGaussianParams, NoiseState, PeriodicNoiseParams,
};
use crate::ofdm::{BandConfig, Constellation, OfdmModem};

/// Frames sharing one noise realization stream.
pub const FRAMES_PER_BLOCK: usize = 64;

const BITS_TAG: u64 = 0;
const NOISE_TAG: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    Awgn {
        variance: f64,
    },
    MixedGaussian(MixedGaussianParams),
    MiddletonA(MiddletonAParams),
    /// Bursty impulse train plus complex Gaussian background.
    ImpulseTrain {
        params: ImpulseTrainParams,
        background: f64,
    },
    /// Deterministic periodic train plus complex Gaussian background.
    Periodic {
        params: PeriodicNoiseParams,
        background: f64,
    },
}

/// Noise samples for a run of consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlock {
    pub samples: Vec<Complex>,
    /// True where an impulse (not just background) is present.
    pub impulse_mask: Vec<bool>,
}

fn background(stream: RandomStream, n: usize, variance: f64) -> Result<Vec<Complex>> {
    if variance > 0.0 {
        complex_gaussian_vector(stream, n, variance)
    } else {
        Ok(vec![Complex::new(0.0, 0.0); n])
    }
}

impl NoiseSource {
    /// Long-run noise power per complex sample.
    pub fn mean_power(&self) -> f64 {
        match self {
            NoiseSource::Awgn { variance } => *variance,
            NoiseSource::MixedGaussian(p) => p.total_variance(),
            NoiseSource::MiddletonA(p) => p.mixture_variance(),
            NoiseSource::ImpulseTrain { params, background } => {
                params.impulse_variance_per_sample * params.expected_duty_cycle() + background
            }
            NoiseSource::Periodic { params, background } => {
                params.amplitude * params.amplitude * params.pulse_width / params.period + background
            }
        }
    }

    /// Power per complex sample outside impulses.
    pub fn background_power(&self) -> f64 {
        match self {
            NoiseSource::Awgn { variance } => *variance,
            NoiseSource::MixedGaussian(p) => p.sigma_g2,
            NoiseSource::MiddletonA(p) => p.component_variance(0),
            NoiseSource::ImpulseTrain { background, .. } | NoiseSource::Periodic { background, .. } => *background,
        }
    }

    /// Multiplies every noise power by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        match self.clone() {
            NoiseSource::Awgn { variance } => NoiseSource::Awgn { variance: variance * k },
            NoiseSource::MixedGaussian(p) => NoiseSource::MixedGaussian(MixedGaussianParams {
                sigma_g2: p.sigma_g2 * k,
                sigma_i2: p.sigma_i2 * k,
                ..p
            }),
            NoiseSource::MiddletonA(p) => NoiseSource::MiddletonA(MiddletonAParams {
                sigma2: p.sigma2 * k,
                ..p
            }),
            NoiseSource::ImpulseTrain { params, background } => NoiseSource::ImpulseTrain {
                params: ImpulseTrainParams {
                    impulse_variance_per_sample: params.impulse_variance_per_sample * k,
                    ..params
                },
                background: background * k,
            },
            NoiseSource::Periodic { params, background } => NoiseSource::Periodic {
                params: PeriodicNoiseParams {
                    amplitude: params.amplitude * k.sqrt(),
                    ..params
                },
                background: background * k,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSource::Awgn { variance } if !(*variance >= 0.0 && variance.is_finite()) => {
                Err(Error::param("variance", "must be finite and >= 0"))
            }
            NoiseSource::Awgn { .. } => Ok(()),
            NoiseSource::MixedGaussian(p) => p.validate(),
            NoiseSource::MiddletonA(p) => p.validate(),
            NoiseSource::ImpulseTrain { params, background } => {
                params.validate()?;
                check_background(*background)
            }
            NoiseSource::Periodic { params, background } => {
                params.validate()?;
                check_background(*background)
            }
        }
    }

    /// Noise for `frames` frames of `frame_len` samples starting at frame
    /// `first_frame`.
    pub fn block(
        &self,
        first_frame: usize,
        frames: usize,
        frame_len: usize,
        sample_rate: f64,
        stream: RandomStream,
    ) -> Result<NoiseBlock> {
        let n = frames * frame_len;
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(match self {
            NoiseSource::Awgn { variance } => NoiseBlock {
                samples: background(stream, n, *variance)?,
                impulse_mask: vec![false; n],
            },
            NoiseSource::MixedGaussian(p) => {
                let (samples, states) = sample_mixed_gaussian_complex(p, n, stream)?;
                NoiseBlock {
                    samples,
                    impulse_mask: states.into_iter().map(|s| s == NoiseState::Impulse).collect(),
                }
            }
            NoiseSource::MiddletonA(p) => {
                let (samples, comps) = sample_middleton_a_complex(p, n, stream)?;
                NoiseBlock {
                    samples,
                    impulse_mask: comps.into_iter().map(|m| m > 0).collect(),
                }
            }
            NoiseSource::ImpulseTrain { params, background: bg } => {
                let duration = n as f64 / sample_rate;
                let train = sample_impulse_train(params, duration, sample_rate, stream.fork(0))?;
                let mut samples = background(stream.fork(1), n, *bg)?;
                for (s, w) in samples.iter_mut().zip(&train.waveform) {
                    s.re += w;
                }
                let mut impulse_mask = train.support();
                impulse_mask.resize(n, false);
                NoiseBlock { samples, impulse_mask }
            }
            NoiseSource::Periodic { params, background: bg } => {
                let train = periodic_train_from(params, first_frame * frame_len, n, sample_rate)?;
                let mut samples = background(stream, n, *bg)?;
                for (s, w) in samples.iter_mut().zip(&train) {
                    s.re += w;
                }
                NoiseBlock {
                    samples,
                    impulse_mask: train.iter().map(|&w| w != 0.0).collect(),
                }
            }
        })
    }
}

fn check_background(v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param("background", "must be finite and >= 0"))
    }
}

/// One Monte Carlo transmission scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub band: BandConfig,
    pub constellation: Constellation,
    pub noise: NoiseSource,
    /// Seed of the position/phase randomizer, when enabled.
    pub randomizer_seed: Option<u64>,
    pub frames: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::param("frames", "must be >= 1"));
        }
        self.band.validate()?;
        self.noise.validate()
    }

    fn randomizer(&self, frame: usize) -> Option<RandomStream> {
        self.randomizer_seed.map(|s| RandomStream::new(s, frame as u64))
    }

    fn blocks(&self) -> impl ParallelIterator<Item = (usize, usize)> + '_ {
        let count = self.frames.div_ceil(FRAMES_PER_BLOCK);
        (0..count).into_par_iter().map(move |b| {
            let first = b * FRAMES_PER_BLOCK;
            (first, FRAMES_PER_BLOCK.min(self.frames - first))
        })
    }

    fn noise_block(&self, first: usize, frames: usize) -> Result<NoiseBlock> {
        let stream = RandomStream::new(self.seed, NOISE_TAG).fork((first / FRAMES_PER_BLOCK) as u64);
        self.noise.block(
            first,
            frames,
            self.band.frame_len(),
            self.band.sampling_frequency,
            stream,
        )
    }
}

/// Accumulated outcome of a run under one mitigation setting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tally {
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    /// `Σ|Y_k − S_k|²` over used carriers.
    pub error_energy: f64,
    pub carriers: u64,
}

/// Runs with fewer errors than this are flagged low-confidence.
pub const MIN_CONFIDENT_ERRORS: u64 = 100;

impl Tally {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    /// Per-carrier signal-to-total-distortion ratio after mitigation, in dB.
    pub fn snr_db_post(&self) -> f64 {
        10.0 * (self.carriers as f64 / self.error_energy).log10()
    }

    pub fn low_confidence(&self) -> bool {
        self.bit_errors < MIN_CONFIDENT_ERRORS
    }

    fn merge(&mut self, o: &Tally) {
        self.frames += o.frames;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.error_energy += o.error_energy;
        self.carriers += o.carriers;
    }
}

/// Transmits `scenario.frames` random frames and decodes each received frame
/// once per mitigation setting; all settings see identical noise.
pub fn simulate(scenario: &Scenario, mitigations: &[MitigationSpec]) -> Result<Vec<Tally>> {
    scenario.validate()?;
    if mitigations.is_empty() {
        return Err(Error::param("mitigations", "at least one setting required"));
    }
    for m in mitigations {
        m.validate()?;
    }
    let modem = OfdmModem::new(scenario.band)?;
    let flen = scenario.band.frame_len();
    let nbits = scenario.band.used_carriers * scenario.constellation.bits_per_symbol();
    let bit_stream = RandomStream::new(scenario.seed, BITS_TAG);

    let per_block: Vec<Vec<Tally>> = scenario
        .blocks()
        .map(|(first, count)| -> Result<Vec<Tally>> {
            let noise = scenario.noise_block(first, count)?;
            let mut tallies = vec![Tally::default(); mitigations.len()];
            for i in 0..count {
                let frame = first + i;
                let mut rng = bit_stream.fork(frame as u64).rng();
                let bits: Vec<bool> = (0..nbits).map(|_| rng.random()).collect();
                let symbols = scenario.constellation.map(&bits);
                let key = scenario.randomizer(frame);
                let tx = modem.transmit(&symbols, key)?;
                let span = i * flen..(i + 1) * flen;
                let rx: Vec<Complex> = tx
                    .iter()
                    .zip(&noise.samples[span.clone()])
                    .map(|(s, n)| s + n)
                    .collect();
                for (m, tally) in mitigations.iter().zip(tallies.iter_mut()) {
                    let (cleaned, _) = apply_mitigation(&rx, m, &noise.impulse_mask[span.clone()])?;
                    let bins = modem.receive(&cleaned, key)?;
                    let got = modem.used(&bins);
                    tally.frames += 1;
                    tally.bits += nbits as u64;
                    tally.bit_errors += scenario
                        .constellation
                        .demap(got)
                        .iter()
                        .zip(&bits)
                        .filter(|(a, b)| a != b)
                        .count() as u64;
                    tally.error_energy += got.iter().zip(&symbols).map(|(y, s)| (y - s).norm_sqr()).sum::<f64>();
                    tally.carriers += got.len() as u64;
                }
            }
            Ok(tallies)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![Tally::default(); mitigations.len()];
    for block in &per_block {
        for (t, b) in total.iter_mut().zip(block) {
            t.merge(b);
        }
    }
    Ok(total)
}

/// Frame-averaged noise spectrum at the receiver DFT output.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    /// Mean `|N_k|` per bin.
    pub mean_magnitude: Vec<f64>,
    /// Mean `|N_k|²` per bin.
    pub mean_energy: Vec<f64>,
    pub frames: usize,
}

impl NoiseSpectrum {
    pub fn total_energy(&self) -> f64 {
        self.mean_energy.iter().sum()
    }

    pub fn energy_share(&self) -> Vec<f64> {
        let total = self.total_energy();
        self.mean_energy.iter().map(|e| e / total).collect()
    }

    /// Largest single-bin share of the noise energy.
    pub fn max_bin_share(&self) -> f64 {
        self.energy_share().into_iter().fold(0.0, f64::max)
    }

    /// Shares of noise energy on and off the comb bins of a period of
    /// `period_samples` (see [`comb_bins`]).
    pub fn comb_split(&self, period_samples: f64) -> (f64, f64) {
        let comb = comb_bins(self.mean_energy.len(), period_samples);
        let (mut on, mut off) = (0.0, 0.0);
        for (k, s) in self.energy_share().into_iter().enumerate() {
            if comb.binary_search(&k).is_ok() {
                on += s;
            } else {
                off += s;
            }
        }
        (on, off)
    }

    pub fn comb_share(&self, period_samples: f64) -> f64 {
        self.comb_split(period_samples).0
    }
}

/// Bins nearest to multiples of `n/period`: the line spectrum of a train with
/// that period. Exact when the period divides `n`.
pub fn comb_bins(n: usize, period_samples: f64) -> Vec<usize> {
    let spacing = n as f64 / period_samples;
    let lines = period_samples.ceil() as usize;
    let mut bins: Vec<usize> = (0..lines).map(|m| (m as f64 * spacing).round() as usize % n).collect();
    bins.sort_unstable();
    bins.dedup();
    bins
}

/// Passes noise alone through the receiver (prefix removal, optional
/// derandomization, DFT) and averages its spectrum over frames.
pub fn noise_spectrum(scenario: &Scenario) -> Result<NoiseSpectrum> {
    scenario.validate()?;
    let modem = OfdmModem::new(scenario.band)?;
    let n = scenario.band.fft_size;
    let flen = scenario.band.frame_len();
    let per_block: Vec<(Vec<f64>, Vec<f64>)> = scenario
        .blocks()
        .map(|(first, count)| -> Result<(Vec<f64>, Vec<f64>)> {
            let noise = scenario.noise_block(first, count)?;
            let mut mag = vec![0.0; n];
            let mut energy = vec![0.0; n];
            for i in 0..count {
                let bins = modem.receive(&noise.samples[i * flen..(i + 1) * flen], scenario.randomizer(first + i))?;
                for (k, z) in bins.iter().enumerate() {
                    mag[k] += z.norm();
                    energy[k] += z.norm_sqr();
                }
            }
            Ok((mag, energy))
        })
        .collect::<Result<_>>()?;
    let mut mag = vec![0.0; n];
    let mut energy = vec![0.0; n];
    for (m, e) in &per_block {
        for k in 0..n {
            mag[k] += m[k];
            energy[k] += e[k];
        }
    }
    let f = scenario.frames as f64;
    Ok(NoiseSpectrum {
        mean_magnitude: mag.into_iter().map(|v| v / f).collect(),
        mean_energy: energy.into_iter().map(|v| v / f).collect(),
        frames: scenario.frames,
    })
}
