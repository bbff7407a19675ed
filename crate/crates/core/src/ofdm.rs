//! CENELEC/FCC OFDM frame chain and the position/phase randomizer.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{Complex, DftPlan, RandomStream};
use crate::error::{Error, Result};

/// Cyclic prefix implied by the frame timings of both bands.
pub const CYCLIC_PREFIX_LEN: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "CENELEC", alias = "cenelec")]
    Cenelec,
    #[serde(rename = "FCC", alias = "fcc")]
    Fcc,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Cenelec => "CENELEC",
            Band::Fcc => "FCC",
        })
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CENELEC" => Ok(Band::Cenelec),
            "FCC" => Ok(Band::Fcc),
            _ => Err(Error::param("band", format!("unknown band `{s}`"))),
        }
    }
}

/// Transmission parameters for one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandConfig {
    pub band: Band,
    pub fft_size: usize,
    pub used_carriers: usize,
    /// Lowest used DFT bin; carriers occupy a contiguous range from here.
    pub first_carrier: usize,
    pub sample_duration: f64,
    pub frame_duration: f64,
    pub sampling_frequency: f64,
    pub cyclic_prefix_len: usize,
    /// Allocated frequency band in Hz.
    pub band_edges_hz: (f64, f64),
    /// Maximum bit rate listed for the band, for comparison only.
    pub table_max_bitrate: f64,
}

impl BandConfig {
    pub fn new(band: Band) -> Self {
        match band {
            // bins 23..=94 at 1.5625 kHz spacing start at the lower band edge;
            // 72 bins cannot fit inside the 56.2 kHz allocation
            Band::Cenelec => Self {
                band,
                fft_size: 256,
                used_carriers: 72,
                first_carrier: 23,
                sample_duration: 2.5e-6,
                frame_duration: 695e-6,
                sampling_frequency: 400e3,
                cyclic_prefix_len: CYCLIC_PREFIX_LEN,
                band_edges_hz: (35.2e3, 91.4e3),
                table_max_bitrate: 33.4e3,
            },
            // bins 33..=104 at 4.6875 kHz spacing: 154.7 to 487.5 kHz
            Band::Fcc => Self {
                band,
                fft_size: 256,
                used_carriers: 72,
                first_carrier: 33,
                sample_duration: 0.833e-6,
                frame_duration: 231.7e-6,
                sampling_frequency: 1.2e6,
                cyclic_prefix_len: CYCLIC_PREFIX_LEN,
                band_edges_hz: (152.3e3, 489.8e3),
                table_max_bitrate: 303e3,
            },
        }
    }

    /// Moves the used carrier block to start at `first_carrier`.
    pub fn with_first_carrier(mut self, first_carrier: usize) -> Result<Self> {
        self.first_carrier = first_carrier;
        self.validate()?;
        Ok(self)
    }

    /// Inclusive range of used bins.
    pub fn carrier_index_range(&self) -> (usize, usize) {
        (self.first_carrier, self.first_carrier + self.used_carriers - 1)
    }

    pub fn frame_len(&self) -> usize {
        self.fft_size + self.cyclic_prefix_len
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sampling_frequency / self.fft_size as f64
    }

    /// Width of the allocated band in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.band_edges_hz.1 - self.band_edges_hz.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.used_carriers == 0 || self.used_carriers > self.fft_size {
            return Err(Error::param(
                "used_carriers",
                format!("must lie in 1..={}, got {}", self.fft_size, self.used_carriers),
            ));
        }
        if self.first_carrier + self.used_carriers > self.fft_size {
            return Err(Error::param(
                "first_carrier",
                format!(
                    "carrier block {}..{} exceeds the DFT size",
                    self.first_carrier,
                    self.first_carrier + self.used_carriers
                ),
            ));
        }
        let body = self.frame_len() as f64 * self.sample_duration;
        if (body - self.frame_duration).abs() > self.sample_duration {
            return Err(Error::param(
                "frame_duration",
                format!("{body} s of samples does not match {} s", self.frame_duration),
            ));
        }
        if (self.sampling_frequency * self.sample_duration - 1.0).abs() > 1e-3 {
            return Err(Error::param("sampling_frequency", "inconsistent with sample_duration"));
        }
        Ok(())
    }
}

/// Table constants for `band`.
pub fn band_config(band: Band) -> BandConfig {
    BandConfig::new(band)
}

/// Raw PHY rate `used_carriers·bits_per_carrier/frame_duration` in bit/s.
pub fn raw_bitrate(cfg: &BandConfig, bits_per_carrier: u32) -> Result<f64> {
    if bits_per_carrier == 0 {
        return Err(Error::param("bits_per_carrier", "must be >= 1"));
    }
    cfg.validate()?;
    Ok(cfg.used_carriers as f64 * bits_per_carrier as f64 / cfg.frame_duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Bpsk,
    Qpsk,
}

impl Constellation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
        }
    }

    /// Gray-mapped unit-energy symbols.
    pub fn map(self, bits: &[bool]) -> Vec<Complex> {
        match self {
            Constellation::Bpsk => bits
                .iter()
                .map(|&b| Complex::new(if b { -1.0 } else { 1.0 }, 0.0))
                .collect(),
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                bits.chunks(2)
                    .map(|c| {
                        let im = c.get(1).copied().unwrap_or(false);
                        Complex::new(if c[0] { -s } else { s }, if im { -s } else { s })
                    })
                    .collect()
            }
        }
    }

    /// Hard-decision demapping.
    pub fn demap(self, symbols: &[Complex]) -> Vec<bool> {
        match self {
            Constellation::Bpsk => symbols.iter().map(|z| z.re < 0.0).collect(),
            Constellation::Qpsk => symbols.iter().flat_map(|z| [z.re < 0.0, z.im < 0.0]).collect(),
        }
    }
}

/// One OFDM frame in both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    /// All `fft_size` bins; unused bins are zero.
    pub freq_symbols: Vec<Complex>,
    /// Cyclic prefix followed by the IDFT output.
    pub time_samples: Vec<Complex>,
}

/// Modulator/demodulator for one band with a cached transform plan.
#[derive(Debug, Clone)]
pub struct OfdmModem {
    cfg: BandConfig,
    plan: DftPlan,
}

impl OfdmModem {
    pub fn new(cfg: BandConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            plan: DftPlan::new(cfg.fft_size)?,
            cfg,
        })
    }

    pub fn config(&self) -> &BandConfig {
        &self.cfg
    }

    pub fn plan(&self) -> &DftPlan {
        &self.plan
    }

    pub fn modulate(&self, symbols: &[Complex]) -> Result<OfdmFrame> {
        let cfg = &self.cfg;
        if symbols.len() != cfg.used_carriers {
            return Err(Error::LengthMismatch {
                expected: cfg.used_carriers,
                actual: symbols.len(),
            });
        }
        let mut freq = vec![Complex::new(0.0, 0.0); cfg.fft_size];
        freq[cfg.first_carrier..cfg.first_carrier + cfg.used_carriers].copy_from_slice(symbols);
        let mut body = freq.clone();
        self.plan.inverse(&mut body)?;
        let mut time = Vec::with_capacity(cfg.frame_len());
        time.extend_from_slice(&body[cfg.fft_size - cfg.cyclic_prefix_len..]);
        time.extend_from_slice(&body);
        Ok(OfdmFrame {
            freq_symbols: freq,
            time_samples: time,
        })
    }

    /// Strips the prefix and returns every DFT bin.
    pub fn demodulate_all_bins(&self, received: &[Complex]) -> Result<Vec<Complex>> {
        let cfg = &self.cfg;
        if received.len() != cfg.frame_len() {
            return Err(Error::LengthMismatch {
                expected: cfg.frame_len(),
                actual: received.len(),
            });
        }
        let mut body = received[cfg.cyclic_prefix_len..].to_vec();
        self.plan.forward(&mut body)?;
        Ok(body)
    }

    /// Strips the prefix and returns the used carriers.
    pub fn demodulate(&self, received: &[Complex]) -> Result<Vec<Complex>> {
        let bins = self.demodulate_all_bins(received)?;
        let (lo, hi) = self.cfg.carrier_index_range();
        Ok(bins[lo..=hi].to_vec())
    }
}

impl OfdmModem {
    /// Time-domain samples for one frame, optionally scrambled by the
    /// randomizer before the prefix is attached.
    pub fn transmit(&self, symbols: &[Complex], randomizer: Option<RandomStream>) -> Result<Vec<Complex>> {
        let frame = self.modulate(symbols)?;
        let Some(stream) = randomizer else {
            return Ok(frame.time_samples);
        };
        let cp = self.cfg.cyclic_prefix_len;
        let body = randomize(&frame.time_samples[cp..], stream)?;
        let mut out = Vec::with_capacity(self.cfg.frame_len());
        out.extend_from_slice(&body[body.len() - cp..]);
        out.extend_from_slice(&body);
        Ok(out)
    }

    /// All DFT bins of a received frame, undoing the randomizer when given.
    pub fn receive(&self, received: &[Complex], randomizer: Option<RandomStream>) -> Result<Vec<Complex>> {
        let cfg = &self.cfg;
        if received.len() != cfg.frame_len() {
            return Err(Error::LengthMismatch {
                expected: cfg.frame_len(),
                actual: received.len(),
            });
        }
        let body = &received[cfg.cyclic_prefix_len..];
        let mut bins = match randomizer {
            Some(stream) => derandomize(body, stream)?,
            None => body.to_vec(),
        };
        self.plan.forward(&mut bins)?;
        Ok(bins)
    }

    /// The used-carrier slice of a full set of bins.
    pub fn used<'a>(&self, bins: &'a [Complex]) -> &'a [Complex] {
        let (lo, hi) = self.cfg.carrier_index_range();
        &bins[lo..=hi]
    }
}

/// Builds one frame from `used_carriers` symbols.
pub fn modulate(symbols: &[Complex], cfg: &BandConfig) -> Result<OfdmFrame> {
    OfdmModem::new(*cfg)?.modulate(symbols)
}

/// Recovers the used-carrier symbols from one received frame.
pub fn demodulate(received: &[Complex], cfg: &BandConfig) -> Result<Vec<Complex>> {
    OfdmModem::new(*cfg)?.demodulate(received)
}

/// Cyclic shift and per-sample phases drawn from `stream`.
fn scrambling(stream: RandomStream, n: usize) -> (usize, Vec<Complex>) {
    let mut rng = stream.rng();
    let shift = rng.random_range(0..n);
    let phases = (0..n)
        .map(|_| Complex::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
        .collect();
    (shift, phases)
}

/// Cyclically shifts `samples` by a random offset, then rotates each sample by
/// an independent uniform phase.
pub fn randomize(samples: &[Complex], stream: RandomStream) -> Result<Vec<Complex>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = samples.len();
    let (shift, phases) = scrambling(stream, n);
    let mut out = vec![Complex::new(0.0, 0.0); n];
    for (i, &x) in samples.iter().enumerate() {
        out[(i + shift) % n] = x;
    }
    for (y, p) in out.iter_mut().zip(&phases) {
        *y *= p;
    }
    Ok(out)
}

/// Inverse of [`randomize`] for the same stream.
pub fn derandomize(samples: &[Complex], stream: RandomStream) -> Result<Vec<Complex>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = samples.len();
    let (shift, phases) = scrambling(stream, n);
    Ok((0..n)
        .map(|i| {
            let j = (i + shift) % n;
            samples[j] * phases[j].conj()
        })
        .collect())
}
