//! Receiver-side impulse mitigation applied to time samples before the DFT.

use serde::{Deserialize, Serialize};

use crate::chain::{simulate, NoiseSource, Scenario};
use crate::dsp::{complex_gaussian_vector, Complex, RandomStream};
use crate::error::{Error, Result};
use crate::noise::{sample_mixed_gaussian_complex, MixedGaussianParams, NoiseState};
use crate::ofdm::{BandConfig, Constellation, OfdmModem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationMethod {
    Null,
    Clip,
    #[default]
    Passthrough,
}

impl MitigationMethod {
    pub fn name(self) -> &'static str {
        match self {
            MitigationMethod::Null => "null",
            MitigationMethod::Clip => "clip",
            MitigationMethod::Passthrough => "passthrough",
        }
    }
}

/// Mitigation applied to one received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MitigationConfig {
    pub method: MitigationMethod,
    /// Magnitude threshold, in amplitude units.
    pub threshold: f64,
    /// Known impulse positions; overrides threshold detection when present.
    pub oracle_mask: Option<Vec<bool>>,
}

impl MitigationConfig {
    pub fn new(method: MitigationMethod, threshold: f64) -> Self {
        Self {
            method,
            threshold,
            oracle_mask: None,
        }
    }

    pub fn with_oracle(mut self, mask: Vec<bool>) -> Self {
        self.oracle_mask = Some(mask);
        self
    }

    pub fn validate(&self, frame_len: usize) -> Result<()> {
        check_threshold(self.method, self.threshold)?;
        match &self.oracle_mask {
            Some(m) if m.len() != frame_len => Err(Error::LengthMismatch {
                expected: frame_len,
                actual: m.len(),
            }),
            _ => Ok(()),
        }
    }
}

fn check_threshold(method: MitigationMethod, threshold: f64) -> Result<()> {
    if method != MitigationMethod::Passthrough && !(threshold > 0.0) {
        return Err(Error::param(
            "threshold",
            format!("must be > 0 for {}, got {threshold}", method.name()),
        ));
    }
    Ok(())
}

// Magnitudes within a few ulps of the threshold count as on it, so a clipped
// sample is not clipped again.
fn above(z: Complex, threshold: f64) -> bool {
    z.norm() > threshold * (1.0 + 4.0 * f64::EPSILON)
}

fn detect(received: &[Complex], cfg: &MitigationConfig) -> Vec<bool> {
    match &cfg.oracle_mask {
        Some(m) => m.clone(),
        None => received.iter().map(|&z| above(z, cfg.threshold)).collect(),
    }
}

/// Zeroes samples above the threshold (or flagged by the oracle mask).
pub fn null_samples(received: &[Complex], cfg: &MitigationConfig) -> Result<(Vec<Complex>, Vec<bool>)> {
    if cfg.method != MitigationMethod::Null {
        return Err(Error::param("method", "null_samples needs method = null"));
    }
    cfg.validate(received.len())?;
    let mask = detect(received, cfg);
    let out = received
        .iter()
        .zip(&mask)
        .map(|(&z, &hit)| if hit { Complex::new(0.0, 0.0) } else { z })
        .collect();
    Ok((out, mask))
}

/// Limits magnitudes to the threshold, keeping phase.
pub fn clip_samples(received: &[Complex], cfg: &MitigationConfig) -> Result<(Vec<Complex>, Vec<bool>)> {
    if cfg.method != MitigationMethod::Clip {
        return Err(Error::param("method", "clip_samples needs method = clip"));
    }
    cfg.validate(received.len())?;
    let mask = detect(received, cfg);
    let out = received
        .iter()
        .zip(&mask)
        .map(|(&z, &hit)| {
            let r = z.norm();
            if hit && r > cfg.threshold {
                z * (cfg.threshold / r)
            } else {
                z
            }
        })
        .collect();
    Ok((out, mask))
}

pub fn apply(received: &[Complex], cfg: &MitigationConfig) -> Result<(Vec<Complex>, Vec<bool>)> {
    match cfg.method {
        MitigationMethod::Null => null_samples(received, cfg),
        MitigationMethod::Clip => clip_samples(received, cfg),
        MitigationMethod::Passthrough => {
            cfg.validate(received.len())?;
            Ok((received.to_vec(), vec![false; received.len()]))
        }
    }
}

/// Mitigation setting for a whole Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigationSpec {
    pub method: MitigationMethod,
    #[serde(default = "infinite")]
    pub threshold: f64,
    /// Use the true impulse positions instead of threshold detection.
    #[serde(default)]
    pub genie: bool,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl Default for MitigationSpec {
    fn default() -> Self {
        Self::passthrough()
    }
}

impl MitigationSpec {
    pub fn new(method: MitigationMethod, threshold: f64) -> Self {
        Self {
            method,
            threshold,
            genie: false,
        }
    }

    pub fn passthrough() -> Self {
        Self::new(MitigationMethod::Passthrough, f64::INFINITY)
    }

    pub fn genie_null() -> Self {
        Self {
            method: MitigationMethod::Null,
            threshold: f64::INFINITY,
            genie: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold(self.method, self.threshold)
    }
}

/// Applies `spec` to a frame; `impulse_mask` is only read in genie mode.
pub fn apply_mitigation(
    received: &[Complex],
    spec: &MitigationSpec,
    impulse_mask: &[bool],
) -> Result<(Vec<Complex>, Vec<bool>)> {
    if spec.method == MitigationMethod::Passthrough {
        return Ok((received.to_vec(), vec![false; received.len()]));
    }
    let mut cfg = MitigationConfig::new(spec.method, spec.threshold);
    if spec.genie {
        cfg.oracle_mask = Some(impulse_mask.to_vec());
    }
    apply(received, &cfg)
}

/// Residual per-carrier variance after nulling every impulse sample.
pub fn residual_variance_prediction(a: f64, eb_sample: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::param("A", format!("must lie in [0, 1], got {a}")));
    }
    if !(eb_sample >= 0.0) {
        return Err(Error::param("eb_sample", "must be >= 0"));
    }
    Ok(a * eb_sample)
}

/// Mean transmitted power per time sample for unit-energy symbols.
pub fn signal_power_per_sample(cfg: &BandConfig) -> f64 {
    cfg.used_carriers as f64 / cfg.fft_size as f64
}

/// Three times the RMS of the impulse-free received signal.
pub fn default_threshold(signal_power: f64, background_power: f64) -> f64 {
    3.0 * (signal_power + background_power).sqrt()
}

/// Outcome of a genie-aided nulling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenieResidual {
    pub a: f64,
    pub eb_sample: f64,
    /// Measured impulse-attributable variance per DFT bin.
    pub measured: f64,
    pub predicted: f64,
    /// Fraction of samples actually nulled.
    pub nulled_fraction: f64,
    pub frames: usize,
}

impl GenieResidual {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted
    }
}

/// Nulls the true impulse positions of Mixed Gaussian noise and measures the
/// distortion that remains once surviving background noise is removed,
/// averaged over all DFT bins.
pub fn genie_nulling_residual(
    band: BandConfig,
    noise: &MixedGaussianParams,
    frames: usize,
    seed: u64,
) -> Result<GenieResidual> {
    if frames == 0 {
        return Err(Error::param("frames", "must be >= 1"));
    }
    noise.validate()?;
    let modem = OfdmModem::new(band)?;
    let flen = band.frame_len();
    let n = band.fft_size;
    let base = RandomStream::new(seed, 7);
    let mut residual = 0.0;
    let mut nulled = 0usize;
    for f in 0..frames {
        let stream = base.fork(f as u64);
        let symbols = complex_gaussian_vector(stream.fork(0), band.used_carriers, 1.0)?;
        let tx = modem.transmit(&symbols, None)?;
        let (z, states) = sample_mixed_gaussian_complex(noise, flen, stream.fork(1))?;
        let mask: Vec<bool> = states.iter().map(|&s| s == NoiseState::Impulse).collect();
        let rx: Vec<Complex> = tx.iter().zip(&z).map(|(s, w)| s + w).collect();
        let cfg = MitigationConfig::new(MitigationMethod::Null, f64::INFINITY).with_oracle(mask.clone());
        let (cleaned, _) = null_samples(&rx, &cfg)?;
        let distortion: Vec<Complex> = cleaned
            .iter()
            .zip(&tx)
            .zip(z.iter().zip(&mask))
            .map(|((y, s), (w, &hit))| if hit { y - s } else { y - s - w })
            .collect();
        let bins = modem.receive(&distortion, None)?;
        residual += bins.iter().map(|b| b.norm_sqr()).sum::<f64>() / n as f64;
        nulled += mask[band.cyclic_prefix_len..].iter().filter(|&&m| m).count();
    }
    let eb_sample = signal_power_per_sample(&band);
    Ok(GenieResidual {
        a: noise.a,
        eb_sample,
        measured: residual / frames as f64,
        predicted: residual_variance_prediction(noise.a, eb_sample)?,
        nulled_fraction: nulled as f64 / (frames * n) as f64,
        frames,
    })
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub method: MitigationMethod,
    pub threshold: f64,
    pub snr_db_post: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub frames: u64,
    pub bits: u64,
    pub low_confidence: bool,
}

/// Passthrough baseline followed by nulling and clipping at every threshold,
/// all evaluated on the same noise realizations.
pub fn threshold_sweep(scenario: &Scenario, thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    if thresholds.is_empty() {
        return Err(Error::param("thresholds", "at least one threshold required"));
    }
    let mut specs = vec![MitigationSpec::passthrough()];
    for method in [MitigationMethod::Null, MitigationMethod::Clip] {
        specs.extend(thresholds.iter().map(|&t| MitigationSpec::new(method, t)));
    }
    let tallies = simulate(scenario, &specs)?;
    Ok(specs
        .iter()
        .zip(tallies)
        .map(|(s, t)| SweepRow {
            method: s.method,
            threshold: s.threshold,
            snr_db_post: t.snr_db_post(),
            ber: t.ber(),
            bit_errors: t.bit_errors,
            frames: t.frames,
            bits: t.bits,
            low_confidence: t.low_confidence(),
        })
        .collect())
}

/// Scenario with Mixed Gaussian noise scaled to a per-carrier SNR.
pub fn mixed_gaussian_scenario(
    band: BandConfig,
    noise: MixedGaussianParams,
    snr_db: f64,
    frames: usize,
    seed: u64,
) -> Result<Scenario> {
    let src = NoiseSource::MixedGaussian(noise);
    let k = 10f64.powf(-snr_db / 10.0) / src.mean_power();
    Ok(Scenario {
        band,
        constellation: Constellation::Bpsk,
        noise: src.scaled(k),
        randomizer_seed: None,
        frames,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::energy;
    use crate::ofdm::{band_config, Band};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn null_example() {
        let x = [c(1.0, 0.0), c(10.0, 0.0), c(-1.0, 0.0)];
        let (y, m) = null_samples(&x, &MitigationConfig::new(MitigationMethod::Null, 5.0)).unwrap();
        assert_eq!(y, vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(m, vec![false, true, false]);
    }

    #[test]
    fn infinite_threshold_is_identity() {
        let x = [c(1e300, 0.0), c(-3.0, 4.0)];
        let (y, m) = null_samples(&x, &MitigationConfig::new(MitigationMethod::Null, f64::INFINITY)).unwrap();
        assert_eq!(y, x);
        assert!(m.iter().all(|&b| !b));
    }

    #[test]
    fn clip_example() {
        let z = Complex::from_polar(10.0, 0.7);
        let (y, m) = clip_samples(&[z], &MitigationConfig::new(MitigationMethod::Clip, 5.0)).unwrap();
        assert!((y[0].norm() - 5.0).abs() < 1e-15);
        assert!((y[0].arg() - 0.7).abs() < 1e-15);
        assert!(m[0]);
        let small = [c(1.0, 1.0), c(-2.0, 0.5)];
        let (y, _) = clip_samples(&small, &MitigationConfig::new(MitigationMethod::Clip, 5.0)).unwrap();
        assert_eq!(y, small);
    }

    #[test]
    fn oracle_mask_overrides_threshold() {
        let x = [c(1.0, 0.0), c(10.0, 0.0), c(-1.0, 0.0)];
        let cfg = MitigationConfig::new(MitigationMethod::Null, 5.0).with_oracle(vec![true, false, false]);
        let (y, m) = null_samples(&x, &cfg).unwrap();
        assert_eq!(y, vec![c(0.0, 0.0), c(10.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(m, vec![true, false, false]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let x = [c(1.0, 0.0)];
        assert!(null_samples(&x, &MitigationConfig::new(MitigationMethod::Null, 0.0)).is_err());
        assert!(clip_samples(&x, &MitigationConfig::new(MitigationMethod::Clip, -1.0)).is_err());
        assert!(null_samples(&x, &MitigationConfig::new(MitigationMethod::Clip, 1.0)).is_err());
        let bad = MitigationConfig::new(MitigationMethod::Null, 1.0).with_oracle(vec![true, true]);
        assert!(matches!(null_samples(&x, &bad), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn passthrough_is_exact_identity() {
        let x = [c(1e9, -3.0), c(f64::MIN_POSITIVE, 0.0)];
        let (y, m) = apply(&x, &MitigationConfig::new(MitigationMethod::Passthrough, 0.0)).unwrap();
        assert_eq!(y, x);
        assert_eq!(m, vec![false, false]);
    }

    #[test]
    fn residual_prediction_examples() {
        assert_eq!(residual_variance_prediction(0.0, 5.6e-9).unwrap(), 0.0);
        assert!((residual_variance_prediction(0.3, 5.6e-9).unwrap() - 1.68e-9).abs() < 1e-22);
        assert!(residual_variance_prediction(1.1, 1.0).is_err());
        assert!(residual_variance_prediction(0.5, -1.0).is_err());
    }

    fn samples() -> impl Strategy<Value = Vec<Complex>> {
        prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| c(a, b)), 1..64)
    }

    proptest! {
        #[test]
        fn idempotent_and_energy_non_increasing(x in samples(), t in 0.01..60.0f64) {
            for method in [MitigationMethod::Null, MitigationMethod::Clip] {
                let cfg = MitigationConfig::new(method, t);
                let (once, _) = apply(&x, &cfg).unwrap();
                let (twice, _) = apply(&once, &cfg).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert!(energy(&once) <= energy(&x));
            }
        }
    }

    #[test]
    fn genie_residual_matches_prediction() {
        let p = MixedGaussianParams::new(0.3, 1e-3, 0.5).unwrap();
        let r = genie_nulling_residual(band_config(Band::Cenelec), &p, 2000, 1).unwrap();
        assert!(r.relative_error() < 0.05, "{r:?}");
        assert!((r.nulled_fraction - 0.3).abs() < 0.01);
    }

    fn row(rows: &[SweepRow], method: MitigationMethod, t: f64) -> SweepRow {
        *rows.iter().find(|r| r.method == method && r.threshold == t).unwrap()
    }

    fn z_below(a: &SweepRow, b: &SweepRow) -> f64 {
        let (pa, pb) = (a.ber, b.ber);
        let se = (pa * (1.0 - pa) / a.bits as f64 + pb * (1.0 - pb) / b.bits as f64).sqrt();
        (pb - pa) / se
    }

    #[test]
    fn impulse_free_sweep_is_flat() {
        let band = band_config(Band::Cenelec);
        let s = Scenario {
            band,
            constellation: Constellation::Bpsk,
            noise: NoiseSource::Awgn { variance: 0.5 },
            randomizer_seed: None,
            frames: 2000,
            seed: 5,
        };
        let rms = (signal_power_per_sample(&band) + 0.5).sqrt();
        let ts = [4.0 * rms, 6.0 * rms, 10.0 * rms];
        let rows = threshold_sweep(&s, &ts).unwrap();
        assert_eq!(rows.len(), 1 + 2 * ts.len());
        let base = rows[0];
        assert_eq!(base.method, MitigationMethod::Passthrough);
        for r in &rows[1..] {
            assert!(z_below(r, &base).abs() < 3.0, "{r:?} vs {base:?}");
        }
    }

    #[test]
    fn nulling_beats_passthrough_on_impulsive_noise() {
        let band = band_config(Band::Cenelec);
        let p = MixedGaussianParams::new(0.1, 1.0, 100.0).unwrap();
        let s = mixed_gaussian_scenario(band, p, 0.0, 1000, 11).unwrap();
        let bg = match s.noise {
            NoiseSource::MixedGaussian(q) => q.sigma_g2,
            _ => unreachable!(),
        };
        let t0 = default_threshold(signal_power_per_sample(&band), bg);
        let ts = [0.5 * t0, t0, 2.0 * t0];
        let rows = threshold_sweep(&s, &ts).unwrap();
        let base = rows[0];
        let best = rows
            .iter()
            .filter(|r| r.method == MitigationMethod::Null)
            .min_by(|a, b| a.ber.total_cmp(&b.ber))
            .unwrap();
        assert!(z_below(best, &base) > 1.645, "{best:?} vs {base:?}");

        let low = threshold_sweep(&s, &[0.5 * signal_power_per_sample(&band).sqrt()]).unwrap();
        let low_null = row(
            &low,
            MitigationMethod::Null,
            0.5 * signal_power_per_sample(&band).sqrt(),
        );
        assert!(z_below(&low[0], &low_null) > 1.645, "{low_null:?} vs {:?}", low[0]);
    }
}
