use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{NoiseSource, Scenario};
use crate::error::{Error, Result};
use crate::mitigation::{MitigationMethod, MitigationSpec};
use crate::noise::{
    ImpulseTrainParams, InterarrivalConvention, IntervalDistribution, MiddletonAParams, MixedGaussianParams,
    PeriodicNoiseParams,
};
use crate::ofdm::{band_config, Band, BandConfig, Constellation};

/// A runnable experiment, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub band: Band,
    pub noise: NoiseConfig,
    pub signal: SignalConfig,
    #[serde(default)]
    pub mitigation: Option<MitigationSpec>,
    #[serde(default)]
    pub randomizer: RandomizerConfig,
    #[serde(default)]
    pub constellation: Constellation,
    pub frames: usize,
    pub seed: u64,
    #[serde(default)]
    pub capacity: Option<CapacitySpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// Exactly one block must be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_gaussian: Option<MixedGaussianParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub middleton_a: Option<MiddletonAParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulse_train: Option<ImpulseTrainBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<PeriodicBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awgn: Option<AwgnBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseTrainBlock {
    /// Seconds.
    pub mean_duration: f64,
    /// Seconds.
    pub mean_interarrival: f64,
    /// Per-sample pulse power; give this or `sigma_i2`.
    #[serde(default)]
    pub impulse_variance: Option<f64>,
    /// Long-run impulse power to calibrate the pulse power against.
    #[serde(default)]
    pub sigma_i2: Option<f64>,
    #[serde(default)]
    pub duration_distribution: IntervalDistribution,
    #[serde(default)]
    pub interarrival_distribution: IntervalDistribution,
    #[serde(default)]
    pub convention: InterarrivalConvention,
    #[serde(default)]
    pub background: f64,
}

/// Periodic train with timing in samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicBlock {
    pub period_samples: f64,
    pub width_samples: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub offset_samples: f64,
    #[serde(default)]
    pub background: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwgnBlock {
    pub variance: f64,
}

/// Signal level: an absolute symbol energy, or per-carrier SNR points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizerConfig {
    pub enabled: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    /// Defaults to the width of the band allocation.
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
    /// Values of A to evaluate instead of the noise block's own.
    #[serde(default)]
    pub sweep_a: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Thresholds in units of the per-carrier symbol amplitude.
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
}

/// Multiples of the default threshold swept when none are configured.
pub const DEFAULT_THRESHOLD_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn scoped(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("{prefix}.{name}"), reason),
        Error::Config { field, message } => Error::config(format!("{prefix}.{field}"), message),
        other => other,
    }
}

fn finite_nonneg(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and >= 0, got {v}")))
    }
}

impl NoiseConfig {
    fn present(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        if self.mixed_gaussian.is_some() {
            names.push("mixed_gaussian");
        }
        if self.middleton_a.is_some() {
            names.push("middleton_a");
        }
        if self.impulse_train.is_some() {
            names.push("impulse_train");
        }
        if self.periodic.is_some() {
            names.push("periodic");
        }
        if self.awgn.is_some() {
            names.push("awgn");
        }
        names
    }

    /// The noise source in physical units at the band's sample rate.
    pub fn source(&self, band: &BandConfig) -> Result<NoiseSource> {
        let present = self.present();
        if present.len() != 1 {
            return Err(Error::config(
                "noise",
                format!("exactly one noise block required, found {}", present.len()),
            ));
        }
        let fs = band.sampling_frequency;
        if let Some(p) = self.mixed_gaussian {
            p.validate().map_err(|e| scoped("noise.mixed_gaussian", e))?;
            return Ok(NoiseSource::MixedGaussian(p));
        }
        if let Some(p) = self.middleton_a {
            p.validate().map_err(|e| scoped("noise.middleton_a", e))?;
            return Ok(NoiseSource::MiddletonA(p));
        }
        if let Some(b) = self.impulse_train {
            return b.params().map_err(|e| scoped("noise.impulse_train", e));
        }
        if let Some(b) = self.periodic {
            finite_nonneg("noise.periodic.background", b.background)?;
            let params =
                PeriodicNoiseParams::from_samples(b.period_samples, b.width_samples, b.amplitude, b.offset_samples, fs)
                    .map_err(|e| scoped("noise.periodic", e))?;
            return Ok(NoiseSource::Periodic {
                params,
                background: b.background,
            });
        }
        let b = self.awgn.expect("one block present");
        finite_nonneg("noise.awgn.variance", b.variance)?;
        Ok(NoiseSource::Awgn { variance: b.variance })
    }
}

impl ImpulseTrainBlock {
    fn params(&self) -> Result<NoiseSource> {
        finite_nonneg("background", self.background)?;
        let p = ImpulseTrainParams {
            mean_duration: self.mean_duration,
            mean_interarrival: self.mean_interarrival,
            impulse_variance_per_sample: 0.0,
            duration_distribution: self.duration_distribution,
            interarrival_distribution: self.interarrival_distribution,
            convention: self.convention,
        };
        p.validate()?;
        let p = match (self.impulse_variance, self.sigma_i2) {
            (Some(v), None) => {
                finite_nonneg("impulse_variance", v)?;
                ImpulseTrainParams {
                    impulse_variance_per_sample: v,
                    ..p
                }
            }
            (None, Some(t)) => {
                finite_nonneg("sigma_i2", t)?;
                p.calibrated_for(t)?
            }
            _ => {
                return Err(Error::config(
                    "impulse_variance",
                    "give exactly one of impulse_variance and sigma_i2",
                ))
            }
        };
        Ok(NoiseSource::ImpulseTrain {
            params: p,
            background: self.background,
        })
    }
}

impl ExperimentConfig {
    pub fn band_config(&self) -> BandConfig {
        band_config(self.band)
    }

    pub fn noise_source(&self) -> Result<NoiseSource> {
        self.noise.source(&self.band_config())
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::config("frames", "must be >= 1"));
        }
        let noise = self.noise_source()?;
        match (&self.signal.eb, &self.signal.snr_db) {
            (Some(eb), None) => {
                if !(*eb > 0.0 && eb.is_finite()) {
                    return Err(Error::config("signal.eb", format!("must be > 0, got {eb}")));
                }
            }
            (None, Some(points)) => {
                if points.is_empty() {
                    return Err(Error::config("signal.snr_db", "at least one SNR point required"));
                }
                if let Some(x) = points.iter().find(|x| !x.is_finite()) {
                    return Err(Error::config("signal.snr_db", format!("must be finite, got {x}")));
                }
                if !(noise.mean_power() > 0.0) {
                    return Err(Error::config("signal.snr_db", "noise has zero power"));
                }
            }
            _ => return Err(Error::config("signal", "give exactly one of eb and snr_db")),
        }
        if let Some(m) = &self.mitigation {
            m.validate().map_err(|e| scoped("mitigation", e))?;
            if m.genie && m.method == MitigationMethod::Passthrough {
                return Err(Error::config("mitigation.genie", "requires method null or clip"));
            }
        }
        if let Some(c) = &self.capacity {
            if let Some(b) = c.bandwidth_hz {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::config("capacity.bandwidth_hz", format!("must be > 0, got {b}")));
                }
            }
            if let Some(a) = c
                .sweep_a
                .as_ref()
                .and_then(|s| s.iter().find(|a| !(0.0..=1.0).contains(*a)))
            {
                return Err(Error::config(
                    "capacity.sweep_a",
                    format!("values must lie in [0, 1], got {a}"),
                ));
            }
        }
        if let Some(t) = self.sweep.as_ref().and_then(|s| s.thresholds.as_ref()) {
            if t.is_empty() {
                return Err(Error::config("sweep.thresholds", "at least one threshold required"));
            }
            if let Some(x) = t.iter().find(|x| !(**x > 0.0)) {
                return Err(Error::config("sweep.thresholds", format!("must be > 0, got {x}")));
            }
        }
        Ok(())
    }

    /// Per-carrier SNR points with the matching normalized scenarios. Symbols
    /// have unit energy per carrier, so noise is divided by the signal level.
    pub fn scenarios(&self) -> Result<Vec<(f64, Scenario)>> {
        self.validate()?;
        let noise = self.noise_source()?;
        let power = noise.mean_power();
        let scaled: Vec<(f64, NoiseSource)> = match (&self.signal.eb, &self.signal.snr_db) {
            (Some(eb), _) => vec![(10.0 * (eb / power).log10(), noise.scaled(1.0 / eb))],
            (_, Some(points)) => points
                .iter()
                .map(|&db| (db, noise.scaled(10f64.powf(-db / 10.0) / power)))
                .collect(),
            _ => unreachable!("validated"),
        };
        Ok(scaled
            .into_iter()
            .map(|(db, noise)| {
                (
                    db,
                    Scenario {
                        band: self.band_config(),
                        constellation: self.constellation,
                        noise,
                        randomizer_seed: self.randomizer.enabled.then_some(self.randomizer.seed),
                        frames: self.frames,
                        seed: self.seed,
                    },
                )
            })
            .collect())
    }
}

/// Parses and validates a config from JSON text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        Error::config(field, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
