//! Experiment drivers: JSON configs in, CSV tables out.

mod config;
mod output;

use std::path::{Path, PathBuf};

pub use config::{
    load_config, parse_config, AwgnBlock, CapacitySpec, ExperimentConfig, ImpulseTrainBlock, NoiseConfig,
    PeriodicBlock, RandomizerConfig, SignalConfig, SweepSpec, DEFAULT_THRESHOLD_FACTORS,
};
pub use output::{emit_csv, format_number, write_csv, CsvRow};

use crate::capacity::{capacity_report, CapacityInputs, CapacityReport};
use crate::chain::{noise_spectrum, simulate, NoiseSource, NoiseSpectrum};
use crate::error::{Error, Result};
use crate::mitigation::{
    default_threshold, signal_power_per_sample, threshold_sweep, MitigationMethod, MitigationSpec, SweepRow,
};
use crate::ofdm::Band;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityRow {
    pub band: Band,
    pub report: CapacityReport,
}

impl CsvRow for CapacityRow {
    fn header() -> &'static [&'static str] {
        &[
            "band",
            "B_hz",
            "A",
            "eb_j",
            "sigma_g2_j",
            "sigma_i2_j",
            "c1_bps",
            "c2_bps",
            "c3_bps",
            "c3_first_term_bps",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let r = &self.report;
        let i = &r.inputs;
        let mut v = vec![self.band.to_string()];
        v.extend(
            [
                i.bandwidth_hz,
                i.a,
                i.eb,
                i.sigma_g2,
                i.sigma_i2,
                r.c1,
                r.c2,
                r.c3,
                r.c3_first_term,
            ]
            .map(format_number),
        );
        v
    }
}

/// Capacity table for a Mixed Gaussian config, one row per swept `A`.
pub fn run_capacity(cfg: &ExperimentConfig) -> Result<Vec<CapacityRow>> {
    cfg.validate()?;
    let Some(p) = cfg.noise.mixed_gaussian else {
        return Err(Error::config("noise", "capacity needs a mixed_gaussian block"));
    };
    let Some(eb) = cfg.signal.eb else {
        return Err(Error::config("signal.eb", "capacity needs an absolute symbol energy"));
    };
    let spec = cfg.capacity.clone().unwrap_or_default();
    let bandwidth = spec.bandwidth_hz.unwrap_or_else(|| cfg.band_config().bandwidth_hz());
    let values = spec.sweep_a.unwrap_or_else(|| vec![p.a]);
    values
        .into_iter()
        .map(|a| {
            let inputs = CapacityInputs::new(bandwidth, a, eb, p.sigma_g2, p.sigma_i2)?;
            Ok(CapacityRow {
                band: cfg.band,
                report: capacity_report(&inputs)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub method: MitigationMethod,
    pub genie: bool,
    pub threshold: f64,
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub low_confidence: bool,
}

fn method_label(method: MitigationMethod, genie: bool) -> String {
    if genie {
        format!("{}_genie", method.name())
    } else {
        method.name().to_string()
    }
}

impl CsvRow for BerRow {
    fn header() -> &'static [&'static str] {
        &[
            "method",
            "threshold",
            "snr_db",
            "ber",
            "bit_errors",
            "bits",
            "frames",
            "low_confidence",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            method_label(self.method, self.genie),
            format_number(self.threshold),
            format_number(self.snr_db),
            format_number(self.ber),
            self.bit_errors.to_string(),
            self.bits.to_string(),
            self.frames.to_string(),
            self.low_confidence.to_string(),
        ]
    }
}

/// Uncoded BER per SNR point, without and (when configured) with mitigation.
pub fn run_ber(cfg: &ExperimentConfig) -> Result<Vec<BerRow>> {
    let mut specs = vec![MitigationSpec::passthrough()];
    if let Some(m) = cfg.mitigation.filter(|m| m.method != MitigationMethod::Passthrough) {
        specs.push(m);
    }
    let mut rows = Vec::new();
    for (snr_db, scenario) in cfg.scenarios()? {
        for (spec, t) in specs.iter().zip(simulate(&scenario, &specs)?) {
            rows.push(BerRow {
                method: spec.method,
                genie: spec.genie,
                threshold: spec.threshold,
                snr_db,
                ber: t.ber(),
                bit_errors: t.bit_errors,
                bits: t.bits,
                frames: t.frames,
                low_confidence: t.low_confidence(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigateRow {
    pub snr_db: f64,
    pub row: SweepRow,
}

impl CsvRow for MitigateRow {
    fn header() -> &'static [&'static str] {
        &[
            "snr_db",
            "method",
            "threshold",
            "snr_db_post",
            "ber",
            "bit_errors",
            "frames",
            "bits",
            "low_confidence",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let r = &self.row;
        vec![
            format_number(self.snr_db),
            r.method.name().to_string(),
            format_number(r.threshold),
            format_number(r.snr_db_post),
            format_number(r.ber),
            r.bit_errors.to_string(),
            r.frames.to_string(),
            r.bits.to_string(),
            r.low_confidence.to_string(),
        ]
    }
}

/// Thresholds used by [`run_mitigate`] for a normalized noise source.
pub fn sweep_thresholds(cfg: &ExperimentConfig, noise: &NoiseSource) -> Vec<f64> {
    match cfg.sweep.as_ref().and_then(|s| s.thresholds.clone()) {
        Some(t) => t,
        None => {
            let t0 = default_threshold(signal_power_per_sample(&cfg.band_config()), noise.background_power());
            DEFAULT_THRESHOLD_FACTORS.iter().map(|f| f * t0).collect()
        }
    }
}

/// Nulling and clipping threshold sweep with a passthrough baseline.
pub fn run_mitigate(cfg: &ExperimentConfig) -> Result<Vec<MitigateRow>> {
    let mut rows = Vec::new();
    for (snr_db, scenario) in cfg.scenarios()? {
        let thresholds = sweep_thresholds(cfg, &scenario.noise);
        rows.extend(
            threshold_sweep(&scenario, &thresholds)?
                .into_iter()
                .map(|row| MitigateRow { snr_db, row }),
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicBinRow {
    pub bin: usize,
    pub on_comb: bool,
    pub mean_magnitude: f64,
    pub energy_share: f64,
    /// Same metrics after derandomization, when the randomizer is on.
    pub randomized: Option<(f64, f64)>,
}

impl CsvRow for PeriodicBinRow {
    fn header() -> &'static [&'static str] {
        &[
            "bin",
            "on_comb",
            "mean_magnitude",
            "energy_share",
            "mean_magnitude_randomized",
            "energy_share_randomized",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let (m, s) = match self.randomized {
            Some((m, s)) => (format_number(m), format_number(s)),
            None => (String::new(), String::new()),
        };
        vec![
            self.bin.to_string(),
            self.on_comb.to_string(),
            format_number(self.mean_magnitude),
            format_number(self.energy_share),
            m,
            s,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSummaryRow {
    pub randomizer: bool,
    pub frames: usize,
    pub comb_share: f64,
    pub off_comb_share: f64,
    pub max_bin_share: f64,
}

impl PeriodicSummaryRow {
    fn new(randomizer: bool, s: &NoiseSpectrum, period: f64) -> Self {
        let (comb_share, off_comb_share) = s.comb_split(period);
        Self {
            randomizer,
            frames: s.frames,
            comb_share,
            off_comb_share,
            max_bin_share: s.max_bin_share(),
        }
    }
}

impl CsvRow for PeriodicSummaryRow {
    fn header() -> &'static [&'static str] {
        &["randomizer", "frames", "comb_share", "off_comb_share", "max_bin_share"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            if self.randomizer { "on" } else { "off" }.to_string(),
            self.frames.to_string(),
            format_number(self.comb_share),
            format_number(self.off_comb_share),
            format_number(self.max_bin_share),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicReport {
    pub bins: Vec<PeriodicBinRow>,
    pub summary: Vec<PeriodicSummaryRow>,
}

/// Receiver-side spectrum of periodic noise, with and without randomization.
pub fn run_periodic(cfg: &ExperimentConfig) -> Result<PeriodicReport> {
    let Some(block) = cfg.noise.periodic else {
        return Err(Error::config("noise", "periodic analysis needs a periodic block"));
    };
    let (_, scenario) = cfg.scenarios()?.swap_remove(0);
    let plain = noise_spectrum(&crate::chain::Scenario {
        randomizer_seed: None,
        ..scenario.clone()
    })?;
    let randomized = match scenario.randomizer_seed {
        Some(_) => Some(noise_spectrum(&scenario)?),
        None => None,
    };
    let n = plain.mean_energy.len();
    let comb = crate::chain::comb_bins(n, block.period_samples);
    let plain_share = plain.energy_share();
    let rand_share = randomized.as_ref().map(|r| r.energy_share());
    let bins = (0..n)
        .map(|k| PeriodicBinRow {
            bin: k,
            on_comb: comb.binary_search(&k).is_ok(),
            mean_magnitude: plain.mean_magnitude[k],
            energy_share: plain_share[k],
            randomized: randomized
                .as_ref()
                .zip(rand_share.as_ref())
                .map(|(r, s)| (r.mean_magnitude[k], s[k])),
        })
        .collect();
    let mut summary = vec![PeriodicSummaryRow::new(false, &plain, block.period_samples)];
    if let Some(r) = &randomized {
        summary.push(PeriodicSummaryRow::new(true, r, block.period_samples));
    }
    Ok(PeriodicReport { bins, summary })
}

/// Companion summary file next to a periodic spectrum dump.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("periodic");
    out.with_file_name(format!("{stem}_summary.csv"))
}

pub fn emit_periodic(report: &PeriodicReport, out: &Path) -> Result<()> {
    emit_csv(&report.bins, out)?;
    emit_csv(&report.summary, summary_path(out))
}
