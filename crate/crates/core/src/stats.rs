//! Estimators that reduce impulse traces and band parameters to summary
//! quantities: impulse index, burst length, per-frame impulse variance, SNR
//! rows and the post-DFT Gaussianity check.

use serde::Serialize;

use crate::dsp::Complex;
use crate::error::{Error, Result};
use crate::noise::ImpulseTrain;

/// Default pass threshold on |excess kurtosis|.
pub const GAUSSIANITY_THRESHOLD: f64 = 0.1;

/// Minimum number of pooled bins accepted by [`gaussianization_test`].
pub const MIN_GAUSSIANITY_BINS: usize = 10_000;

/// Impulse index from mean pulse duration and mean inter-arrival time,
/// clamped to at most 1.
pub fn estimate_a_from_means(mean_duration: f64, mean_interarrival: f64) -> Result<f64> {
    if !(mean_duration > 0.0 && mean_interarrival > 0.0) {
        return Err(Error::param(
            "mean_duration/mean_interarrival",
            "both means must be positive",
        ));
    }
    Ok((mean_duration / mean_interarrival).min(1.0))
}

/// Impulse index `mean(duration)/mean(inter-arrival)` of a sampled train.
pub fn estimate_a(train: &ImpulseTrain) -> Result<f64> {
    if train.events.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 impulse events, got {}",
            train.events.len()
        )));
    }
    let mean_d = train.durations().sum::<f64>() / train.events.len() as f64;
    let ia = train.interarrivals();
    let mean_i = ia.iter().sum::<f64>() / ia.len() as f64;
    if mean_i <= 0.0 {
        // back-to-back pulses: the channel is permanently impaired
        return Ok(1.0);
    }
    estimate_a_from_means(mean_d, mean_i)
}

/// Average pulse length expressed in channel samples.
pub fn burst_length_symbols(mean_duration: f64, sample_duration: f64) -> Result<u64> {
    if !(mean_duration > 0.0 && sample_duration > 0.0) {
        return Err(Error::param("duration", "both durations must be positive"));
    }
    Ok((mean_duration / sample_duration).round() as u64)
}

/// Mean per-sample impulse power over complete frames of `frame_length`.
///
/// Under the unitary DFT this is also the average per-bin impulse variance.
pub fn frame_impulse_variance(waveform: &[f64], frame_length: usize) -> Result<f64> {
    if frame_length == 0 {
        return Err(Error::param("frame_length", "must be positive"));
    }
    if waveform.len() < frame_length {
        return Err(Error::InsufficientData(format!(
            "waveform of {} samples is shorter than one frame of {frame_length}",
            waveform.len()
        )));
    }
    let frames = waveform.len() / frame_length;
    let total: f64 = waveform
        .chunks_exact(frame_length)
        .map(|f| f.iter().map(|x| x * x).sum::<f64>() / frame_length as f64)
        .sum();
    Ok(total / frames as f64)
}

/// Sample excess kurtosis `m4/m2² − 3`.
pub fn excess_kurtosis(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (m2, m4) = values.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d2 = (x - mean) * (x - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    (m2 > 0.0).then(|| m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianizationResult {
    /// Excess kurtosis of real and imaginary parts pooled together.
    pub excess_kurtosis: f64,
    pub excess_kurtosis_real: f64,
    pub excess_kurtosis_imag: f64,
    /// Number of complex bins pooled.
    pub sample_count: usize,
    pub threshold: f64,
    /// All three statistics are below `threshold` in magnitude.
    pub passed: bool,
}

/// Checks whether pooled DFT bins look Gaussian, at the default threshold.
pub fn gaussianization_test<F: AsRef<[Complex]>>(frames: &[F]) -> Result<GaussianizationResult> {
    gaussianization_test_with(frames, GAUSSIANITY_THRESHOLD)
}

pub fn gaussianization_test_with<F: AsRef<[Complex]>>(frames: &[F], threshold: f64) -> Result<GaussianizationResult> {
    let sample_count: usize = frames.iter().map(|f| f.as_ref().len()).sum();
    if sample_count < MIN_GAUSSIANITY_BINS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_GAUSSIANITY_BINS} bins, got {sample_count}"
        )));
    }
    let mut re = Vec::with_capacity(sample_count);
    let mut im = Vec::with_capacity(sample_count);
    for z in frames.iter().flat_map(|f| f.as_ref()) {
        re.push(z.re);
        im.push(z.im);
    }
    let degenerate = || Error::InsufficientData("bins have zero variance".into());
    let k_re = excess_kurtosis(&re).ok_or_else(degenerate)?;
    let k_im = excess_kurtosis(&im).ok_or_else(degenerate)?;
    re.extend_from_slice(&im);
    let joint = excess_kurtosis(&re).ok_or_else(degenerate)?;
    Ok(GaussianizationResult {
        excess_kurtosis: joint,
        excess_kurtosis_real: k_re,
        excess_kurtosis_imag: k_im,
        sample_count,
        threshold,
        passed: [k_re, k_im, joint].iter().all(|k| k.abs() < threshold),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrReport {
    /// `E_b/(σ_I² + σ_G²)` in dB.
    pub snr_db: f64,
    /// `σ_I²/σ_G²`.
    pub impulse_to_background: f64,
}

pub fn snr_report(eb: f64, sigma_g2: f64, sigma_i2: f64) -> Result<SnrReport> {
    if !(sigma_g2 > 0.0) {
        return Err(Error::param("sigma_g2", format!("must be > 0, got {sigma_g2}")));
    }
    if !(eb >= 0.0 && sigma_i2 >= 0.0) {
        return Err(Error::param("eb/sigma_i2", "must be nonnegative"));
    }
    Ok(SnrReport {
        snr_db: 10.0 * (eb / (sigma_i2 + sigma_g2)).log10(),
        impulse_to_background: sigma_i2 / sigma_g2,
    })
}

/// Complementary error function, Chebyshev fit with relative error below 1.2e-7.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded BPSK bit error rate over AWGN at per-carrier SNR `snr` (linear).
pub fn bpsk_awgn_ber(snr: f64) -> f64 {
    q_function((2.0 * snr).sqrt())
}
