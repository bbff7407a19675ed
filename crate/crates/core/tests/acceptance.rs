//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use plc_core::capacity::{capacity_c1, capacity_c3_first_term, capacity_report};
use plc_core::chain::{simulate, NoiseSource, Scenario};
use plc_core::dsp::{complex_gaussian_vector, DftPlan};
use plc_core::experiment::*;
use plc_core::mitigation::{genie_nulling_residual, MitigationSpec};
use plc_core::noise::sample_mixed_gaussian_complex;
use plc_core::ofdm::band_config;
use plc_core::stats::{bpsk_awgn_ber, burst_length_symbols, estimate_a_from_means, gaussianization_test, snr_report};
use plc_core::{Band, CapacityInputs, Complex, Constellation, MixedGaussianParams, OfdmModem, RandomStream};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rel(x: f64, target: f64) -> f64 {
    (x / target - 1.0).abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn capacity_fixtures() -> Outcome {
    let fcc = CapacityInputs::new(337e3, 0.3, 5.6e-9, 5.6e-16, 1.4e-10).unwrap();
    let cen = CapacityInputs::new(56.2e3, 0.3, 2.8e-9, 2.8e-12, 1.4e-10).unwrap();
    let (c1f, c1c) = (capacity_c1(&fcc).unwrap(), capacity_c1(&cen).unwrap());
    let (t3f, t3c) = (
        capacity_c3_first_term(&fcc).unwrap(),
        capacity_c3_first_term(&cen).unwrap(),
    );
    let rf = capacity_report(&fcc).unwrap();
    let ok = rel(c1f, 1.8e6) <= 0.05
        && rel(c1c, 240e3) <= 0.05
        && rel(t3f, 7.8e6) <= 0.05
        && rel(t3c, 560e3) <= 0.05
        && rf.c2.is_finite()
        && rf.c3.is_finite();
    check(
        ok,
        format!(
            "C1 fcc {:.3e} cenelec {:.3e}; C3 first term fcc {:.3e} cenelec {:.3e}; \
             full formulas fcc C2 {:.3e} C3 {:.3e} (the 7.8e6 reference is the first term alone)",
            c1f, c1c, t3f, t3c, rf.c2, rf.c3
        ),
    )
}

fn snr_rows() -> Outcome {
    let cen = snr_report(2.8e-9, 2.8e-12, 5.3e-11).unwrap();
    let fcc = snr_report(5.6e-9, 5.6e-16, 1.3e-10).unwrap();
    let cells = [
        (
            "cenelec dB",
            (cen.snr_db - 17.0).abs() <= 0.5,
            format!("{:.3} vs 17", cen.snr_db),
        ),
        (
            "cenelec ratio",
            rel(cen.impulse_to_background, 19.0) <= 0.10,
            format!("{:.3} vs 19", cen.impulse_to_background),
        ),
        (
            "fcc dB",
            (fcc.snr_db - 16.0).abs() <= 0.5,
            format!("{:.3} vs 16", fcc.snr_db),
        ),
        (
            "fcc ratio",
            rel(fcc.impulse_to_background, 0.2e6) <= 0.10,
            format!(
                "{:.4e} vs 2e5 ({:+.1}%)",
                fcc.impulse_to_background,
                100.0 * (fcc.impulse_to_background / 0.2e6 - 1.0)
            ),
        ),
    ];
    let detail = cells
        .iter()
        .map(|(name, ok, d)| format!("{name} {d}{}", if *ok { "" } else { " OUT OF TOLERANCE" }))
        .collect::<Vec<_>>()
        .join("; ");
    check(cells.iter().all(|c| c.1), detail)
}

fn impulse_stats() -> Outcome {
    let a = estimate_a_from_means(36e-6, 127e-6).unwrap();
    let cen = burst_length_symbols(36e-6, band_config(Band::Cenelec).sample_duration).unwrap();
    let fcc = burst_length_symbols(36e-6, band_config(Band::Fcc).sample_duration).unwrap();
    check(
        (a - 0.28).abs() <= 0.01 && cen == 14 && fcc == 43,
        format!("A {a:.4}; burst length cenelec {cen}, fcc {fcc}"),
    )
}

fn direct_dft(x: &[Complex]) -> Vec<Complex> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64))
                .sum::<Complex>()
                * scale
        })
        .collect()
}

fn dft_correctness() -> Outcome {
    let plan = DftPlan::new(256).unwrap();
    let mut worst_parseval = 0.0f64;
    for i in 0..1000 {
        let x = complex_gaussian_vector(RandomStream::new(40, i), 256, 1.0).unwrap();
        let mut y = x.clone();
        plan.forward(&mut y).unwrap();
        let ex: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        worst_parseval = worst_parseval.max(rel(ey, ex));
    }
    let mut worst_oracle = 0.0f64;
    for n in 1..=64 {
        let x = complex_gaussian_vector(RandomStream::new(41, n as u64), n, 1.0).unwrap();
        let mut y = x.clone();
        DftPlan::new(n).unwrap().forward(&mut y).unwrap();
        for (a, b) in y.iter().zip(direct_dft(&x)) {
            worst_oracle = worst_oracle.max((a - b).norm());
        }
    }
    check(
        worst_parseval <= 1e-9 && worst_oracle <= 1e-9,
        format!("Parseval worst relative error {worst_parseval:.2e}; direct DFT worst deviation {worst_oracle:.2e}"),
    )
}

fn gaussianization() -> Outcome {
    let band = band_config(Band::Cenelec);
    let modem = OfdmModem::new(band).unwrap();
    let p = MixedGaussianParams::new(0.3, 1.0, 19.0).unwrap();
    let frames = 4000;
    let bins: Vec<Vec<Complex>> = (0..frames)
        .map(|f| {
            let (z, _) = sample_mixed_gaussian_complex(&p, band.frame_len(), RandomStream::new(50, f)).unwrap();
            modem.receive(&z, None).unwrap()
        })
        .collect();
    let g = gaussianization_test(&bins).unwrap();
    let power: f64 = bins.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / g.sample_count as f64;
    check(
        g.sample_count >= 1_000_000 && g.excess_kurtosis.abs() < 0.1 && rel(power, p.total_variance()) <= 0.03,
        format!(
            "{} bins, excess kurtosis {:.4} (re {:.4}, im {:.4}); per-bin variance {:.3} vs {:.1}",
            g.sample_count,
            g.excess_kurtosis,
            g.excess_kurtosis_real,
            g.excess_kurtosis_imag,
            power,
            p.total_variance()
        ),
    )
}

fn bpsk_oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for snr_db in [4.0, 6.0, 8.0, 10.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        let s = Scenario {
            band: band_config(Band::Cenelec),
            constellation: Constellation::Bpsk,
            noise: NoiseSource::Awgn { variance: 1.0 / snr },
            randomizer_seed: None,
            frames: 138_889,
            seed: 60 + snr_db as u64,
        };
        let t = simulate(&s, &[MitigationSpec::passthrough()]).unwrap()[0];
        let oracle = bpsk_awgn_ber(snr);
        let ratio = t.ber() / oracle;
        ok &= t.bits >= 10_000_000 && ratio < 2.0 && ratio > 0.5;
        parts.push(format!(
            "{snr_db} dB: {:.3e} vs {:.3e} ({} bits)",
            t.ber(),
            oracle,
            t.bits
        ));
    }
    check(ok, parts.join("; "))
}

fn nulling_residual() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [0.1, 0.3] {
        let p = MixedGaussianParams::new(a, 0.01, 0.19).unwrap();
        let r = genie_nulling_residual(band_config(Band::Cenelec), &p, 10_000, 70).unwrap();
        ok &= r.relative_error() <= 0.10;
        parts.push(format!(
            "A {a}: measured {:.4e} vs A*eb_sample {:.4e} ({:.2}%)",
            r.measured,
            r.predicted,
            100.0 * r.relative_error()
        ));
    }
    check(ok, parts.join("; "))
}

fn periodic_comb() -> Outcome {
    let comb = run_periodic(&load_config(fixture("periodic_comb.json")).unwrap()).unwrap();
    let leak = run_periodic(&load_config(fixture("periodic_leakage.json")).unwrap()).unwrap();
    let (c_off, c_on) = (comb.summary[0], comb.summary[1]);
    let (l_off, l_on) = (leak.summary[0], leak.summary[1]);
    let ok = (c_off.comb_share - 1.0).abs() <= 1e-9
        && l_off.off_comb_share > 0.0
        && c_on.frames == 1000
        && c_on.max_bin_share < c_off.max_bin_share
        && l_on.max_bin_share < l_off.max_bin_share;
    check(
        ok,
        format!(
            "period 32 comb share {:.12}; period 30 off-comb share {:.4}; max bin share {:.4} -> {:.4} (32), {:.4} -> {:.4} (30)",
            c_off.comb_share,
            l_off.off_comb_share,
            c_off.max_bin_share,
            c_on.max_bin_share,
            l_off.max_bin_share,
            l_on.max_bin_share
        ),
    )
}

const FIXTURES: [&str; 6] = [
    "fcc_example.json",
    "cenelec_example.json",
    "cenelec_average.json",
    "fcc_average.json",
    "periodic_comb.json",
    "periodic_leakage.json",
];

fn emit_all(cfg: &ExperimentConfig, dir: &Path) -> Vec<Vec<u8>> {
    let mut files = Vec::new();
    if cfg.noise.periodic.is_some() {
        let out = dir.join("periodic.csv");
        emit_periodic(&run_periodic(cfg).unwrap(), &out).unwrap();
        files.push(out.clone());
        files.push(summary_path(&out));
    } else {
        let out = dir.join("capacity.csv");
        emit_csv(&run_capacity(cfg).unwrap(), &out).unwrap();
        files.push(out);
    }
    let out = dir.join("ber.csv");
    emit_csv(&run_ber(cfg).unwrap(), &out).unwrap();
    files.push(out);
    let out = dir.join("mitigate.csv");
    emit_csv(&run_mitigate(cfg).unwrap(), &out).unwrap();
    files.push(out);
    files.into_iter().map(|f| fs::read(f).unwrap()).collect()
}

fn determinism() -> Outcome {
    let mut files = 0;
    for name in FIXTURES {
        let cfg = load_config(fixture(name)).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (x, y) = (emit_all(&cfg, a.path()), emit_all(&cfg, b.path()));
        if x != y {
            return Err(format!("{name}: outputs differ between runs"));
        }
        files += x.len();
    }
    Ok(format!(
        "{} fixtures, {files} CSV files byte-identical across reruns",
        FIXTURES.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("capacity fixtures", Duration::from_secs(1), capacity_fixtures),
        ("SNR table rows", Duration::from_secs(1), snr_rows),
        ("impulse statistics", Duration::from_secs(1), impulse_stats),
        ("DFT correctness", Duration::from_secs(10), dft_correctness),
        ("gaussianization", Duration::from_secs(60), gaussianization),
        ("BPSK/AWGN oracle", Duration::from_secs(300), bpsk_oracle),
        ("nulling residual", Duration::from_secs(120), nulling_residual),
        ("periodic comb", Duration::from_secs(60), periodic_comb),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over runtime budget {budget:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name} [{:.2}s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
