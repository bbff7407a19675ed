use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use plc_core::chain::{simulate, NoiseSource, Scenario};
use plc_core::dsp::complex_gaussian_vector;
use plc_core::mitigation::{MitigationMethod, MitigationSpec};
use plc_core::noise::sample_mixed_gaussian_complex;
use plc_core::ofdm::band_config;
use plc_core::{Band, Constellation, DftPlan, MixedGaussianParams, RandomStream};

fn dft(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft");
    for n in [64, 256, 255] {
        let plan = DftPlan::new(n).unwrap();
        let x = complex_gaussian_vector(RandomStream::new(1, 0), n, 1.0).unwrap();
        g.bench_function(format!("forward_{n}"), |b| {
            b.iter(|| {
                let mut y = x.clone();
                plan.forward(black_box(&mut y)).unwrap();
                y
            })
        });
    }
    g.finish();
}

fn noise(c: &mut Criterion) {
    let p = MixedGaussianParams::new(0.3, 1.0, 19.0).unwrap();
    let mut g = c.benchmark_group("noise");
    g.throughput(Throughput::Elements(1 << 16));
    g.bench_function("mixed_gaussian_complex_64k", |b| {
        b.iter(|| sample_mixed_gaussian_complex(black_box(&p), 1 << 16, RandomStream::new(2, 0)).unwrap())
    });
    g.finish();
}

fn frames(c: &mut Criterion) {
    let p = MixedGaussianParams::new(0.3, 0.05, 0.95).unwrap();
    let s = Scenario {
        band: band_config(Band::Cenelec),
        constellation: Constellation::Bpsk,
        noise: NoiseSource::MixedGaussian(p),
        randomizer_seed: Some(9),
        frames: 1024,
        seed: 3,
    };
    let specs = [
        MitigationSpec::passthrough(),
        MitigationSpec::new(MitigationMethod::Null, 1.6),
    ];
    let mut g = c.benchmark_group("chain");
    g.sample_size(20);
    g.throughput(Throughput::Elements(s.frames as u64));
    g.bench_function("cenelec_1024_frames_two_settings", |b| {
        b.iter(|| simulate(black_box(&s), &specs).unwrap())
    });
    g.finish();
}

criterion_group!(benches, dft, noise, frames);
criterion_main!(benches);
