//! Complex-vector arithmetic, the unitary DFT and the seeded random-stream contract.
//!
//! The transform convention is unitary in both directions,
//! `X[k] = N^{-1/2} Σ x[n] e^{-j2πkn/N}`, so time-domain and frequency-domain
//! noise variances compare without any scale factor.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// Total energy `Σ|x|²`.
pub fn energy(x: &[Complex]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Rejects empty or non-finite vectors.
pub fn check_vector(x: &[Complex]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    match x.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Lifts a real vector into the complex plane.
pub fn to_complex(x: &[f64]) -> Vec<Complex> {
    x.iter().map(|&re| Complex::new(re, 0.0)).collect()
}

/// A reusable unitary DFT of fixed length.
///
/// Power-of-two lengths use an iterative radix-2 FFT; any other length falls
/// back to direct summation with precomputed roots of unity.
#[derive(Debug, Clone)]
pub struct DftPlan {
    len: usize,
    scale: f64,
    kind: PlanKind,
}

#[derive(Debug, Clone)]
enum PlanKind {
    Radix2 {
        /// `e^{-j2πk/N}` for `k < N/2`.
        twiddles: Vec<Complex>,
        bitrev: Vec<usize>,
    },
    Direct {
        /// `e^{-j2πk/N}` for `k < N`.
        roots: Vec<Complex>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

impl DftPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        let root = |k: usize| Complex::from_polar(1.0, -2.0 * PI * k as f64 / len as f64);
        let kind = if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            let bitrev = (0..len)
                .map(|i| {
                    if bits == 0 {
                        0
                    } else {
                        i.reverse_bits() >> (usize::BITS - bits)
                    }
                })
                .collect();
            PlanKind::Radix2 {
                twiddles: (0..len / 2).map(root).collect(),
                bitrev,
            }
        } else {
            PlanKind::Direct {
                roots: (0..len).map(root).collect(),
            }
        };
        Ok(Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform.
    pub fn forward(&self, buf: &mut [Complex]) -> Result<()> {
        self.run(buf, Direction::Forward)
    }

    /// In-place inverse transform.
    pub fn inverse(&self, buf: &mut [Complex]) -> Result<()> {
        self.run(buf, Direction::Inverse)
    }

    fn run(&self, buf: &mut [Complex], dir: Direction) -> Result<()> {
        if buf.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: buf.len(),
            });
        }
        match &self.kind {
            PlanKind::Radix2 { twiddles, bitrev } => radix2(buf, twiddles, bitrev, dir),
            PlanKind::Direct { roots } => {
                let n = self.len;
                let input = buf.to_vec();
                for (k, out) in buf.iter_mut().enumerate() {
                    let mut acc = Complex::new(0.0, 0.0);
                    for (i, x) in input.iter().enumerate() {
                        let w = roots[(k * i) % n];
                        acc += x * if dir == Direction::Forward { w } else { w.conj() };
                    }
                    *out = acc;
                }
            }
        }
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
        Ok(())
    }
}

fn radix2(buf: &mut [Complex], twiddles: &[Complex], bitrev: &[usize], dir: Direction) {
    let n = buf.len();
    for (i, &j) in bitrev.iter().enumerate() {
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let mut w = twiddles[k * stride];
                if dir == Direction::Inverse {
                    w = w.conj();
                }
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Unitary forward DFT.
pub fn dft(x: &[Complex]) -> Result<Vec<Complex>> {
    check_vector(x)?;
    let mut out = x.to_vec();
    DftPlan::new(x.len())?.forward(&mut out)?;
    Ok(out)
}

/// Unitary inverse DFT.
pub fn idft(x: &[Complex]) -> Result<Vec<Complex>> {
    check_vector(x)?;
    let mut out = x.to_vec();
    DftPlan::new(x.len())?.inverse(&mut out)?;
    Ok(out)
}

/// Immutable descriptor of a reproducible random sequence.
///
/// Every `(seed, stream_id)` pair maps to its own ChaCha8 stream, so frames
/// and noise sources can be drawn independently and in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a child stream, e.g. one per frame or per noise source.
    pub fn fork(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::param(
            "variance",
            format!("must be finite and >= 0, got {variance}"),
        ));
    }
    Ok(())
}

/// `n` i.i.d. zero-mean real Gaussian samples.
pub fn gaussian_vector(stream: RandomStream, n: usize, variance: f64) -> Result<Vec<f64>> {
    check_variance(variance)?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if variance == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let sd = variance.sqrt();
    let mut rng = stream.rng();
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect())
}

/// `n` circularly-symmetric complex Gaussian samples with `E|z|² = variance`.
pub fn complex_gaussian_vector(stream: RandomStream, n: usize, variance: f64) -> Result<Vec<Complex>> {
    check_variance(variance)?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let sd = (variance / 2.0).sqrt();
    let mut rng = stream.rng();
    Ok((0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(sd * re, sd * im)
        })
        .collect())
}
