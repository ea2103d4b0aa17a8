//! The log-exponential test model, the asymptotic sample-quantile variance,
//! normal draws, and the seeded random streams behind every simulation.
//!
//! `X = ln Y` with `Y ~ Exp(λ)` has
//!
//! ```text
//! f(x) = λ exp(x - λ e^x)        F(x) = 1 - exp(-λ e^x)
//! ```
//!
//! and calibrating `λ = -ln(1 - p) e^{-x_p}` places its `p`-quantile at `x_p`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{domain, Result};
use crate::estimators::{ProbabilityLevel, Sample};

/// A reproducible uniform stream identified by `(seed, stream)`.
///
/// Backed by ChaCha12 with the stream id in the nonce, so distinct ids give
/// independent sequences under the same seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream under the same seed whose id is derived from this
    /// stream's id and `label`. Does not advance `self`.
    pub fn substream(&self, label: u64) -> Self {
        Self::new(self.seed, derive_stream_id(self.stream, label))
    }

    /// Uniform draw from the open interval (0, 1) on a 2^-53 grid offset by
    /// half a step, so neither endpoint can occur.
    pub fn next_open_unit(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a parent stream id with a label into a child stream id.
pub fn derive_stream_id(parent: u64, label: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ label.rotate_left(29))
}

/// `X = ln Y` with `Y` exponential of rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogExponential {
    rate: f64,
}

impl LogExponential {
    pub fn new(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self { rate })
        } else {
            Err(domain(format!("rate must be positive and finite, got {rate}")))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.rate * (x - self.rate * x.exp()).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -(-self.rate * x.exp()).exp_m1()
    }

    pub fn quantile(&self, q: ProbabilityLevel) -> f64 {
        (-(-q.value()).ln_1p()).ln() - self.rate.ln()
    }

    /// Draws `n` observations by inverting the CDF of a single uniform each.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<Sample> {
        if n == 0 {
            return Err(domain("sample size must be at least 1"));
        }
        let ln_rate = self.rate.ln();
        let values = (0..n)
            .map(|_| {
                let u = rng.next_open_unit();
                (-(-u).ln_1p()).ln() - ln_rate
            })
            .collect();
        Sample::new(values)
    }
}

/// The model whose `p`-quantile sits at `x_p`.
pub fn rate_for_quantile(x_p: f64, p: ProbabilityLevel) -> Result<LogExponential> {
    if !x_p.is_finite() {
        return Err(domain(format!("quantile location must be finite, got {x_p}")));
    }
    LogExponential::new(-(-p.value()).ln_1p() * (-x_p).exp())
}

/// Large-sample variance `p (1 - p) / (n f(x_p)²)` of the sample quantile.
pub fn asymptotic_variance(p: ProbabilityLevel, n: usize, density_at_quantile: f64) -> Result<f64> {
    if !(density_at_quantile.is_finite() && density_at_quantile > 0.0) {
        return Err(domain(format!("density at the quantile must be positive, got {density_at_quantile}")));
    }
    if n == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    let p = p.value();
    Ok(p * (1.0 - p) / (n as f64 * density_at_quantile * density_at_quantile))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    mean: f64,
    variance: f64,
}

impl NormalParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
            return Err(domain(format!("invalid normal parameters: mean {mean}, variance {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// One normal draw by inversion of a single uniform.
pub fn normal_draw(params: NormalParams, rng: &mut RngStream) -> f64 {
    params.mean + params.variance.sqrt() * standard_normal_quantile(rng.next_open_unit())
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Inverse of the standard normal CDF for `u` in (0, 1), Wichura's AS 241
/// (PPND16), accurate to about 1e-16 relative.
#[allow(clippy::excessive_precision)]
pub fn standard_normal_quantile(u: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_854_561,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = (-(if q < 0.0 { u } else { 1.0 - u }).ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}
