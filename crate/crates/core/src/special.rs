//! Standard normal density, distribution and quantile functions.
//!
//! `norm_cdf` goes through the complementary error function so both tails keep
//! full relative precision. `norm_ppf` is Wichura's AS 241 (PPND16), accurate
//! to about 1e-16 relative.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// ln(sqrt(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Φ(z).
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), computed without cancellation.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    norm_cdf(-z)
}

/// ln Φ(z), finite down to z ≈ −1e154.
pub fn ln_norm_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-norm_sf(z)).ln_1p()
    } else if z > -35.0 {
        norm_cdf(z).ln()
    } else {
        // Mills-ratio asymptotic series: Φ(z) = φ(z)/|z| · (1 − 1/z² + 3/z⁴ − 15/z⁶ + …)
        let w = 1.0 / (z * z);
        let series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
        ln_norm_pdf(z) - (-z).ln() + series.ln()
    }
}

/// φ(z)/Φ(z), the lower-tail inverse Mills ratio.
pub fn mills_lower(z: f64) -> f64 {
    if z > -35.0 {
        norm_pdf(z) / norm_cdf(z)
    } else {
        (ln_norm_pdf(z) - ln_norm_cdf(z)).exp()
    }
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    133.141_667_891_784_38,
    1_971.590_950_306_551_4,
    13_731.693_765_509_461,
    45_921.953_931_549_87,
    67_265.770_927_008_7,
    33_430.575_583_588_13,
    2_509.080_928_730_122_7,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_91,
    687.187_007_492_057_9,
    5_394.196_021_424_751,
    21_213.794_301_586_596,
    39_307.895_800_092_71,
    28_729.085_735_721_943,
    5_226.495_278_852_546,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_6,
    4.630_337_846_156_545,
    5.769_497_221_460_691,
    3.647_848_324_763_204_6,
    1.270_458_252_452_368_4,
    0.241_780_725_177_450_6,
    0.022_723_844_989_269_184,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    0.689_767_334_985_100_0,
    0.148_103_976_427_480_07,
    0.015_198_666_563_616_457,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_8e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_8,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    0.296_560_571_828_504_9,
    0.026_532_189_526_576_124,
    0.001_242_660_947_388_078_4,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_9,
    0.136_929_880_922_735_8,
    0.014_875_361_290_850_615,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_445_9e-7,
    2.044_263_103_389_939_8e-15,
];

#[inline]
fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Φ⁻¹(p) for p in [0, 1]; ±∞ at the endpoints.
pub fn norm_ppf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        poly(&C, r - 1.6) / poly(&D, r - 1.6)
    } else {
        poly(&E, r - 5.0) / poly(&F, r - 5.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Φ⁻¹ evaluated from the upper tail, i.e. the z with 1 − Φ(z) = q.
pub fn norm_isf(q: f64) -> f64 {
    -norm_ppf(q)
}

/// erf⁻¹(x) on (−1, 1), tied to Φ⁻¹ through Φ⁻¹(t) = √2·erf⁻¹(2t − 1).
pub fn erf_inv(x: f64) -> f64 {
    if x <= -1.0 {
        return if x == -1.0 { f64::NEG_INFINITY } else { f64::NAN };
    }
    if x >= 1.0 {
        return if x == 1.0 { f64::INFINITY } else { f64::NAN };
    }
    norm_ppf(0.5 * (x + 1.0)) / SQRT_2
}

/// 1/(2√π)
pub const INV_2_SQRT_PI: f64 = 0.282_094_791_773_878_14;

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
