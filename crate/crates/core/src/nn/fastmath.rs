//! Branch-free `exp` and `tanh` for the hot loops (attention softmax, gate
//! activations). The platform libm calls dominate training time otherwise.

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
const INV_LN2: f64 = core::f64::consts::LOG2_E;
/// Adding and subtracting 1.5·2⁵² rounds to the nearest integer.
const ROUND: f64 = 6_755_399_441_055_744.0;

/// `eˣ` to within about one ulp. Arguments are clamped to `[-708, 709]`;
/// `NaN` propagates.
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    let x = x.clamp(-708.0, 709.0);
    let kr = x * INV_LN2 + ROUND;
    let k = kr - ROUND;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Taylor coefficients 1/n! for n = 0..=13, evaluated with Estrin's scheme.
    let r2 = r * r;
    let r4 = r2 * r2;
    let r8 = r4 * r4;
    let p01 = 1.0 + r;
    let p23 = 0.5 + r * (1.0 / 6.0);
    let p45 = 1.0 / 24.0 + r * (1.0 / 120.0);
    let p67 = 1.0 / 720.0 + r * (1.0 / 5_040.0);
    let p89 = 1.0 / 40_320.0 + r * (1.0 / 362_880.0);
    let p1011 = 1.0 / 3_628_800.0 + r * (1.0 / 39_916_800.0);
    let p1213 = 1.0 / 479_001_600.0 + r * (1.0 / 6_227_020_800.0);
    let lo = (p01 + r2 * p23) + r4 * (p45 + r2 * p67);
    let hi = (p89 + r2 * p1011) + r4 * p1213;
    let p = lo + r8 * hi;
    let ki = kr.to_bits().wrapping_sub(ROUND.to_bits()) as i64;
    p * f64::from_bits(((ki + 1023) as u64) << 52)
}

/// `tanh x` with absolute error below `4e-16`.
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    let t = exp(-2.0 * x.abs());
    ((1.0 - t) / (1.0 + t)).copysign(x)
}
