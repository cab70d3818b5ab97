//! Special functions: error function and its inverse, log-gamma, regularized
//! incomplete beta and gamma functions, and binomial tails built on them.
//!
//! Every routine is generic over [`Real`] (implemented for `f32` and `f64`).
//! Accuracy contracts are stated for `f64`; `f32` callers get whatever the
//! narrower mantissa allows.
//!
//! Incomplete beta and gamma use continued fractions evaluated with the
//! modified Lentz method. The incomplete beta switches to the reflected
//! argument above `x = (a + 1) / (a + b + 2)`, where the fraction for the
//! original argument converges slowly.

use std::fmt::{self, Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point scalar the special functions are generic over.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A real number in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Probability<T: Real = f64>(T);

impl<T: Real> Probability<T> {
    /// Rejects values outside `[0, 1]` (and NaN).
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn clamped(value: T) -> Self {
        if value.is_nan() {
            return Probability(T::zero());
        }
        Probability(value.max(T::zero()).min(T::one()))
    }

    pub fn zero() -> Self {
        Probability(T::zero())
    }

    pub fn one() -> Self {
        Probability(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(T::one() - self.0)
    }
}

impl<T: Real> Display for Probability<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.0, f)
    }
}

impl<T: Real> Serialize for Probability<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0.to_f64().unwrap_or(f64::NAN))
    }
}

impl<'de, T: Real> Deserialize<'de> for Probability<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let t = T::from_f64(v).ok_or_else(|| serde::de::Error::custom("unrepresentable probability"))?;
        Probability::new(t).map_err(serde::de::Error::custom)
    }
}

// Lentz's method needs a floor to keep denominators away from zero.
fn tiny<T: Real>() -> T {
    T::min_positive_value() / T::epsilon()
}

/// Error function.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let v = if ax < T::lit(2.5) {
        erf_series(ax)
    } else {
        T::one() - erfc_cf(ax)
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Complementary error function `1 - erf(x)`, accurate in the upper tail.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::lit(2.0) - erfc(-x);
    }
    if x < T::lit(2.5) {
        T::one() - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!, all terms positive.
fn erf_series<T: Real>(x: T) -> T {
    let two = T::lit(2.0);
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = T::zero();
    for _ in 0..500 {
        n = n + T::one();
        term = term * two * x2 / (two * n + T::one());
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    two * (T::FRAC_2_SQRT_PI() / T::lit(2.0)) * (-x2).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x >= 2.5.
fn erfc_cf<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let tiny = tiny::<T>();
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for k in 1..2000 {
        let a = T::lit(k as f64) * half;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    (-x * x).exp() * (T::FRAC_2_SQRT_PI() / T::lit(2.0)) / f
}

/// Inverse of [`erfc`] on `(0, 2)`.
pub fn erfc_inv<T: Real>(p: T) -> Result<T> {
    let two = T::lit(2.0);
    if !(p > T::zero() && p < two) {
        return Err(Error::Domain(format!("erfc_inv argument {p} outside (0, 2)")));
    }
    if p > T::one() {
        return Ok(-erfc_inv(two - p)?);
    }
    if p == T::one() {
        return Ok(T::zero());
    }
    // Abramowitz & Stegun 26.2.23 upper normal quantile for tail p/2 as a seed.
    let q = p / two;
    let t = (-two * q.ln()).sqrt();
    let num = T::lit(2.515517) + t * (T::lit(0.802853) + t * T::lit(0.010328));
    let den = T::one() + t * (T::lit(1.432788) + t * (T::lit(0.189269) + t * T::lit(0.001308)));
    let mut x = (t - num / den) * T::FRAC_1_SQRT_2();

    // Halley on f(x) = erfc(x) - p, using f''/f' = -2x.
    let scale = two * (T::FRAC_2_SQRT_PI() / T::lit(2.0));
    for _ in 0..60 {
        let f = erfc(x) - p;
        let fp = -scale * (-x * x).exp();
        if fp == T::zero() {
            break;
        }
        let step = f / (fp + x * f);
        x = x - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * x.abs().max(T::one()) {
            break;
        }
    }
    Ok(x)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        return (T::PI() / (T::PI() * x).sin()).abs().ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::lit(i as f64));
    }
    let t = x + T::lit(LANCZOS_G) + T::lit(0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn check_beta_args<T: Real>(x: T, a: T, b: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain(format!(
            "incomplete beta argument x = {x} outside [0, 1]"
        )));
    }
    if !(a > T::zero() && b > T::zero()) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete beta parameters a = {a}, b = {b} must be positive"
        )));
    }
    Ok(())
}

fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let tiny = tiny::<T>();
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    // Iterations grow like sqrt(max(a, b)).
    let max_iter = 200 + 20 * (a.max(b).to_f64().unwrap_or(1.0).sqrt() as usize);
    for m in 1..=max_iter {
        let m = T::lit(m as f64);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= T::epsilon() {
            break;
        }
    }
    h
}

/// Log of the lower-branch term `x^a (1-x)^b / (a B(a,b)) * cf`.
fn ln_beta_lower<T: Real>(x: T, a: T, b: T) -> T {
    let front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    front + beta_cf(a, b, x).ln() - a.ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta<T: Real>(x: T, a: T, b: T) -> Result<Probability<T>> {
    check_beta_args(x, a, b)?;
    if x == T::zero() {
        return Ok(Probability::zero());
    }
    if x == T::one() {
        return Ok(Probability::one());
    }
    let v = if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        ln_beta_lower(x, a, b).exp()
    } else {
        T::one() - ln_beta_lower(T::one() - x, b, a).exp()
    };
    Ok(Probability::clamped(v))
}

/// `ln I_x(a, b)`; stays finite where `I_x` itself underflows.
pub fn ln_reg_inc_beta<T: Real>(x: T, a: T, b: T) -> Result<T> {
    check_beta_args(x, a, b)?;
    if x == T::zero() {
        return Ok(T::neg_infinity());
    }
    if x == T::one() {
        return Ok(T::zero());
    }
    let v = if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        ln_beta_lower(x, a, b)
    } else {
        (-ln_beta_lower(T::one() - x, b, a).exp()).ln_1p()
    };
    Ok(v.min(T::zero()))
}

/// Which tail of the regularized incomplete gamma function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaTail {
    /// `P(a, x)`, the `igam` of the Cephes naming.
    Lower,
    /// `Q(a, x) = 1 - P(a, x)`, the `igamc`.
    Upper,
}

fn gamma_series<T: Real>(a: T, x: T) -> T {
    let mut ap = a;
    let mut del = a.recip();
    let mut sum = del;
    for _ in 0..100_000 {
        ap = ap + T::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf<T: Real>(a: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let tiny = tiny::<T>();
    let mut b = x + one - a;
    let mut c = tiny.recip();
    let mut d = b.recip();
    let mut h = d;
    for i in 1..100_000 {
        let i = T::lit(i as f64);
        let an = -i * (i - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= T::epsilon() {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete gamma function, lower `P(a,x)` or upper `Q(a,x)`.
pub fn reg_inc_gamma<T: Real>(a: T, x: T, tail: GammaTail) -> Result<Probability<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete gamma shape a = {a} must be positive"
        )));
    }
    if !(x >= T::zero()) {
        return Err(Error::Domain(format!(
            "incomplete gamma argument x = {x} must be non-negative"
        )));
    }
    if x == T::zero() {
        return Ok(match tail {
            GammaTail::Lower => Probability::zero(),
            GammaTail::Upper => Probability::one(),
        });
    }
    if x.is_infinite() {
        return Ok(match tail {
            GammaTail::Lower => Probability::one(),
            GammaTail::Upper => Probability::zero(),
        });
    }
    let (lower, upper) = if x < a + T::one() {
        let p = gamma_series(a, x);
        (p, T::one() - p)
    } else {
        let q = gamma_cf(a, x);
        (T::one() - q, q)
    };
    Ok(Probability::clamped(match tail {
        GammaTail::Lower => lower,
        GammaTail::Upper => upper,
    }))
}

/// `igam(a, x)`: lower regularized incomplete gamma, for callers that have
/// already validated the domain.
pub fn igam<T: Real>(a: T, x: T) -> T {
    reg_inc_gamma(a, x.max(T::zero()), GammaTail::Lower)
        .map(Probability::value)
        .unwrap_or_else(|_| T::nan())
}

/// `igamc(a, x)`: upper regularized incomplete gamma.
pub fn igamc<T: Real>(a: T, x: T) -> T {
    reg_inc_gamma(a, x.max(T::zero()), GammaTail::Upper)
        .map(Probability::value)
        .unwrap_or_else(|_| T::nan())
}

/// Solves `Q(a, x) = p` for `x`.
pub fn inv_reg_inc_gamma_upper<T: Real>(a: T, p: Probability<T>) -> Result<T> {
    let q = p.value();
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "inverse incomplete gamma shape a = {a} must be positive"
        )));
    }
    if q <= T::zero() || q >= T::one() {
        return Err(Error::Domain(format!(
            "inverse upper incomplete gamma needs p in (0, 1), got {q}"
        )));
    }
    let one = T::one();
    let lower_target = one - q;

    // Seed from Numerical Recipes' invgammp heuristics.
    let mut x = if a > one {
        let pp = if lower_target < T::lit(0.5) { lower_target } else { q };
        let t = (-T::lit(2.0) * pp.ln()).sqrt();
        let mut z = (T::lit(2.30753) + t * T::lit(0.27061)) / (one + t * (T::lit(0.99229) + t * T::lit(0.04481))) - t;
        if lower_target < T::lit(0.5) {
            z = -z;
        }
        let w = one - (T::lit(9.0) * a).recip() - z / (T::lit(3.0) * a.sqrt());
        (a * w * w * w).max(T::lit(1e-3))
    } else {
        let t = one - a * (T::lit(0.253) + a * T::lit(0.12));
        if lower_target < t {
            (lower_target / t).powf(a.recip())
        } else {
            one - (one - (lower_target - t) / (one - t)).ln()
        }
    };

    // Bracket [lo, hi] with Q(lo) > q > Q(hi).
    let mut lo = T::zero();
    let mut hi = x.max(one);
    while igamc(a, hi) > q {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::Domain("inverse incomplete gamma failed to bracket".into()));
        }
    }
    if !(x > lo && x < hi) {
        x = T::lit(0.5) * (lo + hi);
    }

    let gln = ln_gamma(a);
    for _ in 0..400 {
        let f = igamc(a, x) - q;
        if f == T::zero() {
            return Ok(x);
        }
        if f > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // dQ/dx = -x^(a-1) e^-x / Gamma(a)
        let dq = -((a - one) * x.ln() - x - gln).exp();
        let newton = x - f / dq;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= T::lit(4.0) * T::epsilon() * x || (hi - lo) <= T::lit(4.0) * T::epsilon() * hi {
            break;
        }
    }
    Ok(x)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln sum_{i=0}^{k} C(n,i) p^i (1-p)^(n-i)`, via the incomplete beta identity.
pub fn ln_binomial_cdf(k: u64, n: u64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "binomial success probability {p} outside [0, 1]"
        )));
    }
    if k >= n {
        return Ok(0.0);
    }
    ln_reg_inc_beta(1.0 - p, (n - k) as f64, k as f64 + 1.0)
}

/// `P(Binomial(n, p) <= k)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> Result<Probability> {
    Ok(Probability::clamped(ln_binomial_cdf(k, n, p)?.exp()))
}
