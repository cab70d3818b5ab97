//! Maximum-likelihood tree search (MLTS) adversary.
//!
//! Eve walks the generation tree from the most likely bit sequence towards
//! the least likely one. With `N` guesses split evenly between the two
//! correlation signs she covers every transition pattern with at most `n/2`
//! flips (positive correlation) and every pattern with at most `n/2`
//! non-flips (negative correlation), so
//!
//! ```text
//! N = 2 * sum_{i <= n/2} C(L, i)
//! P(MLTS) = I_theta(L - n/2, n/2 + 1) + I_{1-theta}(L - n/2, n/2 + 1)
//! ```
//!
//! with `theta = (1 - rho) / 2`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ln_reg_inc_beta, reg_inc_beta};
use crate::{BitSequence, Probability};

/// Largest sequence length [`enumerate_mlts`] accepts.
pub const MAX_ENUMERATION_LENGTH: usize = 26;
/// Largest sequence length [`mlts_rank`] accepts.
pub const MAX_RANK_LENGTH: usize = 127;

/// Serde helpers for big unsigned integers.
///
/// Written as a decimal string; read from a decimal string, a `2^k` string,
/// or a plain JSON integer.
pub mod big_decimal {
    use num_bigint::BigUint;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        d.deserialize_any(BigVisitor)
    }

    /// Parses `"12345"` or `"2^96"`.
    pub fn parse(s: &str) -> Result<BigUint, String> {
        let s = s.trim();
        if let Some((base, exp)) = s.split_once('^') {
            let base: BigUint = base.trim().parse().map_err(|e| format!("bad base in {s:?}: {e}"))?;
            let exp: u32 = exp.trim().parse().map_err(|e| format!("bad exponent in {s:?}: {e}"))?;
            Ok(base.pow(exp))
        } else {
            s.parse().map_err(|e| format!("bad integer {s:?}: {e}"))
        }
    }

    struct BigVisitor;

    impl Visitor<'_> for BigVisitor {
        type Value = BigUint;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a non-negative integer, a decimal string, or \"2^k\"")
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigUint, E> {
            Ok(BigUint::from(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<BigUint, E> {
            u64::try_from(v)
                .map(BigUint::from)
                .map_err(|_| E::custom("negative integer"))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<BigUint, E> {
            parse(v).map_err(E::custom)
        }
    }
}

/// Exact `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `2 * sum_{i=0}^{n/2} C(L, i)`.
pub fn tree_searches(length: usize, depth: usize) -> BigUint {
    let mut sum = BigUint::zero();
    let mut term = BigUint::one();
    let l = length as u64;
    for i in 0..=(depth / 2) as u64 {
        if i > l {
            break;
        }
        if i > 0 {
            term = term * (l - i + 1) / i;
        }
        sum += &term;
    }
    sum * 2u32
}

/// Eve's capability `N` together with the realized tree depth `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryBudget {
    #[serde(with = "big_decimal")]
    pub searches: BigUint,
    pub depth: usize,
    pub sequence_length: usize,
}

impl AdversaryBudget {
    /// Budget realized exactly by an even depth.
    pub fn from_depth(length: usize, depth: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::Domain("sequence length must be positive".into()));
        }
        if depth % 2 != 0 || depth > length {
            return Err(Error::Domain(format!(
                "depth {depth} must be even and at most L = {length}"
            )));
        }
        Ok(AdversaryBudget {
            searches: tree_searches(length, depth),
            depth,
            sequence_length: length,
        })
    }

    /// Guesses beyond the last complete depth.
    pub fn remainder(&self) -> BigUint {
        let full = tree_searches(self.sequence_length, self.depth);
        if self.searches > full {
            &self.searches - full
        } else {
            BigUint::zero()
        }
    }
}

/// Largest even depth whose tree count fits in `N`, clamped to `L`.
pub fn budget_from_searches(searches: &BigUint, length: usize) -> Result<AdversaryBudget> {
    if length == 0 {
        return Err(Error::Domain("sequence length must be positive".into()));
    }
    if *searches < BigUint::from(2u32) {
        return Err(Error::InsufficientBudget(format!(
            "N = {searches} cannot cover both zero-transition sequences"
        )));
    }
    let l = length as u64;
    let mut depth = 0usize;
    let mut sum = BigUint::one();
    let mut term = BigUint::one();
    loop {
        let next = depth + 2;
        if next > length {
            break;
        }
        let i = (next / 2) as u64;
        term = term * (l - i + 1) / i;
        let candidate = &sum + &term;
        if candidate.clone() * 2u32 > *searches {
            break;
        }
        sum = candidate;
        depth = next;
    }
    Ok(AdversaryBudget {
        searches: searches.clone(),
        depth,
        sequence_length: length,
    })
}

/// `log2` of a positive big integer, accurate to double precision.
pub fn big_log2(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 64 {
        return v.to_u64().expect("fits in u64").to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().expect("fits in u64") as f64;
    top.log2() + shift as f64
}

/// `x * 2^e` without intermediate overflow or premature underflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

fn theta(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok((1.0 - rho) / 2.0)
}

fn check_depth(length: usize, depth: usize) -> Result<()> {
    if length == 0 || depth % 2 != 0 || depth > length {
        return Err(Error::Domain(format!(
            "depth {depth} must be even and at most L = {length} (L > 0)"
        )));
    }
    Ok(())
}

/// `a * ln_y` with `0 * -inf = 0`.
fn xlny(a: f64, ln_y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * ln_y
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Unclamped two-branch sum in log space.
pub fn ln_mlts_success_prob(length: usize, rho: f64, depth: usize) -> Result<f64> {
    check_depth(length, depth)?;
    let th = theta(rho)?;
    let a = (length - depth / 2) as f64;
    let b = (depth / 2) as f64 + 1.0;
    Ok(log_add(ln_reg_inc_beta(th, a, b)?, ln_reg_inc_beta(1.0 - th, a, b)?))
}

/// Unclamped two-branch sum; may exceed one when the branches overlap.
pub fn mlts_success_prob_raw(length: usize, rho: f64, depth: usize) -> Result<f64> {
    check_depth(length, depth)?;
    let th = theta(rho)?;
    let a = (length - depth / 2) as f64;
    let b = (depth / 2) as f64 + 1.0;
    Ok(reg_inc_beta(th, a, b)?.value() + reg_inc_beta(1.0 - th, a, b)?.value())
}

/// MLTS success probability at even depth `n`, clamped to `[0, 1]`.
pub fn mlts_success_prob(length: usize, rho: f64, depth: usize) -> Result<Probability> {
    Ok(Probability::clamped(mlts_success_prob_raw(length, rho, depth)?))
}

/// How a raw `N` that is not realized by any even depth is credited to Eve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// Depth `n` plus the leftover guesses spent, half per branch, on the
    /// next transition-count group. Exact `N * 2^-L` at `rho = 0`.
    #[default]
    Interpolate,
    /// The larger of depths `n` and `n + 2` (Eve rounded up).
    NextDepth,
    /// Depth `n` only (Eve rounded down).
    Floor,
}

/// `ln` of the unclamped MLTS success probability for a raw budget.
pub fn ln_mlts_success_prob_for_budget(budget: &AdversaryBudget, rho: f64, rule: BudgetRule) -> Result<f64> {
    let l = budget.sequence_length;
    let n = budget.depth;
    let base = ln_mlts_success_prob(l, rho, n)?;
    match rule {
        BudgetRule::Floor => Ok(base),
        BudgetRule::NextDepth => {
            if n + 2 <= l && budget.searches > tree_searches(l, n) {
                Ok(base.max(ln_mlts_success_prob(l, rho, n + 2)?))
            } else {
                Ok(base)
            }
        }
        BudgetRule::Interpolate => {
            let rem = budget.remainder();
            let k = n / 2 + 1;
            if rem.is_zero() || k > l {
                return Ok(base);
            }
            let th = theta(rho)?;
            let (kf, rest) = (k as f64, (l - k) as f64);
            let ln_flip = th.ln();
            let ln_stay = (-th).ln_1p();
            // One sequence from each branch's next group.
            let pos = xlny(kf, ln_flip) + xlny(rest, ln_stay);
            let neg = xlny(kf, ln_stay) + xlny(rest, ln_flip);
            let ln_half_rem = big_log2(&rem) * std::f64::consts::LN_2 - std::f64::consts::LN_2;
            let extra = ln_half_rem + log_add(pos, neg);
            Ok(log_add(base, extra))
        }
    }
}

/// Clamped MLTS success probability for a raw budget.
pub fn mlts_success_prob_for_budget(budget: &AdversaryBudget, rho: f64, rule: BudgetRule) -> Result<Probability> {
    if rho == 0.0 && rule == BudgetRule::Interpolate {
        // Uniform bits: every candidate has probability 2^-L.
        return Ok(rg_success_prob(&budget.searches, budget.sequence_length));
    }
    Ok(Probability::clamped(
        ln_mlts_success_prob_for_budget(budget, rho, rule)?.exp(),
    ))
}

/// m-ary MLTS success probability (order `m`, i.e. `2^m` levels):
/// `m * I_{rho + (1-rho)/2^m}(floor(L/2^(m-1)) - floor(n/2^m), floor(n/2^m) + 1)`.
pub fn mlts_success_prob_mary(length: usize, rho: f64, depth: usize, m: u32) -> Result<Probability> {
    Ok(Probability::clamped(mlts_success_prob_mary_raw(length, rho, depth, m)?))
}

/// Unclamped m-ary sum.
pub fn mlts_success_prob_mary_raw(length: usize, rho: f64, depth: usize, m: u32) -> Result<f64> {
    if m == 0 || m > 30 {
        return Err(Error::Domain(format!("order m = {m} outside 1..=30")));
    }
    theta(rho)?;
    let a = (length >> (m - 1)) as i64 - (depth >> m) as i64;
    let b = (depth >> m) as f64 + 1.0;
    if a <= 0 {
        return Err(Error::Domain(format!(
            "beta parameter a = {a} not positive for L = {length}, n = {depth}, m = {m}"
        )));
    }
    let x = (rho + (1.0 - rho) / 2f64.powi(m as i32)).clamp(0.0, 1.0);
    Ok(m as f64 * reg_inc_beta(x, a as f64, b)?.value())
}

/// Ordering key of an `L`-bit sequence with `w` transitions.
fn group_key(length: usize, w: usize) -> (usize, usize) {
    (w.min(length - w), w)
}

/// Transition counts in enumeration order.
fn group_order(length: usize) -> Vec<usize> {
    let mut ws: Vec<usize> = (0..length).collect();
    ws.sort_by_key(|&w| group_key(length, w));
    ws
}

fn binom_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of `L`-bit sequences with exactly `w` transitions.
fn group_size(length: usize, w: usize) -> u128 {
    2 * binom_u128(length - 1, w)
}

/// Candidates in MLTS order: groups by `min(w, L - w)` then `w`, where `w`
/// counts transitions; lexicographic within a group.
pub struct MltsCandidates {
    length: usize,
    remaining: BigUint,
    order: std::vec::IntoIter<usize>,
    current: std::vec::IntoIter<u32>,
}

impl MltsCandidates {
    fn load_group(&mut self, w: usize) {
        let l = self.length;
        let mut codes = Vec::with_capacity(group_size(l, w) as usize);
        for first in 0..2u32 {
            for_each_subset(l - 1, w, |mask| {
                // Bit i+1 differs from bit i when bit i of the mask is set.
                let mut code = 0u32;
                let mut cur = first;
                code |= cur << (l - 1);
                for i in 0..l - 1 {
                    if mask >> i & 1 == 1 {
                        cur ^= 1;
                    }
                    code |= cur << (l - 2 - i);
                }
                codes.push(code);
            });
        }
        codes.sort_unstable();
        self.current = codes.into_iter();
    }
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u32)) {
    if k > n {
        return;
    }
    if k == 0 {
        f(0);
        return;
    }
    // Gosper's hack over n-bit masks with k bits set.
    let mut mask: u64 = (1u64 << k) - 1;
    let limit = 1u64 << n;
    while mask < limit {
        f(mask as u32);
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
}

impl Iterator for MltsCandidates {
    type Item = BitSequence;

    fn next(&mut self) -> Option<BitSequence> {
        if self.remaining.is_zero() {
            return None;
        }
        loop {
            if let Some(code) = self.current.next() {
                self.remaining -= 1u32;
                return Some(BitSequence::from_code(code as u64, self.length));
            }
            let w = self.order.next()?;
            self.load_group(w);
        }
    }
}

/// Streams the first `budget.searches` candidates in MLTS order.
pub fn enumerate_mlts(length: usize, budget: &AdversaryBudget) -> Result<MltsCandidates> {
    if length == 0 || length > MAX_ENUMERATION_LENGTH {
        return Err(Error::Scale {
            length,
            max: MAX_ENUMERATION_LENGTH,
        });
    }
    Ok(MltsCandidates {
        length,
        remaining: budget.searches.clone(),
        order: group_order(length).into_iter(),
        current: Vec::new().into_iter(),
    })
}

/// Zero-based position of `x` in the [`enumerate_mlts`] order.
pub fn mlts_rank(x: &BitSequence) -> Result<u128> {
    let l = x.len();
    if l == 0 || l > MAX_RANK_LENGTH {
        return Err(Error::Scale {
            length: l,
            max: MAX_RANK_LENGTH,
        });
    }
    let bits = x.as_slice();
    let w = x.transitions();
    let key = group_key(l, w);
    let before: u128 = (0..l)
        .filter(|&v| group_key(l, v) < key)
        .map(|v| group_size(l, v))
        .sum();
    let mut within: u128 = 0;
    let mut t = 0usize;
    for i in 0..l {
        if bits[i] == 1 {
            // Sequences sharing the prefix but with a 0 here.
            let t0 = t + usize::from(i > 0 && bits[i - 1] != 0);
            if t0 <= w {
                within += binom_u128(l - 1 - i, w - t0);
            }
        }
        if i > 0 && bits[i] != bits[i - 1] {
            t += 1;
        }
    }
    Ok(before + within)
}

/// Whether `x` is among the first `searches` MLTS candidates.
pub fn mlts_hit(x: &BitSequence, searches: &BigUint) -> Result<bool> {
    Ok(BigUint::from(mlts_rank(x)?) < *searches)
}

/// `min(N * 2^-M, 1)`; exact whenever `N` has at most 53 significant bits.
pub fn rg_success_prob(searches: &BigUint, key_length: usize) -> Probability {
    let bits = searches.bits();
    if bits > key_length as u64 {
        return Probability::one();
    }
    let shift = bits.saturating_sub(64);
    let top = (searches >> shift).to_u64().expect("fits in u64") as f64;
    Probability::clamped(ldexp(top, shift as i64 - key_length as i64))
}

/// `ln min(N * 2^-M, 1)`.
pub fn ln_rg_success_prob(searches: &BigUint, key_length: usize) -> f64 {
    ((big_log2(searches) - key_length as f64) * std::f64::consts::LN_2).min(0.0)
}

/// `1 - (1 - 2^-M)^L`, evaluated with `expm1`/`ln_1p`.
pub fn collision_prob(length: usize, key_length: usize) -> Probability {
    let q = ldexp(1.0, -(key_length as i64));
    Probability::clamped(-(length as f64 * (-q).ln_1p()).exp_m1())
}

/// `log2(p_eve / p_rg)`. Negative values mean Eve does worse than guessing.
pub fn security_loss(p_eve: Probability, p_rg: Probability) -> Result<f64> {
    if p_rg.value() <= 0.0 {
        return Err(Error::Domain("random-guess probability is zero".into()));
    }
    Ok(p_eve.value().log2() - p_rg.value().log2())
}

/// `I_MLTS * P(accept)`.
pub fn eve_success_prob(i_mlts: Probability, p_accept: Probability) -> Probability {
    Probability::clamped(i_mlts.value() * p_accept.value())
}

/// Closed-form security summary for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub p_eve: Probability,
    pub p_rg: Probability,
    /// `None` when both log-probabilities are `-inf`.
    pub security_loss_bits: Option<f64>,
    pub p_collision: Probability,
    pub i_mlts: Probability,
    pub ln_p_eve: f64,
    pub ln_p_rg: f64,
    /// The two-branch sum exceeded one and was clamped.
    pub clamped: bool,
    /// Negative security loss: Eve's strategy is worse than guessing.
    pub trivial_strategy: bool,
}

impl SecurityReport {
    /// Evaluates Eve's chain against random guessing of an `M`-bit key.
    pub fn evaluate(
        budget: &AdversaryBudget,
        key_length: usize,
        rho: f64,
        p_accept: Probability,
        rule: BudgetRule,
    ) -> Result<Self> {
        let ln_i = ln_mlts_success_prob_for_budget(budget, rho, rule)?;
        let clamped = ln_i > 0.0;
        let ln_i = ln_i.min(0.0);
        let ln_eve = ln_i + p_accept.value().ln();
        let ln_rg = ln_rg_success_prob(&budget.searches, key_length);
        let loss = if ln_eve.is_finite() || ln_rg.is_finite() {
            Some((ln_eve - ln_rg) / std::f64::consts::LN_2)
        } else {
            None
        };
        Ok(SecurityReport {
            p_eve: Probability::clamped(ln_eve.exp()),
            p_rg: rg_success_prob(&budget.searches, key_length),
            security_loss_bits: loss,
            p_collision: collision_prob(budget.sequence_length, key_length),
            i_mlts: Probability::clamped(ln_i.exp()),
            ln_p_eve: ln_eve,
            ln_p_rg: ln_rg,
            clamped,
            trivial_strategy: loss.is_some_and(|l| l < 0.0),
        })
    }
}
