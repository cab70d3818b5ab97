//! Accept probabilities `h(rho, alpha)` under the binary Markov model.
//!
//! Gaussian-family tests use closed forms. For the chi-square family the
//! observed statistic is modelled as a scaled chi-square whose mean matches
//! the statistic's expectation under the Markov-exact cell probabilities, so
//! `h = igam(df/2, igamc^-1(df/2, alpha) * df / E)`; at `rho = 0` this is
//! `1 - alpha` up to the IID approximation.

use serde::{Deserialize, Serialize};

use super::nist::{longest_run_table, LongestRunTable};
use super::{TestKind, TestSpec, TEMPLATE_BLOCKS};
use crate::error::{Error, Result};
use crate::specfun::{erf, erfc_inv, igam, inv_reg_inc_gamma_upper};
use crate::{BitSequence, Probability};

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("correlation {rho} outside (-1, 1)")));
    }
    Ok(())
}

fn step(a: u8, b: u8, rho: f64) -> f64 {
    if a == b {
        0.5 + 0.5 * rho
    } else {
        0.5 - 0.5 * rho
    }
}

/// Stationary probability of `pattern` occurring at a fixed position.
pub fn markov_pattern_prob(pattern: &[u8], rho: f64) -> f64 {
    if pattern.is_empty() {
        return 1.0;
    }
    0.5 * pattern.windows(2).map(|w| step(w[0], w[1], rho)).product::<f64>()
}

fn code_bits(code: usize, k: usize) -> Vec<u8> {
    (0..k).rev().map(|i| ((code >> i) & 1) as u8).collect()
}

/// Distribution of the longest run of ones in a block.
///
/// Entry `j < run_cap` is `P(longest = j)`; entry `run_cap` is
/// `P(longest >= run_cap)`.
pub fn longest_run_state_dist(rho: f64, run_cap: usize, block_len: usize) -> Result<Vec<f64>> {
    if rho.abs() >= 1.0 || rho.is_nan() {
        return Err(Error::Domain(format!("degenerate chain at rho = {rho}")));
    }
    if run_cap == 0 || block_len < run_cap {
        return Err(Error::Domain(format!(
            "need 1 <= run_cap <= block_len, got cap {run_cap}, block {block_len}"
        )));
    }
    let cdf: Vec<f64> = (0..run_cap).map(|v| longest_run_cdf(rho, v, block_len)).collect();
    let mut out = Vec::with_capacity(run_cap + 1);
    let mut prev = 0.0;
    for c in cdf {
        out.push((c - prev).max(0.0));
        prev = c;
    }
    out.push((1.0 - prev).max(0.0));
    Ok(out)
}

/// `P(longest run of ones <= v)`.
///
/// State `r` is the current trailing run of ones; the start vector is
/// `[1/2, 1/2, 0, ...]` and states beyond `v` are absorbed.
fn longest_run_cdf(rho: f64, v: usize, block_len: usize) -> f64 {
    let stay = 0.5 + 0.5 * rho;
    let flip = 0.5 - 0.5 * rho;
    let mut xi = vec![0.0; v + 1];
    xi[0] = 0.5;
    if v >= 1 {
        xi[1] = 0.5;
    }
    let mut next = vec![0.0; v + 1];
    for _ in 1..block_len {
        next.iter_mut().for_each(|p| *p = 0.0);
        next[0] += xi[0] * stay;
        if v >= 1 {
            next[1] += xi[0] * flip;
        }
        for r in 1..=v {
            next[0] += xi[r] * flip;
            if r < v {
                next[r + 1] += xi[r] * stay;
            }
        }
        std::mem::swap(&mut xi, &mut next);
    }
    xi.iter().sum()
}

/// `eps(s)`: whether the template overlaps itself when shifted by `s`,
/// for `s = 1..m-1` (index `s - 1`).
pub fn template_overlaps(template: &BitSequence) -> Vec<bool> {
    let a = template.as_slice();
    let m = a.len();
    (1..m).map(|s| a[s..] == a[..m - s]).collect()
}

/// Mean and variance of the non-overlapping hit count in a window.
///
/// `eta` is the stationary template probability and `e = 1 + sum eps(s) C(s)`
/// the expected clump size, where `C(s)` is the chance the chain extends a
/// hit into another one shifted by `s`. With `y = eta / e`, the count has
/// mean `(window - m + 1) y` and variance `window * y * (1 - (2m - 1) y)`.
pub fn template_hit_moments(template: &BitSequence, rho: f64, window: usize) -> Result<(f64, f64)> {
    let a = template.as_slice();
    let m = a.len();
    if m < 2 || window < m {
        return Err(Error::Domain(format!(
            "need template length >= 2 and window >= template, got {m} and {window}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation {rho} outside [-1, 1]")));
    }
    let eta = markov_pattern_prob(a, rho);
    let mut e = 1.0;
    for (i, &overlaps) in template_overlaps(template).iter().enumerate() {
        if overlaps {
            let s = i + 1;
            e += (m - 1 - s..m - 1).map(|l| step(a[l], a[l + 1], rho)).product::<f64>();
        }
    }
    let y = eta / e;
    let mean = (window - m + 1) as f64 * y;
    let var = window as f64 * y * (1.0 - (2 * m - 1) as f64 * y);
    Ok((mean, var))
}

/// `E[psi^2_k]` for a length-`n` cyclic sequence.
fn expected_psi_sq(k: usize, n: usize, rho: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let patterns: Vec<Vec<u8>> = (0..1usize << k).map(|c| code_bits(c, k)).collect();
    let probs: Vec<f64> = patterns.iter().map(|p| markov_pattern_prob(p, rho)).collect();
    let half = n / 2;
    // Pair-match probability S(d) for cyclic distance d.
    let mut s = vec![0.0; half + 1];
    s[0] = 1.0;
    for d in 1..=half.min(k.saturating_sub(1)) {
        // Overlapping blocks: a length-(k + d) string with period d.
        s[d] = (0..1usize << d)
            .map(|c| {
                let head = code_bits(c, d);
                let full: Vec<u8> = (0..k + d).map(|i| head[i % d]).collect();
                markov_pattern_prob(&full, rho)
            })
            .sum();
    }
    let mut rho_g = rho;
    let mut d = k;
    while d <= half {
        // Disjoint blocks with g = d - k + 1 steps between them.
        let same = 0.5 + 0.5 * rho_g;
        let diff = 0.5 - 0.5 * rho_g;
        s[d] = patterns
            .iter()
            .zip(&probs)
            .map(|(p, &pr)| {
                let t = if p[k - 1] == p[0] { same } else { diff };
                pr * pr * t * 2.0
            })
            .sum();
        rho_g *= rho;
        d += 1;
    }
    let mut total = 0.0;
    for d in 0..n {
        total += s[d.min(n - d)];
    }
    2f64.powi(k as i32) * total - n as f64
}

fn phi_markov(m: usize, rho: f64) -> f64 {
    (0..1usize << m)
        .map(|c| {
            let p = markov_pattern_prob(&code_bits(c, m), rho);
            if p > 0.0 {
                p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AcceptShape {
    Frequency {
        scale: f64,
    },
    Runs {
        length: f64,
        mu: f64,
        sigma: f64,
        pretest: f64,
    },
    Dft {
        mu1: f64,
        sigma1: f64,
        n0: f64,
        sigma0: f64,
    },
    ChiSquare {
        df: f64,
        expected: f64,
    },
}

/// Alpha-independent part of `h(rho, alpha)` for one test and length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptModel {
    pub kind: TestKind,
    pub rho: f64,
    pub length: usize,
    pub shape: AcceptShape,
}

impl AcceptModel {
    pub fn new(spec: &TestSpec, rho: f64, length: usize) -> Result<Self> {
        check_rho(rho)?;
        if length == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let n = length as f64;
        let theta = 0.5 - 0.5 * rho;
        let shape = match spec.kind {
            TestKind::Frequency => AcceptShape::Frequency {
                scale: ((1.0 - rho) / (1.0 + rho)).sqrt(),
            },
            TestKind::Runs => {
                let inflation = ((1.0 + rho) / (1.0 - rho)).sqrt();
                AcceptShape::Runs {
                    length: n,
                    mu: n * (theta - 0.5),
                    sigma: (n * theta * (1.0 - theta)).sqrt(),
                    pretest: erf(4.0 / (std::f64::consts::SQRT_2 * inflation)),
                }
            }
            TestKind::Dft => {
                let half = length / 2;
                let mut mu1 = 0.0;
                let mut var1 = 0.0;
                for j in 0..half {
                    let f = j as f64 / n;
                    let sdens =
                        (1.0 - rho * rho) / (1.0 - 2.0 * rho * (2.0 * std::f64::consts::PI * f).cos() + rho * rho);
                    let p = 1.0 - 0.05f64.powf(1.0 / sdens);
                    mu1 += p;
                    var1 += p * (1.0 - p);
                }
                AcceptShape::Dft {
                    mu1,
                    sigma1: (0.5 * var1).sqrt(),
                    n0: 0.95 * n / 2.0,
                    sigma0: (0.95 * 0.05 * n / 4.0).sqrt(),
                }
            }
            TestKind::BlockFrequency => {
                let m = spec
                    .block_size
                    .ok_or_else(|| Error::Domain("block_size missing".into()))?;
                let blocks = length / m;
                if blocks == 0 {
                    return Err(Error::InsufficientData { needed: m, got: length });
                }
                let mut inflation = 1.0;
                let mut rk = 1.0;
                for k in 1..m {
                    rk *= rho;
                    if rk.abs() < 1e-300 {
                        break;
                    }
                    inflation += 2.0 * (1.0 - k as f64 / m as f64) * rk;
                }
                AcceptShape::ChiSquare {
                    df: blocks as f64,
                    expected: blocks as f64 * inflation,
                }
            }
            TestKind::LongestRun => {
                let table: LongestRunTable = match spec.block_size {
                    Some(m) => longest_run_table(m)?,
                    None => LongestRunTable::for_length(length)?,
                };
                let blocks = (length / table.block) as f64;
                if blocks == 0.0 {
                    return Err(Error::InsufficientData {
                        needed: table.block,
                        got: length,
                    });
                }
                let dist = longest_run_state_dist(rho, table.high, table.block)?;
                let mut p = vec![0.0; table.classes()];
                for (run, &mass) in dist.iter().enumerate() {
                    p[table.class_of(run)] += mass;
                }
                let expected = p
                    .iter()
                    .zip(table.probs)
                    .map(|(&pi, &q)| (pi * (1.0 - pi) + blocks * (pi - q).powi(2)) / q)
                    .sum();
                AcceptShape::ChiSquare {
                    df: (table.classes() - 1) as f64,
                    expected,
                }
            }
            TestKind::NonOverlappingTemplate => {
                let t = spec.template_or_default();
                let m = t.len();
                let window = length / TEMPLATE_BLOCKS;
                if window < m {
                    return Err(Error::InsufficientData {
                        needed: TEMPLATE_BLOCKS * m,
                        got: length,
                    });
                }
                let mu = (window - m + 1) as f64 / 2f64.powi(m as i32);
                let sigma2 = window as f64 * (1.0 / 2f64.powi(m as i32) - (2 * m - 1) as f64 / 2f64.powi(2 * m as i32));
                let (mean, var) = template_hit_moments(&t, rho, window)?;
                AcceptShape::ChiSquare {
                    df: TEMPLATE_BLOCKS as f64,
                    expected: TEMPLATE_BLOCKS as f64 * (var + (mean - mu).powi(2)) / sigma2,
                }
            }
            TestKind::ApproximateEntropy => {
                let m = spec
                    .pattern_order
                    .ok_or_else(|| Error::Domain("pattern_order missing".into()))?;
                let apen = phi_markov(m, rho) - phi_markov(m + 1, rho);
                let df = 2f64.powi(m as i32);
                AcceptShape::ChiSquare {
                    df,
                    expected: df + 2.0 * n * (std::f64::consts::LN_2 - apen),
                }
            }
            TestKind::Serial1 | TestKind::Serial2 => {
                let m = spec
                    .pattern_order
                    .ok_or_else(|| Error::Domain("pattern_order missing".into()))?;
                if m < 2 {
                    return Err(Error::Domain("serial needs pattern_order >= 2".into()));
                }
                let e0 = expected_psi_sq(m, length, rho);
                let e1 = expected_psi_sq(m - 1, length, rho);
                if spec.kind == TestKind::Serial1 {
                    AcceptShape::ChiSquare {
                        df: 2f64.powi(m as i32 - 1),
                        expected: e0 - e1,
                    }
                } else {
                    let e2 = expected_psi_sq(m - 2, length, rho);
                    AcceptShape::ChiSquare {
                        df: 2f64.powi(m as i32 - 2),
                        expected: e0 - 2.0 * e1 + e2,
                    }
                }
            }
        };
        Ok(AcceptModel {
            kind: spec.kind,
            rho,
            length,
            shape,
        })
    }

    /// `(df, E[statistic])` for chi-square kinds.
    pub fn expected_statistic(&self) -> Option<(f64, f64)> {
        match self.shape {
            AcceptShape::ChiSquare { df, expected } => Some((df, expected)),
            _ => None,
        }
    }

    pub fn accept_probability(&self, alpha: Probability) -> Result<Probability> {
        let a = alpha.value();
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("alpha {a} outside (0, 1)")));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let h = match self.shape {
            AcceptShape::Frequency { scale } => erf(erfc_inv(a)? * scale),
            AcceptShape::Runs {
                length,
                mu,
                sigma,
                pretest,
            } => {
                let half_width = erfc_inv(a)? * (2.0 * length).sqrt() / 2.0;
                let core =
                    0.5 * erf((half_width - mu) / (sigma * sqrt2)) + 0.5 * erf((half_width + mu) / (sigma * sqrt2));
                core * pretest
            }
            AcceptShape::Dft {
                mu1,
                sigma1,
                n0,
                sigma0,
            } => {
                let w = sqrt2 * erfc_inv(a)? * sigma0;
                let shift = n0 - mu1;
                0.5 * erf((w + shift) / (sigma1 * sqrt2)) + 0.5 * erf((w - shift) / (sigma1 * sqrt2))
            }
            AcceptShape::ChiSquare { df, expected } => {
                if expected <= 0.0 {
                    1.0
                } else {
                    let k = df / 2.0;
                    let c = inv_reg_inc_gamma_upper(k, alpha)?;
                    igam(k, c * df / expected)
                }
            }
        };
        Ok(Probability::clamped(h))
    }
}

/// `h(rho, alpha)` for a test on sequences of `length` bits.
pub fn accept_probability(spec: &TestSpec, rho: f64, length: usize) -> Result<Probability> {
    spec.validate()?;
    AcceptModel::new(spec, rho, length)?.accept_probability(spec.alpha)
}
