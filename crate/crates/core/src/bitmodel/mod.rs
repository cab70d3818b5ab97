//! Correlated bit-sequence models.
//!
//! The binary model is a symmetric two-state Markov chain whose lag-1
//! correlation `rho` fixes the flip probability `theta = (1 - rho) / 2`. The
//! m-ary model generalizes it to `m` quantization levels with transition
//! matrix `rho * I + (1 - rho) / m`.

pub mod io;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed;
use crate::Probability;

/// An ordered sequence of bits, stored one bit per byte (`0` or `1`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bits: Vec<u8>,
}

impl BitSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sequence from `0`/`1` bytes; any other value is an input error.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Input(format!("bit {pos} has value {}", bits[pos])));
        }
        Ok(BitSequence { bits })
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(it: I) -> Self {
        BitSequence {
            bits: it.into_iter().map(u8::from).collect(),
        }
    }

    /// The `len` low bits of `code`, most significant first.
    pub fn from_code(code: u64, len: usize) -> Self {
        let bits = (0..len).rev().map(|i| ((code >> i) & 1) as u8).collect();
        BitSequence { bits }
    }

    /// Inverse of [`BitSequence::from_code`] for sequences of at most 64 bits.
    pub fn to_code(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(u8::from(bit));
    }

    pub fn extend_from(&mut self, other: &BitSequence) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Number of positions `i` with `x_i != x_{i+1}`.
    pub fn transitions(&self) -> usize {
        self.bits.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn complement(&self) -> Self {
        BitSequence {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }

    pub fn truncated(&self, len: usize) -> Self {
        BitSequence {
            bits: self.bits[..len.min(self.bits.len())].to_vec(),
        }
    }

    pub fn hamming(&self, other: &BitSequence) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::Input(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitSequence {
    type Err = Error;

    /// Parses `0`/`1` characters; ASCII whitespace is skipped.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_ascii_whitespace() => {}
                c => return Err(Error::Input(format!("unexpected character {c:?} at offset {i}"))),
            }
        }
        Ok(BitSequence { bits })
    }
}

impl Serialize for BitSequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Binary lag-1 Markov model with correlation `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovBitModel {
    pub rho: f64,
    pub theta: Probability,
}

impl MarkovBitModel {
    pub fn new(rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("correlation {rho} outside [-1, 1]")));
        }
        Ok(MarkovBitModel {
            rho,
            theta: Probability::new((1.0 - rho) / 2.0)?,
        })
    }

    /// First bit uniform, then each bit flips with probability `theta`.
    pub fn generate(&self, length: usize, seed: u64) -> BitSequence {
        let mut rng = seed::rng(seed);
        let theta = self.theta.value();
        let mut bits = Vec::with_capacity(length);
        if length == 0 {
            return BitSequence { bits };
        }
        let mut cur: u8 = rng.random::<bool>().into();
        bits.push(cur);
        for _ in 1..length {
            if rng.random_bool(theta) {
                cur ^= 1;
            }
            bits.push(cur);
        }
        BitSequence { bits }
    }
}

/// Convenience wrapper for [`MarkovBitModel::generate`].
pub fn generate(model: &MarkovBitModel, length: usize, seed: u64) -> BitSequence {
    model.generate(length, seed)
}

/// Running lag-1 pair statistics, so several sequences can be pooled.
#[derive(Clone, Copy, Debug, Default)]
pub struct Lag1Accumulator {
    pairs: u64,
    sum_lead: u64,
    sum_lag: u64,
    sum_prod: u64,
}

impl Lag1Accumulator {
    pub fn add(&mut self, x: &BitSequence) {
        for w in x.as_slice().windows(2) {
            let (a, b) = (w[0] as u64, w[1] as u64);
            self.pairs += 1;
            self.sum_lead += a;
            self.sum_lag += b;
            self.sum_prod += a * b;
        }
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    /// Pearson correlation of `(x_i, x_{i+1})` over all pairs seen.
    pub fn correlation(&self) -> Result<f64> {
        if self.pairs == 0 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.pairs as usize,
            });
        }
        let n = self.pairs as f64;
        let (sa, sb, sab) = (self.sum_lead as f64, self.sum_lag as f64, self.sum_prod as f64);
        // Bits square to themselves, so sum of squares equals the plain sum.
        let cov = n * sab - sa * sb;
        let va = n * sa - sa * sa;
        let vb = n * sb - sb * sb;
        if va <= 0.0 || vb <= 0.0 {
            return Err(Error::DegenerateVariance("lag-1 pairs have zero variance".into()));
        }
        Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Sample lag-1 correlation of a bit sequence.
pub fn lag1_correlation(x: &BitSequence) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let mut acc = Lag1Accumulator::default();
    acc.add(x);
    acc.correlation()
}

/// Off-diagonal normalization of the m-ary transition matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OffDiagonal {
    /// `(1 - rho) / m`: rows sum to one.
    #[default]
    Levels,
    /// `(1 - rho) / 2^m` as printed in the m-ary derivation; rows do not sum to one.
    PowerOfTwo,
}

/// Transition rows `rho * delta_rs + (1 - rho) / d`, `d` chosen by `norm`.
pub fn transition_rows(m: usize, rho: f64, norm: OffDiagonal) -> Vec<Vec<f64>> {
    let d = match norm {
        OffDiagonal::Levels => m as f64,
        OffDiagonal::PowerOfTwo => 2f64.powi(m as i32),
    };
    let off = (1.0 - rho) / d;
    (0..m)
        .map(|r| (0..m).map(|s| if r == s { rho + off } else { off }).collect())
        .collect()
}

/// m-level Markov chain over quantization states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaryMarkovModel {
    pub levels: usize,
    pub bits_per_level: usize,
    pub rho_m: f64,
    pub transition_matrix: Vec<Vec<f64>>,
}

/// Bits needed to label `m` states: `ceil(log2 m)`.
pub fn bits_per_level(m: usize) -> usize {
    (usize::BITS - (m.max(1) - 1).leading_zeros()) as usize
}

/// Row-stochastic transition matrix for `m` levels and correlation `rho`.
pub fn transition_matrix(m: usize, rho: f64) -> Result<MaryMarkovModel> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {m}")));
    }
    if !(rho <= 1.0) {
        return Err(Error::Domain(format!("correlation {rho} above 1")));
    }
    let floor = -1.0 / (m as f64 - 1.0);
    if rho < floor - 1e-15 {
        return Err(Error::NegativeEntry(format!(
            "rho = {rho} below -1/(m-1) = {floor} for m = {m}"
        )));
    }
    let mut rows = transition_rows(m, rho, OffDiagonal::Levels);
    for row in &mut rows {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(MaryMarkovModel {
        levels: m,
        bits_per_level: bits_per_level(m),
        rho_m: rho,
        transition_matrix: rows,
    })
}

impl MaryMarkovModel {
    /// State path with a uniform initial state.
    pub fn generate_states(&self, count: usize, seed: u64) -> Vec<usize> {
        let mut rng = seed::rng(seed);
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        let mut state = rng.random_range(0..self.levels);
        out.push(state);
        for _ in 1..count {
            let u: f64 = rng.random();
            let row = &self.transition_matrix[state];
            let mut acc = 0.0;
            let mut next = self.levels - 1;
            for (s, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = s;
                    break;
                }
            }
            state = next;
            out.push(state);
        }
        out
    }

    /// State path encoded as `bits_per_level`-bit binary labels, MSB first.
    pub fn generate(&self, count: usize, seed: u64) -> BitSequence {
        let b = self.bits_per_level;
        let mut bits = Vec::with_capacity(count * b);
        for s in self.generate_states(count, seed) {
            for i in (0..b).rev() {
                bits.push(((s >> i) & 1) as u8);
            }
        }
        BitSequence { bits }
    }
}

/// Block correlation of consecutive `ceil(log2 m)`-bit symbols.
///
/// Each consecutive symbol pair is scored by the Pearson-style sum over bit
/// positions, centred on the sequence-wide bit mean; pairs whose centred
/// block has zero norm are skipped and the rest are averaged.
pub fn mary_correlation(x: &BitSequence, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {m}")));
    }
    let b = bits_per_level(m);
    if x.len() % b != 0 {
        return Err(Error::Input(format!(
            "length {} not divisible by {b} bits per level",
            x.len()
        )));
    }
    let symbols = x.len() / b;
    if symbols < 2 {
        return Err(Error::InsufficientData {
            needed: 2 * b,
            got: x.len(),
        });
    }
    let mean = x.count_ones() as f64 / x.len() as f64;
    let blocks: Vec<&[u8]> = x.as_slice().chunks(b).collect();
    let mut total = 0.0;
    let mut used = 0usize;
    for pair in blocks.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let mut num = 0.0;
        let mut nu = 0.0;
        let mut nv = 0.0;
        for j in 0..b {
            let du = u[j] as f64 - mean;
            let dv = v[j] as f64 - mean;
            num += du * dv;
            nu += du * du;
            nv += dv * dv;
        }
        if nu <= 0.0 || nv <= 0.0 {
            continue;
        }
        total += num / (nu.sqrt() * nv.sqrt());
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateVariance(
            "every symbol pair has zero block variance".into(),
        ));
    }
    Ok(total / used as f64)
}
