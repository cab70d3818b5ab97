//! Synthetic key generation: channel, quantizer, test, reconciliation and
//! privacy amplification, with small-scale attack measurements.

use std::io::Write;

use num_bigint::BigUint;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitmodel::Lag1Accumulator;
use crate::error::{Error, Result};
use crate::guideline::{self, Grid, GuidelineProblem, GuidelineSolution, TestChoice};
use crate::mlts::{self, big_decimal, BudgetRule, SecurityReport};
use crate::randtests::{run_test, AcceptModel};
use crate::{seed, BitSequence, Probability, RNG_ALGORITHM};

/// Largest sequence length at which Eve's success is measured by ranking.
pub const MAX_ATTACK_LENGTH: usize = mlts::MAX_ENUMERATION_LENGTH;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub ar_coefficient: f64,
    pub noise_sd: f64,
    #[serde(default = "one")]
    pub sample_interval: f64,
    /// Samples simulated per trial.
    pub duration: usize,
}

fn one() -> f64 {
    1.0
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::Domain(format!(
                "ar_coefficient {} outside [0, 1)",
                self.ar_coefficient
            )));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::Domain(format!(
                "noise_sd {} must be finite and >= 0",
                self.noise_sd
            )));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::Domain("sample_interval must be positive".into()));
        }
        if self.duration == 0 {
            return Err(Error::Domain("duration must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub samples: Vec<f64>,
    pub sample_interval: f64,
    pub ar_coefficient: f64,
    pub noise_sd: f64,
}

/// Shared unit-variance AR(1) process plus independent endpoint noise.
pub fn simulate_channel(params: &ChannelParams, duration: usize, seed: u64) -> Result<(ChannelTrace, ChannelTrace)> {
    params.validate()?;
    if duration == 0 {
        return Err(Error::Domain("duration must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let a = params.ar_coefficient;
    let innov = (1.0 - a * a).sqrt();
    let mut alice = Vec::with_capacity(duration);
    let mut bob = Vec::with_capacity(duration);
    let mut s = 0.0;
    for t in 0..duration {
        let e: f64 = rng.sample(StandardNormal);
        let na: f64 = rng.sample(StandardNormal);
        let nb: f64 = rng.sample(StandardNormal);
        s = if t == 0 { e } else { a * s + innov * e };
        alice.push(s + params.noise_sd * na);
        bob.push(s + params.noise_sd * nb);
    }
    let trace = |samples| ChannelTrace {
        samples,
        sample_interval: params.sample_interval,
        ar_coefficient: a,
        noise_sd: params.noise_sd,
    };
    Ok((trace(alice), trace(bob)))
}

/// Sample lag-1 autocorrelation of a real series.
pub fn autocorrelation_lag1(samples: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    if var <= 0.0 {
        return Err(Error::DegenerateVariance("constant trace".into()));
    }
    let cov: f64 = samples.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Ok(cov / var)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub q_plus: f64,
    pub q_minus: f64,
    #[serde(default = "two")]
    pub levels: usize,
    /// Samples per emitted symbol.
    #[serde(default = "one_usize")]
    pub interval: usize,
}

fn two() -> usize {
    2
}

fn one_usize() -> usize {
    1
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.levels, 2 | 4 | 8) {
            return Err(Error::Domain(format!("levels {} not in {{2, 4, 8}}", self.levels)));
        }
        if self.q_plus < self.q_minus {
            return Err(Error::Domain(format!(
                "q_plus {} below q_minus {}",
                self.q_plus, self.q_minus
            )));
        }
        if self.interval == 0 {
            return Err(Error::Domain("interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(sample index, bit)` for each examined sample outside the guard band.
pub fn level_crossing_indexed(trace: &ChannelTrace, cfg: &QuantizerConfig) -> Result<Vec<(usize, u8)>> {
    cfg.validate()?;
    Ok(trace
        .samples
        .iter()
        .enumerate()
        .step_by(cfg.interval)
        .filter_map(|(i, &x)| {
            if x > cfg.q_plus {
                Some((i, 1))
            } else if x < cfg.q_minus {
                Some((i, 0))
            } else {
                None
            }
        })
        .collect())
}

/// 1 above `q_plus`, 0 below `q_minus`, nothing in between.
pub fn level_crossing_quantize(trace: &ChannelTrace, cfg: &QuantizerConfig) -> Result<BitSequence> {
    Ok(BitSequence::from_bools(
        level_crossing_indexed(trace, cfg)?.into_iter().map(|(_, b)| b == 1),
    ))
}

/// Thresholds splitting the samples into `m` equally populated bins.
pub fn quantile_thresholds(samples: &[f64], m: usize) -> Result<Vec<f64>> {
    if samples.len() < m {
        return Err(Error::Quantile(format!(
            "{} samples cannot fill {m} bins",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (1..m)
        .map(|k| {
            let i = k * n / m;
            let (lo, hi) = (sorted[i - 1], sorted[i]);
            if lo < hi {
                Ok(lo + 0.5 * (hi - lo))
            } else {
                Err(Error::Quantile(format!("tied samples at quantile {k}/{m}")))
            }
        })
        .collect()
}

/// Equiprobable `m`-level quantization with Gray-coded labels, MSB first.
pub fn mary_quantize(trace: &ChannelTrace, m: usize) -> Result<BitSequence> {
    if !matches!(m, 2 | 4 | 8) {
        return Err(Error::Domain(format!("levels {m} not in {{2, 4, 8}}")));
    }
    let thresholds = quantile_thresholds(&trace.samples, m)?;
    let b = m.trailing_zeros() as usize;
    let mut bits = Vec::with_capacity(trace.samples.len() * b);
    for &x in &trace.samples {
        let bin = thresholds.partition_point(|&t| t < x);
        let gray = bin ^ (bin >> 1);
        for i in (0..b).rev() {
            bits.push(((gray >> i) & 1) as u8);
        }
    }
    BitSequence::from_bits(bits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconciliation {
    /// Alice's retained bits.
    pub retained: BitSequence,
    pub bob_retained: BitSequence,
    pub r_mismatch: f64,
    pub discarded: usize,
    /// Mismatch fraction left in the retained bits.
    pub residual_mismatch: f64,
}

/// Parity-discard reconciliation: blocks whose parities differ are dropped.
pub fn reconcile(a: &BitSequence, b: &BitSequence, block: usize) -> Result<Reconciliation> {
    let errors = a.hamming(b)?;
    if block == 0 {
        return Err(Error::Input("reconciliation block must be at least 1".into()));
    }
    let mut ka = Vec::with_capacity(a.len());
    let mut kb = Vec::with_capacity(b.len());
    for (ba, bb) in a.as_slice().chunks(block).zip(b.as_slice().chunks(block)) {
        let pa = ba.iter().fold(0, |p, &x| p ^ x);
        let pb = bb.iter().fold(0, |p, &x| p ^ x);
        if pa == pb {
            ka.extend_from_slice(ba);
            kb.extend_from_slice(bb);
        }
    }
    let n = a.len();
    let retained = BitSequence::from_bits(ka)?;
    let bob_retained = BitSequence::from_bits(kb)?;
    let residual = retained.hamming(&bob_retained)?;
    Ok(Reconciliation {
        r_mismatch: if n == 0 { 0.0 } else { errors as f64 / n as f64 },
        discarded: n - retained.len(),
        residual_mismatch: if retained.is_empty() {
            0.0
        } else {
            residual as f64 / retained.len() as f64
        },
        retained,
        bob_retained,
    })
}

/// Toeplitz hashing to `ceil(r L)` bits; `r = 1` is the identity.
pub fn privacy_amplify(x: &BitSequence, r: f64, seed: u64) -> Result<BitSequence> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("rate {r} outside (0, 1]")));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if r == 1.0 {
        return Ok(x.clone());
    }
    let l = x.len();
    let m = guideline::key_length(r, l);
    let mut rng = seed::rng(seed);
    // T[i][j] = diag[i + (l - 1) - j].
    let diag: Vec<u8> = (0..m + l - 1).map(|_| u8::from(rng.random::<bool>())).collect();
    let xs = x.as_slice();
    let out = (0..m)
        .map(|i| {
            let row = &diag[i..i + l];
            row.iter().rev().zip(xs).fold(0u8, |acc, (&t, &b)| acc ^ (t & b)) == 1
        })
        .collect::<Vec<bool>>();
    Ok(BitSequence::from_bools(out))
}

/// Where the randomness test is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Position {
    /// Quantizer output, before reconciliation.
    #[default]
    #[serde(rename = "1")]
    Quantized,
    /// Final key, after privacy amplification.
    #[serde(rename = "2")]
    Key,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineTest {
    #[serde(flatten)]
    pub choice: TestChoice,
    pub alpha: f64,
    #[serde(default)]
    pub position: Position,
    #[serde(default)]
    pub check_min_length: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GuidelineMode {
    /// Use `test.alpha` and the given rate.
    Fixed { r: f64 },
    /// Estimate `rho` from pilot trials, then solve for `(alpha, r)`.
    Optimize {
        pilot_trials: u64,
        #[serde(default = "default_alpha_grid")]
        alpha_grid: Grid,
        #[serde(default = "default_r_grid")]
        r_grid: Grid,
    },
}

fn default_alpha_grid() -> Grid {
    Grid::ALPHA
}

fn default_r_grid() -> Grid {
    Grid::RATE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullScale {
    pub sequence_length: usize,
    #[serde(with = "big_decimal")]
    pub searches: BigUint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    /// Bits per trial (`L`); Eve is measured when `L` is at attack scale.
    pub sequence_length: usize,
    #[serde(with = "big_decimal")]
    pub searches: BigUint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_scale: Option<FullScale>,
    #[serde(default)]
    pub budget_rule: BudgetRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub channel: ChannelParams,
    pub quantizer: QuantizerConfig,
    pub test: PipelineTest,
    pub guideline: GuidelineMode,
    pub adversary: AdversaryConfig,
    pub trials: u64,
    #[serde(default = "default_block")]
    pub reconcile_block: usize,
}

fn default_block() -> usize {
    4
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.quantizer.validate()?;
        if self.adversary.sequence_length == 0 {
            return Err(Error::Domain("adversary.sequence_length must be positive".into()));
        }
        if self.reconcile_block == 0 {
            return Err(Error::Domain("reconcile_block must be positive".into()));
        }
        if let GuidelineMode::Fixed { r } = self.guideline {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Domain(format!("rate {r} outside (0, 1]")));
            }
        }
        self.test.choice.spec(Probability::new(self.test.alpha)?)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub accepted: bool,
    pub mismatch: f64,
    pub eve_hit: bool,
    pub key_bits: usize,
    /// Simulated time spent collecting the trial's bits.
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub r_mismatch: f64,
    pub residual_mismatch: f64,
    pub p_accept_empirical: Probability,
    pub efficiency: f64,
    pub l_efficiency: f64,
    /// `log2(p_eve / p_rg)` measured at attack scale; `None` without hits.
    pub l_security: Option<f64>,
    pub p_eve_empirical: Option<Probability>,
    pub eve_hits: u64,
    pub p_rg: Probability,
    pub key_rate: f64,
    pub rho_hat: Option<f64>,
    pub alpha: f64,
    pub r: f64,
    pub key_length: usize,
    pub short_trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guideline: Option<GuidelineSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_rho_hat: Option<f64>,
    /// Closed-form chain at the measured `rho_hat` and attack scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<SecurityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_full_scale: Option<SecurityReport>,
    pub trials: u64,
    pub seed: u64,
    pub rng: String,
    pub config: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub rows: Vec<TrialRecord>,
}

struct Extracted {
    alice: BitSequence,
    bob: BitSequence,
    elapsed: f64,
}

/// Alice's and Bob's first `L` bits, or `None` if the trace is too short.
fn extract(cfg: &PipelineConfig, trial_seed: u64) -> Result<Option<Extracted>> {
    let l = cfg.adversary.sequence_length;
    let (ta, tb) = simulate_channel(&cfg.channel, cfg.channel.duration, seed::derive(trial_seed, 0))?;
    let dt = cfg.channel.sample_interval;
    if cfg.quantizer.levels == 2 {
        let ia = level_crossing_indexed(&ta, &cfg.quantizer)?;
        let ib = level_crossing_indexed(&tb, &cfg.quantizer)?;
        // Keep samples both sides quantized; indices are sorted.
        let mut a = Vec::with_capacity(l);
        let mut b = Vec::with_capacity(l);
        let mut last = 0;
        let (mut i, mut j) = (0, 0);
        while i < ia.len() && j < ib.len() && a.len() < l {
            match ia[i].0.cmp(&ib[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    a.push(ia[i].1);
                    b.push(ib[j].1);
                    last = ia[i].0;
                    i += 1;
                    j += 1;
                }
            }
        }
        if a.len() < l {
            return Ok(None);
        }
        Ok(Some(Extracted {
            alice: BitSequence::from_bits(a)?,
            bob: BitSequence::from_bits(b)?,
            elapsed: (last + 1) as f64 * dt,
        }))
    } else {
        let pick = |t: &ChannelTrace| ChannelTrace {
            samples: t.samples.iter().step_by(cfg.quantizer.interval).copied().collect(),
            ..t.clone()
        };
        let a = mary_quantize(&pick(&ta), cfg.quantizer.levels)?;
        let b = mary_quantize(&pick(&tb), cfg.quantizer.levels)?;
        if a.len() < l {
            return Ok(None);
        }
        let bits_per = cfg.quantizer.levels.trailing_zeros() as usize;
        let symbols = l.div_ceil(bits_per);
        Ok(Some(Extracted {
            alice: a.truncated(l),
            bob: b.truncated(l),
            elapsed: (symbols * cfg.quantizer.interval) as f64 * dt,
        }))
    }
}

/// Pooled lag-1 correlation of Alice's bits over `trials` pilot trials.
pub fn pilot_rho(cfg: &PipelineConfig, trials: u64, seed: u64) -> Result<f64> {
    let pilot_seed = seed::derive(seed, u64::MAX);
    let mut acc = Lag1Accumulator::default();
    for t in 0..trials {
        if let Some(e) = extract(cfg, seed::derive(pilot_seed, t))? {
            acc.add(&e.alice);
        }
    }
    acc.correlation()
}

/// Runs `trials` independent trials from `seed`.
pub fn run_pipeline(cfg: &PipelineConfig, trials: u64, seed: u64) -> Result<PipelineOutput> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let l = cfg.adversary.sequence_length;
    let n = &cfg.adversary.searches;

    let (alpha, r, solution, pilot_rho_hat) = match &cfg.guideline {
        GuidelineMode::Fixed { r } => (cfg.test.alpha, *r, None, None),
        GuidelineMode::Optimize {
            pilot_trials,
            alpha_grid,
            r_grid,
        } => {
            let rho = pilot_rho(cfg, (*pilot_trials).max(1), seed)?.abs().min(0.999_999);
            let mut problem = GuidelineProblem::new(l, n.clone(), rho, cfg.test.choice.kind);
            problem.test = cfg.test.choice.clone();
            problem.alpha_grid = *alpha_grid;
            problem.r_grid = *r_grid;
            problem.budget_rule = cfg.adversary.budget_rule;
            let s = guideline::optimize(&problem)?;
            (s.alpha_star.value(), s.r_star, Some(s), Some(rho))
        }
    };
    let mut spec = cfg.test.choice.spec(Probability::new(alpha)?)?;
    spec.check_min_length = cfg.test.check_min_length;
    let key_length = guideline::key_length(r, l);
    let measure_eve = l <= MAX_ATTACK_LENGTH;

    let mut rows = Vec::with_capacity(trials as usize);
    let mut acc = Lag1Accumulator::default();
    let (mut accepted_count, mut hits, mut short) = (0u64, 0u64, 0u64);
    let (mut mismatch_sum, mut residual_sum, mut key_bits_total, mut time_total) = (0.0, 0.0, 0usize, 0.0);
    for t in 0..trials {
        let trial_seed = seed::derive(seed, t);
        let Some(ex) = extract(cfg, trial_seed)? else {
            short += 1;
            time_total += cfg.channel.duration as f64 * cfg.channel.sample_interval;
            rows.push(TrialRecord {
                trial: t,
                accepted: false,
                mismatch: f64::NAN,
                eve_hit: false,
                key_bits: 0,
                elapsed: cfg.channel.duration as f64 * cfg.channel.sample_interval,
            });
            continue;
        };
        acc.add(&ex.alice);
        let rec = reconcile(&ex.alice, &ex.bob, cfg.reconcile_block)?;
        let key = if rec.retained.is_empty() {
            BitSequence::new()
        } else {
            privacy_amplify(&rec.retained, r, seed::derive(trial_seed, 1))?
        };
        let tested = match cfg.test.position {
            Position::Quantized => &ex.alice,
            Position::Key => &key,
        };
        let accepted = !tested.is_empty()
            && match run_test(&spec, tested) {
                Ok(o) => o.verdict.accepted(),
                Err(Error::InsufficientData { .. }) => false,
                Err(e) => return Err(e),
            };
        let eve_hit = accepted && measure_eve && mlts::mlts_hit(&ex.alice, n)?;
        accepted_count += u64::from(accepted);
        hits += u64::from(eve_hit);
        mismatch_sum += rec.r_mismatch;
        residual_sum += rec.residual_mismatch;
        time_total += ex.elapsed;
        let key_bits = if accepted { key.len() } else { 0 };
        key_bits_total += key_bits;
        rows.push(TrialRecord {
            trial: t,
            accepted,
            mismatch: rec.r_mismatch,
            eve_hit,
            key_bits,
            elapsed: ex.elapsed,
        });
    }

    let full = (trials - short).max(1) as f64;
    let p_accept = Probability::clamped(accepted_count as f64 / trials as f64);
    let efficiency = guideline::efficiency(p_accept, r)?;
    let p_rg = mlts::rg_success_prob(n, key_length);
    let p_eve = measure_eve.then(|| Probability::clamped(hits as f64 / trials as f64));
    let l_security = p_eve
        .filter(|p| p.value() > 0.0)
        .map(|p| p.value().log2() - p_rg.value().log2());
    let rho_hat = acc.correlation().ok();

    let closed_form = match rho_hat {
        Some(rho) if rho.abs() < 1.0 => {
            let budget = mlts::budget_from_searches(n, l)?;
            let model = AcceptModel::new(&spec, rho.abs(), l)?;
            Some(SecurityReport::evaluate(
                &budget,
                key_length,
                rho.abs(),
                model.accept_probability(spec.alpha)?,
                cfg.adversary.budget_rule,
            )?)
        }
        _ => None,
    };
    let closed_form_full_scale = match (&cfg.adversary.full_scale, rho_hat) {
        (Some(fs), Some(rho)) if rho.abs() < 1.0 => {
            let budget = mlts::budget_from_searches(&fs.searches, fs.sequence_length)?;
            let mut full_spec = spec.clone();
            full_spec.check_min_length = true;
            let model = AcceptModel::new(&full_spec, rho.abs(), fs.sequence_length)?;
            Some(SecurityReport::evaluate(
                &budget,
                guideline::key_length(r, fs.sequence_length),
                rho.abs(),
                model.accept_probability(spec.alpha)?,
                cfg.adversary.budget_rule,
            )?)
        }
        _ => None,
    };

    let report = PipelineReport {
        r_mismatch: mismatch_sum / full,
        residual_mismatch: residual_sum / full,
        p_accept_empirical: p_accept,
        efficiency,
        l_efficiency: 1.0 - efficiency,
        l_security,
        p_eve_empirical: p_eve,
        eve_hits: hits,
        p_rg,
        key_rate: if time_total > 0.0 {
            key_bits_total as f64 / time_total
        } else {
            0.0
        },
        rho_hat,
        alpha,
        r,
        key_length,
        short_trials: short,
        guideline: solution,
        pilot_rho_hat,
        closed_form,
        closed_form_full_scale,
        trials,
        seed,
        rng: RNG_ALGORITHM.to_string(),
        config: cfg.clone(),
    };
    Ok(PipelineOutput { report, rows })
}

/// Per-trial rows as CSV: `trial, accepted, mismatch, eve_hit, key_bits, elapsed`.
pub fn write_trials_csv<W: Write>(w: W, rows: &[TrialRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

impl PipelineConfig {
    /// White-channel example used by documentation and tests.
    pub fn example(ar_coefficient: f64) -> Self {
        PipelineConfig {
            channel: ChannelParams {
                ar_coefficient,
                noise_sd: 0.1,
                sample_interval: 1.0,
                duration: 64,
            },
            quantizer: QuantizerConfig {
                q_plus: 0.0,
                q_minus: 0.0,
                levels: 2,
                interval: 1,
            },
            test: PipelineTest {
                choice: TestChoice::new(crate::randtests::TestKind::Frequency),
                alpha: 0.01,
                position: Position::Quantized,
                check_min_length: false,
            },
            guideline: GuidelineMode::Fixed { r: 1.0 },
            adversary: AdversaryConfig {
                sequence_length: 16,
                searches: BigUint::from(64u32),
                full_scale: None,
                budget_rule: BudgetRule::default(),
            },
            trials: 1000,
            reconcile_block: 4,
        }
    }
}
