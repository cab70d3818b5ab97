use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_test, TestSpec};
use crate::error::Result;
use crate::{seed, MarkovBitModel, Probability};

const Z95: f64 = 1.959_963_984_540_054;

/// Empirical accept rate with a 95% Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub accepted: u64,
    pub trials: u64,
    pub rate: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    pub fn from_counts(accepted: u64, trials: u64, seed: u64) -> Self {
        let n = trials.max(1) as f64;
        let p = accepted as f64 / n;
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
        MonteCarloEstimate {
            accepted,
            trials,
            rate: p,
            std_err: (p * (1.0 - p) / n).sqrt(),
            ci_low: (centre - half).max(0.0),
            ci_high: (centre + half).min(1.0),
            seed,
        }
    }

    /// Whether `value` lies within `k` binomial standard deviations,
    /// the deviation taken at `value` itself.
    pub fn within_sigma(&self, value: f64, k: f64) -> bool {
        let sd = (value * (1.0 - value) / self.trials as f64).sqrt();
        (self.rate - value).abs() <= k * sd
    }

    pub fn upper(&self) -> Probability {
        Probability::clamped(self.ci_high)
    }
}

/// Accept rate of `spec` over `trials` Markov sequences of `length` bits.
///
/// Trial `i` uses the seed derived from `(seed, i)`, so the estimate does not
/// depend on thread scheduling.
pub fn empirical_accept_rate(
    spec: &TestSpec,
    rho: f64,
    length: usize,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    spec.validate()?;
    let model = MarkovBitModel::new(rho)?;
    let accepted = (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = model.generate(length, seed::derive(seed, i));
            run_test(spec, &x).map(|o| u64::from(o.verdict.accepted()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MonteCarloEstimate::from_counts(accepted, trials, seed))
}

/// P-values of `spec` over `trials` Markov sequences, in trial order.
pub fn empirical_p_values(spec: &TestSpec, rho: f64, length: usize, trials: u64, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let model = MarkovBitModel::new(rho)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = model.generate(length, seed::derive(seed, i));
            run_test(spec, &x).map(|o| o.p_value.value())
        })
        .collect()
}
