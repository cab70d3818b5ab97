//! Choice of P-value threshold `alpha` and privacy-amplification rate `r`.
//!
//! ```text
//! maximize   E = P(accept | alpha) * r
//! subject to I_MLTS * P(accept | alpha) <= P(RG) = min(N * 2^-ceil(r L), 1)
//! ```
//!
//! solved by exhaustive evaluation of an `(alpha, r)` grid.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlts::{self, big_decimal, AdversaryBudget, BudgetRule};
use crate::randtests::{empirical_p_values, AcceptModel, MonteCarloEstimate, TestKind, TestSpec};
use crate::{BitSequence, Probability};

/// Inclusive-start grid `lo, lo + step, ...` up to `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub const ALPHA: Grid = Grid {
        lo: 0.0001,
        hi: 0.3,
        step: 0.001,
    };
    pub const RATE: Grid = Grid {
        lo: 0.1,
        hi: 1.0,
        step: 0.01,
    };

    /// Grid points, rounded to 12 decimals so accumulated steps land on
    /// their nominal values.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.lo <= self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Domain(format!(
                "grid [{}, {}] step {} is empty or malformed",
                self.lo, self.hi, self.step
            )));
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| round12(self.lo + i as f64 * self.step)).collect())
    }
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

fn default_alpha_grid() -> Grid {
    Grid::ALPHA
}

fn default_r_grid() -> Grid {
    Grid::RATE
}

/// Test kind and parameters; `alpha` is supplied by the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestChoice {
    pub kind: TestKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<BitSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_order: Option<usize>,
}

impl TestChoice {
    pub fn new(kind: TestKind) -> Self {
        TestChoice {
            kind,
            block_size: None,
            template: None,
            pattern_order: None,
        }
    }

    /// Full spec at `alpha`, with NIST defaults for missing parameters.
    pub fn spec(&self, alpha: Probability) -> Result<TestSpec> {
        let mut s = TestSpec::new(self.kind, 0.5)?;
        s.alpha = alpha;
        if self.block_size.is_some() {
            s.block_size = self.block_size;
        }
        if self.template.is_some() {
            s.template = self.template.clone();
        }
        if self.pattern_order.is_some() {
            s.pattern_order = self.pattern_order;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Where `P(accept)` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum AcceptSource {
    #[default]
    Analytic,
    /// Monte-Carlo estimate; the constraint uses the Wilson upper bound.
    MonteCarlo { trials: u64, seed: u64 },
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidelineProblem {
    pub sequence_length: usize,
    #[serde(with = "big_decimal")]
    pub adversary_searches: BigUint,
    pub rho: f64,
    pub test: TestChoice,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Grid,
    #[serde(default = "default_r_grid")]
    pub r_grid: Grid,
    #[serde(default, skip_serializing_if = "is_default")]
    pub budget_rule: BudgetRule,
    #[serde(default, skip_serializing_if = "is_default")]
    pub accept_source: AcceptSource,
}

impl GuidelineProblem {
    pub fn new(sequence_length: usize, adversary_searches: BigUint, rho: f64, kind: TestKind) -> Self {
        GuidelineProblem {
            sequence_length,
            adversary_searches,
            rho,
            test: TestChoice::new(kind),
            alpha_grid: Grid::ALPHA,
            r_grid: Grid::RATE,
            budget_rule: BudgetRule::default(),
            accept_source: AcceptSource::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidelineSolution {
    pub alpha_star: Probability,
    pub r_star: f64,
    pub key_length: usize,
    pub efficiency: f64,
    pub p_accept: Probability,
    pub i_mlts: Probability,
    /// `P(RG) - I_MLTS * P(accept)`.
    pub constraint_slack: f64,
    pub feasible: bool,
    pub p_rg: Probability,
}

/// Evaluation of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEvaluation {
    pub alpha: f64,
    pub r: f64,
    pub key_length: usize,
    pub p_accept: Probability,
    /// Accept probability used in the constraint (differs under Monte Carlo).
    pub p_accept_constraint: Probability,
    pub i_mlts: Probability,
    pub p_rg: Probability,
    pub efficiency: f64,
    pub slack: f64,
    /// `ln(I_MLTS P(accept)) - ln P(RG)`; feasible iff `<= 0`.
    pub log_violation: f64,
    pub feasible: bool,
}

/// `E = P(accept) * r`.
pub fn efficiency(p_accept: Probability, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("rate {r} outside (0, 1]")));
    }
    Ok(p_accept.value() * r)
}

enum AcceptEval {
    Analytic(AcceptModel),
    Empirical { sorted: Vec<f64>, seed: u64 },
}

/// Quantities shared by every cell of one problem.
pub struct ProblemContext {
    problem: GuidelineProblem,
    budget: AdversaryBudget,
    ln_i_mlts: f64,
    accept: AcceptEval,
}

impl ProblemContext {
    pub fn new(problem: &GuidelineProblem) -> Result<Self> {
        let l = problem.sequence_length;
        let rho = problem.rho.abs();
        let budget = mlts::budget_from_searches(&problem.adversary_searches, l)?;
        let ln_i_mlts = mlts::ln_mlts_success_prob_for_budget(&budget, rho, problem.budget_rule)?.min(0.0);
        let probe = problem.test.spec(Probability::new(0.5)?)?;
        let accept = match problem.accept_source {
            AcceptSource::Analytic => AcceptEval::Analytic(AcceptModel::new(&probe, rho, l)?),
            AcceptSource::MonteCarlo { trials, seed } => {
                if trials == 0 {
                    return Err(Error::Domain("Monte-Carlo source needs trials >= 1".into()));
                }
                let mut sorted = empirical_p_values(&probe, rho, l, trials, seed)?;
                sorted.sort_by(f64::total_cmp);
                AcceptEval::Empirical { sorted, seed }
            }
        };
        Ok(ProblemContext {
            problem: problem.clone(),
            budget,
            ln_i_mlts,
            accept,
        })
    }

    pub fn budget(&self) -> &AdversaryBudget {
        &self.budget
    }

    /// `(point estimate, value used in the constraint)`.
    fn accept_at(&self, alpha: Probability) -> Result<(Probability, Probability)> {
        match &self.accept {
            AcceptEval::Analytic(model) => {
                let p = model.accept_probability(alpha)?;
                Ok((p, p))
            }
            AcceptEval::Empirical { sorted, seed } => {
                let rejected = sorted.partition_point(|&p| p <= alpha.value());
                let est = MonteCarloEstimate::from_counts((sorted.len() - rejected) as u64, sorted.len() as u64, *seed);
                Ok((Probability::clamped(est.rate), est.upper()))
            }
        }
    }

    pub fn evaluate(&self, alpha: f64, r: f64) -> Result<CellEvaluation> {
        let alpha_p = Probability::new(alpha)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("rate {r} outside (0, 1]")));
        }
        let l = self.problem.sequence_length;
        let key_length = key_length(r, l);
        let (p_accept, p_constraint) = self.accept_at(alpha_p)?;
        let ln_rg = mlts::ln_rg_success_prob(&self.problem.adversary_searches, key_length);
        let ln_lhs = self.ln_i_mlts + p_constraint.value().ln();
        let log_violation = if ln_lhs == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            ln_lhs - ln_rg
        };
        let p_rg = mlts::rg_success_prob(&self.problem.adversary_searches, key_length);
        let slack = p_rg.value() * -(log_violation.exp_m1());
        Ok(CellEvaluation {
            alpha,
            r,
            key_length,
            p_accept,
            p_accept_constraint: p_constraint,
            i_mlts: Probability::clamped(self.ln_i_mlts.exp()),
            p_rg,
            efficiency: efficiency(p_accept, r)?,
            slack,
            log_violation,
            feasible: log_violation <= 0.0,
        })
    }
}

/// `M = ceil(r L)`, at least one bit.
pub fn key_length(r: f64, length: usize) -> usize {
    ((r * length as f64 - 1e-9).ceil() as usize).clamp(1, length)
}

/// Constraint check for one `(alpha, r)` pair.
pub fn feasible(alpha: Probability, r: f64, problem: &GuidelineProblem) -> Result<CellEvaluation> {
    ProblemContext::new(problem)?.evaluate(alpha.value(), r)
}

/// Every cell, alpha-major.
pub fn scan(problem: &GuidelineProblem) -> Result<Vec<CellEvaluation>> {
    let ctx = ProblemContext::new(problem)?;
    let alphas = problem.alpha_grid.points()?;
    let rates = problem.r_grid.points()?;
    alphas
        .par_iter()
        .flat_map_iter(|&a| rates.iter().map(move |&r| (a, r)))
        .map(|(a, r)| ctx.evaluate(a, r))
        .collect()
}

/// Strict preference between two cells: feasible first, then larger `E`
/// (or smaller violation when both are infeasible), smaller `alpha`, larger `r`.
pub fn better(a: &CellEvaluation, b: &CellEvaluation) -> bool {
    use std::cmp::Ordering::*;
    if a.feasible != b.feasible {
        return a.feasible;
    }
    let primary = if a.feasible {
        a.efficiency.total_cmp(&b.efficiency)
    } else {
        b.log_violation.total_cmp(&a.log_violation)
    };
    match primary {
        Greater => true,
        Less => false,
        Equal => match b.alpha.total_cmp(&a.alpha) {
            Greater => true,
            Less => false,
            Equal => a.r > b.r,
        },
    }
}

/// Pick the preferred cell; independent of input order.
pub fn select(cells: &[CellEvaluation]) -> Option<&CellEvaluation> {
    cells.iter().fold(None, |best, c| match best {
        Some(b) if !better(c, b) => Some(b),
        _ => Some(c),
    })
}

impl From<&CellEvaluation> for GuidelineSolution {
    fn from(c: &CellEvaluation) -> Self {
        GuidelineSolution {
            alpha_star: Probability::clamped(c.alpha),
            r_star: c.r,
            key_length: c.key_length,
            efficiency: c.efficiency,
            p_accept: c.p_accept,
            i_mlts: c.i_mlts,
            constraint_slack: c.slack,
            feasible: c.feasible,
            p_rg: c.p_rg,
        }
    }
}

/// Best feasible `(alpha, r)`; if none is feasible, the least-violating pair.
pub fn optimize(problem: &GuidelineProblem) -> Result<GuidelineSolution> {
    let cells = scan(problem)?;
    let best = select(&cells).ok_or_else(|| Error::Domain("empty grid".into()))?;
    Ok(best.into())
}

/// Cells violating frontier monotonicity: `(alpha, r)` feasible while a
/// larger `alpha` at the same `r` is not.
pub fn frontier_violations(cells: &[CellEvaluation]) -> Vec<(f64, f64)> {
    let mut by_r: std::collections::BTreeMap<u64, Vec<&CellEvaluation>> = Default::default();
    for c in cells {
        by_r.entry(c.r.to_bits()).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, mut col) in by_r {
        col.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        let mut seen_feasible = false;
        for c in col {
            if seen_feasible && !c.feasible {
                out.push((c.alpha, c.r));
            }
            seen_feasible |= c.feasible;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_traits::One;

    fn coarse(mut p: GuidelineProblem) -> GuidelineProblem {
        p.alpha_grid = Grid {
            lo: 0.0001,
            hi: 0.3,
            step: 0.01,
        };
        p.r_grid = Grid {
            lo: 0.1,
            hi: 1.0,
            step: 0.05,
        };
        p
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(Grid::ALPHA.points().unwrap().len(), 300);
        assert_eq!(Grid::RATE.points().unwrap().len(), 91);
        let r = Grid::RATE.points().unwrap();
        assert_eq!(*r.last().unwrap(), 1.0);
        assert_eq!(r[0], 0.1);
        assert!(Grid {
            lo: 0.0,
            hi: 1.0,
            step: 0.0
        }
        .points()
        .is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert_relative_eq!(efficiency(Probability::new(0.9).unwrap(), 0.5).unwrap(), 0.45);
        assert_eq!(efficiency(Probability::one(), 1.0).unwrap(), 1.0);
        assert!(efficiency(Probability::one(), 0.0).is_err());
    }

    #[test]
    fn key_length_uses_ceiling() {
        assert_eq!(key_length(0.32, 100), 32);
        assert_eq!(key_length(0.321, 100), 33);
        assert_eq!(key_length(1.0, 128), 128);
        assert_eq!(key_length(0.01, 8), 1);
    }

    #[test]
    fn rg_equivalence_is_feasible_everywhere() {
        let prob = GuidelineProblem::new(128, BigUint::from(16u32), 0.0, TestKind::Frequency);
        let ctx = ProblemContext::new(&prob).unwrap();
        for a in Grid::ALPHA.points().unwrap() {
            let c = ctx.evaluate(a, 1.0).unwrap();
            assert!(c.feasible && c.slack >= 0.0, "alpha {a}");
            assert_relative_eq!(c.i_mlts.value(), c.p_rg.value(), max_relative = 1e-12);
        }
    }

    #[test]
    fn saturated_constraint() {
        let prob = GuidelineProblem::new(8, BigUint::from(512u32), 0.5, TestKind::Frequency);
        let cells = scan(&prob).unwrap();
        assert!(cells.iter().all(|c| c.feasible));
        let s = optimize(&prob).unwrap();
        assert_eq!(s.alpha_star.value(), 0.0001);
        assert_eq!(s.r_star, 1.0);
    }

    #[test]
    fn independent_correlation_prefers_loosest_test() {
        let prob = coarse(GuidelineProblem::new(
            512,
            BigUint::from(1u32 << 20),
            0.0,
            TestKind::Frequency,
        ));
        let s = optimize(&prob).unwrap();
        assert!(s.feasible);
        assert_eq!(s.alpha_star.value(), 0.0001);
        assert_eq!(s.r_star, 1.0);
        assert_relative_eq!(s.efficiency, 0.9999, epsilon = 1e-9);
    }

    #[test]
    fn solution_invariants() {
        let prob = coarse(GuidelineProblem::new(
            256,
            BigUint::one() << 96,
            0.5,
            TestKind::Frequency,
        ));
        let cells = scan(&prob).unwrap();
        let s = optimize(&prob).unwrap();
        assert_relative_eq!(s.efficiency, s.p_accept.value() * s.r_star, epsilon = 1e-12);
        if s.feasible {
            assert!(s.constraint_slack >= 0.0);
        }
        assert!(frontier_violations(&cells).is_empty());
    }

    #[test]
    fn selection_ignores_order() {
        let prob = coarse(GuidelineProblem::new(64, BigUint::from(5000u32), 0.3, TestKind::Runs));
        let mut cells = scan(&prob).unwrap();
        let a = select(&cells).unwrap().clone();
        cells.reverse();
        assert_eq!(select(&cells).unwrap(), &a);
    }

    #[test]
    fn infeasible_problem_reports_least_violation() {
        let prob = coarse(GuidelineProblem::new(
            128,
            BigUint::one() << 100,
            0.95,
            TestKind::Frequency,
        ));
        let s = optimize(&prob).unwrap();
        let cells = scan(&prob).unwrap();
        if !s.feasible {
            let min = cells.iter().map(|c| c.log_violation).fold(f64::INFINITY, f64::min);
            let best = cells
                .iter()
                .find(|c| c.alpha == s.alpha_star.value() && c.r == s.r_star)
                .unwrap();
            assert_eq!(best.log_violation, min);
            assert!(s.constraint_slack < 0.0);
        }
    }

    #[test]
    fn problem_json_round_trip() {
        let prob = GuidelineProblem::new(256, BigUint::one() << 96, 0.5, TestKind::Frequency);
        let j = serde_json::to_string(&prob).unwrap();
        assert!(j.contains("\"adversary_searches\":\"79228162514264337593543950336\""));
        let back: GuidelineProblem = serde_json::from_str(&j).unwrap();
        assert_eq!(back, prob);
        let short: GuidelineProblem = serde_json::from_str(
            r#"{"sequence_length":64,"adversary_searches":"2^20","rho":0.1,"test":{"kind":"runs"}}"#,
        )
        .unwrap();
        assert_eq!(short.alpha_grid, Grid::ALPHA);
    }

    #[test]
    fn monte_carlo_source_is_conservative() {
        let mut prob = coarse(GuidelineProblem::new(
            128,
            BigUint::from(1u32 << 12),
            0.2,
            TestKind::Frequency,
        ));
        prob.accept_source = AcceptSource::MonteCarlo { trials: 2000, seed: 4 };
        let cells = scan(&prob).unwrap();
        assert!(cells
            .iter()
            .all(|c| c.p_accept_constraint.value() >= c.p_accept.value()));
    }
}
