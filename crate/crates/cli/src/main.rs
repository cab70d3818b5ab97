use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use chanrand::bitmodel::{io as bitio, transition_matrix};
use chanrand::guideline::{self, AcceptSource, GuidelineProblem};
use chanrand::mlts::{self, big_decimal, AdversaryBudget, BudgetRule, SecurityReport};
use chanrand::pipeline::{self, PipelineConfig, Position};
use chanrand::randtests::{self, AcceptModel};
use chanrand::{seed, BitSequence, MarkovBitModel, Probability, TestKind, TestSpec};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

#[derive(Parser)]
#[command(
    name = "chanrand",
    version,
    about = "Randomness testing and key-search analysis for channel-derived bits"
)]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate bit sequences from a Markov model or a simulated channel.
    Gen(GenArgs),
    /// Run one or all randomness tests on a sequence file.
    Test(TestArgs),
    /// MLTS success probability, security report or candidate list.
    Attack(AttackArgs),
    /// Solve for the P-value threshold and privacy-amplification rate.
    Optimize(OptimizeArgs),
    /// Run the synthetic key-generation pipeline.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Bits per sequence.
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long = "m-levels", default_value_t = 2)]
    m_levels: usize,
    /// Number of sequences.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Pipeline config; emits Alice's quantized channel bits instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Packed binary output (single sequence).
    #[arg(long)]
    packed: bool,
}

#[derive(Args)]
struct TestArgs {
    /// Test name, or `all`.
    #[arg(long, default_value = "all")]
    kind: String,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "block-size")]
    block_size: Option<usize>,
    #[arg(long)]
    template: Option<String>,
    #[arg(long = "pattern-order")]
    pattern_order: Option<usize>,
    /// Skip the recommended minimum-length check.
    #[arg(long = "no-min-length")]
    no_min_length: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Interpolate,
    NextDepth,
    Floor,
}

impl From<RuleArg> for BudgetRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Interpolate => BudgetRule::Interpolate,
            RuleArg::NextDepth => BudgetRule::NextDepth,
            RuleArg::Floor => BudgetRule::Floor,
        }
    }
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "L")]
    length: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rho: f64,
    /// Search depth `n`.
    #[arg(long, conflicts_with = "searches")]
    n: Option<usize>,
    /// Search budget `N`, decimal or `2^k`.
    #[arg(long = "N", value_parser = parse_big)]
    searches: Option<BigUint>,
    /// Key length; switches the output to a full security report.
    #[arg(long = "M")]
    key_length: Option<usize>,
    /// Test whose accept probability enters the report (default: always accept).
    #[arg(long, requires = "key_length")]
    kind: Option<TestKind>,
    #[arg(long, default_value_t = 0.01, requires = "kind")]
    alpha: f64,
    #[arg(long = "m-levels", default_value_t = 2)]
    m_levels: u32,
    #[arg(long = "budget-rule", value_enum, default_value_t = RuleArg::Interpolate)]
    budget_rule: RuleArg,
    /// List the first `N` candidates instead of a probability.
    #[arg(long)]
    enumerate: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Guideline problem JSON.
    #[arg(long, conflicts_with_all = ["length", "searches", "rho", "kind"])]
    config: Option<PathBuf>,
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long = "N", value_parser = parse_big)]
    searches: Option<BigUint>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long)]
    kind: Option<TestKind>,
    /// Monte-Carlo accept source with this many trials.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PositionArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    position: Option<PositionArg>,
    /// `json` writes the report, `csv` the per-trial rows.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_big(s: &str) -> std::result::Result<BigUint, String> {
    big_decimal::parse(s)
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn pick_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(chanrand::Error::from)?)
}

fn gen(a: GenArgs) -> Result<()> {
    let s = pick_seed(a.seed);
    let records: Vec<BitSequence> = if let Some(path) = &a.config {
        let cfg: PipelineConfig = read_json(path)?;
        cfg.validate()?;
        (0..a.trials)
            .map(|i| -> Result<BitSequence> {
                let (trace, _) = pipeline::simulate_channel(&cfg.channel, cfg.channel.duration, seed::derive(s, i))?;
                let bits = if cfg.quantizer.levels == 2 {
                    pipeline::level_crossing_quantize(&trace, &cfg.quantizer)?
                } else {
                    pipeline::mary_quantize(&trace, cfg.quantizer.levels)?
                };
                Ok(match a.length {
                    Some(l) => bits.truncated(l),
                    None => bits,
                })
            })
            .collect::<Result<_>>()?
    } else {
        let Some(l) = a.length else {
            usage_error("gen needs --L or --config")
        };
        if a.m_levels == 2 {
            let model = MarkovBitModel::new(a.rho)?;
            (0..a.trials).map(|i| model.generate(l, seed::derive(s, i))).collect()
        } else {
            let model = transition_matrix(a.m_levels, a.rho)?;
            let symbols = l.div_ceil(model.bits_per_level);
            (0..a.trials)
                .map(|i| model.generate(symbols, seed::derive(s, i)).truncated(l))
                .collect()
        }
    };
    let format = if a.packed {
        bitio::Format::Packed
    } else {
        bitio::Format::Text
    };
    let bytes = bitio::encode(&records, format)?;
    eprintln!(
        "generated {} sequence(s), {} bits each",
        records.len(),
        records.first().map_or(0, BitSequence::len)
    );
    emit(a.out.as_deref(), &bytes)
}

fn test_cmd(a: TestArgs) -> Result<()> {
    let records = bitio::read_file(&a.input)?;
    let alpha = Probability::new(a.alpha)?;
    let template = a.template.as_deref().map(str::parse::<BitSequence>).transpose()?;
    let kinds: Vec<TestKind> = if a.kind.eq_ignore_ascii_case("all") {
        TestKind::ALL.to_vec()
    } else {
        vec![a.kind.parse()?]
    };
    let mut outcomes = Vec::new();
    for x in &records {
        for &kind in &kinds {
            let mut spec = TestSpec::new(kind, alpha.value())?;
            if a.block_size.is_some() && matches!(kind, TestKind::BlockFrequency | TestKind::LongestRun) {
                spec.block_size = a.block_size;
            }
            if template.is_some() && kind == TestKind::NonOverlappingTemplate {
                spec.template = template.clone();
            }
            if a.pattern_order.is_some()
                && matches!(
                    kind,
                    TestKind::ApproximateEntropy | TestKind::Serial1 | TestKind::Serial2
                )
            {
                spec.pattern_order = a.pattern_order;
            }
            spec.check_min_length = !a.no_min_length;
            let o = randtests::run_test(&spec, x)?;
            eprintln!("{:<24} p = {:.6}  {:?}", kind.name(), o.p_value.value(), o.verdict);
            outcomes.push(o);
        }
    }
    if outcomes.len() == 1 {
        emit_json(a.out.as_deref(), &outcomes[0])
    } else {
        emit_json(a.out.as_deref(), &outcomes)
    }
}

fn attack(a: AttackArgs) -> Result<()> {
    let budget = match (a.n, &a.searches) {
        (Some(n), None) => AdversaryBudget::from_depth(a.length, n)?,
        (None, Some(big)) => mlts::budget_from_searches(big, a.length)?,
        _ => usage_error("attack needs exactly one of --n or --N"),
    };
    let rule: BudgetRule = a.budget_rule.into();
    if a.enumerate {
        let list: Vec<String> = mlts::enumerate_mlts(a.length, &budget)?
            .map(|x| x.to_string())
            .collect();
        eprintln!("{} candidates", list.len());
        return emit_json(a.out.as_deref(), &list);
    }
    if let Some(m) = a.key_length {
        let p_accept = match a.kind {
            Some(kind) => {
                let spec = TestSpec::new(kind, a.alpha)?;
                AcceptModel::new(&spec, a.rho, a.length)?.accept_probability(spec.alpha)?
            }
            None => Probability::one(),
        };
        let report = SecurityReport::evaluate(&budget, m, a.rho, p_accept, rule)?;
        eprintln!("p_eve = {:e}, p_rg = {:e}", report.p_eve.value(), report.p_rg.value());
        return emit_json(a.out.as_deref(), &report);
    }
    let p = if a.m_levels == 2 {
        mlts::mlts_success_prob_for_budget(&budget, a.rho, rule)?
    } else {
        mlts::mlts_success_prob_mary(a.length, a.rho, budget.depth, a.m_levels)?
    };
    eprintln!(
        "I_MLTS(L={}, rho={}, N={}) = {:e}",
        a.length,
        a.rho,
        budget.searches,
        p.value()
    );
    emit_json(a.out.as_deref(), &p)
}

fn optimize_cmd(a: OptimizeArgs) -> Result<()> {
    let mut problem: GuidelineProblem = match &a.config {
        Some(path) => read_json(path)?,
        None => {
            let (Some(l), Some(n), Some(rho), Some(kind)) = (a.length, a.searches.clone(), a.rho, a.kind) else {
                usage_error("optimize needs --config or all of --L, --N, --rho, --kind")
            };
            GuidelineProblem::new(l, n, rho, kind)
        }
    };
    if let Some(trials) = a.trials {
        problem.accept_source = AcceptSource::MonteCarlo {
            trials,
            seed: pick_seed(a.seed),
        };
    } else if let (AcceptSource::MonteCarlo { seed, .. }, Some(s)) = (&mut problem.accept_source, a.seed) {
        *seed = s;
    }
    let solution = guideline::optimize(&problem)?;
    eprintln!(
        "alpha* = {}, r* = {}, M = {}, E = {:.6}, feasible = {}",
        solution.alpha_star, solution.r_star, solution.key_length, solution.efficiency, solution.feasible
    );
    emit_json(a.out.as_deref(), &solution)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg: PipelineConfig = read_json(&a.config)?;
    if let Some(p) = a.position {
        cfg.test.position = match p {
            PositionArg::One => Position::Quantized,
            PositionArg::Two => Position::Key,
        };
    }
    let trials = a.trials.unwrap_or(cfg.trials);
    let s = pick_seed(a.seed);
    let out = pipeline::run_pipeline(&cfg, trials, s)?;
    let r = &out.report;
    eprintln!(
        "accept = {:.4}, E = {:.4}, r_mismatch = {:.4}, L_security = {}",
        r.p_accept_empirical.value(),
        r.efficiency,
        r.r_mismatch,
        r.l_security.map_or("n/a".to_string(), |v| format!("{v:.3}"))
    );
    match a.format {
        OutputFormat::Json => emit_json(a.out.as_deref(), &out.report),
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            pipeline::write_trials_csv(&mut buf, &out.rows)?;
            emit(a.out.as_deref(), &buf)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Test(a) => test_cmd(a),
        Command::Attack(a) => attack(a),
        Command::Optimize(a) => optimize_cmd(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
