use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use richcore::adversarial::{
    constant_first_orthonormal, hard_target_for_sampler, two_point_instance,
    uniform_coreset_distribution, uniform_miss_frequency, verify_theorem7,
};
use richcore::coreset::{CoresetMode, LiftedIndex, RatioNorm, RegressionInstance};
use richcore::solvers::{solve_full, solve_on_coreset, ConstraintDomain};
use richcore::sparsify::{CoresetOperator, Pick};
use serde::Serialize;

use crate::args::{AdversarialArgs, BenchArgs, Construction, RunArgs};
use crate::error::{CliError, CliResult};
use crate::input::{load_problem, DataSource, Problem, Synthetic};
use crate::pipeline::{self, norm_name};

/// Slack on the bound comparison, relative to the bound.
pub const PASS_SLACK: f64 = 1e-9;

pub const THREADS_ENV: &str = "RICHCORE_THREADS";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: CoresetMode,
    pub r: Option<usize>,
    pub source: DataSource,
    pub target_files: Vec<PathBuf>,
    pub target_cols: Vec<usize>,
    pub header: bool,
    pub domain: ConstraintDomain,
    pub norm: Option<RatioNorm>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> CliResult<Self> {
        let source = match (&args.input, &args.synthetic) {
            (Some(path), None) => DataSource::Csv(path.clone()),
            (None, Some(spec)) => DataSource::Synthetic(Synthetic::parse(spec)?),
            _ => return Err(CliError::Usage("give exactly one of --input or --synthetic".into())),
        };
        if args.r == Some(0) {
            return Err(CliError::Usage("coreset size must be at least 1".into()));
        }
        Ok(RunConfig {
            mode: args.mode.into(),
            r: args.r,
            source,
            target_files: args.target.clone(),
            target_cols: args.target_col.clone(),
            header: args.header,
            domain: args.domain.into(),
            norm: args.norm.map(Into::into),
            seed: args.seed,
            out: args.out.clone(),
        })
    }

    fn size(&self) -> CliResult<usize> {
        self.r.ok_or_else(|| CliError::Usage("coreset size -r is required".into()))
    }

    fn load(&self) -> CliResult<Problem> {
        load_problem(&self.source, &self.target_files, &self.target_cols, self.header, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PickReport {
    pub row: usize,
    pub scale: f64,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_col: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub command: &'static str,
    pub mode: &'static str,
    pub n: usize,
    pub d: usize,
    pub omega: Option<usize>,
    pub k: usize,
    pub r: usize,
    pub picks: Vec<PickReport>,
    pub target_agnostic: bool,
    pub notes: Vec<String>,
    pub predicted_bound: f64,
    pub domain: String,
    pub norm: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSection {
    pub full_error: f64,
    pub coreset_error: f64,
    /// `null` when infinite; see `ratio_infinite`.
    pub achieved_ratio: f64,
    pub ratio_infinite: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_target_ratios: Vec<f64>,
}

fn pick_reports(mode: CoresetMode, op: &CoresetOperator, n: usize) -> Vec<PickReport> {
    op.picks()
        .iter()
        .map(|p| {
            let lifted = (mode == CoresetMode::ArbitraryConstrained).then(|| LiftedIndex::decode(p.row, n));
            PickReport {
                row: p.row,
                scale: p.scale,
                weight: p.scale * p.scale,
                data_row: lifted.map(|l| l.data_row),
                response_col: lifted.map(|l| l.response_col),
            }
        })
        .collect()
}

fn passes(ratio: f64, bound: f64) -> bool {
    ratio.is_finite() && ratio <= bound * (1.0 + PASS_SLACK)
}

fn build_report(config: &RunConfig, command: &'static str) -> CliResult<(RatioReport, Problem, CoresetOperator)> {
    let start = Instant::now();
    let mode = config.mode;
    let norm = pipeline::resolve_norm(mode, config.norm)?;
    pipeline::check_domain(mode, &config.domain)?;
    let r = config.size()?;
    let problem = config.load()?;
    let bundle = pipeline::build(mode, &problem, r)?;
    let agnostic = mode == CoresetMode::Agnostic;
    let mut notes = Vec::new();
    if agnostic {
        notes.push("target-agnostic".to_string());
    }
    let mut report = RatioReport {
        command,
        mode: mode.name(),
        n: problem.a.nrows(),
        d: problem.a.ncols(),
        omega: problem.b.as_ref().map(|b| b.ncols()),
        k: pipeline::subspace_dim(mode, &problem),
        r,
        picks: pick_reports(mode, &bundle.op, problem.a.nrows()),
        target_agnostic: agnostic,
        notes,
        predicted_bound: bundle.predicted_bound,
        domain: config.domain.name().to_string(),
        norm: norm_name(norm),
        solve: None,
        wall_time_ms: 0.0,
    };
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((report, problem, bundle.op))
}

pub fn cmd_build(config: &RunConfig) -> CliResult<RatioReport> {
    build_report(config, "build").map(|(report, _, _)| report)
}

pub fn cmd_verify(config: &RunConfig) -> CliResult<RatioReport> {
    let start = Instant::now();
    let (mut report, problem, op) = build_report(config, "verify")?;
    let norm = pipeline::resolve_norm(config.mode, config.norm)?;
    let eval = pipeline::evaluate(config.mode, &problem, &op, &config.domain, norm)?;
    if eval.ratio.is_infinite() {
        report
            .notes
            .push("full-data optimum is zero but the coreset solution is not".into());
    }
    report.solve = Some(SolveSection {
        full_error: eval.full_error,
        coreset_error: eval.coreset_error,
        achieved_ratio: eval.ratio,
        ratio_infinite: eval.ratio.is_infinite(),
        pass: passes(eval.ratio, report.predicted_bound),
        per_target_ratios: eval.per_target,
    });
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchTrial {
    pub kind: &'static str,
    pub mode: &'static str,
    pub r: usize,
    pub trial: usize,
    pub seed: u64,
    pub predicted_bound: f64,
    pub deterministic_ratio: f64,
    pub baseline_ratio: f64,
    pub baseline_infinite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub kind: &'static str,
    pub mode: &'static str,
    pub r: usize,
    pub trials: usize,
    pub predicted_bound: f64,
    pub deterministic_ratio: f64,
    pub deterministic_pass: bool,
    pub baseline_median: f64,
    pub baseline_max: f64,
    pub baseline_max_infinite: bool,
    pub deterministic_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    pub trials: Vec<BenchTrial>,
    pub summaries: Vec<BenchSummary>,
}

impl BenchOutput {
    pub fn lines(&self) -> Vec<String> {
        self.trials
            .iter()
            .map(crate::json::to_line)
            .chain(self.summaries.iter().map(crate::json::to_line))
            .collect()
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}=`{raw}` is not a thread count")))?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

pub fn cmd_bench(config: &RunConfig, rs: &[usize], trials: usize) -> CliResult<BenchOutput> {
    let mode = config.mode;
    let norm = pipeline::resolve_norm(mode, config.norm)?;
    pipeline::check_domain(mode, &config.domain)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let problem = config.load()?;
    let sizes: Vec<usize> = if !rs.is_empty() {
        rs.to_vec()
    } else if let Some(r) = config.r {
        vec![r]
    } else {
        let k = pipeline::subspace_dim(mode, &problem);
        [2 * k, 4 * k, 8 * k].into_iter().map(|r| r.max(k + 2)).collect()
    };
    let pool = thread_pool()?;
    let rows = pipeline::source_rows(mode, &problem);
    let mut out = BenchOutput::default();
    for &r in &sizes {
        if r == 0 {
            return Err(CliError::Usage("coreset sizes must be positive".into()));
        }
        let start = Instant::now();
        let bundle = pipeline::build(mode, &problem, r)?;
        let det = pipeline::evaluate(mode, &problem, &bundle.op, &config.domain, norm)?;
        let det_ms = start.elapsed().as_secs_f64() * 1e3;
        let baseline: Vec<CliResult<(usize, u64, f64)>> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = config.seed.wrapping_add(t as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let op = pipeline::uniform_baseline(rows, r, &mut rng)?;
                    let eval = pipeline::evaluate(mode, &problem, &op, &config.domain, norm)?;
                    Ok((t, seed, eval.ratio))
                })
                .collect()
        });
        let mut baseline = baseline.into_iter().collect::<CliResult<Vec<_>>>()?;
        baseline.sort_by_key(|(t, _, _)| *t);
        for &(trial, seed, ratio) in &baseline {
            out.trials.push(BenchTrial {
                kind: "trial",
                mode: mode.name(),
                r,
                trial,
                seed,
                predicted_bound: bundle.predicted_bound,
                deterministic_ratio: det.ratio,
                baseline_ratio: ratio,
                baseline_infinite: ratio.is_infinite(),
            });
        }
        let mut ratios: Vec<f64> = baseline.iter().map(|(_, _, q)| *q).collect();
        ratios.sort_by(f64::total_cmp);
        let max = *ratios.last().expect("trials > 0");
        out.summaries.push(BenchSummary {
            kind: "summary",
            mode: mode.name(),
            r,
            trials,
            predicted_bound: bundle.predicted_bound,
            deterministic_ratio: det.ratio,
            deterministic_pass: passes(det.ratio, bundle.predicted_bound),
            baseline_median: median(&ratios),
            baseline_max: max,
            baseline_max_infinite: max.is_infinite(),
            deterministic_ms: det_ms,
        });
    }
    out.trials.sort_by_key(|t| (t.r, t.trial));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterministicReport {
    pub construction: &'static str,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub coresets_checked: usize,
    pub worst_ratio: f64,
    pub worst_coreset: Vec<usize>,
    pub floor: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarlo {
    pub draws: usize,
    pub seed: u64,
    pub miss_frequency: f64,
    pub standard_error: f64,
    pub within_three_se: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomizedReport {
    pub construction: &'static str,
    pub sampler: &'static str,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub ell: usize,
    pub t_star: Vec<usize>,
    pub success_probability_lower_bound: f64,
    /// Exact value as a reduced fraction.
    pub exact_bound: String,
    pub miss_probability: f64,
    pub ratio_floor: f64,
    /// Ratio on one coreset that misses `t_star`.
    pub missed_coreset_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPointCoreset {
    pub row: usize,
    pub x_tilde: f64,
    pub full_error: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPointReport {
    pub construction: &'static str,
    pub x_opt: f64,
    pub full_error: f64,
    pub coresets: Vec<TwoPointCoreset>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum AdversarialReport {
    Deterministic(DeterministicReport),
    Randomized(RandomizedReport),
    TwoPoint(TwoPointReport),
}

pub fn cmd_adversarial(args: &AdversarialArgs) -> CliResult<AdversarialReport> {
    match args.theorem {
        Construction::Deterministic => {
            let sweep = verify_theorem7(args.n, args.d, args.r)?;
            Ok(AdversarialReport::Deterministic(DeterministicReport {
                construction: "deterministic",
                n: args.n,
                d: args.d,
                r: args.r,
                coresets_checked: sweep.coresets_checked,
                worst_ratio: sweep.worst_ratio,
                worst_coreset: sweep.worst_coreset,
                floor: sweep.floor,
                pass: sweep.worst_ratio >= sweep.floor - 1e-6,
            }))
        }
        Construction::Randomized => {
            let (n, r, ell) = (args.n, args.r, args.ell);
            let dist = uniform_coreset_distribution(n, r)?;
            let target = hard_target_for_sampler(n, r, ell, &dist)?;
            let a = constant_first_orthonormal(n, args.d)?;
            let inst = RegressionInstance::new(a, target.b.clone())?;
            let missing: Vec<usize> = (0..n).filter(|i| !target.t_star.contains(i)).take(r).collect();
            let op = CoresetOperator::from_rows(&missing, n)?;
            let eval = pipeline::evaluate(
                CoresetMode::Simple,
                &Problem {
                    a: inst.a.clone(),
                    b: Some(richcore::linalg::column_matrix(&inst.b)),
                },
                &op,
                &ConstraintDomain::Unconstrained,
                RatioNorm::Frobenius,
            )?;
            let monte_carlo = (args.draws > 0).then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                let freq = uniform_miss_frequency(n, r, &target.t_star, args.draws, &mut rng);
                let p = target.success_probability_lower_bound;
                let se = (p * (1.0 - p) / args.draws as f64).sqrt();
                MonteCarlo {
                    draws: args.draws,
                    seed: args.seed,
                    miss_frequency: freq,
                    standard_error: se,
                    within_three_se: (freq - p).abs() <= 3.0 * se,
                }
            });
            Ok(AdversarialReport::Randomized(RandomizedReport {
                construction: "randomized",
                sampler: "uniform",
                n,
                d: args.d,
                r,
                ell,
                t_star: target.t_star,
                success_probability_lower_bound: target.success_probability_lower_bound,
                exact_bound: target.exact_bound.to_string(),
                miss_probability: 1.0 - target.hit_probability,
                ratio_floor: target.ratio_floor,
                missed_coreset_ratio: eval.ratio,
                monte_carlo,
            }))
        }
        Construction::TwoPoint => {
            let inst = two_point_instance();
            let x_opt = solve_full(&inst, &ConstraintDomain::Unconstrained)?;
            let full_error = (&inst.a * &x_opt - &inst.b).norm_squared();
            let coresets = (0..2)
                .map(|row| {
                    let op = CoresetOperator::new(vec![Pick { row, scale: 1.0 }], 2)?;
                    let x = solve_on_coreset(&op, &inst, &ConstraintDomain::Unconstrained)?;
                    let err = (&inst.a * &x - &inst.b).norm_squared();
                    Ok(TwoPointCoreset {
                        row,
                        x_tilde: x[0],
                        full_error: err,
                        ratio: err / full_error,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(AdversarialReport::TwoPoint(TwoPointReport {
                construction: "two-point",
                x_opt: x_opt[0],
                full_error,
                coresets,
            }))
        }
    }
}

pub fn bench_from_args(args: &BenchArgs) -> CliResult<(RunConfig, BenchOutput)> {
    let config = RunConfig::from_args(&args.run)?;
    let out = cmd_bench(&config, &args.rs, args.trials)?;
    Ok((config, out))
}
