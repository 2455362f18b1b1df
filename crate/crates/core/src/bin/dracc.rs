use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dracc::data::AteSchema;
use dracc::estimators::AteClipMode;
use dracc::harness::{
    analyze_ate, compute_metrics, emit_histogram_svg, emit_report, emit_scatter_svg, run_study, write_records_csv,
    AteCiMode, AteConfig, Estimator, HarnessError, ReportFormat, StudyConfig, CONFIG_KEYS,
};
use dracc::simgen::THETA_STAR;

const HIST_BINS: usize = 30;

fn config_help() -> String {
    let mut s = String::from("Config file keys (flat `key = value`, `#` comments):\n");
    for (k, d) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<24} {d}\n"));
    }
    s.push_str("\nExit codes: 0 success, 1 configuration or input error, 2 I/O error.");
    s
}

#[derive(Parser)]
#[command(
    name = "dracc",
    version,
    about = "Doubly robust estimation with adaptive correction clipping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Kang–Schafer simulation grid and write metrics, records and plots.
    #[command(after_help = config_help())]
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sample sizes, overriding the config.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        n: Vec<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Bootstrap draws per replication.
        #[arg(long)]
        b: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Scenario codes such as CC,II.
        #[arg(long)]
        scenarios: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Per-outcome two-arm effect analysis of a CSV.
    #[command(after_help = "Exit codes: 0 success, 1 configuration or input error, 2 I/O error.")]
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        treatment: String,
        #[arg(long, value_delimiter = ',', required = true)]
        covariates: Vec<String>,
        /// Outcome columns, or `all` for every remaining column.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        outcomes: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = dracc::inference::DEFAULT_BOOTSTRAP)]
        b: usize,
        /// Propensity floor.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 20_250_101)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = CiArg::SumArms)]
        ate_ci: CiArg,
        #[arg(long, value_enum, default_value_t = ClipArg::PerArm)]
        ate_clip: ClipArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CiArg {
    SumArms,
    PerArmReport,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClipArg {
    PerArm,
    Contrast,
}

fn simulate(cfg: &StudyConfig, out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out)?;
    let records = run_study(cfg)?;
    write_records_csv(&records, &out.join("records.csv"))?;
    let table = compute_metrics(&records, THETA_STAR)?;
    emit_report(&table, ReportFormat::Csv, &out.join("metrics.csv"))?;
    emit_report(&table, ReportFormat::Markdown, &out.join("metrics.md"))?;

    let plots = out.join("plots");
    std::fs::create_dir_all(&plots)?;
    for &n in &cfg.sample_sizes {
        for &sc in &cfg.scenarios {
            let cell: Vec<_> = records
                .iter()
                .filter(|r| r.n == n && r.scenario == sc)
                .filter_map(|r| r.bundle)
                .collect();
            if cell.len() < 2 {
                continue;
            }
            for e in Estimator::ALL {
                let v: Vec<f64> = cell.iter().map(|b| e.estimate(b)).collect();
                let stem = format!("hist_n{n}_{}_{}", sc.code(), e.tag());
                emit_histogram_svg(
                    &v,
                    HIST_BINS,
                    THETA_STAR,
                    &format!("{} (n = {n}, {})", e.name(), sc.label()),
                    &plots.join(format!("{stem}.svg")),
                    &plots.join(format!("{stem}.csv")),
                )?;
            }
            let dr: Vec<f64> = cell.iter().map(|b| b.theta_dr).collect();
            let acc: Vec<f64> = cell.iter().map(|b| b.theta_acc).collect();
            emit_scatter_svg(
                &dr,
                &acc,
                &format!("DR+ACC vs DR (n = {n}, {})", sc.label()),
                "DR",
                "DR+ACC",
                &plots.join(format!("scatter_n{n}_{}_acc_vs_dr.svg", sc.code())),
            )?;
        }
    }
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", std::fs::read_to_string(out.join("metrics.md"))?);
    let _ = writeln!(stdout, "wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn analyze(
    data: &Path,
    schema: &AteSchema,
    outcomes: &[String],
    cfg: &AteConfig,
    out: &Path,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out)?;
    let report = analyze_ate(data, schema, outcomes, cfg)?;
    report.write_csv(&out.join("ate_results.csv"))?;
    let summary = report.summary_markdown();
    std::fs::write(out.join("ate_summary.md"), &summary)?;

    let ok: Vec<_> = report.outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    if ok.len() >= 2 {
        let series: [(&str, Vec<f64>); 5] = [
            ("or", ok.iter().map(|r| r.estimate.ate_or).collect()),
            ("ipw", ok.iter().map(|r| r.estimate.ate_ipw).collect()),
            ("dr", ok.iter().map(|r| r.estimate.ate_dr).collect()),
            ("acc", ok.iter().map(|r| r.estimate.ate_acc).collect()),
            (
                "dr_minus_acc",
                ok.iter().map(|r| r.estimate.ate_dr - r.estimate.ate_acc).collect(),
            ),
        ];
        for (tag, v) in &series {
            emit_histogram_svg(
                v,
                HIST_BINS,
                0.0,
                &format!("ATE estimates: {tag}"),
                &out.join(format!("ate_hist_{tag}.svg")),
                &out.join(format!("ate_hist_{tag}.csv")),
            )?;
        }
        emit_scatter_svg(
            &series[2].1,
            &series[3].1,
            "ATE: DR+ACC vs DR",
            "DR",
            "DR+ACC",
            &out.join("ate_scatter_acc_vs_dr.svg"),
        )?;
    }
    let _ = write!(std::io::stdout().lock(), "{summary}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate {
            config,
            n,
            reps,
            seed,
            b,
            workers,
            scenarios,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => StudyConfig::from_file(&p)?,
                None => StudyConfig::default(),
            };
            if !n.is_empty() {
                cfg.sample_sizes = n;
            }
            if let Some(s) = scenarios {
                cfg.set("scenarios", &s)?;
            }
            cfg.replications = reps.unwrap_or(cfg.replications);
            cfg.master_seed = seed.unwrap_or(cfg.master_seed);
            cfg.bootstrap_b = b.unwrap_or(cfg.bootstrap_b);
            cfg.workers = workers.unwrap_or(cfg.workers);
            cfg.validate()?;
            simulate(&cfg, &out)
        }
        Command::Analyze {
            data,
            treatment,
            covariates,
            outcomes,
            alpha,
            b,
            eps,
            seed,
            ate_ci,
            ate_clip,
            out,
        } => {
            if b < dracc::inference::MIN_BOOTSTRAP {
                return Err(HarnessError::Config(format!(
                    "--b below {}",
                    dracc::inference::MIN_BOOTSTRAP
                )));
            }
            if !(eps > 0.0 && eps < 0.5) {
                return Err(HarnessError::Config(format!("--eps {eps} outside (0, 0.5)")));
            }
            let mut cfg = AteConfig {
                alpha,
                bootstrap_b: b,
                seed,
                ..Default::default()
            };
            cfg.logistic.eps = eps;
            cfg.ci_mode = match ate_ci {
                CiArg::SumArms => AteCiMode::SumArms,
                CiArg::PerArmReport => AteCiMode::PerArmReport,
            };
            cfg.clip_mode = match ate_clip {
                ClipArg::PerArm => AteClipMode::PerArm,
                ClipArg::Contrast => AteClipMode::Contrast,
            };
            let outcomes: Vec<String> = if outcomes.len() == 1 && outcomes[0] == "all" {
                Vec::new()
            } else {
                outcomes
            };
            let schema = AteSchema { covariates, treatment };
            analyze(&data, &schema, &outcomes, &cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
