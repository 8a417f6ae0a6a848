//! Command-line front end: dataset generation, calibration, hypothesis
//! testing, estimation, report rendering and the mismatch-BER harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! malformed files, failed calibration), 3 numerical degeneracy. Statistical
//! accept/reject outcomes never affect the exit code.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use harqstat::channel::{RicianParams, SeededRng};
use harqstat::error::Error;
use harqstat::harqgen::{
    calibrate_sigma2, classify_and_collect_with, mismatch_ber_harness, DatasetClass, DatasetSpec,
    GenOptions, MappingTable, PosteriorDataset,
};
use harqstat::io::{
    read_config, read_dataset, write_dataset, write_report, CodeChoice, ReportEntry, ReportFormat,
    TestSelection,
};
use harqstat::mvntest::{test1_suite, Decision};
use harqstat::paramtest::{ml_estimate, wilks_test2, wilks_test3, PriorSpec};
use harqstat::phy::ModemConfig;
use std::path::{Path, PathBuf};

const SEED_ENV: &str = "HARQSTAT_SEED";

#[derive(Parser)]
#[command(
    name = "harqstat",
    version,
    about = "Posterior channel/noise statistics of an LDPC-coded HARQ Chase-Combining link"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate noise power sigma^2 to a target round-m failure rate
    Calibrate(CalibrateArgs),
    /// Generate failed/successful dataset files per a run configuration
    Generate(GenerateArgs),
    /// Run hypothesis tests (Test 1 MVN, Test 2 exact, Test 3 relaxed)
    Test(TestArgs),
    /// Closed-form ML parameter estimates per dataset
    Estimate(EstimateArgs),
    /// Re-render machine-format report files
    Report(ReportArgs),
    /// Uncoded BER of Chase combining under design/true parameter mismatch
    BerMismatch(BerMismatchArgs),
}

#[derive(Args)]
struct PriorArgs {
    /// Mean channel power beta (linear)
    #[arg(long, default_value_t = 8.0)]
    beta: f64,
    /// Rician factor K (linear)
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// LOS phase theta in radians
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Independent fading instances per transport block
    #[arg(long)]
    nif: usize,
    /// Retransmission index under study
    #[arg(long)]
    m: usize,
    /// Target conditional failure rate at round m
    #[arg(long, default_value_t = 0.5)]
    target_fail: f64,
    /// Sessions per Monte-Carlo probe
    #[arg(long, default_value_t = 600)]
    trials: usize,
    /// RNG seed (default: HARQSTAT_SEED env var, then 1)
    #[arg(long)]
    seed: Option<u64>,
    /// LDPC code: builtin | builtin-reduced | path to an alist file
    #[arg(long, default_value = "builtin")]
    code: String,
    #[command(flatten)]
    prior: PriorArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// Run configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides out_dir from the configuration)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Dataset files
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Significance level
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Comma-separated subset of mvn,exact,relaxed
    #[arg(long, default_value = "mvn,exact,relaxed")]
    tests: String,
    /// Output format: table | machine
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset files
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Output format: table | machine
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Machine-format report files
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Output format: table | machine
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct BerMismatchArgs {
    /// True channel parameters the Monte-Carlo runs under
    #[command(flatten)]
    truth: PriorArgs,
    /// True noise power
    #[arg(long)]
    sigma2: f64,
    /// Design-assumed beta (metadata; defaults to the true value)
    #[arg(long)]
    design_beta: Option<f64>,
    /// Design-assumed K (metadata; defaults to the true value)
    #[arg(long)]
    design_k: Option<f64>,
    /// Design-assumed theta (metadata; defaults to the true value)
    #[arg(long)]
    design_theta: Option<f64>,
    /// Highest retransmission index
    #[arg(long, default_value_t = 3)]
    m_max: usize,
    /// Monte-Carlo symbol trials (>= 10000)
    #[arg(long, default_value_t = 100_000)]
    symbols: usize,
    /// Per-round mapping table files (repeat m_max+1 times; default identity)
    #[arg(long = "map")]
    maps: Vec<PathBuf>,
    /// RNG seed (default: HARQSTAT_SEED env var, then 1)
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a valid u64 seed"))),
        Err(_) => Ok(1),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::Dimension(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Calibration(_) => 2,
        other if other.is_degeneracy() => 3,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Test(args) => cmd_test(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Report(args) => cmd_report(args),
        Command::BerMismatch(args) => cmd_ber_mismatch(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed)?;
    let code = CodeChoice::parse(&args.code).load()?;
    let modem = ModemConfig::qam64_gray();
    // sigma2 here is a placeholder; calibration scans it.
    let params = RicianParams::new(args.prior.beta, args.prior.k, args.prior.theta, 1.0)?;
    let result = calibrate_sigma2(
        &code,
        &modem,
        &params,
        args.nif,
        args.m,
        args.target_fail,
        args.trials,
        seed,
    )?;
    println!(
        "sigma2={} achieved_rate={} probes={}",
        result.sigma2, result.achieved_rate, result.probes
    );
    Ok(())
}

fn dataset_label(n_if: usize, m: usize) -> String {
    format!("nif{n_if}_m{m}")
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let cfg = read_config(&args.config)?;
    if cfg.datasets.is_empty() {
        return Err(Error::Config("configuration defines no datasets".into()));
    }
    let out_dir = args
        .out
        .or(cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let code = cfg.code.load()?;
    let modem = ModemConfig::qam64_gray();
    let opts = GenOptions {
        max_sessions: cfg.max_sessions,
        ..GenOptions::default()
    };

    println!("dataset      n_if     m     n_F     n_S    sigma2");
    for (i, spec_cfg) in cfg.datasets.iter().enumerate() {
        let label = dataset_label(spec_cfg.n_if, spec_cfg.m);
        let failed_path = out_dir.join(format!("{label}_failed.csv"));
        let success_path = out_dir.join(format!("{label}_successful.csv"));
        // Per-spec checkpoint: an interrupted run resumes at the first
        // dataset whose pair of files is missing or unreadable.
        if let (Ok(f), Ok(s)) = (read_dataset(&failed_path), read_dataset(&success_path)) {
            eprintln!("[{label}] found existing files, skipping generation");
            print_summary_row(&label, &f.dataset, &s.dataset);
            continue;
        }
        let sigma2 = match spec_cfg.sigma2 {
            Some(s2) => s2,
            None => {
                eprintln!(
                    "[{label}] calibrating sigma2 (target {}, {} trials per probe)",
                    cfg.target_fail, cfg.calib_trials
                );
                let base =
                    RicianParams::new(cfg.prior_beta, cfg.prior_k, cfg.prior_theta, 1.0)?;
                let cal = calibrate_sigma2(
                    &code,
                    &modem,
                    &base,
                    spec_cfg.n_if,
                    spec_cfg.m,
                    cfg.target_fail,
                    cfg.calib_trials,
                    SeededRng::derive_seed(cfg.seed, 0xCA11B + i as u64),
                )?;
                eprintln!(
                    "[{label}] calibrated sigma2={:.5} (rate {:.3}, {} probes)",
                    cal.sigma2, cal.achieved_rate, cal.probes
                );
                cal.sigma2
            }
        };
        let prior = RicianParams::new(cfg.prior_beta, cfg.prior_k, cfg.prior_theta, sigma2)?;
        let spec = DatasetSpec {
            n_if: spec_cfg.n_if,
            m: spec_cfg.m,
            n_target: spec_cfg.n,
            prior,
            seed: SeededRng::derive_seed(cfg.seed, i as u64),
        };
        let (failed, successful) =
            classify_and_collect_with(&spec, &code, &modem, &opts, |p| {
                eprintln!(
                    "[{label}] {} sessions: failed {}/{}, successful {}/{}",
                    p.sessions, p.failed_records, spec_cfg.n, p.successful_records, spec_cfg.n
                );
            })?;
        write_dataset(&failed, &failed_path)?;
        write_dataset(&successful, &success_path)?;
        print_summary_row(&label, &failed, &successful);
    }
    Ok(())
}

fn print_summary_row(label: &str, failed: &PosteriorDataset, successful: &PosteriorDataset) {
    println!(
        "{label:<12} {:>4} {:>5} {:>7} {:>7}    {}",
        failed.n_if,
        failed.m,
        failed.n_records(),
        successful.n_records(),
        failed.provenance.prior.sigma2
    );
}

fn entry_label(path: &Path, class: DatasetClass) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| path.display().to_string());
    stem.trim_end_matches(&format!("_{}", class.as_str()))
        .replace(char::is_whitespace, "_")
}

fn cmd_test(args: TestArgs) -> Result<(), Error> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0,1), got {}",
            args.alpha
        )));
    }
    let selections = TestSelection::parse_list(&args.tests)?;
    if selections.is_empty() {
        return Err(Error::Config("no tests selected".into()));
    }
    let format = ReportFormat::parse(&args.format)?;
    let mut entries = Vec::new();
    let mut degenerate = 0usize;
    for path in &args.paths {
        let loaded = read_dataset(path)?;
        for w in &loaded.warnings {
            eprintln!("warning: {w}");
        }
        let ds = loaded.dataset;
        let label = entry_label(path, ds.class);
        match run_tests(&ds, &selections, args.alpha) {
            Ok(reports) => entries.push(ReportEntry {
                dataset: label,
                class: ds.class,
                reports,
                estimates: None,
            }),
            Err(e) if e.is_degeneracy() => {
                degenerate += 1;
                eprintln!("note: {label} [{}]: {e}", ds.class.as_str());
            }
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(Error::DegenerateData(format!(
            "no dataset produced reports ({degenerate} degenerate)"
        )));
    }
    print!("{}", write_report(&entries, format)?);
    Ok(())
}

fn run_tests(
    ds: &PosteriorDataset,
    selections: &[TestSelection],
    alpha: f64,
) -> Result<Vec<harqstat::mvntest::TestReport>, Error> {
    let mut reports = Vec::new();
    let mut mvn_rejected = false;
    if selections.contains(&TestSelection::Mvn) {
        let mvn = test1_suite(ds, alpha)?;
        mvn_rejected = mvn.iter().any(|r| r.decision == Decision::Reject);
        reports.extend(mvn);
    }
    let annotate = |r: harqstat::mvntest::TestReport| {
        if mvn_rejected {
            r.with_warning("MVN premise rejected".into())
        } else {
            r
        }
    };
    if selections.contains(&TestSelection::Exact) {
        let prior = PriorSpec::from_params(&ds.provenance.prior, ds.m)?;
        reports.push(annotate(wilks_test2(ds, &prior, alpha)?));
    }
    if selections.contains(&TestSelection::Relaxed) {
        let (report, _) = wilks_test3(ds, alpha)?;
        reports.push(annotate(report));
    }
    Ok(reports)
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let format = ReportFormat::parse(&args.format)?;
    let mut entries = Vec::new();
    for path in &args.paths {
        let loaded = read_dataset(path)?;
        for w in &loaded.warnings {
            eprintln!("warning: {w}");
        }
        let ds = loaded.dataset;
        let label = entry_label(path, ds.class);
        match ml_estimate(&ds) {
            Ok(est) => entries.push(ReportEntry {
                dataset: label,
                class: ds.class,
                reports: Vec::new(),
                estimates: Some(est),
            }),
            Err(e) if e.is_degeneracy() => {
                // Reported per row; processing continues.
                eprintln!("note: {label} [{}]: {e}", ds.class.as_str());
            }
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(Error::DegenerateData(
            "no dataset produced estimates".into(),
        ));
    }
    print!("{}", write_report(&entries, format)?);
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let format = ReportFormat::parse(&args.format)?;
    let mut entries = Vec::new();
    for path in &args.paths {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        entries.extend(harqstat::io::parse_machine(&text)?);
    }
    print!("{}", write_report(&entries, format)?);
    Ok(())
}

fn cmd_ber_mismatch(args: BerMismatchArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed)?;
    let truth = RicianParams::new(args.truth.beta, args.truth.k, args.truth.theta, args.sigma2)?;
    let design = RicianParams::new(
        args.design_beta.unwrap_or(truth.beta),
        args.design_k.unwrap_or(truth.k),
        args.design_theta.unwrap_or(truth.theta),
        truth.sigma2,
    )?;
    let maps: Vec<MappingTable> = if args.maps.is_empty() {
        vec![MappingTable::identity(); args.m_max + 1]
    } else {
        args.maps
            .iter()
            .map(|p| MappingTable::from_file(p))
            .collect::<Result<_, _>>()?
    };
    let mut rng = SeededRng::new(seed, 0);
    let result = mismatch_ber_harness(&design, &truth, &maps, args.m_max, args.symbols, &mut rng)?;
    println!(
        "# design: beta={} K={} theta={}  truth: beta={} K={} theta={} sigma2={}  symbols={}",
        result.design.beta,
        result.design.k,
        result.design.theta,
        result.truth.beta,
        result.truth.k,
        result.truth.theta,
        result.truth.sigma2,
        result.symbols
    );
    for (m, ber) in result.per_round_ber.iter().enumerate() {
        println!("m={m} ber={ber}");
    }
    Ok(())
}
