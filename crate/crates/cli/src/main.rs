use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modeloss::aggregate::AggregationRule;
use modeloss::channel::{
    apply_emulator, constant_power_profile, synthesize_link, true_mdl, ChannelSpectrum,
    EmulatorProfile, Placement,
};
use modeloss::container::{self, ContainerItem};
use modeloss::dsp::{estimate_mdl, EqualizerSolution, MdlEstimate};
use modeloss::mdl::{ClampPolicy, Snr};
use modeloss::sweep::{emit_all, run_sweep, SweepConfig, SweepError, SweepMode};

/// Mode-dependent loss simulation and MMSE-based MDL estimation.
#[derive(Parser)]
#[command(name = "modeloss", version)]
struct Cli {
    /// Sweep configuration (TOML). Built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Base seed, overriding `link.seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full (ratio × SNR) sweep and write CSV tables and heatmaps.
    Sweep,
    /// Run only the reference estimates and chart MDL against attenuation ratio.
    MdlVsRatio,
    /// Report on a saved channel, equalizer or estimate container.
    Analyze {
        file: PathBuf,
        /// Aggregation rule used for channels and equalizers.
        #[arg(long, default_value = "mean-gram")]
        aggregation: AggregationRule,
        #[arg(long, default_value = "clamp-to-floor")]
        clamp_policy: ClampPolicy,
        /// SNR for the correction of an equalizer, instead of its fitted SNR.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Print the effective configuration with every default filled in.
    PrintConfig,
    /// Synthesize one link from the configuration and save it as a container.
    Synthesize {
        file: PathBuf,
        /// Attenuation ratio of the VOA bank; no emulator when omitted.
        #[arg(long)]
        ratio_db: Option<f64>,
        /// Place the VOA bank after this many sections instead of at the transmitter.
        #[arg(long)]
        in_span: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(cli: &Cli) -> Result<SweepConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.link.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(cli: &Cli, mode: SweepMode) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let result = run_sweep(&cfg, cli.threads, mode)?;
    let files = emit_all(&result, Path::new(&cfg.output_dir))?;
    let skipped = result.summary.iter().map(|c| c.skipped).sum::<usize>();
    if skipped > 0 {
        eprintln!("{skipped} replicate(s) skipped: attenuation profile infeasible");
    }
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn analyze_channel(ch: &ChannelSpectrum) -> Result<(), Failure> {
    println!("kind: channel-spectrum");
    println!("dimension: {} ({} bins)", ch.dim(), ch.num_bins());
    println!("mean power: {:.6}", ch.mean_power());
    for rule in AggregationRule::ALL {
        let v = true_mdl(ch, rule).map_err(runtime)?;
        println!("mdl_db[{}]: {:.6}", rule.name(), v.db);
    }
    Ok(())
}

fn analyze_equalizer(
    eq: &EqualizerSolution,
    aggregation: AggregationRule,
    clamp: ClampPolicy,
    snr_db: Option<f64>,
) -> Result<(), Failure> {
    let snr = match snr_db {
        Some(db) => Snr::from_db(db).map_err(|e| Failure::Config(e.to_string()))?,
        None => eq.fitted_snr,
    };
    let est = estimate_mdl(eq, snr, true, aggregation, clamp).map_err(runtime)?;
    println!("kind: equalizer-solution");
    println!("dimension: {} ({} bins)", eq.dim(), eq.bins.len());
    println!("training_length: {}", eq.training_length);
    print_estimate(&est);
    Ok(())
}

fn print_estimate(est: &MdlEstimate) {
    println!("snr_db: {:.6}", est.snr.db());
    println!("aggregation: {}", est.aggregation.name());
    println!("uncorrected_mdl_db: {:.6}", est.uncorrected.db);
    match est.corrected {
        Some(c) => println!("corrected_mdl_db: {:.6}", c.db),
        None => println!("corrected_mdl_db: n/a"),
    }
    println!("singular_bins: {}", est.singular_bins);
    println!("noise_dominated_bins: {}", est.noise_dominated_bins);
}

fn analyze(
    file: &Path,
    aggregation: AggregationRule,
    clamp: ClampPolicy,
    snr_db: Option<f64>,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Failure::Config(format!("{}: {e}", file.display())))?;
    let kind = container::peek_kind(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let bad = |e: container::ContainerError| Failure::Config(e.to_string());
    match kind.as_str() {
        k if k == ChannelSpectrum::KIND => {
            analyze_channel(&container::from_str(&text).map_err(bad)?)
        }
        k if k == EqualizerSolution::KIND => analyze_equalizer(
            &container::from_str(&text).map_err(bad)?,
            aggregation,
            clamp,
            snr_db,
        ),
        k if k == MdlEstimate::KIND => {
            let est: MdlEstimate = container::from_str(&text).map_err(bad)?;
            println!("kind: mdl-estimate");
            print_estimate(&est);
            Ok(())
        }
        other => Err(Failure::Config(format!(
            "unsupported container kind `{other}`"
        ))),
    }
}

fn synthesize(
    cli: &Cli,
    file: &Path,
    ratio_db: Option<f64>,
    in_span: Option<usize>,
) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let link = synthesize_link(&cfg.link).map_err(|e| Failure::Config(e.to_string()))?;
    let channel = match ratio_db {
        None => link,
        Some(ratio) => {
            let placement = match in_span {
                Some(section) => Placement::InSpan { section },
                None => Placement::TxSide,
            };
            let attenuation_db =
                constant_power_profile(&cfg.link.layout, ratio, cfg.base_attenuation_db)
                    .map_err(|e| Failure::Config(e.to_string()))?;
            apply_emulator(
                &link,
                &EmulatorProfile {
                    placement,
                    attenuation_db,
                },
            )
            .map_err(|e| Failure::Config(e.to_string()))?
        }
    };
    let channel = channel.normalized().map_err(runtime)?;
    container::save(&channel, file).map_err(runtime)?;
    println!("{}", file.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Sweep => sweep(&cli, SweepMode::Full),
        Command::MdlVsRatio => sweep(&cli, SweepMode::ReferenceOnly),
        Command::Analyze {
            file,
            aggregation,
            clamp_policy,
            snr_db,
        } => analyze(file, *aggregation, *clamp_policy, *snr_db),
        Command::PrintConfig => load_config(&cli).map(|cfg| print!("{}", cfg.to_toml())),
        Command::Synthesize {
            file,
            ratio_db,
            in_span,
        } => synthesize(&cli, file, *ratio_db, *in_span),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
