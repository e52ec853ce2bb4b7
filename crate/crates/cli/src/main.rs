use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use permbp::code::{build_bch_code, build_bch_code_circulant, to_alist};
use permbp::decoder::{read_weights, write_weights, DecoderParams};
use permbp::harness::{
    run_sweep, run_timing, write_sweep_rows, write_timing_csv, Decoder, DecoderSpec, ExperimentConfig, StopRule,
    SweepConfig, SweepRow,
};
use permbp::hessian::{probe_run, write_eigenvalue_dump, write_probe_csv};
use permbp::train::{train_from, write_history_csv, TrainConfig};
use permbp::{CodeSpec, Error};

const GIT_DESCRIBE: &str = env!("PERMBP_GIT_DESCRIBE");

#[derive(Parser)]
#[command(name = "permbp", version, about = "Permutation-interleaved neural BP decoders for BCH codes")]
struct Cli {
    /// Worker threads for parallel sections (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Preset name (bch63_45, bch63_36, bch31_16, bch15_11) or TOML file.
    #[arg(long, short)]
    config: String,
    /// Override one config value, e.g. `--set train.epochs=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Run directory. Defaults to `runs/<name>/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Systematic,
    Circulant,
}

#[derive(Subcommand)]
enum Command {
    /// Write the parity-check matrix of a narrow-sense binary BCH code as alist.
    GenCode {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        t: u32,
        #[arg(long, value_enum, default_value = "systematic")]
        form: Form,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the tied edge weights.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Start from these weights instead of all ones.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// BER/FER sweep over the configured SNR grid.
    EvalSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Decoders to sweep one after another (default: the config's list).
        #[arg(long, value_delimiter = ',')]
        decoders: Vec<String>,
        /// Decoders to sweep together on identical frames.
        #[arg(long, value_delimiter = ',', conflicts_with = "decoders")]
        paired: Vec<String>,
        /// Weights for neural decoders named without `@file`.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Single-threaded per-frame decode times.
    Timing {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',')]
        decoders: Vec<String>,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Train with and without the l2 term and record Hessian spectra.
    HessianProbe {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the effective config as TOML.
    DumpConfig {
        #[arg(long, short)]
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_error(msg: String) -> anyhow::Error {
    Error::Config(msg).into()
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("`--set {assignment}` is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields one item");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error(format!("`{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn load_config(name: &str, sets: &[String]) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(name)?;
    if sets.is_empty() {
        return Ok(cfg);
    }
    let mut table: toml::Table = cfg.to_toml()?.parse().context("re-reading config")?;
    for s in sets {
        apply_set(&mut table, s)?;
    }
    Ok(ExperimentConfig::from_toml(&table.to_string())?)
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    git_describe: &'a str,
    train_seed: u64,
    reservoir_seed: u64,
    sweep_seed: u64,
    timing_seed: u64,
    probe_seed: u64,
    args: Vec<String>,
}

struct Run {
    dir: PathBuf,
    cfg: ExperimentConfig,
}

impl Run {
    fn open(args: &ConfigArgs, command: &str) -> Result<Self> {
        let cfg = load_config(&args.config, &args.sets)?;
        let dir = args
            .out
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(&cfg.name).join(command));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
        let meta = RunMeta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            train_seed: cfg.train.seed,
            reservoir_seed: cfg.reservoir.seed,
            sweep_seed: cfg.eval.sweep.seed,
            timing_seed: cfg.timing.seed,
            probe_seed: cfg.probe.seed,
            args: std::env::args().collect(),
        };
        fs::write(dir.join("meta.toml"), toml::to_string(&meta)?)?;
        Ok(Self { dir, cfg })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

fn build_decoders(
    cfg: &ExperimentConfig,
    code: &CodeSpec,
    names: &[String],
    weights: Option<&Path>,
) -> Result<Vec<Decoder>> {
    names
        .iter()
        .map(|name| {
            let mut spec: DecoderSpec = cfg.expand_alias(name).parse()?;
            if let DecoderSpec::PermRnn { weights: w @ None, .. } | DecoderSpec::MrrdRnn { weights: w @ None, .. } =
                &mut spec
            {
                *w = weights.map(Path::to_path_buf);
            }
            Ok(Decoder::build(&spec, code, &cfg.decoder)?)
        })
        .collect()
}

fn print_sweep(rows: &[SweepRow]) {
    println!("{:<28} {:>6} {:>9} {:>11} {:>11} {:>9}", "decoder", "snr", "frames", "ber", "fer", "us/frame");
    for r in rows {
        println!(
            "{:<28} {:>6.2} {:>9} {:>11.3e} {:>11.3e} {:>9.1}",
            r.decoder, r.snr_db, r.frames, r.ber, r.fer, r.mean_decode_us
        );
    }
}

fn cmd_train(args: &ConfigArgs, init: Option<&Path>) -> Result<()> {
    let run = Run::open(args, "train")?;
    let cfg = &run.cfg;
    let code = cfg.build_code()?;
    let reservoir = cfg.build_reservoir(&code)?;
    let start = match init {
        Some(p) => read_weights(&code, p)?,
        None => DecoderParams::unit(&code),
    };
    let out = match train_from(&code, &cfg.decoder, &cfg.train, reservoir, start, &[]) {
        Ok(out) => out,
        Err(Error::Diverged { epoch, reason, last_good }) => {
            write_weights(&code, &last_good, run.path("weights_last_good.txt"))?;
            return Err(Error::Diverged { epoch, reason, last_good }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_history_csv(run.path("history.csv"), &out.history)?;
    write_weights(&code, &out.state.params, run.path("weights_final.txt"))?;
    if let Some((epoch, params)) = &out.best {
        write_weights(&code, params, run.path("weights_best.txt"))?;
        println!("best validation BER at epoch {epoch}");
    }
    if let Some(last) = out.history.last() {
        println!("epoch {} loss {:.6} val_ber {:?}", last.epoch, last.loss.total, last.val_ber);
    }
    println!("run directory: {}", run.dir.display());
    Ok(())
}

fn cmd_sweep(args: &ConfigArgs, decoders: &[String], paired: &[String], weights: Option<&Path>) -> Result<()> {
    let run = Run::open(args, "eval-sweep")?;
    let cfg = &run.cfg;
    let code = cfg.build_code()?;
    let reservoir = cfg.build_reservoir(&code)?;
    let rows = if !paired.is_empty() {
        let ds = build_decoders(cfg, &code, paired, weights)?;
        run_sweep(&code, &ds, &cfg.eval.sweep, &reservoir)?.rows()
    } else {
        let names = if decoders.is_empty() { &cfg.eval.decoders } else { decoders };
        let mut rows = Vec::new();
        for d in build_decoders(cfg, &code, names, weights)? {
            rows.extend(run_sweep(&code, std::slice::from_ref(&d), &cfg.eval.sweep, &reservoir)?.rows());
        }
        rows
    };
    write_sweep_rows(run.path("sweep.csv"), &rows)?;
    print_sweep(&rows);
    println!("run directory: {}", run.dir.display());
    Ok(())
}

fn cmd_timing(args: &ConfigArgs, decoders: &[String], weights: Option<&Path>) -> Result<()> {
    let run = Run::open(args, "timing")?;
    let cfg = &run.cfg;
    let code = cfg.build_code()?;
    let reservoir = cfg.build_reservoir(&code)?;
    let names = if decoders.is_empty() { &cfg.timing.decoders } else { decoders };
    let ds = build_decoders(cfg, &code, names, weights)?;
    let sweep = SweepConfig::new(cfg.timing.snr_db.clone(), StopRule::default(), cfg.timing.seed);
    let rows = run_timing(&code, &ds, &sweep, &reservoir, cfg.timing.frames, cfg.timing.warmup)?;
    write_timing_csv(run.path("timing.csv"), &rows)?;
    println!("{:<28} {:>6} {:>10} {:>10}", "decoder", "snr", "mean_us", "p95_us");
    for r in &rows {
        println!("{:<28} {:>6.2} {:>10.1} {:>10.1}", r.decoder, r.snr_db, r.mean_us, r.p95_us);
    }
    println!("run directory: {}", run.dir.display());
    Ok(())
}

fn cmd_probe(args: &ConfigArgs) -> Result<()> {
    let run = Run::open(args, "hessian-probe")?;
    let cfg = &run.cfg;
    let code = cfg.build_code()?;
    let reservoir = cfg.build_reservoir(&code)?;
    let no_l2 = TrainConfig {
        lambda: 0.0,
        ..cfg.train.clone()
    };
    let with_l2 = TrainConfig {
        lambda: cfg.probe.lambda,
        ..cfg.train.clone()
    };
    let report = probe_run(
        &code,
        &cfg.decoder,
        &no_l2,
        &with_l2,
        &reservoir,
        &cfg.probe.checkpoints,
        cfg.probe.seed,
    )?;
    write_probe_csv(run.path("probe.csv"), &report)?;
    write_eigenvalue_dump(run.path("eigenvalues.csv"), &report)?;
    write_history_csv(run.path("history_no_l2.csv"), &report.without_l2.history)?;
    write_history_csv(run.path("history_l2.csv"), &report.with_l2.history)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "epoch", "pos_no_l2", "pos_l2", "cond_no_l2", "cond_l2");
    for (a, b) in report.without_l2.spectra.iter().zip(&report.with_l2.spectra) {
        println!(
            "{:>6} {:>12.4} {:>12.4} {:>12.4e} {:>12.4e}",
            a.epoch, a.positive_ratio, b.positive_ratio, a.condition_number, b.condition_number
        );
    }
    println!("run directory: {}", run.dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::GenCode { m, t, form, out } => {
            let code = match form {
                Form::Systematic => build_bch_code(m, t)?,
                Form::Circulant => build_bch_code_circulant(m, t)?,
            };
            let text = to_alist(code.h());
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Train { cfg, init } => cmd_train(&cfg, init.as_deref()),
        Command::EvalSweep {
            cfg,
            decoders,
            paired,
            weights,
        } => cmd_sweep(&cfg, &decoders, &paired, weights.as_deref()),
        Command::Timing { cfg, decoders, weights } => cmd_timing(&cfg, &decoders, weights.as_deref()),
        Command::HessianProbe { cfg } => cmd_probe(&cfg),
        Command::DumpConfig { config, sets, out } => {
            let text = load_config(&config, &sets)?.to_toml()?;
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) | Error::NonFiniteGradient { .. } | Error::Diverged { .. } => 3,
        Error::Frame { source, .. } => exit_code(source),
        Error::Io(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, exit_code);
            ExitCode::from(code)
        }
    }
}
