//! Command-line front end. Every command reads its inputs, writes binary
//! blocks and a JSON report into the output directory, and prints the report.
//!
//! Exit codes: 0 success, 1 a validation that ran but failed, 2 usage or
//! input errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::carleson::{cmo_norm, generate_candidates, read_candidates, rectangle_energies, write_candidates};
use crate::config::ExperimentConfig;
use crate::corpus::{gen_corpus, write_corpus};
use crate::czd::{cz_decompose, hardy_type_norm};
use crate::error::{FlagError, Result};
use crate::filters::{build_compact_bank, build_filter_bank, FilterBank, FilterMode};
use crate::grid::{lp_norm_real, make_grid, read_block, SampledFunction};
use crate::kernels::{
    builtin, majorant_check, project_to_flag, validate_flag_kernel, validate_product_kernel, Geometry, KernelSpec,
    TruncatedOperator,
};
use crate::maximal::{hl_maximal, strong_maximal};
use crate::report::write_report;
use crate::squarefuncs::{g_flag, g_flag_discrete, pp_compare};
use crate::transform::{analyze, synthesize_discrete, CoefficientField};
use crate::verify::{run_suite, Suite, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "flaglp", version, about = "Flag Littlewood-Paley analysis on periodic grids")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to FLAGLP_JOBS, then all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Grid level: 2^L samples per axis.
    #[arg(long = "L", global = true)]
    level: Option<u32>,
    /// frequency-annulus or compact-spatial.
    #[arg(long, global = true)]
    mode: Option<FilterMode>,
    /// Vanishing moments of the compact bank.
    #[arg(long = "M0", global = true)]
    moment_order: Option<u32>,
    /// Sampling offset.
    #[arg(long = "N", global = true)]
    offset: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Neumann tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discrete analysis coefficients of a block.
    Analyze {
        input: PathBuf,
        /// Coefficient directory (default: <out>/coeffs).
        #[arg(long)]
        dump_coeffs: Option<PathBuf>,
    },
    /// Discrete synthesis from a coefficient directory.
    Synthesize { coeffs: PathBuf },
    /// Pointwise flag square function.
    Squarefunc {
        input: PathBuf,
        /// Piecewise-constant square function of the sampled coefficients.
        #[arg(long)]
        discrete: bool,
        /// Also compare sup and inf sampling against a bank of the other mode.
        #[arg(long)]
        pp: bool,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Discrete Hardy-type norm.
    HardyNorm {
        input: PathBuf,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Carleson-type norm over a candidate family.
    #[command(group(ArgGroup::new("family").required(true).args(["candidates", "auto_budget"])))]
    CmoNorm {
        input: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        auto_budget: Option<usize>,
    },
    /// Dyadic maximal functions.
    #[command(group(ArgGroup::new("family").required(true).args(["strong", "hl"])))]
    Maximal {
        input: PathBuf,
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        hl: bool,
    },
    /// Good/bad splitting at height alpha.
    CzDecompose {
        input: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
    },
    /// Kernel certification, projection and truncated convolution.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Built-in numerical self-checks.
    Verify {
        /// partition, plancherel, reproducing, remainder or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Seeded corpus of test functions.
    GenCorpus {
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct KernelArg {
    /// Built-in name or expression in x, y (and z).
    kernel: String,
    /// Geometry for expression kernels: flag, product or lifted-product.
    #[arg(long)]
    geometry: Option<Geometry>,
}

#[derive(Debug, Subcommand)]
enum KernelAction {
    Validate {
        #[command(flatten)]
        kernel: KernelArg,
        /// Check product instead of flag conditions.
        #[arg(long)]
        product: bool,
        /// Ladder samples per octave.
        #[arg(long, default_value_t = 2)]
        budget: usize,
    },
    Project {
        #[command(flatten)]
        kernel: KernelArg,
        /// Points as "x,y;x,y;...".
        #[arg(long, default_value = "1,0;1,1;0.5,-2;-0.25,0.75")]
        points: String,
    },
    Convolve {
        #[command(flatten)]
        kernel: KernelArg,
        input: PathBuf,
        /// Truncation radius in multiples of the grid spacing.
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Also fit the pointwise strong-maximal majorant constant.
        #[arg(long)]
        majorant: bool,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    ValidationFailed,
}

/// Runs the command line `argv` (including the program name) and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let jobs = cli
        .common
        .jobs
        .or_else(|| std::env::var("FLAGLP_JOBS").ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::ValidationFailed) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn resolve_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = c.n {
        cfg.n = v;
    }
    if let Some(v) = c.m {
        cfg.m = v;
    }
    if let Some(v) = c.level {
        cfg.level = v;
    }
    if let Some(v) = c.mode {
        cfg.mode = v;
    }
    if let Some(v) = c.moment_order {
        cfg.moment_order = v;
    }
    if let Some(v) = c.offset {
        cfg.offset = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.tol {
        cfg.tol = v;
    }
    if let Some(v) = &c.out {
        cfg.output = v.clone();
    }
    Ok(cfg)
}

/// Reads a block and adopts its grid into the config.
fn read_input(path: &Path, cfg: &mut ExperimentConfig) -> Result<SampledFunction> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| FlagError::Config(format!("cannot open input {}: {e}", path.display())))?;
    let block = read_block(&mut file)?;
    let grid = make_grid(block.n as usize, block.m as usize, u32::from(block.level))?;
    cfg.adopt_grid(grid);
    SampledFunction::new(grid, block.values)
}

fn write_function(path: &Path, f: &SampledFunction) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, f.to_block_bytes())?;
    Ok(())
}

fn emit<T: Serialize>(cfg: &ExperimentConfig, command: &str, result: &T) -> Result<()> {
    let path = cfg.output.join(format!("{command}.json"));
    let text = write_report(&path, command, cfg, result)?;
    print!("{text}");
    Ok(())
}

fn resolve_kernel(arg: &KernelArg) -> Result<KernelSpec> {
    match builtin(&arg.kernel) {
        Ok(k) => Ok(k),
        Err(_) => KernelSpec::from_expression(&arg.kernel, arg.geometry),
    }
}

fn other_mode_bank(cfg: &ExperimentConfig, bank: &FilterBank) -> Result<FilterBank> {
    match cfg.mode {
        FilterMode::FrequencyAnnulus => build_compact_bank(bank.grid(), cfg.moment_order, cfg.offset),
        FilterMode::CompactSpatial => build_filter_bank(bank.grid(), ExperimentConfig::default().profile(), cfg.offset),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let mut cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Analyze { input, dump_coeffs } => {
            let f = read_input(input, &mut cfg)?;
            let bank = cfg.bank()?;
            let coeffs = analyze(&f, &bank, cfg.offset)?;
            let dir = dump_coeffs.clone().unwrap_or_else(|| cfg.output.join("coeffs"));
            coeffs.write_dir(&dir)?;
            let energy: f64 = coeffs
                .slots()
                .iter()
                .map(|s| s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * s.shape.cell_measure())
                .sum();
            emit(
                &cfg,
                "analyze",
                &json!({
                    "bank": bank.id(),
                    "entries": coeffs.entry_count(),
                    "weightedEnergy": energy,
                    "coeffs": dir.display().to_string(),
                }),
            )?;
        }
        Command::Synthesize { coeffs } => {
            let field = CoefficientField::read_dir(coeffs)?;
            cfg.adopt_grid(field.grid());
            cfg.offset = field.offset();
            let bank = cfg.bank()?;
            let f = synthesize_discrete(&field, &bank)?;
            let path = cfg.output.join("synthesized.bin");
            write_function(&path, &f)?;
            emit(
                &cfg,
                "synthesize",
                &json!({"bank": bank.id(), "l2Norm": f.l2_norm(), "output": path.display().to_string()}),
            )?;
        }
        Command::Squarefunc { input, discrete, pp, p } => {
            let f = read_input(input, &mut cfg)?;
            if let Some(p) = p {
                cfg.p = *p;
            }
            let bank = cfg.bank()?;
            let g = if *discrete {
                g_flag_discrete(&analyze(&f, &bank, cfg.offset)?.without_low_pass())
            } else {
                g_flag(&f, &bank)?
            };
            let path = cfg.output.join("squarefunc.bin");
            write_function(&path, &g)?;
            let vol = g.grid().cell_volume();
            let pp_report = if *pp {
                Some(pp_compare(
                    &f,
                    &bank,
                    &other_mode_bank(&cfg, &bank)?,
                    cfg.p,
                    cfg.offset,
                )?)
            } else {
                None
            };
            emit(
                &cfg,
                "squarefunc",
                &json!({
                    "discrete": discrete,
                    "p": cfg.p,
                    "lpNorm": lp_norm_real(&g.abs(), vol, cfg.p)?,
                    "ppreport": pp_report,
                    "output": path.display().to_string(),
                }),
            )?;
        }
        Command::HardyNorm { input, p } => {
            let f = read_input(input, &mut cfg)?;
            if let Some(p) = p {
                cfg.p = *p;
            }
            let bank = cfg.bank()?;
            let norm = hardy_type_norm(&f, &bank, cfg.p, cfg.offset)?;
            emit(&cfg, "hardy-norm", &json!({"p": cfg.p, "norm": norm}))?;
        }
        Command::CmoNorm {
            input,
            p,
            candidates,
            auto_budget,
        } => {
            let f = read_input(input, &mut cfg)?;
            if let Some(p) = p {
                cfg.p = *p;
            }
            let bank = cfg.bank()?;
            let family = match (candidates, auto_budget) {
                (Some(path), _) => read_candidates(path, f.grid())?,
                (None, Some(b)) => {
                    cfg.budget = *b;
                    let energies = rectangle_energies(&f, &bank, cfg.offset)?;
                    let sqrt = energies.map_entries(|_, _, _, v| num_complex::Complex64::new(v.re.sqrt(), 0.0));
                    let family = generate_candidates(&sqrt, *b)?;
                    std::fs::create_dir_all(&cfg.output)?;
                    write_candidates(&cfg.output.join("candidates.json"), &family, cfg.offset)?;
                    family
                }
                (None, None) => unreachable!("clap enforces one candidate source"),
            };
            let value = cmo_norm(&f, &bank, cfg.p, cfg.offset, &family)?;
            emit(
                &cfg,
                "cmo-norm",
                &json!({"p": cfg.p, "candidates": family.len(), "value": value}),
            )?;
        }
        Command::Maximal { input, strong, .. } => {
            let f = read_input(input, &mut cfg)?;
            let (name, mf) = if *strong {
                ("strong", strong_maximal(&f))
            } else {
                ("hl", hl_maximal(&f))
            };
            let path = cfg.output.join("maximal.bin");
            write_function(&path, &mf)?;
            let sup = mf.abs().into_iter().fold(0.0, f64::max);
            emit(
                &cfg,
                "maximal",
                &json!({"family": name, "sup": sup, "output": path.display().to_string()}),
            )?;
        }
        Command::CzDecompose {
            input,
            alpha,
            p,
            p1,
            p2,
        } => {
            let f = read_input(input, &mut cfg)?;
            for (slot, v) in [(&mut cfg.p, p), (&mut cfg.p1, p1), (&mut cfg.p2, p2)] {
                if let Some(v) = v {
                    *slot = *v;
                }
            }
            if alpha.is_some() {
                cfg.alpha = *alpha;
            }
            let alpha = cfg
                .alpha
                .ok_or_else(|| FlagError::Config("cz-decompose needs --alpha or alpha in the config".into()))?;
            let bank = cfg.bank()?;
            let cz = cz_decompose(&f, &bank, alpha, cfg.offset, cfg.p, cfg.p1, cfg.p2)?;
            write_function(&cfg.output.join("g.bin"), &cz.good)?;
            write_function(&cfg.output.join("b.bin"), &cz.bad)?;
            emit(&cfg, "cz-decompose", &cz.report)?;
        }
        Command::Kernel { action } => return kernel(action, &mut cfg),
        Command::Verify { suite, samples } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse()?]
            };
            let grid = cfg.grid()?;
            let make = |n: u32| {
                let mut c = cfg.clone();
                c.offset = n;
                c.bank_on(grid)
            };
            let opts = VerifyOptions {
                seed: cfg.seed,
                samples: *samples,
                neumann_tol: cfg.tol,
            };
            let reports = suites
                .iter()
                .map(|&s| run_suite(s, &make, cfg.offset, &opts))
                .collect::<Result<Vec<_>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            if let [single] = reports.as_slice() {
                emit(&cfg, "verify", single)?;
            } else {
                emit(&cfg, "verify", &json!({"passed": passed, "suites": reports}))?;
            }
            if !passed {
                return Ok(Outcome::ValidationFailed);
            }
        }
        Command::GenCorpus { count } => {
            if let Some(c) = count {
                cfg.count = *c;
            }
            let bank = cfg.bank()?;
            let items = gen_corpus(&bank, cfg.count, cfg.seed)?;
            let manifest = write_corpus(&cfg.output.join("corpus"), &bank, cfg.seed, &items)?;
            emit(&cfg, "gen-corpus", &manifest)?;
        }
    }
    Ok(Outcome::Ok)
}

fn parse_points(text: &str) -> Result<Vec<[f64; 2]>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let v: Vec<f64> = pair
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| FlagError::Config(format!("bad point '{pair}'")))?;
            match v.as_slice() {
                [x, y] => Ok([*x, *y]),
                _ => Err(FlagError::Config(format!("point '{pair}' needs two coordinates"))),
            }
        })
        .collect()
}

fn kernel(action: &KernelAction, cfg: &mut ExperimentConfig) -> Result<Outcome> {
    match action {
        KernelAction::Validate {
            kernel,
            product,
            budget,
        } => {
            let k = resolve_kernel(kernel)?;
            let report = if *product || k.dim() != 2 {
                validate_product_kernel(&k, *budget)?
            } else {
                validate_flag_kernel(&k, *budget)?
            };
            emit(cfg, "kernel-validate", &report)?;
            if !report.passes {
                return Ok(Outcome::ValidationFailed);
            }
        }
        KernelAction::Project { kernel, points } => {
            let k = project_to_flag(&resolve_kernel(kernel)?)?;
            let rows = parse_points(points)?
                .into_iter()
                .map(|p| {
                    let v = k.eval(&p)?;
                    Ok(json!({"x": p[0], "y": p[1], "re": v.re, "im": v.im}))
                })
                .collect::<Result<Vec<_>>>()?;
            emit(cfg, "kernel-project", &json!({"kernel": k.name(), "values": rows}))?;
        }
        KernelAction::Convolve {
            kernel,
            input,
            eps,
            majorant,
        } => {
            let k = resolve_kernel(kernel)?;
            let f = read_input(input, cfg)?;
            let grid = f.grid();
            cfg.eps = Some(*eps);
            let op = TruncatedOperator::new(grid, &k, eps * grid.spacing())?;
            let out = op.apply(&f)?;
            let m = if *majorant {
                Some(majorant_check(&f, &op, &cfg.bank()?)?)
            } else {
                None
            };
            write_function(&cfg.output.join("convolved.bin"), &out)?;
            emit(cfg, "kernel-convolve", &op.report(m.as_ref())?)?;
        }
    }
    Ok(Outcome::Ok)
}
