//! `modcurv` — operator front end: run verification suites, evaluate
//! registered functions at exact rational points, export grid data, and run
//! structural (rank / kernel) analysis.
//!
//! Exit codes: 0 = success / all relations pass; 1 = load or configuration
//! error; 2 = verification failure.

use clap::{Args, Parser, Subcommand};
use modcurv::eval::{self, default_directions};
use modcurv::registry::Registry;
use modcurv::relations::{self, fmt_float, SampleConfig};
use modcurv::structure;
use rug::Rational;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::exit;

#[derive(Parser)]
#[command(name = "modcurv", version, about = "verification engine front end")]
struct Cli {
    #[command(flatten)]
    cfg: Config,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Config {
    /// Corpus directory (default: $MODCURV_CORPUS or ./corpus)
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Relations directory (default: ./relations)
    #[arg(long, global = true, default_value = "relations")]
    relations: PathBuf,
    /// Working precision in bits
    #[arg(long, global = true, default_value_t = 256)]
    precision: u32,
    /// Relative tolerance for relation residuals
    #[arg(long, global = true, default_value = "1e-35")]
    tol: String,
    /// Sample points per relation
    #[arg(long, global = true, default_value_t = 20)]
    samples: usize,
    /// PRNG seed (splitmix64 substreams per relation id)
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for point evaluation (output is order-independent)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a relation suite and emit the JSON report
    Verify {
        /// Suite tag (file stem under the relations directory)
        #[arg(long)]
        suite: String,
    },
    /// Evaluate a registered function at an exact rational point
    Eval {
        name: String,
        /// Point coordinates as exact rationals ("3/4", "-1/2", "2")
        point: Vec<String>,
        /// Force a directional limit along generic direction 1 or 2
        #[arg(long)]
        limit_dir: Option<usize>,
    },
    /// Export a CSV grid of (point, value) rows
    Export {
        name: String,
        /// Per-variable grid spec "min:max:steps", repeated per variable
        #[arg(long, required = true)]
        grid: Vec<String>,
    },
    /// Monomial lattice and smoothness rank/kernel analysis
    Structure {
        name: String,
        /// Emit the exponent lattice CSV instead of the JSON report
        #[arg(long)]
        exponents: bool,
    },
    /// List registered functions
    List,
}

fn load_registry(cfg: &Config) -> Result<Registry, String> {
    let dir = cfg
        .corpus
        .clone()
        .or_else(|| std::env::var_os("MODCURV_CORPUS").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("corpus"));
    modcurv::corpus::load_corpus(&dir).map_err(|e| format!("corpus load failed: {}", e))
}

fn emit(cfg: &Config, text: &str) -> Result<(), String> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {}", path.display(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| format!("stdout write failed: {}", e))
        }
    }
}

fn parse_point(coords: &[String]) -> Result<Vec<Rational>, String> {
    coords
        .iter()
        .map(|s| {
            Rational::parse(s)
                .map(Rational::from)
                .map_err(|_| format!("not an exact rational: {:?}", s))
        })
        .collect()
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.cfg.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            exit(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {}", e);
            exit(1);
        }
    }
    let code = run(&cli);
    exit(code);
}

fn run(cli: &Cli) -> i32 {
    let cfg = &cli.cfg;
    let reg = match load_registry(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return 1;
        }
    };
    match &cli.cmd {
        Cmd::Verify { suite } => {
            let specs = match relations::load_relations(&cfg.relations, &reg) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: relations load failed: {}", e);
                    return 1;
                }
            };
            let scfg = SampleConfig {
                samples: cfg.samples,
                seed: cfg.seed,
                precision: cfg.precision,
                tolerance: cfg.tol.clone(),
                ..SampleConfig::default()
            };
            let report = match relations::verify_suite(suite, &specs, &scfg, &reg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return 1;
                }
            };
            let mut text = serde_json::to_string_pretty(&report.json).expect("serializable");
            text.push('\n');
            if let Err(e) = emit(cfg, &text) {
                eprintln!("error: {}", e);
                return 1;
            }
            if report.all_pass {
                0
            } else {
                2
            }
        }
        Cmd::Eval {
            name,
            point,
            limit_dir,
        } => {
            let point = match parse_point(point) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return 1;
                }
            };
            let def = match reg.resolve(name) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return 1;
                }
            };
            if point.len() != def.arity {
                eprintln!(
                    "error: {} expects {} coordinate(s), got {}",
                    name,
                    def.arity,
                    point.len()
                );
                return 1;
            }
            let result = match limit_dir {
                Some(i) => {
                    let dirs = default_directions();
                    if *i < 1 || *i > dirs.len() {
                        eprintln!("error: --limit-dir must be 1 or 2");
                        return 1;
                    }
                    eval::limit_eval(
                        &def.body,
                        &point,
                        &dirs[i - 1][..point.len()],
                        &reg,
                        cfg.precision,
                    )
                }
                None => eval::evaluate_name(name, &point, &reg, cfg.precision),
            };
            match result {
                Ok(v) => {
                    if let Err(e) = emit(cfg, &format!("{}\n", fmt_float(&v))) {
                        eprintln!("error: {}", e);
                        return 1;
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    2
                }
            }
        }
        Cmd::Export { name, grid } => {
            let def = match reg.resolve(name) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return 1;
                }
            };
            if grid.len() != def.arity {
                eprintln!(
                    "error: {} needs {} --grid spec(s), got {}",
                    name,
                    def.arity,
                    grid.len()
                );
                return 1;
            }
            let mut axes: Vec<Vec<Rational>> = Vec::new();
            for spec in grid {
                match parse_grid_axis(spec) {
                    Ok(axis) => axes.push(axis),
                    Err(e) => {
                        eprintln!("error: bad --grid {:?}: {}", spec, e);
                        return 1;
                    }
                }
            }
            let total: usize = axes.iter().map(Vec::len).product();
            if total == 0 || total > 1_000_000 {
                eprintln!("error: grid size {} out of budget (1..=1000000)", total);
                return 1;
            }
            let mut csv = String::new();
            for i in 1..=def.arity {
                csv.push_str(&format!("s{},", i));
            }
            csv.push_str("value\n");
            let mut idx = vec![0usize; axes.len()];
            loop {
                let point: Vec<Rational> =
                    idx.iter().zip(&axes).map(|(&i, ax)| ax[i].clone()).collect();
                let val = eval::evaluate_name(name, &point, &reg, cfg.precision);
                for q in &point {
                    csv.push_str(&q.to_string());
                    csv.push(',');
                }
                match val {
                    Ok(v) => csv.push_str(&fmt_float(&v)),
                    Err(_) => csv.push_str("nan"),
                }
                csv.push('\n');
                // Odometer increment over the axes.
                let mut k = axes.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX {
                    break;
                }
            }
            if let Err(e) = emit(cfg, &csv) {
                eprintln!("error: {}", e);
                return 1;
            }
            0
        }
        Cmd::Structure { name, exponents } => {
            let budget = structure::Budget::default();
            let report = match structure::analyze(name, &reg, &budget) {
                Ok(r) => r,
                Err(structure::StructError::SizeBudget) => {
                    eprintln!("skipped: size");
                    return 1;
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    return 1;
                }
            };
            let text = if *exponents {
                structure::table_csv(&report.table)
            } else {
                let mut t =
                    serde_json::to_string_pretty(&structure::report_json(&report)).unwrap();
                t.push('\n');
                t
            };
            if let Err(e) = emit(cfg, &text) {
                eprintln!("error: {}", e);
                return 1;
            }
            0
        }
        Cmd::List => {
            let mut text = String::new();
            for name in reg.names() {
                let def = reg.resolve(&name).expect("listed name resolves");
                text.push_str(&format!("{}/{} [{}]\n", name, def.arity, def.origin));
            }
            if let Err(e) = emit(cfg, &text) {
                eprintln!("error: {}", e);
                return 1;
            }
            0
        }
    }
}

/// Parse "min:max:steps" into `steps` evenly spaced exact rationals
/// (inclusive of both endpoints when steps > 1).
fn parse_grid_axis(spec: &str) -> Result<Vec<Rational>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err("expected min:max:steps".into());
    }
    let min = Rational::parse(parts[0])
        .map(Rational::from)
        .map_err(|_| "bad min".to_string())?;
    let max = Rational::parse(parts[1])
        .map(Rational::from)
        .map_err(|_| "bad max".to_string())?;
    let steps: usize = parts[2].parse().map_err(|_| "bad steps".to_string())?;
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let span = Rational::from(&max - &min);
    Ok((0..steps)
        .map(|i| {
            Rational::from(&span * Rational::from((i as i64, (steps - 1) as i64))) + min.clone()
        })
        .collect())
}
