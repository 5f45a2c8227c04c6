//! `cvxband`: confidence bands for convex or concave median regression.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convex_band::{
    compute_band, gen_sim_data, ApproxOptions, BandError, BandMode, BandResult, KappaRecord,
    KappaRequest, KappaSource, KappaTable, Shape, SimConfig, SortedDataset, DEFAULT_N_SIMS,
};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error(transparent)]
    Band(#[from] BandError),
}

#[derive(Parser, Debug)]
#[command(name = "cvxband", version, about = "Confidence bands for convex or concave median regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a band from an "x,y" CSV file.
    Band(BandArgs),
    /// Fill a critical value table.
    Calibrate(CalibrateArgs),
    /// Write a simulated data set from the piecewise quadratic design.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Convex,
    Concave,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
}

#[derive(Args, Debug)]
struct BandArgs {
    /// Input CSV with header "x,y"; "-" reads standard input.
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Convex)]
    shape: ShapeArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Approx)]
    mode: ModeArg,
    /// Number of slope segments M for approximate mode.
    #[arg(long = "slopes", default_value_t = 100)]
    slopes: usize,
    #[arg(long = "mc-sims", default_value_t = DEFAULT_N_SIMS)]
    mc_sims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Critical value cache; missing entries are simulated and appended.
    #[arg(long = "kappa-table")]
    kappa_table: Option<PathBuf>,
    /// Use this critical value instead of simulating one.
    #[arg(long)]
    kappa: Option<f64>,
    /// Band CSV destination; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON diagnostics destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    #[arg(long = "mc-sims", default_value_t = DEFAULT_N_SIMS)]
    mc_sims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "kappa-table", required = true)]
    kappa_table: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut s = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut s).map_err(io_err(path))?;
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut s)).map_err(io_err(path))?;
    }
    Ok(s)
}

/// Parse "x,y" CSV text, sorting rows by `x` and keeping ties in input order.
fn ingest(text: &str) -> Result<SortedDataset<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(CliError::Parse { line: 1, message: "expected header \"x,y\"".into() });
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::Parse { line, message: format!("expected 2 fields, found {}", rec.len()) });
        }
        let num = |s: &str, name: &str| -> Result<f64, CliError> {
            let v: f64 = s
                .parse()
                .map_err(|_| CliError::Parse { line, message: format!("{name}: cannot parse {s:?}") })?;
            if !v.is_finite() {
                return Err(CliError::Parse { line, message: format!("{name}: value must be finite") });
            }
            Ok(v)
        };
        xs.push(num(&rec[0], "x")?);
        ys.push(num(&rec[1], "y")?);
    }
    if xs.is_empty() {
        return Err(CliError::EmptyInput);
    }
    Ok(SortedDataset::from_unsorted(xs, ys)?)
}

/// Six significant digits, `inf` and `-inf` for infinities.
fn fmt_sig6(v: f64) -> String {
    if v == f64::INFINITY {
        return "inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn write_band_csv(out: &mut dyn Write, data: &SortedDataset<f64>, band: &BandResult<f64>) -> io::Result<()> {
    writeln!(out, "x,lower,upper")?;
    for (i, &x) in data.x().iter().enumerate() {
        let (l, u) = if band.feasible {
            (band.lower[i], band.upper[i])
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        };
        writeln!(out, "{},{},{}", fmt_sig6(x), fmt_sig6(l), fmt_sig6(u))?;
    }
    Ok(())
}

/// JSON number, or the strings "inf"/"-inf" for infinities.
#[derive(Serialize)]
#[serde(untagged)]
enum Ext {
    Num(f64),
    Str(&'static str),
}

impl From<f64> for Ext {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Ext::Str("inf")
        } else if v == f64::NEG_INFINITY {
            Ext::Str("-inf")
        } else {
            Ext::Num(v)
        }
    }
}

#[derive(Serialize)]
struct Report {
    n: usize,
    alpha: f64,
    kappa: f64,
    mode: BandMode,
    shape: Shape,
    feasible: bool,
    x_min: Ext,
    x_max: Ext,
    runtime_ms: f64,
}

fn run_band(args: &BandArgs) -> Result<bool, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} outside (0, 1)", args.alpha)));
    }
    if args.slopes == 0 {
        return Err(CliError::Usage("--slopes must be at least 1".into()));
    }
    if args.mc_sims == 0 {
        return Err(CliError::Usage("--mc-sims must be at least 1".into()));
    }
    let start = Instant::now();
    let data = ingest(&read_input(&args.input)?)?;
    let mut table = match &args.kappa_table {
        Some(p) => Some(KappaTable::open(p)?),
        None => None,
    };
    let mut source = match (args.kappa, table.as_mut()) {
        (Some(k), _) => KappaSource::Fixed(k),
        (None, Some(t)) => KappaSource::Table { table: t, n_sims: args.mc_sims, seed: args.seed },
        (None, None) => KappaSource::Simulate { n_sims: args.mc_sims, seed: args.seed },
    };
    let shape = match args.shape {
        ShapeArg::Convex => Shape::Convex,
        ShapeArg::Concave => Shape::Concave,
    };
    let mode = match args.mode {
        ModeArg::Exact => BandMode::Exact,
        ModeArg::Approx => BandMode::Approx,
    };
    let opts = ApproxOptions { segments: args.slopes, grid_seed: args.seed, ..ApproxOptions::default() };
    let band = compute_band(&data, args.alpha, shape, mode, &mut source, &opts)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    match &args.out {
        Some(p) => {
            let mut f = io::BufWriter::new(File::create(p).map_err(io_err(p))?);
            write_band_csv(&mut f, &data, &band).and_then(|_| f.flush()).map_err(io_err(p))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_band_csv(&mut lock, &data, &band).map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    if let Some(p) = &args.report {
        let report = Report {
            n: data.len(),
            alpha: args.alpha,
            kappa: band.kappa,
            mode,
            shape,
            feasible: band.feasible,
            x_min: band.x_min.into(),
            x_max: band.x_max.into(),
            runtime_ms,
        };
        let text = serde_json::to_string_pretty(&report).expect("report serialises");
        std::fs::write(p, text + "\n").map_err(io_err(p))?;
    }
    if !band.feasible {
        eprintln!("convexity is not plausible at level {}: the confidence set is empty", args.alpha);
    }
    Ok(band.feasible)
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let mut table = KappaTable::open(&args.kappa_table)?;
    for &n in &args.n {
        for &alpha in &args.alpha {
            let req = KappaRequest::new(n, alpha, args.mc_sims, args.seed)?;
            let kappa = match table.lookup(&req) {
                Some(k) => k,
                None => {
                    let k = convex_band::calibration::compute_kappa(&req)?;
                    table.insert(KappaRecord { n, alpha, kappa: k, n_sims: args.mc_sims, seed: args.seed })?;
                    k
                }
            };
            println!("n={n} alpha={alpha} kappa={kappa:.6}");
        }
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = SimConfig { seed: args.seed, ..SimConfig::reference(args.n, BandMode::Approx) };
    let (data, _) = gen_sim_data(&cfg, 0)?;
    let mut text = String::from("x,y\n");
    for (x, y) in data.x().iter().zip(data.y()) {
        text.push_str(&format!("{x},{y}\n"));
    }
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p))?,
        None => print!("{text}"),
    }
    Ok(())
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
    let result = match &cli.command {
        Command::Band(a) => run_band(a).map(|feasible| if feasible { 0 } else { 2 }),
        Command::Calibrate(a) => run_calibrate(a).map(|_| 0),
        Command::Simulate(a) => run_simulate(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
