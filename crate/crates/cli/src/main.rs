//! `colored-shuffle`: spectra, distance curves, simulation and identity checks
//! for the colored top-to-random shuffle.

use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use colored_shuffle::mixing::{self, CurveMode, LowerBoundOptions, TVCurve};
use colored_shuffle::simulate::{self, ChainConfig};
use colored_shuffle::spectral::{self, SpectrumMethod, SpectrumReport};
use colored_shuffle::stirling::{StirlingKind, StirlingTable};
use colored_shuffle::verify::{self, Fault, Suite, VerifyOptions};
use colored_shuffle::{colored_group, Error, ErrorKind};
use num_bigint::BigUint;
use serde::Serialize;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const MANIFEST_VERSION: u32 = 1;

#[derive(Parser, Serialize)]
#[command(name = "colored-shuffle", version, about = "Exact analysis of the colored top-to-random shuffle")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Significant digits of printed decimals.
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Eigenvalues and multiplicities of the transition operator.
    Spectrum(SpectrumArgs),
    /// Exact total-variation distance to uniform after k shuffles.
    Tvd(TvdArgs),
    /// Distance curve at k = floor(n ln n + c n) over a grid of c.
    Cutoff(CutoffArgs),
    /// Monte Carlo run of the card process against the exact distance.
    Simulate(SimulateArgs),
    /// Stirling number tables.
    #[command(subcommand)]
    Stirling(StirlingCommand),
    /// Exact identity battery over all small groups.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: u32,
    /// formula, trace or charpoly.
    #[arg(long, default_value = "formula")]
    method: SpectrumMethod,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
    /// Largest group order accepted by the charpoly method.
    #[arg(long, default_value_t = spectral::DEFAULT_MATRIX_CAP)]
    cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct TvdArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: u32,
    #[arg(long, conflicts_with_all = ["kmin", "kmax"], required_unless_present_all = ["kmin", "kmax"])]
    k: Option<usize>,
    #[arg(long, requires = "kmax")]
    kmin: Option<usize>,
    #[arg(long, requires = "kmin")]
    kmax: Option<usize>,
    /// exact or logspace (default: exact up to n = 200).
    #[arg(long)]
    mode: Option<CurveMode>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CutoffArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    cmin: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    cmax: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// exact or logspace (default: exact up to n = 200).
    #[arg(long)]
    mode: Option<CurveMode>,
    /// Allowed gap between the distance and 1 - exp(-e^{-c}) for c >= 0.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
    /// Exponent slack in the below-cutoff bound 1 - n^-(1/2 - delta).
    #[arg(long, default_value_t = LowerBoundOptions::default().delta)]
    delta: f64,
    /// Largest c_n / ln n treated as inside the below-cutoff window.
    #[arg(long, default_value_t = LowerBoundOptions::default().ratio)]
    window_ratio: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: u32,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest group order for which the empirical distance is computed.
    #[arg(long, default_value_t = colored_group::DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    /// Also write the final-deck histogram (`word,count`) here.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StirlingCommand {
    /// Writes `k,a,value` rows.
    Export(StirlingArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    First,
    Second,
}

#[derive(Args, Serialize)]
struct StirlingArgs {
    #[arg(long, value_enum, default_value_t = Kind::Second)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    kmin: usize,
    #[arg(long)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    amin: usize,
    /// Defaults to kmax.
    #[arg(long)]
    amax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    #[arg(long, default_value_t = 2)]
    p_max: u32,
    /// algebra, spectral, mixing or all.
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Groups larger than this are skipped.
    #[arg(long, default_value_t = VerifyOptions::default().max_order)]
    max_order: u64,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corrupts the Stirling entry `K:A` before checking (harness self-test).
    #[arg(long, hide = true, value_parser = parse_fault)]
    inject_stirling_fault: Option<(usize, usize)>,
}

fn parse_fault(s: &str) -> Result<(usize, usize), String> {
    let (k, a) = s.split_once(':').ok_or("expected K:A")?;
    Ok((
        k.parse().map_err(|e| format!("{e}"))?,
        a.parse().map_err(|e| format!("{e}"))?,
    ))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    manifest_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'static str,
    parameters: &'a Cli,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng_algorithm: Option<&'static str>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<String>,
    notes: Vec<String>,
    exit_code: u8,
}

enum Failure {
    Core(Error),
    Io(PathBuf, io::Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Resource => EXIT_RESOURCE,
                ErrorKind::Internal => EXIT_VERIFY,
            },
            Failure::Io(..) => EXIT_RESOURCE,
            Failure::Verify => EXIT_VERIFY,
        }
    }
}

/// Collects what a command wrote and what it wants to tell the user.
#[derive(Default)]
struct Run {
    outputs: Vec<String>,
    notes: Vec<String>,
    rng: Option<&'static str>,
}

impl Run {
    fn note(&mut self, msg: String) {
        eprintln!("{} {msg}", paint("note:", "33"));
        self.notes.push(msg);
    }

    /// Writes to `out` (or stdout) through `body`.
    fn emit<F>(&mut self, out: Option<&Path>, body: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        match out {
            Some(path) => {
                let file = File::create(path).map_err(|e| Failure::Io(path.into(), e))?;
                let mut w = BufWriter::new(file);
                body(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| Failure::Io(path.into(), e))?;
                self.outputs.push(path.display().to_string());
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                body(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| Failure::Io("<stdout>".into(), e))?;
                self.outputs.push("<stdout>".into());
            }
        }
        Ok(())
    }
}

fn color_enabled(terminal: bool) -> bool {
    terminal && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}

/// ANSI-colored `text` for stderr.
fn paint(text: &str, code: &str) -> String {
    paint_if(io::stderr().is_terminal(), text, code)
}

fn paint_if(terminal: bool, text: &str, code: &str) -> String {
    if color_enabled(terminal) {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = now_ms();
    let mut run = Run::default();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("{} could not size the thread pool: {e}", paint("warning:", "33"));
        }
    }
    let result = dispatch(&cli, &mut run);
    let code = match &result {
        Ok(()) => 0,
        Err(f) => f.exit_code(),
    };
    match result {
        Ok(()) | Err(Failure::Verify) => {}
        Err(Failure::Core(e)) => eprintln!("{} {e}", paint("error:", "31")),
        Err(Failure::Io(path, e)) => {
            eprintln!("{} cannot write {}: {e}", paint("error:", "31"), path.display())
        }
    }
    let manifest = RunManifest {
        manifest_version: MANIFEST_VERSION,
        tool: "colored-shuffle",
        tool_version: colored_shuffle::VERSION,
        command: command_name(&cli.command),
        parameters: &cli,
        rng_algorithm: run.rng,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: run.outputs,
        notes: run.notes,
        exit_code: code,
    };
    write_manifest(&manifest, command_out(&cli.command));
    ExitCode::from(code)
}

fn write_manifest(manifest: &RunManifest<'_>, out: Option<&Path>) {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    match out {
        Some(path) => {
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            if let Err(e) = std::fs::write(&name, text + "\n") {
                eprintln!("{} cannot write manifest: {e}", paint("warning:", "33"));
            }
        }
        None => eprintln!("manifest: {}", serde_json::to_string(manifest).expect("manifest serializes")),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum(_) => "spectrum",
        Command::Tvd(_) => "tvd",
        Command::Cutoff(_) => "cutoff",
        Command::Simulate(_) => "simulate",
        Command::Stirling(_) => "stirling export",
        Command::Verify(_) => "verify",
    }
}

fn command_out(c: &Command) -> Option<&Path> {
    match c {
        Command::Spectrum(a) => a.out.as_deref(),
        Command::Tvd(a) => a.out.as_deref(),
        Command::Cutoff(a) => a.out.as_deref(),
        Command::Simulate(a) => a.out.as_deref(),
        Command::Stirling(StirlingCommand::Export(a)) => a.out.as_deref(),
        Command::Verify(a) => a.out.as_deref(),
    }
}

fn dispatch(cli: &Cli, run: &mut Run) -> Result<(), Failure> {
    let digits = cli.precision.max(1);
    match &cli.command {
        Command::Spectrum(a) => spectrum(a, run),
        Command::Tvd(a) => tvd(a, digits, run),
        Command::Cutoff(a) => cutoff(a, digits, run),
        Command::Simulate(a) => simulate_cmd(a, cli.threads, digits, run),
        Command::Stirling(StirlingCommand::Export(a)) => stirling_export(a, run),
        Command::Verify(a) => verify_cmd(a, run),
    }
}

fn p_hypothesis_note(p: u32, run: &mut Run) {
    if p == 1 {
        run.note("p = 1 is the uncolored chain; the upper bound is only claimed for p >= 2".into());
    }
}

fn spectrum(a: &SpectrumArgs, run: &mut Run) -> Result<(), Failure> {
    let report = spectral::multiplicity_report_with_cap(a.n, a.p, a.method, a.cap)?;
    run.emit(a.out.as_deref(), |w| match a.format {
        TextFormat::Json => writeln!(w, "{}", report.to_json()),
        TextFormat::Text => write_spectrum_text(w, &report),
    })
}

fn write_spectrum_text(w: &mut dyn Write, r: &SpectrumReport) -> io::Result<()> {
    writeln!(w, "n = {}, p = {}, method = {}", r.n, r.p, r.method.as_str())?;
    writeln!(w, "eigenvalue,i,multiplicity")?;
    for e in &r.eigenvalues {
        writeln!(w, "{},{},{}", e.value, e.i, e.multiplicity)?;
    }
    writeln!(w, "total = {}", r.total_multiplicity())?;
    let poly = r.char_poly.clone().unwrap_or_else(|| r.factored_string());
    writeln!(w, "char_poly = {poly}")
}

fn write_curve(w: &mut dyn Write, curve: &TVCurve, format: TableFormat, digits: usize) -> io::Result<()> {
    match format {
        TableFormat::Csv => curve.write_csv(w, digits),
        TableFormat::Json => writeln!(w, "{}", curve.to_json()),
    }
}

fn tvd(a: &TvdArgs, digits: usize, run: &mut Run) -> Result<(), Failure> {
    let mode = a.mode.unwrap_or_else(|| CurveMode::default_for(a.n));
    let (lo, hi) = match (a.k, a.kmin, a.kmax) {
        (Some(k), _, _) => (k, k),
        (None, Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::invalid("give --k or both --kmin and --kmax").into()),
    };
    if lo > hi {
        run.note(format!("kmin = {lo} exceeds kmax = {hi}; no records"));
    }
    p_hypothesis_note(a.p, run);
    let curve = mixing::curve_k_range(a.n, a.p, lo, hi, mode)?;
    for r in &curve.records {
        mixing::check_record(r)?;
    }
    if let Some(w) = curve.records.windows(2).find(|w| w[1].tv > w[0].tv) {
        return Err(Error::Internal(format!(
            "distance increased from k = {} to k = {}",
            w[0].k, w[1].k
        ))
        .into());
    }
    run.emit(a.out.as_deref(), |w| write_curve(w, &curve, a.format, digits))
}

#[derive(Serialize)]
struct CutoffReport<'a> {
    curve: &'a TVCurve,
    tolerance: f64,
    lower_bounds: Vec<mixing::LowerBoundRecord>,
}

fn cutoff(a: &CutoffArgs, digits: usize, run: &mut Run) -> Result<(), Failure> {
    let mode = a.mode.unwrap_or_else(|| CurveMode::default_for(a.n));
    let cs = mixing::c_grid(a.cmin, a.cmax, a.step)?;
    if cs.is_empty() {
        eprintln!(
            "{} cmin = {} exceeds cmax = {}; nothing to compute",
            paint("warning:", "33"),
            a.cmin,
            a.cmax
        );
        run.notes.push("empty c grid".into());
    }
    p_hypothesis_note(a.p, run);
    let opts = LowerBoundOptions {
        delta: a.delta,
        ratio: a.window_ratio,
    };
    let mut curve = mixing::curve_c_grid(a.n, a.p, &cs, mode)?;
    let mut lower_bounds = Vec::new();
    for r in curve.records.iter_mut() {
        if r.c >= 0.0 {
            let gap = (r.tv - r.tv_limit).abs();
            if gap > a.tolerance {
                run.note(format!(
                    "c = {}: |tv - limit| = {} exceeds tolerance {}",
                    r.c,
                    colored_shuffle::real::format_significant(gap, digits.min(6)),
                    a.tolerance
                ));
            }
        } else if mixing::in_window(a.n, a.p, -r.c, &opts) {
            let lb = mixing::cutoff_lower(a.n, a.p, -r.c, mode, &opts)?;
            r.lower_bound_flag = Some(lb.passes);
            lower_bounds.push(lb);
        }
    }
    run.emit(a.out.as_deref(), |w| match a.format {
        TableFormat::Csv => curve.write_csv(w, digits),
        TableFormat::Json => {
            let report = CutoffReport {
                curve: &curve,
                tolerance: a.tolerance,
                lower_bounds,
            };
            writeln!(w, "{}", serde_json::to_string(&report).expect("report serializes"))
        }
    })
}

fn simulate_cmd(a: &SimulateArgs, threads: Option<usize>, digits: usize, run: &mut Run) -> Result<(), Failure> {
    run.rng = Some(simulate::RNG_ALGORITHM);
    let order = colored_group::group_order(a.n.max(1), a.p.max(1));
    if order > BigUint::from(a.cap) {
        return Err(Error::cap(
            "comparing against the exact distribution",
            format!("{order} group elements"),
            a.cap,
            Some("raise --cap"),
        )
        .into());
    }
    let config = ChainConfig {
        n: a.n,
        p: a.p,
        k: a.k,
        trials: a.trials,
        seed: a.seed,
    };
    let (summary, dist) = simulate::summarize(&config, threads)?;
    if let Some(path) = &a.histogram {
        run.emit(Some(path), |w| dist.write_histogram(w))?;
    }
    let f = |x: f64| colored_shuffle::real::format_significant(x, digits);
    run.emit(a.out.as_deref(), |w| {
        writeln!(w, "{}", simulate::CSV_HEADER)?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            summary.k,
            summary.trials,
            summary.seed,
            f(summary.empirical_tv),
            f(summary.exact_tv),
            f(summary.abs_error)
        )
    })
}

fn stirling_export(a: &StirlingArgs, run: &mut Run) -> Result<(), Failure> {
    let kind = match a.kind {
        Kind::First => StirlingKind::First,
        Kind::Second => StirlingKind::Second,
    };
    let amax = a.amax.unwrap_or(a.kmax);
    let table = StirlingTable::new(kind, a.kmax, amax)?;
    run.emit(a.out.as_deref(), |w| table.write_csv(w, a.kmin..=a.kmax, a.amin..=amax))
}

fn verify_cmd(a: &VerifyArgs, run: &mut Run) -> Result<(), Failure> {
    let opts = VerifyOptions {
        n_max: a.n_max,
        p_max: a.p_max,
        suite: a.suite,
        max_order: a.max_order,
        fault: a.inject_stirling_fault.map(|(k, a)| Fault::Stirling2 { k, a }),
        ..VerifyOptions::default()
    };
    if opts.fault.is_some() {
        run.note("a Stirling entry was deliberately corrupted".into());
    }
    let report = verify::run(&opts)?;
    let terminal = a.out.is_none() && io::stdout().is_terminal();
    run.emit(a.out.as_deref(), |w| match a.format {
        TextFormat::Json => writeln!(w, "{}", report.to_json()),
        TextFormat::Text => {
            for line in report.summary().lines() {
                let line = match line.split_once(' ') {
                    Some(("ok", rest)) => format!("{} {rest}", paint_if(terminal, "ok", "32")),
                    Some(("FAIL", rest)) => format!("{} {rest}", paint_if(terminal, "FAIL", "31")),
                    _ => line.to_string(),
                };
                writeln!(w, "{line}")?;
            }
            Ok(())
        }
    })?;
    if report.passed() {
        Ok(())
    } else {
        for c in report.failures() {
            eprintln!(
                "{} {} at n={} p={} {}: {}",
                paint("failed:", "31"),
                c.identity,
                c.n,
                c.p,
                c.params,
                c.witness.as_deref().unwrap_or("")
            );
        }
        Err(Failure::Verify)
    }
}
