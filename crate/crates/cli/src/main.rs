//! Command-line interface: sampling, benchmark tables, fitting, analysis,
//! torus export and POWER downloads.
//!
//! Exit codes: 0 on success, 1 on usage or parameter errors, 2 when a fit
//! fails to converge.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use circtorus::analysis::analyze;
use circtorus::bench::{run_table_with_rule, runtime_comparison, table_spec, TableId, RUNTIME_KAPPAS};
use circtorus::envelope::{build_envelope, DEFAULT_CELLS};
use circtorus::inference::{chi_squared_gof, fit_mle, FitOptions, FitResult, GofResult, ModelSpec};
use circtorus::ingest::{
    fetch_power_wd10m, load_angles_file, parse_date, write_angles_file, AngleUnit, ColumnSel,
    FetchOptions, PowerQuery,
};
use circtorus::torus::{sample_torus, write_points_csv, write_points_json};
use circtorus::{
    wrap_angle, CircularDensity, DistParams, Envelope, HeightRule, SampleStats, ToroidalDensity,
    TorusGeometry, VonCosParams, TWO_PI,
};

#[derive(Parser, Debug)]
#[command(name = "circtorus", version, about = "Envelope rejection sampling and inference for circular and toroidal distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw samples from a circular distribution.
    Sample(SampleArgs),
    /// Reproduce an acceptance or runtime table.
    Benchmark(BenchArgs),
    /// Fit a model to angles in a file by maximum likelihood.
    Fit(FitArgs),
    /// Moments, modality and divergences of a voncos distribution.
    Analyze(AnalyzeArgs),
    /// Sample points on a curved torus.
    Torus(TorusArgs),
    /// Download daily 10 m wind direction from NASA POWER.
    Fetch(FetchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Heights {
    /// Supremum heights when stationary points are known, midpoint otherwise.
    Auto,
    Sup,
    Mid,
    Grid,
}

impl Heights {
    fn rule(self) -> Option<HeightRule> {
        match self {
            Heights::Auto => None,
            Heights::Sup => Some(HeightRule::Supremum),
            Heights::Mid => Some(HeightRule::Midpoint),
            Heights::Grid => Some(HeightRule::GridPoint),
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Seed of the random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Read and write angles in degrees instead of radians.
    #[arg(long)]
    degrees: bool,
}

impl Common {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn angle_in(&self, v: f64) -> f64 {
        if self.degrees {
            v.to_radians()
        } else {
            v
        }
    }

    fn angle_out(&self, v: f64) -> f64 {
        if self.degrees {
            v.to_degrees()
        } else {
            v
        }
    }
}

/// Distribution given by family name plus flags, or as a single
/// `family:key=value,...` / JSON argument.
#[derive(Args, Debug)]
struct DistArgs {
    /// uniform, vonmises, cardioid, wrappedcauchy, katojones, voncos, or a
    /// full description such as `vonmises:mu=0,kappa=2` or a JSON record.
    #[arg(long, default_value = "vonmises")]
    dist: String,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Radius ratio for voncos and cardioid.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Kato–Jones skewness direction.
    #[arg(long, allow_hyphen_values = true)]
    nu1: Option<f64>,
    /// Multiply the density by `1 + w cos θ` (area weighting).
    #[arg(long)]
    weight: Option<f64>,
}

fn need(name: &str, v: Option<f64>) -> Result<f64, String> {
    v.ok_or_else(|| format!("--{name} is required for this distribution"))
}

impl DistArgs {
    fn params(&self, c: &Common) -> Result<DistParams, String> {
        let base = if self.dist.contains(':') || self.dist.trim_start().starts_with('{') {
            let p: DistParams = self.dist.parse().map_err(|e| format!("{e}"))?;
            if c.degrees {
                degrees_to_radians(p)
            } else {
                p
            }
        } else {
            let mu = || need("mu", self.mu).map(|v| c.angle_in(v));
            match self.dist.to_ascii_lowercase().as_str() {
                "uniform" => DistParams::Uniform,
                "vonmises" | "vm" => DistParams::vonmises(mu()?, need("kappa", self.kappa)?),
                "cardioid" => DistParams::Cardioid { nu: need("nu", self.nu)? },
                "wrappedcauchy" | "wc" => DistParams::wrapped_cauchy(mu()?, need("rho", self.rho)?),
                "katojones" | "kj" => DistParams::katojones(
                    mu()?,
                    c.angle_in(need("nu1", self.nu1)?),
                    need("rho", self.rho)?,
                    need("kappa", self.kappa)?,
                ),
                "voncos" => DistParams::voncos(mu()?, need("kappa", self.kappa)?, need("nu", self.nu)?),
                other => return Err(format!("unknown distribution '{other}'")),
            }
        };
        Ok(match self.weight {
            Some(w) => DistParams::area_weighted(base, w),
            None => base,
        })
    }
}

fn degrees_to_radians(p: DistParams) -> DistParams {
    let r = f64::to_radians;
    match p {
        DistParams::VonMises { mu, kappa } => DistParams::vonmises(r(mu), kappa),
        DistParams::WrappedCauchy { mu, rho } => DistParams::wrapped_cauchy(r(mu), rho),
        DistParams::KatoJones { mu, nu1, rho, kappa } => DistParams::katojones(r(mu), r(nu1), rho, kappa),
        DistParams::VonCos { mu, kappa, nu } => DistParams::voncos(r(mu), kappa, nu),
        DistParams::AreaWeighted { base, nu } => DistParams::area_weighted(degrees_to_radians(*base), nu),
        other => other,
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dist: DistArgs,
    /// Number of accepted draws.
    #[arg(long)]
    n: usize,
    /// Number of equal cells in the envelope.
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    partitions: usize,
    #[arg(long, value_enum, default_value_t = Heights::Auto)]
    heights: Heights,
    /// Worker threads; thread i draws from stream i and outputs are
    /// concatenated in stream order.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// vm1, vm2, runtime, voncos, wc, kj-kappa, kj-rho, kj-torus-kappa or
    /// kj-torus-rho.
    #[arg(long)]
    table: String,
    /// Draws per configuration (default 50000; 1000000 for runtime).
    #[arg(long)]
    n: Option<usize>,
    /// Repetitions per κ for the runtime table; the median is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Height rule; defaults to the table's own.
    #[arg(long, value_enum)]
    heights: Option<Heights>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Voncos3,
    Voncos2,
    Vonmises,
}

impl From<Model> for ModelSpec {
    fn from(m: Model) -> Self {
        match m {
            Model::Voncos3 => ModelSpec::VonCos3,
            Model::Voncos2 => ModelSpec::VonCosSym2,
            Model::Vonmises => ModelSpec::VonMises2,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Delimited text file of angles.
    #[arg(long)]
    input: PathBuf,
    /// Column name or zero-based index.
    #[arg(long, default_value = "0")]
    column: String,
    #[arg(long, value_enum, default_value_t = Model::Voncos3)]
    model: Model,
    /// Bins of the chi-squared test.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Jittered restarts on top of the moment-based starts.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    nu: f64,
    /// Highest moment order.
    #[arg(long, default_value_t = 4)]
    moments: i32,
}

#[derive(Args, Debug)]
struct TorusArgs {
    #[command(flatten)]
    common: Common,
    /// Horizontal-angle distribution, e.g. `vonmises:mu=0,kappa=3`.
    #[arg(long)]
    h1: String,
    /// Vertical-angle base distribution before area weighting.
    #[arg(long)]
    h2: String,
    /// Radius ratio r/R.
    #[arg(long)]
    nu: f64,
    /// Major radius; the minor radius is ν R.
    #[arg(long = "R", default_value_t = 1.0)]
    big_r: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    partitions: usize,
}

#[derive(Args, Debug)]
struct FetchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon: f64,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    start: String,
    /// Last day, YYYY-MM-DD.
    #[arg(long)]
    end: String,
    /// Keep only this calendar month (1-12).
    #[arg(long)]
    month: Option<u32>,
    /// Cache directory for the raw daily series.
    #[arg(long, default_value = "data")]
    cache_dir: PathBuf,
    /// Serve from the cache only; never touch the network.
    #[arg(long)]
    offline: bool,
}

enum Failure {
    Usage(String),
    NotConverged(String),
}

impl From<circtorus::Error> for Failure {
    fn from(e: circtorus::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("json error: {e}"))
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Usage(e)
    }
}

type CliResult = Result<(), Failure>;

#[derive(Serialize)]
struct StatsLine {
    acceptance_pct: f64,
    clamped: u64,
    elapsed_ns: u128,
    proposed: u64,
    accepted: u64,
    partitions: usize,
    heights: HeightRule,
    threads: usize,
    seed: u64,
}

fn print_stats(st: &SampleStats, env: &Envelope, threads: usize, seed: u64) -> CliResult {
    let line = StatsLine {
        acceptance_pct: st.acceptance_pct(),
        clamped: st.clamped,
        elapsed_ns: st.elapsed_ns(),
        proposed: st.proposed,
        accepted: st.accepted,
        partitions: env.cells(),
        heights: env.rule(),
        threads,
        seed,
    };
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string(&line)?)?;
    Ok(())
}

fn write_angles(c: &Common, values: &[f64]) -> CliResult {
    let mut w = c.writer()?;
    match c.format {
        Format::Csv => {
            writeln!(w, "theta")?;
            for v in values {
                writeln!(w, "{}", c.angle_out(*v))?;
            }
        }
        Format::Json => {
            let v: Vec<f64> = values.iter().map(|v| c.angle_out(*v)).collect();
            writeln!(w, "{}", serde_json::to_string(&v)?)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> CliResult {
    let c = &a.common;
    if a.threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let d = CircularDensity::new(a.dist.params(c)?)?;
    let env = match a.heights.rule() {
        None => build_envelope(&d, (0.0, TWO_PI), a.partitions, &d.stationary_points())?,
        Some(rule) => Envelope::for_density_with_rule(&d, a.partitions, rule)?,
    };
    let (values, stats) = env.sample_parallel(&d, a.n, c.seed, a.threads)?;
    write_angles(c, &values)?;
    print_stats(&stats, &env, a.threads, c.seed)
}

#[derive(Serialize)]
struct BenchLine {
    table: &'static str,
    param: &'static str,
    value: f64,
    proposed_pct: f64,
    ref_proposed_pct: f64,
    diff_pp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    vmbfr_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ref_vmbfr_pct: Option<f64>,
    clamped: u64,
    proposals: u64,
    elapsed_ns: u128,
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn cmd_benchmark(a: BenchArgs) -> CliResult {
    let id: TableId = a.table.parse()?;
    let c = &a.common;
    let mut w = c.writer()?;
    if id == TableId::Runtime {
        let n = a.n.unwrap_or(1_000_000);
        let mut rows = Vec::new();
        for &k in &RUNTIME_KAPPAS {
            rows.push(runtime_comparison(k, n, a.reps.max(1), c.seed)?);
        }
        match c.format {
            Format::Json => {
                for r in &rows {
                    writeln!(w, "{}", serde_json::to_string(r)?)?;
                }
            }
            Format::Csv => {
                writeln!(w, "kappa,n,reps,proposed_s,vmbfr_s,ratio,ref_proposed_s,ref_vmbfr_s")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{},{},{:.4},{:.4},{:.3},{},{}",
                        r.kappa,
                        r.n,
                        r.repetitions,
                        r.proposed_median_ns as f64 * 1e-9,
                        r.vmbfr_median_ns as f64 * 1e-9,
                        r.speedup,
                        fmt_opt(r.ref_proposed_s, 2),
                        fmt_opt(r.ref_vmbfr_s, 2)
                    )?;
                }
            }
        }
        w.flush()?;
        return Ok(());
    }
    let spec = table_spec(id);
    let rule = a.heights.and_then(Heights::rule).unwrap_or(spec.rule);
    let rows = run_table_with_rule(id, a.n.unwrap_or(50_000), c.seed, rule)?;
    let lines: Vec<BenchLine> = rows
        .iter()
        .map(|r| BenchLine {
            table: id.name(),
            param: r.param,
            value: r.value,
            proposed_pct: r.proposed_pct,
            ref_proposed_pct: r.ref_proposed_pct,
            diff_pp: r.proposed_pct - r.ref_proposed_pct,
            vmbfr_pct: r.vmbfr_pct,
            ref_vmbfr_pct: r.ref_vmbfr_pct,
            clamped: r.clamped,
            proposals: r.proposals,
            elapsed_ns: r.elapsed_ns,
        })
        .collect();
    match c.format {
        Format::Json => {
            for l in &lines {
                writeln!(w, "{}", serde_json::to_string(l)?)?;
            }
        }
        Format::Csv => {
            writeln!(
                w,
                "{},proposed_pct,ref_pct,diff_pp,vmbfr_pct,ref_vmbfr_pct,clamped,proposals",
                spec.varied
            )?;
            for l in &lines {
                writeln!(
                    w,
                    "{},{:.3},{:.3},{:+.3},{},{},{},{}",
                    l.value,
                    l.proposed_pct,
                    l.ref_proposed_pct,
                    l.diff_pp,
                    fmt_opt(l.vmbfr_pct, 3),
                    fmt_opt(l.ref_vmbfr_pct, 2),
                    l.clamped,
                    l.proposals
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    fit: FitResult,
    gof: GofResult,
}

fn cmd_fit(a: FitArgs) -> CliResult {
    let c = &a.common;
    let unit = if c.degrees { AngleUnit::Degrees } else { AngleUnit::Radians };
    let column: ColumnSel = a.column.parse().expect("infallible");
    let series = load_angles_file(&a.input, &column, unit)?;
    let opts = FitOptions { restarts: a.restarts, seed: c.seed, ..FitOptions::default() };
    let spec: ModelSpec = a.model.into();
    let fit = fit_mle(spec, &series.values, &opts)?;
    let gof = chi_squared_gof(&series.values, &fit.density()?, spec.dim(), a.bins)?;
    let converged = fit.converged;
    let report = FitReport { fit, gof };
    let mut w = c.writer()?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    w.flush()?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "fit did not converge (score norm {:.3e})",
            report.fit.score_norm
        )))
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> CliResult {
    let c = &a.common;
    if !(1..=circtorus::analysis::MAX_MOMENT_ORDER).contains(&a.moments) {
        return Err(Failure::Usage(format!(
            "--moments must lie in 1..={}",
            circtorus::analysis::MAX_MOMENT_ORDER
        )));
    }
    let p = VonCosParams::new(c.angle_in(a.mu), a.kappa, a.nu)?;
    let report = analyze(&p, a.moments)?;
    let mut w = c.writer()?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    w.flush()?;
    Ok(())
}

fn parse_dist(s: &str, c: &Common) -> Result<DistParams, Failure> {
    let p: DistParams = s.parse()?;
    Ok(if c.degrees { degrees_to_radians(p) } else { p })
}

fn cmd_torus(a: TorusArgs) -> CliResult {
    let c = &a.common;
    let t = ToroidalDensity::new(parse_dist(&a.h1, c)?, parse_dist(&a.h2, c)?, a.nu)?;
    let g = TorusGeometry::from_nu(a.big_r, a.nu)?;
    let mut pts = sample_torus(&t, &g, a.n, c.seed, a.partitions)?;
    if c.degrees {
        for p in &mut pts {
            p.phi = p.phi.to_degrees();
            p.theta = p.theta.to_degrees();
        }
    }
    let mut w = c.writer()?;
    match c.format {
        Format::Csv => write_points_csv(&pts, &mut w)?,
        Format::Json => write_points_json(&pts, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_fetch(a: FetchArgs) -> CliResult {
    let c = &a.common;
    let q = PowerQuery::new(a.lat, a.lon, parse_date(&a.start)?, parse_date(&a.end)?, a.month)?;
    let opts = FetchOptions { cache_dir: Some(a.cache_dir.clone()), offline: a.offline };
    let series = fetch_power_wd10m(&q, &opts)?;
    match &c.out {
        Some(p) if c.format == Format::Csv && !c.degrees => write_angles_file(p, &series)?,
        _ => {
            let values: Vec<f64> = series.values.iter().map(|v| wrap_angle(*v)).collect();
            write_angles(c, &values)?;
        }
    }
    eprintln!(
        "{} values from {} ({} missing dropped)",
        series.meta.count, series.meta.source, series.meta.skipped
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Torus(a) => cmd_torus(a),
        Command::Fetch(a) => cmd_fetch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
