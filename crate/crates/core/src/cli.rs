//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 I/O error, 3 invalid input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::extremizer::{find_extremal, search_bound_from_norms, DirectionRow, ExtremalResult, SearchBound};
use crate::geodesic::{enumerate_directions, GeodesicDirection};
use crate::oracle::{run_all_checks, VerificationReport};
use crate::spectrum::{default_grid, norms, preset_random, preset_sine, NormReport, SpectralField};

#[derive(Debug, Parser, Serialize)]
#[command(name = "torus-geo", version, about = "Extremal closed geodesics on the flat torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Norms, search bound and the maximizing closed geodesic.
    Analyze(AnalyzeArgs),
    /// Everything `analyze` does plus the verification checks.
    Verify(AnalyzeArgs),
    /// Scaling table for the family sin(2π(x + ℓy)).
    Sweep(SweepArgs),
    /// Table of primitive directions up to a radius.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Sine,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(skip)]
pub struct InputArgs {
    /// Field JSON document.
    #[arg(short, long, group = "input_source")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, group = "input_source")]
    pub preset: Option<Preset>,
    /// ℓ for the sine preset.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub ell: u32,
    /// Bandlimit of the random preset.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Coefficient decay exponent of the random preset.
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("input_source").required(true).multiple(false)))]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: InputArgs,
    /// Derivative order in the length bound (at least 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub s: u32,
    /// Prefactor of the length bound.
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    /// Scan this radius instead of the computed effective radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Also write a per-direction CSV next to the report.
    #[arg(long, requires = "output")]
    pub keep_table: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    pub ell_min: u32,
    #[arg(long, default_value_t = 12)]
    pub ell_max: u32,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub s: u32,
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub radius: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("verification failed: {passed}/{total} checks passed")]
    VerificationFailed { passed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed { .. } => 1,
            CliError::Io(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub source: String,
    pub coefficients: usize,
    pub bandlimit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSummary {
    pub direction: GeodesicDirection,
    pub theta: f64,
    pub offset_point: [f64; 2],
    pub value: f64,
    pub length: f64,
    pub radius: f64,
    pub scanned: usize,
    /// Whether the scan reached the bandlimit, making the maximum global.
    pub global: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
}

/// Report document; key order is the field order.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub input: InputSummary,
    pub norms: NormReport,
    pub bound: Option<SearchBound>,
    pub extremal: ExtremalSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    pub meta: Meta,
    #[serde(skip)]
    pub table: Option<Vec<DirectionRow>>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn load_field(source: &InputArgs) -> Result<(SpectralField, String), CliError> {
    match (&source.input, source.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let field = SpectralField::from_json(&text)?;
            Ok((field, format!("file:{}", path.display())))
        }
        (None, Some(Preset::Sine)) => Ok((preset_sine(source.ell), format!("preset:sine(ell={})", source.ell))),
        (None, Some(Preset::Random)) => {
            if !(source.decay >= 0.0 && source.decay.is_finite()) {
                return Err(CliError::Invalid(format!("decay must be nonnegative, got {}", source.decay)));
            }
            Ok((
                preset_random(source.n, source.decay, source.seed),
                format!("preset:random(n={},decay={},seed={})", source.n, source.decay, source.seed),
            ))
        }
        _ => Err(CliError::Invalid("exactly one of --input and --preset is required".into())),
    }
}

fn analyze_report(args: &AnalyzeArgs, command: &'static str) -> Result<Report, CliError> {
    if let Some(r) = args.radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Invalid(format!("radius must be positive, got {r}")));
        }
    }
    let (field, source) = load_field(&args.source)?;
    let norm_report = norms(&field, args.s, default_grid(&field))?;

    let (bound, result) = if field.is_empty() {
        let radius = args.radius.unwrap_or(1.0).max(1.0);
        (None, ExtremalResult::sentinel(radius, 0))
    } else {
        let mut bound = search_bound_from_norms(&field, &norm_report, args.s, args.constant)?;
        if let Some(r) = args.radius {
            bound = bound.with_radius(r);
        }
        let result = find_extremal(&field, &bound, args.keep_table);
        (Some(bound), result)
    };

    let extremal = ExtremalSummary {
        direction: result.geodesic.direction,
        theta: result.geodesic.theta,
        offset_point: result.geodesic.offset_point,
        value: result.value,
        length: result.length(),
        radius: result.radius,
        scanned: result.scanned,
        global: field.is_empty() || bound.as_ref().is_some_and(SearchBound::covers_cutoff),
    };
    Ok(Report {
        input: InputSummary {
            source,
            coefficients: field.len(),
            bandlimit: field.bandlimit(),
        },
        norms: norm_report,
        bound,
        extremal,
        verification: None,
        meta: Meta {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(args).expect("config serializes"),
        },
        table: result.per_direction,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<Report, CliError> {
    analyze_report(args, "analyze")
}

/// Runs `analyze` plus every verification check. The report is returned even
/// when a check fails; use [`Report::verification`] to decide the exit code.
pub fn cmd_verify(args: &AnalyzeArgs) -> Result<Report, CliError> {
    let mut report = analyze_report(args, "verify")?;
    let (field, _) = load_field(&args.source)?;
    report.verification = Some(run_all_checks(&field, args.s)?);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ell: u32,
    pub extremal_length: f64,
    pub theorem_radius: f64,
    pub cutoff_radius: f64,
    pub deriv_l1_s: f64,
    pub grad_l2: f64,
    pub l2: f64,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::new();
    for ell in args.ell_min.max(1)..=args.ell_max {
        let field = preset_sine(ell);
        let report = norms(&field, args.s, default_grid(&field))?;
        let bound = search_bound_from_norms(&field, &report, args.s, args.constant)?;
        let result = find_extremal(&field, &bound, false);
        rows.push(SweepRow {
            ell,
            extremal_length: result.length(),
            theorem_radius: bound.theorem_radius,
            cutoff_radius: bound.cutoff_radius,
            deriv_l1_s: report.deriv(args.s).expect("order s computed"),
            grad_l2: report.grad_l2,
            l2: report.l2,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionEntry {
    pub a: i64,
    pub b: i64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationTable {
    pub rows: Vec<DirectionEntry>,
    /// Canonical nonzero lattice points (half-disk) within the radius.
    pub half_disk_points: usize,
}

impl EnumerationTable {
    pub fn density(&self) -> f64 {
        if self.half_disk_points == 0 {
            0.0
        } else {
            self.rows.len() as f64 / self.half_disk_points as f64
        }
    }
}

pub fn cmd_enumerate(args: &EnumerateArgs) -> Result<EnumerationTable, CliError> {
    if !(args.radius >= 1.0 && args.radius.is_finite()) {
        return Err(CliError::Invalid(format!("radius must be at least 1, got {}", args.radius)));
    }
    let rows = enumerate_directions(args.radius)
        .into_iter()
        .map(|d| DirectionEntry {
            a: d.a(),
            b: d.b(),
            length: d.length(),
        })
        .collect();
    let r = args.radius.floor() as i64 + 1;
    let r2 = args.radius * args.radius * (1.0 + 1e-12);
    let mut half_disk_points = 0;
    for a in 0..=r {
        for b in -r..=r {
            if (a > 0 || (a == 0 && b > 0)) && ((a * a + b * b) as f64) <= r2 {
                half_disk_points += 1;
            }
        }
    }
    Ok(EnumerationTable {
        rows,
        half_disk_points,
    })
}

/// Serializes rows as CSV with a header line (also for an empty table).
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub const DIRECTION_TABLE_HEADER: [&str; 5] = ["a", "b", "length", "theta_star", "value"];
pub const SWEEP_HEADER: [&str; 7] = [
    "ell",
    "extremal_length",
    "theorem_radius",
    "cutoff_radius",
    "deriv_l1_s",
    "grad_l2",
    "l2",
];

pub fn enumeration_csv(table: &EnumerationTable) -> String {
    let mut out = to_csv(&["a", "b", "length"], &table.rows);
    out.push_str(&format!(
        "# directions={},half_disk_points={},coprime_density={},asymptotic={}\n",
        table.rows.len(),
        table.half_disk_points,
        table.density(),
        6.0 / (std::f64::consts::PI * std::f64::consts::PI)
    ));
    out
}

/// `out.json` → `out.directions.csv`
pub fn table_path(output: &Path) -> PathBuf {
    output.with_extension("directions.csv")
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_report(report: &Report, args: &AnalyzeArgs) -> Result<(), CliError> {
    emit(args.output.as_deref(), &report.to_json())?;
    if let (Some(rows), Some(out)) = (&report.table, &args.output) {
        emit(Some(&table_path(out)), &to_csv(&DIRECTION_TABLE_HEADER, rows))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(args) => write_report(&cmd_analyze(args)?, args),
        Command::Verify(args) => {
            let report = cmd_verify(args)?;
            write_report(&report, args)?;
            let v = report.verification.as_ref().expect("verify attaches checks");
            eprintln!("{}/{} checks passed", v.passed_count(), v.checks.len());
            if v.all_passed() {
                Ok(())
            } else {
                Err(CliError::VerificationFailed {
                    passed: v.passed_count(),
                    total: v.checks.len(),
                })
            }
        }
        Command::Sweep(args) => emit(args.output.as_deref(), &to_csv(&SWEEP_HEADER, &cmd_sweep(args)?)),
        Command::Enumerate(args) => emit(args.output.as_deref(), &enumeration_csv(&cmd_enumerate(args)?)),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("torus-geo").chain(args.iter().copied())).unwrap()
    }

    fn analyze_args(args: &[&str]) -> AnalyzeArgs {
        match parse(args).command {
            Command::Analyze(a) | Command::Verify(a) => a,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn input_source_is_exclusive() {
        let both = ["torus-geo", "analyze", "-i", "x.json", "--preset", "sine"];
        assert!(Cli::try_parse_from(both).is_err());
        assert!(Cli::try_parse_from(["torus-geo", "analyze"]).is_err());
        assert_eq!(main_with_args(["torus-geo", "analyze"]), 3);
    }

    #[test]
    fn s_below_two_rejected() {
        assert!(Cli::try_parse_from(["torus-geo", "analyze", "--preset", "sine", "--s", "1"]).is_err());
    }

    #[test]
    fn keep_table_needs_output() {
        assert!(Cli::try_parse_from(["torus-geo", "analyze", "--preset", "sine", "--keep-table"]).is_err());
    }

    #[test]
    fn analyze_sine_five() {
        let r = cmd_analyze(&analyze_args(&["analyze", "--preset", "sine", "--ell", "5"])).unwrap();
        assert_eq!(r.extremal.direction, GeodesicDirection::new(5, -1).unwrap());
        assert!((r.extremal.value - 1.0).abs() < 1e-9);
        assert_eq!(r.extremal.length, 26f64.sqrt());
        assert!(r.extremal.global);
    }

    #[test]
    fn s_does_not_move_extremal() {
        let r2 = cmd_analyze(&analyze_args(&["analyze", "--preset", "sine", "--ell", "1"])).unwrap();
        let r3 = cmd_analyze(&analyze_args(&["analyze", "--preset", "sine", "--ell", "1", "--s", "3"])).unwrap();
        assert_eq!(r3.bound.as_ref().unwrap().s, 3);
        assert_eq!(r2.extremal.direction, r3.extremal.direction);
        assert_eq!(r2.extremal.theta, r3.extremal.theta);
    }

    #[test]
    fn radius_override() {
        let args = analyze_args(&["analyze", "--preset", "sine", "--ell", "5", "--radius", "2"]);
        let r = cmd_analyze(&args).unwrap();
        assert_eq!(r.extremal.value, 0.0);
        assert!(!r.extremal.global);
        assert_eq!(r.bound.unwrap().effective_radius, 2.0);
    }

    #[test]
    fn report_is_deterministic() {
        let args = analyze_args(&["analyze", "--preset", "random", "--n", "5", "--seed", "4"]);
        assert_eq!(cmd_analyze(&args).unwrap().to_json(), cmd_analyze(&args).unwrap().to_json());
    }

    #[test]
    fn report_key_order() {
        let r = cmd_verify(&analyze_args(&["verify", "--preset", "sine", "--ell", "2"])).unwrap();
        let json = r.to_json();
        let pos = |k: &str| json.find(&format!("\n  \"{k}\"")).unwrap_or_else(|| panic!("{k}"));
        let keys = ["input", "norms", "bound", "extremal", "verification", "meta"];
        assert!(keys.windows(2).all(|w| pos(w[0]) < pos(w[1])));
    }

    #[test]
    fn empty_sweep_has_header_only() {
        let rows = cmd_sweep(&SweepArgs {
            ell_min: 5,
            ell_max: 4,
            s: 2,
            constant: 1.0,
            output: None,
        })
        .unwrap();
        assert!(rows.is_empty());
        assert_eq!(
            to_csv(&SWEEP_HEADER, &rows),
            "ell,extremal_length,theorem_radius,cutoff_radius,deriv_l1_s,grad_l2,l2\n"
        );
    }

    #[test]
    fn enumeration_radius_one() {
        let t = cmd_enumerate(&EnumerateArgs {
            radius: 1.0,
            output: None,
        })
        .unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.half_disk_points, 2);
        let csv = enumeration_csv(&t);
        assert!(csv.starts_with("a,b,length\n0,1,1.0\n1,0,1.0\n# directions=2"));
    }

    #[test]
    fn table_path_replaces_extension() {
        assert_eq!(table_path(Path::new("out/r.json")), PathBuf::from("out/r.directions.csv"));
    }
}
