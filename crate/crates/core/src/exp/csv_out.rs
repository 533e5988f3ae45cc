//! CSV emission. Every file starts with the line `# schema=1`, then a
//! header row and one record per row. Floats use Rust's shortest
//! round-trip formatting, so parsing a file back recovers every value
//! exactly and output is independent of locale.

use std::fmt;
use std::io::{self, Read, Write};

use super::{Example1Report, Levels, NmseRow, ResultRow, TraceRow};
use crate::wmmse::{BenchmarkTarget, Method, RisCodebook};

pub const SCHEMA_LINE: &str = "# schema=1";

pub const SWEEP_COLUMNS: [&str; 18] = [
    "seed",
    "trial",
    "method",
    "target",
    "ris_mode",
    "levels",
    "bits",
    "p_dbm",
    "iterations",
    "converged",
    "sum_rate",
    "rates",
    "total_power",
    "power_feasible",
    "power_floor_reached",
    "budget_exhausted",
    "nodes_visited",
    "wall_time_ms",
];

const TRACE_COLUMNS: [&str; 12] = [
    "seed",
    "trial",
    "levels",
    "ris_mode",
    "bits",
    "p_dbm",
    "iteration",
    "f",
    "sum_rate",
    "mu",
    "power",
    "nodes_visited",
];

#[derive(Debug)]
pub enum CsvError {
    Io(io::Error),
    Csv(csv::Error),
    /// A field that does not parse, with its 1-based record number.
    Field { record: usize, column: &'static str, value: String },
    MissingSchema,
}

impl std::error::Error for CsvError {}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::Csv(e) => write!(f, "{e}"),
            Self::Field { record, column, value } => {
                write!(f, "record {record}: cannot parse {column} = \"{value}\"")
            }
            Self::MissingSchema => write!(f, "first line is not `{SCHEMA_LINE}`"),
        }
    }
}

impl From<io::Error> for CsvError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e)
    }
}

fn levels_field(l: Levels) -> String {
    match l {
        Levels::Finite(n) => n.to_string(),
        Levels::Infinite => "inf".into(),
    }
}

fn codebook_fields(c: RisCodebook) -> (&'static str, String) {
    match c {
        RisCodebook::Continuous => ("continuous", String::new()),
        RisCodebook::Discrete { bits } => ("discrete", bits.to_string()),
    }
}

fn target_name(t: BenchmarkTarget) -> &'static str {
    match t {
        BenchmarkTarget::Precoding => "precoding",
        BenchmarkTarget::Ris => "ris",
        BenchmarkTarget::Both => "both",
    }
}

fn writer<W: Write>(mut out: W) -> Result<csv::Writer<W>, CsvError> {
    writeln!(out, "{SCHEMA_LINE}")?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out))
}

pub fn write_sweep_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), CsvError> {
    let mut w = writer(out)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        let (mode, bits) = codebook_fields(r.codebook);
        let rates: Vec<String> = r.rates.iter().map(f64::to_string).collect();
        w.write_record([
            r.seed.to_string(),
            r.trial.to_string(),
            r.method.name().to_string(),
            target_name(r.target).to_string(),
            mode.to_string(),
            levels_field(r.levels),
            bits,
            r.p_dbm.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.sum_rate.to_string(),
            rates.join(";"),
            r.total_power.to_string(),
            r.power_feasible.to_string(),
            r.power_floor_reached.to_string(),
            r.budget_exhausted.to_string(),
            r.nodes_visited.to_string(),
            r.wall_time_ms.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), CsvError> {
    let mut w = writer(out)?;
    let mut header = TRACE_COLUMNS.to_vec();
    header.push("converged");
    w.write_record(&header)?;
    for r in rows {
        let (mode, bits) = codebook_fields(r.codebook);
        w.write_record([
            r.seed.to_string(),
            r.trial.to_string(),
            levels_field(r.levels),
            mode.to_string(),
            bits,
            r.p_dbm.to_string(),
            r.iteration.to_string(),
            r.f.to_string(),
            r.sum_rate.to_string(),
            r.mu.to_string(),
            r.power.to_string(),
            r.nodes_visited.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nmse_csv<W: Write>(rows: &[NmseRow], out: W) -> Result<(), CsvError> {
    let mut w = writer(out)?;
    w.write_record(["eta", "realizations", "nmse", "mean_nodes"])?;
    for r in rows {
        w.write_record([r.eta.to_string(), r.realizations.to_string(), r.nmse.to_string(), r.mean_nodes.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn join(x: &[f64]) -> String {
    x.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_example1_csv<W: Write>(report: &Example1Report, out: W) -> Result<(), CsvError> {
    let mut w = writer(out)?;
    w.write_record(["item", "expected", "actual", "pass"])?;
    w.write_record([
        "x".to_string(),
        join(&report.expected_x),
        join(&report.x),
        (report.x == report.expected_x).to_string(),
    ])?;
    w.write_record([
        "residual".to_string(),
        report.expected_residual.to_string(),
        report.residual.to_string(),
        ((report.residual - report.expected_residual).abs() <= 1e-9).to_string(),
    ])?;
    w.write_record([
        "brute_force_residual".to_string(),
        report.residual.to_string(),
        report.brute_force_residual.to_string(),
        (report.brute_force_residual == report.residual).to_string(),
    ])?;
    for (i, (x, r)) in report.incumbents.iter().enumerate() {
        w.write_record([format!("incumbent_{}", i + 1), String::new(), format!("{} @ {r}", join(x)), String::new()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a sweep file written by [`write_sweep_csv`]. `power_index` is
/// rebuilt from the order in which power values first appear.
pub fn read_sweep_csv<R: Read>(mut input: R) -> Result<Vec<ResultRow>, CsvError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let body = text.strip_prefix(SCHEMA_LINE).and_then(|s| s.strip_prefix('\n')).ok_or(CsvError::MissingSchema)?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let mut powers: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |c: usize| CsvError::Field { record: i + 1, column: SWEEP_COLUMNS[c], value: field(c).to_string() };
        macro_rules! parse {
            ($c:expr) => {
                field($c).parse().map_err(|_| bad($c))?
            };
        }
        let method = Method::ALL.into_iter().find(|m| m.name() == field(2)).ok_or_else(|| bad(2))?;
        let target = match field(3) {
            "precoding" => BenchmarkTarget::Precoding,
            "ris" => BenchmarkTarget::Ris,
            "both" => BenchmarkTarget::Both,
            _ => return Err(bad(3)),
        };
        let codebook = match field(4) {
            "continuous" => RisCodebook::Continuous,
            "discrete" => RisCodebook::Discrete { bits: parse!(6) },
            _ => return Err(bad(4)),
        };
        let levels = match field(5) {
            "inf" => Levels::Infinite,
            _ => Levels::Finite(parse!(5)),
        };
        let p_dbm: f64 = parse!(7);
        let power_index = match powers.iter().position(|&p| p == p_dbm) {
            Some(j) => j,
            None => {
                powers.push(p_dbm);
                powers.len() - 1
            }
        };
        let rates = if field(11).is_empty() {
            Vec::new()
        } else {
            field(11).split(';').map(|s| s.parse().map_err(|_| bad(11))).collect::<Result<_, _>>()?
        };
        rows.push(ResultRow {
            seed: parse!(0),
            trial: parse!(1),
            method,
            target,
            codebook,
            levels,
            power_index,
            p_dbm,
            iterations: parse!(8),
            converged: parse!(9),
            sum_rate: parse!(10),
            rates,
            total_power: parse!(12),
            power_feasible: parse!(13),
            power_floor_reached: parse!(14),
            budget_exhausted: parse!(15),
            nodes_visited: parse!(16),
            wall_time_ms: if field(17).is_empty() { None } else { Some(parse!(17)) },
        });
    }
    Ok(rows)
}
