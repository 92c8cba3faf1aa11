//! File formats: PMU frequency CSV, scenario documents (JSON) and result
//! tables (CSV).
//!
//! PMU CSV layout:
//!
//! ```text
//! # key=value          (optional metadata lines)
//! t_s,ch_a,ch_b
//! 0.00,50.000,50.001
//! 0.04,49.999,50.000
//! ```
//!
//! Times are absolute seconds on a uniform grid. Floating-point output is
//! written with 9 significant digits.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{SweepCell, WindowSpec};
use crate::model::{DisturbanceScenario, EstimateResult, FrequencyTrace, GeneratorSpec, SystemSpec};
use crate::simulator::SimConfig;

const TIME_HEADER: &str = "t_s";
const CHANNEL_PREFIX: &str = "ch_";

/// Channels read from one PMU export. All traces share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PmuDataset {
    pub traces: Vec<FrequencyTrace>,
    pub source_path: String,
    pub metadata: BTreeMap<String, String>,
}

/// Formats `x` with 9 significant digits, plain notation where reasonable.
pub fn format_sig9(x: f64) -> String {
    format_sig(x, 9)
}

fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..sig as i32).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Reads a PMU CSV file.
pub fn load_pmu_csv(path: impl AsRef<Path>) -> Result<PmuDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pmu_csv(&text, &path.display().to_string())
}

pub fn parse_pmu_csv(text: &str, source: &str) -> Result<PmuDataset> {
    let mut metadata = BTreeMap::new();
    let mut body_start = 0;
    let mut first_line = 1;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        let Some(meta) = trimmed.strip_prefix('#') else { break };
        if let Some((k, v)) = meta.split_once('=') {
            metadata.insert(k.trim().to_string(), v.trim().to_string());
        } else if !meta.trim().is_empty() {
            return Err(Error::Parse {
                line: first_line,
                message: "metadata lines must read `# key=value`".into(),
            });
        }
        body_start += line.len();
        first_line += 1;
    }
    let body = &text[body_start..];
    if body.trim().is_empty() {
        return Err(Error::Parse {
            line: first_line,
            message: "file holds no header".into(),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut records = reader.records();
    let line_of = |rec: &csv::StringRecord| {
        rec.position()
            .map_or(first_line, |p| p.line() as usize + first_line - 1)
    };
    let csv_err = |e: csv::Error| Error::Parse {
        line: e.position().map_or(first_line, |p| p.line() as usize + first_line - 1),
        message: e.to_string(),
    };

    let header = records.next().expect("non-empty body").map_err(csv_err)?;
    let header_line = line_of(&header);
    if header.get(0) != Some(TIME_HEADER) {
        return Err(Error::Parse {
            line: header_line,
            message: format!("first column must be `{TIME_HEADER}`"),
        });
    }
    if header.len() < 2 {
        return Err(Error::Parse {
            line: header_line,
            message: "no channel columns".into(),
        });
    }
    let mut ids = Vec::with_capacity(header.len() - 1);
    let mut seen = HashSet::new();
    for (col, name) in header.iter().enumerate().skip(1) {
        let id = name
            .strip_prefix(CHANNEL_PREFIX)
            .filter(|id| !id.is_empty())
            .ok_or_else(|| Error::Parse {
                line: header_line,
                message: format!("column {} header `{name}` must read `{CHANNEL_PREFIX}<id>`", col + 1),
            })?;
        if !seen.insert(id) {
            return Err(Error::Parse {
                line: header_line,
                message: format!("duplicate channel `{id}`"),
            });
        }
        ids.push(id.to_string());
    }

    let width = header.len();
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (col, field) in rec.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Value {
                line,
                column: col + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Value {
                    line,
                    column: col + 1,
                    message: format!("`{field}` is not finite"),
                });
            }
            if col == 0 {
                times.push(value);
            } else {
                columns[col - 1].push(value);
            }
        }
    }

    let (t_start, dt) = uniform_grid(&times)?;
    let traces = ids
        .into_iter()
        .zip(columns)
        .map(|(id, samples)| FrequencyTrace::new(id, t_start, dt, samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(PmuDataset {
        traces,
        source_path: source.to_string(),
        metadata,
    })
}

fn uniform_grid(times: &[f64]) -> Result<(f64, f64)> {
    if times.len() < 2 {
        return Err(Error::Grid(format!(
            "{} data row(s); at least 2 are needed to fix the sample period",
            times.len()
        )));
    }
    let t0 = times[0];
    let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Grid("time column must increase".into()));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * t.abs().max(dt).max(1.0) {
            return Err(Error::Grid(format!(
                "row {} has t = {t} s, expected {expected} s for dt = {dt} s",
                k + 1
            )));
        }
    }
    Ok((t0, dt))
}

/// Renders traces sharing one grid as PMU CSV text.
pub fn render_pmu_csv(traces: &[FrequencyTrace], metadata: &BTreeMap<String, String>) -> Result<String> {
    let first = traces.first().ok_or_else(|| Error::invalid("no traces to write"))?;
    for t in traces {
        if !t.same_grid(first) {
            return Err(Error::TraceGridMismatch {
                channel: t.channel_id.clone(),
                reason: "all exported channels must share one grid".into(),
            });
        }
    }
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(TIME_HEADER);
    for t in traces {
        out.push(',');
        out.push_str(CHANNEL_PREFIX);
        out.push_str(&t.channel_id);
    }
    out.push('\n');
    for k in 0..first.len() {
        out.push_str(&format_sig9(first.time_at(k)));
        for t in traces {
            out.push(',');
            out.push_str(&format_sig9(t.samples[k]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_pmu_csv(
    traces: &[FrequencyTrace],
    metadata: &BTreeMap<String, String>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_pmu_csv(traces, metadata)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Everything a scenario document describes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub system: SystemSpec,
    pub scenario: DisturbanceScenario,
    pub sim: SimConfig,
    pub window: WindowSpec,
    /// Free-text provenance notes carried along with the data.
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    system: SystemFile,
    scenario: DisturbanceScenario,
    sim: SimConfig,
    #[serde(default)]
    window: WindowSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    f_nominal: f64,
    s_base: f64,
    power_factor: f64,
    load_mw: f64,
    #[serde(default)]
    load_damping: f64,
    generators: Vec<GeneratorFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    id: String,
    h_const: f64,
    /// Defaults to `p_mech / power_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_rated: Option<f64>,
    p_mech: f64,
    e_internal: f64,
    x_reactance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta0: Option<f64>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => {
                let message = inner.to_string();
                let path = missing_field(&message)
                    .map(|f| {
                        if path == "." {
                            f.to_string()
                        } else {
                            format!("{path}.{f}")
                        }
                    })
                    .unwrap_or(path);
                Error::Schema { path, message }
            }
            _ => Error::Parse {
                line: inner.line(),
                message: inner.to_string(),
            },
        }
    })?;
    let doc = file.into_document()?;
    doc.validate()?;
    Ok(doc)
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split_once('`').map(|(f, _)| f)
}

impl ScenarioFile {
    fn into_document(self) -> Result<ScenarioDocument> {
        let pf = self.system.power_factor;
        if !(pf > 0.0 && pf <= 1.0) {
            return Err(Error::validation(
                "system.power_factor",
                format!("must lie in (0, 1], got {pf}"),
            ));
        }
        let generators = self
            .system
            .generators
            .into_iter()
            .map(|g| GeneratorSpec {
                s_rated: g.s_rated.unwrap_or(g.p_mech / pf),
                id: g.id,
                h_const: g.h_const,
                p_mech: g.p_mech,
                e_internal: g.e_internal,
                x_reactance: g.x_reactance,
                delta0: g.delta0,
            })
            .collect();
        Ok(ScenarioDocument {
            system: SystemSpec {
                f_nominal: self.system.f_nominal,
                s_base: self.system.s_base,
                power_factor: pf,
                generators,
                load_mw: self.system.load_mw,
                load_damping: self.system.load_damping,
            },
            scenario: self.scenario,
            sim: self.sim,
            window: self.window,
            notes: self.notes,
        })
    }
}

impl ScenarioDocument {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.scenario.validate()?;
        self.window.validate()?;
        if let Some(id) = &self.scenario.tripped_generator {
            if self.system.generator(id).is_none() {
                return Err(Error::validation(
                    "scenario.tripped_generator",
                    format!("`{id}` is not one of the system's generators"),
                ));
            }
            if self.system.generators.len() < 2 {
                return Err(Error::validation(
                    "scenario.tripped_generator",
                    "no generator would survive the trip",
                ));
            }
        }
        self.sim.validate(&self.scenario)
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            notes: self.notes.clone(),
            system: SystemFile {
                f_nominal: self.system.f_nominal,
                s_base: self.system.s_base,
                power_factor: self.system.power_factor,
                load_mw: self.system.load_mw,
                load_damping: self.system.load_damping,
                generators: self
                    .system
                    .generators
                    .iter()
                    .map(|g| GeneratorFile {
                        id: g.id.clone(),
                        h_const: g.h_const,
                        s_rated: Some(g.s_rated),
                        p_mech: g.p_mech,
                        e_internal: g.e_internal,
                        x_reactance: g.x_reactance,
                        delta0: g.delta0,
                    })
                    .collect(),
            },
            scenario: self.scenario.clone(),
            sim: self.sim.clone(),
            window: self.window,
        };
        serde_json::to_string_pretty(&file).expect("plain data serialises")
    }
}

pub fn write_scenario(doc: &ScenarioDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, doc.to_json() + "\n").map_err(|e| Error::io(path, e))
}

/// What [`write_results_csv`] can export.
#[derive(Debug, Clone, Copy)]
pub enum ResultsTable<'a> {
    Estimate(&'a EstimateResult),
    Sweep(&'a [SweepCell]),
}

pub const ESTIMATE_COLUMNS: [&str; 7] = [
    "window_start",
    "window_end",
    "rocof",
    "h_estimate",
    "r_squared",
    "rmse",
    "n_samples",
];

pub const SWEEP_COLUMNS: [&str; 9] = [
    "offset_start",
    "offset_end",
    "rocof",
    "h_estimate",
    "r_squared",
    "rmse",
    "n_samples",
    "relative_error",
    "error",
];

pub fn render_results_csv(table: ResultsTable<'_>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let estimate_fields = |r: &EstimateResult| {
        vec![
            format_sig9(r.rocof),
            format_sig9(r.h_estimate),
            format_sig9(r.r_squared),
            format_sig9(r.rmse),
            r.n_samples_used.to_string(),
        ]
    };
    match table {
        ResultsTable::Estimate(r) => {
            w.write_record(ESTIMATE_COLUMNS).expect("in-memory write");
            let mut row = vec![format_sig9(r.window.0), format_sig9(r.window.1)];
            row.extend(estimate_fields(r));
            w.write_record(&row).expect("in-memory write");
        }
        ResultsTable::Sweep(cells) => {
            w.write_record(SWEEP_COLUMNS).expect("in-memory write");
            let mut ordered: Vec<&SweepCell> = cells.iter().collect();
            ordered.sort_by(|a, b| {
                a.window
                    .offset_start
                    .total_cmp(&b.window.offset_start)
                    .then(a.window.offset_end.total_cmp(&b.window.offset_end))
            });
            for cell in ordered {
                let mut row = vec![
                    format_sig9(cell.window.offset_start),
                    format_sig9(cell.window.offset_end),
                ];
                match &cell.outcome {
                    Ok(r) => {
                        row.extend(estimate_fields(r));
                        row.push(cell.relative_error.map(format_sig9).unwrap_or_default());
                        row.push(String::new());
                    }
                    Err(code) => {
                        row.extend(std::iter::repeat_n(String::new(), 6));
                        row.push(code.clone());
                    }
                }
                w.write_record(&row).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_results_csv(table: ResultsTable<'_>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_results_csv(table)).map_err(|e| Error::io(path, e))
}

/// Reads a single-estimate results file back.
pub fn read_estimate_csv(text: &str) -> Result<Vec<EstimateResult>> {
    read_table(text, &ESTIMATE_COLUMNS, |line, rec| {
        let num = |c: usize| parse_field(line, c, &rec[c]);
        Ok(EstimateResult {
            window: (num(0)?, num(1)?),
            rocof: num(2)?,
            h_estimate: num(3)?,
            r_squared: num(4)?,
            rmse: num(5)?,
            n_samples_used: parse_count(line, 6, &rec[6])?,
        })
    })
}

/// Reads a sweep table back.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepCell>> {
    read_table(text, &SWEEP_COLUMNS, |line, rec| {
        let num = |c: usize| parse_field(line, c, &rec[c]);
        let window = WindowSpec {
            offset_start: num(0)?,
            offset_end: num(1)?,
        };
        let error = rec[8].to_string();
        if !error.is_empty() {
            return Ok(SweepCell {
                window,
                outcome: Err(error),
                relative_error: None,
            });
        }
        let relative_error = if rec[7].is_empty() { None } else { Some(num(7)?) };
        Ok(SweepCell {
            window,
            outcome: Ok(EstimateResult {
                rocof: num(2)?,
                h_estimate: num(3)?,
                window: (f64::NAN, f64::NAN),
                r_squared: num(4)?,
                rmse: num(5)?,
                n_samples_used: parse_count(line, 6, &rec[6])?,
            }),
            relative_error,
        })
    })
}

fn read_table<T>(
    text: &str,
    columns: &[&str],
    mut row: impl FnMut(usize, &csv::StringRecord) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(columns.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", columns.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push(row(line, &rec)?);
    }
    Ok(out)
}

fn parse_field(line: usize, col: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Value {
            line,
            column: col + 1,
            message: format!("`{field}` is not a finite number"),
        })
}

fn parse_count(line: usize, col: usize, field: &str) -> Result<usize> {
    field.parse().map_err(|_| Error::Value {
        line,
        column: col + 1,
        message: format!("`{field}` is not a count"),
    })
}

/// Path of the manifest written next to an output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
