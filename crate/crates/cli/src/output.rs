//! CSV and JSON report writers.
//!
//! Both formats start with a single line carrying the generation time; it
//! is the only line that differs between two runs of the same command.

use std::io::Write;

use anyhow::Result;
use num_complex::Complex;
use serde::Serialize;

use ratheun::verify::Row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `re+imj`, with the shortest representation that round-trips.
pub fn complex_str(v: Complex<f64>) -> String {
    format!("{}{:+}j", v.re, v.im)
}

/// Accepts `1.5`, `-0.2j`, `0.6+0.1j`, `1e-3-2.5e-1j`.
pub fn parse_complex(s: &str) -> Result<Complex<f64>, String> {
    let t = s.trim();
    let bad = || format!("cannot parse '{s}' as a complex number (expected re+imj)");
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|re| Complex::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            let im = match &body[k..] {
                "+" => 1.0,
                "-" => -1.0,
                v => v.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(Complex::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                v => v.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(Complex::new(0.0, im))
        }
    }
}

#[derive(Serialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for JsonComplex {
    fn from(v: Complex<f64>) -> Self {
        Self { re: v.re, im: v.im }
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn write_rows(out: &mut dyn Write, rows: &[Row], format: Format, header: &serde_json::Value) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# generated {}", timestamp())?;
            writeln!(out, "# {header}")?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["suite", "check", "draw", "n", "residual", "threshold", "pass", "params"])?;
            for r in rows {
                w.write_record([
                    r.suite.clone(),
                    r.check.clone(),
                    r.draw.to_string(),
                    r.n.map(|n| n.to_string()).unwrap_or_default(),
                    r.residual.to_string(),
                    r.threshold.to_string(),
                    r.pass.to_string(),
                    r.params.clone(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            writeln!(out, "{{\"generated\": \"{}\",", timestamp())?;
            let body = serde_json::json!({ "config": header, "rows": rows });
            let text = serde_json::to_string_pretty(&body)?;
            // splice the object body after the generated line
            writeln!(out, "{}", &text[1..])?;
        }
    }
    Ok(())
}

/// A parameter echo or a computed value.
#[derive(Clone, Debug)]
pub struct Record {
    pub kind: &'static str,
    pub name: String,
    pub index: Option<usize>,
    pub value: Complex<f64>,
}

impl Record {
    pub fn param(name: &str, index: Option<usize>, value: Complex<f64>) -> Self {
        Self {
            kind: "param",
            name: name.into(),
            index,
            value,
        }
    }

    pub fn result(name: &str, index: Option<usize>, value: Complex<f64>) -> Self {
        Self {
            kind: "result",
            name: name.into(),
            index,
            value,
        }
    }
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    kind: &'a str,
    name: &'a str,
    index: Option<usize>,
    value: JsonComplex,
}

pub fn write_records(out: &mut dyn Write, object: &str, recs: &[Record], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# generated {}", timestamp())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["object", "kind", "name", "index", "value"])?;
            for r in recs {
                w.write_record([
                    object.to_string(),
                    r.kind.to_string(),
                    r.name.clone(),
                    r.index.map(|n| n.to_string()).unwrap_or_default(),
                    complex_str(r.value),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            writeln!(out, "{{\"generated\": \"{}\",", timestamp())?;
            let items: Vec<JsonRecord> = recs
                .iter()
                .map(|r| JsonRecord {
                    kind: r.kind,
                    name: &r.name,
                    index: r.index,
                    value: r.value.into(),
                })
                .collect();
            let text = serde_json::to_string_pretty(&serde_json::json!({ "object": object, "records": items }))?;
            writeln!(out, "{}", &text[1..])?;
        }
    }
    Ok(())
}
