//! Output envelopes and number formatting.

use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-5, 1e12)`. Independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Top-level JSON document: schema tag, version, resolved config, payload.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema: String,
    pub schema_version: u32,
    pub config: &'a RunConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn envelope<'a, T: Serialize>(config: &'a RunConfig, body: T) -> Envelope<'a, T> {
    Envelope {
        schema: format!("refund/{}", config.command),
        schema_version: SCHEMA_VERSION,
        config,
        body,
    }
}

pub fn json_bytes<T: Serialize>(doc: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(doc)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV with `#` comment lines carrying the schema, the resolved config and
/// any extra JSON blocks, then a header row and the data rows.
pub fn csv_bytes(
    config: &RunConfig,
    extra: &[(&str, serde_json::Value)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(
        out,
        "# schema refund/{} version {SCHEMA_VERSION}",
        config.command
    )?;
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    for (name, value) in extra {
        writeln!(out, "# {name} {}", serde_json::to_string(value)?)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().context("flushing CSV")
}

/// Writes to `--out` when given, stdout otherwise.
pub fn emit(config: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &config.out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
