//! Writing tables, JSON documents and plots, stamped with the config hash and seed.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{Format, GlobalArgs};

/// SHA-256 of the raw configuration bytes, hex encoded.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Provenance {
    fn seed_text(&self) -> String {
        self.seed.map(|s| s.to_string()).unwrap_or_default()
    }
}

/// Rows of strings under a header.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Number formatting for tables: shortest round-trip representation.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn csv_bytes(table: &Table, prov: &Provenance) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = table.headers.clone();
    header.extend(["config_sha256".to_string(), "seed".to_string()]);
    w.write_record(&header)?;
    for row in &table.rows {
        let mut r = row.clone();
        r.push(prov.config_sha256.clone());
        r.push(prov.seed_text());
        w.write_record(&r)?;
    }
    w.into_inner().context("flushing CSV")
}

pub fn json_bytes(mut doc: Value, prov: &Provenance) -> Result<Vec<u8>> {
    let stamped = match doc.as_object_mut() {
        Some(map) => {
            map.insert("config_sha256".into(), prov.config_sha256.clone().into());
            map.insert("seed".into(), prov.seed.into());
            doc
        }
        None => serde_json::json!({ "config_sha256": prov.config_sha256, "seed": prov.seed, "data": doc }),
    };
    let mut out = serde_json::to_vec_pretty(&stamped)?;
    out.push(b'\n');
    Ok(out)
}

fn write(out: &Path, name: &str, ext: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(format!("{name}.{ext}"));
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Emits the table or document in the requested format, to `--out` or stdout.
pub fn emit(g: &GlobalArgs, name: &str, table: &Table, doc: Value, svg: Option<String>, prov: &Provenance) -> Result<()> {
    let (bytes, ext) = match g.format {
        Format::Csv => (csv_bytes(table, prov)?, "csv"),
        Format::Json => (json_bytes(doc, prov)?, "json"),
        Format::Svg => match svg {
            Some(s) => (s.into_bytes(), "svg"),
            None => bail!("no plot is available for `{name}`; use --format csv or json"),
        },
    };
    match &g.out {
        Some(dir) => write(dir, name, ext, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

/// Writes CSV and JSON together (plus SVG when requested and available) into `--out`.
pub fn emit_all(g: &GlobalArgs, name: &str, table: &Table, doc: Value, svg: Option<String>, prov: &Provenance) -> Result<()> {
    let Some(dir) = &g.out else {
        return emit(g, name, table, doc, svg, prov);
    };
    write(dir, name, "csv", &csv_bytes(table, prov)?)?;
    write(dir, name, "json", &json_bytes(doc, prov)?)?;
    if g.format == Format::Svg {
        // Plots are decorative; a missing plot never fails the run.
        if let Some(s) = svg {
            write(dir, name, "svg", s.as_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_of_empty_input() {
        assert_eq!(config_hash(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn csv_carries_provenance() {
        let mut t = Table::new(&["a"]);
        t.push(vec!["1.5".into()]);
        let prov = Provenance { config_sha256: "abc".into(), seed: Some(7) };
        let text = String::from_utf8(csv_bytes(&t, &prov).unwrap()).unwrap();
        assert_eq!(text, "a,config_sha256,seed\n1.5,abc,7\n");
    }
}
