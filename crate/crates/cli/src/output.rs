//! Long-format CSV rows and the sidecar metadata written next to them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const HEADER: &str = "quantity,x,y,N,value,err";

#[derive(Debug, Clone)]
pub struct Row {
    pub quantity: String,
    pub x: Option<i64>,
    pub y: Option<i64>,
    pub n: Option<i64>,
    pub value: f64,
    pub err: Option<f64>,
}

impl Row {
    pub fn scalar(quantity: &str, value: f64, err: Option<f64>) -> Self {
        Row {
            quantity: quantity.to_string(),
            x: None,
            y: None,
            n: None,
            value,
            err,
        }
    }

    pub fn at(quantity: &str, x: i64, value: f64, err: Option<f64>) -> Self {
        Row {
            x: Some(x),
            ..Row::scalar(quantity, value, err)
        }
    }

    pub fn with_y(mut self, y: i64) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_n(mut self, n: i64) -> Self {
        self.n = Some(n);
        self
    }
}

pub fn to_csv(rows: &[Row]) -> String {
    let opt_i = |v: Option<i64>| v.map(|v| v.to_string()).unwrap_or_default();
    let opt_f = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    let mut s = String::with_capacity(32 * rows.len() + HEADER.len() + 1);
    s.push_str(HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.quantity,
            opt_i(r.x),
            opt_i(r.y),
            opt_i(r.n),
            r.value,
            opt_f(r.err)
        );
    }
    s
}

/// Write `text` to `dir/name`, or to stdout without a directory.
pub fn emit(dir: Option<&Path>, name: &str, text: &str) -> std::io::Result<()> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            fs::write(d.join(name), text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_meta(dir: Option<&Path>, command: &str, meta: serde_json::Value) -> std::io::Result<()> {
    let Some(d) = dir else { return Ok(()) };
    let doc = serde_json::json!({
        "schema": "walkpot-long",
        "version": SCHEMA_VERSION,
        "columns": HEADER.split(',').collect::<Vec<_>>(),
        "command": command,
        "params": meta,
    });
    fs::create_dir_all(d)?;
    fs::write(d.join(format!("{command}.meta.json")), serde_json::to_string_pretty(&doc)? + "\n")
}
