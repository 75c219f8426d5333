//! Result tables and their CSV / JSON encodings.
//!
//! A CSV file starts with `# key = value` metadata lines holding the full
//! config of the run plus `version`, followed by a header row and data rows.

use serde_json::{json, Map, Value};

use sdpi_est::bounds::fmt_num;

use crate::config::{parse_config, Config};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    /// Rendered `true` / `false`.
    Flag(bool),
    /// Rendered `yes` / `no`.
    Verdict(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Verdict(b) => (if *b { "yes" } else { "no" }).to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(fmt_num(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
            Cell::Verdict(b) => json!(if *b { "yes" } else { "no" }),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn header_line(&self) -> String {
        self.columns.join(",")
    }

    pub fn data_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.iter().map(Cell::render).collect::<Vec<_>>().join(","))
            .collect()
    }

    pub fn to_csv(&self, config: &Config) -> String {
        let mut out = format!("# version = {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in config.iter() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.header_line());
        out.push('\n');
        for line in self.data_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &Config) -> CliResult<String> {
        let config: Map<String, Value> = config.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::to_json)).collect())
            })
            .collect();
        let doc = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "columns": self.columns,
            "rows": rows,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

/// A CSV file written by this tool, split into its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub version: Option<String>,
    /// Config of the run, without `version`.
    pub config: Config,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
}

/// Split an output CSV into metadata, header and raw data lines.
pub fn parse_output(text: &str) -> CliResult<OutputFile> {
    let mut lines = text.lines();
    let mut meta = String::new();
    let header = loop {
        match lines.next() {
            Some(line) if line.starts_with('#') => {
                let body = line[1..].trim();
                if !body.is_empty() && !body.contains('=') {
                    return Err(CliError::Output(format!("metadata line {line:?} is not `# key = value`")));
                }
                meta.push_str(body);
                meta.push('\n');
            }
            Some(line) if !line.trim().is_empty() => break line,
            Some(_) => return Err(CliError::Output("blank line before the header row".into())),
            None => return Err(CliError::Output("no header row".into())),
        }
    };
    let mut config = parse_config(&meta)?;
    let version = config.remove("version");
    if config.get("command").is_none() {
        return Err(CliError::Output("metadata has no `command`".into()));
    }
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    if columns.iter().any(|c| c.trim().is_empty()) {
        return Err(CliError::Output("empty column name in header".into()));
    }
    let rows = lines.filter(|l| !l.is_empty()).map(str::to_string).collect();
    Ok(OutputFile {
        version,
        config,
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Table, Config) {
        let mut t = Table::new(&["delta", "value", "note", "ok", "certified", "blank"]);
        t.push(vec![
            0.1.into(),
            Cell::Num(1.0 / 3.0),
            "a,b".into(),
            Cell::Flag(true),
            Cell::Verdict(false),
            Cell::Empty,
        ]);
        t.push(vec![Cell::Int(3), Cell::Num(f64::INFINITY), "x".into(), Cell::Flag(false), Cell::Verdict(true), Cell::Empty]);
        let mut c = Config::new();
        c.insert("command", "bound").unwrap();
        c.insert("target", "cor4").unwrap();
        c.insert("delta", "0.4:1:61").unwrap();
        (t, c)
    }

    #[test]
    fn csv_layout() {
        let (t, c) = sample();
        let csv = t.to_csv(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# version = "));
        assert_eq!(lines[1], "# command = bound");
        assert_eq!(lines[4], "delta,value,note,ok,certified,blank");
        assert_eq!(lines[5], "0.1,0.3333333333333333,\"a,b\",true,no,");
        assert_eq!(lines[6], "3,inf,x,false,yes,");
    }

    #[test]
    fn output_roundtrip() {
        let (t, c) = sample();
        let parsed = parse_output(&t.to_csv(&c)).unwrap();
        assert_eq!(parsed.config, c);
        assert_eq!(parsed.version.as_deref(), Some(env!("CARGO_PKG_VERSION")));
        assert_eq!(parsed.columns, t.columns);
        assert_eq!(parsed.rows, t.data_lines());
    }

    #[test]
    fn output_errors() {
        assert!(parse_output("").is_err());
        assert!(parse_output("# command = bound\n").is_err());
        assert!(parse_output("# target = x\na,b\n").is_err());
        assert!(parse_output("# just words\na\n").is_err());
        assert!(parse_output("# command = bound\n\na\n").is_err());
        assert!(parse_output("# command = bound\na,,b\n").is_err());
    }

    #[test]
    fn json_layout() {
        let (t, c) = sample();
        let v: Value = serde_json::from_str(&t.to_json(&c).unwrap()).unwrap();
        assert_eq!(v["config"]["target"], "cor4");
        assert_eq!(v["rows"][0]["certified"], "no");
        assert_eq!(v["rows"][1]["value"], "inf");
        assert!(v["rows"][0]["blank"].is_null());
        assert_eq!(v["columns"].as_array().unwrap().len(), 6);
    }
}
