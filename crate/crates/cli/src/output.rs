use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use curved_born::SiteSet;

/// What a subcommand produced, ready to print or persist.
pub struct Output {
    /// File name of the JSON document inside `--out`.
    pub json_name: &'static str,
    pub json: String,
    pub text: String,
    pub csv: Option<String>,
    pub failed: bool,
}

impl Output {
    pub fn new<T: serde::Serialize>(json_name: &'static str, value: &T, text: String) -> anyhow::Result<Self> {
        let mut json = serde_json::to_string_pretty(value)?;
        json.push('\n');
        Ok(Self { json_name, json, text, csv: None, failed: false })
    }

    pub fn failed(&self) -> bool {
        self.failed
    }
}

pub fn emit(result: &Output, out: Option<&Path>, json: bool) -> anyhow::Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(result.json_name), &result.json)?;
        if let Some(csv) = &result.csv {
            fs::write(dir.join("sweep.csv"), csv)?;
        }
    }
    if json {
        print!("{}", result.json);
    } else {
        print!("{}", result.text);
    }
    Ok(())
}

/// Left-aligned first column, right-aligned numbers.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| self.rows.iter().map(|r| r[c].len()).chain([self.header[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(line, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

pub fn prob(p: f64) -> String {
    format!("{p:.12}")
}

pub fn sites(s: SiteSet) -> String {
    if s.is_empty() {
        return "-".into();
    }
    let v: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(","))
}
