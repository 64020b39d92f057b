//! Output directory: CSV tables, plot descriptions, resolved config and
//! provenance.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_err, Result};

/// `hamlearn <version> (git <describe>)`.
pub fn provenance_string() -> String {
    format!("hamlearn {} (git {})", env!("CARGO_PKG_VERSION"), env!("HAMLEARN_GIT"))
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

#[derive(Serialize)]
struct Provenance<'a> {
    provenance: String,
    command: &'a str,
    seeds: &'a crate::config::Seeds,
    args: &'a [String],
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv<S: AsRef<str>>(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(AsRef::as_ref))?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(())
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(io_err(&path))
    }

    /// `config.toml` with every default filled in, and `provenance.json`.
    pub fn record_run(&self, command: &str, cfg: &RunConfig, args: &[String]) -> Result<()> {
        self.text("config.toml", &cfg.to_toml())?;
        self.json("provenance.json", &Provenance { provenance: provenance_string(), command, seeds: &cfg.seeds, args })
    }
}

/// Which columns of which CSV make up a figure.
#[derive(Clone, Debug, Serialize)]
pub struct Plot {
    pub title: String,
    pub kind: &'static str,
    pub x: PlotAxis,
    pub y: PlotAxis,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlotAxis {
    pub label: String,
    pub log: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub label: String,
    pub file: String,
    pub x: String,
    pub y: String,
    /// Optional filter `column=value` selecting the rows of this series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    /// Third column for heatmaps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
}

impl PlotAxis {
    pub fn linear(label: &str) -> Self {
        Self { label: label.into(), log: false }
    }
    pub fn log(label: &str) -> Self {
        Self { label: label.into(), log: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_uses_unix_newlines() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        out.csv("a.csv", &["x", "y"], [vec!["1", "2"], vec!["3", "a,b"]]).unwrap();
        assert_eq!(fs::read_to_string(out.path("a.csv")).unwrap(), "x,y\n1,2\n3,\"a,b\"\n");
    }
}
