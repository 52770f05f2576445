//! Run folders: `<root>/<id>-<timestamp>/` holding `config.json`, one CSV per
//! series, `summary.json`, stored fields and a `manifest.json` listing them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hwlab::experiments::ExperimentReport;
use hwlab::Field;
use serde::Serialize;
use serde_json::json;

use crate::fieldio::write_field;

pub const STORE_ENV: &str = "HWLAB_STORE";
pub const DEFAULT_ROOT: &str = "hwlab-store";

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct Entry {
    kind: &'static str,
    name: String,
    file: String,
}

/// One run folder being written.
#[derive(Debug)]
pub struct Run {
    dir: PathBuf,
    id: String,
    entries: Vec<Entry>,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Root from `HWLAB_STORE`, else `./hwlab-store`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(STORE_ENV).map_or_else(|| PathBuf::from(DEFAULT_ROOT), PathBuf::from))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create_run(&self, id: &str) -> Result<Run> {
        fs::create_dir_all(&self.root)
            .with_context(|| format!("cannot create store root {}", self.root.display()))?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
        let mut dir = self.root.join(format!("{id}-{stamp}"));
        let mut k = 1;
        while dir.exists() {
            dir = self.root.join(format!("{id}-{stamp}-{k}"));
            k += 1;
        }
        fs::create_dir(&dir).with_context(|| format!("cannot create run folder {}", dir.display()))?;
        Ok(Run {
            dir,
            id: id.to_string(),
            entries: Vec::new(),
        })
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

pub fn series_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("abscissa,value\n");
    for (x, y) in points {
        // shortest round-trip formatting keeps repeated runs byte-identical
        s.push_str(&format!("{x:?},{y:?}\n"));
    }
    s
}

impl Run {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, kind: &'static str, name: &str, file: String, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(&file);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.entries.push(Entry {
            kind,
            name: name.to_string(),
            file,
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write("json", name, format!("{}.json", file_stem(name)), text.as_bytes())
    }

    pub fn write_series(&mut self, name: &str, points: &[(f64, f64)]) -> Result<()> {
        self.write("series", name, format!("{}.csv", file_stem(name)), series_csv(points).as_bytes())
    }

    pub fn write_field(&mut self, name: &str, field: &Field) -> Result<()> {
        let file = format!("{}.field", file_stem(name));
        write_field(&self.dir.join(&file), field)?;
        self.entries.push(Entry {
            kind: "field",
            name: name.to_string(),
            file,
        });
        Ok(())
    }

    /// Config snapshot, series CSVs and the summary of `report`.
    pub fn write_report(&mut self, report: &ExperimentReport) -> Result<()> {
        self.write_json("config", &report.config_snapshot)?;
        for s in &report.series {
            self.write_series(&s.name, &s.points)?;
        }
        let summary = json!({
            "experiment_id": report.experiment_id,
            "passed": report.passed(),
            "verdicts": report.verdicts,
            "fitted_exponents": report.fitted_exponents,
            "notes": report.notes,
            "series": report.series.iter().map(|s| &s.name).collect::<Vec<_>>(),
        });
        self.write_json("summary", &summary)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let manifest = json!({
            "id": self.id,
            "entries": self.entries,
        });
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.dir)
    }
}
