//! Report envelope and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Stable claim ids embedded in every report.
pub mod claims {
    pub use crate::scaling_experiments::claims::*;
    pub const THRESHOLDS: &str = "exponents.threshold-table";
    pub const SHARP_GENERAL: &str = "sharp-constant.general";
    pub const SHARP_RADIAL: &str = "sharp-constant.radial";
    pub const RADON: &str = "radon.kappa-closed-form";
    pub const CONE_SUPPORT: &str = "velocity-average.cone-support";
    pub const DUALITY: &str = "duality.identity";
    pub const FUNK_HECKE: &str = "funk-hecke.series";
    pub const EXTREMISER: &str = "sharp-constant.extremiser";
    pub const SELFTEST: &str = "acceptance.suite";
}

/// One table: header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let e = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(&self.header).map_err(e)?;
        for r in &self.rows {
            w.write_record(r).map_err(e)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Shortest decimal that reads back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub claim: String,
    pub pass: bool,
    pub summary: String,
    pub params: Value,
    pub results: Value,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
}

impl Report {
    pub fn stamp(&mut self, elapsed_s: f64, deterministic: bool) {
        if deterministic {
            self.timestamp_unix = None;
            self.elapsed_s = None;
        } else {
            self.timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
            self.elapsed_s = Some(elapsed_s);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Writes via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// Everything a command hands back for emission.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: Report,
    pub table: Option<Table>,
    /// Extra files: (file name, contents).
    pub extra: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let stem = &self.report.command;
        let mut out = Vec::new();
        let p = dir.join(format!("{stem}.json"));
        write_atomic(&p, self.report.to_json().as_bytes())?;
        out.push(p);
        if let Some(t) = &self.table {
            let p = dir.join(format!("{stem}.csv"));
            write_atomic(&p, t.to_csv()?.as_bytes())?;
            out.push(p);
        }
        for (name, bytes) in &self.extra {
            let p = dir.join(name);
            write_atomic(&p, bytes)?;
            out.push(p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, 12.566370614359172, -3.0, 2f64.powi(-40)] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5,\"x,y\"\n");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn deterministic_stamp_omits_time() {
        let mut r = Report {
            command: "c".into(),
            claim: "x".into(),
            pass: true,
            summary: String::new(),
            params: Value::Null,
            results: Value::Null,
            version: "0",
            timestamp_unix: None,
            elapsed_s: None,
        };
        r.stamp(1.0, true);
        assert!(!r.to_json().contains("timestamp"));
        r.stamp(1.0, false);
        assert!(r.to_json().contains("timestamp_unix"));
    }
}
