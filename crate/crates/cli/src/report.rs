use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use brw_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

/// Process exit statuses.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub status: u8,
    pub category: &'static str,
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            status: EXIT_CONFIG,
            category: "config",
            field: None,
            message: message.into(),
        }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.to_string()),
            ..Self::config(message)
        }
    }

    pub fn resource(message: impl Into<String>) -> Self {
        Self {
            status: EXIT_RESOURCE,
            category: "resource",
            field: None,
            message: message.into(),
        }
    }

    pub fn from_core(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Resource(_) | Error::Io(_) => Self::resource(message),
            Error::Numerical(_) => Self {
                status: EXIT_CHECK_FAILED,
                category: "numerical",
                field: None,
                message,
            },
            _ => Self::config(message),
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> String {
        let mut v = json!({ "error": self.category, "message": self.message });
        if let Some(f) = &self.field {
            v["field"] = json!(f);
        }
        v.to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::resource(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::resource(e.to_string())
    }
}

/// One embedded comparison. `passed = None` marks an informational row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// Where the target comes from: `analytic limit`, `exact computation`,
    /// `closed form`, `trivial` or `simulation`.
    pub target_source: &'static str,
    pub passed: Option<bool>,
}

impl Check {
    pub fn abs(name: impl Into<String>, value: f64, target: f64, tolerance: f64, source: &'static str) -> Self {
        let passed = (value - target).abs() <= tolerance;
        Self::with(name, value, target, tolerance, source, Some(passed))
    }

    pub fn rel(name: impl Into<String>, value: f64, target: f64, tolerance: f64, source: &'static str) -> Self {
        let passed = (value - target).abs() <= tolerance * target.abs();
        Self::with(name, value, target, tolerance, source, Some(passed))
    }

    pub fn with(
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
        source: &'static str,
        passed: Option<bool>,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            target_source: source,
            passed,
        }
    }
}

/// Outputs of one command: named files plus the checks that decide the exit status.
#[derive(Debug)]
pub struct Report {
    pub out_dir: PathBuf,
    pub kind: String,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub extra: Value,
}

impl Report {
    pub fn new(out_dir: &Path, kind: &str) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            kind: kind.to_string(),
            checks: Vec::new(),
            files: Vec::new(),
            extra: json!({}),
        })
    }

    /// Writes `name` in the output directory through a temporary file and a rename.
    pub fn write_file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        write_atomic(&self.out_dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        self.write_file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::resource(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    /// Writes `summary.json` and returns the exit status.
    pub fn finish(mut self) -> Result<u8, CliError> {
        let passed = self.passed();
        let summary = json!({
            "kind": self.kind,
            "passed": passed,
            "checks": self.checks,
            "files": self.files,
            "details": self.extra,
        });
        self.write_json("summary.json", &summary)?;
        for c in &self.checks {
            let verdict = match c.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            println!(
                "{verdict} {}: value {:.6e}, target {:.6e} ({}), tolerance {:.1e}",
                c.name, c.value, c.target, c.target_source, c.tolerance
            );
        }
        println!("outputs in {}", self.out_dir.display());
        Ok(if passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
    }
}

pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::config(format!("bad output path {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut file = std::io::BufWriter::new(fs::File::create(&tmp)?);
        body(&mut file)?;
        file.into_inner()
            .map_err(|e| CliError::resource(e.to_string()))?
            .sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// CSV writer with the shared dialect: comma separated, header row, 17 significant digits.
pub fn csv_rows(w: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
