use std::fs;
use std::io::Write;
use std::path::Path;

use bsq_core::conventions::{BRACKET_SIGN, KAPPA_QM};
use tempfile::NamedTempFile;

use crate::CliError;

/// Shortest round-trip representation, so equal inputs give byte-equal files.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// A CSV table preceded by a `#` comment block recording the conventions in force.
pub struct Table {
    meta: Vec<(String, String)>,
    rows: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        let mut rows = csv::Writer::from_writer(Vec::new());
        rows.write_record(columns).expect("in-memory write");
        let meta = vec![
            ("command".into(), command.into()),
            ("sigma".into(), num(BRACKET_SIGN)),
            ("kappa_qm".into(), num(KAPPA_QM)),
        ];
        Self { meta, rows }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.rows.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let body = self.rows.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&body).expect("csv of utf-8 fields"));
        out
    }
}

/// Output of one command: files to write and whether every check held.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub passed: bool,
}

impl Report {
    pub fn new() -> Self {
        Self { passed: true, ..Self::default() }
    }

    pub fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
        for (name, contents) in &self.files {
            write_atomic(&dir.join(name), contents.as_bytes())?;
        }
        Ok(())
    }
}

/// Write through a temporary file in the target directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Config(format!("writing {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_block_precedes_rows() {
        let mut t = Table::new("demo", &["a", "b"]).meta("tol", num(1e-6));
        t.row(["x, y", "1"]);
        let s = t.finish();
        assert_eq!(s, "# command = demo\n# sigma = 1e0\n# kappa_qm = 1e0\n# tol = 1e-6\na,b\n\"x, y\",1\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 4.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
