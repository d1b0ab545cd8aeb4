use std::collections::HashSet;
use std::path::{Path, PathBuf};

use kappa_core::ObservationVector;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum NaPolicy {
    /// Fail on the first empty or non-numeric cell.
    #[default]
    Reject,
    /// Skip any row with an empty or non-numeric cell.
    DropRow,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub na_policy: NaPolicy,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            na_policy: NaPolicy::Reject,
        }
    }
}

/// Numeric columns of equal length with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub source: PathBuf,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, CliError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Input(format!("unknown column `{name}`")))
    }

    pub fn raw(&self, name: &str) -> Result<&[f64], CliError> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn observations(&self, name: &str) -> Result<ObservationVector, CliError> {
        Ok(ObservationVector::new(self.raw(name)?.to_vec())?)
    }
}

pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;

    let mut names: Vec<String> = if options.has_header {
        reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect()
    } else {
        Vec::new()
    };

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if names.is_empty() {
            names = (1..=record.len()).map(|i| format!("col{i}")).collect();
            columns = vec![Vec::new(); names.len()];
        }
        let parsed: Result<Vec<f64>, String> = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let cell = cell.trim();
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(format!(
                        "{}: line {line}, column `{}`: `{cell}` is not a finite number",
                        path.display(),
                        names[j]
                    )),
                }
            })
            .collect();
        match (parsed, options.na_policy) {
            (Ok(values), _) => {
                for (col, v) in columns.iter_mut().zip(values) {
                    col.push(v);
                }
            }
            (Err(_), NaPolicy::DropRow) => continue,
            (Err(msg), NaPolicy::Reject) => return Err(CliError::Input(msg)),
        }
    }

    let mut seen = HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(CliError::Input(format!("duplicate column name `{dup}`")));
    }
    Ok(Dataset {
        names,
        columns,
        source: path.to_path_buf(),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if let csv::ErrorKind::UnequalLengths {
        pos,
        expected_len,
        len,
    } = e.kind()
    {
        let line = pos.as_ref().map_or(0, |p| p.line());
        return CliError::Input(format!(
            "{}: line {line}: expected {expected_len} fields, found {len}",
            path.display()
        ));
    }
    CliError::Input(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_and_rows() {
        let f = write("x,y\n1,2\n3,4\n");
        let d = load_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(d.names, vec!["x", "y"]);
        assert_eq!(d.columns, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!((d.n(), d.p()), (2, 2));
    }

    #[test]
    fn ragged_row_reports_line() {
        let f = write("x,y\n1,2\n3\n");
        let err = load_csv(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn drop_row_policy() {
        let f = write("1,\n");
        let opts = LoadOptions {
            has_header: false,
            na_policy: NaPolicy::DropRow,
            ..LoadOptions::default()
        };
        let d = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d.n(), 0);
        assert_eq!(d.names, vec!["col1", "col2"]);
        assert!(d.observations("col1").is_err());

        let err = load_csv(f.path(), &LoadOptions { has_header: false, ..LoadOptions::default() })
            .unwrap_err();
        assert!(err.to_string().contains("not a finite number"));
    }

    #[test]
    fn delimiter_and_duplicates() {
        let f = write("a;b\n1;2\n");
        let opts = LoadOptions {
            delimiter: b';',
            ..LoadOptions::default()
        };
        assert_eq!(load_csv(f.path(), &opts).unwrap().raw("b").unwrap(), &[2.0]);
        let f = write("a,a\n1,2\n");
        assert!(load_csv(f.path(), &LoadOptions::default()).is_err());
        assert!(load_csv(Path::new("/nonexistent/file.csv"), &LoadOptions::default()).is_err());
    }
}
