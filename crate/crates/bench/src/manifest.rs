//! Dataset (`path,subject_id,group,role`) and pair (`path_a,path_b,same,fold`) manifests.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Component, Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Gallery,
    Probe,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Gallery => "gallery",
            Role::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: String,
    pub subject_id: String,
    pub group: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub base_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRow {
    pub path_a: String,
    pub path_b: String,
    pub same: bool,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairManifest {
    pub base_dir: PathBuf,
    pub rows: Vec<PairRow>,
}

fn base_dir_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn check_relative(source: &Path, line: u64, rel: &str) -> Result<()> {
    let p = Path::new(rel);
    let escapes = p.is_absolute()
        || p.components()
            .any(|c| matches!(c, Component::ParentDir | Component::Prefix(_)));
    if rel.is_empty() || escapes {
        return Err(HarnessError::Parse {
            path: source.to_path_buf(),
            line,
            message: format!("image path `{rel}` must be relative to the manifest directory"),
        });
    }
    Ok(())
}

/// Reads a CSV with the given required columns, yielding `(line, fields)` in column order.
fn read_columns<R: Read>(reader: R, source: &Path, columns: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: u64, message: String| HarnessError::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let headers = csv.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| parse_err(1, format!("missing column `{c}` (expected {})", columns.join(","))))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields = index.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect();
        out.push((line, fields));
    }
    Ok(out)
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_reader(file, path, base_dir_of(path))
    }

    /// Parses manifest CSV text; `source` names the input in error messages.
    pub fn from_reader<R: Read>(reader: R, source: &Path, base_dir: PathBuf) -> Result<Self> {
        let mut rows = Vec::new();
        for (line, f) in read_columns(reader, source, &["path", "subject_id", "group", "role"])? {
            check_relative(source, line, &f[0])?;
            let role = match f[3].as_str() {
                "gallery" => Role::Gallery,
                "probe" => Role::Probe,
                other => {
                    return Err(HarnessError::Parse {
                        path: source.to_path_buf(),
                        line,
                        message: format!("role must be `gallery` or `probe`, got `{other}`"),
                    })
                }
            };
            if f[1].is_empty() {
                return Err(HarnessError::Parse {
                    path: source.to_path_buf(),
                    line,
                    message: "empty subject_id".into(),
                });
            }
            rows.push(ManifestRow {
                path: f[0].clone(),
                subject_id: f[1].clone(),
                group: f[2].clone(),
                role,
            });
        }
        Ok(Self { base_dir, rows })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn rows_with_role(&self, role: Role) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(move |r| r.role == role)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w =
            csv::Writer::from_path(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| HarnessError::Input(format!("{}: {e}", path.display()));
        w.write_record(["path", "subject_id", "group", "role"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([r.path.as_str(), &r.subject_id, &r.group, r.role.as_str()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))
    }
}

impl PairManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_reader(file, path, base_dir_of(path))
    }

    pub fn from_reader<R: Read>(reader: R, source: &Path, base_dir: PathBuf) -> Result<Self> {
        let err = |line: u64, message: String| HarnessError::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut rows = Vec::new();
        for (line, f) in read_columns(reader, source, &["path_a", "path_b", "same", "fold"])? {
            check_relative(source, line, &f[0])?;
            check_relative(source, line, &f[1])?;
            let same = match f[2].as_str() {
                "1" => true,
                "0" => false,
                other => return Err(err(line, format!("`same` must be 0 or 1, got `{other}`"))),
            };
            let fold = f[3]
                .parse()
                .map_err(|_| err(line, format!("`fold` must be a non-negative integer, got `{}`", f[3])))?;
            rows.push(PairRow {
                path_a: f[0].clone(),
                path_b: f[1].clone(),
                same,
                fold,
            });
        }
        let folds: BTreeSet<usize> = rows.iter().map(|r| r.fold).collect();
        if let Some(missing) = (0..folds.len()).find(|f| !folds.contains(f)) {
            return Err(HarnessError::Input(format!(
                "{}: fold indices must be contiguous from 0; fold {missing} is missing",
                source.display()
            )));
        }
        Ok(Self { base_dir, rows })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn n_folds(&self) -> usize {
        self.rows.iter().map(|r| r.fold + 1).max().unwrap_or(0)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| HarnessError::Input(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["path_a", "path_b", "same", "fold"]).map_err(csv_err)?;
        for r in &self.rows {
            let same = if r.same { "1" } else { "0" };
            w.write_record([r.path_a.as_str(), &r.path_b, same, &r.fold.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(text: &str) -> Result<DatasetManifest> {
        DatasetManifest::from_reader(text.as_bytes(), Path::new("m.csv"), PathBuf::from("/data"))
    }

    fn pairs(text: &str) -> Result<PairManifest> {
        PairManifest::from_reader(text.as_bytes(), Path::new("p.csv"), PathBuf::from("/data"))
    }

    #[test]
    fn parses_dataset_rows() {
        let m = dataset("path,subject_id,group,role\na.pgm,s1,clean,gallery\nsub/b.pgm,s1,noise,probe\n").unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[1].role, Role::Probe);
        assert_eq!(m.resolve(&m.rows[1].path), PathBuf::from("/data/sub/b.pgm"));
        assert_eq!(m.rows_with_role(Role::Gallery).count(), 1);
    }

    #[test]
    fn dataset_errors_name_lines() {
        let err = dataset("path,subject_id,group,role\na.pgm,s1,g,gallery\nb.pgm,s2,g,judge\n").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 3, .. }), "{err}");
        assert!(dataset("path,subject,group,role\n").is_err());
        let err = dataset("path,subject_id,group,role\n../x.pgm,s,g,probe\n").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parses_pairs() {
        let p = pairs("path_a,path_b,same,fold\na,b,1,0\na,c,0,1\n").unwrap();
        assert_eq!(p.n_folds(), 2);
        assert!(p.rows[0].same && !p.rows[1].same);
    }

    #[test]
    fn malformed_fold_names_line() {
        let err = pairs("path_a,path_b,same,fold\na,b,1,0\na,c,0,x\n").unwrap_err();
        match err {
            HarnessError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("fold"));
            }
            other => panic!("unexpected {other}"),
        }
        assert!(pairs("path_a,path_b,same,fold\na,b,2,0\n").is_err());
        assert!(pairs("path_a,path_b,same,fold\na,b,1,0\na,b,1,2\n").is_err());
    }
}
