//! CSV ingestion and seeded synthetic instances.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use richcore::adversarial::{hard_instance_for_coreset, two_point_instance};
use richcore::linalg::Matrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Synthetic {
    /// `A ~ N(0,1)^{n×d}`, `B = A·X + E` with standard normal `X` and `E`.
    Gaussian { n: usize, d: usize, omega: usize },
    TwoPoint,
    /// Orthonormal `A` with a constant first column; `b` vanishes on rows `0..r`.
    Hard { n: usize, d: usize, r: usize },
}

impl Synthetic {
    pub fn parse(spec: &str) -> CliResult<Self> {
        let bad = || CliError::Usage(format!("malformed synthetic spec `{spec}`"));
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<usize> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<CliResult<_>>()?
        };
        match (kind, nums.as_slice()) {
            ("two-point", []) => Ok(Synthetic::TwoPoint),
            ("gaussian", [n, d]) => Ok(Synthetic::Gaussian { n: *n, d: *d, omega: 1 }),
            ("gaussian", [n, d, w]) => Ok(Synthetic::Gaussian { n: *n, d: *d, omega: *w }),
            ("hard", [n, d]) => Ok(Synthetic::Hard { n: *n, d: *d, r: n / 2 }),
            ("hard", [n, d, r]) => Ok(Synthetic::Hard { n: *n, d: *d, r: *r }),
            _ => Err(bad()),
        }
    }

    pub fn generate(&self, seed: u64) -> CliResult<(Matrix, Matrix)> {
        match *self {
            Synthetic::Gaussian { n, d, omega } => {
                if n == 0 || d == 0 || omega == 0 {
                    return Err(CliError::Usage("synthetic dimensions must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut normal = |rows, cols| {
                    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
                };
                let a = normal(n, d);
                let x = normal(d, omega);
                let noise = normal(n, omega);
                let b = &a * x + noise;
                Ok((a, b))
            }
            Synthetic::TwoPoint => {
                let inst = two_point_instance();
                Ok((inst.a, Matrix::from_column_slice(2, 1, inst.b.as_slice())))
            }
            Synthetic::Hard { n, d, r } => {
                let rows: Vec<usize> = (0..r).collect();
                let inst = hard_instance_for_coreset(n, d, &rows)?;
                Ok((inst.a, Matrix::from_column_slice(n, 1, inst.b.as_slice())))
            }
        }
    }
}

pub fn read_csv(path: &Path, header: bool) -> CliResult<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(CliError::Usage(format!(
                    "{}: record {} has {} fields, expected {c}",
                    path.display(),
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Usage(format!(
                    "{}: record {}: `{field}` is not a number",
                    path.display(),
                    line + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| CliError::Usage(format!("{}: no data", path.display())))?;
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(Synthetic),
}

/// Data matrix plus the target columns, if any.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: Matrix,
    pub b: Option<Matrix>,
}

pub fn load_problem(
    source: &DataSource,
    target_files: &[PathBuf],
    target_cols: &[usize],
    header: bool,
    seed: u64,
) -> CliResult<Problem> {
    let (mut a, mut b) = match source {
        DataSource::Csv(path) => (read_csv(path, header)?, None),
        DataSource::Synthetic(spec) => {
            if !target_cols.is_empty() {
                return Err(CliError::Usage("--target-col needs a data file".into()));
            }
            let (a, b) = spec.generate(seed)?;
            (a, Some(b))
        }
    };
    if !target_cols.is_empty() {
        let mut sorted = target_cols.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != target_cols.len() || sorted.last().is_some_and(|&j| j >= a.ncols()) {
            return Err(CliError::Usage(format!(
                "target columns {target_cols:?} invalid for {} data columns",
                a.ncols()
            )));
        }
        let picked = Matrix::from_fn(a.nrows(), target_cols.len(), |i, j| a[(i, target_cols[j])]);
        let keep: Vec<usize> = (0..a.ncols()).filter(|j| !sorted.contains(j)).collect();
        if keep.is_empty() {
            return Err(CliError::Usage("no data columns left after removing targets".into()));
        }
        a = Matrix::from_fn(a.nrows(), keep.len(), |i, j| a[(i, keep[j])]);
        b = Some(picked);
    }
    for path in target_files {
        let t = read_csv(path, header)?;
        if t.nrows() != a.nrows() {
            return Err(CliError::Usage(format!(
                "{}: {} rows, data has {}",
                path.display(),
                t.nrows(),
                a.nrows()
            )));
        }
        b = Some(match b {
            None => t,
            Some(prev) => {
                let (rows, c0, c1) = (prev.nrows(), prev.ncols(), t.ncols());
                Matrix::from_fn(rows, c0 + c1, |i, j| if j < c0 { prev[(i, j)] } else { t[(i, j - c0)] })
            }
        });
    }
    Ok(Problem { a, b })
}
