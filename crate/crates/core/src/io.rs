//! Sample and density file formats.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::estimate::DensityEstimate;
use crate::sample::SampleSet;

/// Header of the density table.
pub const DENSITY_HEADER: &str = "grid,mean,lo,hi";

/// Parses a single-column numeric table. A first row that is not a number
/// is taken as a header; blank lines are skipped and `NA`/`NaN` entries are
/// treated as missing. Rows are numbered from 1 in errors.
pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<f64>> {
    let row_err = |row: usize, message: String| Error::Row {
        path: path.to_path_buf(),
        row,
        message,
    };
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut values = Vec::new();
    let mut missing = 0;
    let mut seen_content = false;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nonempty: Vec<&str> = fields.iter().copied().filter(|f| !f.is_empty()).collect();
        let field = match nonempty.as_slice() {
            [] => continue,
            [f] => *f,
            _ => {
                return Err(row_err(row, format!("expected one column, found {}", fields.len())));
            }
        };
        let first = !seen_content;
        seen_content = true;
        let unquoted = field.trim_matches('"');
        if unquoted.eq_ignore_ascii_case("na") || unquoted.eq_ignore_ascii_case("nan") {
            missing += 1;
            continue;
        }
        match unquoted.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(row_err(row, format!("non-finite value {v}"))),
            Err(_) if first => continue,
            Err(_) => return Err(row_err(row, format!("'{field}' is not a number"))),
        }
    }
    if missing > 0 {
        warn!("{}: skipped {missing} missing values", path.display());
    }
    if !seen_content {
        return Err(Error::File {
            path: path.to_path_buf(),
            message: "file is empty".into(),
        });
    }
    if values.len() < 2 {
        return Err(Error::File {
            path: path.to_path_buf(),
            message: format!("need at least 2 numeric values, found {}", values.len()),
        });
    }
    Ok(values)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a sample file; the working interval is the padded data range.
pub fn load_csv(path: &Path) -> Result<SampleSet> {
    let values = parse_samples(&read_text(path)?, path)?;
    SampleSet::from_values(values).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// One value per line under an `x` header.
pub fn format_samples(values: &[f64]) -> String {
    let mut out = String::with_capacity(24 * (values.len() + 1));
    out.push_str("x\n");
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

/// Grid, posterior mean and band of a density estimate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityTable {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&DensityEstimate> for DensityTable {
    fn from(est: &DensityEstimate) -> Self {
        Self {
            grid: est.grid.clone(),
            mean: est.mean.clone(),
            lower: est.lower.clone(),
            upper: est.upper.clone(),
        }
    }
}

/// `grid,mean,lo,hi` with 17 significant digits, so values survive a round
/// trip exactly.
pub fn format_density_csv(table: &DensityTable) -> String {
    let mut out = String::with_capacity(100 * (table.grid.len() + 1));
    out.push_str(DENSITY_HEADER);
    out.push('\n');
    for i in 0..table.grid.len() {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            table.grid[i], table.mean[i], table.lower[i], table.upper[i]
        );
    }
    out
}

pub fn parse_density_csv(text: &str, path: &Path) -> Result<DensityTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DENSITY_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Row {
                path: path.to_path_buf(),
                row: 1,
                message: format!("expected header '{DENSITY_HEADER}', found '{}'", h.trim()),
            })
        }
        None => {
            return Err(Error::File {
                path: path.to_path_buf(),
                message: "file is empty".into(),
            })
        }
    }
    let mut table = DensityTable::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Row {
                path: path.to_path_buf(),
                row,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let mut vals = [0.0; 4];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.trim().parse().map_err(|_| Error::Row {
                path: path.to_path_buf(),
                row,
                message: format!("'{}' is not a number", f.trim()),
            })?;
        }
        table.grid.push(vals[0]);
        table.mean.push(vals[1]);
        table.lower.push(vals[2]);
        table.upper.push(vals[3]);
    }
    Ok(table)
}

pub fn read_density_csv(path: &Path) -> Result<DensityTable> {
    parse_density_csv(&read_text(path)?, path)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::File {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::File {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(path)
}
