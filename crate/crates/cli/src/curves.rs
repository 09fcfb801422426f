//! Long-form curve CSV: `t1[,t2[,t3]],p_down,shots`, one row per grid point.
//! An empty `shots` cell marks an exact curve. Lines starting with `#` are
//! comments.

use std::path::Path;

use squeezelab::sideband::FlopCurve;

use crate::error::CliError;
use crate::output::{num, Table};

pub fn time_columns(dims: usize) -> Vec<String> {
    if dims == 1 {
        vec!["t".to_string()]
    } else {
        (1..=dims).map(|k| format!("t{k}")).collect()
    }
}

pub fn curve_table(curve: &FlopCurve) -> Table {
    let dims = curve.dimensionality();
    let mut header = time_columns(dims);
    header.push("p_down".into());
    header.push("shots".into());
    let mut table = Table::new(&header);
    let shots = curve.repetitions.map(|r| r.to_string()).unwrap_or_default();
    for i in 0..curve.len() {
        let mut row: Vec<String> = curve.point(i).into_iter().map(num).collect();
        row.push(num(curve.p_down[i]));
        row.push(shots.clone());
        table.push(row);
    }
    table
}

fn diag(path: &Path, line: u64, column: Option<&str>, msg: impl std::fmt::Display) -> CliError {
    match column {
        Some(c) => CliError::Config(format!("{}:{line}: column '{c}': {msg}", path.display())),
        None => CliError::Config(format!("{}:{line}: {msg}", path.display())),
    }
}

/// Parses a curve with `dims` time columns. Rows may come in any order but
/// must cover the product grid exactly once.
pub fn parse_curve(path: &Path, text: &str, dims: usize) -> Result<FlopCurve, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| diag(path, 1, None, format!("unreadable header: {e}")))?
        .clone();
    let mut expected = time_columns(dims);
    expected.push("p_down".into());
    expected.push("shots".into());
    let found: Vec<&str> = headers.iter().collect();
    if found != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        let line = headers.position().map_or(1, |p| p.line());
        return Err(diag(
            path,
            line,
            None,
            format!("header {found:?} does not match the model; expected {expected:?}"),
        ));
    }

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut shots: Option<Option<u32>> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            diag(path, line, None, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64, CliError> {
            let cell = &record[k];
            let v: f64 = cell
                .parse()
                .map_err(|_| diag(path, line, Some(&expected[k]), format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(diag(path, line, Some(&expected[k]), "value is not finite"));
            }
            Ok(v)
        };
        let times = (0..dims).map(field).collect::<Result<Vec<_>, _>>()?;
        if let Some(k) = times.iter().position(|t| *t < 0.0) {
            return Err(diag(path, line, Some(&expected[k]), "pulse duration is negative"));
        }
        let p = field(dims)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(diag(path, line, Some("p_down"), format!("{p} is outside [0, 1]")));
        }
        let cell = &record[dims + 1];
        let row_shots = if cell.is_empty() {
            None
        } else {
            match cell.parse::<u32>() {
                Ok(n) if n > 0 => Some(n),
                _ => return Err(diag(path, line, Some("shots"), format!("'{cell}' is not a positive integer"))),
            }
        };
        match shots {
            None => shots = Some(row_shots),
            Some(s) if s != row_shots => {
                return Err(diag(path, line, Some("shots"), "shot count differs from earlier rows"))
            }
            Some(_) => {}
        }
        rows.push((times, p));
    }
    if rows.is_empty() {
        return Err(diag(path, 1, None, "no data rows"));
    }

    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dims];
    for (times, _) in &rows {
        for (axis, &t) in axes.iter_mut().zip(times) {
            axis.push(t);
        }
    }
    for axis in &mut axes {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let mut p_down = vec![f64::NAN; total];
    for (times, p) in &rows {
        let idx = times.iter().zip(&axes).fold(0, |acc, (t, axis)| {
            let k = axis.binary_search_by(|a| a.total_cmp(t)).expect("value collected above");
            acc * axis.len() + k
        });
        if !p_down[idx].is_nan() {
            return Err(CliError::Config(format!(
                "{}: grid point {times:?} appears more than once",
                path.display()
            )));
        }
        p_down[idx] = *p;
    }
    if rows.len() != total {
        return Err(CliError::Config(format!(
            "{}: {} rows do not fill the {shape:?} time grid",
            path.display(),
            rows.len()
        )));
    }
    Ok(FlopCurve {
        axes,
        p_down,
        repetitions: shots.flatten(),
    })
}

pub fn read_curve(path: &Path, dims: usize) -> Result<FlopCurve, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_error(path, e))?;
    parse_curve(path, &text, dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let curve = FlopCurve {
            axes: vec![vec![0.0, 1e-5], vec![0.0, 2e-5, 4e-5]],
            p_down: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
            repetitions: Some(200),
        };
        let bytes = curve_table(&curve).render("h").unwrap();
        let back = parse_curve(Path::new("c.csv"), std::str::from_utf8(&bytes).unwrap(), 2).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn diagnostics_name_line_and_column() {
        let text = "t,p_down,shots\n0,1,200\n1e-5,abc,200\n";
        let err = parse_curve(Path::new("c.csv"), text, 1).unwrap_err().to_string();
        assert!(err.contains("c.csv:3"), "{err}");
        assert!(err.contains("p_down"), "{err}");
        let err = parse_curve(Path::new("c.csv"), "t,p,shots\n0,1,\n", 1).unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
        let err = parse_curve(Path::new("c.csv"), "t1,t2,p_down,shots\n0,0,1,\n0,1,1,\n1,0,1,\n", 2)
            .unwrap_err()
            .to_string();
        assert!(err.contains("do not fill"), "{err}");
    }

    #[test]
    fn unordered_rows_accepted() {
        let text = "t,p_down,shots\n2e-5,0.5,\n0,1,\n1e-5,0.75,\n";
        let c = parse_curve(Path::new("c.csv"), text, 1).unwrap();
        assert_eq!(c.axes[0], vec![0.0, 1e-5, 2e-5]);
        assert_eq!(c.p_down, vec![1.0, 0.75, 0.5]);
        assert_eq!(c.repetitions, None);
    }
}
