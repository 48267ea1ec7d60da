//! Matrix and vector files, output writing and plot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::recipes::CliError;

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Invalid(format!("{}:{}: '{f}' is not a number", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Dense matrix, one CSV row per matrix row.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>, CliError> {
    let rows = read_rows(path)?;
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::Invalid(format!("{} holds no matrix entries", path.display())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::Invalid(format!(
            "{}: row {} has {} entries, expected {cols}",
            path.display(),
            i + 1,
            r.len()
        )));
    }
    let m = rows.len();
    Array2::from_shape_vec((m, cols), rows.into_iter().flatten().collect())
        .map_err(|e| CliError::Invalid(e.to_string()))
}

/// Vector as one value per line or a single row.
pub fn read_vector(path: &Path) -> Result<Array1<f64>, CliError> {
    let rows = read_rows(path)?;
    let values: Vec<f64> = if rows.len() == 1 {
        rows.into_iter().next().unwrap_or_default()
    } else if rows.iter().all(|r| r.len() == 1) {
        rows.into_iter().flatten().collect()
    } else {
        return Err(CliError::Invalid(format!(
            "{} must hold one value per line or a single row",
            path.display()
        )));
    };
    if values.is_empty() {
        return Err(CliError::Invalid(format!("{} holds no values", path.display())));
    }
    Ok(Array1::from(values))
}

pub fn vector_csv(v: &Array1<f64>) -> String {
    v.iter().map(|x| format!("{x:.16e}\n")).collect()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

const PREAMBLE: &str = "set datafile separator ','\nset key top left\nset grid\n";

/// Mean NMSE with 99% error bars against `M`, one panel per bit depth.
pub fn curve_script(stem: &str, bits: &[u32], methods: &[(&str, &str)]) -> String {
    let mut s = format!(
        "# NMSE against M from {stem}.csv (columns: 2 = m, 6 = method, 8 = bits, 10 = mean_nmse, 11 = ci99).\n\
         {PREAMBLE}set terminal pngcairo size 800,{}\nset output '{stem}.png'\nset multiplot layout {},1\n\
         set logscale y\nset xlabel 'M'\nset ylabel 'NMSE'\n",
        300 * bits.len(),
        bits.len()
    );
    for b in bits {
        s.push_str(&format!("set title '{b} bit'\nplot "));
        let curves: Vec<String> = methods
            .iter()
            .enumerate()
            .map(|(i, (method, label))| {
                let file = if i == 0 { format!("'{stem}.csv'") } else { "''".to_string() };
                format!(
                    "{file} every ::1 using 2:((strcol(6) eq '{method}' && strcol(8) eq '{b}') ? $10 : 1/0):11 \
                     with yerrorlines title '{label}'"
                )
            })
            .collect();
        s.push_str(&curves.join(", \\\n     "));
        s.push('\n');
    }
    s.push_str("unset multiplot\n");
    s
}

/// Mean NMSE over the `(δ, ρ)` plane, one panel per method.
pub fn phase_script(stem: &str, methods: &[&str]) -> String {
    let mut s = format!(
        "# Phase-space NMSE from {stem}.csv (columns: 4 = delta, 5 = rho, 6 = method, 10 = mean_nmse).\n\
         {PREAMBLE}set terminal pngcairo size 800,{}\nset output '{stem}.png'\nset multiplot layout {},1\n\
         set view map\nset xrange [0:1]\nset yrange [0:1]\nset cbrange [0:1]\nset xlabel 'delta'\nset ylabel 'rho'\n",
        400 * methods.len(),
        methods.len()
    );
    for m in methods {
        s.push_str(&format!(
            "set title '{m}'\nsplot '{stem}.csv' every ::1 using 4:5:(strcol(6) eq '{m}' ? $10 : 1/0) \
             with points pointtype 5 palette notitle\n"
        ));
    }
    s.push_str("unset multiplot\n");
    s
}
