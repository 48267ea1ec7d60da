//! Result CSV and run manifest.

use serde::{Deserialize, Serialize};

use super::{ExperimentResult, PointResult};
use crate::error::{invalid, Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "n",
    "m",
    "k",
    "delta",
    "rho",
    "method",
    "noise_mode",
    "bits",
    "trials",
    "mean_nmse",
    "ci99",
    "nonconverged",
];

pub const MANIFEST_SCHEMA: &str = "corrcs-manifest/1";

/// One line of the result CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub delta: f64,
    pub rho: f64,
    pub method: String,
    pub noise_mode: String,
    pub bits: Option<u32>,
    pub trials: usize,
    pub mean_nmse: f64,
    /// NaN when fewer than two trials were run; `null` in JSON.
    #[serde(with = "nan_as_null")]
    pub ci99: f64,
    pub nonconverged: usize,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl ResultRow {
    pub fn from_point(p: &PointResult, noise_mode: &str, bits: Option<u32>) -> Self {
        Self {
            n: p.point.n,
            m: p.point.m,
            k: p.point.k,
            delta: p.point.delta(),
            rho: p.point.rho(),
            method: p.method.name().to_string(),
            noise_mode: noise_mode.to_string(),
            bits,
            trials: p.trials,
            mean_nmse: p.mean_nmse,
            ci99: p.ci99,
            nonconverged: p.nonconverged,
        }
    }
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        let noise = self.config.noise;
        self.points
            .iter()
            .map(|p| ResultRow::from_point(p, noise.name(), noise.bits()))
            .collect()
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders rows as CSV with 17 significant digits per float.
pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            float(r.delta),
            float(r.rho),
            r.method.clone(),
            r.noise_mode.clone(),
            r.bits.map(|b| b.to_string()).unwrap_or_default(),
            r.trials.to_string(),
            float(r.mean_nmse),
            float(r.ci99),
            r.nonconverged.to_string(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Everything needed to identify and reload a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub master_seed: u64,
    /// Recipe or subcommand that produced the run.
    pub recipe: String,
    pub config: serde_json::Value,
    /// Derived quantities such as fitted gains or optimizer results.
    #[serde(default)]
    pub summary: serde_json::Value,
    pub results: Vec<ResultRow>,
    pub flagged: bool,
}

impl Manifest {
    pub fn new(recipe: &str, master_seed: u64, config: serde_json::Value, results: Vec<ResultRow>, flagged: bool) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            version: crate::VERSION.to_string(),
            master_seed,
            recipe: recipe.to_string(),
            config,
            summary: serde_json::Value::Null,
            results,
            flagged,
        }
    }
}

pub fn manifest_json(manifest: &Manifest) -> Result<String> {
    Ok(serde_json::to_string_pretty(manifest)?)
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(invalid(format!("unsupported manifest schema '{}'", m.schema)));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bits: Option<u32>, mean: f64) -> ResultRow {
        ResultRow {
            n: 1000,
            m: 200,
            k: 1,
            delta: 0.2,
            rho: 0.005,
            method: "bpdn-scale".into(),
            noise_mode: "artificial".into(),
            bits,
            trials: 200,
            mean_nmse: mean,
            ci99: f64::NAN,
            nonconverged: 0,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(Some(1), 0.1 + 0.2), row(None, 1.0 / 3.0)];
        let text = results_csv(&rows).unwrap();
        assert!(text.starts_with("n,m,k,delta,rho,method,noise_mode,bits,trials,mean_nmse,ci99,nonconverged\n"));
        assert!(text.contains("3.0000000000000004e-1"));
        let back = parse_results_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.mean_nmse.to_bits(), b.mean_nmse.to_bits());
            assert_eq!(a.bits, b.bits);
            assert!(b.ci99.is_nan());
        }
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(parse_results_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest::new("fig2", 7, serde_json::json!({"trials": 200}), vec![row(Some(3), 0.25)], false);
        let back = parse_manifest(&manifest_json(&m).unwrap()).unwrap();
        assert!(back.results[0].ci99.is_nan());
        assert_eq!(back.results[0].mean_nmse, 0.25);
        assert_eq!((back.recipe.as_str(), back.master_seed), ("fig2", 7));
        let bad = manifest_json(&m).unwrap().replace(MANIFEST_SCHEMA, "other/9");
        assert!(parse_manifest(&bad).is_err());
    }
}
