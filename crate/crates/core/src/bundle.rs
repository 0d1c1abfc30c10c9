//! Versioned plain-text bundle for identified model sets and baselines.
//!
//! A bundle is a directory holding
//! - `manifest.txt` — `key = value` metadata (format version, kind, shape,
//!   tuning constants, dataset fingerprint, seed),
//! - `summary.csv` — `p,lambda,eps_hat,tau_under,tau_hat`,
//! - `theta_pNN.csv` — one file per step with the parameter vector, rows
//!   named after the regressor entries (absent for baselines without one).
//!
//! Floats are printed in Rust's shortest round-trip form, so write → read →
//! write is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::baselines::BaselineResult;
use crate::dataset::column_names;
use crate::error::{Error, Result};
use crate::smident::MultiStepModelSet;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub p: usize,
    pub lambda: f64,
    pub eps_hat: f64,
    pub tau_under: f64,
    pub tau_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub kind: String,
    pub o: usize,
    pub p_max: usize,
    /// Extra manifest keys, kept sorted for reproducible output.
    pub extra: BTreeMap<String, String>,
    pub summary: Vec<SummaryRow>,
    /// Parameter vector per step (index `p - 1`), when the kind has one.
    pub thetas: Vec<Option<DVector<f64>>>,
}

impl ModelBundle {
    pub fn from_model_set(models: &MultiStepModelSet) -> Self {
        let cfg = &models.config;
        let mut extra = BTreeMap::new();
        extra.insert("alpha".into(), cfg.alpha.to_string());
        extra.insert("gamma".into(), cfg.gamma.to_string());
        extra.insert("d_bound".into(), cfg.d_bound.to_string());
        extra.insert("omega_box".into(), cfg.omega_box.to_string());
        extra.insert(
            "dataset_hash".into(),
            models.provenance.dataset_hash.clone(),
        );
        if let Some(seed) = models.provenance.seed {
            extra.insert("seed".into(), seed.to_string());
        }
        let summary = models
            .steps
            .iter()
            .map(|s| SummaryRow {
                p: s.p,
                lambda: s.lambda_under,
                eps_hat: s.eps_hat,
                tau_under: s.tau_under_star,
                tau_hat: s.tau_hat_star,
            })
            .collect();
        let thetas = models
            .steps
            .iter()
            .map(|s| Some(s.theta_star.clone()))
            .collect();
        Self {
            kind: "multistep".into(),
            o: cfg.o,
            p_max: cfg.p_max,
            extra,
            summary,
            thetas,
        }
    }

    /// Baseline bundle in the same schema, tagged by kind; `lambda` and
    /// `eps_hat` columns carry the shared per-step values of `models`.
    pub fn from_baseline(baseline: &BaselineResult, models: &MultiStepModelSet) -> Self {
        let mut bundle = Self::from_model_set(models);
        bundle.kind = baseline.kind.as_str().into();
        for (i, step) in baseline.steps.iter().enumerate() {
            bundle.summary[i].tau_under = step.tau_under;
            bundle.summary[i].tau_hat = step.tau_hat;
            bundle.thetas[i] = step.theta.clone();
        }
        let any_ridge = baseline.steps.iter().any(|s| s.ridge_fallback);
        if any_ridge {
            bundle.extra.insert("ridge_fallback".into(), "true".into());
        }
        bundle
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut manifest = String::new();
        writeln!(manifest, "format_version = {FORMAT_VERSION}").expect("string write");
        writeln!(manifest, "kind = {}", self.kind).expect("string write");
        writeln!(manifest, "o = {}", self.o).expect("string write");
        writeln!(manifest, "p_max = {}", self.p_max).expect("string write");
        for (k, v) in &self.extra {
            writeln!(manifest, "{k} = {v}").expect("string write");
        }
        std::fs::write(dir.join("manifest.txt"), manifest)?;

        let mut summary = String::from("p,lambda,eps_hat,tau_under,tau_hat\n");
        for row in &self.summary {
            writeln!(
                summary,
                "{},{},{},{},{}",
                row.p, row.lambda, row.eps_hat, row.tau_under, row.tau_hat
            )
            .expect("string write");
        }
        std::fs::write(dir.join("summary.csv"), summary)?;

        for (i, theta) in self.thetas.iter().enumerate() {
            let Some(theta) = theta else { continue };
            let p = i + 1;
            let names = column_names(self.o, p);
            if theta.len() != names.len() {
                return Err(Error::DimensionMismatch {
                    what: "bundle theta",
                    expected: names.len(),
                    got: theta.len(),
                });
            }
            let mut text = String::from("coef,value\n");
            for (name, value) in names.iter().zip(theta.iter()) {
                writeln!(text, "{name},{value}").expect("string write");
            }
            std::fs::write(dir.join(format!("theta_p{p:02}.csv")), text)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest = std::fs::read_to_string(dir.join("manifest.txt"))?;
        let mut kv = BTreeMap::new();
        for line in manifest.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("manifest line `{line}` lacks `=`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let version: u32 = take(&mut kv, "format_version")?
            .parse()
            .map_err(|_| Error::Parse("format_version is not an integer".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported bundle format version {version}"
            )));
        }
        let kind = take(&mut kv, "kind")?;
        let o: usize = take(&mut kv, "o")?
            .parse()
            .map_err(|_| Error::Parse("o is not an integer".into()))?;
        let p_max: usize = take(&mut kv, "p_max")?
            .parse()
            .map_err(|_| Error::Parse("p_max is not an integer".into()))?;

        let summary_text = std::fs::read_to_string(dir.join("summary.csv"))?;
        let mut lines = summary_text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty summary.csv".into()))?;
        if header != "p,lambda,eps_hat,tau_under,tau_hat" {
            return Err(Error::Parse(format!(
                "unexpected summary header `{header}`"
            )));
        }
        let mut summary = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("bad summary row `{line}`")));
            }
            summary.push(SummaryRow {
                p: f[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad p `{}`", f[0])))?,
                lambda: parse_float(f[1])?,
                eps_hat: parse_float(f[2])?,
                tau_under: parse_float(f[3])?,
                tau_hat: parse_float(f[4])?,
            });
        }
        if summary.len() != p_max {
            return Err(Error::Parse(format!(
                "summary has {} rows, manifest says p_max = {p_max}",
                summary.len()
            )));
        }

        let mut thetas = Vec::with_capacity(p_max);
        for p in 1..=p_max {
            let path = dir.join(format!("theta_p{p:02}.csv"));
            if !path.exists() {
                thetas.push(None);
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("empty theta file for p={p}")))?;
            if header != "coef,value" {
                return Err(Error::Parse(format!("unexpected theta header `{header}`")));
            }
            let names = column_names(o, p);
            let mut values = Vec::with_capacity(names.len());
            for (want, line) in names.iter().zip(lines) {
                let (name, value) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("bad theta row `{line}`")))?;
                if name != want {
                    return Err(Error::Parse(format!(
                        "theta row named `{name}`, expected `{want}`"
                    )));
                }
                values.push(parse_float(value)?);
            }
            if values.len() != names.len() {
                return Err(Error::Parse(format!(
                    "theta file for p={p} has {} rows, expected {}",
                    values.len(),
                    names.len()
                )));
            }
            thetas.push(Some(DVector::from_vec(values)));
        }

        Ok(Self {
            kind,
            o,
            p_max,
            extra: kv,
            summary,
            thetas,
        })
    }
}

fn take(kv: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
    kv.remove(key)
        .ok_or_else(|| Error::Parse(format!("manifest lacks `{key}`")))
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}
