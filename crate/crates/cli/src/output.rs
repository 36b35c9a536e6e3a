//! CSV and metadata writers. All CSVs are UTF-8 with a header row and
//! RFC-4180 quoting; floats use Rust's shortest round-trip formatting.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use less_core::{Belief, ChoiceDistribution, FeatureSet, Featured, ThetaGrid, TrajectorySet};

use crate::error::{HarnessError, Result};

/// A CSV file that is flushed after every row, so completed rows survive an abort.
pub struct RowWriter {
    inner: csv::Writer<File>,
    path: PathBuf,
}

impl RowWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header)?;
        inner.flush().map_err(|e| HarnessError::io(path, e))?;
        Ok(Self {
            inner,
            path: path.to_path_buf(),
        })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        self.inner
            .flush()
            .map_err(|e| HarnessError::io(&self.path, e))
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| HarnessError::io(path, e))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `id,moves,<feature columns>`; features are omitted when not computed.
pub fn write_trajectory_set<W: Write>(
    out: W,
    set: &TrajectorySet,
    features: Option<&FeatureSet>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "moves".to_string()];
    let feats = match (features, set.feature_vectors()) {
        (Some(fs), Ok(f)) => {
            header.extend(fs.descriptors().iter().map(|d| d.to_string()));
            Some(f)
        }
        _ => None,
    };
    w.write_record(&header)?;
    for (i, t) in set.trajectories().iter().enumerate() {
        let mut row = vec![i.to_string(), t.moves()];
        if let Some(f) = feats {
            row.extend(f[i].values().iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(Path::new("<trajectory csv>"), e))
}

/// `trajectory_id,probability,log_probability`.
pub fn write_choice_distribution<W: Write>(out: W, dist: &ChoiceDistribution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trajectory_id", "probability", "log_probability"])?;
    for (i, (p, lp)) in dist.probs().iter().zip(dist.log_probs()).enumerate() {
        w.write_record([i.to_string(), fmt_f64(*p), fmt_f64(*lp)])?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(Path::new("<choice csv>"), e))
}

/// `theta_label,theta,prior,posterior`; theta components are `;`-joined.
pub fn write_posterior(path: &Path, grid: &ThetaGrid, prior: &Belief, post: &Belief) -> Result<()> {
    let mut w = RowWriter::create(path, &["theta_label", "theta", "prior", "posterior"])?;
    for i in 0..grid.len() {
        w.row([
            grid.labels()[i].clone(),
            theta_string(&grid.candidates()[i]),
            fmt_f64(prior.probs()[i]),
            fmt_f64(post.probs()[i]),
        ])?;
    }
    Ok(())
}

pub fn theta_string(theta: &[f64]) -> String {
    theta
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(";")
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
