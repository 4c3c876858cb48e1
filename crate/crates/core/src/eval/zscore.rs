use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for zero-variance columns.
    pub std: Vec<f64>,
    /// Columns whose fitted variance was zero. They are centred only.
    pub zero_std_columns: Vec<usize>,
}

impl ColumnScaler {
    /// Fits on all rows of all given matrices.
    pub fn fit<'a, I>(matrices: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [Vec<f64>]>,
    {
        let rows: Vec<&Vec<f64>> = matrices.into_iter().flatten().collect();
        if rows.len() < 2 {
            return Err(Error::Parameter(format!(
                "z-scoring needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Structural("rows of unequal length in z-score fit".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; cols];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut zero_std_columns = Vec::new();
        let std = var
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    zero_std_columns.push(j);
                    1.0
                }
            })
            .collect();
        if !zero_std_columns.is_empty() {
            log::warn!(
                "{} constant column(s) left centred with scale 1",
                zero_std_columns.len()
            );
        }
        Ok(ColumnScaler {
            mean,
            std,
            zero_std_columns,
        })
    }

    pub fn apply(&self, rows: &mut [Vec<f64>]) -> Result<()> {
        for r in rows.iter_mut() {
            if r.len() != self.mean.len() {
                return Err(Error::Structural(format!(
                    "row of {} values, scaler fitted on {}",
                    r.len(),
                    self.mean.len()
                )));
            }
            for ((v, m), s) in r.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(())
    }
}

/// Fits on `rows` and returns the normalised copy with the parameters.
pub fn zscore_columns(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, ColumnScaler)> {
    let scaler = ColumnScaler::fit([rows])?;
    let mut out = rows.to_vec();
    scaler.apply(&mut out)?;
    Ok((out, scaler))
}
