use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Counts,
    Reals,
}

/// An observed path. Rows of `values` are time points `t = 0..n-1`; rows of
/// `lag_buffer` are the pre-sample points `t = -p..-1` (oldest first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample<T> {
    pub values: Matrix<T>,
    pub lag_buffer: Matrix<T>,
    pub delta: Option<T>,
    pub kind: SeriesKind,
}

impl<T: Real> SeriesSample<T> {
    pub fn new(
        values: Matrix<T>,
        lag_buffer: Matrix<T>,
        delta: Option<T>,
        kind: SeriesKind,
    ) -> Result<Self> {
        let s = Self {
            values,
            lag_buffer,
            delta,
            kind,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn univariate_counts(values: Vec<T>, lag_buffer: Vec<T>) -> Result<Self> {
        let n = values.len();
        let p = lag_buffer.len();
        Self::new(
            Matrix::from_row_major(n, 1, values)?,
            Matrix::from_row_major(p, 1, lag_buffer)?,
            None,
            SeriesKind::Counts,
        )
    }

    /// Diffusion path observed at `t_k = k * delta`, one column per
    /// coordinate.
    pub fn diffusion_path(values: Matrix<T>, delta: T) -> Result<Self> {
        let d = values.cols();
        Self::new(values, Matrix::zeros(0, d), Some(delta), SeriesKind::Reals)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lag_buffer.rows() > 0 && self.lag_buffer.cols() != self.values.cols() {
            return Err(Error::Dimension {
                expected: self.values.cols(),
                got: self.lag_buffer.cols(),
            });
        }
        if let Some(d) = self.delta {
            if !(d > T::zero()) {
                return Err(Error::Domain("sampling interval must be positive".into()));
            }
        }
        if self.kind == SeriesKind::Counts {
            let ok = self
                .values
                .as_slice()
                .iter()
                .chain(self.lag_buffer.as_slice())
                .all(|&x| x >= T::zero() && x.fract() == T::zero());
            if !ok {
                return Err(Error::Domain(
                    "count series must hold nonnegative integers".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn lag_len(&self) -> usize {
        self.lag_buffer.rows()
    }

    /// Value of coordinate `j` at time `t`, where negative `t` reads from the
    /// lag buffer.
    pub fn at(&self, t: isize, j: usize) -> T {
        if t >= 0 {
            self.values[(t as usize, j)]
        } else {
            let p = self.lag_buffer.rows() as isize;
            self.lag_buffer[((p + t) as usize, j)]
        }
    }

    /// Move the first `p` observations into the lag buffer (after any
    /// existing buffer). Used for binned Hawkes counts, which have no
    /// pre-sample.
    pub fn split_lag_buffer(&self, p: usize) -> Result<Self> {
        if p > self.len() {
            return Err(Error::InsufficientData(format!(
                "cannot move {p} rows of a length-{} series into the lag buffer",
                self.len()
            )));
        }
        let d = self.dim();
        let old = self.lag_buffer.rows();
        let mut lag = Vec::with_capacity((old + p) * d);
        lag.extend_from_slice(self.lag_buffer.as_slice());
        lag.extend_from_slice(&self.values.as_slice()[..p * d]);
        let rest = self.values.as_slice()[p * d..].to_vec();
        Self::new(
            Matrix::from_row_major(self.len() - p, d, rest)?,
            Matrix::from_row_major(old + p, d, lag)?,
            self.delta,
            self.kind,
        )
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.column(j)
    }

    /// Write as CSV with header `t,x1,...,xd`; lag-buffer rows get negative
    /// `t`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|j| format!("x{j}")));
        w.write_record(&header).map_err(csv_err)?;
        let p = self.lag_len() as isize;
        for t in -p..self.len() as isize {
            let mut rec = vec![t.to_string()];
            rec.extend((0..d).map(|j| fmt_value(self.at(t, j), self.kind)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, kind: SeriesKind, delta: Option<T>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let d = r.headers().map_err(csv_err)?.len().saturating_sub(1);
        if d == 0 {
            return Err(Error::Config("series CSV needs at least one value column".into()));
        }
        let mut lag = Vec::new();
        let mut vals = Vec::new();
        let mut lag_rows = 0;
        let mut val_rows = 0;
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let t: i64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad time index {:?}", &rec[0])))?;
            let row = (1..=d)
                .map(|j| {
                    rec.get(j)
                        .and_then(|s| s.trim().parse::<f64>().ok())
                        .map(T::lit)
                        .ok_or_else(|| Error::Config(format!("bad value in row t={t}")))
                })
                .collect::<Result<Vec<T>>>()?;
            if t < 0 {
                lag.extend(row);
                lag_rows += 1;
            } else {
                vals.extend(row);
                val_rows += 1;
            }
        }
        Self::new(
            Matrix::from_row_major(val_rows, d, vals)?,
            Matrix::from_row_major(lag_rows, d, lag)?,
            delta,
            kind,
        )
    }
}

fn fmt_value<T: Real>(v: T, kind: SeriesKind) -> String {
    match kind {
        SeriesKind::Counts => format!("{}", v.to_f64_lossy() as i64),
        SeriesKind::Reals => format!("{}", v.to_f64_lossy()),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}
