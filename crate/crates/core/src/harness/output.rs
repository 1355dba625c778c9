use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::run::RepRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

fn bins_of(stats: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    if let Some(bad) = stats.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite statistic {bad}")));
    }
    if stats.is_empty() {
        return Ok(Vec::new());
    }
    let lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(vec![HistogramBin {
            bin_left: lo,
            bin_right: hi,
            count: stats.len(),
        }]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in stats {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            bin_left: lo + width * k as f64,
            bin_right: if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 },
            count,
        })
        .collect())
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn write_histogram<W: Write>(stats: &[f64], bins: usize, writer: W) -> Result<Vec<HistogramBin>> {
    let rows = bins_of(stats, bins)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_left", "bin_right", "count"])
        .map_err(|e| Error::Io(e.into()))?;
    for r in &rows {
        w.serialize((r.bin_left, r.bin_right, r.count))
            .map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn emit_histogram(stats: &[f64], bins: usize, path: &Path) -> Result<Vec<HistogramBin>> {
    let f = File::create(path)?;
    write_histogram(stats, bins, BufWriter::new(f))
}

fn opt(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

/// Per-rep CSV with columns rep, linf1, l21, sel, linf2, l22, proj_stat,
/// failed. Failed reps have empty numeric fields.
pub fn write_records_csv<W: Write>(records: &[RepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["rep", "linf1", "l21", "sel", "linf2", "l22", "proj_stat", "failed"])
        .map_err(io)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            opt(r.linf1),
            opt(r.l21),
            u8::from(r.sel).to_string(),
            opt(r.linf2),
            opt(r.l22),
            opt(r.proj_stat),
            u8::from(r.failed).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
