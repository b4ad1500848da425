use std::path::Path;

use super::{EvalError, FrameMetrics, MetricsReport};

pub const SERIES_HEADER: &str = "frame,mean_iou,precision,recall,f1";

/// Writes one CSV row per frame (`frame,mean_iou,precision,recall,f1`) at
/// full float precision.
pub fn export_metric_series(report: &MetricsReport, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(SERIES_HEADER.split(','))?;
    for row in &report.per_frame {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metric_series(path: impl AsRef<Path>) -> Result<Vec<FrameMetrics>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
