//! Process exit codes, derived from the first library error in a chain.

use flatsearch::index::IndexError;
use flatsearch::interchange::InterchangeError;
use flatsearch::metrics::MetricsError;
use flatsearch::projection::ProjectionError;

pub const GENERIC: u8 = 1;
pub const INTERCHANGE: u8 = 2;
pub const EVALUATION: u8 = 3;
pub const QUERY: u8 = 4;
pub const PROJECTION: u8 = 5;

pub fn code_for(err: &anyhow::Error) -> u8 {
    err.chain().find_map(classify).unwrap_or(GENERIC)
}

fn classify(e: &(dyn std::error::Error + 'static)) -> Option<u8> {
    if e.is::<InterchangeError>() {
        Some(INTERCHANGE)
    } else if let Some(e) = e.downcast_ref::<IndexError>() {
        Some(index_code(e))
    } else if let Some(e) = e.downcast_ref::<MetricsError>() {
        Some(metrics_code(e))
    } else if e.is::<ProjectionError>() {
        Some(PROJECTION)
    } else {
        None
    }
}

fn index_code(e: &IndexError) -> u8 {
    match e {
        IndexError::Interchange(_) | IndexError::Sidecar(_) | IndexError::Io(_) => INTERCHANGE,
        IndexError::InvalidMetric | IndexError::UnknownMetric(_) => GENERIC,
        _ => QUERY,
    }
}

fn metrics_code(e: &MetricsError) -> u8 {
    match e {
        MetricsError::UndefinedRecall { .. } | MetricsError::UnknownNeighbor(_) => EVALUATION,
        MetricsError::LabelCountMismatch { .. } | MetricsError::Json(_) | MetricsError::Io(_) => INTERCHANGE,
        MetricsError::QueryOutOfRange { .. } => QUERY,
        MetricsError::Index(inner) => index_code(inner),
        MetricsError::ZeroK | MetricsError::EmptyKValues => GENERIC,
    }
}
