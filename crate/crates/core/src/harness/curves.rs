use std::io::Write;

use crate::analysis::{self, AnalysisError, SecurityCurvePoint};

/// Column order of the curves CSV.
pub const CURVE_COLUMNS: [&str; 4] = ["d", "q", "iab", "iae"];

/// Default QBER grid spacing.
pub const DEFAULT_Q_STEP: f64 = 0.005;

pub fn curve_family(ds: &[f64], step: f64) -> Result<Vec<SecurityCurvePoint>, AnalysisError> {
    let grid = analysis::default_q_grid(step);
    let mut out = Vec::with_capacity(ds.len() * grid.len());
    for &d in ds {
        out.extend(analysis::curve(d, &grid)?);
    }
    Ok(out)
}

/// Writes `d,q,iab,iae` rows.
pub fn write_curves_csv<W: Write>(points: &[SecurityCurvePoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
