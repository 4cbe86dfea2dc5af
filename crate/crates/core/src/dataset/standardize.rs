use log::warn;

use super::{Gas, GasTable};
use crate::samples::{Samples, Scaler};
use crate::Result;

/// Zero-mean, unit population-std version of `table`, plus the fitted
/// parameters. Constant gases become all-zero columns and are flagged in
/// [`Scaler::constant`].
pub fn standardize(table: &GasTable) -> Result<(Samples, Scaler)> {
    let samples = table.to_samples();
    let scaler = Scaler::fit(samples.rows())?;
    for (g, _) in Gas::ALL.iter().zip(&scaler.constant).filter(|(_, c)| **c) {
        warn!("{g} is constant; standardized to zeros");
    }
    let out = scaler.transform(&samples)?;
    Ok((out, scaler))
}
