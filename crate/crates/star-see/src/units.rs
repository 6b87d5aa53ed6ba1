//! Decibel conversions.
//!
//! All internal computation runs in linear units (watts, ratios); decibel
//! forms appear only at configuration boundaries. These helpers are the one
//! place the conversions live, so a stray double conversion is grep-able.

/// Power ratio from decibels: `10^(db / 10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Decibels from a power ratio.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Watts from dBm (`0 dBm = 1 mW`).
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Watts from dBW (`0 dBW = 1 W`).
#[inline]
pub fn dbw_to_watts(dbw: f64) -> f64 {
    db_to_linear(dbw)
}
