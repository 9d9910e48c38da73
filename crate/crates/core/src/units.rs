//! dB and power conversions. Every other module goes through these.

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1e3)
}

/// Thermal noise power in watts for a spectral density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_w(density_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(density_dbm_per_hz) * bandwidth_hz
}

/// Spectral efficiency in bits/s/Hz, `log2(1 + sqinr)`.
///
/// Uses `ln_1p` so tiny SQINR values (heavy self-interference) keep their
/// relative ordering.
pub fn spectral_efficiency(sqinr: f64) -> f64 {
    sqinr.ln_1p() / std::f64::consts::LN_2
}
