//! Receive-chain power consumption and energy efficiency.
//!
//! Device figures default to the published per-device table; the ADC draws
//! `c * B * 2^b` watts with `c` set by the technology scenario. How devices
//! compose into a chain is configurable through [`ChainComposition`].

use std::fmt;
use std::io::Write;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdcScenario {
    /// 5 fJ/step/Hz, ideal future value.
    Lpadc,
    /// 65 fJ/step/Hz.
    Ipadc,
    /// 494 fJ/step/Hz, state of the art.
    Hpadc,
}

impl AdcScenario {
    pub const ALL: [AdcScenario; 3] = [AdcScenario::Lpadc, AdcScenario::Ipadc, AdcScenario::Hpadc];

    /// Energy per conversion step per Hz, in joules.
    pub fn c(&self) -> f64 {
        match self {
            AdcScenario::Lpadc => 5e-15,
            AdcScenario::Ipadc => 65e-15,
            AdcScenario::Hpadc => 494e-15,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdcScenario::Lpadc => "LPADC",
            AdcScenario::Ipadc => "IPADC",
            AdcScenario::Hpadc => "HPADC",
        }
    }
}

impl fmt::Display for AdcScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Device {
    Lna,
    Splitter,
    Combiner,
    PhaseShifter,
    Mixer,
    LocalOscillator,
    LowPassFilter,
    BasebandAmp,
}

/// Device powers in watts plus the ADC figure of merit.
#[derive(Debug, Clone, PartialEq)]
pub struct DevicePowerTable {
    pub lna: f64,
    pub splitter: f64,
    pub combiner: f64,
    pub phase_shifter: f64,
    pub mixer: f64,
    pub local_oscillator: f64,
    pub low_pass_filter: f64,
    pub baseband_amp: f64,
    /// Joules per conversion step per Hz.
    pub c: f64,
    pub scenario: AdcScenario,
}

impl DevicePowerTable {
    pub fn published(scenario: AdcScenario) -> Self {
        DevicePowerTable {
            lna: 39e-3,
            splitter: 19.5e-3,
            combiner: 19.5e-3,
            phase_shifter: 2e-3,
            mixer: 16.8e-3,
            local_oscillator: 5e-3,
            low_pass_filter: 14e-3,
            baseband_amp: 5e-3,
            c: scenario.c(),
            scenario,
        }
    }

    pub fn device(&self, d: Device) -> f64 {
        match d {
            Device::Lna => self.lna,
            Device::Splitter => self.splitter,
            Device::Combiner => self.combiner,
            Device::PhaseShifter => self.phase_shifter,
            Device::Mixer => self.mixer,
            Device::LocalOscillator => self.local_oscillator,
            Device::LowPassFilter => self.low_pass_filter,
            Device::BasebandAmp => self.baseband_amp,
        }
    }
}

/// Which devices sit in every antenna branch and which are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComposition {
    pub per_antenna: Vec<Device>,
    pub shared: Vec<Device>,
    /// ADCs per antenna branch (2 for separate I and Q converters).
    pub adcs_per_antenna: u32,
}

impl Default for ChainComposition {
    /// Fully digital receiver: LNA, mixer, LPF and baseband amplifier per
    /// branch with I/Q converters; one LO and one combiner shared.
    fn default() -> Self {
        ChainComposition {
            per_antenna: vec![Device::Lna, Device::Mixer, Device::LowPassFilter, Device::BasebandAmp],
            shared: vec![Device::LocalOscillator, Device::Combiner],
            adcs_per_antenna: 2,
        }
    }
}

/// `c * B * 2^b` watts.
pub fn adc_power(c: f64, bandwidth_hz: f64, bits: u32) -> f64 {
    c * bandwidth_hz * 2f64.powi(bits as i32)
}

/// Receive-chain power for `antennas` branches with the default composition.
pub fn rx_power(antennas: usize, bits: u32, table: &DevicePowerTable, bandwidth_hz: f64) -> f64 {
    rx_power_with(antennas, bits, table, bandwidth_hz, &ChainComposition::default())
}

pub fn rx_power_with(
    antennas: usize,
    bits: u32,
    table: &DevicePowerTable,
    bandwidth_hz: f64,
    chain: &ChainComposition,
) -> f64 {
    let branch: f64 = chain.per_antenna.iter().map(|&d| table.device(d)).sum::<f64>()
        + chain.adcs_per_antenna as f64 * adc_power(table.c, bandwidth_hz, bits);
    let shared: f64 = chain.shared.iter().map(|&d| table.device(d)).sum();
    antennas as f64 * branch + shared
}

/// Bits per joule.
pub fn energy_efficiency(sum_rate_bps: f64, total_power_w: f64) -> Result<f64> {
    if !(total_power_w > 0.0 && total_power_w.is_finite()) {
        return Err(invalid("total_power_w", format!("must be > 0, got {total_power_w}")));
    }
    Ok(sum_rate_bps / total_power_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweepRow {
    pub scenario: AdcScenario,
    pub bits: u32,
    pub antennas: usize,
    pub power_w: f64,
    pub ee_bits_per_j: f64,
}

/// `scenario,b,N_a,power_W,ee_bits_per_J`
pub fn write_power_csv<W: Write>(mut w: W, rows: &[PowerSweepRow]) -> Result<()> {
    writeln!(w, "scenario,b,N_a,power_W,ee_bits_per_J")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.scenario, r.bits, r.antennas, r.power_w, r.ee_bits_per_j
        )?;
    }
    Ok(())
}
