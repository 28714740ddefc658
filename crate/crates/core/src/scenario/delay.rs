//! Wired and wireless delay models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation delay of a wired optical link in ms: `0.005 * d_km`.
pub fn wired_delay(length_km: f64) -> Result<f64> {
    if !(length_km > 0.0) {
        return Err(Error::InvalidArgument("wired_delay requires positive length".into()));
    }
    Ok(0.005 * length_km)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// The published expression taken literally: the channel gain is the
    /// multiplicative factor `127 + 30*log10(d)`.
    Verbatim,
    /// `127 + 30*log10(d)` treated as a path loss in dB, i.e. the gain is
    /// `10^(-(127 + 30*log10(d))/10)`.
    Db,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WirelessParams {
    /// Channel bandwidth (MHz units as written).
    pub w_mhz: f64,
    /// Vehicle transmit power in Watt.
    pub s_watt: f64,
    /// Noise power in Watt.
    pub n_watt: f64,
    pub gain_mode: GainMode,
}

impl Default for WirelessParams {
    fn default() -> Self {
        WirelessParams { w_mhz: 20.0, s_watt: 0.5, n_watt: 2e-13, gain_mode: GainMode::Verbatim }
    }
}

/// Achievable wireless rate `W * log2(S*g/N)` with `g = 127 + 30*log10(d)`.
/// The expression is dimensionally a rate, not a delay; access delay is
/// derived from it via a payload size (see [`access_delay_ms`]).
pub fn wireless_rate(distance_km: f64, p: &WirelessParams) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::InvalidArgument("wireless_rate requires positive distance".into()));
    }
    let g = match p.gain_mode {
        GainMode::Verbatim => 127.0 + 30.0 * distance_km.log10(),
        GainMode::Db => 10f64.powf(-(127.0 + 30.0 * distance_km.log10()) / 10.0),
    };
    let snr = p.s_watt * g / p.n_watt;
    if !(snr > 1.0) {
        // Rate would be nonpositive; callers treat this as a dead channel.
        return Ok(0.0);
    }
    Ok(p.w_mhz * snr.log2())
}

/// Access delay of the user attachment link in ms. The rate is read as
/// Mbps; a zero rate or a configured override yields the constant fallback.
pub fn access_delay_ms(
    distance_km: f64,
    payload_bytes: u64,
    p: &WirelessParams,
    constant_override_ms: Option<f64>,
) -> Result<f64> {
    if let Some(ms) = constant_override_ms {
        return Ok(ms);
    }
    let rate = wireless_rate(distance_km.max(1e-3), p)?;
    if rate <= 0.0 {
        return Ok(1000.0); // dead channel: effectively unusable
    }
    let bits = (payload_bytes * 8) as f64;
    Ok(bits / (rate * 1000.0))
}
