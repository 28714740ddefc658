//! Run configuration with paper-default values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intents::CostWeights;
use crate::lam::LamParams;
use crate::scenario::delay::WirelessParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Pailam,
    Grcrank,
    Rwrank,
    Nrmrank,
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pailam" => Ok(Algo::Pailam),
            "grcrank" => Ok(Algo::Grcrank),
            "rwrank" => Ok(Algo::Rwrank),
            "nrmrank" => Ok(Algo::Nrmrank),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algo::Pailam => "pailam",
            Algo::Grcrank => "grcrank",
            Algo::Rwrank => "rwrank",
            Algo::Nrmrank => "nrmrank",
        };
        f.write_str(s)
    }
}

/// Inclusive sampling range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Range {
    pub min: i64,
    pub max: i64,
}

impl Range {
    pub fn new(min: i64, max: i64) -> Self {
        Range { min, max }
    }
}

/// Physical and intent parameter ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1 {
    pub node_cpu: Range,
    pub node_ram: Range,
    pub link_bw: Range,
    pub req_num: Range,
    pub vnodes: Range,
    pub vlinks: Range,
    pub vcpu: Range,
    pub vram: Range,
    pub vbw: Range,
    pub vdelay: Range,
}

impl Default for Table1 {
    fn default() -> Self {
        Table1 {
            node_cpu: Range::new(10, 40),
            node_ram: Range::new(10, 80),
            link_bw: Range::new(400, 1000),
            req_num: Range::new(1, 4),
            vnodes: Range::new(2, 4),
            vlinks: Range::new(2, 4),
            vcpu: Range::new(1, 2),
            vram: Range::new(1, 4),
            vbw: Range::new(1, 2),
            vdelay: Range::new(10, 100),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub algo: Algo,
    pub seeds: Vec<u64>,
    pub k_paths: usize,
    /// Search range coefficient `d`.
    pub search_coefficient: u32,
    /// Delay coefficient in ms.
    pub mu_ms: f64,
    pub retry_threshold: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Fraction of requests carrying a mobile location constraint.
    pub location_ratio: f64,
    pub interval_s: u64,
    pub table1: Table1,
    /// Resources of a mobile user's on-board unit.
    pub mobile_cpu: i64,
    pub mobile_ram: i64,
    /// Bandwidth of the wireless attachment link.
    pub wireless_bw_mbps: i64,
    pub payload_bytes: u64,
    pub wireless: WirelessParams,
    /// Constant access-delay override in ms (None: derive from rate).
    pub constant_access_delay_ms: Option<f64>,
    pub topology_path: Option<String>,
    pub scenario_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algo: Algo::Pailam,
            seeds: vec![1],
            k_paths: 5,
            search_coefficient: 2,
            mu_ms: 10.0,
            retry_threshold: 3,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            location_ratio: 0.1,
            interval_s: 60,
            table1: Table1::default(),
            mobile_cpu: 4,
            mobile_ram: 8,
            wireless_bw_mbps: 200,
            payload_bytes: 1500,
            wireless: WirelessParams::default(),
            constant_access_delay_ms: None,
            topology_path: None,
            scenario_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        if self.k_paths == 0 {
            return Err(Error::Config("k_paths must be >= 1".into()));
        }
        if !(self.mu_ms > 0.0) {
            return Err(Error::Config("mu_ms must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.location_ratio) {
            return Err(Error::Config("location_ratio must be in [0,1]".into()));
        }
        if self.interval_s == 0 {
            return Err(Error::Config("interval_s must be >= 1".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("cost weights must be nonnegative".into()));
        }
        for (name, r) in [
            ("node_cpu", self.table1.node_cpu),
            ("node_ram", self.table1.node_ram),
            ("link_bw", self.table1.link_bw),
            ("req_num", self.table1.req_num),
            ("vnodes", self.table1.vnodes),
            ("vlinks", self.table1.vlinks),
            ("vcpu", self.table1.vcpu),
            ("vram", self.table1.vram),
            ("vbw", self.table1.vbw),
            ("vdelay", self.table1.vdelay),
        ] {
            if r.min <= 0 || r.max < r.min {
                return Err(Error::Config(format!("invalid range for {name}")));
            }
        }
        Ok(())
    }

    pub fn cost_weights(&self) -> CostWeights {
        CostWeights { alpha: self.alpha, beta: self.beta, gamma: self.gamma }
    }

    pub fn lam_params(&self) -> LamParams {
        LamParams {
            k_paths: self.k_paths,
            search_coefficient: self.search_coefficient,
            mu_ms: self.mu_ms,
            vcpu_max: self.table1.vcpu.max,
            vram_max: self.table1.vram.max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_paper_values() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.search_coefficient, 2);
        assert_eq!(c.mu_ms, 10.0);
        assert_eq!(c.retry_threshold, 3);
        assert_eq!(c.location_ratio, 0.1);
        assert_eq!(c.table1.link_bw.min, 400);
        assert_eq!(c.table1.link_bw.max, 1000);
    }

    #[test]
    fn bad_config_rejected() {
        let mut c = RunConfig::default();
        c.location_ratio = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"algo":"grcrank","seeds":[3,4]}"#).unwrap();
        assert_eq!(c.algo, Algo::Grcrank);
        assert_eq!(c.seeds, vec![3, 4]);
        assert_eq!(c.k_paths, 5);
    }
}
