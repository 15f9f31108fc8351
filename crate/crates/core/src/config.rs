//! Flat `key = value` run configuration with `#` comments, command-line
//! overrides, and a lossless resolved-config echo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::flow::FlowConfig;
use crate::potential::ModelParams;
use crate::{Error, Result};

/// Raw key-value layer: file values plus overrides, with provenance
/// ignored once merged (later writes win).
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    map: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            if line.trim().is_empty() {
                continue;
            }
            let eq = line.find('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                col: line.len(),
                msg: "expected `key = value`".into(),
            })?;
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    col: 1,
                    msg: "empty key".into(),
                });
            }
            map.insert(key.to_string(), value.to_string());
        }
        Ok(ConfigMap { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Applies `--set key=value` overrides, which win over file values.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let eq = spec.find('=').ok_or_else(|| Error::Parse {
            line: 0,
            col: 1,
            msg: format!("override `{spec}` is not of the form key=value"),
        })?;
        self.map
            .insert(spec[..eq].trim().to_string(), spec[eq + 1..].trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    fn get_parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Parse {
                line: 0,
                col: 1,
                msg: format!("key `{key}`: cannot parse `{v}`"),
            }),
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        self.get_parsed(key, default)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        self.get_parsed(key, default)
    }

    pub fn get_i32(&self, key: &str, default: i32) -> Result<i32> {
        self.get_parsed(key, default)
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        self.get_parsed(key, default)
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| Error::Parse {
                        line: 0,
                        col: 1,
                        msg: format!("key `{key}`: cannot parse `{s}`"),
                    })
                })
                .collect(),
        }
    }
}

/// Fully resolved run parameters; every field has a default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid_n: usize,
    pub k: i32,
    pub tau: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linsolve_tol: f64,
    pub steady_tol: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(map: &ConfigMap) -> Result<Self> {
        let beta = map.get_f64("beta", 1.0)?;
        let eps = map.get_f64("eps", 0.05)?;
        let mut params = ModelParams::new(beta, eps);
        params.eta1 = map.get_f64("eta1", params.eta1)?;
        params.eta2 = map.get_f64("eta2", params.eta2)?;
        Ok(RunConfig {
            params,
            grid_n: map.get_usize("n", 50)?,
            k: map.get_i32("k", 1)?,
            tau: map.get_f64("tau", 1e-3)?,
            t_end: map.get_f64("t_end", 1.0)?,
            snapshot_times: map.get_f64_list("snapshot_times", &[0.02, 0.05, 1.0])?,
            picard_tol: map.get_f64("picard_tol", 1e-10)?,
            picard_max: map.get_usize("picard_max", 50)?,
            linsolve_tol: map.get_f64("linsolve_tol", 1e-10)?,
            steady_tol: map.get_f64("steady_tol", 1e-8)?,
            seed: map.get_u64("seed", 0)?,
        })
    }

    pub fn flow_config(&self) -> FlowConfig {
        let mut flow = FlowConfig::new(self.params);
        flow.tau = self.tau;
        flow.t_end = self.t_end;
        flow.snapshot_times = self.snapshot_times.clone();
        flow.picard_tol = self.picard_tol;
        flow.picard_max = self.picard_max;
        flow.linsolve_tol = self.linsolve_tol;
        flow.steady_tol = self.steady_tol;
        flow
    }

    /// Resolved-config echo; re-feeding this text reproduces the run.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "beta = {:.17e}", self.params.beta);
        let _ = writeln!(out, "eps = {:.17e}", self.params.eps);
        let _ = writeln!(out, "eta1 = {:.17e}", self.params.eta1);
        let _ = writeln!(out, "eta2 = {:.17e}", self.params.eta2);
        let _ = writeln!(out, "n = {}", self.grid_n);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "tau = {:.17e}", self.tau);
        let _ = writeln!(out, "t_end = {:.17e}", self.t_end);
        let times: Vec<String> = self
            .snapshot_times
            .iter()
            .map(|t| format!("{t:.17e}"))
            .collect();
        let _ = writeln!(out, "snapshot_times = {}", times.join(","));
        let _ = writeln!(out, "picard_tol = {:.17e}", self.picard_tol);
        let _ = writeln!(out, "picard_max = {}", self.picard_max);
        let _ = writeln!(out, "linsolve_tol = {:.17e}", self.linsolve_tol);
        let _ = writeln!(out, "steady_tol = {:.17e}", self.steady_tol);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comments_and_overrides() {
        let mut map = ConfigMap::parse(
            "# run setup\nbeta = 2.5\n\neps = 0.02  # small\nn = 100\n",
        )
        .unwrap();
        map.apply_override("beta=3.0").unwrap();
        let cfg = RunConfig::resolve(&map).unwrap();
        assert_eq!(cfg.params.beta, 3.0);
        assert_eq!(cfg.params.eps, 0.02);
        assert_eq!(cfg.grid_n, 100);
        assert_eq!(cfg.k, 1); // defaulted
    }

    #[test]
    fn parse_error_carries_location() {
        let err = ConfigMap::parse("beta = 1\nnonsense line\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn echo_round_trip() {
        let mut map = ConfigMap::default();
        map.apply_override("beta=1.7").unwrap();
        map.apply_override("snapshot_times=0.01,0.5").unwrap();
        let cfg = RunConfig::resolve(&map).unwrap();
        let echoed = ConfigMap::parse(&cfg.echo()).unwrap();
        let cfg2 = RunConfig::resolve(&echoed).unwrap();
        assert_eq!(cfg.params.beta, cfg2.params.beta);
        assert_eq!(cfg.params.eta2, cfg2.params.eta2);
        assert_eq!(cfg.snapshot_times, cfg2.snapshot_times);
        assert_eq!(cfg.picard_tol, cfg2.picard_tol);
    }

    #[test]
    fn eta_defaults_track_eps() {
        let map = ConfigMap::parse("eps = 0.02\n").unwrap();
        let cfg = RunConfig::resolve(&map).unwrap();
        assert_eq!(cfg.params.eta1, 1.0);
        assert_eq!(cfg.params.eta2, 0.02);
    }
}
