//! Flat key=value run configuration; structured inputs (loops, samples)
//! come in as JSON files.

use mloop_core::integrate::IntegratorOpts;
use mloop_core::mle::SimParams;
use mloop_core::Error;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::invalid(format!(
                    "config line {}: expected key = value, got \"{raw}\"",
                    lineno + 1
                )));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, Error> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("{key}: not a number: \"{v}\""))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, Error> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("{key}: not an integer: \"{v}\""))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, Error> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    /// Simulation parameters from the flat keys nu, gamma, t0, n, rtol,
    /// atol, h0, seed.
    pub fn sim_params(&self, seed_override: Option<u64>) -> Result<SimParams, Error> {
        let params = SimParams {
            nu: self.f64_or("nu", 1.0)?,
            gamma: self.f64_or("gamma", 1.0)?,
            t0: self.f64_or("t0", 0.1)?,
            n: self.usize_or("n", 64)?,
            integrator: IntegratorOpts {
                h0: self.f64_or("h0", 0.0)?,
                rtol: self.f64_or("rtol", 1e-9)?,
                atol: self.f64_or("atol", 1e-12)?,
                max_steps: self.u64_or("max_steps", 10_000_000)?,
            },
            seed: seed_override.unwrap_or(self.u64_or("seed", 0)?),
            assignment: Default::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.map
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}
