//! Run configuration: plain-text key=value files with flag overrides,
//! resolved against per-application defaults from the evaluation tables.

use anyhow::{anyhow, bail, Context, Result};
use mrfsim_core::apps::StereoDirection;
use mrfsim_core::model::Smoothness;
use mrfsim_core::AcceleratorConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Application {
    Motion,
    Stereo,
}

/// Fully resolved run configuration; the JSON summary embeds this verbatim
/// so any run can be reproduced from its summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub application: Application,
    pub input1: PathBuf,
    pub input2: PathBuf,
    pub gt: Option<PathBuf>,
    pub gt_scale: f64,
    pub bp_threshold: f64,
    pub labels: usize,
    pub alpha: u32,
    pub beta: u32,
    pub temperature: f64,
    pub smoothness: String,
    pub smoothness_cap: u32,
    pub stereo_direction: String,
    pub iterations: usize,
    pub collection_start: usize,
    pub grid_d: usize,
    pub spus_per_spe: usize,
    pub lmem_pairs: usize,
    pub fifo_depth: usize,
    pub bandwidth_bits_per_cycle: u32,
    pub message_bits: u32,
    pub flush_depth: u64,
    pub seed: u64,
    pub trace: bool,
}

impl RunConfig {
    pub fn smoothness_term(&self) -> Result<Smoothness> {
        match self.smoothness.as_str() {
            "potts" => Ok(Smoothness::Potts),
            "truncated-l1" => Ok(Smoothness::TruncatedL1 {
                cap: self.smoothness_cap,
            }),
            other => bail!("invalid config value: smoothness = {other} (potts | truncated-l1)"),
        }
    }

    pub fn direction(&self) -> Result<StereoDirection> {
        match self.stereo_direction.as_str() {
            "leftward" => Ok(StereoDirection::Leftward),
            "rightward" => Ok(StereoDirection::Rightward),
            other => {
                bail!("invalid config value: stereo_direction = {other} (leftward | rightward)")
            }
        }
    }

    pub fn accelerator(&self) -> AcceleratorConfig {
        AcceleratorConfig {
            grid_d: self.grid_d,
            spus_per_spe: self.spus_per_spe,
            lmem_pairs: self.lmem_pairs,
            fifo_depth: self.fifo_depth,
            bandwidth_bits_per_cycle: self.bandwidth_bits_per_cycle,
            message_bits: self.message_bits,
            flush_depth: self.flush_depth,
            seed: self.seed,
            collection_start: self.collection_start,
            iterations: self.iterations,
        }
    }
}

/// Parse a key=value file: one pair per line, '#' starts a comment.
pub fn parse_key_values(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{source}:{}: expected key = value, got {raw:?}", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T> {
    match map.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| anyhow!("invalid config value: {key} = {v}")),
    }
}

/// Resolve a key-value map into a full configuration. Unknown keys are
/// rejected by name; defaults mirror the motion/stereo evaluation
/// parameters.
pub fn resolve(mut map: BTreeMap<String, String>) -> Result<RunConfig> {
    let application = match map
        .remove("application")
        .ok_or_else(|| anyhow!("missing required config key: application"))?
        .as_str()
    {
        "motion" => Application::Motion,
        "stereo" => Application::Stereo,
        other => bail!("invalid config value: application = {other} (motion | stereo)"),
    };
    let (def_labels, def_beta, def_t) = match application {
        Application::Motion => (49usize, 6u32, 1.0f64),
        Application::Stereo => (56, 7, 2.0),
    };
    let input1: PathBuf = map
        .remove("input1")
        .ok_or_else(|| anyhow!("missing required config key: input1"))?
        .into();
    let input2: PathBuf = map
        .remove("input2")
        .ok_or_else(|| anyhow!("missing required config key: input2"))?
        .into();
    let gt = map.remove("gt").map(PathBuf::from);

    let iterations = take(&mut map, "iterations", 3000usize)?;
    let collection_start = take(
        &mut map,
        "collection_start",
        iterations.saturating_sub(1000),
    )?;
    let config = RunConfig {
        application,
        input1,
        input2,
        gt,
        gt_scale: take(&mut map, "gt_scale", 1.0)?,
        bp_threshold: take(&mut map, "bp_threshold", 1.0)?,
        labels: take(&mut map, "labels", def_labels)?,
        alpha: take(&mut map, "alpha", 6)?,
        beta: take(&mut map, "beta", def_beta)?,
        temperature: take(&mut map, "temperature", def_t)?,
        smoothness: take(&mut map, "smoothness", "potts".to_string())?,
        smoothness_cap: take(&mut map, "smoothness_cap", 3)?,
        stereo_direction: take(&mut map, "stereo_direction", "leftward".to_string())?,
        iterations,
        collection_start,
        grid_d: take(&mut map, "grid_d", 4)?,
        spus_per_spe: take(&mut map, "spus_per_spe", 2)?,
        lmem_pairs: take(&mut map, "lmem_pairs", 2)?,
        fifo_depth: take(&mut map, "fifo_depth", 16)?,
        bandwidth_bits_per_cycle: take(&mut map, "bandwidth_bits_per_cycle", 512)?,
        message_bits: take(&mut map, "message_bits", 32)?,
        flush_depth: take(&mut map, "flush_depth", 4)?,
        seed: take(&mut map, "seed", 1)?,
        trace: take(&mut map, "trace", false)?,
    };
    if let Some(unknown) = map.keys().next() {
        bail!("unknown config key: {unknown}");
    }
    config.smoothness_term()?;
    config.direction()?;
    Ok(config)
}

/// Load a config file, apply --set overrides, and resolve.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("missing config file: {}", path.display()))?;
    let mut map = parse_key_values(&text, &path.display().to_string())?;
    for pair in overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got {pair:?}"))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    resolve(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BTreeMap<String, String> {
        parse_key_values(
            "application = motion\ninput1 = a.pgm\ninput2 = b.pgm\n",
            "test",
        )
        .unwrap()
    }

    #[test]
    fn motion_defaults() {
        let cfg = resolve(base()).unwrap();
        assert_eq!(cfg.labels, 49);
        assert_eq!((cfg.alpha, cfg.beta), (6, 6));
        assert_eq!(cfg.temperature, 1.0);
        assert_eq!(cfg.iterations, 3000);
        assert_eq!(cfg.collection_start, 2000);
    }

    #[test]
    fn stereo_defaults() {
        let mut map = base();
        map.insert("application".into(), "stereo".into());
        let cfg = resolve(map).unwrap();
        assert_eq!(cfg.labels, 56);
        assert_eq!((cfg.alpha, cfg.beta), (6, 7));
        assert_eq!(cfg.temperature, 2.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut map = base();
        map.insert("iteratons".into(), "100".into());
        let err = resolve(map).unwrap_err().to_string();
        assert!(err.contains("unknown config key: iteratons"), "{err}");
    }

    #[test]
    fn bad_value_rejected() {
        let mut map = base();
        map.insert("iterations".into(), "many".into());
        let err = resolve(map).unwrap_err().to_string();
        assert!(err.contains("iterations = many"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines() {
        let map = parse_key_values(
            "# full line comment\napplication = motion # trailing\n\ninput1=a\ninput2=b",
            "test",
        )
        .unwrap();
        assert_eq!(map["application"], "motion");
        assert_eq!(map["input1"], "a");
    }
}
