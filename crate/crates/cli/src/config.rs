//! Flat `key=value` run configuration.
//!
//! One file pins everything a run depends on: the analysis window, the
//! bank quantization, boosting rounds, seed and worker count. Every CLI
//! flag overrides its key, and the resolved config is written next to each
//! trained model as a sidecar for provenance.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use crossfeat::{Quantization, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub window_w: usize,
    pub window_h: usize,
    pub min_size: usize,
    pub position_stride: usize,
    pub size_stride: usize,
    /// Boosting rounds; required for training, no paper-derived default.
    pub rounds: Option<usize>,
    pub seed: u64,
    /// Worker count; 0 picks the hardware default.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = Quantization::default();
        RunConfig {
            window_w: 64,
            window_h: 64,
            min_size: q.min_size,
            position_stride: q.position_stride,
            size_stride: q.size_stride,
            rounds: None,
            seed: 0,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key=value", origin.display(), lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let parsed = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .with_context(|| format!("{}:{}: bad value for {key}", origin.display(), lineno + 1))
            };
            match key {
                "window_w" => config.window_w = parsed(value)? as usize,
                "window_h" => config.window_h = parsed(value)? as usize,
                "min_size" => config.min_size = parsed(value)? as usize,
                "position_stride" => config.position_stride = parsed(value)? as usize,
                "size_stride" => config.size_stride = parsed(value)? as usize,
                "rounds" => config.rounds = Some(parsed(value)? as usize),
                "seed" => config.seed = parsed(value)?,
                "threads" => config.threads = parsed(value)? as usize,
                other => bail!(
                    "{}:{}: unknown config key {other:?}",
                    origin.display(),
                    lineno + 1
                ),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, path)
    }

    fn validate(&self) -> Result<()> {
        if self.window_w == 0 || self.window_h == 0 {
            bail!("window dimensions must be positive");
        }
        if self.min_size == 0 || self.position_stride == 0 || self.size_stride == 0 {
            bail!("quantization sizes and strides must be at least 1");
        }
        if self.rounds == Some(0) {
            bail!("rounds must be at least 1");
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("window_w={}\n", self.window_w));
        out.push_str(&format!("window_h={}\n", self.window_h));
        out.push_str(&format!("min_size={}\n", self.min_size));
        out.push_str(&format!("position_stride={}\n", self.position_stride));
        out.push_str(&format!("size_stride={}\n", self.size_stride));
        if let Some(rounds) = self.rounds {
            out.push_str(&format!("rounds={rounds}\n"));
        }
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("threads={}\n", self.threads));
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())
            .with_context(|| format!("cannot write config {}", path.display()))
    }

    pub fn quantization(&self) -> Quantization {
        Quantization {
            min_size: self.min_size,
            position_stride: self.position_stride,
            size_stride: self.size_stride,
        }
    }

    /// Library-level training config; errors when rounds are unresolved.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let rounds = self
            .rounds
            .context("rounds not set: pass --rounds or add a rounds= key to the config")?;
        Ok(TrainConfig {
            window_w: self.window_w,
            window_h: self.window_h,
            quantization: self.quantization(),
            rounds,
            seed: self.seed,
        })
    }
}
