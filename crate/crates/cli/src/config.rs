use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tll_core::decoder::DecoderConfig;
use tll_core::encoder::EncoderConfig;
use tll_core::eval::{Protocol, DEFAULT_ASPECT};
use tll_core::mrf::MrfConfig;
use tll_core::pipeline::BenchConfig;
use tll_core::simgen::{DegradeConfig, SceneConfig};

/// Everything a run can be configured with. Every section is optional in
/// the file; command-line flags are applied on top.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    pub mrf: MrfConfig,
    pub decode: DecodeOptions,
    pub scene: SceneConfig,
    pub degrade: DegradeConfig,
    pub eval: EvalOptions,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeOptions {
    pub mrf: bool,
    /// `max`, `mean` or `ema:<alpha>`; absent means single-frame decoding.
    pub temporal: Option<String>,
    /// Trailing number of frames aggregated per output frame.
    pub window: usize,
    pub aspect: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            mrf: true,
            temporal: None,
            window: 5,
            aspect: DEFAULT_ASPECT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Preset names, or custom protocols below.
    pub protocols: Vec<String>,
    pub custom: Vec<Protocol>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            protocols: Protocol::presets().into_iter().map(|p| p.name).collect(),
            custom: Vec::new(),
        }
    }
}

impl EvalOptions {
    pub fn resolve(&self) -> Result<Vec<Protocol>> {
        let mut out = self
            .protocols
            .iter()
            .map(|n| Protocol::preset(n).map_err(Into::into))
            .collect::<Result<Vec<_>>>()?;
        for p in &self.custom {
            p.validate()?;
            out.push(p.clone());
        }
        Ok(out)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        self.mrf.validate()?;
        self.scene.validate()?;
        self.degrade.validate()?;
        if self.decode.window == 0 {
            anyhow::bail!("decode.window must be >= 1");
        }
        if !(self.decode.aspect > 0.0) {
            anyhow::bail!("decode.aspect must be > 0");
        }
        self.eval.resolve()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn nested_sections_override() {
        let cfg = RunConfig::parse(
            "threads = 3\n[decoder]\npeak_threshold = 0.4\n[scene]\nnum_instances = [5, 5]\n[encoder.sigma]\nmode = \"fixed\"\nvalue = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.threads, 3);
        assert_eq!(cfg.decoder.peak_threshold, 0.4);
        assert_eq!(cfg.decoder.nms_radius, DecoderConfig::default().nms_radius);
        assert_eq!(cfg.scene.num_instances, (5, 5));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::parse("thread = 3").is_err());
        let cfg = RunConfig::parse("[decoder]\npeak_threshold = -1.0").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse("[eval]\nprotocols = [\"nope\"]").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn custom_protocols() {
        let cfg = RunConfig::parse(
            "[eval]\nprotocols = []\n[[eval.custom]]\nname = \"tall\"\nheight_range = [100.0, 1000.0]\nmax_occlusion = 0.5\niou_threshold = 0.5\n",
        )
        .unwrap();
        let ps = cfg.eval.resolve().unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].name, "tall");
    }
}
