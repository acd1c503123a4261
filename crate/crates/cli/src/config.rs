use crate::fail::{CliResult, Failure};
use flowfield::data::SplitConfig;
use flowfield::flowmatch::SamplerConfig;
use flowfield::models::{MlpConfig, ModelConfig, UnetConfig};
use flowfield::train::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub data: SplitConfig,
}

pub const PRESETS: [&str; 7] = [
    "airfoil-unet",
    "airfoil-dit",
    "aircraft-dit",
    "airfoil-mlp",
    "synth-small",
    "synth-small-unet",
    "synth-small-mlp",
];

fn synth_sampler() -> SamplerConfig {
    SamplerConfig { steps: 200, guidance_scale: 2.0, seed: 0 }
}

pub fn preset(name: &str) -> CliResult<RunConfig> {
    let full = |model, train| RunConfig { model, train, sampler: SamplerConfig::default(), data: SplitConfig::default() };
    // point count comes from the dataset
    let desk = |model: ModelConfig| RunConfig {
        model: ModelConfig { points: 0, ..model },
        train: TrainConfig::synth_small(),
        sampler: synth_sampler(),
        data: SplitConfig::default(),
    };
    Ok(match name {
        "airfoil-unet" => full(ModelConfig::airfoil_unet(), TrainConfig::airfoil()),
        "airfoil-dit" => full(ModelConfig::airfoil_dit(), TrainConfig::airfoil()),
        "aircraft-dit" => full(ModelConfig::aircraft_dit(), TrainConfig::aircraft()),
        "airfoil-mlp" => full(ModelConfig::airfoil_mlp(), TrainConfig::airfoil_mlp()),
        "synth-small" => desk(ModelConfig::synth_dit()),
        "synth-small-unet" => desk(ModelConfig::synth_unet()),
        "synth-small-mlp" => RunConfig {
            train: TrainConfig::airfoil_mlp(),
            ..desk(ModelConfig::synth_mlp())
        },
        other => {
            return Err(Failure::usage(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    })
}

/// Small instance of a preset's architecture for gradient checks.
pub fn tiny_model(name: &str) -> CliResult<ModelConfig> {
    let mut m = preset(name)?.model;
    m.channels = m.channels.min(2);
    m.points = 8;
    m.embed_dim = Some(8);
    if let Some(d) = m.dit.as_mut() {
        d.num_blocks = 2;
        d.num_heads = 2;
        d.hidden_dim = 8;
        d.patch_size = d.patch_size.min(2);
        d.mlp_ratio = 2.0;
    }
    if m.unet.is_some() {
        m.points = 16;
        m.embed_dim = Some(16);
        m.unet = Some(UnetConfig { block_dims: vec![8, 16], attn_heads: 2, attn_hidden: 8 });
    }
    if let Some(mc) = m.mlp.as_mut() {
        *mc = MlpConfig { hidden_dim: 6, num_layers: 3, dropout: 0.0 };
    }
    Ok(m)
}

/// Dotted path of the first leaf under `path` in `doc`, so an unknown
/// section such as `models` is reported as `models.depth`.
fn leaf_key(doc: &Value, path: &str) -> String {
    let mut node = doc;
    for seg in path.split('.').filter(|s| !s.is_empty() && *s != "?") {
        match node.get(seg) {
            Some(next) => node = next,
            None => return path.to_string(),
        }
    }
    let mut out = path.to_string();
    while let Some((k, v)) = node.as_object().and_then(|o| o.iter().next()) {
        out = format!("{out}.{k}");
        node = v;
    }
    out
}

pub fn parse(text: &str) -> CliResult<RunConfig> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Failure::usage(format!("config is not valid JSON: {e}")))?;
    serde_path_to_error::deserialize::<_, RunConfig>(&doc).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let key = match inner.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            Some(field) => {
                let parent = path.trim_end_matches(field).trim_end_matches('.');
                let parent = if parent.is_empty() || parent == "." { String::new() } else { format!("{parent}.") };
                leaf_key(&doc, &format!("{parent}{field}"))
            }
            None => path,
        };
        Failure::usage(format!("config error at {key}: {inner}"))
    })
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_round_trips_through_json() {
        for name in PRESETS {
            let rc = preset(name).unwrap();
            let back = parse(&serde_json::to_string(&rc).unwrap()).unwrap();
            assert_eq!(back, rc, "{name}");
        }
    }

    #[test]
    fn unknown_keys_are_named_by_path() {
        let mut doc = serde_json::to_value(preset("synth-small").unwrap()).unwrap();
        doc["models"] = serde_json::json!({"depth": 3});
        let err = parse(&doc.to_string()).unwrap_err();
        assert_eq!(err.code, crate::fail::USAGE);
        assert!(err.msg.contains("models.depth"), "{}", err.msg);

        let mut doc = serde_json::to_value(preset("synth-small").unwrap()).unwrap();
        doc["train"]["warmup"] = 5.into();
        let err = parse(&doc.to_string()).unwrap_err();
        assert!(err.msg.contains("train.warmup"), "{}", err.msg);
    }

    #[test]
    fn unknown_preset_is_a_usage_error() {
        assert_eq!(preset("airfoil-vae").unwrap_err().code, crate::fail::USAGE);
    }
}
