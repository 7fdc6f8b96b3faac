//! Graph and training configuration with `desk` and `full` profiles, plus the
//! flat `key=value` text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! input_height=64
//! input_width=64
//! dilated_block_channels=16,32,64
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use super::augment::AugmentPolicy;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Full,
}

impl FromStr for Profile {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(CoreError::Config(format!("unknown profile `{}`", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub input_height: usize,
    pub input_width: usize,
    /// Width of the first tapped map of the plain-conv extractor.
    pub base_channels_a: usize,
    /// Width of the first tapped map of the residual extractor.
    pub base_channels_b: usize,
    pub pyramid_channels: usize,
    pub dilated_block_channels: Vec<usize>,
    pub groups: usize,
    pub dropout_rate: f64,
    pub sop_channels: usize,
    pub seed: u64,
}

impl GraphConfig {
    pub fn desk() -> Self {
        GraphConfig {
            input_height: 64,
            input_width: 64,
            base_channels_a: 8,
            base_channels_b: 16,
            pyramid_channels: 16,
            dilated_block_channels: vec![16, 32, 64],
            groups: 16,
            dropout_rate: 0.2,
            sop_channels: 32,
            seed: 42,
        }
    }

    pub fn full() -> Self {
        GraphConfig {
            input_height: 512,
            input_width: 512,
            base_channels_a: 128,
            base_channels_b: 256,
            pyramid_channels: 256,
            dilated_block_channels: vec![256, 512, 1024],
            groups: 16,
            dropout_rate: 0.2,
            sop_channels: 256,
            seed: 42,
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self::desk(),
            Profile::Full => Self::full(),
        }
    }

    /// Spatial divisor the input must honour: stride 16 for the deepest tap and
    /// one 2x2 pool per dilated block below the stride-8 merge.
    pub fn required_divisor(&self) -> usize {
        (8usize << self.dilated_block_channels.len()).max(16)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::Config(m));
        let d = self.required_divisor();
        if self.input_height == 0
            || self.input_width == 0
            || self.input_height % d != 0
            || self.input_width % d != 0
        {
            return bad(format!(
                "input {}x{} must be a positive multiple of {}",
                self.input_height, self.input_width, d
            ));
        }
        if self.base_channels_a < 2 || self.base_channels_a % 2 != 0 {
            return bad(format!("base_channels_a={} must be even", self.base_channels_a));
        }
        if self.base_channels_b < 4 || self.base_channels_b % 4 != 0 {
            return bad(format!(
                "base_channels_b={} must be a multiple of 4",
                self.base_channels_b
            ));
        }
        if self.dilated_block_channels.is_empty() {
            return bad("dilated_block_channels must list at least one block".into());
        }
        if self.groups == 0 {
            return bad("groups must be positive".into());
        }
        let b = self.base_channels_b;
        let normalized = [b, 2 * b, 4 * b, self.pyramid_channels]
            .into_iter()
            .chain(self.dilated_block_channels.iter().copied());
        for c in normalized {
            if c == 0 || c % self.groups != 0 {
                return bad(format!(
                    "channel count {} is not divisible by groups={}",
                    c, self.groups
                ));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate={} outside [0, 1)", self.dropout_rate));
        }
        if self.sop_channels == 0 {
            return bad("sop_channels must be positive".into());
        }
        Ok(())
    }
}

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub momentum_decay: f64,
}

impl TrainConfig {
    pub fn desk() -> Self {
        TrainConfig {
            batch_size: 16,
            epochs: 20,
            learning_rate: 5e-4,
            ..Self::full()
        }
    }

    pub fn full() -> Self {
        TrainConfig {
            batch_size: 48,
            epochs: 20,
            learning_rate: 2e-6,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 0.004,
        }
    }
}

/// Everything a training run is parameterized by.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub augment: AugmentPolicy,
}

impl RunConfig {
    pub fn for_profile(p: Profile) -> Self {
        let graph = GraphConfig::for_profile(p);
        let train = match p {
            Profile::Desk => TrainConfig::desk(),
            Profile::Full => TrainConfig::full(),
        };
        let augment = AugmentPolicy {
            seed: graph.seed,
            ..AugmentPolicy::default()
        };
        RunConfig {
            graph,
            train,
            augment,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value.trim().parse().map_err(|_| {
                CoreError::Config(format!("invalid value `{}` for key `{}`", value, key))
            })
        }
        let g = &mut self.graph;
        let t = &mut self.train;
        let a = &mut self.augment;
        match key {
            "input_height" => g.input_height = parse(key, value)?,
            "input_width" => g.input_width = parse(key, value)?,
            "base_channels_a" => g.base_channels_a = parse(key, value)?,
            "base_channels_b" => g.base_channels_b = parse(key, value)?,
            "pyramid_channels" => g.pyramid_channels = parse(key, value)?,
            "dilated_block_channels" => {
                g.dilated_block_channels = value
                    .split(',')
                    .map(|v| parse(key, v))
                    .collect::<Result<_>>()?
            }
            "groups" => g.groups = parse(key, value)?,
            "dropout_rate" => g.dropout_rate = parse(key, value)?,
            "sop_channels" => g.sop_channels = parse(key, value)?,
            "seed" => {
                g.seed = parse(key, value)?;
                a.seed = g.seed;
            }
            "batch_size" => t.batch_size = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "beta1" => t.beta1 = parse(key, value)?,
            "beta2" => t.beta2 = parse(key, value)?,
            "epsilon" => t.epsilon = parse(key, value)?,
            "momentum_decay" => t.momentum_decay = parse(key, value)?,
            "max_rotation_deg" => a.max_rotation_deg = parse(key, value)?,
            "max_shift_frac" => a.max_shift_frac = parse(key, value)?,
            "apply_probability" => a.apply_probability = parse(key, value)?,
            other => return Err(CoreError::Config(format!("unknown config key `{}`", other))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("line {}: expected key=value, got `{}`", lineno + 1, line))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.train.batch_size == 0 {
            return Err(CoreError::Config("batch_size must be positive".into()));
        }
        if !(self.train.learning_rate > 0.0) {
            return Err(CoreError::Config("learning_rate must be positive".into()));
        }
        self.augment.validate()
    }

    pub fn to_text(&self) -> String {
        let mut s = graph_to_text(&self.graph);
        let t = &self.train;
        let a = &self.augment;
        for (k, v) in [
            ("batch_size", t.batch_size.to_string()),
            ("epochs", t.epochs.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("epsilon", t.epsilon.to_string()),
            ("momentum_decay", t.momentum_decay.to_string()),
            ("max_rotation_deg", a.max_rotation_deg.to_string()),
            ("max_shift_frac", a.max_shift_frac.to_string()),
            ("apply_probability", a.apply_probability.to_string()),
        ] {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// The graph section of the key=value format; this is the checkpoint's config echo.
pub fn graph_to_text(g: &GraphConfig) -> String {
    let blocks: Vec<String> = g.dilated_block_channels.iter().map(|c| c.to_string()).collect();
    format!(
        "input_height={}\ninput_width={}\nbase_channels_a={}\nbase_channels_b={}\n\
         pyramid_channels={}\ndilated_block_channels={}\ngroups={}\ndropout_rate={}\n\
         sop_channels={}\nseed={}\n",
        g.input_height,
        g.input_width,
        g.base_channels_a,
        g.base_channels_b,
        g.pyramid_channels,
        blocks.join(","),
        g.groups,
        g.dropout_rate,
        g.sop_channels,
        g.seed
    )
}

pub fn graph_from_text(text: &str) -> Result<GraphConfig> {
    let mut rc = RunConfig::for_profile(Profile::Desk);
    rc.apply_text(text)?;
    Ok(rc.graph)
}
