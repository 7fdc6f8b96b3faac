//! The classifier: tensor kernels, the dataflow graph, the dual-backbone
//! pyramid, and the training machinery around it.

pub mod augment;
pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod graph;
pub mod imageio;
pub mod intensity;
pub mod ops;
pub mod optim;
pub mod pyramid;
pub mod train;

pub use augment::{augment, AugmentPolicy, Transform};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{GraphConfig, Profile, RunConfig, TrainConfig};
pub use graph::{GraphBuilder, GraphPlan, Gradients, ParamStore, TensorGraph};
pub use intensity::{normalize_intensity, normalize_min_max};
pub use ops::{ConvSpec, Mode, Padding};
pub use optim::{NadamHyper, OptimState};
pub use pyramid::{build_backbones, build_pyramid_graph, concat_channels, dilated_block, plan_pyramid};
pub use train::{train_toy, Dataset, EpochRecord, Example, TrainOptions, TrainingLog};
