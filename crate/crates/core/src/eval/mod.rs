//! Evaluation kit. Throughout, **normal is the positive class**: scores are
//! normalcy probabilities, "sensitivity" on the curves is sensitivity for
//! normalcy, and a case is filtered from the worklist when its score is
//! strictly above the operating threshold.

pub mod artifacts;
pub mod consensus;
pub mod operating;
pub mod pr;
pub mod roc;
pub mod synth;
pub mod table;

pub use artifacts::{emit_roc_artifacts, read_roc_csv, ArtifactPaths};
pub use consensus::{consensus_partition, ConsensusPartition, ConsensusRecord};
pub use operating::{zero_miss_operating_point, OperatingPoint};
pub use pr::{pr_curve, PrCurve, PrPoint};
pub use roc::{roc_auc, roc_curve, RocCurve, RocPoint};
pub use synth::{make_synthetic_dataset, render_background, Blob, SyntheticImage};
pub use table::{Label, ScoreRow, ScoreTable};
