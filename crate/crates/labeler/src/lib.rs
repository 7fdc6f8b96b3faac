//! Rule-based labeling of chest radiograph reports as normal or abnormal.
//!
//! ```
//! use cxr_labeler::{default_ontology, label_report, Verdict};
//!
//! let ont = default_ontology();
//! let label = label_report("s1", "FINDINGS: Lungs clear. No pneumothorax.", &ont);
//! assert_eq!(label.verdict, Verdict::Normal);
//! ```

pub mod error;
pub mod io;
pub mod label;
pub mod mentions;
pub mod ontology;
pub mod polarity;
pub mod remap;
pub mod sections;
pub mod text;

pub use error::{LabelerError, Result};
pub use label::{label_from_mentions, label_report, label_study, label_study_detailed, Evidence, Labeled, StudyLabel, Verdict};
pub use mentions::{extract_mentions, FindingMention, Polarity};
pub use ontology::{default_ontology, load_ontology, Category, FindingConcept, Ontology, OntologyFile, RemapRule, SectionHeaders};
pub use polarity::{final_mentions, resolve_polarity};
pub use remap::apply_remap_rules;
pub use sections::{segment_sections, ReportDoc, Section, SectionKind};
pub use text::{tokenize_sentences, Sentence};
