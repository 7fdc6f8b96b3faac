//! The finding ontology: concepts with synonyms, remap rules, trigger
//! vocabularies and section headers. See `docs/ontology.md` for the file format.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};
use crate::text::phrase_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Lungs,
    Pleura,
    Mediastinum,
    Bones,
    Other,
    ExamQuality,
    Device,
}

impl Category {
    /// Findings in these categories make a study abnormal.
    pub fn is_anatomical(self) -> bool {
        matches!(
            self,
            Category::Lungs | Category::Pleura | Category::Mediastinum | Category::Bones | Category::Other
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Lungs => "lungs",
            Category::Pleura => "pleura",
            Category::Mediastinum => "mediastinum",
            Category::Bones => "bones",
            Category::Other => "other",
            Category::ExamQuality => "exam_quality",
            Category::Device => "device",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindingConcept {
    pub id: String,
    pub display_name: String,
    pub category: Category,
    pub synonyms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_kind: Option<String>,
}

fn default_window() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemapRule {
    pub surface_term: String,
    pub context_category: Category,
    pub target_concept: String,
    #[serde(default = "default_window")]
    pub context_window_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionHeaders {
    pub history_like: Vec<String>,
    pub body_like: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for SectionHeaders {
    fn default() -> Self {
        SectionHeaders {
            history_like: strings(&[
                "history",
                "clinical history",
                "indication",
                "indications",
                "clinical indication",
                "clinical information",
                "reason for exam",
                "reason for study",
            ]),
            body_like: strings(&["findings", "impression", "conclusion", "comparison", "technique"]),
        }
    }
}

pub fn default_negation_triggers() -> Vec<String> {
    strings(&[
        "no",
        "not",
        "without",
        "free of",
        "negative for",
        "resolved",
        "absence of",
        "none",
        "no evidence of",
        "resolution of",
        "clear of",
    ])
}

pub fn default_post_negation_triggers() -> Vec<String> {
    strings(&[
        "resolved",
        "none seen",
        "not seen",
        "not identified",
        "not present",
        "not visualized",
        "absent",
        "removed",
        "ruled out",
    ])
}

pub fn default_pseudo_negation_triggers() -> Vec<String> {
    strings(&[
        "no change",
        "no interval change",
        "no significant change",
        "no increase",
        "no decrease",
        "not only",
    ])
}

pub fn default_hypothetical_triggers() -> Vec<String> {
    strings(&[
        "rule out",
        "r/o",
        "concern for",
        "evaluate for",
        "evaluation for",
        "assess for",
        "question of",
        "possible",
        "possibly",
        "questionable",
        "if",
    ])
}

pub fn default_scope_terminators() -> Vec<String> {
    strings(&["but", "however", "although", "though", "except", ";"])
}

pub fn default_malposition_markers() -> Vec<String> {
    strings(&[
        "malpositioned",
        "malposition",
        "misplaced",
        "tip in right mainstem",
        "right mainstem",
        "coiled",
        "in the esophagus",
        "too high",
        "too low",
        "should be advanced",
        "should be withdrawn",
        "should be retracted",
        "repositioning",
        "kinked",
    ])
}

/// The on-disk shape of an ontology file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyFile {
    pub concepts: Vec<FindingConcept>,
    #[serde(default)]
    pub remap_rules: Vec<RemapRule>,
    #[serde(default)]
    pub context_vocabulary: BTreeMap<Category, Vec<String>>,
    #[serde(default = "default_negation_triggers")]
    pub negation_triggers: Vec<String>,
    #[serde(default = "default_post_negation_triggers")]
    pub post_negation_triggers: Vec<String>,
    #[serde(default = "default_pseudo_negation_triggers")]
    pub pseudo_negation_triggers: Vec<String>,
    #[serde(default = "default_hypothetical_triggers")]
    pub hypothetical_triggers: Vec<String>,
    #[serde(default = "default_scope_terminators")]
    pub scope_terminators: Vec<String>,
    #[serde(default)]
    pub section_headers: SectionHeaders,
    #[serde(default = "default_malposition_markers")]
    pub malposition_markers: Vec<String>,
}

pub(crate) type Phrase = Vec<String>;

/// Synonym as matched: its tokens, normalized surface and owning concept.
#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub tokens: Phrase,
    pub surface: String,
    pub concept: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Compiled {
    pub lexicon: Vec<Entry>,
    pub negation: Vec<Phrase>,
    pub post_negation: Vec<Phrase>,
    pub pseudo_negation: Vec<Phrase>,
    pub hypothetical: Vec<Phrase>,
    pub terminators: Vec<Phrase>,
    pub malposition: Vec<Phrase>,
    pub context: HashMap<Category, Vec<Phrase>>,
    pub rule_terms: Vec<String>,
    pub history_headers: Vec<Phrase>,
    pub body_headers: Vec<Phrase>,
}

/// A validated ontology. Immutable once built and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Ontology {
    pub concepts: Vec<FindingConcept>,
    pub remap_rules: Vec<RemapRule>,
    pub context_vocabulary: BTreeMap<Category, Vec<String>>,
    pub negation_triggers: Vec<String>,
    pub post_negation_triggers: Vec<String>,
    pub pseudo_negation_triggers: Vec<String>,
    pub hypothetical_triggers: Vec<String>,
    pub scope_terminators: Vec<String>,
    pub section_headers: SectionHeaders,
    pub malposition_markers: Vec<String>,
    index: HashMap<String, usize>,
    pub(crate) compiled: Compiled,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabelerError::Validation(msg.into()))
}

fn surface(tokens: &[String]) -> String {
    tokens.join(" ")
}

fn compile_list(name: &str, items: &[String]) -> Result<Vec<Phrase>> {
    items
        .iter()
        .map(|p| {
            let t = phrase_tokens(p);
            if t.is_empty() {
                invalid(format!("{} contains an empty phrase", name))
            } else {
                Ok(t)
            }
        })
        .collect()
}

impl Ontology {
    pub fn from_file(file: OntologyFile) -> Result<Self> {
        let mut index = HashMap::new();
        let mut display = HashSet::new();
        for (i, c) in file.concepts.iter().enumerate() {
            if c.id.trim().is_empty() {
                return invalid(format!("concepts[{}].id is empty", i));
            }
            if index.insert(c.id.clone(), i).is_some() {
                return invalid(format!("duplicate concept id `{}`", c.id));
            }
            if c.synonyms.is_empty() {
                return invalid(format!("concept `{}` has no synonyms", c.id));
            }
            match (c.category == Category::Device, &c.device_kind) {
                (true, None) => return invalid(format!("device concept `{}` lacks device_kind", c.id)),
                (false, Some(_)) => {
                    return invalid(format!("concept `{}` has device_kind but category {}", c.id, c.category))
                }
                _ => {}
            }
            if c.category != Category::Device && !display.insert(c.display_name.to_lowercase()) {
                return invalid(format!("display name `{}` appears twice", c.display_name));
            }
        }

        let rule_terms: Vec<String> = file.remap_rules.iter().map(|r| surface(&phrase_tokens(&r.surface_term))).collect();
        for r in &file.remap_rules {
            if !index.contains_key(&r.target_concept) {
                return invalid(format!(
                    "remap rule for `{}` targets unknown concept `{}`",
                    r.surface_term, r.target_concept
                ));
            }
            if r.context_window_tokens == 0 {
                return invalid(format!("remap rule for `{}` has a zero context window", r.surface_term));
            }
            if file.context_vocabulary.get(&r.context_category).is_none_or(|v| v.is_empty()) {
                return invalid(format!(
                    "remap rule for `{}` uses category {} which has no context_vocabulary",
                    r.surface_term, r.context_category
                ));
            }
        }

        let mut owner: HashMap<String, usize> = HashMap::new();
        let mut lexicon = Vec::new();
        for (ci, c) in file.concepts.iter().enumerate() {
            for syn in &c.synonyms {
                let tokens = phrase_tokens(syn);
                if tokens.is_empty() {
                    return invalid(format!("concept `{}` has an empty synonym", c.id));
                }
                let s = surface(&tokens);
                match owner.get(&s) {
                    Some(&other) if other == ci => continue,
                    Some(&other) => {
                        if !rule_terms.contains(&s) {
                            return invalid(format!(
                                "synonym `{}` maps to both `{}` and `{}` with no remap rule",
                                s, file.concepts[other].id, c.id
                            ));
                        }
                        continue;
                    }
                    None => {
                        owner.insert(s.clone(), ci);
                    }
                }
                lexicon.push(Entry {
                    tokens,
                    surface: s,
                    concept: ci,
                });
            }
        }

        let lists = [
            ("negation_triggers", &file.negation_triggers),
            ("hypothetical_triggers", &file.hypothetical_triggers),
            ("scope_terminators", &file.scope_terminators),
        ];
        let norm_set = |v: &[String]| -> HashSet<String> { v.iter().map(|p| surface(&phrase_tokens(p))).collect() };
        for (i, (na, a)) in lists.iter().enumerate() {
            for (nb, b) in &lists[i + 1..] {
                if let Some(x) = norm_set(a).intersection(&norm_set(b)).next() {
                    return invalid(format!("`{}` appears in both {} and {}", x, na, nb));
                }
            }
        }
        for (nb, b) in &lists[1..] {
            if let Some(x) = norm_set(&file.post_negation_triggers).intersection(&norm_set(b)).next() {
                return invalid(format!("`{}` appears in both post_negation_triggers and {}", x, nb));
            }
        }

        let mut context = HashMap::new();
        for (cat, words) in &file.context_vocabulary {
            context.insert(*cat, compile_list("context_vocabulary", words)?);
        }
        let compiled = Compiled {
            lexicon,
            negation: compile_list("negation_triggers", &file.negation_triggers)?,
            post_negation: compile_list("post_negation_triggers", &file.post_negation_triggers)?,
            pseudo_negation: compile_list("pseudo_negation_triggers", &file.pseudo_negation_triggers)?,
            hypothetical: compile_list("hypothetical_triggers", &file.hypothetical_triggers)?,
            terminators: compile_list("scope_terminators", &file.scope_terminators)?,
            malposition: compile_list("malposition_markers", &file.malposition_markers)?,
            context,
            rule_terms,
            history_headers: compile_list("section_headers.history_like", &file.section_headers.history_like)?,
            body_headers: compile_list("section_headers.body_like", &file.section_headers.body_like)?,
        };
        Ok(Ontology {
            concepts: file.concepts,
            remap_rules: file.remap_rules,
            context_vocabulary: file.context_vocabulary,
            negation_triggers: file.negation_triggers,
            post_negation_triggers: file.post_negation_triggers,
            pseudo_negation_triggers: file.pseudo_negation_triggers,
            hypothetical_triggers: file.hypothetical_triggers,
            scope_terminators: file.scope_terminators,
            section_headers: file.section_headers,
            malposition_markers: file.malposition_markers,
            index,
            compiled,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(json).map_err(|source| LabelerError::Schema {
            path: "<ontology>".into(),
            source,
        })?;
        Self::from_file(file)
    }

    pub fn concept(&self, id: &str) -> Option<&FindingConcept> {
        self.index.get(id).map(|&i| &self.concepts[i])
    }

    pub fn to_file(&self) -> OntologyFile {
        OntologyFile {
            concepts: self.concepts.clone(),
            remap_rules: self.remap_rules.clone(),
            context_vocabulary: self.context_vocabulary.clone(),
            negation_triggers: self.negation_triggers.clone(),
            post_negation_triggers: self.post_negation_triggers.clone(),
            pseudo_negation_triggers: self.pseudo_negation_triggers.clone(),
            hypothetical_triggers: self.hypothetical_triggers.clone(),
            scope_terminators: self.scope_terminators.clone(),
            section_headers: self.section_headers.clone(),
            malposition_markers: self.malposition_markers.clone(),
        }
    }
}

/// Reads and validates an ontology file.
pub fn load_ontology(path: &Path) -> Result<Ontology> {
    let text = std::fs::read_to_string(path)?;
    let file: OntologyFile = serde_json::from_str(&text).map_err(|source| LabelerError::Schema {
        path: path.to_path_buf(),
        source,
    })?;
    Ontology::from_file(file)
}

/// The ontology shipped in `data/default_ontology.json`.
pub fn default_ontology() -> Ontology {
    Ontology::from_json_str(include_str!("../../../data/default_ontology.json"))
        .expect("shipped ontology is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"concepts": [{"id": "ptx", "display_name": "pneumothorax",
        "category": "pleura", "synonyms": ["pneumothorax"]}]}"#;

    #[test]
    fn minimal_file() {
        let o = Ontology::from_json_str(MINIMAL).unwrap();
        assert_eq!(o.concepts.len(), 1);
        assert!(o.negation_triggers.contains(&"no".to_string()));
    }

    #[test]
    fn duplicate_synonym_without_rule() {
        let json = r#"{"concepts": [
            {"id": "a", "display_name": "a", "category": "lungs", "synonyms": ["shadow"]},
            {"id": "b", "display_name": "b", "category": "bones", "synonyms": ["Shadow"]}]}"#;
        let e = Ontology::from_json_str(json).unwrap_err().to_string();
        assert!(e.contains("shadow"), "{e}");
    }

    #[test]
    fn duplicate_id() {
        let json = r#"{"concepts": [
            {"id": "a", "display_name": "a", "category": "lungs", "synonyms": ["x"]},
            {"id": "a", "display_name": "b", "category": "lungs", "synonyms": ["y"]}]}"#;
        assert!(matches!(Ontology::from_json_str(json), Err(LabelerError::Validation(_))));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let json = r#"{"concepts": [{"id": "a", "display_name": "a", "category": "lungs"}]}"#;
        let e = Ontology::from_json_str(json).unwrap_err().to_string();
        assert!(e.contains("synonyms"), "{e}");
        let json = r#"{"concepts": [], "negation_trigers": []}"#;
        let e = Ontology::from_json_str(json).unwrap_err().to_string();
        assert!(e.contains("negation_trigers"), "{e}");
    }

    #[test]
    fn unknown_remap_target() {
        let json = r#"{"concepts": [{"id": "a", "display_name": "a", "category": "lungs", "synonyms": ["x"]}],
            "context_vocabulary": {"bones": ["rib"]},
            "remap_rules": [{"surface_term": "x", "context_category": "bones", "target_concept": "zz"}]}"#;
        let e = Ontology::from_json_str(json).unwrap_err().to_string();
        assert!(e.contains("zz"), "{e}");
    }

    #[test]
    fn overlapping_trigger_lists() {
        let json = r#"{"concepts": [], "negation_triggers": ["no"], "hypothetical_triggers": ["No"]}"#;
        assert!(Ontology::from_json_str(json).is_err());
    }

    #[test]
    fn device_kind_consistency() {
        let json = r#"{"concepts": [{"id": "t", "display_name": "t", "category": "device", "synonyms": ["tube"]}]}"#;
        assert!(Ontology::from_json_str(json).is_err());
    }

    #[test]
    fn shipped_ontology_covers_the_taxonomy() {
        let o = default_ontology();
        let findings: Vec<_> = o.concepts.iter().filter(|c| c.category != Category::Device).collect();
        assert_eq!(findings.len(), 43);
        let cats: HashSet<Category> = findings.iter().map(|c| c.category).collect();
        assert_eq!(cats.len(), 6);
        assert!(o.concepts.iter().any(|c| c.category == Category::Device));
    }
}
