//! The study-level verdict.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::mentions::{extract_mentions, token_range, FindingMention, Polarity};
use crate::ontology::{Category, Ontology};
use crate::polarity::{final_mentions, resolve_polarity, SentenceTriggers};
use crate::remap::apply_remap_rules;
use crate::sections::{segment_sections, ReportDoc};
use crate::text::{find_any, word_tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Abnormal,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Normal => "normal",
            Verdict::Abnormal => "abnormal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub sentence: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StudyLabel {
    pub study_id: String,
    pub verdict: Verdict,
    /// Positive non-device concepts, sorted by id.
    pub positive_findings: Vec<String>,
    /// The deciding sentence of every mentioned concept.
    pub evidence: BTreeMap<String, Evidence>,
    pub nondiagnostic: bool,
    pub device_misplaced: bool,
}

/// Full pipeline output, for callers that want the intermediate mentions.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub doc: ReportDoc,
    pub mentions: Vec<FindingMention>,
    pub label: StudyLabel,
}

/// A positive device mention sharing a sentence with a malposition marker
/// that is not itself negated.
fn any_device_misplaced(doc: &ReportDoc, mentions: &[FindingMention], ont: &Ontology) -> bool {
    mentions.iter().any(|m| {
        if m.polarity != Polarity::Positive
            || ont.concept(&m.concept_id).map(|c| c.category) != Some(Category::Device)
        {
            return false;
        }
        let sent = &doc.body_sentences[m.sentence_index];
        let tokens = word_tokens(&sent.text);
        let triggers = SentenceTriggers::find(&tokens, ont);
        let device = token_range(&tokens, sent.start, m.span);
        find_any(&tokens, &ont.compiled.malposition)
            .into_iter()
            .filter(|&h| h.1 <= device.0 || h.0 >= device.1)
            .any(|h| !triggers.precedes(&triggers.negation, h))
    })
}

/// The normal definition applied to a resolved mention list.
pub fn label_from_mentions(doc: &ReportDoc, mentions: &[FindingMention], ont: &Ontology) -> StudyLabel {
    let finals = final_mentions(mentions);
    let mut positive_findings = Vec::new();
    let mut evidence = BTreeMap::new();
    let mut anatomical = false;
    let mut nondiagnostic = false;
    for (id, m) in &finals {
        evidence.insert(
            id.to_string(),
            Evidence {
                sentence: doc.body_sentences[m.sentence_index].text.clone(),
                polarity: m.polarity,
            },
        );
        let Some(cat) = ont.concept(id).map(|c| c.category) else {
            continue;
        };
        if m.polarity != Polarity::Positive || cat == Category::Device {
            continue;
        }
        positive_findings.push(id.to_string());
        anatomical |= cat.is_anatomical();
        nondiagnostic |= cat == Category::ExamQuality;
    }
    let device_misplaced = any_device_misplaced(doc, mentions, ont);
    let verdict = if anatomical || nondiagnostic || device_misplaced {
        Verdict::Abnormal
    } else {
        Verdict::Normal
    };
    StudyLabel {
        study_id: doc.study_id.clone(),
        verdict,
        positive_findings,
        evidence,
        nondiagnostic,
        device_misplaced,
    }
}

/// Extract, remap, then resolve polarity, and apply the normal definition.
pub fn label_study_detailed(doc: &ReportDoc, ont: &Ontology) -> Labeled {
    let extracted = extract_mentions(doc, ont);
    let remapped = apply_remap_rules(doc, &extracted, ont);
    let mentions = resolve_polarity(doc, &remapped, ont);
    let label = label_from_mentions(doc, &mentions, ont);
    Labeled {
        doc: doc.clone(),
        mentions,
        label,
    }
}

pub fn label_study(doc: &ReportDoc, ont: &Ontology) -> StudyLabel {
    label_study_detailed(doc, ont).label
}

/// Segments and labels one raw report.
pub fn label_report(study_id: &str, text: &str, ont: &Ontology) -> StudyLabel {
    let doc = segment_sections(text, ont).with_study_id(study_id);
    label_study(&doc, ont)
}
