//! Header detection and the history/body split.

use serde::Serialize;

use crate::ontology::Ontology;
use crate::text::{tokenize_sentences, word_tokens, Sentence, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// Text before any recognized header.
    Preamble,
    History,
    Body,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    /// Header as written, without the colon.
    pub header: Option<String>,
    pub kind: SectionKind,
    pub sentences: Vec<Sentence>,
}

/// A report split into sections. Sentence offsets are bytes into `raw_text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDoc {
    pub study_id: String,
    pub raw_text: String,
    pub sections: Vec<Section>,
    pub body_sentences: Vec<Sentence>,
}

impl ReportDoc {
    pub fn with_study_id(mut self, id: impl Into<String>) -> Self {
        self.study_id = id.into();
        self
    }
}

struct HeaderHit {
    start: usize,
    end: usize,
    kind: SectionKind,
}

fn can_open_header(text: &str, tokens: &[Token], i: usize) -> bool {
    if i == 0 {
        return true;
    }
    let prev = &tokens[i - 1];
    matches!(prev.norm.as_str(), "." | "!" | "?" | ":") || text[prev.end..tokens[i].start].contains('\n')
}

fn find_headers(text: &str, ont: &Ontology) -> Vec<HeaderHit> {
    let tokens = word_tokens(text);
    let c = &ont.compiled;
    let mut candidates: Vec<(&Vec<String>, SectionKind)> = c
        .history_headers
        .iter()
        .map(|h| (h, SectionKind::History))
        .chain(c.body_headers.iter().map(|h| (h, SectionKind::Body)))
        .collect();
    candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
    let mut hits = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if can_open_header(text, &tokens, i) {
            let found = candidates.iter().find(|(h, _)| {
                let n = h.len();
                i + n < tokens.len()
                    && tokens[i..i + n].iter().zip(h.iter()).all(|(t, w)| &t.norm == w)
                    && tokens[i + n].norm == ":"
            });
            if let Some((h, kind)) = found {
                let colon = &tokens[i + h.len()];
                hits.push(HeaderHit {
                    start: tokens[i].start,
                    end: colon.end,
                    kind: *kind,
                });
                i += h.len() + 1;
                continue;
            }
        }
        i += 1;
    }
    hits
}

fn sentences_in(text: &str, start: usize, end: usize) -> Vec<Sentence> {
    tokenize_sentences(&text[start..end])
        .into_iter()
        .map(|s| Sentence {
            text: s.text,
            start: s.start + start,
            end: s.end + start,
        })
        .collect()
}

/// Groups sentences under the nearest preceding header. Headers are matched
/// case-insensitively when followed by a colon at the start of the text, a
/// line, or a sentence. Sentences under history-like headers are left out of
/// `body_sentences`.
pub fn segment_sections(text: &str, ont: &Ontology) -> ReportDoc {
    let hits = find_headers(text, ont);
    let mut sections = Vec::new();
    let first = hits.first().map_or(text.len(), |h| h.start);
    let pre = sentences_in(text, 0, first);
    if !pre.is_empty() {
        sections.push(Section {
            header: None,
            kind: SectionKind::Preamble,
            sentences: pre,
        });
    }
    for (k, h) in hits.iter().enumerate() {
        let stop = hits.get(k + 1).map_or(text.len(), |n| n.start);
        let raw = &text[h.start..h.end - 1];
        sections.push(Section {
            header: Some(raw.trim_end().to_string()),
            kind: h.kind,
            sentences: sentences_in(text, h.end, stop),
        });
    }
    let body_sentences = sections
        .iter()
        .filter(|s| s.kind != SectionKind::History)
        .flat_map(|s| s.sentences.iter().cloned())
        .collect();
    ReportDoc {
        study_id: String::new(),
        raw_text: text.to_string(),
        sections,
        body_sentences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::default_ontology;

    fn body(text: &str) -> Vec<String> {
        segment_sections(text, &default_ontology())
            .body_sentences
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn indication_is_dropped() {
        assert_eq!(body("INDICATION: cough. FINDINGS: Lungs clear."), ["Lungs clear."]);
    }

    #[test]
    fn headerless_text_is_body() {
        assert_eq!(body("Heart normal. Lungs clear."), ["Heart normal.", "Lungs clear."]);
    }

    #[test]
    fn history_only() {
        assert!(body("HISTORY: fever.").is_empty());
    }

    #[test]
    fn multiword_and_case() {
        let doc = segment_sections(
            "Clinical Information: rule out pneumonia\nImpression:  no acute disease.",
            &default_ontology(),
        );
        assert_eq!(doc.sections.len(), 2);
        assert_eq!(doc.sections[0].header.as_deref(), Some("Clinical Information"));
        assert_eq!(doc.sections[0].kind, SectionKind::History);
        assert_eq!(doc.body_sentences.len(), 1);
        assert_eq!(doc.body_sentences[0].text, "no acute disease.");
    }

    #[test]
    fn header_word_mid_sentence_is_text() {
        let b = body("FINDINGS: compared with the history: unchanged.");
        assert_eq!(b, ["compared with the history: unchanged."]);
    }

    #[test]
    fn offsets_are_absolute() {
        let text = "HISTORY: x. FINDINGS: Small effusion.";
        let doc = segment_sections(text, &default_ontology());
        let s = &doc.body_sentences[0];
        assert_eq!(&text[s.start..s.end], s.text);
    }
}
