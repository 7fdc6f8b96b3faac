//! Longest-match synonym extraction over body sentences.

use serde::Serialize;

use crate::ontology::Ontology;
use crate::sections::ReportDoc;
use crate::text::{word_tokens, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negated,
    Hypothetical,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negated => "negated",
            Polarity::Hypothetical => "hypothetical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FindingMention {
    pub concept_id: String,
    /// Index into `ReportDoc::body_sentences`.
    pub sentence_index: usize,
    /// Byte range in the report's raw text.
    pub span: (usize, usize),
    /// The matched synonym in normalized form.
    pub surface: String,
    pub polarity: Polarity,
}

/// Token range `[start, end)` of a mention within its sentence's tokens.
pub(crate) fn token_range(tokens: &[Token], sentence_start: usize, span: (usize, usize)) -> (usize, usize) {
    let (s, e) = (span.0 - sentence_start, span.1 - sentence_start);
    let a = tokens.iter().position(|t| t.start == s).unwrap_or(0);
    let b = tokens.iter().rposition(|t| t.end == e).map_or(tokens.len(), |i| i + 1);
    (a, b)
}

/// Every synonym occurrence in every body sentence, resolved so that longer
/// matches win over the shorter ones they overlap. Polarity starts positive.
pub fn extract_mentions(doc: &ReportDoc, ont: &Ontology) -> Vec<FindingMention> {
    let mut out = Vec::new();
    for (si, sent) in doc.body_sentences.iter().enumerate() {
        let tokens = word_tokens(&sent.text);
        let mut hits: Vec<(usize, usize, usize)> = Vec::new();
        for (ei, entry) in ont.compiled.lexicon.iter().enumerate() {
            for (a, b) in crate::text::find_phrase(&tokens, &entry.tokens) {
                hits.push((a, b, ei));
            }
        }
        hits.sort_by(|x, y| (y.1 - y.0).cmp(&(x.1 - x.0)).then(x.0.cmp(&y.0)).then(x.2.cmp(&y.2)));
        let mut taken = vec![false; tokens.len()];
        let mut chosen = Vec::new();
        for (a, b, ei) in hits {
            if taken[a..b].iter().any(|&t| t) {
                continue;
            }
            taken[a..b].iter_mut().for_each(|t| *t = true);
            chosen.push((a, b, ei));
        }
        chosen.sort_unstable();
        for (a, b, ei) in chosen {
            let entry = &ont.compiled.lexicon[ei];
            out.push(FindingMention {
                concept_id: ont.concepts[entry.concept].id.clone(),
                sentence_index: si,
                span: (sent.start + tokens[a].start, sent.start + tokens[b - 1].end),
                surface: entry.surface.clone(),
                polarity: Polarity::Positive,
            });
        }
    }
    out
}
