//! Trigger-scoped negation and hypothetical detection.

use std::collections::BTreeMap;

use crate::mentions::{token_range, FindingMention, Polarity};
use crate::ontology::Ontology;
use crate::sections::ReportDoc;
use crate::text::{find_any, word_tokens, Token};

/// Trigger matches in one sentence, as token ranges.
pub(crate) struct SentenceTriggers {
    pub negation: Vec<(usize, usize)>,
    pub post_negation: Vec<(usize, usize)>,
    pub hypothetical: Vec<(usize, usize)>,
    pub terminators: Vec<(usize, usize)>,
}

impl SentenceTriggers {
    pub fn find(tokens: &[Token], ont: &Ontology) -> Self {
        let c = &ont.compiled;
        let pseudo = find_any(tokens, &c.pseudo_negation);
        let live = |hits: Vec<(usize, usize)>| -> Vec<(usize, usize)> {
            hits.into_iter()
                .filter(|&(a, b)| !pseudo.iter().any(|&(pa, pb)| pa <= a && b <= pb))
                .collect()
        };
        SentenceTriggers {
            negation: live(find_any(tokens, &c.negation)),
            post_negation: live(find_any(tokens, &c.post_negation)),
            hypothetical: live(find_any(tokens, &c.hypothetical)),
            terminators: find_any(tokens, &c.terminators),
        }
    }

    fn clear(&self, from: usize, to: usize) -> bool {
        !self.terminators.iter().any(|&(a, _)| a >= from && a < to)
    }

    /// A trigger ending before `target` with no terminator in between.
    pub fn precedes(&self, hits: &[(usize, usize)], target: (usize, usize)) -> bool {
        hits.iter().any(|&(_, e)| e <= target.0 && self.clear(e, target.0))
    }

    fn follows(&self, hits: &[(usize, usize)], target: (usize, usize)) -> bool {
        hits.iter().any(|&(s, _)| s >= target.1 && self.clear(target.1, s))
    }

    pub fn polarity_of(&self, target: (usize, usize)) -> Polarity {
        if self.precedes(&self.negation, target) || self.follows(&self.post_negation, target) {
            Polarity::Negated
        } else if self.precedes(&self.hypothetical, target) {
            Polarity::Hypothetical
        } else {
            Polarity::Positive
        }
    }
}

/// Sets each mention's polarity from the triggers in its own sentence.
/// Negation wins over hypothetical. Use [`final_mentions`] for the
/// per-concept outcome, which is decided by the last mention alone.
pub fn resolve_polarity(doc: &ReportDoc, mentions: &[FindingMention], ont: &Ontology) -> Vec<FindingMention> {
    let mut cache: BTreeMap<usize, (Vec<Token>, SentenceTriggers)> = BTreeMap::new();
    mentions
        .iter()
        .map(|m| {
            let sent = &doc.body_sentences[m.sentence_index];
            let (tokens, triggers) = cache.entry(m.sentence_index).or_insert_with(|| {
                let t = word_tokens(&sent.text);
                let tr = SentenceTriggers::find(&t, ont);
                (t, tr)
            });
            let range = token_range(tokens, sent.start, m.span);
            FindingMention {
                polarity: triggers.polarity_of(range),
                ..m.clone()
            }
        })
        .collect()
}

/// The last mention, in document order, of every concept.
pub fn final_mentions(mentions: &[FindingMention]) -> BTreeMap<&str, &FindingMention> {
    let mut out = BTreeMap::new();
    for m in mentions {
        let slot = out.entry(m.concept_id.as_str()).or_insert(m);
        if (m.sentence_index, m.span) >= (slot.sentence_index, slot.span) {
            *slot = m;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mentions::extract_mentions;
    use crate::ontology::default_ontology;
    use crate::sections::segment_sections;

    fn finals(text: &str) -> Vec<(String, Polarity)> {
        let ont = default_ontology();
        let doc = segment_sections(text, &ont);
        let ms = resolve_polarity(&doc, &extract_mentions(&doc, &ont), &ont);
        final_mentions(&ms)
            .into_iter()
            .map(|(k, m)| (k.to_string(), m.polarity))
            .collect()
    }

    fn one(text: &str) -> Polarity {
        let f = finals(text);
        assert_eq!(f.len(), 1, "{f:?}");
        f[0].1
    }

    #[test]
    fn pre_negation() {
        assert_eq!(one("no pneumothorax"), Polarity::Negated);
        assert_eq!(one("pneumothorax is present"), Polarity::Positive);
        assert_eq!(one("No evidence of focal consolidation."), Polarity::Negated);
    }

    #[test]
    fn last_sentence_decides() {
        let text = "Possible effusion. Heart normal. Mediastinum normal. Bones intact. \
                    The effusion has resolved, none seen.";
        assert_eq!(one(text), Polarity::Negated);
        assert_eq!(one("No effusion. Small effusion on the left."), Polarity::Positive);
    }

    #[test]
    fn hypothetical_and_precedence() {
        assert_eq!(one("Possible pneumonia."), Polarity::Hypothetical);
        assert_eq!(one("No possible pneumothorax."), Polarity::Negated);
        assert_eq!(one("Possibly no pneumothorax."), Polarity::Negated);
    }

    #[test]
    fn terminator_limits_scope() {
        let f = finals("No pneumothorax, but there is a small effusion.");
        assert_eq!(
            f,
            vec![
                ("pleural_effusion".to_string(), Polarity::Positive),
                ("pneumothorax".to_string(), Polarity::Negated)
            ]
        );
    }

    #[test]
    fn post_negation_and_pseudo() {
        assert_eq!(one("Pneumothorax is not seen."), Polarity::Negated);
        assert_eq!(one("No change in the left effusion."), Polarity::Positive);
    }
}
