//! Context-dependent reassignment of ambiguous surface terms.

use crate::mentions::{token_range, FindingMention};
use crate::ontology::Ontology;
use crate::sections::ReportDoc;
use crate::text::{find_any, word_tokens};

fn gap(a: (usize, usize), b: (usize, usize)) -> usize {
    if a.1 <= b.0 {
        b.0 - a.1
    } else if b.1 <= a.0 {
        a.0 - b.1
    } else {
        0
    }
}

/// Reassigns a mention whose surface equals a rule's `surface_term` when a
/// context word of the rule's category lies within `context_window_tokens`
/// tokens of it in the same sentence. The rule with the nearest context word
/// wins; ties go to the rule listed first.
pub fn apply_remap_rules(doc: &ReportDoc, mentions: &[FindingMention], ont: &Ontology) -> Vec<FindingMention> {
    mentions
        .iter()
        .map(|m| {
            let mut best: Option<(usize, usize)> = None;
            for (ri, rule) in ont.remap_rules.iter().enumerate() {
                if ont.compiled.rule_terms[ri] != m.surface {
                    continue;
                }
                let Some(vocab) = ont.compiled.context.get(&rule.context_category) else {
                    continue;
                };
                let sent = &doc.body_sentences[m.sentence_index];
                let tokens = word_tokens(&sent.text);
                let range = token_range(&tokens, sent.start, m.span);
                let nearest = find_any(&tokens, vocab)
                    .into_iter()
                    .filter(|&h| h.1 <= range.0 || h.0 >= range.1)
                    .map(|h| gap(h, range) + 1)
                    .min();
                if let Some(d) = nearest.filter(|&d| d <= rule.context_window_tokens) {
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, ri));
                    }
                }
            }
            match best {
                Some((_, ri)) => FindingMention {
                    concept_id: ont.remap_rules[ri].target_concept.clone(),
                    ..m.clone()
                },
                None => m.clone(),
            }
        })
        .collect()
}
