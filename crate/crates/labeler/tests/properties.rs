use proptest::prelude::*;

use cxr_labeler::{
    default_ontology, label_study_detailed, segment_sections, tokenize_sentences, Category, Ontology, Polarity,
    SectionKind, Verdict,
};
use std::sync::OnceLock;

fn ont() -> &'static Ontology {
    static ONT: OnceLock<Ontology> = OnceLock::new();
    ONT.get_or_init(default_ontology)
}

const SENTENCES: &[&str] = &[
    "No pneumothorax.",
    "Small left pleural effusion.",
    "Possible consolidation.",
    "Heart size is normal.",
    "Lungs are clear.",
    "No evidence of pulmonary edema.",
    "Collapse of the T8 vertebral body.",
    "Left lower lobe collapse.",
    "Endotracheal tube in standard position.",
    "The enteric tube is coiled in the esophagus.",
    "The effusion has resolved.",
    "Mild cardiomegaly.",
    "Dr. Smith discussed the findings.",
    "No change in the pulmonary nodule.",
    "Enlarged cardiac silhouette and effusion.",
    "Rule out pneumonia.",
    "Non-diagnostic exam due to motion.",
    "Degenerative changes of the spine; no fracture.",
    "No pneumothorax, but there is a small effusion.",
    "Pneumothorax is not seen.",
    "Right upper lobe mass.",
    "Calcified granuloma e.g. old infection.",
];

const NORMAL_SENTENCES: &[&str] = &[
    "No pneumothorax.",
    "Lungs are clear.",
    "Heart size is normal.",
    "No evidence of pulmonary edema.",
    "Endotracheal tube in standard position.",
    "The effusion has resolved.",
    "No focal consolidation.",
    "No acute osseous abnormality.",
];

const HEADERS: &[&str] = &["FINDINGS:", "IMPRESSION:", "HISTORY:", "INDICATION:", "Clinical information:", ""];

fn section(pool: &'static [&'static str]) -> impl Strategy<Value = String> {
    (
        prop::sample::select(HEADERS),
        prop::collection::vec(prop::sample::select(pool), 0..4),
        any::<bool>(),
    )
        .prop_map(|(h, s, newline)| {
            let sep = if newline { "\n" } else { " " };
            let body = s.join(" ");
            if h.is_empty() {
                body
            } else {
                format!("{h} {body}{sep}")
            }
        })
}

fn report(pool: &'static [&'static str]) -> impl Strategy<Value = String> {
    prop::collection::vec(section(pool), 1..5).prop_map(|v| v.join(" "))
}

fn anatomical_synonyms() -> Vec<String> {
    ont()
        .concepts
        .iter()
        .filter(|c| c.category.is_anatomical())
        .flat_map(|c| c.synonyms.iter().cloned())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn labeling_is_deterministic(text in report(SENTENCES)) {
        let doc = segment_sections(&text, ont());
        let a = label_study_detailed(&doc, ont());
        let b = label_study_detailed(&segment_sections(&text, ont()), ont());
        prop_assert_eq!(a.label, b.label);
        prop_assert_eq!(a.mentions, b.mentions);
    }

    #[test]
    fn verdict_matches_the_normal_definition(text in report(SENTENCES)) {
        let doc = segment_sections(&text, ont());
        let out = label_study_detailed(&doc, ont());
        let mut last = std::collections::BTreeMap::new();
        for m in &out.mentions {
            last.insert(m.concept_id.clone(), m.polarity);
        }
        let category = |id: &str| ont().concept(id).unwrap().category;
        let anatomical = last.iter().any(|(id, p)| *p == Polarity::Positive && category(id).is_anatomical());
        let nondiagnostic = last.iter().any(|(id, p)| *p == Polarity::Positive && category(id) == Category::ExamQuality);
        prop_assert_eq!(out.label.nondiagnostic, nondiagnostic);
        let normal = !anatomical && !out.label.nondiagnostic && !out.label.device_misplaced;
        prop_assert_eq!(out.label.verdict == Verdict::Normal, normal);
    }

    #[test]
    fn an_unnegated_finding_makes_a_normal_report_abnormal(
        text in report(NORMAL_SENTENCES),
        syn in prop::sample::select(anatomical_synonyms()),
    ) {
        let doc = segment_sections(&text, ont());
        prop_assume!(label_study_detailed(&doc, ont()).label.verdict == Verdict::Normal);
        let extended = format!("{text} FINDINGS: {} is seen.", syn);
        let label = label_study_detailed(&segment_sections(&extended, ont()), ont()).label;
        prop_assert_eq!(label.verdict, Verdict::Abnormal, "{}", extended);
    }

    #[test]
    fn no_mention_comes_from_history(text in report(SENTENCES)) {
        let doc = segment_sections(&text, ont());
        let history: Vec<(usize, usize)> = doc
            .sections
            .iter()
            .filter(|s| s.kind == SectionKind::History)
            .flat_map(|s| s.sentences.iter().map(|x| (x.start, x.end)))
            .collect();
        for m in label_study_detailed(&doc, ont()).mentions {
            let s = &doc.body_sentences[m.sentence_index];
            prop_assert!(s.start <= m.span.0 && m.span.1 <= s.end);
            prop_assert!(!history.iter().any(|&(a, b)| a <= m.span.0 && m.span.1 <= b));
        }
    }

    #[test]
    fn earlier_mentions_do_not_change_the_final_polarity(text in report(SENTENCES)) {
        let doc = segment_sections(&text, ont());
        let out = label_study_detailed(&doc, ont());
        let concepts: std::collections::BTreeSet<&str> = out.mentions.iter().map(|m| m.concept_id.as_str()).collect();
        for concept in concepts {
            let own: Vec<_> = out.mentions.iter().filter(|m| m.concept_id == concept).collect();
            let keep = own.last().unwrap().sentence_index;
            let mut drop: Vec<usize> = own.iter().map(|m| m.sentence_index).filter(|&i| i != keep).collect();
            drop.dedup();
            let mut pruned = text.clone();
            for &i in drop.iter().rev() {
                let s = &doc.body_sentences[i];
                pruned.replace_range(s.start..s.end, "");
            }
            let after = label_study_detailed(&segment_sections(&pruned, ont()), ont());
            let before_pol = out.label.evidence[concept].polarity;
            let after_pol = after.label.evidence.get(concept).map(|e| e.polarity);
            prop_assert_eq!(Some(before_pol), after_pol, "{} in {:?} vs {:?}", concept, text, pruned);
        }
    }

    #[test]
    fn no_mention_is_inside_another(text in report(SENTENCES)) {
        let doc = segment_sections(&text, ont());
        let ms = label_study_detailed(&doc, ont()).mentions;
        for a in &ms {
            for b in &ms {
                if a != b && a.sentence_index == b.sentence_index {
                    let inside = b.span.0 <= a.span.0 && a.span.1 <= b.span.1;
                    prop_assert!(!inside, "{:?} within {:?}", a, b);
                }
            }
        }
    }

    #[test]
    fn sentences_reconstruct_the_text(text in "[A-Za-z .!?,;\n]{0,120}") {
        let sents = tokenize_sentences(&text);
        let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        let joined: String = sents.iter().map(|s| s.text.as_str()).collect();
        prop_assert_eq!(squash(&joined), squash(&text));
        let mut prev = 0;
        for s in &sents {
            prop_assert!(s.start >= prev && s.end > s.start);
            prop_assert_eq!(&text[s.start..s.end], s.text.as_str());
            prev = s.end;
        }
    }
}
