use std::collections::BTreeMap;

use proptest::prelude::*;
use shapes_core::bundled;
use shapes_core::ontology::VerdictKind;
use shapes_core::semantics::{score_binding, Weights};

fn concepts() -> Vec<String> {
    let ont = bundled::ontology();
    let mut v: Vec<String> = ont.names().map(|s| s.to_string()).collect();
    v.sort();
    v
}

proptest! {
    #[test]
    fn aggregate_is_weighted_sum_and_monotone_in_weights(
        sense_ix in 0usize..400,
        picks in proptest::collection::vec(0usize..1000, 4),
        bump in 0usize..4,
    ) {
        let lex = bundled::lexicon();
        let ont = bundled::ontology();
        let names = concepts();
        let senses: Vec<_> = lex.senses().collect();
        let sense = senses[sense_ix % senses.len()];
        let vars: BTreeMap<u32, String> = picks.iter().enumerate().map(|(k, p)| (k as u32, names[p % names.len()].clone())).collect();
        let w = Weights::default();
        let s = score_binding(sense, &vars, &ont, &w);
        let sum: f64 = s.verdicts.iter().filter_map(|v| v.verdict).filter_map(|k| w.weight(k)).sum();
        prop_assert!((s.aggregate - sum).abs() < 1e-9);
        if s.verdicts.iter().any(|v| v.verdict == Some(VerdictKind::Violation)) {
            prop_assert!(s.rejected());
        }
        let mut up = w;
        match bump {
            0 => up.value += 1.0,
            1 => up.default += 1.0,
            2 => up.sem += 1.0,
            _ => up.relaxable += 1.0,
        }
        prop_assert!(score_binding(sense, &vars, &ont, &up).aggregate >= s.aggregate);
    }
}
