use proptest::prelude::*;
use shapes_core::bundled;
use shapes_core::generator::{describe_back, generate, wrapper_fit, Procedure, ShapeRegistry};
use shapes_core::semantics::{analyze_sentence, AnalyzeOptions, MeaningRep};

fn data(name: &str) -> MeaningRep {
    let path = format!("{}/../../data/mr/{}", env!("CARGO_MANIFEST_DIR"), name);
    MeaningRep::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn top(s: &str) -> MeaningRep {
    analyze_sentence(s, &kb().0, &kb().1, &AnalyzeOptions::default()).unwrap().top().clone()
}

fn kb() -> &'static (shapes_core::lexicon::Lexicon, shapes_core::ontology::ConceptStore) {
    static KB: std::sync::OnceLock<(shapes_core::lexicon::Lexicon, shapes_core::ontology::ConceptStore)> = std::sync::OnceLock::new();
    KB.get_or_init(|| (bundled::lexicon(), bundled::ontology()))
}

fn say(mr: &MeaningRep, reg: &ShapeRegistry) -> String {
    generate(mr, reg, &kb().0, &kb().1).map(|g| g.sentence).unwrap_or_else(|e| format!("!! {}", e))
}

#[test]
fn bicycle_goldens() {
    let reg = ShapeRegistry::bundled();
    for (file, sentence, shape) in [
        ("bike-is-blue.mr", "The bicycle is blue.", "attribute-proposition"),
        ("blue-bike-expensive.mr", "The blue bicycle is expensive.", "embedded-attribute"),
        ("blue-bike-amused.mr", "The fact that the bicycle was blue amused me.", "attribute-as-filler"),
    ] {
        let g = generate(&data(file), &reg, &bundled::lexicon(), &bundled::ontology()).unwrap();
        assert_eq!(g.sentence, sentence);
        assert_eq!(g.shape, shape);
    }
}

#[test]
fn sam_wants_harry() {
    let reg = ShapeRegistry::bundled();
    let mr = data("sam-harry.mr");
    assert!(wrapper_fit(reg.get("other-agent-modality").unwrap(), &mr, &bundled::ontology()).is_ok());
    assert_eq!(say(&mr, &reg), "Sam wants Harry to fix the engine.");
}

#[test]
fn trace_lists_mismatches_of_more_specific_shapes() {
    let g = generate(&data("bike-is-blue.mr"), &ShapeRegistry::bundled(), &bundled::lexicon(), &bundled::ontology()).unwrap();
    let ev = &g.trace[0];
    assert_eq!(ev.stage, "generate");
    assert!(ev.rejected.iter().any(|(s, _)| s == "other-agent-modality"));
    assert!(ev.cited.iter().any(|c| c == "blue-adj1"));
}

#[test]
fn describe_back_enumerates_steps() {
    let (lex, ont, reg) = (bundled::lexicon(), bundled::ontology(), ShapeRegistry::bundled());
    let goal = top("Here's how you fill a gas tank.");
    let steps: Vec<MeaningRep> = ["Open the gas tank.", "Insert the nozzle into the gas tank.", "Close the gas tank."].iter().map(|s| top(s)).collect();
    let text = describe_back(&Procedure { goal: Some(&goal), background: &[], steps: &steps, unordered_after: &[], conjoined_after: &[] }, &reg, &lex, &ont).unwrap();
    assert_eq!(text, "Here's how you fill a gas tank. First, open the gas tank. Then insert the nozzle into the gas tank. Finally, close the gas tank.");
}

#[test]
fn describe_back_single_step() {
    let (lex, ont, reg) = (bundled::lexicon(), bundled::ontology(), ShapeRegistry::bundled());
    let goal = top("Here's how you fill a gas tank.");
    let steps = [top("Open the gas tank.")];
    let text = describe_back(&Procedure { goal: Some(&goal), background: &[], steps: &steps, unordered_after: &[], conjoined_after: &[] }, &reg, &lex, &ont).unwrap();
    assert_eq!(text, "Here's how you fill a gas tank as follows: open the gas tank.");
}

#[test]
fn describe_back_unordered_pair() {
    let (lex, ont, reg) = (bundled::lexicon(), bundled::ontology(), ShapeRegistry::bundled());
    let steps: Vec<MeaningRep> = ["Open the kettle.", "Pour the water.", "Close the kettle."].iter().map(|s| top(s)).collect();
    let text = describe_back(&Procedure { goal: None, background: &[], steps: &steps, unordered_after: &[true, false], conjoined_after: &[] }, &reg, &lex, &ont).unwrap();
    assert_eq!(text, "First, open the kettle and pour the water in either order. Finally, close the kettle.");
    // The joined sentence reads back as the same pair of steps.
    let first = text.split(". ").next().unwrap().to_string() + ".";
    let back = top(&first);
    assert!(back.frames.iter().any(|f| f.value("ORDER-CERTAINTY").is_some()));
}

fn corpus_mrs() -> &'static [MeaningRep] {
    static MRS: std::sync::OnceLock<Vec<MeaningRep>> = std::sync::OnceLock::new();
    MRS.get_or_init(|| bundled::CORPUS.lines().filter(|l| !l.trim().is_empty()).map(top).chain(["bike-is-blue.mr", "blue-bike-expensive.mr", "blue-bike-amused.mr", "sam-harry.mr"].map(data)).collect())
}

#[test]
fn generation_is_deterministic() {
    let reg = ShapeRegistry::bundled();
    for mr in corpus_mrs() {
        assert_eq!(say(mr, &reg), say(mr, &ShapeRegistry::bundled()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Shapes with the same specificity never both fit one of the test MRs,
    // so any registration order yields the same sentences.
    #[test]
    fn registration_order_is_irrelevant(perm in Just(ShapeRegistry::bundled().shapes().to_vec()).prop_shuffle()) {
        let base = ShapeRegistry::bundled();
        let shuffled = ShapeRegistry::from_shapes(perm);
        for mr in corpus_mrs() {
            prop_assert_eq!(say(mr, &base), say(mr, &shuffled));
        }
    }
}
