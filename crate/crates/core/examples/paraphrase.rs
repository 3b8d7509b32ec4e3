use shapes_core::generator::{generate, ShapeRegistry};
use shapes_core::semantics::{analyze_sentence, AnalyzeOptions};

fn main() {
    let lex = shapes_core::bundled::lexicon();
    let ont = shapes_core::bundled::ontology();
    let reg = ShapeRegistry::bundled();
    for line in shapes_core::bundled::CORPUS.lines().filter(|l| !l.trim().is_empty()) {
        let a = analyze_sentence(line, &lex, &ont, &AnalyzeOptions::default()).unwrap();
        match generate(a.top(), &reg, &lex, &ont) {
            Ok(g) => println!("{:<50} -> {} [{}]", line, g.sentence, g.shape),
            Err(e) => println!("{:<50} !! {}", line, e),
        }
    }
}
