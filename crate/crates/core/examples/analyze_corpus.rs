use shapes_core::semantics::{analyze_sentence, AnalyzeOptions};

fn main() {
    let lex = shapes_core::bundled::lexicon();
    let ont = shapes_core::bundled::ontology();
    let text = std::fs::read_to_string(std::env::args().nth(1).unwrap()).unwrap();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match analyze_sentence(line, &lex, &ont, &AnalyzeOptions::default()) {
            Ok(a) => {
                println!("== {} ({} readings) {:?} score {}", line, a.readings.len(), a.top().senses, a.top().score.aggregate);
                print!("{}", a.top().serialize());
            }
            Err(e) => println!("== {} ERR {}", line, e),
        }
    }
}
