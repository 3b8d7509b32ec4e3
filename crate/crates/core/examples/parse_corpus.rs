fn main() {
    let lex = shapes_core::bundled::lexicon();
    let text = std::fs::read_to_string(std::env::args().nth(1).unwrap()).unwrap();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match shapes_core::syntax::parse(line, &lex) {
            Ok(ts) => {
                println!("{} -> {} trees", line, ts.len());
                if std::env::var("V").is_ok() {
                    for t in &ts {
                        print!("{}", t.serialize());
                        let lat = shapes_core::ontosyntax::enumerate_candidates(t, &lex);
                        for b in lat.all() {
                            println!("   {} {:?} anchor={} frame={} vars={:?} ctl={:?} abs={:?}", b.sense, b.chain, b.anchor, b.frame_node, b.vars, b.controlled, b.absorbed);
                        }
                    }
                }
            }
            Err(e) => println!("{} -> ERR {}", line, e),
        }
    }
}
