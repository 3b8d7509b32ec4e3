//! End-to-end acceptance: one pass/fail line per criterion, then a single
//! assertion over all of them so every line is printed even on failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use shapes_core::bundled;
use shapes_core::episodic::EpisodicStore;
use shapes_core::generator::{wrapper_fit, ShapeRegistry};
use shapes_core::kr::Filler;
use shapes_core::learner::{assemble_script, detect_learnable, learn, LacunaKind, OrderCertainty, Scenario, ScriptedTeacher};
use shapes_core::lexicon::Lexicon;
use shapes_core::ontology::{ConceptStore, VerdictKind};
use shapes_core::ontosyntax::{brute_force_candidates, enumerate_candidates};
use shapes_core::semantics::{analyze, analyze_sentence, AnalyzeOptions, MeaningRep};
use shapes_core::syntax::parse;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn(&Kb) -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

struct Kb {
    lex: Lexicon,
    ont: ConceptStore,
    reg: ShapeRegistry,
}

fn kb() -> Kb {
    Kb { lex: bundled::lexicon(), ont: bundled::ontology(), reg: ShapeRegistry::bundled() }
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap()
}

fn top(k: &Kb, s: &str) -> Result<MeaningRep, String> {
    analyze_sentence(s, &k.lex, &k.ont, &AnalyzeOptions::default()).map(|a| a.top().clone()).map_err(|e| format!("{}: {}", s, e))
}

fn frame_concept<'a>(m: &'a MeaningRep, c: &str) -> Result<&'a shapes_core::kr::Frame, String> {
    m.frames.iter().find(|f| f.head.concept_name() == Some(c)).ok_or_else(|| format!("no {} frame", c))
}

/// (exit code, stdout, stderr)
fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shapes")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn first_reading(stdout: &str) -> Result<MeaningRep, String> {
    let text: String = stdout
        .split("; reading 2")
        .next()
        .unwrap()
        .split("\n; trace")
        .next()
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with(';'))
        .map(|l| format!("{}\n", l))
        .collect();
    MeaningRep::parse(&text).map_err(|e| e.to_string())
}

fn golden_mr(_: &Kb) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mem = dir.path().join("memory.kb");
    std::fs::copy(data("memory/tony.kb"), &mem).unwrap();
    let (code, out, err) = cli(&["--memory", mem.to_str().unwrap(), "analyze", "Tony was watching a tiger"]);
    check!(code == 0, "exit {}: {}", code, err);
    let got = first_reading(&out)?;
    let want = MeaningRep::parse(
        "instance VOLUNTARY-VISUAL-EVENT-1\n  AGENT value HUMAN-1\n  THEME value TIGER-1\n  TIME value < find-anchor-time\n  ASPECT value progressive\n  episodic-mem value VOLUNTARY-VISUAL-EVENT-#9\n\n\
         instance HUMAN-1\n  HAS-NAME value Tony\n  episodic-mem value HUMAN-#17\n\n\
         instance TIGER-1\n  DISCOURSE-STATUS value new\n  episodic-mem value TIGER-#1\n",
    )
    .unwrap();
    check!(got.equivalent(&want), "MR differs:\n{}", got.serialize());
    for (c, link) in [("HUMAN", "HUMAN-#17"), ("TIGER", "TIGER-#1"), ("VOLUNTARY-VISUAL-EVENT", "VOLUNTARY-VISUAL-EVENT-#9")] {
        let got = frame_concept(&got, c)?.value("episodic-mem").map(|f| f.to_string());
        check!(got.as_deref() == Some(link), "{} links to {:?}", c, got);
    }
    Ok(())
}

fn paraphrase_invariance(k: &Kb) -> Outcome {
    let ms = ["John admires his uncle.", "John looks up to his uncle.", "John puts his uncle on a pedestal."].map(|s| top(k, s));
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (ms[i].as_ref()?, ms[j].as_ref()?);
            check!(a.equivalent(b), "readings {} and {} differ:\n{}\n{}", i + 1, j + 1, a.serialize(), b.serialize());
        }
    }
    Ok(())
}

fn modality_composition(k: &Kb) -> Outcome {
    let m = top(k, "Mary needed to feed Spot before going out to dinner.")?;
    let modal = frame_concept(&m, "MODALITY")?;
    let feed = frame_concept(&m, "FEED")?;
    let eat = frame_concept(&m, "EAT-AT-RESTAURANT")?;
    check!(modal.value("TYPE") == Some(&Filler::literal("obligative")), "TYPE {:?}", modal.value("TYPE"));
    check!(modal.value("VALUE").map(|v| v.to_string()).as_deref() == Some("1"), "VALUE {:?}", modal.value("VALUE"));
    check!(modal.value("SCOPE") == Some(&feed.head), "SCOPE is not FEED");
    let who = modal.value("ATTRIBUTED-TO");
    check!(who.is_some() && feed.value("AGENT") == who && eat.value("AGENT") == who, "agents are not one instance");
    Ok(())
}

fn stored_vs_derived(k: &Kb) -> Outcome {
    let q = "What was Mary given by the workers?";
    let stored = top(k, q)?;
    check!(stored.senses.iter().any(|s| s == "what-interrogpro7"), "stored construction not used");
    let derived = analyze_sentence(q, &k.lex.without("what-interrogpro7"), &k.ont, &AnalyzeOptions::default()).map_err(|e| e.to_string())?;
    check!(stored.equivalent(derived.top()), "stored and derived differ");
    let active = top(k, "What did the workers give Mary?")?;
    check!(active.equivalent(&stored), "active paraphrase differs");
    Ok(())
}

fn facet_grading(k: &Kb) -> Outcome {
    for (c, want) in [
        ("SURGEON", VerdictKind::MatchesDefault),
        ("PHYSICIAN", VerdictKind::MatchesSem),
        ("ROBOT", VerdictKind::MatchesRelaxable),
        ("MEDICAL-BUILDING", VerdictKind::Violation),
    ] {
        let got = k.ont.check_filler("SURGERY", "AGENT", &Filler::concept(c)).map_err(|e| e.to_string())?.kind;
        check!(got == want, "{}: {:?}", c, got);
    }
    Ok(())
}

fn generation_goldens(k: &Kb) -> Outcome {
    for (file, want) in [
        ("bike-is-blue.mr", "The bicycle is blue.\n"),
        ("blue-bike-expensive.mr", "The blue bicycle is expensive.\n"),
        ("blue-bike-amused.mr", "The fact that the bicycle was blue amused me.\n"),
    ] {
        let (code, out, err) = cli(&["generate", data(&format!("mr/{}", file)).to_str().unwrap()]);
        check!(code == 0 && out == want, "{}: exit {} {:?} {}", file, code, out, err);
    }
    let same = MeaningRep::parse(&read("mr/sam-self.mr")).unwrap();
    let shape = k.reg.get("other-agent-modality").ok_or("no volitive shape")?;
    match wrapper_fit(shape, &same, &k.ont) {
        Err(m) => check!(m.reason == "attribution-equals-agent", "reason {}", m.reason),
        Ok(_) => return Err("volitive shape accepted ATTRIBUTED-TO = AGENT".into()),
    }
    Ok(())
}

fn corpus() -> Vec<&'static str> {
    bundled::CORPUS.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn round_trip(k: &Kb) -> Outcome {
    let lines = corpus();
    check!(lines.len() >= 20, "corpus has {} sentences", lines.len());
    for s in lines {
        let a = top(k, s)?;
        let g = shapes_core::generator::generate(&a, &k.reg, &k.lex, &k.ont).map_err(|e| format!("{}: {}", s, e))?;
        let b = top(k, &g.sentence)?;
        check!(a.equivalent(&b), "{} -> {}", s, g.sentence);
    }
    Ok(())
}

fn matcher_oracle(k: &Kb) -> Outcome {
    for s in corpus() {
        for t in parse(s, &k.lex).map_err(|e| format!("{}: {}", s, e))? {
            let lat = enumerate_candidates(&t, &k.lex);
            let fast: BTreeSet<_> = lat.all().map(|b| (b.anchor, b.sense.clone(), b.chain.clone(), b.vars.clone(), b.controlled.clone())).collect();
            check!(fast == brute_force_candidates(&t, &k.lex), "{}: candidate sets differ", s);
        }
    }
    Ok(())
}

fn coreference(k: &Kb) -> Outcome {
    let same = |m: &MeaningRep| -> Result<bool, String> { Ok(frame_concept(m, "GRAB")?.value("THEME") == frame_concept(m, "EAT")?.value("THEME")) };
    let full = top(k, "Patty grabbed the cupcake and scarfed it down.")?;
    let pron = top(k, "Patty grabbed it and scarfed it down.")?;
    check!(same(&full)? && same(&pron)?, "objects not merged");
    let plural = top(k, "Patty grabbed the cupcakes and scarfed it down.")?;
    check!(!same(&plural)? && plural.coreference.is_empty(), "number mismatch merged");
    let (c1, c2) = (full.coreference.first().ok_or("no link")?.confidence, pron.coreference.first().ok_or("no link")?.confidence);
    check!(c2 > c1, "pronoun-first confidence {} not above {}", c2, c1);
    Ok(())
}

fn script_learning(k: &Kb) -> Outcome {
    let run = |name: &str, answers: Option<Vec<String>>| {
        let sc = Scenario::parse(&read(&format!("scenarios/{}.kb", name))).unwrap();
        let (lex, ont) = sc.knowledge(&k.lex, &k.ont).unwrap();
        let mut t = answers.map(ScriptedTeacher::new).unwrap_or_else(|| sc.teacher());
        learn(&sc.text, &lex, &ont, &k.reg, &mut t, &sc.options()).map_err(|e| e.to_string())
    };
    let gas = run("gas-tank", None)?;
    let s = gas.script.as_ref().ok_or("no script")?;
    check!(gas.learned && s.name == "FILL-GAS-TANK", "gas tank not learned as FILL-GAS-TANK");
    let steps: Vec<&str> = s.steps.iter().map(|x| x.concept_name().unwrap()).collect();
    check!(steps == ["REMOVE", "INSERT", "PUMP-LIQUID", "REMOVE", "RETURN-OBJECT", "CLOSE-CONTAINER"], "steps {:?}", steps);
    check!(s.order.iter().all(|o| *o == OrderCertainty::Firm), "order {:?}", s.order);
    for c in ["NOZZLE", "GAS-TANK"] {
        let n = s.frames.iter().filter(|f| f.head.concept_name() == Some(c)).count();
        check!(n == 1, "{} {} participants", n, c);
    }
    let range = |x: &Option<Filler>| x.as_ref().and_then(|x| s.frame(x)).and_then(|f| f.value("RANGE")).and_then(|r| r.as_literal()).map(str::to_string);
    check!(range(&s.caused_by).as_deref() == Some("low"), "CAUSED-BY {:?}", range(&s.caused_by));
    check!(range(&s.effect).as_deref() == Some("full"), "EFFECT {:?}", range(&s.effect));

    let sc = Scenario::parse(&read("scenarios/kettle.kb")).unwrap();
    let mrs: Vec<MeaningRep> = analyze(&sc.text, &k.lex, &k.ont, &AnalyzeOptions::default()).map_err(|e| e.to_string())?.iter().map(|a| a.top().clone()).collect();
    let (_, lacunae, _) = assemble_script(&detect_learnable(&mrs).ok_or("kettle: nothing to learn")?, &mrs, &k.ont).map_err(|e| e.to_string())?;
    let kinds: Vec<LacunaKind> = lacunae.iter().map(|l| l.kind).collect();
    check!(kinds == [LacunaKind::AmbiguousOrder], "kettle lacunae {:?}", kinds);
    let kettle = run("kettle", None)?;
    check!(kettle.trace.questions.len() == 1, "kettle asked {:?}", kettle.trace.questions);
    check!(kettle.trace.questions[0].0.contains("or in either order"), "question {}", kettle.trace.questions[0].0);
    let ks = kettle.script.as_ref().ok_or("no kettle script")?;
    check!(ks.order.first() == Some(&OrderCertainty::Unordered), "kettle order {:?}", ks.order);

    let grind = run("grind-beans", None)?;
    check!(grind.trace.questions.first().map(|q| q.0.as_str()) == Some("What kind of event is grinding beans?"), "grind questions {:?}", grind.trace.questions);
    check!(grind.learned, "grind not learned after the answer");
    let silent = run("grind-beans", Some(Vec::new()))?;
    check!(!silent.learned && silent.open_lacunae.iter().any(|l| l.kind == LacunaKind::MissingParent), "learned without a parent");
    Ok(())
}

fn habit_consolidation(k: &Kb) -> Outcome {
    let lou = read("memory/lou-tools.kb");
    let habits = |text: &str| EpisodicStore::parse(text).map(|s| s.identify_habits(&k.ont, 3)).map_err(|e| e.to_string());
    let hs = habits(&lou)?;
    check!(hs.len() == 1 && hs[0].theme == "TOOL", "{:?}", hs);
    let two = lou.split("instance USE-#3").next().unwrap();
    check!(habits(two)?.is_empty(), "two instances made a habit");
    let mixed = format!("{}\ninstance HUMAN-#6\n  HAS-NAME value Hal\n\ninstance HUMAN-#7\n  HAS-NAME value Phil\n", lou)
        .replace("RETURN-OBJECT-#2\n  AGENT value HUMAN-#5", "RETURN-OBJECT-#2\n  AGENT value HUMAN-#6")
        .replace("RETURN-OBJECT-#3\n  AGENT value HUMAN-#5", "RETURN-OBJECT-#3\n  AGENT value HUMAN-#7");
    check!(habits(&mixed)?.is_empty(), "mixed agents made a habit");
    Ok(())
}

fn precedent_reuse(k: &Kb) -> Outcome {
    let s = "I need a cup of coffee.";
    let plain = analyze_sentence(s, &k.lex, &k.ont, &AnalyzeOptions::default()).map_err(|e| e.to_string())?;
    check!(plain.readings.len() >= 2, "only one reading");
    let chosen = plain.readings[1].clone();
    let mut memory = EpisodicStore::new();
    memory.record_precedent(&plain.precedent_key(), &chosen);
    let opts = AnalyzeOptions { precedents: Some(&memory), ..AnalyzeOptions::default() };
    let again = analyze_sentence(s, &k.lex, &k.ont, &opts).map_err(|e| e.to_string())?;
    check!(again.top().precedent && again.top().equivalent(&chosen), "recorded reading not first");
    memory.clear_precedents();
    let opts = AnalyzeOptions { precedents: Some(&memory), ..AnalyzeOptions::default() };
    let cleared = analyze_sentence(s, &k.lex, &k.ont, &opts).map_err(|e| e.to_string())?;
    check!(!cleared.top().precedent && cleared.top().equivalent(plain.top()), "score ranking not restored");
    Ok(())
}

fn determinism(_: &Kb) -> Outcome {
    let d = |rel: &str| data(rel).to_str().unwrap().to_string();
    let invocations: Vec<Vec<String>> = vec![
        vec!["analyze".into(), "Tony was watching a tiger".into(), "--explain".into()],
        vec!["analyze".into(), "I need a cup of coffee.".into(), "--explain".into(), "--json-trace".into()],
        vec!["analyze".into(), "zorch the blorp".into()],
        vec!["generate".into(), d("mr/blue-bike-amused.mr"), "--explain".into()],
        vec!["generate".into(), d("mr/sam-self.mr"), "--json-trace".into()],
        vec!["learn-script".into(), d("scenarios/gas-tank.kb"), "--explain".into()],
        vec!["learn-script".into(), d("scenarios/kettle.kb"), "--json-trace".into()],
        vec!["--memory".into(), d("memory/lou-tools.kb"), "consolidate".into(), "--explain".into()],
        vec!["--kb".into(), d("kb"), "--memory".into(), d("memory/collaborators.kb"), "plan".into(), "FILL-GAS-TANK".into(), "--for".into(), "Phil".into(), "--explain".into()],
        vec!["validate".into(), "--explain".into()],
    ];
    for args in &invocations {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, b) = (cli(&args), cli(&args));
        check!(a == b, "{:?} differs between runs", args);
    }
    // The memory-backed analysis, each run on a fresh copy.
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mem = dir.path().join("memory.kb");
        std::fs::copy(data("memory/tony.kb"), &mem).unwrap();
        let out = cli(&["--memory", mem.to_str().unwrap(), "analyze", "Tony was watching a tiger", "--save", "--explain"]);
        (out, std::fs::read_to_string(&mem).unwrap())
    };
    check!(run() == run(), "memory-backed analysis differs between runs");
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let k = kb();
    let criteria: [Criterion; 13] = [
        ("golden MR with episodic grounding", golden_mr),
        ("paraphrase invariance", paraphrase_invariance),
        ("composition with modality", modality_composition),
        ("stored vs derived construction", stored_vs_derived),
        ("facet grading", facet_grading),
        ("generation goldens and volitive mismatch", generation_goldens),
        ("corpus round trip", round_trip),
        ("matcher oracle", matcher_oracle),
        ("coreference", coreference),
        ("script learning", script_learning),
        ("habit consolidation", habit_consolidation),
        ("precedent reuse", precedent_reuse),
        ("CLI determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f(&k) {
            Ok(()) => println!("criterion {:2} PASS  {}", i + 1, name),
            Err(e) => {
                println!("criterion {:2} FAIL  {}: {}", i + 1, name, e);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
