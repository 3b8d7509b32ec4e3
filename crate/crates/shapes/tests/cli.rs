use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use shapes_core::semantics::MeaningRep;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn shapes(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_shapes")).args(args).output().unwrap();
    Run { code: out.status.code().unwrap(), stdout: String::from_utf8(out.stdout).unwrap(), stderr: String::from_utf8(out.stderr).unwrap() }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// The kb blocks of the first reading printed by `analyze`.
fn first_reading(stdout: &str) -> MeaningRep {
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
    MeaningRep::parse(&text).unwrap()
}

#[test]
fn generates_bicycle_sentences() {
    for (file, want) in [
        ("bike-is-blue.mr", "The bicycle is blue.\n"),
        ("blue-bike-expensive.mr", "The blue bicycle is expensive.\n"),
        ("blue-bike-amused.mr", "The fact that the bicycle was blue amused me.\n"),
        ("sam-harry.mr", "Sam wants Harry to fix the engine.\n"),
    ] {
        let r = shapes(&["generate", p(&data(&format!("mr/{}", file)))]);
        assert_eq!((r.code, r.stdout.as_str()), (0, want), "{}: {}", file, r.stderr);
    }
}

#[test]
fn explain_lists_mismatched_shapes() {
    let r = shapes(&["generate", p(&data("mr/sam-self.mr")), "--explain"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("Sam wants to fix the engine.\n"));
    assert!(r.stdout.contains("rejected: other-agent-modality (attribution-equals-agent)"), "{}", r.stdout);
}

#[test]
fn tony_is_grounded_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let mem = dir.path().join("memory.kb");
    std::fs::copy(data("memory/tony.kb"), &mem).unwrap();
    let r = shapes(&["--memory", p(&mem), "analyze", "Tony was watching a tiger", "--explain"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = first_reading(&r.stdout);
    let link = |c: &str| m.frames.iter().find(|f| f.head.concept_name() == Some(c)).and_then(|f| f.value("episodic-mem")).unwrap().to_string();
    assert_eq!(link("HUMAN"), "HUMAN-#17");
    assert_eq!(link("TIGER"), "TIGER-#1");
    assert_eq!(link("VOLUNTARY-VISUAL-EVENT"), "VOLUNTARY-VISUAL-EVENT-#9");
    let stages: Vec<&str> = r.stdout.lines().filter_map(|l| l.strip_prefix('[')).map(|l| l.split(']').next().unwrap()).collect();
    let mut order = stages.clone();
    order.dedup();
    assert_eq!(order, ["parse", "match", "compose", "score", "precedent", "anchor"]);
    // Without --save the memory file is left alone.
    assert_eq!(std::fs::read_to_string(&mem).unwrap(), std::fs::read_to_string(data("memory/tony.kb")).unwrap());
}

#[test]
fn saved_precedent_is_ranked_first() {
    let dir = tempfile::tempdir().unwrap();
    let mem = dir.path().join("memory.kb");
    let r = shapes(&["--memory", p(&mem), "analyze", "I need a cup of coffee.", "--save"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(!r.stdout.contains("(precedent)"));
    let again = shapes(&["--memory", p(&mem), "analyze", "I need a cup of coffee."]);
    assert!(again.stdout.contains("; reading 1 (precedent)"), "{}", again.stdout);
    assert_eq!(first_reading(&again.stdout).head.concept_name(), first_reading(&r.stdout).head.concept_name());
}

#[test]
fn unknown_words_fail_with_a_diagnostic() {
    let r = shapes(&["analyze", "zorch the blorp"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown word 'zorch'"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn unrealizable_mr_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("zorch.mr");
    std::fs::write(&f, "instance ZORCH-1\n  DISCOURSE-STATUS value new\n").unwrap();
    let r = shapes(&["generate", p(&f)]);
    assert_eq!(r.code, 1, "{}", r.stderr);
}

#[test]
fn usage_and_load_errors_exit_2() {
    assert_eq!(shapes(&["bogus"]).code, 2);
    assert_eq!(shapes(&[]).code, 2);
    assert_eq!(shapes(&["--kb", "/no/such/dir", "validate"]).code, 2);
    assert_eq!(shapes(&["consolidate"]).code, 2);
    assert_eq!(shapes(&["generate", "/no/such/file.mr"]).code, 2);
    assert_eq!(shapes(&["learn-script", p(&data("scenarios/gas-tank.kb")), "--save"]).code, 2);
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ontology.kb"), "concept AA\n  IS-A value NOPE\n").unwrap();
    let r = shapes(&["--kb", p(dir.path()), "validate"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("ontology.kb"), "{}", r.stderr);
}

#[test]
fn learn_script_prints_script_and_modules() {
    let r = shapes(&["learn-script", p(&data("scenarios/gas-tank.kb"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("script FILL-GAS-TANK\n  IS-A value MACHINE-MAINTENANCE\n"));
    assert!(r.stdout.contains("HAS-EVENT-AS-PART value REMOVE-#1 INSERT-#1 PUMP-LIQUID-#1 REMOVE-#2 RETURN-OBJECT-#1 CLOSE-CONTAINER-#1\n"));
    assert!(r.stdout.contains("; learned: yes\n"));
    assert!(r.stdout.contains("; module clarify*: skipped (n/a)\n"));
    assert!(r.stdout.contains("; module persist: done (easy)\n"));
}

#[test]
fn unanswered_parent_question_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("silent.kb");
    let text = std::fs::read_to_string(data("scenarios/grind-beans.kb")).unwrap().replace("  answer value \"FOOD-PREPARATION\"\n", "");
    std::fs::write(&f, text).unwrap();
    let r = shapes(&["learn-script", p(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("; asked: What kind of event is grinding beans?\n; answer: (none)\n"));
    assert!(r.stdout.contains("; learned: no\n; open lacuna: missing-parent at GRIND-BEANS\n"), "{}", r.stdout);
}

#[test]
fn saved_scripts_can_be_planned() {
    let dir = tempfile::tempdir().unwrap();
    let kb = p(dir.path());
    assert_eq!(shapes(&["--kb", kb, "learn-script", p(&data("scenarios/grind-beans.kb")), "--save"]).code, 0);
    let r = shapes(&["--kb", kb, "plan", "GRIND-BEANS"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout, "; plan for GRIND-BEANS (default traversal)\n1. OPEN-CONTAINER-#1\n2. INSERT-#1\n3. PRESS-#1\n");
    assert_eq!(shapes(&["--kb", kb, "validate"]).code, 0);
    assert_eq!(shapes(&["--kb", kb, "plan", "MAKE-COFFEE"]).code, 1);
}

#[test]
fn plans_follow_collaborators() {
    let kb = data("kb");
    let mem = data("memory/collaborators.kb");
    let plan = |who: &str, fact: &[&str]| {
        let mut args = vec!["--kb", p(&kb), "--memory", p(&mem), "plan", "FILL-GAS-TANK", "--for", who];
        args.extend(fact);
        shapes(&args)
    };
    let phil = plan("Phil", &[]);
    assert!(phil.stdout.starts_with("; plan for FILL-GAS-TANK (taught path)\n"), "{}", phil.stderr);
    assert!(phil.stdout.contains("5. CLOSE-CONTAINER-#1\n6. RETURN-OBJECT-#1\n"));
    assert!(plan("HUMAN-#6", &["--fact", "pump-open"]).stdout.starts_with("; plan for FILL-GAS-TANK (last plan that worked)\n"));
    assert!(plan("Hal", &[]).stdout.starts_with("; plan for FILL-GAS-TANK (default traversal)\n"));
    assert_eq!(plan("Nobody", &[]).code, 1);
}

#[test]
fn consolidate_finds_lou_habit() {
    let r = shapes(&["--memory", p(&data("memory/lou-tools.kb")), "consolidate"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("; 1 habit(s), at least 3 events each\n"));
    assert!(r.stdout.contains("concept RETURN-OBJECT\n  AGENT value HUMAN-#5\n  THEME sem TOOL\n"));
    let none = shapes(&["--memory", p(&data("memory/lou-tools.kb")), "consolidate", "--min-count", "4"]);
    assert!(none.stdout.starts_with("; 0 habit(s)"));
}

#[test]
fn bundled_knowledge_validates() {
    let r = shapes(&["validate"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("0 error(s)"));
}

#[test]
fn json_trace_is_one_record_per_line() {
    let r = shapes(&["analyze", "John admires his uncle.", "--json-trace"]);
    assert_eq!(r.code, 0);
    let records: Vec<Value> = r.stdout.lines().filter(|l| l.starts_with('{')).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.len() >= 4);
    for rec in &records {
        for key in ["stage", "input", "decision", "rejected", "cited"] {
            assert!(rec.get(key).is_some(), "{} missing in {}", key, rec);
        }
    }
    assert_eq!(records[0]["stage"], "parse");
}
