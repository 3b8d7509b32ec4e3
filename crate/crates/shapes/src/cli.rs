//! Command definitions and their execution. Commands render into a string
//! so the binary and the tests share one code path.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use shapes_core::episodic::{EpisodicStore, PlanSource};
use shapes_core::generator::generate;
use shapes_core::kr::{parse_atom, serialize_kb, Block, BlockKind, Filler, InstanceRef};
use shapes_core::learner::{learn, Scenario};
use shapes_core::lexicon::validate_sense;
use shapes_core::semantics::{analyze, AnalyzeOptions, MeaningRep, PrecedentLookup};
use shapes_core::trace::{render, TraceEvent};

use crate::kb::{self, Knowledge};
use crate::{json, CliError};

#[derive(Debug, Parser)]
#[command(name = "shapes", version, about = "Analyze, generate and learn over frame-based meaning representations")]
pub struct Cli {
    /// Directory of knowledge-base files to use instead of the bundled ones.
    #[arg(long, global = true, value_name = "DIR")]
    pub kb: Option<PathBuf>,
    /// Episodic memory file (kb format); missing means empty.
    #[arg(long, global = true, value_name = "FILE")]
    pub memory: Option<PathBuf>,
    /// Print the under-the-hood trace after the result.
    #[arg(long, global = true)]
    pub explain: bool,
    /// Print the trace as line-delimited JSON records.
    #[arg(long, global = true)]
    pub json_trace: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the ranked meaning representations of each sentence.
    Analyze {
        text: String,
        /// Anchor the top readings and record them as precedents in --memory.
        #[arg(long)]
        save: bool,
    },
    /// Realize the meaning representation in an `instance` block file.
    Generate { mr_file: PathBuf },
    /// Run a teaching scenario and print the learned script.
    LearnScript {
        scenario: PathBuf,
        /// Append the learned script to learned.kb in the --kb directory.
        #[arg(long)]
        save: bool,
    },
    /// Find habits among the events in --memory.
    Consolidate {
        #[arg(long, default_value_t = 3)]
        min_count: usize,
    },
    /// Plan a traversal of a stored script.
    Plan {
        script: String,
        /// Human (anchor like HUMAN-#5, or a name) whose taught path to follow.
        #[arg(long = "for", value_name = "HUMAN")]
        human: Option<String>,
        /// A fact holding in the current context; repeatable.
        #[arg(long = "fact", value_name = "FACT")]
        facts: Vec<String>,
    },
    /// Lint every knowledge base.
    Validate,
}

pub struct Output {
    pub text: String,
    pub trace: Vec<TraceEvent>,
}

impl Cli {
    /// Result text followed by the trace in the requested renderings.
    pub fn execute(&self) -> Result<String, CliError> {
        let out = self.run()?;
        let mut text = out.text;
        if self.explain {
            text.push_str("\n; trace\n");
            text.push_str(&render(&out.trace));
        }
        if self.json_trace {
            text.push_str(&json::lines(&out.trace));
        }
        Ok(text)
    }

    fn memory(&self) -> Result<Option<EpisodicStore>, CliError> {
        self.memory.as_deref().map(kb::load_memory).transpose()
    }

    pub fn run(&self) -> Result<Output, CliError> {
        let k = kb::load(self.kb.as_deref())?;
        match &self.command {
            Command::Analyze { text, save } => self.analyze(&k, text, *save),
            Command::Generate { mr_file } => generate_file(&k, mr_file),
            Command::LearnScript { scenario, save } => self.learn_script(&k, scenario, *save),
            Command::Consolidate { min_count } => self.consolidate(&k, *min_count),
            Command::Plan { script, human, facts } => self.plan(&k, script, human.as_deref(), facts),
            Command::Validate => Ok(validate(&k)),
        }
    }

    fn analyze(&self, k: &Knowledge, text: &str, save: bool) -> Result<Output, CliError> {
        let mut memory = self.memory()?;
        if save && memory.is_none() {
            return Err(CliError::Usage("--save needs --memory".into()));
        }
        let analyses = {
            let opts = AnalyzeOptions { precedents: memory.as_ref().map(|m| m as &dyn PrecedentLookup), ..AnalyzeOptions::default() };
            analyze(text, &k.lexicon, &k.ontology, &opts).map_err(|e| CliError::Failed(e.to_string()))?
        };
        let mut out = String::new();
        let mut trace = Vec::new();
        for a in &analyses {
            out.push_str(&format!("; {}\n", a.sentence));
            trace.extend(a.trace.iter().cloned());
            for (i, r) in a.readings.iter().enumerate() {
                let mut r = r.clone();
                if i == 0 {
                    if let Some(m) = memory.as_mut() {
                        let (anchored, ev) = m.anchor_explained(&r, &k.ontology);
                        r = anchored;
                        trace.push(ev);
                    }
                }
                out.push_str(&reading_header(i, &r));
                out.push_str(&r.serialize());
            }
            if save {
                if let Some(m) = memory.as_mut() {
                    m.record_precedent(&a.precedent_key(), a.top());
                }
            }
        }
        if let (true, Some(path), Some(m)) = (save, self.memory.as_deref(), memory.as_ref()) {
            kb::save_memory(path, m)?;
        }
        Ok(Output { text: out, trace })
    }

    fn learn_script(&self, k: &Knowledge, path: &Path, save: bool) -> Result<Output, CliError> {
        let dir = match (save, self.kb.as_deref()) {
            (true, None) => return Err(CliError::Usage("--save needs --kb".into())),
            (_, d) => d,
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::load(path, e))?;
        let sc = Scenario::parse(&text).map_err(|e| CliError::load(path, e))?;
        let (lex, ont) = sc.knowledge(&k.lexicon, &k.ontology).map_err(|e| CliError::load(path, e))?;
        let r = learn(&sc.text, &lex, &ont, &k.shapes, &mut sc.teacher(), &sc.options()).map_err(|e| CliError::Failed(e.to_string()))?;
        let mut out = format!("; scenario {}\n", sc.name);
        for (q, a) in &r.trace.questions {
            out.push_str(&format!("; asked: {}\n; answer: {}\n", q, a.as_deref().unwrap_or("(none)")));
        }
        if let Some(s) = &r.script {
            out.push_str(&serialize_kb(&[s.to_block()]));
        }
        out.push_str(&format!("; learned: {}\n", if r.learned { "yes" } else { "no" }));
        for l in &r.open_lacunae {
            out.push_str(&format!("; open lacuna: {}\n", l));
        }
        if let Some(d) = &r.description {
            out.push_str(&format!("; description: {}\n", d));
        }
        for m in &r.trace.modules {
            out.push_str(&format!("; module {}{}: {} ({})\n", m.name, if m.optional { "*" } else { "" }, m.status.as_str(), m.difficulty.as_str()));
        }
        if let (true, Some(dir), Some(s)) = (save && r.learned, dir, &r.script) {
            let mut blocks = Vec::new();
            if !k.ontology.contains(&s.head_concept) {
                if let Some(f) = r.ontology.get(&s.head_concept) {
                    blocks.push(Block::new(BlockKind::Concept, f.clone()));
                }
            }
            blocks.push(s.to_block());
            let file = dir.join("learned.kb");
            let mut text = fs::read_to_string(&file).unwrap_or_default();
            if !text.is_empty() && !text.ends_with("\n\n") {
                text.push('\n');
            }
            text.push_str(&serialize_kb(&blocks));
            fs::write(&file, text).map_err(|e| CliError::load(&file, e))?;
        }
        Ok(Output { text: out, trace: r.trace.events })
    }

    fn consolidate(&self, k: &Knowledge, min_count: usize) -> Result<Output, CliError> {
        let memory = self.memory()?.ok_or_else(|| CliError::Usage("consolidate needs --memory".into()))?;
        let habits = memory.identify_habits(&k.ontology, min_count);
        let mut out = format!("; {} habit(s), at least {} events each\n", habits.len(), min_count);
        let mut trace = Vec::new();
        for h in &habits {
            let support: Vec<String> = h.support.iter().map(|r| Filler::Anchor(r.clone()).to_string()).collect();
            out.push_str(&format!("; supported by {}\n", support.join(" ")));
            out.push_str(&serialize_kb(&[Block::new(BlockKind::Concept, h.frame())]));
            let mut ev = TraceEvent::new("learn", format!("{} events of {}", h.support.len(), h.event), format!("habit with THEME {}", h.theme));
            for s in &support {
                ev = ev.cite(s);
            }
            trace.push(ev);
        }
        if habits.is_empty() {
            trace.push(TraceEvent::new("learn", format!("{} anchors", memory.len()), "no habit"));
        }
        Ok(Output { text: out, trace })
    }

    fn plan(&self, k: &Knowledge, script: &str, human: Option<&str>, facts: &[String]) -> Result<Output, CliError> {
        let memory = self.memory()?.unwrap_or_default();
        let frame = k.ontology.get(script).ok_or_else(|| CliError::Failed(format!("no script {} in the ontology", script)))?;
        let context: BTreeSet<String> = facts.iter().cloned().collect();
        let plan = match human {
            Some(h) => {
                let who = find_human(&memory, h).ok_or_else(|| CliError::Failed(format!("no human {} in memory", h)))?;
                memory.plan_with_preference(&who, frame, &context).map_err(|e| CliError::Failed(e.to_string()))?
            }
            None => memory.instantiate_plan(frame, &context),
        };
        let source = match plan.source {
            PlanSource::Stencil => "taught path",
            PlanSource::Reused => "last plan that worked",
            PlanSource::Default => "default traversal",
        };
        let mut out = format!("; plan for {} ({})\n", plan.script, source);
        for (i, s) in plan.steps.iter().enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, s));
        }
        Ok(Output { text: out, trace: plan.trace })
    }
}

fn reading_header(i: usize, r: &MeaningRep) -> String {
    format!(
        "; reading {}{}: score {:.3}, senses {}\n",
        i + 1,
        if r.precedent { " (precedent)" } else { "" },
        r.score.aggregate,
        if r.senses.is_empty() { "-".to_string() } else { r.senses.join(" ") }
    )
}

fn find_human(memory: &EpisodicStore, h: &str) -> Option<InstanceRef> {
    if let Some(Filler::Anchor(r)) = parse_atom(h) {
        return memory.get(&r).map(|_| r);
    }
    memory.anchors().find(|f| f.value("HAS-NAME").and_then(|n| n.as_literal()) == Some(h)).and_then(|f| match &f.head {
        Filler::Anchor(r) => Some(r.clone()),
        _ => None,
    })
}

fn generate_file(k: &Knowledge, path: &Path) -> Result<Output, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::load(path, e))?;
    let mr = MeaningRep::parse(&text).map_err(|e| CliError::load(path, e))?;
    let g = generate(&mr, &k.shapes, &k.lexicon, &k.ontology).map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(Output { text: format!("{}\n", g.sentence), trace: g.trace })
}

fn validate(k: &Knowledge) -> Output {
    let mut out = String::new();
    let mut trace = Vec::new();
    let lint = k.ontology.lint();
    out.push_str(&format!("; ontology: {} concepts, {} warning(s)\n", k.ontology.names().count(), lint.len()));
    for w in &lint {
        out.push_str(&format!("warning: {}\n", w));
    }
    let mut issues = 0;
    for s in k.lexicon.senses() {
        for i in validate_sense(s, &k.ontology) {
            out.push_str(&format!("error: {}: {}\n", s.id, i));
            issues += 1;
        }
    }
    let shape_lint = k.lexicon.lint_sem_shapes();
    out.push_str(&format!("; lexicon: {} senses, {} error(s), {} warning(s)\n", k.lexicon.senses().count(), issues, shape_lint.len()));
    for w in &shape_lint {
        out.push_str(&format!("warning: {}\n", w));
    }
    out.push_str(&format!("; shapes: {}\n", k.shapes.shapes().len()));
    trace.push(TraceEvent::new("validate", "knowledge bases", format!("{} error(s), {} warning(s)", issues, lint.len() + shape_lint.len())));
    Output { text: out, trace }
}
