use std::fmt::Write as _;
use std::io::{IsTerminal, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use stickychase::chase::{check_s_stickiness, classic_chase, StickinessVerdict, StickinessViolation};
use stickychase::classes::{classify, is_syn_sch, SelectionFunction};
use stickychase::graph::{build_dg, build_edg, finite_existential_positions, finite_rank_positions, RankMap};
use stickychase::magic::{magicd_plus, DefaultSips, ShuffledSips, Sips};
use stickychase::parser::{
    atom_json, instance_json, parse_program, parse_query, render_instance, render_program, render_query, term_json,
    Format as OutFormat, FORMAT_VERSION,
};
use stickychase::qa::{schqa_with_state, AnswerSet, QaOptions};
use stickychase::{evaluate_cq, ConjunctiveQuery, Error, Position, PositionSet, Program};

#[derive(Parser)]
#[command(name = "stickychase", version, about = "Query answering over sticky Datalog± programs")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Report WA, JA, Sticky, WS and JWS membership with witnesses.
    Classify {
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Include the dependency graphs and rank tables.
        #[arg(long)]
        graphs: bool,
    },
    /// Run the classic chase for at most `budget` steps.
    Chase {
        program: PathBuf,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        /// Emit each step as a JSON line before the instance.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Answer a query with the query chase under a selection function.
    Answer {
        program: PathBuf,
        query: PathBuf,
        /// bot, rank, exists or oracle:<file>
        #[arg(long)]
        selection: String,
        /// Override the number of resumptions.
        #[arg(long)]
        resumptions: Option<usize>,
        /// Reject programs outside the class of the selection.
        #[arg(long)]
        strict: bool,
        /// Write the final instance to this path.
        #[arg(long)]
        dump_instance: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Rewrite a program and query with magic sets.
    Rewrite {
        program: PathBuf,
        query: PathBuf,
        /// default or shuffled:<seed>
        #[arg(long, default_value = "default")]
        sips: String,
        /// Write the JSON report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Test syntactic membership, then search a bounded chase for violations.
    CheckSemantic {
        program: PathBuf,
        #[arg(long)]
        selection: String,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Answer a query on the bounded classic chase.
    OracleAnswer {
        program: PathBuf,
        query: PathBuf,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    /// Bad input or configuration; exit 2.
    Config(String),
    /// Outside the requested class; exit 1.
    NotInClass(String),
}

type Outcome = Result<String, Failure>;

fn color_enabled(tty: bool) -> bool {
    match std::env::var("STICKYCHASE_COLOR").as_deref() {
        Ok("0" | "never" | "false" | "off") => false,
        Ok("1" | "always" | "true" | "on") => true,
        _ => tty,
    }
}

fn paint(s: &str, code: &str, on: bool) -> String {
    if on {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Config(format!("<stdin>: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn label(path: &Path) -> String {
    if path == Path::new("-") {
        "<stdin>".into()
    } else {
        path.display().to_string()
    }
}

/// `path:line:col: msg` for positioned errors, `path: msg` otherwise.
fn in_file(path: &Path, e: Error) -> Failure {
    if let Error::NotInClass(m) = e {
        return Failure::NotInClass(m);
    }
    let msg = e.to_string();
    let positioned = msg.split(':').next().is_some_and(|s| s.parse::<usize>().is_ok());
    let sep = if positioned { ":" } else { ": " };
    Failure::Config(format!("{}{sep}{msg}", label(path)))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read_input(path)?).map_err(|e| in_file(path, e))
}

fn load_query(path: &Path, program: &Program) -> Result<ConjunctiveQuery, Failure> {
    let q = parse_query(&read_input(path)?).map_err(|e| in_file(path, e))?;
    program.check_query(&q).map_err(|e| in_file(path, e))?;
    Ok(q)
}

fn check_stdin_once(paths: &[&Path]) -> Result<(), Failure> {
    if paths.iter().filter(|p| **p == Path::new("-")).count() > 1 {
        return Err(Failure::Config("at most one input can be read from stdin".into()));
    }
    Ok(())
}

fn parse_selection(arg: &str) -> Result<SelectionFunction, Failure> {
    match arg {
        "bot" => Ok(SelectionFunction::Bottom),
        "rank" => Ok(SelectionFunction::Rank),
        "exists" => Ok(SelectionFunction::Exists),
        _ => {
            let Some(file) = arg.strip_prefix("oracle:") else {
                return Err(Failure::Config(format!(
                    "unknown selection {arg:?}; expected bot, rank, exists or oracle:<file>"
                )));
            };
            let path = Path::new(file);
            let text = read_input(path)?;
            let mut set = PositionSet::new();
            for (n, line) in text.lines().enumerate() {
                let line = line.split('%').next().unwrap_or("");
                for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                    let p: Position = tok
                        .parse()
                        .map_err(|e: Error| Failure::Config(format!("{}:{}: {e}", label(path), n + 1)))?;
                    set.insert(p);
                }
            }
            Ok(SelectionFunction::Oracle(set))
        }
    }
}

fn parse_sips(arg: &str) -> Result<Box<dyn Sips>, Failure> {
    if arg == "default" {
        return Ok(Box::new(DefaultSips));
    }
    arg.strip_prefix("shuffled:")
        .and_then(|s| s.parse().ok())
        .map(|seed| Box::new(ShuffledSips { seed }) as Box<dyn Sips>)
        .ok_or_else(|| Failure::Config(format!("unknown sips {arg:?}; expected default or shuffled:<seed>")))
}

fn json_line(v: &Value) -> String {
    format!("{}\n", serde_json::to_string(v).expect("json"))
}

fn versioned(mut v: Value) -> Value {
    v["format_version"] = json!(FORMAT_VERSION);
    v
}

fn ranks_json(ranks: &RankMap) -> Value {
    ranks.iter().map(|(p, r)| (p.to_string(), r.to_json())).collect::<serde_json::Map<_, _>>().into()
}

fn yes_no(b: bool, color: bool) -> String {
    if b {
        paint("yes", "32", color)
    } else {
        paint("no", "31", color)
    }
}

fn run_classify(path: &Path, format: Format, graphs: bool) -> Outcome {
    let p = load_program(path)?;
    let report = classify(&p.rules);
    let (_, ranks) = finite_rank_positions(&p.rules);
    let (_, eranks) = finite_existential_positions(&p.rules);
    if format == Format::Json {
        let mut v = versioned(report.to_json());
        if graphs {
            let mut dg = build_dg(&p.rules).to_json();
            dg["rank"] = ranks_json(&ranks);
            let mut edg = build_edg(&p.rules).to_json();
            edg["rank"] = ranks_json(&eranks);
            v["graphs"] = json!({"dg": dg, "edg": edg});
        }
        return Ok(json_line(&v));
    }
    let color = color_enabled(std::io::stdout().is_terminal());
    let mut out = String::new();
    for (name, ok) in [
        ("WA", report.wa),
        ("JA", report.ja),
        ("Sticky", report.sticky),
        ("WS", report.ws),
        ("JWS", report.jws),
    ] {
        writeln!(out, "{name:<8}{}", yes_no(ok, color)).unwrap();
    }
    if !report.infinite_rank.is_empty() {
        let ps: Vec<String> = report.infinite_rank.iter().map(|p| p.to_string()).collect();
        writeln!(out, "infinite rank: {}", ps.join(", ")).unwrap();
    }
    if !report.cyclic_existentials.is_empty() {
        writeln!(out, "cyclic existentials: {}", report.cyclic_existentials.join(", ")).unwrap();
    }
    for (name, ws) in [
        ("Sticky", &report.sticky_witnesses),
        ("WS", &report.ws_witnesses),
        ("JWS", &report.jws_witnesses),
    ] {
        for w in ws {
            writeln!(out, "{name} witness: {w}").unwrap();
        }
    }
    if graphs {
        let dg = build_dg(&p.rules);
        for (a, b) in &dg.normal_edges {
            writeln!(out, "dg {a} -> {b}").unwrap();
        }
        for (a, b) in &dg.special_edges {
            writeln!(out, "dg {a} => {b}").unwrap();
        }
        let edg = build_edg(&p.rules);
        for &(a, b) in &edg.edges {
            writeln!(out, "edg {} -> {}", edg.nodes[a], edg.nodes[b]).unwrap();
        }
        for (pos, r) in &ranks {
            writeln!(out, "rank {pos} {r} erank {}", eranks[pos]).unwrap();
        }
    }
    Ok(out)
}

fn run_chase(path: &Path, budget: usize, trace: bool, format: Format) -> Outcome {
    let p = load_program(path)?;
    let res = classic_chase(&p, budget);
    let mut out = String::new();
    if trace {
        for s in &res.steps {
            out.push_str(&json_line(&s.to_json()));
        }
    }
    match format {
        Format::Json => out.push_str(&json_line(&json!({
            "format_version": FORMAT_VERSION,
            "terminated": res.terminated,
            "steps": res.steps.len(),
            "atoms": instance_json(&res.instance),
        }))),
        Format::Text => {
            if !res.terminated {
                eprintln!("note: chase stopped after {budget} steps");
            }
            out.push_str(&render_instance(&res.instance, OutFormat::Text));
        }
    }
    Ok(out)
}

fn answers(a: &AnswerSet, q: &ConjunctiveQuery, format: Format, extra: Value) -> String {
    let boolean = q.free_vars.is_empty();
    match format {
        Format::Text => a.render_text(boolean),
        Format::Json => {
            let mut v = a.to_json(boolean);
            if let Value::Object(m) = extra {
                for (k, x) in m {
                    v[k] = x;
                }
            }
            json_line(&v)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_answer(
    prog: &Path,
    query: &Path,
    selection: &str,
    resumptions: Option<usize>,
    strict: bool,
    dump: Option<&Path>,
    format: Format,
) -> Outcome {
    check_stdin_once(&[prog, query])?;
    let p = load_program(prog)?;
    let q = load_query(query, &p)?;
    let sel = parse_selection(selection)?;
    let opts = QaOptions { strict, resumptions, ..QaOptions::default() };
    let (a, state) = schqa_with_state(&p, &q, &sel, &opts).map_err(|e| in_file(prog, e))?;
    if let Some(path) = dump {
        let fmt = if format == Format::Json { OutFormat::Json } else { OutFormat::Text };
        std::fs::write(path, render_instance(state.instance(), fmt))
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    let extra = json!({
        "selection": sel.to_string(),
        "resumptions": state.resumptions_done,
        "atoms": state.instance().len(),
    });
    Ok(answers(&a, &q, format, extra))
}

fn run_rewrite(prog: &Path, query: &Path, sips: &str, report: Option<&Path>, format: Format) -> Outcome {
    check_stdin_once(&[prog, query])?;
    let p = load_program(prog)?;
    let q = load_query(query, &p)?;
    let sips = parse_sips(sips)?;
    let (m, rep) = magicd_plus(&p, &q, sips.as_ref()).map_err(|e| in_file(prog, e))?;
    let rep_json = rep.to_json(&m);
    if let Some(path) = report {
        std::fs::write(path, json_line(&rep_json)).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(match format {
        Format::Text => format!("{}{}", render_program(&m.program), render_query(&m.query)),
        Format::Json => json_line(&json!({
            "format_version": FORMAT_VERSION,
            "program": render_program(&m.program),
            "query": render_query(&m.query),
            "report": rep_json,
        })),
    })
}

fn violation_json(v: &StickinessViolation) -> Value {
    json!({
        "step": v.step,
        "rule": v.rule_id,
        "var": v.var.as_ref(),
        "value": term_json(&v.value),
        "offending": atom_json(&v.offending),
    })
}

fn run_check_semantic(prog: &Path, selection: &str, budget: usize, format: Format) -> Outcome {
    let p = load_program(prog)?;
    let sel = parse_selection(selection)?;
    let (syn, witnesses) = is_syn_sch(&p, &sel).map_err(|e| in_file(prog, e))?;
    let verdict = if syn {
        StickinessVerdict::NoViolationWithinBudget
    } else {
        check_s_stickiness(&p, &sel, budget).map_err(|e| in_file(prog, e))?
    };
    let (status, violation) = match (&verdict, syn) {
        (StickinessVerdict::Violation(v), _) => ("not-member", Some(v)),
        (_, true) => ("member", None),
        _ => ("unknown", None),
    };
    let out = match format {
        Format::Json => json_line(&json!({
            "format_version": FORMAT_VERSION,
            "selection": sel.to_string(),
            "syntactic": syn,
            "witnesses": witnesses.iter().map(|w| w.to_json()).collect::<Vec<_>>(),
            "budget": budget,
            "violation": violation.map(violation_json),
            "verdict": status,
        })),
        Format::Text => {
            let mut s = format!("syntactic: {}\n", if syn { "yes" } else { "no" });
            for w in &witnesses {
                writeln!(s, "witness: {w}").unwrap();
            }
            if let Some(v) = violation {
                writeln!(s, "violation: {v}").unwrap();
            }
            writeln!(s, "verdict: {status}").unwrap();
            s
        }
    };
    match violation {
        Some(_) => {
            print!("{out}");
            Err(Failure::NotInClass(format!("selection {sel}: violation found within {budget} steps")))
        }
        None => Ok(out),
    }
}

fn run_oracle(prog: &Path, query: &Path, budget: usize, format: Format) -> Outcome {
    check_stdin_once(&[prog, query])?;
    let p = load_program(prog)?;
    let q = load_query(query, &p)?;
    let res = classic_chase(&p, budget);
    if !res.terminated {
        eprintln!("note: chase stopped after {budget} steps; answers may be incomplete");
    }
    let a = AnswerSet::from_raw(evaluate_cq(&q, &res.instance));
    let extra = json!({"terminated": res.terminated, "atoms": res.instance.len()});
    Ok(answers(&a, &q, format, extra))
}

fn run(cli: Cli) -> Outcome {
    match cli.verb {
        Verb::Classify { program, format, graphs } => run_classify(&program, format, graphs),
        Verb::Chase { program, budget, trace, format } => run_chase(&program, budget, trace, format),
        Verb::Answer { program, query, selection, resumptions, strict, dump_instance, format } => run_answer(
            &program,
            &query,
            &selection,
            resumptions,
            strict,
            dump_instance.as_deref(),
            format,
        ),
        Verb::Rewrite { program, query, sips, report, format } => {
            run_rewrite(&program, &query, &sips, report.as_deref(), format)
        }
        Verb::CheckSemantic { program, selection, budget, format } => {
            run_check_semantic(&program, &selection, budget, format)
        }
        Verb::OracleAnswer { program, query, budget, format } => run_oracle(&program, &query, budget, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let color = color_enabled(std::io::stderr().is_terminal());
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::NotInClass(m)) => {
            eprintln!("{} {m}", paint("not in class:", "33", color));
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("{} {m}", paint("error:", "31", color));
            ExitCode::from(2)
        }
    }
}
