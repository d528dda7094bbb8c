mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use forestcat_core::algebra::{syntactic_algebra, AlgebraError, RawRecognizer, Recognizer};
use forestcat_core::catalog;
use forestcat_core::category::{validate_category, CoverError, RawCategory};
use forestcat_core::decide::{
    decide_lt, Budgets, CheckOutcome, Decision, DecideError, IdentityCheck, LtVerdict, NotLtReason, SearchOutcome,
    WitnessTerms,
};
use forestcat_core::derived::{derived_category, pair_closure, DerivedError};
use forestcat_core::kdefinite::{build_kdef_algebra, lt_recognizer, oracle_k_lt, KdefError, LtSpec, TypeUniverse};
use forestcat_core::terms::{parse_term, Alphabet, Term};

use report::{render_text, sha256, Report};

#[derive(Parser)]
#[command(name = "forestcat", version, about = "Forest algebras, forest categories and local testability")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized sampling; recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a forest or context and print its canonical form.
    Show {
        term: String,
        /// Comma-separated alphabet to check labels against.
        #[arg(long)]
        alphabet: Option<String>,
    },
    /// Evaluate terms under a recognizer.
    Eval {
        #[command(flatten)]
        rec: RecArg,
        /// Evaluate in the syntactic algebra instead.
        #[arg(long)]
        syntactic: bool,
        #[arg(required = true)]
        terms: Vec<String>,
    },
    /// Minimize a recognizer to its syntactic forest algebra.
    Syntactic {
        #[command(flatten)]
        rec: RecArg,
        /// Write the minimized recognizer here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the k-definite algebra (H_k, V_k) over an alphabet.
    Kdef {
        #[arg(long)]
        alphabet: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Forests whose k-type sets to report.
        #[arg(long = "term")]
        terms: Vec<String>,
        /// Only report the root types of the given terms.
        #[arg(long)]
        terms_only: bool,
        /// Write the algebra with its letter images here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a recognizer for a k-locally testable specification.
    LtMake {
        #[arg(long)]
        alphabet: String,
        #[arg(long)]
        k: usize,
        /// Formula over `node(pattern)` and `root(pattern)` atoms.
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search small forests for a k-LT counterexample.
    OracleLt {
        #[command(flatten)]
        rec: RecArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        max_nodes: usize,
    },
    /// Dump the derived category of a recognizer and a second morphism.
    Derived {
        /// Recognizer file or `catalog:NAME`; its syntactic morphism is used.
        #[arg(long)]
        alpha: String,
        /// `kdef:K` or a recognizer file.
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the global-IC identities of a category file.
    CheckIc {
        file: PathBuf,
        /// Also search diagrams up to this many nodes for a witness.
        #[arg(long)]
        brute_force: Option<usize>,
    },
    /// Decide local testability of a recognizer.
    DecideLt {
        /// Recognizer file or `catalog:NAME`.
        rec: String,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        #[arg(long, default_value_t = 200_000)]
        pair_budget: usize,
        #[arg(long, default_value_t = 4)]
        term_bound: usize,
        #[arg(long, default_value_t = 20_000_000)]
        witness_budget: usize,
    },
}

#[derive(Args)]
struct RecArg {
    /// Recognizer file or `catalog:NAME`.
    #[arg(long = "rec")]
    rec: String,
}

/// How a completed command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Completed,
    Refuted,
    Unknown,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Completed => 0,
            Status::Refuted => 1,
            Status::Unknown => 3,
        }
    }
}

fn load_recognizer(spec: &str) -> Result<(Recognizer, String)> {
    if let Some(name) = spec.strip_prefix("catalog:") {
        let r = catalog::by_name(name)
            .ok_or_else(|| anyhow!("unknown catalog entry `{name}`; known: {}", catalog::NAMES.join(", ")))?;
        let text = serde_json::to_string(&r.to_raw())?;
        return Ok((r, sha256(text.as_bytes())));
    }
    let bytes = fs::read(spec).with_context(|| format!("reading {spec}"))?;
    let raw: RawRecognizer = serde_json::from_slice(&bytes).with_context(|| format!("parsing {spec}"))?;
    let r = Recognizer::from_raw(&raw).with_context(|| format!("loading {spec}"))?;
    Ok((r, sha256(&bytes)))
}

fn parse_alphabet(text: &str) -> Result<Alphabet> {
    Ok(Alphabet::new(text.split(',').map(str::trim).filter(|s| !s.is_empty()))?)
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn show(term: &str, alphabet: Option<&str>, report: &mut Report) -> Result<Status> {
    let ab = alphabet.map(parse_alphabet).transpose()?;
    report.input("term", sha256(term.as_bytes()));
    match parse_term(term, ab.as_ref())? {
        Term::Forest(f) => {
            report.set("kind", "forest");
            report.set("canonical", f.canonical().to_string());
            report.set("nodes", f.size());
            report.set("depth", f.depth());
        }
        Term::Context(c) => {
            report.set("kind", "context");
            report.set("canonical", c.to_string());
            report.set("nodes", c.size());
        }
    }
    Ok(Status::Completed)
}

fn eval(rec: &str, syntactic: bool, terms: &[String], report: &mut Report) -> Result<Status> {
    let (r, hash) = load_recognizer(rec)?;
    report.input("rec", hash);
    let r = if syntactic { syntactic_algebra(&r).recognizer } else { r };
    let m = r.morphism();
    let mut results = Vec::new();
    for t in terms {
        let entry = match parse_term(t, Some(r.alphabet()))? {
            Term::Forest(f) => {
                let h = m.eval_forest(&f)?;
                json!({"term": f.to_string(), "kind": "forest", "value": h, "accept": r.accept_set().contains(&h)})
            }
            Term::Context(c) => json!({"term": c.to_string(), "kind": "context", "value": m.eval_context(&c)?}),
        };
        results.push(entry);
    }
    report.set("syntactic", syntactic);
    report.set("results", results);
    Ok(Status::Completed)
}

fn syntactic(rec: &str, out: Option<&Path>, report: &mut Report) -> Result<Status> {
    let (r, hash) = load_recognizer(rec)?;
    report.input("rec", hash);
    let syn = syntactic_algebra(&r);
    let image = syn.recognizer.morphism().image();
    report.set("original", json!({"h_size": r.algebra().h_size(), "v_size": r.algebra().v_size()}));
    report.set("h_size", syn.algebra.h_size());
    report.set("v_size", syn.algebra.v_size());
    report.set("h_idempotent", syn.algebra.is_h_idempotent());
    report.set("h_quotient", json!(syn.h_quot));
    report.set("v_quotient", json!(syn.v_quot));
    let h_terms: Vec<String> = image.h_terms.iter().map(|t| t.to_string()).collect();
    let v_terms: Vec<String> = image.v_terms.iter().map(|t| t.to_string()).collect();
    report.set("h_terms", json!(h_terms));
    report.set("v_terms", json!(v_terms));
    report.set("accept", json!(syn.recognizer.accept_set()));
    match out {
        Some(p) => write_json(p, &syn.recognizer.to_raw())?,
        None => report.set("recognizer", serde_json::to_value(syn.recognizer.to_raw())?),
    }
    Ok(Status::Completed)
}

fn kdef(
    alphabet: &str,
    k: usize,
    budget: usize,
    terms: &[String],
    terms_only: bool,
    out: Option<&Path>,
    report: &mut Report,
) -> Result<Status> {
    let ab = parse_alphabet(alphabet)?;
    report.input("alphabet", sha256(alphabet.as_bytes()));
    report.set("k", k);
    let mut u = TypeUniverse::new();
    let kd = if terms_only {
        None
    } else {
        Some(build_kdef_algebra(&mut u, &ab, k, budget)?)
    };
    let mut evaluated = Vec::new();
    for t in terms {
        match parse_term(t, Some(&ab))? {
            Term::Forest(f) => {
                let direct: Vec<_> = u.root_types(&f, k).into_iter().collect();
                let mut entry = json!({
                    "term": f.to_string(),
                    "root_types": direct.iter().map(|&t| u.render(t)).collect::<Vec<_>>(),
                });
                if let Some(kd) = &kd {
                    let h = kd.morphism.eval_forest(&f)?;
                    entry["value"] = h.into();
                    entry["agrees"] = (direct == kd.h_sets[h]).into();
                }
                evaluated.push(entry);
            }
            Term::Context(c) => {
                let value = match &kd {
                    Some(kd) => Value::from(kd.morphism.eval_context(&c)?),
                    None => Value::Null,
                };
                evaluated.push(json!({"term": c.to_string(), "value": value}));
            }
        }
    }
    if !terms.is_empty() {
        report.set("terms", evaluated);
    }
    let Some(kd) = kd else {
        return Ok(Status::Completed);
    };
    report.set("h_size", kd.algebra().h_size());
    report.set("v_size", kd.algebra().v_size());
    let types: Vec<Value> = (0..kd.algebra().h_size())
        .map(|h| json!({"id": h, "types": kd.render_h(&u, h), "term": kd.h_terms[h].to_string()}))
        .collect();
    report.set("h_types", types);
    let file = kdef_file(&kd);
    match out {
        Some(p) => write_json(p, &file)?,
        None => report.set("algebra", file),
    }
    Ok(Status::Completed)
}

fn kdef_file(kd: &forestcat_core::kdefinite::KdefAlgebra) -> Value {
    let letters: serde_json::Map<String, Value> = kd
        .morphism
        .letter_map()
        .into_iter()
        .map(|(l, v)| (l.as_str().to_string(), v.into()))
        .collect();
    let mut v = serde_json::to_value(kd.algebra().to_raw()).expect("tables serialize");
    v["letters"] = Value::Object(letters);
    v["alphabet"] = json!(kd.alphabet().labels().iter().map(|l| l.as_str()).collect::<Vec<_>>());
    v
}

fn lt_make(
    alphabet: &str,
    k: usize,
    spec: &str,
    budget: usize,
    out: Option<&Path>,
    report: &mut Report,
) -> Result<Status> {
    let ab = parse_alphabet(alphabet)?;
    report.input("alphabet", sha256(alphabet.as_bytes()));
    report.input("spec", sha256(spec.as_bytes()));
    let parsed = LtSpec::parse(spec)?;
    let mut u = TypeUniverse::new();
    let lt = lt_recognizer(&mut u, &ab, k, &parsed, budget)?;
    let r = &lt.recognizer;
    report.set("k", k);
    report.set("h_size", r.algebra().h_size());
    report.set("v_size", r.algebra().v_size());
    report.set("accept", json!(r.accept_set()));
    match out {
        Some(p) => write_json(p, &r.to_raw())?,
        None => report.set("recognizer", serde_json::to_value(r.to_raw())?),
    }
    Ok(Status::Completed)
}

fn oracle_lt(rec: &str, k: usize, max_nodes: usize, report: &mut Report) -> Result<Status> {
    let (r, hash) = load_recognizer(rec)?;
    report.input("rec", hash);
    let mut u = TypeUniverse::new();
    report.set("k", k);
    report.set("max_nodes", max_nodes);
    match oracle_k_lt(&mut u, &r, k, max_nodes)? {
        Some((s, t)) => {
            report.set(
                "witness",
                json!({
                    "first": s.to_string(),
                    "second": t.to_string(),
                    "first_accepted": r.accepts(&s)?,
                    "second_accepted": r.accepts(&t)?,
                }),
            );
            Ok(Status::Refuted)
        }
        None => {
            report.set("witness", Value::Null);
            Ok(Status::Completed)
        }
    }
}

fn derived(alpha: &str, beta: &str, budget: usize, out: Option<&Path>, report: &mut Report) -> Result<Status> {
    let (ra, hash) = load_recognizer(alpha)?;
    report.input("alpha", hash);
    let syn = syntactic_algebra(&ra);
    let mut u = TypeUniverse::new();
    let kd;
    let other;
    let beta_morphism = if let Some(k) = beta.strip_prefix("kdef:") {
        let k: usize = k.parse().with_context(|| format!("bad level in `{beta}`"))?;
        report.input("beta", sha256(beta.as_bytes()));
        kd = build_kdef_algebra(&mut u, ra.alphabet(), k, budget)?;
        &kd.morphism
    } else {
        let (rb, hash) = load_recognizer(beta)?;
        report.input("beta", hash);
        other = rb;
        other.morphism()
    };
    if beta_morphism.alphabet() != ra.alphabet() {
        bail!("alpha and beta are over different alphabets");
    }
    let pa = pair_closure(syn.recognizer.morphism(), beta_morphism, budget)?;
    let dc = derived_category(&pa)?;
    let c = &dc.category;
    report.set("objects", c.n_objects());
    report.set("half_arrows", c.n_half_arrows());
    report.set("arrows", c.n_arrows());
    let arrows: Vec<Value> = dc
        .arrows
        .iter()
        .map(|a| json!({"start": a.start, "end": a.end, "action": a.action}))
        .collect();
    report.set(
        "keys",
        json!({
            "objects": dc.objects,
            "compatible": dc.compatible,
            "half_arrows": dc.half_arrows,
            "arrows": arrows,
        }),
    );
    match out {
        Some(p) => write_json(p, &c.to_raw())?,
        None => report.set("category", serde_json::to_value(c.to_raw())?),
    }
    Ok(Status::Completed)
}

fn check_ic(file: &Path, brute_force: Option<usize>, report: &mut Report) -> Result<Status> {
    let bytes = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    report.input("category", sha256(&bytes));
    let raw: RawCategory = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", file.display()))?;
    let c = validate_category(&raw).map_err(|v| anyhow!("invalid category: {v:?}"))?;
    let ids = c.check_identities();
    let holds = ids.all_hold();
    report.set("identities", serde_json::to_value(&ids)?);
    report.set("derived_identities", serde_json::to_value(c.check_derived_identities())?);
    report.set("global_ic", holds && ids.objects_idempotent);
    let mut refuted = !holds;
    if let Some(n) = brute_force {
        let w = c.brute_force_global_ic(n);
        refuted |= w.is_some();
        report.set(
            "brute_force",
            json!({
                "max_nodes": n,
                "witness": w.map(|w| json!({"first": w.first.to_string(), "second": w.second.to_string()})),
            }),
        );
    }
    Ok(if refuted { Status::Refuted } else { Status::Completed })
}

fn witness_json(terms: &WitnessTerms) -> Value {
    let mut named = serde_json::Map::new();
    for (k, v) in terms.named() {
        named.insert(k.into(), v.into());
    }
    let (left, right) = terms.sides();
    json!({"terms": named, "left": left.to_string(), "right": right.to_string()})
}

fn step_json(s: &IdentityCheck) -> Value {
    let outcome = match &s.outcome {
        CheckOutcome::Holds => json!({"result": "holds"}),
        CheckOutcome::Violated { violation, terms } => {
            json!({"result": "violated", "violation": violation, "witness": witness_json(terms)})
        }
        CheckOutcome::Inconclusive(why) => json!({"result": "inconclusive", "reason": why}),
    };
    json!({
        "k": s.k,
        "r_strategy": s.r_strategy.map(|x| x.to_string()),
        "s_strategy": s.s_strategy.map(|x| x.to_string()),
        "r_size": s.r_size,
        "s_size": s.s_size,
        "instances": s.instances,
        "outcome": outcome,
    })
}

fn decision_json(d: &Decision) -> (Value, Status) {
    let (verdict, status) = match &d.verdict {
        LtVerdict::Lt { level, evidence } => (
            json!({
                "kind": "lt",
                "level_at_most": level,
                "evidence": {
                    "k": evidence.k,
                    "r_strategy": evidence.r_strategy.to_string(),
                    "s_strategy": evidence.s_strategy.to_string(),
                    "r_pairs": evidence.r_pairs.len(),
                    "s_pairs": evidence.s_pairs.len(),
                    "instances": evidence.instances,
                },
            }),
            Status::Completed,
        ),
        LtVerdict::NotLt(NotLtReason::Nonidempotent { h, sum, term }) => (
            json!({
                "kind": "not-lt",
                "reason": "nonidempotent",
                "term": term.to_string(),
                "doubled": term.add(term).to_string(),
                "value": h,
                "doubled_value": sum,
            }),
            Status::Refuted,
        ),
        LtVerdict::NotLt(NotLtReason::Identity { level, violation, terms }) => (
            json!({
                "kind": "not-lt",
                "reason": "identity",
                "level": level,
                "violation": violation,
                "witness": witness_json(terms),
            }),
            Status::Refuted,
        ),
        LtVerdict::Unknown { budgets_hit } => (json!({"kind": "unknown", "budgets_hit": budgets_hit}), Status::Unknown),
    };
    let search = match &d.search {
        SearchOutcome::Found(v, t) => json!({"result": "found", "violation": v, "witness": witness_json(t)}),
        SearchOutcome::Exhausted { candidates } => json!({"result": "exhausted", "candidates": candidates}),
        SearchOutcome::Skipped(why) => json!({"result": "skipped", "reason": why}),
    };
    let value = json!({
        "verdict": verdict,
        "syntactic": {"h_size": d.h_size, "v_size": d.v_size},
        "k_star": d.k_star,
        "transcript": d.steps.iter().map(step_json).collect::<Vec<_>>(),
        "search": search,
    });
    (value, status)
}

fn decide(rec: &str, b: Budgets, report: &mut Report) -> Result<Status> {
    let (r, hash) = load_recognizer(rec)?;
    report.input("rec", hash);
    report.set("budgets", serde_json::to_value(b)?);
    let d = decide_lt(&r, &b)?;
    let (value, status) = decision_json(&d);
    if let Value::Object(map) = value {
        for (k, v) in map {
            report.set(&k, v);
        }
    }
    Ok(status)
}

fn is_budget(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<DecideError>().is_some_and(DecideError::is_budget)
            || matches!(
                c.downcast_ref::<KdefError>(),
                Some(KdefError::Budget { .. } | KdefError::Algebra(AlgebraError::Budget { .. }))
            )
            || matches!(c.downcast_ref::<DerivedError>(), Some(DerivedError::Budget { .. }))
            || matches!(c.downcast_ref::<AlgebraError>(), Some(AlgebraError::Budget { .. }))
            || c.downcast_ref::<CoverError>().is_some()
    })
}

fn run(cli: &Cli) -> Result<(Report, Status)> {
    let name = match &cli.command {
        Command::Show { .. } => "show",
        Command::Eval { .. } => "eval",
        Command::Syntactic { .. } => "syntactic",
        Command::Kdef { .. } => "kdef",
        Command::LtMake { .. } => "lt-make",
        Command::OracleLt { .. } => "oracle-lt",
        Command::Derived { .. } => "derived",
        Command::CheckIc { .. } => "check-ic",
        Command::DecideLt { .. } => "decide-lt",
    };
    let mut report = Report::new(name, cli.seed);
    let status = match &cli.command {
        Command::Show { term, alphabet } => show(term, alphabet.as_deref(), &mut report)?,
        Command::Eval { rec, syntactic, terms } => eval(&rec.rec, *syntactic, terms, &mut report)?,
        Command::Syntactic { rec, out } => syntactic(&rec.rec, out.as_deref(), &mut report)?,
        Command::Kdef {
            alphabet,
            k,
            budget,
            terms,
            terms_only,
            out,
        } => kdef(alphabet, *k, *budget, terms, *terms_only, out.as_deref(), &mut report)?,
        Command::LtMake {
            alphabet,
            k,
            spec,
            budget,
            out,
        } => lt_make(alphabet, *k, spec, *budget, out.as_deref(), &mut report)?,
        Command::OracleLt { rec, k, max_nodes } => oracle_lt(&rec.rec, *k, *max_nodes, &mut report)?,
        Command::Derived { alpha, beta, budget, out } => derived(alpha, beta, *budget, out.as_deref(), &mut report)?,
        Command::CheckIc { file, brute_force } => check_ic(file, *brute_force, &mut report)?,
        Command::DecideLt {
            rec,
            max_k,
            pair_budget,
            term_bound,
            witness_budget,
        } => {
            let b = Budgets {
                max_k: *max_k,
                pair_budget: *pair_budget,
                term_bound: *term_bound,
                witness_budget: *witness_budget,
                seed: cli.seed,
                ..Budgets::default()
            };
            decide(rec, b, &mut report)?
        }
    };
    Ok((report, status))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, status)) => {
            let v = report.into_value();
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
            } else {
                print!("{}", render_text(&v));
            }
            ExitCode::from(status.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_budget(&e) { 3 } else { 2 })
        }
    }
}
