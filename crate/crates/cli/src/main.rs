//! Command-line front end: loads lattice and transition system files,
//! dispatches one analysis per invocation, and prints deterministic text or
//! JSON reports. Exit code 0 means the analysis ran (the verdict is in the
//! report); 2 is a usage error, 3 an I/O failure, 4 a semantic input error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use abskern::absdom::{bca, parse_functions, AbstractDomain, MonotoneFn};
use abskern::ats::{build_ats, partition_kernel, Partition, TransitionSystem};
use abskern::bits::BitSet;
use abskern::cegar::{
    cegar_loop, render_path, spurious_preimage_check, Heuristic, RefineStep, Verdict,
};
use abskern::dot::{ats_dot, domain_dot, lattice_dot};
use abskern::kernel::{correctness_kernel, kernel_oracle};
use abskern::lattice::Lattice;
use abskern::predabs::{bca_post_table, loop_fixture, verify_loop, LoopAbstraction, LoopRun};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "abskern", version, about = "Correctness kernels of abstract domains")]
struct Cli {
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized law probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a lattice file and probe its algebraic laws.
    LatticeCheck {
        /// Lattice file (elem/cover/map lines).
        #[arg(long)]
        file: PathBuf,
        /// Number of random law probes to run.
        #[arg(long, default_value_t = 100)]
        probes: usize,
        /// Write a Hasse diagram in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the best correct approximation of a function in a domain.
    Bca {
        #[arg(long)]
        lattice: PathBuf,
        /// "full" for the identity domain, or a file of element names.
        #[arg(long, default_value = "full")]
        domain: String,
        /// Function name defined by map lines in the lattice file.
        #[arg(long = "fn")]
        function: String,
    },
    /// Compute the most abstract domain preserving the given approximations.
    Kernel {
        #[arg(long)]
        lattice: PathBuf,
        /// "full" for the identity domain, or a file of element names.
        #[arg(long, default_value = "full")]
        domain: String,
        /// Function names; repeat the flag for a family.
        #[arg(long = "fn", required = true)]
        functions: Vec<String>,
        /// Cross-check the construction against the exhaustive oracle.
        #[arg(long)]
        oracle: bool,
        /// Write the kernel image order in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Merge partition blocks with identical abstract pre/post behavior.
    PartitionKernel {
        /// Transition system file with block lines.
        #[arg(long)]
        system: PathBuf,
        /// Re-apply the merge until the partition is stable.
        #[arg(long)]
        iterate: bool,
        /// Write the simplified abstract system in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Refine an abstraction until it is safe or a real counterexample appears.
    Cegar {
        /// Transition system file with block, init and error lines.
        #[arg(long)]
        system: PathBuf,
        /// How to split the failure block of a spurious counterexample.
        #[arg(long, value_enum)]
        heuristic: HeuristicArg,
        /// Refinement budget; unlimited when absent.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write one DOT file per iteration into this directory.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
    },
    /// Check that spurious coarse walks have spurious finer preimages.
    SpuriousPreimageCheck {
        /// Transition system file; its block lines give the fine partition.
        #[arg(long)]
        system: PathBuf,
        /// Second file with the coarse blocks over the same system;
        /// defaults to the partition kernel of the fine blocks.
        #[arg(long)]
        coarse: Option<PathBuf>,
        /// Longest abstract walk to enumerate.
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Analyze the bounded loop fixture under a chosen abstraction.
    Predabs {
        /// Built-in fixture name ("loop").
        #[arg(long)]
        fixture: String,
        #[arg(long, value_enum)]
        abstraction: AbstractionArg,
        /// Variable range; the loop counter wraps at this bound.
        #[arg(long, default_value_t = 4)]
        modulus: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Basic,
    Egas,
}

#[derive(Clone, Copy, ValueEnum)]
enum AbstractionArg {
    Boolean,
    Kernel,
    Cartesian,
}

enum CliError {
    Io { path: String, message: String },
    Semantic(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Semantic(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Semantic(msg) => write!(f, "{msg}"),
        }
    }
}

struct Report {
    command: &'static str,
    inputs: BTreeMap<String, String>,
    text: String,
    result: Value,
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                let doc = json!({
                    "command": report.command,
                    "inputs": report.inputs,
                    "result": report.result,
                });
                println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
            } else {
                print!("{}", report.text);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a file, recording its content hash for the JSON report.
fn read_file(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io { path: display(path), message: e.to_string() })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    inputs.insert(display(path), format!("sha256:{:x}", hasher.finalize()));
    String::from_utf8(bytes)
        .map_err(|_| CliError::Semantic(format!("{}: not UTF-8 text", display(path))))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Io { path: display(path), message: e.to_string() })
}

fn load_lattice(text: &str, path: &Path) -> Result<Arc<Lattice>, CliError> {
    Lattice::parse(text)
        .map(Arc::new)
        .map_err(|e| CliError::Semantic(format!("{}: {e}", display(path))))
}

fn load_system(
    text: &str,
    path: &Path,
) -> Result<(TransitionSystem, Option<Partition>), CliError> {
    TransitionSystem::parse(text).map_err(|e| CliError::Semantic(format!("{}: {e}", display(path))))
}

fn require_blocks(p: Option<Partition>, path: &Path) -> Result<Partition, CliError> {
    p.ok_or_else(|| {
        CliError::Semantic(format!("{}: the system file defines no block lines", display(path)))
    })
}

/// Resolves `--domain`: the literal "full" or a file of element names.
fn load_domain(
    value: &str,
    lattice: &Arc<Lattice>,
    inputs: &mut BTreeMap<String, String>,
) -> Result<(AbstractDomain, String), CliError> {
    if value == "full" {
        return Ok((AbstractDomain::identity(lattice), "full".to_string()));
    }
    let path = Path::new(value);
    let text = read_file(path, inputs)?;
    let mut generators = BitSet::new(lattice.element_count());
    for raw in text.lines() {
        let content = raw.split('#').next().unwrap_or("").trim();
        for word in content.split_whitespace() {
            let e = lattice.element_by_name(word).ok_or_else(|| {
                CliError::Semantic(format!("{value}: unknown element {word:?}"))
            })?;
            generators.insert(e);
        }
    }
    Ok((AbstractDomain::from_image(lattice, &generators), value.to_string()))
}

fn element_names(lattice: &Lattice, set: &BitSet) -> Vec<String> {
    set.iter().map(|e| lattice.name(e)).collect()
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let mut inputs = BTreeMap::new();
    match &cli.command {
        Command::LatticeCheck { file, probes, dot } => {
            lattice_check(file, *probes, dot.as_deref(), cli.seed, &mut inputs)
        }
        Command::Bca { lattice, domain, function } => {
            bca_command(lattice, domain, function, &mut inputs)
        }
        Command::Kernel { lattice, domain, functions, oracle, dot } => {
            kernel_command(lattice, domain, functions, *oracle, dot.as_deref(), &mut inputs)
        }
        Command::PartitionKernel { system, iterate, dot } => {
            partition_kernel_command(system, *iterate, dot.as_deref(), &mut inputs)
        }
        Command::Cegar { system, heuristic, max_iters, dot_dir } => {
            cegar_command(system, *heuristic, *max_iters, dot_dir.as_deref(), &mut inputs)
        }
        Command::SpuriousPreimageCheck { system, coarse, max_len } => {
            preimage_command(system, coarse.as_deref(), *max_len, &mut inputs)
        }
        Command::Predabs { fixture, abstraction, modulus } => {
            predabs_command(fixture, *abstraction, *modulus, inputs)
        }
    }
}

fn lattice_check(
    file: &Path,
    probes: usize,
    dot: Option<&Path>,
    seed: u64,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(file, inputs)?;
    let lattice = load_lattice(&text, file)?;
    let fns = parse_functions(&text, &lattice)
        .map_err(|e| CliError::Semantic(format!("{}: {e}", display(file))))?;
    let n = lattice.element_count();
    let covers = lattice.covers().len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        let z = rng.gen_range(0..n);
        let laws = [
            lattice.lub2(x, y) == lattice.lub2(y, x),
            lattice.glb2(x, y) == lattice.glb2(y, x),
            lattice.lub2(x, lattice.lub2(y, z)) == lattice.lub2(lattice.lub2(x, y), z),
            lattice.glb2(x, lattice.glb2(y, z)) == lattice.glb2(lattice.glb2(x, y), z),
            lattice.lub2(x, lattice.glb2(x, y)) == x,
            lattice.glb2(x, lattice.lub2(x, y)) == x,
            lattice.leq(lattice.glb2(x, y), x),
            lattice.leq(x, lattice.lub2(x, y)),
        ];
        if laws.iter().any(|&ok| !ok) {
            return Err(CliError::Semantic(format!(
                "{}: lattice law probe failed on elements {}, {}, {}",
                display(file),
                lattice.name(x),
                lattice.name(y),
                lattice.name(z)
            )));
        }
    }

    let fn_names: Vec<&String> = fns.keys().collect();
    let mut text_out = format!("lattice {}: {n} elements, {covers} covers, valid\n", display(file));
    if fn_names.is_empty() {
        text_out.push_str("functions: (none)\n");
    } else {
        let _ = writeln!(
            text_out,
            "functions: {}",
            fn_names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        );
    }
    let _ = writeln!(text_out, "probes: {probes} ok (seed {seed})");
    if let Some(p) = dot {
        write_file(p, &lattice_dot(&lattice))?;
        let _ = writeln!(text_out, "dot written to {}", display(p));
    }
    Ok(Report {
        command: "lattice-check",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "elements": n,
            "covers": covers,
            "functions": fn_names,
            "probes": probes,
            "seed": seed,
            "valid": true,
        }),
    })
}

fn bca_command(
    lattice_path: &Path,
    domain: &str,
    function: &str,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(lattice_path, inputs)?;
    let lattice = load_lattice(&text, lattice_path)?;
    let fns = parse_functions(&text, &lattice)
        .map_err(|e| CliError::Semantic(format!("{}: {e}", display(lattice_path))))?;
    let f = lookup_function(&fns, function, lattice_path)?;
    let (dom, label) = load_domain(domain, &lattice, inputs)?;
    let table = bca(&dom, f);

    let mut text_out = format!(
        "bca of {function} over {}, domain {label} ({} elements)\n",
        display(lattice_path),
        dom.image().count()
    );
    let mut rows = Vec::new();
    for (x, y) in table.iter() {
        let _ = writeln!(text_out, "{} -> {}", lattice.name(x), lattice.name(y));
        rows.push(vec![lattice.name(x), lattice.name(y)]);
    }
    Ok(Report {
        command: "bca",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "function": function,
            "domain": element_names(&lattice, dom.image()),
            "table": rows,
        }),
    })
}

fn lookup_function<'a>(
    fns: &'a BTreeMap<String, MonotoneFn>,
    name: &str,
    path: &Path,
) -> Result<&'a MonotoneFn, CliError> {
    fns.get(name).ok_or_else(|| {
        let known: Vec<&str> = fns.keys().map(|s| s.as_str()).collect();
        CliError::Semantic(if known.is_empty() {
            format!("{}: defines no functions (no map lines)", display(path))
        } else {
            format!(
                "{}: no function named {name:?}; defined: {}",
                display(path),
                known.join(", ")
            )
        })
    })
}

fn kernel_command(
    lattice_path: &Path,
    domain: &str,
    functions: &[String],
    oracle: bool,
    dot: Option<&Path>,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(lattice_path, inputs)?;
    let lattice = load_lattice(&text, lattice_path)?;
    let fns = parse_functions(&text, &lattice)
        .map_err(|e| CliError::Semantic(format!("{}: {e}", display(lattice_path))))?;
    let mut seen = BTreeSet::new();
    for name in functions {
        if !seen.insert(name) {
            return Err(CliError::Semantic(format!("function {name:?} given twice")));
        }
    }
    let mut refs = Vec::new();
    for name in functions {
        refs.push(lookup_function(&fns, name, lattice_path)?);
    }
    let (dom, label) = load_domain(domain, &lattice, inputs)?;
    let result = correctness_kernel(&dom, &refs);
    let removed: Vec<String> = dom
        .image()
        .iter()
        .filter(|&e| !result.kernel.image().contains(e))
        .map(|e| lattice.name(e))
        .collect();
    let image = element_names(&lattice, result.kernel.image());

    let oracle_verdict = if oracle {
        let reference =
            kernel_oracle(&dom, &refs).map_err(|e| CliError::Semantic(e.to_string()))?;
        Some(if reference == result.kernel { "agrees" } else { "differs" })
    } else {
        None
    };

    let mut text_out = format!(
        "kernel over {}, domain {label}, functions {}\n",
        display(lattice_path),
        functions.join(", ")
    );
    let _ = writeln!(text_out, "image: {}", image.join(", "));
    if removed.is_empty() {
        text_out.push_str("removed: (none)\n");
    } else {
        let _ = writeln!(text_out, "removed: {}", removed.join(", "));
    }
    if let Some(v) = oracle_verdict {
        let _ = writeln!(text_out, "oracle: {v}");
    }
    if let Some(p) = dot {
        write_file(p, &domain_dot(&result.kernel))?;
        let _ = writeln!(text_out, "dot written to {}", display(p));
    }

    let generators: BTreeMap<&String, Value> = result
        .per_function
        .iter()
        .map(|(name, g)| {
            let preimages: Vec<Value> = g
                .max_preimages
                .iter()
                .map(|(y, maxima)| {
                    json!([lattice.name(*y), element_names(&lattice, maxima)])
                })
                .collect();
            (
                name,
                json!({
                    "bca_image": element_names(&lattice, &g.bca_image),
                    "max_preimages": preimages,
                }),
            )
        })
        .collect();
    Ok(Report {
        command: "kernel",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "functions": functions,
            "image": image,
            "removed": removed,
            "oracle": oracle_verdict,
            "generators": generators,
        }),
    })
}

fn partition_kernel_command(
    system: &Path,
    iterate: bool,
    dot: Option<&Path>,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(system, inputs)?;
    let (ts, p) = load_system(&text, system)?;
    let p = require_blocks(p, system)?;

    let mut text_out =
        format!("system: {} states, {} blocks\n", ts.state_count(), p.block_count());
    let mut merged_json = Vec::new();
    let mut current = p.clone();
    let mut rounds = 0;
    loop {
        let kr = partition_kernel(&ts, &current);
        rounds += 1;
        let merged: Vec<(Vec<String>, String)> = kr
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.len() > 1)
            .map(|(gi, g)| {
                (
                    g.iter().map(|&b| current.render_block(b, &ts)).collect(),
                    kr.partition.render_block(gi, &ts),
                )
            })
            .collect();
        let line = if merged.is_empty() {
            "(none)".to_string()
        } else {
            merged
                .iter()
                .map(|(from, to)| format!("{{{}}} -> {to}", from.join(",")))
                .collect::<Vec<_>>()
                .join("; ")
        };
        if iterate {
            let _ = writeln!(text_out, "round {rounds} merged: {line}");
        } else {
            let _ = writeln!(text_out, "merged: {line}");
        }
        for (from, to) in &merged {
            merged_json.push(json!({"round": rounds, "group": from, "into": to}));
        }
        let stable = kr.partition.block_count() == current.block_count();
        current = kr.partition;
        if !iterate || stable {
            break;
        }
    }
    let _ = writeln!(text_out, "result: {} ({} blocks)", current.render(&ts), current.block_count());
    if iterate {
        let _ = writeln!(text_out, "rounds: {rounds}");
    }
    if let Some(path) = dot {
        write_file(path, &ats_dot(&build_ats(&ts, &current), &ts))?;
        let _ = writeln!(text_out, "dot written to {}", display(path));
    }

    let result_blocks: Vec<String> =
        (0..current.block_count()).map(|b| current.render_block(b, &ts)).collect();
    Ok(Report {
        command: "partition-kernel",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "states": ts.state_count(),
            "blocks_before": p.block_count(),
            "blocks_after": current.block_count(),
            "rounds": rounds,
            "merged": merged_json,
            "result": result_blocks,
        }),
    })
}

fn cegar_command(
    system: &Path,
    heuristic: HeuristicArg,
    max_iters: Option<usize>,
    dot_dir: Option<&Path>,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(system, inputs)?;
    let (ts, p) = load_system(&text, system)?;
    let p = require_blocks(p, system)?;
    let h = match heuristic {
        HeuristicArg::Basic => Heuristic::Basic,
        HeuristicArg::Egas => Heuristic::Egas,
    };
    let outcome =
        cegar_loop(&ts, &p, h, max_iters).map_err(|e| CliError::Semantic(e.to_string()))?;

    let mut text_out = String::new();
    let mut iterations_json = Vec::new();
    for (i, rec) in outcome.trace.iter().enumerate() {
        let path_render = render_path(&rec.partition, &ts, &rec.path);
        let (step_text, step_json) = match rec.step {
            RefineStep::Heuristic { k } => (
                format!("split at k={k} ({})", h.label()),
                json!({"kind": "heuristic", "k": k}),
            ),
            RefineStep::EndpointInit { block } => {
                let b = rec.partition.render_block(block, &ts);
                (format!("endpoint split at init block {b}"), json!({"kind": "endpoint-init", "block": b}))
            }
            RefineStep::EndpointError { block } => {
                let b = rec.partition.render_block(block, &ts);
                (format!("endpoint split at error block {b}"), json!({"kind": "endpoint-error", "block": b}))
            }
        };
        let _ = writeln!(
            text_out,
            "iteration {}: {} blocks, path {path_render}, {step_text}",
            i + 1,
            rec.partition.block_count()
        );
        iterations_json.push(json!({
            "blocks": rec.partition.block_count(),
            "path": path_render,
            "step": step_json,
        }));
    }
    let _ = writeln!(
        text_out,
        "final: {} ({} blocks)",
        outcome.final_partition.render(&ts),
        outcome.final_partition.block_count()
    );

    if let Some(dir) = dot_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io { path: display(dir), message: e.to_string() })?;
        for (i, rec) in outcome.trace.iter().enumerate() {
            let path = dir.join(format!("iter{:02}.dot", i + 1));
            write_file(&path, &ats_dot(&build_ats(&ts, &rec.partition), &ts))?;
        }
        let final_path = dir.join("final.dot");
        write_file(&final_path, &ats_dot(&build_ats(&ts, &outcome.final_partition), &ts))?;
        let _ = writeln!(
            text_out,
            "wrote {} dot files to {}",
            outcome.trace.len() + 1,
            display(dir)
        );
    }

    let (verdict_line, verdict_json, cex_json) = match &outcome.verdict {
        Verdict::Safe => ("SAFE".to_string(), "SAFE", Value::Null),
        Verdict::RealCounterexample(states) => {
            let labels: Vec<String> = states.iter().map(|&s| ts.label(s).to_string()).collect();
            (format!("COUNTEREXAMPLE {}", labels.join(",")), "COUNTEREXAMPLE", json!(labels))
        }
        Verdict::Exhausted => ("EXHAUSTED".to_string(), "EXHAUSTED", Value::Null),
    };
    let _ = writeln!(text_out, "{verdict_line}");

    let final_blocks: Vec<String> = (0..outcome.final_partition.block_count())
        .map(|b| outcome.final_partition.render_block(b, &ts))
        .collect();
    Ok(Report {
        command: "cegar",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "heuristic": h.label(),
            "iterations": iterations_json,
            "final": final_blocks,
            "verdict": verdict_json,
            "counterexample": cex_json,
        }),
    })
}

fn preimage_command(
    system: &Path,
    coarse_path: Option<&Path>,
    max_len: usize,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Report, CliError> {
    let text = read_file(system, inputs)?;
    let (ts, fine) = load_system(&text, system)?;
    let fine = require_blocks(fine, system)?;
    let coarse = match coarse_path {
        Some(cp) => {
            let ctext = read_file(cp, inputs)?;
            let (cts, cpart) = load_system(&ctext, cp)?;
            let same = cts.state_count() == ts.state_count()
                && cts.edges() == ts.edges()
                && (0..ts.state_count()).all(|s| cts.label(s) == ts.label(s))
                && *cts.init() == *ts.init()
                && *cts.error() == *ts.error();
            if !same {
                return Err(CliError::Semantic(format!(
                    "{}: describes a different system than {}",
                    display(cp),
                    display(system)
                )));
            }
            require_blocks(cpart, cp)?
        }
        None => partition_kernel(&ts, &fine).partition,
    };
    let report = spurious_preimage_check(&ts, &fine, &coarse, max_len)
        .map_err(|e| CliError::Semantic(e.to_string()))?;

    let mut text_out = format!(
        "system: {} states; fine {} blocks, coarse {} blocks, walks up to length {max_len}\n",
        ts.state_count(),
        fine.block_count(),
        coarse.block_count()
    );
    let _ = writeln!(
        text_out,
        "walks checked: {}, spurious: {}, witnesses: {}, violations: {}",
        report.walks_checked,
        report.spurious_checked,
        report.witnesses.len(),
        report.violations.len()
    );
    for v in &report.violations {
        let _ = writeln!(text_out, "violation: {}", render_path(&coarse, &ts, v));
    }
    let _ = writeln!(text_out, "result: {}", if report.holds { "holds" } else { "violated" });

    let witnesses_json: Vec<Value> = report
        .witnesses
        .iter()
        .map(|(cw, fw)| json!([render_path(&coarse, &ts, cw), render_path(&fine, &ts, fw)]))
        .collect();
    let violations_json: Vec<String> =
        report.violations.iter().map(|v| render_path(&coarse, &ts, v)).collect();
    Ok(Report {
        command: "spurious-preimage-check",
        inputs: std::mem::take(inputs),
        text: text_out,
        result: json!({
            "states": ts.state_count(),
            "fine_blocks": fine.block_count(),
            "coarse_blocks": coarse.block_count(),
            "max_len": max_len,
            "walks_checked": report.walks_checked,
            "spurious_checked": report.spurious_checked,
            "witnesses": witnesses_json,
            "violations": violations_json,
            "holds": report.holds,
        }),
    })
}

fn predabs_command(
    fixture: &str,
    abstraction: AbstractionArg,
    modulus: usize,
    inputs: BTreeMap<String, String>,
) -> Result<Report, CliError> {
    if fixture != "loop" && fixture != "foo" {
        return Err(CliError::Semantic(format!(
            "unknown fixture {fixture:?}; built-in fixture: loop"
        )));
    }
    let (abs, abs_label) = match abstraction {
        AbstractionArg::Boolean => (LoopAbstraction::Boolean, "boolean"),
        AbstractionArg::Kernel => (LoopAbstraction::Kernel, "kernel"),
        AbstractionArg::Cartesian => (LoopAbstraction::Cartesian, "cartesian"),
    };
    let fx = loop_fixture(modulus).map_err(|e| CliError::Semantic(e.to_string()))?;
    let outcome = verify_loop(abs, modulus).map_err(|e| CliError::Semantic(e.to_string()))?;

    let mut text_out = format!("fixture loop, modulus {modulus}, abstraction {abs_label}\n");
    let mut tables_json = BTreeMap::new();
    for stmt in [&fx.s1, &fx.s2] {
        let table = bca_post_table(&fx.preds, stmt);
        let cells: Vec<String> = (0..fx.preds.vector_count())
            .map(|v| {
                format!("{} -> {}", fx.preds.render_mask(1 << v), fx.preds.render_mask(table[v]))
            })
            .collect();
        let _ = writeln!(text_out, "table {}: {}", stmt.name(), cells.join(", "));
        let rows: Vec<Vec<String>> = (0..fx.preds.vector_count())
            .map(|v| vec![fx.preds.render_mask(1 << v), fx.preds.render_mask(table[v])])
            .collect();
        tables_json.insert(stmt.name().to_string(), rows);
    }

    let mut kernel_image_json = Value::Null;
    let (stages, lfp, exit): (Vec<String>, String, String) = match &outcome.run {
        LoopRun::Boolean(run) => (
            run.stages.iter().map(|&m| fx.preds.render_mask(m)).collect(),
            fx.preds.render_mask(run.lfp),
            fx.preds.render_mask(run.exit),
        ),
        LoopRun::Kernel { run, image } => {
            let rendered: Vec<String> = image.iter().map(|&m| fx.preds.render_mask(m)).collect();
            let _ = writeln!(text_out, "kernel image: {}", rendered.join(", "));
            kernel_image_json = json!(rendered);
            (
                run.stages.iter().map(|&m| fx.preds.render_mask(m)).collect(),
                fx.preds.render_mask(run.lfp),
                fx.preds.render_mask(run.exit),
            )
        }
        LoopRun::Cartesian(run) => (
            run.stages.iter().map(|e| e.render()).collect(),
            run.lfp.render(),
            run.exit.render(),
        ),
    };
    let _ = writeln!(text_out, "stages: {}", stages.join(" -> "));
    let _ = writeln!(text_out, "lfp: {lfp}");
    let _ = writeln!(text_out, "exit: {exit}");
    let _ = writeln!(text_out, "verdict: {}", outcome.verdict.label());

    Ok(Report {
        command: "predabs",
        inputs,
        text: text_out,
        result: json!({
            "fixture": "loop",
            "modulus": modulus,
            "abstraction": abs_label,
            "tables": tables_json,
            "kernel_image": kernel_image_json,
            "stages": stages,
            "lfp": lfp,
            "exit": exit,
            "verdict": outcome.verdict.label(),
        }),
    })
}
