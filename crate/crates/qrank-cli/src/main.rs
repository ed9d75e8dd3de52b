//! qrank: lattices of rank functions on rooted tree quivers, canonical
//! reduced quivers, rank vectors of representations, and seeded
//! verification suites for the ring-level identities.
//!
//! Output on stdout is a pure function of the input, the seed, and the
//! printed parameters; timing goes to stderr. `verify` exits 0 when every
//! check passes, 1 on any failure, 2 when the worst verdict is an
//! exhausted search budget.

mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context as _};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qrank_core::exactlin::FieldSpec;
use qrank_core::quiver::{families, format_quiver, parse_quiver, quiver_dot, RootedTree};
use qrank_core::rep::parse_rep;
use qrank_core::{GfPrime, LatticePoint, RankContext, Rationals, DEFAULT_PRIME};

use report::Report;
use suites::{run_suite, Suite, SuiteConfig, SuiteCtx};

#[derive(Parser, Debug)]
#[command(name = "qrank", version, about = "rank functions on rooted tree quivers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Where the quiver comes from: a file or a built-in family.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Quiver file.
    #[arg(long, value_name = "FILE")]
    quiver: Option<PathBuf>,
    /// Built-in family and size: subspace N, chain N, or ext-subspace N.
    #[arg(long, num_args = 2, value_names = ["NAME", "N"])]
    family: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check that a quiver file parses and is a rooted tree.
    Validate {
        /// Quiver file.
        quiver: PathBuf,
    },
    /// The lattice of rank functions at a vertex.
    Lattice {
        #[command(flatten)]
        source: Source,
        /// Vertex name (default: the root).
        #[arg(long)]
        vertex: Option<String>,
        /// Print the element count (the default).
        #[arg(long, group = "mode")]
        count: bool,
        /// List elements as `index,"fingerprint"` CSV rows.
        #[arg(long, group = "mode")]
        list: bool,
        /// Print the Hasse diagram as DOT.
        #[arg(long, group = "mode")]
        dot: bool,
    },
    /// The canonical reduced quiver of one lattice element.
    Reduced {
        #[command(flatten)]
        source: Source,
        /// Vertex name (default: the root).
        #[arg(long)]
        vertex: Option<String>,
        /// Lattice element index, as listed by `lattice --list`.
        #[arg(long, default_value_t = 0)]
        element: usize,
        /// Print DOT instead of the quiver file format.
        #[arg(long)]
        dot: bool,
    },
    /// The rank vector of a representation, as CSV.
    Rankvec {
        #[command(flatten)]
        source: Source,
        /// Representation file; its header names the quiver and field.
        rep: PathBuf,
    },
    /// Run a verification suite and report one verdict per check.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Suite to run.
    #[arg(long, value_enum)]
    suite: Suite,
    /// Seed for all randomized checks (default: QRANK_SEED, else 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to a file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads; the report does not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Largest tensor power tried by splitting checks.
    #[arg(long, default_value_t = 4)]
    lmax: usize,
    /// Largest power tried by nilpotency checks.
    #[arg(long, default_value_t = 4)]
    kmax: usize,
    /// Instances per randomized check.
    #[arg(long, default_value_t = 10)]
    instances: usize,
    /// Largest random dimension per vertex.
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Validate { quiver } => {
            let q = load_quiver(&quiver)?;
            let (name, nv, na) = (q.name().to_string(), q.n_vertices(), q.n_arrows());
            let tree = RootedTree::new(q).map_err(|e| anyhow!("{}: {e}", quiver.display()))?;
            println!(
                "quiver {name}: {nv} vertices, {na} arrows, root {}",
                tree.vertex_name(tree.root())
            );
        }
        Cmd::Lattice { source, vertex, list, dot, .. } => {
            let tree = Arc::new(load_tree(&source)?);
            let rank = RankContext::new(tree.clone())?;
            let x = resolve_vertex(&tree, vertex.as_deref())?;
            if dot {
                print!("{}", lattice_dot(&rank, x));
            } else if list {
                println!("index,fingerprint");
                for p in rank.points_at(x) {
                    println!("{},\"{}\"", p.elem, rank.fingerprint(p));
                }
            } else {
                println!("{}", rank.size(x));
            }
        }
        Cmd::Reduced { source, vertex, element, dot } => {
            let tree = Arc::new(load_tree(&source)?);
            let rank = RankContext::new(tree.clone())?;
            let x = resolve_vertex(&tree, vertex.as_deref())?;
            if element >= rank.size(x) {
                bail!(
                    "element {element} out of range: the lattice at {} has {} elements",
                    tree.vertex_name(x),
                    rank.size(x)
                );
            }
            let red = rank.reduced_quiver(LatticePoint { vertex: x, elem: element });
            if dot {
                print!("{}", quiver_dot(red.tree.quiver()));
            } else {
                print!("{}", format_quiver(red.tree.quiver()));
                for (v, &b) in red.map.vmap.iter().enumerate() {
                    println!("# {} -> {}", red.tree.vertex_name(v), tree.vertex_name(b));
                }
            }
        }
        Cmd::Rankvec { source, rep } => {
            let tree = Arc::new(load_tree(&source)?);
            let rank = RankContext::new(tree.clone())?;
            let text = std::fs::read_to_string(&rep)
                .with_context(|| format!("reading {}", rep.display()))?;
            let file = parse_rep(&text).map_err(|e| anyhow!("{}:{e}", rep.display()))?;
            let ranks = match *file.field_spec() {
                FieldSpec::Gf(p) => {
                    let v = file
                        .realize(&tree, GfPrime::new(p)?)
                        .map_err(|e| anyhow!("{}:{e}", rep.display()))?;
                    rank.rank_vector(&v)
                }
                FieldSpec::Rationals => {
                    let v = file
                        .realize(&tree, Rationals)
                        .map_err(|e| anyhow!("{}:{e}", rep.display()))?;
                    rank.rank_vector(&v)
                }
            };
            println!("fingerprint,home,rank");
            for (p, r) in rank.points().into_iter().zip(ranks) {
                println!(
                    "\"{}\",{},{r}",
                    rank.fingerprint(p),
                    tree.vertex_name(p.vertex)
                );
            }
        }
        Cmd::Verify(args) => return cmd_verify(args),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let tree = load_tree(&args.source)?;
    let quiver_name = tree.quiver().name().to_string();
    let input_digest = report::digest(&format_quiver(tree.quiver()));
    let seed = match args.seed {
        Some(s) => s,
        None => match std::env::var("QRANK_SEED") {
            Ok(s) => s
                .trim()
                .parse()
                .with_context(|| format!("QRANK_SEED {s:?} is not an integer seed"))?,
            Err(_) => 0,
        },
    };
    let cfg = SuiteConfig {
        seed,
        jobs: args.jobs.max(1),
        l_max: args.lmax.max(1),
        k_max: args.kmax.max(1),
        instances: args.instances,
        max_dim: args.max_dim,
    };
    let ctx = SuiteCtx::new(tree)?;
    let start = Instant::now();
    let checks = run_suite(&ctx, args.suite, &cfg);
    let elapsed = start.elapsed();
    let verdict = Report::overall(&checks);
    let report = Report {
        quiver: quiver_name,
        suite: args.suite.name().to_string(),
        seed,
        parameters: json!({
            "input-digest": input_digest,
            "field": format!("gf:{DEFAULT_PRIME}"),
            "l-max": cfg.l_max,
            "k-max": cfg.k_max,
            "instances": cfg.instances,
            "max-dim": cfg.max_dim,
        }),
        checks,
        verdict,
    };
    let rendered = if args.json {
        report.to_json()
    } else {
        report.to_table()
    };
    print!("{rendered}");
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "completed {} checks in {} ms",
        report.checks.len(),
        elapsed.as_millis()
    );
    Ok(ExitCode::from(verdict.exit_code()))
}

fn load_quiver(path: &Path) -> anyhow::Result<qrank_core::Quiver> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_quiver(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn load_tree(src: &Source) -> anyhow::Result<RootedTree> {
    if let Some(path) = &src.quiver {
        let q = load_quiver(path)?;
        return RootedTree::new(q).map_err(|e| anyhow!("{}: {e}", path.display()));
    }
    let spec = src.family.as_ref().expect("clap enforces one source");
    let name = spec[0].as_str();
    let n: usize = spec[1]
        .parse()
        .with_context(|| format!("family size {:?} is not an integer", spec[1]))?;
    if n == 0 {
        bail!("family size must be at least 1");
    }
    families::by_name(name, n)
        .ok_or_else(|| anyhow!("unknown family {name:?} (known: subspace, chain, ext-subspace)"))
}

fn resolve_vertex(tree: &RootedTree, name: Option<&str>) -> anyhow::Result<usize> {
    match name {
        None => Ok(tree.root()),
        Some(s) => tree.quiver().vertex_index(s).ok_or_else(|| {
            anyhow!(
                "unknown vertex {s:?} (vertices: {})",
                tree.quiver().vertex_names().join(" ")
            )
        }),
    }
}

/// Hasse diagram of the lattice at `x`, cover edges pointing upward.
fn lattice_dot(rank: &RankContext, x: usize) -> String {
    let lat = rank.lattice(x);
    let mut s = String::new();
    s.push_str("digraph lattice {\n  rankdir = BT;\n  node [shape = box];\n");
    for e in 0..lat.n() {
        let p = LatticePoint { vertex: x, elem: e };
        s.push_str(&format!("  n{e} [label=\"{}: {}\"];\n", e, rank.fingerprint(p)));
    }
    for e in 0..lat.n() {
        for c in lat.poset().covers_up(e) {
            s.push_str(&format!("  n{e} -> n{c};\n"));
        }
    }
    s.push_str("}\n");
    s
}
