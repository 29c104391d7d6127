use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use branchflip::branching::enumerate_branchings;
use branchflip::builders::{self, random_branching};
use branchflip::io::{cycles_json, DotGraph, Document, SchemaError};
use branchflip::moves::{all_bflips, classify_bflip};
use branchflip::spine::{cycle_space_basis, dual_spine, positive_cycle_exists};
use branchflip::transit::{self, TransitError, TransitReport};
use branchflip::verify::{verify_theorems, CorpusSpec};
use branchflip::{Branching, SurfaceClass};

const EXIT_VERIFY: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => EXIT_VERIFY,
            _ => EXIT_INPUT,
        }
    }
}

fn input_error(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Parser)]
#[command(name = "branchflip", version, about = "Branched ideal triangulations of surfaces")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Inversions,
    StrategyB,
    Complete,
}

#[derive(clap::Args)]
struct Source {
    /// JSON document, `-` for stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Named build.
    #[arg(long, conflicts_with_all = ["input", "genus", "crosscaps"])]
    build: Option<String>,
    /// Orientable surface of this genus.
    #[arg(long, conflicts_with = "crosscaps")]
    genus: Option<u32>,
    /// Non-orientable surface with this many crosscaps.
    #[arg(long)]
    crosscaps: Option<u32>,
    /// Vertex count for --genus/--crosscaps.
    #[arg(long, default_value_t = 1)]
    vertices: usize,
    /// Remove the trapped cap of odd crosscap chains.
    #[arg(long)]
    trapped_free: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a branched triangulation.
    Build {
        #[command(flatten)]
        source: Source,
        /// Random walk of this many branched flips from the built instance.
        #[arg(long, default_value_t = 0)]
        walk: usize,
        /// Replace the branching by a random one.
        #[arg(long)]
        random_branching: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate all branchings of the triangulation.
    Branchings {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        count_only: bool,
    },
    /// Classify every legal branched flip.
    ClassifyFlips {
        #[command(flatten)]
        source: Source,
    },
    /// Connect two branchings of the same triangulation.
    Connect {
        #[command(flatten)]
        source: Source,
        /// Target document.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Complete)]
        method: Method,
        /// Accept a connection to the totally inverted target.
        #[arg(long)]
        symmetrized: bool,
    },
    /// Bounded exploration of the branched flip graph from seed documents.
    Census {
        #[arg(long = "seed", required = true)]
        seeds: Vec<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Largest triangle count explored.
        #[arg(long)]
        max_triangles: Option<usize>,
        /// Identify states up to vertex relabelling.
        #[arg(long)]
        free_labels: bool,
    },
    /// Dual train track.
    Dual {
        #[command(flatten)]
        source: Source,
        /// Include a basis of the switching cycles.
        #[arg(long)]
        cycles: bool,
        /// Include a positive switching cycle, if one exists.
        #[arg(long)]
        cone: bool,
    },
    /// Run the claim checks over a corpus.
    VerifyTheorems {
        /// Corpus specification; the built-in corpus otherwise.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Inversion graph in Graphviz format.
    ExportDot {
        #[command(flatten)]
        source: Source,
    },
}

fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(input_error)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_doc(path: &Path) -> Result<Document, CliError> {
    Ok(Document::parse(&read_text(path)?)?)
}

impl Source {
    fn surface(&self) -> Option<SurfaceClass> {
        match (self.genus, self.crosscaps) {
            (Some(g), _) => Some(SurfaceClass::orientable(g, self.vertices)),
            (None, Some(k)) => Some(SurfaceClass::nonorientable(k, self.vertices)),
            _ => None,
        }
    }

    fn document(&self) -> Result<Document, CliError> {
        if let Some(p) = &self.input {
            return read_doc(p);
        }
        if let Some(name) = &self.build {
            let (_, b) = builders::named(name).map_err(input_error)?;
            return Ok(Document::from_branching(&b).with_meta("build", json!(name)));
        }
        let s = self.surface().ok_or_else(|| input_error("give --input, --build, --genus or --crosscaps"))?;
        let d = builders::distinguished(s).map_err(input_error)?;
        let b = if self.trapped_free { builders::trapped_free_variant(&d).map_err(input_error)? } else { d.reference };
        Ok(Document::from_branching(&b).with_meta("build", json!(builders::slug(&s))))
    }

    fn branching(&self) -> Result<Branching, CliError> {
        Ok(self.document()?.branching()?)
    }
}

fn transit_error(e: TransitError) -> CliError {
    match e {
        TransitError::TrappedEdgesPresent(_)
        | TransitError::DifferentOwner
        | TransitError::NotOrientable
        | TransitError::Branching(_) => CliError::Input(e.to_string()),
        other => CliError::Verify(other.to_string()),
    }
}

enum Output {
    Json(Value),
    Text(String),
}

fn run(command: Command) -> Result<(Output, bool), CliError> {
    let ok = |v: Value| Ok((Output::Json(v), true));
    match command {
        Command::Build { source, walk, random_branching: rb, seed } => {
            let doc = source.document()?;
            let mut b = doc.branching()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if walk > 0 {
                b = builders::random_walk(&b, walk, &mut rng).map_err(input_error)?;
            }
            if rb {
                b = random_branching(b.triangulation(), &mut rng);
            }
            let class = b.triangulation().classify();
            let mut out = Document::from_branching(&b).with_meta("surface", json!(class.to_string()));
            out.metadata.extend(doc.metadata);
            ok(serde_json::to_value(out).expect("document"))
        }
        Command::Branchings { source, count_only } => {
            let t = source.document()?.triangulation()?;
            let all = enumerate_branchings(&t);
            if count_only {
                return ok(json!({ "count": all.len() }));
            }
            let list: Vec<_> = all.iter().map(|b| b.orientation().to_vec()).collect();
            ok(json!({ "count": all.len(), "branchings": list }))
        }
        Command::ClassifyFlips { source } => {
            let b = source.branching()?;
            let t = b.triangulation();
            let mut flips = Vec::new();
            for (e, c) in all_bflips(&b) {
                let class = classify_bflip(&b, e, c).map_err(input_error)?;
                flips.push(json!({ "edge": e.0, "choice": c, "class": class, "ambiguous_edge": b.is_ambiguous(e) }));
            }
            let trapped: Vec<_> = t.trapped_edges().iter().map(|e| e.0).collect();
            ok(json!({ "trapped_edges": trapped, "flips": flips }))
        }
        Command::Connect { source, target, method, symmetrized } => {
            let b = source.branching()?;
            let c = read_doc(&target)?.branching()?.rehome(b.triangulation().clone()).map_err(input_error)?;
            let report: TransitReport = match method {
                Method::Inversions => transit::connect_by_inversions(&b, &c, symmetrized),
                Method::StrategyB => transit::strategy_b_connect(&b, &c),
                Method::Complete => transit::complete_transit(&b, &c),
            }
            .map_err(transit_error)?;
            let verified = report.verify(&b, &c);
            let mut v = serde_json::to_value(&report).expect("report");
            v["verified"] = json!(verified);
            Ok((Output::Json(v), verified))
        }
        Command::Census { seeds, budget, max_triangles, free_labels } => {
            let seeds = seeds.iter().map(|p| Ok(read_doc(p)?.branching()?)).collect::<Result<Vec<_>, CliError>>()?;
            let limit = max_triangles.unwrap_or_else(|| seeds.iter().map(|b| b.triangulation().triangle_count()).max().unwrap_or(0));
            let (summary, exhausted) = match transit::bounded_bflip_census_with(&seeds, budget, limit, !free_labels) {
                Ok(s) => (s, false),
                Err(TransitError::BudgetExhausted(s)) => (*s, true),
                Err(e) => return Err(transit_error(e)),
            };
            let mut v = serde_json::to_value(&summary).expect("summary");
            v["budget_exhausted"] = json!(exhausted);
            v["kind"] = json!("evidence");
            ok(v)
        }
        Command::Dual { source, cycles, cone } => {
            let b = source.branching()?;
            let track = dual_spine(&b);
            let mut v = json!({ "track": track, "loops": track.loops() });
            let basis = cycle_space_basis(&track);
            v["dimension"] = json!(basis.len());
            if cycles {
                v["cycles"] = cycles_json(&basis);
            }
            if cone {
                v["positive_cycle"] = match positive_cycle_exists(&track) {
                    Some(z) => cycles_json(&[z])[0].clone(),
                    None => Value::Null,
                };
            }
            ok(v)
        }
        Command::VerifyTheorems { corpus } => {
            let spec = match corpus {
                Some(p) => serde_json::from_str::<CorpusSpec>(&read_text(&p)?).map_err(input_error)?,
                None => CorpusSpec::desk(),
            };
            let report = verify_theorems(&spec);
            let passed = report.verified_failures() == 0;
            Ok((Output::Json(serde_json::to_value(&report).expect("report")), passed))
        }
        Command::ExportDot { source } => {
            let t = source.document()?.triangulation()?;
            Ok((Output::Text(DotGraph::from_inversion(&transit::inversion_graph(&t)).to_dot()), true))
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BRANCHFLIP_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| input_error(format!("BRANCHFLIP_THREADS: not a number: {v}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(input_error)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli.command));
    match result {
        Ok((out, passed)) => {
            let text = match out {
                Output::Json(v) => serde_json::to_string_pretty(&v).expect("json") + "\n",
                Output::Text(s) => s,
            };
            let written = match &cli.output {
                Some(p) => fs::write(p, text).map_err(|e| e.to_string()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY)
            }
        }
        Err(e) => {
            let body = json!({ "error": e.to_string(), "exit_code": e.code() });
            eprintln!("{}", serde_json::to_string_pretty(&body).expect("json"));
            ExitCode::from(e.code())
        }
    }
}
