use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heapdl::dl::LFormula;
use heapdl::memstruct::{load_structure, structure_to_json, validate, MemoryStructure};
use heapdl::prog::{run_path, ProgramGraph, RunOutcome};
use heapdl::syntax::{parse_formula, parse_program, parse_sl};
use heapdl::translate::{alpha, beta, tr, PartitionNaming};
use heapdl::verify::{check_edge, check_program, naming, ProgramResult, SearchOptions};
use heapdl::wp::{instrument, theta};

const INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "heapdl", version, about = "Bounded checking of content annotations on heap programs")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Args, Clone, Copy)]
struct Output {
    /// JSON output (default for verify)
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Plain text output
    #[arg(long)]
    text: bool,
}

#[derive(Subcommand)]
enum Mode {
    /// Discharge the verification condition of every edge
    Verify {
        file: PathBuf,
        /// Largest universe searched, the three Aux elements included
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edges discharged in parallel
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Only this edge, as `from:to`
        #[arg(long)]
        edge: Option<String>,
        /// Conflict budget per universe size
        #[arg(long, default_value_t = 2_000_000)]
        conflicts: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Run edge programs along a path from a structure file
    Interpret {
        file: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        /// Comma-separated `from:to` edges
        #[arg(long, default_value = "")]
        path: String,
        /// Free cells to make available to `new`
        #[arg(long)]
        reserve: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Print tr of an L formula, or α and β of a shape formula
    Translate {
        /// Program file supplying declarations and named formulas
        file: Option<PathBuf>,
        /// L formula, or `@name`
        #[arg(long, conflicts_with = "sl")]
        formula: Option<String>,
        /// Separation-logic formula
        #[arg(long)]
        sl: Option<String>,
    },
    /// Print Θ of a formula through the code of an edge
    Wp {
        file: PathBuf,
        /// Edge as `from:to`
        #[arg(long)]
        edge: String,
        /// L formula, or `@name`
        #[arg(long)]
        formula: String,
        /// Also print the instrumented program
        #[arg(long)]
        show_program: bool,
    },
    /// Check a structure file against conditions (1)-(10)
    Validate {
        structure: PathBuf,
        /// Take the vocabulary from this program file
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(INPUT_ERROR)
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<ProgramGraph, String> {
    parse_program(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn split_edge(s: &str) -> Result<(String, String), String> {
    s.split_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| format!("edge `{s}` is not of the form from:to"))
}

fn formula_arg(g: Option<&ProgramGraph>, text: &str) -> Result<LFormula, String> {
    if let Some(name) = text.strip_prefix('@') {
        return g.and_then(|g| g.formula(name)).cloned().ok_or_else(|| format!("no formula named `{name}`"));
    }
    parse_formula(text, g.map(|g| &g.vocab)).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.mode {
        Mode::Verify { file, bound, seed, jobs, edge, conflicts, out } => {
            let g = match load_program(&file) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let opts = SearchOptions { bound: bound.unwrap_or(g.options.bound), seed, conflict_limit: Some(conflicts) };
            let result = match edge {
                Some(e) => {
                    let (a, b) = match split_edge(&e) {
                        Ok(x) => x,
                        Err(e) => return fail(e),
                    };
                    check_edge(&g, &a, &b, &opts).map(|r| ProgramResult { bound: opts.bound, edges: vec![r] })
                }
                None => check_program(&g, &opts, jobs),
            };
            let result = match result {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let report = result.report(&g);
            if out.text {
                print!("{}", report.to_text());
            } else {
                println!("{}", report.to_json());
            }
            ExitCode::from(result.exit_code() as u8)
        }
        Mode::Interpret { file, structure, path, reserve, out } => {
            let g = match load_program(&file) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let text = match read(&structure) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let mut m = match load_structure(&text, Some(&g.vocab)) {
                Ok((m, _)) => m,
                Err(e) => return fail(e),
            };
            let want = reserve.unwrap_or(g.options.reserve);
            while m.reserve() < want {
                m = match m.with_fresh_pool_element(&g.vocab.fields) {
                    Ok(m) => m,
                    Err(e) => return fail(e),
                };
            }
            let edges: Result<Vec<_>, _> = path.split(',').filter(|s| !s.trim().is_empty()).map(split_edge).collect();
            let edges = match edges {
                Ok(e) => e,
                Err(e) => return fail(e),
            };
            match run_path(&g, &edges, &m) {
                Ok(RunOutcome::Result(post)) => {
                    print_structure(&post, &g, out);
                    ExitCode::SUCCESS
                }
                Ok(RunOutcome::Abort) => {
                    println!("abort");
                    ExitCode::from(1)
                }
                Ok(RunOutcome::OutOfReserve) => {
                    println!("out of reserve");
                    ExitCode::from(2)
                }
                Err(e) => fail(e),
            }
        }
        Mode::Translate { file, formula, sl } => {
            let g = match file.as_deref().map(load_program).transpose() {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            if let Some(text) = formula {
                match formula_arg(g.as_ref(), &text) {
                    Ok(f) => println!("{}", tr(&f)),
                    Err(e) => return fail(e),
                }
            } else if let Some(text) = sl {
                let phi = match parse_sl(&text) {
                    Ok(p) => p,
                    Err(e) => return fail(e),
                };
                let names = g.as_ref().map(naming).unwrap_or_else(|| PartitionNaming::new(["next".to_string()]));
                match (alpha(&phi, &names), beta(&phi, &names)) {
                    (Ok(a), Ok(b)) => {
                        println!("alpha: {}", a.formula);
                        println!("beta:  {b}");
                    }
                    (Err(e), _) | (_, Err(e)) => return fail(e),
                }
            } else {
                return fail("translate needs --formula or --sl");
            }
            ExitCode::SUCCESS
        }
        Mode::Wp { file, edge, formula, show_program } => {
            let g = match load_program(&file) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let (a, b) = match split_edge(&edge) {
                Ok(x) => x,
                Err(e) => return fail(e),
            };
            let e = match g.edge(&a, &b) {
                Ok(e) => e,
                Err(e) => return fail(e),
            };
            let f = match formula_arg(Some(&g), &formula) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            if show_program {
                match instrument(&e.code) {
                    Ok(i) => println!("{:#2}", i.body),
                    Err(e) => return fail(e),
                }
            }
            match theta(&e.code, &f, &g.vocab) {
                Ok(t) => println!("{t}"),
                Err(e) => return fail(e),
            }
            ExitCode::SUCCESS
        }
        Mode::Validate { structure, program, out } => {
            let g = match program.as_deref().map(load_program).transpose() {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let text = match read(&structure) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let file: heapdl::memstruct::StructureFile = match serde_json::from_str(&text) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let vocab = match &g {
                Some(g) => g.vocab.clone(),
                None => match file.vocabulary() {
                    Ok(v) => v,
                    Err(e) => return fail(e),
                },
            };
            let m = match file.to_structure() {
                Ok(m) => m,
                Err(e) => return fail(e),
            };
            let violations = validate(&m, &vocab);
            if out.json {
                println!("{}", serde_json::to_string_pretty(&violations).expect("serializable"));
            } else if violations.is_empty() {
                println!("valid");
            } else {
                for v in &violations {
                    println!("{v}");
                }
            }
            if violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn print_structure(m: &MemoryStructure, g: &ProgramGraph, out: Output) {
    if out.text {
        for (c, &e) in m.constants() {
            if g.vocab.is_var(c) {
                println!("{c} = {}", m.name(e));
            }
        }
        for f in &g.vocab.fields {
            if let Some(r) = m.binary(f) {
                let pairs: Vec<String> = r.pairs().map(|(a, b)| format!("{}->{}", m.name(a), m.name(b))).collect();
                println!("{f}: {}", pairs.join(" "));
            }
        }
    } else {
        println!("{}", structure_to_json(m, Some(&g.vocab)));
    }
}
