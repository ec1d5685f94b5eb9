use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use gml_core::c1::{self, C1Error};
use gml_core::minimize::{minimize, MinimizeError};
use gml_core::solver::{OracleTable, MAX_ORACLE_SIZE};
use gml_core::tiling::{self, TilingError, TilingInstance};
use gml_core::{
    decide, normalize, parse, to_formula, Execution, FormulaError, FrameClass, FrameClasses,
    KripkeError, OracleResult, PointedStructure, SolverOptions, Verdict,
};

const EXIT_YES: u8 = 0;
const EXIT_NO: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_ERROR: u8 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("formula: {0}")]
    Formula(#[from] FormulaError),
    #[error("model: {0}")]
    Model(#[from] KripkeError),
    #[error("frame classes: {0}")]
    Frames(String),
    #[error("{0}")]
    C1(#[from] C1Error),
    #[error("minimize: {0}")]
    Minimize(#[from] MinimizeError),
    #[error("tiling: {0}")]
    Tiling(#[from] TilingError),
    #[error("{0}")]
    Usage(String),
}

/// Satisfiability, model checking and model minimization for graded modal logic.
#[derive(Debug, Parser)]
#[command(name = "gml", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide satisfiability over a frame class.
    Solve {
        #[command(flatten)]
        frames: FramesArg,
        #[command(flatten)]
        input: InputArg,
        /// Write the model (JSON, or DOT when the path ends in `.dot`).
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Largest model size searched; `0` searches up to the full size bound.
        #[arg(long, default_value_t = gml_core::solver::DEFAULT_CAP)]
        cap: usize,
        #[command(flatten)]
        exec: ExecArg,
    },
    /// Evaluate a formula at a world of a model.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArg,
        /// World name; defaults to the model's designated world.
        #[arg(long)]
        world: Option<String>,
    },
    /// Print the renaming normal form.
    Nf {
        #[command(flatten)]
        input: InputArg,
    },
    /// Print the one-variable counting sentence for a frame class.
    C1 {
        #[command(flatten)]
        frames: FramesArg,
        #[command(flatten)]
        input: InputArg,
        /// Print the sentence without the extra reflexive/symmetric conjunct.
        #[arg(long)]
        textbook: bool,
    },
    /// Shrink a transitive model of a formula to a bounded one.
    Minimize {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArg,
        /// Output path; stdout when absent.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Print the formula encoding a tiling instance.
    TilingGen {
        #[arg(long)]
        tiling: PathBuf,
    },
    /// Exhaustive search over all structures up to a size.
    Oracle {
        #[command(flatten)]
        frames: FramesArg,
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        exec: ExecArg,
    },
}

#[derive(Debug, Args)]
struct FramesArg {
    /// Comma-separated subset of rfl,ser,sym,tr,eucl; empty means all frames.
    #[arg(long, default_value = "")]
    frames: String,
}

impl FramesArg {
    fn classes(&self) -> Result<FrameClasses, CliError> {
        self.frames.parse().map_err(|e| CliError::Frames(format!("{e}")))
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct InputArg {
    /// File holding the formula; `-` reads stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    /// The formula itself.
    #[arg(long)]
    formula: Option<String>,
}

impl InputArg {
    fn formula(&self) -> Result<gml_core::Formula, CliError> {
        let text = match (&self.formula, &self.input) {
            (Some(f), _) => f.clone(),
            (None, Some(p)) if p.as_os_str() == "-" => {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s).map_err(|source| CliError::Io {
                    path: "<stdin>".into(),
                    source,
                })?;
                s
            }
            (None, Some(p)) => read(p)?,
            (None, None) => return Err(CliError::Usage("no formula given".into())),
        };
        Ok(parse(text.trim())?)
    }
}

#[derive(Debug, Args)]
struct ExecArg {
    /// Run the search on one thread.
    #[arg(long)]
    sequential: bool,
}

impl ExecArg {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_model(path: &Path, m: &PointedStructure) -> Result<(), CliError> {
    let text = if path.extension().is_some_and(|e| e == "dot") {
        m.to_dot()
    } else {
        m.to_json()
    };
    write(path, &text)
}

fn load_model(path: &Path) -> Result<PointedStructure, CliError> {
    Ok(PointedStructure::from_json(&read(path)?)?)
}

fn run(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Solve {
            frames,
            input,
            model_out,
            cap,
            exec,
        } => {
            let f = input.formula()?;
            let opts = SolverOptions {
                cap: (cap > 0).then_some(cap),
                execution: exec.execution(),
            };
            match decide(&f, frames.classes()?, opts) {
                Verdict::Sat(m) => {
                    println!("SAT");
                    eprintln!("model: {} worlds", m.structure.len());
                    if let Some(p) = model_out {
                        write_model(&p, &m)?;
                    }
                    Ok(EXIT_YES)
                }
                Verdict::Unsat => {
                    println!("UNSAT");
                    Ok(EXIT_NO)
                }
                Verdict::Unknown(why) => {
                    println!("UNKNOWN");
                    eprintln!("{why}");
                    Ok(EXIT_UNKNOWN)
                }
            }
        }
        Command::Check { model, input, world } => {
            let f = input.formula()?;
            let m = load_model(&model)?;
            let w = match world {
                Some(name) => m.structure.world(&name)?,
                None => m.world,
            };
            let holds = m.structure.check(w, &f);
            println!("{}", if holds { "TRUE" } else { "FALSE" });
            Ok(if holds { EXIT_YES } else { EXIT_NO })
        }
        Command::Nf { input } => {
            let nf = normalize(&input.formula()?);
            println!("{}", to_formula(&nf));
            eprintln!("lower constraints: {}, upper constraints: {}", nf.ell(), nf.m());
            Ok(EXIT_YES)
        }
        Command::C1 { frames, input, textbook } => {
            let f = input.formula()?;
            // The Euclidean condition is built into the translation itself.
            let classes = frames.classes()?.without(FrameClass::Eucl);
            let alpha = if textbook {
                c1::build_alpha(&f, classes)?
            } else {
                c1::translate(&f, classes)?.alpha
            };
            println!("{alpha}");
            Ok(EXIT_YES)
        }
        Command::Minimize {
            model,
            input,
            model_out,
        } => {
            let f = input.formula()?;
            let m = load_model(&model)?;
            if !m.check(&f) {
                return Err(CliError::Usage("the model does not satisfy the formula".into()));
            }
            let nf = normalize(&f);
            let expanded = PointedStructure::new(nf.expand_model(&m.structure), m.world);
            let small = minimize(&expanded, &nf)?;
            let out = PointedStructure::new(nf.strip_model(&small.structure), small.world);
            eprintln!("{} worlds -> {} worlds", m.structure.len(), out.structure.len());
            match model_out {
                Some(p) => write_model(&p, &out)?,
                None => println!("{}", out.to_json()),
            }
            Ok(EXIT_YES)
        }
        Command::TilingGen { tiling: path } => {
            let inst = TilingInstance::from_json(&read(&path)?)?;
            println!("{}", tiling::reduction(&inst));
            Ok(EXIT_YES)
        }
        Command::Oracle {
            frames,
            input,
            max_size,
            model_out,
            exec,
        } => {
            if max_size > MAX_ORACLE_SIZE {
                return Err(CliError::Usage(format!("--max-size is limited to {MAX_ORACLE_SIZE}")));
            }
            let f = input.formula()?;
            let classes = frames.classes()?;
            if max_size * f.letters().len() > 40 {
                return Err(CliError::Usage("too many letters for exhaustive search".into()));
            }
            match OracleTable::build(&f, max_size, exec.execution()).result(classes) {
                OracleResult::Sat(m) => {
                    println!("SAT");
                    if let Some(p) = model_out {
                        write_model(&p, &m)?;
                    }
                    Ok(EXIT_YES)
                }
                OracleResult::NoneUpTo(k) => {
                    println!("NONE-UP-TO {k}");
                    Ok(EXIT_NO)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_YES });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
