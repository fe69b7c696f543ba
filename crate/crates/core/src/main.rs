//! Command-line interface: check, pushout, drop-params, soften, diff.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use softlf::diff::{diff_diagrams, DiffMode};
use softlf::morphism::NameScheme;
use softlf::paramdrop::{choose_positions, remove_positions};
use softlf::prelude;
use softlf::printer::{print_logrel, print_morphism, print_theory};
use softlf::soften::{report_lines, soften_diagram, softenable_theories};
use softlf::theory::{check_diagram, Diagram, DiagramItem};
use softlf::{parser, Error, Result};

#[derive(Parser)]
#[command(
    name = "softlf",
    version,
    about = "A minimal logical framework with theory morphisms, logical \
             relations, and a softening pipeline that turns hard-typed \
             encodings into soft-typed ones"
)]
struct Cli {
    /// Do not load the built-in prelude (HTyped, STyped, TE, TP).
    #[arg(long, global = true)]
    no_prelude: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and verify one or more diagram files.
    Check {
        /// Files to check, in order; later files may use earlier ones.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Push theories out along a morphism of the diagram.
    Pushout {
        file: PathBuf,
        /// The morphism to push out along.
        #[arg(long)]
        morph: String,
        /// Theories to push out (with everything they include).
        #[arg(long, value_delimiter = ',', required = true)]
        roots: Vec<String>,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Remove argument positions that are unused everywhere in the file.
    DropParams {
        file: PathBuf,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Soften hard-typed theories: erase types from terms, drop parameters
    /// the erasure made unused, and add typing witnesses.
    Soften {
        file: PathBuf,
        /// Theories (or morphisms, standing for their endpoints) to soften;
        /// defaults to every theory that builds on the hard-typed base.
        #[arg(long, value_delimiter = ',')]
        roots: Vec<String>,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also emit the verification witnesses: the natural morphisms into
        /// the softened theories and the extended logical relations.
        #[arg(long)]
        emit_witnesses: bool,
    },
    /// Compare two diagram files structurally.
    Diff {
        left: PathBuf,
        right: PathBuf,
        /// Equivalence used on expressions.
        #[arg(long, value_enum, default_value_t = Modulo::Alpha)]
        modulo: Modulo,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Modulo {
    /// Up to renaming of bound variables.
    Alpha,
    /// Up to renaming and beta conversion.
    AlphaBeta,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Load the prelude (unless disabled), then the given files, in order.
/// Returns the diagram and the names of the prelude's own items.
fn load(files: &[PathBuf], no_prelude: bool) -> Result<(Diagram, HashSet<String>)> {
    let mut d = Diagram::new();
    if !no_prelude {
        match std::env::var_os("SOFTEN_PRELUDE") {
            Some(path) => {
                let path = PathBuf::from(path);
                let src = std::fs::read_to_string(&path)?;
                parser::parse_file_into(&mut d, &path.to_string_lossy(), &src)?;
            }
            None => prelude::load_prelude_into(&mut d)?,
        }
    }
    let prelude_names: HashSet<String> =
        d.items.iter().map(|i| i.name().to_string()).collect();
    for f in files {
        let src = std::fs::read_to_string(f)
            .map_err(|e| Error::Other(format!("cannot read {}: {e}", f.display())))?;
        parser::parse_file_into(&mut d, &f.to_string_lossy(), &src)?;
    }
    Ok((d, prelude_names))
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Error::Other(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn print_items(d: &Diagram, items: &[DiagramItem]) -> String {
    let blocks: Vec<String> = items
        .iter()
        .map(|item| match item {
            DiagramItem::Theory(t) => print_theory(d, t),
            DiagramItem::Morphism(m) => print_morphism(d, m),
            DiagramItem::Logrel(r) => print_logrel(d, r),
        })
        .collect();
    blocks.join("\n")
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Check { files } => {
            let (d, _) = load(&files, cli.no_prelude)?;
            check_diagram(&d)?;
            let theories = d.theories().count();
            let morphisms = d.morphisms().count();
            let relations = d.items.iter().filter(|i| matches!(i, DiagramItem::Logrel(_))).count();
            println!("ok: {theories} theories, {morphisms} morphisms, {relations} relations");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Pushout { file, morph, roots, output } => {
            let (d, _) = load(std::slice::from_ref(&file), cli.no_prelude)?;
            check_diagram(&d)?;
            let out =
                softlf::morphism::pushout_diagram(&d, &morph, &roots, NameScheme::Via)?;
            let mut work = d;
            for item in &out.items {
                work.push(item.clone())?;
            }
            check_diagram(&work)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for dd in &out.dropped {
                eprintln!("dropped: {dd}");
            }
            emit(&output, &print_items(&work, &out.items))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::DropParams { file, output } => {
            let (d, prelude_names) = load(std::slice::from_ref(&file), cli.no_prelude)?;
            check_diagram(&d)?;
            let positions = choose_positions(&d)?;
            let cleaned = remove_positions(&d, &positions)?;
            check_diagram(&cleaned)?;
            for p in &positions {
                eprintln!("removed parameter {p}");
            }
            let user_items: Vec<DiagramItem> = cleaned
                .items
                .iter()
                .filter(|i| !prelude_names.contains(i.name()))
                .cloned()
                .collect();
            emit(&output, &print_items(&cleaned, &user_items))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Soften { file, roots, output, emit_witnesses } => {
            let (d, prelude_names) = load(std::slice::from_ref(&file), cli.no_prelude)?;
            check_diagram(&d)?;
            let roots = if roots.is_empty() {
                let auto = softenable_theories(&d, &prelude_names);
                if auto.is_empty() {
                    return Err(Error::Other(format!(
                        "nothing to soften: no theory in {} builds on `{}`",
                        file.display(),
                        prelude::HARD_BASE
                    )));
                }
                auto
            } else {
                roots
            };
            let out = soften_diagram(&d, &roots)?;
            for line in report_lines(&out.report) {
                eprintln!("{line}");
            }
            let is_witness = |item: &DiagramItem| match item {
                DiagramItem::Theory(_) => false,
                DiagramItem::Morphism(m) => out.natural.values().any(|n| *n == m.name),
                DiagramItem::Logrel(_) => true,
            };
            let items: Vec<DiagramItem> = out
                .items
                .iter()
                .filter(|i| emit_witnesses || !is_witness(i))
                .cloned()
                .collect();
            emit(&output, &print_items(&out.work, &items))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Diff { left, right, modulo } => {
            let (a, _) = load(std::slice::from_ref(&left), cli.no_prelude)?;
            let (b, _) = load(std::slice::from_ref(&right), cli.no_prelude)?;
            let mode = match modulo {
                Modulo::Alpha => DiffMode::Alpha,
                Modulo::AlphaBeta => DiffMode::AlphaBeta,
            };
            let report = diff_diagrams(&a, &b, mode);
            if report.is_empty() {
                println!("identical");
                Ok(ExitCode::SUCCESS)
            } else {
                for line in &report.lines {
                    println!("{line}");
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}
