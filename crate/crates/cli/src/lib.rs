//! The `crosstl` command-line driver. [`run`] takes the registry explicitly so
//! embedders can add backends before the command line is interpreted.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crosstl::backend::{CodegenError, OutputUnit, Registry, TargetLanguage};
use crosstl::conformance::{color_enabled, list_targets_text, render_table, run_conformance, to_jsonl, Execution};
use crosstl::import::{detect_language, import_sources, module_name_for, DetectedLanguage, SourceLanguage};
use crosstl::interp::{parse_value, ComputeIds, Interpreter};
use crosstl::ir::{has_errors, Diagnostic, ShaderModule};
use crosstl::semantics::check_module;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "crosstl", version, about = "Translate CrossGL shaders and kernels to other GPU languages")]
#[command(subcommand_required = false, arg_required_else_help = true)]
struct Cli {
    /// Print the registered targets and exit.
    #[arg(long)]
    list_targets: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Translate source files to a target language.
    Translate(TranslateArgs),
    /// Print the registered targets, one per line.
    ListTargets,
    /// Evaluate a function with the reference interpreter.
    Eval(EvalArgs),
    /// Run the conformance matrix over a directory of .cgl programs.
    Conformance(ConformanceArgs),
}

#[derive(clap::Args, Debug)]
struct TranslateArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    target: String,
    #[arg(short, long, default_value = ".")]
    output: PathBuf,
    /// Source language; detected from the file extension when omitted.
    #[arg(long, value_enum)]
    from: Option<Source>,
    /// GLSL only: one file per stage, or all stages in one file.
    #[arg(long, value_enum)]
    emit_mode: Option<EmitMode>,
    /// Treat warnings as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    file: PathBuf,
    function: String,
    /// Arguments written as CrossGL expressions, e.g. `vec3(0.0, 0.0, 1.0)`.
    #[arg(allow_negative_numbers = true)]
    args: Vec<String>,
    #[arg(long, value_parser = parse_triple)]
    local_id: Option<[i32; 3]>,
    #[arg(long, value_parser = parse_triple)]
    group_id: Option<[i32; 3]>,
    #[arg(long, value_parser = parse_triple)]
    group_size: Option<[i32; 3]>,
}

#[derive(clap::Args, Debug)]
struct ConformanceArgs {
    dir: PathBuf,
    /// Where to write one JSON record per cell.
    #[arg(long, default_value = "conformance.jsonl")]
    jsonl: PathBuf,
    /// Run cells one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Source {
    Crossgl,
    Glsl,
    Cuda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
enum EmitMode {
    #[default]
    Separate,
    Combined,
}

fn parse_triple(s: &str) -> Result<[i32; 3], String> {
    let parts: Vec<i32> =
        s.split(',').map(|p| p.trim().parse::<i32>().map_err(|e| format!("{p}: {e}"))).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three comma-separated integers".to_string())
}

/// Output and error streams of one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Runs one command line against `registry` and returns the exit status.
pub fn run<I, T>(args: I, registry: &Registry, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(io.err, "{text}") } else { write!(io.out, "{text}") };
            return code;
        }
    };
    if cli.list_targets {
        let _ = write!(io.out, "{}", list_targets_text(registry));
        return EXIT_OK;
    }
    match cli.command {
        Some(Command::Translate(args)) => translate(args, registry, io),
        Some(Command::ListTargets) => {
            let _ = write!(io.out, "{}", list_targets_text(registry));
            EXIT_OK
        }
        Some(Command::Eval(args)) => eval(args, io),
        Some(Command::Conformance(args)) => conformance(args, registry, io),
        None => EXIT_USAGE,
    }
}

fn usage(io: &mut Io, message: impl std::fmt::Display) -> i32 {
    let _ = writeln!(io.err, "error: {message}");
    EXIT_USAGE
}

fn report(io: &mut Io, diags: &[Diagnostic]) {
    for d in diags {
        let _ = writeln!(io.err, "{d}");
    }
}

fn codegen_diagnostic(e: &CodegenError, file: &str) -> String {
    match e {
        CodegenError::UnsupportedConstruct { location, construct, target, reason } => {
            format!("{location}: error: {construct} is not supported in {target}: {reason}")
        }
        other => format!("{file}: error: {other}"),
    }
}

/// Reads, imports and checks input files. `Err` holds the exit status.
fn load(inputs: &[PathBuf], from: Option<Source>, strict: bool, io: &mut Io) -> Result<ShaderModule, i32> {
    let mut language = from.map(|s| match s {
        Source::Crossgl => SourceLanguage::CrossGL,
        Source::Glsl => SourceLanguage::Glsl,
        Source::Cuda => SourceLanguage::Cuda,
    });
    if language.is_none() {
        for path in inputs {
            let file = path.display().to_string();
            let detected = match detect_language(&file) {
                Ok(DetectedLanguage::Source(l)) => l,
                Ok(DetectedLanguage::Target(t)) => return Err(usage(io, format!("{file}: {t} files cannot be read"))),
                Err(e) => return Err(usage(io, e)),
            };
            match language {
                Some(l) if l != detected => {
                    return Err(usage(io, format!("inputs mix {l} and {detected}")));
                }
                _ => language = Some(detected),
            }
        }
    }
    let language = language.unwrap_or(SourceLanguage::CrossGL);
    let mut files = Vec::new();
    for path in inputs {
        match std::fs::read_to_string(path) {
            Ok(text) => files.push((path.display().to_string(), text)),
            Err(e) => return Err(usage(io, format!("{}: {e}", path.display()))),
        }
    }
    let name = module_name_for(&files[0].0);
    let mut imported = match import_sources(&name, language, &files) {
        Ok(i) => i,
        Err(e) => {
            report(io, &[e.to_diagnostic()]);
            return Err(EXIT_DIAGNOSTICS);
        }
    };
    let mut diags = imported.warnings;
    diags.extend(check_module(&mut imported.module));
    report(io, &diags);
    if has_errors(&diags) || (strict && !diags.is_empty()) {
        return Err(EXIT_DIAGNOSTICS);
    }
    Ok(imported.module)
}

/// Names an output after the first input file rather than the module.
fn output_name(unit: &OutputUnit, module: &str, stem: &str) -> String {
    match unit.suggested_filename.strip_prefix(module) {
        Some(rest) => format!("{stem}{rest}"),
        None => unit.suggested_filename.clone(),
    }
}

fn translate(args: TranslateArgs, registry: &Registry, io: &mut Io) -> i32 {
    let Some(generator) = registry.find(&args.target) else {
        return usage(io, format!("unknown target '{}'", args.target));
    };
    let target = generator.target();
    let emit = args.emit_mode.unwrap_or_default();
    if args.emit_mode.is_some() && target != TargetLanguage::Glsl {
        return usage(io, format!("--emit-mode applies to GLSL output only, not {target}"));
    }
    let module = match load(&args.inputs, args.from, args.strict, io) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let first = args.inputs[0].display().to_string();
    let units = match generator.generate(&module) {
        Ok(u) => u,
        Err(e) => {
            let _ = writeln!(io.err, "{}", codegen_diagnostic(&e, &first));
            return EXIT_DIAGNOSTICS;
        }
    };
    let stem = module_name_for(&first);
    let mut files: Vec<(String, String)> =
        units.iter().map(|u| (output_name(u, &module.name, &stem), u.text.clone())).collect();
    if emit == EmitMode::Combined && files.len() > 1 {
        let text =
            files.iter().map(|(name, text)| format!("// ---- {name} ----\n{text}")).collect::<Vec<_>>().join("\n");
        files = vec![(format!("{stem}{}", target.extension(None)), text)];
    }
    if let Err(e) = std::fs::create_dir_all(&args.output) {
        return usage(io, format!("{}: {e}", args.output.display()));
    }
    for (name, text) in files {
        let path = args.output.join(name);
        if let Err(e) = std::fs::write(&path, text) {
            let _ = writeln!(io.err, "{}: error: {e}", path.display());
            return EXIT_DIAGNOSTICS;
        }
        let _ = writeln!(io.out, "wrote {}", path.display());
    }
    EXIT_OK
}

fn eval(args: EvalArgs, io: &mut Io) -> i32 {
    let module = match load(std::slice::from_ref(&args.file), None, false, io) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let Some(f) = module.find_function(&args.function) else {
        return usage(io, format!("no function '{}' in {}", args.function, args.file.display()));
    };
    if f.params.len() != args.args.len() {
        return usage(io, format!("{} takes {} arguments, {} given", f.name, f.params.len(), args.args.len()));
    }
    let mut values = Vec::new();
    for (p, text) in f.params.iter().zip(&args.args) {
        match parse_value(text, &p.ty, &module) {
            Ok(v) => values.push(v),
            Err(e) => return usage(io, format!("argument {}: {e}", p.name)),
        }
    }
    let mut interp = Interpreter::new(&module);
    if args.local_id.is_some() || args.group_id.is_some() || args.group_size.is_some() {
        interp = interp.with_compute(ComputeIds {
            local_id: args.local_id.unwrap_or([0; 3]),
            group_id: args.group_id.unwrap_or([0; 3]),
            group_size: args.group_size.unwrap_or([1; 3]),
        });
    }
    match interp.call_mut(&args.function, &mut values) {
        Ok(Some(v)) => {
            let _ = writeln!(io.out, "{v}");
            EXIT_OK
        }
        Ok(None) => {
            for (p, v) in f.params.iter().zip(&values) {
                let _ = writeln!(io.out, "{} = {v}", p.name);
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            EXIT_DIAGNOSTICS
        }
    }
}

fn conformance(args: ConformanceArgs, registry: &Registry, io: &mut Io) -> i32 {
    if !args.dir.is_dir() {
        return usage(io, format!("{} is not a directory", args.dir.display()));
    }
    let execution = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = match run_conformance(&args.dir, registry, execution) {
        Ok(r) => r,
        Err(e) => return usage(io, format!("{}: {e}", args.dir.display())),
    };
    let _ = write!(io.out, "{}", render_table(&report, color_enabled()));
    if let Err(e) = write_file(&args.jsonl, &to_jsonl(&report)) {
        let _ = writeln!(io.err, "{}: error: {e}", args.jsonl.display());
        return EXIT_DIAGNOSTICS;
    }
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_DIAGNOSTICS
    }
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)
}
