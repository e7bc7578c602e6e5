//! Argument parsing and the subcommands.
//!
//! Exit codes: 0 success, 1 the model was rejected (parse or validation
//! errors, engine failure), 2 usage errors (bad arguments, unreadable files).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use vdmn_core::engine::{derived_development, sensitivity, what_if, DEFAULT_EPSILON};
use vdmn_core::model::ResultType;
use vdmn_core::render::{to_dot, to_svg, to_svg_with_values, RenderOptions};
use vdmn_core::validate::{coverage_report, has_errors};
use vdmn_core::{
    apply_tree_cut, emit_text, evaluate, extract_subtree, validate, Bindings, EngineError, FunctionRegistry, Model,
    NodeValue, Severity, ValidationDiagnostic,
};

use crate::registry::{load_file, model_files, LoadError, Loaded, ModelRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vdmn", version, about = "Value driver tree modelling toolkit")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct EvalArgs {
    file: PathBuf,
    /// Value for a leaf, as ID=VALUE. Repeatable.
    #[arg(long = "bind", value_name = "ID=VALUE", value_parser = parse_assignment)]
    bind: Vec<(String, f64)>,
    /// Result type to evaluate: actual, budget, forecast, plan or any other name.
    #[arg(long, default_value = "actual")]
    result_type: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model against the modelling rules.
    Validate { file: PathBuf },
    /// Compute every indicator.
    Eval(EvalArgs),
    /// Compare the model before and after changing some drivers.
    Whatif {
        #[command(flatten)]
        eval: EvalArgs,
        /// Scenario value for a driver, as ID=VALUE. Repeatable.
        #[arg(long = "set", value_name = "ID=VALUE", value_parser = parse_assignment, required = true)]
        set: Vec<(String, f64)>,
    },
    /// Rank drivers by elasticity of the root.
    Sensitivity {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Draw the model as Graphviz DOT or SVG.
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        show_operators: bool,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        show_levels: bool,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        show_clusters: bool,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        show_content: bool,
        /// Show evaluated values and derived trends (SVG only).
        #[arg(long)]
        values: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count which modelling constructs a set of models uses.
    Coverage {
        /// Model files or directories searched recursively.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Exit 1 unless every construct is used.
        #[arg(long)]
        require_complete: bool,
    },
    /// Split off the branch below a node into its own model.
    Extract {
        file: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Replace the branch below a node by a tree-cut reference.
    Cut {
        file: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long)]
        label: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the models of a directory over HTTP.
    Serve {
        #[arg(env = "VDMN_MODEL_DIR")]
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (id, v) = s.split_once('=').ok_or_else(|| format!("expected ID=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok((id.trim().to_string(), v))
}

/// Output sinks and the JSON switch shared by all subcommands.
struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    json: bool,
}

impl Io<'_> {
    fn emit_json<T: Serialize>(&mut self, value: &T) {
        let _ = writeln!(self.out, "{}", serde_json::to_string_pretty(value).expect("serializable"));
    }

    fn fail(&mut self, code: i32, kind: &str, message: &str) -> i32 {
        if self.json {
            self.emit_json(&json!({"error": {"kind": kind, "message": message}}));
        } else {
            let _ = writeln!(self.err, "error: {message}");
        }
        code
    }

    fn load_error(&mut self, e: LoadError) -> i32 {
        match e {
            LoadError::Parse { path, diagnostics } => {
                if self.json {
                    self.emit_json(&json!({"file": path, "parse_errors": diagnostics}));
                } else {
                    for d in &diagnostics {
                        let _ = writeln!(self.err, "{d}");
                    }
                }
                EXIT_REJECTED
            }
            LoadError::Interchange { .. } => self.fail(EXIT_REJECTED, "interchange", &e.to_string()),
            LoadError::DuplicateName { .. } => self.fail(EXIT_REJECTED, "duplicate_name", &e.to_string()),
            LoadError::Io { .. } => self.fail(EXIT_USAGE, "io", &e.to_string()),
        }
    }

    fn engine_error(&mut self, e: EngineError) -> i32 {
        let code = match e {
            EngineError::InvalidEpsilon(_) => EXIT_USAGE,
            _ => EXIT_REJECTED,
        };
        self.fail(code, e.kind(), &e.to_string())
    }

    fn print_diagnostics(&mut self, loaded: &Loaded, diags: &[ValidationDiagnostic]) {
        for d in &loaded.diagnostics {
            let _ = writeln!(self.err, "{d}");
        }
        for d in diags {
            let _ = writeln!(self.err, "{}", d.render(loaded.spans.as_ref()));
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let mut io = Io {
        out,
        err,
        json: cli.json,
    };
    match cli.command {
        Command::Validate { file } => cmd_validate(&mut io, &file),
        Command::Eval(args) => cmd_eval(&mut io, &args),
        Command::Whatif { eval, set } => cmd_whatif(&mut io, &eval, &set),
        Command::Sensitivity { eval, epsilon } => cmd_sensitivity(&mut io, &eval, epsilon),
        Command::Render {
            file,
            format,
            show_operators,
            show_levels,
            show_clusters,
            show_content,
            values,
            out,
        } => {
            let opts = RenderOptions {
                show_operators,
                show_levels,
                show_clusters,
                show_content,
                ..Default::default()
            };
            cmd_render(&mut io, &file, format, &opts, values, out.as_deref())
        }
        Command::Coverage {
            paths,
            require_complete,
        } => cmd_coverage(&mut io, &paths, require_complete),
        Command::Extract { file, node, out_dir } => cmd_extract(&mut io, &file, &node, &out_dir),
        Command::Cut {
            file,
            node,
            label,
            out,
        } => cmd_cut(&mut io, &file, &node, &label, out.as_deref()),
        Command::Serve { dir, port, host } => cmd_serve(&mut io, &dir, SocketAddr::new(host, port)),
    }
}

fn cmd_validate(io: &mut Io, file: &Path) -> i32 {
    let loaded = match load_file(file) {
        Ok(l) => l,
        Err(e) => return io.load_error(e),
    };
    let diags = validate(&loaded.model);
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    if io.json {
        io.emit_json(&json!({
            "file": file,
            "model": loaded.model.name(),
            "errors": errors,
            "warnings": diags.len() - errors,
            "diagnostics": diags,
        }));
    } else {
        io.print_diagnostics(&loaded, &diags);
        let _ = writeln!(
            io.out,
            "{}: {} error(s), {} warning(s)",
            loaded.model.name(),
            errors,
            diags.len() - errors
        );
    }
    if errors > 0 {
        EXIT_REJECTED
    } else {
        EXIT_OK
    }
}

/// Loads a model for computation; validation errors refuse it.
fn load_checked(io: &mut Io, file: &Path) -> Result<Model, i32> {
    let loaded = load_file(file).map_err(|e| io.load_error(e))?;
    let diags = validate(&loaded.model);
    if has_errors(&diags) {
        if io.json {
            io.emit_json(&json!({
                "error": {"kind": "validation", "message": "model has validation errors"},
                "diagnostics": diags,
            }));
        } else {
            io.print_diagnostics(&loaded, &diags);
        }
        return Err(EXIT_REJECTED);
    }
    Ok(loaded.model)
}

fn bindings_of(pairs: &[(String, f64)], rt: &ResultType) -> Bindings {
    let mut b = Bindings::new();
    for (id, v) in pairs {
        b.set(id.clone(), rt.clone(), *v);
    }
    b
}

fn show(v: Option<NodeValue>) -> String {
    match v {
        Some(NodeValue::Number(x)) => format!("{x}"),
        Some(NodeValue::NotComputed { not_computed }) => {
            format!("n/a ({})", serde_json::to_value(not_computed).unwrap().as_str().unwrap_or(""))
        }
        None => "-".to_string(),
    }
}

fn cmd_eval(io: &mut Io, args: &EvalArgs) -> i32 {
    let model = match load_checked(io, &args.file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let rt = ResultType::from_name(&args.result_type);
    let valuation = match evaluate(&model, &bindings_of(&args.bind, &rt), &FunctionRegistry::builtin(), &rt) {
        Ok(v) => v,
        Err(e) => return io.engine_error(e),
    };
    if io.json {
        io.emit_json(&valuation);
    } else {
        let width = model.indicators().map(|i| i.id.len()).max().unwrap_or(0);
        for id in model.topological_order().iter().rev() {
            let _ = writeln!(io.out, "{id:<width$}  {}", show(valuation.get(id)));
        }
    }
    EXIT_OK
}

fn cmd_whatif(io: &mut Io, args: &EvalArgs, set: &[(String, f64)]) -> i32 {
    let model = match load_checked(io, &args.file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let rt = ResultType::from_name(&args.result_type);
    let report = match what_if(
        &model,
        &bindings_of(&args.bind, &rt),
        &bindings_of(set, &rt),
        &FunctionRegistry::builtin(),
        &rt,
    ) {
        Ok(r) => r,
        Err(e) => return io.engine_error(e),
    };
    if io.json {
        io.emit_json(&report);
    } else {
        for e in &report.entries {
            let pct = e.pct_delta.map(|p| format!(" ({p:+.2}%)")).unwrap_or_default();
            let delta = e.abs_delta.map(|d| format!("{d:+}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                io.out,
                "{}: {} -> {}  {delta}{pct}",
                e.id,
                show(Some(e.base)),
                show(Some(e.new))
            );
        }
    }
    EXIT_OK
}

fn cmd_sensitivity(io: &mut Io, args: &EvalArgs, epsilon: f64) -> i32 {
    let model = match load_checked(io, &args.file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let rt = ResultType::from_name(&args.result_type);
    let report = match sensitivity(
        &model,
        &bindings_of(&args.bind, &rt),
        &FunctionRegistry::builtin(),
        &rt,
        epsilon,
    ) {
        Ok(r) => r,
        Err(e) => return io.engine_error(e),
    };
    if io.json {
        io.emit_json(&report);
    } else {
        let _ = writeln!(io.out, "root {} = {} (epsilon {})", report.root, report.root_value, report.epsilon);
        let _ = writeln!(io.out, "{:>4}  {:<20} {:>12} {:>14}  controllable", "rank", "driver", "elasticity", "delta");
        for (i, e) in report.entries.iter().enumerate() {
            let el = e.elasticity.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                io.out,
                "{:>4}  {:<20} {:>12} {:>14.6}  {}",
                i + 1,
                e.driver,
                el,
                e.delta,
                if e.controllable { "yes" } else { "no" }
            );
        }
    }
    EXIT_OK
}

fn write_output(io: &mut Io, text: &str, out: Option<&Path>) -> Result<(), i32> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io.fail(EXIT_USAGE, "io", &format!("{}: {e}", path.display()))),
        None => {
            let _ = io.out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn cmd_render(io: &mut Io, file: &Path, format: Format, opts: &RenderOptions, values: bool, out: Option<&Path>) -> i32 {
    let loaded = match load_file(file) {
        Ok(l) => l,
        Err(e) => return io.load_error(e),
    };
    let model = &loaded.model;
    let text = match format {
        Format::Dot => Ok(to_dot(model, opts)),
        Format::Svg if values => {
            let empty = Bindings::new();
            match evaluate(model, &empty, &FunctionRegistry::builtin(), &ResultType::Actual) {
                Ok(v) => to_svg_with_values(model, opts, &v, &derived_development(model, &v, &empty)),
                Err(e) => return io.engine_error(e),
            }
        }
        Format::Svg => to_svg(model, opts),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_REJECTED, "layout_overflow", &e.to_string()),
    };
    if io.json {
        let format = match format {
            Format::Dot => "dot",
            Format::Svg => "svg",
        };
        if let Some(path) = out {
            if let Err(code) = write_output(io, &text, Some(path)) {
                return code;
            }
            io.emit_json(&json!({"format": format, "out": path}));
        } else {
            io.emit_json(&json!({"format": format, "content": text}));
        }
        return EXIT_OK;
    }
    match write_output(io, &text, out) {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

fn cmd_coverage(io: &mut Io, paths: &[PathBuf], require_complete: bool) -> i32 {
    let mut models = vec![];
    for root in paths {
        let files = match model_files(root) {
            Ok(f) => f,
            Err(e) => return io.load_error(e),
        };
        for file in files {
            match load_file(&file) {
                Ok(l) => models.push(l.model),
                Err(e) => return io.load_error(e),
            }
        }
    }
    let report = match coverage_report(&models) {
        Ok(r) => r,
        Err(e) => return io.fail(EXIT_USAGE, "invalid_argument", &e.to_string()),
    };
    if io.json {
        io.emit_json(&report);
    } else {
        let _ = writeln!(
            io.out,
            "{}/{} constructs used across {} model(s)",
            report.used(),
            report.usage.len(),
            report.models
        );
        for (c, n) in &report.usage {
            let _ = writeln!(io.out, "  {:<28} {n}", c.tag());
        }
        if !report.unused.is_empty() {
            let unused: Vec<&str> = report.unused.iter().map(|c| c.tag()).collect();
            let _ = writeln!(io.out, "unused: {}", unused.join(", "));
        }
    }
    if require_complete && !report.is_complete() {
        EXIT_REJECTED
    } else {
        EXIT_OK
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_extract(io: &mut Io, file: &Path, node: &str, out_dir: &Path) -> i32 {
    let loaded = match load_file(file) {
        Ok(l) => l,
        Err(e) => return io.load_error(e),
    };
    let split = match extract_subtree(&loaded.model, node) {
        Ok(s) => s,
        Err(e) => return io.fail(EXIT_REJECTED, "transform", &e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        return io.fail(EXIT_USAGE, "io", &format!("{}: {e}", out_dir.display()));
    }
    let stem = file_safe(loaded.model.name());
    let remainder_path = out_dir.join(format!("{stem}.vdt"));
    let extracted_path = out_dir.join(format!("{stem}__{}.vdt", file_safe(node)));
    for (path, model) in [(&remainder_path, &split.remainder), (&extracted_path, &split.extracted)] {
        if let Err(code) = write_output(io, &emit_text(model), Some(path)) {
            return code;
        }
    }
    if io.json {
        io.emit_json(&json!({
            "boundary": split.boundary,
            "remainder": {"name": split.remainder.name(), "file": remainder_path},
            "extracted": {"name": split.extracted.name(), "file": extracted_path},
        }));
    } else {
        let _ = writeln!(io.out, "{}", remainder_path.display());
        let _ = writeln!(io.out, "{}", extracted_path.display());
    }
    EXIT_OK
}

fn cmd_cut(io: &mut Io, file: &Path, node: &str, label: &str, out: Option<&Path>) -> i32 {
    let loaded = match load_file(file) {
        Ok(l) => l,
        Err(e) => return io.load_error(e),
    };
    let model = match apply_tree_cut(&loaded.model, node, label) {
        Ok(m) => m,
        Err(e) => return io.fail(EXIT_REJECTED, "transform", &e.to_string()),
    };
    let text = emit_text(&model);
    if io.json && out.is_none() {
        io.emit_json(&json!({"model": model.name(), "content": text}));
        return EXIT_OK;
    }
    match write_output(io, &text, out) {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

fn cmd_serve(io: &mut Io, dir: &Path, addr: SocketAddr) -> i32 {
    let registry = match ModelRegistry::load_dir(dir) {
        Ok(r) => r,
        Err(e) => return io.load_error(e),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return io.fail(EXIT_USAGE, "io", &e.to_string()),
    };
    match runtime.block_on(crate::server::serve(registry, addr)) {
        Ok(()) => EXIT_OK,
        Err(e) => io.fail(EXIT_USAGE, "io", &format!("{addr}: {e}")),
    }
}
