//! `frobenius`: scenario file in, certified JSON report and artifacts out.
//!
//! Exit status is 0 when every check passes, 1 on a certification failure
//! and 2 when the input does not match the command's schema. The thread
//! count of the parallel parts follows `RAYON_NUM_THREADS`.

mod payload;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use frobenius_core::connection::{
    flatness_residual, pairing_extension_check, pairing_residuals, reduce_flatness, structure_connection,
    ConnectionPencil,
};
use frobenius_core::frobstruct::{check_filtration, check_ftype_axioms};
use frobenius_core::reconstruct::{
    compare_germs, euler_check, frobenius_via_unfolding, generation_certificate, h2_reconstruct, restriction_report,
    wdvv_check, FrobeniusGermData, InitialData,
};
use frobenius_core::report::Report;
use frobenius_core::series::format_rat;
use frobenius_core::unfold::{first_column_report, solve, solve_traced, universal_unfold, UnfoldProblem};
use frobenius_core::{Error, Result};

use payload::{
    rationals, CompareInput, PairingInput, PolySource, ReconstructInput, StructureConnectionInput, StructureSource,
    UniversalInput,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Jacobi,
    H2check,
    FtypeCheck,
    StructureConnection,
    Unfold,
    UniversalUnfold,
    Reconstruct,
    Compare,
    Wdvv,
    PairingExtend,
}

#[derive(Debug, Parser)]
#[command(
    name = "frobenius",
    version,
    about = "Certified computations on Frobenius type structures"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON payload for the command.
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving report.json, summary.txt and artifacts.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Power series order bound N.
    #[arg(long, default_value_t = 4)]
    order: i32,
    /// Order bound K in the loop variable.
    #[arg(long = "z-order", default_value_t = 4)]
    z_order: usize,
    /// Write per-degree intermediate matrices (unfold).
    #[arg(long)]
    trace: bool,
    /// Build the germ along both constructions and compare (reconstruct).
    #[arg(long = "both-paths")]
    both_paths: bool,
}

#[derive(Default)]
struct Outcome {
    checks: BTreeMap<String, Report>,
    results: Map<String, Value>,
    artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn check(&mut self, name: &str, r: Report) {
        self.checks.insert(name.to_string(), r);
    }

    fn result(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        self.results.insert(key.to_string(), to_value(&v)?);
        Ok(())
    }

    fn artifact(&mut self, file: &str, v: &impl Serialize) -> Result<()> {
        self.artifacts.push((file.to_string(), to_json(v)?));
        Ok(())
    }

    fn passed(&self) -> bool {
        self.checks.values().all(Report::is_empty)
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Structural(e.to_string()))
}

fn to_json(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Structural(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Structural(_) | Error::Parse(_) | Error::Precondition(_) => 2,
        Error::Certification(_) | Error::Singular(_) => 1,
    }
}

fn run(cli: &Cli, text: &str) -> Result<Outcome> {
    if cli.order < 0 {
        return Err(Error::Structural("--order must be nonnegative".into()));
    }
    if cli.trace && cli.command != Command::Unfold {
        return Err(Error::Structural("--trace applies to unfold only".into()));
    }
    if cli.both_paths && cli.command != Command::Reconstruct {
        return Err(Error::Structural("--both-paths applies to reconstruct only".into()));
    }
    let n = cli.order;
    let k = cli.z_order;
    let mut out = Outcome::default();
    match cli.command {
        Command::Jacobi => {
            let alg = parse::<PolySource>(text)?.algebra()?;
            let s = alg.summary();
            let int_dims: Vec<usize> = alg.integer_degrees().into_iter().map(|k| alg.dim(k)).collect();
            out.result("mu", s.mu)?;
            out.result("weights", &s.weights)?;
            out.result("integer_degree_dims", int_dims)?;
            out.result("graded_dims", &s.graded_dims)?;
            out.result("exponents", &s.exponents)?;
        }
        Command::H2check => {
            let alg = parse::<PolySource>(text)?.algebra()?;
            let h2 = alg.h2_generation_check();
            let mut rep = Report::new();
            let mut codims = BTreeMap::new();
            for e in h2.entries.iter().filter(|e| e.codim > 0) {
                rep.push(
                    "h2_generation",
                    format!(
                        "degree {}: products span {} of {} (codimension {})",
                        e.q, e.spanned, e.dim, e.codim
                    ),
                );
                codims.insert(e.q.to_string(), e.codim);
            }
            out.result("entries", &h2.entries)?;
            out.result("codimensions", codims)?;
            out.check("h2_generation", rep);
        }
        Command::FtypeCheck => {
            let src: StructureSource = parse(text)?;
            let f = src.build(n)?;
            out.result("rank", f.rank())?;
            out.result("base_dim", f.base_dim())?;
            out.check("ftype_axioms", check_ftype_axioms(&f));
            if let Some(d) = src.filtration(n)? {
                out.check("filtration", check_filtration(&d));
            }
            out.artifact("ftype.json", &f)?;
        }
        Command::StructureConnection => {
            let input: StructureConnectionInput = parse(text)?;
            let f = input.structure.build(n)?;
            let (p, r) = structure_connection(&f, input.weight)?;
            out.check("flatness", flatness_residual(&p)?.to_report());
            out.check("pairing", pairing_residuals(&p, &r, k)?);
            out.check("pairing_symmetry", r.symmetry_report());
            out.artifact("pencil.json", &p)?;
            out.artifact("pairing.json", &r)?;
        }
        Command::Unfold => {
            let mut problem: UnfoldProblem = parse(text)?;
            problem.order = n;
            let p = if cli.trace {
                let (p, steps) = solve_traced(&problem)?;
                out.artifact("trace.json", &steps)?;
                p
            } else {
                solve(&problem)?
            };
            pencil_checks(&mut out, &p)?;
            out.check("first_column", first_column_report(&p, &problem)?);
            out.artifact("pencil.json", &p)?;
        }
        Command::UniversalUnfold => {
            let input: UniversalInput = parse(text)?;
            let zeta = rationals(&input.zeta)?;
            let uu = universal_unfold(&input.pencil, &zeta, n)?;
            let mut gc = Report::new();
            if !uu.gc.spans() {
                gc.push("generation", uu.gc.summary());
            }
            let mut ic = Report::new();
            if !uu.ic.injective {
                ic.push(
                    "injectivity",
                    format!("{} relations among C_i(0) zeta", uu.ic.kernel.rows()),
                );
            }
            out.check("generation", gc);
            out.check("injectivity", ic);
            pencil_checks(&mut out, &uu.pencil)?;
            out.result("generators", uu.gc.summary())?;
            out.artifact("unfolding.json", &uu)?;
        }
        Command::Reconstruct => {
            let input: ReconstructInput = parse(text)?;
            let init = input.initial_data(n + 1)?;
            out.result("charge", format_rat(&init.charge()?))?;
            if let Ok(cert) = generation_certificate(&init) {
                out.result("generation", cert)?;
            }
            if cli.both_paths {
                let via_unfolding = frobenius_via_unfolding(&init, n)?;
                let via_h2 = h2_reconstruct(&init, n)?;
                germ_checks(&mut out, "unfolding", &via_unfolding, &init)?;
                germ_checks(&mut out, "h2", &via_h2, &init)?;
                let mut agree = compare_germs(&via_unfolding, &via_h2);
                let (a, b) = (to_json(&via_unfolding)?, to_json(&via_h2)?);
                if agree.is_empty() && a != b {
                    agree.push("serialization", "germ files differ byte-wise");
                }
                out.check("paths_agree", agree);
                germ_results(&mut out, &via_unfolding)?;
                out.artifacts.push(("germ_unfolding.json".into(), a));
                out.artifacts.push(("germ_h2.json".into(), b));
            } else {
                let germ = frobenius_via_unfolding(&init, n)?;
                germ_checks(&mut out, "unfolding", &germ, &init)?;
                germ_results(&mut out, &germ)?;
                out.artifact("germ.json", &germ)?;
            }
        }
        Command::Compare => {
            let mut input: CompareInput = parse(text)?;
            input.first.normalize();
            input.second.normalize();
            out.check("germs_agree", compare_germs(&input.first, &input.second));
        }
        Command::Wdvv => {
            let germ: FrobeniusGermData = parse(text)?;
            out.check("wdvv", wdvv_check(&germ));
            out.check("euler", euler_check(&germ, &germ.charge));
        }
        Command::PairingExtend => {
            let input: PairingInput = parse(text)?;
            let ext = pairing_extension_check(&input.pencil, &input.pairing, k)?;
            out.result("pole_coefficient_zero", ext.pole_coefficient.is_zero())?;
            out.check("pairing_extension", ext.report.clone());
            out.artifact("pairing.json", &ext.pairing)?;
        }
    }
    Ok(out)
}

fn pencil_checks(out: &mut Outcome, p: &ConnectionPencil) -> Result<()> {
    out.check("flatness", flatness_residual(p)?.to_report());
    out.check("reduced_system", reduce_flatness(p)?.to_report());
    Ok(())
}

fn germ_checks(out: &mut Outcome, label: &str, germ: &FrobeniusGermData, init: &InitialData) -> Result<()> {
    out.check(&format!("{label}.wdvv"), wdvv_check(germ));
    out.check(&format!("{label}.euler"), euler_check(germ, &germ.charge));
    out.check(&format!("{label}.restriction"), restriction_report(germ, init)?);
    Ok(())
}

fn germ_results(out: &mut Outcome, germ: &FrobeniusGermData) -> Result<()> {
    out.result("dim", germ.dim)?;
    out.result("degrees", germ.degrees.iter().map(format_rat).collect::<Vec<_>>())?;
    out.result(
        "euler_shift",
        germ.euler_shift.iter().map(format_rat).collect::<Vec<_>>(),
    )?;
    out.result("potential", germ.potential.to_string())?;
    Ok(())
}

fn command_name(c: Command) -> String {
    c.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn compose(cli: &Cli, outcome: &std::result::Result<Outcome, Error>) -> (u8, Value, String) {
    let name = command_name(cli.command);
    let (code, status) = match outcome {
        Ok(o) if o.passed() => (0, "pass"),
        Ok(_) => (1, "certification_failure"),
        Err(e) if exit_code(e) == 1 => (1, "certification_failure"),
        Err(_) => (2, "schema_error"),
    };
    let mut report = json!({
        "command": name,
        "input": cli.input.display().to_string(),
        "order": cli.order,
        "z_order": cli.z_order,
        "status": status,
    });
    let mut lines = vec![
        format!("command  {name}"),
        format!("input    {}", cli.input.display()),
        format!("bounds   N = {}, K = {}", cli.order, cli.z_order),
    ];
    match outcome {
        Ok(o) => {
            let checks: Map<String, Value> = o.checks.iter().map(|(k, r)| (k.clone(), json!(r.violations))).collect();
            report["checks"] = Value::Object(checks);
            report["results"] = Value::Object(o.results.clone());
            for (k, v) in &o.results {
                let s = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                lines.push(format!("{k}: {}", shorten(&s)));
            }
            for (k, r) in &o.checks {
                if r.is_empty() {
                    lines.push(format!("check {k}: pass"));
                } else {
                    lines.push(format!("check {k}: FAIL [{}]", r.ids().join(", ")));
                    for v in &r.violations {
                        lines.push(format!("  {}: {}", v.id, shorten(&v.detail)));
                    }
                }
            }
        }
        Err(e) => {
            report["error"] = json!({ "kind": error_kind(e), "message": e.to_string() });
            lines.push(format!("error: {e}"));
        }
    }
    lines.push(format!("status   {status}"));
    (code, report, lines.join("\n") + "\n")
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Structural(_) => "structural",
        Error::Parse(_) => "parse",
        Error::Precondition(_) => "precondition",
        Error::Certification(_) => "certification",
        Error::Singular(_) => "singular",
    }
}

fn shorten(s: &str) -> String {
    if s.chars().count() > 200 {
        let head: String = s.chars().take(200).collect();
        format!("{head}...")
    } else {
        s.to_string()
    }
}

/// Writes `contents` to `dir/name` through a temporary file in `dir`.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match std::fs::read_to_string(&cli.input) {
        Ok(text) => run(&cli, &text),
        Err(e) => Err(Error::Structural(format!("cannot read {}: {e}", cli.input.display()))),
    };
    let (code, report, summary) = compose(&cli, &outcome);
    print!("{summary}");
    let mut files = Vec::new();
    if let Ok(o) = &outcome {
        files.extend(o.artifacts.iter().cloned());
    }
    match to_json(&report) {
        Ok(r) => files.push(("report.json".into(), r)),
        Err(e) => eprintln!("cannot serialize report: {e}"),
    }
    files.push(("summary.txt".into(), summary));
    if let Err(e) = std::fs::create_dir_all(&cli.output) {
        eprintln!("cannot create {}: {e}", cli.output.display());
        return ExitCode::from(2);
    }
    for (name, contents) in &files {
        if let Err(e) = write_atomic(&cli.output, name, contents) {
            eprintln!("cannot write {name}: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
