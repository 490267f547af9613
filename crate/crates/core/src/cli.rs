//! The `cthom` command line: one subcommand per capability, each emitting a
//! versioned report as JSON, CSV or an aligned plain-text table.
//!
//! Exit codes: 0 when every check passes, 1 on a computation error, 2 on a
//! usage error, 3 when some check fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::contact::{check_invariance, verify_structure, ContactFamily, CLOSED_FORM_TOLERANCE, FD_TOLERANCE};
use crate::error::{Error, Result};
use crate::flows::{conjugate_points, fredholm_scan};
use crate::formats::{parse_class, parse_family, parse_jumps};
use crate::homology::{
    build_complex, build_complex_certified, generator_count_identity, homology_of, verify_diagram,
    zk_quotient, HomologyGroup,
};
use crate::manifold::{HomotopyClass2, TorusPoint};
use crate::orbits::{action_of, break_symmetry, enumerate_orbits};
use crate::stability::{evaluate, random_deformation, AGREEMENT_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "cthom", version, about = "Contact homology of T^3 and torus bundle contact forms")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Override the main tolerance of the command.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FamilyArg {
    /// linear:<n>, giroux:n=..,eps=..,freq=..[,order=..][,gluing=a:b:c:d] or giroux:file=<path>
    #[arg(long)]
    family: String,
}

fn class_arg(s: &str) -> std::result::Result<HomotopyClass2, String> {
    parse_class(s).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the frame identities on a grid.
    VerifyStructure {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Critical circles of a class.
    Orbits {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = class_arg, allow_hyphen_values = true)]
        class: HomotopyClass2,
    },
    /// Conjugate points along the v-orbit of a point.
    Conjugate {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z: f64,
        /// Flow window; one turn of the fiber by default.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Scan the Fredholm quantity over (0, smax].
    Fredholm {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, default_value_t = 2.0 * TAU)]
        smax: f64,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z: f64,
    },
    /// Homology of the complex of a class.
    Homology {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, value_parser = class_arg, allow_hyphen_values = true)]
        class: HomotopyClass2,
    },
    /// Z_k quotient of Linear(k p).
    Equivariant {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = class_arg, allow_hyphen_values = true, default_value = "1,0")]
        class: HomotopyClass2,
    },
    /// Iterated quotients of Linear(p q).
    Diagram {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, value_parser = class_arg, allow_hyphen_values = true, default_value = "1,0")]
        class: HomotopyClass2,
    },
    /// Closed form, quadrature and telescoping second variation.
    Stability {
        /// Number of seeded random deformations.
        #[arg(long, conflicts_with = "jumps", required_unless_present = "jumps")]
        random: Option<usize>,
        /// Jump file with lines A,sign,tminus,tplus,Tminus,Tplus.
        #[arg(long)]
        jumps: Option<String>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 6)]
        max_jumps: usize,
    },
}

/// The report every subcommand emits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEnvelope {
    pub schema: u32,
    pub command: String,
    pub family: Option<String>,
    pub parameters: BTreeMap<String, Value>,
    pub results: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

struct Report {
    envelope: ReportEnvelope,
    table: Table,
}

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn params<const N: usize>(entries: [(&str, Value); N]) -> BTreeMap<String, Value> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn tolerances<const N: usize>(entries: [(&str, f64); N]) -> BTreeMap<String, f64> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn envelope(
    command: &str,
    family: Option<&str>,
    parameters: BTreeMap<String, Value>,
    results: Value,
    tolerances: BTreeMap<String, f64>,
    passed: bool,
) -> ReportEnvelope {
    ReportEnvelope {
        schema: SCHEMA_VERSION,
        command: command.to_string(),
        family: family.map(str::to_string),
        parameters,
        results,
        tolerances,
        passed,
    }
}

/// Circles expected in every class: `n`, plus one in the equality case. Only
/// the closed forms guarantee this count.
fn expected_circles(f: &ContactFamily) -> Option<usize> {
    match f {
        ContactFamily::Linear { n } => Some(*n as usize),
        ContactFamily::Giroux {
            h: crate::contact::MonotoneFunction::Parametric { .. },
            ..
        } => Some(f.order() as usize + usize::from(f.is_pinching_equality())),
        ContactFamily::Giroux { .. } => None,
    }
}

fn cmd_verify_structure(desc: &str, grid: usize, tol: Option<f64>) -> Result<Report> {
    let f = parse_family(desc)?;
    let report = verify_structure(&f, grid)?;
    let fd_tol = tol.unwrap_or(FD_TOLERANCE);
    let invariance = match f {
        ContactFamily::Giroux { .. } => Some(check_invariance(&f)),
        ContactFamily::Linear { .. } => None,
    };
    let mut table = Table::new(&["identity", "residual", "tolerance", "ok"]);
    let mut passed = true;
    let closed = report.closed_form_residuals().map(|(k, v)| (k, v, CLOSED_FORM_TOLERANCE));
    let fd = report.fd_residuals().map(|(k, v)| (k, v, fd_tol));
    for (name, value, limit) in closed.into_iter().chain(fd) {
        let ok = value < limit;
        passed &= ok;
        table.push([name.to_string(), num(value), num(limit), ok.to_string()]);
    }
    if let Some(inv) = &invariance {
        passed &= inv.invariant;
        table.push([
            "deck_invariance".to_string(),
            num(inv.max_residual),
            num(CLOSED_FORM_TOLERANCE),
            inv.invariant.to_string(),
        ]);
    }
    let results = json!({ "structure": report, "invariance": invariance });
    Ok(Report {
        envelope: envelope(
            "verify-structure",
            Some(desc),
            params([("grid", json!(grid))]),
            results,
            tolerances([("closed_form", CLOSED_FORM_TOLERANCE), ("finite_difference", fd_tol)]),
            passed,
        ),
        table,
    })
}

fn cmd_orbits(desc: &str, class: HomotopyClass2, tol: Option<f64>) -> Result<Report> {
    let f = parse_family(desc)?;
    let root_tol = tol.unwrap_or(crate::orbits::ROOT_TOLERANCE);
    let circles = enumerate_orbits(&f, class)?;
    let mut table = Table::new(&["circle", "z_root", "action", "action_quadrature", "root_residual", "generators"]);
    let mut rows = Vec::new();
    let mut passed = expected_circles(&f).is_none_or(|n| n == circles.len());
    for c in &circles {
        let quad = action_of(c);
        let residual = c.root_residual();
        passed &= residual < root_tol && (quad - c.action).abs() < CLOSED_FORM_TOLERANCE * c.action.max(1.0);
        let (lo, hi) = break_symmetry(c);
        table.push([
            c.index.to_string(),
            num(c.z_root),
            num(c.action),
            num(quad),
            num(residual),
            format!("{} {}", lo.id, hi.id),
        ]);
        rows.push(json!({
            "circle": c.index,
            "z_root": c.z_root,
            "action": c.action,
            "action_quadrature": quad,
            "root_residual": residual,
            "generators": [lo, hi],
        }));
    }
    let results = json!({
        "class": class,
        "direction": class.direction()?,
        "count": circles.len(),
        "expected_count": expected_circles(&f),
        "circles": rows,
    });
    Ok(Report {
        envelope: envelope(
            "orbits",
            Some(desc),
            params([("class", to_value(&class))]),
            results,
            tolerances([("root", root_tol), ("action", CLOSED_FORM_TOLERANCE)]),
            passed,
        ),
        table,
    })
}

fn cmd_conjugate(desc: &str, z: f64, window: Option<f64>, tol: Option<f64>) -> Result<Report> {
    let f = parse_family(desc)?;
    let residual_tol = tol.unwrap_or(CLOSED_FORM_TOLERANCE);
    let q = TorusPoint::new(0.0, 0.0, z)?;
    let full_turn = window.is_none();
    let window = window.unwrap_or_else(|| f.fiber_advance());
    let list = conjugate_points(&f, &q, window)?;
    let expected = full_turn.then(|| f.order() as usize + usize::from(f.is_pinching_equality()));
    let mut passed = expected.is_none_or(|n| n == list.points.len());
    let mut table = Table::new(&["s", "z_shift", "winding", "same_fiber", "residual"]);
    for p in &list.points {
        passed &= p.residual < residual_tol;
        table.push([
            num(p.s),
            num(p.z_shift),
            p.winding.to_string(),
            p.same_fiber.to_string(),
            num(p.residual),
        ]);
    }
    let results = json!({ "conjugate_points": list, "count": list.points.len(), "expected_count": expected });
    Ok(Report {
        envelope: envelope(
            "conjugate",
            Some(desc),
            params([("z", json!(z)), ("window", json!(window))]),
            results,
            tolerances([("residual", residual_tol)]),
            passed,
        ),
        table,
    })
}

fn cmd_fredholm(desc: &str, smax: f64, samples: usize, z: f64, tol: Option<f64>) -> Result<Report> {
    let f = parse_family(desc)?;
    let tol = tol.unwrap_or(CLOSED_FORM_TOLERANCE);
    let q = TorusPoint::new(0.0, 0.0, z)?;
    let mut report = fredholm_scan(&f, &q, smax, samples)?;
    report.violated = report.supremum >= 1.0 - tol;
    let passed = report.supremum <= 1.0 + tol;
    let mut table = Table::new(&["supremum", "argmax", "violated"]);
    table.push([
        num(report.supremum),
        report.argmax.iter().map(|s| num(*s)).collect::<Vec<_>>().join(" "),
        report.violated.to_string(),
    ]);
    Ok(Report {
        envelope: envelope(
            "fredholm",
            Some(desc),
            params([("smax", json!(smax)), ("samples", json!(samples)), ("z", json!(z))]),
            to_value(&report),
            tolerances([("violation", tol)]),
            passed,
        ),
        table,
    })
}

fn homology_rows(groups: &[HomologyGroup], table: &mut Table) {
    for g in groups {
        table.push([
            g.degree.to_string(),
            g.rank.to_string(),
            g.torsion.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            g.to_string(),
        ]);
    }
}

fn cmd_homology(desc: &str, class: HomotopyClass2) -> Result<Report> {
    let f = parse_family(desc)?;
    let (complex, certificate) = build_complex_certified(&f, class)?;
    let groups = homology_of(&complex)?;
    let circles = complex.rank(0);
    let passed = certificate.d_per_zero
        && certificate.d_per_squared_zero
        && expected_circles(&f).is_none_or(|n| n == circles)
        && groups.iter().all(|g| {
            g.torsion.is_empty()
                && g.rank == if g.degree <= 1 { circles } else { 0 }
        });
    let mut table = Table::new(&["degree", "rank", "torsion", "group"]);
    homology_rows(&groups, &mut table);
    let generators: Vec<Vec<String>> = (0..complex.degrees())
        .map(|k| complex.generators(k).iter().map(|c| c.label()).collect())
        .collect();
    let results = json!({
        "class": class,
        "order": f.order(),
        "circles": circles,
        "generators": generators,
        "boundary": complex.boundary(1).to_rows(),
        "certificate": certificate,
        "homology": groups,
        "euler_characteristic": complex.euler_characteristic(),
    });
    Ok(Report {
        envelope: envelope(
            "homology",
            Some(desc),
            params([("class", to_value(&class))]),
            results,
            BTreeMap::new(),
            passed,
        ),
        table,
    })
}

fn cmd_equivariant(p: u32, k: u32, class: HomotopyClass2) -> Result<Report> {
    let source_family = ContactFamily::linear(p.checked_mul(k).ok_or_else(|| {
        Error::InvalidArgument("k p overflows".into())
    })?)?;
    let source = build_complex(&source_family, class)?;
    let (quotient, map) = zk_quotient(&source, k)?;
    let target = build_complex(&ContactFamily::linear(p)?, class)?;
    let h_quotient = homology_of(&quotient)?;
    let h_target = homology_of(&target)?;
    let checks = [
        ("generator_count_identity", generator_count_identity(&source, &quotient, k)),
        ("map_is_projection", map.is_projection()),
        ("chain_map", map.is_chain_map(&source, &quotient)?),
        ("quotient_matches_linear_p", quotient.same_structure(&target)),
        ("homology_matches_linear_p", h_quotient == h_target),
    ];
    let passed = checks.iter().all(|(_, ok)| *ok);
    let mut table = Table::new(&["degree", "rank", "torsion", "group"]);
    homology_rows(&h_quotient, &mut table);
    for (name, ok) in checks {
        table.push([name.to_string(), ok.to_string(), String::new(), String::new()]);
    }
    let results = json!({
        "source_generators": (0..source.degrees()).map(|d| source.rank(d)).collect::<Vec<_>>(),
        "quotient_generators": (0..quotient.degrees()).map(|d| quotient.rank(d)).collect::<Vec<_>>(),
        "map": map.matrices.iter().map(|m| m.to_rows()).collect::<Vec<_>>(),
        "quotient_homology": h_quotient,
        "target_homology": h_target,
        "checks": checks.iter().map(|(n, ok)| (n.to_string(), *ok)).collect::<BTreeMap<_, _>>(),
    });
    Ok(Report {
        envelope: envelope(
            "equivariant",
            Some(&format!("linear:{}", p * k)),
            params([("p", json!(p)), ("k", json!(k)), ("class", to_value(&class))]),
            results,
            BTreeMap::new(),
            passed,
        ),
        table,
    })
}

fn cmd_diagram(p: u32, q: u32, class: HomotopyClass2) -> Result<Report> {
    let report = verify_diagram(p, q, class)?;
    let mut table = Table::new(&["square", "commutes", "residual"]);
    for s in &report.squares {
        table.push([s.name.clone(), s.commutes.to_string(), s.residual.to_string()]);
    }
    Ok(Report {
        envelope: envelope(
            "diagram",
            Some(&format!("linear:{}", p * q)),
            params([("p", json!(p)), ("q", json!(q)), ("class", to_value(&class))]),
            to_value(&report),
            BTreeMap::new(),
            report.all_commute,
        ),
        table,
    })
}

fn cmd_stability(
    random: Option<usize>,
    jumps: Option<&str>,
    samples: usize,
    max_jumps: usize,
    seed: u64,
    tol: Option<f64>,
) -> Result<Report> {
    let tol = tol.unwrap_or(AGREEMENT_TOLERANCE);
    let deformations = match (random, jumps) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {path}: {e}")))?;
            vec![parse_jumps(&text)?]
        }
        (Some(n), None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| random_deformation(&mut rng, max_jumps)).collect()
        }
        (None, None) => return Err(Error::InvalidArgument("give --random N or --jumps FILE".into())),
    };
    let mut table = Table::new(&["case", "jumps", "closed", "quadrature", "telescoping", "relative_gap", "positive"]);
    let mut rows = Vec::new();
    let mut passed = true;
    for (i, d) in deformations.iter().enumerate() {
        let row = evaluate(d, samples)?;
        let ok = row.relative_gap < tol && (!row.proper || row.positive);
        passed &= ok;
        table.push([
            i.to_string(),
            row.jumps.to_string(),
            num(row.closed),
            num(row.quadrature),
            num(row.telescoping),
            num(row.relative_gap),
            row.positive.to_string(),
        ]);
        rows.push(row);
    }
    Ok(Report {
        envelope: envelope(
            "stability",
            None,
            params([
                ("random", json!(random)),
                ("jumps", json!(jumps)),
                ("samples", json!(samples)),
                ("max_jumps", json!(max_jumps)),
                ("seed", json!(seed)),
            ]),
            json!({ "cases": rows }),
            tolerances([("agreement", tol), ("positivity", crate::stability::POSITIVITY_FLOOR)]),
            passed,
        ),
        table,
    })
}

fn render_table(report: &Report) -> String {
    let e = &report.envelope;
    let mut out = format!("command: {}\n", e.command);
    if let Some(f) = &e.family {
        out.push_str(&format!("family: {f}\n"));
    }
    let t = &report.table;
    let mut widths: Vec<usize> = t.headers.iter().map(String::len).collect();
    for row in &t.rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(&t.headers));
    out.push('\n');
    for row in &t.rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out.push_str(&format!("passed: {}\n", if e.passed { "yes" } else { "no" }));
    out
}

fn render_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    w.write_record(&report.table.headers).map_err(io)?;
    for row in &report.table.rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(&report.envelope)
            .map(|s| s + "\n")
            .map_err(|e| Error::InvalidArgument(format!("json output: {e}"))),
        Format::Csv => render_csv(report),
        Format::Table => Ok(render_table(report)),
    }
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let tol = cli.tol;
    match &cli.command {
        Command::VerifyStructure { family, grid } => cmd_verify_structure(&family.family, *grid, tol),
        Command::Orbits { family, class } => cmd_orbits(&family.family, *class, tol),
        Command::Conjugate { family, z, window } => cmd_conjugate(&family.family, *z, *window, tol),
        Command::Fredholm {
            family,
            smax,
            samples,
            z,
        } => cmd_fredholm(&family.family, *smax, *samples, *z, tol),
        Command::Homology { family, class } => cmd_homology(&family.family, *class),
        Command::Equivariant { p, k, class } => cmd_equivariant(*p, *k, *class),
        Command::Diagram { p, q, class } => cmd_diagram(*p, *q, *class),
        Command::Stability {
            random,
            jumps,
            samples,
            max_jumps,
        } => cmd_stability(*random, jumps.as_deref(), *samples, *max_jumps, cli.seed.unwrap_or(0), tol),
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_PASS,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Outcome {
                code: EXIT_USAGE,
                stdout: String::new(),
                stderr: format!("error: --tol must be a positive number, got {t}\n"),
            };
        }
    }
    let outcome = dispatch(&cli).and_then(|report| {
        let text = render(&report, cli.format)?;
        Ok((report.envelope.passed, text))
    });
    match outcome {
        Ok((passed, stdout)) => Outcome {
            code: if passed { EXIT_PASS } else { EXIT_FAILED },
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn json_of(args: &[&str]) -> (i32, Value) {
        let mut argv = vec!["cthom"];
        argv.extend(args);
        argv.extend(["--format", "json"]);
        let out = run(argv);
        assert!(out.stderr.is_empty(), "{}", out.stderr);
        (out.code, serde_json::from_str(&out.stdout).unwrap())
    }

    #[test]
    fn homology_of_linear_three() {
        let (code, v) = json_of(&["homology", "--family", "linear:3", "--class", "1,0"]);
        assert_eq!(code, 0);
        assert_eq!(v["schema"], 1);
        let h = &v["results"]["homology"];
        assert_eq!(h[0]["rank"], 3);
        assert_eq!(h[1]["rank"], 3);
        assert_eq!(h[2]["rank"], 0);
        assert!(h.as_array().unwrap().iter().all(|g| g["torsion"].as_array().unwrap().is_empty()));
    }

    #[test]
    fn fredholm_of_linear_one() {
        let (code, v) = json_of(&["fredholm", "--family", "linear:1", "--smax", "12.566"]);
        assert_eq!(code, 0);
        let r = &v["results"];
        assert_eq!(r["violated"], true);
        assert!((r["supremum"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!((r["argmax"][0].as_f64().unwrap() - TAU).abs() < 1e-6);
    }

    #[test]
    fn equivariant_reduction() {
        let (code, v) = json_of(&["equivariant", "--p", "1", "--k", "2", "--class", "1,0"]);
        assert_eq!(code, 0);
        let h = &v["results"]["quotient_homology"];
        assert_eq!((h[0]["rank"].as_u64(), h[1]["rank"].as_u64()), (Some(1), Some(1)));
        assert_eq!(v["results"]["checks"]["chain_map"], true);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["cthom", "frobnicate"]).code, EXIT_USAGE);
        assert_eq!(run(["cthom", "orbits", "--family", "linear:1", "--class", "1,0", "--bogus"]).code, EXIT_USAGE);
        assert_eq!(run(["cthom", "orbits", "--family", "linear:1", "--class", "0,0"]).code, EXIT_ERROR);
        assert_eq!(run(["cthom", "orbits", "--family", "linear:0", "--class", "1,0"]).code, EXIT_ERROR);
        assert_eq!(run(["cthom", "stability"]).code, EXIT_USAGE);
        let failed = run(["cthom", "fredholm", "--family", "linear:1", "--tol", "1e-300", "--smax", "1"]);
        assert_eq!(failed.code, EXIT_PASS);
        let help = run(["cthom", "--help"]);
        assert_eq!(help.code, EXIT_PASS);
        assert!(help.stdout.contains("homology"));
    }

    #[test]
    fn failing_check_exits_three() {
        let out = run(["cthom", "conjugate", "--family", "linear:2", "--tol", "1e-30"]);
        assert_eq!(out.code, EXIT_FAILED, "{}", out.stdout);
    }

    #[test]
    fn output_is_deterministic() {
        let args = ["cthom", "stability", "--random", "5", "--seed", "9", "--format", "json"];
        assert_eq!(run(args).stdout, run(args).stdout);
        let other = run(["cthom", "stability", "--random", "5", "--seed", "10", "--format", "json"]);
        assert_ne!(run(args).stdout, other.stdout);
    }

    #[test]
    fn table_and_csv() {
        let table = run(["cthom", "orbits", "--family", "linear:2", "--class", "1,0"]);
        assert_eq!(table.code, 0);
        assert!(table.stdout.starts_with("command: orbits\nfamily: linear:2\n"));
        assert!(table.stdout.ends_with("passed: yes\n"));
        let csv = run(["cthom", "diagram", "--p", "2", "--q", "3", "--format", "csv"]);
        assert_eq!(csv.code, 0);
        assert!(csv.stdout.starts_with("square,commutes,residual\n"));
    }

    #[test]
    fn negative_classes_parse() {
        let out = run(["cthom", "orbits", "--family", "linear:1", "--class", "-1,2"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
}
