//! `chazy`: catalog browsing, singularity and series analysis, the
//! verification ledger, and trajectory export.
//!
//! Exit codes: 0 when every requested check passes, 1 on a failed check or a
//! computation error, 2 on usage errors (including unknown names).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use chazy_core::catalog::{self, CatalogError, Entry};
use chazy_core::exact::{embed_numeric, CScalar, QuadExt};
use chazy_core::flow::{self, IntegratorConfig, PathSpec};
use chazy_core::geometry::{analyze_singular, ratio_condition};
use chazy_core::ledger::{self, Claim, LedgerReport};
use chazy_core::mpoly::parse_constant;
use chazy_core::series::{dominant_balances, kowalevski, laurent_extend, scalar_balances, series_residual, FreeValue};
use chazy_core::solve::SolveOptions;
use chazy_core::transforms::{self, BtMode};

#[derive(Parser, Debug)]
#[command(name = "chazy", version, about = "Painleve analysis and transformation checks for Chazy-type equations")]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Relative tolerance for numerical integration.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Browse the registry of equations and systems.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Singularity analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Dominant balances, resonances and Laurent expansions.
    Series {
        name: String,
        /// Leading pole orders of one balance, e.g. `0,-2,-1`.
        #[arg(long, allow_hyphen_values = true)]
        balance: Option<String>,
        /// Recursion steps past the leading term.
        #[arg(long, default_value_t = 6)]
        steps: i64,
        /// Free coefficient `var:power=value`, repeatable.
        #[arg(long = "free", allow_hyphen_values = true)]
        free: Vec<String>,
        /// Parameter binding `name=value`, repeatable.
        #[arg(long = "param", allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// Exact verification of maps, charts, integrals and relations.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Integrate a system along a complex path; CSV with a diagnostics sidecar.
    Integrate {
        name: String,
        /// Initial state, comma separated (`1`, `-0.5`, `1+2i`).
        #[arg(long, allow_hyphen_values = true)]
        ic: String,
        /// Path waypoints, comma separated.
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        path: String,
        #[arg(long = "param", allow_hyphen_values = true)]
        params: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    List,
    Show {
        name: String,
        #[arg(long = "param", allow_hyphen_values = true)]
        params: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum AnalyzeCmd {
    /// Accessible singular points and their local indices.
    Singular {
        name: String,
        #[arg(long = "param", allow_hyphen_values = true)]
        params: Vec<String>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Mode {
    Exact,
    Series,
    Auto,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Pushforward identity of a registered map, and its round trip.
    Map { name: String },
    /// Backlund check of a map between scalar equations.
    Bt {
        name: String,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Chart suite holomorphy.
    Holomorphy { name: String },
    /// Registered first integrals and Hamiltonians of a system.
    Integral { name: String },
    /// Compatibility of a coupled (Pfaffian) system.
    Compat { name: String },
    /// Relations of a symmetry group, e.g. `weyl`.
    Relations { group: String },
    /// Closed-form special solution.
    Solution { name: String },
    /// The full ledger.
    All {
        /// Only run claims of this group.
        #[arg(long)]
        group: Option<String>,
        /// Include elapsed times in the JSON.
        #[arg(long)]
        timings: bool,
    },
}

enum CliError {
    Usage(String),
    Failed(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn unknown(kind: &str, name: &str, known: &[String]) -> CliError {
    let mut scored: Vec<(usize, &String)> = known.iter().map(|k| (strsim::levenshtein(name, k), k)).collect();
    scored.sort();
    let near: Vec<&str> = scored.iter().take(5).map(|(_, k)| k.as_str()).collect();
    usage(format!("unknown {kind} `{name}`; did you mean one of: {}", near.join(", ")))
}

fn catalog_err(name: &str, e: CatalogError) -> CliError {
    match e {
        CatalogError::UnknownName(_) => unknown("catalog entry", name, &catalog::list().into_iter().map(String::from).collect::<Vec<_>>()),
        CatalogError::NotAParameter { .. } | CatalogError::Constraint { .. } | CatalogError::WrongKind(_) => usage(e.to_string()),
        other => failed(other),
    }
}

/// What a command produced: the rendered report and whether all checks passed.
struct Output {
    body: String,
    ok: bool,
}

fn json_out(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn parse_binding(s: &str) -> CliResult<(String, QuadExt)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected name=value, got `{s}`")))?;
    let q = parse_constant(v.trim()).map_err(|e| usage(format!("bad value for {k}: {e}")))?;
    Ok((k.trim().to_string(), q))
}

fn bindings(params: &[String]) -> CliResult<Vec<(String, QuadExt)>> {
    params.iter().map(|s| parse_binding(s)).collect()
}

fn as_refs(b: &[(String, QuadExt)]) -> Vec<(&str, QuadExt)> {
    b.iter().map(|(k, v)| (k.as_str(), v.clone())).collect()
}

/// A complex number `a`, `bi`, `a+bi` or `a-bi`; exact constants are accepted too.
fn parse_complex(s: &str) -> CliResult<CScalar> {
    let s = s.trim().replace(' ', "");
    if let Ok(x) = s.parse::<f64>() {
        return Ok(CScalar::new(x, 0.0));
    }
    if let Some(body) = s.strip_suffix('i') {
        // Rightmost sign that is not part of an exponent.
        let split = body.char_indices().skip(1).filter(|&(i, c)| (c == '+' || c == '-') && !body[..i].ends_with(['e', 'E'])).last().map(|(i, _)| i);
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        if let (Ok(a), Ok(b)) = (re.parse::<f64>(), im.parse::<f64>()) {
            return Ok(CScalar::new(a, b));
        }
    }
    parse_constant(&s).map(|q| embed_numeric(&q)).map_err(|_| usage(format!("cannot read `{s}` as a number")))
}

fn parse_list(s: &str) -> CliResult<Vec<CScalar>> {
    s.split(',').map(parse_complex).collect()
}

fn catalog_cmd(cmd: &CatalogCmd, fmt: Format) -> CliResult<Output> {
    match cmd {
        CatalogCmd::List => {
            let names = catalog::list();
            let rows: Vec<(String, &str, &str)> = names
                .iter()
                .map(|n| {
                    let kind = catalog::get(n, &[]).map(|e| e.kind()).unwrap_or("?");
                    (n.to_string(), kind, catalog::note(n).unwrap_or(""))
                })
                .collect();
            let body = match fmt {
                Format::Json => json_out(&json!({
                    "schema": "chazy-catalog/1",
                    "entries": rows.iter().map(|(n, k, d)| json!({"name": n, "kind": k, "note": d})).collect::<Vec<_>>(),
                })),
                Format::Csv => std::iter::once("name,kind".to_string()).chain(rows.iter().map(|(n, k, _)| format!("{n},{k}"))).map(|l| l + "\n").collect(),
                Format::Pretty => rows.iter().map(|(n, k, d)| format!("{n:<28} {k:<9} {d}\n")).collect(),
            };
            Ok(Output { body, ok: true })
        }
        CatalogCmd::Show { name, params } => {
            let b = bindings(params)?;
            let e: Entry = catalog::get(name, &as_refs(&b)).map_err(|e| catalog_err(name, e))?;
            let body = match fmt {
                Format::Json => json_out(&json!({"schema": "chazy-catalog/1", "entry": e.to_json(), "lint": catalog::lint(&e)})),
                Format::Pretty => e.pretty(),
                Format::Csv => return Err(usage("csv output is not available for catalog show")),
            };
            Ok(Output { body, ok: true })
        }
    }
}

fn analyze_cmd(cmd: &AnalyzeCmd, fmt: Format, seed: u64) -> CliResult<Output> {
    let AnalyzeCmd::Singular { name, params } = cmd;
    let b = bindings(params)?;
    let sys = catalog::get_system(name, &as_refs(&b)).map_err(|e| catalog_err(name, e))?;
    let opts = SolveOptions { seed, ..SolveOptions::default() };
    let pts = analyze_singular(&sys, &opts).map_err(failed)?;
    let body = match fmt {
        Format::Json => json_out(&json!({"schema": "chazy-singular/1", "system": name, "count": pts.len(), "points": pts.iter().map(|p| p.to_json()).collect::<Vec<_>>()})),
        Format::Pretty => {
            let mut s = format!("{} accessible points of {name}\n", pts.len());
            let join = |v: Vec<String>| v.join(", ");
            for p in &pts {
                let coords = join(p.point.coords.iter().map(|c| c.to_string()).collect());
                let index = match &p.index {
                    Some(i) => format!("local index ({}), ratio condition {}", join(i.eigenvalues.iter().map(|r| r.to_string()).collect()), ratio_condition(i)),
                    None => "no local index".to_string(),
                };
                s.push_str(&format!("{} ({coords}): {index}\n", p.point.chart));
            }
            s
        }
        Format::Csv => return Err(usage("csv output is not available for analyze singular")),
    };
    Ok(Output { body, ok: true })
}

fn parse_free(s: &str, vars: &[String]) -> CliResult<FreeValue> {
    let (lhs, val) = s.split_once('=').ok_or_else(|| usage(format!("expected var:power=value, got `{s}`")))?;
    let (var, pow) = lhs.split_once(':').ok_or_else(|| usage(format!("expected var:power=value, got `{s}`")))?;
    let idx = vars.iter().position(|v| v == var).ok_or_else(|| usage(format!("`{var}` is not a state variable ({})", vars.join(", "))))?;
    let pow: i64 = pow.parse().map_err(|_| usage(format!("bad power `{pow}`")))?;
    let q = parse_constant(val).map_err(|e| usage(e.to_string()))?;
    Ok(FreeValue::new(idx, pow, q))
}

fn series_cmd(name: &str, balance: Option<&str>, steps: i64, free: &[String], params: &[String], fmt: Format) -> CliResult<Output> {
    if fmt == Format::Csv {
        return Err(usage("csv output is not available for series"));
    }
    let b = bindings(params)?;
    let entry = catalog::get(name, &as_refs(&b)).map_err(|e| catalog_err(name, e))?;
    let t0 = QuadExt::zero();
    let report = match &entry {
        Entry::Scalar(ode) => {
            let bals = scalar_balances(ode, 6).map_err(failed)?;
            json!({
                "schema": "chazy-series/1",
                "name": name,
                "balances": bals.iter().map(|b| json!({
                    "pole_order": b.pole_order,
                    "residue": b.residue,
                    "resonances": b.resonances().iter().map(|(r, m)| json!({"value": r.to_json(), "multiplicity": m})).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })
        }
        Entry::System(sys) => {
            let bals = dominant_balances(sys, 6, &t0).map_err(failed)?;
            match balance {
                None => json!({
                    "schema": "chazy-series/1",
                    "name": name,
                    "balances": bals.iter().map(|b| {
                        let mut v = b.to_json();
                        v["resonances"] = kowalevski(sys, b, &t0).map(|k| k.to_json()).unwrap_or(Value::Null);
                        v
                    }).collect::<Vec<_>>(),
                }),
                Some(spec) => {
                    let lead: Vec<i64> = spec.split(',').map(|x| x.trim().parse::<i64>()).collect::<Result<_, _>>().map_err(|_| usage(format!("bad balance `{spec}`")))?;
                    let lead_q: Vec<QuadExt> = lead.iter().map(|&k| QuadExt::int(k)).collect();
                    let bal = bals.iter().find(|b| b.leading == lead_q || b.pole_orders == lead).ok_or_else(|| {
                        let known: Vec<String> = bals.iter().map(|b| b.leading.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")).collect();
                        unknown("balance", spec, &known)
                    })?;
                    let names: Vec<String> = sys.state.iter().map(|&v| sys.vars.name(v).to_string()).collect();
                    let fv: Vec<FreeValue> = free.iter().map(|f| parse_free(f, &names)).collect::<CliResult<_>>()?;
                    let sol = laurent_extend(sys, bal, &t0, &fv, steps).map_err(failed)?;
                    let res = series_residual(&sol, sys).map_err(failed)?;
                    json!({"schema": "chazy-series/1", "name": name, "state": names, "solution": sol.to_json(), "residual_zero": res.exact_zero})
                }
            }
        }
        Entry::Pfaffian(_) => return Err(usage(format!("`{name}` is a coupled system; series needs an equation or a system"))),
    };
    let body = match fmt {
        Format::Pretty => serde_json::to_string_pretty(&report).expect("json") + "\n",
        _ => json_out(&report),
    };
    Ok(Output { body, ok: true })
}

fn known_maps() -> Vec<String> {
    transforms::map_names().into_iter().map(String::from).collect()
}

fn select(ids: impl Fn(&Claim) -> bool) -> Vec<Claim> {
    ledger::claims().into_iter().filter(|c| ids(c)).collect()
}

fn verify_claims(cmd: &VerifyCmd) -> CliResult<(Vec<Claim>, bool)> {
    let claims = match cmd {
        VerifyCmd::Map { name } => {
            if !known_maps().contains(name) {
                return Err(unknown("map", name, &known_maps()));
            }
            let rt = format!("{name}.round-trip");
            select(|c| c.group == "maps" && (c.id == *name || c.id == rt))
        }
        VerifyCmd::Bt { name, mode } => {
            let spec = transforms::map_specs().iter().find(|s| s.name == name).ok_or_else(|| unknown("map", name, &known_maps()))?;
            if spec.kind != transforms::MapKind::Prolonged {
                let scalar: Vec<String> = transforms::map_specs().iter().filter(|s| s.kind == transforms::MapKind::Prolonged).map(|s| s.name.to_string()).collect();
                return Err(unknown("map between scalar equations", name, &scalar));
            }
            let mode = match mode {
                Mode::Exact => BtMode::ExactJet,
                Mode::Series => BtMode::Series,
                Mode::Auto => BtMode::Auto,
            };
            let n = spec.name;
            vec![Claim::new(format!("{n}.bt"), "maps", spec.claim, spec.holds, move |seed| {
                transforms::bt_check(&transforms::get_map(n).map_err(|e| e.to_string())?, mode, seed).map_err(|e| e.to_string())
            })]
        }
        VerifyCmd::Holomorphy { name } => {
            let suites: Vec<String> = transforms::SUITES.iter().map(|s| s.to_string()).collect();
            if !suites.contains(name) {
                return Err(unknown("chart suite", name, &suites));
            }
            let prefix = format!("{name}.");
            select(|c| c.group == "charts" && c.id.starts_with(&prefix))
        }
        VerifyCmd::Integral { name } => {
            let with: Vec<String> = transforms::FIRST_INTEGRALS.iter().chain(transforms::HAMILTONIANS.iter()).map(|(s, _)| s.to_string()).collect();
            if !with.contains(name) {
                return Err(unknown("system with a registered integral", name, &with));
            }
            let needle = format!(" {name} ");
            select(|c| c.group == "structure" && (c.id.ends_with(".first-integral") || c.id.ends_with(".hamiltonian")) && format!("{} ", c.statement).contains(&needle))
        }
        VerifyCmd::Compat { name } => {
            let pf: Vec<String> = catalog::list().into_iter().filter(|n| catalog::get(n, &[]).is_ok_and(|e| e.kind() == "pfaffian")).map(String::from).collect();
            if !pf.contains(name) {
                return Err(unknown("coupled system", name, &pf));
            }
            let n = name.clone();
            vec![Claim::new(format!("{name}.compatibility"), "structure", format!("the flows of {name} commute"), true, move |_| {
                Ok(transforms::compatibility_check(&catalog::get_pfaffian(&n, &[]).map_err(|e| e.to_string())?))
            })]
        }
        VerifyCmd::Relations { group } => {
            let groups: BTreeSet<String> = transforms::relation_specs().iter().map(|r| r.name.split('.').next().unwrap_or(r.name).to_string()).collect();
            if !groups.contains(group) {
                return Err(unknown("relation group", group, &groups.into_iter().collect::<Vec<_>>()));
            }
            let prefix = format!("{group}.");
            select(|c| c.group == "relations" && c.id.starts_with(&prefix))
        }
        VerifyCmd::Solution { name } => {
            let sols: Vec<String> = flow::ansatz_fixtures().into_iter().map(|a| a.name).collect();
            if !sols.contains(name) {
                return Err(unknown("solution", name, &sols));
            }
            select(|c| c.group == "solutions" && c.id == *name)
        }
        VerifyCmd::All { group, timings } => {
            let all = ledger::claims();
            if let Some(g) = group {
                let groups: BTreeSet<String> = all.iter().map(|c| c.group.to_string()).collect();
                if !groups.contains(g) {
                    return Err(unknown("ledger group", g, &groups.into_iter().collect::<Vec<_>>()));
                }
            }
            return Ok((all, *timings));
        }
    };
    Ok((claims, false))
}

fn render_report(r: &LedgerReport, fmt: Format, timings: bool) -> String {
    match fmt {
        Format::Json => json_out(&r.to_json(timings)),
        Format::Pretty => r.pretty(),
        Format::Csv => {
            let mut s = String::from("claim_id,group,expected,holds,status\n");
            for e in &r.entries {
                let holds = e.holds.map(|h| h.to_string()).unwrap_or_default();
                s.push_str(&format!("{},{},{},{holds},{}\n", e.id, e.group, e.expect, e.status.as_str()));
            }
            s
        }
    }
}

fn verify_cmd(cmd: &VerifyCmd, fmt: Format, seed: u64) -> CliResult<Output> {
    let (claims, timings) = verify_claims(cmd)?;
    let report = match cmd {
        VerifyCmd::All { group: Some(g), .. } => {
            let keep = |c: &Claim| c.group == g;
            ledger::run(&claims, seed, Some(&keep))
        }
        _ => ledger::run(&claims, seed, None),
    };
    Ok(Output { body: render_report(&report, fmt, timings), ok: report.all_pass() })
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("diagnostics.json")
}

fn integrate_cmd(name: &str, ic: &str, path: &str, params: &[String], cli: &Cli) -> CliResult<(Output, Option<Value>)> {
    let sys = catalog::get_system(name, &[]).map_err(|e| catalog_err(name, e))?;
    let mut values = Vec::new();
    for p in params {
        let (k, v) = p.split_once('=').ok_or_else(|| usage(format!("expected name=value, got `{p}`")))?;
        values.push((k.trim().to_string(), parse_complex(v)?));
    }
    let values: Vec<(&str, CScalar)> = values.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let ic = parse_list(ic)?;
    let path = PathSpec::new(parse_list(path)?).map_err(|e| usage(e.to_string()))?;
    let cfg = match cli.tol {
        Some(t) if t > 0.0 && t < 1.0 => IntegratorConfig::with_tol(t, t * 1e-2),
        Some(t) => return Err(usage(format!("--tol must lie in (0, 1), got {t}"))),
        None => IntegratorConfig::default(),
    };
    let tr = flow::integrate(&sys, &values, &ic, &path, &cfg).map_err(|e| match e {
        flow::FlowError::Unbound(_) | flow::FlowError::Dimension { .. } | flow::FlowError::Path(_) | flow::FlowError::Config(_) => usage(e.to_string()),
        other => failed(other),
    })?;
    let mut diag = tr.diagnostics();
    diag["schema"] = json!("chazy-trajectory/1");
    diag["system"] = json!(name);
    diag["rtol"] = json!(cfg.rtol);
    diag["atol"] = json!(cfg.atol);
    let fmt = cli.format.unwrap_or(Format::Csv);
    let body = match fmt {
        Format::Csv => tr.to_csv(),
        Format::Json => {
            let rows: Vec<Value> = tr.samples.iter().map(|s| json!({"t": [s.t.re, s.t.im], "state": s.state.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()})).collect();
            return Ok((Output { body: json_out(&json!({"schema": "chazy-trajectory/1", "state": tr.state_names, "diagnostics": diag, "samples": rows})), ok: true }, None));
        }
        Format::Pretty => {
            let last = tr.last();
            let mut s = format!("{name}: {} samples, {} accepted, {} rejected steps\n", tr.samples.len(), tr.accepted, tr.rejected);
            s.push_str(&format!("t = {}: {:?}\n", last.t, last.state));
            if let Some(p) = &tr.pole {
                s.push_str(&format!("pole near t = {} (order about {:.2}): {}\n", p.estimate, p.order, p.reason));
            }
            s
        }
    };
    Ok((Output { body, ok: true }, (fmt == Format::Csv).then_some(diag)))
}

fn run(cli: &Cli) -> CliResult<Output> {
    let json = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Catalog(c) => catalog_cmd(c, json),
        Command::Analyze(c) => analyze_cmd(c, json, cli.seed),
        Command::Series { name, balance, steps, free, params } => series_cmd(name, balance.as_deref(), *steps, free, params, json),
        Command::Verify(c) => verify_cmd(c, json, cli.seed),
        Command::Integrate { name, ic, path, params } => {
            let (out, diag) = integrate_cmd(name, ic, path, params, cli)?;
            if let Some(d) = diag {
                match &cli.out {
                    Some(p) => fs::write(sidecar(p), json_out(&d)).map_err(failed)?,
                    None => eprint!("{}", json_out(&d)),
                }
            }
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, &out.body),
                None => {
                    print!("{}", out.body);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |s: &str| parse_complex(s).ok().unwrap();
        assert_eq!(c("1"), CScalar::new(1.0, 0.0));
        assert_eq!(c("-0.5"), CScalar::new(-0.5, 0.0));
        assert_eq!(c("1+2i"), CScalar::new(1.0, 2.0));
        assert_eq!(c("1-2i"), CScalar::new(1.0, -2.0));
        assert_eq!(c("-i"), CScalar::new(0.0, -1.0));
        assert_eq!(c("2.5i"), CScalar::new(0.0, 2.5));
        assert_eq!(c("1e-3+1e-3i"), CScalar::new(1e-3, 1e-3));
        assert!((c("sqrt(2)").re - 2f64.sqrt()).abs() < 1e-15);
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn bindings_are_exact() {
        let (k, v) = parse_binding("a=4/27").ok().unwrap();
        assert_eq!((k.as_str(), v), ("a", QuadExt::frac(4, 27)));
        assert!(parse_binding("a").is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar(Path::new("run/out.csv")), PathBuf::from("run/out.diagnostics.json"));
    }
}
