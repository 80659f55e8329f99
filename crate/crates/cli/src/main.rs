use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dsslab::experiments::mms::convergence_study;
use dsslab::experiments::presets::{preset, verify_all, Datum, RunSpec, PRESET_NAMES};
use dsslab::experiments::AuditReport;
use dsslab::exponents::{
    classify, int, p_m, positivity_condition, s_m, Params, PositivityVerdict, RegimeTag,
};
use dsslab::field::Field;
use dsslab::scheme::{state_from_fields, sweep_n, IterationControl, Linearization};

mod config;

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "dsslab",
    version,
    about = "Finite-difference laboratory for a singular elliptic system"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "DSSLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the regimes and predicted exponents for a parameter tuple.
    Classify(ParamArgs),
    /// Run the regularization sweep and write per-level norms and fields.
    Solve(RunArgs),
    /// Run every applicable audit for a preset.
    VerifyAll(VerifyArgs),
    /// Manufactured-solution convergence study.
    Mms(MmsArgs),
}

#[derive(Args, Default, Clone)]
struct ParamArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    m: Option<String>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// One of the named presets; defaults to default-d3.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Dimension of the grid (1, 2 or 3).
    #[arg(long)]
    grid_d: Option<usize>,
    /// Interior nodes per axis.
    #[arg(long)]
    n_cells: Option<usize>,
    /// constant:C, box:C:HALF_WIDTH or file:PATH.
    #[arg(long)]
    datum: Option<String>,
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    n_fixed: Option<u64>,
    #[arg(long)]
    tol_inner: Option<f64>,
    #[arg(long)]
    tol_outer: Option<f64>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Newton linearization of the inner solves instead of Picard.
    #[arg(long)]
    newton: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Audit this u field instead of solving; needs --state-v.
    #[arg(long, requires = "state_v")]
    state_u: Option<PathBuf>,
    #[arg(long, requires = "state_u")]
    state_v: Option<PathBuf>,
    /// Level of the injected state; defaults to the last schedule entry.
    #[arg(long)]
    state_n: Option<u64>,
}

#[derive(Args)]
struct MmsArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Regularization level of the coupled study.
    #[arg(long, default_value_t = 4)]
    n: u64,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    grids: Vec<usize>,
}

/// Error tagged with the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

const INVALID: u8 = 2;
const UNCONVERGED: u8 = 3;
const OUTPUT: u8 = 4;
const AUDIT: u8 = 5;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(fail(INVALID))?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                error: e.into(),
            })?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Classify(p) => cmd_classify(&p, &file),
        Command::Solve(args) => cmd_solve(&args, &file, &out),
        Command::VerifyAll(args) => cmd_verify_all(&args, &file, &out),
        Command::Mms(args) => cmd_mms(&args, &file, &out),
    }
}

fn params_from(
    p: &ParamArgs,
    file: &FileConfig,
    fallback: Option<&RunSpec>,
) -> anyhow::Result<Params> {
    let pick = |flag: &Option<String>, conf: &Option<String>, spec: Option<&String>, name: &str| {
        flag.clone()
            .or_else(|| conf.clone())
            .or_else(|| spec.cloned())
            .ok_or_else(|| anyhow!("missing parameter --{name}"))
    };
    let d =
        p.d.or(file.d)
            .or(fallback.map(|s| s.d))
            .ok_or_else(|| anyhow!("missing parameter --d"))?;
    let r = pick(&p.r, &file.r, fallback.map(|s| &s.r), "r")?;
    let gamma = pick(&p.gamma, &file.gamma, fallback.map(|s| &s.gamma), "gamma")?;
    let theta = pick(&p.theta, &file.theta, fallback.map(|s| &s.theta), "theta")?;
    let m = pick(&p.m, &file.m, fallback.map(|s| &s.m), "m")?;
    Ok(Params::parse(d, &r, &gamma, &theta, &m)?)
}

#[derive(Serialize)]
struct ClassifyEntry {
    tag: RegimeTag,
    u_space: Option<String>,
    v_space: Option<String>,
    explanation: &'static str,
}

#[derive(Serialize)]
struct TableRow {
    tag: RegimeTag,
    exponent: String,
}

#[derive(Serialize)]
struct ClassifyReport {
    params: Params,
    regimes: Vec<ClassifyEntry>,
    p_m: Vec<TableRow>,
    s_m: Option<String>,
    positivity: Option<PositivityVerdict>,
}

fn cmd_classify(p: &ParamArgs, file: &FileConfig) -> Result<(), Failure> {
    let params = params_from(p, file, None).map_err(fail(INVALID))?;
    let regime = classify(&params);
    let s = s_m(&params).ok();
    let positivity =
        (params.r() == int(2) && params.in_dual_space()).then(|| positivity_condition(&params));
    let report = ClassifyReport {
        params,
        regimes: regime
            .entries
            .iter()
            .map(|e| ClassifyEntry {
                tag: e.tag,
                u_space: e.u_space.map(|x| x.to_string()),
                v_space: e.v_space.map(|x| x.to_string()),
                explanation: e.tag.explanation(),
            })
            .collect(),
        p_m: p_m(&params)
            .into_iter()
            .map(|(tag, x)| TableRow {
                tag,
                exponent: x.to_string(),
            })
            .collect(),
        s_m: s.map(|x| x.to_string()),
        positivity,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| fail(1)(e.into()))?;
    println!("{json}");
    for e in &report.regimes {
        eprintln!("{}: {}", e.tag.name(), e.explanation);
    }
    Ok(())
}

fn parse_datum(s: &str) -> anyhow::Result<Datum> {
    let mut parts = s.splitn(2, ':');
    let kind = parts.next().unwrap_or_default();
    let rest = parts
        .next()
        .ok_or_else(|| anyhow!("datum '{s}' needs a value, e.g. constant:1"))?;
    match kind {
        "constant" => Ok(Datum::Constant(
            rest.parse().with_context(|| format!("datum '{s}'"))?,
        )),
        "box" => {
            let (value, half) = rest.split_once(':').unwrap_or((rest, "0.25"));
            Ok(Datum::IndicatorBox {
                value: value.parse().with_context(|| format!("datum '{s}'"))?,
                half_width: half.parse().with_context(|| format!("datum '{s}'"))?,
            })
        }
        "file" => Ok(Datum::File(PathBuf::from(rest))),
        _ => Err(anyhow!(
            "unknown datum kind '{kind}'; expected constant, box or file"
        )),
    }
}

fn run_spec(args: &RunArgs, file: &FileConfig) -> anyhow::Result<RunSpec> {
    let name = args
        .preset
        .clone()
        .or_else(|| file.preset.clone())
        .unwrap_or_else(|| "default-d3".into());
    let mut spec = preset(&name).ok_or_else(|| {
        anyhow!(
            "unknown preset '{name}'; known presets: {}",
            PRESET_NAMES.join(", ")
        )
    })?;
    let params = params_from(&args.params, file, Some(&spec))?;
    spec.d = params.d();
    spec.r = params.r().to_string();
    spec.gamma = params.gamma().to_string();
    spec.theta = params.theta().to_string();
    spec.m = params.m().to_string();
    if let Some(g) = args.grid_d.or(file.grid_d) {
        spec.grid_d = g;
    }
    if let Some(n) = args.n_cells.or(file.n_cells) {
        spec.n_cells = n;
    }
    if let Some(d) = args.datum.as_ref().or(file.datum.as_ref()) {
        spec.datum = parse_datum(d)?;
    }
    if let Some(s) = args.schedule.clone().or_else(|| file.schedule.clone()) {
        spec.schedule = s;
    }
    if let Some(l) = args.lambdas.clone().or_else(|| file.lambdas.clone()) {
        spec.scaling_lambdas = l.clone();
        spec.family_lambdas = l;
    }
    if let Some(n) = args.n_fixed.or(file.n_fixed) {
        spec.n_fixed = n;
    }
    let c = &mut spec.control;
    c.tol_inner = args.tol_inner.or(file.tol_inner).unwrap_or(c.tol_inner);
    c.tol_outer = args.tol_outer.or(file.tol_outer).unwrap_or(c.tol_outer);
    c.max_inner = args.max_inner.or(file.max_inner).unwrap_or(c.max_inner);
    c.max_outer = args.max_outer.or(file.max_outer).unwrap_or(c.max_outer);
    if args.newton || file.newton == Some(true) {
        c.linearization = Linearization::Newton;
    }
    Ok(spec)
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
        .map_err(fail(OUTPUT))
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
) -> Result<(), Failure> {
    let result = File::create(path)
        .with_context(|| format!("cannot write {}", path.display()))
        .and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        });
    result.map_err(fail(OUTPUT))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    write_file(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn cmd_solve(args: &RunArgs, file: &FileConfig, out: &Path) -> Result<(), Failure> {
    let spec = run_spec(args, file).map_err(fail(INVALID))?;
    let data = spec.problem().map_err(|e| fail(INVALID)(e.into()))?;
    prepare_out(out)?;
    let sweep =
        sweep_n(&data, &spec.schedule, &spec.control).map_err(|e| fail(INVALID)(e.into()))?;
    write_csv(
        &out.join("levels.csv"),
        &sweep.table_header(),
        &sweep.table_rows(),
    )?;
    if let Some(last) = sweep.states().last() {
        write_file(&out.join("u.field"), |w| Ok(last.u.write_to(w)?))?;
        write_file(&out.join("v.field"), |w| Ok(last.v.write_to(w)?))?;
        println!("fields written for n={}", last.n);
    }
    write_file(&out.join("run.json"), |w| {
        let meta = serde_json::json!({
            "spec": &spec,
            "all_converged": sweep.all_converged(),
        });
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)?;
        Ok(())
    })?;
    for row in sweep.table_rows() {
        println!("{}", row.join(","));
    }
    if !sweep.all_converged() {
        let bad: Vec<String> = sweep
            .levels
            .iter()
            .filter(|l| !matches!(&l.result, Ok((s, _)) if s.converged))
            .map(|l| l.n.to_string())
            .collect();
        return Err(fail(UNCONVERGED)(anyhow!(
            "levels n={} did not converge; partial results in {}",
            bad.join(","),
            out.display()
        )));
    }
    Ok(())
}

fn audit_row(r: &AuditReport) -> Vec<String> {
    vec![
        r.id.clone(),
        r.pass.to_string(),
        format!("{:.10e}", r.left),
        format!("{:.10e}", r.right),
        format!("{:.10e}", r.slack),
        format!("{:.3e}", r.epsilon),
        r.context_string(),
    ]
}

fn read_field(path: &Path) -> anyhow::Result<Field> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Field::read_from(BufReader::new(f)).with_context(|| format!("cannot parse {}", path.display()))
}

fn cmd_verify_all(args: &VerifyArgs, file: &FileConfig, out: &Path) -> Result<(), Failure> {
    let spec = run_spec(&args.run, file).map_err(fail(INVALID))?;
    let injected = match (&args.state_u, &args.state_v) {
        (Some(u), Some(v)) => {
            let load = || -> anyhow::Result<_> {
                let data = spec.problem()?;
                let n = args
                    .state_n
                    .or_else(|| spec.schedule.last().copied())
                    .ok_or_else(|| anyhow!("empty schedule and no --state-n"))?;
                Ok(state_from_fields(&data, n, read_field(u)?, read_field(v)?)?)
            };
            Some(load().map_err(fail(INVALID))?)
        }
        _ => None,
    };
    prepare_out(out)?;
    let report = verify_all(&spec, injected).map_err(|e| fail(INVALID)(e.into()))?;
    let header: Vec<String> = ["id", "pass", "left", "right", "slack", "epsilon", "context"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report.reports.iter().map(audit_row).collect();
    write_csv(&out.join("audits.csv"), &header, &rows)?;
    write_file(&out.join("audits.jsonl"), |w| {
        for r in &report.reports {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })?;
    let mut summary = format!(
        "preset {}  {}  regimes [{}]\n",
        report.name,
        report.params,
        report.regimes.join(", ")
    );
    for r in &report.reports {
        let n = r.context.get("n").map(String::as_str).unwrap_or("-");
        let tag = if r.pass { "PASS" } else { "FAIL" };
        summary.push_str(&format!(
            "{tag}  {:<28} n={:<8} slack={:+.3e}\n",
            r.id, n, r.slack
        ));
    }
    for note in &report.notes {
        summary.push_str(&format!("note: {note}\n"));
    }
    let passed = report.reports.iter().filter(|r| r.pass).count();
    summary.push_str(&format!(
        "{passed}/{} audits passed\n",
        report.reports.len()
    ));
    write_file(&out.join("summary.txt"), |w| {
        Ok(w.write_all(summary.as_bytes())?)
    })?;
    print!("{summary}");
    if !report.pass() {
        let failures: Vec<String> = report
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} ({})", r.id, r.context_string()))
            .collect();
        return Err(fail(AUDIT)(anyhow!(
            "audit failures:\n  {}",
            failures.join("\n  ")
        )));
    }
    Ok(())
}

fn cmd_mms(args: &MmsArgs, file: &FileConfig, out: &Path) -> Result<(), Failure> {
    let fallback = preset("bounded-d3").expect("built-in preset");
    let params = params_from(&args.params, file, Some(&fallback)).map_err(fail(INVALID))?;
    prepare_out(out)?;
    let study = convergence_study(&params, args.n, &args.grids, &IterationControl::default())
        .map_err(|e| fail(UNCONVERGED)(e.into()))?;
    let header: Vec<String> = ["study", "n_cells", "h", "error", "order"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for report in study.linear.iter().chain(std::iter::once(&study.coupled)) {
        for (i, (&n, &h)) in report.n_cells.iter().zip(&report.h).enumerate() {
            let order = if i == 0 {
                String::new()
            } else {
                format!("{:.4}", report.orders[i - 1])
            };
            rows.push(vec![
                report.label.clone(),
                n.to_string(),
                format!("{h:.10e}"),
                format!("{:.10e}", report.errors[i]),
                order,
            ]);
        }
    }
    write_csv(&out.join("mms.csv"), &header, &rows)?;
    println!("{}", header.join(","));
    for row in &rows {
        println!("{}", row.join(","));
    }
    Ok(())
}
