use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use halfspec::oracles::{bessel_mu, fd_pucci_mu1, pseudo_plap_spacing, rayleigh_lambda_eq, RadialDomain};
use halfspec::radial_operator::{Params, Sign};
use halfspec::shooting::{solve_w, Event, PicardInfo, ShootConfig, Stop};
use halfspec::spectrum::{annulus_first, eigenvalues_ball, spectrum_report, AnnulusProblem, Spectrum, SpectrumReport};
use halfspec::validation::{validate, Status, ValidateOptions};
use log::info;
use serde::Serialize;

mod config;
mod output;
mod sweep;

use config::{parse_grid, parse_list, Format, Settings, Signs};
use output::{num, opt_num, sibling, write_csv, write_json};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or paths (exit 2).
    Input(String),
    /// A solver or oracle failed (exit 3).
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

/// Tags a library error with the stage that produced it.
fn stage<T>(r: halfspec::Result<T>, name: &str) -> Result<T, Failure> {
    use halfspec::Error;
    r.map_err(|e| match e {
        Error::InvalidParams(_) | Error::IndexOutOfRange { .. } => Failure::Input(format!("{name}: {e}")),
        _ => Failure::Numerical(format!("{name} failed: {e}")),
    })
}

#[derive(Parser)]
#[command(name = "halfspec", version, about = "Radial half-eigenvalues of fully nonlinear Pucci-type operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the radial solution and write samples and events.
    SolveW(Common),
    /// First K half-eigenvalues of the unit ball.
    Spectrum(Common),
    /// First half-eigenvalue of the annulus rho < r < 1.
    Annulus(Common),
    /// mu_k over a grid of (alpha, a), resumable.
    Sweep(Common),
    /// Check the spectral inequalities and write a report.
    Validate(ValidateArgs),
    /// Compare solver output with the independent oracles that apply.
    OracleCompare(OracleArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Exponent alpha > -1 (sweep: lo:hi:step).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    /// Lower ellipticity constant (sweep: lo:hi:step).
    #[arg(long = "a", allow_negative_numbers = true)]
    lower: Option<String>,
    /// Upper ellipticity constant.
    #[arg(long = "A", allow_negative_numbers = true)]
    upper: Option<String>,
    /// Space dimension N.
    #[arg(long)]
    dim: Option<String>,
    /// plus, minus or both.
    #[arg(long)]
    sign: Option<String>,
    /// Number of zeros or eigenvalues (sweep: the index k).
    #[arg(long, short = 'k', visible_alias = "k")]
    zeros: Option<String>,
    /// Inner radius, or a comma separated list.
    #[arg(long)]
    rho: Option<String>,
    /// Relative ODE tolerance.
    #[arg(long)]
    tol_ode: Option<String>,
    /// Picard fixed-point tolerance.
    #[arg(long)]
    tol_picard: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv (default: from the output extension, else json).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Also check the growth exponent (uses K >= 32).
    #[arg(long)]
    growth: bool,
    /// Perturbation sizes for continuity sweeps, e.g. 1e-1,1e-2,1e-3.
    #[arg(long)]
    continuity: Option<String>,
}

#[derive(Args, Clone)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Mesh nodes of the finite-difference oracle.
    #[arg(long)]
    fd_nodes: Option<String>,
}

impl Common {
    fn settings(&self, extra: Vec<(&'static str, String)>) -> Result<Settings, Failure> {
        let file = self.config.as_deref().map(config::read_file).transpose()?;
        let mut flags: Vec<(&'static str, String)> = [
            ("alpha", &self.alpha),
            ("a", &self.lower),
            ("A", &self.upper),
            ("dim", &self.dim),
            ("sign", &self.sign),
            ("zeros", &self.zeros),
            ("rho", &self.rho),
            ("tol-ode", &self.tol_ode),
            ("tol-picard", &self.tol_picard),
            ("format", &self.format),
            ("jobs", &self.jobs),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if let Some(o) = &self.out {
            flags.push(("out", o.display().to_string()));
        }
        flags.extend(extra);
        Ok(Settings::merge(file, flags))
    }
}

fn sign_list(s: Signs) -> Vec<Sign> {
    match s {
        Signs::Plus => vec![Sign::Plus],
        Signs::Minus => vec![Sign::Minus],
        Signs::Both => vec![Sign::Plus, Sign::Minus],
    }
}

fn init_pool(s: &Settings, default: usize) -> Result<usize, Failure> {
    let jobs = s.usize_or("jobs", default)?.max(1);
    // a second initialization only happens in tests; the first pool stays
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    Ok(jobs)
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
struct SampleRow {
    r: f64,
    w: f64,
    v: f64,
    dw: f64,
}

#[derive(Serialize)]
struct TrajectoryOut {
    sign: Sign,
    params: Params,
    samples: Vec<SampleRow>,
    events: Vec<Event>,
    picard: Vec<PicardInfo>,
}

fn cmd_solve_w(s: &Settings) -> Result<(), Failure> {
    let p = s.params()?;
    let cfg = s.solver()?;
    let k = s.zeros(3)?;
    init_pool(s, 1)?;
    let mut runs = Vec::new();
    for sign in sign_list(s.signs(Signs::Plus)?) {
        let t = stage(solve_w(&p, sign, Stop::Zeros(k), &cfg), "shooting")?;
        let samples = t
            .samples()
            .iter()
            .map(|x| SampleRow { r: x.r, w: x.w, v: x.v, dw: x.slope(p.alpha) })
            .collect();
        info!("{sign}: {} zeros, last at {}", k, t.r_end());
        runs.push(TrajectoryOut { sign, params: p, samples, events: t.events.clone(), picard: t.picard_infos().copied().collect() });
    }
    let out = s.out();
    match s.format()? {
        Format::Json => write_json(out.as_deref(), &runs),
        Format::Csv => {
            let rows: Vec<Vec<String>> = runs
                .iter()
                .flat_map(|t| t.samples.iter().map(move |x| vec![t.sign.to_string(), num(x.r), num(x.w), num(x.v), num(x.dw)]))
                .collect();
            write_csv(out.as_deref(), &["sign", "r", "w", "v", "dw"], &rows)?;
            if let Some(o) = &out {
                let ev: Vec<Vec<String>> = runs
                    .iter()
                    .flat_map(|t| {
                        t.events.iter().map(move |e| vec![t.sign.to_string(), format!("{:?}", e.kind), num(e.r), num(e.w)])
                    })
                    .collect();
                write_csv(Some(&sibling(o, "events", "csv")), &["sign", "kind", "r", "w"], &ev)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    beta_plus: Option<f64>,
    mu_plus: Option<f64>,
    beta_minus: Option<f64>,
    mu_minus: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumOut {
    params: Params,
    rows: Vec<SpectrumRow>,
    report: Option<SpectrumReport>,
}

fn cmd_spectrum(s: &Settings) -> Result<(), Failure> {
    let p = s.params()?;
    let cfg = s.solver()?;
    let k = s.zeros(8)?;
    init_pool(s, 1)?;
    let mut plus: Option<Spectrum> = None;
    let mut minus: Option<Spectrum> = None;
    for sign in sign_list(s.signs(Signs::Both)?) {
        let spec = stage(eigenvalues_ball(&p, sign, k, &cfg), "spectrum")?;
        match sign {
            Sign::Plus => plus = Some(spec),
            Sign::Minus => minus = Some(spec),
        }
    }
    let at = |sp: &Option<Spectrum>, i: usize| sp.as_ref().map(|x| (x.betas[i], x.mus[i]));
    let rows: Vec<SpectrumRow> = (0..k)
        .map(|i| {
            let (bp, mp) = at(&plus, i).unzip();
            let (bm, mm) = at(&minus, i).unzip();
            SpectrumRow { k: i + 1, beta_plus: bp, mu_plus: mp, beta_minus: bm, mu_minus: mm }
        })
        .collect();
    let report = match (&plus, &minus) {
        (Some(a), Some(b)) => Some(spectrum_report(a, b)),
        _ => None,
    };
    let out = s.out();
    match s.format()? {
        Format::Json => write_json(out.as_deref(), &SpectrumOut { params: p, rows, report }),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.k.to_string(), opt_num(r.beta_plus), opt_num(r.mu_plus), opt_num(r.beta_minus), opt_num(r.mu_minus)])
                .collect();
            write_csv(out.as_deref(), &["k", "beta_plus", "mu_plus", "beta_minus", "mu_minus"], &table)?;
            if let (Some(o), Some(rep)) = (&out, &report) {
                write_json(Some(&sibling(o, "report", "json")), rep)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AnnulusRow {
    rho: f64,
    sign: Sign,
    lambda: f64,
    beta: f64,
    evaluations: usize,
    fallback_scan: bool,
}

fn cmd_annulus(s: &Settings) -> Result<(), Failure> {
    let p = s.params()?;
    let cfg = s.solver()?;
    let rhos = parse_list("rho", s.raw("rho").unwrap_or("0.5"))?;
    init_pool(s, 1)?;
    let mut rows = Vec::new();
    for &rho in &rhos {
        for sign in sign_list(s.signs(Signs::Both)?) {
            let prob = stage(AnnulusProblem::new(rho, p, sign), "annulus")?;
            let e = stage(annulus_first(&prob, &cfg), "annulus shooting")?;
            rows.push(AnnulusRow { rho, sign, lambda: e.lambda, beta: e.beta, evaluations: e.evaluations, fallback_scan: e.fallback_scan });
        }
    }
    let out = s.out();
    match s.format()? {
        Format::Json => write_json(out.as_deref(), &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![num(r.rho), r.sign.to_string(), num(r.lambda), num(r.beta), r.evaluations.to_string(), r.fallback_scan.to_string()])
                .collect();
            write_csv(out.as_deref(), &["rho", "sign", "lambda", "beta", "evaluations", "fallback_scan"], &table)
        }
    }
}

fn cmd_sweep(s: &Settings) -> Result<(), Failure> {
    let out = s.out().ok_or_else(|| Failure::Input("sweep needs --out (the journal is kept next to it)".into()))?;
    let alphas = parse_grid("alpha", s.raw("alpha").unwrap_or("0"))?;
    let lowers = parse_grid("a", s.raw("a").unwrap_or("1"))?;
    let uppers = parse_grid("A", s.raw("A").unwrap_or("1"))?;
    let dim = s.usize_or("dim", 3)?;
    let k = s.zeros(1)?;
    let signs = s.signs(Signs::Both)?;
    let cfg = s.solver()?;
    let jobs = s.usize_or("jobs", cores())?.max(1);
    let mut nodes = Vec::new();
    for &alpha in &alphas {
        for &lower in &lowers {
            for &upper in &uppers {
                let params = Params { alpha, lower, upper, dim: dim as u32 };
                params.validate().map_err(|e| Failure::Input(format!("grid node (alpha {alpha}, a {lower}, A {upper}): {e}")))?;
                nodes.push(sweep::Node { params, k });
            }
        }
    }
    let journal = out.with_file_name(format!("{}.journal", out.file_name().and_then(|n| n.to_str()).unwrap_or("sweep")));
    let mut results = sweep::run(&nodes, signs, &cfg, &journal, jobs)?;
    results.sort_by(|x, y| {
        let (a, b) = (&x.node.params, &y.node.params);
        (a.alpha, a.lower, a.upper).partial_cmp(&(b.alpha, b.lower, b.upper)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    let resumed = results.iter().filter(|r| r.resumed).count();
    info!("sweep: {} nodes, {resumed} from the journal, {failed} failed", results.len());
    match s.format()? {
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    let p = &r.node.params;
                    let (mp, mm, status) = match &r.outcome {
                        Ok((a, b)) => (opt_num(*a), opt_num(*b), "ok".to_string()),
                        Err(e) => (String::new(), String::new(), e.clone()),
                    };
                    vec![num(p.alpha), num(p.lower), num(p.upper), p.dim.to_string(), r.node.k.to_string(), mp, mm, status]
                })
                .collect();
            write_csv(Some(&out), &["alpha", "a", "A", "dim", "k", "mu_plus", "mu_minus", "status"], &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                params: Params,
                k: usize,
                mu_plus: Option<f64>,
                mu_minus: Option<f64>,
                error: Option<&'a str>,
            }
            let rows: Vec<Row> = results
                .iter()
                .map(|r| {
                    let (mp, mm) = r.outcome.as_ref().map_or((None, None), |o| *o);
                    Row { params: r.node.params, k: r.node.k, mu_plus: mp, mu_minus: mm, error: r.outcome.as_ref().err().map(String::as_str) }
                })
                .collect();
            write_json(Some(&out), &rows)?;
        }
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!("sweep: {failed} of {} nodes failed; rerun to retry them", results.len())));
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let mut extra = Vec::new();
    if args.growth {
        extra.push(("growth", "true".to_string()));
    }
    if let Some(c) = &args.continuity {
        extra.push(("continuity", c.clone()));
    }
    let s = args.common.settings(extra)?;
    let p = s.params()?;
    let cfg = s.solver()?;
    init_pool(&s, cores())?;
    let opts = ValidateOptions {
        k: s.zeros(4)?.max(2),
        rhos: parse_list("rho", s.raw("rho").unwrap_or("0.3,0.5,0.7"))?,
        growth: s.bool_or("growth", false)?,
        continuity_steps: match s.raw("continuity") {
            Some(c) => parse_list("continuity", c)?,
            None => Vec::new(),
        },
    };
    let report = stage(validate(&p, &opts, &cfg), "validate")?;
    eprintln!(
        "{} pass, {} fail, {} inconclusive",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Inconclusive)
    );
    let out = s.out();
    match s.format()? {
        Format::Json => write_json(out.as_deref(), &report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    let status = serde_json::to_value(c.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                    vec![c.name.clone(), status, num(c.margin), num(c.tol), c.inputs_digest.clone(), c.detail.clone().unwrap_or_default()]
                })
                .collect();
            write_csv(out.as_deref(), &["name", "status", "margin", "tol", "inputs_digest", "detail"], &rows)
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    quantity: String,
    solver: f64,
    oracle: f64,
    method: String,
    abs_delta: f64,
    rel_delta: f64,
    certified_error: Option<f64>,
}

impl CompareRow {
    fn new(quantity: String, solver: f64, oracle: halfspec::oracles::OracleResult) -> Self {
        let d = (solver - oracle.value).abs();
        CompareRow {
            quantity,
            solver,
            oracle: oracle.value,
            method: oracle.method,
            abs_delta: d,
            rel_delta: d / oracle.value.abs(),
            certified_error: oracle.certified_error,
        }
    }
}

fn cmd_oracle_compare(args: &OracleArgs) -> Result<(), Failure> {
    let extra = args.fd_nodes.clone().map(|n| vec![("fd-nodes", n)]).unwrap_or_default();
    let s = args.common.settings(extra)?;
    let p = s.params()?;
    let cfg: ShootConfig = s.solver()?;
    let k = s.zeros(4)?;
    init_pool(&s, 1)?;
    let fd_nodes = s.usize_or("fd-nodes", 4096)?;
    let sym = p.is_symmetric();
    let mut rows = Vec::new();
    let plus = stage(eigenvalues_ball(&p, Sign::Plus, k, &cfg), "spectrum")?;

    if sym && p.alpha == 0.0 && (2..=12).contains(&p.dim) {
        for i in 1..=k {
            let mut o = stage(bessel_mu(p.dim, i), "Bessel oracle")?;
            // a = A = c rescales the radial Laplacian eigenvalues by c
            o.value *= p.lower;
            o.certified_error = o.certified_error.map(|e| e * p.lower);
            rows.push(CompareRow::new(format!("mu_{i}"), plus.mus[i - 1], o));
        }
    }
    if sym && p.dim == 1 {
        let o = stage(pseudo_plap_spacing(p.alpha, p.lower), "energy oracle")?;
        for i in 1..k {
            let gap = plus.betas[i] - plus.betas[i - 1];
            rows.push(CompareRow::new(format!("beta_{}-beta_{i}", i + 1), gap, o.clone()));
        }
        let mut half = o.clone();
        half.value *= 0.5;
        half.certified_error = half.certified_error.map(|e| 0.5 * e);
        rows.push(CompareRow::new("beta_1".into(), plus.betas[0], half));
    }
    if p.alpha == 0.0 {
        let minus = stage(eigenvalues_ball(&p, Sign::Minus, 1, &cfg), "spectrum")?;
        for (sign, mu) in [(Sign::Plus, plus.mus[0]), (Sign::Minus, minus.mus[0])] {
            let fd = stage(fd_pucci_mu1(&p, sign, fd_nodes), "finite-difference oracle")?;
            rows.push(CompareRow::new(format!("mu_1 {sign}"), mu, fd.estimate));
        }
    }
    if sym {
        let r = stage(rayleigh_lambda_eq(p.alpha, p.dim, RadialDomain::Ball { radius: 1.0 }, 100), "Rayleigh oracle")?;
        let mut o = r.estimate;
        o.value *= p.lower;
        o.certified_error = o.certified_error.map(|e| e * p.lower);
        rows.push(CompareRow::new("mu_1 vs a lambda_eq".into(), plus.mus[0], o));
    }
    if rows.is_empty() {
        return Err(Failure::Input("no independent oracle covers alpha != 0 with a < A".into()));
    }
    let out = s.out();
    match s.format()? {
        Format::Json => write_json(out.as_deref(), &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![r.quantity.clone(), num(r.solver), num(r.oracle), r.method.clone(), num(r.abs_delta), num(r.rel_delta), opt_num(r.certified_error)]
                })
                .collect();
            write_csv(out.as_deref(), &["quantity", "solver", "oracle", "method", "abs_delta", "rel_delta", "certified_error"], &table)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::SolveW(c) => cmd_solve_w(&c.settings(Vec::new())?),
        Cmd::Spectrum(c) => cmd_spectrum(&c.settings(Vec::new())?),
        Cmd::Annulus(c) => cmd_annulus(&c.settings(Vec::new())?),
        Cmd::Sweep(c) => cmd_sweep(&c.settings(Vec::new())?),
        Cmd::Validate(v) => cmd_validate(v),
        Cmd::OracleCompare(o) => cmd_oracle_compare(o),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HALFSPEC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Input(m) | Failure::Numerical(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
