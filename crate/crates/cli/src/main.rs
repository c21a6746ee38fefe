//! Command-line front end: parameter sweeps, orbit construction, stability
//! tables, delta-continuation, and the verification suite.

mod config;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use combdrive::continuation::{continue_family, trace_slope_fd};
use combdrive::firstorder::{
    predict_stability, tau_prime_even, tau_prime_odd, PredictedKind, TracePrime,
};
use combdrive::orbits::{
    count_zeros, even_orbit, measure_period, odd_orbit, sample_orbit, symmetry_residuals, Symmetry,
};
use combdrive::period::{max_p, period, period_derivative, verify_period_theorem};
use combdrive::verify;
use combdrive::ModelParams;
use config::{parse_delta_grid, resolve_params, FileConfig, CONFIG_ENV};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "combdrive",
    about = "Periodic orbits and Hill-equation stability of the comb-drive finger actuator",
    version
)]
struct Cli {
    /// Physical constant beta (default 0.25)
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// DC voltage V0 (default 0.5)
    #[arg(long, global = true)]
    v0: Option<f64>,
    /// Drive period Tv (default 2 pi)
    #[arg(long, global = true)]
    tv: Option<f64>,
    /// Config file (TOML); defaults to $COMBDRIVE_CONFIG when set
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (tables/trajectories/families); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for row-parallel tasks (0 = rayon default)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SymmetryArg {
    Odd,
    Even,
}

impl From<SymmetryArg> for Symmetry {
    fn from(s: SymmetryArg) -> Symmetry {
        match s {
            SymmetryArg::Odd => Symmetry::Odd,
            SymmetryArg::Even => Symmetry::Even,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Period function sweep: (hbar, T, T') plus the period-theorem report
    Period(PeriodArgs),
    /// Construct an (m,p)-periodic orbit and export its trajectory
    Orbit(OrbitArgs),
    /// First-order stability table over (m,p) with all tau'(0) routes
    Stability(StabilityArgs),
    /// Continue a forced family in delta and compare slopes
    #[command(name = "continue")]
    Continue(ContinueArgs),
    /// Run the full verification suite (criteria 1-12 plus invariants)
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PeriodArgs {
    /// Number of grid energies
    #[arg(long)]
    grid_size: Option<usize>,
    /// Lowest energy as a fraction of hbar*
    #[arg(long, default_value_t = 1e-6)]
    hbar_min_frac: f64,
    /// Highest energy as a fraction of hbar*
    #[arg(long, default_value_t = 1.0 - 1e-6)]
    hbar_max_frac: f64,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long, value_enum)]
    symmetry: Option<SymmetryArg>,
    /// Trajectory samples over one minimal period
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Include every admissible (m,p) with m up to this bound
    #[arg(long)]
    m_max: Option<u32>,
    /// Only the (2n, 1) resonance for this n
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Args)]
struct ContinueArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long, value_enum)]
    symmetry: Option<SymmetryArg>,
    /// Comma-separated deltas starting at 0
    #[arg(long)]
    delta_grid: Option<String>,
    /// Verify against an existing family file and continue deterministically
    #[arg(long, default_value_t = false)]
    resume: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Only these criteria (comma-separated ids, e.g. 1,4,11)
    #[arg(long)]
    criteria: Option<String>,
    /// Skip the module invariant extras
    #[arg(long, default_value_t = false)]
    no_invariants: bool,
    /// Also run the loosened-integrator negative control
    #[arg(long, default_value_t = false)]
    negative_control: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // input-shaped errors exit 2, everything else 1
            let msg = format!("{e:#}");
            if msg.contains("inadmissible")
                || msg.contains("outside")
                || msg.contains("invalid")
                || msg.contains("parsing config")
                || msg.contains("must")
                || msg.contains("required")
            {
                ExitCode::from(EXIT_BAD_INPUT)
            } else {
                ExitCode::from(EXIT_VERIFY_FAIL)
            }
        }
    }
}

struct Ctx {
    params: ModelParams,
    file: FileConfig,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    /// Write `text` to --out or stdout.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .ok();
    }
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = match config_path {
        Some(p) => FileConfig::load(&p)?,
        None => FileConfig::default(),
    };
    let params = resolve_params(&file, cli.beta, cli.v0, cli.tv)?;
    let ctx = Ctx {
        params,
        file,
        out: cli.out.clone(),
        format: cli.format,
    };

    match cli.command {
        Command::Period(args) => cmd_period(&ctx, args),
        Command::Orbit(args) => cmd_orbit(&ctx, args),
        Command::Stability(args) => cmd_stability(&ctx, args),
        Command::Continue(args) => cmd_continue(&ctx, args),
        Command::Verify(args) => cmd_verify(&ctx, args),
    }
}

fn cmd_period(ctx: &Ctx, args: PeriodArgs) -> Result<ExitCode> {
    let p = &ctx.params;
    let n = args
        .grid_size
        .or(ctx.file.task.grid_size)
        .unwrap_or(100)
        .max(2);
    if !(args.hbar_min_frac > 0.0
        && args.hbar_max_frac < 1.0
        && args.hbar_min_frac < args.hbar_max_frac)
    {
        return Err(anyhow!(
            "invalid energy window: fractions must satisfy 0 < min < max < 1 (hbar* is excluded)"
        ));
    }
    let lo = args.hbar_min_frac * p.h_star;
    let hi = args.hbar_max_frac * p.h_star;
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut rows = String::new();
    if ctx.format == Format::Csv {
        rows.push_str("hbar,T,dT_dhbar\n");
    }
    let mut hb = lo;
    for _ in 0..n {
        let t = period(hb, p)?;
        let dt = period_derivative(hb, p)?;
        match ctx.format {
            Format::Csv => rows.push_str(&format!("{hb},{t},{dt}\n")),
            Format::Jsonl => rows.push_str(&format!(
                "{}\n",
                serde_json::json!({"hbar": hb, "T": t, "dT_dhbar": dt})
            )),
        }
        hb *= ratio;
    }
    ctx.emit(&rows)?;

    let rep = verify_period_theorem(p, n.max(40))?;
    let n_pass = [rep.limit_pass(), rep.growth_pass(), rep.derivative_pass()]
        .iter()
        .filter(|b| **b)
        .count();
    eprintln!(
        "period theorem: {n_pass}/3 properties pass \
         (limit err {:.2e}; min T' {:.4e}; max FD rel err {:.2e})",
        rep.limit_error, rep.min_derivative, rep.max_fd_rel_err
    );
    Ok(if rep.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAIL)
    })
}

fn cmd_orbit(ctx: &Ctx, args: OrbitArgs) -> Result<ExitCode> {
    let p = &ctx.params;
    let m = args
        .m
        .or(ctx.file.task.m)
        .ok_or_else(|| anyhow!("--m is required"))?;
    let pp = args
        .p
        .or(ctx.file.task.p)
        .ok_or_else(|| anyhow!("--p is required"))?;
    let symmetry: Symmetry = args
        .symmetry
        .map(Symmetry::from)
        .or(match ctx.file.task.symmetry.as_deref() {
            Some("odd") => Some(Symmetry::Odd),
            Some("even") => Some(Symmetry::Even),
            _ => None,
        })
        .unwrap_or(Symmetry::Odd);
    let points = args.points.or(ctx.file.task.points).unwrap_or(512);

    let orbit = match symmetry {
        Symmetry::Odd => odd_orbit(m, pp, p),
        Symmetry::Even => even_orbit(m, pp, p),
    }?;

    let traj = sample_orbit(&orbit, p, points)?;
    let mut csv = String::from("t,x,xdot,H\n");
    for (t, s) in traj.times.iter().zip(traj.states.iter()) {
        let h = 0.5 * s[1] * s[1] + combdrive::model::energy(s[0], p)?;
        csv.push_str(&format!("{t},{},{},{h}\n", s[0], s[1]));
    }
    ctx.emit(&csv)?;

    let zc = count_zeros(&orbit, p)?;
    let res = symmetry_residuals(&orbit, p)?;
    let t_meas = measure_period(&orbit, p)?;
    eprintln!(
        "orbit ({m},{pp}) {symmetry}: hbar = {}, init = {}, minimal period = {} \
         (measured {t_meas}), zeros per m Tv = {} (expect {}), max symmetry residual = {:.3e}, \
         energy drift = {:.3e}",
        orbit.level.hbar,
        orbit.init,
        orbit.minimal_period,
        zc.count,
        2 * pp,
        res.max_residual(),
        traj.energy_drift
    );
    Ok(ExitCode::SUCCESS)
}

struct StabilityRow {
    m: u32,
    p: u32,
    sym: Symmetry,
    tp: TracePrime,
    prediction: PredictedKind,
    freq_ok: bool,
    checks_ok: bool,
}

fn stability_row(
    m: u32,
    pp: u32,
    sym: Symmetry,
    params: &ModelParams,
) -> combdrive::Result<StabilityRow> {
    let tp = match sym {
        Symmetry::Odd => tau_prime_odd(m, pp, params)?,
        Symmetry::Even => tau_prime_even(m, pp, params)?,
    };
    let pred = predict_stability(m, pp, sym, params)?;
    let checks_ok = if tp.delicate {
        tp.value.abs() <= 1e-8 * tp.scale
    } else {
        tp.cross_method_spread() <= 1e-8
    };
    Ok(StabilityRow {
        m,
        p: pp,
        sym,
        tp,
        prediction: pred.kind,
        freq_ok: pred.frequency_condition_ok,
        checks_ok,
    })
}

fn cmd_stability(ctx: &Ctx, args: StabilityArgs) -> Result<ExitCode> {
    use rayon::prelude::*;
    let p = &ctx.params;
    let m_max = args.m_max.or(ctx.file.task.m_max).unwrap_or(8);
    let mut jobs = Vec::new();
    if let Some(n) = args.n {
        for sym in [Symmetry::Odd, Symmetry::Even] {
            jobs.push((2 * n, 1, sym));
        }
    } else {
        for m in 1..=m_max {
            for pp in 1..=max_p(m, p) {
                for sym in [Symmetry::Odd, Symmetry::Even] {
                    jobs.push((m, pp, sym));
                }
            }
        }
    }
    let rows: Vec<StabilityRow> = jobs
        .par_iter()
        .map(|&(m, pp, sym)| stability_row(m, pp, sym, p))
        .collect::<combdrive::Result<Vec<_>>>()?;

    let mut text = String::new();
    match ctx.format {
        Format::Csv => {
            text.push_str(
                "m,p,n,symmetry,delicate,tau_prime,general_integral,cosine_form,quarter_form,a_n,scale,prediction,frequency_ok,cross_checks_ok\n",
            );
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.m,
                    r.p,
                    r.tp.n.map(|n| n.to_string()).unwrap_or_default(),
                    r.sym,
                    r.tp.delicate,
                    r.tp.value,
                    r.tp.general_integral,
                    r.tp.cosine_form,
                    r.tp.quarter_form.map(|v| v.to_string()).unwrap_or_default(),
                    r.tp.a_n.map(|v| v.to_string()).unwrap_or_default(),
                    r.tp.scale,
                    r.prediction,
                    r.freq_ok,
                    r.checks_ok
                ));
            }
        }
        Format::Jsonl => {
            for r in &rows {
                text.push_str(&format!(
                    "{}\n",
                    serde_json::json!({
                        "m": r.m, "p": r.p, "n": r.tp.n, "symmetry": r.sym.to_string(),
                        "delicate": r.tp.delicate, "tau_prime": r.tp.value,
                        "general_integral": r.tp.general_integral,
                        "cosine_form": r.tp.cosine_form,
                        "quarter_form": r.tp.quarter_form,
                        "a_n": r.tp.a_n, "scale": r.tp.scale,
                        "prediction": r.prediction.to_string(),
                        "frequency_ok": r.freq_ok, "cross_checks_ok": r.checks_ok,
                    })
                ));
            }
        }
    }
    ctx.emit(&text)?;

    let all_ok = rows.iter().all(|r| r.checks_ok);
    for r in rows.iter().filter(|r| !r.tp.delicate) {
        eprintln!(
            "({},{}) {}: tau' = {:+.6e} | prediction: {} (freq ok {})",
            r.m, r.p, r.sym, r.tp.value, r.prediction, r.freq_ok
        );
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAIL)
    })
}

fn family_jsonl(fam: &combdrive::continuation::FamilyResult) -> String {
    let mut text = String::new();
    for o in &fam.members {
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "symmetry": o.symmetry.to_string(), "m": o.m, "p": o.p,
                "delta": o.delta, "init": o.init, "trace": o.trace,
                "shooting_residual": o.shooting_residual,
                "return_residual": o.return_residual,
            })
        ));
    }
    if let Some((delta, reason)) = &fam.aborted {
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({"aborted_at": delta, "reason": reason})
        ));
    }
    text
}

fn cmd_continue(ctx: &Ctx, args: ContinueArgs) -> Result<ExitCode> {
    let p = &ctx.params;
    let m = args
        .m
        .or(ctx.file.task.m)
        .ok_or_else(|| anyhow!("--m is required"))?;
    let pp = args
        .p
        .or(ctx.file.task.p)
        .ok_or_else(|| anyhow!("--p is required"))?;
    let symmetry: Symmetry = args
        .symmetry
        .map(Symmetry::from)
        .or(match ctx.file.task.symmetry.as_deref() {
            Some("odd") => Some(Symmetry::Odd),
            Some("even") => Some(Symmetry::Even),
            _ => None,
        })
        .unwrap_or(Symmetry::Odd);
    let grid = match (&args.delta_grid, &ctx.file.task.delta_grid) {
        (Some(s), _) => parse_delta_grid(s)?,
        (None, Some(g)) => g.clone(),
        (None, None) => vec![0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2],
    };

    let fam = continue_family(m, pp, symmetry, &grid, p)?;
    let text = family_jsonl(&fam);

    if args.resume {
        if let Some(path) = &ctx.out {
            if path.exists() {
                let existing = std::fs::read_to_string(path)?;
                let fresh: Vec<&str> = text.lines().collect();
                for (i, old) in existing.lines().enumerate() {
                    if i >= fresh.len() || old != fresh[i] {
                        return Err(anyhow!(
                            "resume mismatch at line {}: persisted family differs from recomputation",
                            i + 1
                        ));
                    }
                }
                eprintln!(
                    "resume: {} persisted rows reproduced identically",
                    existing.lines().count()
                );
            }
        }
    }
    ctx.emit(&text)?;

    eprintln!("delta,tau");
    for o in &fam.members {
        eprintln!("{},{}", o.delta, o.trace);
    }

    if fam.members.len() >= 3 {
        let slope = trace_slope_fd(&fam)?;
        let tp = match symmetry {
            Symmetry::Odd => tau_prime_odd(m, pp, p)?,
            Symmetry::Even => tau_prime_even(m, pp, p)?,
        };
        if tp.delicate {
            eprintln!(
                "slope comparison: fd slope {slope:.6e}; delicate case, |slope|/scale = {:.3e}",
                slope.abs() / tp.scale
            );
        } else {
            let rel = ((slope - tp.value) / tp.value).abs();
            eprintln!(
                "slope comparison: fd {slope:.6e} vs analytic {:.6e} (relative {rel:.3e}{})",
                tp.value,
                if rel <= 0.01 { ", within 1%" } else { "" }
            );
        }
    }
    if let Some((delta, reason)) = &fam.aborted {
        eprintln!("family aborted at delta = {delta}: {reason}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Ctx, args: VerifyArgs) -> Result<ExitCode> {
    let p = &ctx.params;
    let selected: Option<Vec<u32>> = match &args.criteria {
        Some(list) => Some(
            list.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|e| anyhow!("invalid criterion id '{t}': {e}"))
                })
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let mut checks = Vec::new();
    for (i, c) in verify::run_all(p)?.into_iter().enumerate() {
        let id = i as u32 + 1;
        if selected.as_ref().is_none_or(|s| s.contains(&id)) {
            checks.push(c);
        }
    }
    if !args.no_invariants && selected.is_none() {
        checks.extend(verify::extra_invariant_checks(p)?);
    }
    if args.negative_control {
        checks.push(verify::negative_control(p)?);
    }

    let mut text = String::new();
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        if ctx.format == Format::Jsonl {
            text.push_str(&format!("{}\n", serde_json::to_string(c)?));
        }
        writeln!(
            stdout,
            "{:<40} {}  measured {:>12.4e}  threshold {:>8.1e}  {:>7.2}s",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.measured,
            c.threshold,
            c.seconds
        )?;
        if !c.passed {
            writeln!(stdout, "    -> {}", c.detail)?;
        }
    }
    if ctx.format == Format::Jsonl {
        ctx.emit(&text)?;
    }
    let n_pass = checks.iter().filter(|c| c.passed).count();
    writeln!(stdout, "{n_pass}/{} checks pass", checks.len())?;
    Ok(if n_pass == checks.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAIL)
    })
}
