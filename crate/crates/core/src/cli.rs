//! Batch front end: `analyze`, `normalize`, `verify`, `diophantine`.
//!
//! Every command builds a machine report (a JSON value with sorted keys and
//! no timing or thread information, so it is byte-stable) and a short human
//! rendering. [`run`] returns the process exit code.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::diophantine::{diophantine_audit, separation_bound_check};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::normalform::{normalize, TransformLog};
use crate::problem::{Arithmetic, ProblemFile, Setup};
use crate::resonance::{enumerate_resonance, ResonanceModule};
use crate::scalar::{GaussRational, Scalar};
use crate::text::{field_from_text, field_to_text};
use crate::verify::{check_tangent_sigma, conjugacy_scaling, unit_direction, SigmaSpec};

#[derive(Debug, Parser)]
#[command(name = "resonant-nf", version, about = "Resonant normal forms of truncated vector fields")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Exact Gaussian-rational arithmetic.
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,
    /// Complex double arithmetic.
    #[arg(long, global = true)]
    pub float: bool,
    /// Override the field seed of the problem file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the machine report here.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonance module and Diophantine audit.
    Analyze { file: PathBuf },
    /// Normalize and emit the result, the transform and the trace.
    Normalize {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tangency and conjugacy scaling from a `normalize --out` directory.
    Verify {
        file: PathBuf,
        #[arg(long)]
        transform: PathBuf,
        /// Also write the scaling tables as CSV into this directory.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Diophantine audit with explicit exponent and degree.
    Diophantine {
        file: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        degree: u32,
    },
}

/// Output of a command.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub machine: Value,
    pub human: String,
}

impl Report {
    /// Canonical JSON text of the machine section.
    pub fn machine_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.machine).expect("report serializes");
        s.push('\n');
        s
    }
}

fn arithmetic(c: &Common) -> Option<Arithmetic> {
    if c.exact {
        Some(Arithmetic::Exact)
    } else if c.float {
        Some(Arithmetic::Float)
    } else {
        None
    }
}

fn load(file: &Path, c: &Common) -> Result<Setup> {
    let (p, base) = ProblemFile::load(file)?;
    Setup::new(p, &base, c.seed, arithmetic(c))
}

fn problem_section(s: &Setup) -> Value {
    json!({
        "schema_version": s.problem.schema_version,
        "model": s.problem.model.name(),
        "seed": s.seed,
        "arithmetic": s.arithmetic,
        "degree_cutoff": s.ctx.degree_cutoff,
        "mode_cutoff": s.ctx.mode_cutoff(),
        "dimension": s.ctx.dimension(),
        "momentum": s.ctx.momentum,
        "theta": s.ctx.theta,
    })
}

/// Machine view of a resonance module.
pub fn module_json(m: &ResonanceModule) -> Value {
    let p: serde_json::Map<String, Value> = m
        .p_generators
        .iter()
        .map(|(k, v)| (k.to_string(), Value::from(v.iter().map(|p| p.to_string()).collect::<Vec<_>>())))
        .collect();
    json!({
        "q_generators": m.q_generators.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "p_generators": p,
        "M": m.m,
        "M1": m.m1,
        "m_star_minimal": m.m_star_minimal,
        "m_star_bound": m.m_star_bound,
        "m_star_certified": m.m_star_certified,
        "delta_equals_m": m.delta_equals_m,
        "window": m.window,
        "module_size": m.module_size,
        "resonant_pairs": m.resonant_pairs,
        "completeness_caveat": format!(
            "generators are complete only for |q| <= {}; none beyond the window can be ruled out",
            m.window
        ),
    })
}

fn module_human(m: &ResonanceModule) -> String {
    let mut s = String::new();
    let q: Vec<String> = m.q_generators.iter().map(|q| format!("[{q}]")).collect();
    s += &format!("Q generators: {}\n", if q.is_empty() { "none".into() } else { q.join(" ") });
    for (k, ps) in &m.p_generators {
        let v: Vec<String> = ps.iter().map(|p| format!("[{p}]")).collect();
        s += &format!("P generators along {k}: {}\n", v.join(" "));
    }
    s += &format!(
        "M = {}, M1 = {}, M* minimal = {}, M* bound = {}, Δ = M: {}\n",
        m.m, m.m1, m.m_star_minimal, m.m_star_bound, m.delta_equals_m
    );
    if !m.m_star_certified {
        s += "warning: the last non-J2 resonance sits at the window edge; M* is a lower estimate\n";
    }
    s
}

fn diophantine_section(s: &Setup, module: &ResonanceModule, tau: f64, degree: u32) -> Result<(Value, String)> {
    let fast = diophantine_audit(&s.model, &s.ctx, tau, degree, module, true)?;
    let brute = diophantine_audit(&s.model, &s.ctx, tau, degree, module, false)?;
    let agree = fast.gamma_max.map(f64::to_bits) == brute.gamma_max.map(f64::to_bits);
    let (hits, bad) = separation_bound_check(&s.model, &s.ctx, degree);
    let gamma = match fast.gamma_max {
        Some(g) => Value::from(g),
        None => Value::from("unconstrained"),
    };
    let v = json!({
        "tau": tau,
        "degree_bound": degree,
        "window": format!("|p| <= {degree}, modes within cutoff {}", s.ctx.mode_cutoff()),
        "gamma_max": gamma,
        "worst_p": fast.worst_p,
        "enumerated_count": brute.enumerated_count,
        "excluded_resonant": brute.excluded_resonant,
        "classification_mismatches": brute.classification_mismatches,
        "fast_path_skips": fast.fast_path_skips,
        "fast_path_agrees": agree,
        "separation_premise_hits": hits,
        "separation_violations": bad,
        "reference_deviation": brute.reference_deviation,
    });
    let h = format!(
        "Diophantine (tau = {tau}, |p| <= {degree}): gamma_max = {}, worst p = [{}], {} vectors, {} resonant excluded\n",
        fast.gamma_max.map_or("unconstrained".to_string(), |g| format!("{g:.6e}")),
        fast.worst_p.clone().unwrap_or_default(),
        brute.enumerated_count,
        brute.excluded_resonant
    );
    Ok((v, h))
}

pub fn cmd_analyze(s: &Setup) -> Result<Report> {
    let module = enumerate_resonance(&s.ctx, &s.model)?;
    let (dio, dh) = diophantine_section(s, &module, s.tau(), s.degree_bound())?;
    let machine = json!({
        "command": "analyze",
        "problem": problem_section(s),
        "resonance": module_json(&module),
        "diophantine": dio,
    });
    Ok(Report { machine, human: module_human(&module) + &dh })
}

pub fn cmd_diophantine(s: &Setup, tau: f64, degree: u32) -> Result<Report> {
    let module = enumerate_resonance(&s.ctx, &s.model)?;
    let (dio, human) = diophantine_section(s, &module, tau, degree)?;
    let machine = json!({ "command": "diophantine", "problem": problem_section(s), "diophantine": dio });
    Ok(Report { machine, human })
}

/// Files written by `normalize --out`.
pub const NORMAL_FORM_FILE: &str = "normal_form.txt";
pub const TRANSFORM_FILE: &str = "transform.txt";
pub const TRACE_FILE: &str = "trace.json";
pub const REPORT_FILE: &str = "report.json";

/// Report plus the artifacts `normalize` writes.
pub struct NormalizeOutput {
    pub report: Report,
    pub normal_form: String,
    pub transform: String,
    pub trace: String,
}

fn normalize_generic<C: Scalar>(s: &Setup) -> Result<NormalizeOutput> {
    let module = enumerate_resonance(&s.ctx, &s.model)?;
    let w: VectorField<C> = s.field()?;
    let res = normalize(&w, &s.model, &module, &s.kam_config())?;
    let total = res.field.total()?;
    let rest = total.sub(&res.field.linear)?.sub(&res.field.z)?;
    let [i0, i1, _] = module.split_ideals(&rest);
    let residual_zero = i0.is_zero() && i1.is_zero();
    let tangency = check_tangent_sigma(&total, &s.model, &module, res.field.m_star);
    let trace = serde_json::to_value(&res.trace).expect("trace serializes");
    let machine = json!({
        "command": "normalize",
        "problem": problem_section(s),
        "resonance": module_json(&module),
        "normal_form": {
            "m_star": res.field.m_star,
            "prenormal_steps": res.prenormal_steps,
            "kam_steps": res.kam_steps(),
            "residual_zero": residual_zero,
            "z_terms": res.field.z.len(),
            "n_terms": res.field.n.len(),
            "generator_terms": res.log.generators.iter().map(|g| g.len()).collect::<Vec<_>>(),
            "tangency": tangency,
            "trace": trace.clone(),
        },
    });
    let human = format!(
        "{}normalized with M* = {}: {} prenormal step(s), {} KAM step(s); residual zero: {}; tangent to Σ: {}\n",
        module_human(&module),
        res.field.m_star,
        res.prenormal_steps,
        res.kam_steps(),
        residual_zero,
        tangency.tangent
    );
    let mut trace_text = serde_json::to_string_pretty(&trace).expect("trace serializes");
    trace_text.push('\n');
    Ok(NormalizeOutput {
        report: Report { machine, human },
        normal_form: field_to_text(&total),
        transform: res.log.to_text(),
        trace: trace_text,
    })
}

pub fn cmd_normalize(s: &Setup) -> Result<NormalizeOutput> {
    match s.arithmetic {
        Arithmetic::Exact => normalize_generic::<GaussRational>(s),
        Arithmetic::Float => normalize_generic::<Complex64>(s),
    }
}

fn read_artifact(dir: &Path, name: &str) -> Result<String> {
    let p = dir.join(name);
    std::fs::read_to_string(&p).map_err(|e| Error::Input(format!("missing artifact {}: {e}", p.display())))
}

fn verify_generic<C: Scalar>(s: &Setup, dir: &Path) -> Result<(Report, Vec<(String, String)>)> {
    let module = enumerate_resonance(&s.ctx, &s.model)?;
    let w: VectorField<C> = s.field()?;
    let nf: VectorField<C> = field_from_text(s.ctx, &read_artifact(dir, NORMAL_FORM_FILE)?)?;
    let log: TransformLog<C> = TransformLog::from_text(s.ctx, &read_artifact(dir, TRANSFORM_FILE)?)?;
    let m_star = s.kam_config().m_star.unwrap_or(module.m_star_minimal);
    let tangency = check_tangent_sigma(&nf, &s.model, &module, m_star);
    let sigma = SigmaSpec::from_module(&module);
    let cfg = s.flow_config();
    let rhos = s.rhos();
    let seed = s.direction_seed();
    let mut tables = Vec::new();
    let mut csv = Vec::new();
    let mut human = format!("tangent to Σ: {}\n", tangency.tangent);
    for (label, dir_vec) in
        [("on_sigma", unit_direction(&s.ctx, seed, Some(&sigma))), ("off_sigma", unit_direction(&s.ctx, seed, None))]
    {
        let t = conjugacy_scaling(label, &w, &log, &s.model, &dir_vec, &rhos, &cfg)?;
        human += &format!("{label}: slope {:.3} over {} radii\n", t.slope, t.rows.len());
        csv.push((format!("conjugacy_{label}.csv"), t.to_csv()));
        let slope = if t.slope.is_finite() { Value::from(t.slope) } else { Value::Null };
        tables.push(json!({
            "label": label,
            "rows": t.rows.iter().map(|(r, e)| json!({"rho": r, "error": e})).collect::<Vec<_>>(),
            "slope": slope,
        }));
    }
    let machine = json!({
        "command": "verify",
        "problem": problem_section(s),
        "m_star": m_star,
        "tangency": tangency,
        "flow": cfg,
        "conjugacy": tables,
        "expected_on_sigma_slope_at_least": s.ctx.degree_cutoff as f64 + 0.5,
    });
    Ok((Report { machine, human }, csv))
}

pub fn cmd_verify(s: &Setup, dir: &Path) -> Result<(Report, Vec<(String, String)>)> {
    match s.arithmetic {
        Arithmetic::Exact => verify_generic::<GaussRational>(s, dir),
        Arithmetic::Float => verify_generic::<Complex64>(s, dir),
    }
}

/// Write through a temporary file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
    let tmp =
        dir.join(format!(".{}.tmp", path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()));
    std::fs::write(&tmp, contents).map_err(|e| Error::Input(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<Report> {
    let c = &cli.common;
    let report = match &cli.command {
        Command::Analyze { file } => cmd_analyze(&load(file, c)?)?,
        Command::Diophantine { file, tau, degree } => cmd_diophantine(&load(file, c)?, *tau, *degree)?,
        Command::Normalize { file, out } => {
            let o = cmd_normalize(&load(file, c)?)?;
            if let Some(dir) = out {
                write_atomic(&dir.join(NORMAL_FORM_FILE), &o.normal_form)?;
                write_atomic(&dir.join(TRANSFORM_FILE), &o.transform)?;
                write_atomic(&dir.join(TRACE_FILE), &o.trace)?;
                write_atomic(&dir.join(REPORT_FILE), &o.report.machine_text())?;
            }
            o.report
        }
        Command::Verify { file, transform, csv } => {
            let (r, tables) = cmd_verify(&load(file, c)?, transform)?;
            if let Some(dir) = csv {
                for (name, body) in tables {
                    write_atomic(&dir.join(name), &body)?;
                }
            }
            r
        }
    };
    if let Some(p) = &c.json {
        write_atomic(p, &report.machine_text())?;
    }
    Ok(report)
}

/// Parse `args`, run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::Input(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(r) => {
            let _ = std::io::stdout().write_all(r.human.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
