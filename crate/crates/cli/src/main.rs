mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use loclab::dynamics::{
    foliation_check_with, integrate, origin_launch_state, solution_family_with, FoliationConfig,
    IntegratorConfig, PhaseState, SolutionConfig, StopRule, DEFAULT_T_MAX,
};
use loclab::export::{self, ParamsRecord};
use loclab::ode::Tolerances;
use loclab::params::enumerate_admissible_with;
use loclab::stability::{conjugate_points, exponent_translation, stability_verdict};
use loclab::verify::{self, Scope, VerifyOptions};
use loclab::{derive_params, ConeType, Error, LomseParams, LomseTriple, QuotientMetric, Strategy};

use output::{Format, RunConfig, Writer};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "loclab", version, about = "Lawson-Osserman cone laboratory")]
struct Cli {
    /// Output format of data files.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Directory for data files.
    #[arg(long, env = "LOCLAB_OUT_DIR", default_value = ".", global = true)]
    out: PathBuf,

    /// Run sweeps on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of admissible triples with their exact constants and type.
    Classify {
        #[arg(long, default_value_t = 15)]
        n_max: u32,
        #[arg(long, default_value_t = 20)]
        k_max: u32,
    },
    /// Orbits of the phase-plane system, one file per launch.
    Portrait(PortraitArgs),
    /// The Dirichlet solutions cut from the origin orbit.
    Solutions(SolutionArgs),
    /// Jacobi fields, conjugate points and the stability verdict.
    Jacobi(JacobiArgs),
    /// Foliation check around a Type I cone ray.
    Foliate(FoliateArgs),
    /// Run invariant suites.
    Verify {
        #[arg(value_enum, default_value_t = ScopeArg::All)]
        scope: ScopeArg,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args, Debug)]
struct TripleArg {
    /// Triple as `n,p,k`.
    #[arg(long, value_parser = parse_triple)]
    triple: LomseTriple,
}

#[derive(Args, Debug)]
struct PortraitArgs {
    #[command(flatten)]
    triple: TripleArg,
    /// `origin`, `fixed`, or a start point `phi,psi` at `t = 0`. Repeatable.
    #[arg(long = "launch", default_value = "origin")]
    launches: Vec<Launch>,
    /// End of the integration interval in `t = log r`.
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-12)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-40)]
    atol: f64,
}

#[derive(Args, Debug)]
struct SolutionArgs {
    #[command(flatten)]
    triple: TripleArg,
    #[arg(long, default_value_t = 1)]
    m_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    /// Also write the sampled curve of every solution.
    #[arg(long)]
    curves: bool,
}

#[derive(Args, Debug)]
struct JacobiArgs {
    #[command(flatten)]
    triple: TripleArg,
    /// Arclength of the anchor point; defaults to the end of the unit segment.
    #[arg(long)]
    anchor: Option<f64>,
    #[arg(long, default_value_t = 3)]
    count: usize,
}

#[derive(Args, Debug)]
struct FoliateArgs {
    #[command(flatten)]
    triple: TripleArg,
    /// Start of the first boundary orbit; defaults to `tan(theta) + 0.05`.
    #[arg(long)]
    phi1: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    Algebra,
    Geometry,
    Dynamics,
    Stability,
    All,
}

impl ScopeArg {
    fn name(self) -> &'static str {
        match self {
            ScopeArg::Algebra => "algebra",
            ScopeArg::Geometry => "geometry",
            ScopeArg::Dynamics => "dynamics",
            ScopeArg::Stability => "stability",
            ScopeArg::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Launch {
    Origin,
    Fixed,
    Point(f64, f64),
}

impl std::str::FromStr for Launch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "origin" => Ok(Launch::Origin),
            "fixed" => Ok(Launch::Fixed),
            _ => {
                let (a, b) = s
                    .split_once(',')
                    .ok_or_else(|| format!("expected origin, fixed or phi,psi; got '{s}'"))?;
                let phi: f64 = a.trim().parse().map_err(|e| format!("bad phi: {e}"))?;
                let psi: f64 = b.trim().parse().map_err(|e| format!("bad psi: {e}"))?;
                if !(phi.is_finite() && psi.is_finite()) {
                    return Err("launch point must be finite".into());
                }
                Ok(Launch::Point(phi, psi))
            }
        }
    }
}

impl Launch {
    fn describe(self) -> String {
        match self {
            Launch::Origin => "origin".into(),
            Launch::Fixed => "fixed".into(),
            Launch::Point(a, b) => format!("{},{}", export::fmt_f64(a), export::fmt_f64(b)),
        }
    }
}

fn parse_triple(s: &str) -> Result<LomseTriple, String> {
    s.parse::<LomseTriple>().map_err(|e| e.to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InadmissibleTriple { .. }
            | Error::DegenerateAngle
            | Error::Domain(_)
            | Error::InvalidArgument(_)
            | Error::WrongType => EXIT_USAGE,
            Error::MonotonicityViolation(_) | Error::InternalInconsistency(_) => EXIT_INVARIANT,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: format!("i/o error: {e}"),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let strategy = if cli.sequential {
        Strategy::Sequential
    } else {
        Strategy::default()
    };
    let writer = Writer::new(cli.out.clone(), cli.format)?;
    match cli.command {
        Command::Classify { n_max, k_max } => classify(&writer, n_max, k_max, strategy),
        Command::Portrait(a) => portrait(&writer, &a),
        Command::Solutions(a) => solutions(&writer, &a, strategy),
        Command::Jacobi(a) => jacobi(&writer, &a),
        Command::Foliate(a) => foliate(&writer, &a, strategy),
        Command::Verify {
            scope,
            inject_fault,
        } => run_verify(&writer, scope, inject_fault, strategy),
    }
}

fn params_of(t: LomseTriple) -> Result<LomseParams, Failure> {
    Ok(derive_params(t)?)
}

fn tag(t: LomseTriple) -> String {
    format!("{}-{}-{}", t.n, t.p, t.k)
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn classify(w: &Writer, n_max: u32, k_max: u32, strategy: Strategy) -> CmdResult {
    let rows: Vec<LomseParams> = enumerate_admissible_with(n_max, k_max, strategy)
        .into_iter()
        .map(|(t, _)| derive_params(t))
        .collect::<Result<_, _>>()?;
    let cfg = RunConfig::new("classify")
        .set("n_max", n_max.to_string())
        .set("k_max", k_max.to_string());
    let path = match w.format() {
        Format::Csv => w.csv("classify", &cfg, export::classification_table(&rows))?,
        Format::Json => {
            let records: Vec<ParamsRecord> = rows.iter().map(ParamsRecord::from).collect();
            w.json("classify", &cfg, None, &records)?
        }
    };
    let type2 = rows
        .iter()
        .filter(|p| p.cone_type == ConeType::TypeII)
        .count();
    println!(
        "{} triples ({} Type I, {} Type II) -> {}",
        rows.len(),
        rows.len() - type2,
        type2,
        path.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct OrbitDoc {
    launch: String,
    termination: loclab::dynamics::Termination,
    rows: Vec<export::OrbitRow>,
}

fn portrait(w: &Writer, a: &PortraitArgs) -> CmdResult {
    positive("rtol", a.rtol)?;
    positive("atol", a.atol)?;
    positive("epsilon", a.epsilon)?;
    if !a.t_end.is_finite() || a.t_end <= 0.0 {
        return Err(Failure::usage("--t-end must be positive"));
    }
    let t = a.triple.triple;
    let params = params_of(t)?;
    let icfg = IntegratorConfig {
        tolerances: Tolerances {
            rtol: a.rtol,
            atol: a.atol,
            ..Tolerances::default()
        },
        ..IntegratorConfig::default()
    }
    .with_stop(StopRule::FixedPointEntry);
    for (i, launch) in a.launches.iter().enumerate() {
        let start = match launch {
            Launch::Origin => origin_launch_state(&params, a.epsilon),
            Launch::Fixed => PhaseState::new(&params, 0.0, params.tan_theta(), 0.0),
            Launch::Point(phi, psi) => PhaseState::new(&params, 0.0, *phi, *psi),
        };
        let orbit = integrate(&params, start, a.t_end, &icfg)?;
        let cfg = RunConfig::new("portrait")
            .triple(t)
            .set("launch", launch.describe())
            .set("t_end", export::fmt_f64(a.t_end))
            .set("epsilon", export::fmt_f64(a.epsilon))
            .tolerances(&icfg);
        let stem = format!("portrait_{}_launch{}", tag(t), i + 1);
        let echo = ParamsRecord::from(&params);
        let (p1, p2) = match w.format() {
            Format::Csv => (
                w.csv(&stem, &cfg, export::orbit_table(&orbit))?,
                w.csv(
                    &format!("{stem}_events"),
                    &cfg,
                    export::events_table(&orbit),
                )?,
            ),
            Format::Json => {
                let doc = OrbitDoc {
                    launch: launch.describe(),
                    termination: orbit.termination,
                    rows: export::orbit_rows(&orbit),
                };
                (
                    w.json(&stem, &cfg, Some(&echo), &doc)?,
                    w.json(
                        &format!("{stem}_events"),
                        &cfg,
                        Some(&echo),
                        &export::event_rows(&orbit),
                    )?,
                )
            }
        };
        println!(
            "launch {} ({}): {} states, {} events -> {}, {}",
            i + 1,
            launch.describe(),
            orbit.states.len(),
            orbit.events.len(),
            p1.display(),
            p2.display()
        );
    }
    Ok(0)
}

#[derive(Serialize)]
struct SolutionsDoc {
    solutions: Vec<export::SolutionRow>,
    note: Option<String>,
}

fn solutions(w: &Writer, a: &SolutionArgs, strategy: Strategy) -> CmdResult {
    positive("epsilon", a.epsilon)?;
    if a.m_max == 0 {
        return Err(Failure::usage("--m-max must be at least 1"));
    }
    let t = a.triple.triple;
    let params = params_of(t)?;
    let scfg = SolutionConfig {
        epsilon: a.epsilon,
        ..SolutionConfig::default()
    };
    let family = solution_family_with(&params, a.m_max, &scfg, strategy)?;
    let note = (params.cone_type == ConeType::TypeI && a.m_max > 1).then(|| {
        format!(
            "Type I orbit does not oscillate: 1 solution instead of {}",
            a.m_max
        )
    });
    let mut cfg = RunConfig::new("solutions")
        .triple(t)
        .set("m_max", a.m_max.to_string())
        .set("epsilon", export::fmt_f64(a.epsilon))
        .tolerances(&scfg.integrator)
        .set("sample_dt", export::fmt_f64(scfg.sample_spacing(&params)));
    if let Some(n) = &note {
        cfg = cfg.set("note", n.clone());
    }
    let stem = format!("solutions_{}", tag(t));
    let echo = ParamsRecord::from(&params);
    let path = match w.format() {
        Format::Csv => w.csv(&stem, &cfg, export::solution_table(&family))?,
        Format::Json => {
            let doc = SolutionsDoc {
                solutions: family.iter().map(export::SolutionRow::from).collect(),
                note: note.clone(),
            };
            w.json(&stem, &cfg, Some(&echo), &doc)?
        }
    };
    for s in &family {
        println!(
            "m={} t={:.6} L={:.12} L_LOC-L={:.6e}",
            s.crossing_index,
            s.crossing_t,
            s.identity_length(),
            s.deficit
        );
    }
    println!("-> {}", path.display());
    if a.curves {
        for s in &family {
            let stem = format!("solutions_{}_m{}", tag(t), s.crossing_index);
            let p = match w.format() {
                Format::Csv => w.csv(&stem, &cfg, export::curve_table(s))?,
                Format::Json => w.json(&stem, &cfg, Some(&echo), &export::curve_rows(s))?,
            };
            println!("-> {}", p.display());
        }
    }
    match note {
        Some(n) => {
            eprintln!("note: {n}");
            Ok(EXIT_NUMERIC)
        }
        None => Ok(0),
    }
}

#[derive(Serialize)]
struct JacobiDoc {
    verdict: loclab::stability::StabilityVerdict,
    conjugate_points: loclab::stability::ConjugatePointList,
    translation: loclab::stability::TranslationReport,
}

fn jacobi(w: &Writer, a: &JacobiArgs) -> CmdResult {
    let t = a.triple.triple;
    let params = params_of(t)?;
    let anchor = match a.anchor {
        Some(s) => {
            positive("anchor", s)?;
            s
        }
        None => QuotientMetric::new(&params).loc_arclength(1.0)?,
    };
    let verdict = stability_verdict(&params)?;
    let list = conjugate_points(&params, anchor, a.count)?;
    let translation = exponent_translation(&params);
    if !translation.consistent {
        return Err(Failure {
            code: EXIT_INVARIANT,
            message: "exponent translation is inconsistent".into(),
        });
    }
    let cfg = RunConfig::new("jacobi")
        .triple(t)
        .set("anchor", export::fmt_f64(anchor))
        .set("count", a.count.to_string());
    let stem = format!("jacobi_{}", tag(t));
    let path = match w.format() {
        Format::Csv => {
            let mut table = export::conjugate_table(&list);
            table.meta.push("verdict", format!("{:?}", verdict.verdict));
            table
                .meta
                .push("basis_kind", format!("{:?}", verdict.basis_kind));
            table.meta.push("exponents", verdict.exponents.join(";"));
            w.csv(&stem, &cfg, table)?
        }
        Format::Json => {
            let doc = JacobiDoc {
                verdict: verdict.clone(),
                conjugate_points: list.clone(),
                translation: translation.clone(),
            };
            w.json(&stem, &cfg, Some(&ParamsRecord::from(&params)), &doc)?
        }
    };
    println!(
        "{}: {:?} (exponents {}, {})",
        t, verdict.verdict, verdict.exponents[0], verdict.exponents[1]
    );
    if let Some(f) = translation.frequency {
        println!(
            "translation: modulus r^{} frequency {:.15}",
            translation.modulus_exponent.as_deref().unwrap_or("?"),
            f
        );
    }
    for (z, r) in list
        .zeros
        .iter()
        .zip(std::iter::once(list.s_anchor).chain(list.zeros.iter().copied()))
    {
        println!("conjugate point s={z:.12e} ratio {:.12e}", r / z);
    }
    println!("-> {}", path.display());
    Ok(0)
}

fn foliate(w: &Writer, a: &FoliateArgs, strategy: Strategy) -> CmdResult {
    positive("epsilon", a.epsilon)?;
    let t = a.triple.triple;
    let params = params_of(t)?;
    let phi1 = a.phi1.unwrap_or(params.tan_theta() + 0.05);
    let fcfg = FoliationConfig {
        epsilon: a.epsilon,
        ..FoliationConfig::default()
    };
    let report = foliation_check_with(&params, phi1, &fcfg, strategy)?;
    let cfg = RunConfig::new("foliate")
        .triple(t)
        .set("phi1", export::fmt_f64(phi1))
        .set("epsilon", export::fmt_f64(a.epsilon))
        .set("shift_step", export::fmt_f64(fcfg.shift_step))
        .set("cover_tol", export::fmt_f64(fcfg.cover_tol))
        .tolerances(&fcfg.integrator);
    let stem = format!("foliate_{}", tag(t));
    let path = match w.format() {
        Format::Csv => {
            let mut table = export::CsvTable::new(&["key", "value"]);
            let v = serde_json::to_value(&report).map_err(|e| Failure {
                code: EXIT_NUMERIC,
                message: e.to_string(),
            })?;
            output::flatten("", &v, &mut |k, val| table.push_row(vec![k, val]));
            w.csv(&stem, &cfg, table)?
        }
        Format::Json => w.json(&stem, &cfg, Some(&ParamsRecord::from(&params)), &report)?,
    };
    println!(
        "{}: {} ({}/{} covered, gamma1 monotone {}, gamma2 monotone {}) -> {}",
        t,
        if report.passed { "passed" } else { "FAILED" },
        report.covered_points,
        report.test_points,
        report.gamma1.monotone,
        report.gamma2.monotone,
        path.display()
    );
    Ok(if report.passed { 0 } else { EXIT_INVARIANT })
}

fn run_verify(w: &Writer, scope: ScopeArg, inject_fault: bool, strategy: Strategy) -> CmdResult {
    let parsed: Scope = scope.name().parse()?;
    let summary = verify::run(
        parsed,
        VerifyOptions {
            strategy,
            inject_fault,
        },
    );
    let mut cfg = RunConfig::new("verify").set("scope", scope.name());
    if inject_fault {
        cfg = cfg.set("inject_fault", "true");
    }
    let stem = format!("verify_{}", scope.name());
    let path = match w.format() {
        Format::Csv => {
            let mut table = export::CsvTable::new(&[
                "suite",
                "name",
                "measured",
                "tolerance",
                "passed",
                "detail",
            ]);
            for c in &summary.checks {
                table.push_row(vec![
                    c.suite.to_string(),
                    c.name.clone(),
                    export::fmt_f64(c.measured),
                    export::fmt_f64(c.tolerance),
                    c.passed.to_string(),
                    output::csv_field(&c.detail),
                ]);
            }
            w.csv(&stem, &cfg, table)?
        }
        Format::Json => w.json(&stem, &cfg, None, &summary)?,
    };
    for c in &summary.checks {
        println!(
            "{} {}/{}: {:.3e} (tol {:.1e}){}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.measured,
            c.tolerance,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(" {}", c.detail)
            }
        );
    }
    println!(
        "{} passed, {} failed -> {}",
        summary.passed,
        summary.failed,
        path.display()
    );
    Ok(if summary.all_passed() {
        0
    } else {
        EXIT_INVARIANT
    })
}
