use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use skillgeom::adaptation::{lemma_b1_bound, mac_bounds, task_targets, wac_bound_corollary_with, BoundReport, TieRule};
use skillgeom::divergences::indicator_mi;
use skillgeom::geometry::{lsepin_tiebreak, misl_center};
use skillgeom::mdp::{linf, DEFAULT_ENUMERATION_CAP};
use skillgeom::polytope::DEDUPE_TOL;
use skillgeom::transport::CostSpec;
use skillgeom::wdsl::{awd, maximize_wsep, placements_are_extreme, pwsep_run, SearchMode, PWSEP_TOL};
use skillgeom::{
    fixtures, klsep, load_mdp, lsepin, oracle, repro, skill_mutual_information, wsep, CostMatrix, Error,
    OccupancyKind, Polytope, SkillSet, TabularMdp,
};

#[derive(Parser)]
#[command(name = "skillgeom", version, about = "Skill-discovery geometry on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// MDP spec (JSON).
    #[arg(long, global = true)]
    mdp: Option<PathBuf>,
    /// `unit` or a cost-matrix JSON file.
    #[arg(long, global = true, default_value = "unit")]
    cost: String,
    /// Skill set (JSON with `skills` and `weights`).
    #[arg(long, global = true)]
    skills: Option<PathBuf>,
    /// Also place this many skills at vertices by exhaustive WSEP search (`misl`).
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    seeds: Option<u64>,
    #[arg(long, global = true, value_parser = parse_kind)]
    occupancy: Option<OccupancyKind>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-check against brute-force oracles where available.
    #[arg(long, global = true)]
    verify: bool,
    /// Largest number of deterministic policies to enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
}

#[derive(Subcommand)]
enum Command {
    /// Vertices of the occupancy polytope with policy provenance.
    Vertices,
    /// Minimax-KL center, MISL skill weights and the LSEPIN tie-break.
    Misl,
    /// Disentanglement and separability metrics of a skill set.
    Metrics,
    /// Adaptation-cost bound suites, one JSON line each.
    Bounds,
    /// Vertex discovery by projected Wasserstein distance.
    Pwsep,
    /// Worked example: c5, c6, c7, d or spwd.
    Repro { name: String },
}

fn parse_kind(s: &str) -> Result<OccupancyKind, String> {
    match s {
        "discounted" => Ok(OccupancyKind::Discounted),
        "stationary" => Ok(OccupancyKind::Stationary),
        _ => Err(format!("expected discounted or stationary, got {s:?}")),
    }
}

enum Failure {
    Lib(Error),
    Input(String),
    Fixture(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Fixture(_) => 5,
            Failure::Lib(e) => match e {
                Error::TooLarge { .. } => 3,
                Error::NonConvergent { .. } | Error::Lp(_) | Error::Infeasible(_) => 4,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Input(m) | Failure::Fixture(m) => m.clone(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Rounds every float to 12 significant digits; non-finite values become strings.
fn tidy(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(tidy).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, tidy(v))).collect()),
        other => other,
    }
}

fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::from("nan")
    } else if x.is_infinite() {
        Value::from(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        let r: f64 = format!("{x:.11e}").parse().unwrap();
        json!(if r == 0.0 { 0.0 } else { r })
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    tidy(serde_json::to_value(x).expect("report is serializable"))
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

impl Common {
    fn mdp(&self) -> Outcome<TabularMdp> {
        let path = self.mdp.as_ref().ok_or_else(|| Failure::Input("--mdp is required".into()))?;
        let mdp = load_mdp(&read(path)?)?;
        Ok(match self.occupancy {
            Some(kind) => mdp.with_occupancy_kind(kind),
            None => mdp,
        })
    }

    fn skillset(&self) -> Outcome<SkillSet> {
        let path = self.skills.as_ref().ok_or_else(|| Failure::Input("--skills is required".into()))?;
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("malformed skill set: {e}")))
    }

    fn cost(&self, n: usize) -> Outcome<CostMatrix> {
        let spec = if self.cost == "unit" {
            CostSpec::Named("unit".into())
        } else {
            serde_json::from_str(&read(Path::new(&self.cost))?)
                .map_err(|e| Failure::Input(format!("malformed cost matrix: {e}")))?
        };
        Ok(spec.resolve(n)?)
    }
}

fn vertices(cfg: &Common) -> Outcome<Value> {
    let mdp = cfg.mdp()?;
    let poly = Polytope::from_mdp(&mdp, cfg.cap)?;
    let mut doc = to_json(&poly);
    doc["num_vertices"] = json!(poly.len());
    Ok(doc)
}

fn misl(cfg: &Common) -> Outcome<Value> {
    let mdp = cfg.mdp()?;
    let poly = Polytope::from_mdp(&mdp, cfg.cap)?;
    let sol = misl_center(&poly, cfg.tol.unwrap_or(skillgeom::geometry::CENTER_TOL))?;
    let active: Vec<&[f64]> = sol.active.iter().map(|&i| &*poly.vertices[i]).collect();
    let tie = lsepin_tiebreak(&active, &sol.center, cfg.seed)?;
    let mut doc = json!({
        "solution": to_json(&sol),
        "tiebreak": to_json(&tie),
        "lsepin": num(tie.lsepin),
        "vertices": to_json(&poly.vertices),
    });
    if let Some(k) = cfg.k {
        if k == 0 {
            return Err(Failure::Input("--k must be positive".into()));
        }
        let c = cfg.cost(mdp.num_states())?;
        let placement = maximize_wsep(&poly, &c, k, SearchMode::Exhaustive)?;
        let covers_active = sol.active.iter().all(|a| placement.vertices.contains(a));
        doc["wsep_placement"] = json!({
            "placement": to_json(&placement),
            "all_extreme": placements_are_extreme(&poly, &placement),
            "contains_active_set": covers_active,
        });
    }
    if cfg.verify {
        if mdp.num_states() == 3 && poly.len() >= 3 {
            let verts: Vec<Vec<f64>> = poly.vertices.iter().map(|v| v.to_vec()).collect();
            let grid = oracle::grid_center(&verts);
            let err = sol.center.linf(&grid);
            doc["verify"] = json!({"oracle_center": to_json(&grid), "linf": num(err), "match": err < 5e-3});
        } else {
            doc["verify"] = json!({"skipped": "oracle needs three states and a two-dimensional hull"});
        }
    }
    Ok(doc)
}

fn metrics(cfg: &Common) -> Outcome<Value> {
    let ss = cfg.skillset()?;
    let c = cfg.cost(ss.dim())?;
    let per_skill = (0..ss.len())
        .map(|z| indicator_mi(&ss, z).map(num))
        .collect::<Result<Vec<_>, _>>()?;
    let (l, z) = lsepin(&ss)?;
    Ok(json!({
        "mutual_information": num(skill_mutual_information(&ss)),
        "indicator_mi": per_skill,
        "lsepin": num(l),
        "lsepin_skill": z,
        "wsep": num(wsep(&ss, &c)?),
        "klsep": num(klsep(&ss)),
        "awd": num(awd(&ss, &c)?),
    }))
}

fn bound_row(r: &BoundReport) -> Value {
    let mut v = to_json(r);
    for key in ["bound", "measured", "slack"] {
        v[key] = num(match key {
            "bound" => r.bound,
            "measured" => r.measured,
            _ => r.slack,
        });
    }
    v
}

fn error_row(variant: &str, e: &Error) -> Value {
    let tag = match e {
        Error::NotMislSolution(_) => "NotMislSolution",
        Error::AllDiscovered => "AllDiscovered",
        _ => "error",
    };
    json!({"variant": variant, "tags": [tag], "error": e.to_string()})
}

fn bounds(cfg: &Common) -> Outcome<Vec<Value>> {
    let ss = cfg.skillset()?;
    let poly = Polytope::from_mdp(&cfg.mdp()?, cfg.cap)?;
    if poly.dim() != ss.dim() {
        return Err(Failure::Lib(Error::DimensionMismatch {
            expected: poly.dim(),
            got: ss.dim(),
        }));
    }
    let c = cfg.cost(ss.dim())?;
    let tf = task_targets(&poly);
    let mut rows = Vec::new();
    for (rule, name) in [(TieRule::Inclusive, "corollary"), (TieRule::Strict, "corollary_strict_ties")] {
        rows.push(match wac_bound_corollary_with(&ss, &tf, rule) {
            Ok(r) => bound_row(&r),
            Err(e @ (Error::NotMislSolution(_) | Error::DegenerateComplement { .. })) => error_row(name, &e),
            Err(e) => return Err(e.into()),
        });
    }
    match mac_bounds(&ss, &poly, &c) {
        Ok(rs) => rows.extend(rs.iter().map(bound_row)),
        Err(e @ Error::AllDiscovered) => rows.push(error_row("mac", &e)),
        Err(e) => return Err(e.into()),
    }
    rows.push(bound_row(&lemma_b1_bound(&ss, &tf)));
    Ok(rows)
}

/// Discovered set equals the extreme-point set, each matched within 1e-6.
fn same_vertex_set(found: &[skillgeom::OccupancyMeasure], poly: &Polytope) -> bool {
    found.len() == poly.len()
        && poly.vertices.iter().all(|v| found.iter().any(|d| linf(d, v) <= 1e-6))
        && found.iter().all(|d| poly.vertices.iter().any(|v| linf(d, v) <= 1e-6))
}

fn pwsep_once(mdp: &TabularMdp, cfg: &Common, seed: u64) -> Outcome<(Value, bool)> {
    let c = cfg.cost(mdp.num_states())?;
    let cands: Vec<_> = skillgeom::mdp::enumerate_policy_occupancies(mdp, cfg.cap)?
        .into_iter()
        .map(|(_, o)| o)
        .collect();
    let poly = skillgeom::extreme_points(&cands, DEDUPE_TOL);
    let state = pwsep_run(&cands, &c, cfg.tol.unwrap_or(PWSEP_TOL), seed)?;
    let matched = same_vertex_set(&state.discovered, &poly) && state.iteration == poly.len();
    let mut doc = to_json(&state);
    doc["seed"] = json!(seed);
    doc["num_vertices"] = json!(poly.len());
    doc["verdict"] = json!(if matched { "MATCH" } else { "MISMATCH" });
    Ok((doc, matched))
}

fn pwsep(cfg: &Common) -> Outcome<Value> {
    let Some(n) = cfg.seeds else {
        return Ok(pwsep_once(&cfg.mdp()?, cfg, cfg.seed)?.0);
    };
    let fixed = cfg.mdp.as_ref().map(|_| cfg.mdp()).transpose()?;
    let mut runs = Vec::new();
    let mut matched = 0;
    for s in cfg.seed..cfg.seed + n {
        let mdp = match &fixed {
            Some(m) => m.clone(),
            None => {
                let kind = cfg.occupancy.unwrap_or(if s % 2 == 0 {
                    OccupancyKind::Discounted
                } else {
                    OccupancyKind::Stationary
                });
                fixtures::random_mdp_sized(s, 4, 4, kind)
            }
        };
        let (doc, ok) = pwsep_once(&mdp, cfg, s)?;
        matched += usize::from(ok);
        runs.push(json!({
            "seed": s,
            "num_states": mdp.num_states(),
            "num_actions": mdp.num_actions(),
            "num_vertices": doc["num_vertices"],
            "iterations": doc["iteration"],
            "verdict": doc["verdict"],
        }));
    }
    Ok(json!({
        "runs": runs,
        "matched": matched,
        "total": n,
        "verdict": format!("{} {matched}/{n}", if matched as u64 == n { "MATCH" } else { "MISMATCH" }),
    }))
}

fn run_repro(name: &str) -> Outcome<Value> {
    let report = repro::run(name).map_err(|e| match e {
        Error::MalformedSpec(m) => Failure::Input(m),
        other => Failure::Lib(other),
    })?;
    if !report.ok {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.label.as_str()).collect();
        eprintln!("{}", to_json(&report));
        return Err(Failure::Fixture(format!("{name}: fixture self-check failed: {}", failed.join("; "))));
    }
    Ok(to_json(&report))
}

fn emit(text: String, out: Option<&Path>) -> Outcome<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome<()> {
    let cfg = &cli.common;
    let text = match &cli.command {
        Command::Bounds => bounds(cfg)?.iter().map(|r| format!("{r}\n")).collect(),
        Command::Vertices => pretty(vertices(cfg)?),
        Command::Misl => pretty(misl(cfg)?),
        Command::Metrics => pretty(metrics(cfg)?),
        Command::Pwsep => pretty(pwsep(cfg)?),
        Command::Repro { name } => pretty(run_repro(name)?),
    };
    emit(text, cfg.out.as_deref())
}

fn pretty(v: Value) -> String {
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
