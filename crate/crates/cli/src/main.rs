use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use riskaverse::exact_oracle::{exact_integer_enum, exact_lp, IntegerObjective};
use riskaverse::facility::{fl_risk_solve, round_fl};
use riskaverse::harness::{coin_experiment, fl_grid, lb1, lower_bound_demo, multicut, random_set_cover};
use riskaverse::model::document::{facility_document, load_instance, set_cover_document, Instance, Loaded};
use riskaverse::model::{ExplicitDistribution, FacilityLocationInstance, RiskParams, SampleMode, SetCoverInstance};
use riskaverse::risk_search::{cover_ub, risk_alg, RiskReport};
use riskaverse::robust::{chance_constrained_cover, robust_solve};
use riskaverse::rounding::{round_integer_cover, scale_first_stage};
use riskaverse::scenario_lp::{BudgetedCover, BudgetedFacility};
use riskaverse::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "riskaverse", version, about = "Risk-averse two-stage stochastic set cover and facility location")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve under a probabilistic budget constraint.
    Solve(SolveArgs),
    /// Shorthand for `solve --mode robust`.
    Robust(SolveArgs),
    /// Shorthand for `solve --mode chance`.
    Chance(SolveArgs),
    /// Shorthand for `solve --mode fl`.
    Fl(SolveArgs),
    /// Exact LP (and, when small, integer) optimum of an explicit instance.
    Exact(SolveArgs),
    /// Solve, then round the first stage to an integer plan.
    Round(RoundArgs),
    /// Write a generated instance.
    Gen(GenArgs),
    /// Zero-heads coin classifier error table.
    CoinDemo(CoinArgs),
    /// Search outputs on the two arms of the lower-bound instance.
    LbDemo(LbArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Budget,
    Robust,
    Chance,
    Fl,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Overrides the instance budget.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `theory` or a cap on the sample count.
    #[arg(long, default_value = "5000")]
    samples: String,
    /// Use the explicit support instead of sampling.
    #[arg(long)]
    full_support: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RoundArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Scaling parameter for `x̂ = min(1, (1+1/ε)x)`.
    #[arg(long, default_value_t = 1.0)]
    eps_r: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Random,
    Lb1,
    MulticutStar,
    MulticutPath,
    FlGrid,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Sets (random), vertices (multicut) or grid rows (fl-grid).
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Elements (random) or grid columns (fl-grid).
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    scenarios: usize,
    #[arg(long, default_value_t = 12.0)]
    budget: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Additive threshold slack of the LB1 family.
    #[arg(long, default_value_t = 0.02)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    p_a2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoinArgs {
    #[arg(long, default_value_t = 0.05)]
    varrho: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0.01)]
    xi: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6,10,20")]
    tosses: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LbArgs {
    #[arg(long, default_value_t = 12.0)]
    budget: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Scenarios per sampled run for the confusion rate.
    #[arg(long)]
    sample_budget: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn sample_mode(&self) -> anyhow::Result<SampleMode> {
        if self.full_support {
            return Ok(SampleMode::FullSupport);
        }
        match self.samples.as_str() {
            "theory" => Ok(SampleMode::Theory),
            s => Ok(SampleMode::Capped(s.parse().map_err(|_| anyhow!("--samples takes `theory` or a count, got `{s}`"))?)),
        }
    }

    fn params(&self, budget: f64) -> anyhow::Result<RiskParams<f64>> {
        let p = RiskParams::new(budget, self.rho, self.eps, self.gamma, self.kappa)
            .with_delta(self.delta)
            .with_samples(self.sample_mode()?);
        p.validate()?;
        Ok(p)
    }

    fn flags(&self, command: &str, mode: Mode) -> Value {
        json!({
            "command": command,
            "instance": self.instance.display().to_string(),
            "mode": format!("{mode:?}").to_lowercase(),
            "rho": self.rho,
            "kappa": self.kappa,
            "eps": self.eps,
            "gamma": self.gamma,
            "budget": self.budget,
            "delta": self.delta,
            "samples": self.samples,
            "full_support": self.full_support,
            "seed": self.seed,
        })
    }

    fn load(&self) -> anyhow::Result<Loaded<f64>> {
        let text = fs::read_to_string(&self.instance).with_context(|| format!("reading {}", self.instance.display()))?;
        Ok(load_instance(&text)?)
    }
}

fn cover_of(loaded: &Loaded<f64>) -> anyhow::Result<&SetCoverInstance<f64>> {
    match &loaded.instance {
        Instance::SetCover(i) => Ok(i),
        Instance::Facility(_) => bail!("this mode needs a set_cover instance"),
    }
}

fn facility_of(loaded: &Loaded<f64>) -> anyhow::Result<&FacilityLocationInstance<f64>> {
    match &loaded.instance {
        Instance::Facility(i) => Ok(i),
        Instance::SetCover(_) => bail!("this mode needs a facility_location instance"),
    }
}

fn support(loaded: &Loaded<f64>) -> anyhow::Result<&ExplicitDistribution<f64>> {
    loaded.oracle.support().ok_or_else(|| anyhow!("the instance distribution is not explicit"))
}

/// Writes `report.json` (and `trace.csv` when given) under `out`, or prints
/// the report.
fn emit(out: Option<&Path>, report: &Value, trace: Option<&str>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), text)?;
            if let Some(t) = trace {
                fs::write(dir.join("trace.csv"), t)?;
            }
            info!("wrote {}", dir.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report_value(rep: &RiskReport<f64>, ids: &[String]) -> Value {
    let mut v = rep.to_json(ids);
    v["saa_samples"] = json!(rep.saa_samples);
    v["estimation_samples"] = json!(rep.estimation_samples);
    if let Some(e) = rep.end_check {
        v["end_check"] = json!(e);
    }
    v
}

/// Runs the chosen pipeline; returns the report and the trace source.
fn run_pipeline(a: &SolveArgs, mode: Mode, loaded: &Loaded<f64>) -> anyhow::Result<(Value, RiskReport<f64>, Vec<String>)> {
    let oracle = loaded.oracle.as_ref();
    match mode {
        Mode::Budget => {
            let inst = cover_of(loaded)?;
            let p = a.params(a.budget.unwrap_or(inst.budget))?;
            let rep = risk_alg(&BudgetedCover { inst, budget: p.budget }, oracle, &p, cover_ub(inst, &p), a.seed)?;
            Ok((report_value(&rep, &inst.set_ids), rep, inst.set_ids.clone()))
        }
        Mode::Robust => {
            let inst = cover_of(loaded)?;
            let out = robust_solve(inst, oracle, &a.params(0.0)?, a.seed)?;
            let mut v = report_value(&out.report, &inst.set_ids);
            v["robust_budget"] = json!(out.budget);
            v["objective"] = json!(out.objective);
            v["budget_grid"] = out.grid.iter().map(|(b, o)| json!({"budget": b, "objective": o})).collect();
            Ok((v, out.report, inst.set_ids.clone()))
        }
        Mode::Chance => {
            if a.budget.is_some() {
                bail!("--budget cannot be combined with --mode chance");
            }
            let inst = cover_of(loaded)?;
            let rep = chance_constrained_cover(inst, oracle, &a.params(0.0)?, a.seed)?;
            Ok((report_value(&rep, &inst.set_ids), rep, inst.set_ids.clone()))
        }
        Mode::Fl => {
            let inst = facility_of(loaded)?;
            let p = a.params(a.budget.unwrap_or(inst.budgets.total))?;
            let sol = fl_risk_solve(inst, oracle, &p, a.seed)?;
            let mut v = report_value(&sol.report, &inst.facility_ids);
            v["fl_ub"] = json!(sol.bounds.ub);
            Ok((v, sol.report, inst.facility_ids.clone()))
        }
    }
}

fn default_mode(loaded: &Loaded<f64>) -> Mode {
    match loaded.instance {
        Instance::SetCover(_) => Mode::Budget,
        Instance::Facility(_) => Mode::Fl,
    }
}

fn run_solve(a: &SolveArgs, command: &str, forced: Option<Mode>) -> anyhow::Result<()> {
    if let (Some(f), Some(m)) = (forced, a.mode) {
        if f != m {
            bail!("`{command}` conflicts with --mode {m:?}");
        }
    }
    if (forced == Some(Mode::Chance) || a.mode == Some(Mode::Chance)) && a.budget.is_some() {
        bail!("--budget cannot be combined with --mode chance");
    }
    let loaded = a.load()?;
    let mode = forced.or(a.mode).unwrap_or_else(|| default_mode(&loaded));
    let (mut v, rep, _) = run_pipeline(a, mode, &loaded)?;
    v["flags"] = a.flags(command, mode);
    emit(a.out.as_deref(), &v, Some(&rep.trace_csv()))
}

fn run_exact(a: &SolveArgs) -> anyhow::Result<()> {
    let loaded = a.load()?;
    let dist = support(&loaded)?;
    let mut v = match &loaded.instance {
        Instance::SetCover(inst) => {
            let b = a.budget.unwrap_or(inst.budget);
            let e = exact_lp(&BudgetedCover { inst, budget: b }, dist, a.rho)?;
            let mut v = exact_value(e.opt, &e.x, e.exceedance, e.delta_star, &inst.set_ids);
            match exact_integer_enum(inst, dist, b, a.rho, IntegerObjective::Budgeted) {
                Ok(io) => {
                    let chosen: Vec<&String> = inst.set_ids.iter().zip(&io.x).filter(|(_, &t)| t).map(|(id, _)| id).collect();
                    v["integer"] = json!({"cost": io.cost, "stage1": chosen, "exceedance": io.exceedance});
                }
                Err(Error::SizeGuard(msg)) => info!("integer enumeration skipped: {msg}"),
                Err(e) => return Err(e.into()),
            }
            v
        }
        Instance::Facility(inst) => {
            let mut m = BudgetedFacility::new(inst);
            if let Some(b) = a.budget {
                m.budgets.total = b;
            }
            let e = exact_lp(&m, dist, a.rho)?;
            exact_value(e.opt, &e.x, e.exceedance, e.delta_star, &inst.facility_ids)
        }
    };
    v["flags"] = a.flags("exact", default_mode(&loaded));
    emit(a.out.as_deref(), &v, None)
}

fn exact_value(opt: f64, x: &[f64], exceedance: f64, delta_star: f64, ids: &[String]) -> Value {
    let x: serde_json::Map<String, Value> = ids.iter().zip(x).map(|(id, v)| (id.clone(), json!(v))).collect();
    json!({"opt": opt, "x": x, "exceedance": exceedance, "delta_star": delta_star})
}

fn run_round(r: &RoundArgs) -> anyhow::Result<()> {
    let a = &r.solve;
    if !(r.eps_r > 0.0) {
        bail!("--eps-r must be positive");
    }
    let loaded = a.load()?;
    let mode = a.mode.unwrap_or_else(|| default_mode(&loaded));
    let (mut v, rep, ids) = run_pipeline(a, mode, &loaded)?;
    let integer = match &loaded.instance {
        Instance::SetCover(inst) => {
            let ic = round_integer_cover(inst, &scale_first_stage(&rep.x, r.eps_r))?;
            let mut iv = json!({
                "stage1": ic.stage1.iter().map(|&k| &ids[k]).collect::<Vec<_>>(),
                "stage1_cost": ic.first_stage_cost(inst),
            });
            if let Some(dist) = loaded.oracle.support() {
                let mut expected = ic.first_stage_cost(inst);
                for (s, p) in dist.entries() {
                    expected += p * ic.recourse(inst, s)?.iter().map(|&k| s.w2[k]).sum::<f64>();
                }
                iv["expected_cost"] = json!(expected);
            }
            iv
        }
        Instance::Facility(inst) => {
            let dist = support(&loaded)?;
            let plan = round_fl(inst, &rep.x, r.eps_r, dist)?;
            json!({
                "stage1": plan.stage1.iter().map(|&i| &ids[i]).collect::<Vec<_>>(),
                "stage1_cost": plan.stage1_cost,
                "expected_cost": plan.expected_cost(dist),
            })
        }
    };
    v["integer"] = integer;
    v["flags"] = a.flags("round", mode);
    v["flags"]["eps_r"] = json!(r.eps_r);
    emit(a.out.as_deref(), &v, Some(&rep.trace_csv()))
}

fn run_gen(g: &GenArgs) -> anyhow::Result<()> {
    let doc = match g.family {
        Family::Random => {
            let (i, d) = random_set_cover::<f64>(g.m, g.n, g.scenarios, g.seed)?;
            set_cover_document(&i, &d)
        }
        Family::Lb1 => {
            let (i, d) = lb1::<f64>(g.budget, g.rho, g.kappa, g.p_a2)?;
            set_cover_document(&i, &d)
        }
        Family::MulticutStar | Family::MulticutPath => {
            let (i, d) = multicut::<f64>(g.m, matches!(g.family, Family::MulticutStar), g.scenarios, g.seed)?;
            set_cover_document(&i, &d)
        }
        Family::FlGrid => {
            let (i, d) = fl_grid::<f64>(g.m, g.n, g.scenarios, g.seed)?;
            facility_document(&i, &d)
        }
    };
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &g.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("instance.json"), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_coin(c: &CoinArgs) -> anyhow::Result<()> {
    let t = coin_experiment(c.varrho, c.delta, c.xi, c.trials, &c.tosses, c.seed)?;
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| json!({"tosses": r.tosses, "error_low": r.error_low, "error_high": r.error_high, "worst": r.worst()}))
        .collect();
    let v = json!({
        "varrho": t.varrho,
        "delta": t.delta,
        "threshold": t.threshold,
        "threshold_tosses": t.threshold_tosses,
        "rows": rows,
        "flags": {"command": "coin-demo", "xi": c.xi, "trials": c.trials, "seed": c.seed},
    });
    emit(c.out.as_deref(), &v, None)
}

fn run_lb(l: &LbArgs) -> anyhow::Result<()> {
    let p = RiskParams::new(l.budget, l.rho, l.eps, l.gamma, l.kappa);
    p.validate()?;
    let d = lower_bound_demo::<f64>(l.budget, &p, l.sample_budget, l.trials, l.seed)?;
    let arm = |a: &riskaverse::harness::LbArm<f64>| json!({"p_a2": a.p_a2, "x": a.report.x, "total": a.total, "pair": a.pair});
    let v = json!({
        "low": arm(&d.low),
        "high": arm(&d.high),
        "confusion": d.confusion,
        "trials": d.trials,
        "flags": {"command": "lb-demo", "budget": l.budget, "rho": l.rho, "kappa": l.kappa, "eps": l.eps,
                  "gamma": l.gamma, "sample_budget": l.sample_budget, "seed": l.seed},
    });
    emit(l.out.as_deref(), &v, None)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Solve(a) => run_solve(&a, "solve", None),
        Cmd::Robust(a) => run_solve(&a, "robust", Some(Mode::Robust)),
        Cmd::Chance(a) => run_solve(&a, "chance", Some(Mode::Chance)),
        Cmd::Fl(a) => run_solve(&a, "fl", Some(Mode::Fl)),
        Cmd::Exact(a) => run_exact(&a),
        Cmd::Round(r) => run_round(&r),
        Cmd::Gen(g) => run_gen(&g),
        Cmd::CoinDemo(c) => run_coin(&c),
        Cmd::LbDemo(l) => run_lb(&l),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Infeasible(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
