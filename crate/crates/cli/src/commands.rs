//! The six commands. Each returns its CSV text, a JSON summary and whether a
//! verdict or --check assertion failed.

use crate::config::{Command, Functional, RunConfig, CONFIG_PREFIX};
use crate::CliError;
use nonlocal_hardy::dyadic::{dyadic_profile, holder_check, holder_min_constant};
use nonlocal_hardy::energy::{
    gradient_energy, i_delta, i_delta_magnetic, j_delta, k_constant, lp_norm_pow, weighted_norm, EnergyParams,
    WeightSpec,
};
use nonlocal_hardy::fnlib::{instantiate, make_linear_potential, Region};
use nonlocal_hardy::verify::{check_delta_grid, estimate_constant, summarize, sweep, SweepRow, SweepSpec, Verdict};
use nonlocal_hardy::EnergyEstimate;
use serde_json::{json, Value};
use std::collections::BTreeSet;

/// Bounded-ratio thresholds used by --check.
pub const MAX_SPREAD: f64 = 10.0;
pub const MAX_UNIFORMITY: f64 = 3.0;
/// klimit --check: I_δ/(K‖∇u‖^p) at the smallest δ.
pub const KLIMIT_BAND: (f64, f64) = (0.9, 1.1);
const HOLDER_GRID: usize = 400;
const HOLDER_CHECKS: usize = 10_000;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct Outcome {
    pub csv: String,
    pub summary: Value,
    /// Suspect verdicts or failed --check assertions.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

struct Table {
    out: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(cfg: &RunConfig, header: &[String]) -> Result<Self, CliError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CONFIG_PREFIX.as_bytes());
        buf.extend_from_slice(cfg.embedded().as_bytes());
        buf.push(b'\n');
        let mut out = csv::WriterBuilder::new().from_writer(buf);
        out.write_record(header).map_err(csv_err)?;
        Ok(Table { out })
    }

    fn row(&mut self, cells: &[String]) -> Result<(), CliError> {
        self.out.write_record(cells).map_err(csv_err)
    }

    fn finish(self) -> Result<String, CliError> {
        let bytes = self.out.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Shortest round-trip form, switching to exponent notation for tiny or huge magnitudes.
fn f(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn summary(cfg: &RunConfig, body: Value) -> Value {
    let mut s = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "config": serde_json::from_str::<Value>(&cfg.embedded()).expect("config is json"),
    });
    if let (Value::Object(m), Value::Object(b)) = (&mut s, body) {
        m.extend(b);
    }
    s
}

pub fn run(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Energy => energy(cfg, check),
        Command::Sweep | Command::Verify => inequality(cfg, check),
        Command::Constant => constant(cfg, check),
        Command::Profile => profile(cfg, check),
        Command::Klimit => klimit(cfg, check),
    }
}

fn delta_grid(cfg: &RunConfig) -> Result<&[f64], CliError> {
    check_delta_grid(&cfg.delta_grid)?;
    Ok(&cfg.delta_grid)
}

fn energy(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    let d = cfg.dim()?;
    let functional = cfg.functional.unwrap_or(Functional::IDelta);
    let region = cfg.region.clone().unwrap_or(Region::WholeSpace);
    let quad = cfg.quad();
    let e = &cfg.exponents;
    let alpha = e.alpha.unwrap_or(0.0);
    if cfg.families.is_empty() {
        return Err(CliError::Config("energy needs at least one --family".into()));
    }
    let deltas: Vec<Option<f64>> =
        if functional.uses_delta() { delta_grid(cfg)?.iter().map(|&x| Some(x)).collect() } else { vec![None] };
    let potential = match (functional, &cfg.potential) {
        (Functional::IDeltaMagnetic, Some(m)) => Some(make_linear_potential(d, m)?),
        (Functional::IDeltaMagnetic, None) => {
            return Err(CliError::Config("i_delta_magnetic needs --potential".into()));
        }
        _ => None,
    };
    let mut t = Table::new(
        cfg,
        &strings(&["functional", "family", "delta", "value", "std_err", "n_samples", "tail_analytic", "diverged"]),
    )?;
    let mut failures = vec![];
    let mut n = 0;
    for fam in &cfg.families {
        let u = instantiate(fam, d)?;
        for &delta in &deltas {
            let est: EnergyEstimate = match functional {
                Functional::IDelta => {
                    i_delta(&u, &region, &EnergyParams::new(cfg.p()?, delta.unwrap(), alpha)?, &quad)?
                }
                Functional::IDeltaMagnetic => i_delta_magnetic(
                    &u,
                    potential.as_ref().unwrap(),
                    &region,
                    &EnergyParams::new(cfg.p()?, delta.unwrap(), alpha)?,
                    &quad,
                )?,
                Functional::JDelta => j_delta(&u, cfg.p()?, delta.unwrap(), &quad)?,
                Functional::WeightedNorm => {
                    let gamma = e.gamma.ok_or_else(|| CliError::Config("weighted_norm needs --gamma".into()))?;
                    let tau = e.tau.ok_or_else(|| CliError::Config("weighted_norm needs --tau".into()))?;
                    weighted_norm(&u, &region, &WeightSpec::power(gamma, tau), &quad)?
                }
                Functional::GradientEnergy => gradient_energy(&u, alpha, cfg.p()?, &quad)?,
                Functional::LpNorm => lp_norm_pow(&u, &region, cfg.p()?, &quad)?,
            };
            if check && (est.diverged || !est.value.is_finite()) {
                let at = delta.map(|d| format!(" at delta {d}")).unwrap_or_default();
                failures.push(format!("{} diverged for {}{at}", functional.name(), fam.label()));
            }
            t.row(&[
                functional.name().into(),
                fam.label(),
                delta.map(f).unwrap_or_default(),
                f(est.value),
                f(est.std_err),
                est.n_samples.to_string(),
                f(est.tail_analytic),
                est.diverged.to_string(),
            ])?;
            n += 1;
        }
    }
    let s = summary(cfg, json!({ "rows": n, "failures": failures }));
    Ok(Outcome { csv: t.finish()?, summary: s, failures })
}

fn report_table(cfg: &RunConfig, rows: &[SweepRow]) -> Result<String, CliError> {
    let names: BTreeSet<&String> = rows.iter().flat_map(|r| r.report.components.keys()).collect();
    let mut header = strings(&["case_id", "family", "seed", "delta", "lhs", "lhs_se"]);
    header.extend(names.iter().map(|n| n.to_string()));
    header.extend(strings(&["rhs", "ratio"]));
    header.extend(names.iter().map(|n| format!("se:{n}")));
    header.extend(strings(&["verdict", "diverged"]));
    let mut t = Table::new(cfg, &header)?;
    for row in rows {
        let r = &row.report;
        let cell = |m: &std::collections::BTreeMap<String, f64>, n: &str| m.get(n).map(|v| f(*v)).unwrap_or_default();
        let mut cells =
            vec![r.case_id.to_string(), row.family.label(), row.seed.to_string(), f(r.delta), f(r.lhs), f(r.lhs_std_err)];
        cells.extend(names.iter().map(|n| cell(&r.components, n)));
        cells.extend([f(r.rhs), f(r.ratio)]);
        cells.extend(names.iter().map(|n| cell(&r.std_errs, n)));
        cells.extend([r.verdict.to_string(), r.diverged.join("|")]);
        t.row(&cells)?;
    }
    t.finish()
}

fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    if cfg.command == Command::Verify {
        cfg.one_family()?;
    }
    if cfg.families.is_empty() {
        return Err(CliError::Config("a function family is required (--family)".into()));
    }
    Ok(SweepSpec {
        case: cfg.inequality_case()?,
        dim: cfg.dim()?,
        families: cfg.families.clone(),
        delta_grid: delta_grid(cfg)?.to_vec(),
        seeds: cfg.instance_seeds(),
    })
}

fn inequality(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    let spec = sweep_spec(cfg)?;
    let rows = sweep(&spec, &cfg.quad())?;
    let s = summarize(&rows);
    let mut failures = vec![];
    for row in rows.iter().filter(|r| r.report.verdict == Verdict::Suspect) {
        failures.push(format!(
            "suspect: {} {} delta={} ({})",
            row.report.case_id,
            row.family.label(),
            row.report.delta,
            row.report.diverged.join(", ")
        ));
    }
    if check {
        for inst in &s.instances {
            if !inst.all_finite {
                failures.push(format!("non-finite ratio for {}", inst.family));
            }
            if inst.spread > MAX_SPREAD {
                failures.push(format!("max/min ratio {} > {MAX_SPREAD} for {}", inst.spread, inst.family));
            }
        }
        if s.uniformity > MAX_UNIFORMITY {
            failures.push(format!("sup ratio varies by {} > {MAX_UNIFORMITY} across instances", s.uniformity));
        }
    }
    let body = json!({
        "cases": [{
            "case_id": s.case_id,
            "max_ratio": s.max_ratio,
            "min_ratio": s.min_ratio,
            "uniformity": s.uniformity,
            "any_suspect": s.any_suspect,
            "instances": s.instances,
        }],
        "failures": failures,
    });
    Ok(Outcome { csv: report_table(cfg, &rows)?, summary: summary(cfg, body), failures })
}

fn constant(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    let mut failures = vec![];
    if cfg.case.is_none() {
        let lambda = cfg.lambda.ok_or_else(|| CliError::Config("constant needs --case or --lambda".into()))?;
        let tau = cfg.exponents.tau.ok_or_else(|| CliError::Config("the Hölder constant needs --tau".into()))?;
        let c = holder_min_constant(lambda, tau, HOLDER_GRID, HOLDER_GRID)?;
        let worst = holder_check(lambda, tau, c, HOLDER_CHECKS, cfg.seed);
        if check && worst > 1.0 {
            failures.push(format!("constant {c} violated: worst ratio {worst}"));
        }
        let mut t = Table::new(cfg, &strings(&["lambda", "tau", "constant", "worst_check"]))?;
        t.row(&[f(lambda), f(tau), f(c), f(worst)])?;
        let body = json!({ "constant": c, "worst_check": worst, "failures": failures });
        return Ok(Outcome { csv: t.finish()?, summary: summary(cfg, body), failures });
    }
    let spec = sweep_spec(cfg)?;
    let est = estimate_constant(&spec, &cfg.quad())?;
    if check && !est.value.is_finite() {
        failures.push(format!("constant estimate is {}", est.value));
    }
    let mut t = Table::new(cfg, &strings(&["case_id", "value", "family", "delta", "seed"]))?;
    t.row(&[
        spec.case.id.to_string(),
        f(est.value),
        est.family.as_ref().map(|f| f.label()).unwrap_or_default(),
        est.delta.map(f).unwrap_or_default(),
        est.seed.map(|s| s.to_string()).unwrap_or_default(),
    ])?;
    let body = json!({ "constant": est, "failures": failures });
    Ok(Outcome { csv: t.finish()?, summary: summary(cfg, body), failures })
}

fn profile(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    let u = instantiate(cfg.one_family()?, cfg.dim()?)?;
    let params = cfg.ckn_params()?;
    let delta = match delta_grid(cfg)? {
        [d] => *d,
        _ => return Err(CliError::Config("profile takes a single delta (--delta)".into())),
    };
    let prof = dyadic_profile(&u, &params, delta, &cfg.quad())?;
    let mut failures = vec![];
    if prof.diverged {
        failures.push("profile contains a diverged annulus".into());
    }
    if check && !prof.truncation_ok {
        failures.push("innermost annuli carry too much of the sum".into());
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(CONFIG_PREFIX.as_bytes());
    buf.extend_from_slice(cfg.embedded().as_bytes());
    buf.push(b'\n');
    prof.write_csv(&mut buf)?;
    let body = json!({
        "m": prof.m,
        "n": prof.n,
        "sum_i_delta": prof.sum_i_delta().value,
        "sum_grad": prof.sum_grad(),
        "truncation_ok": prof.truncation_ok,
        "failures": failures,
    });
    Ok(Outcome { csv: String::from_utf8(buf).expect("utf-8"), summary: summary(cfg, body), failures })
}

fn klimit(cfg: &RunConfig, check: bool) -> Result<Outcome, CliError> {
    let d = cfg.dim()?;
    let p = cfg.p()?;
    let u = instantiate(cfg.one_family()?, d)?;
    let quad = cfg.quad();
    let grid = delta_grid(cfg)?;
    let local = k_constant(d, p) * gradient_energy(&u, 0.0, p, &quad)?.value;
    let mut t = Table::new(cfg, &strings(&["delta", "i_delta", "i_delta_se", "k_grad", "ratio"]))?;
    let mut last = None;
    let mut failures = vec![];
    for &delta in grid {
        let e = i_delta(&u, &Region::WholeSpace, &EnergyParams::new(p, delta, 0.0)?, &quad)?;
        if e.diverged {
            failures.push(format!("I_delta diverged at delta {delta}"));
        }
        let ratio = if local > 0.0 { e.value / local } else { f64::NAN };
        t.row(&[f(delta), f(e.value), f(e.std_err), f(local), f(ratio)])?;
        last = Some(ratio);
    }
    if check {
        match last {
            Some(r) if (KLIMIT_BAND.0..=KLIMIT_BAND.1).contains(&r) => {}
            r => failures.push(format!("ratio at the smallest delta is {r:?}, outside {KLIMIT_BAND:?}")),
        }
    }
    let body = json!({ "k_grad": local, "final_ratio": last, "failures": failures });
    Ok(Outcome { csv: t.finish()?, summary: summary(cfg, body), failures })
}
