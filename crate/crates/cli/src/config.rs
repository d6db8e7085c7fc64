//! Run configs: the JSON schema and the command-line flags that fill it.

use crate::CliError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nonlocal_hardy::dyadic::CKNParams;
use nonlocal_hardy::fnlib::{FamilySpec, Region};
use nonlocal_hardy::verify::{CaseGroup, CaseId, InequalityCase};
use nonlocal_hardy::QuadConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// First-line prefix of every CSV this tool writes.
pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Energy,
    Sweep,
    Verify,
    Constant,
    Profile,
    Klimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    #[value(name = "i_delta")]
    IDelta,
    #[value(name = "i_delta_magnetic")]
    IDeltaMagnetic,
    #[value(name = "j_delta")]
    JDelta,
    #[value(name = "weighted_norm")]
    WeightedNorm,
    #[value(name = "gradient_energy")]
    GradientEnergy,
    #[value(name = "lp_norm")]
    LpNorm,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::IDelta => "i_delta",
            Functional::IDeltaMagnetic => "i_delta_magnetic",
            Functional::JDelta => "j_delta",
            Functional::WeightedNorm => "weighted_norm",
            Functional::GradientEnergy => "gradient_energy",
            Functional::LpNorm => "lp_norm",
        }
    }

    pub fn uses_delta(&self) -> bool {
        matches!(self, Functional::IDelta | Functional::IDeltaMagnetic | Functional::JDelta)
    }
}

/// Exponents; which ones a command needs depends on the command and case.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Weight exponent for `energy --functional weighted_norm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilySpec>,
    /// Instance seeds for sweeps; defaults to `[seed]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseId>,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_grid: Vec<f64>,
    /// `quad.seed` is always replaced by `seed`.
    #[serde(default)]
    pub quad: QuadConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Rows of the matrix M in A(x) = Mx.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<Vec<f64>>>,
    /// Λ for the Hölder-type constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub json_summary: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, seed: u64) -> Self {
        RunConfig {
            command,
            seed,
            dim: None,
            families: vec![],
            seeds: vec![],
            case: None,
            exponents: Exponents::default(),
            r: None,
            big_r: None,
            delta_grid: vec![],
            quad: QuadConfig::default(),
            functional: None,
            region: None,
            potential: None,
            lambda: None,
            out: None,
            json_summary: None,
        }
    }

    /// Parses a JSON config, or the embedded config line of a CSV written earlier.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let json = match text.strip_prefix(CONFIG_PREFIX) {
            Some(rest) => rest.lines().next().unwrap_or(""),
            None => text,
        };
        serde_json::from_str(json).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// The config as embedded in result files: output paths dropped, quad seed resolved.
    pub fn embedded(&self) -> String {
        let mut c = self.clone();
        c.quad.seed = c.seed;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn quad(&self) -> QuadConfig {
        self.quad.clone().with_seed(self.seed)
    }

    pub fn dim(&self) -> Result<usize, CliError> {
        self.dim.ok_or_else(|| CliError::Config("dimension is required (--d)".into()))
    }

    pub fn p(&self) -> Result<f64, CliError> {
        self.exponents.p.ok_or_else(|| CliError::Config("exponent p is required (--p)".into()))
    }

    pub fn instance_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn one_family(&self) -> Result<&FamilySpec, CliError> {
        match self.families.as_slice() {
            [f] => Ok(f),
            [] => Err(CliError::Config("a function family is required (--family)".into())),
            _ => Err(CliError::Config(format!("{:?} takes exactly one family", self.command))),
        }
    }

    pub fn ckn_params(&self) -> Result<CKNParams, CliError> {
        let e = &self.exponents;
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::Config(format!("CKN parameters need --{flag}")));
        let d = self.dim()?;
        let p = self.p()?;
        let tau = need(e.tau, "tau")?;
        let alpha = e.alpha.unwrap_or(0.0);
        let a = e.a.unwrap_or(1.0);
        let q = e.q.unwrap_or(p);
        let beta = e.beta.unwrap_or(0.0);
        Ok(CKNParams::balanced(d, p, q, tau, a, alpha, beta)?)
    }

    pub fn inequality_case(&self) -> Result<InequalityCase, CliError> {
        let id = self.case.ok_or_else(|| CliError::Config("a case id is required (--case)".into()))?;
        let mut case = if id.needs_ckn() {
            if id.group() == CaseGroup::CknAOne && self.exponents.a.is_some_and(|a| a != 1.0) {
                return Err(CliError::Config(format!("case {id} has a = 1")));
            }
            InequalityCase::with_ckn(id, self.ckn_params()?)
        } else {
            InequalityCase::new(id, self.p()?).with_alpha(self.exponents.alpha.unwrap_or(0.0))
        };
        case.r = self.r;
        case.big_r = self.big_r;
        Ok(case)
    }
}

#[derive(Parser, Debug)]
#[command(name = "nlh", version, about = "Nonlocal Hardy and CKN energies, sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Evaluate one functional for each family over the δ grid.
    Energy(RunArgs),
    /// Inequality ratios over several families, seeds and a δ grid.
    Sweep(RunArgs),
    /// Inequality ratios for one family over a δ grid.
    Verify(RunArgs),
    /// Empirical constant of a case, or the Hölder-type constant with --lambda.
    Constant(RunArgs),
    /// Dyadic annulus profile at one δ.
    Profile(RunArgs),
    /// I_δ against K_{d,p}‖∇u‖_p^p as δ shrinks.
    Klimit(RunArgs),
}

impl CliCommand {
    pub fn split(self) -> (Command, RunArgs) {
        match self {
            CliCommand::Energy(a) => (Command::Energy, a),
            CliCommand::Sweep(a) => (Command::Sweep, a),
            CliCommand::Verify(a) => (Command::Verify, a),
            CliCommand::Constant(a) => (Command::Constant, a),
            CliCommand::Profile(a) => (Command::Profile, a),
            CliCommand::Klimit(a) => (Command::Klimit, a),
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// JSON run config, or a CSV written by this tool.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Exit 1 when an acceptance assertion fails.
    #[arg(long)]
    pub check: bool,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json_summary: Option<PathBuf>,
    #[arg(long = "d", visible_alias = "dim")]
    pub dim: Option<usize>,
    /// name[:key=value,...]; repeatable.
    #[arg(long = "family")]
    pub families: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "big-r")]
    pub big_r: Option<f64>,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Vec<f64>,
    #[arg(long, conflicts_with = "delta_grid")]
    pub delta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long, value_enum)]
    pub functional: Option<Functional>,
    /// whole | domain | ball:R | complement:R | annulus:r,R
    #[arg(long)]
    pub region: Option<String>,
    /// Matrix rows of A(x) = Mx, e.g. "0,-1;1,0".
    #[arg(long, allow_hyphen_values = true)]
    pub potential: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

/// `name` or `name:key=value,key=value`.
pub fn parse_family(s: &str) -> Result<FamilySpec, CliError> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let mut f = FamilySpec::new(name.trim());
    for kv in rest.into_iter().flat_map(|r| r.split(',')).filter(|kv| !kv.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("family parameter '{kv}' is not key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| CliError::Config(format!("family parameter '{kv}' is not a number")))?;
        f = f.with(k.trim(), v);
    }
    Ok(f)
}

fn num(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("{what}: '{s}' is not a number")))
}

pub fn parse_region(s: &str) -> Result<Region, CliError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let region = match kind.trim() {
        "whole" => Region::WholeSpace,
        "domain" => Region::BoundedDomain,
        "ball" => Region::ball(num(rest, "ball radius")?),
        "complement" => Region::complement(num(rest, "complement radius")?),
        "annulus" => {
            let (a, b) = rest.split_once(',').ok_or_else(|| CliError::Config("annulus needs r,R".into()))?;
            Region::annulus(num(a, "annulus r")?, num(b, "annulus R")?)
        }
        other => return Err(CliError::Config(format!("unknown region '{other}'"))),
    };
    region.validate()?;
    Ok(region)
}

pub fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>, CliError> {
    s.split(';').map(|row| row.split(',').map(|v| num(v, "potential entry")).collect()).collect()
}

/// Resolves the config from an optional file and flag overrides.
pub fn resolve(command: Command, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut c = match &args.config {
        Some(path) => {
            let c = RunConfig::from_file(path)?;
            if c.command != command {
                return Err(CliError::Config(format!("config is for {:?}, not {command:?}", c.command)));
            }
            c
        }
        None => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::Config("a seed is required (--seed or \"seed\" in the config)".into()))?;
            RunConfig::new(command, seed)
        }
    };
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if args.dim.is_some() {
        c.dim = args.dim;
    }
    if !args.families.is_empty() {
        c.families = args.families.iter().map(|f| parse_family(f)).collect::<Result<_, _>>()?;
    }
    if !args.seeds.is_empty() {
        c.seeds = args.seeds.clone();
    }
    if let Some(id) = &args.case {
        c.case = Some(id.parse()?);
    }
    let e = &mut c.exponents;
    for (slot, v) in [
        (&mut e.p, args.p),
        (&mut e.q, args.q),
        (&mut e.tau, args.tau),
        (&mut e.a, args.a),
        (&mut e.alpha, args.alpha),
        (&mut e.beta, args.beta),
        (&mut e.gamma, args.gamma),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    if args.r.is_some() {
        c.r = args.r;
    }
    if args.big_r.is_some() {
        c.big_r = args.big_r;
    }
    if let Some(d) = args.delta {
        c.delta_grid = vec![d];
    } else if !args.delta_grid.is_empty() {
        c.delta_grid = args.delta_grid.clone();
    }
    if let Some(n) = args.samples {
        c.quad.samples = n;
    }
    if let Some(n) = args.shells {
        c.quad.shells = n;
    }
    if args.functional.is_some() {
        c.functional = args.functional;
    }
    if let Some(r) = &args.region {
        c.region = Some(parse_region(r)?);
    }
    if let Some(m) = &args.potential {
        c.potential = Some(parse_matrix(m)?);
    }
    if args.lambda.is_some() {
        c.lambda = args.lambda;
    }
    if args.out.is_some() {
        c.out = args.out.clone();
    }
    if args.json_summary.is_some() {
        c.json_summary = args.json_summary.clone();
    }
    c.quad.seed = c.seed;
    c.quad.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_syntax() {
        let f = parse_family("annulus_tent:inner=1, outer=16").unwrap();
        assert_eq!(f.name, "annulus_tent");
        assert_eq!(f.params["outer"], 16.0);
        assert!(parse_family("bump:radius").is_err());
        assert_eq!(parse_family("bump").unwrap().params.len(), 0);
    }

    #[test]
    fn regions_and_matrices() {
        assert_eq!(parse_region("annulus:1,2").unwrap(), Region::annulus(1.0, 2.0));
        assert!(parse_region("annulus:2,1").is_err());
        assert_eq!(parse_matrix("0,-1;1,0").unwrap(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn seed_is_mandatory() {
        let e = resolve(Command::Verify, &RunArgs::default()).unwrap_err();
        assert!(e.to_string().contains("seed"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_text(r#"{"command":"verify","seed":1,"bogus":2}"#).is_err());
        assert!(RunConfig::from_text(r#"{"command":"verify"}"#).is_err());
        let c = RunConfig::from_text(r#"{"command":"klimit","seed":3,"dim":1}"#).unwrap();
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn embedded_round_trip() {
        let mut c = RunConfig::new(Command::Verify, 7);
        c.dim = Some(3);
        c.families = vec![FamilySpec::new("bump")];
        c.out = Some("x.csv".into());
        let text = format!("{CONFIG_PREFIX}{}\nrest", c.embedded());
        let back = RunConfig::from_text(&text).unwrap();
        assert_eq!(back.out, None);
        assert_eq!(back.embedded(), c.embedded());
    }
}
