//! Inequality harness: LHS and RHS of every Hardy / CKN case, sweeps over
//! families and δ grids, and empirical constants.

use crate::dyadic::{dyadic_profile_range, floor_log2, support_annulus_range, CKNParams, DEFAULT_DEPTH};
use crate::energy::{
    gradient_energy, i_delta, k_constant, lp_norm_pow, weighted_norm, EnergyParams, LogKind, WeightSpec,
};
use crate::error::{Error, Result};
use crate::fnlib::{instantiate, FamilySpec, Region, ScalarField};
use crate::quad::{EnergyEstimate, QuadConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

const EQ_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    H1,
    H2,
    H3,
    H4,
    C1,
    C2,
    C3,
    C4,
    G1,
    G2,
    G3,
    G4,
    P1,
    P2,
    P3,
    P4,
    S1,
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    L1,
    L2,
}

/// Which statement a case belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseGroup {
    Hardy,
    CknAOne,
    CknGeneral,
    Gradient,
    Sobolev,
    DomainHardy,
    DomainCkn,
    Limit,
    GradientBound,
}

impl CaseId {
    pub const ALL: [CaseId; 27] = {
        use CaseId::*;
        [H1, H2, H3, H4, C1, C2, C3, C4, G1, G2, G3, G4, P1, P2, P3, P4, S1, B1, B2, B3, B4, B5, B6, B7, B8, L1, L2]
    };

    pub fn group(&self) -> CaseGroup {
        use CaseId::*;
        match self {
            H1 | H2 | H3 | H4 => CaseGroup::Hardy,
            C1 | C2 | C3 | C4 => CaseGroup::CknAOne,
            G1 | G2 | G3 | G4 => CaseGroup::CknGeneral,
            P1 | P2 | P3 | P4 => CaseGroup::Gradient,
            S1 => CaseGroup::Sobolev,
            B1 | B2 | B3 | B4 => CaseGroup::DomainHardy,
            B5 | B6 | B7 | B8 => CaseGroup::DomainCkn,
            L1 => CaseGroup::Limit,
            L2 => CaseGroup::GradientBound,
        }
    }

    /// Item number within its statement (1 for i), …, 4 for iv)).
    pub fn part(&self) -> u8 {
        let s = format!("{self:?}");
        let n: u8 = s[1..].parse().unwrap();
        if matches!(self.group(), CaseGroup::DomainCkn) {
            n - 4
        } else {
            n
        }
    }

    /// Whether the case needs CKN exponents.
    pub fn needs_ckn(&self) -> bool {
        matches!(
            self.group(),
            CaseGroup::CknAOne | CaseGroup::CknGeneral | CaseGroup::Gradient | CaseGroup::DomainCkn
        )
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown case id '{s}'")))
    }
}

/// A case id with its exponents and optional geometry overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityCase {
    pub id: CaseId,
    /// Integrability exponent for cases without CKN exponents.
    #[serde(default)]
    pub p: Option<f64>,
    /// Weight exponent for L2.
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub ckn: Option<CKNParams>,
    /// Inner radius r.
    #[serde(default)]
    pub r: Option<f64>,
    /// Outer radius R.
    #[serde(default)]
    pub big_r: Option<f64>,
}

impl InequalityCase {
    pub fn new(id: CaseId, p: f64) -> Self {
        InequalityCase { id, p: Some(p), alpha: 0.0, ckn: None, r: None, big_r: None }
    }

    pub fn with_ckn(id: CaseId, params: CKNParams) -> Self {
        InequalityCase { id, p: Some(params.p), alpha: params.alpha, ckn: Some(params), r: None, big_r: None }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_big_r(mut self, big_r: f64) -> Self {
        self.big_r = Some(big_r);
        self
    }

    fn exponent(&self) -> Result<f64> {
        match (self.ckn, self.p) {
            (Some(c), _) => Ok(c.p),
            (None, Some(p)) => Ok(p),
            _ => Err(Error::InvalidParameter(format!("case {} needs an exponent p", self.id))),
        }
    }

    fn ckn_params(&self) -> Result<CKNParams> {
        self.ckn
            .ok_or_else(|| Error::InvalidParameter(format!("case {} needs CKN parameters", self.id)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Suspect,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Suspect => "suspect",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub case_id: CaseId,
    pub p: f64,
    /// Interpolation exponent a (1 where the case has none).
    pub a: f64,
    pub delta: f64,
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub components: BTreeMap<String, f64>,
    pub std_errs: BTreeMap<String, f64>,
    pub rhs: f64,
    pub ratio: f64,
    pub verdict: Verdict,
    /// Components whose estimate is only a lower bound.
    pub diverged: Vec<String>,
    /// Wall time in seconds; not part of any deterministic output.
    #[serde(skip)]
    pub runtime: f64,
}

/// The documented RHS combination of a case's components.
pub fn rhs_from_components(id: CaseId, p: f64, a: f64, c: &BTreeMap<String, f64>) -> f64 {
    let g = |k: &str| c.get(k).copied().unwrap_or(0.0);
    match id.group() {
        CaseGroup::Hardy | CaseGroup::CknAOne => g("i_delta") + g("penalty"),
        CaseGroup::CknGeneral => g("dyadic_sum").powf(a / p) * g("weighted_q_norm").powf(1.0 - a),
        CaseGroup::Gradient => g("grad_norm").powf(a) * g("weighted_q_norm").powf(1.0 - a),
        CaseGroup::Sobolev => g("i_delta").powf(1.0 / p) + g("lp_norm") + g("penalty"),
        CaseGroup::DomainHardy => g("i_delta") + g("lp_pow") + g("penalty"),
        CaseGroup::DomainCkn => {
            (g("i_delta") + g("lp_pow") + g("penalty")).powf(a / p) * g("weighted_q_norm").powf(1.0 - a)
        }
        CaseGroup::Limit => g("k_constant") * g("grad_energy"),
        CaseGroup::GradientBound => g("grad_energy"),
    }
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    }
}

/// v^k with a first-order standard error.
fn pow_est(e: &EnergyEstimate, k: f64) -> (f64, f64) {
    let v = e.value.max(0.0);
    let val = v.powf(k);
    let se = if v > 0.0 { (k * v.powf(k - 1.0)).abs() * e.std_err } else { 0.0 };
    (val, se)
}

struct Builder {
    id: CaseId,
    lhs: f64,
    lhs_se: f64,
    comps: BTreeMap<String, f64>,
    errs: BTreeMap<String, f64>,
    diverged: Vec<String>,
}

impl Builder {
    fn new(id: CaseId) -> Self {
        Builder { id, lhs: 0.0, lhs_se: 0.0, comps: BTreeMap::new(), errs: BTreeMap::new(), diverged: vec![] }
    }

    fn lhs(&mut self, e: &EnergyEstimate, outer_power: f64) {
        let (v, se) = pow_est(e, outer_power);
        self.lhs = v;
        self.lhs_se = se;
        if e.diverged {
            self.diverged.push("lhs".into());
        }
    }

    fn add(&mut self, name: &str, e: &EnergyEstimate) {
        self.comps.insert(name.into(), e.value);
        self.errs.insert(name.into(), e.std_err);
        if e.diverged {
            self.diverged.push(name.into());
        }
    }

    fn add_pow(&mut self, name: &str, e: &EnergyEstimate, k: f64) {
        let (v, se) = pow_est(e, k);
        self.add(name, &EnergyEstimate { value: v, std_err: se, ..*e });
    }

    fn set(&mut self, name: &str, v: f64) {
        self.comps.insert(name.into(), v);
        self.errs.insert(name.into(), 0.0);
    }

    fn finish(self, p: f64, a: f64, delta: f64) -> InequalityReport {
        let rhs = rhs_from_components(self.id, p, a, &self.comps);
        let verdict = if self.diverged.is_empty() { Verdict::Bounded } else { Verdict::Suspect };
        InequalityReport {
            case_id: self.id,
            p,
            a,
            delta,
            lhs: self.lhs,
            lhs_std_err: self.lhs_se,
            ratio: ratio_of(self.lhs, rhs),
            rhs,
            components: self.comps,
            std_errs: self.errs,
            verdict,
            diverged: self.diverged,
            runtime: 0.0,
        }
    }
}

fn violation(id: CaseId, hypothesis: &str) -> Error {
    Error::HypothesisViolation { case: id.to_string(), hypothesis: hypothesis.to_string() }
}

fn require(cond: bool, id: CaseId, hypothesis: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(violation(id, hypothesis))
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ_TOL * (1.0 + a.abs().max(b.abs()))
}

/// R with supp u ⊂ B_R: the override, else the dyadic radius 2^n with
/// 2^{n−1} ≤ outer(supp u) < 2^n.
fn outer_radius(case: &InequalityCase, u: &ScalarField) -> Result<f64> {
    let s = u.support();
    let big = match case.big_r {
        Some(r) => r,
        None if s.is_empty_support() => 1.0,
        None if s.shell().outer.is_finite() => 2f64.powi(floor_log2(s.shell().outer) + 1),
        None => f64::INFINITY,
    };
    require(big.is_finite() && big > 0.0 && s.within_ball(big), case.id, "supp u ⊂ B_R")?;
    Ok(big)
}

/// r with supp u ⊂ R^d∖B_r: the override, else the dyadic radius 2^m with
/// 2^m ≤ inner(supp u) < 2^{m+1}.
fn inner_radius(case: &InequalityCase, u: &ScalarField) -> Result<f64> {
    let s = u.support();
    let r = match case.r {
        Some(r) => r,
        None if s.is_empty_support() => 1.0,
        None if s.shell().inner > 0.0 => 2f64.powi(floor_log2(s.shell().inner)),
        None => 0.0,
    };
    require(r > 0.0 && s.avoids_ball(r), case.id, "supp u ⊂ R^d∖B_r with r > 0")?;
    Ok(r)
}

/// R for the exterior log cases: the override, the support's outer radius, or 4r.
fn exterior_outer(case: &InequalityCase, u: &ScalarField, r: f64) -> Result<f64> {
    let out = u.support().shell().outer;
    let big = case.big_r.unwrap_or(if out.is_finite() && out > r { out } else { 4.0 * r });
    require(big > r, case.id, "0 < r < R")?;
    Ok(big)
}

fn hardy_weight(p: f64) -> WeightSpec {
    WeightSpec::power(-1.0, p)
}

fn check_ckn(id: CaseId, c: &CKNParams, d: usize) -> Result<()> {
    c.validate(d).map_err(|e| match e {
        Error::ParamViolation(m) => violation(id, &m),
        other => other,
    })
}

/// Evaluates LHS, RHS components and the ratio of one case for one field and δ.
pub fn evaluate_case(case: &InequalityCase, u: &ScalarField, delta: f64, cfg: &QuadConfig) -> Result<InequalityReport> {
    let clock = Clock::start();
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    cfg.validate()?;
    let p = case.exponent()?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let mut b = Builder::new(case.id);
    let a = match case.id.group() {
        CaseGroup::Hardy => {
            hardy(case, p, u, delta, cfg, &mut b)?;
            1.0
        }
        CaseGroup::CknAOne => {
            ckn_a_one(case, u, delta, cfg, &mut b)?;
            1.0
        }
        CaseGroup::CknGeneral => ckn_general(case, u, delta, cfg, &mut b)?,
        CaseGroup::Gradient => gradient_case(case, u, cfg, &mut b)?,
        CaseGroup::Sobolev => {
            sobolev(case, p, u, delta, cfg, &mut b)?;
            1.0
        }
        CaseGroup::DomainHardy => {
            domain_hardy(case, p, u, delta, cfg, &mut b)?;
            1.0
        }
        CaseGroup::DomainCkn => domain_ckn(case, u, delta, cfg, &mut b)?,
        CaseGroup::Limit => {
            b.lhs(&i_delta(u, &Region::WholeSpace, &EnergyParams::new(p, delta, 0.0)?, cfg)?, 1.0);
            b.add("grad_energy", &gradient_energy(u, 0.0, p, cfg)?);
            b.set("k_constant", k_constant(u.dim(), p));
            1.0
        }
        CaseGroup::GradientBound => {
            let al = case.alpha;
            require(p > 1.0, case.id, "p > 1")?;
            require(al > -1.0 / p && al < 1.0 - 1.0 / p, case.id, "−1/p < α < 1 − 1/p")?;
            b.lhs(&i_delta(u, &Region::WholeSpace, &EnergyParams::new(p, delta, al)?, cfg)?, 1.0);
            b.add("grad_energy", &gradient_energy(u, al, p, cfg)?);
            1.0
        }
    };
    let mut rep = b.finish(p, a, delta);
    rep.runtime = clock.elapsed();
    Ok(rep)
}

fn hardy(
    case: &InequalityCase,
    p: f64,
    u: &ScalarField,
    delta: f64,
    cfg: &QuadConfig,
    b: &mut Builder,
) -> Result<()> {
    let id = case.id;
    let d = u.dim() as f64;
    let (lhs, penalty) = match case.id.part() {
        1 => {
            require(p < d, id, "1 ≤ p < d")?;
            let big = outer_radius(case, u)?;
            (weighted_norm(u, &Region::WholeSpace, &hardy_weight(p), cfg)?, big.powf(d - p) * delta.powf(p))
        }
        2 => {
            require(p > d, id, "p > d")?;
            let r = inner_radius(case, u)?;
            (weighted_norm(u, &Region::WholeSpace, &hardy_weight(p), cfg)?, r.powf(d - p) * delta.powf(p))
        }
        3 => {
            require(near(p, d) && d >= 2.0, id, "p = d ≥ 2")?;
            let big = outer_radius(case, u)?;
            let r = case.r.unwrap_or(0.25 * big);
            require(r > 0.0 && r < big, id, "0 < r < R")?;
            let w = hardy_weight(p).with_log(LogKind::LnROverX(big), d);
            (weighted_norm(u, &Region::complement(r), &w, cfg)?, (2.0 * big / r).ln() * delta.powf(d))
        }
        _ => {
            require(near(p, d) && d >= 2.0, id, "p = d ≥ 2")?;
            let r = inner_radius(case, u)?;
            let big = exterior_outer(case, u, r)?;
            let w = hardy_weight(p).with_log(LogKind::LnXOverR(r), d);
            (weighted_norm(u, &Region::ball(big), &w, cfg)?, (2.0 * big / r).ln() * delta.powf(d))
        }
    };
    b.lhs(&lhs, 1.0);
    b.add("i_delta", &i_delta(u, &Region::WholeSpace, &EnergyParams::new(p, delta, 0.0)?, cfg)?);
    b.set("penalty", penalty);
    Ok(())
}

fn ckn_a_one(case: &InequalityCase, u: &ScalarField, delta: f64, cfg: &QuadConfig, b: &mut Builder) -> Result<()> {
    let id = case.id;
    let c = case.ckn_params()?;
    let dim = u.dim();
    let d = dim as f64;
    let (p, tau, al, ga) = (c.p, c.tau, c.alpha, c.gamma);
    require(dim >= 2, id, "d ≥ 2")?;
    require(p > 1.0 && p < d, id, "1 < p < d")?;
    require(c.a == 1.0, id, "a = 1")?;
    check_ckn(id, &c, dim)?;
    require(al - ga >= -EQ_TOL && al - ga <= 1.0 + EQ_TOL, id, "0 ≤ α − γ ≤ 1")?;
    let e = d - p + p * al;
    let w = WeightSpec::power(ga, tau);
    let dp = delta.powf(p);
    let (lhs, penalty) = match id.part() {
        1 => {
            require(e > EQ_TOL, id, "d − p + pα > 0")?;
            let big = outer_radius(case, u)?;
            (weighted_norm(u, &Region::WholeSpace, &w, cfg)?, big.powf(e) * dp)
        }
        2 => {
            require(e < -EQ_TOL, id, "d − p + pα < 0")?;
            let r = inner_radius(case, u)?;
            (weighted_norm(u, &Region::WholeSpace, &w, cfg)?, r.powf(e) * dp)
        }
        3 => {
            require(e.abs() <= EQ_TOL, id, "d − p + pα = 0")?;
            require(tau > 1.0, id, "τ > 1")?;
            let big = outer_radius(case, u)?;
            let r = case.r.unwrap_or(0.25 * big);
            require(r > 0.0 && r < big, id, "0 < r < R")?;
            let w = w.with_log(LogKind::LnROverX(big), tau);
            (weighted_norm(u, &Region::complement(r), &w, cfg)?, (2.0 * big / r).ln() * dp)
        }
        _ => {
            require(e.abs() <= EQ_TOL, id, "d − p + pα = 0")?;
            require(tau > 1.0, id, "τ > 1")?;
            let r = inner_radius(case, u)?;
            let big = exterior_outer(case, u, r)?;
            let w = w.with_log(LogKind::LnXOverR(r), tau);
            (weighted_norm(u, &Region::ball(big), &w, cfg)?, (2.0 * big / r).ln() * dp)
        }
    };
    b.lhs(&lhs, p / tau);
    b.add("i_delta", &i_delta(u, &Region::WholeSpace, &EnergyParams::new(p, delta, al)?, cfg)?);
    b.set("penalty", penalty);
    Ok(())
}

fn sign_hypothesis(id: CaseId, ci: f64, part: u8) -> Result<()> {
    match part {
        1 => require(ci > EQ_TOL, id, "1/τ + γ/d > 0"),
        2 => require(ci < -EQ_TOL, id, "1/τ + γ/d < 0"),
        _ => require(ci.abs() <= EQ_TOL, id, "1/τ + γ/d = 0"),
    }
}

fn weighted_q_norm(u: &ScalarField, region: &Region, c: &CKNParams, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    weighted_norm(u, region, &WeightSpec::power(c.beta, c.q), cfg)
}

fn ckn_general(case: &InequalityCase, u: &ScalarField, delta: f64, cfg: &QuadConfig, b: &mut Builder) -> Result<f64> {
    let id = case.id;
    let c = case.ckn_params()?;
    let dim = u.dim();
    let d = dim as f64;
    check_ckn(id, &c, dim)?;
    require(c.alpha_sigma_le_one(), id, "0 ≤ α − σ ≤ 1")?;
    let part = id.part();
    sign_hypothesis(id, c.critical_index(dim), part)?;
    if part >= 3 {
        require(c.tau > 1.0, id, "τ > 1")?;
    }
    let (m, n) = if u.is_zero() { (-(DEFAULT_DEPTH as i32), 0) } else { support_annulus_range(u, DEFAULT_DEPTH)? };
    let (rm, rn) = (2f64.powi(m), 2f64.powi(n));
    let interior = part == 1 || part == 3;
    if interior {
        require(u.support().within_ball(rn), id, "supp u ⊂ B_{2^n}")?;
    } else {
        require(u.support().avoids_ball(rm) && rm > 0.0, id, "supp u ⊂ R^d∖B_{2^m}")?;
    }
    let w = WeightSpec::power(c.gamma, c.tau);
    let (region, w) = match part {
        1 => (Region::complement(rm), w),
        2 => (Region::ball(rn), w),
        3 => (Region::complement(rm), w.with_log(LogKind::LnROverX(rn), c.tau)),
        _ => (Region::ball(rn), w.with_log(LogKind::LnXOverR(rm), c.tau)),
    };
    b.lhs(&weighted_norm(u, &region, &w, cfg)?, 1.0 / c.tau);
    let prof = dyadic_profile_range(u, &c, delta, m, n, cfg)?;
    let sum_i = prof.sum_i_delta();
    b.add("sum_i_delta", &sum_i);
    let grad = prof.sum_grad();
    if let Some(g) = grad {
        b.set("sum_grad", g);
    }
    if c.p > 1.0 && c.p < d {
        b.add("dyadic_sum", &sum_i);
    } else {
        b.set("dyadic_sum", grad.ok_or(Error::MissingGradient)?);
    }
    b.add_pow("weighted_q_norm", &weighted_q_norm(u, &Region::WholeSpace, &c, cfg)?, 1.0 / c.q);
    Ok(c.a)
}

fn gradient_case(case: &InequalityCase, u: &ScalarField, cfg: &QuadConfig, b: &mut Builder) -> Result<f64> {
    let id = case.id;
    let c = case.ckn_params()?;
    let dim = u.dim();
    if !u.has_grad() {
        return Err(Error::MissingGradient);
    }
    check_ckn(id, &c, dim)?;
    if c.on_a_one_line(dim) {
        require(c.alpha_sigma_le_one(), id, "α − σ ≤ 1 on the a = 1 balance line")?;
    }
    let part = id.part();
    sign_hypothesis(id, c.critical_index(dim), part)?;
    let w = WeightSpec::power(c.gamma, c.tau);
    let w = match part {
        1 => w,
        2 => {
            require(u.is_zero() || u.support().shell().inner > 0.0, id, "supp u ⊂ R^d∖{0}")?;
            w
        }
        3 => {
            require(c.alpha_sigma_le_one(), id, "α − σ ≤ 1")?;
            require(c.tau > 1.0, id, "τ > 1")?;
            let big = outer_radius(case, u)?;
            w.with_log(LogKind::LnROverX(big), c.tau)
        }
        _ => {
            require(c.alpha_sigma_le_one(), id, "α − σ ≤ 1")?;
            require(c.tau > 1.0, id, "τ > 1")?;
            let r = inner_radius(case, u)?;
            w.with_log(LogKind::LnXOverR(r), c.tau)
        }
    };
    b.lhs(&weighted_norm(u, &Region::WholeSpace, &w, cfg)?, 1.0 / c.tau);
    b.add_pow("grad_norm", &gradient_energy(u, c.alpha, c.p, cfg)?, 1.0 / c.p);
    b.add_pow("weighted_q_norm", &weighted_q_norm(u, &Region::WholeSpace, &c, cfg)?, 1.0 / c.q);
    Ok(c.a)
}

fn sobolev(case: &InequalityCase, p: f64, u: &ScalarField, delta: f64, cfg: &QuadConfig, b: &mut Builder) -> Result<()> {
    let id = case.id;
    let d = u.dim() as f64;
    require(p > 1.0 && p < d, id, "1 < p < d")?;
    require(u.support().within_ball(1.0), id, "supp u ⊂ Ω (unit ball)")?;
    let omega = Region::BoundedDomain;
    let pstar = d * p / (d - p);
    b.lhs(&lp_norm_pow(u, &omega, pstar, cfg)?, 1.0 / pstar);
    b.add("i_delta", &i_delta(u, &omega, &EnergyParams::new(p, delta, 0.0)?, cfg)?);
    b.add_pow("lp_norm", &lp_norm_pow(u, &omega, p, cfg)?, 1.0 / p);
    b.set("penalty", delta);
    Ok(())
}

/// R with Ω = B_1 ⋐ B_R.
fn domain_radius(case: &InequalityCase) -> Result<f64> {
    let big = case.big_r.unwrap_or(2.0);
    require(big > 1.0 && big.is_finite(), case.id, "Ω ⋐ B_R (R > 1)")?;
    Ok(big)
}

fn domain_hardy(
    case: &InequalityCase,
    p: f64,
    u: &ScalarField,
    delta: f64,
    cfg: &QuadConfig,
    b: &mut Builder,
) -> Result<()> {
    let id = case.id;
    let d = u.dim() as f64;
    let omega = Region::BoundedDomain;
    let big = domain_radius(case)?;
    let (lhs, penalty) = match id.part() {
        1 => {
            require(p < d, id, "1 ≤ p < d")?;
            (weighted_norm(u, &omega, &hardy_weight(p), cfg)?, delta.powf(p))
        }
        2 => {
            require(p > d, id, "p > d")?;
            let r = inner_radius(case, u)?;
            require(r < 1.0, id, "0 < r < 1")?;
            (weighted_norm(u, &omega, &hardy_weight(p), cfg)?, r.powf(d - p) * delta.powf(p))
        }
        3 => {
            require(near(p, d) && d >= 2.0, id, "p = d ≥ 2")?;
            let r = case.r.unwrap_or(0.25 * big);
            require(r > 0.0 && r < 1.0, id, "0 < r < 1")?;
            let w = hardy_weight(p).with_log(LogKind::LnROverX(big), d);
            (weighted_norm(u, &Region::annulus(r, 1.0), &w, cfg)?, (2.0 * big / r).ln() * delta.powf(d))
        }
        _ => {
            require(near(p, d) && d >= 2.0, id, "p = d ≥ 2")?;
            let r = inner_radius(case, u)?;
            require(r < 1.0, id, "0 < r < 1")?;
            let w = hardy_weight(p).with_log(LogKind::LnXOverR(r), d);
            (weighted_norm(u, &Region::ball(big.min(1.0)), &w, cfg)?, (2.0 * big / r).ln() * delta.powf(d))
        }
    };
    b.lhs(&lhs, 1.0);
    b.add("i_delta", &i_delta(u, &omega, &EnergyParams::new(p, delta, 0.0)?, cfg)?);
    b.add("lp_pow", &lp_norm_pow(u, &omega, p, cfg)?);
    b.set("penalty", penalty);
    Ok(())
}

fn domain_ckn(case: &InequalityCase, u: &ScalarField, delta: f64, cfg: &QuadConfig, b: &mut Builder) -> Result<f64> {
    let id = case.id;
    let c = case.ckn_params()?;
    let dim = u.dim();
    let d = dim as f64;
    let p = c.p;
    require(dim >= 2, id, "d ≥ 2")?;
    require(p > 1.0 && p < d, id, "1 < p < d")?;
    check_ckn(id, &c, dim)?;
    require(c.alpha_sigma_le_one(), id, "0 ≤ α − σ ≤ 1")?;
    let part = id.part();
    sign_hypothesis(id, c.critical_index(dim), part)?;
    let omega = Region::BoundedDomain;
    let big = domain_radius(case)?;
    let dp = delta.powf(p);
    let w = WeightSpec::power(c.gamma, c.tau);
    let (lhs, penalty) = match part {
        1 => (weighted_norm(u, &omega, &w, cfg)?, dp),
        2 => {
            require(u.is_zero() || u.support().shell().inner > 0.0, id, "supp u ⊂ Ω∖{0}")?;
            (weighted_norm(u, &omega, &w, cfg)?, dp)
        }
        3 => {
            require(c.tau > 1.0, id, "τ > 1")?;
            let r = case.r.unwrap_or(0.25 * big);
            require(r > 0.0 && r < 1.0, id, "0 < r < 1")?;
            let w = w.with_log(LogKind::LnROverX(big), c.tau);
            (weighted_norm(u, &Region::annulus(r, 1.0), &w, cfg)?, dp * (2.0 * big / r).ln())
        }
        _ => {
            require(c.tau > 1.0, id, "τ > 1")?;
            let r = inner_radius(case, u)?;
            require(r < 1.0, id, "0 < r < 1")?;
            let w = w.with_log(LogKind::LnXOverR(r), c.tau);
            (weighted_norm(u, &omega, &w, cfg)?, dp * (2.0 * big / r).ln())
        }
    };
    b.lhs(&lhs, 1.0 / c.tau);
    b.add("i_delta", &i_delta(u, &omega, &EnergyParams::new(p, delta, c.alpha)?, cfg)?);
    b.add("lp_pow", &lp_norm_pow(u, &omega, p, cfg)?);
    b.set("penalty", penalty);
    b.add_pow("weighted_q_norm", &weighted_q_norm(u, &omega, &c, cfg)?, 1.0 / c.q);
    Ok(c.a)
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    t0: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Clock {
            #[cfg(not(target_arch = "wasm32"))]
            t0: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.t0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// A case evaluated over family instances, seeds and a δ grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub case: InequalityCase,
    pub dim: usize,
    pub families: Vec<FamilySpec>,
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_delta_grid(&self.delta_grid)?;
        if self.families.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one family instance".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one seed".into()));
        }
        Ok(())
    }
}

/// A δ grid must be non-empty, positive and strictly decreasing.
pub fn check_delta_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("delta grid is empty".into()));
    }
    if grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter("delta grid values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("delta grid must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: FamilySpec,
    pub seed: u64,
    pub report: InequalityReport,
}

/// Reports in (family, seed, δ) order.
pub fn sweep(spec: &SweepSpec, cfg: &QuadConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for fam in &spec.families {
        let u = instantiate(fam, spec.dim)?;
        for &seed in &spec.seeds {
            for &delta in &spec.delta_grid {
                jobs.push((fam, u.clone(), seed, delta));
            }
        }
    }
    let run = |(fam, u, seed, delta): &(&FamilySpec, ScalarField, u64, f64)| -> Result<SweepRow> {
        let report = evaluate_case(&spec.case, u, *delta, &cfg.clone().with_seed(*seed))?;
        Ok(SweepRow { family: (*fam).clone(), seed: *seed, report })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub family: String,
    pub seed: u64,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// max/min over the δ grid (1 when every ratio is 0).
    pub spread: f64,
    /// Least-squares slope of ln(ratio) against ln(δ).
    pub trend: f64,
    pub all_finite: bool,
    pub any_suspect: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub case_id: Option<CaseId>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Row index of the largest ratio.
    pub argmax: Option<usize>,
    pub instances: Vec<InstanceSummary>,
    /// Largest instance max ratio over the smallest one.
    pub uniformity: f64,
    pub any_suspect: bool,
}

fn spread(max: f64, min: f64) -> f64 {
    if max == 0.0 {
        1.0
    } else if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        pts.iter().filter(|(d, r)| *d > 0.0 && *r > 0.0 && r.is_finite()).map(|(d, r)| (d.ln(), r.ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let mut groups: Vec<(String, u64, Vec<&InequalityReport>)> = Vec::new();
    for row in rows {
        let label = row.family.label();
        match groups.iter_mut().find(|g| g.0 == label && g.1 == row.seed) {
            Some(g) => g.2.push(&row.report),
            None => groups.push((label, row.seed, vec![&row.report])),
        }
    }
    let instances: Vec<InstanceSummary> = groups
        .into_iter()
        .map(|(family, seed, reps)| {
            let max = reps.iter().map(|r| r.ratio).fold(0.0, f64::max);
            let min = reps.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            let pts: Vec<(f64, f64)> = reps.iter().map(|r| (r.delta, r.ratio)).collect();
            InstanceSummary {
                family,
                seed,
                max_ratio: max,
                min_ratio: min,
                spread: spread(max, min),
                trend: log_slope(&pts),
                all_finite: reps.iter().all(|r| r.ratio.is_finite()),
                any_suspect: reps.iter().any(|r| r.verdict == Verdict::Suspect),
            }
        })
        .collect();
    let mut argmax = None;
    let mut max_ratio = 0.0;
    let mut min_ratio = f64::INFINITY;
    for (i, row) in rows.iter().enumerate() {
        let r = row.report.ratio;
        if argmax.is_none() || r > max_ratio {
            max_ratio = r;
            argmax = Some(i);
        }
        min_ratio = min_ratio.min(r);
    }
    let hi = instances.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
    let lo = instances.iter().map(|s| s.max_ratio).fold(f64::INFINITY, f64::min);
    SweepSummary {
        case_id: rows.first().map(|r| r.report.case_id),
        max_ratio,
        min_ratio: if rows.is_empty() { 0.0 } else { min_ratio },
        argmax,
        instances,
        uniformity: if rows.is_empty() { 1.0 } else { spread(hi, lo) },
        any_suspect: rows.iter().any(|r| r.report.verdict == Verdict::Suspect),
    }
}

/// Lower bound for a case's constant: the largest ratio over a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub family: Option<FamilySpec>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
}

pub fn estimate_constant(spec: &SweepSpec, cfg: &QuadConfig) -> Result<ConstantEstimate> {
    let rows = sweep(spec, cfg)?;
    let s = summarize(&rows);
    let best = s.argmax.map(|i| &rows[i]);
    Ok(ConstantEstimate {
        value: s.max_ratio,
        family: best.map(|r| r.family.clone()),
        delta: best.map(|r| r.report.delta),
        seed: best.map(|r| r.seed),
    })
}

/// Random-search estimate of the Hölder-type constant: max over random c ∈ (1, Λ]
/// and log-uniform x ∈ [10⁻³, 10³] (plus x = 0) of ((x+1)^τ − c x^τ)(c−1)^{τ−1}.
pub fn estimate_holder_constant(lambda: f64, tau: f64, n_c: usize, n_x: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    if !(lambda > 1.0 && tau > 1.0) {
        return Err(Error::InvalidParameter(format!("need Lambda > 1 and tau > 1, got {lambda}, {tau}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..n_c.max(1) {
        let c = lambda - (lambda - 1.0) * rng.random::<f64>();
        let f = |x: f64| ((x + 1.0).powf(tau) - c * x.powf(tau)) * (c - 1.0).powf(tau - 1.0);
        best = best.max(f(0.0));
        for _ in 0..n_x {
            let x = 10f64.powf(rng.random_range(-3.0..3.0));
            best = best.max(f(x));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnlib::{make_bump, make_radial_power, make_tent, make_zero, SupportInfo};
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_samples(40_000)
    }

    #[test]
    fn case_ids_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.to_string().parse::<CaseId>().unwrap(), c);
        }
        assert_eq!(CaseId::B7.part(), 3);
        assert_eq!(CaseId::G4.part(), 4);
        assert!("H9".parse::<CaseId>().is_err());
    }

    #[test]
    fn h1_zero_field() {
        let u = make_zero(3).unwrap();
        let r = evaluate_case(&InequalityCase::new(CaseId::H1, 2.0), &u, 0.1, &cfg()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.ratio, 0.0);
        assert!(r.rhs > 0.0);
    }

    #[test]
    fn h1_tent_lhs() {
        let u = make_tent(3, 1.0).unwrap();
        let r = evaluate_case(&InequalityCase::new(CaseId::H1, 2.0), &u, 0.1, &cfg()).unwrap();
        assert!((r.lhs - 4.0 * PI / 3.0).abs() < 1e-8, "{}", r.lhs);
        assert_eq!(r.components["penalty"], 2.0 * 0.1f64.powf(2.0));
        assert_eq!(r.rhs, rhs_from_components(r.case_id, r.p, r.a, &r.components));
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }

    #[test]
    fn hypothesis_gate() {
        let u = make_bump(3, 1.0).unwrap();
        let e = evaluate_case(&InequalityCase::new(CaseId::H1, 5.0), &u, 0.1, &cfg()).unwrap_err();
        assert!(e.to_string().contains("1 ≤ p < d"), "{e}");
        assert!(e.is_config_error());
    }

    #[test]
    fn l1_ratio_near_one() {
        let u = make_bump(1, 1.0).unwrap();
        let r = evaluate_case(&InequalityCase::new(CaseId::L1, 2.0), &u, 1e-3, &cfg()).unwrap();
        assert!((r.ratio - 1.0).abs() < 0.05, "{}", r.ratio);
        assert_eq!(r.components["k_constant"], 1.0);
    }

    #[test]
    fn g1_report_assembles() {
        let u = make_bump(3, 1.0).unwrap();
        let c = CKNParams::balanced(3, 2.0, 2.0, 3.0, 0.5, 0.0, 0.0).unwrap();
        let r = evaluate_case(&InequalityCase::with_ckn(CaseId::G1, c), &u, 0.1, &cfg()).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        assert_eq!(r.components["dyadic_sum"], r.components["sum_i_delta"]);
        assert_eq!(r.rhs, rhs_from_components(r.case_id, r.p, r.a, &r.components));
    }

    #[test]
    fn exterior_hardy() {
        let u = make_radial_power(2, 0.0, SupportInfo::Annulus { inner: 1.0, outer: 3.0 }, 1.0).unwrap();
        let r = evaluate_case(&InequalityCase::new(CaseId::H2, 3.0), &u, 0.1, &cfg()).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        let r4 = evaluate_case(&InequalityCase::new(CaseId::H4, 2.0), &u, 0.1, &cfg()).unwrap();
        assert!(r4.ratio.is_finite() && r4.ratio > 0.0);
        let b = make_bump(2, 1.0).unwrap();
        assert!(evaluate_case(&InequalityCase::new(CaseId::H2, 3.0), &b, 0.1, &cfg()).is_err());
    }

    #[test]
    fn holder_estimate_matches_grid() {
        let e = estimate_holder_constant(2.0, 2.0, 400, 400, 3).unwrap();
        assert!((e - 2.0).abs() < 1e-2, "{e}");
    }

    #[test]
    fn sweep_of_zero_is_zero() {
        let spec = SweepSpec {
            case: InequalityCase::new(CaseId::H1, 2.0),
            dim: 3,
            families: vec![FamilySpec::new("zero")],
            delta_grid: vec![1.0, 0.1],
            seeds: vec![1],
        };
        let rows = sweep(&spec, &cfg()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.report.ratio == 0.0));
        assert_eq!(estimate_constant(&spec, &cfg()).unwrap().value, 0.0);
        let bad = SweepSpec { delta_grid: vec![0.1, 1.0], ..spec };
        assert!(sweep(&bad, &cfg()).is_err());
    }
}
