//! Dyadic annuli 𝒜_k = {2^k ≤ |x| < 2^{k+1}}, per-annulus energies, the
//! Poincaré and interpolation ratios, and the Hölder-type constant.

use crate::energy::{gradient_energy_in, i_delta, weighted_norm, EnergyParams, WeightSpec};
use crate::error::{Error, Result};
use crate::fnlib::{Region, ScalarField, SupportInfo};
use crate::quad::{integrate_region, EnergyEstimate, Integrand, QuadConfig};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Number of annuli below the outer one when the support reaches the origin.
pub const DEFAULT_DEPTH: u32 = 21;

/// Fraction of the profile sum the innermost three entries may carry.
pub const TRUNCATION_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnnulusIndex {
    pub k: i32,
}

impl AnnulusIndex {
    pub fn new(k: i32) -> Self {
        AnnulusIndex { k }
    }

    /// The annulus containing radius `r > 0`.
    pub fn containing(r: f64) -> Option<Self> {
        (r > 0.0 && r.is_finite()).then(|| AnnulusIndex { k: floor_log2(r) })
    }

    pub fn inner(&self) -> f64 {
        2f64.powi(self.k)
    }

    pub fn outer(&self) -> f64 {
        2f64.powi(self.k + 1)
    }

    pub fn region(&self) -> Region {
        Region::annulus(self.inner(), self.outer())
    }

    /// 𝒜_k ∪ 𝒜_{k+1}.
    pub fn double_region(&self) -> Region {
        Region::annulus(self.inner(), 2f64.powi(self.k + 2))
    }
}

/// k with 2^k ≤ r < 2^{k+1}.
pub(crate) fn floor_log2(r: f64) -> i32 {
    let mut k = r.log2().floor() as i32;
    while 2f64.powi(k) > r {
        k -= 1;
    }
    while 2f64.powi(k + 1) <= r {
        k += 1;
    }
    k
}

/// (m, n) with 2^{n−1} ≤ R < 2^n and 2^m ≤ r < 2^{m+1} for the support radii.
///
/// Supports reaching the origin get m = n − depth; supports reaching infinity
/// get n = m + depth.
pub fn support_annulus_range(u: &ScalarField, depth: u32) -> Result<(i32, i32)> {
    let depth = depth.max(1) as i32;
    match u.support() {
        SupportInfo::WholeSpace => Err(Error::UnboundedSupport),
        SupportInfo::Empty => Err(Error::InvalidParameter("the zero field has no dyadic range".into())),
        SupportInfo::Ball { radius } => {
            let n = floor_log2(radius) + 1;
            Ok((n - depth, n))
        }
        SupportInfo::ComplementOfBall { radius } => {
            let m = floor_log2(radius);
            Ok((m, m + depth))
        }
        SupportInfo::Annulus { inner, outer } => Ok((floor_log2(inner), floor_log2(outer) + 1)),
    }
}

fn check_bounded(region: &Region) -> Result<()> {
    region.validate()?;
    let b = region.radial_bounds();
    if !b.is_bounded() || b.volume(1) <= 0.0 {
        return Err(Error::UnboundedDomain("averages need a bounded region of positive measure".into()));
    }
    Ok(())
}

/// ⨍_region u.
pub fn region_mean(u: &ScalarField, region: &Region, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    check_bounded(region)?;
    let d = u.dim();
    let vol = region.radial_bounds().volume(d);
    if u.is_zero() {
        return Ok(EnergyEstimate::zero());
    }
    let fp = |x: &[f64]| u.eval(x);
    let fr = |r: f64| u.radial_value(r).unwrap();
    let mut f = Integrand::new(d, &fp).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial(&fr);
    }
    Ok(integrate_region(&f, region, cfg)?.scale(1.0 / vol))
}

/// ⨍_region |u − ⨍u|^t.
pub fn mean_oscillation(u: &ScalarField, region: &Region, t: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("oscillation exponent must be positive, got {t}")));
    }
    let mean = region_mean(u, region, cfg)?.value;
    let d = u.dim();
    let vol = region.radial_bounds().volume(d);
    if u.variation() == Some(0.0) {
        return Ok(EnergyEstimate::zero());
    }
    let fp = |x: &[f64]| (u.eval(x) - mean).abs().powf(t);
    let fr = |r: f64| (u.radial_value(r).unwrap() - mean).abs().powf(t);
    let mut f = Integrand::new(d, &fp).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial(&fr);
    }
    Ok(integrate_region(&f, region, cfg)?.scale(1.0 / vol))
}

pub fn annulus_mean(u: &ScalarField, k: i32, cfg: &QuadConfig) -> Result<f64> {
    Ok(region_mean(u, &AnnulusIndex::new(k).region(), cfg)?.value)
}

/// Exponents of the general Caffarelli–Kohn–Nirenberg family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CKNParams {
    pub p: f64,
    pub q: f64,
    pub tau: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

const BALANCE_TOL: f64 = 1e-12;

impl CKNParams {
    /// Solves the balance condition for γ and then σ from γ = aσ + (1−a)β.
    pub fn balanced(d: usize, p: f64, q: f64, tau: f64, a: f64, alpha: f64, beta: f64) -> Result<Self> {
        let dd = d as f64;
        let rhs = a * (1.0 / p + (alpha - 1.0) / dd) + (1.0 - a) * (1.0 / q + beta / dd);
        let gamma = dd * (rhs - 1.0 / tau);
        let sigma = if a > 0.0 { (gamma - (1.0 - a) * beta) / a } else { f64::NAN };
        let c = CKNParams { p, q, tau, a, alpha, beta, gamma, sigma };
        c.validate(d)?;
        Ok(c)
    }

    /// The a = 1 family of the CKN inequality: q and β play no role.
    pub fn a_one(d: usize, p: f64, tau: f64, alpha: f64) -> Result<Self> {
        Self::balanced(d, p, p, tau, 1.0, alpha, 0.0)
    }

    /// LHS minus RHS of the balance condition.
    pub fn balance_residual(&self, d: usize) -> f64 {
        let dd = d as f64;
        1.0 / self.tau + self.gamma / dd
            - self.a * (1.0 / self.p + (self.alpha - 1.0) / dd)
            - (1.0 - self.a) * (1.0 / self.q + self.beta / dd)
    }

    /// 1/τ + γ/d, whose sign selects the case.
    pub fn critical_index(&self, d: usize) -> f64 {
        1.0 / self.tau + self.gamma / d as f64
    }

    /// Whether 1/τ + γ/d equals 1/p + (α−1)/d, the a = 1 balance.
    pub fn on_a_one_line(&self, d: usize) -> bool {
        let dd = d as f64;
        (self.critical_index(d) - (1.0 / self.p + (self.alpha - 1.0) / dd)).abs() <= BALANCE_TOL
    }

    pub fn alpha_sigma_le_one(&self) -> bool {
        self.alpha - self.sigma <= 1.0 + BALANCE_TOL
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let all = [self.p, self.q, self.tau, self.a, self.alpha, self.beta, self.gamma, self.sigma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("CKN parameters must be finite".into()));
        }
        if self.p < 1.0 || self.q < 1.0 {
            return Err(Error::InvalidParameter(format!("need p, q >= 1, got p={}, q={}", self.p, self.q)));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::InvalidParameter(format!("a must lie in (0, 1], got {}", self.a)));
        }
        let r = self.balance_residual(d);
        if r.abs() > BALANCE_TOL {
            return Err(Error::ParamViolation(format!("balance condition off by {r:e}")));
        }
        let g = self.gamma - self.a * self.sigma - (1.0 - self.a) * self.beta;
        if g.abs() > BALANCE_TOL {
            return Err(Error::ParamViolation(format!("gamma != a*sigma + (1-a)*beta (off by {g:e})")));
        }
        if self.alpha - self.sigma < -BALANCE_TOL {
            return Err(Error::ParamViolation(format!(
                "need alpha - sigma >= 0, got {}",
                self.alpha - self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicEntry {
    pub k: i32,
    /// ⨍_{𝒜_k} u
    pub mean: f64,
    /// ‖|x|^β u‖_{L^q(𝒜_k)}
    pub lq_norm: f64,
    /// I_δ(u, 𝒜_k ∪ 𝒜_{k+1}, α) + 2^{k(αp+d−p)}δ^p
    pub i_delta_k: f64,
    pub i_delta_k_std_err: f64,
    /// ‖|x|^α ∇u‖^p over 𝒜_k ∪ 𝒜_{k+1}
    pub i_delta_k_grad: Option<f64>,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    pub entries: Vec<DyadicEntry>,
    pub params: CKNParams,
    pub delta: f64,
    pub m: i32,
    pub n: i32,
    /// The innermost three entries carry less than [`TRUNCATION_TOL`] of the sum.
    pub truncation_ok: bool,
    pub diverged: bool,
}

impl DyadicProfile {
    /// Σ_{k=m−1}^{n} I_δ(k, u) in the nonlocal form.
    pub fn sum_i_delta(&self) -> EnergyEstimate {
        let mut s = EnergyEstimate::zero();
        for e in &self.entries {
            s = s.add(&EnergyEstimate {
                value: e.i_delta_k,
                std_err: e.i_delta_k_std_err,
                diverged: e.diverged,
                ..EnergyEstimate::zero()
            });
        }
        s
    }

    /// Σ_k of the gradient form, when the field has a gradient.
    pub fn sum_grad(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.i_delta_k_grad).sum()
    }

    /// ‖|x|^β u‖_q over the union of the profile's annuli.
    pub fn lq_norm_total(&self) -> f64 {
        let q = self.params.q;
        self.entries.iter().map(|e| e.lq_norm.powf(q)).sum::<f64>().powf(1.0 / q)
    }

    /// Columns k, mean, lq_norm, i_delta_k, i_delta_k_grad; an absent gradient is an empty cell.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,mean,lq_norm,i_delta_k,i_delta_k_grad")?;
        for e in &self.entries {
            let g = e.i_delta_k_grad.map(num).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", e.k, num(e.mean), num(e.lq_norm), num(e.i_delta_k), g)?;
        }
        Ok(())
    }
}

/// Round-trip float text, in exponent form for tiny or huge magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn annulus_seed(seed: u64, k: i32) -> u64 {
    seed ^ (k as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn dyadic_profile(u: &ScalarField, params: &CKNParams, delta: f64, cfg: &QuadConfig) -> Result<DyadicProfile> {
    let (m, n) = support_annulus_range(u, DEFAULT_DEPTH)?;
    dyadic_profile_range(u, params, delta, m, n, cfg)
}

/// Profile over k ∈ [m−1, n] for explicit indices.
pub fn dyadic_profile_range(
    u: &ScalarField,
    params: &CKNParams,
    delta: f64,
    m: i32,
    n: i32,
    cfg: &QuadConfig,
) -> Result<DyadicProfile> {
    let d = u.dim();
    params.validate(d)?;
    if m >= n {
        return Err(Error::InvalidParameter(format!("need m < n, got m={m}, n={n}")));
    }
    let ep = EnergyParams::new(params.p, delta, params.alpha)?;
    let lq_weight = WeightSpec::power(params.beta, params.q);
    let expo = params.alpha * params.p + d as f64 - params.p;
    let mut entries = Vec::with_capacity((n - m + 2) as usize);
    for k in (m - 1)..=n {
        let idx = AnnulusIndex::new(k);
        let kcfg = QuadConfig { seed: annulus_seed(cfg.seed, k), ..cfg.clone() };
        let mean = region_mean(u, &idx.region(), cfg)?.value;
        let lq = weighted_norm(u, &idx.region(), &lq_weight, cfg)?;
        let pair = i_delta(u, &idx.double_region(), &ep, &kcfg)?;
        let penalty = 2f64.powf(k as f64 * expo) * delta.powf(params.p);
        let grad = if u.has_grad() {
            Some(gradient_energy_in(u, &idx.double_region(), params.alpha, params.p, cfg)?.value)
        } else {
            None
        };
        entries.push(DyadicEntry {
            k,
            mean,
            lq_norm: lq.value.powf(1.0 / params.q),
            i_delta_k: pair.value + penalty,
            i_delta_k_std_err: pair.std_err,
            i_delta_k_grad: grad,
            diverged: pair.diverged || lq.diverged,
        });
    }
    let total: f64 = entries.iter().map(|e| e.i_delta_k).sum();
    let inner: f64 = entries.iter().take(3).map(|e| e.i_delta_k).sum();
    let truncation_ok = total == 0.0 || inner < TRUNCATION_TOL * total;
    let diverged = entries.iter().any(|e| e.diverged);
    Ok(DyadicProfile { entries, params: *params, delta, m, n, truncation_ok, diverged })
}

fn annulus_radii(region: &Region) -> Result<(f64, f64)> {
    match region {
        Region::Annulus { inner, outer } if *inner > 0.0 => {
            region.validate()?;
            Ok((*inner, *outer))
        }
        _ => Err(Error::ParamViolation("D must be an annulus r < |x| < R with r > 0".into())),
    }
}

/// Pieces of the Poincaré quotient on λD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareTerms {
    /// ⨍_{λD}|u − ū|^p
    pub numerator: f64,
    pub i_delta: EnergyEstimate,
    /// λ^{p−d}I_δ(u, λD) + δ^p
    pub denominator: f64,
    pub ratio: f64,
}

pub fn poincare_terms(
    u: &ScalarField,
    domain: &Region,
    lambda: f64,
    p: f64,
    delta: f64,
    cfg: &QuadConfig,
) -> Result<PoincareTerms> {
    let (r, big) = annulus_radii(domain)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let ld = Region::annulus(lambda * r, lambda * big);
    let ep = EnergyParams::new(p, delta, 0.0)?;
    let numerator = mean_oscillation(u, &ld, p, cfg)?.value;
    let i = i_delta(u, &ld, &ep, cfg)?;
    let denominator = lambda.powf(p - u.dim() as f64) * i.value + delta.powf(p);
    Ok(PoincareTerms { numerator, i_delta: i, denominator, ratio: numerator / denominator })
}

/// ⨍_{λD}|u − ū|^p ÷ (λ^{p−d}I_δ(u, λD) + δ^p).
pub fn poincare_ratio(u: &ScalarField, domain: &Region, lambda: f64, p: f64, delta: f64, cfg: &QuadConfig) -> Result<f64> {
    Ok(poincare_terms(u, domain, lambda, p, delta, cfg)?.ratio)
}

/// (⨍|u−ū|^τ)^{1/τ} ÷ (λ^{p−d}I_δ(u,λD) + δ^p)^{a/p}(⨍|u−ū|^q)^{(1−a)/q} on λD.
#[allow(clippy::too_many_arguments)]
pub fn interpolation_ratio(
    u: &ScalarField,
    domain: &Region,
    lambda: f64,
    p: f64,
    q: f64,
    tau: f64,
    a: f64,
    delta: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let d = u.dim() as f64;
    if !(p > 1.0 && p < d) {
        return Err(Error::ParamViolation(format!("the nonlocal interpolation needs 1 < p < d, got p={p}, d={d}")));
    }
    if !(q >= 1.0 && tau > 0.0 && (0.0..=1.0).contains(&a)) {
        return Err(Error::InvalidParameter(format!("need q >= 1, tau > 0, 0 <= a <= 1 (q={q}, tau={tau}, a={a})")));
    }
    let bound = a * (1.0 / p - 1.0 / d) + (1.0 - a) / q;
    if 1.0 / tau < bound - BALANCE_TOL {
        return Err(Error::ParamViolation(format!("need 1/tau >= a(1/p - 1/d) + (1-a)/q = {bound}, got 1/tau = {}", 1.0 / tau)));
    }
    let (r, big) = annulus_radii(domain)?;
    let ld = Region::annulus(lambda * r, lambda * big);
    let lhs = mean_oscillation(u, &ld, tau, cfg)?.value.powf(1.0 / tau);
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let ep = EnergyParams::new(p, delta, 0.0)?;
    let i = i_delta(u, &ld, &ep, cfg)?.value;
    let energy = (lambda.powf(p - d) * i + delta.powf(p)).powf(a / p);
    let osc = if a < 1.0 { mean_oscillation(u, &ld, q, cfg)?.value.powf((1.0 - a) / q) } else { 1.0 };
    Ok(lhs / (energy * osc))
}

/// h_c(x) = ((x+1)^τ − c x^τ)(c−1)^{τ−1}.
fn holder_h(c: f64, x: f64, tau: f64) -> f64 {
    ((x + 1.0).powf(tau) - c * x.powf(tau)) * (c - 1.0).powf(tau - 1.0)
}

/// Smallest C with (|a|+|b|)^τ ≤ c|a|^τ + C(c−1)^{1−τ}|b|^τ over a grid of c ∈ (1, Λ]
/// and x = |a|/|b| ∈ [0, 10³], refined around the critical point x₀ = 1/(c^{1/(τ−1)} − 1).
pub fn holder_min_constant(lambda: f64, tau: f64, c_grid: usize, x_grid: usize) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) || !(tau > 1.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("need Lambda > 1 and tau > 1, got {lambda}, {tau}")));
    }
    if c_grid < 100 || x_grid < 100 {
        return Err(Error::InvalidParameter("grids need at least 100 points".into()));
    }
    const X_MAX: f64 = 1e3;
    let mut best = 0.0f64;
    for i in 1..=c_grid {
        let c = 1.0 + (lambda - 1.0) * i as f64 / c_grid as f64;
        let h = |x: f64| holder_h(c, x, tau);
        let mut top = 0.0f64;
        let mut arg = 0usize;
        for j in 0..=x_grid {
            let v = h(X_MAX * j as f64 / x_grid as f64);
            if v > top {
                top = v;
                arg = j;
            }
        }
        let step = X_MAX / x_grid as f64;
        let x0 = 1.0 / (c.powf(1.0 / (tau - 1.0)) - 1.0);
        if x0.is_finite() && (0.0..=X_MAX).contains(&x0) {
            top = top.max(h(x0));
        }
        // golden section on the bracket around the best grid point; h_c is unimodal
        let (mut lo, mut hi) = ((arg as f64 - 1.0).max(0.0) * step, ((arg + 1) as f64 * step).min(X_MAX));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if h(a) < h(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        top = top.max(h(0.5 * (lo + hi)));
        best = best.max(top);
    }
    Ok(best)
}

/// Largest (|a|+|b|)^τ / (c|a|^τ + C(c−1)^{1−τ}|b|^τ) over `n` draws; ≤ 1 when C is valid.
pub fn holder_check(lambda: f64, tau: f64, constant: f64, n: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let c = 1.0 + (lambda - 1.0) * (1.0 - rng.random::<f64>());
        let a: f64 = rng.random_range(-10.0..10.0);
        let b: f64 = rng.random_range(-10.0..10.0);
        let lhs = (a.abs() + b.abs()).powf(tau);
        let rhs = c * a.abs().powf(tau) + constant * (c - 1.0).powf(1.0 - tau) * b.abs().powf(tau);
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    worst
}

/// Σ_{k} ∫_{𝒜_k} f for a radial integrand, used to test the partition of R^d∖{0}.
pub fn annulus_sum(u: &ScalarField, tau: f64, m: i32, n: i32, cfg: &QuadConfig) -> Result<f64> {
    let w = WeightSpec::power(0.0, tau);
    let mut s = 0.0;
    for k in m..=n {
        s += weighted_norm(u, &AnnulusIndex::new(k).region(), &w, cfg)?.value;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnlib::{make_bump, make_constant, make_radial_power, make_step_1d, make_tent, make_zero};
    use approx::assert_relative_eq;

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_samples(40_000)
    }

    #[test]
    fn dyadic_indices() {
        assert_eq!(floor_log2(1.0), 0);
        assert_eq!(floor_log2(0.5), -1);
        assert_eq!(floor_log2(3.999), 1);
        assert_eq!(floor_log2(4.0), 2);
        let b = make_bump(2, 1.0).unwrap();
        assert_eq!(support_annulus_range(&b, 21).unwrap(), (-20, 1));
        let c = make_radial_power(2, 1.0, SupportInfo::ComplementOfBall { radius: 1.0 }, 0.5).unwrap();
        assert_eq!(support_annulus_range(&c, 21).unwrap().0, 0);
        let a = make_radial_power(2, 0.0, SupportInfo::Annulus { inner: 0.5, outer: 4.0 }, 0.5).unwrap();
        assert_eq!(support_annulus_range(&a, 21).unwrap(), (-1, 3));
        let w = make_constant(2, 1.0).unwrap();
        assert_eq!(support_annulus_range(&w, 21), Err(Error::UnboundedSupport));
        assert_eq!(AnnulusIndex::containing(1.5), Some(AnnulusIndex::new(0)));
    }

    #[test]
    fn means() {
        let c = make_constant(2, 3.5).unwrap();
        assert_relative_eq!(annulus_mean(&c, 2, &cfg()).unwrap(), 3.5, max_relative = 1e-12);
        let id = make_radial_power(1, -1.0, SupportInfo::WholeSpace, 1.0).unwrap();
        assert_relative_eq!(annulus_mean(&id, 0, &cfg()).unwrap(), 1.5, max_relative = 1e-12);
        let b = make_bump(2, 1.0).unwrap();
        assert_eq!(annulus_mean(&b, 0, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn ckn_params() {
        let c = CKNParams::balanced(3, 2.0, 2.0, 3.0, 0.5, 0.0, 0.0).unwrap();
        assert!(c.balance_residual(3).abs() < 1e-12);
        assert!(c.alpha_sigma_le_one());
        let mut bad = c;
        bad.gamma += 0.1;
        assert!(matches!(bad.validate(3), Err(Error::ParamViolation(_))));
        // sigma > alpha is rejected
        assert!(CKNParams::balanced(3, 2.0, 2.0, 100.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_profile_is_pure_penalty() {
        let u = make_constant(2, 2.0).unwrap();
        let p = CKNParams::a_one(2, 1.5, 3.0, 0.0).unwrap();
        let prof = dyadic_profile_range(&u, &p, 0.1, -3, 1, &cfg()).unwrap();
        assert_eq!(prof.entries.len(), 6);
        for e in &prof.entries {
            assert_eq!(e.i_delta_k, 2f64.powf(e.k as f64 * (2.0 - 1.5)) * 0.1f64.powf(1.5));
        }
    }

    #[test]
    fn bump_profile() {
        let u = make_bump(2, 1.0).unwrap();
        let p = CKNParams::a_one(2, 1.5, 3.0, 0.0).unwrap();
        let prof = dyadic_profile(&u, &p, 0.1, &cfg()).unwrap();
        assert_eq!(prof.n, 1);
        assert_eq!(prof.entries.first().unwrap().k, prof.m - 1);
        assert!(prof.entries.iter().all(|e| e.i_delta_k.is_finite() && e.i_delta_k >= 0.0));
        assert!(prof.truncation_ok);
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("k,mean,lq_norm,i_delta_k,i_delta_k_grad\n"));
        assert_eq!(s.lines().count(), prof.entries.len() + 1);
    }

    #[test]
    fn grad_sum_between_one_and_two() {
        let u = make_tent(3, 1.0).unwrap();
        let p = CKNParams::a_one(3, 2.0, 6.0, 0.0).unwrap();
        let prof = dyadic_profile(&u, &p, 0.5, &cfg()).unwrap();
        let s = prof.sum_grad().unwrap();
        let total = crate::energy::gradient_energy(&u, 0.0, 2.0, &cfg()).unwrap().value;
        assert!(s >= total * (1.0 - 1e-9) && s <= 2.0 * total * (1.0 + 1e-9), "{s} vs {total}");
    }

    #[test]
    fn poincare_basics() {
        let d = Region::annulus(1.0, 2.0);
        let c = make_constant(2, 1.0).unwrap();
        assert_eq!(poincare_ratio(&c, &d, 1.0, 2.0, 0.1, &cfg()).unwrap(), 0.0);
        let u = make_bump(2, 4.0).unwrap();
        let t = poincare_terms(&u, &d, 1.0, 2.0, 2.0, &cfg()).unwrap();
        assert_eq!(t.i_delta.value, 0.0);
        assert_eq!(t.ratio, t.numerator / 4.0);
        assert!(poincare_ratio(&u, &Region::ball(1.0), 1.0, 2.0, 0.1, &cfg()).is_err());
    }

    #[test]
    fn interpolation_checks() {
        let d = Region::annulus(1.0, 2.0);
        let u = make_bump(3, 4.0).unwrap();
        // 1/6 < 1/2·(1/2 − 1/3) + 1/2·1/2 fails for tau = 6
        assert!(matches!(
            interpolation_ratio(&u, &d, 1.0, 2.0, 2.0, 6.0, 0.5, 0.1, &cfg()),
            Err(Error::ParamViolation(_))
        ));
        assert!(interpolation_ratio(&u, &d, 1.0, 3.0, 2.0, 2.0, 0.5, 0.1, &cfg()).is_err());
        let c = make_constant(3, 1.0).unwrap();
        assert_eq!(interpolation_ratio(&c, &d, 1.0, 2.0, 2.0, 2.0, 0.5, 0.1, &cfg()).unwrap(), 0.0);
        let a1 = interpolation_ratio(&u, &d, 1.0, 2.0, 2.0, 2.0, 1.0, 0.05, &cfg()).unwrap();
        let pr = poincare_ratio(&u, &d, 1.0, 2.0, 0.05, &cfg()).unwrap();
        assert_relative_eq!(a1, pr.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn holder_young_oracle() {
        let c = holder_min_constant(2.0, 2.0, 200, 2000).unwrap();
        assert_relative_eq!(c, 2.0, max_relative = 1e-6);
        let c = holder_min_constant(1.5, 2.0, 200, 2000).unwrap();
        assert_relative_eq!(c, 1.5, max_relative = 1e-6);
        let c3 = holder_min_constant(3.0, 3.0, 200, 1000).unwrap();
        assert!(holder_check(3.0, 3.0, c3, 10_000, 1) <= 1.0 + 1e-12);
        assert!(holder_min_constant(2.0, 2.0, 10, 1000).is_err());
    }

    #[test]
    fn partition_of_annuli() {
        let u = make_radial_power(2, 0.0, SupportInfo::Annulus { inner: 0.5, outer: 4.0 }, 0.5).unwrap();
        let (m, n) = support_annulus_range(&u, 21).unwrap();
        let whole = crate::energy::lp_norm_pow(&u, &Region::WholeSpace, 2.0, &cfg()).unwrap().value;
        assert_relative_eq!(annulus_sum(&u, 2.0, m, n, &cfg()).unwrap(), whole, max_relative = 1e-8);
    }

    #[test]
    fn zero_and_step() {
        let z = make_zero(2).unwrap();
        assert!(support_annulus_range(&z, 21).is_err());
        let s = make_step_1d();
        assert_eq!(support_annulus_range(&s, 21), Err(Error::UnboundedSupport));
    }
}
