//! The nonlocal pair functionals built on the stratified pair sampler.

use super::pair::{inner_shells_suspicious, run_pair, PairOutcome, PairPlan};
use super::{integrate_region, EnergyEstimate, Integrand, QuadConfig, RhoMinPolicy, MAX_PAIR_DIM};
use crate::error::{Error, Result};
use crate::fnlib::{norm, Region, ScalarField, Shell, VectorPotential, MAX_DIM};
use crate::special::sphere_area;

const TAG_INDICATOR: u8 = 10;
const TAG_GAGLIARDO: u8 = 11;
const TAG_TAIL: u8 = 12;

fn check_pair_inputs(u: &ScalarField, p: f64, delta: f64, cfg: &QuadConfig) -> Result<()> {
    cfg.validate()?;
    let d = u.dim();
    if d > MAX_PAIR_DIM {
        return Err(Error::UnsupportedDimension { dim: d, what: "pair integrals", max: MAX_PAIR_DIM });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Geometric edges hi, hi/2, ..., ending exactly at `lo` (or after `shells` halvings when lo = None).
fn edges(hi: f64, lo: Option<f64>, shells: usize) -> Vec<f64> {
    match lo {
        Some(lo) if lo >= hi => vec![hi],
        Some(lo) => {
            let j = ((hi / lo).log2().ceil() as usize).clamp(1, 400);
            let mut e: Vec<f64> = (0..j).map(|i| hi * 0.5f64.powi(i as i32)).collect();
            e.push(lo);
            e
        }
        None => (0..=shells).map(|i| hi * 0.5f64.powi(i as i32)).collect(),
    }
}

/// Most x-shells a wide X is split into.
const MAX_X_SHELLS: usize = 16;

/// Geometric split of X by halving from the outer radius, used when X was
/// widened to an envelope radius far past where u varies.
fn x_partition(x: &Shell, split: bool) -> Vec<Shell> {
    if !split || !x.is_bounded() || x.outer <= 4.0 * x.inner {
        return vec![*x];
    }
    let mut out = Vec::new();
    let mut hi = x.outer;
    while out.len() + 1 < MAX_X_SHELLS && 0.5 * hi > 2.0 * x.inner {
        out.push(Shell::new(0.5 * hi, hi));
        hi *= 0.5;
    }
    out.push(Shell::new(x.inner, hi));
    out
}

#[inline]
fn weight(r: f64, pa: f64) -> f64 {
    if pa == 0.0 {
        1.0
    } else {
        r.powf(pa)
    }
}

/// ∫_X w(x)·1[|u(x)| > t] dx.
fn superlevel_weight(u: &ScalarField, x: &Shell, t: f64, pa: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    let fp = |p: &[f64]| if u.eval(p).abs() > t { weight(norm(p), pa) } else { 0.0 };
    let fr = |r: f64| if u.radial_value(r).unwrap().abs() > t { weight(r, pa) } else { 0.0 };
    let mut f = Integrand::new(u.dim(), &fp).support(*x).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial(&fr);
    }
    let mut c = cfg.clone();
    c.seed ^= (TAG_TAIL as u64) << 40;
    integrate_region(&f, &Region::WholeSpace, &c)
}

/// ∫_X |u|^p dx.
fn lp_mass(u: &ScalarField, x: &Shell, p: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    let fp = |q: &[f64]| u.eval(q).abs().powf(p);
    let fr = |r: f64| u.radial_value(r).unwrap().abs().powf(p);
    let mut f = Integrand::new(u.dim(), &fp).support(*x).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial(&fr);
    }
    let mut c = cfg.clone();
    c.seed ^= (TAG_TAIL as u64) << 40;
    integrate_region(&f, &Region::WholeSpace, &c)
}

fn finish(out: &PairOutcome, tail: EnergyEstimate, diverged: bool) -> EnergyEstimate {
    EnergyEstimate {
        value: out.value + tail.value,
        std_err: out.var.sqrt().hypot(tail.std_err),
        n_samples: out.n + tail.n_samples,
        tail_analytic: tail.value,
        diverged: diverged || tail.diverged,
    }
}

/// I_δ(u, Ω, α) = ∬_{Ω×Ω, |u(x)−u(y)|>δ} δ^p |x|^{pα} |x−y|^{−(d+p)} dx dy.
pub fn integrate_pair_singular(
    u: &ScalarField,
    region: &Region,
    p: f64,
    delta: f64,
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<EnergyEstimate> {
    indicator_pair(u, region, p, delta, alpha, None, cfg)
}

/// Pair integral with level-set indicator; the magnetic variant replaces
/// |u(x) − u(y)| by |u(x) − e^{iθ}u(y)|, θ = (x−y)·A((x+y)/2).
pub(crate) fn indicator_pair(
    u: &ScalarField,
    region: &Region,
    p: f64,
    delta: f64,
    alpha: f64,
    pot: Option<&VectorPotential>,
    cfg: &QuadConfig,
) -> Result<EnergyEstimate> {
    check_pair_inputs(u, p, delta, cfg)?;
    region.validate()?;
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter("alpha must be finite".into()));
    }
    let d = u.dim();
    if let Some(a) = pot {
        if a.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
        }
    }
    let mut omega = region.radial_bounds();
    if omega.is_empty() || u.is_zero() {
        return Ok(EnergyEstimate::zero());
    }
    // empty indicator
    match pot {
        None => {
            let var = u.variation().or(u.osc_bound().map(|m| 2.0 * m));
            if var.is_some_and(|v| v <= delta) {
                return Ok(EnergyEstimate::zero());
            }
        }
        Some(_) => {
            if u.osc_bound().is_some_and(|m| 2.0 * m <= delta) {
                return Ok(EnergyEstimate::zero());
            }
        }
    }

    // X must contain every point of Ω where |u| > δ/2
    let supp = u.support().shell();
    let mut diverged = false;
    let hull = match u.envelope_radius(0.5 * delta) {
        Some(b) => Shell::new(supp.inner, supp.outer.min(b)),
        None if omega.is_bounded() => supp,
        None => {
            // no decay information: integrate over a window, report a lower bound
            let t0 = cfg.far_field_cut.unwrap_or(2.0 * supp.inner + 1.0);
            omega = omega.intersect(&Shell::new(0.0, t0));
            diverged = true;
            Shell::new(supp.inner, t0)
        }
    };
    let x = omega.intersect(&hull);
    if x.is_empty() {
        return Ok(EnergyEstimate { diverged, ..EnergyEstimate::zero() });
    }
    let b = x.outer;
    let pa = p * alpha;
    if pa <= -(d as f64) && x.inner == 0.0 {
        diverged = true;
    }

    let (hi, far) = if omega.is_bounded() {
        (b + omega.outer, false)
    } else {
        let default = if supp.is_bounded() { 2.0 * supp.outer + 1.0 } else { 2.0 * b + 1.0 };
        let mut t = cfg.far_field_cut.unwrap_or(default).max(2.0 * b).max(b + omega.inner);
        if supp.is_bounded() {
            t = t.max(b + supp.outer);
        }
        (t, true)
    };
    // analytic far field needs u(y) = 0 for every far y
    let analytic_far = far && supp.is_bounded();
    if far && alpha >= 1.0 {
        diverged = true;
    }

    let lo = match cfg.rho_min_policy {
        RhoMinPolicy::Explicit(r) => Some(r),
        RhoMinPolicy::None => None,
        RhoMinPolicy::AutoLipschitz => match (u.lipschitz(), pot) {
            (Some(l), None) if l > 0.0 => Some(delta / l),
            (Some(l), Some(a)) => {
                // |u(y)e^{iθ} − u(x)| ≤ ρ(L + M|A|(|x| + ρ/2)) for ρ ≤ hi
                u.osc_bound().and_then(|m| {
                    let leff = l + m * a.operator_norm() * (b + 0.5 * hi);
                    (leff > 0.0).then(|| delta / leff)
                })
            }
            _ => None,
        },
    };
    let plan = PairPlan {
        dim: d,
        x_shells: x_partition(&x, !supp.is_bounded()),
        kappa: p,
        edges: edges(hi, lo, cfg.shells),
        far: far && (!analytic_far || alpha != 0.0),
        samples: cfg.samples,
        seed: cfg.seed,
        tag: TAG_INDICATOR,
    };
    let nnear = plan.edges.len().saturating_sub(1);
    let dp = delta.powf(p);
    let d2 = delta * delta;

    let out = run_pair(&plan, |xp, yp, rho| {
        let ry = norm(yp);
        if rho > hi {
            // far stratum
            if analytic_far {
                return if u.eval(xp).abs() > delta { dp * weight(ry, pa) } else { 0.0 };
            }
        }
        if !omega.contains_radius(ry) {
            return 0.0;
        }
        let ux = u.eval(xp);
        let uy = u.eval(yp);
        let mut gap = (uy - ux) * (uy - ux);
        if let Some(a) = pot {
            let mut mid = [0.0; MAX_DIM];
            let mut av = [0.0; MAX_DIM];
            for i in 0..d {
                mid[i] = 0.5 * (xp[i] + yp[i]);
            }
            a.eval(&mid[..d], &mut av[..d]);
            let theta: f64 = (0..d).map(|i| (xp[i] - yp[i]) * av[i]).sum();
            let s = (0.5 * theta).sin();
            gap += 4.0 * ux * uy * s * s;
        }
        if !(gap > d2) {
            return 0.0;
        }
        let mut w = weight(norm(xp), pa);
        if !x.contains_radius(ry) {
            w += weight(ry, pa);
        }
        dp * w
    })?;

    if lo.is_none() && inner_shells_suspicious(&out.near[..nnear]) {
        diverged = true;
    }
    let tail = if analytic_far {
        let m = superlevel_weight(u, &x, delta, pa, cfg)?;
        let c = dp * sphere_area(d) * hi.powf(-p) / p * if alpha == 0.0 { 2.0 } else { 1.0 };
        m.scale(c)
    } else {
        EnergyEstimate::zero()
    };
    Ok(finish(&out, tail, diverged))
}

/// J_δ(u) = (1−δ)∬ |u(x)−u(y)|^p |x−y|^{−(d+pδ)} dx dy over R^d × R^d.
pub(crate) fn gagliardo_pair(u: &ScalarField, p: f64, delta: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    check_pair_inputs(u, p, delta, cfg)?;
    if delta >= 1.0 {
        return Err(Error::InvalidParameter(format!("J_delta needs 0 < delta < 1, got {delta}")));
    }
    let d = u.dim();
    if u.is_zero() || u.variation() == Some(0.0) {
        return Ok(EnergyEstimate::zero());
    }
    let supp = u.support().shell();
    let (x, omega, diverged) = if supp.is_bounded() {
        (supp, Shell::whole(), false)
    } else {
        let t0 = cfg.far_field_cut.unwrap_or(2.0 * supp.inner + 1.0);
        let w = Shell::new(0.0, t0);
        (supp.intersect(&w), w, true)
    };
    let b = x.outer;
    let (hi, far) = if omega.is_bounded() {
        (2.0 * b, false)
    } else {
        (cfg.far_field_cut.unwrap_or(2.0 * b + 1.0).max(2.0 * b), true)
    };
    let mut e = edges(hi, None, cfg.shells);
    *e.last_mut().unwrap() = 0.0;
    let plan = PairPlan {
        dim: d,
        x_shells: x_partition(&x, !supp.is_bounded()),
        kappa: -p * (1.0 - delta),
        edges: e,
        far: false,
        samples: cfg.samples,
        seed: cfg.seed,
        tag: TAG_GAGLIARDO,
    };
    let c = 1.0 - delta;
    let out = run_pair(&plan, |xp, yp, rho| {
        let ry = norm(yp);
        if !omega.contains_radius(ry) {
            return 0.0;
        }
        let diff = (u.eval(yp) - u.eval(xp)).abs();
        if diff == 0.0 {
            return 0.0;
        }
        let mult = if x.contains_radius(ry) { 1.0 } else { 2.0 };
        c * mult * diff.powf(p) * rho.powf(-p)
    })?;
    let mut div = diverged;
    if u.lipschitz().is_none() && inner_shells_suspicious(&out.near) {
        div = true;
    }
    let tail = if far {
        let m = lp_mass(u, &x, p, cfg)?;
        m.scale(2.0 * c * sphere_area(d) * hi.powf(-p * delta) / (p * delta))
    } else {
        EnergyEstimate::zero()
    };
    Ok(finish(&out, tail, div))
}
