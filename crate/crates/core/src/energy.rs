//! The nonlocal functionals, weighted norms, gradient energies and K_{d,p}.

use crate::error::{Error, Result};
use crate::fnlib::{norm, Region, ScalarField, Shell, VectorPotential, MAX_DIM};
use crate::quad::{
    gagliardo_pair, indicator_pair, integrate_region, sphere_integral, EnergyEstimate, Integrand, QuadConfig,
};
use crate::special::gamma_fn;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub p: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl EnergyParams {
    pub fn new(p: f64, delta: f64, alpha: f64) -> Result<Self> {
        let e = EnergyParams { p, delta, alpha };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radius", rename_all = "snake_case")]
pub enum LogKind {
    None,
    /// ln(2R/|x|)
    LnROverX(f64),
    /// ln(2|x|/r)
    LnXOverR(f64),
}

/// Weight |x|^{γτ} / ln^{log_power}(·) applied to |u|^τ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub gamma: f64,
    pub tau: f64,
    pub log_kind: LogKind,
    pub log_power: f64,
}

impl WeightSpec {
    pub fn power(gamma: f64, tau: f64) -> Self {
        WeightSpec { gamma, tau, log_kind: LogKind::None, log_power: 0.0 }
    }

    pub fn with_log(mut self, kind: LogKind, power: f64) -> Self {
        self.log_kind = kind;
        self.log_power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !self.gamma.is_finite() || !self.log_power.is_finite() {
            return Err(Error::InvalidParameter("weight exponents must be finite".into()));
        }
        match self.log_kind {
            LogKind::LnROverX(r) | LogKind::LnXOverR(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::InvalidParameter(format!("log radius must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }

    fn log_arg(&self, r: f64) -> Option<f64> {
        match self.log_kind {
            LogKind::None => None,
            LogKind::LnROverX(big) => Some(2.0 * big / r),
            LogKind::LnXOverR(small) => Some(2.0 * r / small),
        }
    }
}

/// Closed form K_{d,p} = (1/p)·2π^{(d−1)/2}Γ((p+1)/2)/Γ((d+p)/2).
pub fn k_constant(d: usize, p: f64) -> f64 {
    let dd = d as f64;
    2.0 * PI.powf(0.5 * (dd - 1.0)) * gamma_fn(0.5 * (p + 1.0)) / gamma_fn(0.5 * (dd + p)) / p
}

/// K_{d,p} from its sphere-integral definition with e = e₁.
pub fn k_constant_sphere(d: usize, p: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    let g = |s: &[f64]| s[0].abs().powf(p);
    Ok(sphere_integral(&g, d, cfg)?.scale(1.0 / p))
}

pub fn i_delta(u: &ScalarField, region: &Region, params: &EnergyParams, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    params.validate()?;
    indicator_pair(u, region, params.p, params.delta, params.alpha, None, cfg)
}

/// Magnetic I_δ^A over `region` (R^d in the usual statement).
pub fn i_delta_magnetic(
    u: &ScalarField,
    a: &VectorPotential,
    region: &Region,
    params: &EnergyParams,
    cfg: &QuadConfig,
) -> Result<EnergyEstimate> {
    params.validate()?;
    indicator_pair(u, region, params.p, params.delta, params.alpha, Some(a), cfg)
}

pub fn j_delta(u: &ScalarField, p: f64, delta: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    gagliardo_pair(u, p, delta, cfg)
}

/// ∫_region |x|^{γτ}|u|^τ / ln^{log_power}(·) dx, without outer powers.
pub fn weighted_norm(u: &ScalarField, region: &Region, w: &WeightSpec, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    w.validate()?;
    region.validate()?;
    let d = u.dim();
    let mut x = region.radial_bounds().intersect(&u.support().shell());
    if x.is_empty() || u.is_zero() {
        return Ok(EnergyEstimate::zero());
    }
    match w.log_kind {
        LogKind::LnROverX(big) if x.outer > 2.0 * big => {
            return Err(Error::ParamViolation(format!(
                "log weight ln(2R/|x|) needs |x| < 2R = {} on the region (outer radius {})",
                2.0 * big,
                x.outer
            )))
        }
        LogKind::LnXOverR(small) if x.inner < 0.5 * small => {
            return Err(Error::ParamViolation(format!(
                "log weight ln(2|x|/r) needs |x| > r/2 = {} on the region (inner radius {})",
                0.5 * small,
                x.inner
            )))
        }
        _ => {}
    }
    let gt = w.gamma * w.tau;
    let mut diverged = false;
    if x.inner == 0.0 {
        let u0 = u.eval(&[0.0; MAX_DIM][..d]);
        let log_rescues = matches!(w.log_kind, LogKind::LnROverX(_)) && w.log_power > 1.0;
        let critical = gt < -(d as f64) || (gt == -(d as f64) && !log_rescues);
        if u0 != 0.0 && critical {
            // report the integral outside a tiny ball as a lower bound
            diverged = true;
            x = Shell::new(1e-6 * x.outer.min(1.0), x.outer);
        }
    }
    let bad_log = AtomicBool::new(false);
    let weight = |r: f64| density_weight(r, gt, w, &bad_log);
    let fp = |q: &[f64]| {
        let uv = u.eval(q).abs();
        if uv == 0.0 {
            0.0
        } else {
            weight(norm(q)) * uv.powf(w.tau)
        }
    };
    let jac = (d - 1) as f64;
    let fr = |r: f64| {
        let uv = u.radial_value(r).unwrap().abs();
        if uv == 0.0 {
            0.0
        } else {
            density_weight(r, gt + jac, w, &bad_log) * uv.powf(w.tau)
        }
    };
    let mut f = Integrand::new(d, &fp).support(x).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial_density(&fr);
    }
    let mut est = integrate_region(&f, &Region::WholeSpace, cfg)?;
    if bad_log.load(Ordering::Relaxed) {
        return Err(Error::ParamViolation("log weight argument <= 1 at a sampled point".into()));
    }
    est.diverged |= diverged;
    Ok(est)
}

/// r^e / ln^{k}(arg(r)), flagging log arguments <= 1.
fn density_weight(r: f64, e: f64, w: &WeightSpec, bad: &AtomicBool) -> f64 {
    let mut v = if e == 0.0 { 1.0 } else { r.powf(e) };
    if let Some(arg) = w.log_arg(r) {
        if !(arg > 1.0) {
            bad.store(true, Ordering::Relaxed);
            return 0.0;
        }
        v /= arg.ln().powf(w.log_power);
    }
    v
}

/// ∫_region |u|^p dx.
pub fn lp_norm_pow(u: &ScalarField, region: &Region, p: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    weighted_norm(u, region, &WeightSpec::power(0.0, p), cfg)
}

/// ∫ |x|^{pα}|∇u|^p dx over supp u.
pub fn gradient_energy(u: &ScalarField, alpha: f64, p: f64, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    gradient_energy_in(u, &Region::WholeSpace, alpha, p, cfg)
}

/// ∫_region |x|^{pα}|∇u|^p dx.
pub fn gradient_energy_in(
    u: &ScalarField,
    region: &Region,
    alpha: f64,
    p: f64,
    cfg: &QuadConfig,
) -> Result<EnergyEstimate> {
    if !u.has_grad() {
        return Err(Error::MissingGradient);
    }
    if !(p >= 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("need p >= 1 and finite alpha, got p={p}, alpha={alpha}")));
    }
    region.validate()?;
    let d = u.dim();
    let x = region.radial_bounds().intersect(&u.support().shell());
    if x.is_empty() || u.is_zero() {
        return Ok(EnergyEstimate::zero());
    }
    let pa = p * alpha;
    let wt = |r: f64| if pa == 0.0 { 1.0 } else { r.powf(pa) };
    let fp = |q: &[f64]| {
        let mut g = [0.0; MAX_DIM];
        u.grad(q, &mut g[..d]);
        let m = norm(&g[..d]);
        if m == 0.0 {
            0.0
        } else {
            wt(norm(q)) * m.powf(p)
        }
    };
    let jac = (d - 1) as f64;
    let fr = |r: f64| {
        let g = u.radial_slope(r).unwrap().abs();
        if g == 0.0 {
            0.0
        } else {
            r.powf(pa + jac) * g.powf(p)
        }
    };
    let mut f = Integrand::new(d, &fp).support(x).breaks(u.kinks());
    if u.is_radial() {
        f = f.radial_density(&fr);
    }
    integrate_region(&f, &Region::WholeSpace, cfg)
}
