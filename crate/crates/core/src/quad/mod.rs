//! Integration engines: single integrals over radial regions, sphere
//! integrals and singular pair integrals with level-set indicators.

mod gk;
pub(crate) mod pair;
pub mod sample;
mod singular;

pub use gk::{integrate as integrate_1d, GkResult};
pub use singular::integrate_pair_singular;
pub(crate) use singular::{gagliardo_pair, indicator_pair};

use crate::error::{Error, Result};
use crate::fnlib::{norm, Region, Shell, MAX_DIM};
use crate::special::sphere_area;
use sample::{point_in_shell, run_tasks, split_tasks, unit_vector, Stats};
use serde::{Deserialize, Serialize};

/// Largest dimension for single integrals.
pub const MAX_SINGLE_DIM: usize = 5;
/// Largest dimension for pair integrals.
pub const MAX_PAIR_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    RadialReduction,
    TensorGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMinPolicy {
    /// Skip separations below δ/L, where the indicator is provably empty.
    AutoLipschitz,
    Explicit(f64),
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub shells: usize,
    pub rho_min_policy: RhoMinPolicy,
    /// Far-field cut T; defaults to diam(supp u) + 1.
    pub far_field_cut: Option<f64>,
    pub target_rel_err: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            method: Method::RadialReduction,
            samples: 200_000,
            seed: 0,
            shells: 40,
            rho_min_policy: RhoMinPolicy::AutoLipschitz,
            far_field_cut: None,
            target_rel_err: 1e-9,
        }
    }
}

impl QuadConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        if self.shells == 0 || self.shells > 200 {
            return Err(Error::InvalidParameter("shells must be in 1..=200".into()));
        }
        if let Some(t) = self.far_field_cut {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter("far_field_cut must be positive".into()));
            }
        }
        if let RhoMinPolicy::Explicit(r) = self.rho_min_policy {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter("explicit rho_min must be positive".into()));
            }
        }
        if !(self.target_rel_err > 0.0) {
            return Err(Error::InvalidParameter("target_rel_err must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: u64,
    /// Part of `value` computed in closed form (or by deterministic quadrature).
    pub tail_analytic: f64,
    /// When set, `value` is only a lower bound.
    pub diverged: bool,
}

impl EnergyEstimate {
    pub fn zero() -> Self {
        EnergyEstimate { value: 0.0, std_err: 0.0, n_samples: 0, tail_analytic: 0.0, diverged: false }
    }

    pub fn exact(value: f64) -> Self {
        EnergyEstimate { value, ..Self::zero() }
    }

    /// Sum of independent estimates.
    pub fn add(&self, o: &EnergyEstimate) -> EnergyEstimate {
        EnergyEstimate {
            value: self.value + o.value,
            std_err: self.std_err.hypot(o.std_err),
            n_samples: self.n_samples + o.n_samples,
            tail_analytic: self.tail_analytic + o.tail_analytic,
            diverged: self.diverged || o.diverged,
        }
    }

    pub fn scale(&self, c: f64) -> EnergyEstimate {
        EnergyEstimate {
            value: self.value * c,
            std_err: self.std_err * c.abs(),
            tail_analytic: self.tail_analytic * c,
            ..*self
        }
    }
}

type PointFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);
type RadialFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// A pointwise integrand with optional radial form and declared support.
pub struct Integrand<'a> {
    pub dim: usize,
    pub point: PointFn<'a>,
    /// f as a function of |x|, when f is radial.
    pub radial: Option<RadialFn<'a>>,
    /// The radial form already includes the factor |x|^{d-1}.
    pub radial_density: bool,
    pub support: Shell,
    /// Radii where f is not smooth.
    pub breaks: Vec<f64>,
}

impl<'a> Integrand<'a> {
    pub fn new(dim: usize, point: PointFn<'a>) -> Self {
        Integrand { dim, point, radial: None, radial_density: false, support: Shell::whole(), breaks: vec![] }
    }

    pub fn radial(mut self, f: RadialFn<'a>) -> Self {
        self.radial = Some(f);
        self
    }

    /// Radial form given as f(ρ)·ρ^{d-1}, which avoids overflow when f alone
    /// is singular at the origin.
    pub fn radial_density(mut self, f: RadialFn<'a>) -> Self {
        self.radial = Some(f);
        self.radial_density = true;
        self
    }

    pub fn support(mut self, s: Shell) -> Self {
        self.support = s;
        self
    }

    pub fn breaks(mut self, b: &[f64]) -> Self {
        self.breaks = b.to_vec();
        self
    }
}

pub(crate) fn check_single_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_SINGLE_DIM {
        Err(Error::UnsupportedDimension { dim: d, what: "single integrals", max: MAX_SINGLE_DIM })
    } else {
        Ok(())
    }
}

/// ∫_region f dx.
pub fn integrate_region(f: &Integrand, region: &Region, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    cfg.validate()?;
    region.validate()?;
    let d = f.dim;
    check_single_dim(d)?;
    let x = region.radial_bounds().intersect(&f.support);
    if x.is_empty() {
        return Ok(EnergyEstimate::zero());
    }
    match (cfg.method, f.radial) {
        (Method::RadialReduction, Some(rf)) => radial_integral(rf, f.radial_density, d, &x, &f.breaks, cfg),
        (Method::TensorGrid, _) => grid_integral(f.point, d, &x, cfg),
        _ => mc_integral(f.point, d, &x, cfg),
    }
}

fn radial_integral(
    rf: RadialFn,
    density: bool,
    d: usize,
    x: &Shell,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<EnergyEstimate> {
    let area = sphere_area(d);
    let dm1 = d as i32 - 1;
    let g = |r: f64| {
        let v = rf(r);
        if v == 0.0 {
            0.0
        } else if density {
            v
        } else {
            v * r.powi(dm1)
        }
    };
    let r = gk::integrate(g, x.inner, x.outer, breaks, 0.0, cfg.target_rel_err)?;
    let value = area * r.value;
    if !value.is_finite() {
        return Err(Error::NonFinite("radial integral".into()));
    }
    Ok(EnergyEstimate {
        value,
        std_err: area * r.error,
        n_samples: r.evaluations,
        tail_analytic: value,
        diverged: false,
    })
}

fn mc_integral(f: PointFn, d: usize, x: &Shell, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    if !x.is_bounded() {
        return Err(Error::UnboundedDomain("Monte Carlo needs a bounded region or declared support".into()));
    }
    let vol = x.volume(d);
    let mut tasks = Vec::new();
    split_tasks(0, cfg.samples, 1, 0, &mut tasks);
    let st = run_tasks(&tasks, 1, cfg.seed, |rng, t| {
        let mut p = [0.0; MAX_DIM];
        let mut st = Stats::default();
        for _ in 0..t.count {
            let mut tries = 0;
            loop {
                point_in_shell(rng, x, &mut p[..d]);
                let v = f(&p[..d]);
                if v.is_finite() {
                    st.push(vol * v);
                    break;
                }
                tries += 1;
                if tries > 100 || norm(&p[..d]) > 1e-12 {
                    return Err(Error::NonFinite(format!("integrand at {:?}", &p[..d])));
                }
            }
        }
        Ok(st)
    })?[0];
    Ok(EnergyEstimate {
        value: st.mean,
        std_err: st.var_of_mean().sqrt(),
        n_samples: st.n,
        tail_analytic: 0.0,
        diverged: false,
    })
}

fn grid_sum(f: PointFn, d: usize, x: &Shell, n: usize) -> Result<f64> {
    let b = x.outer;
    let h = 2.0 * b / n as f64;
    let total = n.pow(d as u32);
    let mut p = [0.0; MAX_DIM];
    let mut s = 0.0;
    for idx in 0..total {
        let mut k = idx;
        for c in p[..d].iter_mut() {
            *c = -b + h * ((k % n) as f64 + 0.5);
            k /= n;
        }
        if x.contains_radius(norm(&p[..d])) {
            let v = f(&p[..d]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrand at {:?}", &p[..d])));
            }
            s += v;
        }
    }
    Ok(s * h.powi(d as i32))
}

fn grid_integral(f: PointFn, d: usize, x: &Shell, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    if !x.is_bounded() {
        return Err(Error::UnboundedDomain("tensor grid needs a bounded region".into()));
    }
    let n = ((cfg.samples as f64).powf(1.0 / d as f64).round() as usize).max(2);
    let fine = grid_sum(f, d, x, n)?;
    let coarse = grid_sum(f, d, x, (n / 2).max(1))?;
    Ok(EnergyEstimate {
        value: fine,
        std_err: (fine - coarse).abs(),
        n_samples: n.pow(d as u32) as u64,
        tail_analytic: fine,
        diverged: false,
    })
}

/// ∫_{S^{d-1}} g dσ.
pub fn sphere_integral(g: &(dyn Fn(&[f64]) -> f64 + Sync), d: usize, cfg: &QuadConfig) -> Result<EnergyEstimate> {
    cfg.validate()?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidParameter(format!("dimension must be in 1..={MAX_DIM}")));
    }
    if d == 1 {
        let v = g(&[1.0]) + g(&[-1.0]);
        if !v.is_finite() {
            return Err(Error::NonFinite("sphere integrand".into()));
        }
        return Ok(EnergyEstimate { value: v, tail_analytic: v, n_samples: 2, ..EnergyEstimate::zero() });
    }
    let area = sphere_area(d);
    let mut tasks = Vec::new();
    split_tasks(0, cfg.samples, 2, 0, &mut tasks);
    let st = run_tasks(&tasks, 1, cfg.seed, |rng, t| {
        let mut s = [0.0; MAX_DIM];
        let mut st = Stats::default();
        for _ in 0..t.count {
            unit_vector(rng, &mut s[..d]);
            let v = g(&s[..d]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("sphere integrand at {:?}", &s[..d])));
            }
            st.push(area * v);
        }
        Ok(st)
    })?[0];
    Ok(EnergyEstimate {
        value: st.mean,
        std_err: st.var_of_mean().sqrt(),
        n_samples: st.n,
        tail_analytic: 0.0,
        diverged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnlib::make_tent;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volume_all_methods() {
        let one = |_: &[f64]| 1.0;
        let one_r = |_: f64| 1.0;
        let f = Integrand::new(3, &one).radial(&one_r);
        let exact = 4.0 * PI / 3.0;
        let r = integrate_region(&f, &Region::ball(1.0), &QuadConfig::default()).unwrap();
        assert!((r.value - exact).abs() < 1e-10);
        let cfg = QuadConfig::default().with_method(Method::MonteCarlo).with_seed(4);
        let r = integrate_region(&f, &Region::ball(1.0), &cfg).unwrap();
        assert!((r.value - exact).abs() < 4.0 * r.std_err + 1e-12, "{r:?}");
        assert_eq!(r.std_err, 0.0, "constant integrand has zero variance");
        let cfg = QuadConfig::default().with_method(Method::TensorGrid).with_samples(1_000_000);
        let r = integrate_region(&f, &Region::ball(1.0), &cfg).unwrap();
        assert!((r.value - exact).abs() < 1e-2);
    }

    #[test]
    fn hardy_integral_of_tent() {
        let u = make_tent(3, 1.0).unwrap();
        let fp = |x: &[f64]| u.eval(x).powi(2) / x.iter().map(|v| v * v).sum::<f64>();
        let fr = |r: f64| u.radial_value(r).unwrap().powi(2);
        let f = Integrand::new(3, &fp).radial_density(&fr).breaks(u.kinks());
        let r = integrate_region(&f, &Region::ball(1.0), &QuadConfig::default()).unwrap();
        assert!((r.value - 4.0 * PI / 3.0).abs() < 1e-9);
        let cfg = QuadConfig::default().with_method(Method::MonteCarlo).with_seed(2);
        let r = integrate_region(&f, &Region::ball(1.0), &cfg).unwrap();
        assert!((r.value - 4.0 * PI / 3.0).abs() < 4.0 * r.std_err);
    }

    #[test]
    fn determinism() {
        let fp = |x: &[f64]| (x[0] * 3.0).sin().powi(2) + x[1];
        let f = Integrand::new(2, &fp);
        let cfg = QuadConfig::default().with_method(Method::MonteCarlo).with_seed(99);
        let a = integrate_region(&f, &Region::ball(1.0), &cfg).unwrap();
        let b = integrate_region(&f, &Region::ball(1.0), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbounded_mc_rejected() {
        let fp = |_: &[f64]| 1.0;
        let f = Integrand::new(2, &fp);
        let cfg = QuadConfig::default().with_method(Method::MonteCarlo);
        assert!(matches!(integrate_region(&f, &Region::WholeSpace, &cfg), Err(Error::UnboundedDomain(_))));
        let f = Integrand::new(2, &fp).support(Shell::new(0.0, 2.0));
        let r = integrate_region(&f, &Region::WholeSpace, &cfg).unwrap();
        assert!((r.value - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn nonfinite_reported() {
        let fp = |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { 1.0 };
        let f = Integrand::new(2, &fp);
        let cfg = QuadConfig::default().with_method(Method::MonteCarlo).with_samples(100);
        assert!(matches!(integrate_region(&f, &Region::ball(1.0), &cfg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn sphere_examples() {
        let cfg = QuadConfig::default().with_seed(1);
        let one = |_: &[f64]| 1.0;
        let r = sphere_integral(&one, 2, &cfg).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-12);
        assert_eq!(sphere_integral(&one, 1, &cfg).unwrap().value, 2.0);
        let sq = |s: &[f64]| s[2] * s[2];
        let r = sphere_integral(&sq, 3, &cfg).unwrap();
        assert!((r.value - 4.0 * PI / 3.0).abs() < 3.0 * r.std_err, "{r:?}");
    }
}
