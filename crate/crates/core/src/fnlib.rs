//! Test-function families, vector potentials and radial region geometry.
//!
//! Every region and support used here is a radial shell `inner <= |x| < outer`
//! (possibly scaled), which is what the integrators exploit.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest ambient dimension a field may have.
pub const MAX_DIM: usize = 8;

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radial shell `inner <= |x| < outer`; `outer` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub inner: f64,
    pub outer: f64,
}

impl Shell {
    pub const EMPTY: Shell = Shell { inner: 0.0, outer: 0.0 };

    pub fn new(inner: f64, outer: f64) -> Self {
        Shell { inner, outer }
    }

    pub fn whole() -> Self {
        Shell::new(0.0, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        self.outer <= self.inner
    }

    pub fn is_bounded(&self) -> bool {
        self.outer.is_finite()
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        r >= self.inner && r < self.outer
    }

    pub fn intersect(&self, o: &Shell) -> Shell {
        let s = Shell::new(self.inner.max(o.inner), self.outer.min(o.outer));
        if s.is_empty() {
            Shell::EMPTY
        } else {
            s
        }
    }

    /// Smallest shell containing both.
    pub fn hull(&self, o: &Shell) -> Shell {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Shell::new(self.inner.min(o.inner), self.outer.max(o.outer))
    }

    pub fn scaled(&self, lambda: f64) -> Shell {
        Shell::new(self.inner * lambda, self.outer * lambda)
    }

    pub fn volume(&self, d: usize) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            crate::special::shell_volume(d, self.inner, self.outer)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportInfo {
    /// The zero field.
    Empty,
    Ball { radius: f64 },
    ComplementOfBall { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    WholeSpace,
}

impl SupportInfo {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match *self {
            SupportInfo::Ball { radius } | SupportInfo::ComplementOfBall { radius } => pos(radius, "radius"),
            SupportInfo::Annulus { inner, outer } => {
                pos(inner, "inner radius")?;
                pos(outer, "outer radius")?;
                if inner < outer {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("annulus needs r < R, got ({inner}, {outer})")))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn shell(&self) -> Shell {
        match *self {
            SupportInfo::Empty => Shell::EMPTY,
            SupportInfo::Ball { radius } => Shell::new(0.0, radius),
            SupportInfo::ComplementOfBall { radius } => Shell::new(radius, f64::INFINITY),
            SupportInfo::Annulus { inner, outer } => Shell::new(inner, outer),
            SupportInfo::WholeSpace => Shell::whole(),
        }
    }

    pub fn scaled(&self, lambda: f64) -> SupportInfo {
        match *self {
            SupportInfo::Ball { radius } => SupportInfo::Ball { radius: radius * lambda },
            SupportInfo::ComplementOfBall { radius } => SupportInfo::ComplementOfBall { radius: radius * lambda },
            SupportInfo::Annulus { inner, outer } => SupportInfo::Annulus {
                inner: inner * lambda,
                outer: outer * lambda,
            },
            other => other,
        }
    }

    /// supp u ⊂ B_R.
    pub fn within_ball(&self, r: f64) -> bool {
        self.is_empty_support() || self.shell().outer <= r
    }

    /// supp u ⊂ R^d \ B_r.
    pub fn avoids_ball(&self, r: f64) -> bool {
        self.is_empty_support() || self.shell().inner >= r
    }

    pub fn is_empty_support(&self) -> bool {
        matches!(self, SupportInfo::Empty)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    WholeSpace,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    ComplementOfBall { radius: f64 },
    Scaled { factor: f64, base: Box<Region> },
    /// The unit ball, standing in for a bounded smooth domain.
    BoundedDomain,
}

impl Region {
    pub fn ball(radius: f64) -> Region {
        Region::Ball { radius }
    }

    pub fn annulus(inner: f64, outer: f64) -> Region {
        Region::Annulus { inner, outer }
    }

    pub fn complement(radius: f64) -> Region {
        Region::ComplementOfBall { radius }
    }

    pub fn scaled(factor: f64, base: Region) -> Region {
        Region::Scaled { factor, base: Box::new(base) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Ball { radius } | Region::ComplementOfBall { radius } => {
                SupportInfo::Ball { radius: *radius }.validate()
            }
            Region::Annulus { inner, outer } => SupportInfo::Annulus { inner: *inner, outer: *outer }.validate(),
            Region::Scaled { factor, base } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::InvalidParameter(format!("scale factor must be positive, got {factor}")));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn radial_bounds(&self) -> Shell {
        match self {
            Region::WholeSpace => Shell::whole(),
            Region::Ball { radius } => Shell::new(0.0, *radius),
            Region::Annulus { inner, outer } => Shell::new(*inner, *outer),
            Region::ComplementOfBall { radius } => Shell::new(*radius, f64::INFINITY),
            Region::Scaled { factor, base } => base.radial_bounds().scaled(*factor),
            Region::BoundedDomain => Shell::new(0.0, 1.0),
        }
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        match self {
            Region::Scaled { factor, base } => base.contains_radius(r / factor),
            other => other.radial_bounds().contains_radius(r),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_radius(norm(x))
    }

    pub fn is_bounded(&self) -> bool {
        self.radial_bounds().is_bounded()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    /// ρ^{-s}·χ(ρ) with a ramp cutoff χ of width `smoothing` adapted to `cut`.
    RadialPower { s: f64, smoothing: f64, cut: SupportInfo },
    /// (1 − ρ²/R²)²₊
    Bump { radius: f64 },
    /// 1 for x > 0 in d = 1.
    Step,
    Constant { value: f64 },
}

fn ramp(t: f64) -> f64 {
    t.clamp(0.0, 1.0)
}

fn ramp_slope(t: f64) -> f64 {
    if t > 0.0 && t < 1.0 {
        1.0
    } else {
        0.0
    }
}

/// sup of ρ^e over [a, b].
fn sup_power(e: f64, a: f64, b: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e > 0.0 {
        b.powf(e)
    } else if a > 0.0 {
        a.powf(e)
    } else {
        f64::INFINITY
    }
}

impl Profile {
    fn cutoff(s: f64, w: f64, cut: &SupportInfo, rho: f64) -> (f64, f64) {
        let _ = s;
        match *cut {
            SupportInfo::Empty => (0.0, 0.0),
            SupportInfo::WholeSpace => (1.0, 0.0),
            SupportInfo::Ball { radius } => {
                let t = (radius - rho) / w;
                (ramp(t), -ramp_slope(t) / w)
            }
            SupportInfo::ComplementOfBall { radius } => {
                let t = (rho - radius) / w;
                (ramp(t), ramp_slope(t) / w)
            }
            SupportInfo::Annulus { inner, outer } => {
                let t1 = (rho - inner) / w;
                let t2 = (outer - rho) / w;
                let (c1, c2) = (ramp(t1), ramp(t2));
                if c1 <= c2 {
                    (c1, ramp_slope(t1) / w)
                } else {
                    (c2, -ramp_slope(t2) / w)
                }
            }
        }
    }

    fn value(&self, rho: f64) -> f64 {
        match *self {
            Profile::RadialPower { s, smoothing, ref cut } => {
                let (c, _) = Self::cutoff(s, smoothing, cut, rho);
                if c == 0.0 {
                    0.0
                } else if s == 0.0 {
                    c
                } else {
                    rho.powf(-s) * c
                }
            }
            Profile::Bump { radius } => {
                if rho < radius {
                    let t = 1.0 - (rho / radius).powi(2);
                    t * t
                } else {
                    0.0
                }
            }
            Profile::Constant { value } => value,
            Profile::Step => unreachable!("step profile is not radial"),
        }
    }

    fn slope(&self, rho: f64) -> f64 {
        match *self {
            Profile::RadialPower { s, smoothing, ref cut } => {
                let (c, dc) = Self::cutoff(s, smoothing, cut, rho);
                if s == 0.0 {
                    dc
                } else if c == 0.0 && dc == 0.0 {
                    0.0
                } else {
                    -s * rho.powf(-s - 1.0) * c + rho.powf(-s) * dc
                }
            }
            Profile::Bump { radius } => {
                if rho < radius {
                    let r2 = radius * radius;
                    -4.0 * rho / r2 * (1.0 - rho * rho / r2)
                } else {
                    0.0
                }
            }
            Profile::Constant { .. } => 0.0,
            Profile::Step => unreachable!("step profile is not radial"),
        }
    }
}

/// An evaluable real test function u on R^d.
///
/// Fields are immutable; `dilate`, `scale_amplitude` and `abs` build new ones.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dim: usize,
    profile: Profile,
    amplitude: f64,
    offset: f64,
    scale: f64,
    take_abs: bool,
    support: SupportInfo,
    lipschitz: Option<f64>,
    osc_bound: Option<f64>,
    variation: Option<f64>,
    kinks: Vec<f64>,
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::InvalidParameter(format!("dimension must be in 1..={MAX_DIM}, got {d}")))
    } else {
        Ok(())
    }
}

pub fn make_radial_power(d: usize, s: f64, support: SupportInfo, smoothing: f64) -> Result<ScalarField> {
    radial_power(d, s, support, smoothing, false)
}

/// Like [`make_radial_power`] but accepts profiles that blow up at the origin.
pub fn make_radial_power_unbounded(d: usize, s: f64, support: SupportInfo, smoothing: f64) -> Result<ScalarField> {
    radial_power(d, s, support, smoothing, true)
}

fn radial_power(d: usize, s: f64, support: SupportInfo, smoothing: f64, allow_singular: bool) -> Result<ScalarField> {
    check_dim(d)?;
    support.validate()?;
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidParameter(format!("smoothing must be positive, got {smoothing}")));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter("exponent s must be finite".into()));
    }
    let sh = support.shell();
    if s > 0.0 && sh.inner == 0.0 && !sh.is_empty() && !allow_singular {
        return Err(Error::Unbounded(format!(
            "|x|^-{s} with support containing the origin is unbounded; use make_radial_power_unbounded"
        )));
    }
    let w = smoothing;
    let ramps: Vec<(f64, f64)> = match support {
        SupportInfo::Ball { radius } => vec![((radius - w).max(0.0), radius)],
        SupportInfo::ComplementOfBall { radius } => vec![(radius, radius + w)],
        SupportInfo::Annulus { inner, outer } => {
            vec![(inner, (inner + w).min(outer)), ((outer - w).max(inner), outer)]
        }
        _ => vec![],
    };
    let mut lip = if s == 0.0 { 0.0 } else { s.abs() * sup_power(-s - 1.0, sh.inner, sh.outer) };
    for &(a, b) in &ramps {
        lip += sup_power(-s, a, b) / w;
    }
    let sup = if sh.is_empty() { 0.0 } else { sup_power(-s, sh.inner, sh.outer) };
    let mut kinks = vec![0.0];
    match support {
        SupportInfo::Ball { radius } => kinks.extend([radius - w, radius]),
        SupportInfo::ComplementOfBall { radius } => kinks.extend([radius, radius + w]),
        SupportInfo::Annulus { inner, outer } => {
            kinks.extend([inner, inner + w, outer - w, outer, 0.5 * (inner + outer)])
        }
        _ => {}
    }
    kinks.retain(|k| *k >= 0.0);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let variation = if matches!(support, SupportInfo::WholeSpace) && s == 0.0 {
        Some(0.0)
    } else if sup.is_finite() {
        Some(sup)
    } else {
        None
    };
    Ok(ScalarField {
        dim: d,
        profile: Profile::RadialPower { s, smoothing, cut: support },
        amplitude: 1.0,
        offset: 0.0,
        scale: 1.0,
        take_abs: false,
        support,
        lipschitz: lip.is_finite().then_some(lip),
        osc_bound: sup.is_finite().then_some(sup),
        variation,
        kinks,
    })
}

/// Tent (1 − |x|/R)₊.
pub fn make_tent(d: usize, radius: f64) -> Result<ScalarField> {
    make_radial_power(d, 0.0, SupportInfo::Ball { radius }, radius)
}

pub fn make_bump(d: usize, radius: f64) -> Result<ScalarField> {
    check_dim(d)?;
    SupportInfo::Ball { radius }.validate()?;
    Ok(ScalarField {
        dim: d,
        profile: Profile::Bump { radius },
        amplitude: 1.0,
        offset: 0.0,
        scale: 1.0,
        take_abs: false,
        support: SupportInfo::Ball { radius },
        // max of 4t(1−t²) on [0,1] is at t = 1/√3
        lipschitz: Some(8.0 / (3.0 * 3f64.sqrt() * radius)),
        osc_bound: Some(1.0),
        variation: Some(1.0),
        kinks: vec![],
    })
}

pub fn make_step_1d() -> ScalarField {
    ScalarField {
        dim: 1,
        profile: Profile::Step,
        amplitude: 1.0,
        offset: 0.0,
        scale: 1.0,
        take_abs: false,
        support: SupportInfo::WholeSpace,
        lipschitz: None,
        osc_bound: Some(1.0),
        variation: Some(1.0),
        kinks: vec![0.0],
    }
}

pub fn make_constant(d: usize, value: f64) -> Result<ScalarField> {
    check_dim(d)?;
    if !value.is_finite() {
        return Err(Error::InvalidParameter("constant must be finite".into()));
    }
    Ok(ScalarField {
        dim: d,
        profile: Profile::Constant { value },
        amplitude: 1.0,
        offset: 0.0,
        scale: 1.0,
        take_abs: false,
        support: if value == 0.0 { SupportInfo::Empty } else { SupportInfo::WholeSpace },
        lipschitz: Some(0.0),
        osc_bound: Some(value.abs()),
        variation: Some(0.0),
        kinks: vec![],
    })
}

pub fn make_zero(d: usize) -> Result<ScalarField> {
    make_constant(d, 0.0)
}

impl ScalarField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> SupportInfo {
        self.support
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Bound on sup|u|.
    pub fn osc_bound(&self) -> Option<f64> {
        self.osc_bound
    }

    /// Bound on sup u − inf u.
    pub fn variation(&self) -> Option<f64> {
        self.variation
    }

    /// Radii (for radial fields) or coordinates (d = 1 step) where the field is not C¹.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.profile, Profile::Step)
    }

    pub fn has_grad(&self) -> bool {
        !matches!(self.profile, Profile::Step)
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && (self.support.is_empty_support() || self.amplitude == 0.0)
    }

    /// Value as a function of |x| for radial fields.
    pub fn radial_value(&self, rho: f64) -> Option<f64> {
        if !self.is_radial() {
            return None;
        }
        let v = self.amplitude * self.profile.value(rho / self.scale) + self.offset;
        Some(if self.take_abs { v.abs() } else { v })
    }

    /// d/dρ of the radial profile.
    pub fn radial_slope(&self, rho: f64) -> Option<f64> {
        if !self.is_radial() {
            return None;
        }
        let mut g = self.amplitude * self.profile.slope(rho / self.scale) / self.scale;
        if self.take_abs && self.amplitude * self.profile.value(rho / self.scale) + self.offset < 0.0 {
            g = -g;
        }
        Some(g)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match self.profile {
            Profile::Step => {
                let v = (if x[0] > 0.0 { self.amplitude } else { 0.0 }) + self.offset;
                if self.take_abs {
                    v.abs()
                } else {
                    v
                }
            }
            _ => self.radial_value(norm(x)).unwrap(),
        }
    }

    /// Writes ∇u(x) into `out`; returns false when the field has no gradient.
    pub fn grad(&self, x: &[f64], out: &mut [f64]) -> bool {
        if !self.has_grad() {
            return false;
        }
        let r = norm(x);
        let g = self.radial_slope(r).unwrap();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = if r > 0.0 { g * xi / r } else { 0.0 };
        }
        true
    }

    /// Smallest radius b with |u(x)| ≤ t whenever |x| ≥ b, if known.
    pub fn envelope_radius(&self, t: f64) -> Option<f64> {
        let sh = self.support.shell();
        if self.is_zero() {
            return Some(0.0);
        }
        if self.offset != 0.0 {
            return None;
        }
        if sh.is_bounded() {
            return Some(sh.outer);
        }
        match self.profile {
            Profile::Constant { value } if (value * self.amplitude).abs() <= t => Some(0.0),
            Profile::RadialPower { s, .. } if s > 0.0 && t > 0.0 => {
                let b = self.scale * (self.amplitude.abs() / t).powf(1.0 / s);
                Some(b.max(sh.inner))
            }
            _ => None,
        }
    }

    /// u_λ(x) = u(x/λ).
    pub fn dilate(&self, lambda: f64) -> Result<ScalarField> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation must be positive, got {lambda}")));
        }
        let mut f = self.clone();
        f.scale *= lambda;
        f.support = self.support.scaled(lambda);
        f.lipschitz = self.lipschitz.map(|l| l / lambda);
        if self.is_radial() {
            f.kinks = self.kinks.iter().map(|k| k * lambda).collect();
        }
        Ok(f)
    }

    /// u + c.
    pub fn add_constant(&self, c: f64) -> ScalarField {
        let mut f = self.clone();
        f.offset += c;
        if f.offset != 0.0 {
            f.support = SupportInfo::WholeSpace;
        }
        f.osc_bound = self.osc_bound.map(|o| o + c.abs());
        f
    }

    /// c·u.
    pub fn scale_amplitude(&self, c: f64) -> ScalarField {
        let mut f = self.clone();
        f.amplitude *= c;
        f.offset *= c;
        f.lipschitz = self.lipschitz.map(|l| l * c.abs());
        f.osc_bound = self.osc_bound.map(|o| o * c.abs());
        f.variation = self.variation.map(|v| v * c.abs());
        if c == 0.0 {
            f.support = SupportInfo::Empty;
        }
        f
    }

    /// |u|.
    pub fn abs(&self) -> ScalarField {
        let mut f = self.clone();
        f.take_abs = true;
        f
    }
}

/// A family instance as named in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl FamilySpec {
    pub fn new(name: &str) -> Self {
        FamilySpec { name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn label(&self) -> String {
        let mut s = self.name.clone();
        for (k, v) in &self.params {
            s.push_str(&format!(";{k}={v}"));
        }
        s
    }
}

/// Builds a field from a family name and parameter map.
///
/// Families: `zero`, `constant(value)`, `bump(radius)`, `tent(radius)`,
/// `annulus_tent(inner, outer[, smoothing])`, `radial_power(s, smoothing[, radius | inner[, outer]])`,
/// `step` (d = 1). Every family accepts an optional `amplitude`.
pub fn instantiate(spec: &FamilySpec, d: usize) -> Result<ScalarField> {
    let p = &spec.params;
    let allowed: &[&str] = match spec.name.as_str() {
        "zero" | "step" => &[],
        "constant" => &["value"],
        "bump" | "tent" => &["radius"],
        "annulus_tent" => &["inner", "outer", "smoothing"],
        "radial_power" => &["s", "smoothing", "radius", "inner", "outer"],
        other => return Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
    };
    for k in p.keys() {
        if k != "amplitude" && !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidParameter(format!("family '{}' has no parameter '{k}'", spec.name)));
        }
    }
    let get = |k: &str| {
        p.get(k)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("family '{}' needs parameter '{k}'", spec.name)))
    };
    let base = match spec.name.as_str() {
        "zero" => make_zero(d)?,
        "constant" => make_constant(d, get("value")?)?,
        "bump" => make_bump(d, p.get("radius").copied().unwrap_or(1.0))?,
        "tent" => make_tent(d, p.get("radius").copied().unwrap_or(1.0))?,
        "annulus_tent" => {
            let (a, b) = (get("inner")?, get("outer")?);
            let w = p.get("smoothing").copied().unwrap_or(0.5 * (b - a));
            make_radial_power(d, 0.0, SupportInfo::Annulus { inner: a, outer: b }, w)?
        }
        "radial_power" => {
            let support = match (p.get("radius"), p.get("inner"), p.get("outer")) {
                (Some(&r), None, None) => SupportInfo::Ball { radius: r },
                (None, Some(&a), Some(&b)) => SupportInfo::Annulus { inner: a, outer: b },
                (None, Some(&a), None) => SupportInfo::ComplementOfBall { radius: a },
                (None, None, None) => SupportInfo::WholeSpace,
                _ => {
                    return Err(Error::InvalidParameter(
                        "radial_power support: give radius, or inner, or inner and outer".into(),
                    ))
                }
            };
            make_radial_power(d, get("s")?, support, get("smoothing")?)?
        }
        "step" => {
            if d != 1 {
                return Err(Error::InvalidParameter("step family exists only in d = 1".into()));
            }
            make_step_1d()
        }
        _ => unreachable!(),
    };
    Ok(match p.get("amplitude") {
        Some(&a) => base.scale_amplitude(a),
        None => base,
    })
}

/// Linear vector potential A(x) = M x.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPotential {
    dim: usize,
    matrix: Vec<f64>,
    op_norm: f64,
}

pub fn make_linear_potential(d: usize, matrix: &[Vec<f64>]) -> Result<VectorPotential> {
    check_dim(d)?;
    if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter(format!("potential matrix must be {d}x{d}")));
    }
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("potential matrix must be finite".into()));
    }
    let op_norm = spectral_norm(d, &flat);
    Ok(VectorPotential { dim: d, matrix: flat, op_norm })
}

/// Largest singular value via power iteration on MᵀM.
fn spectral_norm(d: usize, m: &[f64]) -> f64 {
    let fro = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fro == 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut mv = vec![0.0; d];
    let mut lam = 0.0;
    for _ in 0..500 {
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        for i in 0..d {
            mv[i] = (0..d).map(|j| m[i * d + j] * v[j]).sum();
        }
        for j in 0..d {
            v[j] = (0..d).map(|i| m[i * d + j] * mv[i]).sum();
        }
        let next = norm(&v).sqrt();
        if (next - lam).abs() <= 1e-15 * next {
            lam = next;
            break;
        }
        lam = next;
    }
    lam
}

impl VectorPotential {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.op_norm == 0.0
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (o, row) in out[..d].iter_mut().zip(self.matrix.chunks(d)) {
            *o = row.iter().zip(x).map(|(m, xj)| m * xj).sum();
        }
    }

    pub fn operator_norm(&self) -> f64 {
        self.op_norm
    }

    /// sup |A| over B_R.
    pub fn bound(&self, radius: f64) -> f64 {
        self.op_norm * radius
    }
}
