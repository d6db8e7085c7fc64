//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Every export returns a JSON string; errors come back as a thrown string.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

use nonlocal_hardy::energy::{gradient_energy, i_delta, k_constant, EnergyParams};
use nonlocal_hardy::fnlib::{instantiate, FamilySpec, Region};
use nonlocal_hardy::verify::{evaluate_case, CaseId, InequalityCase};
use nonlocal_hardy::QuadConfig;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

fn quad(samples: u32, seed: u64) -> QuadConfig {
    QuadConfig { samples: samples.max(1000) as usize, ..QuadConfig::default() }.with_seed(seed)
}

/// Log-spaced δ grid from 1 down to `smallest`.
fn grid(smallest: f64, points: u32) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| smallest.powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Serialize)]
struct KPoint {
    d: usize,
    k: f64,
}

/// K_{d,p} for d = 1..=max_dim.
pub fn k_curve(p: f64, max_dim: usize) -> Vec<(usize, f64)> {
    (1..=max_dim).map(|d| (d, k_constant(d, p))).collect()
}

#[wasm_bindgen]
pub fn k_constant_curve(p: f64, max_dim: u32) -> Result<String, JsValue> {
    if !(p >= 1.0) {
        return Err(js_err("p must be at least 1"));
    }
    let pts: Vec<KPoint> = k_curve(p, max_dim.clamp(1, 12) as usize).into_iter().map(|(d, k)| KPoint { d, k }).collect();
    to_json(&pts)
}

#[derive(Serialize)]
struct LimitPoint {
    delta: f64,
    i_delta: f64,
    std_err: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct LimitCurve {
    k_grad: f64,
    points: Vec<LimitPoint>,
}

fn limit_curve(
    family: &str,
    d: usize,
    p: f64,
    smallest: f64,
    points: u32,
    samples: u32,
    seed: u64,
) -> nonlocal_hardy::Result<LimitCurve> {
    let u = instantiate(&FamilySpec::new(family), d)?;
    let cfg = quad(samples, seed);
    let k_grad = k_constant(d, p) * gradient_energy(&u, 0.0, p, &cfg)?.value;
    let mut out = Vec::new();
    for delta in grid(smallest, points) {
        let e = i_delta(&u, &Region::WholeSpace, &EnergyParams::new(p, delta, 0.0)?, &cfg)?;
        out.push(LimitPoint { delta, i_delta: e.value, std_err: e.std_err, ratio: e.value / k_grad });
    }
    Ok(LimitCurve { k_grad, points: out })
}

/// I_δ(u) against K_{d,p}∫|∇u|^p on a log δ grid.
#[wasm_bindgen]
pub fn delta_limit_curve(
    family: &str,
    d: u32,
    p: f64,
    smallest: f64,
    points: u32,
    samples: u32,
    seed: u32,
) -> Result<String, JsValue> {
    if !(smallest > 0.0 && smallest < 1.0) {
        return Err(js_err("smallest δ must lie in (0, 1)"));
    }
    to_json(&limit_curve(family, d as usize, p, smallest, points, samples, seed.into()).map_err(js_err)?)
}

#[derive(Serialize)]
struct RatioPoint {
    delta: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    verdict: String,
}

fn ratio_curve(
    case: &str,
    family: &str,
    d: usize,
    p: f64,
    smallest: f64,
    points: u32,
    samples: u32,
    seed: u64,
) -> nonlocal_hardy::Result<Vec<RatioPoint>> {
    let id: CaseId = case.parse()?;
    if id.needs_ckn() {
        return Err(nonlocal_hardy::Error::InvalidParameter(format!(
            "case {id} needs CKN exponents; use the nlh CLI for it"
        )));
    }
    let u = instantiate(&FamilySpec::new(family), d)?;
    let c = InequalityCase::new(id, p);
    let cfg = quad(samples, seed);
    let mut out = Vec::new();
    for delta in grid(smallest, points) {
        let r = evaluate_case(&c, &u, delta, &cfg)?;
        out.push(RatioPoint { delta, lhs: r.lhs, rhs: r.rhs, ratio: r.ratio, verdict: r.verdict.to_string() });
    }
    Ok(out)
}

/// LHS/RHS of an inequality case on a log δ grid.
#[wasm_bindgen]
pub fn hardy_ratio_curve(
    case: &str,
    family: &str,
    d: u32,
    p: f64,
    smallest: f64,
    points: u32,
    samples: u32,
    seed: u32,
) -> Result<String, JsValue> {
    to_json(&ratio_curve(case, family, d as usize, p, smallest, points, samples, seed.into()).map_err(js_err)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_runs_from_one_down() {
        let g = grid(1e-2, 3);
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 0.1).abs() < 1e-12);
        assert!((g[2] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn k_curve_at_d1() {
        // K_{1,p} = 2/p
        assert!((k_curve(2.0, 3)[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limit_ratio_tends_to_one() {
        let c = limit_curve("bump", 1, 2.0, 1e-3, 2, 40_000, 1).unwrap();
        assert!((c.points[1].ratio - 1.0).abs() < 0.05, "{}", c.points[1].ratio);
    }

    #[test]
    fn page_cases_evaluate() {
        for (case, d) in [("H1", 3), ("H3", 2), ("L1", 3)] {
            let v = ratio_curve(case, "bump", d, 2.0, 0.01, 3, 20_000, 1).unwrap();
            assert!(v.iter().all(|r| r.ratio.is_finite() && r.verdict == "bounded"), "{case}");
        }
        assert!(ratio_curve("P1", "bump", 3, 2.0, 0.01, 3, 20_000, 1).is_err());
    }
}
