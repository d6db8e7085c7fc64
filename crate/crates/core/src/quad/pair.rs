//! Stratified sampler for ∬ F(x, y) dx dy with y = x + ρσ.
//!
//! x is uniform on each of a list of finite shells partitioning X, σ uniform on
//! the sphere and ρ has density ∝ ρ^{-1-κ} inside geometric strata; every
//! (x-shell, ρ-stratum) pair is its own stratum. The integrand callback returns the
//! reduced value F(x, y)·ρ^{d+κ}, which is bounded for the kernels used here.

use super::sample::{point_in_shell, run_tasks, split_tasks, unit_vector, Stats, Task};
use crate::error::{Error, Result};
use crate::fnlib::{norm, Shell, MAX_DIM};
use crate::special::sphere_area;
use rand::Rng;

pub struct PairPlan {
    pub dim: usize,
    /// Disjoint shells covering X.
    pub x_shells: Vec<Shell>,
    pub kappa: f64,
    /// Strictly decreasing stratum edges; stratum j is [edges[j+1], edges[j]].
    pub edges: Vec<f64>,
    /// Adds the stratum [edges[0], ∞) (requires κ > 0).
    pub far: bool,
    pub samples: usize,
    pub seed: u64,
    pub tag: u8,
}

#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub value: f64,
    pub var: f64,
    pub n: u64,
    /// Contribution of each near stratum, outermost first.
    pub near: Vec<f64>,
    pub far: f64,
}

fn mass(kappa: f64, l: f64, h: f64) -> f64 {
    if kappa == 0.0 {
        (h / l).ln()
    } else if h.is_infinite() {
        l.powf(-kappa) / kappa
    } else {
        (l.powf(-kappa) - h.powf(-kappa)) / kappa
    }
}

#[inline]
fn draw_rho<R: Rng>(rng: &mut R, kappa: f64, l: f64, h: f64) -> f64 {
    let v: f64 = rng.random();
    if h.is_infinite() {
        // Pareto tail on [l, ∞)
        return l * (1.0 - v).powf(-1.0 / kappa);
    }
    if kappa == 0.0 {
        return h * (l / h).powf(v);
    }
    // ρ^{-κ} uniform between h^{-κ} and l^{-κ}
    let q = (h / l).powf(kappa);
    (h * (1.0 + v * (q - 1.0)).powf(-1.0 / kappa)).clamp(l, h)
}

pub fn run_pair<G>(plan: &PairPlan, g: G) -> Result<PairOutcome>
where
    G: Fn(&[f64], &[f64], f64) -> f64 + Sync,
{
    let d = plan.dim;
    debug_assert!(d <= MAX_DIM);
    let nnear = plan.edges.len().saturating_sub(1);
    let nrho = nnear + plan.far as usize;
    let xs: Vec<Shell> = plan.x_shells.iter().copied().filter(|s| !s.is_empty()).collect();
    let ns = nrho * xs.len();
    if ns == 0 {
        return Ok(PairOutcome { value: 0.0, var: 0.0, n: 0, near: vec![0.0; nnear], far: 0.0 });
    }
    let rho_bounds: Vec<(f64, f64)> = (0..nrho)
        .map(|j| if j < nnear { (plan.edges[j + 1], plan.edges[j]) } else { (plan.edges[0], f64::INFINITY) })
        .collect();
    let area = sphere_area(d);
    // stratum s = i·nrho + j for x-shell i and ρ-stratum j
    let coef: Vec<f64> = (0..ns)
        .map(|s| {
            let (l, h) = rho_bounds[s % nrho];
            xs[s / nrho].volume(d) * area * mass(plan.kappa, l, h)
        })
        .collect();

    let sampler = |rng: &mut rand_chacha::ChaCha8Rng, j: usize, count: usize| -> Result<Stats> {
        let (l, h) = rho_bounds[j % nrho];
        let xsh = &xs[j / nrho];
        let c = coef[j];
        let mut st = Stats::default();
        let mut x = [0.0; MAX_DIM];
        let mut y = [0.0; MAX_DIM];
        let mut s = [0.0; MAX_DIM];
        for _ in 0..count {
            let mut tries = 0;
            loop {
                point_in_shell(rng, xsh, &mut x[..d]);
                unit_vector(rng, &mut s[..d]);
                let rho = draw_rho(rng, plan.kappa, l, h);
                for i in 0..d {
                    y[i] = x[i] + rho * s[i];
                }
                let v = g(&x[..d], &y[..d], rho);
                if v.is_finite() {
                    st.push(c * v);
                    break;
                }
                // points on the singular set at the origin are redrawn
                tries += 1;
                if tries > 100 || (norm(&x[..d]) > 1e-12 && norm(&y[..d]) > 1e-12) {
                    return Err(Error::NonFinite(format!("pair integrand at x={:?}, y={:?}", &x[..d], &y[..d])));
                }
            }
        }
        Ok(st)
    };

    let n0 = (plan.samples / (4 * ns)).max(64);
    let mut tasks: Vec<Task> = Vec::new();
    for j in 0..ns {
        split_tasks(j, n0, plan.tag, 0, &mut tasks);
    }
    let pilot = run_tasks(&tasks, ns, plan.seed, |rng, t| sampler(rng, t.stratum, t.count))?;

    // Neyman allocation of the remaining budget from the pilot spread
    let rest = plan.samples.saturating_sub(n0 * ns);
    let mut w: Vec<f64> = pilot.iter().map(|s| s.sample_var().sqrt()).collect();
    let wsum: f64 = w.iter().sum();
    if wsum == 0.0 {
        let any: f64 = pilot.iter().map(|s| s.mean.abs()).sum();
        if any == 0.0 {
            w.iter_mut().for_each(|v| *v = 0.0);
        } else {
            w = coef.clone();
        }
    }
    let wsum: f64 = w.iter().sum();
    let mut tasks = Vec::new();
    if wsum > 0.0 && rest > 0 {
        for (j, wj) in w.iter().enumerate() {
            let nj = ((rest as f64) * wj / wsum).floor() as usize;
            split_tasks(j, nj, plan.tag, 1, &mut tasks);
        }
    }
    let main = run_tasks(&tasks, ns, plan.seed, |rng, t| sampler(rng, t.stratum, t.count))?;

    let mut out = PairOutcome { value: 0.0, var: 0.0, n: 0, near: vec![0.0; nnear], far: 0.0 };
    for j in 0..ns {
        let mut st = pilot[j];
        st.merge(&main[j]);
        out.value += st.mean;
        out.var += st.var_of_mean();
        out.n += st.n;
        let r = j % nrho;
        if r < nnear {
            out.near[r] += st.mean;
        } else {
            out.far += st.mean;
        }
    }
    Ok(out)
}

/// True when the innermost strata carry a non-negligible, non-decaying share.
pub fn inner_shells_suspicious(near: &[f64]) -> bool {
    let total: f64 = near.iter().sum();
    if total <= 0.0 || near.len() < 2 {
        return false;
    }
    let k = near.len().min(3);
    let inner: f64 = near[near.len() - k..].iter().sum();
    inner > 1e-3 * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::sample::rng_for;

    #[test]
    fn rho_draws_stay_in_stratum() {
        let mut rng = rng_for(1, 0);
        for &k in &[2.0, 1.5, -1.0, -0.2] {
            for _ in 0..1000 {
                let r = draw_rho(&mut rng, k, 0.25, 0.5);
                assert!((0.25..=0.5).contains(&r));
            }
        }
        for _ in 0..1000 {
            let r = draw_rho(&mut rng, -1.0, 0.0, 0.5);
            assert!((0.0..=0.5).contains(&r));
            assert!(draw_rho(&mut rng, 2.0, 3.0, f64::INFINITY) >= 3.0);
        }
    }

    #[test]
    fn masses() {
        assert!((mass(2.0, 0.5, 1.0) - (4.0 - 1.0) / 2.0).abs() < 1e-14);
        assert!((mass(-2.0, 0.0, 1.0) - 0.5).abs() < 1e-14);
        assert!((mass(2.0, 2.0, f64::INFINITY) - 0.125).abs() < 1e-14);
    }

    #[test]
    fn constant_integrand_gives_exact_mass() {
        // F = ρ^{-(d+κ)} on X × {ρ ∈ [a, b]} integrates to Vol(X)·|S|·mass
        let plan = PairPlan {
            dim: 2,
            x_shells: vec![Shell::new(0.0, 0.5), Shell::new(0.5, 1.0)],
            kappa: 2.0,
            edges: vec![1.0, 0.5, 0.25],
            far: true,
            samples: 4000,
            seed: 5,
            tag: 9,
        };
        let out = run_pair(&plan, |_, _, _| 1.0).unwrap();
        let exact = std::f64::consts::PI * 2.0 * std::f64::consts::PI * (16.0 - 1.0) / 2.0
            + std::f64::consts::PI * 2.0 * std::f64::consts::PI * 0.5;
        assert!((out.value - exact).abs() < 1e-9 * exact);
        assert!(out.var < 1e-20);
    }
}
