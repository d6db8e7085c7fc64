use approx::assert_relative_eq;
use nonlocal_hardy::dyadic::{
    annulus_mean, dyadic_profile, dyadic_profile_range, holder_check, holder_min_constant, interpolation_ratio,
    mean_oscillation, poincare_ratio, support_annulus_range, CKNParams,
};
use nonlocal_hardy::energy::{
    gradient_energy, i_delta, i_delta_magnetic, k_constant, k_constant_sphere, weighted_norm, EnergyParams,
    WeightSpec,
};
use nonlocal_hardy::fnlib::{
    make_bump, make_constant, make_linear_potential, make_radial_power, make_step_1d, make_tent, make_zero, Region,
    SupportInfo,
};
use nonlocal_hardy::quad::{integrate_region, sphere_integral, Integrand};
use nonlocal_hardy::QuadConfig;
use std::f64::consts::PI;

fn cfg() -> QuadConfig {
    QuadConfig::default().with_samples(100_000).with_seed(3)
}

#[test]
fn radial_power_pointwise() {
    let t = make_radial_power(3, 0.0, SupportInfo::Ball { radius: 1.0 }, 1.0).unwrap();
    assert_eq!(t.eval(&[0.0, 0.0, 0.0]), 1.0);
    assert_eq!(t.eval(&[1.0, 0.0, 0.0]), 0.0);
    assert_eq!(t.eval(&[0.0, 2.0, 0.0]), 0.0);
    let t1 = make_radial_power(1, 0.0, SupportInfo::Ball { radius: 1.0 }, 1.0).unwrap();
    assert_eq!(t1.eval(&[0.5]), 0.5);
    let a = make_radial_power(2, 1.0, SupportInfo::Annulus { inner: 0.5, outer: 2.0 }, 0.25).unwrap();
    for i in 0..=20 {
        let r = 0.75 + i as f64 * 0.05;
        assert_relative_eq!(a.eval(&[r * 0.6, r * 0.8]), 1.0 / r, max_relative = 1e-12);
    }
}

#[test]
fn bump_values_and_gradients() {
    let b = make_bump(1, 1.0).unwrap();
    assert_eq!(b.eval(&[0.0]), 1.0);
    assert_eq!(b.eval(&[1.0]), 0.0);
    assert_eq!(b.eval(&[-1.0]), 0.0);
    let mut g = [1.0];
    assert!(b.grad(&[0.0], &mut g));
    assert_eq!(g[0], 0.0);

    let b2 = make_bump(2, 1.0).unwrap();
    let mut g2 = [0.0; 2];
    assert!(b2.grad(&[0.5, 0.0], &mut g2));
    assert_relative_eq!(g2[0], -1.5, max_relative = 1e-12);
    assert_eq!(g2[1], 0.0);
    let h = 1e-6;
    let fd = (b2.eval(&[0.5 + h, 0.0]) - b2.eval(&[0.5 - h, 0.0])) / (2.0 * h);
    assert_relative_eq!(fd, -1.5, max_relative = 1e-6);

    // 2∫₀²(2(1 − x²/4)·x/2)² dx = 128/105
    let wide = make_bump(1, 2.0).unwrap();
    let e = gradient_energy(&wide, 0.0, 2.0, &cfg()).unwrap();
    assert_relative_eq!(e.value, 128.0 / 105.0, max_relative = 1e-8);
}

#[test]
fn step_values() {
    let s = make_step_1d();
    assert_eq!(s.eval(&[3.2]), 1.0);
    assert_eq!(s.eval(&[-0.1]), 0.0);
    assert_eq!(s.osc_bound(), Some(1.0));
}

#[test]
fn linear_potentials() {
    let rot = make_linear_potential(2, &[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    let mut out = [0.0; 2];
    rot.eval(&[1.0, 0.0], &mut out);
    assert_eq!(out, [0.0, 1.0]);
    let one = make_linear_potential(1, &[vec![2.0]]).unwrap();
    let mut o1 = [0.0];
    one.eval(&[3.0], &mut o1);
    assert_eq!(o1, [6.0]);
    assert!(make_linear_potential(2, &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap().is_zero());
}

#[test]
fn region_and_sphere_integrals() {
    let one = |_: &[f64]| 1.0;
    let v = integrate_region(&Integrand::new(3, &one), &Region::ball(1.0), &cfg()).unwrap();
    assert_relative_eq!(v.value, 4.0 * PI / 3.0, max_relative = 1e-9);

    let tent = make_tent(3, 1.0).unwrap();
    let f = |x: &[f64]| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        tent.eval(x).powi(2) / r2
    };
    let h = integrate_region(&Integrand::new(3, &f), &Region::ball(1.0), &cfg()).unwrap();
    assert!((h.value - 4.0 * PI / 3.0).abs() <= 3.0 * h.std_err + 1e-9, "{} ± {}", h.value, h.std_err);
    let again = integrate_region(&Integrand::new(3, &f), &Region::ball(1.0), &cfg()).unwrap();
    assert_eq!(h, again);

    assert_relative_eq!(sphere_integral(&one, 2, &cfg()).unwrap().value, 2.0 * PI, max_relative = 1e-12);
    assert_eq!(sphere_integral(&one, 1, &cfg()).unwrap().value, 2.0);
    let sq = |s: &[f64]| s[0] * s[0];
    let e = sphere_integral(&sq, 3, &cfg()).unwrap();
    assert!((e.value - 4.0 * PI / 3.0).abs() <= 3.0 * e.std_err + 1e-9, "{} ± {}", e.value, e.std_err);
}

#[test]
fn empty_indicators() {
    let c = make_constant(2, 3.0).unwrap();
    let ep = EnergyParams::new(2.0, 0.1, 0.0).unwrap();
    assert_eq!(i_delta(&c, &Region::ball(2.0), &ep, &cfg()).unwrap().value, 0.0);
    let b = make_bump(2, 1.0).unwrap();
    let big = EnergyParams::new(2.0, 2.0 * b.osc_bound().unwrap(), 0.0).unwrap();
    assert_eq!(i_delta(&b, &Region::WholeSpace, &big, &cfg()).unwrap().value, 0.0);
}

#[test]
fn magnetic_phase_on_constant() {
    let c = make_constant(2, 1.0).unwrap();
    let rot = make_linear_potential(2, &[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    let ep = EnergyParams::new(2.0, 0.1, 0.0).unwrap();
    let e = i_delta_magnetic(&c, &rot, &Region::ball(1.0), &ep, &cfg()).unwrap();
    assert!(e.value > 0.0);
}

#[test]
fn weighted_and_gradient_norms() {
    let t1 = make_tent(1, 1.0).unwrap();
    // |x|^{γτ} with γτ = 1
    let w = weighted_norm(&t1, &Region::WholeSpace, &WeightSpec::power(0.5, 2.0), &cfg()).unwrap();
    assert_relative_eq!(w.value, 1.0 / 6.0, max_relative = 1e-8);
    let t3 = make_tent(3, 1.0).unwrap();
    let h = weighted_norm(&t3, &Region::WholeSpace, &WeightSpec::power(-1.0, 2.0), &cfg()).unwrap();
    assert_relative_eq!(h.value, 4.0 * PI / 3.0, max_relative = 1e-8);
    let z = make_zero(3).unwrap();
    assert_eq!(weighted_norm(&z, &Region::WholeSpace, &WeightSpec::power(-1.0, 2.0), &cfg()).unwrap().value, 0.0);

    assert_relative_eq!(gradient_energy(&t1, 0.0, 2.0, &cfg()).unwrap().value, 2.0, max_relative = 1e-8);
    let b = make_bump(1, 1.0).unwrap();
    assert_relative_eq!(gradient_energy(&b, 0.0, 2.0, &cfg()).unwrap().value, 256.0 / 105.0, max_relative = 1e-8);
    assert_eq!(gradient_energy(&make_constant(2, 5.0).unwrap(), 0.0, 2.0, &cfg()).unwrap().value, 0.0);
}

#[test]
fn k_constants() {
    for p in [1.0, 1.5, 2.0, 3.0] {
        assert_relative_eq!(k_constant(1, p), 2.0 / p, max_relative = 1e-12);
        assert_relative_eq!(k_constant_sphere(1, p, &cfg()).unwrap().value, 2.0 / p, max_relative = 1e-12);
    }
    assert_relative_eq!(k_constant(2, 2.0), PI / 2.0, max_relative = 1e-12);
    assert_relative_eq!(k_constant(3, 2.0), 2.0 * PI / 3.0, max_relative = 1e-12);
}

#[test]
fn dyadic_ranges() {
    let ball = make_bump(2, 1.0).unwrap();
    assert_eq!(support_annulus_range(&ball, 21).unwrap().1, 1);
    let ext = make_radial_power(2, 1.0, SupportInfo::ComplementOfBall { radius: 1.0 }, 0.5).unwrap();
    assert_eq!(support_annulus_range(&ext, 21).unwrap().0, 0);
    let ann = make_radial_power(2, 0.0, SupportInfo::Annulus { inner: 0.5, outer: 4.0 }, 0.5).unwrap();
    assert_eq!(support_annulus_range(&ann, 21).unwrap(), (-1, 3));
}

#[test]
fn annulus_means() {
    assert_relative_eq!(annulus_mean(&make_constant(2, 2.5).unwrap(), 0, &cfg()).unwrap(), 2.5, max_relative = 1e-12);
    let abs_x = make_radial_power(1, -1.0, SupportInfo::WholeSpace, 1.0).unwrap();
    assert_relative_eq!(annulus_mean(&abs_x, 0, &cfg()).unwrap(), 1.5, max_relative = 1e-8);
    assert_eq!(annulus_mean(&make_bump(2, 1.0).unwrap(), 1, &cfg()).unwrap(), 0.0);
}

#[test]
fn profiles() {
    let params = CKNParams::a_one(2, 1.5, 2.0, 0.0).unwrap();
    let c = make_constant(2, 1.0).unwrap();
    let delta: f64 = 0.1;
    let prof = dyadic_profile_range(&c, &params, delta, -2, 2, &cfg()).unwrap();
    for e in &prof.entries {
        let pen = 2f64.powf(e.k as f64 * (params.alpha * params.p + 2.0 - params.p)) * delta.powf(params.p);
        assert_eq!(e.i_delta_k, pen);
    }

    let b = make_bump(2, 1.0).unwrap();
    let prof = dyadic_profile(&b, &params, delta, &cfg()).unwrap();
    assert_eq!(prof.n, 1);
    assert!(prof.entries.iter().all(|e| e.i_delta_k.is_finite() && e.lq_norm.is_finite()));
    let g = gradient_energy(&b, params.alpha, params.p, &cfg()).unwrap().value;
    let s = prof.sum_grad().unwrap();
    assert!(s >= g * (1.0 - 1e-6) && s <= 2.0 * g * (1.0 + 1e-6), "{s} vs {g}");
}

#[test]
fn poincare_and_interpolation() {
    let d = Region::annulus(1.0, 2.0);
    let c = make_constant(2, 4.0).unwrap();
    assert_eq!(poincare_ratio(&c, &d, 1.0, 2.0, 0.1, &cfg()).unwrap(), 0.0);

    let b = make_bump(2, 8.0).unwrap();
    let delta = 2.0 * b.osc_bound().unwrap();
    let num = mean_oscillation(&b, &Region::annulus(1.0, 2.0), 2.0, &cfg()).unwrap().value;
    assert_eq!(poincare_ratio(&b, &d, 1.0, 2.0, delta, &cfg()).unwrap(), num / delta.powi(2));

    let b3 = make_bump(3, 8.0).unwrap();
    let pr = poincare_ratio(&b3, &d, 1.0, 2.0, 1e-2, &cfg()).unwrap();
    let ir = interpolation_ratio(&b3, &d, 1.0, 2.0, 2.0, 2.0, 1.0, 1e-2, &cfg()).unwrap();
    assert_relative_eq!(ir, pr.sqrt(), max_relative = 1e-12);
    assert_eq!(interpolation_ratio(&make_constant(3, 1.0).unwrap(), &d, 1.0, 2.0, 2.0, 2.0, 0.5, 0.1, &cfg()).unwrap(), 0.0);
}

#[test]
fn holder_young_oracle() {
    let c2 = holder_min_constant(2.0, 2.0, 400, 400).unwrap();
    assert!((c2 - 2.0).abs() < 1e-2, "{c2}");
    let c15 = holder_min_constant(1.5, 2.0, 400, 400).unwrap();
    assert!((c15 - 1.5).abs() < 1e-2, "{c15}");
    for (l, t) in [(2.0, 2.0), (3.0, 1.5), (1.2, 3.0)] {
        let c = holder_min_constant(l, t, 400, 400).unwrap();
        assert!(holder_check(l, t, c, 10_000, 9) <= 1.0 + 1e-12);
    }
}
