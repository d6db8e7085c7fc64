//! Sphere and ball measures.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Surface measure |S^{d-1}| = 2π^{d/2}/Γ(d/2). For d=1 this is the counting measure, 2.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// Volume of the shell a ≤ |x| < b.
pub fn shell_volume(d: usize, a: f64, b: f64) -> f64 {
    let di = d as i32;
    unit_ball_volume(d) * (b.powi(di) - a.powi(di))
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}
