//! Gauss–Legendre rules on intervals and a product rule on the unit sphere.

use alloc::vec::Vec;

use crate::math::{abs, cos, sin, sqrt, CompensatedSum, Vec3};

const PI: f64 = core::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n` started from
    /// the Chebyshev-like guesses `cos(π(i + 3/4)/(n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if abs(dx) <= 1e-16 * abs(x).max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut s = CompensatedSum::default();
        for (x, w) in self.mapped(a, b) {
            s.add(w * f(x));
        }
        s.value()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = CompensatedSum::default();
        for p in 0..panels {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { lo + h };
            for (x, w) in self.mapped(lo, hi) {
                s.add(w * f(x));
            }
        }
        s.value()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times the
/// trapezoidal rule in azimuth. Exact for spherical polynomials of degree
/// below `min(2 n_theta, n_phi)`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    points: Vec<(Vec3, f64)>,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::new(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (&z, &w) in gl.nodes().iter().zip(gl.weights()) {
            let r = sqrt((1.0 - z * z).max(0.0));
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push((Vec3::new(r * cos(phi), r * sin(phi), z), w * dphi));
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[(Vec3, f64)] {
        &self.points
    }

    /// `∫_{S²} f dμ` over the unit sphere.
    pub fn integrate<F: FnMut(Vec3) -> f64>(&self, mut f: F) -> f64 {
        let mut s = CompensatedSum::default();
        for &(p, w) in &self.points {
            s.add(w * f(p));
        }
        s.value()
    }
}

/// Volume integral over the ball of radius `r` in spherical coordinates:
/// composite radial Gauss–Legendre times a sphere rule.
pub fn ball_integral<F: FnMut(Vec3) -> f64>(radial: &GaussLegendre, panels: usize, sphere: &SphereRule, r: f64, mut f: F) -> f64 {
    radial.composite(0.0, r, panels, |s| s * s * sphere.integrate(|n| f(n * s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..40 {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        for deg in 0..16 {
            let got = gl.integrate(0.0, 2.0, |x| x.powi(deg));
            let exact = 2f64.powi(deg + 1) / (deg + 1) as f64;
            assert!((got - exact).abs() <= 1e-12 * exact, "deg {deg}");
        }
    }

    #[test]
    fn known_nodes() {
        let gl = GaussLegendre::new(3);
        let r = (0.6f64).sqrt();
        assert!((gl.nodes()[0] + r).abs() < 1e-15);
        assert_eq!(gl.nodes()[1], 0.0);
        assert!((gl.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn composite_converges_on_smooth_integrand() {
        let gl = GaussLegendre::new(6);
        let got = gl.composite(0.0, 3.0, 10, |x| (-x * x).exp());
        let exact = 0.886_207_348_259_521_5; // √π/2 · erf(3)
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn sphere_area_and_moments() {
        let rule = SphereRule::new(12, 24);
        assert!((rule.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-13);
        assert!((rule.integrate(|n| n[0] * n[0]) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((rule.integrate(|n| n[0] * n[1] * n[2] * n[2])).abs() < 1e-14);
        assert!((rule.integrate(|n| n[2].powi(4)) - 4.0 * PI / 5.0).abs() < 1e-13);
    }

    #[test]
    fn ball_volume() {
        let gl = GaussLegendre::new(4);
        let rule = SphereRule::new(4, 8);
        let v = ball_integral(&gl, 1, &rule, 2.0, |_| 1.0);
        assert!((v - 4.0 * PI * 8.0 / 3.0).abs() < 1e-12);
    }
}
