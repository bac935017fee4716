//! Gauss-Legendre rules and barycentric interpolation on their nodes.

use std::f64::consts::PI;

/// Nodes and weights of a Gauss-Legendre rule on an interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes in ascending order.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, refined by Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
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

    /// The same rule mapped affinely onto `[a, b]`.
    pub fn on_interval(n: usize, a: f64, b: f64) -> Self {
        let reference = Self::new(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: reference.nodes.iter().map(|x| mid + half * x).collect(),
            weights: reference.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
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
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Barycentric Lagrange interpolant through the nodes of a Gauss-Legendre
/// rule, using the closed-form weights `(-1)^j sqrt((1 - x_j^2) w_j)`.
#[derive(Debug, Clone)]
pub struct BarycentricInterpolant {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl BarycentricInterpolant {
    /// Builds the interpolant for `rule`, which lives on `[a, b]`.
    pub fn for_rule(rule: &GaussLegendre, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let bary = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(j, (&x, &w))| {
                let t = (x - mid) / half;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - t * t) * (w / half)).sqrt()
            })
            .collect();
        Self {
            nodes: rule.nodes.clone(),
            bary,
        }
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &wj), &fj) in self.nodes.iter().zip(&self.bary).zip(values) {
            let diff = x - xj;
            if diff == 0.0 {
                return fj;
            }
            let t = wj / diff;
            num += t * fj;
            den += t;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let rule = GaussLegendre::new(n);
            for p in 0..(2 * n) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let got = rule.integrate(|x| x.powi(p as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_weights_sum_to_length() {
        let rule = GaussLegendre::on_interval(128, 0.0, 0.6);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 0.6).abs() < 1e-13);
    }

    #[test]
    fn two_point_rule_matches_textbook() {
        let rule = GaussLegendre::new(2);
        let g = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[0] + g).abs() < 1e-15);
        assert!((rule.nodes[1] - g).abs() < 1e-15);
        assert!((rule.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn barycentric_reproduces_smooth_functions() {
        let rule = GaussLegendre::on_interval(40, 0.0, 2.0);
        let interp = BarycentricInterpolant::for_rule(&rule, 0.0, 2.0);
        let values: Vec<f64> = rule.nodes.iter().map(|x| (3.0 * x).sin()).collect();
        for &x in &[0.0, 0.1234, 1.0, 1.999, 2.0] {
            let got = interp.eval(&values, x);
            assert!((got - (3.0 * x).sin()).abs() < 1e-12, "x={x}");
        }
    }
}
