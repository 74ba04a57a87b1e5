//! One-loop integrals on the unrotated lattice, evaluated axis by axis.
//!
//! Writing the propagator as `C(M) = ∫_{a0²}^{a²} e^{-tM} dt` turns the
//! kernel-propagator bubble into a one-dimensional `t` integral over
//! products of four single-axis sums, because both `K` and `e^{-tM}` factor
//! over components. The `k` nodes are those of the tensor rule, so the two
//! evaluations agree up to the `t` quadrature.

use crate::lattice::{LegOrders, Momentum4};
use crate::propagator::component_derivative;
use crate::quadrature::{gauss_legendre, AxisRule, MEASURE};

const T_PANEL_LOG_WIDTH: f64 = std::f64::consts::LN_2;
const T_PANEL_ORDER: usize = 12;

/// Axis sums weighted by the flow kernel at one flow scale.
#[derive(Clone, Debug)]
pub(crate) struct SeparableLoop {
    a0: f64,
    m: f64,
    nodes: Vec<f64>,
    damped: Vec<f64>,
    prefactor: f64,
    t_nodes: Vec<f64>,
    t_weights: Vec<f64>,
}

impl SeparableLoop {
    pub(crate) fn new(axis: &AxisRule, a0: f64, a: f64, m: f64) -> Self {
        let a2 = a * a;
        let damped = axis
            .nodes
            .iter()
            .zip(&axis.weights)
            .map(|(&x, &w)| w * (-a2 * component_derivative(0, x, a0)).exp())
            .collect();
        let (t_nodes, t_weights) = log_panels(a0 * a0, a2);
        SeparableLoop {
            a0,
            m,
            nodes: axis.nodes.clone(),
            damped,
            prefactor: MEASURE * -2.0 * a2 * a * (-a2 * m * m).exp(),
            t_nodes,
            t_weights,
        }
    }

    /// `∫_k K(k)`.
    pub(crate) fn tadpole(&self) -> f64 {
        let s: f64 = self.damped.iter().sum();
        self.prefactor * s.powi(4)
    }

    /// `∂^w_P ∫_k K(k) C(k + P)`.
    pub(crate) fn bubble(&self, shift: &Momentum4, w: LegOrders) -> f64 {
        if self.t_nodes.is_empty() {
            return 0.0;
        }
        let per_axis: Vec<Vec<f64>> = (0..4)
            .map(|mu| self.axis_profile(shift[mu], w.0[mu] as usize))
            .collect();
        self.combine([&per_axis[0], &per_axis[1], &per_axis[2], &per_axis[3]])
    }

    /// `∫_k K(k) C(k + P)` from the four axis profiles of `P`.
    pub(crate) fn combine(&self, profiles: [&[f64]; 4]) -> f64 {
        let mut total = 0.0;
        for (j, (&t, &wt)) in self.t_nodes.iter().zip(&self.t_weights).enumerate() {
            total +=
                wt * (-t * self.m * self.m).exp() * profiles[0][j] * profiles[1][j] * profiles[2][j] * profiles[3][j];
        }
        self.prefactor * total
    }

    /// `Σ_i damped_i ∂^r_y e^{-t s(x_i + y)}` at every `t` node.
    pub(crate) fn axis_profile(&self, shift: f64, order: usize) -> Vec<f64> {
        let shells: Vec<[f64; 5]> = self
            .nodes
            .iter()
            .map(|&x| {
                let y = x + shift;
                let mut d = [0.0; 5];
                for (k, slot) in d.iter_mut().enumerate().take(order + 1) {
                    *slot = component_derivative(k, y, self.a0);
                }
                d
            })
            .collect();
        self.t_nodes
            .iter()
            .map(|&t| {
                shells
                    .iter()
                    .zip(&self.damped)
                    .map(|(s, &dw)| dw * (-t * s[0]).exp() * bell(order, t, s))
                    .sum()
            })
            .collect()
    }
}

/// `e^{t s} d^r/dy^r e^{-t s(y)}` from the derivatives of `s`.
fn bell(order: usize, t: f64, s: &[f64; 5]) -> f64 {
    let u = |k: usize| -t * s[k];
    match order {
        0 => 1.0,
        1 => u(1),
        2 => u(1) * u(1) + u(2),
        3 => u(1).powi(3) + 3.0 * u(1) * u(2) + u(3),
        4 => u(1).powi(4) + 6.0 * u(1) * u(1) * u(2) + 4.0 * u(1) * u(3) + 3.0 * u(2) * u(2) + u(4),
        _ => unreachable!("axis derivative order {order} beyond the cap"),
    }
}

/// Gauss rule for `∫_{lo}^{hi} g(t) dt` in the variable `ln t`, with the
/// Jacobian folded into the weights. Empty when `hi <= lo`.
fn log_panels(lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    if hi <= lo {
        return (Vec::new(), Vec::new());
    }
    let (u0, u1) = (lo.ln(), hi.ln());
    let panels = ((u1 - u0) / T_PANEL_LOG_WIDTH).ceil().max(1.0) as usize;
    let width = (u1 - u0) / panels as f64;
    let (x, w) = gauss_legendre(T_PANEL_ORDER);
    let mut nodes = Vec::with_capacity(panels * T_PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * T_PANEL_ORDER);
    for p in 0..panels {
        let mid = u0 + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            let t = (mid + 0.5 * width * xi).exp();
            nodes.push(t);
            weights.push(0.5 * width * wi * t);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FlowScale, LatticeParams};
    use crate::propagator::{kernel_value, propagator_derivative, propagator_value};
    use crate::quadrature::{BzRule, QuadratureSpec};

    fn setup(a0: f64, a: f64, order: usize) -> (BzRule, SeparableLoop, LatticeParams) {
        let spec = QuadratureSpec::default().with_damping(Some(a));
        let spec = QuadratureSpec { order, ..spec };
        let rule = BzRule::new(a0, &spec);
        let sep = SeparableLoop::new(&rule.axis, a0, a, 1.0);
        let params = LatticeParams::new(a0, FlowScale::Finite(a), 1.0, 1.0).unwrap();
        (rule, sep, params)
    }

    #[test]
    fn log_panels_integrate_powers() {
        let (t, w) = log_panels(1e-4, 3.0);
        let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t.sqrt()).sum();
        let exact = 2.0 / 3.0 * (3.0f64.powf(1.5) - 1e-6);
        assert!((s - exact).abs() < 1e-13 * exact);
        assert!(log_panels(2.0, 2.0).0.is_empty());
    }

    #[test]
    fn tadpole_matches_tensor_sum() {
        let (rule, sep, params) = setup(0.25, 0.9, 6);
        let tensor = rule.integrate(|k| kernel_value(&params, k, None));
        assert!((sep.tadpole() - tensor).abs() < 1e-13 * tensor.abs());
    }

    #[test]
    fn bubble_matches_tensor_sum() {
        for &(a0, a) in &[(0.25, 0.3), (0.25, 2.0), (0.125, 0.6), (0.0625, 4.0)] {
            let (rule, sep, params) = setup(a0, a, 4);
            let shift = Momentum4::new(0.7, -0.4, 1.9, 0.2);
            let tensor = rule.integrate(|k| kernel_value(&params, k, None) * propagator_value(&params, &(*k + shift)));
            let fast = sep.bubble(&shift, LegOrders::NONE);
            assert!(
                (fast - tensor).abs() < 1e-12 * tensor.abs(),
                "a0={a0} a={a}: {fast} vs {tensor}"
            );
        }
    }

    #[test]
    fn bubble_derivatives_match_tensor_sum() {
        let (rule, sep, params) = setup(0.25, 0.7, 4);
        let shift = Momentum4::new(0.3, 1.1, -0.8, 0.5);
        for w in [
            LegOrders([1, 0, 0, 0]),
            LegOrders([2, 0, 0, 0]),
            LegOrders([1, 1, 0, 0]),
            LegOrders([0, 1, 2, 1]),
            LegOrders([0, 0, 0, 4]),
        ] {
            let tensor = rule.integrate(|k| {
                kernel_value(&params, k, None) * propagator_derivative(&params, &(*k + shift), w, None).unwrap()
            });
            let fast = sep.bubble(&shift, w);
            let scale = sep.bubble(&shift, LegOrders::NONE).abs();
            assert!((fast - tensor).abs() < 1e-11 * scale, "{w:?}: {fast} vs {tensor}");
        }
    }
}
