//! Deterministic Gauss–Legendre quadrature over the four-dimensional
//! Brillouin zone and over the flow parameter `λ = 1/a`.

use std::f64::consts::PI;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QuadratureError;
use crate::lattice::Momentum4;

/// `c` with `e^{-c²} = 1e-18`; beyond `|k̂| = c/a` a damped integrand is negligible.
pub const DAMPING_CUTOFF: f64 = 6.437_898_078_868_042;

/// Inner panel edge of the damped layout, in units of `1/a` on the `k̂` axis.
const DAMPED_SPLIT: f64 = 2.5;

/// Per-axis node cap `order·2^depth`.
pub const MAX_AXIS_NODES: usize = 4096;

/// Smallest relative error ever reported by [`integrate_bz`].
const RESOLUTION_FLOOR: f64 = 1e-12;

/// `(2π)^{-4}`, the measure normalization of zone integrals.
pub const MEASURE: f64 = 1.0 / (16.0 * PI * PI * PI * PI);

/// Value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending and exactly mirror-symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            deriv = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                deriv = legendre_with_derivative(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn legendre_values(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(x);
    }
    for k in 2..=n_max {
        let next = ((2 * k - 1) as f64 * x * out[k - 1] - (k - 1) as f64 * out[k - 2]) / k as f64;
        out.push(next);
    }
    out
}

/// Composite Gauss–Legendre rule on consecutive panels.
fn composite(edges: &[f64], orders: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for ((lo, hi), &order) in edges.iter().tuple_windows().zip(orders) {
        let (x, w) = gauss_legendre(order);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        nodes.extend(x.iter().map(|t| mid + half * t));
        weights.extend(w.iter().map(|v| half * v));
    }
    (nodes, weights)
}

/// Resolution and refinement settings for zone integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Each base panel is split into `2^depth` sub-panels.
    pub depth: u32,
    /// Scale `a` of the `e^{-a² k̂²}` damping carried by the integrand.
    pub damping: Option<f64>,
    /// Relative tolerance for adaptive refinement.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: 8,
            depth: 0,
            damping: None,
            tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(order: usize, depth: u32, damping: Option<f64>, tolerance: f64) -> Result<Self, QuadratureError> {
        let spec = QuadratureSpec {
            order,
            depth,
            damping,
            tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.order < 2 {
            return Err(QuadratureError::Spec(format!("order {} below 2", self.order)));
        }
        if self.axis_nodes_bound() > MAX_AXIS_NODES {
            return Err(QuadratureError::Spec(format!(
                "order·2^depth = {} exceeds {MAX_AXIS_NODES}",
                self.axis_nodes_bound()
            )));
        }
        if !(self.tolerance >= 1e-12) {
            return Err(QuadratureError::Spec(format!(
                "tolerance {} below 1e-12",
                self.tolerance
            )));
        }
        if let Some(a) = self.damping {
            if !(a.is_finite() && a > 0.0) {
                return Err(QuadratureError::Spec(format!("damping scale {a} not positive")));
            }
        }
        Ok(())
    }

    fn axis_nodes_bound(&self) -> usize {
        self.order
            .saturating_mul(1usize.checked_shl(self.depth).unwrap_or(usize::MAX))
    }

    pub fn with_damping(self, damping: Option<f64>) -> Self {
        QuadratureSpec { damping, ..self }
    }

    pub fn with_depth(self, depth: u32) -> Self {
        QuadratureSpec { depth, ..self }
    }
}

/// One-dimensional rule covering `[-π/a0, π/a0]`, mirror-symmetric about zero.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// Panel layout for the given spacing and spec.
    ///
    /// With a damping hint the panels follow the `k̂` variable: edges at
    /// `t/a` for `t` in `{2.5, c}` mapped back through the arcsine, each split
    /// `2^depth` times, plus one coarse panel out to the zone edge. When
    /// `c/a` exceeds the largest lattice momentum `2/a0` the edges are scaled
    /// down so the last one lands on the zone edge.
    pub fn new(a0: f64, spec: &QuadratureSpec) -> Self {
        let zone = PI / a0;
        let split = 1usize << spec.depth;
        let mut edges = vec![0.0];
        let mut orders = Vec::new();
        match spec.damping {
            Some(a) => {
                let t_max = 2.0 * a / a0;
                let saturated = t_max <= DAMPING_CUTOFF;
                let scale = if saturated { t_max / DAMPING_CUTOFF } else { 1.0 };
                let base = [0.0, DAMPED_SPLIT * scale, DAMPING_CUTOFF * scale];
                for (lo, hi) in base.iter().tuple_windows() {
                    for s in 1..=split {
                        let t = lo + (hi - lo) * s as f64 / split as f64;
                        let ratio = t * a0 / (2.0 * a);
                        let k = if ratio >= 1.0 || (saturated && s == split && *hi == base[2]) {
                            zone
                        } else {
                            (2.0 / a0) * ratio.asin()
                        };
                        edges.push(k);
                        orders.push(spec.order);
                    }
                }
                let last = *edges.last().expect("non-empty edges");
                if last < zone * (1.0 - 1e-12) {
                    edges.push(zone);
                    orders.push(2);
                } else {
                    *edges.last_mut().expect("non-empty edges") = zone;
                }
            }
            None => {
                let panels = 2 * split;
                for s in 1..=panels {
                    edges.push(zone * s as f64 / panels as f64);
                    orders.push(spec.order);
                }
            }
        }
        let (pos, wpos) = composite(&edges, &orders);
        let mut nodes: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
        nodes.extend(&pos);
        let mut weights: Vec<f64> = wpos.iter().rev().copied().collect();
        weights.extend(&wpos);
        AxisRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on the positive half axis.
    pub fn positive_half(&self) -> (&[f64], &[f64]) {
        let h = self.nodes.len() / 2;
        (&self.nodes[h..], &self.weights[h..])
    }

    /// `Σ_i w_i g(x_i)`.
    pub fn sum(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Whether an integrand is invariant under all signed coordinate permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    Hypercubic,
}

/// Tensor-product rule on the zone, carrying the `(2π)^{-4}` measure.
#[derive(Clone, Debug, PartialEq)]
pub struct BzRule {
    pub a0: f64,
    pub axis: AxisRule,
}

impl BzRule {
    pub fn new(a0: f64, spec: &QuadratureSpec) -> Self {
        BzRule {
            a0,
            axis: AxisRule::new(a0, spec),
        }
    }

    pub fn node_count(&self) -> usize {
        self.axis.len().pow(4)
    }

    /// Full tensor sum. Rows of the first axis run in parallel and are
    /// reduced in index order, so the result does not depend on the pool.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Momentum4) -> f64 + Sync,
    {
        let x = &self.axis.nodes;
        let w = &self.axis.weights;
        let n = x.len();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = 0.0;
                for j in 0..n {
                    let mut plane = 0.0;
                    for k in 0..n {
                        let mut line = 0.0;
                        for l in 0..n {
                            line += w[l] * f(&Momentum4([x[i], x[j], x[k], x[l]]));
                        }
                        plane += w[k] * line;
                    }
                    row += w[j] * plane;
                }
                w[i] * row
            })
            .collect();
        MEASURE * rows.iter().sum::<f64>()
    }

    /// Sum over the sorted positive octant with orbit multiplicities; exact
    /// for integrands invariant under signed coordinate permutations.
    pub fn integrate_symmetric<F>(&self, f: F) -> f64
    where
        F: Fn(&Momentum4) -> f64 + Sync,
    {
        let (x, w) = self.axis.positive_half();
        let n = x.len();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = 0.0;
                for j in i..n {
                    let mut plane = 0.0;
                    for k in j..n {
                        let mut line = 0.0;
                        for l in k..n {
                            let mult = 16.0 * orbit_permutations(i, j, k, l);
                            line += mult * w[l] * f(&Momentum4([x[i], x[j], x[k], x[l]]));
                        }
                        plane += w[k] * line;
                    }
                    row += w[j] * plane;
                }
                w[i] * row
            })
            .collect();
        MEASURE * rows.iter().sum::<f64>()
    }

    /// Integral of `Π_μ g(k_μ)`.
    pub fn integrate_separable(&self, g: impl Fn(f64) -> f64) -> f64 {
        MEASURE * self.axis.sum(g).powi(4)
    }

    pub fn integrate_with<F>(&self, f: F, symmetry: Symmetry) -> f64
    where
        F: Fn(&Momentum4) -> f64 + Sync,
    {
        match symmetry {
            Symmetry::None => self.integrate(f),
            Symmetry::Hypercubic => self.integrate_symmetric(f),
        }
    }
}

/// Number of distinct orderings of a sorted index tuple.
fn orbit_permutations(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let idx = [i, j, k, l];
    let mut denom = 1.0;
    let mut run = 1.0;
    for t in 1..4 {
        if idx[t] == idx[t - 1] {
            run += 1.0;
            denom *= run;
        } else {
            run = 1.0;
        }
    }
    24.0 / denom
}

/// Zone integral `∫ d⁴k/(2π)⁴ f(k)` refined by depth until two successive
/// rules agree to the relative tolerance.
pub fn integrate_bz<F>(f: F, a0: f64, spec: &QuadratureSpec) -> Result<Estimate, QuadratureError>
where
    F: Fn(&Momentum4) -> f64 + Sync,
{
    integrate_bz_with(f, a0, spec, Symmetry::None)
}

/// As [`integrate_bz`], optionally exploiting hypercubic invariance of the integrand.
pub fn integrate_bz_with<F>(
    f: F,
    a0: f64,
    spec: &QuadratureSpec,
    symmetry: Symmetry,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(&Momentum4) -> f64 + Sync,
{
    spec.validate()?;
    if !(a0.is_finite() && a0 > 0.0) {
        return Err(QuadratureError::Spec(format!("lattice spacing {a0} not positive")));
    }
    let mut depth = spec.depth;
    let mut coarse = BzRule::new(a0, &spec.with_depth(depth)).integrate_with(&f, symmetry);
    loop {
        let finer_spec = spec.with_depth(depth + 1);
        if finer_spec.axis_nodes_bound() > MAX_AXIS_NODES {
            return Err(QuadratureError::NoConvergence {
                estimate: f64::NAN,
                tolerance: spec.tolerance,
            });
        }
        let fine = BzRule::new(a0, &finer_spec).integrate_with(&f, symmetry);
        // The difference bounds the coarse rule; the floor covers what a
        // single refinement step cannot resolve.
        let error = (fine - coarse).abs().max(RESOLUTION_FLOOR * fine.abs());
        if error <= spec.tolerance * fine.abs() || fine == coarse {
            return Ok(Estimate { value: fine, error });
        }
        depth += 1;
        if spec.order.saturating_mul(1 << (depth + 1)) > MAX_AXIS_NODES {
            return Err(QuadratureError::NoConvergence {
                estimate: error,
                tolerance: spec.tolerance * fine.abs(),
            });
        }
        coarse = fine;
    }
}

/// Composite Gauss rule on `[0, 1/a0]` with panels refined geometrically
/// toward both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    edges: Vec<f64>,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Panel count and order of a [`LambdaGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaLayout {
    pub panels: usize,
    pub order: usize,
}

impl Default for LambdaLayout {
    fn default() -> Self {
        LambdaLayout { panels: 16, order: 8 }
    }
}

impl LambdaGrid {
    /// Panels: `[0, m/8]`, geometric panels up to `λ_max/2`, then
    /// `[λ_max/2, 3λ_max/4]` and `[3λ_max/4, λ_max]`.
    pub fn new(lambda_max: f64, mass: f64, layout: LambdaLayout) -> Result<Self, QuadratureError> {
        let LambdaLayout { panels, order } = layout;
        if panels < 4 || order < 2 || panels * order < 8 {
            return Err(QuadratureError::Spec(format!(
                "lambda grid needs at least 4 panels, order 2 and 8 nodes (got {panels} x {order})"
            )));
        }
        if !(lambda_max.is_finite() && lambda_max > 0.0 && mass > 0.0) {
            return Err(QuadratureError::Spec("lambda range must be positive".into()));
        }
        let top = 0.5 * lambda_max;
        let low = (mass / 8.0).min(top / 8.0);
        let geometric = panels - 3;
        let ratio = (top / low).powf(1.0 / geometric as f64);
        let mut edges = vec![0.0, low];
        for s in 1..geometric {
            edges.push(low * ratio.powi(s as i32));
        }
        edges.extend([top, 0.75 * lambda_max, lambda_max]);
        Self::from_edges(edges, order)
    }

    /// Grid from explicit panel edges starting at 0.
    pub fn from_edges(edges: Vec<f64>, order: usize) -> Result<Self, QuadratureError> {
        let increasing = edges.iter().tuple_windows().all(|(a, b)| b > a);
        if edges.len() < 2 || edges[0] != 0.0 || !increasing || order < 2 || (edges.len() - 1) * order < 8 {
            return Err(QuadratureError::Spec(
                "lambda grid edges must start at 0 and increase".into(),
            ));
        }
        let orders = vec![order; edges.len() - 1];
        let (nodes, weights) = composite(&edges, &orders);
        Ok(LambdaGrid {
            edges,
            order,
            nodes,
            weights,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        *self.edges.last().expect("grid has edges")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Rule for `∫_{lo}^{hi}`: grid panels inside the interval are reused,
    /// panels cut by an endpoint get a fresh rule of the same order on the
    /// clipped piece. A reversed interval yields negated weights.
    pub fn rule(&self, lo: f64, hi: f64) -> Result<LambdaRule, QuadratureError> {
        let max = self.lambda_max();
        let slack = 1e-12 * max;
        if !(lo >= -slack && hi >= -slack && lo <= max + slack && hi <= max + slack) {
            return Err(QuadratureError::Interval { lo, hi, max });
        }
        let (a, b, sign) = if lo <= hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
        let a = a.clamp(0.0, max);
        let b = b.clamp(0.0, max);
        let (ref_x, ref_w) = gauss_legendre(self.order);
        let mut panels = Vec::new();
        for (p, (&elo, &ehi)) in self.edges.iter().tuple_windows().enumerate() {
            let clo = elo.max(a);
            let chi = ehi.min(b);
            if chi <= clo {
                continue;
            }
            let range = p * self.order..(p + 1) * self.order;
            if clo == elo && chi == ehi {
                panels.push(RulePanel {
                    half_width: 0.5 * (ehi - elo),
                    nodes: self.nodes[range.clone()].to_vec(),
                    weights: self.weights[range].iter().map(|w| sign * w).collect(),
                });
            } else {
                let half = 0.5 * (chi - clo);
                let mid = 0.5 * (chi + clo);
                panels.push(RulePanel {
                    half_width: half,
                    nodes: ref_x.iter().map(|t| mid + half * t).collect(),
                    weights: ref_w.iter().map(|w| sign * half * w).collect(),
                });
            }
        }
        Ok(LambdaRule {
            panels,
            reference: ref_x,
            reference_weights: ref_w,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
struct RulePanel {
    half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Nodes and weights of one λ-integral, with a spectral tail error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaRule {
    panels: Vec<RulePanel>,
    reference: Vec<f64>,
    reference_weights: Vec<f64>,
}

impl LambdaRule {
    /// All nodes in panel order.
    pub fn nodes(&self) -> Vec<f64> {
        self.panels.iter().flat_map(|p| p.nodes.iter().copied()).collect()
    }

    /// Signed weights matching [`Self::nodes`].
    pub fn weights(&self) -> Vec<f64> {
        self.panels.iter().flat_map(|p| p.weights.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.panels.iter().map(|p| p.nodes.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weighted sum of `values` (given in [`Self::nodes`] order). The error
    /// estimate adds, per panel, the two highest Legendre coefficients of
    /// the interpolant times the panel width.
    pub fn integrate(&self, values: &[f64]) -> Estimate {
        assert_eq!(values.len(), self.len(), "one value per node");
        let n = self.reference.len();
        let basis: Vec<Vec<f64>> = self.reference.iter().map(|&x| legendre_values(n - 1, x)).collect();
        let mut value = 0.0;
        let mut error = 0.0;
        let mut offset = 0;
        for panel in &self.panels {
            let vals = &values[offset..offset + panel.nodes.len()];
            offset += panel.nodes.len();
            value += panel.weights.iter().zip(vals).map(|(w, v)| w * v).sum::<f64>();
            let coeff = |k: usize| -> f64 {
                let s: f64 = (0..n).map(|i| self.reference_weights[i] * vals[i] * basis[i][k]).sum();
                (2 * k + 1) as f64 / 2.0 * s
            };
            error += panel.half_width * spectral_tail(&coeff, n);
        }
        Estimate { value, error }
    }

    pub fn integrate_fn(&self, g: impl Fn(f64) -> f64) -> Estimate {
        let values: Vec<f64> = self.nodes().into_iter().map(g).collect();
        self.integrate(&values)
    }
}

/// Error guess for an `n`-point Gauss rule from the decay of the top
/// Legendre coefficients: same-parity ratios give a per-degree decay rate
/// `r`, and the unresolved remainder is taken as the top coefficients
/// damped by `r^n`. Without visible decay the top coefficients themselves
/// are returned.
fn spectral_tail(coeff: &dyn Fn(usize) -> f64, n: usize) -> f64 {
    let top = coeff(n - 1).abs() + if n >= 2 { coeff(n - 2).abs() } else { 0.0 };
    if n < 5 {
        return top;
    }
    let ratio = |k: usize| {
        let lower = coeff(k - 2).abs();
        if lower == 0.0 {
            if coeff(k).abs() == 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            coeff(k).abs() / lower
        }
    };
    let r = ratio(n - 1).max(ratio(n - 2)).sqrt();
    if r >= 0.5 {
        top
    } else {
        top * r.powi(n as i32)
    }
}

/// `∫_{lo}^{hi} g(λ) dλ` on the sub-grid covering the interval; signed.
pub fn integrate_lambda(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: &LambdaGrid,
) -> Result<Estimate, QuadratureError> {
    Ok(grid.rule(lo, hi)?.integrate_fn(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::hat_momentum_sq;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn measure_constant() {
        assert_relative_eq!(MEASURE, (2.0 * PI).powi(-4), max_relative = 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [2, 3, 7, 8, 12, 33] {
            let (x, w) = gauss_legendre(n);
            for d in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} d={d}: {q} vs {exact}");
            }
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
                assert_eq!(w[i], w[n - 1 - i]);
            }
        }
    }

    #[test]
    fn constant_integrates_to_inverse_volume() {
        for damping in [None, Some(0.4), Some(0.02)] {
            let spec = QuadratureSpec::new(6, 0, damping, 1e-10).unwrap();
            let rule = BzRule::new(0.125, &spec);
            let q = rule.integrate_symmetric(|_| 1.0);
            assert_relative_eq!(q, 0.125f64.powi(-4), max_relative = 1e-12);
            let s = rule.integrate_separable(|_| 1.0);
            assert_relative_eq!(s, 0.125f64.powi(-4), max_relative = 1e-12);
        }
    }

    #[test]
    fn continuum_gaussian() {
        // Zone truncation is negligible for a/a0 ≥ 20.
        let a0 = 0.01;
        for a in [0.2, 0.5, 2.0] {
            let spec = QuadratureSpec::new(10, 0, Some(a), 1e-10).unwrap();
            let rule = BzRule::new(a0, &spec);
            let q = rule.integrate_separable(|k| (-a * a * k * k).exp());
            assert_relative_eq!(q, 1.0 / (16.0 * PI * PI * a.powi(4)), max_relative = 1e-8);
        }
    }

    #[test]
    fn lattice_gaussian_matches_bessel_product() {
        // Per axis ∫ e^{-a² k̂²} dk = (2π/a0) e^{-x} I0(x), x = 2a²/a0².
        fn scaled_i0(x: f64) -> f64 {
            // e^{-x} I0(x) by the trapezoidal rule on the periodic integrand
            let n = 2000;
            (0..n)
                .map(|i| (x * ((2.0 * PI * i as f64 / n as f64).cos() - 1.0)).exp())
                .sum::<f64>()
                / n as f64
        }
        let a0 = 0.125;
        for r in [1.0, 2.0, 3.2, 5.0, 20.0] {
            let a = r * a0;
            let spec = QuadratureSpec::new(12, 0, Some(a), 1e-10).unwrap();
            let axis = AxisRule::new(a0, &spec);
            let q = axis.sum(|k| (-a * a * crate::lattice::hat_component_sq(k, a0)).exp());
            let exact = 2.0 * PI / a0 * scaled_i0(2.0 * a * a / (a0 * a0));
            assert_relative_eq!(q, exact, max_relative = 5e-5);
        }
    }

    #[test]
    fn symmetric_and_full_sums_agree() {
        let a0 = 0.25;
        let spec = QuadratureSpec::new(4, 0, Some(0.6), 1e-10).unwrap();
        let rule = BzRule::new(a0, &spec);
        let f = |k: &Momentum4| {
            let s = hat_momentum_sq(k, a0);
            (-0.36 * s).exp() / (s + 1.0)
        };
        let full = rule.integrate(f);
        let sym = rule.integrate_symmetric(f);
        assert_relative_eq!(full, sym, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_refinement_reports_estimate() {
        let a0 = 0.125;
        let a = 0.5;
        let spec = QuadratureSpec::new(4, 0, Some(a), 1e-9).unwrap();
        let f = |k: &Momentum4| {
            let s = hat_momentum_sq(k, a0);
            (-a * a * (s + 1.0)).exp() / (s + 1.0)
        };
        let est = integrate_bz_with(f, a0, &spec, Symmetry::Hypercubic).unwrap();
        assert!(est.error <= 1e-9 * est.value.abs());
        let doubled = integrate_bz_with(f, a0, &QuadratureSpec { order: 8, ..spec }, Symmetry::Hypercubic).unwrap();
        assert!((doubled.value - est.value).abs() <= est.error.max(1e-14 * est.value.abs()));
        let reference = BzRule::new(
            a0,
            &QuadratureSpec {
                order: 24,
                depth: 1,
                ..spec
            },
        )
        .integrate_symmetric(f);
        assert!((reference - est.value).abs() <= 1e-9 * reference);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1, 0, None, 1e-8).is_err());
        assert!(QuadratureSpec::new(8, 10, None, 1e-8).is_err());
        assert!(QuadratureSpec::new(8, 2, None, 1e-13).is_err());
        assert!(QuadratureSpec::new(8, 2, Some(-1.0), 1e-8).is_err());
    }

    #[test]
    fn lambda_grid_shape() {
        let grid = LambdaGrid::new(512.0, 1.0, LambdaLayout::default()).unwrap();
        assert_eq!(grid.edges()[0], 0.0);
        assert_eq!(grid.lambda_max(), 512.0);
        assert_eq!(grid.nodes().len(), 128);
        assert!(grid.nodes().iter().tuple_windows().all(|(a, b)| b > a));
        assert!(LambdaGrid::new(8.0, 1.0, LambdaLayout { panels: 3, order: 8 }).is_err());
    }

    #[test]
    fn lambda_integrals() {
        let grid = LambdaGrid::new(8.0, 1.0, LambdaLayout::default()).unwrap();
        let one = integrate_lambda(|_| 1.0, 0.0, 8.0, &grid).unwrap();
        assert_relative_eq!(one.value, 8.0, max_relative = 1e-15);
        // ∫_0^{1/a} -2 λ^{-3} e^{-M/λ²} dλ = -e^{-M a²}/M
        let kernel = |l: f64| {
            if l == 0.0 {
                0.0
            } else {
                -2.0 / (l * l * l) * (-1.0 / (l * l)).exp()
            }
        };
        let q = integrate_lambda(kernel, 0.0, 1.0, &grid).unwrap();
        assert_relative_eq!(q.value, -(-1.0_f64).exp(), max_relative = 1e-10);
        assert!(q.error < 1e-6);
        let forward = integrate_lambda(kernel, 0.3, 5.0, &grid).unwrap();
        let backward = integrate_lambda(kernel, 5.0, 0.3, &grid).unwrap();
        assert_eq!(forward.value, -backward.value);
        assert!(integrate_lambda(kernel, 0.0, 9.0, &grid).is_err());
    }

    proptest! {
        #[test]
        fn hypercubic_permutation_leaves_tensor_sum_unchanged(
            c in prop::array::uniform4(-3.0..3.0f64),
            idx in 0usize..384,
        ) {
            let a0 = 0.5;
            let spec = QuadratureSpec::new(3, 0, Some(1.0), 1e-10).unwrap();
            let rule = BzRule::new(a0, &spec);
            let s = crate::lattice::Rotation4::hypercubic_group()[idx];
            let f = |k: &Momentum4| {
                let q = *k + Momentum4(c);
                (-hat_momentum_sq(&q, a0)).exp()
            };
            let plain = rule.integrate(f);
            let permuted = rule.integrate(|k: &Momentum4| f(&s.apply(k)));
            prop_assert!((plain - permuted).abs() <= 1e-12 * plain.abs());
        }
    }
}
