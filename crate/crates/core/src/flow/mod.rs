//! The perturbative flow hierarchy: right-hand sides, counterterm shooting
//! and evaluation of the coefficient functions `L_{l,n}` at any flow scale,
//! on the plain or on a rotated lattice.
//!
//! Every evaluation is a plain λ-quadrature
//! `L_{l,n}(a) = bare + ∫_{1/a0}^{1/a} rhs dλ`, since the right-hand side at
//! order `(l,n)` only involves lower orders. Lower-order functions enter in
//! two ways: scalars that do not depend on momenta (`L_{0,4} = f` and the
//! one-loop mass term) and tree or one-loop functions inserted under the
//! loop integral, which are expanded into tadpoles and bubbles.

mod channels;
mod separable;
mod two_loop;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, LatticeError, QuadratureError, ScopeError};
use crate::lattice::{
    hat_momentum_sq, reduce_to_first_zone, FlowScale, LatticeParams, LegOrders, Momentum4, MultiIndex, Rotation4,
};
use crate::propagator::{kernel_value, profile_derivative, propagator_derivative, KernelRequest, Profile};
use crate::quadrature::{BzRule, Estimate, LambdaGrid, LambdaLayout, QuadratureSpec};

pub use channels::{rsy_channels, Channel, ChannelDecomposition};
pub use two_loop::{MemoGrid, TwoLoopResult};

use separable::SeparableLoop;

/// Highest total momentum derivative accepted by [`FlowSolver::evaluate_derivative`].
pub const MAX_FLOW_DERIVATIVE: usize = 2;

/// Momentum conservation tolerance in units of the reciprocal lattice period.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Loop order and leg count of a coefficient function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CasIndex {
    pub l: usize,
    pub n: usize,
}

impl CasIndex {
    pub const fn new(l: usize, n: usize) -> Self {
        CasIndex { l, n }
    }

    /// Functions that vanish identically: odd leg counts and the tree-level
    /// two-point function.
    pub fn is_zero(&self) -> bool {
        self.n % 2 == 1 || (self.l == 0 && self.n == 2)
    }

    pub fn check(&self) -> Result<(), ScopeError> {
        let odd = self.n % 2 == 1 && self.n <= 5 && self.l <= 2;
        let known = matches!((self.l, self.n), (0, 2) | (0, 4) | (0, 6) | (1, 2) | (1, 4) | (2, 2));
        if odd || known {
            Ok(())
        } else {
            Err(ScopeError::Function { l: self.l, n: self.n })
        }
    }
}

/// Optional lattice rotation applied inside every kernel and bare term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RotationContext {
    pub rotation: Option<Rotation4>,
}

impl RotationContext {
    pub fn plain() -> Self {
        RotationContext { rotation: None }
    }

    pub fn rotated(rotation: Rotation4) -> Self {
        RotationContext {
            rotation: Some(rotation),
        }
    }
}

/// Counterterms of one loop order: mass, wave function and coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountertermSet {
    pub l: usize,
    pub d: f64,
    pub b: f64,
    /// Not determined at two loops, where the four-point flow is out of scope.
    pub c: Option<f64>,
}

impl CountertermSet {
    pub fn zero(l: usize) -> Self {
        CountertermSet {
            l,
            d: 0.0,
            b: 0.0,
            c: Some(0.0),
        }
    }
}

/// How one-loop integrals on the unrotated lattice are summed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopEvaluation {
    /// Axis-by-axis sums through a Schwinger parameter.
    Separable,
    /// Plain tensor sums, as on the rotated lattice.
    Tensor,
}

/// Resolution of the loop and flow quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub bz_order: usize,
    pub bz_depth: u32,
    pub lambda: LambdaLayout,
    pub loops: LoopEvaluation,
    /// Points per axis of the two-loop interpolation table; odd.
    pub memo_points: usize,
    /// Largest accepted two-loop interpolation error, relative to the
    /// two-loop mass counterterm.
    pub memo_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            bz_order: 12,
            bz_depth: 1,
            lambda: LambdaLayout::default(),
            loops: LoopEvaluation::Separable,
            memo_points: 13,
            memo_tolerance: 0.05,
        }
    }
}

impl SolverConfig {
    /// About 28 nodes per axis: affordable for tensor sums on the rotated
    /// lattice, at roughly 1e-6 relative accuracy.
    pub fn coarse() -> Self {
        SolverConfig {
            bz_order: 6,
            bz_depth: 0,
            ..SolverConfig::default()
        }
    }

    pub(crate) fn bz_spec(&self, a: f64) -> QuadratureSpec {
        QuadratureSpec {
            order: self.bz_order,
            depth: self.bz_depth,
            damping: Some(a),
            ..QuadratureSpec::default()
        }
    }
}

/// Solver for one regulator `(a0, m, f)`; counterterms are computed on first
/// use and cached.
#[derive(Debug)]
pub struct FlowSolver {
    base: LatticeParams,
    config: SolverConfig,
    grid: LambdaGrid,
    counterterms: [OnceLock<Result<CountertermSet, FlowError>>; 3],
    memo: OnceLock<MemoGrid>,
}

impl FlowSolver {
    pub fn new(a0: f64, m: f64, f: f64, config: SolverConfig) -> Result<Self, FlowError> {
        let base = LatticeParams::new(a0, FlowScale::Infinite, m, f)?;
        QuadratureSpec::new(
            config.bz_order,
            config.bz_depth,
            Some(1.0),
            QuadratureSpec::default().tolerance,
        )?;
        if config.memo_points < 5 || config.memo_points.is_multiple_of(2) {
            return Err(QuadratureError::Spec(format!(
                "two-loop table needs an odd number of at least 5 points per axis, got {}",
                config.memo_points
            ))
            .into());
        }
        let grid = LambdaGrid::new(base.lambda_max(), m, config.lambda)?;
        Ok(FlowSolver {
            base,
            config,
            grid,
            counterterms: Default::default(),
            memo: OnceLock::new(),
        })
    }

    /// Solver for the regulator of `params`; the flow scale is ignored.
    pub fn for_params(params: &LatticeParams, config: SolverConfig) -> Result<Self, FlowError> {
        Self::new(params.a0, params.m, params.f, config)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    /// Regulator parameters at flow scale `a`.
    pub fn params(&self, a: FlowScale) -> Result<LatticeParams, FlowError> {
        Ok(self.base.with_scale(a)?)
    }

    pub fn lambda_max(&self) -> f64 {
        self.base.lambda_max()
    }

    /// Counterterms of order `l`, computed once by shooting from `a = ∞`.
    pub fn counterterms(&self, l: usize) -> Result<CountertermSet, FlowError> {
        if l > 2 {
            return Err(ScopeError::Function { l, n: 2 }.into());
        }
        self.counterterms[l].get_or_init(|| self.shoot(l)).clone()
    }

    /// `∂_{1/a} L_{l,n}` at flow parameter `lambda`.
    pub fn rhs(
        &self,
        idx: CasIndex,
        momenta: &[Momentum4],
        lambda: f64,
        ctx: &RotationContext,
    ) -> Result<f64, FlowError> {
        self.rhs_derivative(idx, momenta, &MultiIndex::zero(), lambda, ctx)
    }

    /// `∂^w ∂_{1/a} L_{l,n}` at flow parameter `lambda`.
    pub fn rhs_derivative(
        &self,
        idx: CasIndex,
        momenta: &[Momentum4],
        w: &MultiIndex,
        lambda: f64,
        ctx: &RotationContext,
    ) -> Result<f64, FlowError> {
        self.prepare(idx, momenta, w, ctx)?;
        if !(0.0..=self.lambda_max()).contains(&lambda) {
            return Err(QuadratureError::Interval {
                lo: lambda,
                hi: lambda,
                max: self.lambda_max(),
            }
            .into());
        }
        let pass = self.pass(idx, ctx)?;
        pass.rhs(idx, &Legs::new(momenta, w), lambda)
    }

    /// `L_{l,n}` at flow scale `a`.
    pub fn evaluate(
        &self,
        idx: CasIndex,
        momenta: &[Momentum4],
        a: FlowScale,
        ctx: &RotationContext,
    ) -> Result<Estimate, FlowError> {
        self.evaluate_derivative(idx, momenta, &MultiIndex::zero(), a, ctx)
    }

    /// `∂^w L_{l,n}` at flow scale `a`, differentiated under the λ-integral.
    /// The last leg is the dependent one and may not carry derivatives.
    pub fn evaluate_derivative(
        &self,
        idx: CasIndex,
        momenta: &[Momentum4],
        w: &MultiIndex,
        a: FlowScale,
        ctx: &RotationContext,
    ) -> Result<Estimate, FlowError> {
        self.prepare(idx, momenta, w, ctx)?;
        if w.total() > MAX_FLOW_DERIVATIVE {
            return Err(ScopeError::DerivativeOrder {
                order: w.total(),
                cap: MAX_FLOW_DERIVATIVE,
            }
            .into());
        }
        let params = self.params(a)?;
        if idx.is_zero() {
            return Ok(Estimate::exact(0.0));
        }
        if idx.l == 0 && idx.n == 4 {
            return Ok(Estimate::exact(if w.is_zero() { params.f } else { 0.0 }));
        }
        let counterterms = self.counterterms(idx.l)?;
        let pass = self.pass(idx, ctx)?;
        let legs = Legs::new(momenta, w);
        let bare = pass.bare(idx, &legs, &counterterms)?;
        let flow = pass.integrate(idx, &legs, self.lambda_max(), a.inverse())?;
        Ok(Estimate {
            value: bare + flow.value,
            error: flow.error,
        })
    }

    /// The two-loop two-point function at `p`, with its defect against `p = 0`.
    pub fn two_loop_two_point(&self, p: &Momentum4, a: FlowScale) -> Result<TwoLoopResult, FlowError> {
        let idx = CasIndex::new(2, 2);
        let ctx = RotationContext::plain();
        let value = self.evaluate(idx, &[*p, -*p], a, &ctx)?;
        let origin = self.evaluate(idx, &[Momentum4::ZERO; 2], a, &ctx)?;
        let interpolation_error = self.memo().interpolation_error(self, p, a, value.value)?;
        let scale = 2.0 * self.counterterms(2)?.d.abs();
        let tolerance = self.config.memo_tolerance * scale;
        if interpolation_error > tolerance {
            return Err(QuadratureError::Resolution {
                estimate: interpolation_error,
                tolerance,
            }
            .into());
        }
        Ok(TwoLoopResult {
            value: value.value,
            quadrature_error: value.error,
            defect: (value.value - origin.value).abs(),
            interpolation_error,
        })
    }

    pub(crate) fn memo(&self) -> &MemoGrid {
        self.memo
            .get_or_init(|| MemoGrid::new(self.base.a0, self.base.m, self.config.memo_points))
    }

    fn prepare(
        &self,
        idx: CasIndex,
        momenta: &[Momentum4],
        w: &MultiIndex,
        ctx: &RotationContext,
    ) -> Result<(), FlowError> {
        idx.check()?;
        if momenta.len() != idx.n {
            return Err(ScopeError::LegCount {
                expected: idx.n,
                got: momenta.len(),
            }
            .into());
        }
        if momenta.iter().any(|p| !p.is_finite()) {
            return Err(LatticeError::NonFiniteMomentum.into());
        }
        w.check()?;
        for (leg, orders) in w.legs.iter().enumerate() {
            if orders.total() > 0 && leg + 1 >= idx.n {
                return Err(ScopeError::DependentLeg {
                    leg,
                    free: idx.n.saturating_sub(1),
                }
                .into());
            }
        }
        let total: Momentum4 = momenta.iter().sum();
        let residual = reduce_to_first_zone(&total, self.base.a0).max_abs();
        let period = self.base.zone().period();
        if residual > CONSERVATION_TOL * period {
            return Err(FlowError::Conservation(residual));
        }
        if idx.l == 2 && ctx.rotation.is_some() {
            return Err(ScopeError::Function { l: 2, n: idx.n }.into());
        }
        Ok(())
    }

    fn pass<'s>(&'s self, idx: CasIndex, ctx: &'s RotationContext) -> Result<Pass<'s>, FlowError> {
        let needs_one_loop = idx.l >= 2 || (idx.l == 1 && idx.n >= 4);
        let one_loop = if needs_one_loop {
            Some(self.counterterms(1)?)
        } else {
            None
        };
        Ok(Pass::new(self, ctx.rotation.as_ref(), one_loop))
    }

    /// Renormalization conditions at `a = ∞` fix the bare constants:
    /// `4! c = ∫_0^{1/a0} rhs(l,4;0)`, `2 d = ∫ rhs(l,2;0)` and
    /// `b = ∫ ∂_{p²} rhs(l,2;0)`.
    fn shoot(&self, l: usize) -> Result<CountertermSet, FlowError> {
        if l == 0 {
            return Ok(CountertermSet::zero(0));
        }
        let one_loop = if l >= 2 { Some(self.counterterms(1)?) } else { None };
        let mut pass = Pass::new(self, None, one_loop);
        let top = self.lambda_max();
        let two = CasIndex::new(l, 2);
        let zero2 = [Momentum4::ZERO; 2];
        let d = 0.5
            * pass
                .integrate(two, &Legs::new(&zero2, &MultiIndex::zero()), 0.0, top)?
                .value;
        let curvature = MultiIndex::on_leg(0, LegOrders::along(0, 2));
        let b = 0.5 * pass.integrate(two, &Legs::new(&zero2, &curvature), 0.0, top)?.value;
        let c = if l == 1 {
            pass.one_loop = Some(CountertermSet { l, d, b, c: None });
            let zero4 = [Momentum4::ZERO; 4];
            let four = CasIndex::new(l, 4);
            Some(
                pass.integrate(four, &Legs::new(&zero4, &MultiIndex::zero()), 0.0, top)?
                    .value
                    / 24.0,
            )
        } else {
            None
        };
        Ok(CountertermSet { l, d, b, c })
    }
}

/// External momenta with the requested derivatives; the last leg is fixed
/// by conservation.
struct Legs<'a> {
    momenta: &'a [Momentum4],
    w: &'a MultiIndex,
}

impl<'a> Legs<'a> {
    fn new(momenta: &'a [Momentum4], w: &'a MultiIndex) -> Self {
        Legs { momenta, w }
    }

    fn n(&self) -> usize {
        self.momenta.len()
    }

    /// Sum of the momenta in `subset` and its coefficients on the
    /// independent legs.
    fn subset_form(&self, subset: &[usize]) -> (Momentum4, Vec<i8>) {
        let n = self.n();
        let value = subset.iter().map(|&i| self.momenta[i]).sum();
        let coeffs = if subset.contains(&(n - 1)) {
            (0..n - 1).map(|i| if subset.contains(&i) { 0 } else { -1 }).collect()
        } else {
            (0..n - 1).map(|i| if subset.contains(&i) { 1 } else { 0 }).collect()
        };
        (value, coeffs)
    }

    /// Chain-rule factor and combined orders for a function of a linear
    /// form; `None` when the derivative annihilates it.
    fn chain(&self, coeffs: &[i8]) -> Option<(f64, LegOrders)> {
        let mut factor = 1.0;
        let mut orders = [0u8; 4];
        for (i, &c) in coeffs.iter().enumerate() {
            let wi = self.w.leg(i);
            let k = wi.total();
            if k == 0 {
                continue;
            }
            if c == 0 {
                return None;
            }
            factor *= f64::from(c).powi(k as i32);
            for mu in 0..4 {
                orders[mu] += wi.0[mu];
            }
        }
        Some((factor, LegOrders(orders)))
    }
}

/// A kernel-weighted loop integral over `∂^w C(ε k + shift)`.
#[derive(Clone, Copy, Debug)]
struct BubbleTerm {
    coef: f64,
    eps: f64,
    shift: Momentum4,
    w: LegOrders,
}

/// Scratch state of one evaluation: rotation, lower-order counterterms and
/// caches of loop integrals keyed by flow parameter.
struct Pass<'s> {
    solver: &'s FlowSolver,
    rotation: Option<&'s Rotation4>,
    one_loop: Option<CountertermSet>,
    tadpoles: Mutex<HashMap<u64, f64>>,
    mass_terms: Mutex<HashMap<u64, f64>>,
}

impl<'s> Pass<'s> {
    fn new(solver: &'s FlowSolver, rotation: Option<&'s Rotation4>, one_loop: Option<CountertermSet>) -> Self {
        Pass {
            solver,
            rotation,
            one_loop,
            tadpoles: Mutex::new(HashMap::new()),
            mass_terms: Mutex::new(HashMap::new()),
        }
    }

    fn f(&self) -> f64 {
        self.solver.base.f
    }

    fn separable(&self) -> bool {
        self.rotation.is_none() && self.solver.config.loops == LoopEvaluation::Separable
    }

    fn integrate(&self, idx: CasIndex, legs: &Legs, from: f64, to: f64) -> Result<Estimate, FlowError> {
        let rule = self.solver.grid.rule(from, to)?;
        let values = rule
            .nodes()
            .into_iter()
            .map(|lambda| self.rhs(idx, legs, lambda))
            .collect::<Result<Vec<f64>, FlowError>>()?;
        Ok(rule.integrate(&values))
    }

    fn bare(&self, idx: CasIndex, legs: &Legs, counterterms: &CountertermSet) -> Result<f64, FlowError> {
        let params = self.solver.base;
        match idx.n {
            4 if legs.w.is_zero() => {
                let c = counterterms.c.ok_or(ScopeError::Function { l: idx.l, n: 4 })?;
                Ok(if idx.l == 0 { params.f } else { 0.0 } + 24.0 * c)
            }
            2 => {
                let p = legs.momenta[0];
                let w0 = legs.w.leg(0);
                if w0.total() == 0 {
                    let kinetic = if counterterms.b == 0.0 {
                        0.0
                    } else {
                        let x = self.rotation.map_or(p, |o| o.apply(&p));
                        counterterms.b * hat_momentum_sq(&x, params.a0)
                    };
                    Ok(2.0 * counterterms.d + kinetic)
                } else if counterterms.b == 0.0 {
                    Ok(0.0)
                } else {
                    let shell = profile_derivative(Profile::Shell, params.a0, params.m, &p, w0, self.rotation)?;
                    Ok(counterterms.b * shell)
                }
            }
            _ => Ok(0.0),
        }
    }

    fn rhs(&self, idx: CasIndex, legs: &Legs, lambda: f64) -> Result<f64, FlowError> {
        if idx.n % 2 == 1 || lambda == 0.0 {
            return Ok(0.0);
        }
        let params = self.solver.base.at_lambda(lambda);
        let mut total = 0.0;
        if idx.l >= 1 {
            total += self.linear(idx, legs, lambda, &params)?;
        }
        total += self.quadratic(idx, legs, lambda, &params)?;
        Ok(total)
    }

    /// `½ ∫_k L_{l-1,n+2}(k, p_1..p_n, -k) K(k)`.
    fn linear(&self, idx: CasIndex, legs: &Legs, lambda: f64, params: &LatticeParams) -> Result<f64, FlowError> {
        match (idx.l - 1, idx.n + 2) {
            (0, 4) => Ok(if legs.w.is_zero() {
                0.5 * self.f() * self.tadpole(lambda)
            } else {
                0.0
            }),
            (0, 6) => self.tree_insertion(legs, lambda, params),
            (1, 4) => {
                let one_loop = self.one_loop.expect("two-loop flow needs one-loop counterterms");
                let four_point = 24.0 * one_loop.c.expect("one-loop coupling counterterm");
                let mass = self.mass_term(lambda)?;
                let memo = self.solver.memo();
                two_loop::insertion(
                    memo,
                    self.solver,
                    legs.momenta[0],
                    legs.w.leg(0),
                    lambda,
                    four_point,
                    mass,
                )
            }
            (l, n) => Err(ScopeError::Function { l, n }.into()),
        }
    }

    /// Linear term with the tree-level six-point function inserted. Its
    /// channels either pair `k` with `-k`, leaving `C(p_i)` times a tadpole,
    /// or route `k` through a pair of external legs, giving a bubble.
    fn tree_insertion(&self, legs: &Legs, lambda: f64, params: &LatticeParams) -> Result<f64, FlowError> {
        let f = self.f();
        let mut tadpole_coef = 0.0;
        let mut bubbles = Vec::new();
        for ch in rsy_channels(6, 3).channels {
            let coef = -0.5 * ch.multiplicity as f64 * f * f;
            let has_k = ch.first.contains(&0);
            let has_minus_k = ch.first.contains(&5);
            let eps = f64::from(u8::from(has_k)) - f64::from(u8::from(has_minus_k));
            let external: Vec<usize> = ch
                .first
                .iter()
                .filter(|&&i| (1..=4).contains(&i))
                .map(|&i| i - 1)
                .collect();
            let (shift, coeffs) = legs.subset_form(&external);
            let Some((factor, w)) = legs.chain(&coeffs) else {
                continue;
            };
            if eps == 0.0 {
                tadpole_coef += coef * factor * propagator_derivative(params, &shift, w, self.rotation)?;
            } else {
                bubbles.push(BubbleTerm {
                    coef: coef * factor,
                    eps,
                    shift,
                    w,
                });
            }
        }
        let tadpole = if tadpole_coef == 0.0 {
            0.0
        } else {
            tadpole_coef * self.tadpole(lambda)
        };
        Ok(0.5 * (tadpole + self.bubbles(&bubbles, lambda, params)?))
    }

    fn bubbles(&self, terms: &[BubbleTerm], lambda: f64, params: &LatticeParams) -> Result<f64, FlowError> {
        if terms.is_empty() {
            return Ok(0.0);
        }
        let a = 1.0 / lambda;
        let rule = BzRule::new(params.a0, &self.solver.config.bz_spec(a));
        if self.separable() {
            let sep = SeparableLoop::new(&rule.axis, params.a0, a, params.m);
            // With a mirror-symmetric rule, k -> -k maps C(-k + P) onto C(k + P).
            return Ok(terms.iter().map(|t| t.coef * sep.bubble(&t.shift, t.w)).sum());
        }
        for t in terms {
            t.w.check()?;
        }
        let rotation = self.rotation;
        Ok(rule.integrate(|k| {
            let kernel = kernel_value(params, k, rotation);
            if kernel == 0.0 {
                return 0.0;
            }
            let inner: f64 = terms
                .iter()
                .map(|t| {
                    let q = *k * t.eps + t.shift;
                    let c = propagator_derivative(params, &q, t.w, rotation).expect("orders checked above");
                    t.coef * c
                })
                .sum();
            kernel * inner
        }))
    }

    /// `-½ Σ_{n1, l1+l2=l} Σ_channels L_{l1,n1+1} K(p_A) L_{l2,n-n1+1}` with
    /// momentum-independent factors.
    fn quadratic(&self, idx: CasIndex, legs: &Legs, lambda: f64, params: &LatticeParams) -> Result<f64, FlowError> {
        let n = idx.n;
        let mut sum = 0.0;
        for n1 in 1..n {
            let n2 = n - n1;
            for l1 in 0..=idx.l {
                let (left, right) = (CasIndex::new(l1, n1 + 1), CasIndex::new(idx.l - l1, n2 + 1));
                if left.is_zero() || right.is_zero() {
                    continue;
                }
                let scalar = self.scalar(left, lambda)? * self.scalar(right, lambda)?;
                for ch in rsy_channels(n, n1).channels {
                    let (p, coeffs) = legs.subset_form(&ch.first);
                    let Some((factor, w)) = legs.chain(&coeffs) else {
                        continue;
                    };
                    let kernel = KernelRequest {
                        params: *params,
                        p,
                        w,
                        rotation: self.rotation.copied(),
                    }
                    .eval()?;
                    sum += ch.multiplicity as f64 * scalar * factor * kernel;
                }
            }
        }
        Ok(-0.5 * sum)
    }

    /// Lower-order functions that carry no momentum dependence.
    fn scalar(&self, idx: CasIndex, lambda: f64) -> Result<f64, FlowError> {
        match (idx.l, idx.n) {
            (0, 4) => Ok(self.f()),
            (1, 2) => self.mass_term(lambda),
            (l, n) => Err(ScopeError::Function { l, n }.into()),
        }
    }

    /// `∫_k K(k)` at flow parameter `lambda`.
    fn tadpole(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let key = lambda.to_bits();
        if let Some(&v) = self.tadpoles.lock().expect("cache lock").get(&key) {
            return v;
        }
        let params = self.solver.base.at_lambda(lambda);
        let a = 1.0 / lambda;
        let rule = BzRule::new(params.a0, &self.solver.config.bz_spec(a));
        let value = if self.separable() {
            SeparableLoop::new(&rule.axis, params.a0, a, params.m).tadpole()
        } else {
            let rotation = self.rotation;
            rule.integrate(|k| kernel_value(&params, k, rotation))
        };
        self.tadpoles.lock().expect("cache lock").insert(key, value);
        value
    }

    /// `L_{1,2}` at flow parameter `lambda`: the bare mass term plus the
    /// flow of the tadpole down from `1/a0`, on the same λ-rule as a direct
    /// evaluation.
    fn mass_term(&self, lambda: f64) -> Result<f64, FlowError> {
        let key = lambda.to_bits();
        if let Some(&v) = self.mass_terms.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let one_loop = self.one_loop.expect("mass term needs one-loop counterterms");
        let rule = self.solver.grid.rule(self.solver.lambda_max(), lambda)?;
        let half_f = 0.5 * self.f();
        let values: Vec<f64> = rule.nodes().into_iter().map(|x| half_f * self.tadpole(x)).collect();
        let value = 2.0 * one_loop.d + rule.integrate(&values).value;
        self.mass_terms.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }
}
