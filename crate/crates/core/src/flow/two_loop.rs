//! Two-loop two-point flow.
//!
//! The one-loop four-point function enters the linear term at legs
//! `(k, p, -p, -k)`. In closed form
//! `L_{1,4}(q; λ) = 4! c_1 - ½ f² Σ_{3 channels} B(Q; λ) - f L_{1,2}(λ) Σ_i C(q_i; λ)`,
//! with the propagator bubble `B(Q; λ) = ∫_q C(q) C(q + Q)` obeying
//! `∂_λ B = 2 ∫_q K(q) C(q + Q)` and `B = 0` at `λ = 1/a0`. The bubble is
//! tabulated per flow scale on a grid over the first zone and interpolated
//! multilinearly; momentum derivatives are moved onto the kernel by
//! integration by parts.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::separable::SeparableLoop;
use super::{CasIndex, FlowSolver, RotationContext, SolverConfig};
use crate::error::FlowError;
use crate::lattice::{FlowScale, LegOrders, Momentum4};
use crate::propagator::{kernel_value, profile_derivative, propagator_derivative, Profile};
use crate::quadrature::{AxisRule, BzRule};

/// Value of the two-loop two-point function with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLoopResult {
    pub value: f64,
    pub quadrature_error: f64,
    /// `|L_{2,2}(p) - L_{2,2}(0)|`.
    pub defect: f64,
    /// Richardson estimate of the interpolation error from a grid with
    /// half the spacing removed.
    pub interpolation_error: f64,
}

/// Tables of the propagator bubble on `points^4` momenta, per flow scale.
///
/// Grid coordinates per axis are `(π/a0) (i/(points-1))²`, so a grid with
/// `(points+1)/2` points is nested inside.
#[derive(Debug)]
pub struct MemoGrid {
    a0: f64,
    m: f64,
    coords: Vec<f64>,
    rates: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
    tables: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl MemoGrid {
    pub fn new(a0: f64, m: f64, points: usize) -> Self {
        let zone = PI / a0;
        let last = (points - 1) as f64;
        let coords = (0..points).map(|i| zone * (i as f64 / last).powi(2)).collect();
        MemoGrid {
            a0,
            m,
            coords,
            rates: Mutex::new(HashMap::new()),
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn points(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn index(&self, i: [usize; 4]) -> usize {
        let g = self.points();
        ((i[0] * g + i[1]) * g + i[2]) * g + i[3]
    }

    /// `∂_λ B` on the grid. Cached only at nodes of the solver's λ-grid,
    /// which every flow integral shares.
    fn rate(&self, solver: &FlowSolver, lambda: f64) -> Arc<Vec<f64>> {
        let key = lambda.to_bits();
        if let Some(t) = self.rates.lock().expect("cache lock").get(&key) {
            return Arc::clone(t);
        }
        let g = self.points();
        let mut table = vec![0.0; g.pow(4)];
        if lambda > 0.0 {
            let a = 1.0 / lambda;
            let axis = AxisRule::new(self.a0, &solver.config.bz_spec(a));
            let sep = SeparableLoop::new(&axis, self.a0, a, self.m);
            let profiles: Vec<Vec<f64>> = self.coords.iter().map(|&q| sep.axis_profile(q, 0)).collect();
            for i in 0..g {
                for j in 0..=i {
                    for k in 0..=j {
                        for l in 0..=k {
                            let v = 2.0 * sep.combine([&profiles[i], &profiles[j], &profiles[k], &profiles[l]]);
                            for perm in [i, j, k, l].into_iter().permutations(4) {
                                table[self.index([perm[0], perm[1], perm[2], perm[3]])] = v;
                            }
                        }
                    }
                }
            }
        }
        let table = Arc::new(table);
        let on_grid = solver.grid.nodes().iter().any(|x| x.to_bits() == key);
        if on_grid {
            self.rates.lock().expect("cache lock").insert(key, Arc::clone(&table));
        }
        table
    }

    /// `B(·; λ)` on the grid.
    pub(crate) fn table(&self, solver: &FlowSolver, lambda: f64) -> Result<Arc<Vec<f64>>, FlowError> {
        let key = lambda.to_bits();
        if let Some(t) = self.tables.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let rule = solver.grid.rule(solver.lambda_max(), lambda)?;
        let mut table = vec![0.0; self.points().pow(4)];
        for (x, w) in rule.nodes().into_iter().zip(rule.weights()) {
            let rate = self.rate(solver, x);
            for (t, r) in table.iter_mut().zip(rate.iter()) {
                *t += w * r;
            }
        }
        let table = Arc::new(table);
        self.tables.lock().expect("cache lock").insert(key, Arc::clone(&table));
        Ok(table)
    }

    /// Cell and linear weight for one component, folded into `[0, π/a0]`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let zone = PI / self.a0;
        let y = x.rem_euclid(2.0 * zone);
        let y = if y > zone { 2.0 * zone - y } else { y };
        let g = self.points();
        let u = (y / zone).sqrt() * (g - 1) as f64;
        let i = (u.floor() as usize).min(g - 2);
        let (lo, hi) = (self.coords[i], self.coords[i + 1]);
        (i, ((y - lo) / (hi - lo)).clamp(0.0, 1.0))
    }

    /// Multilinear interpolation of a table at `q`.
    pub fn interpolate(&self, table: &[f64], q: &Momentum4) -> f64 {
        let cells = [
            self.locate(q[0]),
            self.locate(q[1]),
            self.locate(q[2]),
            self.locate(q[3]),
        ];
        let mut total = 0.0;
        for corner in 0..16usize {
            let mut weight = 1.0;
            let mut idx = [0usize; 4];
            for (mu, &(i, t)) in cells.iter().enumerate() {
                if corner >> mu & 1 == 1 {
                    weight *= t;
                    idx[mu] = i + 1;
                } else {
                    weight *= 1.0 - t;
                    idx[mu] = i;
                }
            }
            if weight != 0.0 {
                total += weight * table[self.index(idx)];
            }
        }
        total
    }

    /// Richardson estimate `|v_h - v_{2h}| / 3` with the nested coarse grid.
    pub(crate) fn interpolation_error(
        &self,
        solver: &FlowSolver,
        p: &Momentum4,
        a: FlowScale,
        fine: f64,
    ) -> Result<f64, FlowError> {
        let config = SolverConfig {
            memo_points: self.points().div_ceil(2),
            ..solver.config
        };
        let coarse = FlowSolver::new(solver.base.a0, solver.base.m, solver.base.f, config)?;
        let value = coarse
            .evaluate(CasIndex::new(2, 2), &[*p, -*p], a, &RotationContext::plain())?
            .value;
        Ok((value - fine).abs() / 3.0)
    }
}

/// `½ ∂^w_p ∫_k L_{1,4}(k, p, -p, -k; λ) K(k)`, given `4! c_1` and `L_{1,2}(λ)`.
pub(crate) fn insertion(
    memo: &MemoGrid,
    solver: &FlowSolver,
    p: Momentum4,
    w: LegOrders,
    lambda: f64,
    four_point: f64,
    mass: f64,
) -> Result<f64, FlowError> {
    w.check()?;
    let params = solver.base.at_lambda(lambda);
    let a = 1.0 / lambda;
    let f = params.f;
    let rule = BzRule::new(params.a0, &solver.config.bz_spec(a));
    let sep = SeparableLoop::new(&rule.axis, params.a0, a, params.m);
    let table = memo.table(solver, lambda)?;
    let order = w.total();
    let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
    let kernel = Profile::kernel(&params);
    let crossed = rule.integrate(|k| {
        let kd = if order == 0 {
            kernel_value(&params, k, None)
        } else {
            profile_derivative(kernel, params.a0, params.m, k, w, None).expect("orders checked above")
        };
        if kd == 0.0 {
            return 0.0;
        }
        kd * (sign * memo.interpolate(&table, &(*k + p)) + memo.interpolate(&table, &(*k - p)))
    });
    let tadpole = sep.tadpole();
    let mut value = -0.5 * f * f * crossed - 2.0 * f * mass * tadpole * propagator_derivative(&params, &p, w, None)?;
    if order == 0 {
        let closed = memo.interpolate(&table, &Momentum4::ZERO);
        value += four_point * tadpole
            - 0.5 * f * f * closed * tadpole
            - 2.0 * f * mass * sep.bubble(&Momentum4::ZERO, LegOrders::NONE);
    }
    Ok(0.5 * value)
}
