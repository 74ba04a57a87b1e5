//! Momentum-space geometry of the hypercubic lattice: the lattice momentum
//! map, Brillouin zones, orthogonal rotations and derivative multi-indices.

use std::f64::consts::PI;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, ScopeError};

/// Highest total derivative order handled anywhere in the crate.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Orthogonality tolerance applied when a rotation is constructed.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// A Euclidean four-momentum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Momentum4(pub [f64; 4]);

impl Momentum4 {
    pub const ZERO: Momentum4 = Momentum4([0.0; 4]);

    pub fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Self {
        Momentum4([p1, p2, p3, p4])
    }

    /// Momentum of magnitude `value` along axis `mu`.
    pub fn along(mu: usize, value: f64) -> Self {
        let mut p = [0.0; 4];
        p[mu] = value;
        Momentum4(p)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Momentum4 {
    type Output = f64;
    fn index(&self, mu: usize) -> &f64 {
        &self.0[mu]
    }
}

impl Add for Momentum4 {
    type Output = Momentum4;
    fn add(self, rhs: Momentum4) -> Momentum4 {
        Momentum4(std::array::from_fn(|mu| self.0[mu] + rhs.0[mu]))
    }
}

impl AddAssign for Momentum4 {
    fn add_assign(&mut self, rhs: Momentum4) {
        for mu in 0..4 {
            self.0[mu] += rhs.0[mu];
        }
    }
}

impl Sub for Momentum4 {
    type Output = Momentum4;
    fn sub(self, rhs: Momentum4) -> Momentum4 {
        Momentum4(std::array::from_fn(|mu| self.0[mu] - rhs.0[mu]))
    }
}

impl Neg for Momentum4 {
    type Output = Momentum4;
    fn neg(self) -> Momentum4 {
        Momentum4(self.0.map(|x| -x))
    }
}

impl Mul<f64> for Momentum4 {
    type Output = Momentum4;
    fn mul(self, s: f64) -> Momentum4 {
        Momentum4(self.0.map(|x| x * s))
    }
}

impl Sum for Momentum4 {
    fn sum<I: Iterator<Item = Momentum4>>(iter: I) -> Momentum4 {
        iter.fold(Momentum4::ZERO, |acc, p| acc + p)
    }
}

impl<'a> Sum<&'a Momentum4> for Momentum4 {
    fn sum<I: Iterator<Item = &'a Momentum4>>(iter: I) -> Momentum4 {
        iter.fold(Momentum4::ZERO, |acc, p| acc + *p)
    }
}

impl fmt::Display for Momentum4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

/// The flow scale `a`; infinity is a distinguished value, not a float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FlowScale {
    Finite(f64),
    Infinite,
}

impl FlowScale {
    /// Scale with inverse `lambda`; `lambda == 0` is the fully integrated theory.
    pub fn from_inverse(lambda: f64) -> Self {
        if lambda == 0.0 {
            FlowScale::Infinite
        } else {
            FlowScale::Finite(1.0 / lambda)
        }
    }

    /// The flow parameter `1/a`.
    pub fn inverse(&self) -> f64 {
        match *self {
            FlowScale::Finite(a) => 1.0 / a,
            FlowScale::Infinite => 0.0,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, FlowScale::Infinite)
    }

    /// `a²`, or `None` at infinity.
    pub fn squared(&self) -> Option<f64> {
        match *self {
            FlowScale::Finite(a) => Some(a * a),
            FlowScale::Infinite => None,
        }
    }
}

impl fmt::Display for FlowScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowScale::Finite(a) => write!(f, "{a}"),
            FlowScale::Infinite => write!(f, "inf"),
        }
    }
}

/// Lattice spacing, flow scale, mass and quartic coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub a0: f64,
    pub a: FlowScale,
    pub m: f64,
    pub f: f64,
}

impl LatticeParams {
    pub fn new(a0: f64, a: FlowScale, m: f64, f: f64) -> Result<Self, LatticeError> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(LatticeError::Spacing(a0));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(LatticeError::Mass(m));
        }
        if a0 >= 1.0 / m {
            return Err(LatticeError::SpacingTooCoarse { a0, inv_m: 1.0 / m });
        }
        if !f.is_finite() {
            return Err(LatticeError::Coupling(f));
        }
        if let FlowScale::Finite(scale) = a {
            if !scale.is_finite() || scale < a0 {
                return Err(LatticeError::ScaleBelowSpacing { a: scale, a0 });
            }
        }
        Ok(LatticeParams { a0, a, m, f })
    }

    /// Same regulator and physics at another flow scale.
    pub fn with_scale(&self, a: FlowScale) -> Result<Self, LatticeError> {
        LatticeParams::new(self.a0, a, self.m, self.f)
    }

    /// Same regulator at flow parameter `lambda = 1/a`; no validation beyond
    /// what the caller guarantees for `0 <= lambda <= 1/a0`.
    pub(crate) fn at_lambda(&self, lambda: f64) -> Self {
        LatticeParams {
            a: FlowScale::from_inverse(lambda),
            ..*self
        }
    }

    pub fn zone(&self) -> BrillouinZone {
        BrillouinZone { a0: self.a0 }
    }

    /// Upper end of the flow range, `1/a0`.
    pub fn lambda_max(&self) -> f64 {
        1.0 / self.a0
    }
}

/// The first Brillouin zone `(-π/a0, π/a0)^4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrillouinZone {
    pub a0: f64,
}

impl BrillouinZone {
    pub fn new(a0: f64) -> Result<Self, LatticeError> {
        if a0.is_finite() && a0 > 0.0 {
            Ok(BrillouinZone { a0 })
        } else {
            Err(LatticeError::Spacing(a0))
        }
    }

    pub fn half_width(&self) -> f64 {
        PI / self.a0
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.a0
    }

    pub fn volume(&self) -> f64 {
        self.period().powi(4)
    }

    /// Closed-cube membership.
    pub fn contains(&self, p: &Momentum4) -> bool {
        p.max_abs() <= self.half_width()
    }
}

/// `(2/a0) sin(a0 p / 2)` for one component.
#[inline]
pub fn hat_component(p: f64, a0: f64) -> f64 {
    (2.0 / a0) * (0.5 * a0 * p).sin()
}

/// Square of one lattice momentum component.
#[inline]
pub fn hat_component_sq(p: f64, a0: f64) -> f64 {
    let h = hat_component(p, a0);
    h * h
}

/// Component-wise lattice momentum.
pub fn hat_momentum(p: &Momentum4, a0: f64) -> Momentum4 {
    Momentum4(p.0.map(|x| hat_component(x, a0)))
}

/// `Σ_μ p̂_μ²`.
pub fn hat_momentum_sq(p: &Momentum4, a0: f64) -> f64 {
    p.0.iter().map(|&x| hat_component_sq(x, a0)).sum()
}

/// Matrix-vector product `O p`.
pub fn rotate(o: &Rotation4, p: &Momentum4) -> Momentum4 {
    o.apply(p)
}

/// Representative of `p` in `[-π/a0, π/a0)^4` modulo `2π/a0`.
pub fn reduce_to_first_zone(p: &Momentum4, a0: f64) -> Momentum4 {
    let period = 2.0 * PI / a0;
    let half = PI / a0;
    Momentum4(p.0.map(|x| {
        let mut y = x - period * ((x + half) / period).floor();
        if y >= half {
            y -= period;
        }
        if y < -half {
            y += period;
        }
        y
    }))
}

/// An orthogonal 4x4 matrix, validated at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation4 {
    rows: [[f64; 4]; 4],
}

impl Rotation4 {
    pub fn new(rows: [[f64; 4]; 4]) -> Result<Self, LatticeError> {
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LatticeError::NotOrthogonal(f64::INFINITY));
        }
        let mut dev = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|k| rows[k][i] * rows[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((dot - target).abs());
            }
        }
        if dev > ORTHOGONALITY_TOL {
            return Err(LatticeError::NotOrthogonal(dev));
        }
        Ok(Rotation4 { rows })
    }

    pub fn identity() -> Self {
        Rotation4 {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 })),
        }
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn givens(i: usize, j: usize, angle: f64) -> Self {
        assert!(
            i < 4 && j < 4 && i != j,
            "givens plane ({i}, {j}) is not a coordinate plane"
        );
        let mut r = Self::identity();
        let (s, c) = angle.sin_cos();
        r.rows[i][i] = c;
        r.rows[i][j] = -s;
        r.rows[j][i] = s;
        r.rows[j][j] = c;
        r
    }

    /// `Q p` with `(Q p)_{perm[μ]} = sign[μ] p_μ`.
    pub fn signed_permutation(perm: [usize; 4], signs: [f64; 4]) -> Result<Self, LatticeError> {
        if !perm.iter().all_unique() || perm.iter().any(|&k| k > 3) {
            return Err(LatticeError::NotOrthogonal(1.0));
        }
        let mut rows = [[0.0; 4]; 4];
        for mu in 0..4 {
            if signs[mu].abs() != 1.0 {
                return Err(LatticeError::NotOrthogonal((signs[mu].abs() - 1.0).abs()));
            }
            rows[perm[mu]][mu] = signs[mu];
        }
        Ok(Rotation4 { rows })
    }

    /// Generic test rotation: 0.3 rad in the (1,2)-plane after 0.2 rad in the (3,4)-plane.
    pub fn generic() -> Self {
        Self::givens(0, 1, 0.3).compose(&Self::givens(2, 3, 0.2))
    }

    /// All 384 signed coordinate permutations.
    pub fn hypercubic_group() -> Vec<Rotation4> {
        let mut out = Vec::with_capacity(384);
        for perm in (0..4).permutations(4) {
            for bits in 0..16u32 {
                let signs = std::array::from_fn(|mu| if bits >> mu & 1 == 1 { -1.0 } else { 1.0 });
                let perm = [perm[0], perm[1], perm[2], perm[3]];
                out.push(Self::signed_permutation(perm, signs).expect("valid signed permutation"));
            }
        }
        out
    }

    /// Matrix product `self · other`, re-validated.
    pub fn compose(&self, other: &Rotation4) -> Self {
        let rows =
            std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| self.rows[i][k] * other.rows[k][j]).sum()));
        Rotation4::new(rows).expect("product of orthogonal matrices")
    }

    pub fn transpose(&self) -> Self {
        Rotation4 {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| self.rows[j][i])),
        }
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.rows
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    #[inline]
    pub fn apply(&self, p: &Momentum4) -> Momentum4 {
        Momentum4(std::array::from_fn(|i| {
            let r = &self.rows[i];
            r[0] * p.0[0] + r[1] * p.0[1] + r[2] * p.0[2] + r[3] * p.0[3]
        }))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.rows;
        (0..4)
            .permutations(4)
            .map(|s| {
                let inversions = (0..4)
                    .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                    .filter(|&(i, j)| s[i] > s[j])
                    .count();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                sign * (0..4).map(|i| m[i][s[i]]).product::<f64>()
            })
            .sum()
    }

    /// True when every entry is 0 or ±1, i.e. a hypercubic symmetry.
    pub fn is_signed_permutation(&self) -> bool {
        self.rows.iter().flatten().all(|&x| x == 0.0 || x == 1.0 || x == -1.0)
    }
}

/// Derivative orders of one leg, per direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LegOrders(pub [u8; 4]);

impl LegOrders {
    pub const NONE: LegOrders = LegOrders([0; 4]);

    /// `order` derivatives along axis `mu`.
    pub fn along(mu: usize, order: u8) -> Self {
        let mut w = [0; 4];
        w[mu] = order;
        LegOrders(w)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&x| x as usize).sum()
    }

    /// Directions with repetition, e.g. `[2,0,1,0]` becomes `[0,0,2]`.
    pub fn directions(&self) -> Vec<usize> {
        (0..4)
            .flat_map(|mu| std::iter::repeat_n(mu, self.0[mu] as usize))
            .collect()
    }

    pub fn check(&self) -> Result<(), ScopeError> {
        let order = self.total();
        if order > MAX_DERIVATIVE_ORDER {
            Err(ScopeError::DerivativeOrder {
                order,
                cap: MAX_DERIVATIVE_ORDER,
            })
        } else {
            Ok(())
        }
    }
}

/// Derivative orders for every external leg.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub legs: Vec<LegOrders>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex { legs: Vec::new() }
    }

    /// Derivatives acting on a single leg.
    pub fn on_leg(leg: usize, orders: LegOrders) -> Self {
        let mut legs = vec![LegOrders::NONE; leg + 1];
        legs[leg] = orders;
        MultiIndex { legs }
    }

    pub fn total(&self) -> usize {
        self.legs.iter().map(LegOrders::total).sum()
    }

    pub fn leg(&self, i: usize) -> LegOrders {
        self.legs.get(i).copied().unwrap_or(LegOrders::NONE)
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    pub fn check(&self) -> Result<(), ScopeError> {
        let order = self.total();
        if order > MAX_DERIVATIVE_ORDER {
            Err(ScopeError::DerivativeOrder {
                order,
                cap: MAX_DERIVATIVE_ORDER,
            })
        } else {
            Ok(())
        }
    }
}
