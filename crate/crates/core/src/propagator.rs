//! The regularized propagator `C^{a0,a}`, its flow kernel `∂_{1/a} C` and
//! momentum derivatives up to fourth order, plain or on a rotated lattice.
//!
//! Both functions depend on the momentum only through
//! `M = p̂² + m²`, a sum of one trigonometric term per component, so every
//! derivative is a Faà di Bruno sum over set partitions of the requested
//! directions: radial derivatives of the profile times derivatives of `M`.

use serde::{Deserialize, Serialize};

use crate::error::ScopeError;
use crate::lattice::{hat_momentum_sq, LatticeParams, LegOrders, Momentum4, Rotation4};

/// Function of `M` whose momentum derivatives are requested.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `-2 a^3 e^{-a^2 M}`; `None` stands for `a = ∞`.
    Kernel { a: Option<f64> },
    /// `(e^{-a0^2 M} - e^{-a^2 M}) / M`.
    Propagator { a0: f64, a: Option<f64> },
    /// `M` itself, used for bare kinetic terms.
    Shell,
}

impl Profile {
    pub fn kernel(params: &LatticeParams) -> Self {
        Profile::Kernel {
            a: params.a.squared().map(f64::sqrt),
        }
    }

    pub fn propagator(params: &LatticeParams) -> Self {
        Profile::Propagator {
            a0: params.a0,
            a: params.a.squared().map(f64::sqrt),
        }
    }

    /// `j`-th derivative with respect to `M`.
    pub fn radial(&self, j: usize, mass_shell: f64) -> f64 {
        match *self {
            Profile::Kernel { a: None } => 0.0,
            Profile::Kernel { a: Some(a) } => {
                let a2 = a * a;
                -2.0 * a * a2 * (-a2).powi(j as i32) * (-a2 * mass_shell).exp()
            }
            Profile::Propagator { a0, a } => propagator_radial(a0 * a0, a.map(|x| x * x), j, mass_shell),
            Profile::Shell => match j {
                0 => mass_shell,
                1 => 1.0,
                _ => 0.0,
            },
        }
    }
}

/// `∫_{α0}^{α} (-t)^j e^{-t M} dt`, the `j`-th radial derivative of the propagator.
fn propagator_radial(alpha0: f64, alpha: Option<f64>, j: usize, mass_shell: f64) -> f64 {
    if j == 0 {
        let head = (-alpha0 * mass_shell).exp() / mass_shell;
        return match alpha {
            None => head,
            Some(alpha) => head * -(-(alpha - alpha0) * mass_shell).exp_m1(),
        };
    }
    let tail = |t: f64| -> f64 {
        // ∫_t^∞ s^j e^{-s M} ds
        let mut sum = 0.0;
        let mut fact_ratio = 1.0; // j!/i! for i = j downwards
        for i in (0..=j).rev() {
            sum += fact_ratio * t.powi(i as i32) / mass_shell.powi((j - i + 1) as i32);
            fact_ratio *= i as f64;
        }
        (-t * mass_shell).exp() * sum
    };
    let upper = alpha.map_or(0.0, tail);
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (tail(alpha0) - upper)
}

/// `d^k/dx^k` of `(2/a0)^2 sin^2(a0 x / 2)`.
#[inline]
pub(crate) fn component_derivative(k: usize, x: f64, a0: f64) -> f64 {
    match k {
        0 => {
            let h = (2.0 / a0) * (0.5 * a0 * x).sin();
            h * h
        }
        1 => (2.0 / a0) * (a0 * x).sin(),
        2 => 2.0 * (a0 * x).cos(),
        3 => -2.0 * a0 * (a0 * x).sin(),
        4 => -2.0 * a0 * a0 * (a0 * x).cos(),
        _ => unreachable!("component derivative order {k} beyond the cap"),
    }
}

/// All set partitions of `0..n` as lists of blocks.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn grow(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            grow(i + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        grow(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    grow(0, n, &mut Vec::new(), &mut out);
    out
}

/// Derivative of `M(O p)` with respect to `p` along the listed directions.
fn shell_block(x: &Momentum4, a0: f64, dirs: &[usize], rotation: Option<&Rotation4>) -> f64 {
    match rotation {
        None => {
            let mu = dirs[0];
            if dirs.iter().all(|&d| d == mu) {
                component_derivative(dirs.len(), x[mu], a0)
            } else {
                0.0
            }
        }
        Some(o) => (0..4)
            .map(|mu| {
                let chain: f64 = dirs.iter().map(|&nu| o.entry(mu, nu)).product();
                if chain == 0.0 {
                    0.0
                } else {
                    chain * component_derivative(dirs.len(), x[mu], a0)
                }
            })
            .sum(),
    }
}

/// `∂^w F(M(O p))` for a radial profile `F`.
pub fn profile_derivative(
    profile: Profile,
    a0: f64,
    m: f64,
    p: &Momentum4,
    w: LegOrders,
    rotation: Option<&Rotation4>,
) -> Result<f64, ScopeError> {
    w.check()?;
    let x = rotation.map_or(*p, |o| o.apply(p));
    let mass_shell = hat_momentum_sq(&x, a0) + m * m;
    let dirs = w.directions();
    if dirs.is_empty() {
        return Ok(profile.radial(0, mass_shell));
    }
    let mut total = 0.0;
    for partition in set_partitions(dirs.len()) {
        let mut term = profile.radial(partition.len(), mass_shell);
        for block in &partition {
            if term == 0.0 {
                break;
            }
            let block_dirs: Vec<usize> = block.iter().map(|&i| dirs[i]).collect();
            term *= shell_block(&x, a0, &block_dirs, rotation);
        }
        total += term;
    }
    Ok(total)
}

/// `C^{a0,a}(p̂)`.
pub fn propagator_value(params: &LatticeParams, p: &Momentum4) -> f64 {
    let mass_shell = hat_momentum_sq(p, params.a0) + params.m * params.m;
    Profile::propagator(params).radial(0, mass_shell)
}

/// `C^{a0,a}` at `hat(O p)`.
pub fn propagator_rotated(params: &LatticeParams, p: &Momentum4, rotation: Option<&Rotation4>) -> f64 {
    let x = rotation.map_or(*p, |o| o.apply(p));
    propagator_value(params, &x)
}

/// Momentum derivative of the propagator, optionally on the rotated lattice.
pub fn propagator_derivative(
    params: &LatticeParams,
    p: &Momentum4,
    w: LegOrders,
    rotation: Option<&Rotation4>,
) -> Result<f64, ScopeError> {
    profile_derivative(Profile::propagator(params), params.a0, params.m, p, w, rotation)
}

/// `∂^w ∂_{1/a} C^{a0,a}(p̂)`; identically zero at `a = ∞`.
pub fn flow_kernel(params: &LatticeParams, p: &Momentum4, w: LegOrders) -> Result<f64, ScopeError> {
    KernelRequest {
        params: *params,
        p: *p,
        w,
        rotation: None,
    }
    .eval()
}

/// Undifferentiated flow kernel at `hat(O p)`.
#[inline]
pub fn kernel_value(params: &LatticeParams, p: &Momentum4, rotation: Option<&Rotation4>) -> f64 {
    let Some(a2) = params.a.squared() else {
        return 0.0;
    };
    let x = rotation.map_or(*p, |o| o.apply(p));
    let mass_shell = hat_momentum_sq(&x, params.a0) + params.m * params.m;
    -2.0 * a2 * a2.sqrt() * (-a2 * mass_shell).exp()
}

/// A fully specified flow-kernel evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRequest {
    pub params: LatticeParams,
    pub p: Momentum4,
    pub w: LegOrders,
    pub rotation: Option<Rotation4>,
}

impl KernelRequest {
    pub fn eval(&self) -> Result<f64, ScopeError> {
        self.w.check()?;
        if self.w.total() == 0 {
            return Ok(kernel_value(&self.params, &self.p, self.rotation.as_ref()));
        }
        profile_derivative(
            Profile::kernel(&self.params),
            self.params.a0,
            self.params.m,
            &self.p,
            self.w,
            self.rotation.as_ref(),
        )
    }
}

/// Kernel on the original lattice minus kernel on the rotated one, at the same `p`.
pub fn kernel_difference(
    params: &LatticeParams,
    p: &Momentum4,
    rotation: &Rotation4,
    w: LegOrders,
) -> Result<f64, ScopeError> {
    let plain = KernelRequest {
        params: *params,
        p: *p,
        w,
        rotation: None,
    }
    .eval()?;
    let rotated = KernelRequest {
        params: *params,
        p: *p,
        w,
        rotation: Some(*rotation),
    }
    .eval()?;
    Ok(plain - rotated)
}
