//! Run configuration read from a TOML file. Every field has a default, so an
//! empty file (or no file) is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phi4_flow::quadrature::LambdaLayout;
use phi4_flow::{
    CasIndex, FlowScale, LatticeParams, LegOrders, LoopEvaluation, Momentum4, MultiIndex, Rotation4, SolverConfig,
};

use crate::CliError;

pub const SUITES: [&str; 6] = ["lemma1", "lemma2", "rotation", "cauchy", "power-counting", "delta"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: Physics,
    pub regulator: Regulator,
    pub quadrature: Quadrature,
    pub task: Task,
    pub output: Output,
    pub verify: Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub m: f64,
    pub f: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { m: 1.0, f: 1.0 }
    }
}

/// A flow scale: a number, or `"inf"` for the fully integrated theory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleValue {
    Finite(f64),
    Named(String),
}

impl ScaleValue {
    pub fn resolve(&self) -> Result<FlowScale, CliError> {
        match self {
            ScaleValue::Finite(a) => Ok(FlowScale::Finite(*a)),
            ScaleValue::Named(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(FlowScale::Infinite),
            ScaleValue::Named(s) => Err(CliError::Config(format!(
                "flow scale {s:?} is neither a number nor \"inf\""
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Regulator {
    pub a0: Vec<f64>,
    pub a: Vec<ScaleValue>,
}

impl Default for Regulator {
    fn default() -> Self {
        Regulator {
            a0: vec![0.0625],
            a: vec![ScaleValue::Finite(1.0), ScaleValue::Named("inf".into())],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Default,
    Coarse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loops {
    Separable,
    Tensor,
}

/// Solver resolution: a preset with optional overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Quadrature {
    pub preset: Preset,
    pub bz_order: Option<usize>,
    pub bz_depth: Option<u32>,
    pub lambda_panels: Option<usize>,
    pub lambda_order: Option<usize>,
    pub loops: Option<Loops>,
    pub memo_points: Option<usize>,
    pub memo_tolerance: Option<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            preset: Preset::Default,
            bz_order: None,
            bz_depth: None,
            lambda_panels: None,
            lambda_order: None,
            loops: None,
            memo_points: None,
            memo_tolerance: None,
        }
    }
}

impl Quadrature {
    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        self.solver_config_from(self.preset)
    }

    /// Overrides applied on top of `preset` instead of the configured one.
    pub fn solver_config_from(&self, preset: Preset) -> Result<SolverConfig, CliError> {
        let base = match preset {
            Preset::Default => SolverConfig::default(),
            Preset::Coarse => SolverConfig::coarse(),
        };
        let config = SolverConfig {
            bz_order: self.bz_order.unwrap_or(base.bz_order),
            bz_depth: self.bz_depth.unwrap_or(base.bz_depth),
            lambda: LambdaLayout {
                panels: self.lambda_panels.unwrap_or(base.lambda.panels),
                order: self.lambda_order.unwrap_or(base.lambda.order),
            },
            loops: match self.loops {
                Some(Loops::Separable) => LoopEvaluation::Separable,
                Some(Loops::Tensor) => LoopEvaluation::Tensor,
                None => base.loops,
            },
            memo_points: self.memo_points.unwrap_or(base.memo_points),
            memo_tolerance: self.memo_tolerance.unwrap_or(base.memo_tolerance),
        };
        if config.memo_points < 5 || config.memo_points.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "memo_points must be odd and at least 5, got {}",
                config.memo_points
            )));
        }
        if config.memo_tolerance.is_nan() || config.memo_tolerance <= 0.0 {
            return Err(CliError::Config("memo_tolerance must be positive".into()));
        }
        Ok(config)
    }
}

/// One Givens factor; planes are numbered from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Givens {
    pub plane: [usize; 2],
    pub angle: f64,
}

/// Either a product of Givens rotations (applied left to right) or a signed
/// coordinate permutation (indices from 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSpec {
    pub givens: Vec<Givens>,
    pub permutation: Option<[usize; 4]>,
    pub signs: Option<[f64; 4]>,
}

impl Default for RotationSpec {
    fn default() -> Self {
        RotationSpec {
            givens: vec![
                Givens {
                    plane: [1, 2],
                    angle: 0.3,
                },
                Givens {
                    plane: [3, 4],
                    angle: 0.2,
                },
            ],
            permutation: None,
            signs: None,
        }
    }
}

impl RotationSpec {
    pub fn build(&self) -> Result<Rotation4, CliError> {
        if let Some(perm) = self.permutation {
            if perm.iter().any(|&i| !(1..=4).contains(&i)) {
                return Err(CliError::Config("permutation entries run from 1 to 4".into()));
            }
            let zero_based = perm.map(|i| i - 1);
            let signs = self.signs.unwrap_or([1.0; 4]);
            return Rotation4::signed_permutation(zero_based, signs).map_err(|e| CliError::Config(e.to_string()));
        }
        let mut rotation = Rotation4::identity();
        for g in &self.givens {
            let [i, j] = g.plane;
            if i == j || !(1..=4).contains(&i) || !(1..=4).contains(&j) || !g.angle.is_finite() {
                return Err(CliError::Config(format!("invalid Givens factor {g:?}")));
            }
            rotation = rotation.compose(&Rotation4::givens(i - 1, j - 1, g.angle));
        }
        Ok(rotation)
    }
}

/// One derivative: order `order` along axis `mu` (from 1) on leg `leg` (from 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derivative {
    pub leg: usize,
    pub mu: usize,
    pub order: u8,
}

pub fn multi_index(derivatives: &[Derivative]) -> Result<MultiIndex, CliError> {
    let mut w = MultiIndex::zero();
    for d in derivatives {
        if d.leg == 0 || !(1..=4).contains(&d.mu) {
            return Err(CliError::Config(format!(
                "derivative {d:?}: legs and axes are numbered from 1"
            )));
        }
        if w.legs.len() < d.leg {
            w.legs.resize(d.leg, LegOrders::NONE);
        }
        w.legs[d.leg - 1].0[d.mu - 1] += d.order;
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Task {
    pub l: usize,
    pub n: usize,
    /// Momentum configurations, each `n` rows of four components. Empty
    /// means one built-in configuration.
    pub momenta: Vec<Vec<[f64; 4]>>,
    pub derivative: Vec<Derivative>,
    /// Evaluate on the rotated lattice.
    pub rotated: bool,
    pub rotation: RotationSpec,
    /// Loop orders reported by `counterterms`.
    pub loops: Vec<usize>,
    /// Suites run by `verify` when none are named on the command line.
    pub suites: Vec<String>,
}

impl Default for Task {
    fn default() -> Self {
        Task {
            l: 1,
            n: 2,
            momenta: Vec::new(),
            derivative: Vec::new(),
            rotated: false,
            rotation: RotationSpec::default(),
            loops: vec![0, 1, 2],
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Task {
    pub fn index(&self) -> CasIndex {
        CasIndex::new(self.l, self.n)
    }

    pub fn configurations(&self) -> Result<Vec<Vec<Momentum4>>, CliError> {
        if self.momenta.is_empty() {
            return Ok(vec![default_momenta(self.n)]);
        }
        self.momenta
            .iter()
            .map(|rows| {
                if rows.len() != self.n {
                    return Err(CliError::Config(format!(
                        "momentum configuration has {} rows, expected {}",
                        rows.len(),
                        self.n
                    )));
                }
                Ok(rows.iter().map(|r| Momentum4(*r)).collect())
            })
            .collect()
    }
}

/// Generic momenta adding up to zero.
pub fn default_momenta(n: usize) -> Vec<Momentum4> {
    let pool = [
        Momentum4::new(0.7, 0.35, -0.21, 0.14),
        Momentum4::new(-0.4, 0.6, 0.1, -0.2),
        Momentum4::new(0.2, -0.1, 0.5, 0.3),
        Momentum4::new(0.2, 0.2, -0.1, -0.6),
        Momentum4::new(-0.5, 0.3, 0.2, 0.7),
    ];
    if n == 0 {
        return Vec::new();
    }
    let mut legs: Vec<Momentum4> = (0..n - 1)
        .map(|i| pool[i % pool.len()] * (1.0 + (i / pool.len()) as f64))
        .collect();
    let last = -legs.iter().copied().sum::<Momentum4>();
    legs.push(last);
    legs
}

/// Four momenta of equal length with equal pairwise products.
pub fn symmetric_point(scale: f64) -> Vec<Momentum4> {
    vec![
        Momentum4::new(1.0, 1.0, 1.0, 0.0) * scale,
        Momentum4::new(1.0, -1.0, -1.0, 0.0) * scale,
        Momentum4::new(-1.0, 1.0, -1.0, 0.0) * scale,
        Momentum4::new(-1.0, -1.0, 1.0, 0.0) * scale,
    ]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory for tables and reports; standard output when absent.
    pub dir: Option<PathBuf>,
}

/// A coefficient function in a suite, with optional momenta and derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub l: usize,
    pub n: usize,
    #[serde(default)]
    pub momenta: Option<Vec<[f64; 4]>>,
    #[serde(default)]
    pub derivative: Vec<Derivative>,
}

impl FunctionSpec {
    fn new(l: usize, n: usize) -> Self {
        FunctionSpec {
            l,
            n,
            momenta: None,
            derivative: Vec::new(),
        }
    }

    pub fn index(&self) -> CasIndex {
        CasIndex::new(self.l, self.n)
    }

    pub fn legs(&self, fallback: impl Fn(usize) -> Vec<Momentum4>) -> Result<Vec<Momentum4>, CliError> {
        match &self.momenta {
            Some(rows) if rows.len() != self.n => Err(CliError::Config(format!(
                "L({},{}) momenta have {} rows, expected {}",
                self.l,
                self.n,
                rows.len(),
                self.n
            ))),
            Some(rows) => Ok(rows.iter().map(|r| Momentum4(*r)).collect()),
            None => Ok(fallback(self.n)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Verify {
    pub lemma1: Lemma1,
    pub lemma2: Lemma2,
    pub rotation: RotationSuite,
    pub cauchy: CauchySuite,
    #[serde(rename = "power-counting")]
    pub power_counting: PowerCountingSuite,
    pub delta: DeltaSuite,
}

fn powers_of_two(from: i32, to: i32) -> Vec<f64> {
    if from <= to {
        (from..=to).map(|k| 2f64.powi(k)).collect()
    } else {
        (to..=from).rev().map(|k| 2f64.powi(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1 {
    pub alphas: Vec<u32>,
    pub a: Vec<f64>,
    pub a0: Vec<f64>,
}

impl Default for Lemma1 {
    fn default() -> Self {
        Lemma1 {
            alphas: vec![0, 2, 4, 6],
            a: powers_of_two(-3, 2),
            a0: powers_of_two(-3, -8),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma2 {
    /// Derivative orders per axis.
    pub w: Vec<[u8; 4]>,
    pub momenta: Vec<[f64; 4]>,
    pub a: f64,
    pub a0: Vec<f64>,
}

impl Default for Lemma2 {
    fn default() -> Self {
        Lemma2 {
            w: vec![[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0]],
            momenta: vec![[0.7, 0.35, -0.21, 0.14], [1.5, -0.3, 0.9, 0.4]],
            a: 1.0,
            a0: powers_of_two(-3, -8),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSuite {
    pub functions: Vec<FunctionSpec>,
    /// Flow scale; `1/m` when absent.
    pub a: Option<f64>,
    /// Spacings; `2^-4/m .. 2^-9/m` when absent.
    pub a0: Option<Vec<f64>>,
    /// Also run a signed permutation, where the defect must sit at the floor.
    pub hypercubic: bool,
    pub preset: Preset,
}

impl Default for RotationSuite {
    fn default() -> Self {
        RotationSuite {
            functions: vec![FunctionSpec::new(0, 6), FunctionSpec::new(1, 4)],
            a: None,
            a0: None,
            hypercubic: true,
            preset: Preset::Coarse,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchySuite {
    pub functions: Vec<FunctionSpec>,
    /// Spacings; `2^-4/m .. 2^-9/m` when absent. Each is paired with its half.
    pub a0: Option<Vec<f64>>,
    pub preset: Preset,
}

impl Default for CauchySuite {
    fn default() -> Self {
        CauchySuite {
            functions: vec![FunctionSpec::new(1, 2), FunctionSpec::new(1, 4)],
            a0: None,
            preset: Preset::Default,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerCountingSuite {
    pub functions: Vec<FunctionSpec>,
    /// Spacing; `2^-9/m` when absent.
    pub a0: Option<f64>,
    /// Flow scales; `2^-7/m .. 2^-2/m` when absent.
    pub a: Option<Vec<f64>>,
    pub preset: Preset,
}

impl Default for PowerCountingSuite {
    fn default() -> Self {
        PowerCountingSuite {
            functions: vec![FunctionSpec::new(0, 6)],
            a0: None,
            a: None,
            preset: Preset::Default,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaSuite {
    pub n: Vec<usize>,
    pub width: f64,
    pub centre: [f64; 4],
    pub a0: Vec<f64>,
}

impl Default for DeltaSuite {
    fn default() -> Self {
        DeltaSuite {
            n: vec![2, 3],
            width: 1.0,
            centre: [0.0; 4],
            a0: powers_of_two(0, -3),
        }
    }
}

pub fn scaled(exponents: (i32, i32), m: f64) -> Vec<f64> {
    powers_of_two(exponents.0, exponents.1)
        .into_iter()
        .map(|x| x / m)
        .collect()
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let config: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Re-checks every regulator point against the lattice invariants.
    pub fn validate(&self) -> Result<(), CliError> {
        let Physics { m, f } = self.physics;
        if self.regulator.a0.is_empty() || self.regulator.a.is_empty() {
            return Err(CliError::Config("regulator needs at least one a0 and one a".into()));
        }
        for &a0 in &self.regulator.a0 {
            for a in &self.regulator.a {
                LatticeParams::new(a0, a.resolve()?, m, f).map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        self.quadrature.solver_config()?;
        self.task.rotation.build()?;
        multi_index(&self.task.derivative)?;
        self.task.configurations()?;
        for s in &self.task.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown suite {s:?}; known: {}",
                    SUITES.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let config: RunConfig = toml::from_str("").unwrap();
        assert_eq!(config, RunConfig::default());
        config.validate().unwrap();
    }

    #[test]
    fn default_rotation_is_the_generic_one() {
        let built = RotationSpec::default().build().unwrap();
        let generic = Rotation4::generic();
        for i in 0..4 {
            for j in 0..4 {
                assert!((built.entry(i, j) - generic.entry(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scales_parse_as_numbers_or_infinity() {
        let config: RunConfig = toml::from_str("[regulator]\na0 = [0.125]\na = [0.5, \"inf\"]\n").unwrap();
        assert_eq!(config.regulator.a[0].resolve().unwrap(), FlowScale::Finite(0.5));
        assert_eq!(config.regulator.a[1].resolve().unwrap(), FlowScale::Infinite);
        let bad: RunConfig = toml::from_str("[regulator]\na = [\"huge\"]\n").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unknown_keys_and_bad_physics_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[physics]\nmass = 1.0\n").is_err());
        let config: RunConfig = toml::from_str("[physics]\nm = 1.0\n[regulator]\na0 = [2.0]\n").unwrap();
        assert!(config.validate().is_err());
        let config: RunConfig = toml::from_str("[quadrature]\nmemo_points = 12\n").unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn default_momenta_conserve() {
        for n in [2, 4, 6, 8] {
            let legs = default_momenta(n);
            assert_eq!(legs.len(), n);
            assert!(legs.iter().copied().sum::<Momentum4>().max_abs() < 1e-15);
        }
        let sym = symmetric_point(0.3);
        assert!(sym.iter().copied().sum::<Momentum4>().max_abs() < 1e-15);
    }

    #[test]
    fn derivatives_build_a_multi_index() {
        let w = multi_index(&[
            Derivative {
                leg: 2,
                mu: 3,
                order: 1,
            },
            Derivative {
                leg: 2,
                mu: 3,
                order: 1,
            },
        ])
        .unwrap();
        assert_eq!(w.leg(1), LegOrders([0, 0, 2, 0]));
        assert!(multi_index(&[Derivative {
            leg: 0,
            mu: 1,
            order: 1
        }])
        .is_err());
    }
}
