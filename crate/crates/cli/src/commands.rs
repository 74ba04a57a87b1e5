//! The four commands. Each returns its tables and a verdict; `main` decides
//! where they go.

use serde::Serialize;

use phi4_flow::propagator::propagator_rotated;
use phi4_flow::quadrature::{integrate_bz_with, QuadratureSpec, Symmetry};
use phi4_flow::verification::{self, GaussianTest, SweepReport, Verdict};
use phi4_flow::{
    hat_momentum_sq, rsy_channels, CasIndex, FlowScale, FlowSolver, LatticeParams, LegOrders, Momentum4, MultiIndex,
    RotationContext, ScopeError,
};

use crate::config::{default_momenta, multi_index, scaled, symmetric_point, FunctionSpec, RunConfig, SUITES};
use crate::table::{gnuplot_script, Cell, Table};
use crate::CliError;

/// A named output file.
pub struct Artifact {
    pub name: String,
    pub content: String,
}

/// What a command produced.
pub struct Outcome {
    /// Printed when no output directory is configured.
    pub stdout: String,
    /// Written into the output directory when one is configured.
    pub artifacts: Vec<Artifact>,
    /// Printed when artifacts went to the output directory.
    pub summary: String,
    pub verdict: Verdict,
}

impl Outcome {
    fn table(name: &str, table: &Table) -> Result<Self, CliError> {
        let csv = table.to_csv()?;
        Ok(Outcome {
            stdout: csv.clone(),
            artifacts: vec![Artifact {
                name: format!("{name}.csv"),
                content: csv,
            }],
            summary: format!("{name}: {} rows\n", table.rows.len()),
            verdict: Verdict::Pass,
        })
    }
}

fn momentum_headers(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|i| (1..=4).map(move |mu| format!("p{i}_{mu} (mass)")))
        .collect()
}

fn momentum_cells(legs: &[Momentum4]) -> Vec<Cell> {
    legs.iter().flat_map(|p| p.0.map(Cell::Real)).collect()
}

fn scale_cell(a: FlowScale) -> Cell {
    match a {
        FlowScale::Finite(x) => Cell::Real(x),
        FlowScale::Infinite => Cell::Real(f64::INFINITY),
    }
}

fn function_unit(n: usize, derivatives: usize) -> String {
    let d = 4 - n as i64 - derivatives as i64;
    format!("mass^{d}")
}

pub fn eval(config: &RunConfig) -> Result<Outcome, CliError> {
    let task = &config.task;
    let idx = task.index();
    let w = multi_index(&task.derivative)?;
    let ctx = if task.rotated {
        RotationContext::rotated(task.rotation.build()?)
    } else {
        RotationContext::plain()
    };
    let solver_config = config.quadrature.solver_config()?;
    let unit = function_unit(idx.n, w.total());
    let mut headers: Vec<String> = ["a0 (length)", "a (length)", "l", "n", "config", "rotated"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(momentum_headers(idx.n));
    headers.push(format!("value ({unit})"));
    headers.push(format!("error ({unit})"));
    let mut table = Table::new(headers);
    let configurations = task.configurations()?;
    for &a0 in &config.regulator.a0 {
        let solver = FlowSolver::new(a0, config.physics.m, config.physics.f, solver_config)?;
        for scale in &config.regulator.a {
            let a = scale.resolve()?;
            for (i, legs) in configurations.iter().enumerate() {
                let v = solver.evaluate_derivative(idx, legs, &w, a, &ctx)?;
                let mut row = vec![
                    Cell::Real(a0),
                    scale_cell(a),
                    Cell::Int(idx.l as i64),
                    Cell::Int(idx.n as i64),
                    Cell::Int(i as i64 + 1),
                    Cell::Int(task.rotated as i64),
                ];
                row.extend(momentum_cells(legs));
                row.push(Cell::Real(v.value));
                row.push(Cell::Real(v.error));
                table.push(row);
            }
        }
    }
    Outcome::table("eval", &table)
}

pub fn counterterms(config: &RunConfig) -> Result<Outcome, CliError> {
    let solver_config = config.quadrature.solver_config()?;
    let headers = ["a0 (length)", "l", "d (mass^2)", "b (1)", "c (1)"];
    let mut table = Table::new(headers.iter().map(|s| s.to_string()).collect());
    for &a0 in &config.regulator.a0 {
        let solver = FlowSolver::new(a0, config.physics.m, config.physics.f, solver_config)?;
        for &l in &config.task.loops {
            let ct = solver.counterterms(l)?;
            table.push(vec![
                Cell::Real(a0),
                Cell::Int(l as i64),
                Cell::Real(ct.d),
                Cell::Real(ct.b),
                ct.c.map_or(Cell::Empty, Cell::Real),
            ]);
        }
    }
    Outcome::table("counterterms", &table)
}

/// Closed forms that bypass the flow: tree functions as propagator channel
/// sums, and the one-loop two-point function as a single zone integral.
fn oracle_value(
    params: &LatticeParams,
    idx: CasIndex,
    legs: &[Momentum4],
    ctx: &RotationContext,
) -> Result<f64, CliError> {
    let f = params.f;
    match (idx.l, idx.n) {
        _ if idx.is_zero() => Ok(0.0),
        (0, 4) => Ok(f),
        (0, 6) => Ok(rsy_channels(6, 3)
            .channels
            .iter()
            .map(|ch| {
                let q: Momentum4 = ch.first.iter().map(|&i| legs[i]).sum();
                -f * f * propagator_rotated(params, &q, ctx.rotation.as_ref())
            })
            .sum()),
        (1, 2) if ctx.rotation.is_none() => {
            let Some(a2) = params.a.squared() else {
                return Ok(0.0);
            };
            let a = a2.sqrt();
            let m2 = params.m * params.m;
            let spec = QuadratureSpec::new(16, 2, Some(a), 1e-12).map_err(phi4_flow::FlowError::from)?;
            let (a0, a2) = (params.a0, a * a);
            let integral = integrate_bz_with(
                |k| {
                    let mass = hat_momentum_sq(k, a0) + m2;
                    (-a2 * mass).exp() / mass
                },
                a0,
                &spec,
                Symmetry::Hypercubic,
            )
            .map_err(phi4_flow::FlowError::from)?;
            Ok(-0.5 * f * integral.value)
        }
        (l, n) => Err(phi4_flow::FlowError::from(ScopeError::Function { l, n }).into()),
    }
}

pub fn oracle(config: &RunConfig) -> Result<Outcome, CliError> {
    let task = &config.task;
    let idx = task.index();
    idx.check().map_err(phi4_flow::FlowError::from)?;
    if !task.derivative.is_empty() {
        return Err(CliError::Scope("the oracle has no derivatives".into()));
    }
    let ctx = if task.rotated {
        RotationContext::rotated(task.rotation.build()?)
    } else {
        RotationContext::plain()
    };
    let unit = function_unit(idx.n, 0);
    let mut headers: Vec<String> = ["a0 (length)", "a (length)", "l", "n", "config", "rotated"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(momentum_headers(idx.n));
    headers.push(format!("value ({unit})"));
    let mut table = Table::new(headers);
    let configurations = task.configurations()?;
    for &a0 in &config.regulator.a0 {
        for scale in &config.regulator.a {
            let a = scale.resolve()?;
            let params = LatticeParams::new(a0, a, config.physics.m, config.physics.f)?;
            for (i, legs) in configurations.iter().enumerate() {
                let value = oracle_value(&params, idx, legs, &ctx)?;
                let mut row = vec![
                    Cell::Real(a0),
                    scale_cell(a),
                    Cell::Int(idx.l as i64),
                    Cell::Int(idx.n as i64),
                    Cell::Int(i as i64 + 1),
                    Cell::Int(task.rotated as i64),
                ];
                row.extend(momentum_cells(legs));
                row.push(Cell::Real(value));
                table.push(row);
            }
        }
    }
    Outcome::table("oracle", &table)
}

/// A report within a suite. `by_design` marks reports that are meant to be
/// inconclusive; they count as passing exactly when they are.
#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub report: SweepReport,
    pub by_design: bool,
    pub units: Vec<String>,
}

impl Entry {
    fn new(report: SweepReport, value_unit: &str) -> Self {
        let units = report.headers.iter().map(|h| column_unit(h, value_unit)).collect();
        Entry {
            report,
            by_design: false,
            units,
        }
    }

    fn effective(&self) -> Verdict {
        match (self.by_design, self.report.verdict) {
            (false, v) => v,
            (true, Verdict::Inconclusive) => Verdict::Pass,
            (true, _) => Verdict::Fail,
        }
    }
}

fn column_unit(header: &str, value_unit: &str) -> String {
    match header {
        "a0" | "a" => "length".into(),
        "inverse_a_plus_m" => "mass".into(),
        "alpha" | "ratio" | "relative_tail" => "1".into(),
        h if h.starts_with("ln_") => "1".into(),
        _ => value_unit.into(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub verdict: Verdict,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub suites: Vec<SuiteOutcome>,
}

fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in verdicts {
        out = match (out, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        };
    }
    out
}

fn selected(functions: &[FunctionSpec], only: Option<CasIndex>) -> Vec<FunctionSpec> {
    functions
        .iter()
        .filter(|f| only.is_none_or(|idx| f.index() == idx))
        .cloned()
        .collect()
}

fn run_suite(config: &RunConfig, name: &str, only: Option<CasIndex>) -> Result<Vec<Entry>, CliError> {
    let m = config.physics.m;
    let f = config.physics.f;
    let v = &config.verify;
    match name {
        "lemma1" => Ok(
            verification::verify_lemma1(&v.lemma1.alphas, &v.lemma1.a, &v.lemma1.a0)?
                .into_iter()
                .map(|r| Entry::new(r, "1"))
                .collect(),
        ),
        "lemma2" => {
            let ws: Vec<LegOrders> = v.lemma2.w.iter().map(|w| LegOrders(*w)).collect();
            let ps: Vec<Momentum4> = v.lemma2.momenta.iter().map(|p| Momentum4(*p)).collect();
            let rotation = config.task.rotation.build()?;
            let reports = verification::verify_lemma2(&ws, &ps, &rotation, v.lemma2.a, m, &v.lemma2.a0)?;
            Ok(reports
                .into_iter()
                .zip(&ws)
                .map(|(r, w)| Entry::new(r, &format!("length^{}", 3 + w.total())))
                .collect())
        }
        "rotation" => {
            let suite = &v.rotation;
            let a = suite.a.unwrap_or(1.0 / m);
            let a0s = suite.a0.clone().unwrap_or_else(|| scaled((-4, -9), m));
            let solver_config = config.quadrature.solver_config_from(suite.preset)?;
            let rotation = config.task.rotation.build()?;
            let mut entries = Vec::new();
            for func in selected(&suite.functions, only) {
                let legs = func.legs(default_momenta)?;
                let r =
                    verification::rotation_scaling_fit(func.index(), &legs, &rotation, a, m, f, &a0s, solver_config)?;
                entries.push(Entry::new(r, &function_unit(func.n, 0)));
            }
            if suite.hypercubic {
                let hyper = phi4_flow::Rotation4::signed_permutation([1, 2, 0, 3], [1.0, -1.0, 1.0, 1.0])
                    .expect("signed permutation");
                let legs = default_momenta(6);
                let mut r = verification::rotation_scaling_fit(
                    CasIndex::new(0, 6),
                    &legs,
                    &hyper,
                    a,
                    m,
                    f,
                    &a0s,
                    solver_config,
                )?;
                r.suite = format!("{} hypercubic", r.suite);
                let mut entry = Entry::new(r, &function_unit(6, 0));
                entry.by_design = true;
                entries.push(entry);
            }
            Ok(entries)
        }
        "cauchy" => {
            let suite = &v.cauchy;
            let a0s = suite.a0.clone().unwrap_or_else(|| scaled((-4, -9), m));
            let solver_config = config.quadrature.solver_config_from(suite.preset)?;
            selected(&suite.functions, only)
                .iter()
                .map(|func| {
                    let fallback = |n| {
                        if n == 4 {
                            symmetric_point(0.3)
                        } else {
                            default_momenta(n)
                        }
                    };
                    let legs = func.legs(fallback)?;
                    let r = verification::cauchy_convergence(func.index(), &legs, m, f, &a0s, solver_config)?;
                    Ok(Entry::new(r, &function_unit(func.n, 0)))
                })
                .collect()
        }
        "power-counting" => {
            let suite = &v.power_counting;
            let a0 = suite.a0.unwrap_or(2f64.powi(-9) / m);
            let a_list = suite.a.clone().unwrap_or_else(|| scaled((-7, -2), m));
            let solver_config = config.quadrature.solver_config_from(suite.preset)?;
            selected(&suite.functions, only)
                .iter()
                .map(|func| {
                    let legs = func.legs(default_momenta)?;
                    let w: MultiIndex = multi_index(&func.derivative)?;
                    let r =
                        verification::power_counting_fit(func.index(), &legs, &w, a0, m, f, &a_list, solver_config)?;
                    Ok(Entry::new(r, &function_unit(func.n, w.total())))
                })
                .collect()
        }
        "delta" => {
            let suite = &v.delta;
            let test = GaussianTest {
                width: suite.width,
                centre: Momentum4(suite.centre),
            };
            suite
                .n
                .iter()
                .map(|&n| {
                    let r = verification::periodic_delta_defect(&test, n, &suite.a0)?;
                    Ok(Entry::new(r, &format!("mass^{}", 4 * (n - 1))))
                })
                .collect()
        }
        other => Err(CliError::Config(format!(
            "unknown suite {other:?}; known: {}",
            SUITES.join(", ")
        ))),
    }
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn sweep_table(entry: &Entry) -> Table {
    let headers = entry
        .report
        .headers
        .iter()
        .zip(&entry.units)
        .map(|(h, u)| format!("{h} ({u})"))
        .collect();
    let mut table = Table::new(headers);
    for row in &entry.report.rows {
        table.push(row.iter().map(|&x| Cell::Real(x)).collect());
    }
    table
}

fn plot_columns(report: &SweepReport) -> ((usize, String), (usize, String)) {
    let find = |names: &[&str]| {
        names.iter().find_map(|n| {
            report
                .headers
                .iter()
                .position(|h| h == n)
                .map(|i| (i + 1, n.to_string()))
        })
    };
    let x = find(&["inverse_a_plus_m", "a0"]).unwrap_or((1, report.headers[0].clone()));
    let y = find(&["ratio", "abs_defect", "abs_difference", "defect_over_a0_8", "value"])
        .unwrap_or((report.headers.len(), report.headers.last().cloned().unwrap_or_default()));
    (x, y)
}

pub fn verify(
    config: &RunConfig,
    suites: &[String],
    only: Option<CasIndex>,
    gnuplot: bool,
) -> Result<Outcome, CliError> {
    let names: Vec<String> = if suites.is_empty() {
        config.task.suites.clone()
    } else {
        suites.to_vec()
    };
    let mut outcomes = Vec::new();
    for name in &names {
        let entries = run_suite(config, name, only)?;
        let verdict = combine(entries.iter().map(Entry::effective));
        outcomes.push(SuiteOutcome {
            name: name.clone(),
            verdict,
            entries,
        });
    }
    let report = VerifyReport {
        verdict: combine(outcomes.iter().map(|s| s.verdict)),
        suites: outcomes,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let mut artifacts = vec![Artifact {
        name: "verify.json".into(),
        content: json.clone(),
    }];
    let mut summary = String::new();
    for suite in &report.suites {
        summary.push_str(&format!("{}: {}\n", suite.name, suite.verdict));
        for entry in &suite.entries {
            let note = if entry.by_design {
                " (inconclusive by design)"
            } else {
                ""
            };
            summary.push_str(&format!(
                "  {}: {}{note}; {}\n",
                entry.report.suite, entry.report.verdict, entry.report.summary
            ));
            let file = slug(&entry.report.suite);
            artifacts.push(Artifact {
                name: format!("{file}.csv"),
                content: sweep_table(entry).to_csv()?,
            });
            if gnuplot {
                let ((xi, xn), (yi, yn)) = plot_columns(&entry.report);
                artifacts.push(Artifact {
                    name: format!("{file}.gp"),
                    content: gnuplot_script(&format!("{file}.csv"), &entry.report.suite, (xi, &xn), (yi, &yn)),
                });
            }
        }
    }
    summary.push_str(&format!("overall: {}\n", report.verdict));
    Ok(Outcome {
        stdout: json,
        artifacts,
        summary,
        verdict: report.verdict,
    })
}
