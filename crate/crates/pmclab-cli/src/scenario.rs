//! Scenario schema: a single JSON file describing the domain, the measure,
//! the boundary data, the task to run and its parameters. All defaults are
//! resolved at load time and written back into the report for
//! reproducibility.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use pmclab::geom::RadialDomain;
use pmclab::measure::{DensityPiece, RadialMeasure};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub n: u32,
    pub r_a: f64,
    pub r_b: f64,
    #[serde(rename = "R_B")]
    pub r_ball: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub density: Vec<DensityPiece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Radial,
    Minimize,
    Verify,
    Gamma,
    Family,
    MaxPrinciple,
    Checks,
}

/// Task parameters; unset fields take the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TaskParams {
    /// Grid step of the discrete carrier.
    pub grid_h: Option<f64>,
    /// Duality-gap tolerance for minimizations.
    pub tol_gap: Option<f64>,
    /// Certificate / assertion tolerance.
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Mollification widths for the gamma task, strictly decreasing.
    pub deltas: Option<Vec<f64>>,
    /// Number of family members to sample.
    pub family_samples: Option<usize>,
    /// Second boundary pair for the maxprinciple task.
    pub boundary2: Option<(f64, f64)>,
    /// Resolution of the non-extremality estimator.
    pub resolution: Option<usize>,
    /// Ball-condition sample count.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub domain: DomainSpec,
    #[serde(default)]
    pub measure: MeasureSpec,
    /// Dirichlet data `(phi_a, phi_b)`.
    pub boundary: (f64, f64),
    pub task: Task,
    #[serde(default)]
    pub params: TaskParams,
}

impl Scenario {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let sc: Scenario = serde_json::from_str(text).context("scenario JSON does not parse")?;
        if sc.schema_version != 1 {
            bail!("unsupported schema_version {} (expected 1)", sc.schema_version);
        }
        Ok(sc)
    }

    pub fn domain(&self) -> anyhow::Result<RadialDomain> {
        Ok(RadialDomain::new(self.domain.n, self.domain.r_a, self.domain.r_b, self.domain.r_ball)?)
    }

    pub fn measure(&self) -> anyhow::Result<RadialMeasure> {
        let d = self.domain()?;
        let atoms = self.measure.atoms.iter().map(|&(r, w)| pmclab::measure::Atom { r, w }).collect();
        Ok(RadialMeasure::new(d, atoms, self.measure.density.clone())?)
    }

    /// Fills every unset parameter with its default, so the report carries
    /// the full resolved configuration.
    pub fn resolve_defaults(&mut self) {
        let p = &mut self.params;
        p.grid_h.get_or_insert(2e-3);
        p.tol_gap.get_or_insert(1e-6);
        p.tol.get_or_insert(match self.task {
            Task::Verify | Task::Radial | Task::Family => 1e-8,
            Task::Gamma => 1e-2,
            _ => 1e-6,
        });
        p.max_iter.get_or_insert(1_000_000);
        p.family_samples.get_or_insert(5);
        p.resolution.get_or_insert(512);
        p.samples.get_or_insert(64);
        if self.task == Task::Gamma {
            p.deltas.get_or_insert_with(|| vec![0.2, 0.1, 0.05, 0.025]);
        }
    }
}

/// One validation finding.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: &'static str, // "error" | "warning"
    pub field: String,
    pub message: String,
}

/// Schema plus semantic validation without running any solver: domain
/// ordering, atom placement, per-atom jump windows, and the
/// non-extremality precheck.
pub fn validate(sc: &Scenario) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    fn err(out: &mut Vec<Diagnostic>, field: &str, message: String) {
        out.push(Diagnostic { severity: "error", field: field.into(), message });
    }
    if !(sc.domain.r_a > 0.0 && sc.domain.r_a < sc.domain.r_b) {
        err(&mut out, "domain.r_a", format!("need 0 < r_a < r_b, got ({}, {})", sc.domain.r_a, sc.domain.r_b));
    }
    if !(sc.domain.r_ball > sc.domain.r_b) {
        err(&mut out, "domain.R_B", format!("containing ball radius {} must exceed r_b {}", sc.domain.r_ball, sc.domain.r_b));
    }
    if sc.domain.n < 2 {
        err(&mut out, "domain.n", format!("dimension {} must be at least 2", sc.domain.n));
    }
    if !out.is_empty() {
        return out;
    }
    let mut warnings = Vec::new();
    match sc.measure() {
        Err(e) => err(&mut out, "measure", e.to_string()),
        Ok(m) => {
            // Jump windows per atom against the inner neighbor.
            let mut r_in = sc.domain.r_a;
            for a in m.atoms() {
                if let Ok(c) = pmclab::radial::jump_classification(sc.domain.n, r_in, a.r, a.w) {
                    if c.regime == pmclab::radial::JumpRegime::Infeasible {
                        warnings.push(Diagnostic {
                            severity: "warning",
                            field: "measure.atoms".into(),
                            message: format!(
                                "necessary condition violated at r = {}: |mu| = {} exceeds the window [{:.6}, {:.6}]",
                                a.r, a.w.abs(), c.window.0, c.window.1
                            ),
                        });
                    }
                }
                r_in = a.r;
            }
            match pmclab::measure::radial_l_constant(&m) {
                Ok(l) if l >= 1.0 => warnings.push(Diagnostic {
                    severity: "warning",
                    field: "measure".into(),
                    message: format!("non-extremality precheck fails: estimated ratio {l} >= 1"),
                }),
                Err(e) => err(&mut out, "measure", e.to_string()),
                _ => {}
            }
        }
    }
    if let Some(deltas) = &sc.params.deltas {
        if deltas.windows(2).any(|w| w[1] >= w[0]) {
            err(&mut out, "params.deltas", "delta list must be strictly decreasing".into());
        }
    }
    if sc.task == Task::MaxPrinciple && sc.params.boundary2.is_none() {
        err(&mut out, "params.boundary2", "maxprinciple task needs a second boundary pair".into());
    }
    out.extend(warnings);
    out
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("nine_one_sphere", include_str!("../scenarios/nine_one_sphere.json")),
    ("nine_family", include_str!("../scenarios/nine_family.json")),
    ("empty_measure", include_str!("../scenarios/empty_measure.json")),
    ("continuous_atom", include_str!("../scenarios/continuous_atom.json")),
    ("maxprinciple_pair", include_str!("../scenarios/maxprinciple_pair.json")),
    ("gamma_one_atom", include_str!("../scenarios/gamma_one_atom.json")),
    ("verify_analytic", include_str!("../scenarios/verify_analytic.json")),
    ("checks_demo", include_str!("../scenarios/checks_demo.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
