//! Task runners: each dispatches into the library, writes CSV artifacts and
//! returns a JSON fragment plus a pass/fail flag for the exit status.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use pmclab::approx::gamma_experiment;
use pmclab::certify::{compare_max_principle, verify_solution, verify_weak_solution};
use pmclab::measure::{ball_condition_check, density_bound_check, hahn_lambda, nonextremality_ratio};
use pmclab::minimize::{MinimizeParams, RadialSaddleProblem};
use pmclab::profile::RadialProfile;
use pmclab::radial::{
    energy_radial, jump_classification, solve_dirichlet_radial, RadialSolution, SolveOutcome,
};

use crate::scenario::{Scenario, Task};

pub struct TaskOutput {
    pub result: Value,
    pub pass: bool,
}

pub fn run(sc: &Scenario, out_dir: &Path, jobs: Option<usize>) -> Result<TaskOutput> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    match sc.task {
        Task::Radial => run_radial(sc, out_dir),
        Task::Minimize => run_minimize(sc, out_dir),
        Task::Verify => run_verify(sc, out_dir),
        Task::Gamma => run_gamma(sc, out_dir, jobs),
        Task::Family => run_family(sc, out_dir, jobs),
        Task::MaxPrinciple => run_maxprinciple(sc, out_dir),
        Task::Checks => run_checks(sc, out_dir),
    }
}

fn minimize_params(sc: &Scenario) -> MinimizeParams {
    MinimizeParams {
        tol_gap: sc.params.tol_gap.unwrap(),
        max_iter: sc.params.max_iter.unwrap(),
        ..Default::default()
    }
}

fn write_profile_csv(out_dir: &Path, name: &str, p: &RadialProfile) -> Result<()> {
    fs::write(out_dir.join(name), p.to_csv())?;
    Ok(())
}

fn write_field_csv(out_dir: &Path, name: &str, grid: &[f64], t: &[f64]) -> Result<()> {
    let mut csv = String::from("r_mid,T\n");
    for (i, t) in t.iter().enumerate() {
        let mid = 0.5 * (grid[i] + grid[i + 1]);
        csv.push_str(&format!("{},{}\n", mid, t));
    }
    fs::write(out_dir.join(name), csv)?;
    Ok(())
}

fn solution_json(sol: &RadialSolution) -> Value {
    // One-sided field traces at the interval boundaries (the jump spheres):
    // the prescribed side reaches +-1 exactly where the solution jumps.
    let traces: Vec<Value> = sol
        .intervals
        .windows(2)
        .map(|pair| {
            let r = pair[0].r_hi;
            let w = r.powi(sol.domain.n as i32 - 1);
            json!({"r": r, "inner": pair[0].gamma / w, "outer": pair[1].gamma / w})
        })
        .collect();
    json!({
        "gammas": sol.intervals.iter().map(|iv| iv.gamma).collect::<Vec<_>>(),
        "intervals": sol.intervals.iter().map(|iv| json!({
            "r_lo": iv.r_lo, "r_hi": iv.r_hi, "gamma": iv.gamma, "start_value": iv.start_value,
        })).collect::<Vec<_>>(),
        "jumps": sol.jumps.iter().map(|j| json!({
            "r": j.r, "height": j.height, "direction": j.direction,
        })).collect::<Vec<_>>(),
        "field_traces": traces,
        "inner_boundary_jump": sol.inner_jump.map(|j| json!({"height": j.height, "direction": j.direction})),
        "boundary_attainment_classical": sol.boundary_attainment(),
    })
}

fn classification_json(sc: &Scenario) -> Result<Value> {
    let m = sc.measure()?;
    let mut out = Vec::new();
    let mut r_in = sc.domain.r_a;
    for a in m.atoms() {
        let c = jump_classification(sc.domain.n, r_in, a.r, a.w)?;
        out.push(json!({
            "r": a.r,
            "w": a.w,
            "regime": format!("{:?}", c.regime),
            "window": [c.window.0, c.window.1],
            "at_lower_edge": c.at_lower_edge,
            "at_upper_edge": c.at_upper_edge,
        }));
        r_in = a.r;
    }
    Ok(Value::Array(out))
}

fn run_radial(sc: &Scenario, out_dir: &Path) -> Result<TaskOutput> {
    let d = sc.domain()?;
    let m = sc.measure()?;
    let tol = sc.params.tol.unwrap();
    let outcome = solve_dirichlet_radial(d, &m, sc.boundary.0, sc.boundary.1)?;
    match outcome {
        SolveOutcome::Unique(sol) => {
            let cert = verify_solution(&sol, &m, tol)?;
            let profile = sol.sample_profile(sc.params.grid_h.unwrap())?;
            write_profile_csv(out_dir, "profile.csv", &profile)?;
            let t = pmclab::certify::sample_field(&sol, profile.grid())?;
            write_field_csv(out_dir, "field.csv", profile.grid(), &t)?;
            let energy = energy_radial(&sol, &m)?;
            let pass = cert.pass;
            Ok(TaskOutput {
                result: json!({
                    "kind": "unique",
                    "solution": solution_json(&sol),
                    "classification": classification_json(sc)?,
                    "energy": energy,
                    "certificate": cert,
                }),
                pass,
            })
        }
        SolveOutcome::Family(f) => {
            let members = f.sample(sc.params.family_samples.unwrap().max(2))?;
            let result = family_json(sc, out_dir, &m, &f, &members)?;
            Ok(TaskOutput { result, pass: true })
        }
    }
}

fn family_json(
    sc: &Scenario,
    out_dir: &Path,
    m: &pmclab::measure::RadialMeasure,
    f: &pmclab::radial::RadialFamily,
    members: &[RadialSolution],
) -> Result<Value> {
    let mut energies = Vec::new();
    for (k, s) in members.iter().enumerate() {
        energies.push(energy_radial(s, m)?);
        let p = s.sample_profile(sc.params.grid_h.unwrap())?;
        write_profile_csv(out_dir, &format!("family_{k}.csv"), &p)?;
    }
    Ok(json!({
        "kind": "family",
        "sites": format!("{:?}", f.sites),
        "translation_interval": f.translation_interval(),
        "total_height": f.total_height,
        "classification": classification_json(sc)?,
        "member_energies": energies,
        "member_traces": members.iter().map(|s| {
            Ok::<_, anyhow::Error>(json!([s.trace_inner(), s.trace_outer()?]))
        }).collect::<Result<Vec<_>>>()?,
    }))
}

fn run_minimize(sc: &Scenario, out_dir: &Path) -> Result<TaskOutput> {
    let m = sc.measure()?;
    let prob = RadialSaddleProblem::new(&m, sc.boundary.0, sc.boundary.1, sc.params.grid_h.unwrap())?;
    let sol = prob.minimize(&minimize_params(sc))?;
    write_profile_csv(out_dir, "profile.csv", &sol.u)?;
    write_field_csv(out_dir, "field.csv", sol.u.grid(), &sol.t)?;
    let tol_cert = sc.params.tol.unwrap().max(10.0 * sol.report.gap).max(1e-4);
    let cert = verify_weak_solution(&sol.u, &sol.t, &m, &hahn_lambda(&m), tol_cert)?;
    let pass = sol.report.gap <= sc.params.tol_gap.unwrap() && cert.pass;
    Ok(TaskOutput {
        result: json!({
            "convergence": sol.report,
            "certificate": cert,
        }),
        pass,
    })
}

fn run_verify(sc: &Scenario, out_dir: &Path) -> Result<TaskOutput> {
    let d = sc.domain()?;
    let m = sc.measure()?;
    let tol = sc.params.tol.unwrap();
    let sol = match solve_dirichlet_radial(d, &m, sc.boundary.0, sc.boundary.1)? {
        SolveOutcome::Unique(sol) => sol,
        SolveOutcome::Family(f) => {
            let mut heights = vec![0.0; f.sites.len()];
            heights[0] = f.total_height;
            f.member(&heights)?
        }
    };
    let cert = verify_solution(&sol, &m, tol)?;
    let profile = sol.sample_profile(sc.params.grid_h.unwrap())?;
    write_profile_csv(out_dir, "profile.csv", &profile)?;
    let pass = cert.pass;
    Ok(TaskOutput {
        result: json!({ "certificate": cert, "solution": solution_json(&sol) }),
        pass,
    })
}

fn run_gamma(sc: &Scenario, out_dir: &Path, jobs: Option<usize>) -> Result<TaskOutput> {
    let m = sc.measure()?;
    let deltas = sc.params.deltas.clone().unwrap();
    let params = minimize_params(sc);
    let table = gamma_experiment(
        &m,
        sc.boundary.0,
        sc.boundary.1,
        &deltas,
        sc.params.grid_h.unwrap(),
        &params,
        jobs,
    )?;
    fs::write(out_dir.join("experiment.csv"), table.to_csv())?;
    let tol = sc.params.tol.unwrap();
    let final_gap = table.rows.last().map(|r| r.gap).unwrap_or(f64::INFINITY);
    let pass = table.gaps_decrease_within_noise() && final_gap < tol;
    Ok(TaskOutput { result: json!({ "table": table }), pass })
}

fn run_family(sc: &Scenario, out_dir: &Path, jobs: Option<usize>) -> Result<TaskOutput> {
    let d = sc.domain()?;
    let m = sc.measure()?;
    let outcome = solve_dirichlet_radial(d, &m, sc.boundary.0, sc.boundary.1)?;
    let family = match outcome {
        SolveOutcome::Family(f) => f,
        SolveOutcome::Unique(_) => bail!("scenario does not produce a family"),
    };
    let k = sc.params.family_samples.unwrap().max(2);
    let members = pmclab::exec::with_jobs(jobs, || family.sample(k))?;
    let result = family_json(sc, out_dir, &m, &family, &members)?;

    // Assertions: identical traces, equal energies, and the comparison
    // theorem must refuse a pair of members (the continuity hypothesis
    // fails), which is the sharpness behavior of the construction.
    let energies: Vec<f64> = result["member_energies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let e0 = energies[0];
    let tol = sc.params.tol.unwrap();
    let energies_equal = energies.iter().all(|e| (e - e0).abs() <= tol * e0.abs());
    let h = sc.params.grid_h.unwrap();
    let p0 = members[0].sample_profile(h)?;
    let p1 = members[members.len() - 1].sample_profile(h)?;
    let refused = compare_max_principle(&p0, &p1, &m, &m, 1e-9).is_err();
    let pass = energies_equal && refused && members.len() >= k;
    Ok(TaskOutput {
        result: json!({
            "family": result,
            "energies_equal_within_tol": energies_equal,
            "max_principle_refused_on_members": refused,
        }),
        pass,
    })
}

fn run_maxprinciple(sc: &Scenario, out_dir: &Path) -> Result<TaskOutput> {
    let m = sc.measure()?;
    let (b2a, b2b) = sc
        .params
        .boundary2
        .ok_or_else(|| anyhow::anyhow!("maxprinciple task needs params.boundary2"))?;
    let h = sc.params.grid_h.unwrap();
    let params = minimize_params(sc);
    let hi = RadialSaddleProblem::new(&m, sc.boundary.0, sc.boundary.1, h)?.minimize(&params)?;
    let lo = RadialSaddleProblem::new(&m, b2a, b2b, h)?.minimize(&params)?;
    write_profile_csv(out_dir, "profile_upper.csv", &hi.u)?;
    write_profile_csv(out_dir, "profile_lower.csv", &lo.u)?;
    let outcome = compare_max_principle(&hi.u, &lo.u, &m, &m, sc.params.tol.unwrap())?;
    let pass = outcome.holds;
    Ok(TaskOutput {
        result: json!({
            "ordering_holds": outcome.holds,
            "worst_violation": outcome.worst,
            "upper": hi.report,
            "lower": lo.report,
        }),
        pass,
    })
}

fn run_checks(sc: &Scenario, out_dir: &Path) -> Result<TaskOutput> {
    let m = sc.measure()?;
    let ne = nonextremality_ratio(&m, sc.params.resolution.unwrap())?;
    let ball = ball_condition_check(&m, sc.params.samples.unwrap())?;
    let dens = density_bound_check(&m);
    let report = json!({
        "nonextremality": ne,
        "ball_condition": ball,
        "density_bound": dens,
    });
    fs::write(out_dir.join("checks.json"), serde_json::to_string_pretty(&report)?)?;
    let pass = ne.l_hat < 1.0 && !ball.violated;
    Ok(TaskOutput { result: report, pass })
}
