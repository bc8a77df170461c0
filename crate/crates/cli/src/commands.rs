use std::fmt::Write as _;
use std::path::PathBuf;

use jcm_core::criteria::{criteria_scan, CriteriaResult};
use jcm_core::dynamics::{Oracle, Propagator};
use jcm_core::fock::moments_from_rho;
use jcm_core::linalg::trace_distance;
use jcm_core::measurement::{
    displace_vibronic, extract_rho_nn, run_pipeline, schedule_family, schedules_from_ladder, MomentErrors, RhoNnTable, Statistics,
    VibronicState,
};
use jcm_core::phasespace::{p_omega_integral, p_omega_series_map, Method, PhaseGrid, QuasiProbMap};
use jcm_core::{reduced_rho, Error, MomentSet, MotionalDensityMatrix, Truncation};
use ndarray::s;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::emit::{self, complex, num};
use crate::CliError;

/// Files written by a command and a one-line summary for the terminal.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub const CRITERIA_HEADER: &str = "t,c_sq,phi_sq,c_sp,c_sp_defined,c_ac,phi_ac";

fn criteria_row(r: &CriteriaResult) -> String {
    let c_sp = r.c_sp.unwrap_or(f64::NAN);
    format!(
        "{},{},{},{},{},{},{}",
        num(r.t),
        num(r.c_sq),
        num(r.phi_sq),
        num(c_sp),
        r.c_sp.is_some(),
        num(r.c_ac),
        num(r.phi_ac)
    )
}

/// Nonclassicality criteria along the scan grid, written to `criteria.csv`.
pub fn cmd_criteria(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.model_params()?;
    let trunc = cfg.truncation()?;
    let rows = criteria_scan(&params, &cfg.t_grid()?, &trunc)?;
    let mut text = emit::csv_preamble("criteria", cfg);
    text.push_str(CRITERIA_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&criteria_row(r));
        text.push('\n');
    }
    let path = emit::write(&cfg.output.directory, "criteria.csv", &text)?;
    let min_ac = rows.iter().map(|r| r.c_ac).fold(f64::INFINITY, f64::min);
    let min_sq = rows.iter().map(|r| r.c_sq).fold(f64::INFINITY, f64::min);
    Ok(Outcome { files: vec![path], summary: format!("{} points, min c_ac = {min_ac:e}, min c_sq = {min_sq:e}", rows.len()) })
}

fn grid_json(g: &PhaseGrid) -> Value {
    json!({
        "center_re": g.center().re,
        "center_im": g.center().im,
        "half_extent": g.half_extent(),
        "n_side": g.n_side(),
    })
}

fn p_map(rho: &MotionalDensityMatrix, cfg: &RunConfig) -> Result<QuasiProbMap, CliError> {
    let grid = cfg.grid()?;
    Ok(match cfg.filter.method.method() {
        Method::Series => p_omega_series_map(rho, &grid, cfg.filter.width)?,
        Method::Integral => p_omega_integral(rho, &grid, &cfg.filter()?)?,
    })
}

/// Regularized P function of the motional state at `snapshot.t` on the
/// configured grid, written to `pfunc.json`. `values` is row-major with rows
/// along the imaginary axis.
pub fn cmd_pfunc(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.model_params()?;
    let rho = reduced_rho(cfg.snapshot.t, &params, &cfg.truncation()?)?;
    let map = p_map(&rho, cfg)?;
    let (min_value, argmin) = map.min();
    let data = json!({
        "t": cfg.snapshot.t,
        "grid": grid_json(&map.grid),
        "method": cfg.filter.method.name(),
        "width_w": map.width,
        "values": map.values.iter().copied().collect::<Vec<f64>>(),
        "min_value": min_value,
        "argmin": complex(argmin),
        "integral": map.integral(),
    });
    let path = emit::write_json(&cfg.output.directory, "pfunc.json", &emit::envelope("pfunc", cfg, data))?;
    Ok(Outcome { files: vec![path], summary: format!("min P = {min_value:e} at {argmin}, integral {:.6}", map.integral()) })
}

/// Dense-propagation check of the analytic motional state over the scan grid,
/// written to `oracle_check.json`. Fails with exit status 1 when the largest
/// trace distance reaches `oracle.threshold`.
pub fn cmd_oracle_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.model_params()?;
    if params.beta0.norm() > 3.0 {
        return Err(Error::Domain(format!("oracle needs |beta0| <= 3, got {}", params.beta0.norm())).into());
    }
    let o = &cfg.oracle;
    let trunc = Truncation::new(o.motional_dim - 1, cfg.truncation.tail_tol).map_err(|e| CliError::Config(format!("oracle.motional_dim: {e}")))?;
    let analytic = Propagator::new(&params, &trunc)?;
    let mut oracle_params = params.clone();
    oracle_params.eta += o.eta_mismatch;
    let oracle = Oracle::new(&oracle_params, o.cavity_dim, o.motional_dim)?;

    let mut rows = Vec::new();
    let mut max_distance = 0.0f64;
    for t in cfg.t_grid()? {
        let a = analytic.rho_at(t)?;
        let b = oracle.rho_at(t);
        let d = trace_distance(a.matrix(), b.matrix());
        max_distance = max_distance.max(d);
        rows.push(json!({ "t": t, "trace_distance": d }));
    }
    let pass = max_distance < o.threshold;
    let data = json!({
        "rows": rows,
        "max_distance": max_distance,
        "threshold": o.threshold,
        "pass": pass,
        "cavity_dim": o.cavity_dim,
        "motional_dim": o.motional_dim,
        "eta_mismatch": o.eta_mismatch,
    });
    let path = emit::write_json(&cfg.output.directory, "oracle_check.json", &emit::envelope("oracle-check", cfg, data))?;
    if !pass {
        return Err(CliError::OracleFailed { max_distance, threshold: o.threshold });
    }
    Ok(Outcome { files: vec![path], summary: format!("pass, max trace distance {max_distance:e}") })
}

fn moments_json(m: &MomentSet) -> Value {
    json!({
        "mean_a": complex(m.mean_a),
        "mean_a2": complex(m.mean_a2),
        "mean_n": m.mean_n,
        "mean_na": complex(m.mean_na),
        "mean_n2": m.mean_n2,
    })
}

fn errors_json(e: &MomentErrors) -> Value {
    json!({
        "mean_a": e.mean_a,
        "mean_a2": e.mean_a2,
        "mean_n": e.mean_n,
        "mean_na": e.mean_na,
        "mean_n2": e.mean_n2,
    })
}

fn criteria_json(r: &CriteriaResult) -> Value {
    json!({
        "c_sq": r.c_sq,
        "phi_sq": r.phi_sq,
        "c_sp": r.c_sp,
        "c_sp_defined": r.c_sp.is_some(),
        "c_ac": r.c_ac,
        "phi_ac": r.phi_ac,
    })
}

fn statistics_json(s: &Statistics) -> Value {
    match s {
        Statistics::Ideal => json!({ "mode": "ideal" }),
        Statistics::Shots { shots, seed } => json!({ "mode": "shots", "shots": shots, "seed": seed }),
    }
}

/// Leading `dim × dim` blocks of `state`; fails when the discarded weight
/// exceeds `tol`.
fn crop(state: &VibronicState, dim: usize, tol: f64) -> Result<VibronicState, CliError> {
    let blocks = state.blocks().clone().map(|row| row.map(|b| b.slice(s![..dim, ..dim]).to_owned()));
    let cropped = VibronicState::from_blocks(blocks)?;
    let lost = state.trace() - cropped.trace();
    if lost > tol {
        return Err(Error::Truncation(format!("displaced state carries weight {lost:e} beyond the probe cutoff {}", dim - 1)).into());
    }
    Ok(cropped)
}

/// Probe-inversion tables at the configured displacements, each next to the
/// exact displaced diagonal elements.
fn probe_tables(state: &VibronicState, cfg: &RunConfig, trunc: &Truncation) -> Result<Vec<(RhoNnTable, RhoNnTable)>, CliError> {
    let params = cfg.model_params()?;
    let m = &cfg.measurement;
    let probe = cfg.probe_truncation()?;
    let points: Vec<C64> = match &m.table_points {
        Some(p) => p.iter().map(|p| C64::new(p[0], p[1])).collect(),
        None => vec![C64::new(0.0, 0.0)],
    };
    let zero = C64::new(0.0, 0.0);
    let schedules = match &m.ladder {
        Some(l) => schedules_from_ladder(zero, cfg.basis(), l, m.kappa_prime)?,
        None => schedule_family(zero, cfg.basis(), probe.dim(), m.kappa_prime, m.tau0)?,
    };
    let mut out = Vec::with_capacity(points.len());
    for (idx, &alpha) in points.iter().enumerate() {
        let displaced = displace_vibronic(state, alpha, trunc)?;
        let cropped = crop(&displaced, probe.dim(), probe.tail_tol())?;
        let statistics = match cfg.statistics() {
            Statistics::Ideal => Statistics::Ideal,
            Statistics::Shots { shots, seed } => Statistics::Shots { shots, seed: seed.wrapping_add(idx as u64 + 1) },
        };
        let mut table = extract_rho_nn(&cropped, zero, &schedules, &params, &probe, cfg.basis(), statistics)?;
        table.alpha = alpha;
        out.push((table, RhoNnTable::direct(state, alpha, trunc)?));
    }
    Ok(out)
}

/// Simulated reconstruction on the state `|2⟩⟨2| ⊗ ρ_mot(snapshot.t)`.
/// Writes `measure_rho_nn.csv`, `measure_wigner.csv`, `measure_pmatrix.csv`
/// (when enabled) and `measure.json` with the moments and criteria.
pub fn cmd_measure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.model_params()?;
    let trunc = cfg.truncation()?;
    let t = cfg.snapshot.t;
    let rho = reduced_rho(t, &params, &trunc)?;
    let state = VibronicState::excited(&rho);
    let pipeline = cfg.pipeline()?;
    let tables = probe_tables(&state, cfg, &trunc)?;
    let out = run_pipeline(&state, t, &pipeline)?;
    let direct_moments = moments_from_rho(&rho);
    let direct = CriteriaResult::from_moments(t, direct_moments);
    let dir = &cfg.output.directory;
    let mut files = Vec::new();

    let mut text = emit::csv_preamble("measure", cfg);
    text.push_str("alpha_re,alpha_im,n,rho11,rho22,rho21_re,rho21_im,rho11_direct,rho22_direct,rho21_re_direct,rho21_im_direct\n");
    for (table, exact) in &tables {
        for n in 0..table.len() {
            let _ = writeln!(
                text,
                "{},{},{n},{},{},{},{},{},{},{},{}",
                num(table.alpha.re),
                num(table.alpha.im),
                num(table.rho11[n]),
                num(table.rho22[n]),
                num(table.rho21[n].re),
                num(table.rho21[n].im),
                num(exact.rho11[n]),
                num(exact.rho22[n]),
                num(exact.rho21[n].re),
                num(exact.rho21[n].im)
            );
        }
    }
    files.push(emit::write(dir, "measure_rho_nn.csv", &text)?);

    let w = &out.wigner;
    let exact_w = match out.statistics {
        Statistics::Ideal => None,
        Statistics::Shots { .. } => Some(jcm_core::measurement::WignerMatrixGrid::compute(&state, &w.grid)?),
    };
    let exact_w = exact_w.as_ref().unwrap_or(w).traced();
    let traced = w.traced();
    let mut text = emit::csv_preamble("measure", cfg);
    text.push_str("alpha_re,alpha_im,w11,w22,w21_re,w21_im,w_traced,w_traced_direct\n");
    let n = w.grid.n_side();
    for j in 0..n {
        for i in 0..n {
            let a = w.grid.point(j, i);
            let v = |p: usize, q: usize| w.values[p][q][[j, i]];
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{}",
                num(a.re),
                num(a.im),
                num(v(0, 0).re),
                num(v(1, 1).re),
                num(v(1, 0).re),
                num(v(1, 0).im),
                num(traced[[j, i]]),
                num(exact_w[[j, i]])
            );
        }
    }
    files.push(emit::write(dir, "measure_wigner.csv", &text)?);

    let mut p_summary = Value::Null;
    if let Some(p) = &out.p_matrix {
        let reference = p_map(&rho, cfg)?;
        let traced = p.traced();
        let mut text = emit::csv_preamble("measure", cfg);
        text.push_str("alpha_re,alpha_im,p11,p22,p21_re,p21_im,p_traced,p_traced_direct\n");
        let n = p.grid.n_side();
        let mut max_diff = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let a = p.grid.point(j, i);
                let v = |x: usize, y: usize| p.values[x][y][[j, i]];
                max_diff = max_diff.max((traced.values[[j, i]] - reference.values[[j, i]]).abs());
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{}",
                    num(a.re),
                    num(a.im),
                    num(v(0, 0).re),
                    num(v(1, 1).re),
                    num(v(1, 0).re),
                    num(v(1, 0).im),
                    num(traced.values[[j, i]]),
                    num(reference.values[[j, i]])
                );
            }
        }
        files.push(emit::write(dir, "measure_pmatrix.csv", &text)?);
        let (min_value, argmin) = traced.min();
        p_summary = json!({
            "grid": grid_json(&p.grid),
            "method": cfg.filter.method.name(),
            "width_w": p.width,
            "min_value": min_value,
            "argmin": complex(argmin),
            "integral": traced.integral(),
            "max_abs_difference_to_direct": max_diff,
            "convergence_warnings": p.convergence_warnings,
        });
    }

    let table_summary: Vec<Value> = tables
        .iter()
        .map(|(t, e)| {
            json!({
                "alpha": complex(t.alpha),
                "levels": t.len(),
                "condition": t.condition,
                "residual": t.residual,
                "max_abs_deviation_to_direct": t.max_deviation(e),
            })
        })
        .collect();
    let data = json!({
        "t": t,
        "input_state": "electronic level |2> times the reduced motional state at snapshot.t; \
                        cavity correlations and electronic coherence of the driven dynamics are not carried over",
        "statistics": statistics_json(&out.statistics),
        "moments": {
            "extracted": moments_json(&out.moments),
            "errors": errors_json(&out.moment_errors),
            "direct": moments_json(&direct_moments),
        },
        "criteria": {
            "extracted": criteria_json(&out.criteria),
            "direct": criteria_json(&direct),
        },
        "probe_tables": table_summary,
        "p_matrix": p_summary,
    });
    files.push(emit::write_json(dir, "measure.json", &emit::envelope("measure", cfg, data))?);
    Ok(Outcome {
        files,
        summary: format!("c_ac extracted {:e}, direct {:e}", out.criteria.c_ac, direct.c_ac),
    })
}
