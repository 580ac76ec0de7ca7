//! One function per subcommand. Each writes its tables into `output_dir`
//! next to a copy of the config and returns the in-memory results.

use std::fs;
use std::path::{Path, PathBuf};

use hermspde::analysis::{ergodic_average, ergodic_start_gap, stability_check, tail_mass};
use hermspde::monotonicity::estimate_constant;
use hermspde::rng::PathRng;
use hermspde::simulate::{
    mean_and_stderr, oracle_error_paths, simulate_ensemble, strong_error_sweep, StrongErrorStudy,
};
use hermspde::space::embedding_bound_check;
use hermspde::{ErgodicReportF64, GradedVectorF64, MomentTableF64, SobolevIndexF64, StabilityReportF64, TailReportF64};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

pub const CONFIG_COPY: &str = "config.json";

/// Output directory of one command run.
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    /// Creates the directory and copies the config into it.
    pub fn prepare(cfg: &LoadedConfig) -> CliResult<Self> {
        let path = cfg.config.output_dir.clone();
        fs::create_dir_all(&path).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        let out = Self { path };
        out.write_text(CONFIG_COPY, &cfg.raw)?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn target(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.target(name);
        fs::write(&path, text).map_err(|source| CliError::Output { path, source })
    }

    pub fn write_json<V: Serialize>(&self, name: &str, value: &V) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> CliResult<()> {
        let path = self.target(name);
        let io_err = |e: csv::Error, path: &Path| CliError::Output {
            path: path.to_path_buf(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(e, &path))?;
        for row in rows {
            w.serialize(row).map_err(|e| io_err(e, &path))?;
        }
        w.flush().map_err(|source| CliError::Output { path, source })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantRow {
    pub model_id: String,
    pub d: usize,
    pub p: f64,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub mean_sq_norm: f64,
    pub stderr: f64,
    pub min_norm: f64,
    pub max_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCsvRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub time_avg_exceed: f64,
    pub stderr: f64,
    pub chebyshev_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingRow {
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub trials: usize,
    /// Largest `||T_n x - x||_q / ((2n + d)^{-(p - q)} ||x||_p)`.
    pub max_ratio: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongErrorCsvRow {
    pub dt: f64,
    pub mean_max_error: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub max_mean_error: f64,
    pub final_mean_error: f64,
    pub final_stderr: f64,
    pub strong: Option<StrongErrorStudy<f64>>,
}

/// Indices `p`, `p - 2`, `q - 2` in that order.
fn constant_indices(cfg: &LoadedConfig) -> Vec<f64> {
    let c = &cfg.config;
    vec![c.model.p, c.model.p - 2.0, c.q.value() - 2.0]
}

/// `C_hat` over the indices `p`, `p - 2`, `q - 2` and every `N` in `n_list`.
pub fn monotonicity(cfg: &LoadedConfig, n_list: &[usize]) -> CliResult<Vec<ConstantRow>> {
    let out = OutputDir::prepare(cfg)?;
    let spec = &cfg.config.model;
    let id = cfg.model_id();
    let mut rows = Vec::with_capacity(3 * n_list.len());
    for p in constant_indices(cfg) {
        for &n in n_list {
            let est = estimate_constant(spec, SobolevIndexF64::new(p), n)?;
            rows.push(ConstantRow {
                model_id: id.clone(),
                d: spec.d,
                p,
                order: n,
                c_hat: est.c_hat,
                residual: est.residual,
            });
        }
    }
    out.write_csv("constants.csv", &rows)?;
    Ok(rows)
}

fn moment_rows(m: &MomentTableF64) -> Vec<MomentRow> {
    (0..m.times.len())
        .map(|i| MomentRow {
            t: m.times[i],
            mean_sq_norm: m.mean_sq_norm[i],
            stderr: m.stderr[i],
            min_norm: m.min_norm[i],
            max_norm: m.max_norm[i],
        })
        .collect()
}

/// `C0` at `p - 2`, the ensemble, and the stability report.
pub fn stability(cfg: &LoadedConfig) -> CliResult<StabilityReportF64> {
    let out = OutputDir::prepare(cfg)?;
    let c = &cfg.config;
    let spec = &c.model;
    let c0_order = c.analysis.c0_order.unwrap_or(c.sim.order);
    let c0 = estimate_constant(spec, spec.stability_index(), c0_order)?.c_hat;
    let moments = simulate_ensemble(spec, &c.sim, &c.initial())?;
    out.write_csv("moments.csv", &moment_rows(&moments))?;
    let window = c.analysis.fit_window.map(|[a, b]| (a, b));
    let report = stability_check(&moments, spec, c0, c.analysis.tol, window);
    let curve: Vec<CurveRow> = report
        .curve
        .iter()
        .map(|&(t, value, stderr)| CurveRow { t, value, stderr })
        .collect();
    out.write_csv("stability_curve.csv", &curve)?;
    out.write_json("stability.json", &report)?;
    if report.pass == Some(false) {
        return Err(CliError::Violation(format!(
            "mean-square bound exceeded: worst ratio {} > 1 + {}",
            report.worst_ratio, report.tol
        )));
    }
    Ok(report)
}

fn slug(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

/// Tail mass at `p - 2` plus ergodic averages of every configured functional.
pub fn invariant(cfg: &LoadedConfig) -> CliResult<(TailReportF64, Vec<ErgodicReportF64>)> {
    let c = &cfg.config;
    if !(c.q.value() < c.model.p) {
        return Err(CliError::IndexHypothesis {
            p: c.model.p,
            q: c.q.value(),
        });
    }
    let out = OutputDir::prepare(cfg)?;
    let spec = &c.model;
    let moments = simulate_ensemble(spec, &c.sim, &c.initial())?;
    out.write_csv("moments.csv", &moment_rows(&moments))?;
    let tail = tail_mass(&moments, &c.analysis.r_grid, c.analysis.eps)?;
    let tail_rows: Vec<TailCsvRow> = tail
        .rows
        .iter()
        .map(|r| TailCsvRow {
            r: r.r,
            time_avg_exceed: r.time_avg_exceed,
            stderr: r.stderr,
            chebyshev_bound: r.chebyshev_bound,
            pass: r.pass,
        })
        .collect();
    out.write_csv("tail.csv", &tail_rows)?;
    out.write_json("tail.json", &tail)?;

    let starts = c.ergodic_starts();
    let mut reports = Vec::new();
    for f in c.functionals()? {
        let report = match starts.as_slice() {
            [x1, x2] => ergodic_start_gap(spec, &c.sim, x1, x2, f, c.q)?,
            [x] => ergodic_average(spec, &c.sim, x, f, c.q)?,
            _ => unreachable!("validated to one or two starts"),
        };
        let name = slug(&report.functional_id);
        for (i, s) in report.starts.iter().enumerate() {
            let rows: Vec<CurveRow> = report
                .checkpoints
                .iter()
                .zip(&s.running_avg)
                .zip(&s.stderr)
                .map(|((&t, &value), &stderr)| CurveRow { t, value, stderr })
                .collect();
            out.write_csv(&format!("ergodic_{name}_start{}.csv", i + 1), &rows)?;
        }
        if let (Some(gap), Some(se)) = (&report.start_gap, &report.start_gap_stderr) {
            let rows: Vec<CurveRow> = report
                .checkpoints
                .iter()
                .zip(gap)
                .zip(se)
                .map(|((&t, &value), &stderr)| CurveRow { t, value, stderr })
                .collect();
            out.write_csv(&format!("ergodic_{name}_gap.csv"), &rows)?;
        }
        reports.push(report);
    }
    out.write_json("ergodic.json", &reports)?;

    if !tail.pass {
        return Err(CliError::Violation(
            "empirical tail mass exceeds the Chebyshev bound".into(),
        ));
    }
    if let Some(r) = reports.iter().find(|r| !r.within_bound()) {
        return Err(CliError::Violation(format!(
            "running average of {} leaves [-{}, {}]",
            r.functional_id, r.bound, r.bound
        )));
    }
    Ok((tail, reports))
}

/// Random-vector sweep of the finite-rank embedding bound over the index
/// pairs `(p, q)`, `(p, q - 2)`, `(p - 2, q - 2)`.
pub fn embedding(cfg: &LoadedConfig, n_list: &[usize], trials: usize) -> CliResult<Vec<EmbeddingRow>> {
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let out = OutputDir::prepare(cfg)?;
    let c = &cfg.config;
    let (d, p, q) = (c.model.d, c.model.p, c.q.value());
    let order = n_list.iter().copied().max().unwrap_or(0).max(c.sim.order) + 2;
    let size = GradedVectorF64::zeros(d, order)?.len();
    let mut rows = Vec::new();
    for (pi, qi) in [(p, q), (p, q - 2.0), (p - 2.0, q - 2.0)] {
        let (sp, sq) = (SobolevIndexF64::new(pi), SobolevIndexF64::new(qi));
        for &n in n_list {
            let mut max_ratio = 0.0_f64;
            let mut violations = 0;
            for trial in 0..trials {
                let mut rng = PathRng::split(c.sim.seed, trial as u64);
                let x = GradedVectorF64::from_coeffs(d, order, rng.normal_vec(1.0, size))?;
                let rep = embedding_bound_check(&x, sp, sq, n)?;
                if rep.rhs > 0.0 {
                    max_ratio = max_ratio.max(rep.lhs / rep.rhs);
                }
                if !rep.pass {
                    violations += 1;
                }
            }
            rows.push(EmbeddingRow {
                d,
                p: pi,
                q: qi,
                n,
                trials,
                max_ratio,
                violations,
            });
        }
    }
    out.write_csv("embedding.csv", &rows)?;
    let total: usize = rows.iter().map(|r| r.violations).sum();
    if total > 0 {
        return Err(CliError::Violation(format!("{total} embedding bound violations")));
    }
    Ok(rows)
}

/// Galerkin ensemble against the exact translation solution, plus an
/// optional strong-error sweep over `dt_list`.
pub fn oracle_compare(cfg: &LoadedConfig, dt_list: Option<&[f64]>) -> CliResult<OracleSummary> {
    let out = OutputDir::prepare(cfg)?;
    let c = &cfg.config;
    let x0 = c.initial();
    let record = oracle_error_paths(&c.model, &c.sim, &x0)?;
    let rows: Vec<CurveRow> = record
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (value, stderr) = mean_and_stderr(record.values.iter().map(|v| v[i]));
            CurveRow { t, value, stderr }
        })
        .collect();
    out.write_csv("oracle_compare.csv", &rows)?;
    let strong = match dt_list {
        Some(dts) => {
            let study = strong_error_sweep(
                &c.model,
                &x0,
                c.sim.order,
                c.sim.horizon,
                dts,
                c.sim.theta,
                c.sim.paths,
                c.sim.seed,
            )?;
            let csv_rows: Vec<StrongErrorCsvRow> = study
                .rows
                .iter()
                .map(|r| StrongErrorCsvRow {
                    dt: r.dt,
                    mean_max_error: r.mean_max_error,
                    stderr: r.stderr,
                })
                .collect();
            out.write_csv("strong_error.csv", &csv_rows)?;
            Some(study)
        }
        None => None,
    };
    let last = rows.last().expect("save grid is non-empty");
    let summary = OracleSummary {
        max_mean_error: rows.iter().map(|r| r.value).fold(0.0, f64::max),
        final_mean_error: last.value,
        final_stderr: last.stderr,
        strong,
    };
    out.write_json("oracle_compare.json", &summary)?;
    Ok(summary)
}
