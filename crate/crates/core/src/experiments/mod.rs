//! The four benchmark studies behind `polyvem run`: convergence,
//! divergence, energy balance and Hartmann flow. Each returns typed results
//! plus the CSV tables it would write.
//!
//! Jobs (family x variant x level) are independent and run on the current
//! rayon pool; results are collected in job order so outputs are
//! deterministic regardless of the thread count.

mod config;
mod csv;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{parse_dt, ExperimentConfig, ExperimentKind};
pub use csv::{num, opt_num, CsvTable, CSV_HEADER};

use crate::diagnostics::{
    energy_ledger, eoc, eoc_table, l2_error_b, l2_error_e, q_grid, EnergyLedger, EocTable, ErrorRecord,
};
use crate::local_ops::ProjectorVariant;
use crate::mesh::{MeshFamily, PolygonalMesh};
use crate::problems::ProblemDefinition;
use crate::timestepper::{run, RunResult};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Job {
    family: MeshFamily,
    variant: ProjectorVariant,
    level: usize,
}

impl Job {
    fn label(&self) -> String {
        format!("{} {} n={}", self.family, self.variant, self.level)
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &family in &cfg.families {
        for &variant in &cfg.variants {
            for &level in &cfg.levels {
                out.push(Job { family, variant, level });
            }
        }
    }
    out
}

fn problem(cfg: &ExperimentConfig) -> Result<ProblemDefinition> {
    ProblemDefinition::from_name(&cfg.problem)
}

fn solve(cfg: &ExperimentConfig, problem: &ProblemDefinition, job: Job) -> Result<(PolygonalMesh, RunResult, f64)> {
    let start = Instant::now();
    let mesh = job.family.generate(job.level, cfg.seed)?;
    let result = run(problem, &mesh, &cfg.scheme(job.variant), |_, _| {})?;
    Ok((mesh, result, start.elapsed().as_secs_f64()))
}

/// Runs `f` on every job in parallel, keeping job order and labelling errors.
fn map_jobs<T: Send>(jobs: &[Job], f: impl Fn(Job) -> Result<T> + Sync) -> Result<Vec<T>> {
    jobs.par_iter()
        .map(|&job| f(job).map_err(|e| e.context(job.label())))
        .collect()
}

/// Manufactured-solution run at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub level: usize,
    pub dt: f64,
    pub steps: usize,
    pub record: ErrorRecord,
    /// `max_n ‖div Bⁿ‖ / (1 + ‖Bⁿ‖)`.
    pub max_relative_div: f64,
    /// Largest entry of the assembled `D R`.
    pub div_rot_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub family: MeshFamily,
    pub variant: ProjectorVariant,
    pub runs: Vec<ConvergenceRun>,
    pub eoc: EocTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub series: Vec<ConvergenceSeries>,
    pub tables: Vec<CsvTable>,
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let problem = problem(cfg)?;
    if !problem.has_exact_solution() {
        return Err(Error::Config(format!(
            "convergence needs an exact solution; `{}` has none",
            problem.name
        )));
    }
    let jobs = jobs(cfg);
    let runs = map_jobs(&jobs, |job| {
        let (_, r, runtime) = solve(cfg, &problem, job)?;
        let ops = r.ops();
        let rel_err_e = l2_error_e(ops, &r.last.e, &problem, r.electric_time())?;
        let rel_err_b = l2_error_b(ops, &r.last.b, &problem, r.last.time)?;
        let div_norm_history: Vec<f64> = r.records.iter().map(|s| s.div_norm).collect();
        let max_relative_div = r
            .records
            .iter()
            .map(|s| s.div_norm / (1.0 + s.b_energy.sqrt()))
            .fold(0.0, f64::max);
        Ok(ConvergenceRun {
            level: job.level,
            dt: r.dt,
            steps: r.records.len(),
            record: ErrorRecord {
                h: r.h,
                rel_err_e,
                rel_err_b,
                div_norm_history,
                runtime,
            },
            max_relative_div,
            div_rot_max: ops.div_rot().max_abs(),
        })
    })?;

    let mut series = Vec::new();
    let mut it = runs.into_iter();
    for &family in &cfg.families {
        for &variant in &cfg.variants {
            let runs: Vec<ConvergenceRun> = it.by_ref().take(cfg.levels.len()).collect();
            let records: Vec<ErrorRecord> = runs.iter().map(|r| r.record.clone()).collect();
            let eoc = eoc_table(&records).map_err(|e| e.context(format!("{family} {variant}")))?;
            series.push(ConvergenceSeries {
                family,
                variant,
                runs,
                eoc,
            });
        }
    }

    let mut levels = CsvTable::new(
        "convergence.csv",
        &[
            "family",
            "variant",
            "level",
            "h",
            "dt",
            "steps",
            "rel_err_E",
            "rel_err_B",
            "eoc_E",
            "eoc_B",
            "max_rel_div",
        ],
    );
    let mut summary = CsvTable::new("convergence_eoc.csv", &["family", "variant", "eoc_E", "eoc_B"]);
    for s in &series {
        for (i, r) in s.runs.iter().enumerate() {
            let rate = |rates: &[f64]| opt_num(i.checked_sub(1).map(|k| rates[k]));
            levels.push(vec![
                s.family.to_string(),
                s.variant.to_string(),
                r.level.to_string(),
                num(r.record.h),
                num(r.dt),
                r.steps.to_string(),
                num(r.record.rel_err_e),
                num(r.record.rel_err_b),
                rate(&s.eoc.rates_e),
                rate(&s.eoc.rates_b),
                num(r.max_relative_div),
            ]);
        }
        summary.push(vec![
            s.family.to_string(),
            s.variant.to_string(),
            num(s.eoc.slope_e),
            num(s.eoc.slope_b),
        ]);
    }
    Ok(ConvergenceReport {
        series,
        tables: vec![levels, summary],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRun {
    pub family: MeshFamily,
    pub variant: ProjectorVariant,
    pub level: usize,
    /// `‖div I^E B_0‖²`.
    pub initial_div_sq: f64,
    /// `(step, time, ‖div Bⁿ‖²)` for `n = 1..=N`.
    pub history: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub runs: Vec<DivergenceRun>,
    pub tables: Vec<CsvTable>,
}

pub fn run_divergence(cfg: &ExperimentConfig) -> Result<DivergenceReport> {
    let problem = problem(cfg)?;
    let runs = map_jobs(&jobs(cfg), |job| {
        let (_, r, _) = solve(cfg, &problem, job)?;
        let d0 = crate::diagnostics::divergence_norm(r.ops(), &r.initial.b);
        Ok(DivergenceRun {
            family: job.family,
            variant: job.variant,
            level: job.level,
            initial_div_sq: d0 * d0,
            history: r
                .records
                .iter()
                .map(|s| (s.step, s.time, s.div_norm * s.div_norm))
                .collect(),
        })
    })?;
    let mut t = CsvTable::new(
        "divergence.csv",
        &["family", "variant", "level", "step", "t", "div_norm_sq"],
    );
    for run in &runs {
        for &(step, time, d) in &run.history {
            t.push(vec![
                run.family.to_string(),
                run.variant.to_string(),
                run.level.to_string(),
                step.to_string(),
                num(time),
                num(d),
            ]);
        }
    }
    Ok(DivergenceReport { runs, tables: vec![t] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// One ledger per point of the Q grid.
    pub sweep: Vec<EnergyLedger>,
    /// Ledgers for the configured `q_series` values.
    pub series: Vec<EnergyLedger>,
    pub warnings: Vec<String>,
    pub tables: Vec<CsvTable>,
}

impl EnergyReport {
    /// Admissible grid points whose inequality failed at some step.
    pub fn violations(&self) -> Vec<f64> {
        self.sweep
            .iter()
            .filter(|l| l.admissible && !l.all_satisfied())
            .map(|l| l.q)
            .collect()
    }
}

/// Runs once on the first family/level/variant and evaluates the ledger for
/// every Q.
pub fn run_energy(cfg: &ExperimentConfig) -> Result<EnergyReport> {
    let problem = problem(cfg)?;
    let job = Job {
        family: cfg.families[0],
        variant: cfg.variants[0],
        level: cfg.levels[0],
    };
    let (_, r, _) = solve(cfg, &problem, job).map_err(|e| e.context(job.label()))?;
    let b0_energy = r.ops().m_e.quadratic_form(&r.initial.b);
    let ledger = |q: f64| energy_ledger(b0_energy, &r.records, q, cfg.theta, r.dt);
    let sweep: Vec<EnergyLedger> = q_grid(cfg.q_upper(), cfg.q_points)
        .into_par_iter()
        .map(ledger)
        .collect();
    let series: Vec<EnergyLedger> = cfg.q_series.iter().map(|&q| ledger(q)).collect();

    let mut q_table = CsvTable::new(
        "energy_q.csv",
        &[
            "Q",
            "beta",
            "gamma",
            "admissible",
            "calE_final",
            "min_slack",
            "satisfied",
        ],
    );
    for l in &sweep {
        q_table.push(vec![
            num(l.q),
            num(l.beta),
            num(l.gamma),
            l.admissible.to_string(),
            num(l.final_difference()),
            num(l.min_slack()),
            l.all_satisfied().to_string(),
        ]);
    }
    let mut s_table = CsvTable::new("energy_series.csv", &["Q", "step", "t", "E_L", "E_R", "satisfied"]);
    for l in &series {
        let ok = l.satisfied();
        for (k, rec) in r.records.iter().enumerate() {
            s_table.push(vec![
                num(l.q),
                rec.step.to_string(),
                num(rec.time),
                num(l.lhs[k]),
                num(l.rhs[k]),
                ok[k].to_string(),
            ]);
        }
    }
    Ok(EnergyReport {
        h: r.h,
        dt: r.dt,
        steps: r.records.len(),
        sweep,
        series,
        warnings: r.warnings.clone(),
        tables: vec![q_table, s_table],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartmannRun {
    pub level: usize,
    pub h: f64,
    pub steps: usize,
    pub rel_err_bx: f64,
    /// Reconstructed electric field at the origin.
    pub center_e: f64,
    /// Largest `|B_x|` of the edge reconstruction along `y = 0`.
    pub midline_bx: f64,
    /// `‖Bᴺ - Bᴺ⁻¹‖ / ‖Bᴺ⁻¹‖` at the last step.
    pub final_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartmannSeries {
    pub family: MeshFamily,
    pub variant: ProjectorVariant,
    pub runs: Vec<HartmannRun>,
    pub rates: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartmannReport {
    pub series: Vec<HartmannSeries>,
    pub tables: Vec<CsvTable>,
}

const MIDLINE_SAMPLES: usize = 41;

pub fn run_hartmann(cfg: &ExperimentConfig) -> Result<HartmannReport> {
    let problem = problem(cfg)?;
    if !problem.compare_bx_only || problem.exact_e.is_none() {
        return Err(Error::Config(format!(
            "hartmann experiment needs the hartmann problem, got `{}`",
            problem.name
        )));
    }
    let exact_e = problem
        .exact_e
        .clone()
        .ok_or_else(|| Error::UnsupportedProblem(problem.name.clone()))?;
    let exact_b = problem
        .exact_b
        .clone()
        .ok_or_else(|| Error::UnsupportedProblem(problem.name.clone()))?;
    let finest = *cfg.levels.last().unwrap_or(&0);
    let outputs = map_jobs(&jobs(cfg), |job| {
        let (mesh, r, _) = solve(cfg, &problem, job)?;
        let ops = r.ops();
        let origin = Point::origin();
        let c = mesh
            .locate(origin)
            .ok_or_else(|| Error::Domain("origin not inside the mesh".into()))?;
        let center_e = ops.local[c]
            .projector
            .eval(&ops.local_vertex_dofs(c, &r.last.e), origin);
        let mut midline_bx: f64 = 0.0;
        for k in 0..MIDLINE_SAMPLES {
            let p = Point::new(-1.0 + 2.0 * k as f64 / (MIDLINE_SAMPLES - 1) as f64, 0.0);
            if let Some(c) = mesh.locate(p) {
                let b = ops.local[c].edge.eval_rt(&ops.local_edge_dofs(c, &r.last.b), p);
                midline_bx = midline_bx.max(b.x.abs());
            }
        }
        let run = HartmannRun {
            level: job.level,
            h: r.h,
            steps: r.records.len(),
            rel_err_bx: l2_error_b(ops, &r.last.b, &problem, r.last.time)?,
            center_e,
            midline_bx,
            final_change: r.records.last().map_or(0.0, |s| s.b_change),
        };
        let dump = (cfg.dump_fields && job.level == finest).then(|| {
            let stem = format!("hartmann_fields_{}_{}", job.family, job.variant);
            let mut cells = CsvTable::new(format!("{stem}_cells.csv"), &["cell", "x", "y", "Bx", "By", "Bx_exact"]);
            for (c, g) in ops.geometry.iter().enumerate() {
                let b = ops.local[c]
                    .edge
                    .eval_rt(&ops.local_edge_dofs(c, &r.last.b), g.centroid);
                cells.push(vec![
                    c.to_string(),
                    num(g.centroid.x),
                    num(g.centroid.y),
                    num(b.x),
                    num(b.y),
                    num(exact_b(g.centroid, r.last.time).x),
                ]);
            }
            let mut verts = CsvTable::new(format!("{stem}_vertices.csv"), &["vertex", "x", "y", "E", "E_exact"]);
            for (v, p) in mesh.vertices().iter().enumerate() {
                verts.push(vec![
                    v.to_string(),
                    num(p.x),
                    num(p.y),
                    num(r.last.e[v]),
                    num(exact_e(*p, r.electric_time())),
                ]);
            }
            [cells, verts]
        });
        Ok((run, dump))
    })?;

    let mut series = Vec::new();
    let mut dumps = Vec::new();
    let mut it = outputs.into_iter();
    for &family in &cfg.families {
        for &variant in &cfg.variants {
            let mut runs = Vec::new();
            for (run, dump) in it.by_ref().take(cfg.levels.len()) {
                runs.push(run);
                dumps.extend(dump.into_iter().flatten());
            }
            let h: Vec<f64> = runs.iter().map(|r| r.h).collect();
            let err: Vec<f64> = runs.iter().map(|r| r.rel_err_bx).collect();
            let (rates, slope) = eoc(&h, &err).map_err(|e| e.context(format!("{family} {variant}")))?;
            series.push(HartmannSeries {
                family,
                variant,
                runs,
                rates,
                slope,
            });
        }
    }

    let mut t = CsvTable::new(
        "hartmann.csv",
        &[
            "family",
            "variant",
            "level",
            "h",
            "steps",
            "rel_err_Bx",
            "eoc_Bx",
            "E_center",
            "midline_Bx",
            "final_change",
        ],
    );
    for s in &series {
        for (i, r) in s.runs.iter().enumerate() {
            t.push(vec![
                s.family.to_string(),
                s.variant.to_string(),
                r.level.to_string(),
                num(r.h),
                r.steps.to_string(),
                num(r.rel_err_bx),
                opt_num(i.checked_sub(1).map(|k| s.rates[k])),
                num(r.center_e),
                num(r.midline_bx),
                num(r.final_change),
            ]);
        }
    }
    let mut tables = vec![t];
    tables.extend(dumps);
    Ok(HartmannReport { series, tables })
}

/// Runs the configured study on a pool of `jobs` threads (all cores when
/// `None`) and returns its tables.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<CsvTable>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cfg.kind {
        ExperimentKind::Convergence => run_convergence(cfg).map(|r| r.tables),
        ExperimentKind::Divergence => run_divergence(cfg).map(|r| r.tables),
        ExperimentKind::Energy => run_energy(cfg).map(|r| r.tables),
        ExperimentKind::Hartmann => run_hartmann(cfg).map(|r| r.tables),
    })
}

pub fn write_tables(tables: &[CsvTable], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    tables.iter().try_for_each(|t| t.write_to(dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::beta_gamma;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            families: vec![MeshFamily::Triangular],
            levels: vec![2, 4, 8],
            variants: vec![ProjectorVariant::Elliptic],
            ..ExperimentConfig::defaults(kind)
        }
    }

    #[test]
    fn convergence_on_triangles_decreases_and_matches_eoc_table() {
        let cfg = small(ExperimentKind::Convergence);
        let rep = run_convergence(&cfg).unwrap();
        let s = &rep.series[0];
        for w in s.runs.windows(2) {
            assert!(w[1].record.rel_err_e < w[0].record.rel_err_e);
            assert!(w[1].record.rel_err_b < w[0].record.rel_err_b);
        }
        let records: Vec<_> = s.runs.iter().map(|r| r.record.clone()).collect();
        assert_eq!(eoc_table(&records).unwrap(), s.eoc);
        let csv = rep.tables[0].render();
        let last = csv.lines().last().unwrap();
        let cols: Vec<&str> = last.split(',').collect();
        assert_eq!(cols[8], num(s.eoc.rates_e[1]));
        assert_eq!(cols[9], num(s.eoc.rates_b[1]));
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let cfg = ExperimentConfig {
            families: vec![MeshFamily::Voronoi],
            levels: vec![3, 5],
            ..small(ExperimentKind::Convergence)
        };
        let a = run_experiment(&cfg, Some(1)).unwrap();
        let b = run_experiment(&cfg, Some(3)).unwrap();
        assert_eq!(
            a.iter().map(CsvTable::render).collect::<Vec<_>>(),
            b.iter().map(CsvTable::render).collect::<Vec<_>>()
        );
    }

    #[test]
    fn divergence_rows_and_first_value() {
        let mut cfg = small(ExperimentKind::Divergence);
        cfg.levels = vec![4];
        cfg.dt = crate::timestepper::DtRule::Fixed(0.01);
        cfg.final_time = 0.05;
        let short = run_divergence(&cfg).unwrap();
        cfg.final_time = 0.1;
        let long = run_divergence(&cfg).unwrap();
        assert_eq!(short.runs[0].history.len(), 5);
        assert_eq!(long.runs[0].history.len(), 10);
        assert_eq!(long.tables[0].rows.len(), 2 * short.tables[0].rows.len());
        let run = &long.runs[0];
        for &(_, _, d) in &run.history {
            assert!(d <= 1e-24, "{d}");
        }
        assert!((run.history[0].2 - run.initial_div_sq).abs() <= 1e-24);
    }

    #[test]
    fn energy_sweep_on_a_small_mesh() {
        let mut cfg = small(ExperimentKind::Energy);
        cfg.levels = vec![6];
        cfg.final_time = 0.02;
        cfg.q_points = 9;
        cfg.q_series = vec![1.0, 2.5];
        let rep = run_energy(&cfg).unwrap();
        assert_eq!(rep.steps, 20);
        assert_eq!(rep.sweep.len(), 9);
        assert!(rep.violations().is_empty());
        // Q = 1 at θ = 1/2
        let (beta, gamma) = beta_gamma(1.0, 0.5);
        assert_eq!((rep.series[0].beta, rep.series[0].gamma), (beta, gamma));
        assert!(!rep.series[1].admissible);
        assert_eq!(rep.tables[1].rows.len(), 2 * 20);
    }

    #[test]
    fn hartmann_on_coarse_meshes() {
        let cfg = ExperimentConfig {
            levels: vec![6, 12],
            final_time: 0.5,
            families: vec![MeshFamily::Triangular],
            ..ExperimentConfig::defaults(ExperimentKind::Hartmann)
        };
        let rep = run_hartmann(&cfg).unwrap();
        let s = &rep.series[0];
        assert!(s.runs[1].rel_err_bx < s.runs[0].rel_err_bx);
        for r in &s.runs {
            assert!((r.center_e - crate::problems::HARTMANN_E_APPROX).abs() < 1e-2);
            assert!(r.midline_bx < r.h, "{}", r.midline_bx);
        }
        // summary plus one cell and one vertex dump for the finest level
        assert_eq!(rep.tables.len(), 3);
    }

    #[test]
    fn problems_without_exact_solution_are_rejected() {
        let mut cfg = small(ExperimentKind::Convergence);
        cfg.problem = "energy_family(C=0.1)".into();
        assert!(run_convergence(&cfg).is_ok());
        cfg.problem = "nonsense".into();
        assert!(run_convergence(&cfg).unwrap_err().is_config_error());
        let mut h = small(ExperimentKind::Hartmann);
        h.problem = "manufactured".into();
        assert!(run_hartmann(&h).unwrap_err().is_config_error());
    }
}
