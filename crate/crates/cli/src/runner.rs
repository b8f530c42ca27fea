use std::path::PathBuf;

use lattice_hydro::conservation::ThetaQuadrature;
use lattice_hydro::covariance::OffsetPair;
use lattice_hydro::limits::{halfspace_limit_covariance, PositionQuadrature};
use lattice_hydro::{
    check_conditions, empirical_covariance, energy_density_limit, halfspace_covariance, limit_covariance, micro_energy,
    propagate_covariance, wigner_empirical, wigner_exact, wigner_limit, BlockCov, BoxPolicy, CMat, ConditionReport,
    ConditionStatus, CovarianceProfile, InteractionMatrix, LimitModel, ScaledQuery, WignerQuery,
};
use rayon::prelude::*;

use crate::config::{BoxSetting, ExperimentConfig, Format, Kind};
use crate::table::{join_floats, join_ints, ResultTable, Row, ValueKind, SCHEMA_VERSION};
use crate::CliError;

/// Command-line overrides of the config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub table: ResultTable,
    pub csv_path: Option<PathBuf>,
    /// Largest err value at the smallest eps, if the run produced err rows.
    pub final_error: Option<(f64, f64)>,
}

fn condition_resolution(d: usize) -> usize {
    match d {
        1 => 256,
        2 => 64,
        _ => 16,
    }
}

/// Condition report for the configured interaction.
pub fn check_model(cfg: &ExperimentConfig) -> Result<ConditionReport, CliError> {
    let v = cfg.interaction()?;
    Ok(check_conditions(&v, condition_resolution(cfg.model.d))?)
}

fn failed_conditions(report: &ConditionReport) -> Vec<String> {
    report.entries.iter().filter(|e| e.status == ConditionStatus::Fail).map(|e| format!("{:?}", e.condition)).collect()
}

fn offset_pairs(d: usize, lo: i64, hi: i64) -> Vec<OffsetPair> {
    let side = (hi - lo + 1) as usize;
    let points: Vec<Vec<i64>> = (0..side.pow(d as u32))
        .map(|mut flat| {
            let mut z = vec![0; d];
            for a in (0..d).rev() {
                z[a] = lo + (flat % side) as i64;
                flat /= side;
            }
            z
        })
        .collect();
    points.iter().flat_map(|z| points.iter().map(move |zp| (z.clone(), zp.clone()))).collect()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    v: InteractionMatrix,
    profile: CovarianceProfile,
    seed: u64,
}

impl Ctx<'_> {
    fn row(&self, eps: f64, z: String, zp: String, r: &[f64], (i, j): (usize, usize), kind: ValueKind, re: f64, im: f64) -> Row {
        Row {
            experiment: self.cfg.experiment.id.clone(),
            eps,
            tau: self.cfg.experiment.tau,
            kappa: self.cfg.kappa(),
            r: join_floats(r),
            z,
            zp,
            i,
            j,
            kind,
            re,
            im,
        }
    }

    fn limit_kind(&self) -> ValueKind {
        match self.cfg.experiment.kind {
            Kind::Euler | Kind::HalfspaceEuler | Kind::Wigner | Kind::Conservation | Kind::Conditions => ValueKind::Limit,
            Kind::Ns | Kind::HigherK | Kind::HalfspaceNs => ValueKind::NsLimit,
        }
    }

    fn model(&self, eps: f64) -> LimitModel {
        let e = &self.cfg.experiment;
        match e.kind {
            Kind::Ns | Kind::HalfspaceNs => LimitModel::NavierStokes { eps },
            Kind::HigherK => LimitModel::Higher { order: e.order, eps },
            _ => LimitModel::Euler,
        }
    }

    /// Euler-type limits at kappa > 1 are compared at the drift time tau / eps^(kappa - 1).
    fn limit_tau(&self, eps: f64) -> f64 {
        let e = &self.cfg.experiment;
        match e.kind {
            Kind::Euler | Kind::HalfspaceEuler => e.tau * eps.powf(1.0 - self.cfg.kappa()),
            _ => e.tau,
        }
    }

    fn query(&self, eps: f64, offsets: Vec<OffsetPair>) -> Result<ScaledQuery, CliError> {
        let e = &self.cfg.experiment;
        let q = ScaledQuery::new(e.tau, self.cfg.kappa(), e.r.clone(), offsets, eps)?;
        Ok(match &e.box_policy {
            BoxSetting::Fixed(ext) => q.with_box(BoxPolicy::Fixed(ext.clone())),
            BoxSetting::Named(_) => q,
        })
    }

    fn covariance_rows(&self, eps: f64) -> Result<Vec<Row>, CliError> {
        let e = &self.cfg.experiment;
        let d = self.cfg.model.d;
        let offsets = offset_pairs(d, e.offsets[0], e.offsets[1]);
        let q = self.query(eps, offsets.clone())?;
        let half = e.kind.half_space();
        let (micro, stderr): (Vec<BlockCov>, Option<Vec<BlockCov>>) = if e.nsamples > 0 {
            if half {
                return Err(CliError::Validation {
                    field: "experiment.nsamples".into(),
                    reason: "Monte Carlo estimates are available for the full space only".into(),
                });
            }
            let est = empirical_covariance(&self.v, &self.profile, &q, e.nsamples, self.seed)?;
            let (m, s) = offsets.iter().map(|k| (est[k].estimate.clone(), est[k].stderr.clone())).unzip();
            (m, Some(s))
        } else {
            let map = if half { halfspace_covariance(&self.v, &self.profile, &q)? } else { propagate_covariance(&self.v, &self.profile, &q)? };
            (offsets.iter().map(|k| map[k].clone()).collect(), None)
        };
        let quad = PositionQuadrature::default_for(d);
        let model = self.model(eps);
        let tau = self.limit_tau(eps);
        let anchor = self.cfg.anchor();
        let limit = if half {
            halfspace_limit_covariance(&self.v, &self.profile, model, tau, &e.r, eps, &offsets, anchor, quad)?
        } else {
            limit_covariance(&self.v, &self.profile, model, tau, &e.r, eps, &offsets, anchor, quad)?
        };
        let size = 2 * self.cfg.model.gammas.len();
        let mut rows = Vec::new();
        for (k, (z, zp)) in offsets.iter().enumerate() {
            let (zs, zps) = (join_ints(z), join_ints(zp));
            let lim = &limit[&(z.clone(), zp.clone())];
            for i in 0..size {
                for j in 0..size {
                    let (a, b) = (micro[k].entry(i, j), lim.entry(i, j));
                    let mut push = |kind, re, im| rows.push(self.row(eps, zs.clone(), zps.clone(), &e.r, (i, j), kind, re, im));
                    push(ValueKind::Micro, a.re, a.im);
                    push(self.limit_kind(), b.re, b.im);
                    push(ValueKind::Err, (a - b).norm(), 0.0);
                    if let Some(s) = &stderr {
                        let s = s[k].entry(i, j);
                        push(ValueKind::Stderr, s.re, s.im);
                    }
                }
            }
        }
        Ok(rows)
    }

    fn wigner_rows(&self, eps: f64) -> Result<Vec<Row>, CliError> {
        let e = &self.cfg.experiment;
        let positions = if e.r_values.is_empty() { vec![e.r.clone()] } else { e.r_values.clone() };
        let n = self.cfg.model.gammas.len();
        let mut rows = Vec::new();
        for r in &positions {
            let q = WignerQuery::new(eps, e.tau, r.clone(), e.thetas.clone());
            let grid = if e.nsamples > 0 {
                wigner_empirical(&self.v, &self.profile, &q, e.nsamples, self.seed)?
            } else {
                wigner_exact(&self.v, &self.profile, &q)?
            };
            let origin = vec![0; r.len()];
            for (k, th) in e.thetas.iter().enumerate() {
                let w = grid.value(0, &origin, k);
                let lim: CMat = wigner_limit(&self.v, &self.profile, e.tau, r, th, false)?;
                let se = grid.stderr(0, &origin, k);
                let zs = join_floats(th);
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = (w[(i, j)], lim[(i, j)]);
                        let mut push = |kind, re, im| rows.push(self.row(eps, zs.clone(), String::new(), r, (i, j), kind, re, im));
                        push(ValueKind::Micro, a.re, a.im);
                        push(ValueKind::Limit, b.re, b.im);
                        push(ValueKind::Err, (a - b).norm(), 0.0);
                        if let Some(s) = se {
                            push(ValueKind::Stderr, s[(i, j)].re, s[(i, j)].im);
                        }
                    }
                }
            }
        }
        Ok(rows)
    }

    fn conservation_rows(&self, eps: f64) -> Result<Vec<Row>, CliError> {
        let e = &self.cfg.experiment;
        let micro = micro_energy(&self.v, &self.profile, e.tau, &e.r, eps)?;
        let limit = energy_density_limit(&self.v, &self.profile, e.tau, &e.r, &ThetaQuadrature::default_for(self.cfg.model.d))?.value;
        let push = |kind, re| self.row(eps, String::new(), String::new(), &e.r, (0, 0), kind, re, 0.0);
        Ok(vec![push(ValueKind::Micro, micro), push(ValueKind::Limit, limit), push(ValueKind::Err, (micro - limit).abs())])
    }

    fn rows_at(&self, eps: f64) -> Result<Vec<Row>, CliError> {
        match self.cfg.experiment.kind {
            Kind::Wigner => self.wigner_rows(eps),
            Kind::Conservation => self.conservation_rows(eps),
            Kind::Conditions => unreachable!("condition runs have no eps sweep"),
            _ => self.covariance_rows(eps),
        }
    }
}

/// One err row per condition: re is 0 for pass and 1 for fail, im holds the margin, i the condition number.
fn condition_rows(cfg: &ExperimentConfig, report: &ConditionReport) -> Vec<Row> {
    report
        .entries
        .iter()
        .enumerate()
        .map(|(k, c)| Row {
            experiment: cfg.experiment.id.clone(),
            eps: 0.0,
            tau: 0.0,
            kappa: 0.0,
            r: String::new(),
            z: String::new(),
            zp: String::new(),
            i: k + 1,
            j: 0,
            kind: ValueKind::Err,
            re: if c.status == ConditionStatus::Fail { 1.0 } else { 0.0 },
            im: c.margin,
        })
        .collect()
}

/// Runs the sweep, writes `<dir>/<id>.csv` when csv output is requested, and returns the table.
pub fn run_experiment(cfg: &ExperimentConfig, config_hash: &str, opts: &RunOptions) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.experiment.seed);
    let v = cfg.interaction()?;
    let report = check_conditions(&v, condition_resolution(cfg.model.d))?;
    let failed = failed_conditions(&report);
    let mut meta = vec![
        ("config-sha256".to_string(), config_hash.to_string()),
        ("schema".to_string(), SCHEMA_VERSION.to_string()),
        ("seed".to_string(), seed.to_string()),
    ];
    let rows = if cfg.experiment.kind == Kind::Conditions {
        condition_rows(cfg, &report)
    } else {
        if !failed.is_empty() {
            if !cfg.experiment.override_conditions {
                return Err(CliError::ConditionsFailed(failed.join(", ")));
            }
            meta.push(("override-conditions".to_string(), failed.join(";")));
        }
        let ctx = Ctx { cfg, profile: cfg.covariance_profile(&v)?, v, seed };
        let per_eps: Vec<Result<Vec<Row>, CliError>> = cfg.experiment.eps.par_iter().map(|&eps| ctx.rows_at(eps)).collect();
        per_eps.into_iter().collect::<Result<Vec<_>, _>>()?.concat()
    };
    let final_error = cfg.experiment.eps.last().filter(|_| cfg.experiment.kind != Kind::Conditions).map(|&eps| {
        let worst = rows.iter().filter(|r| r.kind == ValueKind::Err && r.eps == eps).map(|r| r.re).fold(0.0, f64::max);
        (eps, worst)
    });
    let table = ResultTable { meta, rows };
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let csv_path = if cfg.output.formats.contains(&Format::Csv) {
        let path = dir.join(format!("{}.csv", cfg.experiment.id));
        table.save(&path)?;
        Some(path)
    } else {
        None
    };
    Ok(RunOutput { table, csv_path, final_error })
}
