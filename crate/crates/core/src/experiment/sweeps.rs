use super::config::{TAG_ACCURACY, TAG_BOOTSTRAP, TAG_EXPLAIN, TAG_PROTOTYPE, TAG_P_SWEEP, TAG_TRACE};
use super::stats::{cluster_bootstrap_median_se, mean, percentile};
use super::{is_exclusion, CellExplainer, ExperimentConfig, Pipeline, SweepRecord};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::explain::{bisection_trace_toward, euclidean, ExplanationRequest, TraceRow};

const NONROBUST_P: f64 = 0.5;

/// Distances and true margins of the explanations that succeeded in one cell.
#[derive(Debug, Default)]
struct Explained {
    distances: Vec<f64>,
    margins: Vec<f64>,
    prototype_distances: Vec<f64>,
    excluded: usize,
}

fn explain_all(pipeline: &Pipeline, explainer: &mut CellExplainer<'_>) -> Result<Explained> {
    let mut out = Explained::default();
    for &i in pipeline.instances() {
        match explainer.explain(i) {
            Ok(ex) => {
                out.distances.push(ex.distance);
                out.margins.push(pipeline.true_margin(ex.x.view(), ex.y_prime)?);
                if let Ok(z) = explainer.prototype(ex.y_prime.opposite()) {
                    out.prototype_distances.push(euclidean(z.point.view(), ex.x_prime.view()));
                }
            }
            Err(e) if is_exclusion(&e) => out.excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

struct BetaCell {
    robust: Explained,
    nonrobust: Explained,
}

fn beta_cell(pipeline: &Pipeline, b: usize, r: usize) -> Result<BetaCell> {
    let cfg = &pipeline.config;
    let (b, r64) = (b as u64, r as u64);
    let release = pipeline.release(cfg.beta_grid[b as usize], cfg.seed(&[TAG_EXPLAIN, b, r64]))?;
    let mut robust = pipeline.explainer(
        &release,
        cfg.p_default,
        cfg.seed(&[TAG_PROTOTYPE, TAG_EXPLAIN, b, r64, 0]),
    );
    let mut nonrobust = pipeline.explainer(
        &release,
        NONROBUST_P,
        cfg.seed(&[TAG_PROTOTYPE, TAG_EXPLAIN, b, r64, 1]),
    );
    Ok(BetaCell {
        robust: explain_all(pipeline, &mut robust)?,
        nonrobust: explain_all(pipeline, &mut nonrobust)?,
    })
}

impl Pipeline {
    /// Test accuracy of one release per (β, realization), plus the non-private baseline.
    pub fn accuracy_sweep(&self) -> Result<Vec<SweepRecord>> {
        let cfg = &self.config;
        let mut out = vec![SweepRecord::new(None, None, None, "baseline_accuracy", self.baseline_accuracy())];
        for (b, &beta) in cfg.beta_grid.iter().enumerate() {
            for r in 0..cfg.noise_realizations {
                let release = self.release(beta, cfg.seed(&[TAG_ACCURACY, b as u64, r as u64]))?;
                out.push(SweepRecord::new(Some(beta), None, Some(r), "accuracy", self.test_accuracy(&release)));
            }
        }
        Ok(out)
    }

    /// Mean robust (at `p_default`) and non-robust explanation distance per
    /// (β, realization), with the number of excluded instances.
    pub fn distance_sweep_beta(&self) -> Result<Vec<SweepRecord>> {
        let cfg = &self.config;
        let mut out = Vec::new();
        for (b, &beta) in cfg.beta_grid.iter().enumerate() {
            for r in 0..cfg.noise_realizations {
                let cell = beta_cell(self, b, r)?;
                for (p, name, ex) in [
                    (cfg.p_default, "robust", &cell.robust),
                    (NONROBUST_P, "nonrobust", &cell.nonrobust),
                ] {
                    if let Some(m) = mean(&ex.distances) {
                        out.push(SweepRecord::new(Some(beta), Some(p), Some(r), &format!("{name}_distance"), m));
                    }
                    out.push(SweepRecord::new(
                        Some(beta),
                        Some(p),
                        Some(r),
                        &format!("{name}_excluded"),
                        ex.excluded as f64,
                    ));
                }
            }
        }
        Ok(out)
    }

    /// Mean robust distance per (p, realization) at `beta_default`, with the
    /// mean instance-to-prototype distance and the non-robust reference.
    pub fn distance_sweep_p(&self) -> Result<Vec<SweepRecord>> {
        let cfg = &self.config;
        let beta = cfg.beta_default;
        let mut out = Vec::new();
        for r in 0..cfg.noise_realizations {
            let r64 = r as u64;
            let release = self.release(beta, cfg.seed(&[TAG_P_SWEEP, r64]))?;
            let mut push = |p: f64, name: &str, ex: &Explained, prototypes: bool| {
                if let Some(m) = mean(&ex.distances) {
                    out.push(SweepRecord::new(Some(beta), Some(p), Some(r), &format!("{name}_distance"), m));
                }
                if prototypes {
                    if let Some(m) = mean(&ex.prototype_distances) {
                        out.push(SweepRecord::new(Some(beta), Some(p), Some(r), "prototype_distance", m));
                    }
                }
                out.push(SweepRecord::new(
                    Some(beta),
                    Some(p),
                    Some(r),
                    &format!("{name}_excluded"),
                    ex.excluded as f64,
                ));
            };
            for (k, &p) in cfg.p_grid.iter().enumerate() {
                let seed = cfg.seed(&[TAG_PROTOTYPE, TAG_P_SWEEP, r64, k as u64]);
                let ex = explain_all(self, &mut self.explainer(&release, p, seed))?;
                push(p, "robust", &ex, true);
            }
            let seed = cfg.seed(&[TAG_PROTOTYPE, TAG_P_SWEEP, r64, u64::MAX]);
            let ex = explain_all(self, &mut self.explainer(&release, NONROBUST_P, seed))?;
            push(NONROBUST_P, "nonrobust", &ex, false);
        }
        Ok(out)
    }

    /// Pooled 10/50/90th percentiles of `y' f(x_ex, w*)` per β, the standard
    /// error of the median, and the number of pooled explanations.
    pub fn violation_stats(&self) -> Result<Vec<SweepRecord>> {
        let cfg = &self.config;
        let mut out = Vec::new();
        for (b, &beta) in cfg.beta_grid.iter().enumerate() {
            let mut robust = Vec::with_capacity(cfg.noise_realizations);
            let mut nonrobust = Vec::with_capacity(cfg.noise_realizations);
            for r in 0..cfg.noise_realizations {
                let cell = beta_cell(self, b, r)?;
                robust.push(cell.robust.margins);
                nonrobust.push(cell.nonrobust.margins);
            }
            for (k, p, name, clusters) in [
                (0u64, cfg.p_default, "robust", &robust),
                (1, NONROBUST_P, "nonrobust", &nonrobust),
            ] {
                let pooled: Vec<f64> = clusters.iter().flatten().copied().collect();
                let rec = |metric: &str, v: f64| SweepRecord::new(Some(beta), Some(p), None, &format!("{name}_{metric}"), v);
                for (q, metric) in [(0.1, "p10"), (0.5, "p50"), (0.9, "p90")] {
                    if let Some(v) = percentile(&pooled, q) {
                        out.push(rec(metric, v));
                    }
                }
                let seed = cfg.seed(&[TAG_BOOTSTRAP, b as u64, k]);
                if let Some(se) = cluster_bootstrap_median_se(clusters, cfg.bootstrap_resamples, seed) {
                    out.push(rec("p50_se", se));
                }
                out.push(rec("count", pooled.len() as f64));
            }
        }
        Ok(out)
    }

    /// Bisection trace for one test instance at (`beta_default`, `p_default`).
    /// Without an index, the first test instance that the release labels +1
    /// and that meets the bisection preconditions is used.
    pub fn convergence_trace(&self, instance_index: Option<usize>) -> Result<(usize, Vec<TraceRow>)> {
        let cfg = &self.config;
        let release = self.release(cfg.beta_default, cfg.seed(&[TAG_TRACE]))?;
        let mut explainer = self.explainer(&release, cfg.p_default, cfg.seed(&[TAG_PROTOTYPE, TAG_TRACE]));
        let trace = |explainer: &mut CellExplainer<'_>, i: usize| -> Result<Vec<TraceRow>> {
            let request = ExplanationRequest::new(self.test.row(i).to_owned(), &release, cfg.p_default)?;
            let z = match explainer.prototype(request.label.opposite()) {
                Ok(proto) => proto.point.clone(),
                Err(e) => return Err(super::replay(e)),
            };
            bisection_trace_toward(&request, &release, z.view(), &cfg.bisection)
        };
        match instance_index {
            Some(i) if i >= self.test.len() => Err(Error::InvalidParameter(format!(
                "instance index {i} is out of range for a test set of {}",
                self.test.len()
            ))),
            Some(i) => Ok((i, trace(&mut explainer, i)?)),
            None => {
                for i in 0..self.test.len() {
                    if release.classify(self.test.row(i))? != Label::Positive {
                        continue;
                    }
                    match trace(&mut explainer, i) {
                        Ok(rows) => return Ok((i, rows)),
                        Err(e) if is_exclusion(&e) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::Precondition(
                    "no test instance labeled +1 meets the bisection preconditions".into(),
                ))
            }
        }
    }
}

pub fn run_accuracy_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    Pipeline::prepare(config)?.accuracy_sweep()
}

pub fn run_distance_sweep_beta(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    Pipeline::prepare(config)?.distance_sweep_beta()
}

pub fn run_distance_sweep_p(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    Pipeline::prepare(config)?.distance_sweep_p()
}

pub fn run_violation_stats(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    Pipeline::prepare(config)?.violation_stats()
}

pub fn run_convergence_trace(config: &ExperimentConfig, instance_index: usize) -> Result<Vec<TraceRow>> {
    Ok(Pipeline::prepare(config)?.convergence_trace(Some(instance_index))?.1)
}
