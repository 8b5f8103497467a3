//! Report files: `report.json`, `tables/*.csv` and `figures/*.svg`.
//!
//! Every table writer takes any `io::Write`, so single tables can also be
//! produced outside a full run. Floats go through [`num`], a shortest
//! round-trip format, so the files are byte-stable across runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{report_json, svg, Phase1Report, Phase2Report, PipelineReport};
use crate::clustering::{dtw, Dendrogram};
use crate::diagnostics::TestResult;
use crate::error::Error;
use crate::estimators::{FitResult, ModelComparison};
use crate::panel::{correlation_matrix, PanelDataset};
use crate::sarimax::ScenarioPair;
use crate::selection::SelectionReport;

type CsvResult = Result<(), Error>;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("cannot write table", io),
        other => Error::Config(format!("table serialization failed: {other:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)` so tiny p-values stay readable.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> CsvResult {
    w.flush().map_err(|e| Error::io("cannot write table", e))
}

/// term, estimate, std error, statistic, p-value, significance stars.
pub fn write_coefficient_table<W: Write>(fit: &FitResult, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["model", "term", "estimate", "std_error", "statistic", "p_value", "stars"]).map_err(csv_err)?;
    for c in &fit.coefficients {
        w.write_record([
            fit.label(),
            &c.term,
            &num(c.estimate),
            &num(c.std_error),
            &num(c.statistic),
            &num(c.p_value),
            c.stars(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_model_fit_table<W: Write>(fits: &[FitResult], out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record([
        "model", "n_obs", "n_params", "r_squared", "adj_r_squared", "f_statistic", "f_df1", "f_df2", "f_pvalue", "sigma2",
        "df_resid", "log_likelihood", "aic", "bic", "sigma2_u", "sigma2_e", "theta",
    ])
    .map_err(csv_err)?;
    for f in fits {
        let s = &f.fit;
        let vc = f.variance_components.as_ref();
        w.write_record([
            f.label().to_string(),
            s.n_obs.to_string(),
            s.n_params.to_string(),
            num(s.r_squared),
            num(s.adj_r_squared),
            num(s.f_statistic),
            num(s.f_df.0),
            num(s.f_df.1),
            num(s.f_pvalue),
            num(s.sigma2),
            s.df_resid.to_string(),
            num(s.log_likelihood),
            num(s.aic),
            num(s.bic),
            opt(vc.map(|v| v.sigma2_u)),
            opt(vc.map(|v| v.sigma2_e)),
            opt(vc.map(|v| v.theta)),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_tests_table<W: Write>(tests: &[&TestResult], out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["test", "statistic", "distribution", "p_value", "alpha", "decision", "pseudo_inverse"]).map_err(csv_err)?;
    for t in tests {
        w.write_record([
            t.test_name.clone(),
            num(t.statistic),
            t.distribution.to_string(),
            num(t.p_value),
            num(t.alpha),
            if t.decision.rejected() { "reject" } else { "fail_to_reject" }.to_string(),
            t.pseudo_inverse.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_comparison_table<W: Write>(cmp: &ModelComparison, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["rank", "model", "log_likelihood", "aic", "bic", "n_params", "delta_aic", "delta_bic"]).map_err(csv_err)?;
    for (i, e) in cmp.ranking.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.model.clone(),
            num(e.log_likelihood),
            num(e.aic),
            num(e.bic),
            e.n_params.to_string(),
            num(e.delta_aic),
            num(e.delta_bic),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Square matrix with the codes as both header row and first column.
pub fn write_correlation_table<W: Write>(panel: &PanelDataset, codes: &[String], out: W) -> CsvResult {
    let m = correlation_matrix(panel, codes)?;
    let mut w = writer(out);
    let mut header = vec![String::new()];
    header.extend(m.codes.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, code) in m.codes.iter().enumerate() {
        let mut row = vec![code.clone()];
        row.extend((0..m.codes.len()).map(|j| num(m.values[(i, j)])));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_selection_table<W: Write>(sel: &SelectionReport, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["feature", "p_value", "significant", "dropped_for", "correlation", "selected"]).map_err(csv_err)?;
    for c in sel.source_model.predictors.iter() {
        let sig = sel.significant.iter().find(|s| &s.code == c);
        let drop = sel.dropped_collinear.iter().find(|d| &d.dropped == c);
        w.write_record([
            c.clone(),
            sig.map(|s| num(s.p_value)).unwrap_or_default(),
            sig.is_some().to_string(),
            drop.map(|d| d.kept.clone()).unwrap_or_default(),
            opt(drop.map(|d| d.correlation)),
            sel.selected.contains(c).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// country, scenario, order, RMSE, MAE.
pub fn write_forecast_errors_table<W: Write>(pairs: &[ScenarioPair], out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["country", "scenario", "order", "rmse", "mae"]).map_err(csv_err)?;
    for p in pairs {
        for r in [&p.all_features, &p.selected_features] {
            w.write_record([r.entity.clone(), r.scenario.as_str().to_string(), r.order.to_string(), num(r.rmse), num(r.mae)])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn write_nrmse_table<W: Write>(pairs: &[ScenarioPair], out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["country", "nrmse_all_features", "nrmse_selected_features", "selected_improves"]).map_err(csv_err)?;
    for p in pairs {
        w.write_record([
            p.entity.clone(),
            opt(p.all_features.nrmse),
            opt(p.selected_features.nrmse),
            p.selected_improves().to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_forecasts_table<W: Write>(pairs: &[ScenarioPair], out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["country", "year", "actual", "forecast_all_features", "forecast_selected_features"]).map_err(csv_err)?;
    for p in pairs {
        let (a, s) = (&p.all_features, &p.selected_features);
        for i in 0..a.periods.len() {
            w.write_record([
                p.entity.clone(),
                a.periods[i].to_string(),
                num(a.actuals[i]),
                num(a.point_forecasts[i]),
                num(s.point_forecasts[i]),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn write_dendrogram_table<W: Write>(d: &Dendrogram, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["step", "cluster_a", "cluster_b", "label_a", "label_b", "height", "size"]).map_err(csv_err)?;
    let n = d.leaf_labels.len();
    let name = |id: usize| if id < n { d.leaf_labels[id].clone() } else { format!("#{id}") };
    for (s, m) in d.merges.iter().enumerate() {
        w.write_record([
            s.to_string(),
            m.cluster_a.to_string(),
            m.cluster_b.to_string(),
            name(m.cluster_a),
            name(m.cluster_b),
            num(m.height),
            m.size.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Cluster-level table: count, then mean, median, std and annual growth
/// rate per selected feature.
pub fn write_cluster_features_table<W: Write>(p2: &Phase2Report, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["cluster", "members", "feature", "mean", "median", "std_dev", "annual_growth_rate_pct", "growth_excluded"])
        .map_err(csv_err)?;
    for s in &p2.clusters.feature_summaries {
        w.write_record([
            s.cluster.to_string(),
            p2.clusters.members(s.cluster).len().to_string(),
            s.feature.clone(),
            num(s.mean),
            num(s.median),
            num(s.std_dev),
            opt(s.annual_growth_rate_pct),
            s.growth_excluded.join(";"),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

struct TableSet<'a> {
    dir: PathBuf,
    written: &'a mut Vec<PathBuf>,
}

impl TableSet<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> CsvResult) -> CsvResult {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, buf).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
        self.written.push(path);
        Ok(())
    }
}

fn phase1_tables(p1: &Phase1Report, panel: &PanelDataset, t: &mut TableSet) -> CsvResult {
    for fit in &p1.models {
        t.write(&format!("coefficients_model_{}.csv", fit.label()), |b| write_coefficient_table(fit, b))?;
    }
    t.write("model_fit.csv", |b| write_model_fit_table(&p1.models, b))?;
    let tests: Vec<&TestResult> = [&p1.breusch_pagan, &p1.heteroskedasticity, &p1.wald, &p1.hausman]
        .into_iter()
        .flatten()
        .collect();
    t.write("tests.csv", |b| write_tests_table(&tests, b))?;
    if let Some(cmp) = &p1.comparison {
        t.write("comparison.csv", |b| write_comparison_table(cmp, b))?;
    }
    let mut codes = vec![panel.dependent().to_string()];
    codes.extend(panel.candidate_predictors());
    t.write("correlation.csv", |b| write_correlation_table(panel, &codes, b))?;
    if let Some(sel) = &p1.selection {
        t.write("selection.csv", |b| write_selection_table(sel, b))?;
    }
    Ok(())
}

fn phase2_tables(p2: &Phase2Report, panel: &PanelDataset, t: &mut TableSet) -> CsvResult {
    t.write("forecast_errors.csv", |b| write_forecast_errors_table(&p2.forecasts, b))?;
    t.write("nrmse_comparison.csv", |b| write_nrmse_table(&p2.forecasts, b))?;
    t.write("forecasts.csv", |b| write_forecasts_table(&p2.forecasts, b))?;
    if let Some(d) = &p2.dendrogram {
        t.write("dendrogram_merges.csv", |b| write_dendrogram_table(d, b))?;
    }
    let c = &p2.clusters;
    t.write("cluster_labels.csv", |b| {
        let mut w = writer(b);
        w.write_record(["country", "cluster"]).map_err(csv_err)?;
        for l in &c.labels {
            w.write_record([l.entity.clone(), l.cluster.to_string()]).map_err(csv_err)?;
        }
        finish(w)
    })?;
    let periods = panel.periods();
    t.write("centers.csv", |b| {
        let mut w = writer(b);
        w.write_record(["cluster", "index", "year", "value"]).map_err(csv_err)?;
        for (k, center) in c.centers.iter().enumerate() {
            for (i, v) in center.iter().enumerate() {
                let year = periods.get(i).map(|y| y.to_string()).unwrap_or_default();
                w.write_record([k.to_string(), i.to_string(), year, num(*v)]).map_err(csv_err)?;
            }
        }
        finish(w)
    })?;
    t.write("center_distances.csv", |b| {
        let mut w = writer(b);
        let mut header = vec!["cluster".to_string()];
        header.extend((0..c.k).map(|k| k.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in c.center_distances.iter().enumerate() {
            let mut r = vec![i.to_string()];
            r.extend(row.iter().map(|v| num(*v)));
            w.write_record(&r).map_err(csv_err)?;
        }
        finish(w)
    })?;
    t.write("member_alignments.csv", |b| {
        let mut w = writer(b);
        w.write_record(["country", "cluster", "distance", "path_length"]).map_err(csv_err)?;
        for m in &c.member_alignments {
            w.write_record([m.entity.clone(), m.cluster.to_string(), num(m.distance), m.path.len().to_string()])
                .map_err(csv_err)?;
        }
        finish(w)
    })?;
    t.write("warping_paths.csv", |b| {
        let mut w = writer(b);
        w.write_record(["country", "cluster", "step", "member_index", "center_index"]).map_err(csv_err)?;
        for m in &c.member_alignments {
            for (s, (i, j)) in m.path.iter().enumerate() {
                w.write_record([m.entity.clone(), m.cluster.to_string(), s.to_string(), i.to_string(), j.to_string()])
                    .map_err(csv_err)?;
            }
        }
        finish(w)
    })?;
    t.write("cost_grids.csv", |b| {
        let mut w = writer(b);
        w.write_record(["country", "cluster", "member_index", "center_index", "accumulated_cost"]).map_err(csv_err)?;
        for (name, cluster, grid) in cost_grids(p2, panel)? {
            for (i, row) in grid.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([name.clone(), cluster.to_string(), i.to_string(), j.to_string(), num(*v)])
                        .map_err(csv_err)?;
                }
            }
        }
        finish(w)
    })?;
    t.write("cluster_features.csv", |b| write_cluster_features_table(p2, b))?;
    Ok(())
}

/// Accumulated-cost grid of every entity against its cluster center.
pub fn cost_grids(p2: &Phase2Report, panel: &PanelDataset) -> Result<Vec<(String, usize, Vec<Vec<f64>>)>, Error> {
    let series = crate::clustering::standardized_series(panel, panel.dependent())?;
    let c = &p2.clusters;
    let mut out = Vec::new();
    for (e, s) in panel.entities().iter().zip(&series) {
        let Some(k) = c.label_of(e) else { continue };
        let r = dtw(s, &c.centers[k], c.options.local_cost, c.options.band)?;
        out.push((e.clone(), k, r.cost_matrix));
    }
    Ok(out)
}

/// Write `report.json`, the tables and the figures under `dir`. Returns the
/// paths written, in order.
pub fn write_outputs(report: &PipelineReport, panel: &PanelDataset, dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let tables = dir.join("tables");
    let figures = dir.join("figures");
    for d in [dir, &tables, &figures] {
        fs::create_dir_all(d).map_err(|e| Error::io(format!("cannot create {}", d.display()), e))?;
    }
    let mut written = Vec::new();
    let json_path = dir.join("report.json");
    fs::write(&json_path, report_json(report)?).map_err(|e| Error::io(format!("cannot write {}", json_path.display()), e))?;
    written.push(json_path);

    let mut t = TableSet { dir: tables, written: &mut written };
    if let Some(p1) = &report.phase1 {
        phase1_tables(p1, panel, &mut t)?;
    }
    if let Some(p2) = &report.phase2 {
        phase2_tables(p2, panel, &mut t)?;
        let mut f = TableSet { dir: figures, written: t.written };
        if let Some(d) = &p2.dendrogram {
            f.write("dendrogram.svg", |b| Ok(b.extend(svg::dendrogram(d).into_bytes())))?;
        }
        f.write("forecasts.svg", |b| Ok(b.extend(svg::forecast_lines(&p2.forecasts).into_bytes())))?;
        f.write("nrmse.svg", |b| Ok(b.extend(svg::nrmse_bars(&p2.forecasts).into_bytes())))?;
        for (name, cluster, grid) in cost_grids(p2, panel)? {
            let path = p2.clusters.member_alignments.iter().find(|m| m.entity == name).map(|m| m.path.as_slice()).unwrap_or(&[]);
            let file = format!("dtw_cost_{}.svg", sanitize(&name));
            f.write(&file, |b| Ok(b.extend(svg::cost_heatmap(&format!("{name} vs center {cluster}"), &grid, path).into_bytes())))?;
        }
    }
    Ok(written)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}
