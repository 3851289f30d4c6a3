use std::path::PathBuf;

use rddmk::domain::{DomainGraph, Point, ResolvedTarget, Site, SiteSet, Target, DEFAULT_DUP_TOL};
use rddmk::engine::{loo_cross_validate, run_iteration, run_rdd_mk, Observations};
use rddmk::simgen::{draw_replicates, monte_carlo_study, CDomain, FieldKind, StudyConfig};
use rddmk::variogram::VariogramFamily;

use crate::config::{Command, Config, MetricChoice};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, header, ingest_dataset, read_boundary, read_sites, value_columns, write_csv, write_json};

pub struct Dataset {
    pub sites: SiteSet,
    pub obs: Observations,
    pub boundary: Option<Vec<Point>>,
}

pub fn load_dataset(cfg: &Config) -> CliResult<Dataset> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Validation(vec!["[data] section is required for this command".into()]))?;
    let (sites, values) = ingest_dataset(&data.sites, &data.matrices, cfg.run.manifold)?;
    let n = sites.len();
    if cfg.run.k > n {
        return Err(CliError::Validation(vec![format!("run.k = {} violates 1 ≤ K ≤ n (n = {n})", cfg.run.k)]));
    }
    let boundary = data.boundary.as_deref().map(read_boundary).transpose()?;
    let obs = Observations::new((0..n).collect(), values)?;
    Ok(Dataset { sites, obs, boundary })
}

/// Graph over the sites. Under the graph metric every target that does not
/// coincide with a site becomes an extra vertex, so its distances are exact.
pub fn build_graph(metric: MetricChoice, ds: &Dataset, targets: &[Site]) -> CliResult<(DomainGraph, Vec<ResolvedTarget>)> {
    if metric == MetricChoice::Euclidean {
        let graph = DomainGraph::euclidean(&ds.sites);
        let resolved = targets
            .iter()
            .map(|t| graph.resolve(Target::Point(t.point)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok((graph, resolved));
    }
    let n = ds.sites.len();
    let site_points = ds.sites.points();
    let mut extras: Vec<Point> = Vec::new();
    let vertex_of: Vec<usize> = targets
        .iter()
        .map(|t| {
            let close = |q: &Point| q.dist(&t.point) <= DEFAULT_DUP_TOL;
            if let Some(i) = site_points.iter().position(close) {
                i
            } else if let Some(j) = extras.iter().position(close) {
                n + j
            } else {
                extras.push(t.point);
                n + extras.len() - 1
            }
        })
        .collect();
    let graph = DomainGraph::delaunay(&ds.sites, ds.boundary.as_deref(), &extras)?;
    let resolved = vertex_of
        .iter()
        .map(|&v| graph.resolve(Target::Vertex(v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((graph, resolved))
}

fn out_path(cfg: &Config, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

fn family_name(f: VariogramFamily) -> &'static str {
    match f {
        VariogramFamily::Spherical => "spherical",
        VariogramFamily::Exponential => "exponential",
        VariogramFamily::NuggetOnly => "nugget_only",
    }
}

pub fn dispatch(command: Command, cfg: &Config) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
    match command {
        Command::Simulate => simulate(cfg),
        Command::Krige => krige(cfg),
        Command::Cv => cv(cfg),
        Command::Variogram => variogram(cfg),
        Command::McStudy => mc_study(cfg),
    }
}

pub fn krige(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let targets = match cfg.data.as_ref().and_then(|d| d.targets.as_deref()) {
        Some(p) => read_sites(p)?,
        None => ds.sites.sites().to_vec(),
    };
    let (graph, resolved) = build_graph(cfg.metric, &ds, &targets)?;
    let res = run_rdd_mk(&cfg.run, &graph, &ds.obs, &resolved)?;

    let cols = value_columns(cfg.run.manifold);
    let mut head = header(&["target_id", "x", "y"]);
    head.extend(cols.iter().cloned());
    let pred_path = out_path(cfg, "predictions.csv");
    write_csv(
        &pred_path,
        &head,
        targets.iter().zip(&res.predictions).map(|(t, p)| {
            let mut row = vec![t.id.clone(), fmt_f64(t.point.x), fmt_f64(t.point.y)];
            row.extend(p.export_values().into_iter().map(fmt_f64));
            row
        }),
    )?;
    let var_path = out_path(cfg, "variance.csv");
    write_csv(
        &var_path,
        &header(&["target_id", "x", "y", "varsigma2"]),
        targets
            .iter()
            .zip(&res.bootstrap_variance)
            .map(|(t, v)| vec![t.id.clone(), fmt_f64(t.point.x), fmt_f64(t.point.y), fmt_f64(*v)]),
    )?;
    let mut files = vec![pred_path, var_path];
    if let Some(iterations) = &res.iterations {
        let path = out_path(cfg, "iterations.csv");
        let mut head = header(&["iteration", "target_id"]);
        head.extend(cols.iter().cloned());
        write_csv(
            &path,
            &head,
            iterations.iter().enumerate().flat_map(|(b, it)| {
                targets.iter().zip(it).map(move |(t, p)| {
                    let mut row = vec![b.to_string(), t.id.clone()];
                    row.extend(p.export_values().into_iter().map(fmt_f64));
                    row
                })
            }),
        )?;
        files.push(path);
    }
    Ok(files)
}

pub fn cv(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let (graph, _) = build_graph(cfg.metric, &ds, &[])?;
    let res = loo_cross_validate(&cfg.run, &graph, &ds.obs)?;
    let path = out_path(cfg, "cv.json");
    write_json(&path, &serde_json::to_value(&res).map_err(|e| CliError::input(&path, e.to_string()))?)?;
    Ok(vec![path])
}

pub fn variogram(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    cfg.run.validate(ds.obs.len())?;
    let (graph, _) = build_graph(cfg.metric, &ds, &[])?;
    let it = run_iteration(&cfg.run, &graph, &ds.obs, &[], 0)?;
    let path = out_path(cfg, "variogram.csv");
    write_csv(
        &path,
        &header(&["iteration", "tile", "lag", "gamma_emp", "gamma_fit", "weight"]),
        it.tiles.iter().flat_map(|t| {
            let rows: Vec<Vec<String>> = match &t.empirical {
                Some(e) => (0..e.lag_centers.len())
                    .map(|i| {
                        vec![
                            "0".into(),
                            t.tile.to_string(),
                            fmt_f64(e.lag_centers[i]),
                            fmt_f64(e.semivariances[i]),
                            fmt_f64(t.model.eval(e.lag_centers[i])),
                            fmt_f64(e.pair_weights[i]),
                        ]
                    })
                    .collect(),
                None => Vec::new(),
            };
            rows
        }),
    )?;
    let tiles_path = out_path(cfg, "tiles.csv");
    write_csv(
        &tiles_path,
        &header(&["tile", "nucleus_id", "n_sites", "family", "nugget", "partial_sill", "range", "mean_fallback"]),
        it.tiles.iter().map(|t| {
            vec![
                t.tile.to_string(),
                ds.sites.get(t.nucleus).id.clone(),
                t.n_sites.to_string(),
                family_name(t.model.family).into(),
                fmt_f64(t.model.nugget),
                fmt_f64(t.model.partial_sill),
                fmt_f64(t.model.range),
                t.mean_fallback.to_string(),
            ]
        }),
    )?;
    Ok(vec![path, tiles_path])
}

fn point_row(id: String, values: Vec<f64>) -> Vec<String> {
    let mut row = vec![id];
    row.extend(values.into_iter().map(fmt_f64));
    row
}

pub fn simulate(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let sim = &cfg.simulation;
    let domain = CDomain::build(&sim.domain)?;
    let study = StudyConfig {
        n_replicates: sim.n_replicates,
        n_sites: sim.n_sites,
        k_values: Vec::new(),
        field: sim.field,
        regenerate_field: false,
        seed: cfg.run.master_seed,
        workers: 1,
    };
    let reps = draw_replicates(&domain, &sim.field_spec, &study)?;
    let g = &domain.grid;
    let mut files = Vec::new();

    let grid_path = out_path(cfg, "grid.csv");
    write_csv(
        &grid_path,
        &header(&["id", "phi", "r", "x", "y"]),
        (0..g.len()).map(|i| {
            vec![i.to_string(), fmt_f64(g.phi[i]), fmt_f64(g.r[i]), fmt_f64(g.points[i].x), fmt_f64(g.points[i].y)]
        }),
    )?;
    files.push(grid_path);
    let boundary_path = out_path(cfg, "boundary.csv");
    write_csv(
        &boundary_path,
        &header(&["x", "y"]),
        g.boundary().iter().map(|p| vec![fmt_f64(p.x), fmt_f64(p.y)]),
    )?;
    files.push(boundary_path);

    let mut mhead = header(&["id"]);
    mhead.extend(value_columns(sim.field.manifold()));
    let field_path = out_path(cfg, "field.csv");
    write_csv(
        &field_path,
        &mhead,
        reps[0].field.iter().enumerate().map(|(i, p)| point_row(i.to_string(), p.export_values())),
    )?;
    files.push(field_path);

    for (j, rep) in reps.iter().enumerate() {
        let sites_path = out_path(cfg, &format!("subsample_{j}.csv"));
        write_csv(
            &sites_path,
            &header(&["id", "x", "y"]),
            rep.observed
                .iter()
                .map(|&i| vec![i.to_string(), fmt_f64(g.points[i].x), fmt_f64(g.points[i].y)]),
        )?;
        let matrices_path = out_path(cfg, &format!("matrices_{j}.csv"));
        write_csv(
            &matrices_path,
            &mhead,
            rep.observed.iter().map(|&i| point_row(i.to_string(), rep.field[i].export_values())),
        )?;
        files.push(sites_path);
        files.push(matrices_path);
    }
    Ok(files)
}

pub fn mc_study(cfg: &Config) -> CliResult<Vec<PathBuf>> {
    let sim = &cfg.simulation;
    let mc = &cfg.mc_study;
    let mut domain = CDomain::build(&sim.domain)?;
    if cfg.metric == MetricChoice::Euclidean {
        domain.graph = DomainGraph::euclidean(&SiteSet::from_points(&domain.grid.points)?);
    }
    let study = StudyConfig {
        n_replicates: mc.n_replicates,
        n_sites: mc.n_sites,
        k_values: mc.k_values.clone(),
        field: mc.field,
        regenerate_field: mc.regenerate_field,
        seed: cfg.run.master_seed,
        workers: cfg.run.workers,
    };
    let out = monte_carlo_study(&domain, &sim.field_spec, &cfg.run, &study)?;
    let corr = mc.field == FieldKind::Correlation;

    let summary_path = out_path(cfg, "mc_study.csv");
    let mut head = header(&["K", "mean", "median", "sd"]);
    if corr {
        head.extend(header(&["rho_mean", "rho_median", "rho_sd"]));
    }
    write_csv(
        &summary_path,
        &head,
        out.rows.iter().map(|row| {
            let s = row.summary();
            let mut r = vec![row.k.to_string(), fmt_f64(s.mean), fmt_f64(s.median), fmt_f64(s.sd)];
            if let Some(rs) = row.rho_summary() {
                r.extend([fmt_f64(rs.mean), fmt_f64(rs.median), fmt_f64(rs.sd)]);
            }
            r
        }),
    )?;

    let reps_path = out_path(cfg, "mc_replicates.csv");
    let mut head = header(&["replicate", "K", "error"]);
    if corr {
        head.push("rho_error".into());
    }
    write_csv(
        &reps_path,
        &head,
        out.rows.iter().flat_map(|row| {
            (0..row.errors.len()).map(move |j| {
                let mut r = vec![j.to_string(), row.k.to_string(), fmt_f64(row.errors[j])];
                if let Some(rho) = &row.rho_errors {
                    r.push(fmt_f64(rho[j]));
                }
                r
            })
        }),
    )?;
    let mut files = vec![summary_path, reps_path];

    if cfg.output.dump_spe {
        let path = out_path(cfg, "spe.csv");
        let mut head = header(&["replicate", "K", "target_id", "observed", "spe"]);
        if corr {
            head.push("rho_sq".into());
        }
        let n = domain.grid.len();
        write_csv(
            &path,
            &head,
            out.scores.iter().enumerate().flat_map(|(j, per_k)| {
                let mut observed = vec![false; n];
                for &i in &out.observed[j] {
                    observed[i] = true;
                }
                let ks = &mc.k_values;
                per_k
                    .iter()
                    .enumerate()
                    .flat_map(|(c, s)| {
                        (0..n)
                            .map(|t| {
                                let mut r = vec![
                                    j.to_string(),
                                    ks[c].to_string(),
                                    t.to_string(),
                                    (observed[t] as u8).to_string(),
                                    fmt_f64(s.spe[t]),
                                ];
                                if let Some(rho) = &s.rho_sq {
                                    r.push(fmt_f64(rho[t]));
                                }
                                r
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            }),
        )?;
        files.push(path);
    }
    Ok(files)
}

