//! Subcommand implementations. Reports go to the supplied writer so the
//! commands can be exercised in tests.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use randhull_core::estimators::{
    calibrate_c, cap_profile, deficit, fit_rate, Calibration, CapProfileResult, Estimate, RateFit, Route,
};
use randhull_core::functionals::{predicted_deficit, rate_factor, Prediction};
use randhull_core::selftest::{run_selftest, CheckResult};
use randhull_core::{Body, BodyKind, Density, SeedSpec, VecD};

use crate::config::ValidatedConfig;
use crate::error::{CliError, CliResult};
use crate::records::{append_records, build_id, read_records, write_atomic, ResultRecord};
use crate::store::{CalibrationStore, StoredCalibration};

fn io(e: std::io::Error) -> CliError {
    CliError::io("<report>", e)
}

fn route_index(route: Route) -> u64 {
    match route {
        Route::Direct => 0,
        Route::Support => 1,
        Route::Projection => 2,
    }
}

/// Seed of the `(n, route)` cell; independent of which other cells run.
pub fn cell_seed(master_seed: u64, n_index: usize, route: Route) -> SeedSpec {
    SeedSpec::new(master_seed, 0).child(3 * n_index as u64 + route_index(route))
}

fn density_kind(cfg: &ValidatedConfig) -> String {
    cfg.density.spec().label()
}

/// Asymptotic prediction at `n = 1`, when the body has a rolling ball and
/// the constant is known.
fn prediction(cfg: &ValidatedConfig, store: &CalibrationStore) -> Option<Prediction> {
    cfg.body.rolling_radius()?;
    predicted_deficit(&cfg.body, &cfg.density, cfg.config.j, 1, &store.constant_table()).ok()
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub records: Vec<ResultRecord>,
    /// Largest |z| between two routes on the same `n`.
    pub max_route_z: f64,
}

fn run_cells(
    cfg: &ValidatedConfig,
    master_seed: u64,
    routes: &[Route],
    store: &CalibrationStore,
    out: Option<&Path>,
) -> CliResult<(Vec<ResultRecord>, Vec<(usize, Vec<Estimate>)>)> {
    let c = &cfg.config;
    let pred = prediction(cfg, store);
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for (ni, &n) in c.n_grid.iter().enumerate() {
        let mut row = Vec::new();
        let mut fresh = Vec::new();
        for &route in routes {
            let start = Instant::now();
            let est = deficit(
                &cfg.body,
                &cfg.density,
                c.j,
                n,
                c.reps,
                route,
                c.y_samples,
                cell_seed(master_seed, ni, route),
            );
            let est = match est {
                Ok(e) => e,
                Err(e) => {
                    if let Some(path) = out {
                        let marker = path.with_extension("partial");
                        let note = format!(
                            "partial: {} rows written before failure at n={n}, route={route}: {e}\n",
                            records.len()
                        );
                        write_atomic(&marker, note.as_bytes())?;
                    }
                    return Err(e.into());
                }
            };
            fresh.push(ResultRecord {
                experiment_id: c.experiment_id.clone(),
                body_kind: cfg.body.kind().name().to_string(),
                d: cfg.body.dim(),
                j: c.j,
                density_kind: density_kind(cfg),
                n,
                route: route.to_string(),
                reps: est.reps,
                deficit_mean: est.mean,
                deficit_stderr: est.stderr,
                predicted: pred.as_ref().map(|p| p.deficit * rate_factor(cfg.body.dim(), n)),
                wall_time_s: start.elapsed().as_secs_f64(),
                master_seed,
                git_or_build_id: build_id(),
            });
            row.push(est);
        }
        if let Some(path) = out {
            append_records(path, &fresh)?;
        }
        records.extend(fresh);
        cells.push((n, row));
    }
    Ok((records, cells))
}

fn print_table(w: &mut dyn Write, records: &[ResultRecord]) -> CliResult<()> {
    writeln!(w, "{:>8} {:>11} {:>14} {:>12} {:>14} {:>9}", "n", "route", "deficit", "stderr", "predicted", "sim/pred").map_err(io)?;
    for r in records {
        let (pred, ratio) = match r.predicted {
            Some(p) => (format!("{p:.6e}"), format!("{:.4}", r.deficit_mean / p)),
            None => ("-".to_string(), "-".to_string()),
        };
        writeln!(
            w,
            "{:>8} {:>11} {:>14.6e} {:>12.3e} {:>14} {:>9}",
            r.n, r.route, r.deficit_mean, r.deficit_stderr, pred, ratio
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn simulate(
    cfg: &ValidatedConfig,
    master_seed: u64,
    out: Option<&Path>,
    store: &CalibrationStore,
    w: &mut dyn Write,
) -> CliResult<SimulationOutcome> {
    let c = &cfg.config;
    writeln!(
        w,
        "experiment {}: {} d={} j={} density={} reps={} seed={master_seed}",
        c.experiment_id,
        cfg.body.kind().name(),
        cfg.body.dim(),
        c.j,
        density_kind(cfg),
        c.reps
    )
    .map_err(io)?;
    let (records, cells) = run_cells(cfg, master_seed, &c.routes, store, out)?;
    print_table(w, &records)?;
    let mut max_route_z: f64 = 0.0;
    for (_, row) in &cells {
        for (a, ea) in row.iter().enumerate() {
            for eb in &row[a + 1..] {
                max_route_z = max_route_z.max(ea.z_score(eb).abs());
            }
        }
    }
    if c.routes.len() > 1 {
        writeln!(w, "max route |z| = {max_route_z:.2} (tolerance {})", c.tolerances.route_sigma).map_err(io)?;
        if max_route_z > c.tolerances.route_sigma {
            return Err(CliError::Band(format!(
                "routes disagree: |z| = {max_route_z:.2} exceeds {}",
                c.tolerances.route_sigma
            )));
        }
    }
    Ok(SimulationOutcome { records, max_route_z })
}

pub fn calibrate(
    j: usize,
    d: usize,
    grid: &[usize],
    reps: usize,
    radius: f64,
    master_seed: u64,
    store_path: &Path,
    w: &mut dyn Write,
) -> CliResult<StoredCalibration> {
    let cal: Calibration = calibrate_c(j, d, grid, reps, radius, SeedSpec::new(master_seed, 0))?;
    for (n, e) in cal.n_grid.iter().zip(&cal.scaled) {
        writeln!(w, "n={n:>7}  rescaled deficit {:.6} ± {:.6}", e.mean, e.stderr).map_err(io)?;
    }
    let mut store = CalibrationStore::load(store_path)?;
    let entry = store.record(&cal, reps, radius, master_seed).clone();
    store.save(store_path)?;
    writeln!(
        w,
        "c^({j},{d}) = {:.6} ± {:.6}  (stored in {})",
        entry.c_jd,
        entry.stderr,
        store_path.display()
    )
    .map_err(io)?;
    Ok(entry)
}

/// Admissible exponent band for the deficit rate, when one is known.
pub fn rate_band(body: &Body, j: usize) -> Option<(f64, f64)> {
    let d = body.dim() as f64;
    let half_width = 0.2 / (d - 1.0);
    let center = if body.rolling_radius().is_some() {
        -2.0 / (d - 1.0)
    } else if matches!(body.kind(), BodyKind::Cube { .. }) && j == 1 {
        -1.0 / (d - 1.0)
    } else {
        return None;
    };
    Some((center - half_width, center + half_width))
}

#[derive(Clone, Debug)]
pub struct RateOutcome {
    pub fit: RateFit,
    pub band: Option<(f64, f64)>,
    pub passed: Option<bool>,
}

/// Fits the rate from existing CSV rows (`from_csv`) or from fresh runs of
/// the first configured route.
pub fn rate(
    cfg: &ValidatedConfig,
    master_seed: u64,
    out: Option<&Path>,
    from_csv: Option<&Path>,
    store: &CalibrationStore,
    w: &mut dyn Write,
) -> CliResult<RateOutcome> {
    let c = &cfg.config;
    let route = c.routes[0];
    let pairs: Vec<(usize, Estimate)> = match from_csv {
        Some(path) => read_records(path)?
            .into_iter()
            .filter(|r| r.experiment_id == c.experiment_id && r.route == route.as_str())
            .map(|r| {
                (
                    r.n,
                    Estimate {
                        mean: r.deficit_mean,
                        stderr: r.deficit_stderr,
                        reps: r.reps,
                        n: r.n,
                        route,
                    },
                )
            })
            .collect(),
        None => {
            if c.n_grid.len() < 4 {
                return Err(CliError::validation("n_grid", "rate fits need at least 4 values"));
            }
            let (records, cells) = run_cells(cfg, master_seed, &[route], store, out)?;
            print_table(w, &records)?;
            cells.into_iter().map(|(n, row)| (n, row[0])).collect()
        }
    };
    if pairs.len() < 4 {
        return Err(CliError::validation(
            "n_grid",
            format!("rate fits need at least 4 values, found {}", pairs.len()),
        ));
    }
    let fit = fit_rate(&pairs)?;
    let band = rate_band(&cfg.body, c.j);
    writeln!(
        w,
        "exponent {:.4} ± {:.4}  (95% CI [{:.4}, {:.4}], chi2/dof {:.2})",
        fit.exponent, fit.exponent_stderr, fit.exponent_ci.0, fit.exponent_ci.1, fit.chi2_per_dof
    )
    .map_err(io)?;
    let passed = band.map(|(lo, hi)| (lo..=hi).contains(&fit.exponent));
    match (band, passed) {
        (Some((lo, hi)), Some(ok)) => {
            writeln!(w, "band [{lo:.2}, {hi:.2}]: {}", if ok { "PASS" } else { "FAIL" }).map_err(io)?
        }
        _ => writeln!(w, "no admissible band for this body and order").map_err(io)?,
    }
    let outcome = RateOutcome { fit, band, passed };
    if outcome.passed == Some(false) {
        return Err(CliError::Band(format!("exponent {:.4} outside its band", outcome.fit.exponent)));
    }
    Ok(outcome)
}

pub fn predict(
    cfg: &ValidatedConfig,
    n: usize,
    store: &CalibrationStore,
    simulated: Option<&Path>,
    w: &mut dyn Write,
) -> CliResult<Prediction> {
    let c = &cfg.config;
    let pred = predicted_deficit(&cfg.body, &cfg.density, c.j, n, &store.constant_table())?;
    writeln!(w, "c^({},{}) = {:.6}", c.j, cfg.body.dim(), pred.constant).map_err(io)?;
    writeln!(w, "I_{} = {:.6} ± {:.2e}", c.j, pred.integral.value, pred.integral.stderr).map_err(io)?;
    writeln!(w, "predicted deficit at n={n}: {:.6e}", pred.deficit).map_err(io)?;
    if let Some(path) = simulated {
        for r in read_records(path)?
            .iter()
            .filter(|r| r.experiment_id == c.experiment_id && r.n == n && r.j == c.j)
        {
            writeln!(
                w,
                "simulated ({}) {:.6e} ± {:.2e}, ratio simulated/predicted {:.4}",
                r.route,
                r.deficit_mean,
                r.deficit_stderr,
                r.deficit_mean / pred.deficit
            )
            .map_err(io)?;
        }
    }
    Ok(pred)
}

pub fn capcheck(
    body: &Body,
    density: &Density,
    direction: &[f64],
    t_grid: &[f64],
    w: &mut dyn Write,
) -> CliResult<CapProfileResult> {
    if direction.len() != body.dim() {
        return Err(CliError::validation(
            "direction",
            format!("expected {} coordinates, got {}", body.dim(), direction.len()),
        ));
    }
    let x = body.boundary_point_towards(&VecD::from_column_slice(direction))?;
    let profile = cap_profile(body, density, &x, t_grid)?;
    writeln!(w, "x = {:?}", x.x.as_slice()).map_err(io)?;
    let half = (body.dim() as f64 - 1.0) / 2.0;
    for (t, s) in &profile.grid {
        writeln!(w, "t={t:<10.3e} s(t)={s:<14.6e} s/t^(d-1)/2={:.6}", s / t.powf(half)).map_err(io)?;
    }
    writeln!(w, "fitted limit {:.6}, closed form {:.6}, G(x) = {:.6}", profile.fitted_limit, profile.closed_form, profile.g_x)
        .map_err(io)?;
    if profile.diverging {
        writeln!(w, "rescaled cap mass diverges: Gauss curvature vanishes at x").map_err(io)?;
    }
    Ok(profile)
}

pub fn selftest(master_seed: u64, w: &mut dyn Write) -> CliResult<Vec<CheckResult>> {
    let results = run_selftest(master_seed);
    for r in &results {
        writeln!(w, "{r}").map_err(io)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Band(format!("{failed} self-test checks failed")));
    }
    Ok(results)
}
