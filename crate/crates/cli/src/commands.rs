//! The four subcommands. Each prints a report, writes its files and returns a
//! [`Status`]; configuration and precondition failures surface as [`CliError`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gauge_dirac::dirac::Spinor;
use gauge_dirac::evolve::least_squares;
use gauge_dirac::grid::{Grid, ScalarField};
use gauge_dirac::oracle::{self, dense_extraction, dense_h0, dense_propagator, gauge_commutation_residual};
use gauge_dirac::pulse::MISMATCH_TOLERANCE;
use gauge_dirac::{
    chi_from_current, charge_density, convergence_study, current_density, divergence_power, energy,
    f_for_target, free_propagate, h0_apply, make_plane_wave, run_extraction, run_with_chi, Branch, ChiProfile,
    Complex, DiracParams, ExtractionResult, IntegratorConfig, RampSpec, SpinorField, SplitStepper,
};

use crate::config::{Drive, ExperimentConfig, VERIFY_POINTS};
use crate::output::{self, num, ScanRow};
use crate::svg::{Plot, Scale, Series};
use crate::{CliError, Status};

/// Tolerance on the scan slope against `-∫ (∂x J)² dx`.
pub const SLOPE_TOLERANCE: f64 = 1e-8;
/// Accepted window for the fitted integrator order.
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);

struct Setup {
    grid: Arc<Grid<f64>>,
    params: DiracParams,
    psi: SpinorField,
    t_a: f64,
    t_b: f64,
}

impl Setup {
    fn new(config: &ExperimentConfig, n_default: usize) -> Result<Self, CliError> {
        let grid = config.grid_with_default(n_default)?;
        let params = config.params()?;
        let psi = config.initial_state(&grid)?;
        Ok(Self { grid, params, psi, t_a: config.pulse.t_a, t_b: config.pulse.t_b })
    }

    fn psi_at_ta(&self) -> SpinorField {
        free_propagate(&self.psi, self.t_a, &self.params)
    }

    /// Pulse strength for commands that need a single one.
    fn strength(&self, drive: &Drive, command: &str) -> Result<f64, CliError> {
        match drive {
            Drive::Strength(f) => Ok(*f),
            Drive::Target(d) => Ok(f_for_target(&self.psi_at_ta(), *d, &self.params)?),
            Drive::Scan(_) => Err(CliError::Config(format!("{command} takes pulse.f or pulse.delta_target, not f_list"))),
        }
    }

    fn describe(&self, config: &ExperimentConfig) -> String {
        let pk = &config.packet;
        let packet = match pk.kind {
            crate::config::PacketKind::Gaussian => {
                format!("gaussian k0 = {}, sigma_x = {}, x0 = {}, branch {:?}", pk.k0, pk.sigma_x, config.x0(), pk.branch)
            }
            crate::config::PacketKind::Plane => {
                let mode = config.plane_mode();
                let k = 2.0 * PI * mode as f64 / self.grid.length();
                format!("plane wave mode {mode} (k = {k:.6}), branch {:?}", pk.branch)
            }
        };
        format!(
            "grid N = {}, L = {}; mass {}, charge {}; {packet}; t_a = {}, t_b = {}\n",
            self.grid.n_points(),
            self.grid.length(),
            self.params.mass(),
            self.params.charge(),
            self.t_a,
            self.t_b
        )
    }
}

fn emit(report: &str, path: &Path) -> Result<(), CliError> {
    print!("{report}");
    output::write_text(path, report)
}

fn result_section(r: &ExtractionResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "energy before        {}", num(r.energy_before));
    let _ = writeln!(s, "energy after         {}", num(r.energy_after));
    let _ = writeln!(s, "  positive branch    {}", num(r.report_after.positive_branch));
    let _ = writeln!(s, "  negative branch    {}", num(r.report_after.negative_branch));
    let _ = writeln!(s, "delta measured       {}", num(r.delta_measured));
    let _ = writeln!(s, "delta gradient form  {}", num(r.delta_gradient));
    let _ = writeln!(s, "delta divergence     {}", num(r.delta_divergence));
    if let Some(q) = r.delta_quadratic {
        let _ = writeln!(s, "delta quadratic      {}", num(q));
    }
    let _ = writeln!(s, "relative error       {:.3e}", r.relative_error_divergence());
    let _ = writeln!(s, "norm drift           {:.3e}", r.norm_drift);
    let _ = writeln!(s, "tail fraction after  {:.3e}", r.tail_fraction_after);
    if r.warnings.is_empty() {
        let _ = writeln!(s, "warnings             none");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn extract(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Status, CliError> {
    let drive = config.drive()?;
    let setup = Setup::new(config, crate::config::DEFAULT_POINTS)?;
    let f = setup.strength(&drive, "extract")?;
    let r = run_extraction(&setup.psi, f, setup.t_a, setup.t_b, &setup.params)?;

    let mut report = String::from("extract\n");
    report.push_str(&setup.describe(config));
    if let Drive::Target(d) = drive {
        let _ = writeln!(report, "delta target         {}", num(d));
    }
    let _ = writeln!(report, "f                    {}", num(f));
    report.push_str(&result_section(&r));

    if config.integrator.enabled {
        let chi = chi_from_current(&setup.psi_at_ta(), f, setup.t_a, &setup.params)?;
        let steps = IntegratorConfig::new(config.integrator.n_steps)?;
        let integrated = SplitStepper::new(&chi, RampSpec::new(setup.t_a)?, setup.params).run(&setup.psi, steps)?;
        let closed = setup.psi_at_ta().with_gauge_phase(chi.values(), setup.params.charge())?;
        let _ = writeln!(
            report,
            "integrator ({} steps) vs closed form: L2 distance {:.3e}",
            steps.n_steps(),
            integrated.distance(&closed)?
        );
    }

    let csv_path = ExperimentConfig::resolve(&config.outputs.csv_path, "extract.csv", out_dir);
    output::write_scan_csv(&csv_path, &[ScanRow::from_result(f, &r)])?;
    let report_path = ExperimentConfig::resolve(&config.outputs.report_path, "extract_report.txt", out_dir);
    let _ = writeln!(report, "wrote {} and {}", csv_path.display(), report_path.display());
    emit(&report, &report_path)?;
    Ok(if r.has_mismatch() { Status::Mismatch } else { Status::Ok })
}

pub fn scan_f(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Status, CliError> {
    let Drive::Scan(fs) = config.drive()? else {
        return Err(CliError::Config("scan-f needs pulse.f_list".into()));
    };
    let setup = Setup::new(config, crate::config::DEFAULT_POINTS)?;
    let results = fs
        .iter()
        .map(|&f| run_extraction(&setup.psi, f, setup.t_a, setup.t_b, &setup.params))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<ScanRow> = fs.iter().zip(&results).map(|(&f, r)| ScanRow::from_result(f, r)).collect();

    let expected = -divergence_power(&setup.psi_at_ta(), &setup.params);
    let mut report = String::from("scan-f\n");
    report.push_str(&setup.describe(config));
    let _ = writeln!(report, "{:>14} {:>24} {:>24} {:>10}", "f", "delta measured", "delta quadratic", "rel err");
    for row in &rows {
        let _ = writeln!(report, "{:>14.6e} {:>24} {:>24} {:>10.2e}", row.f, num(row.delta_measured), num(row.delta_quadratic), row.rel_err);
        for w in &row.warnings {
            let _ = writeln!(report, "  warning: {w}");
        }
    }

    let mut ok = !results.iter().any(|r| r.has_mismatch());
    if rows.len() >= 2 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.f, r.delta_measured)).collect();
        let (slope, intercept) = least_squares(&pts);
        let slope_ok = (slope - expected).abs() <= SLOPE_TOLERANCE * expected.abs() + 1e-12;
        let decreasing = rows.windows(2).all(|w| w[1].delta_measured < w[0].delta_measured);
        let _ = writeln!(report, "least-squares slope  {}", num(slope));
        let _ = writeln!(report, "-integral (div J)^2  {}", num(expected));
        let _ = writeln!(report, "slope check          {}", if slope_ok { "pass" } else { "FAIL" });
        let _ = writeln!(report, "intercept            {:.3e}", intercept);
        let _ = writeln!(report, "strictly decreasing  {decreasing}");
        ok &= slope_ok;
    }

    let csv_path = ExperimentConfig::resolve(&config.outputs.csv_path, "scan.csv", out_dir);
    output::write_scan_csv(&csv_path, &rows)?;
    let svg_path = ExperimentConfig::resolve(&config.outputs.svg_path, "scan.svg", out_dir);
    let plot = Plot {
        title: "energy change against pulse strength",
        x_label: "f",
        y_label: "delta energy",
        scale: Scale::Linear,
        series: vec![
            Series { label: "measured", points: rows.iter().map(|r| (r.f, r.delta_measured)).collect(), dashed: false },
            Series {
                label: "-f * integral (div J)^2",
                points: rows.iter().map(|r| (r.f, r.delta_quadratic)).collect(),
                dashed: true,
            },
        ],
    };
    output::write_text(&svg_path, &plot.render())?;
    let report_path = ExperimentConfig::resolve(&config.outputs.report_path, "scan_report.txt", out_dir);
    let _ = writeln!(report, "wrote {}, {} and {}", csv_path.display(), svg_path.display(), report_path.display());
    emit(&report, &report_path)?;
    Ok(if ok { Status::Ok } else { Status::Mismatch })
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    /// Pass when `value >= tolerance` instead of below it.
    at_least: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, at_least: false }
    }

    fn passes(&self) -> bool {
        if self.at_least {
            self.value >= self.tolerance
        } else {
            self.value < self.tolerance
        }
    }
}

fn max_diff(a: &ScalarField<f64, f64>, b: &ScalarField<f64, f64>) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn gaussian(x: f64, centre: f64, width: f64) -> f64 {
    (-(x - centre).powi(2) / (2.0 * width * width)).exp()
}

/// Narrow Gaussians on a 2π box, under-resolved at 64 points and resolved at 128.
fn refinement_residual(n: usize, params: &DiracParams) -> Result<f64, CliError> {
    let g = Grid::new(n, 2.0 * PI)?;
    let psi = Spinor::from_fn(&g, |x: f64| {
        [Complex::new(gaussian(x, PI, 0.2), 0.0), Complex::new(0.0, 0.5 * gaussian(x, PI + 0.3, 0.2))]
    })?;
    let chi = ChiProfile::from_field(ScalarField::from_fn(&g, |x: f64| gaussian(x, PI - 0.2, 0.4))?, 1.0)?;
    Ok(gauge_commutation_residual(&chi, &psi, params)?)
}

pub fn verify(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Status, CliError> {
    let n = config.grid.n_points.unwrap_or(VERIFY_POINTS);
    if n > oracle::MAX_DENSE_POINTS {
        return Err(CliError::Config(format!(
            "verify runs dense checks and needs n_points <= {}, got {n}",
            oracle::MAX_DENSE_POINTS
        )));
    }
    let drive = config.drive()?;
    let setup = Setup::new(config, VERIFY_POINTS)?;
    let f = match &drive {
        Drive::Scan(list) => *list.last().expect("validated non-empty"),
        other => setup.strength(other, "verify")?,
    };
    let (g, p, psi) = (&setup.grid, &setup.params, &setup.psi);
    let psi_ta = setup.psi_at_ta();
    let scale = psi.norm();
    let mut checks = Vec::new();

    let spectrum = g.to_momentum(psi.upper())?;
    let back = g.to_position(&spectrum)?;
    let roundtrip = back.iter().zip(psi.upper()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    let parseval = (spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>()
        - psi.upper().iter().map(|c| c.norm_sqr()).sum::<f64>())
    .abs();
    checks.push(Check::below("transform round trip", roundtrip, 1e-13));
    checks.push(Check::below("transform Parseval", parseval, 1e-13));

    let h = dense_h0(g, p)?;
    checks.push(Check::below("dense H0 Hermiticity", h.hermiticity_residual(), 1e-12));
    let hermitian = (psi.inner(&h0_apply(&psi_ta, p))? - h0_apply(psi, p).inner(&psi_ta)?).norm();
    checks.push(Check::below("spectral H0 Hermiticity", hermitian, 1e-12));
    checks.push(Check::below("dense vs spectral H0 action", h.apply(psi)?.max_abs_diff(&h0_apply(psi, p))?, 1e-10));
    let propagated = dense_propagator(&h, setup.t_b).apply(psi)?;
    checks.push(Check::below(
        "dense vs spectral propagator",
        propagated.distance(&free_propagate(psi, setup.t_b, p))? / scale,
        1e-10,
    ));

    let k1 = g.momenta()[1];
    let single_chi = ChiProfile::from_field(ScalarField::from_fn(g, |x: f64| 0.1 * (k1 * x).cos())?, setup.t_a)?;
    let single_psi = make_plane_wave(g, 1, Branch::Positive, p)?;
    checks.push(Check::below(
        "commutation identity, single mode",
        gauge_commutation_residual(&single_chi, &single_psi, p)?,
        1e-10,
    ));
    let ratio = refinement_residual(64, p)? / refinement_residual(128, p)?;
    checks.push(Check { name: "commutation identity, refinement 64 -> 128", value: ratio, tolerance: 1e3, at_least: true });

    let chi = chi_from_current(&psi_ta, f, setup.t_a, p)?;
    checks.push(Check::below("energy chain", oracle::energy_chain_residual(psi, &chi, setup.t_b, p)?, 1e-10));

    let spectral = run_extraction(psi, f, setup.t_a, setup.t_b, p)?;
    let dense = dense_extraction(psi, f, setup.t_a, setup.t_b, p)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    checks.push(Check::below(
        "dense vs spectral energy change",
        rel(dense.delta_measured, spectral.delta_measured).max(rel(dense.energy_after, spectral.energy_after)),
        1e-10,
    ));
    checks.push(Check::below(
        "dense vs spectral energy",
        rel(oracle::dense_energy(&h, psi)?, energy(psi, p)?),
        1e-10,
    ));
    checks.push(Check::below(
        "measured vs divergence prediction",
        spectral.relative_error_divergence(),
        MISMATCH_TOLERANCE,
    ));

    let (rho0, j0) = (charge_density(&psi_ta, p), current_density(&psi_ta, p));
    let phased = psi_ta.with_gauge_phase(chi.values(), p.charge())?;
    let gauge = max_diff(&charge_density(&phased, p), &rho0).max(max_diff(&current_density(&phased, p), &j0));
    checks.push(Check::below("gauge invariance of densities", gauge, 1e-13));

    let later = run_with_chi(psi, &chi, 2.0 * setup.t_b + 1.0, p)?;
    checks.push(Check::below(
        "post-pulse energy conservation",
        rel(later.energy_after, spectral.energy_after),
        1e-12,
    ));
    checks.push(Check::below("norm drift", spectral.norm_drift, 1e-12));

    let mut report = String::from("verify\n");
    report.push_str(&setup.describe(config));
    let _ = writeln!(report, "f = {}", num(f));
    let mut failures = Vec::new();
    for c in &checks {
        let tag = if c.passes() { "PASS" } else { "FAIL" };
        let op = if c.at_least { ">=" } else { "<" };
        let _ = writeln!(report, "[{tag}] {:<44} {:>11.3e} (need {op} {:.0e})", c.name, c.value, c.tolerance);
        if !c.passes() {
            failures.push(c.name);
        }
    }
    if failures.is_empty() {
        let _ = writeln!(report, "all {} checks passed", checks.len());
    } else {
        let _ = writeln!(report, "{} failed: {}", failures.len(), failures.join(", "));
    }
    let report_path = ExperimentConfig::resolve(&config.outputs.report_path, "verify_report.txt", out_dir);
    emit(&report, &report_path)?;
    Ok(if failures.is_empty() { Status::Ok } else { Status::Failed })
}

pub fn convergence(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Status, CliError> {
    if !config.integrator.enabled {
        return Err(CliError::Config("convergence needs integrator.enabled = true".into()));
    }
    let drive = config.drive()?;
    let setup = Setup::new(config, crate::config::DEFAULT_POINTS)?;
    let f = setup.strength(&drive, "convergence")?;
    let chi = chi_from_current(&setup.psi_at_ta(), f, setup.t_a, &setup.params)?;
    let counts = config.step_counts();
    let study = convergence_study(&setup.psi, &chi, &RampSpec::new(setup.t_a)?, &counts, &setup.params)?;

    let mut report = String::from("convergence\n");
    report.push_str(&setup.describe(config));
    let _ = writeln!(report, "f = {}", num(f));
    let _ = writeln!(report, "{:>8} {:>14} {:>14} {:>8}", "steps", "dt", "L2 error", "order");
    for r in &study.rows {
        let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(report, "{:>8} {:>14.6e} {:>14.6e} {:>8}", r.n_steps, r.dt, r.l2_error, order);
    }

    let (lo, hi) = ORDER_WINDOW;
    let status = if study.degenerate {
        let _ = writeln!(report, "degenerate: all errors at roundoff (chi is zero or negligible); no order to fit");
        Status::Ok
    } else {
        let order = study.fitted_order.unwrap_or(f64::NAN);
        let _ = writeln!(report, "fitted order {order:.4} (accepted range [{lo}, {hi}])");
        if !study.monotone {
            let _ = writeln!(report, "errors are not monotone in dt: not in the asymptotic regime, use more steps");
            Status::Mismatch
        } else if (lo..=hi).contains(&order) {
            Status::Ok
        } else {
            let _ = writeln!(report, "order outside the accepted range: use more steps to reach the asymptotic regime");
            Status::Mismatch
        }
    };

    let rows: Vec<(usize, f64, f64, Option<f64>)> =
        study.rows.iter().map(|r| (r.n_steps, r.dt, r.l2_error, r.order)).collect();
    let csv_path = ExperimentConfig::resolve(&config.outputs.csv_path, "convergence.csv", out_dir);
    output::write_convergence_csv(&csv_path, &rows)?;

    let measured: Vec<(f64, f64)> = study.rows.iter().map(|r| (r.dt, r.l2_error)).collect();
    let mut series = vec![Series { label: "L2 error", points: measured, dashed: false }];
    if let Some(last) = study.rows.last().filter(|r| r.l2_error > 0.0) {
        let reference = study.rows.iter().map(|r| (r.dt, last.l2_error * (r.dt / last.dt).powi(2))).collect();
        series.push(Series { label: "slope 2", points: reference, dashed: true });
    }
    let plot = Plot { title: "integrator error against step size", x_label: "dt", y_label: "L2 error", scale: Scale::LogLog, series };
    let svg_path = ExperimentConfig::resolve(&config.outputs.svg_path, "convergence.svg", out_dir);
    output::write_text(&svg_path, &plot.render())?;

    let report_path: PathBuf = ExperimentConfig::resolve(&config.outputs.report_path, "convergence_report.txt", out_dir);
    let _ = writeln!(report, "wrote {}, {} and {}", csv_path.display(), svg_path.display(), report_path.display());
    emit(&report, &report_path)?;
    Ok(status)
}
