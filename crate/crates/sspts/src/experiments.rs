//! Measurement harnesses: total-variation monitors, observed-SSP-coefficient
//! sweeps, positivity sweeps, and temporal convergence studies.
//!
//! A sweep integrates a problem over a grid of step-size ratios
//! `lambda = dt / dt_FE` and reports the largest ratio for which the
//! monitored functional stays within threshold over every step (and every
//! stage). Grid points are independent integrations and run in parallel;
//! the report is reduced in `lambda` order.

use crate::integrator::{self, Observer, RhsPair};
use crate::spatial::{MonitorKind, ProblemSpec};
use crate::tableau::Tableau;
use rayon::prelude::*;
use std::io::Write;

/// Maximal rise in total variation that still counts as preserving the TVD
/// property.
pub const TV_RISE_THRESHOLD: f64 = 1e-10;

/// Total variation `sum_j |u_{j+1} - u_j|`, with the wrap-around jump when
/// `periodic` is set.
pub fn total_variation(u: &[f64], periodic: bool) -> f64 {
    let n = u.len();
    let mut tv = 0.0;
    for j in 0..n - 1 {
        tv += (u[j + 1] - u[j]).abs();
    }
    if periodic && n > 1 {
        tv += (u[0] - u[n - 1]).abs();
    }
    tv
}

/// Total variation of one component of an interleaved multi-component state.
pub fn total_variation_component(u: &[f64], n_comp: usize, comp: usize, periodic: bool) -> f64 {
    let vals: Vec<f64> = u.iter().skip(comp).step_by(n_comp).cloned().collect();
    total_variation(&vals, periodic)
}

/// Observer tracking TV rises per stage and per step.
struct TvMonitor {
    periodic: bool,
    n_comp: usize,
    prev_stage_tv: f64,
    step_start_tv: f64,
    max_stage_rise: f64,
    max_step_rise: f64,
}

impl TvMonitor {
    fn new(periodic: bool, n_comp: usize, u0: &[f64]) -> Self {
        let tv0 = total_variation_component(u0, n_comp, 0, periodic);
        TvMonitor {
            periodic,
            n_comp,
            prev_stage_tv: tv0,
            step_start_tv: tv0,
            max_stage_rise: f64::NEG_INFINITY,
            max_step_rise: f64::NEG_INFINITY,
        }
    }
}

impl Observer for TvMonitor {
    fn on_stage(&mut self, _step: usize, stage: usize, y: &[f64]) {
        let tv = total_variation_component(y, self.n_comp, 0, self.periodic);
        if stage == 0 {
            self.step_start_tv = tv;
        } else {
            self.max_stage_rise = self.max_stage_rise.max(tv - self.prev_stage_tv);
        }
        self.prev_stage_tv = tv;
    }

    fn on_step(&mut self, _step: usize, _t: f64, u: &[f64]) {
        let tv = total_variation_component(u, self.n_comp, 0, self.periodic);
        self.max_step_rise = self.max_step_rise.max(tv - self.step_start_tv);
    }
}

/// Observer tracking the minimum of component 0 (the water height) over all
/// stages and steps.
struct MinComponent {
    n_comp: usize,
    min: f64,
}

impl Observer for MinComponent {
    fn on_stage(&mut self, _step: usize, _stage: usize, y: &[f64]) {
        for v in y.iter().step_by(self.n_comp) {
            self.min = self.min.min(*v);
        }
    }
}

/// One sweep row plus the detected observed coefficient.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub lambdas: Vec<f64>,
    pub per_step_rise: Vec<f64>,
    pub per_stage_rise: Vec<f64>,
    pub violated: Vec<bool>,
    pub threshold: f64,
    /// Last grid point before the first threshold crossing (0 when even the
    /// first point is violated).
    pub lambda_obs: f64,
    /// `lambda_obs` in units of `dt_FE`, i.e. the observed SSP coefficient.
    pub cts_obs: f64,
}

impl SweepReport {
    fn from_rows(
        lambdas: Vec<f64>,
        rows: Vec<(f64, f64, bool)>,
        threshold: f64,
    ) -> SweepReport {
        let per_step_rise: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let per_stage_rise: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let violated: Vec<bool> = rows.iter().map(|r| r.2).collect();
        let mut lambda_obs = 0.0;
        for (i, &v) in violated.iter().enumerate() {
            if v {
                break;
            }
            lambda_obs = lambdas[i];
        }
        SweepReport {
            lambdas,
            per_step_rise,
            per_stage_rise,
            violated,
            threshold,
            lambda_obs,
            cts_obs: lambda_obs,
        }
    }
}

fn run_one_lambda(
    t: &Tableau,
    problem: &ProblemSpec,
    n_steps: usize,
    lambda: f64,
    threshold: f64,
) -> (f64, f64, bool) {
    let rhs: &dyn RhsPair = problem.rhs.as_ref();
    match problem.monitor {
        MonitorKind::TotalVariation => {
            let mut mon = TvMonitor::new(true, problem.n_comp, &problem.initial);
            let result = match &problem.wavespeed {
                None => integrator::integrate(
                    t,
                    rhs,
                    &problem.initial,
                    lambda * problem.dt_fe,
                    n_steps,
                    &mut mon,
                ),
                Some(speed) => integrator::integrate_with_dt(
                    t,
                    rhs,
                    &problem.initial,
                    |_, u| lambda * problem.grid.dx / speed(u),
                    n_steps,
                    &mut mon,
                ),
            };
            let step_rise = mon.max_step_rise.max(0.0);
            let stage_rise = mon.max_stage_rise.max(0.0);
            let violated = result.is_err() || step_rise > threshold;
            (step_rise, stage_rise, violated)
        }
        MonitorKind::Positivity => {
            let mut mon = MinComponent {
                n_comp: problem.n_comp,
                min: f64::INFINITY,
            };
            let result = match &problem.wavespeed {
                None => integrator::integrate(
                    t,
                    rhs,
                    &problem.initial,
                    lambda * problem.dt_fe,
                    n_steps,
                    &mut mon,
                ),
                Some(speed) => integrator::integrate_with_dt(
                    t,
                    rhs,
                    &problem.initial,
                    |_, u| lambda * problem.grid.dx / speed(u),
                    n_steps,
                    &mut mon,
                ),
            };
            let deficit = (-mon.min).max(0.0);
            let violated = result.is_err() || mon.min < 0.0;
            (deficit, deficit, violated)
        }
    }
}

/// Sweeps the TV rise of `t` on `problem` over `lambda_grid` and detects the
/// observed SSP coefficient at the given threshold. Non-finite states mark a
/// grid point as violated.
pub fn observed_cts(
    t: &Tableau,
    problem: &ProblemSpec,
    n_steps: usize,
    lambda_grid: &[f64],
    threshold: f64,
) -> SweepReport {
    let rows: Vec<(f64, f64, bool)> = lambda_grid
        .par_iter()
        .map(|&lambda| run_one_lambda(t, problem, n_steps, lambda, threshold))
        .collect();
    SweepReport::from_rows(lambda_grid.to_vec(), rows, threshold)
}

/// Positivity variant of [`observed_cts`]: a grid point is violated when any
/// height entry drops below zero at any stage or step (or goes non-finite).
pub fn positivity_sweep(
    t: &Tableau,
    problem: &ProblemSpec,
    n_steps: usize,
    lambda_grid: &[f64],
) -> SweepReport {
    assert!(
        problem.monitor == MonitorKind::Positivity,
        "positivity sweep needs a positivity-monitored problem"
    );
    let rows: Vec<(f64, f64, bool)> = lambda_grid
        .par_iter()
        .map(|&lambda| run_one_lambda(t, problem, n_steps, lambda, 0.0))
        .collect();
    SweepReport::from_rows(lambda_grid.to_vec(), rows, 0.0)
}

/// Grid with a fine window around a predicted threshold and a coarse ramp
/// elsewhere: coarse steps of 0.05 from `lo`, fine steps of `fine_step`
/// on `[hint - width, hint + width]`, extending coarsely to `hi`.
pub fn lambda_grid(hint: f64, width: f64, fine_step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut x = lo;
    while x < hi {
        if (x - hint).abs() <= width {
            grid.push(x);
            x += fine_step;
        } else {
            grid.push(x);
            x += 0.05;
        }
    }
    grid.push(hi);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

/// Writes a sweep as CSV (`lambda,per_step_rise,per_stage_rise,violated`)
/// followed by a summary comment line.
pub fn write_sweep_csv(
    report: &SweepReport,
    cts_pred: Option<f64>,
    mut w: impl Write,
) -> std::io::Result<()> {
    writeln!(w, "lambda,per_step_rise,per_stage_rise,violated")?;
    for i in 0..report.lambdas.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{}",
            report.lambdas[i],
            report.per_step_rise[i],
            report.per_stage_rise[i],
            report.violated[i] as u8
        )?;
    }
    match cts_pred {
        Some(p) => writeln!(
            w,
            "# lambda_obs={:.6} cts_obs={:.6} cts_pred={:.6}",
            report.lambda_obs, report.cts_obs, p
        ),
        None => writeln!(
            w,
            "# lambda_obs={:.6} cts_obs={:.6}",
            report.lambda_obs, report.cts_obs
        ),
    }
}

/// Result of a temporal convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(dt)`.
    pub observed_order: f64,
}

/// Integrates to `t_end` with each step size and fits the error slope
/// against the supplied reference final state (max norm).
pub fn convergence_study(
    t: &Tableau,
    rhs: &dyn RhsPair,
    u0: &[f64],
    t_end: f64,
    dts: &[f64],
    reference: &[f64],
) -> ConvergenceStudy {
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let n = (t_end / dt).round().max(1.0) as usize;
        let dt_eff = t_end / n as f64;
        let traj = integrator::integrate(t, rhs, u0, dt_eff, n, &mut integrator::NoObserver)
            .expect("convergence problems stay finite");
        let last = traj.states.last().expect("at least the initial state");
        let err = last
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        errors.push(err.max(1e-300));
    }
    ConvergenceStudy {
        dts: dts.to_vec(),
        errors: errors.clone(),
        observed_order: least_squares_slope(dts, &errors),
    }
}

fn least_squares_slope(dts: &[f64], errors: &[f64]) -> f64 {
    let n = dts.len() as f64;
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods;
    use crate::spatial;

    #[test]
    fn total_variation_basics() {
        let grid = spatial::Grid1D::new(-1.0, 1.0, 601);
        let sq = spatial::square_wave(&grid);
        assert_eq!(total_variation(&sq, true), 2.0);
        assert_eq!(total_variation(&[0.4; 17], true), 0.0);
        // dam break height: single jump of 10; wrap adds the return jump
        let db = spatial::dam_break(&spatial::Grid1D::new(0.0, 1.0, 201));
        assert_eq!(total_variation_component(&db, 2, 0, false), 10.0);
        assert_eq!(total_variation_component(&db, 2, 0, true), 20.0);
    }

    #[test]
    fn forward_euler_advection_tvd_boundary() {
        // one FE step at lambda = 1 is a pure shift: zero TV rise; at
        // lambda = 1.01 the overshoot is immediate
        let problem = spatial::advection_upwind_problem(201);
        let fe = methods::lookup("FE").unwrap().tableau;
        let report = observed_cts(&fe, &problem, 5, &[0.9, 1.0, 1.01, 1.1], 1e-10);
        assert_eq!(report.violated, vec![false, false, true, true]);
        assert!((report.lambda_obs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_step_tvd_at_unit_ratio() {
        let problem = spatial::advection_upwind_problem(201);
        let ts = methods::lookup("TS").unwrap().tableau;
        let report = observed_cts(&ts, &problem, 5, &[1.0], 1e-10);
        assert!(report.per_step_rise[0] <= 1e-14);
        // Burgers upwind: FE and TS both hold the line at lambda = 1
        let problem = spatial::burgers_upwind_problem(201);
        let fe = methods::lookup("FE").unwrap().tableau;
        for t in [&fe, &ts] {
            let report = observed_cts(t, &problem, 5, &[1.0], 1e-10);
            assert!(report.per_step_rise[0] <= 1e-14);
        }
    }

    #[test]
    fn convergence_forward_euler_is_first_order() {
        let rhs = integrator::FnPair {
            dim: 1,
            f: |u: &[f64], out: &mut [f64]| out[0] = -u[0],
            ft: |u: &[f64], out: &mut [f64]| out[0] = u[0],
        };
        let fe = methods::forward_euler();
        let dts = [0.05, 0.025, 0.0125, 0.00625];
        let study = convergence_study(&fe, &rhs, &[1.0], 1.0, &dts, &[(-1.0f64).exp()]);
        assert!(
            (study.observed_order - 1.0).abs() < 0.1,
            "slope {}",
            study.observed_order
        );
    }

    #[test]
    fn lambda_grid_is_increasing() {
        let g = lambda_grid(1.9, 0.06, 0.001, 0.05, 2.4);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.iter().any(|&x| (x - 1.9).abs() < 1e-9));
    }
}
