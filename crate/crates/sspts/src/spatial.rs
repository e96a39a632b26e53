//! 1D spatial discretizations producing [`RhsPair`] operators.
//!
//! First-order upwind operators for linear advection and Burgers' equation,
//! the fifth-order WENO scheme of Jiang & Shu (J. Comput. Phys. 126, 1996)
//! with Lax-Friedrichs flux splitting, second-derivative builders of the
//! Cauchy-Kowalevskaya type `Ft(u) = -Dx~( f'(u) u_t )`, and the shallow
//! water system with a local Lax-Friedrichs flux.

use crate::integrator::RhsPair;

/// Uniform 1D grid of `m` points spanning the closed domain, `dx = L/(m-1)`,
/// with periodic index arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct Grid1D {
    pub m: usize,
    pub dx: f64,
    pub x_lo: f64,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, m: usize) -> Grid1D {
        assert!(m >= 2, "grid needs at least two points");
        Grid1D {
            m,
            dx: (x_hi - x_lo) / (m - 1) as f64,
            x_lo,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_lo + self.dx * j as f64
    }

    fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.m as isize) as usize
    }
}

// ---------------------------------------------------------------- fluxes

/// Scalar flux `f(u)` with derivative, for splitting and second-derivative
/// construction.
pub trait ScalarFlux: Sync {
    fn f(&self, u: f64) -> f64;
    fn df(&self, u: f64) -> f64;
}

/// `f(u) = a u` (advection speed `-a` in `U_t + f(U)_x = 0` form).
pub struct LinearFlux(pub f64);

impl ScalarFlux for LinearFlux {
    fn f(&self, u: f64) -> f64 {
        self.0 * u
    }
    fn df(&self, _u: f64) -> f64 {
        self.0
    }
}

/// Burgers flux `f(u) = u^2 / 2`.
pub struct BurgersFlux;

impl ScalarFlux for BurgersFlux {
    fn f(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn df(&self, u: f64) -> f64 {
        u
    }
}

/// Lax-Friedrichs flux splitting: `f±(u) = (f(u) ± m u) / 2` with
/// `m = max |f'(u)|` over the provided states, guaranteeing
/// `d f+ / du >= 0` and `d f- / du <= 0` across them. The two parts always
/// reconstruct `f` exactly.
pub fn lax_friedrichs_split(flux: &dyn ScalarFlux, states: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = states
        .iter()
        .map(|&u| flux.df(u).abs())
        .fold(0.0f64, f64::max);
    let plus: Vec<f64> = states.iter().map(|&u| 0.5 * (flux.f(u) + m * u)).collect();
    let minus: Vec<f64> = states.iter().map(|&u| 0.5 * (flux.f(u) - m * u)).collect();
    (plus, minus)
}

// ------------------------------------------------------------ first order

/// First-order upwind operators for `U_t = U_x` on a periodic grid:
/// `F(u)_j = (u_{j+1} - u_j)/dx` and the repeated difference
/// `Ft(u)_j = (u_{j+2} - 2 u_{j+1} + u_j)/dx^2`. Both building blocks are
/// TVD for `dt <= dx`, so `dt_FE = dx` and `K = 1`.
pub struct AdvectionUpwind {
    pub grid: Grid1D,
}

impl RhsPair for AdvectionUpwind {
    fn dim(&self) -> usize {
        self.grid.m
    }
    fn f(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        for j in 0..g.m {
            out[j] = (u[g.wrap(j as isize + 1)] - u[j]) / g.dx;
        }
    }
    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        for j in 0..g.m {
            out[j] = (u[g.wrap(j as isize + 2)] - 2.0 * u[g.wrap(j as isize + 1)] + u[j])
                / (g.dx * g.dx);
        }
    }
}

pub fn advection_upwind(grid: Grid1D) -> AdvectionUpwind {
    AdvectionUpwind { grid }
}

/// First-order upwind operators for Burgers' equation with `f'(u) >= 0`:
/// `F(u)_j = -(f_j - f_{j-1})/dx` and
/// `Ft(u)_j = -(f'(u_j) F(u)_j - f'(u_{j-1}) F(u)_{j-1})/dx`.
pub struct BurgersUpwind {
    pub grid: Grid1D,
}

impl BurgersUpwind {
    fn first(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        for j in 0..g.m {
            let fj = 0.5 * u[j] * u[j];
            let fjm = {
                let um = u[g.wrap(j as isize - 1)];
                0.5 * um * um
            };
            out[j] = -(fj - fjm) / g.dx;
        }
    }
}

impl RhsPair for BurgersUpwind {
    fn dim(&self) -> usize {
        self.grid.m
    }
    fn f(&self, u: &[f64], out: &mut [f64]) {
        self.first(u, out);
    }
    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let mut ut = vec![0.0; g.m];
        self.first(u, &mut ut);
        // g_j = f'(u_j) u_t,j, then the same backward difference again
        for j in 0..g.m {
            let gj = u[j] * ut[j];
            let jm = g.wrap(j as isize - 1);
            let gjm = u[jm] * ut[jm];
            out[j] = -(gj - gjm) / g.dx;
        }
    }
}

pub fn burgers_upwind(grid: Grid1D) -> BurgersUpwind {
    BurgersUpwind { grid }
}

// ----------------------------------------------------------------- WENO5

/// Reconstruction direction: `Plus` for fluxes with `f'(u) >= 0` (stencils
/// biased left of the face), `Minus` for `f'(u) <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WenoDirection {
    Plus,
    Minus,
}

impl WenoDirection {
    pub fn opposite(self) -> WenoDirection {
        match self {
            WenoDirection::Plus => WenoDirection::Minus,
            WenoDirection::Minus => WenoDirection::Plus,
        }
    }
}

/// Default regularization in the nonlinear weights (the standard Jiang-Shu
/// value; the scheme is insensitive to it on resolved data).
pub const WENO_EPSILON: f64 = 1e-6;

/// Nonlinear stencil weights `(w0, w1, w2)` at face `j+1/2`; linear weights
/// are `(1/10, 6/10, 3/10)`.
pub fn weno5_weights(f: &[f64], j: usize, dir: WenoDirection, eps: f64) -> [f64; 3] {
    let n = f.len() as isize;
    let at = |k: isize| f[(j as isize + k).rem_euclid(n) as usize];
    let (is0, is1, is2) = match dir {
        WenoDirection::Plus => (
            13.0 / 12.0 * (at(-2) - 2.0 * at(-1) + at(0)).powi(2)
                + 0.25 * (at(-2) - 4.0 * at(-1) + 3.0 * at(0)).powi(2),
            13.0 / 12.0 * (at(-1) - 2.0 * at(0) + at(1)).powi(2)
                + 0.25 * (at(-1) - at(1)).powi(2),
            13.0 / 12.0 * (at(0) - 2.0 * at(1) + at(2)).powi(2)
                + 0.25 * (3.0 * at(0) - 4.0 * at(1) + at(2)).powi(2),
        ),
        WenoDirection::Minus => (
            13.0 / 12.0 * (at(1) - 2.0 * at(2) + at(3)).powi(2)
                + 0.25 * (3.0 * at(1) - 4.0 * at(2) + at(3)).powi(2),
            13.0 / 12.0 * (at(0) - 2.0 * at(1) + at(2)).powi(2)
                + 0.25 * (at(0) - at(2)).powi(2),
            13.0 / 12.0 * (at(-1) - 2.0 * at(0) + at(1)).powi(2)
                + 0.25 * (at(-1) - 4.0 * at(0) + 3.0 * at(1)).powi(2),
        ),
    };
    let a0 = 0.1 / (eps + is0) / (eps + is0);
    let a1 = 0.6 / (eps + is1) / (eps + is1);
    let a2 = 0.3 / (eps + is2) / (eps + is2);
    let sum = a0 + a1 + a2;
    [a0 / sum, a1 / sum, a2 / sum]
}

fn weno5_face(f: &[f64], j: usize, dir: WenoDirection, eps: f64) -> f64 {
    let n = f.len() as isize;
    let at = |k: isize| f[(j as isize + k).rem_euclid(n) as usize];
    let [w0, w1, w2] = weno5_weights(f, j, dir, eps);
    match dir {
        WenoDirection::Plus => {
            w0 * (2.0 * at(-2) - 7.0 * at(-1) + 11.0 * at(0)) / 6.0
                + w1 * (-at(-1) + 5.0 * at(0) + 2.0 * at(1)) / 6.0
                + w2 * (2.0 * at(0) + 5.0 * at(1) - at(2)) / 6.0
        }
        WenoDirection::Minus => {
            w2 * (-at(-1) + 5.0 * at(0) + 2.0 * at(1)) / 6.0
                + w1 * (2.0 * at(0) + 5.0 * at(1) - at(2)) / 6.0
                + w0 * (11.0 * at(1) - 7.0 * at(2) + 2.0 * at(3)) / 6.0
        }
    }
}

/// Fifth-order WENO flux-difference operator on a periodic grid: applied to
/// point flux values `g`, returns `-(ghat_{j+1/2} - ghat_{j-1/2})/dx`.
#[derive(Debug, Clone, Copy)]
pub struct Weno5 {
    pub direction: WenoDirection,
    pub grid: Grid1D,
    pub eps: f64,
}

impl Weno5 {
    pub fn new(direction: WenoDirection, grid: Grid1D) -> Weno5 {
        Weno5 {
            direction,
            grid,
            eps: WENO_EPSILON,
        }
    }

    /// Applies the operator to point flux values.
    pub fn apply(&self, fvals: &[f64], out: &mut [f64]) {
        let m = self.grid.m;
        let mut faces = vec![0.0; m];
        for j in 0..m {
            faces[j] = weno5_face(fvals, j, self.direction, self.eps);
        }
        for j in 0..m {
            let jm = self.grid.wrap(j as isize - 1);
            out[j] = -(faces[j] - faces[jm]) / self.grid.dx;
        }
    }
}

/// Second-derivative operator choice for the Cauchy-Kowalevskaya builder:
/// reuse the wind-side operator of the flux (`Same`) or the mirrored one
/// (`Opposite`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopChoice {
    Same,
    Opposite,
}

/// WENO5 semi-discretization of a scalar conservation law whose flux wind
/// does not change sign over the data, so no splitting is needed:
/// `F(u) = WENO_dir(f(u))` and `Ft(u) = WENO_dir~( f'(u) * F(u) )`.
pub struct WenoScalar<Fl: ScalarFlux> {
    pub flux: Fl,
    pub op: Weno5,
    pub ft_op: Weno5,
}

impl<Fl: ScalarFlux> WenoScalar<Fl> {
    pub fn new(flux: Fl, direction: WenoDirection, grid: Grid1D, dop: DopChoice) -> Self {
        let ft_dir = match dop {
            DopChoice::Same => direction,
            DopChoice::Opposite => direction.opposite(),
        };
        WenoScalar {
            flux,
            op: Weno5::new(direction, grid),
            ft_op: Weno5::new(ft_dir, grid),
        }
    }
}

impl<Fl: ScalarFlux> RhsPair for WenoScalar<Fl> {
    fn dim(&self) -> usize {
        self.op.grid.m
    }
    fn f(&self, u: &[f64], out: &mut [f64]) {
        let fvals: Vec<f64> = u.iter().map(|&v| self.flux.f(v)).collect();
        self.op.apply(&fvals, out);
    }
    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        let m = self.op.grid.m;
        let fvals: Vec<f64> = u.iter().map(|&v| self.flux.f(v)).collect();
        let mut ut = vec![0.0; m];
        self.op.apply(&fvals, &mut ut);
        let gvals: Vec<f64> = (0..m).map(|j| self.flux.df(u[j]) * ut[j]).collect();
        self.ft_op.apply(&gvals, out);
    }
}

// --------------------------------------------------------- shallow water

/// Shallow water system `(h, hv)` with a local Lax-Friedrichs flux, copy
/// (zeroth-order extrapolation) ghost cells on both ends, and the centered
/// Jacobian-based second derivative. State layout is interleaved:
/// `[h_0, hv_0, h_1, hv_1, ...]`.
pub struct ShallowWater {
    pub grid: Grid1D,
    pub gravity: f64,
}

/// Height below which a cell is treated as dry (velocity zero).
const DRY: f64 = 1e-12;

impl ShallowWater {
    pub fn new(grid: Grid1D, gravity: f64) -> ShallowWater {
        ShallowWater { grid, gravity }
    }

    fn velocity(&self, h: f64, hv: f64) -> f64 {
        if h > DRY {
            hv / h
        } else {
            0.0
        }
    }

    /// Maximal wave speed `max_j |v_j| + sqrt(g h_j)` over the state.
    pub fn wavespeed(&self, u: &[f64]) -> f64 {
        let mut a = 0.0f64;
        for j in 0..self.grid.m {
            let h = u[2 * j].max(0.0);
            let v = self.velocity(u[2 * j], u[2 * j + 1]);
            a = a.max(v.abs() + (self.gravity * h).sqrt());
        }
        a
    }

    fn flux(&self, h: f64, hv: f64) -> (f64, f64) {
        let v = self.velocity(h, hv);
        (hv, hv * v + 0.5 * self.gravity * h * h)
    }

    /// Flux Jacobian at a state, as a 2x2 row-major array.
    fn jacobian(&self, h: f64, hv: f64) -> [f64; 4] {
        let v = self.velocity(h, hv);
        [0.0, 1.0, -v * v + self.gravity * h, 2.0 * v]
    }

    /// Clamped (copy ghost) point index.
    fn at(&self, j: isize) -> usize {
        j.clamp(0, self.grid.m as isize - 1) as usize
    }
}

impl RhsPair for ShallowWater {
    fn dim(&self) -> usize {
        2 * self.grid.m
    }

    fn f(&self, u: &[f64], out: &mut [f64]) {
        let m = self.grid.m;
        let alpha = self.wavespeed(u);
        // face value f_{j-1/2} for faces 0..=m (ghost copies at the ends)
        let face = |j: isize| -> (f64, f64) {
            let l = self.at(j - 1);
            let r = self.at(j);
            let (fl0, fl1) = self.flux(u[2 * l], u[2 * l + 1]);
            let (fr0, fr1) = self.flux(u[2 * r], u[2 * r + 1]);
            (
                0.5 * (fl0 + fr0) - 0.5 * alpha * (u[2 * r] - u[2 * l]),
                0.5 * (fl1 + fr1) - 0.5 * alpha * (u[2 * r + 1] - u[2 * l + 1]),
            )
        };
        for j in 0..m {
            let (lo0, lo1) = face(j as isize);
            let (hi0, hi1) = face(j as isize + 1);
            out[2 * j] = -(hi0 - lo0) / self.grid.dx;
            out[2 * j + 1] = -(hi1 - lo1) / self.grid.dx;
        }
    }

    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        let m = self.grid.m;
        let mut ut = vec![0.0; 2 * m];
        self.f(u, &mut ut);
        // g_j = f'(u_j) u_t,j, then a centered difference with copy ghosts
        let g = |j: isize| -> (f64, f64) {
            let k = self.at(j);
            let jac = self.jacobian(u[2 * k], u[2 * k + 1]);
            (
                jac[0] * ut[2 * k] + jac[1] * ut[2 * k + 1],
                jac[2] * ut[2 * k] + jac[3] * ut[2 * k + 1],
            )
        };
        for j in 0..m {
            let (gp0, gp1) = g(j as isize + 1);
            let (gm0, gm1) = g(j as isize - 1);
            out[2 * j] = -(gp0 - gm0) / (2.0 * self.grid.dx);
            out[2 * j + 1] = -(gp1 - gm1) / (2.0 * self.grid.dx);
        }
    }
}

pub fn shallow_water(grid: Grid1D, gravity: f64) -> ShallowWater {
    ShallowWater::new(grid, gravity)
}

// ------------------------------------------------------ initial conditions

/// Square wave: 1 on `[-1/2, 1/2]`, 0 elsewhere.
pub fn square_wave(grid: &Grid1D) -> Vec<f64> {
    (0..grid.m)
        .map(|j| {
            let x = grid.x(j);
            if (-0.5..=0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Dam break with a dry right state: `(h, v) = (10, 0)` for `x <= 1/2`,
/// `(0, 0)` beyond. Interleaved `(h, hv)` layout.
pub fn dam_break(grid: &Grid1D) -> Vec<f64> {
    let mut u = vec![0.0; 2 * grid.m];
    for j in 0..grid.m {
        if grid.x(j) <= 0.5 {
            u[2 * j] = 10.0;
        }
    }
    u
}

/// Smooth periodic profile for convergence studies.
pub fn smooth_sine(grid: &Grid1D) -> Vec<f64> {
    (0..grid.m)
        .map(|j| (std::f64::consts::PI * grid.x(j)).sin())
        .collect()
}

// ------------------------------------------------------------ problem specs

/// Which functional a sweep monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    TotalVariation,
    Positivity,
}

/// A 1D PDE semi-discretization packaged for the experiment harnesses.
pub struct ProblemSpec {
    pub name: String,
    pub grid: Grid1D,
    pub rhs: Box<dyn RhsPair>,
    /// Forward-Euler monotone step; sweep step sizes are `lambda * dt_fe`.
    pub dt_fe: f64,
    /// Taylor-series ratio of the base conditions.
    pub k: f64,
    pub initial: Vec<f64>,
    pub monitor: MonitorKind,
    /// Components per grid point (1 for scalars, 2 for shallow water).
    pub n_comp: usize,
    /// When set, sweeps rescale the step every step as
    /// `dt = lambda * dx / wavespeed(u^n)`; `dt_fe` then reflects the initial
    /// state.
    pub wavespeed: Option<Box<dyn Fn(&[f64]) -> f64 + Sync>>,
}

/// Linear advection `U_t = U_x` with first-order upwind operators on
/// `[-1, 1]`, square wave data.
pub fn advection_upwind_problem(m: usize) -> ProblemSpec {
    let grid = Grid1D::new(-1.0, 1.0, m);
    ProblemSpec {
        name: "advection-upwind".into(),
        grid,
        rhs: Box::new(advection_upwind(grid)),
        dt_fe: grid.dx,
        k: 1.0,
        initial: square_wave(&grid),
        monitor: MonitorKind::TotalVariation,
        n_comp: 1,
        wavespeed: None,
    }
}

/// Burgers' equation with first-order upwind operators on `[-1, 1]`, square
/// wave data. `dt_FE = dx / max|u0| = dx` on the unit-height data.
pub fn burgers_upwind_problem(m: usize) -> ProblemSpec {
    let grid = Grid1D::new(-1.0, 1.0, m);
    ProblemSpec {
        name: "burgers-upwind".into(),
        grid,
        rhs: Box::new(burgers_upwind(grid)),
        dt_fe: grid.dx,
        k: 1.0,
        initial: square_wave(&grid),
        monitor: MonitorKind::TotalVariation,
        n_comp: 1,
        wavespeed: None,
    }
}

/// Burgers' equation with WENO5 on `[-1, 1]`. `f'(u) >= 0` on the square
/// wave data, so the reconstruction runs unsplit with `Plus` wind.
pub fn weno_burgers_problem(m: usize, dop: DopChoice) -> ProblemSpec {
    let grid = Grid1D::new(-1.0, 1.0, m);
    ProblemSpec {
        name: "burgers-weno".into(),
        grid,
        rhs: Box::new(WenoScalar::new(
            BurgersFlux,
            WenoDirection::Plus,
            grid,
            dop,
        )),
        dt_fe: grid.dx,
        k: 1.0,
        initial: square_wave(&grid),
        monitor: MonitorKind::TotalVariation,
        n_comp: 1,
        wavespeed: None,
    }
}

/// Linear advection `U_t = U_x` (flux `f(U) = -U`, wind `Minus`) with WENO5
/// on `[-1, 1]`.
pub fn weno_advection_problem(m: usize, dop: DopChoice) -> ProblemSpec {
    let grid = Grid1D::new(-1.0, 1.0, m);
    ProblemSpec {
        name: "advection-weno".into(),
        grid,
        rhs: Box::new(WenoScalar::new(
            LinearFlux(-1.0),
            WenoDirection::Minus,
            grid,
            dop,
        )),
        dt_fe: grid.dx,
        k: 1.0,
        initial: square_wave(&grid),
        monitor: MonitorKind::TotalVariation,
        n_comp: 1,
        wavespeed: None,
    }
}

/// Shallow water dam break onto a dry bed on `(0, 1)` with `g = 1`;
/// positivity of the height is the monitored property and step sizes track
/// the evolving maximal wave speed.
pub fn shallow_water_problem(m: usize, gravity: f64) -> ProblemSpec {
    let grid = Grid1D::new(0.0, 1.0, m);
    let sw = ShallowWater::new(grid, gravity);
    let initial = dam_break(&grid);
    let alpha0 = sw.wavespeed(&initial);
    let speed = ShallowWater::new(grid, gravity);
    ProblemSpec {
        name: "shallow-water".into(),
        grid,
        rhs: Box::new(sw),
        dt_fe: grid.dx / alpha0,
        k: 1.0,
        initial,
        monitor: MonitorKind::Positivity,
        n_comp: 2,
        wavespeed: Some(Box::new(move |u: &[f64]| speed.wavespeed(u))),
    }
}

/// Builds the problem named on the command line.
pub fn problem_by_name(name: &str, m: usize) -> Option<ProblemSpec> {
    match name {
        "advection-upwind" => Some(advection_upwind_problem(m)),
        "burgers-upwind" => Some(burgers_upwind_problem(m)),
        "burgers-weno" => Some(weno_burgers_problem(m, DopChoice::Same)),
        "burgers-weno-opposite" => Some(weno_burgers_problem(m, DopChoice::Opposite)),
        "advection-weno" => Some(weno_advection_problem(m, DopChoice::Same)),
        "advection-weno-opposite" => Some(weno_advection_problem(m, DopChoice::Opposite)),
        "shallow-water" => Some(shallow_water_problem(m, 1.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_states_are_steady() {
        let grid = Grid1D::new(-1.0, 1.0, 32);
        let u = vec![0.7; 32];
        let mut out = vec![0.0; 32];
        let adv = advection_upwind(grid);
        adv.f(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-14));
        adv.ftilde(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-14));
        let burg = burgers_upwind(grid);
        burg.f(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-14));
        let weno = WenoScalar::new(BurgersFlux, WenoDirection::Plus, grid, DopChoice::Same);
        weno.f(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn lake_at_rest_is_steady() {
        let grid = Grid1D::new(0.0, 1.0, 21);
        let sw = shallow_water(grid, 1.0);
        let mut u = vec![0.0; 42];
        for j in 0..21 {
            u[2 * j] = 3.0;
        }
        let mut out = vec![0.0; 42];
        sw.f(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-12));
        sw.ftilde(&u, &mut out);
        assert!(out.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn lax_friedrichs_split_values() {
        let states: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let (plus, minus) = lax_friedrichs_split(&BurgersFlux, &states);
        // m = 1 on [0,1]: f+(1) = 0.75, f-(1) = -0.25
        assert!((plus[10] - 0.75).abs() < 1e-15);
        assert!((minus[10] + 0.25).abs() < 1e-15);
        // exact reconstruction
        for (i, &u) in states.iter().enumerate() {
            assert!((plus[i] + minus[i] - 0.5 * u * u).abs() < 1e-15);
        }
        // discrete monotonicity of each part
        for w in plus.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        for w in minus.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        // linear flux f(u) = -u: everything lands in the minus part
        let (plus, minus) = lax_friedrichs_split(&LinearFlux(-1.0), &states);
        assert!(plus.iter().all(|&v| v.abs() < 1e-15));
        for (i, &u) in states.iter().enumerate() {
            assert!((minus[i] + u).abs() < 1e-15);
        }
    }

    #[test]
    fn weno_weights_near_linear_on_smooth_data() {
        let grid = Grid1D::new(-1.0, 1.0, 512);
        let f: Vec<f64> = (0..grid.m)
            .map(|j| (std::f64::consts::PI * grid.x(j)).sin() + 2.0 * grid.x(j))
            .collect();
        // monotone smooth data away from endpoints
        let w = weno5_weights(&f, 128, WenoDirection::Plus, WENO_EPSILON);
        assert!((w[0] - 0.1).abs() < 1e-2, "{w:?}");
        assert!((w[1] - 0.6).abs() < 1e-2);
        assert!((w[2] - 0.3).abs() < 1e-2);
    }

    #[test]
    fn conservation_of_flux_difference_operators() {
        let grid = Grid1D::new(-1.0, 1.0, 64);
        let u: Vec<f64> = (0..64)
            .map(|j| (2.0 * std::f64::consts::PI * grid.x(j)).sin().abs() + 0.2)
            .collect();
        let mut out = vec![0.0; 64];
        for rhs in [
            Box::new(advection_upwind(grid)) as Box<dyn RhsPair>,
            Box::new(burgers_upwind(grid)),
            Box::new(WenoScalar::new(
                BurgersFlux,
                WenoDirection::Plus,
                grid,
                DopChoice::Same,
            )),
        ] {
            rhs.f(&u, &mut out);
            let sum: f64 = out.iter().sum();
            assert!(sum.abs() < 1e-11, "sum = {sum}");
        }
    }

    #[test]
    fn weno_mirror_symmetry() {
        // applying the Minus operator to reflected, negated flux data equals
        // the reflected negated Plus output
        let grid = Grid1D::new(-1.0, 1.0, 64);
        let m = grid.m;
        let f: Vec<f64> = (0..m)
            .map(|j| (std::f64::consts::PI * grid.x(j)).sin() + 0.3 * grid.x(j))
            .collect();
        let plus = Weno5::new(WenoDirection::Plus, grid);
        let minus = Weno5::new(WenoDirection::Minus, grid);
        let mut out_p = vec![0.0; m];
        plus.apply(&f, &mut out_p);
        // reflect: x -> -x maps index j to m-1-j
        let f_ref: Vec<f64> = (0..m).map(|j| -f[m - 1 - j]).collect();
        let mut out_m = vec![0.0; m];
        minus.apply(&f_ref, &mut out_m);
        for j in 0..m {
            let want = out_p[m - 1 - j];
            assert!(
                (out_m[j] - want).abs() < 1e-13,
                "j = {j}: {} vs {want}",
                out_m[j]
            );
        }
    }

    #[test]
    fn square_wave_total_variation_is_two() {
        let grid = Grid1D::new(-1.0, 1.0, 601);
        let u = square_wave(&grid);
        let tv: f64 = (0..grid.m)
            .map(|j| (u[(j + 1) % grid.m] - u[j]).abs())
            .sum();
        assert_eq!(tv, 2.0);
    }
}
