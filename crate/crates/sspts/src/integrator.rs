//! Generic explicit two-derivative multistage stepper.
//!
//! The stepper is agnostic to where `F` and `Ft` come from: any [`RhsPair`]
//! works, whether a PDE semi-discretization from [`crate::spatial`] or a
//! plain ODE right-hand side. Both operators are autonomous; augment the
//! state for time-dependent problems.

use crate::tableau::Tableau;
use thiserror::Error;

/// First derivative `F ~ u_t` and second-derivative approximation
/// `Ft ~ u_tt`, acting on states of equal dimension.
pub trait RhsPair: Sync {
    fn dim(&self) -> usize;
    fn f(&self, u: &[f64], out: &mut [f64]);
    fn ftilde(&self, u: &[f64], out: &mut [f64]);
}

/// RhsPair from a pair of closures; convenient for ODE test problems.
pub struct FnPair<F, G>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    pub dim: usize,
    pub f: F,
    pub ft: G,
}

impl<F, G> RhsPair for FnPair<F, G>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn f(&self, u: &[f64], out: &mut [f64]) {
        (self.f)(u, out)
    }
    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        (self.ft)(u, out)
    }
}

/// Wrapper counting evaluations of each operator.
pub struct CountingRhs<'a> {
    pub inner: &'a dyn RhsPair,
    pub n_f: std::sync::atomic::AtomicUsize,
    pub n_ftilde: std::sync::atomic::AtomicUsize,
}

impl<'a> CountingRhs<'a> {
    pub fn new(inner: &'a dyn RhsPair) -> Self {
        CountingRhs {
            inner,
            n_f: 0.into(),
            n_ftilde: 0.into(),
        }
    }
}

impl RhsPair for CountingRhs<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn f(&self, u: &[f64], out: &mut [f64]) {
        self.n_f.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.inner.f(u, out);
    }
    fn ftilde(&self, u: &[f64], out: &mut [f64]) {
        self.n_ftilde
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.inner.ftilde(u, out);
    }
}

/// Callbacks invoked during integration. Stage 0 is the starting state of
/// the step; stage `s` (the last call per step) is the new step value.
pub trait Observer {
    fn on_stage(&mut self, _step: usize, _stage: usize, _y: &[f64]) {}
    fn on_step(&mut self, _step: usize, _t: f64, _u: &[f64]) {}
    /// Whether [`integrate`] should retain per-step stage snapshots in the
    /// trajectory.
    fn wants_stages(&self) -> bool {
        false
    }
}

/// Observer that does nothing.
pub struct NoObserver;
impl Observer for NoObserver {}

/// Time series produced by [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Stage states per step (`y_1..y_s` plus the step value), retained only
    /// when the observer asks for them.
    pub stage_snapshots: Option<Vec<Vec<Vec<f64>>>>,
}

/// Integration halted on a non-finite state entry.
#[derive(Debug, Error)]
#[error("non-finite state at step {step}, stage {stage}")]
pub struct NonFiniteState {
    pub step: usize,
    pub stage: usize,
    /// Number of fully completed steps before the halt.
    pub completed: usize,
}

/// One step of the two-derivative method from state `u` with step `dt`.
/// Returns the new state and all stage states (`y_1 = u` through the step
/// value `y_{s+1}`). `F` is evaluated exactly once per stage; `Ft` only at
/// stages whose second-derivative data is referenced, so M3 tableaus cost a
/// single `Ft` evaluation.
pub fn step(t: &Tableau, rhs: &dyn RhsPair, u: &[f64], dt: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let s = t.stages();
    let n = u.len();
    let mut f_vals: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut ft_vals: Vec<Option<Vec<f64>>> = (0..s).map(|_| None).collect();
    let need_ft: Vec<bool> = (0..s)
        .map(|j| t.bhat()[j] != 0.0 || (j + 1..s).any(|i| t.ahat(i, j) != 0.0))
        .collect();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s + 1);
    stages.push(u.to_vec());
    let mut buf = vec![0.0; n];
    for i in 0..s {
        if i > 0 {
            let mut y = u.to_vec();
            for (j, fj) in f_vals.iter().enumerate() {
                let aij = t.a(i, j);
                if aij != 0.0 {
                    for (yv, fv) in y.iter_mut().zip(fj) {
                        *yv += dt * aij * fv;
                    }
                }
                let ahij = t.ahat(i, j);
                if ahij != 0.0 {
                    let ft = ft_vals[j].as_ref().expect("needed Ft was evaluated");
                    for (yv, fv) in y.iter_mut().zip(ft) {
                        *yv += dt * dt * ahij * fv;
                    }
                }
            }
            stages.push(y);
        }
        let y = &stages[i];
        rhs.f(y, &mut buf);
        f_vals.push(buf.clone());
        if need_ft[i] {
            rhs.ftilde(y, &mut buf);
            ft_vals[i] = Some(buf.clone());
        }
    }
    let mut unew = u.to_vec();
    for j in 0..s {
        let bj = t.b()[j];
        if bj != 0.0 {
            for (uv, fv) in unew.iter_mut().zip(&f_vals[j]) {
                *uv += dt * bj * fv;
            }
        }
        let bhj = t.bhat()[j];
        if bhj != 0.0 {
            let ft = ft_vals[j].as_ref().expect("needed Ft was evaluated");
            for (uv, fv) in unew.iter_mut().zip(ft) {
                *uv += dt * dt * bhj * fv;
            }
        }
    }
    stages.push(unew.clone());
    (unew, stages)
}

/// Repeated stepping with observation. Per step the observer sees s+1 stage
/// states (the starting state, the s-1 internal stages, and the step value)
/// followed by one step callback. Any NaN or infinity halts integration with
/// a diagnostic instead of propagating.
pub fn integrate(
    t: &Tableau,
    rhs: &dyn RhsPair,
    u0: &[f64],
    dt: f64,
    n_steps: usize,
    observer: &mut dyn Observer,
) -> Result<Trajectory, NonFiniteState> {
    integrate_with_dt(t, rhs, u0, |_, _| dt, n_steps, observer)
}

/// Like [`integrate`] but the step size is chosen per step from the current
/// state, `dt = dt_of(step, u)`. Used by sweeps whose step-size rule tracks
/// an evolving wave speed.
pub fn integrate_with_dt(
    t: &Tableau,
    rhs: &dyn RhsPair,
    u0: &[f64],
    mut dt_of: impl FnMut(usize, &[f64]) -> f64,
    n_steps: usize,
    observer: &mut dyn Observer,
) -> Result<Trajectory, NonFiniteState> {
    let keep_stages = observer.wants_stages();
    let mut times = vec![0.0];
    let mut states = vec![u0.to_vec()];
    let mut snapshots: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut u = u0.to_vec();
    let mut time = 0.0;
    for stepno in 0..n_steps {
        let dt = dt_of(stepno, &u);
        let (unew, stages) = step(t, rhs, &u, dt);
        for (k, y) in stages.iter().enumerate() {
            if !y.iter().all(|v| v.is_finite()) {
                return Err(NonFiniteState {
                    step: stepno,
                    stage: k,
                    completed: stepno,
                });
            }
            observer.on_stage(stepno, k, y);
        }
        time += dt;
        observer.on_step(stepno, time, &unew);
        if keep_stages {
            snapshots.push(stages);
        }
        times.push(time);
        states.push(unew.clone());
        u = unew;
    }
    Ok(Trajectory {
        times,
        states,
        stage_snapshots: keep_stages.then_some(snapshots),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods;

    fn decay() -> FnPair<impl Fn(&[f64], &mut [f64]) + Sync, impl Fn(&[f64], &mut [f64]) + Sync>
    {
        FnPair {
            dim: 1,
            f: |u: &[f64], out: &mut [f64]| out[0] = -u[0],
            ft: |u: &[f64], out: &mut [f64]| out[0] = u[0],
        }
    }

    #[test]
    fn forward_euler_decay_step() {
        let t = methods::forward_euler();
        let (u, _) = step(&t, &decay(), &[1.0], 0.1);
        assert!((u[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn taylor_series_matches_quadratic() {
        // u' = lambda u with Ft = lambda^2 u: one TS step is the Taylor
        // polynomial 1 + z + z^2/2
        let lambda = -0.7;
        let rhs = FnPair {
            dim: 1,
            f: move |u: &[f64], out: &mut [f64]| out[0] = lambda * u[0],
            ft: move |u: &[f64], out: &mut [f64]| out[0] = lambda * lambda * u[0],
        };
        let t = methods::taylor_series();
        let dt = 0.3;
        let (u, _) = step(&t, &rhs, &[1.0], dt);
        let z = lambda * dt;
        assert!((u[0] - (1.0 + z + 0.5 * z * z)).abs() < 1e-15);
    }

    #[test]
    fn single_step_equals_integrate() {
        let t = methods::lookup("M2(4,5,1)").unwrap().tableau;
        let (u, _) = step(&t, &decay(), &[1.0], 0.05);
        let traj = integrate(&t, &decay(), &[1.0], 0.05, 1, &mut NoObserver).unwrap();
        assert_eq!(traj.states.last().unwrap()[0], u[0]);
        assert_eq!(traj.times.len(), 2);
    }

    #[test]
    fn evaluation_counts() {
        // F exactly s per step; Ft s for M2, 1 for M3
        for (name, ft_expect) in [("M2(4,5,1)", 4), ("M3(8,6,1)", 1), ("FE", 0), ("TS", 1)] {
            let t = methods::lookup(name).unwrap().tableau;
            let base = decay();
            let counting = CountingRhs::new(&base);
            let _ = step(&t, &counting, &[1.0], 0.01);
            assert_eq!(
                counting.n_f.load(std::sync::atomic::Ordering::Relaxed),
                t.stages(),
                "{name} F count"
            );
            assert_eq!(
                counting.n_ftilde.load(std::sync::atomic::Ordering::Relaxed),
                ft_expect,
                "{name} Ft count"
            );
        }
    }

    #[test]
    fn halts_on_non_finite() {
        let rhs = FnPair {
            dim: 1,
            f: |u: &[f64], out: &mut [f64]| out[0] = -(u[0].sqrt()),
            ft: |_: &[f64], out: &mut [f64]| out[0] = 0.0,
        };
        let t = methods::forward_euler();
        // drive the state negative so sqrt turns NaN
        let err = integrate(&t, &rhs, &[0.04], 1.0, 10, &mut NoObserver).unwrap_err();
        assert!(err.step > 0);
    }

    #[test]
    fn observer_sees_stages_and_steps() {
        struct Count {
            stages: usize,
            steps: usize,
        }
        impl Observer for Count {
            fn on_stage(&mut self, _s: usize, _k: usize, _y: &[f64]) {
                self.stages += 1;
            }
            fn on_step(&mut self, _s: usize, _t: f64, _u: &[f64]) {
                self.steps += 1;
            }
            fn wants_stages(&self) -> bool {
                true
            }
        }
        let t = methods::lookup("M3(3,4,1)").unwrap().tableau;
        let mut obs = Count { stages: 0, steps: 0 };
        let traj = integrate(&t, &decay(), &[1.0], 0.1, 5, &mut obs).unwrap();
        assert_eq!(obs.steps, 5);
        assert_eq!(obs.stages, 5 * 4); // y1, y2, y3 and the step value
        assert_eq!(traj.stage_snapshots.unwrap().len(), 5);
    }
}
