//! Numerical search for tableaus maximizing the certified coefficient
//! `C_TS(K)` subject to order conditions, coefficient nonnegativity, and
//! variant structure.
//!
//! Outer loop: continuation in the radius `r` (adaptive ramp with secant
//! prediction of the moving solution, then endgame bisection). Inner loop:
//! the feasibility problem at fixed `r` is solved as nonlinear least squares
//! on the stacked residual vector
//!
//! ```text
//! [ order-condition residuals | min(0, coefficients) | min(0, SSP values) ]
//! ```
//!
//! by multistart Levenberg-Marquardt with a forward-difference Jacobian.
//! Stage-order-two (tau2 = 0) is imposed exactly by elimination for M2/M3
//! variants: the first column of `Ahat` is solved out of `chat = c^2/2 - Ac`.
//!
//! Results are always re-certified through [`crate::ssp::compute_cts`]; the
//! optimizer's own bookkeeping is never trusted for the reported coefficient.

use crate::methods::{MethodRecord, Source};
use crate::order;
use crate::ssp;
use crate::tableau::{Tableau, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Search specification.
#[derive(Debug, Clone)]
pub struct OptimizationSpec {
    pub s: usize,
    /// Target order, at most 6 (the order barrier for this method class).
    pub p: u8,
    pub variant: Variant,
    pub k: f64,
    /// Number of random starts per solve level.
    pub seeds: usize,
    /// Iteration budget per local solve.
    pub budget: usize,
    pub tol_order: f64,
    pub tol_feas: f64,
    /// Generator seed; fixed seed gives a fixed tableau.
    pub rng_seed: u64,
}

impl OptimizationSpec {
    pub fn new(s: usize, p: u8, variant: Variant, k: f64) -> OptimizationSpec {
        OptimizationSpec {
            s,
            p,
            variant,
            k,
            seeds: 32,
            budget: 2000,
            tol_order: 1e-10,
            tol_feas: 1e-12,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<(), OptimizeError> {
        if self.p == 0 || self.p > 6 {
            return Err(OptimizeError::BadSpec(format!(
                "order {} out of range 1..=6",
                self.p
            )));
        }
        if self.s == 0 || self.s > crate::tableau::MAX_STAGES {
            return Err(OptimizeError::BadSpec(format!(
                "stage count {} out of range",
                self.s
            )));
        }
        if !(self.k > 0.0) {
            return Err(OptimizeError::BadSpec(format!("K = {} not positive", self.k)));
        }
        if self.variant == Variant::External {
            return Err(OptimizeError::BadSpec(
                "variant must be M1, M2, or M3".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid spec: {0}")]
    BadSpec(String),
    #[error("no feasible method found (best violation {best_violation:.3e})")]
    NoFeasibleMethod { best_violation: f64 },
}

/// Search result. `certified_cts` is the independently certified radius of
/// the returned tableau; `internal_r` is the radius tracked by the search.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub record: MethodRecord,
    pub certified_cts: f64,
    pub internal_r: f64,
}

// ------------------------------------------------------- parameterization

fn n_free(spec: &OptimizationSpec) -> usize {
    let s = spec.s;
    let na = s * (s - 1) / 2;
    match spec.variant {
        Variant::M1 => 2 * na + 2 * s,
        Variant::M2 => na + (s - 1) * (s - 2) / 2 + 2 * s,
        Variant::M3 => na + s + 1,
        Variant::External => unreachable!("rejected by validate"),
    }
}

/// Unpacks the free-variable vector into a tableau. For M2 the free `Ahat`
/// entries are the columns `>= 2`; for M3 there are none. The first column
/// comes from the stage-order-two identity.
fn build(spec: &OptimizationSpec, x: &[f64]) -> Tableau {
    let s = spec.s;
    let mut a = vec![vec![0.0; s]; s];
    let mut ahat = vec![vec![0.0; s]; s];
    let mut k = 0;
    for i in 1..s {
        for j in 0..i {
            a[i][j] = x[k];
            k += 1;
        }
    }
    let (b, bhat) = match spec.variant {
        Variant::M1 => {
            for i in 1..s {
                for j in 0..i {
                    ahat[i][j] = x[k];
                    k += 1;
                }
            }
            let b = x[k..k + s].to_vec();
            k += s;
            let bhat = x[k..k + s].to_vec();
            k += s;
            (b, bhat)
        }
        Variant::M2 => {
            for i in 2..s {
                for j in 1..i {
                    ahat[i][j] = x[k];
                    k += 1;
                }
            }
            let b = x[k..k + s].to_vec();
            k += s;
            let bhat = x[k..k + s].to_vec();
            k += s;
            eliminate_tau2(&a, &mut ahat, s, true);
            (b, bhat)
        }
        Variant::M3 => {
            let b = x[k..k + s].to_vec();
            k += s;
            let mut bhat = vec![0.0; s];
            bhat[0] = x[k];
            k += 1;
            eliminate_tau2(&a, &mut ahat, s, false);
            (b, bhat)
        }
        Variant::External => unreachable!(),
    };
    debug_assert_eq!(k, x.len());
    Tableau::from_parts(spec.variant, a, ahat, b, bhat, spec.k)
        .expect("optimizer shapes are valid")
}

/// Solves `chat_i = c_i^2/2 - (A c)_i` for the first `Ahat` column. With
/// `with_rest` the remaining row entries (already set) are subtracted.
fn eliminate_tau2(a: &[Vec<f64>], ahat: &mut [Vec<f64>], s: usize, with_rest: bool) {
    let c: Vec<f64> = (0..s).map(|i| a[i].iter().sum()).collect();
    for i in 1..s {
        let ac: f64 = (0..i).map(|j| a[i][j] * c[j]).sum();
        let mut v = 0.5 * c[i] * c[i] - ac;
        if with_rest {
            v -= ahat[i][1..].iter().sum::<f64>();
        }
        ahat[i][0] = v;
    }
}

// ----------------------------------------------------------- residuals

fn residual_vector(spec: &OptimizationSpec, x: &[f64], r: f64, out: &mut Vec<f64>) {
    out.clear();
    let t = build(spec, x);
    for q in 1..=spec.p {
        for cond in order::residuals(&t, q).expect("p validated") {
            out.push(cond.residual);
        }
    }
    let s = spec.s;
    for i in 1..s {
        for j in 0..i {
            out.push(t.a(i, j).min(0.0));
            out.push(t.ahat(i, j).min(0.0));
        }
    }
    for j in 0..s {
        out.push(t.b()[j].min(0.0));
        out.push(t.bhat()[j].min(0.0));
    }
    if r > 0.0 {
        for v in ssp::feasibility_values(&t, r, spec.k) {
            out.push(v.min(0.0));
        }
    }
}

/// Worst violation: max order residual, worst negative coefficient, worst
/// negative feasibility value.
fn max_violation(spec: &OptimizationSpec, x: &[f64], r: f64) -> f64 {
    let mut buf = Vec::new();
    residual_vector(spec, x, r, &mut buf);
    buf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// ------------------------------------------------ Levenberg-Marquardt

/// Dense LM on `f(x) = 0` with forward-difference Jacobian. Small problems
/// only (n <= ~40).
fn levenberg_marquardt(
    spec: &OptimizationSpec,
    r: f64,
    x0: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = Vec::new();
    residual_vector(spec, &x, r, &mut f);
    let mut cost: f64 = f.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut jac: Vec<Vec<f64>> = Vec::new();
    let mut fp = Vec::new();
    for _ in 0..max_iter {
        if cost < 1e-28 {
            break;
        }
        let m = f.len();
        jac.clear();
        jac.resize(n, vec![0.0; m]);
        for (j, col) in jac.iter_mut().enumerate() {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            residual_vector(spec, &xp, r, &mut fp);
            for i in 0..m {
                col[i] = (fp[i] - f[i]) / h;
            }
        }
        // gradient and normal matrix
        let mut g = vec![0.0; n];
        for j in 0..n {
            g[j] = jac[j].iter().zip(&f).map(|(a, b)| a * b).sum();
        }
        if g.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
        let mut jtj = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = jac[i].iter().zip(&jac[j]).map(|(a, b)| a * b).sum();
                jtj[i][j] = v;
                jtj[j][i] = v;
            }
        }
        let mut improved = false;
        for _ in 0..24 {
            // damped normal equations
            let mut m_damped = jtj.clone();
            for i in 0..n {
                m_damped[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(dx) = cholesky_solve(&m_damped, &g) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - d).collect();
            residual_vector(spec, &xn, r, &mut fp);
            let cn: f64 = fp.iter().map(|v| v * v).sum();
            if cn < cost {
                x = xn;
                std::mem::swap(&mut f, &mut fp);
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 2.5;
        }
        if !improved {
            break;
        }
    }
    (x, cost)
}

/// Cholesky solve of a symmetric positive (semi)definite system. None when
/// the factorization hits a nonpositive pivot.
fn cholesky_solve(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[i][k] * v;
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = y[k];
            y[i] -= l[k][i] * v;
        }
        y[i] /= l[i][i];
    }
    Some(y)
}

// ------------------------------------------------------------ search

struct Inner<'a> {
    spec: &'a OptimizationSpec,
    accept: f64,
}

impl Inner<'_> {
    /// Runs LM from every start in parallel and keeps the best violation.
    /// Start order breaks ties, so results are deterministic.
    fn solve(&self, r: f64, starts: &[Vec<f64>], budget: usize) -> (Vec<f64>, f64) {
        let results: Vec<(usize, Vec<f64>, f64)> = starts
            .par_iter()
            .enumerate()
            .map(|(i, x0)| {
                let (x, _) = levenberg_marquardt(self.spec, r, x0, budget);
                let viol = max_violation(self.spec, &x, r);
                (i, x, viol)
            })
            .collect();
        let best = results
            .into_iter()
            .min_by(|a, b| (a.2, a.0).partial_cmp(&(b.2, b.0)).expect("finite"))
            .expect("at least one start");
        (best.1, best.2)
    }

    fn feasible(&self, viol: f64) -> bool {
        viol < self.accept
    }
}

/// Searches for the best tableau under `spec`. The reported coefficient is
/// the independently certified value of the final (polished) tableau.
pub fn optimize(spec: &OptimizationSpec) -> Result<OptimizeOutcome, OptimizeError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let nf = n_free(spec);
    let scale = 1.0 / spec.s as f64;
    let fresh = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..nf).map(|_| rng.gen_range(0.0..scale)).collect())
            .collect()
    };
    let inner = Inner {
        spec,
        accept: 1e-9,
    };
    let budget = spec.budget.min(350);

    // base problem: a nonnegative method of order p, no SSP constraint yet
    let (mut x_lo, base_viol) = inner.solve(0.0, &fresh(spec.seeds.max(4), &mut rng), budget);
    if !inner.feasible(base_viol) {
        return Err(OptimizeError::NoFeasibleMethod {
            best_violation: base_viol,
        });
    }
    let mut r_lo = 0.0f64;
    let mut prev: Option<(f64, Vec<f64>)> = None;

    // continuation ramp with adaptive step and secant prediction
    let mut step = 0.25;
    let mut fails_here = 0usize;
    while step > 1e-4 && r_lo < 64.0 {
        let r_try = r_lo + step;
        let mut starts: Vec<Vec<f64>> = vec![x_lo.clone()];
        if let Some((r_prev, ref x_prev)) = prev {
            if r_lo > r_prev {
                let fac = step / (r_lo - r_prev);
                starts.push(
                    x_lo.iter()
                        .zip(x_prev)
                        .map(|(a, b)| a + fac * (a - b))
                        .collect(),
                );
            }
        }
        for sc in [0.02, 0.1] {
            starts.push(
                x_lo.iter()
                    .map(|v| v + sc * rng.gen_range(-1.0..1.0))
                    .collect(),
            );
        }
        starts.extend(fresh(
            if fails_here > 0 { 4 } else { 2 }.min(spec.seeds),
            &mut rng,
        ));
        let (x_try, viol) = inner.solve(r_try, &starts, budget);
        if inner.feasible(viol) {
            prev = Some((r_lo, std::mem::replace(&mut x_lo, x_try)));
            r_lo = r_try;
            step *= 1.7;
            fails_here = 0;
        } else {
            fails_here += 1;
            step /= 2.2;
        }
    }

    // endgame bisection, warm starts only
    let mut r_hi = r_lo + 1e-4;
    for _ in 0..40 {
        if r_hi - r_lo < 1e-8 {
            break;
        }
        let mid = 0.5 * (r_lo + r_hi);
        let starts = vec![x_lo.clone()];
        let (x_try, viol) = inner.solve(mid, &starts, budget);
        if inner.feasible(viol) {
            x_lo = x_try;
            r_lo = mid;
        } else {
            r_hi = mid;
        }
    }

    // polish hard at the final radius, then snap tiny entries to zero and
    // re-polish the order conditions alone
    let (x_polished, _) = levenberg_marquardt(spec, r_lo, &x_lo, 2 * budget);
    let x_fin = if max_violation(spec, &x_polished, r_lo) <= max_violation(spec, &x_lo, r_lo) {
        x_polished
    } else {
        x_lo
    };
    let tableau = finalize(spec, &x_fin);

    let cert = ssp::compute_cts(&tableau, spec.k);
    let order_ok = order::order_of(&tableau, spec.tol_order.max(1e-10)) >= spec.p;
    if !order_ok || cert.r_max <= 0.0 {
        return Err(OptimizeError::NoFeasibleMethod {
            best_violation: max_violation(spec, &x_fin, 0.0),
        });
    }
    let name = format!(
        "{}({},{},{})",
        spec.variant.as_str(),
        spec.s,
        spec.p,
        format_k(spec.k)
    );
    Ok(OptimizeOutcome {
        record: MethodRecord {
            name,
            tableau,
            claimed_order: spec.p,
            claimed_cts: Some(cert.r_max),
            source: Source::Optimized,
        },
        certified_cts: cert.r_max,
        internal_r: r_lo,
    })
}

fn format_k(k: f64) -> String {
    if k.is_infinite() {
        "inf".into()
    } else if (k - k.round()).abs() < 1e-12 {
        format!("{}", k.round() as i64)
    } else {
        format!("{k}")
    }
}

/// Snaps near-zero free variables to exact zeros and clamps roundoff
/// negatives in the assembled tableau.
fn finalize(spec: &OptimizationSpec, x: &[f64]) -> Tableau {
    let snapped: Vec<f64> = x
        .iter()
        .map(|&v| if v.abs() < 1e-11 { 0.0 } else { v })
        .collect();
    let t = build(spec, &snapped);
    let clamp = |v: f64| if v.abs() < 1e-13 { 0.0 } else { v };
    let clamp_rows = |rows: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|row| row.into_iter().map(clamp).collect())
            .collect()
    };
    Tableau::from_parts(
        spec.variant,
        clamp_rows(t.a_rows()),
        clamp_rows(t.ahat_rows()),
        t.b().iter().map(|&v| clamp(v)).collect(),
        t.bhat().iter().map(|&v| clamp(v)).collect(),
        spec.k,
    )
    .expect("shape preserved")
    .clamped()
}

/// Independent re-check of a candidate: order conditions, structural
/// diagnostics, and certified coefficient. Candidates are accepted only on
/// this pass, never on the optimizer's internal bookkeeping.
#[derive(Debug, Clone)]
pub struct CandidateReport {
    pub order_achieved: u8,
    pub max_order_residual: f64,
    pub structurally_clean: bool,
    pub certified_cts: f64,
    pub accepted: bool,
}

pub fn verify_candidate(t: &Tableau, spec: &OptimizationSpec) -> CandidateReport {
    let order_achieved = order::order_of(t, spec.tol_order.max(1e-10));
    let max_order_residual = (1..=spec.p)
        .flat_map(|q| order::residuals(t, q).expect("p in range"))
        .map(|c| c.residual.abs())
        .fold(0.0f64, f64::max);
    let structurally_clean = t.validate().is_clean();
    let cert = ssp::compute_cts(t, spec.k);
    CandidateReport {
        order_achieved,
        max_order_residual,
        structurally_clean,
        certified_cts: cert.r_max,
        accepted: order_achieved >= spec.p && structurally_clean && cert.r_max > 0.0,
    }
}
