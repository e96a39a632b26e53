//! SSP certification for two-derivative methods.
//!
//! A method preserves the strong stability of spatial discretizations that
//! are contractive under forward-Euler steps (for `dt <= dt_FE`) and
//! Taylor-series steps (for `dt <= K dt_FE`) whenever, with `rhat = r / K`,
//!
//! ```text
//! M = I + r S + 2 rhat (rhat - r) Shat
//! M^-1 e >= 0,   M^-1 (S - 2 rhat Shat) >= 0,   M^-1 Shat >= 0
//! ```
//!
//! componentwise. Feasibility is monotone in `r`, so the certified radius
//! `C_TS = r_max` is found by bisection. The analogous second-derivative
//! notion (`C_SD`) checks `(I + r S + rhat Shat)^-1` against `e`, `r S`, and
//! `rhat Shat` over an independent pair `(r, rhat)`.
//!
//! Positive scalar prefactors (`r`, `2 r^2 / K^2`) are dropped from the
//! componentwise sign checks. They do not change feasibility, and keeping the
//! checks unscaled means the tolerance acts uniformly down to `r -> 0`;
//! methods that are infeasible for every positive radius (violations shrink
//! like `r^2`) are then detected instead of being rounded into a spurious
//! tiny radius.

use crate::linalg::SquareMat;
use crate::tableau::{ShuOsherForm, Tableau};

/// Componentwise nonnegativity tolerance for all feasibility checks.
pub const FEAS_TOL: f64 = 1e-12;

/// Bisection stops once the bracket is narrower than this (relative).
pub const BISECT_TOL: f64 = 1e-12;

/// Canonical decomposition witness: `y = R e u^n + P (FE terms) + Q (TS
/// terms)` with `R + P + Q = I`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub r_mat: SquareMat,
    pub p_mat: SquareMat,
    pub q_mat: SquareMat,
}

impl Decomposition {
    /// Smallest entry among `P`, `Q`, and `R e` (the convex weights).
    pub fn min_weight(&self) -> f64 {
        let re = self
            .r_mat
            .mul_vec(&vec![1.0; self.r_mat.n()])
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        re.min(self.p_mat.min_entry()).min(self.q_mat.min_entry())
    }
}

/// Output of [`compute_cts`].
#[derive(Debug, Clone)]
pub struct SspCertificate {
    /// The Taylor-series step-size ratio the analysis was run at.
    pub k: f64,
    /// Certified radius; 0 signals the method is not SSP-TS for this K.
    pub r_max: f64,
    /// Canonical decomposition evaluated at the certified radius.
    pub witness: Decomposition,
    /// Componentwise tolerance used.
    pub tolerance: f64,
    /// False when even an infinitesimal radius is infeasible.
    pub feasible_at_zero_plus: bool,
}

/// Canonical decomposition at radii `(r, rhat)`:
/// `R = (I + r S + 2 rhat (rhat - r) Shat)^-1`, `P = r R (S - 2 rhat Shat)`,
/// `Q = 2 rhat^2 R Shat`. Always returns the matrices; callers inspect signs.
pub fn canonical_decomposition(t: &Tableau, r: f64, rhat: f64) -> Decomposition {
    let bf = t.block_form().expect("tableau passed structural validation");
    let n = bf.n();
    let m = SquareMat::identity(n)
        .add_scaled(r, &bf.smat)
        .add_scaled(2.0 * rhat * (rhat - r), &bf.shat);
    let r_mat = m.unit_lower_inverse();
    let p_arg = bf.smat.add_scaled(-2.0 * rhat, &bf.shat);
    let p_mat = r_mat.mul_mat(&p_arg).scale(r);
    let q_mat = r_mat.mul_mat(&bf.shat).scale(2.0 * rhat * rhat);
    Decomposition {
        r_mat,
        p_mat,
        q_mat,
    }
}

/// Rewrites the canonical decomposition at `(r, rhat)` as a Shu-Osher form.
/// The pure-state weight `R e` attaches to the first stage; the state weight
/// of each Taylor term is split evenly between the `alpha` and `alphahat`
/// slots so that both derivative coefficients keep a nonzero partner.
pub fn canonical_shu_osher(t: &Tableau, r: f64, rhat: f64) -> ShuOsherForm {
    let d = canonical_decomposition(t, r, rhat);
    let s = t.stages();
    let re = d.r_mat.mul_vec(&vec![1.0; s + 1]);
    let mut f = ShuOsherForm::zeros(s);
    for i in 1..=s {
        // block row i is stage i+1 (1-based); Shu-Osher row index i-1
        for j in 0..i {
            let p = d.p_mat[(i, j)];
            let q = d.q_mat[(i, j)];
            f.alpha[i - 1][j] = p + 0.5 * q;
            f.alphahat[i - 1][j] = 0.5 * q;
            f.beta[i - 1][j] = if r > 0.0 { p / r } else { 0.0 }
                + if rhat > 0.0 { q / rhat } else { 0.0 };
            f.betahat[i - 1][j] = if rhat > 0.0 {
                q / (2.0 * rhat * rhat)
            } else {
                0.0
            };
        }
        f.alpha[i - 1][0] += re[i];
    }
    f
}

/// All componentwise values whose nonnegativity the SSP-TS conditions
/// require at radius `r` (prefactors dropped, see module docs).
pub(crate) fn feasibility_values(t: &Tableau, r: f64, k: f64) -> Vec<f64> {
    let bf = t.block_form().expect("tableau passed structural validation");
    let n = bf.n();
    let e = vec![1.0; n];
    let mut vals = Vec::with_capacity(n + 2 * n * n);
    if k.is_infinite() {
        // Limit K -> inf: the Taylor-series base step carries no constraint
        // and its family weight vanishes, leaving the forward-Euler checks on
        // S alone.
        let m = SquareMat::identity(n).add_scaled(r, &bf.smat);
        vals.extend(m.unit_lower_solve_vec(&e));
        vals.extend_from_slice(m.unit_lower_solve_mat(&bf.smat).entries());
    } else {
        let m = SquareMat::identity(n)
            .add_scaled(r, &bf.smat)
            .add_scaled((2.0 * r * r / (k * k)) * (1.0 - k), &bf.shat);
        let p_arg = bf.smat.add_scaled(-2.0 * r / k, &bf.shat);
        vals.extend(m.unit_lower_solve_vec(&e));
        vals.extend_from_slice(m.unit_lower_solve_mat(&p_arg).entries());
        vals.extend_from_slice(m.unit_lower_solve_mat(&bf.shat).entries());
    }
    vals
}

/// Checks the sufficient SSP-TS conditions at radius `r` and ratio `k`
/// (finite or infinite), returning the verdict and the decomposition witness.
/// `r = 0` is always feasible.
pub fn ts_feasible(t: &Tableau, r: f64, k: f64) -> (bool, Decomposition) {
    let rhat = if k.is_infinite() { 0.0 } else { r / k };
    let witness = canonical_decomposition(t, r, rhat);
    if r == 0.0 {
        return (true, witness);
    }
    let ok = feasibility_values(t, r, k)
        .into_iter()
        .all(|v| v >= -FEAS_TOL);
    (ok, witness)
}

fn ts_feasible_fast(t: &Tableau, r: f64, k: f64) -> bool {
    r == 0.0
        || feasibility_values(t, r, k)
            .into_iter()
            .all(|v| v >= -FEAS_TOL)
}

/// Certifies `C_TS(K)`: bisection on `r` exploiting monotone feasibility.
/// The upper bracket is found by doubling from 1 (capped at 2^16); the
/// certificate carries the witness at the feasible endpoint.
pub fn compute_cts(t: &Tableau, k: f64) -> SspCertificate {
    const PROBE: f64 = 1e-8;
    const CAP: f64 = 65536.0;
    if !ts_feasible_fast(t, PROBE, k) {
        let (_, witness) = ts_feasible(t, 0.0, k);
        return SspCertificate {
            k,
            r_max: 0.0,
            witness,
            tolerance: FEAS_TOL,
            feasible_at_zero_plus: false,
        };
    }
    let mut lo = PROBE;
    let mut hi = 1.0;
    while ts_feasible_fast(t, hi, k) {
        lo = hi;
        hi *= 2.0;
        if hi > CAP {
            let (_, witness) = ts_feasible(t, CAP, k);
            return SspCertificate {
                k,
                r_max: CAP,
                witness,
                tolerance: FEAS_TOL,
                feasible_at_zero_plus: true,
            };
        }
    }
    while hi - lo > BISECT_TOL * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ts_feasible_fast(t, mid, k) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, witness) = ts_feasible(t, lo, k);
    SspCertificate {
        k,
        r_max: lo,
        witness,
        tolerance: FEAS_TOL,
        feasible_at_zero_plus: true,
    }
}

/// Result of [`compute_csd`].
#[derive(Debug, Clone, Copy)]
pub struct SdCoefficient {
    pub r_max: f64,
    pub rhat_max: f64,
    /// `min(r_max, ktilde * rhat_max)` at the best pair found.
    pub csd: f64,
}

fn sd_feasible(t: &Tableau, r: f64, rhat: f64) -> bool {
    if r == 0.0 && rhat == 0.0 {
        return true;
    }
    let bf = t.block_form().expect("tableau passed structural validation");
    let n = bf.n();
    let m = SquareMat::identity(n)
        .add_scaled(r, &bf.smat)
        .add_scaled(rhat, &bf.shat);
    let e = vec![1.0; n];
    m.unit_lower_solve_vec(&e)
        .into_iter()
        .all(|v| v >= -FEAS_TOL)
        && m.unit_lower_solve_mat(&bf.smat)
            .entries()
            .iter()
            .all(|&v| v >= -FEAS_TOL)
        && m.unit_lower_solve_mat(&bf.shat)
            .entries()
            .iter()
            .all(|&v| v >= -FEAS_TOL)
}

/// Second-derivative coefficient `C_SD = min(r_max, ktilde * rhat_max)` over
/// the joint region. The paper-style joint maximization is underdetermined,
/// so `rhat` is swept on a log grid and `r` bisected for each value; the pair
/// maximizing the min is reported.
pub fn compute_csd(t: &Tableau, ktilde: f64) -> SdCoefficient {
    let mut best = SdCoefficient {
        r_max: 0.0,
        rhat_max: 0.0,
        csd: 0.0,
    };
    let n_grid = 160;
    for i in 0..n_grid {
        // rhat from 1e-6 to 1e3
        let rhat = 10f64.powf(-6.0 + 9.0 * i as f64 / (n_grid - 1) as f64);
        if !sd_feasible(t, 1e-8, rhat) {
            continue;
        }
        let mut lo = 1e-8;
        let mut hi = 1.0;
        while sd_feasible(t, hi, rhat) && hi < 65536.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-9 * lo.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if sd_feasible(t, mid, rhat) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let csd = lo.min(ktilde * rhat);
        if csd > best.csd {
            best = SdCoefficient {
                r_max: lo,
                rhat_max: rhat,
                csd,
            };
        }
    }
    best
}

/// Taylor-series ratio guaranteed by a second-derivative ratio `ktilde`:
/// `K = ktilde (sqrt(ktilde^2 + 2) - ktilde)`, always in (0, 1).
pub fn k_from_ktilde(ktilde: f64) -> f64 {
    ktilde * ((ktilde * ktilde + 2.0).sqrt() - ktilde)
}

/// Effective coefficient: `C_TS` normalized by function evaluations per step
/// (`2s` in general, `s + 1` for M3 methods with their single
/// second-derivative evaluation).
pub fn effective_coefficient(cts: f64, t: &Tableau) -> f64 {
    let s = t.stages() as f64;
    match t.variant() {
        crate::tableau::Variant::M3 => cts / (s + 1.0),
        _ => cts / (2.0 * s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods;
    use crate::tableau::Variant;

    fn fe() -> Tableau {
        methods::lookup("FE").unwrap().tableau
    }

    #[test]
    fn forward_euler_radius_is_one() {
        let (ok, _) = ts_feasible(&fe(), 1.0, 1.0);
        assert!(ok);
        let (ok, _) = ts_feasible(&fe(), 1.0 + 1e-6, 1.0);
        assert!(!ok);
        let cert = compute_cts(&fe(), 1.0);
        assert!((cert.r_max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_radius_always_feasible() {
        let (ok, d) = ts_feasible(&fe(), 0.0, 1.0);
        assert!(ok);
        // R = I, P = Q = 0
        assert!((d.r_mat[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(d.p_mat.min_entry(), 0.0);
        assert_eq!(d.q_mat.min_entry(), 0.0);
    }

    #[test]
    fn forward_euler_half_radius_decomposition() {
        let d = canonical_decomposition(&fe(), 0.5, 0.5);
        // P row 2 = [1/2, 0]; R e = [1, 1/2]
        assert!((d.p_mat[(1, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(d.p_mat[(1, 1)], 0.0);
        let re = d.r_mat.mul_vec(&[1.0, 1.0]);
        assert!((re[0] - 1.0).abs() < 1e-15);
        assert!((re[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_stage_fourth_order_not_ssp_ts() {
        let t = methods::lookup("MDRK2s4p").unwrap().tableau;
        for k in [0.5, 1.0, 2.0] {
            let (ok, _) = ts_feasible(&t, 0.3, k);
            assert!(!ok);
            let cert = compute_cts(&t, k);
            assert_eq!(cert.r_max, 0.0, "K = {k}");
            assert!(!cert.feasible_at_zero_plus);
        }
        // but it is SSP-SD
        let sd = compute_csd(&t, 1.0);
        assert!(sd.csd > 0.1, "csd = {}", sd.csd);
    }

    #[test]
    fn k_from_ktilde_values() {
        assert!((k_from_ktilde(1.0) - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((k_from_ktilde(1e8) - 1.0).abs() < 1e-7);
        assert!((k_from_ktilde(0.1) - 0.1317744688) < 1e-9);
    }

    #[test]
    fn effective_coefficient_normalization() {
        let m3 = methods::lookup("M3(3,4,1)").unwrap().tableau;
        assert!((effective_coefficient(1.0, &m3) - 0.25).abs() < 1e-15);
        let m2 = methods::lookup("M2(4,4,inf)").unwrap().tableau;
        assert!((effective_coefficient(4.0, &m2) - 0.5).abs() < 1e-15);
        let ext = m2.clone().with_variant(Variant::External);
        assert!((effective_coefficient(4.0, &ext) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forward_euler_csd_reduces_to_fe_radius() {
        let sd = compute_csd(&fe(), 1.0);
        assert!((sd.r_max - 1.0).abs() < 1e-6);
        assert!((sd.csd - 1.0).abs() < 1e-6);
    }
}
