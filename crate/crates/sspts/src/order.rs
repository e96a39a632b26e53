//! Order conditions for explicit two-derivative multistage methods, through
//! order six, plus the stage-order residuals `tau2` and `tau3`.
//!
//! Each condition couples the weights `(b, bhat)` to elementary combinations
//! of `A`, `Ahat`, `c = A e`, and `chat = Ahat e`; `*` below denotes the
//! componentwise product. Targets are exact rationals, stored as
//! numerator/denominator and converted to floating point once.
//!
//! Condition counts per order are 1, 1, 2, 4, 9, 20 (one per rooted tree of
//! that order). The ordering within each order is fixed: it follows the
//! conventional tabulation for this method class, with the quadruple
//! `1/48, 1/60, 1/90, 1/180` at positions 9-11 and 13 of the sixth-order
//! list and `1/720` last.

use crate::tableau::Tableau;
use thiserror::Error;

/// One evaluated order condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResidual {
    /// Order this condition belongs to (1..=6).
    pub order: u8,
    /// 1-based index within that order's list.
    pub index: usize,
    pub lhs: f64,
    /// Target value, an exact rational converted to f64.
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("order {0} out of supported range 1..=6")]
    UnsupportedOrder(u8),
}

/// Scratch context: the tableau plus the composite vectors shared by many
/// conditions.
struct Ctx<'t> {
    t: &'t Tableau,
    e: Vec<f64>,
    c: Vec<f64>,
    ch: Vec<f64>,
    c2: Vec<f64>,
    c3: Vec<f64>,
    c4: Vec<f64>,
    c5: Vec<f64>,
    ac: Vec<f64>,
    ach: Vec<f64>,
    ahc: Vec<f64>,
    ahch: Vec<f64>,
    ac2: Vec<f64>,
    ac3: Vec<f64>,
    ac4: Vec<f64>,
    ahc2: Vec<f64>,
    ahc3: Vec<f64>,
    a2c: Vec<f64>,
    a2c2: Vec<f64>,
}

fn had(vs: &[&[f64]]) -> Vec<f64> {
    let n = vs[0].len();
    let mut out = vec![1.0; n];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o *= x;
        }
    }
    out
}

impl<'t> Ctx<'t> {
    fn new(t: &'t Tableau) -> Self {
        let s = t.stages();
        let e = vec![1.0; s];
        let (c, ch) = t.abscissae();
        let mul = |m: &dyn Fn(usize, usize) -> f64, v: &[f64]| -> Vec<f64> {
            (0..s)
                .map(|i| (0..s).map(|j| m(i, j) * v[j]).sum())
                .collect()
        };
        let a_of = |v: &[f64]| mul(&|i, j| t.a(i, j), v);
        let ah_of = |v: &[f64]| mul(&|i, j| t.ahat(i, j), v);
        let c2 = had(&[&c, &c]);
        let c3 = had(&[&c2, &c]);
        let c4 = had(&[&c3, &c]);
        let c5 = had(&[&c4, &c]);
        let ac = a_of(&c);
        let ach = a_of(&ch);
        let ahc = ah_of(&c);
        let ahch = ah_of(&ch);
        let ac2 = a_of(&c2);
        let ac3 = a_of(&c3);
        let ac4 = a_of(&c4);
        let ahc2 = ah_of(&c2);
        let ahc3 = ah_of(&c3);
        let a2c = a_of(&ac);
        let a2c2 = a_of(&ac2);
        Ctx {
            t,
            e,
            c,
            ch,
            c2,
            c3,
            c4,
            c5,
            ac,
            ach,
            ahc,
            ahch,
            ac2,
            ac3,
            ac4,
            ahc2,
            ahc3,
            a2c,
            a2c2,
        }
    }

    fn a(&self, v: &[f64]) -> Vec<f64> {
        let s = self.t.stages();
        (0..s)
            .map(|i| (0..s).map(|j| self.t.a(i, j) * v[j]).sum())
            .collect()
    }

    fn ah(&self, v: &[f64]) -> Vec<f64> {
        let s = self.t.stages();
        (0..s)
            .map(|i| (0..s).map(|j| self.t.ahat(i, j) * v[j]).sum())
            .collect()
    }

    fn b(&self, v: &[f64]) -> f64 {
        self.t.b().iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn bh(&self, v: &[f64]) -> f64 {
        self.t.bhat().iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

struct Condition {
    order: u8,
    /// target is 1/den
    den: i64,
    eval: fn(&Ctx) -> f64,
}

const fn c(order: u8, den: i64, eval: fn(&Ctx) -> f64) -> Condition {
    Condition { order, den, eval }
}

#[rustfmt::skip]
static CONDITIONS: &[Condition] = &[
    // ----- order 1
    c(1, 1, |x| x.b(&x.e)),
    // ----- order 2
    c(2, 2, |x| x.b(&x.c) + x.bh(&x.e)),
    // ----- order 3
    c(3, 3, |x| x.b(&x.c2) + 2.0 * x.bh(&x.c)),
    c(3, 6, |x| x.b(&x.ac) + x.b(&x.ch) + x.bh(&x.c)),
    // ----- order 4
    c(4, 4, |x| x.b(&x.c3) + 3.0 * x.bh(&x.c2)),
    c(4, 8, |x| x.b(&had(&[&x.c, &x.ac])) + x.b(&had(&[&x.c, &x.ch])) + x.bh(&x.ac)
        + x.bh(&x.c2) + x.bh(&x.ch)),
    c(4, 12, |x| x.b(&x.ac2) + 2.0 * x.b(&x.ahc) + x.bh(&x.c2)),
    c(4, 24, |x| x.b(&x.a2c) + x.b(&x.ach) + x.b(&x.ahc) + x.bh(&x.ac) + x.bh(&x.ch)),
    // ----- order 5
    c(5, 5, |x| x.b(&x.c4) + 4.0 * x.bh(&x.c3)),
    c(5, 10, |x| x.b(&had(&[&x.c2, &x.ac])) + x.b(&had(&[&x.c2, &x.ch]))
        + 2.0 * x.bh(&had(&[&x.c, &x.ac])) + 2.0 * x.bh(&had(&[&x.c, &x.ch])) + x.bh(&x.c3)),
    c(5, 15, |x| x.b(&had(&[&x.c, &x.ac2])) + 2.0 * x.b(&had(&[&x.c, &x.ahc]))
        + x.bh(&x.ac2) + 2.0 * x.bh(&x.ahc) + x.bh(&x.c3)),
    c(5, 30, |x| x.b(&had(&[&x.c, &x.a2c])) + x.b(&had(&[&x.c, &x.ach]))
        + x.b(&had(&[&x.c, &x.ahc])) + x.bh(&x.a2c) + x.bh(&had(&[&x.c, &x.ac]))
        + x.bh(&x.ach) + x.bh(&x.ahc) + x.bh(&had(&[&x.c, &x.ch]))),
    c(5, 20, |x| 2.0 * x.b(&had(&[&x.ac, &x.ch])) + x.b(&had(&[&x.ac, &x.ac]))
        + x.b(&had(&[&x.ch, &x.ch])) + 2.0 * x.bh(&had(&[&x.c, &x.ac]))
        + 2.0 * x.bh(&had(&[&x.c, &x.ch]))),
    c(5, 20, |x| x.b(&x.ac3) + 3.0 * x.b(&x.ahc2) + x.bh(&x.c3)),
    c(5, 40, |x| x.b(&x.a(&had(&[&x.c, &x.ac]))) + x.b(&x.a(&had(&[&x.c, &x.ch])))
        + x.b(&x.ah(&x.ac)) + x.b(&x.ahc2) + x.b(&x.ahch) + x.bh(&had(&[&x.c, &x.ac]))
        + x.bh(&had(&[&x.c, &x.ch]))),
    c(5, 60, |x| x.b(&x.a2c2) + 2.0 * x.b(&x.a(&x.ahc)) + x.b(&x.ahc2) + x.bh(&x.ac2)
        + 2.0 * x.bh(&x.ahc)),
    c(5, 120, |x| x.b(&x.a(&x.a2c)) + x.b(&x.a(&x.ach)) + x.b(&x.a(&x.ahc))
        + x.b(&x.ah(&x.ac)) + x.b(&x.ahch) + x.bh(&x.a2c) + x.bh(&x.ach) + x.bh(&x.ahc)),
    // ----- order 6
    c(6, 6, |x| x.b(&x.c5) + 5.0 * x.bh(&x.c4)),
    c(6, 12, |x| x.b(&had(&[&x.c3, &x.ac])) + x.b(&had(&[&x.c3, &x.ch]))
        + 3.0 * x.bh(&had(&[&x.c2, &x.ac])) + 3.0 * x.bh(&had(&[&x.c2, &x.ch])) + x.bh(&x.c4)),
    c(6, 18, |x| x.b(&had(&[&x.c2, &x.ac2])) + 2.0 * x.b(&had(&[&x.c2, &x.ahc]))
        + 2.0 * x.bh(&had(&[&x.c, &x.ac2])) + 4.0 * x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&x.c4)),
    c(6, 24, |x| x.b(&had(&[&x.c, &x.ac3])) + 3.0 * x.b(&had(&[&x.c, &x.ahc2]))
        + x.bh(&x.ac3) + 3.0 * x.bh(&x.ahc2) + x.bh(&x.c4)),
    c(6, 30, |x| x.b(&x.ac4) + 4.0 * x.b(&x.ahc3) + x.bh(&x.c4)),
    c(6, 36, |x| x.b(&had(&[&x.c2, &x.a2c])) + x.b(&had(&[&x.c2, &x.ach]))
        + x.b(&had(&[&x.c2, &x.ahc])) + 2.0 * x.bh(&had(&[&x.c, &x.a2c]))
        + x.bh(&had(&[&x.c2, &x.ac])) + 2.0 * x.bh(&had(&[&x.c, &x.ach]))
        + 2.0 * x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&had(&[&x.c2, &x.ch]))),
    c(6, 72, |x| x.b(&had(&[&x.c, &x.a2c2])) + 2.0 * x.b(&had(&[&x.c, &x.a(&x.ahc)]))
        + x.b(&had(&[&x.c, &x.ahc2])) + x.bh(&x.a2c2) + 2.0 * x.bh(&x.a(&x.ahc))
        + x.bh(&had(&[&x.c, &x.ac2])) + 2.0 * x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&x.ahc2)),
    c(6, 120, |x| x.b(&x.a(&x.ac3)) + 3.0 * x.b(&x.a(&x.ahc2)) + x.b(&x.ahc3)
        + x.bh(&x.ac3) + 3.0 * x.bh(&x.ahc2)),
    c(6, 48, |x| x.b(&had(&[&x.c, &x.a(&had(&[&x.c, &x.ac]))]))
        + x.b(&had(&[&x.c, &x.a(&had(&[&x.c, &x.ch]))])) + x.b(&had(&[&x.c, &x.ah(&x.ac)]))
        + x.b(&had(&[&x.c, &x.ahc2])) + x.b(&had(&[&x.c, &x.ahch]))
        + x.bh(&x.a(&had(&[&x.c, &x.ac]))) + x.bh(&had(&[&x.c2, &x.ac]))
        + x.bh(&x.a(&had(&[&x.c, &x.ch]))) + x.bh(&x.ah(&x.ac)) + x.bh(&x.ahc2)
        + x.bh(&x.ahch) + x.bh(&had(&[&x.c2, &x.ch]))),
    c(6, 60, |x| x.b(&x.a(&had(&[&x.c2, &x.ac]))) + x.b(&x.a(&had(&[&x.c2, &x.ch])))
        + 2.0 * x.b(&x.ah(&had(&[&x.c, &x.ac]))) + 2.0 * x.b(&x.ah(&had(&[&x.c, &x.ch])))
        + x.b(&x.ahc3) + x.bh(&had(&[&x.c2, &x.ac])) + x.bh(&had(&[&x.c2, &x.ch]))),
    c(6, 90, |x| x.b(&x.a(&had(&[&x.c, &x.ac2]))) + 2.0 * x.b(&x.a(&had(&[&x.c, &x.ahc])))
        + x.b(&x.ah(&x.ac2)) + 2.0 * x.b(&x.ah(&x.ahc)) + x.b(&x.ahc3)
        + x.bh(&had(&[&x.c, &x.ac2])) + 2.0 * x.bh(&had(&[&x.c, &x.ahc]))),
    c(6, 144, |x| x.b(&had(&[&x.c, &x.a(&x.a2c)])) + x.b(&had(&[&x.c, &x.a(&x.ach)]))
        + x.b(&had(&[&x.c, &x.a(&x.ahc)])) + x.b(&had(&[&x.c, &x.ah(&x.ac)]))
        + x.b(&had(&[&x.c, &x.ahch])) + x.bh(&x.a(&x.a2c)) + x.bh(&had(&[&x.c, &x.a2c]))
        + x.bh(&x.a(&x.ach)) + x.bh(&x.a(&x.ahc)) + x.bh(&had(&[&x.c, &x.ach]))
        + x.bh(&x.ah(&x.ac)) + x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&x.ahch)),
    c(6, 180, |x| x.b(&x.a(&had(&[&x.c, &x.a2c]))) + x.b(&x.a(&had(&[&x.c, &x.ach])))
        + x.b(&x.a(&had(&[&x.c, &x.ahc]))) + x.b(&x.ah(&x.a2c))
        + x.b(&x.ah(&had(&[&x.c, &x.ac]))) + x.b(&x.ah(&x.ach)) + x.b(&x.ah(&x.ahc))
        + x.b(&x.ah(&had(&[&x.c, &x.ch]))) + x.bh(&had(&[&x.c, &x.a2c]))
        + x.bh(&had(&[&x.c, &x.ach])) + x.bh(&had(&[&x.c, &x.ahc]))),
    c(6, 240, |x| x.b(&x.a(&x.a(&had(&[&x.c, &x.ac])))) + x.b(&x.a(&x.a(&had(&[&x.c, &x.ch]))))
        + x.b(&x.a(&x.ah(&x.ac))) + x.b(&x.a(&x.ahc2)) + x.b(&x.a(&x.ahch))
        + x.b(&x.ah(&had(&[&x.c, &x.ac]))) + x.b(&x.ah(&had(&[&x.c, &x.ch])))
        + x.bh(&x.a(&had(&[&x.c, &x.ac]))) + x.bh(&x.a(&had(&[&x.c, &x.ch])))
        + x.bh(&x.ah(&x.ac)) + x.bh(&x.ahc2) + x.bh(&x.ahch)),
    c(6, 360, |x| x.b(&x.a(&x.a2c2)) + 2.0 * x.b(&x.a(&x.a(&x.ahc))) + x.b(&x.a(&x.ahc2))
        + x.b(&x.ah(&x.ac2)) + 2.0 * x.b(&x.ah(&x.ahc)) + x.bh(&x.a2c2)
        + 2.0 * x.bh(&x.a(&x.ahc)) + x.bh(&x.ahc2)),
    c(6, 24, |x| 2.0 * x.b(&had(&[&x.c, &x.ac, &x.ch])) + x.b(&had(&[&x.c, &x.ac, &x.ac]))
        + x.b(&had(&[&x.c, &x.ch, &x.ch])) + 2.0 * x.bh(&had(&[&x.c2, &x.ac]))
        + 2.0 * x.bh(&had(&[&x.ac, &x.ch])) + x.bh(&had(&[&x.ac, &x.ac]))
        + 2.0 * x.bh(&had(&[&x.c2, &x.ch])) + x.bh(&had(&[&x.ch, &x.ch]))),
    c(6, 72, |x| x.b(&had(&[&x.ac, &x.a2c])) + x.b(&had(&[&x.a2c, &x.ch]))
        + x.b(&had(&[&x.ac, &x.ach])) + x.b(&had(&[&x.ac, &x.ahc]))
        + x.b(&had(&[&x.ach, &x.ch])) + x.b(&had(&[&x.ch, &x.ahc]))
        + x.bh(&had(&[&x.c, &x.a2c])) + 2.0 * x.bh(&had(&[&x.ac, &x.ch]))
        + x.bh(&had(&[&x.ac, &x.ac])) + x.bh(&had(&[&x.c, &x.ach]))
        + x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&had(&[&x.ch, &x.ch]))),
    c(6, 36, |x| x.b(&had(&[&x.ac, &x.ac2])) + 2.0 * x.b(&had(&[&x.ac, &x.ahc]))
        + x.b(&had(&[&x.ac2, &x.ch])) + 2.0 * x.b(&had(&[&x.ch, &x.ahc]))
        + x.bh(&had(&[&x.c2, &x.ac])) + x.bh(&had(&[&x.c, &x.ac2]))
        + 2.0 * x.bh(&had(&[&x.c, &x.ahc])) + x.bh(&had(&[&x.c2, &x.ch]))),
    c(6, 120, |x| 2.0 * x.b(&x.a(&had(&[&x.ac, &x.ch]))) + x.b(&x.a(&had(&[&x.ac, &x.ac])))
        + x.b(&x.a(&had(&[&x.ch, &x.ch]))) + 2.0 * x.b(&x.ah(&had(&[&x.c, &x.ac])))
        + 2.0 * x.b(&x.ah(&had(&[&x.c, &x.ch]))) + 2.0 * x.bh(&had(&[&x.ac, &x.ch]))
        + x.bh(&had(&[&x.ac, &x.ac])) + x.bh(&had(&[&x.ch, &x.ch]))),
    c(6, 720, |x| x.b(&x.a(&x.a(&x.a2c))) + x.b(&x.a(&x.a(&x.ach))) + x.b(&x.a(&x.a(&x.ahc)))
        + x.b(&x.a(&x.ah(&x.ac))) + x.b(&x.a(&x.ahch)) + x.b(&x.ah(&x.a2c))
        + x.b(&x.ah(&x.ach)) + x.b(&x.ah(&x.ahc)) + x.bh(&x.a(&x.a2c)) + x.bh(&x.a(&x.ach))
        + x.bh(&x.a(&x.ahc)) + x.bh(&x.ah(&x.ac)) + x.bh(&x.ahch)),
];

/// Evaluates every condition of order exactly `p`.
pub fn residuals(t: &Tableau, p: u8) -> Result<Vec<ConditionResidual>, OrderError> {
    if p == 0 || p > 6 {
        return Err(OrderError::UnsupportedOrder(p));
    }
    let ctx = Ctx::new(t);
    let mut out = Vec::new();
    let mut index = 0;
    for cond in CONDITIONS.iter().filter(|c| c.order == p) {
        index += 1;
        let lhs = (cond.eval)(&ctx);
        let rhs = 1.0 / cond.den as f64;
        out.push(ConditionResidual {
            order: p,
            index,
            lhs,
            rhs,
            residual: lhs - rhs,
        });
    }
    Ok(out)
}

/// All conditions of orders `1..=p`, in order.
pub fn residuals_up_to(t: &Tableau, p: u8) -> Result<Vec<ConditionResidual>, OrderError> {
    let mut out = Vec::new();
    for q in 1..=p {
        out.extend(residuals(t, q)?);
    }
    Ok(out)
}

/// Largest order P <= 6 with every residual of orders <= P below `tol`.
/// Returns 0 if even consistency (b^T e = 1) fails.
pub fn order_of(t: &Tableau, tol: f64) -> u8 {
    let mut achieved = 0;
    for p in 1..=6u8 {
        let ok = residuals(t, p)
            .expect("p in range")
            .iter()
            .all(|r| r.residual.abs() < tol);
        if ok {
            achieved = p;
        } else {
            break;
        }
    }
    achieved
}

/// Stage-order-two residual `tau2 = A c + chat - c^2 / 2` (componentwise
/// square). Methods of order five or more must satisfy `tau2 = 0`.
pub fn tau2_residual(t: &Tableau) -> Vec<f64> {
    let (c, ch) = t.abscissae();
    let s = t.stages();
    (0..s)
        .map(|i| {
            let ac: f64 = (0..s).map(|j| t.a(i, j) * c[j]).sum();
            ac + ch[i] - 0.5 * c[i] * c[i]
        })
        .collect()
}

/// Stage-order-three residual `tau3 = A c^2 + Ahat c - c^3 / 3`. Explicit
/// two-derivative methods cannot drive this to zero (stage order is capped at
/// two), which is what bars order seven.
pub fn tau3_residual(t: &Tableau) -> Vec<f64> {
    let (c, _) = t.abscissae();
    let s = t.stages();
    (0..s)
        .map(|i| {
            let ac2: f64 = (0..s).map(|j| t.a(i, j) * c[j] * c[j]).sum();
            let ahc: f64 = (0..s).map(|j| t.ahat(i, j) * c[j]).sum();
            ac2 + ahc - c[i] * c[i] * c[i] / 3.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods;
    use crate::tableau::Variant;

    fn fe() -> Tableau {
        methods::lookup("FE").unwrap().tableau
    }

    fn ts() -> Tableau {
        methods::lookup("TS").unwrap().tableau
    }

    #[test]
    fn condition_counts() {
        for (p, n) in [(1u8, 1usize), (2, 1), (3, 2), (4, 4), (5, 9), (6, 20)] {
            assert_eq!(residuals(&fe(), p).unwrap().len(), n);
        }
        assert!(residuals(&fe(), 0).is_err());
        assert!(residuals(&fe(), 7).is_err());
    }

    #[test]
    fn last_p6_target_is_1_over_720() {
        let rs = residuals(&fe(), 6).unwrap();
        assert_eq!(rs.last().unwrap().rhs, 1.0 / 720.0);
    }

    #[test]
    fn forward_euler_residuals() {
        let r1 = residuals(&fe(), 1).unwrap();
        assert_eq!(r1[0].residual, 0.0);
        let r2 = residuals(&fe(), 2).unwrap();
        assert!((r2[0].residual + 0.5).abs() < 1e-15);
        assert_eq!(order_of(&fe(), 1e-10), 1);
    }

    #[test]
    fn taylor_series_is_order_two() {
        assert_eq!(order_of(&ts(), 1e-10), 2);
        // p=3 fails: b^T c + bhat^T e = 1/2 exactly, b^T c^2 + 2 bhat^T c = 0
        let r3 = residuals(&ts(), 3).unwrap();
        assert!((r3[0].residual + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_residuals_forward_euler() {
        assert_eq!(tau2_residual(&fe()), vec![0.0]);
        assert_eq!(tau3_residual(&fe()), vec![0.0]);
    }

    #[test]
    fn tau3_first_component_vanishes_for_explicit() {
        let t = methods::lookup("M3(8,6,1)").unwrap().tableau;
        let tau3 = tau3_residual(&t);
        assert_eq!(tau3[0], 0.0);
        // stage order is capped at two: tau3 cannot vanish identically
        let max = tau3.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max > 1e-6);
    }

    #[test]
    fn registry_m2_m3_methods_have_stage_order_two() {
        for name in ["M2(4,5,1)", "M3(8,6,1)", "M3(3,4,1)", "M2(4,4,inf)"] {
            let t = methods::lookup(name).unwrap().tableau;
            let max = tau2_residual(&t).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max < 1e-12, "{name}: tau2 = {max}");
        }
    }

    /// The three fifth-order conditions with targets 1/5, 1/10, 1/20 satisfy
    /// (1/4) res#1 - res#2 + res#3 = b^T tau2^2 for any tableau; in the fixed
    /// ordering used here those are indices 1, 2, 5.
    #[test]
    fn stage_order_identity_p5() {
        let t = Tableau::from_lower(
            Variant::M1,
            4,
            &[0.31, 0.17, 0.45, 0.08, 0.26, 0.33],
            &[0.12, 0.07, 0.21, 0.02, 0.14, 0.09],
            &[0.21, 0.34, 0.19, 0.26],
            &[0.05, 0.11, 0.03, 0.07],
            1.0,
        )
        .unwrap();
        let r5 = residuals(&t, 5).unwrap();
        let lhs = 0.25 * r5[0].residual - r5[1].residual + r5[4].residual;
        let tau2 = tau2_residual(&t);
        let rhs: f64 = t
            .b()
            .iter()
            .zip(&tau2)
            .map(|(b, tau)| b * tau * tau)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12, "identity off by {}", lhs - rhs);
    }
}
