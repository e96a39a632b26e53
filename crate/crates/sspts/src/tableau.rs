//! Coefficient data model for explicit two-derivative multistage methods.
//!
//! A method is stored in Butcher-style form `(A, Ahat, b, bhat)` with both
//! stage matrices strictly lower triangular. The equivalent block form pads
//! the output weights into `(s+1) x (s+1)` matrices
//!
//! ```text
//! S = | A   0 |        Shat = | Ahat   0 |
//!     | b^T 0 |               | bhat^T 0 |
//! ```
//!
//! which is what all SSP feasibility checks operate on.

use crate::linalg::SquareMat;
use thiserror::Error;

/// Largest supported stage count. Reference methods stay well below this;
/// the cap keeps all dense algebra trivially fast.
pub const MAX_STAGES: usize = 16;

/// Entries in `[-NEG_CLAMP, 0)` are treated as zero during validation, so
/// 16-digit printed coefficients do not fail on roundoff.
pub const NEG_CLAMP: f64 = 1e-14;

/// Structural class of a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// General form, no simplifications.
    M1,
    /// Constrained to stage order two (tau2 = 0).
    M2,
    /// Stage order two and a single second-derivative evaluation: `Ahat` is
    /// nonzero only in column 1 and `bhat` only in entry 1.
    M3,
    /// Loaded from a file with no declared structure.
    External,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
            Variant::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "M1" | "m1" => Some(Variant::M1),
            "M2" | "m2" => Some(Variant::M2),
            "M3" | "m3" => Some(Variant::M3),
            "external" | "External" => Some(Variant::External),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("stage count {0} out of range (1..={MAX_STAGES})")]
    BadStageCount(usize),
    #[error("matrix {name} has {rows} rows, expected {expected}")]
    BadMatrixShape {
        name: &'static str,
        rows: usize,
        expected: usize,
    },
    #[error("row {row} of {name} has {cols} entries, expected {expected}")]
    BadRowLength {
        name: &'static str,
        row: usize,
        cols: usize,
        expected: usize,
    },
    #[error("vector {name} has length {len}, expected {expected}")]
    BadVectorLength {
        name: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("matrix {name} is not strictly lower triangular at ({i},{j}): {value}")]
    NotExplicit {
        name: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
}

/// Butcher-style coefficient record of an explicit two-derivative method.
///
/// Values are immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    s: usize,
    a: Vec<f64>,
    ahat: Vec<f64>,
    b: Vec<f64>,
    bhat: Vec<f64>,
    variant: Variant,
    design_k: f64,
}

impl Tableau {
    /// Builds a tableau from row-major coefficient rows. Only shape and the
    /// stage-count cap are enforced here; structural checks (explicitness,
    /// nonnegativity, variant sparsity) live in [`Tableau::validate`].
    pub fn from_parts(
        variant: Variant,
        a: Vec<Vec<f64>>,
        ahat: Vec<Vec<f64>>,
        b: Vec<f64>,
        bhat: Vec<f64>,
        design_k: f64,
    ) -> Result<Tableau, TableauError> {
        let s = b.len();
        if s == 0 || s > MAX_STAGES {
            return Err(TableauError::BadStageCount(s));
        }
        let flatten = |name: &'static str, rows: &[Vec<f64>]| -> Result<Vec<f64>, TableauError> {
            if rows.len() != s {
                return Err(TableauError::BadMatrixShape {
                    name,
                    rows: rows.len(),
                    expected: s,
                });
            }
            let mut flat = Vec::with_capacity(s * s);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != s {
                    return Err(TableauError::BadRowLength {
                        name,
                        row: i + 1,
                        cols: row.len(),
                        expected: s,
                    });
                }
                flat.extend_from_slice(row);
            }
            Ok(flat)
        };
        let a = flatten("A", &a)?;
        let ahat = flatten("Ahat", &ahat)?;
        if bhat.len() != s {
            return Err(TableauError::BadVectorLength {
                name: "bhat",
                len: bhat.len(),
                expected: s,
            });
        }
        Ok(Tableau {
            s,
            a,
            ahat,
            b,
            bhat,
            variant,
            design_k,
        })
    }

    /// Convenience constructor from the strictly lower triangular entries,
    /// listed row by row: `a_21, a_31, a_32, a_41, ...`.
    pub fn from_lower(
        variant: Variant,
        s: usize,
        a_lower: &[f64],
        ahat_lower: &[f64],
        b: &[f64],
        bhat: &[f64],
        design_k: f64,
    ) -> Result<Tableau, TableauError> {
        let need = s * (s - 1) / 2;
        if a_lower.len() != need {
            return Err(TableauError::BadVectorLength {
                name: "A (lower entries)",
                len: a_lower.len(),
                expected: need,
            });
        }
        if ahat_lower.len() != need {
            return Err(TableauError::BadVectorLength {
                name: "Ahat (lower entries)",
                len: ahat_lower.len(),
                expected: need,
            });
        }
        let unpack = |flat: &[f64]| {
            let mut rows = vec![vec![0.0; s]; s];
            let mut k = 0;
            for i in 1..s {
                for j in 0..i {
                    rows[i][j] = flat[k];
                    k += 1;
                }
            }
            rows
        };
        Tableau::from_parts(
            variant,
            unpack(a_lower),
            unpack(ahat_lower),
            b.to_vec(),
            bhat.to_vec(),
            design_k,
        )
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn design_k(&self) -> f64 {
        self.design_k
    }

    pub fn with_variant(mut self, variant: Variant) -> Tableau {
        self.variant = variant;
        self
    }

    pub fn with_design_k(mut self, k: f64) -> Tableau {
        self.design_k = k;
        self
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.s + j]
    }

    pub fn ahat(&self, i: usize, j: usize) -> f64 {
        self.ahat[i * self.s + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bhat(&self) -> &[f64] {
        &self.bhat
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        (0..self.s)
            .map(|i| self.a[i * self.s..(i + 1) * self.s].to_vec())
            .collect()
    }

    pub fn ahat_rows(&self) -> Vec<Vec<f64>> {
        (0..self.s)
            .map(|i| self.ahat[i * self.s..(i + 1) * self.s].to_vec())
            .collect()
    }

    /// Abscissae `c = A e` and `chat = Ahat e` (row sums).
    pub fn abscissae(&self) -> (Vec<f64>, Vec<f64>) {
        let s = self.s;
        let mut c = vec![0.0; s];
        let mut chat = vec![0.0; s];
        for i in 0..s {
            for j in 0..s {
                c[i] += self.a(i, j);
                chat[i] += self.ahat(i, j);
            }
        }
        (c, chat)
    }

    /// Assembles the `(s+1) x (s+1)` block form. Rejects tableaus whose stage
    /// matrices are not strictly lower triangular.
    pub fn block_form(&self) -> Result<BlockForm, TableauError> {
        for (name, m) in [("A", &self.a), ("Ahat", &self.ahat)] {
            for i in 0..self.s {
                for j in i..self.s {
                    let v = m[i * self.s + j];
                    if v != 0.0 {
                        return Err(TableauError::NotExplicit {
                            name,
                            i: i + 1,
                            j: j + 1,
                            value: v,
                        });
                    }
                }
            }
        }
        let n = self.s + 1;
        let mut smat = SquareMat::zeros(n);
        let mut shat = SquareMat::zeros(n);
        for i in 0..self.s {
            for j in 0..self.s {
                smat[(i, j)] = self.a(i, j);
                shat[(i, j)] = self.ahat(i, j);
            }
        }
        for j in 0..self.s {
            smat[(self.s, j)] = self.b[j];
            shat[(self.s, j)] = self.bhat[j];
        }
        Ok(BlockForm { smat, shat })
    }

    /// Copy with entries in `[-NEG_CLAMP, 0)` snapped to zero.
    pub fn clamped(&self) -> Tableau {
        let clamp = |v: &f64| {
            if *v < 0.0 && *v >= -NEG_CLAMP {
                0.0
            } else {
                *v
            }
        };
        Tableau {
            s: self.s,
            a: self.a.iter().map(clamp).collect(),
            ahat: self.ahat.iter().map(clamp).collect(),
            b: self.b.iter().map(clamp).collect(),
            bhat: self.bhat.iter().map(clamp).collect(),
            variant: self.variant,
            design_k: self.design_k,
        }
    }

    /// Structural diagnostics: explicitness, negativity beyond the clamp
    /// tolerance, and (for declared M3 tableaus) sparsity-pattern violations.
    /// Pure report; nothing is rejected here.
    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        for i in 0..self.s {
            for j in i..self.s {
                if self.a(i, j) != 0.0 {
                    d.explicitness.push(EntryRef::new("A", i, j, self.a(i, j)));
                }
                if self.ahat(i, j) != 0.0 {
                    d.explicitness
                        .push(EntryRef::new("Ahat", i, j, self.ahat(i, j)));
                }
            }
        }
        let mut check_neg = |name: &'static str, i: usize, j: usize, v: f64| {
            if v < -NEG_CLAMP {
                d.negative.push(EntryRef::new(name, i, j, v));
            }
        };
        for i in 0..self.s {
            for j in 0..self.s {
                check_neg("A", i, j, self.a(i, j));
                check_neg("Ahat", i, j, self.ahat(i, j));
            }
            check_neg("b", self.s, i, self.b[i]);
            check_neg("bhat", self.s, i, self.bhat[i]);
        }
        if self.variant == Variant::M3 {
            for i in 0..self.s {
                for j in 1..self.s {
                    if self.ahat(i, j) != 0.0 {
                        d.m3_pattern
                            .push(EntryRef::new("Ahat", i, j, self.ahat(i, j)));
                    }
                }
            }
            for j in 1..self.s {
                if self.bhat[j] != 0.0 {
                    d.m3_pattern.push(EntryRef::new("bhat", self.s, j, self.bhat[j]));
                }
            }
        }
        d
    }

    /// Searches for a DJ-reducibility witness: a nonempty stage set `T1` with
    /// `b_j = bhat_j = 0` for `j` in `T1` and `a_ij = ahat_ij = 0` for `i` in
    /// `T1`, `j` in `T2`. Candidates start from the zero-weight stages and are
    /// shrunk by fixed-point propagation until the row-support condition
    /// holds. Returns `(T1, T2)` as 1-based stage indices.
    pub fn is_dj_reducible(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let s = self.s;
        let mut in_t1: Vec<bool> = (0..s)
            .map(|j| self.b[j] == 0.0 && self.bhat[j] == 0.0)
            .collect();
        loop {
            let mut changed = false;
            for i in 0..s {
                if !in_t1[i] {
                    continue;
                }
                let depends_outside = (0..s).any(|j| {
                    !in_t1[j] && (self.a(i, j) != 0.0 || self.ahat(i, j) != 0.0)
                });
                if depends_outside {
                    in_t1[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if in_t1.iter().any(|&x| x) {
            let t1 = (0..s).filter(|&j| in_t1[j]).map(|j| j + 1).collect();
            let t2 = (0..s).filter(|&j| !in_t1[j]).map(|j| j + 1).collect();
            Some((t1, t2))
        } else {
            None
        }
    }
}

/// Reference to a single coefficient, for diagnostics. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryRef {
    pub part: &'static str,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl EntryRef {
    fn new(part: &'static str, i: usize, j: usize, value: f64) -> Self {
        EntryRef {
            part,
            i: i + 1,
            j: j + 1,
            value,
        }
    }
}

/// Result of [`Tableau::validate`].
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub explicitness: Vec<EntryRef>,
    pub negative: Vec<EntryRef>,
    pub m3_pattern: Vec<EntryRef>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.explicitness.is_empty() && self.negative.is_empty() && self.m3_pattern.is_empty()
    }
}

/// Block matrix form of a method; see the module docs.
#[derive(Debug, Clone)]
pub struct BlockForm {
    pub smat: SquareMat,
    pub shat: SquareMat,
}

impl BlockForm {
    pub fn n(&self) -> usize {
        self.smat.n()
    }
}

#[derive(Debug, Error)]
pub enum ShuOsherError {
    #[error("row {row}: coefficient sum {sum} differs from 1 beyond tolerance")]
    InconsistentRowSum { row: usize, sum: f64 },
    #[error("negative coefficient {name}[{i},{j}] = {value}")]
    Negative {
        name: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("{name}[{i},{j}] is nonzero but its state coefficient is zero")]
    OrphanDerivative { name: &'static str, i: usize, j: usize },
    #[error(transparent)]
    Tableau(#[from] TableauError),
}

/// Shu-Osher representation: stage `i` (i = 2..s+1, with stage s+1 the
/// output) is a combination of base steps built from earlier stages,
///
/// ```text
/// y_i = sum_{j<i} alpha_ij y_j + dt beta_ij F(y_j)
///     + alphahat_ij y_j + dt^2 betahat_ij Ft(y_j)
/// ```
///
/// Entries are stored as `s x s` matrices: row `k` holds the coefficients of
/// stage `k+2` against stages `1..=k+1` (1-based stage numbering).
#[derive(Debug, Clone, PartialEq)]
pub struct ShuOsherForm {
    pub s: usize,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub alphahat: Vec<Vec<f64>>,
    pub betahat: Vec<Vec<f64>>,
}

impl ShuOsherForm {
    pub fn zeros(s: usize) -> Self {
        let z = vec![vec![0.0; s]; s];
        ShuOsherForm {
            s,
            alpha: z.clone(),
            beta: z.clone(),
            alphahat: z.clone(),
            betahat: z,
        }
    }

    fn check(&self) -> Result<(), ShuOsherError> {
        for (name, m) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("alphahat", &self.alphahat),
            ("betahat", &self.betahat),
        ] {
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v < -NEG_CLAMP {
                        return Err(ShuOsherError::Negative {
                            name,
                            i: i + 2,
                            j: j + 1,
                            value: v,
                        });
                    }
                }
            }
        }
        for i in 0..self.s {
            let sum: f64 = self.alpha[i].iter().sum::<f64>()
                + self.alphahat[i].iter().sum::<f64>();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(ShuOsherError::InconsistentRowSum { row: i + 2, sum });
            }
            for j in 0..self.s {
                if self.beta[i][j] != 0.0 && self.alpha[i][j] == 0.0 {
                    return Err(ShuOsherError::OrphanDerivative {
                        name: "beta",
                        i: i + 2,
                        j: j + 1,
                    });
                }
                if self.betahat[i][j] != 0.0 && self.alphahat[i][j] == 0.0 {
                    return Err(ShuOsherError::OrphanDerivative {
                        name: "betahat",
                        i: i + 2,
                        j: j + 1,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Converts a Shu-Osher form back to Butcher coefficients with the standard
/// recursion: walking stages in order,
///
/// ```text
/// a_ij = beta_ij    + sum_{k=j+1}^{i-1} (alpha_ik + alphahat_ik) a_kj
/// ahat_ij likewise with betahat, and b/bhat from the output row.
/// ```
///
/// Nonnegative Shu-Osher coefficients therefore always yield nonnegative
/// Butcher coefficients.
pub fn shu_osher_to_butcher(f: &ShuOsherForm) -> Result<Tableau, ShuOsherError> {
    f.check()?;
    let s = f.s;
    let mut a = vec![vec![0.0; s]; s];
    let mut ahat = vec![vec![0.0; s]; s];
    // stage rows: tableau row i (0-based, i >= 1) comes from Shu-Osher row i-1
    for i in 1..s {
        for j in 0..i {
            let mut v = f.beta[i - 1][j];
            let mut vh = f.betahat[i - 1][j];
            for k in (j + 1)..i {
                let w = f.alpha[i - 1][k] + f.alphahat[i - 1][k];
                v += w * a[k][j];
                vh += w * ahat[k][j];
            }
            a[i][j] = v;
            ahat[i][j] = vh;
        }
    }
    // output row (stage s+1) defines b, bhat
    let mut b = vec![0.0; s];
    let mut bhat = vec![0.0; s];
    for j in 0..s {
        b[j] = f.beta[s - 1][j];
        bhat[j] = f.betahat[s - 1][j];
        for k in (j + 1)..s {
            let w = f.alpha[s - 1][k] + f.alphahat[s - 1][k];
            b[j] += w * a[k][j];
            bhat[j] += w * ahat[k][j];
        }
    }
    Ok(Tableau::from_parts(Variant::External, a, ahat, b, bhat, 1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe() -> Tableau {
        Tableau::from_parts(
            Variant::External,
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![1.0],
            vec![0.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn block_form_forward_euler() {
        let t = fe();
        let bf = t.block_form().unwrap();
        assert_eq!(bf.n(), 2);
        assert_eq!(bf.smat[(0, 0)], 0.0);
        assert_eq!(bf.smat[(1, 0)], 1.0);
        assert_eq!(bf.smat[(1, 1)], 0.0);
        assert_eq!(bf.shat.min_entry(), 0.0);
    }

    #[test]
    fn block_form_taylor_series() {
        let t = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![1.0],
            vec![0.5],
            1.0,
        )
        .unwrap();
        let bf = t.block_form().unwrap();
        assert_eq!(bf.shat[(1, 0)], 0.5);
        assert_eq!(bf.shat[(0, 0)], 0.0);
    }

    #[test]
    fn abscissae_forward_euler() {
        let (c, ch) = fe().abscissae();
        assert_eq!(c, vec![0.0]);
        assert_eq!(ch, vec![0.0]);
    }

    #[test]
    fn rejects_implicit() {
        let t = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!(t.block_form().is_err());
        assert!(!t.validate().is_clean());
    }

    #[test]
    fn negative_entry_diagnostic() {
        let t = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0, 0.0], vec![-0.1, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        let d = t.validate();
        assert_eq!(d.negative.len(), 1);
        assert_eq!(d.negative[0].part, "A");
        // just below the clamp tolerance it is clean
        let t2 = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0, 0.0], vec![-0.5e-14, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!(t2.validate().is_clean());
        assert_eq!(t2.clamped().a(1, 0), 0.0);
    }

    #[test]
    fn stage_cap_enforced() {
        let s = MAX_STAGES + 1;
        let err = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0; s]; s],
            vec![vec![0.0; s]; s],
            vec![0.0; s],
            vec![0.0; s],
            1.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn shu_osher_single_forward_euler_stage() {
        let mut f = ShuOsherForm::zeros(1);
        f.alpha[0][0] = 1.0;
        f.beta[0][0] = 1.0;
        let t = shu_osher_to_butcher(&f).unwrap();
        assert_eq!(t.b(), &[1.0]);
        assert_eq!(t.bhat(), &[0.0]);
    }

    #[test]
    fn shu_osher_rejects_bad_row_sum() {
        let mut f = ShuOsherForm::zeros(1);
        f.alpha[0][0] = 0.9;
        f.beta[0][0] = 1.0;
        assert!(matches!(
            shu_osher_to_butcher(&f),
            Err(ShuOsherError::InconsistentRowSum { .. })
        ));
    }

    #[test]
    fn dj_reducible_constructed() {
        // two-stage method with b2 = bhat2 = 0 and stage 2 not feeding anything
        let t = Tableau::from_parts(
            Variant::External,
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0; 2]; 2],
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        let (t1, t2) = t.is_dj_reducible().unwrap();
        assert_eq!(t1, vec![2]);
        assert_eq!(t2, vec![1]);
    }

    #[test]
    fn forward_euler_irreducible() {
        assert!(fe().is_dj_reducible().is_none());
    }
}
