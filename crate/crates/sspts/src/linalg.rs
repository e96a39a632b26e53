//! Small dense matrix helpers for the (s+1)-dimensional block algebra.
//!
//! Every system solved here is unit lower triangular (identity plus a strictly
//! lower triangular part), so forward substitution is exact in the sense that
//! no pivoting is ever needed.

/// Dense row-major square matrix, sized for stage counts (n <= 17).
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    n: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        SquareMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn mul_mat(&self, other: &SquareMat) -> SquareMat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// self + coef * other
    pub fn add_scaled(&self, coef: f64, other: &SquareMat) -> SquareMat {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(&other.data) {
            *o += coef * x;
        }
        out
    }

    pub fn scale(&self, coef: f64) -> SquareMat {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= coef;
        }
        out
    }

    /// Solve (I + L) x = rhs by forward substitution, where `self` = I + L has
    /// unit diagonal and strictly lower triangular L. Entries above the
    /// diagonal are ignored.
    pub fn unit_lower_solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self[(i, j)] * x[j];
            }
        }
        x
    }

    /// Solve (I + L) X = B column by column.
    pub fn unit_lower_solve_mat(&self, rhs: &SquareMat) -> SquareMat {
        let n = self.n;
        let mut x = rhs.clone();
        for i in 0..n {
            for j in 0..i {
                let lij = self[(i, j)];
                if lij == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let v = x[(j, k)];
                    x[(i, k)] -= lij * v;
                }
            }
        }
        x
    }

    /// Inverse of a unit lower triangular matrix.
    pub fn unit_lower_inverse(&self) -> SquareMat {
        self.unit_lower_solve_mat(&SquareMat::identity(self.n))
    }
}

impl std::ops::Index<(usize, usize)> for SquareMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_substitution_inverts() {
        let n = 5;
        let mut m = SquareMat::identity(n);
        let mut v = 0.3;
        for i in 1..n {
            for j in 0..i {
                m[(i, j)] = v;
                v = (v * 1.7 + 0.1) % 1.0;
            }
        }
        let inv = m.unit_lower_inverse();
        let prod = m.mul_mat(&inv);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-13);
            }
        }
    }
}
