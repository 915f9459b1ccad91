//! Block-tridiagonal solvers with 2×2 blocks.
//!
//! Row `k` of the system reads `L_k x_{k-1} + D_k x_k + U_k x_{k+1} = r_k`.
//! The periodic variant closes the chain (`x_{-1} = x_{n-1}`, `x_n = x_0`)
//! and is reduced to a bordered system on the last unknown; the far-field
//! variant treats `x_0` and `x_{n-1}` as given.

use crate::error::SolverError;

pub type Vec2 = [f64; 2];

/// Dense 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn scaled(&self, k: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        self.sub(&other.scaled(-1.0))
    }

    pub fn norm_inf(&self) -> f64 {
        let m = &self.0;
        (m[0][0].abs() + m[0][1].abs()).max(m[1][0].abs() + m[1][1].abs())
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let m = &self.0;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = self.norm_inf();
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale || det == 0.0 {
            return None;
        }
        let inv = 1.0 / det;
        Some(Mat2([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]))
    }

    fn column(&self, j: usize) -> Vec2 {
        [self.0[0][j], self.0[1][j]]
    }

    fn from_columns(c0: Vec2, c1: Vec2) -> Mat2 {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }
}

fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn add2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn sup(xs: &[Vec2]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x[0].abs()).max(x[1].abs()))
}

/// Coefficient blocks of a block-tridiagonal system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub lower: Vec<Mat2>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
}

/// LU factors of a non-cyclic chain: pivot inverses and `G_k = P_k⁻¹ U_k`.
struct ChainFactors {
    pivot_inv: Vec<Mat2>,
    gain: Vec<Mat2>,
}

impl BlockTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn check(&self) -> Result<(), SolverError> {
        let n = self.diag.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::Layout(format!(
                "block lengths lower={} diag={} upper={}",
                self.lower.len(),
                n,
                self.upper.len()
            )));
        }
        Ok(())
    }

    /// Factors rows `lo..hi` as an open chain (couplings outside ignored).
    fn factor_chain(&self, lo: usize, hi: usize) -> Result<ChainFactors, SolverError> {
        let len = hi - lo;
        let mut pivot_inv = Vec::with_capacity(len);
        let mut gain: Vec<Mat2> = Vec::with_capacity(len);
        for k in lo..hi {
            let pivot = if k == lo {
                self.diag[k]
            } else {
                self.diag[k].sub(&self.lower[k].mul(&gain[k - lo - 1]))
            };
            let inv = pivot.inverse().ok_or(SolverError::SingularPivot { index: k })?;
            gain.push(inv.mul(&self.upper[k]));
            pivot_inv.push(inv);
        }
        Ok(ChainFactors { pivot_inv, gain })
    }

    fn solve_chain(&self, f: &ChainFactors, lo: usize, rhs: &[Vec2]) -> Vec<Vec2> {
        let len = rhs.len();
        let mut y = Vec::with_capacity(len);
        for i in 0..len {
            let r = if i == 0 {
                rhs[0]
            } else {
                sub2(rhs[i], self.lower[lo + i].apply(y[i - 1]))
            };
            y.push(f.pivot_inv[i].apply(r));
        }
        for i in (0..len.saturating_sub(1)).rev() {
            y[i] = sub2(y[i], f.gain[i].apply(y[i + 1]));
        }
        y
    }

    /// Solves the cyclic system (`x_{-1} ≡ x_{n-1}`, `x_n ≡ x_0`).
    pub fn solve_periodic(&self, rhs: &[Vec2]) -> Result<Vec<Vec2>, SolverError> {
        self.check()?;
        let n = self.len();
        if rhs.len() != n || n < 3 {
            return Err(SolverError::Layout(format!(
                "periodic solve needs n >= 3 blocks and a matching rhs (n = {n}, rhs = {})",
                rhs.len()
            )));
        }
        let last = n - 1;
        let factors = self.factor_chain(0, last)?;

        // Inner unknowns x_k = p_k + Q_k x_last.
        let p = self.solve_chain(&factors, 0, &rhs[..last]);
        let mut border = vec![[0.0; 2]; last];
        let mut q_columns = [Vec::new(), Vec::new()];
        for (j, col) in q_columns.iter_mut().enumerate() {
            border.iter_mut().for_each(|b| *b = [0.0; 2]);
            let l0 = self.lower[0].column(j);
            let um = self.upper[last - 1].column(j);
            border[0] = [-l0[0], -l0[1]];
            border[last - 1] = sub2(border[last - 1], um);
            *col = self.solve_chain(&factors, 0, &border);
        }
        let q = |k: usize| Mat2::from_columns(q_columns[0][k], q_columns[1][k]);

        let schur = self.diag[last]
            .add(&self.lower[last].mul(&q(last - 1)))
            .add(&self.upper[last].mul(&q(0)));
        let schur_rhs = sub2(
            sub2(rhs[last], self.lower[last].apply(p[last - 1])),
            self.upper[last].apply(p[0]),
        );
        let x_last = schur
            .inverse()
            .ok_or(SolverError::SingularPivot { index: last })?
            .apply(schur_rhs);

        let mut x: Vec<Vec2> = (0..last).map(|k| add2(p[k], q(k).apply(x_last))).collect();
        x.push(x_last);
        Ok(x)
    }

    /// Solves with `x_0 = first` and `x_{n-1} = last` prescribed; rows 0 and
    /// `n-1` of the blocks are ignored.
    pub fn solve_bordered(
        &self,
        rhs: &[Vec2],
        first: Vec2,
        last: Vec2,
    ) -> Result<Vec<Vec2>, SolverError> {
        self.check()?;
        let n = self.len();
        if rhs.len() != n || n < 3 {
            return Err(SolverError::Layout(format!(
                "bordered solve needs n >= 3 blocks and a matching rhs (n = {n}, rhs = {})",
                rhs.len()
            )));
        }
        let mut inner: Vec<Vec2> = rhs[1..n - 1].to_vec();
        inner[0] = sub2(inner[0], self.lower[1].apply(first));
        let m = inner.len();
        inner[m - 1] = sub2(inner[m - 1], self.upper[n - 2].apply(last));
        let factors = self.factor_chain(1, n - 1)?;
        let mut x = Vec::with_capacity(n);
        x.push(first);
        x.extend(self.solve_chain(&factors, 1, &inner));
        x.push(last);
        Ok(x)
    }

    /// `r − M x` for the periodic closure.
    pub fn residual_periodic(&self, x: &[Vec2], rhs: &[Vec2]) -> Vec<Vec2> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let left = x[(k + n - 1) % n];
                let right = x[(k + 1) % n];
                let mx = add2(
                    add2(self.lower[k].apply(left), self.diag[k].apply(x[k])),
                    self.upper[k].apply(right),
                );
                sub2(rhs[k], mx)
            })
            .collect()
    }

    /// `r − M x` on the interior rows of the bordered system.
    pub fn residual_bordered(&self, x: &[Vec2], rhs: &[Vec2]) -> Vec<Vec2> {
        let n = self.len();
        let mut res = vec![[0.0; 2]; n];
        for k in 1..n - 1 {
            let mx = add2(
                add2(self.lower[k].apply(x[k - 1]), self.diag[k].apply(x[k])),
                self.upper[k].apply(x[k + 1]),
            );
            res[k] = sub2(rhs[k], mx);
        }
        res
    }
}

/// Relative residual `‖r − Mx‖∞ / max(‖r‖∞, tiny)`.
pub fn relative_residual(residual: &[Vec2], rhs: &[Vec2]) -> f64 {
    sup(residual) / sup(rhs).max(f64::MIN_POSITIVE)
}
