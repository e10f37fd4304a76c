//! Small complex linear-algebra helpers: a block-banded LU solve for the
//! Floquet amplitude system and dense condition estimates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (condition estimate {0:.3e})")]
    Singular(f64),
}

/// 1-norm condition estimate via the explicit inverse. Only used on the
/// small matrices of this crate (at most ~100 x 100).
pub fn condition_1(m: &DMatrix<Complex64>) -> f64 {
    let norm = one_norm(m);
    match m.clone().try_inverse() {
        Some(inv) => norm * one_norm(&inv),
        None => f64::INFINITY,
    }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Block-banded system with `nb` blocks of size `n` on the diagonal and block
/// bandwidth `bw` (blocks (i, j) with |i - j| <= bw may be nonzero). This is
/// the shape of the Floquet amplitude equations, where the bandwidth equals
/// the largest drive harmonic index.
///
/// The elimination runs block row by block row without inter-block pivoting;
/// each pivot block is factored with a partial-pivot LU. Away from parametric
/// resonances the pivot blocks are damped Green-function inverses and remain
/// comfortably regular, and the worst pivot-block condition number is
/// reported so callers can fall back to a full dense solve when in doubt.
pub struct BlockBanded {
    nb: usize,
    n: usize,
    bw: usize,
    /// blocks[i][d] holds block (i, i - bw + d); d in 0..=2*bw.
    blocks: Vec<Vec<DMatrix<Complex64>>>,
}

impl BlockBanded {
    pub fn zeros(nb: usize, n: usize, bw: usize) -> Self {
        let blocks = (0..nb)
            .map(|_| (0..2 * bw + 1).map(|_| DMatrix::zeros(n, n)).collect())
            .collect();
        Self { nb, n, bw, blocks }
    }

    pub fn block_mut(&mut self, i: usize, j: usize) -> Option<&mut DMatrix<Complex64>> {
        let bw = self.bw as isize;
        let d = j as isize - i as isize + bw;
        if i < self.nb && j < self.nb && (0..=2 * bw).contains(&d) {
            Some(&mut self.blocks[i][d as usize])
        } else {
            None
        }
    }

    fn block(&self, i: usize, j: usize) -> Option<&DMatrix<Complex64>> {
        let bw = self.bw as isize;
        let d = j as isize - i as isize + bw;
        if i < self.nb && j < self.nb && (0..=2 * bw).contains(&d) {
            Some(&self.blocks[i][d as usize])
        } else {
            None
        }
    }

    /// Dense copy, for cross-checks and condition probes.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let size = self.nb * self.n;
        let mut m = DMatrix::zeros(size, size);
        for i in 0..self.nb {
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.nb) {
                if let Some(b) = self.block(i, j) {
                    m.view_mut((i * self.n, j * self.n), (self.n, self.n)).copy_from(b);
                }
            }
        }
        m
    }

    /// Solve in place: `rhs` has `nb * n` rows. Returns the worst pivot-block
    /// condition estimate. Consumes the matrix (it is overwritten by the
    /// elimination).
    pub fn solve(
        mut self,
        rhs: &mut DMatrix<Complex64>,
    ) -> Result<f64, LinalgError> {
        assert_eq!(rhs.nrows(), self.nb * self.n);
        let (nb, n, bw) = (self.nb, self.n, self.bw);
        let mut worst_cond = 1.0f64;

        for i in 0..nb {
            let pivot = self.block(i, i).unwrap().clone();
            let cond = condition_1(&pivot);
            worst_cond = worst_cond.max(cond);
            let lu = pivot.lu();
            if cond > 1e14 || !cond.is_finite() {
                return Err(LinalgError::Singular(cond));
            }

            // normalize row i: pivot^{-1} applied to the row blocks right of
            // the pivot and to the rhs block
            for j in i + 1..(i + bw + 1).min(nb) {
                if let Some(b) = self.block(i, j) {
                    let solved = lu.solve(b).ok_or(LinalgError::Singular(cond))?;
                    *self.block_mut(i, j).unwrap() = solved;
                }
            }
            {
                let mut rb = rhs.rows_mut(i * n, n).clone_owned();
                rb = lu.solve(&rb).ok_or(LinalgError::Singular(cond))?;
                rhs.rows_mut(i * n, n).copy_from(&rb);
            }

            // eliminate the blocks below the pivot
            for r in i + 1..(i + bw + 1).min(nb) {
                let l = match self.block(r, i) {
                    Some(b) if b.iter().any(|z| z.norm_sqr() != 0.0) => b.clone(),
                    _ => continue,
                };
                for j in i + 1..(i + bw + 1).min(nb) {
                    let upd = self.block(i, j).map(|u| &l * u);
                    if let (Some(upd), Some(t)) = (upd, self.block_mut(r, j)) {
                        *t -= upd;
                    }
                }
                let upd = &l * rhs.rows(i * n, n).clone_owned();
                let mut rr = rhs.rows_mut(r * n, n);
                rr -= upd;
                self.block_mut(r, i).unwrap().fill(Complex64::new(0.0, 0.0));
            }
        }

        // back substitution: row i now has identity pivot and blocks to the right
        for i in (0..nb).rev() {
            let mut acc = rhs.rows(i * n, n).clone_owned();
            for j in i + 1..(i + bw + 1).min(nb) {
                if let Some(u) = self.block(i, j) {
                    acc -= u * rhs.rows(j * n, n).clone_owned();
                }
            }
            rhs.rows_mut(i * n, n).copy_from(&acc);
        }
        Ok(worst_cond)
    }
}
