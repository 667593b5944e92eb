//! Minimal dense matrix with LU partial-pivoting solve.
//!
//! The slab systems are structurally dense (the delay integral couples every
//! spatial DOF), so a plain row-major matrix and an in-place factorization
//! cover everything the solver needs at desk scale.

use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// y = A·x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Solve A·x = b in place, destroying the matrix. Fails when a pivot
    /// magnitude drops below `SINGULAR_PIVOT`.
    pub fn solve_in_place(&mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        assert_eq!(b.len(), n);
        for col in 0..n {
            // partial pivoting
            let mut pivot_row = col;
            let mut pivot_val = self.get(col, col).abs();
            for row in col + 1..n {
                let v = self.get(row, col).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val < SINGULAR_PIVOT {
                return Err(Error::SingularSystem {
                    slab: 0,
                    pivot: pivot_val,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = self.get(col, j);
                    self.set(col, j, self.get(pivot_row, j));
                    self.set(pivot_row, j, tmp);
                }
                b.swap(col, pivot_row);
            }
            let inv = 1.0 / self.get(col, col);
            for row in col + 1..n {
                let factor = self.get(row, col) * inv;
                if factor == 0.0 {
                    continue;
                }
                self.set(row, col, 0.0);
                for j in col + 1..n {
                    let v = self.get(row, j) - factor * self.get(col, j);
                    self.set(row, j, v);
                }
                b[row] -= factor * b[col];
            }
        }
        // back substitution
        for col in (0..n).rev() {
            let mut v = b[col];
            for j in col + 1..n {
                v -= self.get(col, j) * b[j];
            }
            b[col] = v / self.get(col, col);
        }
        Ok(())
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}
