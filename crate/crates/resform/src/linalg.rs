//! Dense linear-algebra kernels shared by the resistance and trace modules.
//! Everything here works on full Laplacians at desk scale; solvers are
//! direct factorizations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// LU factorization of the Laplacian with one row/column pinned to zero
/// potential. Solving against it yields potentials with `v[pin] = 0`.
pub struct PinnedLaplacian {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pin: usize,
    n: usize,
}

impl PinnedLaplacian {
    pub fn new(laplacian: &DMatrix<f64>, pin: usize) -> Self {
        let n = laplacian.nrows();
        let keep: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
        let reduced = laplacian.select_rows(&keep).select_columns(&keep);
        Self {
            lu: reduced.lu(),
            pin,
            n,
        }
    }

    /// Solves L v = rhs (full-size right hand side, entry at the pin
    /// ignored) and returns the full-size potential with `v[pin] = 0`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let m = self.n - 1;
        let mut b = DVector::zeros(m);
        let mut k = 0;
        for i in 0..self.n {
            if i != self.pin {
                b[k] = rhs[i];
                k += 1;
            }
        }
        let x = self
            .lu
            .solve(&b)
            .expect("pinned Laplacian is nonsingular on connected networks");
        let mut v = DVector::zeros(self.n);
        let mut k = 0;
        for i in 0..self.n {
            if i != self.pin {
                v[i] = x[k];
                k += 1;
            }
        }
        v
    }
}

/// Inverse of the Laplacian with row/column `pin` deleted, re-embedded as an
/// n-by-n matrix with zero pin row/column. This is the Green kernel with
/// potential grounded at the pin; all-pairs effective resistances read off as
/// `g[x,x] + g[y,y] - 2 g[x,y]`.
pub fn grounded_green_matrix(laplacian: &DMatrix<f64>, pin: usize) -> DMatrix<f64> {
    let n = laplacian.nrows();
    if n == 1 {
        return DMatrix::zeros(1, 1);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
    let reduced = laplacian.select_rows(&keep).select_columns(&keep);
    let inv = reduced
        .lu()
        .try_inverse()
        .expect("pinned Laplacian is nonsingular on connected networks");
    let mut g = DMatrix::zeros(n, n);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            g[(i, j)] = inv[(a, b)];
        }
    }
    g
}

/// Schur complement of the Laplacian onto the index set `keep`:
/// L_BB - L_BC L_CC^{-1} L_CB, with C the complement of `keep`.
pub fn schur_complement(laplacian: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let n = laplacian.nrows();
    let mut inside = vec![false; n];
    for &i in keep {
        inside[i] = true;
    }
    let comp: Vec<usize> = (0..n).filter(|&i| !inside[i]).collect();
    let l_bb = laplacian.select_rows(keep).select_columns(keep);
    if comp.is_empty() {
        return l_bb;
    }
    let l_bc = laplacian.select_rows(keep).select_columns(&comp);
    let l_cb = laplacian.select_rows(&comp).select_columns(keep);
    let l_cc = laplacian.select_rows(&comp).select_columns(&comp);
    let solved = l_cc
        .lu()
        .solve(&l_cb)
        .expect("complement block is nonsingular on connected networks");
    l_bb - l_bc * solved
}

/// Solves the Dirichlet problem: h agrees with `values` on `boundary` and
/// (L h)(x) = 0 for every x off the boundary.
pub fn dirichlet_extension(
    laplacian: &DMatrix<f64>,
    boundary: &[usize],
    values: &[f64],
) -> Result<Vec<f64>> {
    let mut out = dirichlet_extension_multi(laplacian, boundary, &[values.to_vec()])?;
    Ok(out.pop().unwrap())
}

/// Dirichlet solves for several boundary-value assignments on the same
/// boundary set, sharing one factorization of the interior block.
pub fn dirichlet_extension_multi(
    laplacian: &DMatrix<f64>,
    boundary: &[usize],
    value_sets: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n = laplacian.nrows();
    if boundary.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut is_boundary = vec![false; n];
    for &b in boundary {
        if b >= n {
            return Err(Error::IndexOutOfRange { index: b, len: n });
        }
        is_boundary[b] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_boundary[i]).collect();

    let extend = |values: &[f64]| -> Vec<f64> {
        debug_assert_eq!(values.len(), boundary.len());
        let mut h = vec![0.0; n];
        for (&b, &v) in boundary.iter().zip(values) {
            h[b] = v;
        }
        h
    };
    if free.is_empty() {
        return Ok(value_sets.iter().map(|v| extend(v)).collect());
    }

    let l_ff = laplacian.select_rows(&free).select_columns(&free);
    let lu = l_ff.lu();
    let mut rhs = DMatrix::zeros(free.len(), value_sets.len());
    for (col, values) in value_sets.iter().enumerate() {
        for (a, &i) in free.iter().enumerate() {
            let mut acc = 0.0;
            for (&b, &v) in boundary.iter().zip(values) {
                acc -= laplacian[(i, b)] * v;
            }
            rhs[(a, col)] = acc;
        }
    }
    let sol = lu
        .solve(&rhs)
        .expect("free block is nonsingular on connected networks");
    Ok(value_sets
        .iter()
        .enumerate()
        .map(|(col, values)| {
            let mut h = extend(values);
            for (a, &i) in free.iter().enumerate() {
                h[i] = sol[(a, col)];
            }
            h
        })
        .collect())
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via its eigensystem,
/// dropping eigenvalues of magnitude below `tol` times the largest.
pub fn symmetric_pseudoinverse(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    symmetric_pseudoinverse_with_rank(m, tol).0
}

/// Pseudoinverse plus the numerical rank (count of retained eigenvalues).
pub fn symmetric_pseudoinverse_with_rank(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = tol * max_abs.max(1.0);
    let mut out = DMatrix::zeros(n, n);
    let mut rank = 0;
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() > cutoff {
            rank += 1;
            let v = eig.eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[i] * v[j] / lambda;
                }
            }
        }
    }
    (out, rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn triangle_laplacian() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0])
    }

    #[test]
    fn pinned_solve_gives_unit_current_potentials() {
        let l = triangle_laplacian();
        let pinned = PinnedLaplacian::new(&l, 0);
        let mut rhs = DVector::zeros(3);
        rhs[1] = 1.0;
        rhs[2] = -1.0;
        let v = pinned.solve(&rhs);
        assert_abs_diff_eq!(v[0], 0.0);
        assert_abs_diff_eq!(v[1] - v[2], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn schur_of_full_set_is_identity_on_laplacian() {
        let l = triangle_laplacian();
        let s = schur_complement(&l, &[0, 1, 2]);
        assert_abs_diff_eq!((s - &l).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn schur_triangle_onto_pair() {
        let l = triangle_laplacian();
        let s = schur_complement(&l, &[0, 1]);
        assert_abs_diff_eq!(s[(0, 1)], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s[(0, 0)], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_extension_path_midpoint() {
        // Path 0-1-2, unit conductances, boundary {0, 2} with values 1, 0.
        let l = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let h = dirichlet_extension(&l, &[0, 2], &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(h[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_recovers_laplacian() {
        let l = triangle_laplacian();
        let pinv = symmetric_pseudoinverse(&l, 1e-10);
        let back = symmetric_pseudoinverse(&pinv, 1e-10);
        assert_abs_diff_eq!((back - &l).norm(), 0.0, epsilon = 1e-9);
    }
}
