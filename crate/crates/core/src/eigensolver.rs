//! Lowest eigenpairs by Davidson iteration and full dense spectra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseMatrix;

pub const DEFAULT_DENSE_LIMIT: usize = 4096;
const SIGN_THRESHOLD: f64 = 1e-8;
const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct DavidsonOptions {
    pub tol: f64,
    pub max_subspace: usize,
    pub restart_size: usize,
    pub precond_floor: f64,
    pub max_iter: usize,
    /// Problems at or below this dimension are solved densely.
    pub dense_threshold: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_subspace: 40,
            restart_size: 8,
            precond_floor: 1e-6,
            max_iter: 200,
            dense_threshold: 64,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn leading_index(v: &[f64]) -> usize {
    v.iter().position(|c| c.abs() > SIGN_THRESHOLD).unwrap_or(0)
}

/// Flips each vector so its first significant component is positive, then orders
/// near-degenerate clusters by the index of that component.
fn canonicalize(pairs: &mut [EigenPair]) {
    for p in pairs.iter_mut() {
        let lead = leading_index(&p.vector);
        if p.vector.get(lead).is_some_and(|&c| c < 0.0) {
            p.vector.iter_mut().for_each(|c| *c = -*c);
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].value - pairs[end - 1].value < DEGENERACY_TOL {
            end += 1;
        }
        pairs[start..end].sort_by_key(|p| leading_index(&p.vector));
        start = end;
    }
}

fn dense_eigen(m: DMatrix<f64>) -> Vec<EigenPair> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|i| EigenPair {
            value: eig.eigenvalues[i],
            vector: eig.eigenvectors.column(i).iter().copied().collect(),
        })
        .collect();
    canonicalize(&mut pairs);
    pairs
}

/// Complete eigendecomposition, ascending; errors above `dense_limit`.
pub fn full_spectrum(m: &SparseMatrix, dense_limit: usize) -> Result<Vec<EigenPair>> {
    if m.n_rows != m.n_cols {
        return Err(Error::Usage("matrix is not square".into()));
    }
    if m.n_rows > dense_limit {
        return Err(Error::Capacity {
            dim: m.n_rows,
            limit: dense_limit,
        });
    }
    Ok(dense_eigen(m.to_dense()))
}

/// The `k` lowest eigenpairs of a symmetric matrix.
pub fn lowest_eigenpairs(
    m: &SparseMatrix,
    k: usize,
    opts: &DavidsonOptions,
) -> Result<Vec<EigenPair>> {
    let n = m.n_rows;
    if m.n_cols != n {
        return Err(Error::Usage("matrix is not square".into()));
    }
    if k > n {
        return Err(Error::Range(format!(
            "requested {k} roots of a {n}-dimensional matrix"
        )));
    }
    if opts.tol <= 0.0 {
        return Err(Error::Usage("tolerance must be positive".into()));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if n <= opts.dense_threshold.max(k + 1) {
        let mut all = dense_eigen(m.to_dense());
        all.truncate(k);
        return Ok(all);
    }
    davidson(m, k, opts)
}

/// Orthogonalizes `v` against `basis` (two Gram–Schmidt passes) and normalizes it.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> Option<()> {
    let before = norm(v);
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let after = norm(v);
    if after < 1e-10 * before.max(1.0) || after == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= after);
    Some(())
}

fn davidson(m: &SparseMatrix, k: usize, opts: &DavidsonOptions) -> Result<Vec<EigenPair>> {
    let n = m.n_rows;
    let diag = m.diagonal();
    let max_sub = opts.max_subspace.max(2 * k + 1).min(n);
    let restart = opts.restart_size.max(k).min(max_sub - 1);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let n_guess = (2 * k).max(k + 1).min(n).min(max_sub);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &i in order.iter().take(n_guess) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        basis.push(e);
    }
    let mut images: Vec<Vec<f64>> = basis.iter().map(|v| m.matvec(v)).collect();

    let mut last_residual = f64::INFINITY;
    for _iter in 0..opts.max_iter {
        let dim = basis.len();
        let mut sub = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = dot(&basis[i], &images[j]);
                sub[(i, j)] = v;
                sub[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(sub);
        let mut idx: Vec<usize> = (0..dim).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut ritz = Vec::with_capacity(k);
        let mut corrections = Vec::new();
        let mut worst = 0.0f64;
        for &col in idx.iter().take(k) {
            let theta = eig.eigenvalues[col];
            let y: DVector<f64> = eig.eigenvectors.column(col).into_owned();
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (j, &yj) in y.iter().enumerate() {
                x.iter_mut().zip(&basis[j]).for_each(|(a, b)| *a += yj * b);
                ax.iter_mut()
                    .zip(&images[j])
                    .for_each(|(a, b)| *a += yj * b);
            }
            let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
            let rn = norm(&r);
            worst = worst.max(rn);
            if rn >= opts.tol {
                let t: Vec<f64> = r
                    .iter()
                    .zip(&diag)
                    .map(|(ri, di)| {
                        let mut d = theta - di;
                        if d.abs() < opts.precond_floor {
                            d = if d < 0.0 {
                                -opts.precond_floor
                            } else {
                                opts.precond_floor
                            };
                        }
                        ri / d
                    })
                    .collect();
                corrections.push(t);
            }
            ritz.push((theta, x, ax));
        }
        last_residual = worst;
        if corrections.is_empty() {
            let mut pairs: Vec<EigenPair> = ritz
                .into_iter()
                .map(|(value, x, _)| {
                    let nx = norm(&x);
                    EigenPair {
                        value,
                        vector: x.into_iter().map(|c| c / nx).collect(),
                    }
                })
                .collect();
            canonicalize(&mut pairs);
            return Ok(pairs);
        }

        if basis.len() + corrections.len() > max_sub {
            let keep = restart.max(k);
            let mut new_basis = Vec::with_capacity(keep);
            let mut new_images = Vec::with_capacity(keep);
            for &col in idx.iter().take(keep) {
                let y = eig.eigenvectors.column(col);
                let mut x = vec![0.0; n];
                let mut ax = vec![0.0; n];
                for (j, &yj) in y.iter().enumerate() {
                    x.iter_mut().zip(&basis[j]).for_each(|(a, b)| *a += yj * b);
                    ax.iter_mut()
                        .zip(&images[j])
                        .for_each(|(a, b)| *a += yj * b);
                }
                new_basis.push(x);
                new_images.push(ax);
            }
            basis = new_basis;
            images = new_images;
        }

        let mut added = 0;
        for mut t in corrections {
            if basis.len() >= max_sub {
                break;
            }
            if orthonormalize(&mut t, &basis).is_some() {
                images.push(m.matvec(&t));
                basis.push(t);
                added += 1;
            }
        }
        if added == 0 {
            // Preconditioned residuals collapsed into the subspace; fall back to raw residuals.
            for (theta, x, ax) in &ritz {
                if basis.len() >= max_sub {
                    break;
                }
                let mut r: Vec<f64> = ax.iter().zip(x).map(|(a, b)| a - theta * b).collect();
                if orthonormalize(&mut r, &basis).is_some() {
                    images.push(m.matvec(&r));
                    basis.push(r);
                    added += 1;
                }
            }
            if added == 0 {
                return Err(Error::Convergence {
                    iterations: _iter + 1,
                    residual: last_residual,
                });
            }
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                t.push((i, j, v));
            }
        }
        SparseMatrix::from_triplets(rows.len(), rows.len(), t)
    }

    #[test]
    fn one_by_one() {
        let p = lowest_eigenpairs(&dense(&[&[2.5]]), 1, &DavidsonOptions::default()).unwrap();
        assert_eq!(p[0].value, 2.5);
        assert_eq!(p[0].vector, vec![1.0]);
    }

    #[test]
    fn diagonal_lowest_two() {
        let m = dense(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let p = lowest_eigenpairs(&m, 2, &DavidsonOptions::default()).unwrap();
        assert_eq!(
            p.iter().map(|e| e.value).collect::<Vec<_>>(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn pauli_x_spectrum() {
        let s = full_spectrum(&dense(&[&[0.0, 1.0], &[1.0, 0.0]]), 16).unwrap();
        assert!((s[0].value + 1.0).abs() < 1e-14);
        assert!((s[1].value - 1.0).abs() < 1e-14);
        assert!(s[0].vector[0] > 0.0);
    }

    #[test]
    fn capacity_error() {
        let m = SparseMatrix::zeros(5, 5);
        assert!(matches!(
            full_spectrum(&m, 4),
            Err(Error::Capacity { dim: 5, limit: 4 })
        ));
    }

    #[test]
    fn too_many_roots() {
        let m = SparseMatrix::zeros(2, 2);
        assert!(matches!(
            lowest_eigenpairs(&m, 3, &DavidsonOptions::default()),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn davidson_matches_dense_on_banded_matrix() {
        let n = 300;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0 + i as f64 * 0.1 + ((i * 7) % 5) as f64 * 0.01));
            for off in [1usize, 3, 17] {
                if i + off < n {
                    let v = 0.05 / off as f64;
                    t.push((i, i + off, v));
                    t.push((i + off, i, v));
                }
            }
        }
        let m = SparseMatrix::from_triplets(n, n, t);
        let opts = DavidsonOptions::default();
        let dav = lowest_eigenpairs(&m, 3, &opts).unwrap();
        let full = full_spectrum(&m, 4096).unwrap();
        for (a, b) in dav.iter().zip(&full) {
            assert!(
                (a.value - b.value).abs() < 1e-9,
                "{} vs {}",
                a.value,
                b.value
            );
            let overlap = dot(&a.vector, &b.vector).abs();
            assert!((overlap - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn convergence_error_carries_residual() {
        let n = 200;
        let t: Vec<_> = (0..n)
            .flat_map(|i| {
                let mut v = vec![(i, i, (i % 13) as f64)];
                if i + 1 < n {
                    v.push((i, i + 1, 1.0));
                    v.push((i + 1, i, 1.0));
                }
                v
            })
            .collect();
        let m = SparseMatrix::from_triplets(n, n, t);
        let opts = DavidsonOptions {
            max_iter: 1,
            ..Default::default()
        };
        match lowest_eigenpairs(&m, 1, &opts) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
