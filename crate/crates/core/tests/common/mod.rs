#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sbpt_core::driver::{Manifest, Problem};
use sbpt_core::hamiltonian::matrix_element;
use sbpt_core::integrals::{freeze_core, IntegralSet};
use sbpt_core::symmetry::{Determinant, GroupingFile, IrrepLabel};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn frozen_for(molecule: &str) -> Vec<usize> {
    match molecule {
        "h2o" => vec![0],
        "n2" => vec![0, 1],
        _ => vec![],
    }
}

pub fn fcidump_name(molecule: &str, tag: &str) -> String {
    format!("{molecule}/{molecule}_{}.fcidump", tag.replace('=', ""))
}

/// Frozen-core integrals for a fixture point such as `("h2o", "r=1.80")`.
pub fn integrals(molecule: &str, tag: &str) -> IntegralSet {
    let raw = IntegralSet::from_path(fixture(&fcidump_name(molecule, tag))).unwrap();
    freeze_core(&raw, &frozen_for(molecule)).unwrap()
}

pub fn grouping(molecule: &str, name: &str) -> GroupingFile {
    GroupingFile::from_path(fixture(&format!("{molecule}/groupings/{name}.json"))).unwrap()
}

pub fn problem(molecule: &str, tag: &str, grouping_name: &str) -> Problem {
    Problem::new(integrals(molecule, tag), &grouping(molecule, grouping_name)).unwrap()
}

pub fn manifest(molecule: &str) -> Manifest {
    Manifest::load(fixture(&format!("{molecule}/manifest.json"))).unwrap()
}

/// Dense Slater–Condon matrix, independent of the sparse builders.
pub fn dense_hamiltonian(basis: &[Determinant], h: &IntegralSet) -> DMatrix<f64> {
    let n = basis.len();
    DMatrix::from_fn(n, n, |i, j| matrix_element(basis[i], basis[j], h))
}

pub fn eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn lowest(m: DMatrix<f64>) -> f64 {
    eigenvalues(m)[0]
}

pub fn exact_sector_energy(molecule: &str, tag: &str) -> f64 {
    let p = problem(molecule, tag, "exact");
    let basis = p.model.enumerate_sector(&p.target);
    lowest(dense_hamiltonian(&basis, &p.integrals))
}

/// Full H over the exact sector, its block-diagonal part under `model`, and the labels.
pub fn dense_split(
    mol: &str,
    tag: &str,
    grouping_name: &str,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<IrrepLabel>, IrrepLabel) {
    let exact = problem(mol, tag, "exact");
    let p = problem(mol, tag, grouping_name);
    let basis = exact.model.enumerate_sector(&exact.target);
    let h = dense_hamiltonian(&basis, &exact.integrals);
    let labels: Vec<IrrepLabel> = basis.iter().map(|&d| p.model.irrep_of(d)).collect();
    let n = basis.len();
    let h_ref = DMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            h[(i, j)]
        } else {
            0.0
        }
    });
    (h, h_ref, labels, p.target)
}

/// Independent UC oracle: resolvent sum over the complete eigenbasis of the block-diagonal `H_ref`.
pub fn uc_oracle(mol: &str, tag: &str) -> (f64, f64) {
    let (h, h_ref, labels, target) = dense_split(mol, tag, "sbpt");
    let n = h.nrows();
    let eig = SymmetricEigen::new(h_ref.clone());
    // Reference state: lowest eigenvector of H_ref supported on the target sector.
    let in_target =
        |v: &nalgebra::DVectorView<f64>| (0..n).all(|i| labels[i] == target || v[i].abs() < 1e-12);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..n {
        let col = eig.eigenvectors.column(k);
        let weight: f64 = (0..n)
            .filter(|&i| labels[i] == target)
            .map(|i| col[i] * col[i])
            .sum();
        if weight > 0.5 && best.as_ref().is_none_or(|(e, _)| eig.eigenvalues[k] < *e) {
            best = Some((eig.eigenvalues[k], col.into_owned()));
        }
    }
    let (e0, psi0) = best.unwrap();
    assert!(in_target(&psi0.as_view()));
    let v = &h - &h_ref;
    let vpsi = &v * &psi0;
    let mut e2 = 0.0;
    for k in 0..n {
        let col = eig.eigenvectors.column(k);
        let on_target: f64 = (0..n)
            .filter(|&i| labels[i] == target)
            .map(|i| col[i] * col[i])
            .sum();
        if on_target > 0.5 {
            continue;
        }
        let overlap = col.dot(&vpsi);
        e2 += overlap * overlap / (e0 - eig.eigenvalues[k]);
    }
    (e0, e2)
}
