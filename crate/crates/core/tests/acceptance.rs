//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line before asserting.

mod common;

use std::time::{Duration, Instant};

use common::*;
use sbpt_core::driver::ResourceSpec;
use sbpt_core::eigensolver::DavidsonOptions;
use sbpt_core::hamiltonian::{build_sector_matrix, matrix_element, TermSource};
use sbpt_core::qubitmap::{jordan_wigner, taper, TaperingPlan};
use sbpt_core::sbpt::{first_order_value, reference_energy, Method, SbptOptions};
use sbpt_core::sci::{sci_energy, select, SciOptions};
use sbpt_core::symmetry::Determinant;

fn verdict(criterion: &str, ok: bool, detail: String) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

fn groupings(mol: &str) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture(&format!("{mol}/groupings")))
        .unwrap()
        .map(|e| {
            e.unwrap()
                .path()
                .file_stem()
                .unwrap()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    names.sort();
    names
}

fn resource_rows(mol: &str) -> (Vec<(String, usize, usize)>, Duration) {
    let start = Instant::now();
    let rows = ResourceSpec::load(fixture(&format!("{mol}/resources.json")))
        .unwrap()
        .report()
        .unwrap()
        .into_iter()
        .map(|r| (r.name, r.n_det, r.n_qubits))
        .collect();
    (rows, start.elapsed())
}

fn check_resources(criterion: &str, mol: &str, expect: &[(&str, usize, usize)]) {
    let (rows, elapsed) = resource_rows(mol);
    let got: Vec<String> = rows
        .iter()
        .map(|(n, c, q)| format!("{n}={c}/{q}q"))
        .collect();
    let ok = rows.len() == expect.len()
        && rows
            .iter()
            .zip(expect)
            .all(|((n, c, q), (en, ec, eq))| n == en && c == ec && q == eq)
        && elapsed < Duration::from_secs(1);
    verdict(
        criterion,
        ok,
        format!("{} in {elapsed:.2?}", got.join(", ")),
    );
}

#[test]
fn resource_counts_h2o() {
    check_resources(
        "resource counts, H2O",
        "h2o",
        &[
            ("Exact", 125, 9),
            ("CAS(4,4)", 36, 6),
            ("SBPT", 16, 4),
            ("CAS(4,3)", 9, 4),
        ],
    );
}

#[test]
fn resource_counts_n2() {
    check_resources(
        "resource counts, N2",
        "n2",
        &[
            ("Exact", 396, 11),
            ("CAS(6,6)", 56, 7),
            ("CAS(6,5)", 16, 6),
            ("SBPT", 32, 5),
        ],
    );
}

#[test]
fn first_order_vanishes() {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for mol in ["h2", "h2o", "n2"] {
        for point in &manifest(mol).points {
            for g in groupings(mol) {
                let p = problem(mol, &point.tag, &g);
                let reference =
                    reference_energy(&p.partition, &p.target, 0, &SbptOptions::default()).unwrap();
                worst = worst.max(first_order_value(&p.partition, &reference).abs());
                cases += 1;
            }
        }
    }
    verdict(
        "first-order vanishing",
        worst < 1e-10,
        format!("max |E1| = {worst:.2e} over {cases} point/grouping pairs"),
    );
}

#[test]
fn variational_bound() {
    let mut min_margin = f64::INFINITY;
    let mut exact_dev: f64 = 0.0;
    let mut ok = true;
    for mol in ["h2o", "n2"] {
        for point in &manifest(mol).points {
            let fci = exact_sector_energy(mol, &point.tag);
            let opts = SbptOptions::default();
            let sbpt = problem(mol, &point.tag, "sbpt");
            let e0 = reference_energy(&sbpt.partition, &sbpt.target, 0, &opts)
                .unwrap()
                .energy;
            let margin = e0 - fci;
            ok &= margin >= -1e-10;
            min_margin = min_margin.min(margin);
            let exact = problem(mol, &point.tag, "exact");
            let e_exact = reference_energy(&exact.partition, &exact.target, 0, &opts)
                .unwrap()
                .energy;
            exact_dev = exact_dev.max((e_exact - fci).abs());
        }
    }
    ok &= exact_dev < 1e-10;
    verdict(
        "variational bound",
        ok,
        format!(
            "min E0 - E_FCI = {:.3} mEh, trivial-group deviation {exact_dev:.1e}",
            min_margin * 1e3
        ),
    );
}

#[test]
fn uc_oracle_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (mol, tag) in [("h2o", "r=1.80"), ("n2", "r=1.80")] {
        let (e0, e2) = uc_oracle(mol, tag);
        let p = problem(mol, tag, "sbpt");
        let (res, _, _) = p.solve(&[Method::Uc], &SbptOptions::default()).unwrap();
        worst = worst
            .max((res.e0 - e0).abs())
            .max((res.e2(Method::Uc).unwrap() - e2).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        "UC oracle equivalence",
        worst < 1e-10 && elapsed < Duration::from_secs(10),
        format!("max deviation {worst:.2e} in {elapsed:.2?}"),
    );
}

/// Single-reference Epstein–Nesbet PT2 over explicit singles and doubles of one determinant.
fn en_pt2(reference: Determinant, h: &sbpt_core::integrals::IntegralSet) -> f64 {
    let n = h.n_spin_orbitals();
    let occ: Vec<usize> = (0..n).filter(|&p| reference.0 >> p & 1 == 1).collect();
    let vir: Vec<usize> = (0..n).filter(|&p| reference.0 >> p & 1 == 0).collect();
    let same_spin = |a: usize, b: usize| a % 2 == b % 2;
    let e0 = matrix_element(reference, reference, h);
    let mut excited = Vec::new();
    for &i in &occ {
        for &a in vir.iter().filter(|&&a| same_spin(i, a)) {
            excited.push(reference.0 ^ (1 << i) ^ (1 << a));
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    let spins_kept = (same_spin(i, a) && same_spin(j, b))
                        || (same_spin(i, b) && same_spin(j, a));
                    if spins_kept {
                        excited.push(reference.0 ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b));
                    }
                }
            }
        }
    }
    excited.sort_unstable();
    excited.dedup();
    let mut e2 = 0.0;
    for bits in excited {
        let d = Determinant(bits);
        let v = matrix_element(d, reference, h);
        e2 += v * v / (e0 - matrix_element(d, d, h));
    }
    e0 + e2
}

#[test]
fn enpt_reduction() {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for mol in ["h2o", "n2"] {
        for point in &manifest(mol).points {
            let p = problem(mol, &point.tag, "enpt");
            let (res, reference, _) = p.solve(&[Method::En], &SbptOptions::default()).unwrap();
            assert_eq!(reference.basis.len(), 1);
            let oracle = en_pt2(reference.basis[0], &p.integrals);
            worst = worst.max((res.total(Method::En).unwrap() - oracle).abs());
            points += 1;
        }
    }
    verdict(
        "ENPT reduction",
        worst < 1e-10,
        format!("max deviation {worst:.2e} over {points} points"),
    );
}

#[test]
fn sc_sanity() {
    let all = [Method::Uc, Method::Sc, Method::En];
    let mut ok = true;
    let mut gaps = Vec::new();
    for point in &manifest("n2").points {
        let r: f64 = point.tag.trim_start_matches("r=").parse().unwrap();
        if r < 2.0 {
            continue;
        }
        let p = problem("n2", &point.tag, "sbpt");
        let (res, _, _) = p.solve(&all, &SbptOptions::default()).unwrap();
        let uc = res.e2(Method::Uc).unwrap();
        let sc_gap = (res.e2(Method::Sc).unwrap() - uc).abs();
        let en_gap = (res.e2(Method::En).unwrap() - uc).abs();
        ok &= sc_gap < en_gap;
        gaps.push(format!(
            "{}:{:.2}<{:.2}",
            point.tag,
            sc_gap * 1e3,
            en_gap * 1e3
        ));
    }
    let mut max_err: f64 = 0.0;
    for point in &manifest("h2o").points {
        let p = problem("h2o", &point.tag, "sbpt");
        let (res, _, _) = p.solve(&[Method::Sc], &SbptOptions::default()).unwrap();
        let fci = exact_sector_energy("h2o", &point.tag);
        max_err = max_err.max((res.total(Method::Sc).unwrap() - fci).abs());
    }
    ok &= max_err < 25e-3;
    verdict(
        "SC sanity",
        ok,
        format!(
            "N2 |SC-UC| vs |EN-UC| (mEh) {}; H2O max SC error {:.2} mEh",
            gaps.join(" "),
            max_err * 1e3
        ),
    );
}

#[test]
fn sci_counts_and_energies() {
    let davidson = DavidsonOptions::default();
    let mut counts = Vec::new();
    let mut ok = true;
    for (mol, n_det, n_irreps) in [("h2o", 116, 20), ("n2", 280, 28)] {
        let p = problem(mol, "r=1.80", "sbpt");
        let (res, reference, perts) = p.solve(&[Method::Sc], &SbptOptions::default()).unwrap();
        let sel = select(
            &reference,
            &perts,
            &res.second_order[&Method::Sc],
            &SciOptions::default(),
            "r=1.80",
        );
        let got = (sel.selected_dets.len(), sel.n_irreps(&reference, &perts));
        ok &= got == (n_det, n_irreps);
        counts.push(format!("{mol} {} dets/{} irreps", got.0, got.1));
    }
    // Variational and monotone at every point as the cutoffs tighten.
    let mut checked = 0;
    for mol in ["h2o", "n2"] {
        for point in &manifest(mol).points {
            let p = problem(mol, &point.tag, "sbpt");
            let (res, reference, perts) = p.solve(&[Method::Sc], &SbptOptions::default()).unwrap();
            let sc = &res.second_order[&Method::Sc];
            let fci = exact_sector_energy(mol, &point.tag);
            let mut last = f64::INFINITY;
            for (eps1, eps2) in [
                (1e-2, 1e-1),
                (1e-3, 1e-1),
                (1e-4, 1e-2),
                (1e-5, 1e-2),
                (1e-6, 1e-3),
                (0.0, 0.0),
            ] {
                let opts = SciOptions {
                    eps1,
                    eps2,
                    ..SciOptions::default()
                };
                let sel = select(&reference, &perts, sc, &opts, &point.tag);
                let e = sci_energy(&sel.selected_dets, &p.integrals, &davidson).unwrap();
                ok &= e >= fci - 1e-10 && e <= last + 1e-10;
                last = e;
                checked += 1;
            }
        }
    }
    verdict(
        "SCI counts",
        ok,
        format!(
            "{}; {checked} variational/monotone checks",
            counts.join(", ")
        ),
    );
}

fn spectra_deviation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn tapering_spectral_exactness() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    for (mol, tag) in [("h2", "r=0.74"), ("h2o", "r=1.80")] {
        let p = problem(mol, tag, "exact");
        let n = p.integrals.n_spin_orbitals();
        let ph = jordan_wigner(p.partition.all_terms(), p.partition.core_energy, n).unwrap();
        let plan = TaperingPlan::from_model(&p.model, &p.target).unwrap();
        let tapered = taper(&ph, &plan).unwrap();
        let projected = eigenvalues(ph.matrix_on(&plan.sector_states()).unwrap());
        let reduced = eigenvalues(tapered.dense_matrix().unwrap());
        let dev = spectra_deviation(&projected, &reduced);
        worst = worst.max(dev);
        details.push(format!(
            "{mol} {n}->{} qubits dev {dev:.1e}",
            tapered.n_qubits
        ));
    }
    let elapsed = start.elapsed();
    verdict(
        "tapering spectral exactness",
        worst < 1e-10 && elapsed < Duration::from_secs(60),
        format!("{} in {elapsed:.2?}", details.join(", ")),
    );
}

#[test]
fn jw_determinant_consistency() {
    let mut worst: f64 = 0.0;
    for (mol, tag, g) in [("h2", "r=0.74", "exact"), ("h2o", "r=1.80", "sbpt")] {
        let p = problem(mol, tag, g);
        let basis = p.model.enumerate_sector(&p.target);
        let states: Vec<u64> = basis.iter().map(|d| d.0).collect();
        let n = p.integrals.n_spin_orbitals();
        let slater = dense_hamiltonian(&basis, &p.integrals);
        let full = jordan_wigner(p.partition.all_terms(), p.partition.core_energy, n)
            .unwrap()
            .matrix_on(&states)
            .unwrap();
        let reference = jordan_wigner(&p.partition.ref_terms, p.partition.core_energy, n)
            .unwrap()
            .matrix_on(&states)
            .unwrap();
        let built = build_sector_matrix(&basis, TermSource::Reference(&p.partition))
            .unwrap()
            .matrix
            .to_dense();
        worst = worst
            .max((full - &slater).abs().max())
            .max((reference - &slater).abs().max())
            .max((built - &slater).abs().max());
    }
    verdict(
        "JW/determinant consistency",
        worst < 1e-10,
        format!("max element deviation {worst:.2e}"),
    );
}
