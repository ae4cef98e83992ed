mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use sbpt_core::hamiltonian::fermion_terms;
use sbpt_core::symmetry::{perturbation_norm, suggest_grouping, IrrepLabel, SymmetryModel};

#[test]
fn h2o_exact_sector_has_125_determinants() {
    let p = problem("h2o", "r=1.80", "exact");
    assert_eq!(p.model.k(), 1);
    assert_eq!(p.model.enumerate_sector(&p.target).len(), 125);
}

#[test]
fn h2o_exact_sector_splits_into_25_irreps() {
    let exact = problem("h2o", "r=1.80", "exact");
    let sbpt = problem("h2o", "r=1.80", "sbpt");
    let labels: BTreeSet<IrrepLabel> = exact
        .model
        .enumerate_sector(&exact.target)
        .into_iter()
        .map(|d| sbpt.model.irrep_of(d))
        .collect();
    assert_eq!(labels.len(), 25);
}

#[test]
fn n2_exact_sector_has_396_determinants_in_55_irreps() {
    let exact = problem("n2", "r=1.80", "exact");
    let dets = exact.model.enumerate_sector(&exact.target);
    assert_eq!(dets.len(), 396);
    let sbpt = problem("n2", "r=1.80", "sbpt");
    let labels: HashSet<_> = dets.iter().map(|&d| sbpt.model.irrep_of(d)).collect();
    assert_eq!(labels.len(), 55);
}

#[test]
fn h2o_sbpt_reference_sector_has_16_determinants() {
    let p = problem("h2o", "r=1.80", "sbpt");
    assert_eq!(p.model.enumerate_sector(&p.target).len(), 16);
}

fn check_partition(model: &SymmetryModel) {
    let all = model.all_determinants();
    let mut seen = HashSet::new();
    let mut total = 0;
    for bits in 0..1u64 << model.k() {
        let label = IrrepLabel::from_bits(bits, model.k());
        let sector = model.enumerate_sector(&label);
        assert!(sector.windows(2).all(|w| w[0] < w[1]));
        for d in &sector {
            assert_eq!(model.irrep_of(*d), label);
            assert!(seen.insert(*d), "{d} in two sectors");
        }
        total += sector.len();
    }
    assert_eq!(total, all.len());
}

#[test]
fn sectors_partition_the_fixed_count_space() {
    for (mol, g) in [
        ("h2o", "exact"),
        ("h2o", "sbpt"),
        ("h2o", "cas43"),
        ("n2", "exact"),
        ("n2", "sbpt"),
        ("n2", "cas65"),
    ] {
        check_partition(&problem(mol, "r=1.80", g).model);
    }
}

#[test]
fn exact_grouping_has_zero_norm_and_ranks_first() {
    let ints = integrals("h2o", "r=1.80");
    let (na, nb) = ints.n_alpha_beta();
    let terms = fermion_terms(&ints);
    let sbpt = grouping("h2o", "sbpt").model(6, na, nb).unwrap();
    let exact = grouping("h2o", "exact").model(6, na, nb).unwrap();
    assert!(perturbation_norm(&terms, &exact) < 1e-12);
    let ranked = suggest_grouping(&terms, &[sbpt.clone(), exact.clone()]);
    assert_eq!(ranked[0].0, exact);
    assert_eq!(ranked[0].1, 0.0);

    let single = suggest_grouping(&terms, std::slice::from_ref(&sbpt));
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].0, sbpt);
    assert_eq!(single[0].1, perturbation_norm(&terms, &sbpt));
}

#[test]
fn spin_split_grouping_beats_orbital_split() {
    let ints = integrals("h2o", "r=1.80");
    let (na, nb) = ints.n_alpha_beta();
    let terms = fermion_terms(&ints);
    let spin_split = grouping("h2o", "sbpt").model(6, na, nb).unwrap();
    let orbital_split = grouping("h2o", "sbpt_orbital_split")
        .model(6, na, nb)
        .unwrap();
    let ranked = suggest_grouping(&terms, &[orbital_split.clone(), spin_split.clone()]);
    assert_eq!(ranked[0].0, spin_split);
    assert!(ranked[0].1 < ranked[1].1);
}

#[test]
fn equal_norms_prefer_more_generators_then_input_order() {
    let ints = integrals("h2o", "r=1.80");
    let (na, nb) = ints.n_alpha_beta();
    let terms = fermion_terms(&ints);
    let exact = grouping("h2o", "exact").model(6, na, nb).unwrap();
    // Adding the total-parity generator changes nothing about the partition.
    let mut larger = exact.clone();
    larger.generators.push(
        sbpt_core::symmetry::Z2Generator::new(
            &(0..12).collect::<Vec<_>>(),
            sbpt_core::symmetry::Origin::ParticleNumber,
        )
        .unwrap(),
    );
    let ranked = suggest_grouping(&terms, &[exact.clone(), larger.clone(), exact.clone()]);
    assert_eq!(ranked[0].0, larger);
    assert_eq!(ranked[1].0, exact);
}
