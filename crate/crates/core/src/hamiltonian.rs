//! Second-quantized Hamiltonian: term list, symmetry partitioning, Slater–Condon
//! matrix elements and sparse sector matrices.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::integrals::IntegralSet;
use crate::symmetry::{Determinant, IrrepLabel, SymmetryModel};

pub const TERM_DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    /// `a†_p a_q`
    OneBody { p: usize, q: usize },
    /// `a†_p a†_q a_r a_s` with `p < q` and `r > s`
    TwoBody {
        p: usize,
        q: usize,
        r: usize,
        s: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermTerm {
    pub kind: TermKind,
    pub coefficient: f64,
}

/// Sign `(-1)^(occupied orbitals below p)`.
#[inline]
fn parity_below(bits: u64, p: usize) -> f64 {
    if (bits & ((1u64 << p) - 1)).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn annihilate(bits: u64, p: usize) -> Option<(u64, f64)> {
    if bits >> p & 1 == 0 {
        return None;
    }
    Some((bits & !(1u64 << p), parity_below(bits, p)))
}

#[inline]
fn create(bits: u64, p: usize) -> Option<(u64, f64)> {
    if bits >> p & 1 == 1 {
        return None;
    }
    Some((bits | 1u64 << p, parity_below(bits, p)))
}

impl FermTerm {
    pub fn one_body(p: usize, q: usize, coefficient: f64) -> Self {
        Self {
            kind: TermKind::OneBody { p, q },
            coefficient,
        }
    }

    pub fn two_body(p: usize, q: usize, r: usize, s: usize, coefficient: f64) -> Self {
        Self {
            kind: TermKind::TwoBody { p, q, r, s },
            coefficient,
        }
    }

    /// XOR of the single-bit masks of every operator index.
    pub fn index_mask(&self) -> u64 {
        match self.kind {
            TermKind::OneBody { p, q } => (1u64 << p) ^ (1u64 << q),
            TermKind::TwoBody { p, q, r, s } => {
                (1u64 << p) ^ (1u64 << q) ^ (1u64 << r) ^ (1u64 << s)
            }
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        match self.kind {
            TermKind::OneBody { p, q } => vec![p, q],
            TermKind::TwoBody { p, q, r, s } => vec![p, q, r, s],
        }
    }

    /// Action of the operator string (without the coefficient) on a determinant.
    #[inline]
    pub fn act(&self, d: Determinant) -> Option<(Determinant, f64)> {
        let (bits, sign) = match self.kind {
            TermKind::OneBody { p, q } => {
                let (b, s1) = annihilate(d.0, q)?;
                let (b, s2) = create(b, p)?;
                (b, s1 * s2)
            }
            TermKind::TwoBody { p, q, r, s } => {
                let (b, s1) = annihilate(d.0, s)?;
                let (b, s2) = annihilate(b, r)?;
                let (b, s3) = create(b, q)?;
                let (b, s4) = create(b, p)?;
                (b, s1 * s2 * s3 * s4)
            }
        };
        Some((Determinant(bits), sign))
    }

    /// The term with creation and annihilation parts swapped (same coefficient for real H).
    pub fn adjoint(&self) -> FermTerm {
        let kind = match self.kind {
            TermKind::OneBody { p, q } => TermKind::OneBody { p: q, q: p },
            TermKind::TwoBody { p, q, r, s } => TermKind::TwoBody {
                p: s,
                q: r,
                r: q,
                s: p,
            },
        };
        FermTerm {
            kind,
            coefficient: self.coefficient,
        }
    }
}

/// Spin-orbital chemist integral `(pq|rs)` with spin selection.
#[inline]
fn eri_so(h: &IntegralSet, p: usize, q: usize, r: usize, s: usize) -> f64 {
    if (p ^ q) & 1 == 0 && (r ^ s) & 1 == 0 {
        h.eri(p / 2, q / 2, r / 2, s / 2)
    } else {
        0.0
    }
}

#[inline]
fn h1_so(h: &IntegralSet, p: usize, q: usize) -> f64 {
    if (p ^ q) & 1 == 0 {
        h.h1(p / 2, q / 2)
    } else {
        0.0
    }
}

/// Normal-ordered spin-orbital terms of the electronic Hamiltonian (core energy excluded).
pub fn fermion_terms(h: &IntegralSet) -> Vec<FermTerm> {
    let n = h.n_spin_orbitals();
    let mut out = Vec::new();
    for p in 0..n {
        for q in 0..n {
            let c = h1_so(h, p, q);
            if c.abs() >= TERM_DROP_TOL {
                out.push(FermTerm::one_body(p, q, c));
            }
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            for r in 0..n {
                for s in 0..r {
                    let c = eri_so(h, p, s, q, r) - eri_so(h, p, r, q, s);
                    if c.abs() >= TERM_DROP_TOL {
                        out.push(FermTerm::two_body(p, q, r, s, c));
                    }
                }
            }
        }
    }
    out
}

/// Irrep shift produced by a term: parity of its indices on each generator support.
pub fn classify_term(t: &FermTerm, m: &SymmetryModel) -> IrrepLabel {
    m.shift_of_mask(t.index_mask())
}

/// `H = H_ref + Σ V_shift`, with `H_ref` holding exactly the symmetry-preserving terms.
#[derive(Debug, Clone)]
pub struct PartitionedHamiltonian {
    pub model: SymmetryModel,
    pub ref_terms: Vec<FermTerm>,
    pub pert_blocks: BTreeMap<IrrepLabel, Vec<FermTerm>>,
    pub core_energy: f64,
}

impl PartitionedHamiltonian {
    /// Optimal partitioning of the integral Hamiltonian under `model`.
    pub fn new(h: &IntegralSet, model: &SymmetryModel) -> Self {
        Self::partition(fermion_terms(h), h.core_energy, model)
    }

    pub fn partition(terms: Vec<FermTerm>, core_energy: f64, model: &SymmetryModel) -> Self {
        let mut ref_terms = Vec::new();
        let mut pert_blocks: BTreeMap<IrrepLabel, Vec<FermTerm>> = BTreeMap::new();
        for t in terms {
            let shift = classify_term(&t, model);
            if shift.is_zero() {
                ref_terms.push(t);
            } else {
                pert_blocks.entry(shift).or_default().push(t);
            }
        }
        Self {
            model: model.clone(),
            ref_terms,
            pert_blocks,
            core_energy,
        }
    }

    /// Builds a partition from an explicit assignment without checking it.
    /// `assign[i] = None` puts term `i` into `H_ref`.
    pub fn from_assignment(
        terms: Vec<FermTerm>,
        assign: &[Option<IrrepLabel>],
        core_energy: f64,
        model: &SymmetryModel,
    ) -> Self {
        let mut ref_terms = Vec::new();
        let mut pert_blocks: BTreeMap<IrrepLabel, Vec<FermTerm>> = BTreeMap::new();
        for (t, a) in terms.into_iter().zip(assign) {
            match a {
                None => ref_terms.push(t),
                Some(l) => pert_blocks.entry(*l).or_default().push(t),
            }
        }
        Self {
            model: model.clone(),
            ref_terms,
            pert_blocks,
            core_energy,
        }
    }

    /// Checks that every block holds only terms with its own shift and `H_ref` only invariant ones.
    pub fn validate(&self) -> Result<()> {
        for t in &self.ref_terms {
            let s = classify_term(t, &self.model);
            if !s.is_zero() {
                return Err(Error::Usage(format!(
                    "reference term {:?} shifts the irrep by {s}",
                    t.kind
                )));
            }
        }
        for (shift, terms) in &self.pert_blocks {
            if shift.is_zero() {
                return Err(Error::Usage("perturbation block with zero shift".into()));
            }
            for t in terms {
                let s = classify_term(t, &self.model);
                if s != *shift {
                    return Err(Error::Usage(format!(
                        "term {:?} filed under {shift} but shifts by {s}",
                        t.kind
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_terms(&self) -> usize {
        self.ref_terms.len() + self.pert_blocks.values().map(Vec::len).sum::<usize>()
    }

    pub fn pert_terms(&self) -> impl Iterator<Item = &FermTerm> {
        self.pert_blocks.values().flatten()
    }

    pub fn pert_norm(&self) -> f64 {
        self.pert_terms()
            .map(|t| t.coefficient * t.coefficient)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_terms(&self) -> impl Iterator<Item = &FermTerm> {
        self.ref_terms.iter().chain(self.pert_terms())
    }
}

/// Slater–Condon matrix element `<a|H|b>`, core energy included on the diagonal.
pub fn matrix_element(a: Determinant, b: Determinant, h: &IntegralSet) -> f64 {
    if a.n_electrons() != b.n_electrons() {
        return 0.0;
    }
    let diff = a.0 ^ b.0;
    match diff.count_ones() {
        0 => {
            let occ: Vec<usize> = a.occupied().collect();
            let mut e = h.core_energy;
            for &i in &occ {
                e += h1_so(h, i, i);
                for &j in &occ {
                    e += 0.5 * (eri_so(h, i, i, j, j) - eri_so(h, i, j, j, i));
                }
            }
            e
        }
        2 => {
            let p = (a.0 & diff).trailing_zeros() as usize;
            let q = (b.0 & diff).trailing_zeros() as usize;
            let Some((_, sign)) = FermTerm::one_body(p, q, 1.0).act(b) else {
                return 0.0;
            };
            let mut v = h1_so(h, p, q);
            for j in Determinant(a.0 & b.0).occupied() {
                v += eri_so(h, p, q, j, j) - eri_so(h, p, j, j, q);
            }
            sign * v
        }
        4 => {
            let mut created = Determinant(a.0 & diff).occupied();
            let mut removed = Determinant(b.0 & diff).occupied();
            let (p, q) = (created.next().unwrap(), created.next().unwrap());
            let (r, s) = (removed.next().unwrap(), removed.next().unwrap());
            // a†_p a†_q a_s a_r |b> = sign |a>
            let Some((_, sign)) = FermTerm::two_body(p, q, s, r, 1.0).act(b) else {
                return 0.0;
            };
            sign * (eri_so(h, p, r, q, s) - eri_so(h, p, s, q, r))
        }
        _ => 0.0,
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

const PAR_MATVEC_ROWS: usize = 4096;

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let keep: Vec<bool> = values.iter().map(|&v| v != 0.0).collect();
        let mut k = 0;
        rows.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        let mut k = 0;
        col_idx.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        values.retain(|&v| v != 0.0);
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let row_dot = |r: usize| self.row(r).map(|(c, v)| v * x[c]).sum::<f64>();
        if self.n_rows >= PAR_MATVEC_ROWS {
            use rayon::prelude::*;
            (0..self.n_rows).into_par_iter().map(row_dot).collect()
        } else {
            (0..self.n_rows).map(row_dot).collect()
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Largest `|A_rc - A_cr|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }
}

/// Symmetric Hamiltonian block over a sorted determinant basis.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub basis: Vec<Determinant>,
    pub matrix: SparseMatrix,
}

impl SectorMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Which terms contribute to an assembled matrix.
#[derive(Debug, Clone, Copy)]
pub enum TermSource<'a> {
    /// Every term plus the core energy.
    Full(&'a PartitionedHamiltonian),
    /// `H_ref` terms plus the core energy.
    Reference(&'a PartitionedHamiltonian),
    /// A bare term list, no constant.
    Block(&'a [FermTerm]),
}

impl<'a> TermSource<'a> {
    fn for_each_term(&self, mut f: impl FnMut(&FermTerm)) {
        match self {
            TermSource::Full(p) => p.all_terms().for_each(&mut f),
            TermSource::Reference(p) => p.ref_terms.iter().for_each(&mut f),
            TermSource::Block(ts) => ts.iter().for_each(&mut f),
        }
    }

    fn constant(&self) -> f64 {
        match self {
            TermSource::Full(p) | TermSource::Reference(p) => p.core_energy,
            TermSource::Block(_) => 0.0,
        }
    }
}

pub fn check_sorted(basis: &[Determinant]) -> Result<()> {
    if basis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("basis must be strictly ascending".into()));
    }
    Ok(())
}

/// Rectangular matrix `<row_basis| terms |col_basis>`; bases must be sorted.
pub fn build_rectangular(
    row_basis: &[Determinant],
    col_basis: &[Determinant],
    source: TermSource<'_>,
) -> Result<SparseMatrix> {
    check_sorted(row_basis)?;
    check_sorted(col_basis)?;
    let constant = source.constant();
    let mut triplets = Vec::new();
    for (j, &d) in col_basis.iter().enumerate() {
        source.for_each_term(|t| {
            if let Some((e, sign)) = t.act(d) {
                if let Ok(i) = row_basis.binary_search(&e) {
                    triplets.push((i, j, sign * t.coefficient));
                }
            }
        });
        if constant != 0.0 {
            if let Ok(i) = row_basis.binary_search(&d) {
                triplets.push((i, j, constant));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(
        row_basis.len(),
        col_basis.len(),
        triplets,
    ))
}

/// Square sector matrix by term action; with [`TermSource::Full`] it matches [`matrix_element`].
pub fn build_sector_matrix(basis: &[Determinant], source: TermSource<'_>) -> Result<SectorMatrix> {
    let matrix = build_rectangular(basis, basis, source)?;
    Ok(SectorMatrix {
        basis: basis.to_vec(),
        matrix,
    })
}

/// Sector matrix from pairwise Slater–Condon rules.
pub fn slater_condon_matrix(basis: &[Determinant], h: &IntegralSet) -> Result<SectorMatrix> {
    check_sorted(basis)?;
    let n = basis.len();
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = matrix_element(basis[i], basis[j], h);
            if v != 0.0 {
                triplets.push((i, j, v));
                if i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    Ok(SectorMatrix {
        basis: basis.to_vec(),
        matrix: SparseMatrix::from_triplets(n, n, triplets),
    })
}

/// `terms · psi`, mapping `source` coefficients onto `target`.
/// Any image determinant outside `target` is a usage error.
pub fn apply_terms(
    terms: &[FermTerm],
    psi: &[f64],
    source: &[Determinant],
    target: &[Determinant],
) -> Result<Vec<f64>> {
    if psi.len() != source.len() {
        return Err(Error::Usage(
            "coefficient vector does not match its basis".into(),
        ));
    }
    check_sorted(target)?;
    let mut out = vec![0.0; target.len()];
    for (&d, &c) in source.iter().zip(psi) {
        if c == 0.0 {
            continue;
        }
        for t in terms {
            if let Some((e, sign)) = t.act(d) {
                let i = target.binary_search(&e).map_err(|_| {
                    Error::Usage(format!(
                        "term maps {d} to {e}, which is outside the target basis"
                    ))
                })?;
                out[i] += sign * t.coefficient * c;
            }
        }
    }
    Ok(out)
}

/// `V_{θ⊕shift, θ} psi` for one perturbation block.
pub fn apply_block(
    part: &PartitionedHamiltonian,
    shift: &IrrepLabel,
    psi: &[f64],
    source: &[Determinant],
    target: &[Determinant],
) -> Result<Vec<f64>> {
    let terms = part
        .pert_blocks
        .get(shift)
        .map(Vec::as_slice)
        .unwrap_or(&[]);
    if let (Some(&s), Some(&t)) = (source.first(), target.first()) {
        let m = &part.model;
        if m.irrep_of(s).xor(shift) != m.irrep_of(t) {
            return Err(Error::Usage(format!(
                "target sector {} is not source {} shifted by {shift}",
                m.irrep_of(t),
                m.irrep_of(s)
            )));
        }
    }
    apply_terms(terms, psi, source, target)
}

/// Sparse image `terms · psi` without restricting the target space.
pub fn apply_terms_free(
    terms: &[FermTerm],
    psi: &[f64],
    source: &[Determinant],
) -> HashMap<Determinant, f64> {
    let mut out: HashMap<Determinant, f64> = HashMap::new();
    for (&d, &c) in source.iter().zip(psi) {
        if c == 0.0 {
            continue;
        }
        for t in terms {
            if let Some((e, sign)) = t.act(d) {
                *out.entry(e).or_insert(0.0) += sign * t.coefficient * c;
            }
        }
    }
    out
}
