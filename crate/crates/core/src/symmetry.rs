//! Z2 parity symmetries over spin-orbital subsets, irrep labels and sector enumeration.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::FermTerm;

/// Occupation bitstring over interleaved spin orbitals (bit `p` set means occupied).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Determinant(pub u64);

impl Determinant {
    pub fn from_occupied(orbitals: &[usize]) -> Self {
        Self(orbitals.iter().fold(0u64, |acc, &p| acc | (1u64 << p)))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, p: usize) -> bool {
        self.0 >> p & 1 == 1
    }

    pub fn n_electrons(self) -> u32 {
        self.0.count_ones()
    }

    pub fn occupied(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let p = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(p)
            }
        })
    }

    /// Alpha (even) and beta (odd) occupations compressed to spatial-orbital bitstrings.
    pub fn split_spins(self) -> (u64, u64) {
        (compress_even(self.0), compress_even(self.0 >> 1))
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

fn compress_even(x: u64) -> u64 {
    let mut out = 0;
    for i in 0..32 {
        out |= (x >> (2 * i) & 1) << i;
    }
    out
}

fn spread_even(x: u64) -> u64 {
    let mut out = 0;
    for i in 0..32 {
        out |= (x >> i & 1) << (2 * i);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    ExactPointGroup,
    ApproximatePointGroup,
    ParticleNumber,
}

/// Parity operator over the spin orbitals in `support`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Z2Generator {
    pub support: Vec<usize>,
    pub origin: Origin,
    mask: u64,
}

impl Z2Generator {
    pub fn new(support: &[usize], origin: Origin) -> Result<Self> {
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::Usage("generator support is empty".into()));
        }
        if support.iter().any(|&p| p >= 64) {
            return Err(Error::Range("spin-orbital index exceeds 63".into()));
        }
        let mask = support.iter().fold(0u64, |m, &p| m | 1u64 << p);
        Ok(Self {
            support,
            origin,
            mask,
        })
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn parity(&self, bits: u64) -> u8 {
        ((bits & self.mask).count_ones() & 1) as u8
    }
}

/// Parity vector: component `a` is the electron count in generator `a`'s support mod 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IrrepLabel {
    bits: u64,
    len: u8,
}

impl IrrepLabel {
    pub fn new(parities: &[u8]) -> Self {
        assert!(parities.len() <= 64);
        let bits = parities
            .iter()
            .enumerate()
            .fold(0u64, |acc, (a, &v)| acc | (((v & 1) as u64) << a));
        Self {
            bits,
            len: parities.len() as u8,
        }
    }

    pub fn zero(len: usize) -> Self {
        Self {
            bits: 0,
            len: len as u8,
        }
    }

    pub fn from_bits(bits: u64, len: usize) -> Self {
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        Self {
            bits: bits & mask,
            len: len as u8,
        }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn get(&self, a: usize) -> u8 {
        (self.bits >> a & 1) as u8
    }

    pub fn parities(&self) -> Vec<u8> {
        (0..self.len()).map(|a| self.get(a)).collect()
    }

    pub fn xor(&self, other: &IrrepLabel) -> IrrepLabel {
        debug_assert_eq!(self.len, other.len);
        Self {
            bits: self.bits ^ other.bits,
            len: self.len,
        }
    }
}

impl Ord for IrrepLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.bits.reverse_bits().cmp(&other.bits.reverse_bits()))
    }
}

impl PartialOrd for IrrepLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("-");
        }
        for a in 0..self.len() {
            write!(f, "{}", self.get(a))?;
        }
        Ok(())
    }
}

/// Fixed alpha/beta electron counts plus an ordered list of Z2 generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryModel {
    pub n_spatial: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub generators: Vec<Z2Generator>,
}

impl SymmetryModel {
    pub fn new(
        n_spatial: usize,
        n_alpha: usize,
        n_beta: usize,
        generators: Vec<Z2Generator>,
    ) -> Result<Self> {
        if n_spatial > 32 {
            return Err(Error::Capacity {
                dim: n_spatial,
                limit: 32,
            });
        }
        if n_alpha > n_spatial || n_beta > n_spatial {
            return Err(Error::Range(format!(
                "{n_alpha} alpha / {n_beta} beta electrons in {n_spatial} orbitals"
            )));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.support.iter().any(|&p| p >= 2 * n_spatial) {
                return Err(Error::Range(format!(
                    "generator {i} references a spin orbital beyond {}",
                    2 * n_spatial - 1
                )));
            }
            if generators[..i].iter().any(|h| h.mask == g.mask) {
                return Err(Error::Usage(format!(
                    "generator {i} duplicates an earlier one"
                )));
            }
        }
        Ok(Self {
            n_spatial,
            n_alpha,
            n_beta,
            generators,
        })
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn irrep_of(&self, d: Determinant) -> IrrepLabel {
        irrep_bits(&self.generators, d.0)
    }

    /// Shift produced by toggling the spin orbitals in `mask` (XOR of all operator indices).
    pub fn shift_of_mask(&self, mask: u64) -> IrrepLabel {
        irrep_bits(&self.generators, mask)
    }

    pub fn label(&self, parities: &[u8]) -> Result<IrrepLabel> {
        if parities.len() != self.k() || parities.iter().any(|&v| v > 1) {
            return Err(Error::Usage(format!(
                "target needs {} parities in {{0,1}}",
                self.k()
            )));
        }
        Ok(IrrepLabel::new(parities))
    }

    pub fn enumerate_sector(&self, target: &IrrepLabel) -> Vec<Determinant> {
        enumerate_sector(self, target, self.n_spatial)
    }

    /// Every alpha/beta-restricted determinant, sorted.
    pub fn all_determinants(&self) -> Vec<Determinant> {
        let mut out = Vec::new();
        for a in combinations(self.n_spatial, self.n_alpha) {
            for b in combinations(self.n_spatial, self.n_beta) {
                out.push(Determinant(spread_even(a) | spread_even(b) << 1));
            }
        }
        out.sort_unstable();
        out
    }
}

fn irrep_bits(generators: &[Z2Generator], bits: u64) -> IrrepLabel {
    let mut out = 0u64;
    for (a, g) in generators.iter().enumerate() {
        out |= (g.parity(bits) as u64) << a;
    }
    IrrepLabel {
        bits: out,
        len: generators.len() as u8,
    }
}

/// Free-standing form of [`SymmetryModel::irrep_of`].
pub fn irrep_of(d: Determinant, m: &SymmetryModel) -> IrrepLabel {
    m.irrep_of(d)
}

/// All `n`-bit strings over `m` positions with `k` bits set, ascending.
pub fn combinations(m: usize, k: usize) -> Vec<u64> {
    if k > m {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut x: u64 = (1u64 << k) - 1;
    let limit = 1u64 << m;
    while x < limit {
        out.push(x);
        // Gosper's hack
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// Determinants with the model's alpha/beta counts whose label equals `target`, sorted ascending.
pub fn enumerate_sector(
    m: &SymmetryModel,
    target: &IrrepLabel,
    n_spatial: usize,
) -> Vec<Determinant> {
    if target.len() != m.k() || m.n_alpha > n_spatial || m.n_beta > n_spatial {
        return Vec::new();
    }
    let mut by_label: HashMap<u64, Vec<u64>> = HashMap::new();
    for b in combinations(n_spatial, m.n_beta) {
        let bits = spread_even(b) << 1;
        by_label
            .entry(irrep_bits(&m.generators, bits).bits)
            .or_default()
            .push(bits);
    }
    let mut out = Vec::new();
    for a in combinations(n_spatial, m.n_alpha) {
        let abits = spread_even(a);
        let need = irrep_bits(&m.generators, abits).bits ^ target.bits;
        if let Some(betas) = by_label.get(&need) {
            out.extend(betas.iter().map(|&b| Determinant(abits | b)));
        }
    }
    out.sort_unstable();
    out
}

/// Norm of the perturbation under the optimal partitioning induced by `model`.
pub fn perturbation_norm(terms: &[FermTerm], model: &SymmetryModel) -> f64 {
    terms
        .iter()
        .filter(|t| !model.shift_of_mask(t.index_mask()).is_zero())
        .map(|t| t.coefficient * t.coefficient)
        .sum::<f64>()
        .sqrt()
}

/// Ranks candidate models by ascending perturbation norm; ties favour more generators, then input order.
pub fn suggest_grouping(
    terms: &[FermTerm],
    candidates: &[SymmetryModel],
) -> Vec<(SymmetryModel, f64)> {
    let mut ranked: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, m)| (i, perturbation_norm(terms, m)))
        .collect();
    ranked.sort_by(|(i, a), (j, b)| {
        a.total_cmp(b)
            .then_with(|| candidates[*j].k().cmp(&candidates[*i].k()))
            .then_with(|| i.cmp(j))
    });
    ranked
        .into_iter()
        .map(|(i, n)| (candidates[i].clone(), n))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub orbitals: Vec<usize>,
    pub origin: Origin,
}

/// On-disk grouping description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupingFile {
    pub generators: Vec<GeneratorSpec>,
    pub target_parities: Vec<u8>,
}

impl GroupingFile {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn model(&self, n_spatial: usize, n_alpha: usize, n_beta: usize) -> Result<SymmetryModel> {
        let gens = self
            .generators
            .iter()
            .map(|g| Z2Generator::new(&g.orbitals, g.origin))
            .collect::<Result<Vec<_>>>()?;
        SymmetryModel::new(n_spatial, n_alpha, n_beta, gens)
    }

    pub fn model_and_target(
        &self,
        n_spatial: usize,
        n_alpha: usize,
        n_beta: usize,
    ) -> Result<(SymmetryModel, IrrepLabel)> {
        let model = self.model(n_spatial, n_alpha, n_beta)?;
        let target = model.label(&self.target_parities)?;
        Ok((model, target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(s: &[usize]) -> Z2Generator {
        Z2Generator::new(s, Origin::ApproximatePointGroup).unwrap()
    }

    #[test]
    fn vacuum_has_even_parity() {
        let m = SymmetryModel::new(3, 0, 0, vec![gen(&[0, 1]), gen(&[4])]).unwrap();
        assert!(m.irrep_of(Determinant(0)).is_zero());
    }

    #[test]
    fn single_occupation_flips_one_component() {
        let m = SymmetryModel::new(3, 1, 0, vec![gen(&[2, 3]), gen(&[4, 5])]).unwrap();
        let l = m.irrep_of(Determinant::from_occupied(&[2]));
        assert_eq!(l.parities(), vec![1, 0]);
        assert_eq!(l.to_string(), "10");
    }

    #[test]
    fn combinations_are_sorted_and_counted() {
        let c = combinations(6, 3);
        assert_eq!(c.len(), 20);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c.iter().all(|x| x.count_ones() == 3));
        assert_eq!(combinations(4, 0), vec![0]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn label_ordering_is_lexicographic_in_parities() {
        let a = IrrepLabel::new(&[0, 1]);
        let b = IrrepLabel::new(&[1, 0]);
        assert!(a < b);
        assert!(IrrepLabel::new(&[0, 0]) < a);
    }

    #[test]
    fn duplicate_generators_rejected() {
        assert!(SymmetryModel::new(2, 1, 1, vec![gen(&[0, 1]), gen(&[1, 0])]).is_err());
        assert!(SymmetryModel::new(2, 1, 1, vec![gen(&[4])]).is_err());
        assert!(Z2Generator::new(&[], Origin::ParticleNumber).is_err());
    }

    #[test]
    fn infeasible_sector_is_empty() {
        let m = SymmetryModel::new(2, 2, 2, vec![gen(&[0])]).unwrap();
        assert!(m.enumerate_sector(&IrrepLabel::new(&[0])).is_empty());
        assert_eq!(m.enumerate_sector(&IrrepLabel::new(&[1])).len(), 1);
    }

    #[test]
    fn split_spins_roundtrip() {
        let d = Determinant::from_occupied(&[0, 3, 4, 7]);
        assert_eq!(d.split_spins(), (0b101, 0b1010));
    }
}
