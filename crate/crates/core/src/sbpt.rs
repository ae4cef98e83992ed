//! Zeroth-order sector solutions and second-order corrections (UC, SC, EN).

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{full_spectrum, lowest_eigenpairs, DavidsonOptions, DEFAULT_DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    apply_block, apply_terms_free, build_sector_matrix, matrix_element, PartitionedHamiltonian,
    TermSource,
};
use crate::integrals::IntegralSet;
use crate::symmetry::{Determinant, IrrepLabel};

pub const FIRST_ORDER_TOL: f64 = 1e-10;
pub const INTRUDER_TOL: f64 = 1e-8;
pub const REGULARIZATION_FLOOR: f64 = 1e-6;
pub const NEGLIGIBLE_NORM_SQ: f64 = 1e-12;
const NEGLIGIBLE_OVERLAP_SQ: f64 = 1e-28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uc,
    Sc,
    En,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uc" => Ok(Method::Uc),
            "sc" => Ok(Method::Sc),
            "en" => Ok(Method::En),
            other => Err(Error::Usage(format!("unknown method {other}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Uc => "uc",
            Method::Sc => "sc",
            Method::En => "en",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SbptOptions {
    pub davidson: DavidsonOptions,
    pub dense_limit: usize,
    /// Replace near-zero denominators by `max(|d|, 1e-6)·sign(d)` instead of failing.
    pub regularize_intruders: bool,
}

impl Default for SbptOptions {
    fn default() -> Self {
        Self {
            davidson: DavidsonOptions::default(),
            dense_limit: DEFAULT_DENSE_LIMIT,
            regularize_intruders: false,
        }
    }
}

impl SbptOptions {
    fn denominator(&self, d: f64, irrep: &IrrepLabel, state: usize) -> Result<f64> {
        if d.abs() >= INTRUDER_TOL {
            return Ok(d);
        }
        if self.regularize_intruders {
            let sign = if d < 0.0 { -1.0 } else { 1.0 };
            Ok(d.abs().max(REGULARIZATION_FLOOR) * sign)
        } else {
            Err(Error::Intruder {
                irrep: irrep.to_string(),
                state,
                denominator: d,
            })
        }
    }
}

/// Eigenpair of `H_ref` in the target sector.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub irrep: IrrepLabel,
    pub basis: Vec<Determinant>,
    pub energy: f64,
    pub vector: Vec<f64>,
}

/// `Ξ = V_{θ',θ} Ψ⁽⁰⁾` living in sector `θ'`.
#[derive(Debug, Clone)]
pub struct PerturberState {
    pub irrep: IrrepLabel,
    pub basis: Vec<Determinant>,
    pub xi: Vec<f64>,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SecondOrder {
    pub e2: f64,
    pub contributions: BTreeMap<IrrepLabel, f64>,
}

impl SecondOrder {
    fn from_contributions(contributions: BTreeMap<IrrepLabel, f64>) -> Self {
        let e2 = contributions.values().sum();
        Self { e2, contributions }
    }
}

#[derive(Debug, Clone)]
pub struct SbptResult {
    pub e0: f64,
    pub e1: f64,
    pub second_order: BTreeMap<Method, SecondOrder>,
    pub n_det_ref: usize,
    /// Reference irrep plus every perturber irrep reached with nonzero `Ξ`.
    pub n_irreps: usize,
}

impl SbptResult {
    pub fn e2(&self, m: Method) -> Option<f64> {
        self.second_order.get(&m).map(|s| s.e2)
    }

    pub fn total(&self, m: Method) -> Option<f64> {
        self.e2(m).map(|e2| self.e0 + e2)
    }
}

/// `n`-th eigenpair of `H_ref` restricted to `target`.
pub fn reference_energy(
    part: &PartitionedHamiltonian,
    target: &IrrepLabel,
    n: usize,
    opts: &SbptOptions,
) -> Result<ReferenceSolution> {
    let basis = part.model.enumerate_sector(target);
    if basis.is_empty() {
        return Err(Error::EmptySector);
    }
    if n >= basis.len() {
        return Err(Error::Range(format!(
            "state {n} requested from a {}-determinant sector",
            basis.len()
        )));
    }
    let sector = build_sector_matrix(&basis, TermSource::Reference(part))?;
    let mut pairs = lowest_eigenpairs(&sector.matrix, n + 1, &opts.davidson)?;
    let pair = pairs.swap_remove(n);
    Ok(ReferenceSolution {
        irrep: *target,
        basis,
        energy: pair.value,
        vector: pair.vector,
    })
}

/// `<Ψ⁽⁰⁾|H_pert|Ψ⁽⁰⁾>`; fails with a partition-integrity error when it is not negligible.
pub fn first_order(part: &PartitionedHamiltonian, reference: &ReferenceSolution) -> Result<f64> {
    let value = first_order_value(part, reference);
    if value.abs() >= FIRST_ORDER_TOL {
        return Err(Error::PartitionIntegrity(value));
    }
    Ok(value)
}

/// The first-order expectation value without the integrity check.
pub fn first_order_value(part: &PartitionedHamiltonian, reference: &ReferenceSolution) -> f64 {
    let mut value = 0.0;
    for terms in part.pert_blocks.values() {
        let image = apply_terms_free(terms, &reference.vector, &reference.basis);
        for (d, c) in reference.basis.iter().zip(&reference.vector) {
            if let Some(v) = image.get(d) {
                value += c * v;
            }
        }
    }
    value
}

/// Perturber states for every block, ordered by target irrep; empty sectors are skipped.
pub fn perturbers(
    part: &PartitionedHamiltonian,
    reference: &ReferenceSolution,
) -> Result<Vec<PerturberState>> {
    let shifts: Vec<&IrrepLabel> = part.pert_blocks.keys().collect();
    let mut out = shifts
        .par_iter()
        .map(|shift| {
            let irrep = reference.irrep.xor(shift);
            let basis = part.model.enumerate_sector(&irrep);
            if basis.is_empty() {
                return Ok(None);
            }
            let xi = apply_block(part, shift, &reference.vector, &reference.basis, &basis)?;
            let norm_sq = xi.iter().map(|c| c * c).sum();
            Ok(Some(PerturberState {
                irrep,
                basis,
                xi,
                norm_sq,
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    out.sort_by_key(|a| a.irrep);
    Ok(out)
}

/// Uncontracted correction over the full `H_ref` spectrum of each perturber sector.
pub fn second_order_uc(
    part: &PartitionedHamiltonian,
    e0: f64,
    perturbers: &[PerturberState],
    opts: &SbptOptions,
) -> Result<SecondOrder> {
    let parts = perturbers
        .par_iter()
        .map(|p| {
            if p.norm_sq == 0.0 {
                return Ok((p.irrep, 0.0));
            }
            let sector = build_sector_matrix(&p.basis, TermSource::Reference(part))?;
            let spectrum = full_spectrum(&sector.matrix, opts.dense_limit)?;
            let mut sum = 0.0;
            for (m, pair) in spectrum.iter().enumerate() {
                let overlap: f64 = pair.vector.iter().zip(&p.xi).map(|(a, b)| a * b).sum();
                let num = overlap * overlap;
                if num < NEGLIGIBLE_OVERLAP_SQ {
                    continue;
                }
                let d = opts.denominator(e0 - pair.value, &p.irrep, m)?;
                sum += num / d;
            }
            Ok((p.irrep, sum))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondOrder::from_contributions(parts.into_iter().collect()))
}

/// Strongly contracted correction: one contracted state `Ξ` per sector.
pub fn second_order_sc(
    part: &PartitionedHamiltonian,
    e0: f64,
    perturbers: &[PerturberState],
    opts: &SbptOptions,
) -> Result<SecondOrder> {
    let parts = perturbers
        .par_iter()
        .map(|p| {
            if p.norm_sq < NEGLIGIBLE_NORM_SQ {
                return Ok((p.irrep, 0.0));
            }
            let sector = build_sector_matrix(&p.basis, TermSource::Reference(part))?;
            let hxi = sector.matrix.matvec(&p.xi);
            let e_sc = hxi.iter().zip(&p.xi).map(|(a, b)| a * b).sum::<f64>() / p.norm_sq;
            let d = opts.denominator(e0 - e_sc, &p.irrep, 0)?;
            Ok((p.irrep, p.norm_sq / d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondOrder::from_contributions(parts.into_iter().collect()))
}

/// Epstein–Nesbet correction with full-Hamiltonian diagonal denominators.
pub fn second_order_en(
    h: &IntegralSet,
    e0: f64,
    perturbers: &[PerturberState],
    opts: &SbptOptions,
) -> Result<SecondOrder> {
    let parts = perturbers
        .par_iter()
        .map(|p| {
            let mut sum = 0.0;
            for (i, (&d, &c)) in p.basis.iter().zip(&p.xi).enumerate() {
                if c == 0.0 {
                    continue;
                }
                let denom = opts.denominator(e0 - matrix_element(d, d, h), &p.irrep, i)?;
                sum += c * c / denom;
            }
            Ok((p.irrep, sum))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondOrder::from_contributions(parts.into_iter().collect()))
}

/// Reference solution, first-order diagnostic and the requested corrections in one call.
pub fn run(
    h: &IntegralSet,
    part: &PartitionedHamiltonian,
    target: &IrrepLabel,
    methods: &[Method],
    opts: &SbptOptions,
) -> Result<(SbptResult, ReferenceSolution, Vec<PerturberState>)> {
    let reference = reference_energy(part, target, 0, opts)?;
    let e1 = first_order(part, &reference)?;
    let perts = perturbers(part, &reference)?;
    let mut second_order = BTreeMap::new();
    for &m in methods {
        let so = match m {
            Method::Uc => second_order_uc(part, reference.energy, &perts, opts)?,
            Method::Sc => second_order_sc(part, reference.energy, &perts, opts)?,
            Method::En => second_order_en(h, reference.energy, &perts, opts)?,
        };
        second_order.insert(m, so);
    }
    let n_irreps = 1 + perts.iter().filter(|p| p.norm_sq > 0.0).count();
    let result = SbptResult {
        e0: reference.energy,
        e1,
        second_order,
        n_det_ref: reference.basis.len(),
        n_irreps,
    };
    Ok((result, reference, perts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_roundtrip() {
        for m in [Method::Uc, Method::Sc, Method::En] {
            assert_eq!(Method::parse(&m.to_string()).unwrap(), m);
        }
        assert!(Method::parse("mp2").is_err());
    }

    #[test]
    fn regularized_denominator_keeps_sign() {
        let label = IrrepLabel::new(&[1]);
        let strict = SbptOptions::default();
        assert!(matches!(
            strict.denominator(1e-9, &label, 2),
            Err(Error::Intruder { state: 2, .. })
        ));
        let lax = SbptOptions {
            regularize_intruders: true,
            ..Default::default()
        };
        assert_eq!(lax.denominator(-1e-9, &label, 0).unwrap(), -1e-6);
        assert_eq!(lax.denominator(0.5, &label, 0).unwrap(), 0.5);
    }
}
