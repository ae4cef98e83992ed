//! Symmetry-guided selected CI: pick irreps by their SC contribution and
//! determinants by coefficient magnitude, then diagonalize the full Hamiltonian.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{lowest_eigenpairs, DavidsonOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::slater_condon_matrix;
use crate::integrals::IntegralSet;
use crate::sbpt::{PerturberState, ReferenceSolution, SecondOrder};
use crate::symmetry::{Determinant, IrrepLabel};

/// Coefficients at or below this magnitude never count as selected.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SciOptions {
    pub eps1: f64,
    pub eps2: f64,
    /// Apply `eps2` to the reference coefficients as well as to the perturbers.
    pub filter_reference: bool,
}

impl Default for SciOptions {
    fn default() -> Self {
        Self {
            eps1: 0.0,
            eps2: 0.0,
            filter_reference: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SciSelection {
    pub eps1: f64,
    pub eps2: f64,
    pub reference_irrep: IrrepLabel,
    /// Perturber irreps that passed the `eps1` test, ascending.
    pub selected_irreps: Vec<IrrepLabel>,
    pub selected_dets: Vec<Determinant>,
    pub selection_point: String,
}

impl SciSelection {
    /// Distinct irreps among the selected determinants (reference included when present).
    pub fn n_irreps(&self, reference: &ReferenceSolution, perturbers: &[PerturberState]) -> usize {
        let mut irreps = BTreeSet::new();
        for d in &self.selected_dets {
            if reference.basis.binary_search(d).is_ok() {
                irreps.insert(reference.irrep);
            }
            for p in perturbers {
                if p.basis.binary_search(d).is_ok() {
                    irreps.insert(p.irrep);
                }
            }
        }
        irreps.len()
    }

    pub fn to_export(&self) -> SelectionExport {
        SelectionExport {
            eps1: self.eps1,
            eps2: self.eps2,
            selection_point: self.selection_point.clone(),
            reference_irrep: self.reference_irrep.to_string(),
            irreps: self.selected_irreps.iter().map(|l| l.to_string()).collect(),
            determinants: self
                .selected_dets
                .iter()
                .map(|d| format!("{:#x}", d.0))
                .collect(),
        }
    }
}

/// Serialized form of a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionExport {
    pub eps1: f64,
    pub eps2: f64,
    pub selection_point: String,
    pub reference_irrep: String,
    pub irreps: Vec<String>,
    pub determinants: Vec<String>,
}

impl SelectionExport {
    pub fn determinants(&self) -> Result<Vec<Determinant>> {
        self.determinants
            .iter()
            .map(|s| {
                u64::from_str_radix(s.trim_start_matches("0x"), 16)
                    .map(Determinant)
                    .map_err(|_| Error::Usage(format!("bad determinant {s}")))
            })
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Chooses irreps with `|E_θ'/E⁽⁰⁾| > eps1` and determinants with normalized `|c| > eps2`.
pub fn select(
    reference: &ReferenceSolution,
    perturbers: &[PerturberState],
    sc: &SecondOrder,
    opts: &SciOptions,
    selection_point: &str,
) -> SciSelection {
    let cut = opts.eps2.max(COEFFICIENT_FLOOR);
    let mut dets = BTreeSet::new();
    for (d, c) in reference.basis.iter().zip(&reference.vector) {
        if !opts.filter_reference || c.abs() > cut {
            dets.insert(*d);
        }
    }
    let mut selected_irreps = Vec::new();
    for p in perturbers {
        let contribution = sc.contributions.get(&p.irrep).copied().unwrap_or(0.0);
        if (contribution / reference.energy).abs() <= opts.eps1 || p.norm_sq <= 0.0 {
            continue;
        }
        selected_irreps.push(p.irrep);
        let norm = p.norm_sq.sqrt();
        for (d, c) in p.basis.iter().zip(&p.xi) {
            if (c / norm).abs() > cut {
                dets.insert(*d);
            }
        }
    }
    selected_irreps.sort();
    SciSelection {
        eps1: opts.eps1,
        eps2: opts.eps2,
        reference_irrep: reference.irrep,
        selected_irreps,
        selected_dets: dets.into_iter().collect(),
        selection_point: selection_point.to_string(),
    }
}

/// Lowest eigenvalue of the full Hamiltonian over the selected determinants.
pub fn sci_energy(
    dets: &[Determinant],
    h: &IntegralSet,
    davidson: &DavidsonOptions,
) -> Result<f64> {
    if dets.is_empty() {
        return Err(Error::Usage("empty selection".into()));
    }
    let m = slater_condon_matrix(dets, h)?;
    Ok(lowest_eigenpairs(&m.matrix, 1, davidson)?[0].value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection_is_usage_error() {
        let h = IntegralSet::zeros(2, 2);
        assert!(matches!(
            sci_energy(&[], &h, &DavidsonOptions::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn export_roundtrip() {
        let sel = SciSelection {
            eps1: 0.0,
            eps2: 0.1,
            reference_irrep: IrrepLabel::new(&[0, 1]),
            selected_irreps: vec![IrrepLabel::new(&[1, 1])],
            selected_dets: vec![Determinant(0b0011), Determinant(0b1100)],
            selection_point: "r=1.80".into(),
        };
        let ex = sel.to_export();
        assert_eq!(ex.determinants, vec!["0x3", "0xc"]);
        let text = serde_json::to_string(&ex).unwrap();
        let back: SelectionExport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.determinants().unwrap(), sel.selected_dets);
    }
}
