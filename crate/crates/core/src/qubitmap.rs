//! Jordan–Wigner mapping, Z2 tapering and qubit resource counts.
//!
//! A Pauli string is stored as a pair of bit masks `(x, z)` with qubit `j`
//! carrying `I`, `X`, `Z` or `Y` for `(0,0)`, `(1,0)`, `(0,1)`, `(1,1)`. Its
//! operator is `⊗_j i^{x_j z_j} X^{x_j} Z^{z_j}`, so `Y = iXZ`. Qubit `j` is
//! spin orbital `j`, with `|1>` meaning occupied.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{FermTerm, TermKind};
use crate::integrals::format_value;
use crate::symmetry::{IrrepLabel, SymmetryModel};

pub const PAULI_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    /// Parses letters with qubit 0 leftmost.
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Self::IDENTITY;
        for (j, ch) in s.chars().enumerate() {
            let bit = 1u64 << j;
            match ch {
                'I' => {}
                'X' => p.x |= bit,
                'Z' => p.z |= bit,
                'Y' => {
                    p.x |= bit;
                    p.z |= bit;
                }
                _ => return Err(Error::Usage(format!("bad Pauli letter {ch}"))),
            }
        }
        Ok(p)
    }

    pub fn z_string(mask: u64) -> Self {
        Self { x: 0, z: mask }
    }

    #[inline]
    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    #[inline]
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `self · other = i^k · result`, returning `(k mod 4, result)`.
    #[inline]
    pub fn multiply(&self, other: &PauliString) -> (u32, PauliString) {
        let out = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        let k =
            self.n_y() + other.n_y() + 2 * (self.z & other.x).count_ones() + 4 - (out.n_y() % 4);
        (k % 4, out)
    }

    /// Action on a computational basis state: `P|b> = phase |b'>`.
    #[inline]
    pub fn apply(&self, b: u64) -> (Complex64, u64) {
        let mut phase = i_pow(self.n_y());
        if (self.z & b).count_ones() & 1 == 1 {
            phase = -phase;
        }
        (phase, b ^ self.x)
    }

    pub fn letters(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|j| match (self.x >> j & 1, self.z >> j & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Complex linear combination of Pauli strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliSum {
    pub terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn single(p: PauliString, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, c);
        Self { terms }
    }

    pub fn identity(c: f64) -> Self {
        Self::single(PauliString::IDENTITY, Complex64::new(c, 0.0))
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        *self.terms.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        self.terms.values_mut().for_each(|v| *v *= c);
        self
    }

    /// Drops entries with modulus below `tol`.
    pub fn simplify(mut self, tol: f64) -> Self {
        self.terms.retain(|_, v| v.norm() >= tol);
        self
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|v| v.norm() < tol)
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, *c);
        }
        out
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        let mut out = PauliSum::default();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let (k, p) = a.multiply(b);
                out.add_term(p, ca * cb * i_pow(k));
            }
        }
        out
    }
}

fn jw_ladder(p: usize, dagger: bool) -> PauliSum {
    let below = (1u64 << p) - 1;
    let xs = PauliString::new(1u64 << p, below);
    let ys = PauliString::new(1u64 << p, below | 1u64 << p);
    let y_coef = if dagger { -0.5 } else { 0.5 };
    let mut s = PauliSum::single(xs, Complex64::new(0.5, 0.0));
    s.add_term(ys, Complex64::new(0.0, y_coef));
    s
}

/// `a†_p = (X_p − iY_p)/2 · Z_{<p}`.
pub fn jw_create(p: usize) -> PauliSum {
    jw_ladder(p, true)
}

/// `a_p = (X_p + iY_p)/2 · Z_{<p}`.
pub fn jw_annihilate(p: usize) -> PauliSum {
    jw_ladder(p, false)
}

/// Real-coefficient qubit Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    pub n_qubits: usize,
    pub terms: BTreeMap<PauliString, f64>,
}

impl PauliHamiltonian {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn from_sum(n_qubits: usize, sum: PauliSum) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (p, c) in sum.terms {
            if c.im.abs() >= PAULI_DROP_TOL {
                return Err(Error::Usage(format!(
                    "non-Hermitian coefficient {c} on {}",
                    p.letters(n_qubits)
                )));
            }
            if c.re.abs() >= PAULI_DROP_TOL {
                terms.insert(p, c.re);
            }
        }
        Ok(Self { n_qubits, terms })
    }

    /// Lines of `±coefficient<TAB>PAULISTRING`, qubit 0 leftmost.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (p, c) in &self.terms {
            let v = format_value(*c);
            let v = if v.starts_with('-') {
                v
            } else {
                format!("+{v}")
            };
            let _ = writeln!(out, "{v}\t{}", p.letters(self.n_qubits));
        }
        out
    }

    /// Matrix `<b_i|H|b_j>` over the given computational basis states.
    pub fn matrix_on(&self, states: &[u64]) -> Result<DMatrix<f64>> {
        let n = states.len();
        let mut index = std::collections::HashMap::with_capacity(n);
        for (i, &s) in states.iter().enumerate() {
            index.insert(s, i);
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (j, &b) in states.iter().enumerate() {
            for (p, &c) in &self.terms {
                let (phase, t) = p.apply(b);
                if let Some(&i) = index.get(&t) {
                    m[(i, j)] += phase * c;
                }
            }
        }
        if m.iter().any(|v| v.im.abs() > 1e-12) {
            return Err(Error::Usage("qubit matrix has imaginary entries".into()));
        }
        Ok(m.map(|v| v.re))
    }

    /// Dense matrix over the full `2^n` space.
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        if self.n_qubits > 14 {
            return Err(Error::Capacity {
                dim: 1usize << self.n_qubits,
                limit: 1 << 14,
            });
        }
        let states: Vec<u64> = (0..1u64 << self.n_qubits).collect();
        self.matrix_on(&states)
    }
}

impl fmt::Display for PauliHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.export())
    }
}

/// Jordan–Wigner image of `constant + Σ terms`.
pub fn jordan_wigner<'a>(
    terms: impl IntoIterator<Item = &'a FermTerm>,
    constant: f64,
    n_qubits: usize,
) -> Result<PauliHamiltonian> {
    let mut cache: BTreeMap<(usize, bool), PauliSum> = BTreeMap::new();
    let mut ladder = |p: usize, dagger: bool| {
        cache
            .entry((p, dagger))
            .or_insert_with(|| jw_ladder(p, dagger))
            .clone()
    };
    let mut total = PauliSum::identity(constant);
    for t in terms {
        let product = match t.kind {
            TermKind::OneBody { p, q } => &ladder(p, true) * &ladder(q, false),
            TermKind::TwoBody { p, q, r, s } => {
                let left = &ladder(p, true) * &ladder(q, true);
                let right = &ladder(r, false) * &ladder(s, false);
                &left * &right
            }
        };
        for (ps, c) in product.terms {
            total.add_term(ps, c * t.coefficient);
        }
    }
    PauliHamiltonian::from_sum(n_qubits, total)
}

/// Reduced Z2 generators with pivot qubits and sector eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperingPlan {
    pub n_qubits: usize,
    /// Z-string supports after reduction; each pivot appears in exactly one.
    pub generators: Vec<u64>,
    pub pivots: Vec<usize>,
    /// Eigenvalue `±1` of each reduced generator in the target sector.
    pub signs: Vec<i8>,
}

impl TaperingPlan {
    /// Reduces `(support, sign)` pairs to row-echelon form over GF(2).
    /// Dependent generators are dropped after checking their sign is consistent.
    pub fn new(n_qubits: usize, generators: &[(u64, i8)]) -> Result<Self> {
        let mut rows: Vec<(u64, i8, usize)> = Vec::new();
        for (i, &(mask, sign)) in generators.iter().enumerate() {
            if sign != 1 && sign != -1 {
                return Err(Error::Plan(format!("generator {i} has sign {sign}")));
            }
            let (mut v, mut s) = (mask, sign);
            for &(rm, rs, rp) in &rows {
                if v >> rp & 1 == 1 {
                    v ^= rm;
                    s *= rs;
                }
            }
            if v == 0 {
                if s != 1 {
                    return Err(Error::Plan(format!(
                        "generator {i} is a product of earlier ones with the opposite sign"
                    )));
                }
                continue;
            }
            let pivot = v.trailing_zeros() as usize;
            for row in rows.iter_mut() {
                if row.0 >> pivot & 1 == 1 {
                    row.0 ^= v;
                    row.1 *= s;
                }
            }
            rows.push((v, s, pivot));
        }
        let plan = Self {
            n_qubits,
            generators: rows.iter().map(|r| r.0).collect(),
            pivots: rows.iter().map(|r| r.2).collect(),
            signs: rows.iter().map(|r| r.1).collect(),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Spin parities followed by the model generators, signed by the target sector.
    pub fn from_model(model: &SymmetryModel, target: &IrrepLabel) -> Result<Self> {
        let n = 2 * model.n_spatial;
        let sign = |parity: usize| if parity.is_multiple_of(2) { 1i8 } else { -1i8 };
        let mut gens = vec![
            (alpha_mask(model.n_spatial), sign(model.n_alpha)),
            (alpha_mask(model.n_spatial) << 1, sign(model.n_beta)),
        ];
        for (a, g) in model.generators.iter().enumerate() {
            gens.push((g.mask(), sign(target.get(a) as usize)));
        }
        Self::new(n, &gens)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (&g, &q)) in self.generators.iter().zip(&self.pivots).enumerate() {
            if g >> q & 1 == 0 {
                return Err(Error::Plan(format!("pivot {q} outside generator {i}")));
            }
            if self.pivots[..i].contains(&q) {
                return Err(Error::Plan(format!("pivot {q} used twice")));
            }
            for (j, &h) in self.generators.iter().enumerate() {
                if j != i && h >> q & 1 == 1 {
                    return Err(Error::Plan(format!("pivot {q} also lies in generator {j}")));
                }
            }
            if q >= self.n_qubits {
                return Err(Error::Plan(format!("pivot {q} beyond register")));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn n_tapered(&self) -> usize {
        self.n_qubits - self.rank()
    }

    /// Whether the single-qubit flip `Z_p` lies in the span of the generators.
    pub fn pins(&self, p: usize) -> bool {
        let mut v = 1u64 << p;
        for (&g, &q) in self.generators.iter().zip(&self.pivots) {
            if v >> q & 1 == 1 {
                v ^= g;
            }
        }
        v == 0
    }

    /// Computational basis states with every generator at its target eigenvalue.
    pub fn sector_states(&self) -> Vec<u64> {
        (0..1u64 << self.n_qubits)
            .filter(|&b| {
                self.generators.iter().zip(&self.signs).all(|(&g, &s)| {
                    let odd = (g & b).count_ones() & 1 == 1;
                    odd == (s == -1)
                })
            })
            .collect()
    }
}

fn alpha_mask(n_spatial: usize) -> u64 {
    (0..n_spatial).fold(0u64, |m, p| m | 1u64 << (2 * p))
}

fn remove_bits(v: u64, removed: &[usize]) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    for j in 0..64 {
        if removed.contains(&j) {
            continue;
        }
        out |= (v >> j & 1) << k;
        k += 1;
    }
    out
}

/// Conjugates by the tapering Clifford and removes the pivot qubits.
pub fn taper(ph: &PauliHamiltonian, plan: &TaperingPlan) -> Result<PauliHamiltonian> {
    plan.validate()?;
    for p in ph.terms.keys() {
        for &g in &plan.generators {
            if !p.commutes_with(&PauliString::z_string(g)) {
                return Err(Error::SymmetryViolation(p.letters(ph.n_qubits)));
            }
        }
    }
    if plan.rank() == 0 {
        return Ok(ph.clone());
    }
    let mut current: PauliSum = PauliSum::default();
    for (p, &c) in &ph.terms {
        current.add_term(*p, Complex64::new(c, 0.0));
    }
    let half = Complex64::new(0.5, 0.0);
    for (&g, &q) in plan.generators.iter().zip(&plan.pivots) {
        let mut u = PauliSum::single(PauliString::new(1u64 << q, 0), Complex64::new(1.0, 0.0));
        u.add_term(PauliString::z_string(g), Complex64::new(1.0, 0.0));
        // U = (X_q + Z_g)/√2 is Hermitian and unitary; U P U = ½ (X+Z) P (X+Z)
        current = (&(&u * &current) * &u)
            .scale(half)
            .simplify(PAULI_DROP_TOL * 1e-3);
    }
    let mut out = PauliSum::default();
    for (p, c) in current.terms {
        let mut coef = c;
        for (&q, &s) in plan.pivots.iter().zip(&plan.signs) {
            let bit = 1u64 << q;
            if p.z & bit != 0 {
                return Err(Error::SymmetryViolation(p.letters(ph.n_qubits)));
            }
            if p.x & bit != 0 {
                coef *= s as f64;
            }
        }
        let reduced = PauliString::new(
            remove_bits(p.x, &plan.pivots),
            remove_bits(p.z, &plan.pivots),
        );
        out.add_term(reduced, coef);
    }
    PauliHamiltonian::from_sum(plan.n_tapered(), out)
}

/// One line of a resource table.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ResourceRow {
    pub name: String,
    /// Spatial orbitals left active after pinning.
    pub n_orbitals: usize,
    pub n_qubits: usize,
    pub n_det: usize,
}

/// Orbitals, tapered qubits and reference-sector size per named model.
pub fn resource_report(models: &[(String, SymmetryModel, IrrepLabel)]) -> Result<Vec<ResourceRow>> {
    models
        .iter()
        .map(|(name, model, target)| {
            let plan = TaperingPlan::from_model(model, target)?;
            let n_orbitals = (0..model.n_spatial)
                .filter(|&p| !(plan.pins(2 * p) && plan.pins(2 * p + 1)))
                .count();
            Ok(ResourceRow {
                name: name.clone(),
                n_orbitals,
                n_qubits: plan.n_tapered(),
                n_det: model.enumerate_sector(target).len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_products() {
        let x = PauliString::parse("X").unwrap();
        let y = PauliString::parse("Y").unwrap();
        let z = PauliString::parse("Z").unwrap();
        // XY = iZ, YZ = iX, ZX = iY, YX = -iZ
        assert_eq!(x.multiply(&y), (1, z));
        assert_eq!(y.multiply(&z), (1, x));
        assert_eq!(z.multiply(&x), (1, y));
        assert_eq!(y.multiply(&x), (3, z));
        assert_eq!(y.multiply(&y), (0, PauliString::IDENTITY));
    }

    #[test]
    fn pauli_action_on_basis() {
        let y = PauliString::parse("Y").unwrap();
        // Y|0> = i|1>, Y|1> = -i|0>
        assert_eq!(y.apply(0), (Complex64::new(0.0, 1.0), 1));
        assert_eq!(y.apply(1), (Complex64::new(0.0, -1.0), 0));
    }

    #[test]
    fn number_operator() {
        let n = &jw_create(0) * &jw_annihilate(0);
        let n = n.simplify(1e-15);
        let mut expect = PauliSum::identity(0.5);
        expect.add_term(PauliString::parse("Z").unwrap(), Complex64::new(-0.5, 0.0));
        assert_eq!(n, expect);
    }

    #[test]
    fn letters_roundtrip() {
        let p = PauliString::parse("IXYZ").unwrap();
        assert_eq!(p.letters(4), "IXYZ");
        assert!(PauliString::parse("IQ").is_err());
    }

    #[test]
    fn empty_plan_is_identity() {
        let mut terms = BTreeMap::new();
        terms.insert(PauliString::parse("XY").unwrap(), 0.25);
        let ph = PauliHamiltonian { n_qubits: 2, terms };
        let plan = TaperingPlan::new(2, &[]).unwrap();
        assert_eq!(taper(&ph, &plan).unwrap(), ph);
    }

    #[test]
    fn inconsistent_dependent_sign_rejected() {
        assert!(TaperingPlan::new(3, &[(0b011, 1), (0b110, 1), (0b101, -1)]).is_err());
        let plan = TaperingPlan::new(3, &[(0b011, 1), (0b110, -1), (0b101, -1)]).unwrap();
        assert_eq!(plan.rank(), 2);
    }

    #[test]
    fn non_commuting_term_rejected() {
        let mut terms = BTreeMap::new();
        terms.insert(PauliString::parse("XI").unwrap(), 1.0);
        let ph = PauliHamiltonian { n_qubits: 2, terms };
        let plan = TaperingPlan::new(2, &[(0b01, 1)]).unwrap();
        assert!(matches!(
            taper(&ph, &plan),
            Err(Error::SymmetryViolation(_))
        ));
    }

    #[test]
    fn export_format() {
        let mut terms = BTreeMap::new();
        terms.insert(PauliString::parse("ZI").unwrap(), -0.5);
        terms.insert(PauliString::IDENTITY, 1.25);
        let ph = PauliHamiltonian { n_qubits: 2, terms };
        assert_eq!(
            ph.export(),
            "+1.2500000000000000E+00\tII\n-5.0000000000000000E-01\tZI\n"
        );
    }

    #[test]
    fn empty_report() {
        assert!(resource_report(&[]).unwrap().is_empty());
    }
}
