//! Molecular integrals: FCIDUMP reading/writing and frozen-core folding.
//!
//! Two-electron integrals are kept in chemist notation `(pq|rs)` in a dense
//! `M^4` array with every permutation populated, which is cheap at the
//! orbital counts this crate targets.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const DUPLICATE_TOL: f64 = 1e-10;

/// Spin-orbital index of spatial orbital `p` (`beta = false` gives alpha).
#[inline]
pub fn spin_orbital(p: usize, beta: bool) -> usize {
    2 * p + beta as usize
}

/// Spatial orbital and spin (`true` = beta) of a spin-orbital index.
#[inline]
pub fn spatial_of(so: usize) -> (usize, bool) {
    (so / 2, so % 2 == 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub n_spatial: usize,
    pub n_electrons: usize,
    /// 2S + 1, read from `MS2`.
    pub spin_multiplicity: usize,
    pub core_energy: f64,
    one_body: Vec<f64>,
    two_body: Vec<f64>,
    pub orb_irreps: Vec<u32>,
    pub isym: u32,
}

impl IntegralSet {
    /// All-zero integral set with the given shape.
    pub fn zeros(n_spatial: usize, n_electrons: usize) -> Self {
        Self {
            n_spatial,
            n_electrons,
            spin_multiplicity: 1,
            core_energy: 0.0,
            one_body: vec![0.0; n_spatial * n_spatial],
            two_body: vec![0.0; n_spatial.pow(4)],
            orb_irreps: vec![1; n_spatial],
            isym: 1,
        }
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spatial + q]
    }

    /// Chemist-notation electron repulsion integral `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let m = self.n_spatial;
        self.two_body[((p * m + q) * m + r) * m + s]
    }

    /// Sets `h_pq` and `h_qp`.
    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        let m = self.n_spatial;
        self.one_body[p * m + q] = v;
        self.one_body[q * m + p] = v;
    }

    /// Sets `(pq|rs)` together with its seven symmetry partners.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let m = self.n_spatial;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.two_body[((a * m + b) * m + c) * m + d] = v;
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    /// Alpha and beta electron counts implied by `n_electrons` and the multiplicity.
    pub fn n_alpha_beta(&self) -> (usize, usize) {
        let ms2 = self.spin_multiplicity.saturating_sub(1);
        let na = (self.n_electrons + ms2) / 2;
        (na, self.n_electrons - na)
    }

    /// Largest deviation from `h_pq = h_qp` and from the 8-fold ERI symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.n_spatial;
        let mut worst = 0.0f64;
        for p in 0..m {
            for q in 0..m {
                worst = worst.max((self.h1(p, q) - self.h1(q, p)).abs());
                for r in 0..m {
                    for s in 0..m {
                        let v = self.eri(p, q, r, s);
                        for w in [
                            self.eri(q, p, r, s),
                            self.eri(p, q, s, r),
                            self.eri(r, s, p, q),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &IntegralSet) -> f64 {
        let mut worst = (self.core_energy - other.core_energy).abs();
        for (a, b) in self.one_body.iter().zip(&other.one_body) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in self.two_body.iter().zip(&other.two_body) {
            worst = worst.max((a - b).abs());
        }
        worst
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_fcidump(&text)
    }

    /// Returns a copy with spatial orbitals reordered so that new orbital `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m = self.n_spatial;
        let mut seen = vec![false; m];
        if perm.len() != m
            || perm
                .iter()
                .any(|&p| p >= m || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Range(
                "orbital permutation is not a bijection".into(),
            ));
        }
        let mut out = Self::zeros(m, self.n_electrons);
        out.spin_multiplicity = self.spin_multiplicity;
        out.core_energy = self.core_energy;
        out.isym = self.isym;
        out.orb_irreps = perm.iter().map(|&p| self.orb_irreps[p]).collect();
        for p in 0..m {
            for q in 0..m {
                out.one_body[p * m + q] = self.h1(perm[p], perm[q]);
                for r in 0..m {
                    for s in 0..m {
                        out.two_body[((p * m + q) * m + r) * m + s] =
                            self.eri(perm[p], perm[q], perm[r], perm[s]);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: usize,
    orbsym: Option<Vec<u32>>,
    isym: u32,
}

fn parse_header(text: &str, first_line: usize) -> Result<Header> {
    let perr = |message: String| Error::Parse {
        line: first_line,
        message,
    };
    let spaced = text.replace(',', " ").replace('=', " = ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let mut fields: HashMap<String, Vec<&str>> = HashMap::new();
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() && toks[i + 1] == "=" {
            let key = toks[i].to_ascii_uppercase();
            let mut vals = Vec::new();
            i += 2;
            while i < toks.len() && !(i + 1 < toks.len() && toks[i + 1] == "=") {
                vals.push(toks[i]);
                i += 1;
            }
            fields.insert(key, vals);
        } else {
            i += 1;
        }
    }
    let int = |key: &str, default: Option<i64>| -> Result<i64> {
        match fields.get(key) {
            Some(v) if v.len() == 1 => v[0]
                .parse::<i64>()
                .map_err(|_| perr(format!("{key} is not an integer: {}", v[0]))),
            Some(_) => Err(perr(format!("{key} needs exactly one value"))),
            None => default.ok_or_else(|| perr(format!("missing {key}"))),
        }
    };
    let norb = int("NORB", None)?;
    let nelec = int("NELEC", None)?;
    let ms2 = int("MS2", Some(0))?;
    let isym = int("ISYM", Some(1))?;
    if norb < 0 || nelec < 0 || ms2 < 0 || nelec > 2 * norb {
        return Err(perr("inconsistent NORB/NELEC/MS2".into()));
    }
    let orbsym = match fields.get("ORBSYM") {
        Some(v) => {
            let syms = v
                .iter()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| perr(format!("bad ORBSYM entry {t}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if syms.len() != norb as usize {
                return Err(perr(format!(
                    "ORBSYM has {} entries, expected {norb}",
                    syms.len()
                )));
            }
            Some(syms)
        }
        None => None,
    };
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2: ms2 as usize,
        orbsym,
        isym: isym as u32,
    })
}

fn canonical_pair(i: usize, j: usize) -> (usize, usize) {
    if i >= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Canonical representative of an 8-fold symmetric index quadruple.
fn canonical_quad(i: usize, j: usize, k: usize, l: usize) -> [usize; 4] {
    let a = canonical_pair(i, j);
    let b = canonical_pair(k, l);
    let (x, y) = if a >= b { (a, b) } else { (b, a) };
    [x.0, x.1, y.0, y.1]
}

/// Parses an FCIDUMP document (namelist header followed by `value i j k l` records).
pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
    if !lines[start]
        .trim_start()
        .to_ascii_uppercase()
        .starts_with("&FCI")
    {
        return Err(Error::Parse {
            line: start + 1,
            message: "expected &FCI namelist".into(),
        });
    }
    let mut header = String::new();
    let mut body_start = None;
    for (n, raw) in lines.iter().enumerate().skip(start) {
        let upper = raw.to_ascii_uppercase();
        let mut content = upper.as_str();
        if n == start {
            content = &content[content.find("&FCI").unwrap() + 4..];
        }
        let end = content
            .find("&END")
            .map(|p| (p, 4))
            .or_else(|| content.find('/').map(|p| (p, 1)));
        match end {
            Some((p, _)) => {
                header.push_str(&content[..p]);
                body_start = Some(n + 1);
                break;
            }
            None => {
                header.push_str(content);
                header.push(' ');
            }
        }
    }
    let body_start = body_start.ok_or(Error::Parse {
        line: lines.len(),
        message: "namelist is not terminated".into(),
    })?;
    let hdr = parse_header(&header, start + 1)?;
    let m = hdr.norb;

    let mut out = IntegralSet::zeros(m, hdr.nelec);
    out.spin_multiplicity = hdr.ms2 + 1;
    out.isym = hdr.isym;
    out.orb_irreps = hdr.orbsym.unwrap_or_else(|| vec![1; m]);

    let mut seen_two: HashMap<[usize; 4], f64> = HashMap::new();
    let mut seen_one: HashMap<(usize, usize), f64> = HashMap::new();
    let mut seen_core: Option<f64> = None;

    for (n, raw) in lines.iter().enumerate().skip(body_start) {
        let line = n + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, found {}", toks.len()),
            });
        }
        let value = parse_float(toks[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("bad value {}", toks[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, t) in idx.iter_mut().zip(&toks[1..]) {
            let v: i64 = t.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad index {t}"),
            })?;
            if v < 0 || v as usize > m {
                return Err(Error::Range(format!(
                    "index {v} outside [1, {m}] at line {line}"
                )));
            }
            *slot = v as usize;
        }
        let check = |prev: Option<f64>| -> Result<()> {
            match prev {
                Some(p) if (p - value).abs() > DUPLICATE_TOL => Err(Error::Conflict {
                    line,
                    message: format!(
                        "{} {} {} {} was {p}, now {value}",
                        idx[0], idx[1], idx[2], idx[3]
                    ),
                }),
                _ => Ok(()),
            }
        };
        match idx {
            [0, 0, 0, 0] => {
                check(seen_core)?;
                seen_core = Some(value);
                out.core_energy = value;
            }
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let key = canonical_pair(i - 1, j - 1);
                check(seen_one.get(&key).copied())?;
                seen_one.insert(key, value);
                out.set_h1(i - 1, j - 1, value);
            }
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_quad(i - 1, j - 1, k - 1, l - 1);
                check(seen_two.get(&key).copied())?;
                seen_two.insert(key, value);
                out.set_eri(i - 1, j - 1, k - 1, l - 1, value);
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: "unrecognized index pattern".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Formats `v` with 17 significant digits as `d.dddddddddddddddde+XX`.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:.16e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}E{sign}{:02}", exp.abs())
}

/// Emits an FCIDUMP document; only nonzero unique integrals are written.
pub fn emit_fcidump(s: &IntegralSet) -> String {
    let m = s.n_spatial;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "&FCI NORB={m},NELEC={},MS2={},",
        s.n_electrons,
        s.spin_multiplicity.saturating_sub(1)
    );
    out.push_str(" ORBSYM=");
    for o in &s.orb_irreps {
        let _ = write!(out, "{o},");
    }
    out.push('\n');
    let _ = writeln!(out, " ISYM={},", s.isym);
    out.push_str("&END\n");
    let mut record = |v: f64, i: usize, j: usize, k: usize, l: usize| {
        let _ = writeln!(out, "{} {i:4} {j:4} {k:4} {l:4}", format_value(v));
    };
    for i in 0..m {
        for j in 0..=i {
            for k in 0..m {
                for l in 0..=k {
                    if (k, l) > (i, j) {
                        continue;
                    }
                    let v = s.eri(i, j, k, l);
                    if v != 0.0 {
                        record(v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..=i {
            let v = s.h1(i, j);
            if v != 0.0 {
                record(v, i + 1, j + 1, 0, 0);
            }
        }
    }
    record(s.core_energy, 0, 0, 0, 0);
    out
}

/// Folds doubly occupied `core` orbitals into the core energy and one-body integrals.
pub fn freeze_core(s: &IntegralSet, core: &[usize]) -> Result<IntegralSet> {
    let m = s.n_spatial;
    let mut is_core = vec![false; m];
    for &c in core {
        if c >= m {
            return Err(Error::Range(format!("core orbital {c} outside [0, {m})")));
        }
        if std::mem::replace(&mut is_core[c], true) {
            return Err(Error::Range(format!("core orbital {c} listed twice")));
        }
    }
    if 2 * core.len() > s.n_electrons {
        return Err(Error::Range("more core electrons than electrons".into()));
    }
    if core.is_empty() {
        return Ok(s.clone());
    }
    let active: Vec<usize> = (0..m).filter(|&p| !is_core[p]).collect();
    let n = active.len();

    let mut ecore = s.core_energy;
    for &c in core {
        ecore += 2.0 * s.h1(c, c);
        for &d in core {
            ecore += 2.0 * s.eri(c, c, d, d) - s.eri(c, d, d, c);
        }
    }
    let mut out = IntegralSet::zeros(n, s.n_electrons - 2 * core.len());
    out.spin_multiplicity = s.spin_multiplicity;
    out.isym = s.isym;
    out.core_energy = ecore;
    out.orb_irreps = active.iter().map(|&p| s.orb_irreps[p]).collect();
    for (a, &p) in active.iter().enumerate() {
        for (b, &q) in active.iter().enumerate() {
            let mut h = s.h1(p, q);
            for &c in core {
                h += 2.0 * s.eri(p, q, c, c) - s.eri(p, c, c, q);
            }
            out.one_body[a * n + b] = h;
            for (c2, &r) in active.iter().enumerate() {
                for (d2, &t) in active.iter().enumerate() {
                    out.two_body[((a * n + b) * n + c2) * n + d2] = s.eri(p, q, r, t);
                }
            }
        }
    }
    Ok(out)
}
