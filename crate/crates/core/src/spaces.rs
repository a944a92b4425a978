//! Graded state spaces, their differentials and pairings, and validation of
//! the structural assumptions placed on them.
//!
//! Conventions (all configurable per form, defaults listed here):
//!
//! | form            | window | symmetry exponent |
//! |-----------------|--------|-------------------|
//! | closed `(,)`    | −1     | `|a||b|`          |
//! | open `(,)'`     | +2     | `|a||b|`          |
//! | open `(,)''`    | 0      | `|a||b|`          |
//!
//! The chain-map condition checked for every form is
//! `(da, b) + (−1)^{|a|} (a, db) = 0`, and `Δ_co` must be supported in
//! degree 0 and vanish on the image of `d`.

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSymbol {
    pub name: String,
    pub degree: i64,
}

/// An ordered basis; the order is the one used for canonical normal forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedBasis {
    symbols: Vec<BasisSymbol>,
    index: HashMap<String, usize>,
}

impl GradedBasis {
    pub fn new(symbols: Vec<BasisSymbol>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if s.name.is_empty() {
                return Err(Error::Parse("basis symbol with empty name".into()));
            }
            if index.insert(s.name.clone(), i).is_some() {
                return Err(Error::Parse(format!("duplicate basis symbol {:?}", s.name)));
            }
        }
        Ok(GradedBasis { symbols, index })
    }

    pub fn from_pairs(pairs: &[(&str, i64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(n, d)| BasisSymbol {
                    name: n.to_string(),
                    degree: *d,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.symbols[i].degree
    }

    pub fn name(&self, i: usize) -> &str {
        &self.symbols[i].name
    }

    pub fn symbols(&self) -> &[BasisSymbol] {
        &self.symbols
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown basis symbol {name:?}")))
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.symbols.iter().map(|s| s.degree)
    }
}

/// `d[from, to]`: `d(from) = Σ d[from, to] · to`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Differential {
    entries: BTreeMap<(usize, usize), Scalar>,
}

impl Differential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: usize, to: usize, coeff: Scalar) {
        if coeff.is_zero() {
            self.entries.remove(&(from, to));
        } else {
            self.entries.insert((from, to), coeff);
        }
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Scalar> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// The image of one basis vector, as `(target, coefficient)` pairs.
    pub fn image(&self, from: usize) -> impl Iterator<Item = (usize, &Scalar)> {
        self.entries
            .range((from, 0)..=(from, usize::MAX))
            .map(|(&(_, to), c)| (to, c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Closed,
    OpenPrime,
    OpenDouble,
}

impl FormKind {
    pub fn default_window(self) -> i64 {
        match self {
            FormKind::Closed => -1,
            FormKind::OpenPrime => 2,
            FormKind::OpenDouble => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FormKind::Closed => "closed",
            FormKind::OpenPrime => "open_prime",
            FormKind::OpenDouble => "open_double",
        }
    }
}

/// Graded symmetry rule: `form[b, a] = (−1)^σ form[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryRule {
    /// `σ = |a||b|`.
    Plain,
    /// `σ = (|a|−1)(|b|−1)`, symmetry in suspended degrees.
    Shifted,
}

impl SymmetryRule {
    pub fn exponent(self, da: i64, db: i64) -> i64 {
        match self {
            SymmetryRule::Plain => da * db,
            SymmetryRule::Shifted => (da - 1) * (db - 1),
        }
    }
}

/// A bilinear form on a graded basis, stored as the entries the user gave
/// and completed by the symmetry rule on lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingForm {
    kind: FormKind,
    window: i64,
    symmetry: SymmetryRule,
    entries: BTreeMap<(usize, usize), Scalar>,
}

impl PairingForm {
    pub fn new(kind: FormKind) -> Self {
        PairingForm {
            kind,
            window: kind.default_window(),
            symmetry: SymmetryRule::Plain,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_convention(kind: FormKind, window: i64, symmetry: SymmetryRule) -> Self {
        PairingForm {
            kind,
            window,
            symmetry,
            entries: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    pub fn symmetry(&self) -> SymmetryRule {
        self.symmetry
    }

    pub fn set(&mut self, a: usize, b: usize, v: Scalar) {
        if v.is_zero() {
            self.entries.remove(&(a, b));
        } else {
            self.entries.insert((a, b), v);
        }
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Scalar> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(a, b)`, from the stored entry or by symmetry from `(b, a)`.
    pub fn value(&self, basis: &GradedBasis, a: usize, b: usize) -> Scalar {
        if let Some(v) = self.entries.get(&(a, b)) {
            return v.clone();
        }
        match self.entries.get(&(b, a)) {
            Some(v) => {
                let e = self.symmetry.exponent(basis.degree(a), basis.degree(b));
                v * &Scalar::sign_power(e)
            }
            None => Scalar::zero(),
        }
    }
}

/// Look up `(a, b)` by symbol name.
pub fn pair(form: &PairingForm, basis: &GradedBasis, a: &str, b: &str) -> Result<Scalar> {
    let (ia, ib) = (basis.lookup(a)?, basis.lookup(b)?);
    Ok(form.value(basis, ia, ib))
}

/// For each degree `k` carried by the basis, whether the block pairing degree
/// `k` against degree `window − k` is square of full rank.
pub fn is_nondegenerate(form: &PairingForm, basis: &GradedBasis) -> BTreeMap<i64, bool> {
    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..basis.len() {
        by_degree.entry(basis.degree(i)).or_default().push(i);
    }
    let mut out = BTreeMap::new();
    for (&k, rows) in &by_degree {
        let cols = by_degree.get(&(form.window - k)).cloned().unwrap_or_default();
        let ok = if rows.len() != cols.len() {
            false
        } else {
            let mut m = Matrix::zeros(rows.len(), cols.len());
            for (r, &a) in rows.iter().enumerate() {
                for (c, &b) in cols.iter().enumerate() {
                    m.set(r, c, form.value(basis, a, b));
                }
            }
            m.rank() == rows.len()
        };
        out.insert(k, ok);
    }
    out
}

/// `Δ_co` on the closed basis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoFunctional {
    entries: BTreeMap<usize, Scalar>,
}

impl CoFunctional {
    pub fn set(&mut self, a: usize, v: Scalar) {
        if v.is_zero() {
            self.entries.remove(&a);
        } else {
            self.entries.insert(a, v);
        }
    }

    pub fn get(&self, a: usize) -> Scalar {
        self.entries.get(&a).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn entries(&self) -> &BTreeMap<usize, Scalar> {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSector {
    pub basis: GradedBasis,
    pub d: Differential,
    pub pairing: PairingForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenSector {
    pub basis: GradedBasis,
    pub d: Differential,
    pub pairing_prime: PairingForm,
    pub pairing_double: PairingForm,
}

/// The full input data of the algebra: both state spaces, their
/// differentials and pairings, and `Δ_co`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraSpec {
    pub closed: ClosedSector,
    pub open: OpenSector,
    pub delta_co: CoFunctional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &str, message: String) {
        self.violations.push(Violation {
            code: code.to_string(),
            message,
        });
    }
}

impl AlgebraSpec {
    pub fn empty() -> Self {
        AlgebraSpec {
            closed: ClosedSector {
                basis: GradedBasis::new(vec![]).unwrap(),
                d: Differential::new(),
                pairing: PairingForm::new(FormKind::Closed),
            },
            open: OpenSector {
                basis: GradedBasis::new(vec![]).unwrap(),
                d: Differential::new(),
                pairing_prime: PairingForm::new(FormKind::OpenPrime),
                pairing_double: PairingForm::new(FormKind::OpenDouble),
            },
            delta_co: CoFunctional::default(),
        }
    }

    /// Content hash used to tell algebras apart.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        serde_json::to_string(&self.to_json()).unwrap_or_default().hash(&mut h);
        h.finish()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_differential("closed", &self.closed.basis, &self.closed.d, &mut report);
        check_differential("open", &self.open.basis, &self.open.d, &mut report);
        check_form(&self.closed.pairing, &self.closed.basis, &self.closed.d, &mut report);
        check_form(&self.open.pairing_prime, &self.open.basis, &self.open.d, &mut report);
        check_form(&self.open.pairing_double, &self.open.basis, &self.open.d, &mut report);

        let basis = &self.closed.basis;
        for (&a, v) in self.delta_co.entries() {
            if basis.degree(a) != 0 {
                report.push(
                    "delta_co_support",
                    format!(
                        "delta_co[{}] = {v} but {} has degree {} (support must be degree 0)",
                        basis.name(a),
                        basis.name(a),
                        basis.degree(a)
                    ),
                );
            }
        }
        for a in 0..basis.len() {
            let v: Scalar = self
                .closed
                .d
                .image(a)
                .map(|(to, c)| c * &self.delta_co.get(to))
                .sum();
            if !v.is_zero() {
                report.push(
                    "delta_co_chain_map",
                    format!("delta_co(d {}) = {v}, expected 0", basis.name(a)),
                );
            }
        }
        report
    }
}

pub fn validate(spec: &AlgebraSpec) -> ValidationReport {
    spec.validate()
}

fn check_differential(label: &str, basis: &GradedBasis, d: &Differential, report: &mut ValidationReport) {
    for (&(from, to), c) in d.entries() {
        if basis.degree(to) != basis.degree(from) + 1 {
            report.push(
                "differential_degree",
                format!(
                    "{label} differential d({}) has coefficient {c} on {}, violating differential degree +1 ({} -> {})",
                    basis.name(from),
                    basis.name(to),
                    basis.degree(from),
                    basis.degree(to)
                ),
            );
        }
    }
    for a in 0..basis.len() {
        let mut sq: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (b, c1) in d.image(a) {
            for (t, c2) in d.image(b) {
                *sq.entry(t).or_insert_with(Scalar::zero) += c1 * c2;
            }
        }
        for (t, v) in sq {
            if !v.is_zero() {
                report.push(
                    "d_squared",
                    format!("{label} d\u{b2}({}) has coefficient {v} on {}", basis.name(a), basis.name(t)),
                );
            }
        }
    }
}

fn check_form(form: &PairingForm, basis: &GradedBasis, d: &Differential, report: &mut ValidationReport) {
    let label = form.kind.label();
    for (&(a, b), v) in form.entries() {
        if basis.degree(a) + basis.degree(b) != form.window {
            report.push(
                "degree_window",
                format!(
                    "{label} pairing ({}, {}) = {v} violates degree window {}: {} + {} != {}",
                    basis.name(a),
                    basis.name(b),
                    form.window,
                    basis.degree(a),
                    basis.degree(b),
                    form.window
                ),
            );
        }
        if a != b {
            if let Some(w) = form.entries.get(&(b, a)) {
                let e = form.symmetry.exponent(basis.degree(a), basis.degree(b));
                if *w != v * &Scalar::sign_power(e) {
                    report.push(
                        "symmetry",
                        format!(
                            "{label} pairing ({}, {}) = {v} and ({}, {}) = {w} break graded symmetry",
                            basis.name(a),
                            basis.name(b),
                            basis.name(b),
                            basis.name(a)
                        ),
                    );
                }
            }
        } else {
            let e = form.symmetry.exponent(basis.degree(a), basis.degree(a));
            if e.rem_euclid(2) == 1 {
                report.push(
                    "symmetry",
                    format!("{label} pairing ({0}, {0}) = {v} must vanish by graded antisymmetry", basis.name(a)),
                );
            }
        }
    }
    // (da, b) + (−1)^{|a|} (a, db) = 0
    for a in 0..basis.len() {
        for b in 0..basis.len() {
            let mut v: Scalar = d.image(a).map(|(t, c)| c * &form.value(basis, t, b)).sum();
            let right: Scalar = d.image(b).map(|(t, c)| c * &form.value(basis, a, t)).sum();
            v += right * Scalar::sign_power(basis.degree(a));
            if !v.is_zero() {
                report.push(
                    "chain_map",
                    format!(
                        "{label} pairing is not a chain map at ({}, {}): defect {v}",
                        basis.name(a),
                        basis.name(b)
                    ),
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DEntryJson {
    pub from: String,
    pub to: String,
    pub coeff: Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairEntryJson {
    pub a: String,
    pub b: String,
    pub value: Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoEntryJson {
    pub a: String,
    pub value: Scalar,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClosedJson {
    pub basis: Vec<BasisSymbol>,
    #[serde(default)]
    pub d: Vec<DEntryJson>,
    #[serde(default)]
    pub pairing: Vec<PairEntryJson>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OpenJson {
    pub basis: Vec<BasisSymbol>,
    #[serde(default)]
    pub d: Vec<DEntryJson>,
    #[serde(default)]
    pub pairing_prime: Vec<PairEntryJson>,
    #[serde(default)]
    pub pairing_double: Vec<PairEntryJson>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConventionJson {
    pub window: i64,
    pub symmetry: SymmetryRule,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConventionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<ConventionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_prime: Option<ConventionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_double: Option<ConventionJson>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpecJson {
    #[serde(default)]
    pub closed: ClosedJson,
    #[serde(default)]
    pub open: OpenJson,
    #[serde(default)]
    pub delta_co: Vec<CoEntryJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<ConventionsJson>,
}

fn build_d(basis: &GradedBasis, entries: &[DEntryJson]) -> Result<Differential> {
    let mut d = Differential::new();
    for e in entries {
        let (f, t) = (lookup_parse(basis, &e.from)?, lookup_parse(basis, &e.to)?);
        let prev = d.entries.get(&(f, t)).cloned().unwrap_or_else(Scalar::zero);
        d.set(f, t, prev + &e.coeff);
    }
    Ok(d)
}

fn build_form(
    kind: FormKind,
    conv: Option<ConventionJson>,
    basis: &GradedBasis,
    entries: &[PairEntryJson],
) -> Result<PairingForm> {
    let mut form = match conv {
        Some(c) => PairingForm::with_convention(kind, c.window, c.symmetry),
        None => PairingForm::new(kind),
    };
    for e in entries {
        let (a, b) = (lookup_parse(basis, &e.a)?, lookup_parse(basis, &e.b)?);
        if form.entries.contains_key(&(a, b)) {
            return Err(Error::Parse(format!(
                "{} pairing entry ({}, {}) given twice",
                kind.label(),
                e.a,
                e.b
            )));
        }
        form.set(a, b, e.value.clone());
    }
    Ok(form)
}

fn lookup_parse(basis: &GradedBasis, name: &str) -> Result<usize> {
    basis
        .lookup(name)
        .map_err(|_| Error::Parse(format!("unknown basis symbol {name:?}")))
}

impl AlgebraSpec {
    pub fn from_json(j: &AlgebraSpecJson) -> Result<Self> {
        let conv = j.conventions.clone().unwrap_or_default();
        let cb = GradedBasis::new(j.closed.basis.clone())?;
        let ob = GradedBasis::new(j.open.basis.clone())?;
        let closed = ClosedSector {
            d: build_d(&cb, &j.closed.d)?,
            pairing: build_form(FormKind::Closed, conv.closed, &cb, &j.closed.pairing)?,
            basis: cb,
        };
        let open = OpenSector {
            d: build_d(&ob, &j.open.d)?,
            pairing_prime: build_form(FormKind::OpenPrime, conv.open_prime, &ob, &j.open.pairing_prime)?,
            pairing_double: build_form(FormKind::OpenDouble, conv.open_double, &ob, &j.open.pairing_double)?,
            basis: ob,
        };
        let mut delta_co = CoFunctional::default();
        for e in &j.delta_co {
            let a = lookup_parse(&closed.basis, &e.a)?;
            let prev = delta_co.get(a);
            delta_co.set(a, prev + &e.value);
        }
        Ok(AlgebraSpec { closed, open, delta_co })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: AlgebraSpecJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }

    pub fn to_json(&self) -> AlgebraSpecJson {
        fn d_json(b: &GradedBasis, d: &Differential) -> Vec<DEntryJson> {
            d.entries()
                .iter()
                .map(|(&(f, t), c)| DEntryJson {
                    from: b.name(f).into(),
                    to: b.name(t).into(),
                    coeff: c.clone(),
                })
                .collect()
        }
        fn p_json(b: &GradedBasis, f: &PairingForm) -> Vec<PairEntryJson> {
            f.entries()
                .iter()
                .map(|(&(x, y), v)| PairEntryJson {
                    a: b.name(x).into(),
                    b: b.name(y).into(),
                    value: v.clone(),
                })
                .collect()
        }
        fn conv(f: &PairingForm) -> Option<ConventionJson> {
            (f.window != f.kind.default_window() || f.symmetry != SymmetryRule::Plain).then_some(ConventionJson {
                window: f.window,
                symmetry: f.symmetry,
            })
        }
        let c = &self.closed;
        let o = &self.open;
        let conventions = ConventionsJson {
            closed: conv(&c.pairing),
            open_prime: conv(&o.pairing_prime),
            open_double: conv(&o.pairing_double),
        };
        let any = conventions.closed.is_some() || conventions.open_prime.is_some() || conventions.open_double.is_some();
        AlgebraSpecJson {
            closed: ClosedJson {
                basis: c.basis.symbols().to_vec(),
                d: d_json(&c.basis, &c.d),
                pairing: p_json(&c.basis, &c.pairing),
            },
            open: OpenJson {
                basis: o.basis.symbols().to_vec(),
                d: d_json(&o.basis, &o.d),
                pairing_prime: p_json(&o.basis, &o.pairing_prime),
                pairing_double: p_json(&o.basis, &o.pairing_double),
            },
            delta_co: self
                .delta_co
                .entries()
                .iter()
                .map(|(&a, v)| CoEntryJson {
                    a: c.basis.name(a).into(),
                    value: v.clone(),
                })
                .collect(),
            conventions: any.then_some(conventions),
        }
    }
}
