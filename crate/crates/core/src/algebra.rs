//! The graded commutative algebra `A = S(H_c) ⊗ S(C^λ(H_o))`.
//!
//! A cyclic word `a_0 ⊗ … ⊗ a_n` lives in `H_o[1]^{⊗(n+1)}[−1]` modulo the
//! signed rotation `t`; its degree is `Σ|a_i| − n` and the empty word `e`
//! has degree 1. Inside a word every letter carries its shifted degree
//! `|a| − 1`. Signs between factors of a monomial use the factor degrees.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sign::koszul_odd;
use crate::spaces::AlgebraSpec;

/// Open basis indices.
pub type Word = Vec<usize>;

/// A factor of a monomial. The derived order puts closed factors first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Closed(usize),
    Cyclic(Word),
}

/// A product of factors in normal form: sorted, canonical cyclic words, no
/// repeated odd factor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    factors: Vec<Factor>,
}

impl Monomial {
    pub fn unit() -> Self {
        Monomial::default()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn closed(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.iter().filter_map(|f| match f {
            Factor::Closed(x) => Some(*x),
            Factor::Cyclic(_) => None,
        })
    }

    pub fn cyclic(&self) -> impl Iterator<Item = &Word> + '_ {
        self.factors.iter().filter_map(|f| match f {
            Factor::Closed(_) => None,
            Factor::Cyclic(w) => Some(w),
        })
    }

    pub fn n_closed(&self) -> usize {
        self.closed().count()
    }

    pub fn n_cyclic(&self) -> usize {
        self.cyclic().count()
    }
}

/// A finite linear combination of normal-form monomials, tagged with the
/// algebra it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    algebra: u64,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Element {
    pub fn algebra_id(&self) -> u64 {
        self.algebra
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Scalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Adds `c · m`; `m` must already be in normal form.
    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn same(&self, other: &Element) {
        assert_eq!(self.algebra, other.algebra, "elements of different algebras");
    }

    pub fn add(&self, other: &Element) -> Element {
        self.same(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Element) -> Element {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, s: &Scalar) -> Element {
        if s.is_zero() {
            return Element {
                algebra: self.algebra,
                terms: BTreeMap::new(),
            };
        }
        Element {
            algebra: self.algebra,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn neg(&self) -> Element {
        self.scale(&-Scalar::one())
    }

    /// Keeps only the monomials accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Element {
        Element {
            algebra: self.algebra,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Homogeneous(i64),
    Inhomogeneous,
}

/// An algebra built on a spec. Elements remember the id of the algebra that
/// produced them.
#[derive(Debug, Clone)]
pub struct OcAlgebra {
    spec: Arc<AlgebraSpec>,
    id: u64,
    letter_rank: Vec<usize>,
    mutation: bool,
}

impl OcAlgebra {
    pub fn new(spec: AlgebraSpec) -> Self {
        let id = spec.fingerprint();
        let basis = &spec.open.basis;
        let mut by_name: Vec<usize> = (0..basis.len()).collect();
        by_name.sort_by(|&a, &b| basis.name(a).cmp(basis.name(b)));
        let mut letter_rank = vec![0; basis.len()];
        for (r, &i) in by_name.iter().enumerate() {
            letter_rank[i] = r;
        }
        OcAlgebra {
            spec: Arc::new(spec),
            id,
            letter_rank,
            mutation: false,
        }
    }

    /// Like [`OcAlgebra::new`] but rejects specs with validation violations.
    pub fn validated(spec: AlgebraSpec) -> Result<Self> {
        let report = spec.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::Validation(format!(
                "{} violation(s), first: {}",
                report.violations.len(),
                v.message
            )));
        }
        Ok(Self::new(spec))
    }

    /// Test hook: drops the marker sign inside `Δ'_o`.
    pub fn with_sign_mutation(mut self, on: bool) -> Self {
        self.mutation = on;
        self
    }

    pub fn sign_mutation(&self) -> bool {
        self.mutation
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.id,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(&self) -> Element {
        self.monomial_element(Monomial::unit(), Scalar::one())
    }

    pub fn monomial_element(&self, m: Monomial, c: Scalar) -> Element {
        let mut e = self.zero();
        e.add_term(m, c);
        e
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        if a.algebra != self.id {
            return Err(Error::Validation("element belongs to a different algebra".into()));
        }
        Ok(())
    }

    // -- degrees ------------------------------------------------------------

    pub fn closed_degree(&self, x: usize) -> i64 {
        self.spec.closed.basis.degree(x)
    }

    pub fn open_degree(&self, a: usize) -> i64 {
        self.spec.open.basis.degree(a)
    }

    /// `|a| − 1`, the degree of a letter inside a cyclic word.
    pub fn shifted(&self, a: usize) -> i64 {
        self.open_degree(a) - 1
    }

    pub fn word_degree(&self, w: &[usize]) -> i64 {
        1 + w.iter().map(|&a| self.shifted(a)).sum::<i64>()
    }

    pub fn factor_degree(&self, f: &Factor) -> i64 {
        match f {
            Factor::Closed(x) => self.closed_degree(*x),
            Factor::Cyclic(w) => self.word_degree(w),
        }
    }

    pub fn monomial_degree(&self, m: &Monomial) -> i64 {
        m.factors.iter().map(|f| self.factor_degree(f)).sum()
    }

    pub fn degree(&self, a: &Element) -> Result<Degree> {
        let mut it = a.terms.keys().map(|m| self.monomial_degree(m));
        let Some(first) = it.next() else {
            return Err(Error::Domain("degree of the zero element is undefined".into()));
        };
        Ok(if it.all(|d| d == first) {
            Degree::Homogeneous(first)
        } else {
            Degree::Inhomogeneous
        })
    }

    /// Degree of a homogeneous element; zero counts as degree 0.
    pub fn homogeneous_degree(&self, a: &Element) -> Result<i64> {
        match self.degree(a) {
            Ok(Degree::Homogeneous(d)) => Ok(d),
            Ok(Degree::Inhomogeneous) => Err(Error::Validation("element is not homogeneous".into())),
            Err(_) => Ok(0),
        }
    }

    // -- cyclic words -------------------------------------------------------

    /// Sign of rotating `w` so that it starts at position `k`:
    /// `a_k … a_n a_0 … a_{k−1}` equals this sign times `a_0 … a_n` in the
    /// coinvariants.
    pub fn rotation_sign(&self, w: &[usize], k: usize) -> bool {
        let front: i64 = w[..k].iter().map(|&a| self.shifted(a)).sum();
        let back: i64 = w[k..].iter().map(|&a| self.shifted(a)).sum();
        (front * back).rem_euclid(2) == 1
    }

    /// Canonical representative and sign: `[w] = sign · [rep]`, or `None` when
    /// the class vanishes.
    pub fn cyclic_normalize(&self, w: &[usize]) -> Option<(Word, bool)> {
        let n = w.len();
        if n <= 1 {
            return Some((w.to_vec(), false));
        }
        let key = |k: usize| -> Vec<usize> { (0..n).map(|i| self.letter_rank[w[(k + i) % n]]).collect() };
        let mut best = 0;
        let mut best_key = key(0);
        for k in 1..n {
            let kk = key(k);
            if kk < best_key {
                best = k;
                best_key = kk;
            }
        }
        let sign = self.rotation_sign(w, best);
        // A rotation fixing the word with sign −1 kills the class.
        for k in 1..n {
            if (0..n).all(|i| w[(k + i) % n] == w[i]) && self.rotation_sign(w, k) {
                return None;
            }
        }
        let rep: Word = (0..n).map(|i| w[(best + i) % n]).collect();
        Some((rep, sign))
    }

    /// Name-level front end to [`OcAlgebra::cyclic_normalize`].
    pub fn cyclic_normalize_names(&self, letters: &[&str], coeff: Scalar) -> Result<Option<(Vec<String>, Scalar)>> {
        let basis = &self.spec.open.basis;
        let w = letters.iter().map(|l| basis.lookup(l)).collect::<Result<Word>>()?;
        Ok(self.cyclic_normalize(&w).map(|(rep, s)| {
            (
                rep.iter().map(|&a| basis.name(a).to_string()).collect(),
                coeff.negate_if(s),
            )
        }))
    }

    // -- normal form --------------------------------------------------------

    /// Normal form of `c · f_1 ⋯ f_k` taken in the given order.
    pub fn normalize_product(&self, c: Scalar, factors: Vec<Factor>) -> Option<(Monomial, Scalar)> {
        let mut odd = false;
        let mut fs = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                Factor::Cyclic(w) => {
                    let (rep, s) = self.cyclic_normalize(&w)?;
                    odd ^= s;
                    fs.push(Factor::Cyclic(rep));
                }
                f => fs.push(f),
            }
        }
        let mut order: Vec<usize> = (0..fs.len()).collect();
        order.sort_by(|&i, &j| fs[i].cmp(&fs[j]));
        let degs: Vec<i64> = fs.iter().map(|f| self.factor_degree(f)).collect();
        odd ^= koszul_odd(&order, |i| degs[i].rem_euclid(2) == 1);
        for w in order.windows(2) {
            if fs[w[0]] == fs[w[1]] && degs[w[0]].rem_euclid(2) == 1 {
                return None;
            }
        }
        let mut sorted = Vec::with_capacity(fs.len());
        let mut slots: Vec<Option<Factor>> = fs.into_iter().map(Some).collect();
        for i in order {
            sorted.push(slots[i].take().expect("each slot used once"));
        }
        Some((Monomial { factors: sorted }, c.negate_if(odd)))
    }

    /// Builds an element from raw products, normalizing each.
    pub fn normalize(&self, raw: impl IntoIterator<Item = (Scalar, Vec<Factor>)>) -> Element {
        let mut out = self.zero();
        for (c, fs) in raw {
            if let Some((m, c)) = self.normalize_product(c, fs) {
                out.add_term(m, c);
            }
        }
        out
    }

    /// Single monomial element from symbol names.
    pub fn parse_monomial(&self, coeff: Scalar, closed: &[&str], cyclic: &[&[&str]]) -> Result<Element> {
        let mut fs = Vec::new();
        for x in closed {
            fs.push(Factor::Closed(self.spec.closed.basis.lookup(x)?));
        }
        for w in cyclic {
            let w = w.iter().map(|a| self.spec.open.basis.lookup(a)).collect::<Result<Word>>()?;
            fs.push(Factor::Cyclic(w));
        }
        Ok(self.normalize([(coeff, fs)]))
    }

    pub fn dot(&self, a: &Element, b: &Element) -> Result<Element> {
        if a.algebra != b.algebra {
            return Err(Error::Validation("dot of elements over different algebras".into()));
        }
        self.check(a)?;
        Ok(self.mul(a, b))
    }

    /// Product without the algebra check; panics on mixed elements.
    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        assert!(a.algebra == self.id && b.algebra == self.id, "elements of different algebras");
        let mut out = self.zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let fs: Vec<Factor> = ma.factors.iter().chain(mb.factors.iter()).cloned().collect();
                if let Some((m, c)) = self.normalize_product(ca * cb, fs) {
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    /// Applies a map defined on monomials and extends it linearly.
    pub fn map_monomials(&self, a: &Element, f: impl Fn(&Monomial, &mut Vec<(Scalar, Vec<Factor>)>)) -> Element {
        assert_eq!(a.algebra, self.id, "element of a different algebra");
        let mut raw = Vec::new();
        let mut out = self.zero();
        for (m, c) in &a.terms {
            raw.clear();
            f(m, &mut raw);
            for (k, fs) in raw.drain(..) {
                if let Some((mm, cc)) = self.normalize_product(c * &k, fs) {
                    out.add_term(mm, cc);
                }
            }
        }
        out
    }

    /// The internal differential, a degree-one derivation over closed factors
    /// and over letters of cyclic words.
    pub fn differential(&self, a: &Element) -> Element {
        let cd = &self.spec.closed.d;
        let od = &self.spec.open.d;
        self.map_monomials(a, |m, out| {
            let mut before = 0i64;
            for (p, f) in m.factors.iter().enumerate() {
                match f {
                    Factor::Closed(x) => {
                        for (y, c) in cd.image(*x) {
                            let mut fs = m.factors.clone();
                            fs[p] = Factor::Closed(y);
                            out.push((c.clone().negate_if(before.rem_euclid(2) == 1), fs));
                        }
                        before += self.closed_degree(*x);
                    }
                    Factor::Cyclic(w) => {
                        before += 1;
                        for (r, &l) in w.iter().enumerate() {
                            for (t, c) in od.image(l) {
                                let mut nw = w.clone();
                                nw[r] = t;
                                let mut fs = m.factors.clone();
                                fs[p] = Factor::Cyclic(nw);
                                out.push((c.clone().negate_if(before.rem_euclid(2) == 1), fs));
                            }
                            before += self.shifted(l);
                        }
                    }
                }
            }
        })
    }

    // -- JSON ---------------------------------------------------------------

    pub fn element_from_json(&self, j: &ElementJson) -> Result<Element> {
        let mut raw = Vec::new();
        for t in &j.terms {
            let mut fs = Vec::new();
            for x in &t.closed {
                fs.push(Factor::Closed(lookup(&self.spec.closed.basis, x)?));
            }
            for w in &t.cyclic {
                let w = w.iter().map(|a| lookup(&self.spec.open.basis, a)).collect::<Result<Word>>()?;
                fs.push(Factor::Cyclic(w));
            }
            raw.push((t.coeff.clone(), fs));
        }
        Ok(self.normalize(raw))
    }

    pub fn element_from_str(&self, s: &str) -> Result<Element> {
        let j: ElementJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        self.element_from_json(&j)
    }

    pub fn element_to_json(&self, a: &Element) -> ElementJson {
        let cb = &self.spec.closed.basis;
        let ob = &self.spec.open.basis;
        ElementJson {
            terms: a
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    coeff: c.clone(),
                    closed: m.closed().map(|x| cb.name(x).to_string()).collect(),
                    cyclic: m
                        .cyclic()
                        .map(|w| w.iter().map(|&l| ob.name(l).to_string()).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    /// Human-readable form such as `3/2 x·y·[a⊗b] − e`.
    pub fn display(&self, a: &Element) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let cb = &self.spec.closed.basis;
        let ob = &self.spec.open.basis;
        let mut parts = Vec::new();
        for (m, c) in &a.terms {
            let mut fs: Vec<String> = m.closed().map(|x| cb.name(x).to_string()).collect();
            for w in m.cyclic() {
                if w.is_empty() {
                    fs.push("e".into());
                } else {
                    let ls: Vec<&str> = w.iter().map(|&l| ob.name(l)).collect();
                    fs.push(format!("[{}]", ls.join("\u{2297}")));
                }
            }
            let body = if fs.is_empty() { "1".to_string() } else { fs.join("\u{b7}") };
            if c.is_one() {
                parts.push(body);
            } else if fs.is_empty() {
                parts.push(c.to_string());
            } else {
                parts.push(format!("{c} {body}"));
            }
        }
        parts.join(" + ")
    }
}

fn lookup(basis: &crate::spaces::GradedBasis, name: &str) -> Result<usize> {
    basis
        .lookup(name)
        .map_err(|_| Error::Validation(format!("unknown basis symbol {name:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coeff: Scalar,
    #[serde(default)]
    pub closed: Vec<String>,
    #[serde(default)]
    pub cyclic: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub terms: Vec<TermJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alg() -> OcAlgebra {
        // closed: x:0 -> y:1 (d x = y), z:-1; open: a:0, b:1, c:2 -> d:3 (d c = d), f:1
        let spec = AlgebraSpec::from_json_str(
            r#"{"closed":{"basis":[{"name":"x","degree":0},{"name":"y","degree":1},{"name":"z","degree":-1}],
                 "d":[{"from":"x","to":"y","coeff":"1"}]},
                "open":{"basis":[{"name":"a","degree":0},{"name":"b","degree":1},{"name":"c","degree":2},{"name":"d","degree":3},{"name":"f","degree":1}],
                 "d":[{"from":"c","to":"d","coeff":"1"},{"from":"a","to":"f","coeff":"2"}]}}"#,
        )
        .unwrap();
        OcAlgebra::new(spec)
    }

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    #[test]
    fn single_letter_and_empty_word() {
        let a = alg();
        assert_eq!(a.cyclic_normalize(&[0]), Some((vec![0], false)));
        assert_eq!(a.cyclic_normalize(&[]), Some((vec![], false)));
        assert_eq!(a.word_degree(&[]), 1);
    }

    #[test]
    fn even_letter_square_dies() {
        // t(a⊗a) = (−1)^{(0−1)(0−1)} a⊗a
        let a = alg();
        assert_eq!(a.cyclic_normalize(&[0, 0]), None);
        // |b| = 1: shifted degree 0, so [b⊗b] survives
        assert!(a.cyclic_normalize(&[1, 1]).is_some());
    }

    #[test]
    fn rotation_picks_name_order() {
        let a = alg();
        let n = a.cyclic_normalize_names(&["c", "a", "b"], q(1)).unwrap().unwrap();
        assert_eq!(n.0, vec!["a", "b", "c"]);
        // rotating c past a⊗b: shifted degrees (1) and (−1 + 0) give an odd sign
        assert_eq!(n.1, q(-1));
    }

    #[test]
    fn closed_ordering_and_odd_squares() {
        let a = alg();
        let yx = a.parse_monomial(q(1), &["z", "x"], &[]).unwrap();
        let xy = a.parse_monomial(q(1), &["x", "z"], &[]).unwrap();
        assert_eq!(yx, xy);
        assert!(a.parse_monomial(q(1), &[], &[&[], &[]]).unwrap().is_zero());
        assert!(a.parse_monomial(q(1), &["z", "z"], &[]).unwrap().is_zero());
        let zy = a.parse_monomial(q(1), &["z", "y"], &[]).unwrap();
        let yz = a.parse_monomial(q(1), &["y", "z"], &[]).unwrap();
        assert_eq!(zy, yz.neg());
    }

    #[test]
    fn dot_unit_and_mixed() {
        let a = alg();
        let x = a.parse_monomial(q(3), &["x"], &[&["a", "b"]]).unwrap();
        assert_eq!(a.dot(&a.one(), &x).unwrap(), x);
        let other = OcAlgebra::new(AlgebraSpec::empty());
        assert!(a.dot(&x, &other.one()).is_err());
        let z = a.parse_monomial(q(1), &["z"], &[]).unwrap();
        let zx = a.parse_monomial(q(1), &["z", "x"], &[]).unwrap();
        assert!(a.dot(&z, &zx).unwrap().is_zero());
    }

    #[test]
    fn differential_examples() {
        let a = alg();
        assert!(a.differential(&a.one()).is_zero());
        let e = a.parse_monomial(q(1), &[], &[&[]]).unwrap();
        assert!(a.differential(&e).is_zero());
        let xx = a.parse_monomial(q(1), &["x", "x"], &[]).unwrap();
        let want = a.parse_monomial(q(2), &["x", "y"], &[]).unwrap();
        assert_eq!(a.differential(&xx), want);
    }

    #[test]
    fn degree_examples() {
        let a = alg();
        let x = a.parse_monomial(q(1), &["x"], &[]).unwrap();
        assert_eq!(a.degree(&x).unwrap(), Degree::Homogeneous(0));
        let bf = a.parse_monomial(q(1), &[], &[&["b", "f"]]).unwrap();
        assert_eq!(a.degree(&bf).unwrap(), Degree::Homogeneous(1));
        let b = a.parse_monomial(q(1), &[], &[&["b"]]).unwrap();
        assert_eq!(a.degree(&x.add(&b)).unwrap(), Degree::Inhomogeneous);
        let z = a.parse_monomial(q(1), &["z"], &[]).unwrap();
        assert_eq!(a.degree(&x.add(&z)).unwrap(), Degree::Inhomogeneous);
        assert!(a.degree(&a.zero()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = alg();
        let s = r#"{"terms":[{"coeff":"-3/2","closed":["x","y"],"cyclic":[["a","b"],[]]}]}"#;
        let el = a.element_from_str(s).unwrap();
        let back = a.element_from_json(&a.element_to_json(&el)).unwrap();
        assert_eq!(el, back);
        assert!(a.element_from_str(r#"{"terms":[{"coeff":"1","closed":["nope"]}]}"#).is_err());
    }

    fn raw_factor() -> impl Strategy<Value = Factor> {
        prop_oneof![
            (0usize..3).prop_map(Factor::Closed),
            proptest::collection::vec(0usize..5, 0..=4).prop_map(Factor::Cyclic),
        ]
    }

    fn raw_element() -> impl Strategy<Value = Vec<(i64, Vec<Factor>)>> {
        proptest::collection::vec((-3i64..=3, proptest::collection::vec(raw_factor(), 0..=3)), 0..=3)
    }

    fn build(a: &OcAlgebra, raw: Vec<(i64, Vec<Factor>)>) -> Element {
        a.normalize(raw.into_iter().map(|(c, f)| (q(c), f)))
    }

    proptest! {
        #[test]
        fn d_squares_to_zero(raw in raw_element()) {
            let a = alg();
            let x = build(&a, raw);
            prop_assert!(a.differential(&a.differential(&x)).is_zero());
        }

        #[test]
        fn d_descends_to_coinvariants(w in proptest::collection::vec(0usize..5, 1..=4), k in 0usize..4) {
            let a = alg();
            let k = k % w.len();
            let rot: Word = w[k..].iter().chain(&w[..k]).copied().collect();
            let sign = if a.rotation_sign(&w, k) { q(-1) } else { q(1) };
            let lhs = a.differential(&build(&a, vec![(1, vec![Factor::Cyclic(w.clone())])]));
            let rhs = a.differential(&build(&a, vec![(1, vec![Factor::Cyclic(rot)])])).scale(&sign);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn normalize_idempotent(raw in raw_element()) {
            let a = alg();
            let x = build(&a, raw);
            let again = a.normalize(x.terms().iter().map(|(m, c)| (c.clone(), m.factors().to_vec())));
            prop_assert_eq!(x, again);
        }

        #[test]
        fn dot_associative_and_graded_commutative(
            f in proptest::collection::vec(raw_factor(), 0..=2),
            g in proptest::collection::vec(raw_factor(), 0..=2),
            h in proptest::collection::vec(raw_factor(), 0..=2),
        ) {
            let a = alg();
            let (x, y, z) = (build(&a, vec![(1, f)]), build(&a, vec![(2, g)]), build(&a, vec![(-1, h)]));
            let l = a.mul(&a.mul(&x, &y), &z);
            let r = a.mul(&x, &a.mul(&y, &z));
            prop_assert_eq!(l, r);
            if let (Ok(Degree::Homogeneous(dx)), Ok(Degree::Homogeneous(dy))) = (a.degree(&x), a.degree(&y)) {
                let xy = a.mul(&x, &y);
                let yx = a.mul(&y, &x).scale(&Scalar::sign_power(dx * dy));
                prop_assert_eq!(&xy, &yx);
                if !xy.is_zero() {
                    prop_assert_eq!(a.degree(&xy).unwrap(), Degree::Homogeneous(dx + dy));
                }
            }
        }

        #[test]
        fn d_raises_degree(f in proptest::collection::vec(raw_factor(), 0..=3)) {
            let a = alg();
            let x = build(&a, vec![(1, f)]);
            let dx = a.differential(&x);
            if let (Ok(Degree::Homogeneous(d0)), false) = (a.degree(&x), dx.is_zero()) {
                prop_assert_eq!(a.degree(&dx).unwrap(), Degree::Homogeneous(d0 + 1));
            }
        }
    }
}
