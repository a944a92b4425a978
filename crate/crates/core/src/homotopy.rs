//! Homotopy structures extracted from master-equation solutions: cyclic
//! chains and their Hochschild cochains, the Gerstenhaber bracket, Stasheff
//! residuals, and the L∞ coalgebra differential of the closed sector.
//!
//! Hochschild cochains act on `W = H_o[1]`; every sign below uses shifted
//! degrees `|a| − 1`. A cochain `f` of arity `k` acts on the tensor coalgebra
//! as the coderivation
//! `D_f(w_1 … w_n) = Σ_i (−1)^{|f|(s(w_1)+…+s(w_i))} w_1 … w_i f(w_{i+1} … w_{i+k}) …`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{Element, ElementJson, Factor, OcAlgebra, Word};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::master::{cme_residual, lowest_defect, MasterSeries};
use crate::scalar::Scalar;
use crate::series::{Bounds, Series};
use crate::sign::koszul_odd;
use crate::spaces::is_nondegenerate;

fn odd(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

// ---------------------------------------------------------------------------
// Hochschild cochains

/// A multilinear map `W^{⊗k} → W` stored by basis input words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HochschildCochain {
    arity: usize,
    entries: BTreeMap<Word, BTreeMap<usize, Scalar>>,
}

impl HochschildCochain {
    pub fn zero(arity: usize) -> Self {
        HochschildCochain {
            arity,
            entries: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_entry(&mut self, inputs: Word, output: usize, c: Scalar) {
        assert_eq!(inputs.len(), self.arity, "input length must match the arity");
        if c.is_zero() {
            return;
        }
        let row = self.entries.entry(inputs.clone()).or_default();
        let v = row.entry(output).or_insert_with(Scalar::zero);
        *v += &c;
        if v.is_zero() {
            row.remove(&output);
            if row.is_empty() {
                self.entries.remove(&inputs);
            }
        }
    }

    pub fn get(&self, inputs: &[usize], output: usize) -> Scalar {
        self.entries
            .get(inputs)
            .and_then(|r| r.get(&output))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// `f(inputs)` as `(output, coefficient)` pairs.
    pub fn eval(&self, inputs: &[usize]) -> impl Iterator<Item = (usize, &Scalar)> {
        self.entries.get(inputs).into_iter().flat_map(|r| r.iter().map(|(o, c)| (*o, c)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, usize, &Scalar)> {
        self.entries
            .iter()
            .flat_map(|(w, r)| r.iter().map(move |(o, c)| (w, *o, c)))
    }

    pub fn add(&self, other: &HochschildCochain) -> HochschildCochain {
        assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (w, o, c) in other.entries() {
            out.add_entry(w.clone(), o, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> HochschildCochain {
        let mut out = HochschildCochain::zero(self.arity);
        for (w, o, c) in self.entries() {
            out.add_entry(w.clone(), o, c * s);
        }
        out
    }

    /// The shifted operator degrees `s(out) − Σ s(in)` of the nonzero entries.
    pub fn degrees(&self, alg: &OcAlgebra) -> std::collections::BTreeSet<i64> {
        self.entries().map(|(w, o, _)| entry_degree(alg, w, o)).collect()
    }

    /// `[even part, odd part]`.
    fn split_parity(&self, alg: &OcAlgebra) -> [HochschildCochain; 2] {
        let mut parts = [HochschildCochain::zero(self.arity), HochschildCochain::zero(self.arity)];
        for (w, o, c) in self.entries() {
            parts[usize::from(odd(entry_degree(alg, w, o)))].add_entry(w.clone(), o, c.clone());
        }
        parts
    }
}

fn entry_degree(alg: &OcAlgebra, inputs: &[usize], output: usize) -> i64 {
    alg.shifted(output) - inputs.iter().map(|&a| alg.shifted(a)).sum::<i64>()
}

/// The coderivation `D_f` applied to one word, as `(coefficient, word)` terms.
pub fn coderivation(alg: &OcAlgebra, f: &HochschildCochain, f_odd: bool, w: &[usize]) -> Vec<(Scalar, Word)> {
    let k = f.arity;
    let mut out = Vec::new();
    if w.len() < k {
        return out;
    }
    let mut prefix = 0i64;
    for i in 0..=w.len() - k {
        for (o, c) in f.eval(&w[i..i + k]) {
            let mut nw = w[..i].to_vec();
            nw.push(o);
            nw.extend_from_slice(&w[i + k..]);
            out.push((c.clone().negate_if(f_odd && odd(prefix)), nw));
        }
        if i < w.len() {
            prefix += alg.shifted(w[i]);
        }
    }
    out
}

/// All words of the given length over `n` letters.
pub fn all_words(n: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..n).map(move |a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

/// `f ∘ D_g`, projected to arity `|f| + |g| − 1`.
fn compose(alg: &OcAlgebra, f: &HochschildCochain, g: &HochschildCochain, g_odd: bool) -> HochschildCochain {
    let n = f.arity + g.arity - 1;
    let mut out = HochschildCochain::zero(n);
    if f.is_zero() || g.is_zero() {
        return out;
    }
    let letters = alg.spec().open.basis.len();
    for w in all_words(letters, n) {
        for (c, mid) in coderivation(alg, g, g_odd, &w) {
            for (o, c2) in f.eval(&mid) {
                out.add_entry(w.clone(), o, &c * c2);
            }
        }
    }
    out
}

/// `[f, g] = f ∘ D_g − (−1)^{|f||g|} g ∘ D_f`, the coderivation commutator
/// read back as a cochain; inhomogeneous inputs are split by parity.
pub fn gerstenhaber_bracket(alg: &OcAlgebra, f: &HochschildCochain, g: &HochschildCochain) -> HochschildCochain {
    let fs = f.split_parity(alg);
    let gs = g.split_parity(alg);
    let mut out = HochschildCochain::zero(f.arity + g.arity - 1);
    for (fo, fp) in [false, true].iter().zip(&fs) {
        for (go, gp) in [false, true].iter().zip(&gs) {
            let a = compose(alg, fp, gp, *go);
            let b = compose(alg, gp, fp, *fo);
            let s = if *fo && *go { Scalar::one() } else { -Scalar::one() };
            out = out.add(&a).add(&b.scale(&s));
        }
    }
    out
}

/// The internal differential on `W = H_o[1]` as an arity-one cochain. The
/// suspension turns `d` into `−d`.
pub fn differential_cochain(alg: &OcAlgebra) -> HochschildCochain {
    let mut d = HochschildCochain::zero(1);
    for (&(from, to), c) in alg.spec().open.d.entries() {
        d.add_entry(vec![from], to, -c.clone());
    }
    d
}

/// The arity components of `{d + M̂, d + M̂}`. An arity-one entry of `mhat`
/// is added to the differential.
pub fn stasheff_residual(alg: &OcAlgebra, mhat: &[HochschildCochain]) -> BTreeMap<usize, HochschildCochain> {
    let mut comps: BTreeMap<usize, HochschildCochain> = BTreeMap::new();
    comps.insert(1, differential_cochain(alg));
    for f in mhat {
        if f.arity == 0 {
            continue;
        }
        let slot = comps.entry(f.arity).or_insert_with(|| HochschildCochain::zero(f.arity));
        *slot = slot.add(f);
    }
    let top = comps.keys().copied().max().unwrap_or(1);
    let mut out: BTreeMap<usize, HochschildCochain> = (1..=2 * top - 1).map(|n| (n, HochschildCochain::zero(n))).collect();
    for f in comps.values() {
        for g in comps.values() {
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let br = gerstenhaber_bracket(alg, f, g);
            let slot = out.get_mut(&br.arity).expect("arity in range");
            *slot = slot.add(&br);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cyclic chains and the adjoint map

/// `M = Σ_{k≥2} m_{k+1} λ^{k−1}`: the coefficient of arity `k` is a
/// combination of single cyclic words with `k + 1` letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicChain {
    pub terms: BTreeMap<usize, Element>,
}

impl CyclicChain {
    pub fn zero() -> Self {
        CyclicChain { terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|e| e.is_zero())
    }

    /// Reads a chain off a series in `λ`; checks word lengths, that only
    /// single cyclic factors occur, and degree 0.
    pub fn from_series(alg: &OcAlgebra, s: &Series<Element>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (k, v) in s.iter() {
            if v.is_zero() {
                continue;
            }
            if k.1 != 0 {
                return Err(Error::Validation(format!("cyclic chain term at \u{221a}\u{127}^{} (expected 0)", k.1)));
            }
            let arity = k.0 as usize + 1;
            for m in v.terms().keys() {
                match m.factors() {
                    [Factor::Cyclic(w)] if w.len() == arity + 1 => {}
                    _ => {
                        return Err(Error::Validation(format!(
                            "\u{3bb}^{} coefficient must consist of single cyclic words with {} letters",
                            k.0,
                            arity + 1
                        )))
                    }
                }
            }
            if arity < 2 {
                return Err(Error::Validation("cyclic chains start at \u{3bb}^1".into()));
            }
            alg.check(v)?;
            if alg.homogeneous_degree(v)? != 0 {
                return Err(Error::Validation(format!("\u{3bb}^{} coefficient must have degree 0", k.0)));
            }
            terms.insert(arity, v.clone());
        }
        Ok(CyclicChain { terms })
    }

    pub fn to_series(&self, bounds: Bounds) -> Result<Series<Element>> {
        let mut s = Series::zero(bounds);
        for (&k, v) in &self.terms {
            s.insert(((k - 1) as u32, 0), v.clone())?;
        }
        Ok(s)
    }
}

impl OcAlgebra {
    /// `P_W(a, v) = (−1)^{|a|} (a, v)''`.
    fn pair_w(&self, a: usize, v: usize) -> Scalar {
        let o = &self.spec().open;
        o.pairing_double.value(&o.basis, a, v).negate_if(odd(self.open_degree(a)))
    }

    /// The cochain of arity `len − 1` attached to one cyclic word:
    /// `m̂(v_1 … v_k) = Σ_i ε_i a_i Π_r P_W(a_{i+r}, v_r)`, where `ε_i` is the
    /// Koszul sign of `a_0 … a_k v_1 … v_k → a_i a_{i+1} v_1 … a_{i+k} v_k`.
    pub fn hat_word(&self, w: &[usize]) -> HochschildCochain {
        let n = w.len();
        let k = n.saturating_sub(1);
        let mut out = HochschildCochain::zero(k);
        if n < 2 {
            return out;
        }
        let letters = self.spec().open.basis.len();
        for i in 0..n {
            // output letter a_i, inputs v_r paired with a_{i+r}
            let partners: Vec<usize> = (1..=k).map(|r| w[(i + r) % n]).collect();
            let choices: Vec<Vec<(usize, Scalar)>> = partners
                .iter()
                .map(|&a| {
                    (0..letters)
                        .map(|v| (v, self.pair_w(a, v)))
                        .filter(|(_, c)| !c.is_zero())
                        .collect()
                })
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                let vs: Vec<usize> = idx.iter().zip(&choices).map(|(&j, c)| c[j].0).collect();
                let mut coeff = Scalar::one();
                for (j, c) in idx.iter().zip(&choices) {
                    coeff *= &c[*j].1;
                }
                // staging: positions 0..n are letters, n.. are inputs
                let mut order = vec![i];
                for r in 1..=k {
                    order.push((i + r) % n);
                    order.push(n + r - 1);
                }
                let all: Vec<usize> = w.iter().copied().chain(vs.iter().copied()).collect();
                let flip = koszul_odd(&order, |t| odd(self.shifted(all[t])));
                out.add_entry(vs, w[i], coeff.negate_if(flip));
                // next choice
                let mut p = 0;
                loop {
                    if p == k {
                        break;
                    }
                    idx[p] += 1;
                    if idx[p] < choices[p].len() {
                        break;
                    }
                    idx[p] = 0;
                    p += 1;
                }
                if p == k {
                    break;
                }
            }
        }
        out
    }

    /// The adjoint map on a combination of single cyclic words of one length.
    pub fn hat_element(&self, e: &Element, arity: usize) -> Result<HochschildCochain> {
        let mut out = HochschildCochain::zero(arity);
        for (m, c) in e.terms() {
            match m.factors() {
                [Factor::Cyclic(w)] if w.len() == arity + 1 => {
                    out = out.add(&self.hat_word(w).scale(c));
                }
                _ => {
                    return Err(Error::Validation(format!(
                        "expected single cyclic words with {} letters",
                        arity + 1
                    )))
                }
            }
        }
        Ok(out)
    }
}

pub fn hat_from_cyclic(alg: &OcAlgebra, m: &CyclicChain) -> Result<BTreeMap<usize, HochschildCochain>> {
    let mut out = BTreeMap::new();
    for (&k, e) in &m.terms {
        out.insert(k, alg.hat_element(e, k)?);
    }
    Ok(out)
}

/// `F(v_0, …, v_k) = P_W(m̂(v_1 … v_k), v_0)`.
fn contracted(alg: &OcAlgebra, f: &HochschildCochain, vs: &[usize]) -> Scalar {
    f.eval(&vs[1..]).map(|(o, c)| c * &alg.pair_w(o, vs[0])).sum()
}

/// The rotation sign in `F(v_k, v_0, …, v_{k−1}) = ±F(v_0, …, v_k)`, valid for
/// cochains coming from words of even degree.
fn t_sign(alg: &OcAlgebra, vs: &[usize]) -> bool {
    let (last, rest) = vs.split_last().expect("nonempty tuple");
    odd(alg.shifted(*last) * rest.iter().map(|&v| alg.shifted(v)).sum::<i64>())
}

/// The first basis tuple violating cyclic invariance of `(m̂(v_1 … v_k), v_0)''`.
pub fn cyclic_violation(alg: &OcAlgebra, f: &HochschildCochain) -> Option<Vec<usize>> {
    let n = alg.spec().open.basis.len();
    all_words(n, f.arity + 1).into_iter().find(|vs| {
        let mut rot = vec![*vs.last().expect("nonempty")];
        rot.extend_from_slice(&vs[..vs.len() - 1]);
        contracted(alg, f, &rot) != contracted(alg, f, vs).negate_if(t_sign(alg, vs))
    })
}

fn require_nondegenerate(alg: &OcAlgebra) -> Result<()> {
    let o = &alg.spec().open;
    if let Some((d, _)) = is_nondegenerate(&o.pairing_double, &o.basis).into_iter().find(|(_, ok)| !ok) {
        return Err(Error::Unsupported(format!("open_double pairing is degenerate in degree {d}")));
    }
    Ok(())
}

/// Inverts the adjoint map. Requires a nondegenerate `( , )''`; a cochain
/// failing cyclic invariance is rejected with the offending tuple.
pub fn cyclic_from_hat(alg: &OcAlgebra, mhat: &[HochschildCochain]) -> Result<CyclicChain> {
    require_nondegenerate(alg)?;
    let names = |vs: &[usize]| -> String {
        vs.iter()
            .map(|&v| alg.spec().open.basis.name(v))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let n = alg.spec().open.basis.len();
    let mut by_arity: BTreeMap<usize, HochschildCochain> = BTreeMap::new();
    for f in mhat {
        if f.is_zero() {
            continue;
        }
        if f.arity < 2 {
            return Err(Error::Validation("cyclic chains have no arity-one part".into()));
        }
        let slot = by_arity.entry(f.arity).or_insert_with(|| HochschildCochain::zero(f.arity));
        *slot = slot.add(f);
    }
    let mut chain = CyclicChain::zero();
    for (k, f) in by_arity {
        if let Some(vs) = cyclic_violation(alg, &f) {
            let mut rot = vec![vs[k]];
            rot.extend_from_slice(&vs[..k]);
            return Err(Error::Validation(format!(
                "not a cyclic cochain: arity {k} breaks F({}) = \u{b1}F({}) where F(v_0, …) = (m\u{302}(v_1, …), v_0)''",
                names(&rot),
                names(&vs)
            )));
        }
        let mut classes: Vec<Word> = all_words(n, k + 1)
            .into_iter()
            .filter_map(|w| alg.cyclic_normalize(&w).map(|(c, _)| c))
            .collect();
        classes.sort();
        classes.dedup();
        let images: Vec<HochschildCochain> = classes.iter().map(|c| alg.hat_word(c)).collect();
        let mut rows: BTreeMap<(Word, usize), usize> = BTreeMap::new();
        for (w, o, _) in images.iter().flat_map(|h| h.entries()).chain(f.entries()) {
            let next = rows.len();
            rows.entry((w.clone(), o)).or_insert(next);
        }
        let mut m = Matrix::zeros(rows.len(), classes.len());
        for (col, h) in images.iter().enumerate() {
            for (w, o, c) in h.entries() {
                m.set(rows[&(w.clone(), o)], col, c.clone());
            }
        }
        let mut rhs = vec![Scalar::zero(); rows.len()];
        for (w, o, c) in f.entries() {
            rhs[rows[&(w.clone(), o)]] = c.clone();
        }
        let x = m
            .solve(&rhs)
            .ok_or_else(|| Error::Validation(format!("arity {k} cochain is not in the image of the adjoint map")))?;
        let raw = classes
            .into_iter()
            .zip(x)
            .filter(|(_, c)| !c.is_zero())
            .map(|(w, c)| (c, vec![Factor::Cyclic(w)]));
        let e = alg.normalize(raw);
        if alg.homogeneous_degree(&e)? != 0 {
            return Err(Error::Validation(format!("arity {k} cochain corresponds to a chain of nonzero degree")));
        }
        chain.terms.insert(k, e);
    }
    Ok(chain)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainEntryJson {
    pub inputs: Vec<String>,
    pub output: String,
    pub coeff: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HochschildCochainJson {
    pub arity: usize,
    pub entries: Vec<CochainEntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicTermJson {
    pub arity: usize,
    pub element: ElementJson,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicChainJson {
    pub terms: Vec<CyclicTermJson>,
}

pub fn cochain_to_json(alg: &OcAlgebra, f: &HochschildCochain) -> HochschildCochainJson {
    let b = &alg.spec().open.basis;
    HochschildCochainJson {
        arity: f.arity,
        entries: f
            .entries()
            .map(|(w, o, c)| CochainEntryJson {
                inputs: w.iter().map(|&v| b.name(v).to_string()).collect(),
                output: b.name(o).to_string(),
                coeff: c.clone(),
            })
            .collect(),
    }
}

pub fn cochain_from_json(alg: &OcAlgebra, j: &HochschildCochainJson) -> Result<HochschildCochain> {
    let b = &alg.spec().open.basis;
    if j.arity == 0 {
        return Err(Error::Validation("cochain arity must be at least 1".into()));
    }
    let mut f = HochschildCochain::zero(j.arity);
    for e in &j.entries {
        if e.inputs.len() != j.arity {
            return Err(Error::Validation(format!(
                "entry with {} inputs in an arity-{} cochain",
                e.inputs.len(),
                j.arity
            )));
        }
        let inputs = e.inputs.iter().map(|x| b.lookup(x)).collect::<Result<Word>>()?;
        f.add_entry(inputs, b.lookup(&e.output)?, e.coeff.clone());
    }
    Ok(f)
}

pub fn chain_to_json(alg: &OcAlgebra, m: &CyclicChain) -> CyclicChainJson {
    CyclicChainJson {
        terms: m
            .terms
            .iter()
            .filter(|(_, e)| !e.is_zero())
            .map(|(&arity, e)| CyclicTermJson {
                arity,
                element: alg.element_to_json(e),
            })
            .collect(),
    }
}

pub fn chain_from_json(alg: &OcAlgebra, j: &CyclicChainJson) -> Result<CyclicChain> {
    let mut s = Series::zero(Bounds {
        lambda_max: u32::MAX,
        half_hbar_min: 0,
        half_hbar_max: 0,
    });
    for t in &j.terms {
        if t.arity < 2 {
            return Err(Error::Validation("cyclic chains start at arity 2".into()));
        }
        s.insert(((t.arity - 1) as u32, 0), alg.element_from_json(&t.element)?)?;
    }
    CyclicChain::from_series(alg, &s)
}

// ---------------------------------------------------------------------------
// L∞ data from the closed sector

/// `D = Σ_k D_k` on generators: `components[k][x] ∈ S^k(H_c)`, with `D_1 = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalgebraDifferential {
    pub components: BTreeMap<usize, BTreeMap<usize, Element>>,
}

impl CoalgebraDifferential {
    /// `D(x)` summed over all components.
    pub fn image(&self, alg: &OcAlgebra, x: usize) -> Element {
        self.components
            .values()
            .filter_map(|m| m.get(&x))
            .fold(alg.zero(), |acc, e| acc.add(e))
    }

    /// `D` extended to `S(H_c)` as a degree-one derivation.
    pub fn apply(&self, alg: &OcAlgebra, a: &Element) -> Element {
        let mut out = alg.zero();
        for (m, c) in a.terms() {
            let fs = m.factors();
            let mut before = 0i64;
            for (i, f) in fs.iter().enumerate() {
                let Factor::Closed(x) = *f else {
                    continue;
                };
                let prefix = alg.normalize([(c.clone().negate_if(odd(before)), fs[..i].to_vec())]);
                let suffix = alg.normalize([(Scalar::one(), fs[i + 1..].to_vec())]);
                out = out.add(&alg.mul(&alg.mul(&prefix, &self.image(alg, x)), &suffix));
                before += alg.closed_degree(x);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfExtraction {
    pub differential: CoalgebraDifferential,
    pub warnings: Vec<String>,
}

/// Reads `D_k = {s_{k+1}, −}_c` off the `λ^{2(k−1)} √ħ^{k−1}` terms of `S_c`.
pub fn linf_extract(alg: &OcAlgebra, s_c: &MasterSeries) -> Result<LinfExtraction> {
    let nc = alg.spec().closed.basis.len();
    let mut components = BTreeMap::new();
    components.insert(
        1,
        (0..nc)
            .map(|x| (x, alg.differential(&alg.normalize([(Scalar::one(), vec![Factor::Closed(x)])]))))
            .collect::<BTreeMap<_, _>>(),
    );
    for (&(l, h), v) in s_c.series.iter() {
        if v.is_zero() {
            continue;
        }
        let bad = |why: &str| Error::Validation(format!("term \u{3bb}^{l} \u{221a}\u{127}^{h}: {why}"));
        if l < 2 || l % 2 == 1 || h != (l / 2) as i32 {
            return Err(bad("closed-sector terms sit at \u{3bb}^{2(k-1)} \u{221a}\u{127}^{k-1} with k \u{2265} 2"));
        }
        let k = (l / 2 + 1) as usize;
        for m in v.terms().keys() {
            if m.n_cyclic() > 0 {
                return Err(bad("contains cyclic factors"));
            }
            if m.n_closed() != k + 1 {
                return Err(bad(&format!("expected words of length {}, found {}", k + 1, m.n_closed())));
            }
        }
        let mut images = BTreeMap::new();
        for x in 0..nc {
            let g = alg.normalize([(Scalar::one(), vec![Factor::Closed(x)])]);
            let img = alg.bracket_from(v, &g, 0, |e| alg.delta_c(e))?;
            if !img.is_zero() {
                images.insert(x, img);
            }
        }
        components.insert(k, images);
    }
    let mut warnings = Vec::new();
    let r = cme_residual(alg, s_c)?;
    if let Some((key, _)) = lowest_defect(&r) {
        warnings.push(format!(
            "S_c fails the classical master equation at \u{3bb}^{} \u{221a}\u{127}^{}",
            key.0, key.1
        ));
    }
    Ok(LinfExtraction {
        differential: CoalgebraDifferential { components },
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfDefect {
    pub generator: String,
    pub word_length: usize,
    pub element: ElementJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfReport {
    pub word_max: usize,
    pub defects: Vec<LinfDefect>,
}

impl LinfReport {
    pub fn is_clean(&self) -> bool {
        self.defects.is_empty()
    }
}

/// `D²` on every closed generator, dropping words longer than `word_max`.
pub fn linf_residual(alg: &OcAlgebra, d: &CoalgebraDifferential, word_max: usize) -> LinfReport {
    let cut = |e: &Element| e.filter(|m| m.n_closed() <= word_max);
    let mut defects = Vec::new();
    for x in 0..alg.spec().closed.basis.len() {
        let once = cut(&d.image(alg, x));
        let twice = cut(&d.apply(alg, &once));
        let mut by_len: BTreeMap<usize, Element> = BTreeMap::new();
        for (m, c) in twice.terms() {
            by_len
                .entry(m.n_closed())
                .or_insert_with(|| alg.zero())
                .add_term(m.clone(), c.clone());
        }
        for (word_length, e) in by_len {
            defects.push(LinfDefect {
                generator: alg.spec().closed.basis.name(x).to_string(),
                word_length,
                element: alg.element_to_json(&e),
            });
        }
    }
    LinfReport { word_max, defects }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{rng, trial_seed};
    use crate::spaces::AlgebraSpec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn alg(json: &str) -> OcAlgebra {
        OcAlgebra::new(AlgebraSpec::from_json_str(json).unwrap())
    }

    fn frobenius() -> OcAlgebra {
        alg(r#"{"open":{"basis":[{"name":"p","degree":2},{"name":"q","degree":-2}],
            "pairing_double":[{"a":"p","b":"q","value":"1"}]}}"#)
    }

    fn word(a: &OcAlgebra, c: i64, w: &[usize]) -> Element {
        a.normalize([(q(c), vec![Factor::Cyclic(w.to_vec())])])
    }

    /// A nondegenerately paired space of dimension at most 3.
    fn paired(r: &mut ChaCha8Rng) -> OcAlgebra {
        let d = r.gen_range(1..=2);
        let c = [1i64, -1, 2][r.gen_range(0..3)];
        let mut basis = format!(r#"{{"name":"p","degree":{d}}},{{"name":"q","degree":{}}}"#, -d);
        let mut pairs = format!(r#"{{"a":"p","b":"q","value":"{c}"}}"#);
        if r.gen_bool(0.5) {
            basis.push_str(r#",{"name":"r","degree":0}"#);
            pairs.push_str(r#",{"a":"r","b":"r","value":"1"}"#);
        }
        alg(&format!(r#"{{"open":{{"basis":[{basis}],"pairing_double":[{pairs}]}}}}"#))
    }

    fn random_words(r: &mut ChaCha8Rng, a: &OcAlgebra, len: usize, degree: Option<i64>) -> Element {
        let n = a.spec().open.basis.len();
        let mut e = a.zero();
        for _ in 0..40 {
            let w: Word = (0..len).map(|_| r.gen_range(0..n)).collect();
            if degree.is_some_and(|d| a.word_degree(&w) != d) {
                continue;
            }
            e = e.add(&word(a, r.gen_range(-2..=2), &w));
            if e.len() >= 2 {
                break;
            }
        }
        e
    }

    fn random_chain(r: &mut ChaCha8Rng, a: &OcAlgebra) -> CyclicChain {
        let mut m = CyclicChain::zero();
        for k in 2..=r.gen_range(2..=4) {
            if r.gen_bool(0.7) {
                m.terms.insert(k, random_words(r, a, k + 1, Some(0)));
            }
        }
        m
    }

    fn all_hat(a: &OcAlgebra, m: &CyclicChain) -> Vec<HochschildCochain> {
        hat_from_cyclic(a, m).unwrap().into_values().collect()
    }

    /// Insertion formula `Σ_i ± f(v_1 … g(v_{i+1} …) …)`, signs from moving
    /// `g` past the preceding inputs.
    fn insertion(a: &OcAlgebra, f: &HochschildCochain, g: &HochschildCochain) -> HochschildCochain {
        let n = f.arity() + g.arity() - 1;
        let mut out = HochschildCochain::zero(n);
        let letters = a.spec().open.basis.len();
        for w in all_words(letters, n) {
            for i in 0..=n - g.arity() {
                for (go, gc) in g.eval(&w[i..i + g.arity()]) {
                    let gdeg = entry_degree(a, &w[i..i + g.arity()], go);
                    // staging: symbol 0 is g, symbols 1.. are the inputs
                    let mut order: Vec<usize> = (1..=i).collect();
                    order.push(0);
                    order.extend(i + 1..=n);
                    let flip = koszul_odd(&order, |t| if t == 0 { odd(gdeg) } else { odd(a.shifted(w[t - 1])) });
                    let mut mid = w[..i].to_vec();
                    mid.push(go);
                    mid.extend_from_slice(&w[i + g.arity()..]);
                    for (fo, fc) in f.eval(&mid) {
                        out.add_entry(w.clone(), fo, (gc * fc).negate_if(flip));
                    }
                }
            }
        }
        out
    }

    fn random_cochain(r: &mut ChaCha8Rng, a: &OcAlgebra, arity: usize, parity: bool) -> HochschildCochain {
        let n = a.spec().open.basis.len();
        let mut f = HochschildCochain::zero(arity);
        for w in all_words(n, arity) {
            for o in 0..n {
                if odd(entry_degree(a, &w, o)) == parity && r.gen_bool(0.4) {
                    f.add_entry(w.clone(), o, q(r.gen_range(-2..=2)));
                }
            }
        }
        f
    }

    fn small() -> OcAlgebra {
        alg(r#"{"open":{"basis":[{"name":"u","degree":1},{"name":"v","degree":0}]}}"#)
    }

    #[test]
    fn frobenius_hat_entries() {
        let a = frobenius();
        let (p, qq) = (0, 1);
        let m2 = a.hat_word(&[p, p, qq]);
        assert_eq!(m2.arity(), 2);
        assert!(m2.eval(&[p, p]).next().is_none());
        let qq_out: Vec<_> = m2.eval(&[qq, qq]).collect();
        assert_eq!(qq_out.len(), 1);
        assert_eq!(qq_out[0].0, qq);
        for input in [[p, qq], [qq, p]] {
            let o: Vec<_> = m2.eval(&input).collect();
            assert_eq!(o.len(), 1);
            assert_eq!(o[0].0, p);
            assert!(o[0].1 == &q(1) || o[0].1 == &q(-1));
        }
        assert_eq!(m2.degrees(&a).into_iter().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn frobenius_is_associative_and_solves_cme() {
        let a = frobenius();
        let mut m = CyclicChain::zero();
        m.terms.insert(2, word(&a, 1, &[0, 0, 1]));
        let mhat = all_hat(&a, &m);
        assert!(stasheff_residual(&a, &mhat).values().all(|f| f.is_zero()));
        let s = MasterSeries::new(&a, m.to_series(Bounds::default()).unwrap()).unwrap();
        assert!(cme_residual(&a, &s).unwrap().is_zero());
        assert!(crate::master::qme_residual(&a, &s).unwrap().is_zero());
        let back = cyclic_from_hat(&a, &mhat).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn arity_one_bracket_is_commutator() {
        let a = frobenius();
        let mut f = HochschildCochain::zero(1);
        f.add_entry(vec![0], 1, q(2));
        let mut g = HochschildCochain::zero(1);
        g.add_entry(vec![1], 0, q(3));
        // both of even shifted degree: s(q) − s(p) = −4
        let br = gerstenhaber_bracket(&a, &f, &g);
        assert_eq!(br.get(&[1], 1), q(6));
        assert_eq!(br.get(&[0], 0), q(-6));
    }

    #[test]
    fn differential_brackets_to_zero() {
        let a = alg(r#"{"open":{"basis":[{"name":"a","degree":0},{"name":"b","degree":1},{"name":"c","degree":-1},{"name":"e","degree":0}],
            "d":[{"from":"a","to":"b","coeff":"1"},{"from":"c","to":"e","coeff":"1"}]}}"#);
        let d = differential_cochain(&a);
        assert!(!d.is_zero());
        assert!(gerstenhaber_bracket(&a, &d, &d).is_zero());
        assert!(stasheff_residual(&a, &[]).values().all(|f| f.is_zero()));
    }

    #[test]
    fn bracket_matches_insertion_formula() {
        let a = alg(r#"{"open":{"basis":[{"name":"u","degree":1},{"name":"v","degree":0},{"name":"w","degree":-1}]}}"#);
        for t in 0..40 {
            let mut r = rng(trial_seed(21, t));
            let (k, l) = (r.gen_range(1..=3), r.gen_range(1..=3));
            let (fo, go) = (r.gen_bool(0.5), r.gen_bool(0.5));
            let f = random_cochain(&mut r, &a, k, fo);
            let g = random_cochain(&mut r, &a, l, go);
            let s = if fo && go { q(1) } else { q(-1) };
            let oracle = insertion(&a, &f, &g).add(&insertion(&a, &g, &f).scale(&s));
            assert_eq!(gerstenhaber_bracket(&a, &f, &g), oracle, "trial {t}");
        }
    }

    #[test]
    fn bracket_is_graded_antisymmetric_and_jacobi() {
        let a = small();
        for t in 0..30 {
            let mut r = rng(trial_seed(22, t));
            let ps: Vec<bool> = (0..3).map(|_| r.gen_bool(0.5)).collect();
            let fs: Vec<HochschildCochain> = ps
                .iter()
                .map(|&p| {
                    let k = r.gen_range(1..=2);
                    random_cochain(&mut r, &a, k, p)
                })
                .collect();
            let (f, g, h) = (&fs[0], &fs[1], &fs[2]);
            let (x, y) = (ps[0], ps[1]);
            let sgn = |o: bool| if o { q(-1) } else { q(1) };
            let fg = gerstenhaber_bracket(&a, f, g);
            let gf = gerstenhaber_bracket(&a, g, f);
            assert_eq!(fg, gf.scale(&sgn(!(x && y))), "antisymmetry {t}");
            // [f,[g,h]] = [[f,g],h] + (−1)^{|f||g|} [g,[f,h]]
            let lhs = gerstenhaber_bracket(&a, f, &gerstenhaber_bracket(&a, g, h));
            let rhs = gerstenhaber_bracket(&a, &fg, h)
                .add(&gerstenhaber_bracket(&a, g, &gerstenhaber_bracket(&a, f, h)).scale(&sgn(x && y)));
            assert_eq!(lhs, rhs, "jacobi {t}");
        }
    }

    #[test]
    fn quadratic_residual_detects_associativity() {
        let a = small();
        let (mut assoc, mut nonassoc) = (0, 0);
        for t in 0..60 {
            let mut r = rng(trial_seed(23, t));
            let m = random_cochain(&mut r, &a, 2, true);
            // m(m(x, y), z) + (−1)^{s(x)} m(x, m(y, z))
            let mut defect = HochschildCochain::zero(3);
            for w in all_words(2, 3) {
                for (o1, c1) in m.eval(&w[..2]) {
                    for (o, c) in m.eval(&[o1, w[2]]) {
                        defect.add_entry(w.clone(), o, c1 * c);
                    }
                }
                for (o1, c1) in m.eval(&w[1..]) {
                    for (o, c) in m.eval(&[w[0], o1]) {
                        defect.add_entry(w.clone(), o, (c1 * c).negate_if(odd(a.shifted(w[0]))));
                    }
                }
            }
            let res = stasheff_residual(&a, &[m]);
            assert_eq!(res[&3], defect.scale(&q(2)), "trial {t}");
            if defect.is_zero() {
                assoc += 1;
            } else {
                nonassoc += 1;
            }
        }
        assert!(nonassoc > 0 && assoc > 0, "{assoc} {nonassoc}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hat_is_rotation_invariant_and_cyclic(seed in any::<u64>()) {
            let mut r = rng(seed);
            let a = paired(&mut r);
            let n = a.spec().open.basis.len();
            let len = r.gen_range(2..=5);
            let w: Word = (0..len).map(|_| r.gen_range(0..n)).collect();
            let h = a.hat_word(&w);
            for k in 1..len {
                let mut rot = w[k..].to_vec();
                rot.extend_from_slice(&w[..k]);
                let s = Scalar::one().negate_if(a.rotation_sign(&w, k));
                prop_assert_eq!(a.hat_word(&rot).scale(&s), h.clone());
            }
            if a.word_degree(&w) % 2 == 0 {
                prop_assert_eq!(cyclic_violation(&a, &h), None);
            }
        }

        #[test]
        fn cyclic_round_trips(seed in any::<u64>()) {
            let mut r = rng(seed);
            let a = paired(&mut r);
            let m = random_chain(&mut r, &a);
            let mhat = all_hat(&a, &m);
            let back = cyclic_from_hat(&a, &mhat).unwrap();
            let nonzero = |c: &CyclicChain| {
                c.terms.iter().filter(|(_, e)| !e.is_zero()).map(|(k, e)| (*k, e.clone())).collect::<Vec<_>>()
            };
            prop_assert_eq!(nonzero(&back), nonzero(&m));
            let again: Vec<_> = all_hat(&a, &back).into_iter().filter(|f| !f.is_zero()).collect();
            let orig: Vec<_> = mhat.into_iter().filter(|f| !f.is_zero()).collect();
            prop_assert_eq!(again, orig);
        }

        #[test]
        fn stasheff_residual_is_twice_the_hat_of_the_cme_residual(seed in any::<u64>()) {
            let mut r = rng(seed);
            let a = paired(&mut r);
            let m = random_chain(&mut r, &a);
            let s = MasterSeries::new(&a, m.to_series(Bounds::default()).unwrap()).unwrap();
            let cme = cme_residual(&a, &s).unwrap();
            let st = stasheff_residual(&a, &all_hat(&a, &m));
            for (&n, f) in &st {
                let expected = match cme.get(((n - 1) as u32, 0)) {
                    Some(e) if n >= 2 => a.hat_element(e, n).unwrap().scale(&q(2)),
                    _ => HochschildCochain::zero(n),
                };
                prop_assert_eq!(f, &expected);
            }
        }
    }

    #[test]
    fn hat_intertwines_brackets_and_differentials() {
        for t in 0..60 {
            let mut r = rng(trial_seed(25, t));
            let a = paired(&mut r);
            let (la, lb) = (r.gen_range(2..=4), r.gen_range(2..=4));
            let x = random_words(&mut r, &a, la, None);
            let y = random_words(&mut r, &a, lb, None);
            let br = a.direct_obracket(&x, &y).unwrap();
            let lhs = a.hat_element(&br, la + lb - 3).unwrap();
            let rhs = gerstenhaber_bracket(&a, &a.hat_element(&x, la - 1).unwrap(), &a.hat_element(&y, lb - 1).unwrap());
            assert_eq!(lhs, rhs, "trial {t}");
        }
        let a = alg(r#"{"open":{"basis":[{"name":"a","degree":0},{"name":"b","degree":1},{"name":"c","degree":-1},{"name":"e","degree":0}],
            "d":[{"from":"a","to":"b","coeff":"1"},{"from":"c","to":"e","coeff":"-1"}],
            "pairing_double":[{"a":"a","b":"e","value":"1"},{"a":"b","b":"c","value":"1"}]}}"#);
        assert!(a.spec().validate().is_admissible());
        let d = differential_cochain(&a);
        for t in 0..40 {
            let mut r = rng(trial_seed(26, t));
            let len = r.gen_range(2..=4);
            let x = random_words(&mut r, &a, len, None);
            let lhs = a.hat_element(&a.differential(&x), len - 1).unwrap();
            let rhs = gerstenhaber_bracket(&a, &d, &a.hat_element(&x, len - 1).unwrap());
            assert_eq!(lhs, rhs, "trial {t}");
        }
    }

    #[test]
    fn cme_holds_exactly_when_hat_cme_holds() {
        let (mut solved, mut unsolved) = (0, 0);
        for t in 0..80 {
            let mut r = rng(trial_seed(27, t));
            let a = paired(&mut r);
            let m = random_chain(&mut r, &a);
            let s = MasterSeries::new(&a, m.to_series(Bounds::default()).unwrap()).unwrap();
            let cme = cme_residual(&a, &s).unwrap();
            let st = stasheff_residual(&a, &all_hat(&a, &m));
            assert_eq!(cme.is_zero(), st.values().all(|f| f.is_zero()), "trial {t}");
            if cme.is_zero() {
                solved += 1;
            } else {
                unsolved += 1;
            }
        }
        assert!(solved > 0 && unsolved > 0, "{solved} {unsolved}");
    }

    #[test]
    fn empty_hat_gives_empty_chain() {
        assert!(cyclic_from_hat(&frobenius(), &[]).unwrap().is_zero());
    }

    #[test]
    fn perturbed_cochain_is_rejected() {
        let a = frobenius();
        let mut m2 = a.hat_word(&[0, 0, 1]);
        let c = m2.get(&[0, 1], 0);
        m2.add_entry(vec![0, 1], 0, c);
        let err = cyclic_from_hat(&a, &[m2]).unwrap_err().to_string();
        assert!(err.contains("not a cyclic cochain"), "{err}");
        assert!(err.contains("p, q") || err.contains("q, p"), "{err}");
    }

    #[test]
    fn degenerate_pairing_is_unsupported() {
        let a = alg(r#"{"open":{"basis":[{"name":"p","degree":2},{"name":"q","degree":-2}]}}"#);
        assert!(matches!(cyclic_from_hat(&a, &[]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cochain_json_round_trip() {
        let a = frobenius();
        let m2 = a.hat_word(&[0, 0, 1]);
        let j = cochain_to_json(&a, &m2);
        let text = serde_json::to_string(&j).unwrap();
        let back: HochschildCochainJson = serde_json::from_str(&text).unwrap();
        assert_eq!(cochain_from_json(&a, &back).unwrap(), m2);
        let mut m = CyclicChain::zero();
        m.terms.insert(2, word(&a, 3, &[0, 0, 1]));
        assert_eq!(chain_from_json(&a, &chain_to_json(&a, &m)).unwrap(), m);
        let bad = HochschildCochainJson {
            arity: 2,
            entries: vec![CochainEntryJson {
                inputs: vec!["p".into()],
                output: "p".into(),
                coeff: q(1),
            }],
        };
        assert!(cochain_from_json(&a, &bad).is_err());
    }

    fn so3() -> OcAlgebra {
        alg(r#"{"closed":{"basis":[
            {"name":"c1","degree":1},{"name":"c2","degree":1},{"name":"c3","degree":1},
            {"name":"b1","degree":-2},{"name":"b2","degree":-2},{"name":"b3","degree":-2}],
            "pairing":[{"a":"c1","b":"b1","value":"1"},{"a":"c2","b":"b2","value":"1"},{"a":"c3","b":"b3","value":"1"}]}}"#)
    }

    fn closed_series(a: &OcAlgebra, key: (u32, i32), terms: &[&[&str]]) -> MasterSeries {
        let mut e = a.zero();
        for t in terms {
            e = e.add(&a.parse_monomial(q(1), t, &[]).unwrap());
        }
        let mut s = Series::zero(Bounds::default());
        s.insert(key, e).unwrap();
        MasterSeries::new(a, s).unwrap()
    }

    #[test]
    fn linf_from_zero_is_the_differential() {
        let a = alg(r#"{"closed":{"basis":[{"name":"x","degree":0},{"name":"y","degree":1}],"d":[{"from":"x","to":"y","coeff":"1"}]}}"#);
        let ex = linf_extract(&a, &MasterSeries::zero(Bounds::default())).unwrap();
        assert_eq!(ex.differential.components.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert!(ex.warnings.is_empty());
        assert!(linf_residual(&a, &ex.differential, 4).is_clean());
    }

    #[test]
    fn linf_from_cme_solution_is_clean() {
        let a = so3();
        let s = closed_series(&a, (2, 1), &[&["c1", "c2", "b3"], &["c2", "c3", "b1"], &["c3", "c1", "b2"]]);
        let ex = linf_extract(&a, &s).unwrap();
        assert!(ex.warnings.is_empty());
        let d2 = &ex.differential.components[&2];
        assert_eq!(d2.len(), 6);
        assert!(d2.values().all(|e| e.terms().keys().all(|m| m.n_closed() == 2)));
        let rep = linf_residual(&a, &ex.differential, 4);
        assert!(rep.is_clean(), "{:?}", rep.defects);
    }

    #[test]
    fn linf_detects_broken_jacobi() {
        let a = so3();
        let s = closed_series(&a, (2, 1), &[&["c1", "c2", "b3"], &["c1", "c3", "b1"]]);
        let ex = linf_extract(&a, &s).unwrap();
        assert_eq!(ex.warnings.len(), 1);
        let rep = linf_residual(&a, &ex.differential, 4);
        assert!(!rep.is_clean());
        assert!(rep.defects.iter().all(|d| d.word_length == 3));
        assert!(linf_residual(&a, &ex.differential, 2).is_clean());
    }

    #[test]
    fn linf_rejects_misgraded_terms() {
        let a = so3();
        let s = closed_series(&a, (2, 0), &[&["c1", "c2", "b3"]]);
        assert!(linf_extract(&a, &s).is_err());
        let s = closed_series(&a, (4, 2), &[&["c1", "c2", "b3"]]);
        assert!(linf_extract(&a, &s).is_err());
    }
}
