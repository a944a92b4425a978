//! The BV operator components and antibrackets on [`OcAlgebra`].
//!
//! Each operator is written as "stage the factors or letters it consumes by a
//! permutation, then contract". Staging signs come from [`koszul_odd`] in
//! factor degrees between factors and in shifted degrees inside words.
//! Letters enter the open contractions as `(−1)^{|a|} (a, b)`, the pairing
//! seen on `H_o[1]`.

use crate::algebra::{Element, Factor, Monomial, OcAlgebra, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{Bounds, Coefficient, Series};
use crate::sign::koszul_odd;

impl Coefficient for Element {
    fn is_zero(&self) -> bool {
        Element::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Element::add(self, other)
    }
    fn scale(&self, s: &Scalar) -> Self {
        Element::scale(self, s)
    }
}

/// Which bracket to build from the second-order part of `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    Total,
    Closed,
    Open,
}

/// Whether `Δ_co` enters the total operator with a `√ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BvConfig {
    pub weighted: bool,
}

impl Default for BvConfig {
    fn default() -> Self {
        BvConfig { weighted: true }
    }
}

fn odd(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

impl OcAlgebra {
    fn factor_degrees(&self, m: &Monomial) -> Vec<i64> {
        m.factors().iter().map(|f| self.factor_degree(f)).collect()
    }

    /// Sign of moving factors `p < q` to the front of `m`.
    fn front_pair_odd(&self, degs: &[i64], p: usize, q: usize) -> bool {
        let mut order = vec![p, q];
        order.extend((0..degs.len()).filter(|&k| k != p && k != q));
        koszul_odd(&order, |k| odd(degs[k]))
    }

    fn rest(m: &Monomial, p: usize, q: usize) -> Vec<Factor> {
        m.factors()
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != p && k != q)
            .map(|(_, f)| f.clone())
            .collect()
    }

    /// `(−1)^{|a|} (a, b)'` or `(−1)^{|a|} (a, b)''`.
    fn open_pair_shifted(&self, double: bool, a: usize, b: usize) -> Scalar {
        let o = &self.spec().open;
        let form = if double { &o.pairing_double } else { &o.pairing_prime };
        form.value(&o.basis, a, b).negate_if(odd(self.open_degree(a)))
    }

    /// `Δ_c`: contracts pairs of closed factors.
    pub fn delta_c(&self, a: &Element) -> Element {
        let c = &self.spec().closed;
        self.map_monomials(a, |m, out| {
            let degs = self.factor_degrees(m);
            let xs: Vec<(usize, usize)> = m
                .factors()
                .iter()
                .enumerate()
                .filter_map(|(p, f)| match f {
                    Factor::Closed(x) => Some((p, *x)),
                    Factor::Cyclic(_) => None,
                })
                .collect();
            for (s, &(p, x)) in xs.iter().enumerate() {
                for &(q, y) in &xs[s + 1..] {
                    let v = c.pairing.value(&c.basis, x, y);
                    if v.is_zero() {
                        continue;
                    }
                    let flip = self.front_pair_odd(&degs, p, q);
                    out.push((v.negate_if(flip), Self::rest(m, p, q)));
                }
            }
        })
    }

    /// `Δ'_o`: cuts one cyclic word into two along a pair of its letters,
    /// extended as a derivation over the factors.
    pub fn delta_o_prime(&self, a: &Element) -> Element {
        self.map_monomials(a, |m, out| {
            let mut before = 0i64;
            for (p, f) in m.factors().iter().enumerate() {
                if let Factor::Cyclic(w) = f {
                    for (c, x, y) in self.split_word(w) {
                        let mut fs: Vec<Factor> = m.factors()[..p].to_vec();
                        fs.push(Factor::Cyclic(x));
                        fs.push(Factor::Cyclic(y));
                        fs.extend_from_slice(&m.factors()[p + 1..]);
                        out.push((c.negate_if(odd(before)), fs));
                    }
                }
                before += self.factor_degree(f);
            }
        })
    }

    /// The terms of `Δ'_o` on a single cyclic word.
    pub fn split_word(&self, w: &[usize]) -> Vec<(Scalar, Word, Word)> {
        let n = w.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = self.open_pair_shifted(false, w[i], w[j]);
                if v.is_zero() {
                    continue;
                }
                let xi: Vec<usize> = (j + 1..n).chain(0..i).collect();
                let yi: Vec<usize> = (i + 1..j).collect();
                let mut order = xi.clone();
                order.push(i);
                order.push(j);
                order.extend_from_slice(&yi);
                let mut flip = koszul_odd(&order, |k| odd(self.shifted(w[k])));
                let sx: i64 = xi.iter().map(|&k| self.shifted(w[k])).sum();
                if !self.sign_mutation() {
                    flip ^= odd(sx + 1);
                }
                let x: Word = xi.iter().map(|&k| w[k]).collect();
                let y: Word = yi.iter().map(|&k| w[k]).collect();
                out.push((v.negate_if(flip), x, y));
            }
        }
        out
    }

    /// The o-bracket of two cyclic words, computed letter pair by letter pair.
    pub fn obracket_words(&self, a: &[usize], b: &[usize]) -> Vec<(Scalar, Word)> {
        let (k, l) = (a.len(), b.len());
        let letters: Vec<usize> = a.iter().chain(b).copied().collect();
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..l {
                let v = self.open_pair_shifted(true, a[i], b[j]);
                if v.is_zero() {
                    continue;
                }
                let xi: Vec<usize> = (i + 1..k).chain(0..i).collect();
                let yi: Vec<usize> = (j + 1..l).chain(0..j).map(|t| k + t).collect();
                let mut order = xi.clone();
                order.push(i);
                order.push(k + j);
                order.extend_from_slice(&yi);
                let flip = koszul_odd(&order, |t| odd(self.shifted(letters[t])));
                let word: Word = xi.iter().chain(&yi).map(|&t| letters[t]).collect();
                out.push((v.negate_if(flip), word));
            }
        }
        out
    }

    /// The o-bracket evaluated directly on elements that are combinations of
    /// single cyclic words.
    pub fn direct_obracket(&self, x: &Element, y: &Element) -> Result<Element> {
        let single = |e: &Element| -> Result<Vec<(Word, Scalar)>> {
            e.terms()
                .iter()
                .map(|(m, c)| match m.factors() {
                    [Factor::Cyclic(w)] => Ok((w.clone(), c.clone())),
                    _ => Err(Error::Validation("direct o-bracket needs single cyclic words".into())),
                })
                .collect()
        };
        let (xs, ys) = (single(x)?, single(y)?);
        let mut raw = Vec::new();
        for (a, ca) in &xs {
            for (b, cb) in &ys {
                for (v, w) in self.obracket_words(a, b) {
                    raw.push((v * ca * cb, vec![Factor::Cyclic(w)]));
                }
            }
        }
        Ok(self.normalize(raw))
    }

    /// `Δ''_o`: joins pairs of cyclic words through the o-bracket.
    pub fn delta_o_double(&self, a: &Element) -> Element {
        self.map_monomials(a, |m, out| {
            let degs = self.factor_degrees(m);
            let ws: Vec<(usize, &Word)> = m
                .factors()
                .iter()
                .enumerate()
                .filter_map(|(p, f)| match f {
                    Factor::Cyclic(w) => Some((p, w)),
                    Factor::Closed(_) => None,
                })
                .collect();
            for (s, &(p, wa)) in ws.iter().enumerate() {
                for &(q, wb) in &ws[s + 1..] {
                    let flip = self.front_pair_odd(&degs, p, q) ^ odd(degs[p]);
                    for (v, w) in self.obracket_words(wa, wb) {
                        let mut fs = vec![Factor::Cyclic(w)];
                        fs.extend(Self::rest(m, p, q));
                        out.push((v.negate_if(flip), fs));
                    }
                }
            }
        })
    }

    /// `Δ_o = Δ'_o + Δ''_o`.
    pub fn delta_o(&self, a: &Element) -> Element {
        self.delta_o_prime(a).add(&self.delta_o_double(a))
    }

    /// `Δ_co`: replaces a closed factor `x` by `Δ_co(x) · e`, as a derivation.
    pub fn delta_co_op(&self, a: &Element) -> Element {
        let co = &self.spec().delta_co;
        self.map_monomials(a, |m, out| {
            let mut before = 0i64;
            for (p, f) in m.factors().iter().enumerate() {
                if let Factor::Closed(x) = f {
                    let v = co.get(*x);
                    if !v.is_zero() {
                        let mut fs = m.factors().to_vec();
                        fs[p] = Factor::Cyclic(Vec::new());
                        out.push((v.negate_if(odd(before)), fs));
                    }
                }
                before += self.factor_degree(f);
            }
        })
    }

    /// `Δ_c + Δ_o`.
    pub fn delta_second_order(&self, a: &Element) -> Element {
        self.delta_c(a).add(&self.delta_o(a))
    }

    /// `Δ_c + Δ_o + Δ_co` with no `√ħ`.
    pub fn delta_unweighted(&self, a: &Element) -> Element {
        self.delta_second_order(a).add(&self.delta_co_op(a))
    }

    /// `Δ` as a series: `Δ_c + Δ_o` at `√ħ⁰`, `Δ_co` at `√ħ¹` when weighted.
    pub fn delta_total(&self, a: &Element, cfg: BvConfig, bounds: Bounds) -> Result<Series<Element>> {
        let mut s = Series::zero(bounds);
        if cfg.weighted {
            s.insert((0, 0), self.delta_second_order(a))?;
            if bounds.half_hbar_max >= 1 {
                s.insert((0, 1), self.delta_co_op(a))?;
            }
        } else {
            s.insert((0, 0), self.delta_unweighted(a))?;
        }
        Ok(s)
    }

    /// `{a, b} = (−1)^{|a|} Δ(ab) − (−1)^{|a|} Δ(a) b − a Δ(b)`.
    pub fn antibracket(&self, a: &Element, b: &Element, which: BracketKind) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        let da = self.homogeneous_degree(a)?;
        let delta = |e: &Element| match which {
            BracketKind::Total => self.delta_unweighted(e),
            BracketKind::Closed => self.delta_c(e),
            BracketKind::Open => self.delta_o(e),
        };
        self.bracket_from(a, b, da, delta)
    }

    /// The bracket generated by an arbitrary operator.
    pub fn bracket_from(&self, a: &Element, b: &Element, da: i64, delta: impl Fn(&Element) -> Element) -> Result<Element> {
        let s = Scalar::sign_power(da);
        let ab = self.mul(a, b);
        let first = delta(&ab).scale(&s);
        let second = self.mul(&delta(a), b).scale(&s);
        let third = self.mul(a, &delta(b));
        Ok(first.sub(&second).sub(&third))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::AlgebraSpec;

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    fn alg(json: &str) -> OcAlgebra {
        OcAlgebra::new(AlgebraSpec::from_json_str(json).unwrap())
    }

    fn closed_xy() -> OcAlgebra {
        alg(r#"{"closed":{"basis":[{"name":"x","degree":0},{"name":"y","degree":-1}],
            "pairing":[{"a":"x","b":"y","value":"1"}]}}"#)
    }

    #[test]
    fn delta_c_examples() {
        let a = closed_xy();
        let x = a.parse_monomial(q(1), &["x"], &[]).unwrap();
        let y = a.parse_monomial(q(1), &["y"], &[]).unwrap();
        assert!(a.delta_c(&x).is_zero());
        assert!(a.delta_c(&a.one()).is_zero());
        assert_eq!(a.delta_c(&a.mul(&x, &y)), a.one());
        assert_eq!(a.antibracket(&x, &y, BracketKind::Closed).unwrap(), a.one());
        assert!(a.antibracket(&x, &a.one(), BracketKind::Total).unwrap().is_zero());
    }

    fn open3() -> OcAlgebra {
        // a:1, b:1, c:1 with (,)' = 1 on every pair and (,)'' = 1 on every pair
        alg(r#"{"open":{"basis":[{"name":"a","degree":1},{"name":"b","degree":1},{"name":"c","degree":1}],
            "pairing_prime":[{"a":"a","b":"b","value":"1"},{"a":"a","b":"c","value":"2"},{"a":"b","b":"c","value":"3"}]},
            "closed":{"basis":[{"name":"x","degree":0},{"name":"y","degree":0}]},
            "delta_co":[{"a":"x","value":"1"},{"a":"y","value":"2"}]}"#)
    }

    #[test]
    fn delta_o_prime_examples() {
        let a = open3();
        let w1 = a.parse_monomial(q(1), &[], &[&["a"]]).unwrap();
        assert!(a.delta_o_prime(&w1).is_zero());
        let w2 = a.parse_monomial(q(1), &[], &[&["a", "b"]]).unwrap();
        assert!(a.delta_o_prime(&w2).is_zero());
        let w3 = a.parse_monomial(q(1), &[], &[&["a", "b", "c"]]).unwrap();
        let r = a.delta_o_prime(&w3);
        assert_eq!(r.len(), 3);
        for (m, c) in r.terms() {
            assert_eq!(m.n_cyclic(), 2);
            assert!(m.cyclic().any(|w| w.is_empty()));
            assert!([q(1), q(2), q(3)].contains(&c.clone().negate_if(c.is_negative())));
        }
    }

    #[test]
    fn delta_co_examples() {
        let a = open3();
        let w = a.parse_monomial(q(1), &[], &[&["a"]]).unwrap();
        assert!(a.delta_co_op(&w).is_zero());
        let xw = a.parse_monomial(q(1), &["x"], &[&["a"]]).unwrap();
        let ew = a.parse_monomial(q(1), &[], &[&[], &["a"]]).unwrap();
        assert_eq!(a.delta_co_op(&xw), ew);
        let xy = a.parse_monomial(q(1), &["x", "y"], &[]).unwrap();
        let want = a
            .parse_monomial(q(1), &["y"], &[&[]])
            .unwrap()
            .add(&a.parse_monomial(q(2), &["x"], &[&[]]).unwrap());
        assert_eq!(a.delta_co_op(&xy), want);
    }

    fn double2() -> OcAlgebra {
        alg(r#"{"open":{"basis":[{"name":"a","degree":0},{"name":"b","degree":1},{"name":"c","degree":0}],
            "pairing_double":[{"a":"a","b":"c","value":"1"},{"a":"b","b":"b","value":"0"}]}}"#)
    }

    #[test]
    fn delta_o_double_examples() {
        let a = double2();
        let single = a.parse_monomial(q(1), &[], &[&["a", "b"]]).unwrap();
        assert!(a.delta_o_double(&single).is_zero());
        let wa = a.parse_monomial(q(1), &[], &[&["a"]]).unwrap();
        let wc = a.parse_monomial(q(1), &[], &[&["c"]]).unwrap();
        let r = a.delta_o_double(&a.mul(&wa, &wc));
        let e = a.parse_monomial(q(1), &[], &[&[]]).unwrap();
        assert!(r == e || r == e.neg(), "{}", a.display(&r));
        let direct = a.direct_obracket(&wa, &wc).unwrap();
        assert_eq!(a.antibracket(&wa, &wc, BracketKind::Open).unwrap(), direct);
        let wab = a.parse_monomial(q(1), &[], &[&["a", "b"]]).unwrap();
        let r = a.direct_obracket(&wab, &wc).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(a.antibracket(&wab, &wc, BracketKind::Open).unwrap(), r);
    }

    #[test]
    fn delta_total_series() {
        let a = open3();
        let xy = a.parse_monomial(q(1), &["x", "y"], &[]).unwrap();
        let s = a.delta_total(&xy, BvConfig::default(), Bounds::default()).unwrap();
        assert!(s.get((0, 0)).is_none());
        assert_eq!(s.get((0, 1)), Some(&a.delta_co_op(&xy)));
        let flat = a.delta_total(&xy, BvConfig { weighted: false }, Bounds::default()).unwrap();
        assert_eq!(flat.get((0, 0)), Some(&a.delta_co_op(&xy)));
        assert!(a.delta_total(&a.one(), BvConfig::default(), Bounds::default()).unwrap().is_zero());
    }

    #[test]
    fn crossing_chords_obstruct_delta_o_square() {
        // (a,c)' and (b,d)'' on the crossing chords of [a⊗b⊗c⊗d]. The partner
        // term (b,d)'(a,c)'' is excluded by the windows, so nothing cancels.
        let a = alg(r#"{"open":{"basis":[{"name":"a","degree":1},{"name":"b","degree":0},{"name":"c","degree":1},{"name":"d","degree":0}],
            "pairing_prime":[{"a":"a","b":"c","value":"1"}],"pairing_double":[{"a":"b","b":"d","value":"1"}]}}"#);
        assert!(a.spec().validate().is_admissible());
        let w = a.parse_monomial(q(1), &[], &[&["a", "b", "c", "d"]]).unwrap();
        let e = a.parse_monomial(q(1), &[], &[&[]]).unwrap();
        let sq = a.delta_o(&a.delta_o(&w));
        assert!(sq == e || sq == e.neg(), "{}", a.display(&sq));
        assert!(a.delta_o_prime(&a.delta_o_prime(&w)).is_zero());
        assert!(a.delta_o_double(&a.delta_o_double(&w)).is_zero());
    }
}
