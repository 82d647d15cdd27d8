//! Words over free alphabets, noncommutative polynomials in several
//! mutually commuting blocks of variables, positive regular polynomials and
//! the coefficient engines built on them.
//!
//! Letters and blocks are 0-based in memory and 1-based in JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};

/// A word in one free monoid. The empty word is the unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(j: usize) -> Self {
        Word(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Letter-count vector over an alphabet of size `n`.
    pub fn counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for &l in &self.0 {
            c[l] += 1;
        }
        c
    }
}

/// Number of words of length ≤ `d` over `n` letters.
pub fn word_count(n: usize, d: usize) -> usize {
    (0..=d).map(|k| n.pow(k as u32)).sum()
}

/// Graded-lex position of a word: shorter words first, then base-`n` rank.
pub fn word_index(n: usize, letters: &[usize]) -> usize {
    let offset = if letters.is_empty() { 0 } else { word_count(n, letters.len() - 1) };
    let rank = letters.iter().fold(0usize, |acc, &l| acc * n + l);
    offset + rank
}

/// Inverse of [`word_index`].
pub fn word_at(n: usize, mut idx: usize) -> Word {
    let mut len = 0;
    loop {
        let shell = n.pow(len as u32);
        if idx < shell {
            break;
        }
        idx -= shell;
        len += 1;
    }
    let mut letters = vec![0; len];
    for pos in (0..len).rev() {
        letters[pos] = idx % n;
        idx /= n;
    }
    Word(letters)
}

/// All words of length ≤ `max_degree`, graded-lex.
pub fn enumerate_words(n: usize, max_degree: usize) -> Vec<Word> {
    (0..word_count(n, max_degree)).map(|i| word_at(n, i)).collect()
}

/// One word per block, blocks in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<Word>);

impl MultiIndex {
    pub fn empty(k: usize) -> Self {
        MultiIndex(vec![Word::empty(); k])
    }

    pub fn single(k: usize, block: usize, w: Word) -> Self {
        let mut m = Self::empty(k);
        m.0[block] = w;
        m
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(Word::len).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.0.iter().map(Word::len).collect()
    }

    /// Product in the algebra where distinct blocks commute.
    pub fn mul(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a.concat(b)).collect())
    }
}

/// Finite complex combination of multi-indices. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct NcPolynomial {
    pub n: Vec<usize>,
    pub terms: BTreeMap<MultiIndex, C64>,
}

impl NcPolynomial {
    pub fn zero(n: &[usize]) -> Self {
        NcPolynomial { n: n.to_vec(), terms: BTreeMap::new() }
    }

    pub fn constant(n: &[usize], c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex::empty(n.len()), c);
        p
    }

    pub fn monomial(n: &[usize], idx: MultiIndex, c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(idx, c);
        p
    }

    /// The variable Z_{block,letter}.
    pub fn variable(n: &[usize], block: usize, letter: usize) -> Self {
        Self::monomial(n, MultiIndex::single(n.len(), block, Word::letter(letter)), C64::new(1.0, 0.0))
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: C64) {
        let entry = self.terms.entry(idx.clone()).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(&idx);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Every term has the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(MultiIndex::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// Every term has the same per-block degree vector.
    pub fn is_multi_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(MultiIndex::degrees);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn constant_term(&self) -> C64 {
        self.terms.get(&MultiIndex::empty(self.k())).copied().unwrap_or(ZERO)
    }

    pub fn add(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut p = self.clone();
        for (idx, c) in &other.terms {
            p.add_term(idx.clone(), *c);
        }
        p
    }

    pub fn scale(&self, s: C64) -> NcPolynomial {
        let mut p = Self::zero(&self.n);
        for (idx, c) in &self.terms {
            p.add_term(idx.clone(), *c * s);
        }
        p
    }

    pub fn sub(&self, other: &NcPolynomial) -> NcPolynomial {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut p = Self::zero(&self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                p.add_term(a.mul(b), *ca * *cb);
            }
        }
        p
    }

    pub fn from_json(json: &PolyJson, n: &[usize]) -> Result<Self> {
        let k = n.len();
        let mut p = Self::zero(n);
        for t in &json.terms {
            let idx = match (&t.words, &t.word) {
                (Some(ws), _) => {
                    if ws.len() != k {
                        return Err(Error::Input(format!("term has {} words, expected {k}", ws.len())));
                    }
                    let mut words = Vec::with_capacity(k);
                    for (i, w) in ws.iter().enumerate() {
                        words.push(parse_letters(w, n[i])?);
                    }
                    MultiIndex(words)
                }
                (None, Some(w)) => {
                    let block = json.block.unwrap_or(1);
                    if block == 0 || block > k {
                        return Err(Error::Input(format!("block {block} out of range 1..={k}")));
                    }
                    MultiIndex::single(k, block - 1, parse_letters(w, n[block - 1])?)
                }
                (None, None) => MultiIndex::empty(k),
            };
            p.add_term(idx, C64::new(t.re, t.im));
        }
        Ok(p)
    }

    pub fn to_json(&self) -> PolyJson {
        let terms = self
            .terms
            .iter()
            .map(|(idx, c)| TermJson {
                word: None,
                words: Some(idx.0.iter().map(|w| w.0.iter().map(|l| l + 1).collect()).collect()),
                re: c.re,
                im: c.im,
            })
            .collect();
        PolyJson { block: None, terms }
    }
}

fn parse_letters(w: &[usize], n: usize) -> Result<Word> {
    let mut letters = Vec::with_capacity(w.len());
    for &l in w {
        if l == 0 || l > n {
            return Err(Error::Input(format!("letter {l} out of range 1..={n}")));
        }
        letters.push(l - 1);
    }
    Ok(Word(letters))
}

/// JSON form of a polynomial. Single-block terms use `word` together with
/// the top-level `block`; multi-block terms use `words`, one list per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<Vec<usize>>>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Polynomial in one block with nonnegative coefficients, zero constant
/// term and positive linear part.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveRegularPolynomial {
    pub n: usize,
    pub coeffs: BTreeMap<Word, f64>,
}

impl PositiveRegularPolynomial {
    pub fn new(n: usize, coeffs: BTreeMap<Word, f64>) -> Result<Self> {
        let coeffs: BTreeMap<Word, f64> = coeffs.into_iter().filter(|(_, a)| *a != 0.0).collect();
        if n == 0 {
            return Err(Error::NotPositiveRegular("empty alphabet".into()));
        }
        for (w, a) in &coeffs {
            if w.is_empty() {
                return Err(Error::NotPositiveRegular("nonzero constant term".into()));
            }
            if w.0.iter().any(|&l| l >= n) {
                return Err(Error::NotPositiveRegular(format!("letter out of range in {:?}", w.0)));
            }
            if !(*a > 0.0) || !a.is_finite() {
                return Err(Error::NotPositiveRegular(format!("coefficient {a} is not positive")));
            }
        }
        for j in 0..n {
            if !coeffs.contains_key(&Word::letter(j)) {
                return Err(Error::NotPositiveRegular(format!("missing linear term Z{}", j + 1)));
            }
        }
        Ok(PositiveRegularPolynomial { n, coeffs })
    }

    /// Z₁ + ⋯ + Z_n.
    pub fn linear(n: usize) -> Self {
        let coeffs = (0..n).map(|j| (Word::letter(j), 1.0)).collect();
        PositiveRegularPolynomial { n, coeffs }
    }

    pub fn from_terms(n: usize, terms: &[(&[usize], f64)]) -> Result<Self> {
        let coeffs = terms.iter().map(|(w, a)| (Word(w.to_vec()), *a)).collect();
        Self::new(n, coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Smallest degree of a term; 1 by regularity.
    pub fn min_degree(&self) -> usize {
        self.coeffs.keys().map(Word::len).min().unwrap_or(1)
    }

    /// Drops terms above `degree`; linear terms always survive.
    pub fn truncate(&self, degree: usize) -> Self {
        let coeffs = self.coeffs.iter().filter(|(w, _)| w.len() <= degree.max(1)).map(|(w, a)| (w.clone(), *a)).collect();
        PositiveRegularPolynomial { n: self.n, coeffs }
    }

    /// Evaluation at commuting scalars.
    pub fn eval_commutative(&self, z: &[C64]) -> C64 {
        self.coeffs
            .iter()
            .map(|(w, a)| w.0.iter().fold(C64::new(*a, 0.0), |acc, &l| acc * z[l]))
            .sum()
    }

    /// q(μ λ̄) = Σ a_α μ_α conj(λ_α).
    pub fn eval_pairing(&self, mu: &[C64], lambda: &[C64]) -> C64 {
        let z: Vec<C64> = mu.iter().zip(lambda).map(|(a, b)| a * b.conj()).collect();
        self.eval_commutative(&z)
    }

    pub fn to_nc(&self, n: &[usize], block: usize) -> NcPolynomial {
        let mut p = NcPolynomial::zero(n);
        for (w, a) in &self.coeffs {
            p.add_term(MultiIndex::single(n.len(), block, w.clone()), C64::new(*a, 0.0));
        }
        p
    }

    pub fn from_json(json: &PolyJson, n: usize) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for t in &json.terms {
            if t.im != 0.0 {
                return Err(Error::NotPositiveRegular("complex coefficient".into()));
            }
            let w = parse_letters(t.word.as_deref().unwrap_or(&[]), n)?;
            *coeffs.entry(w).or_insert(0.0) += t.re;
        }
        Self::new(n, coeffs)
    }

    pub fn to_json(&self, block: usize) -> PolyJson {
        PolyJson {
            block: Some(block + 1),
            terms: self
                .coeffs
                .iter()
                .map(|(w, a)| TermJson {
                    word: Some(w.0.iter().map(|l| l + 1).collect()),
                    words: None,
                    re: *a,
                    im: 0.0,
                })
                .collect(),
        }
    }
}

/// Block sizes `n`, multiplicities `m` and defining polynomials `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub q: Vec<PositiveRegularPolynomial>,
}

impl DomainSpec {
    pub fn new(n: Vec<usize>, m: Vec<usize>, q: Vec<PositiveRegularPolynomial>) -> Result<Self> {
        let k = n.len();
        if k == 0 || m.len() != k || q.len() != k {
            return Err(Error::Input(format!("block data lengths differ: n={}, m={}, q={}", k, m.len(), q.len())));
        }
        if m.iter().any(|&x| x == 0) || n.iter().any(|&x| x == 0) {
            return Err(Error::Input("block sizes and multiplicities must be positive".into()));
        }
        for (i, qi) in q.iter().enumerate() {
            if qi.n != n[i] {
                return Err(Error::Input(format!("q{} has {} letters, block has {}", i + 1, qi.n, n[i])));
            }
        }
        Ok(DomainSpec { n, m, q })
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    /// Single block, q = Z₁+⋯+Z_n, multiplicity m.
    pub fn ball(n: usize, m: usize) -> Self {
        DomainSpec { n: vec![n], m: vec![m], q: vec![PositiveRegularPolynomial::linear(n)] }
    }

    /// Product of balls with linear defining polynomials.
    pub fn polyball(n: &[usize], m: &[usize]) -> Self {
        DomainSpec { n: n.to_vec(), m: m.to_vec(), q: n.iter().map(|&ni| PositiveRegularPolynomial::linear(ni)).collect() }
    }

    /// k one-letter blocks with q = Z and m = 1.
    pub fn polydisc(k: usize) -> Self {
        Self::polyball(&vec![1; k], &vec![1; k])
    }

    pub fn drury_arveson(n: usize) -> Self {
        Self::ball(n, 1)
    }

    /// k copies of the n-letter ball with m ≡ 1; on the diagonal variety
    /// k = n gives the Hardy space of the ball and k = n + 1 the Bergman space.
    pub fn hardy_sobolev(n: usize, k: usize) -> Self {
        Self::polyball(&vec![n; k], &vec![1; k])
    }

    /// One-variable disc with multiplicity 2.
    pub fn bergman_disc() -> Self {
        Self::ball(1, 2)
    }
}

/// Binomial coefficient as an exact-integer f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// Coefficients of 1/(1 − q)^m, one table per block, indexed by
/// [`word_index`] up to a per-block degree cap.
#[derive(Clone, Debug)]
pub struct BCoeffTable {
    pub n: Vec<usize>,
    pub caps: Vec<usize>,
    pub per_block: Vec<Vec<f64>>,
}

impl BCoeffTable {
    pub fn new(spec: &DomainSpec, caps: &[usize]) -> Self {
        let per_block = (0..spec.k()).map(|i| b_table(&spec.q[i], spec.m[i], caps[i])).collect();
        BCoeffTable { n: spec.n.clone(), caps: caps.to_vec(), per_block }
    }

    pub fn get(&self, block: usize, letters: &[usize]) -> f64 {
        self.per_block[block][word_index(self.n[block], letters)]
    }

    pub fn get_index(&self, block: usize, idx: usize) -> f64 {
        self.per_block[block][idx]
    }
}

/// b^{(m)}_α for every word with |α| ≤ cap, by the recursion
/// b^{(m)} = b^{(m−1)} + q·b^{(m)} with b^{(0)} = δ_∅.
pub fn b_table(q: &PositiveRegularPolynomial, m: usize, cap: usize) -> Vec<f64> {
    assert!(m >= 1, "multiplicity must be positive");
    let n = q.n;
    let size = word_count(n, cap);
    let words: Vec<Word> = (0..size).map(|i| word_at(n, i)).collect();
    let support: Vec<(&Word, f64)> = q.coeffs.iter().map(|(w, a)| (w, *a)).collect();
    let mut prev = vec![0.0; size];
    prev[0] = 1.0;
    for _ in 0..m {
        let mut cur = vec![0.0; size];
        for (idx, w) in words.iter().enumerate() {
            let mut acc = prev[idx];
            for &(g, a) in &support {
                if g.len() <= w.len() && w.0[..g.len()] == g.0[..] {
                    acc += a * cur[word_index(n, &w.0[g.len()..])];
                }
            }
            cur[idx] = acc;
        }
        prev = cur;
    }
    prev
}

pub fn b_coefficient(q: &PositiveRegularPolynomial, m: usize, alpha: &Word) -> f64 {
    b_table(q, m, alpha.len())[word_index(q.n, &alpha.0)]
}

/// Sum of b^{(m)}_α over all words with letter-count vector `counts`.
pub fn gamma_coefficient(q: &PositiveRegularPolynomial, m: usize, counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let table = b_table(q, m, total);
    let mut sum = 0.0;
    for_each_arrangement(counts, &mut |w| sum += table[word_index(q.n, w)]);
    sum
}

/// Calls `f` once per distinct word with the given letter counts.
pub fn for_each_arrangement(counts: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn rec(counts: &mut [usize], buf: &mut Vec<usize>, left: usize, f: &mut dyn FnMut(&[usize])) {
        if left == 0 {
            f(buf);
            return;
        }
        for j in 0..counts.len() {
            if counts[j] > 0 {
                counts[j] -= 1;
                buf.push(j);
                rec(counts, buf, left - 1, f);
                buf.pop();
                counts[j] += 1;
            }
        }
    }
    let mut c = counts.to_vec();
    let total = c.iter().sum();
    rec(&mut c, &mut Vec::with_capacity(total), total, f);
}

/// All letter-count vectors of length `n` with entries summing to `total`.
pub fn count_vectors(n: usize, total: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in count_vectors(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// X_α = X_{α₁}⋯X_{α_L} for one block of square matrices of size `dim`.
pub fn word_product(block: &[CMat], letters: &[usize], dim: usize) -> CMat {
    letters.iter().fold(CMat::identity(dim, dim), |acc, &l| acc * &block[l])
}

/// Σ c_(α) T_{1,α₁}⋯T_{k,α_k}.
pub fn evaluate_poly(p: &NcPolynomial, blocks: &[Vec<CMat>]) -> Result<CMat> {
    if blocks.len() != p.k() {
        return Err(Error::Input(format!("tuple has {} blocks, polynomial {}", blocks.len(), p.k())));
    }
    let dim = blocks.iter().flatten().next().map(|m| m.nrows()).unwrap_or(1);
    for (i, b) in blocks.iter().enumerate() {
        if b.len() != p.n[i] || b.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Input(format!("block {} has wrong size or shape", i + 1)));
        }
    }
    let mut out = CMat::zeros(dim, dim);
    for (idx, c) in &p.terms {
        let mut term = CMat::identity(dim, dim);
        for (i, w) in idx.0.iter().enumerate() {
            term = term * word_product(&blocks[i], &w.0, dim);
        }
        out += term * *c;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Definitional sum over factorizations α = γ₁⋯γ_p.
    fn b_by_enumeration(q: &PositiveRegularPolynomial, m: usize, alpha: &[usize]) -> f64 {
        fn rec(q: &PositiveRegularPolynomial, m: usize, rest: &[usize], p: usize, prod: f64) -> f64 {
            if rest.is_empty() {
                return prod * binomial(p + m - 1, m - 1);
            }
            let mut s = 0.0;
            for cut in 1..=rest.len() {
                if let Some(a) = q.coeffs.get(&Word(rest[..cut].to_vec())) {
                    s += rec(q, m, &rest[cut..], p + 1, prod * a);
                }
            }
            s
        }
        rec(q, m, alpha, 0, 1.0)
    }

    fn skewed() -> PositiveRegularPolynomial {
        PositiveRegularPolynomial::from_terms(2, &[(&[0], 2.0), (&[1], 1.0), (&[0, 1], 1.0)]).unwrap()
    }

    #[test]
    fn word_indexing_round_trips() {
        for n in 1..4 {
            for (i, w) in enumerate_words(n, 4).iter().enumerate() {
                assert_eq!(word_index(n, &w.0), i);
            }
        }
        assert_eq!(enumerate_words(2, 0), vec![Word::empty()]);
        assert_eq!(enumerate_words(2, 2).len(), 7);
        assert_eq!(enumerate_words(3, 3).len(), 40);
        assert_eq!(enumerate_words(1, 5).len(), 6);
    }

    #[test]
    fn b_small_cases() {
        let lin = PositiveRegularPolynomial::linear(2);
        assert_eq!(b_coefficient(&lin, 1, &Word(vec![1, 0, 1])), 1.0);
        assert_eq!(b_coefficient(&lin, 2, &Word(vec![1, 0, 1])), 4.0);
        assert_eq!(b_coefficient(&skewed(), 1, &Word(vec![0, 1])), 3.0);
        assert_eq!(b_coefficient(&skewed(), 2, &Word(vec![0, 1])), 8.0);
        assert_eq!(b_coefficient(&skewed(), 3, &Word::empty()), 1.0);
    }

    #[test]
    fn b_matches_enumeration_exhaustively() {
        let mut qs = vec![skewed()];
        for n in 1..=3 {
            qs.push(PositiveRegularPolynomial::linear(n));
        }
        for q in &qs {
            for m in 1..=3 {
                let table = b_table(q, m, 6);
                for (idx, w) in enumerate_words(q.n, 6).iter().enumerate() {
                    assert_eq!(table[idx], b_by_enumeration(q, m, &w.0), "q={q:?} m={m} w={w:?}");
                }
            }
        }
    }

    #[test]
    fn b_for_linear_is_binomial() {
        for m in 1..=4 {
            let table = b_table(&PositiveRegularPolynomial::linear(2), m, 5);
            for (idx, w) in enumerate_words(2, 5).iter().enumerate() {
                assert_eq!(table[idx], binomial(w.len() + m - 1, m - 1));
            }
        }
    }

    /// Setting every Z_j = t collapses 1/(1−q)^m to a power series in t.
    #[test]
    fn b_shell_sums_match_scalar_series() {
        let q = skewed();
        let cap = 8;
        // q(t,t) = 3t + t²
        let qt = [0.0, 3.0, 1.0];
        for m in 1..=3 {
            let mut series = vec![0.0; cap + 1];
            series[0] = 1.0;
            for _ in 0..m {
                // multiply by 1/(1 − q(t)): s_d = a_d + Σ q_j s_{d−j}
                let a = series.clone();
                let mut s = vec![0.0; cap + 1];
                for d in 0..=cap {
                    s[d] = a[d] + (1..=2.min(d)).map(|j| qt[j] * s[d - j]).sum::<f64>();
                }
                series = s;
            }
            let table = b_table(&q, m, cap);
            for d in 0..=cap {
                let lo = if d == 0 { 0 } else { word_count(2, d - 1) };
                let shell: f64 = table[lo..word_count(2, d)].iter().sum();
                assert_eq!(shell, series[d]);
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let lin = PositiveRegularPolynomial::linear(2);
        assert_eq!(gamma_coefficient(&lin, 1, &[1, 1]), 2.0);
        assert_eq!(gamma_coefficient(&lin, 1, &[2, 1]), 3.0);
        assert_eq!(gamma_coefficient(&skewed(), 2, &[0, 0]), 1.0);
    }

    #[test]
    fn gamma_equals_class_sum() {
        let q = skewed();
        for m in 1..=2 {
            let table = b_table(&q, m, 5);
            for total in 0..=5 {
                for c in count_vectors(2, total) {
                    let brute: f64 = enumerate_words(2, 5)
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| w.counts(2) == c)
                        .map(|(i, _)| table[i])
                        .sum();
                    assert_eq!(gamma_coefficient(&q, m, &c), brute);
                }
            }
        }
    }

    #[test]
    fn positive_regular_validation() {
        assert!(PositiveRegularPolynomial::from_terms(2, &[(&[0], 1.0)]).is_err());
        assert!(PositiveRegularPolynomial::from_terms(1, &[(&[0], 1.0), (&[], 1.0)]).is_err());
        assert!(PositiveRegularPolynomial::from_terms(1, &[(&[0], 1.0), (&[0, 0], -1.0)]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let n = [1, 1];
        let t = vec![vec![CMat::from_element(1, 1, C64::new(2.0, 0.0))], vec![CMat::from_element(1, 1, C64::new(3.0, 0.0))]];
        let p = NcPolynomial::variable(&n, 0, 0).mul(&NcPolynomial::variable(&n, 1, 0));
        assert_eq!(evaluate_poly(&p, &t).unwrap()[(0, 0)], C64::new(6.0, 0.0));
        let one = NcPolynomial::constant(&[2], C64::new(1.0, 0.0));
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]));
        let b = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(-1.0, 1.0), C64::new(0.5, 0.0)]));
        let blocks = vec![vec![a, b]];
        assert_eq!(evaluate_poly(&one, &blocks).unwrap(), CMat::identity(2, 2));
        let z1 = NcPolynomial::variable(&[2], 0, 0);
        let z2 = NcPolynomial::variable(&[2], 0, 1);
        let comm = z1.mul(&z2).sub(&z2.mul(&z1));
        assert_eq!(evaluate_poly(&comm, &blocks).unwrap().norm(), 0.0);
    }

    #[test]
    fn polynomial_json_round_trip() {
        let n = [2, 1];
        let p = NcPolynomial::variable(&n, 0, 1).mul(&NcPolynomial::variable(&n, 1, 0)).add(&NcPolynomial::constant(&n, C64::new(0.5, -1.0)));
        let json = serde_json::to_string(&p.to_json()).unwrap();
        let back = NcPolynomial::from_json(&serde_json::from_str(&json).unwrap(), &n).unwrap();
        assert_eq!(p, back);
        let q = skewed();
        assert_eq!(PositiveRegularPolynomial::from_json(&q.to_json(0), 2).unwrap(), q);
    }

    fn small_matrix() -> impl Strategy<Value = CMat> {
        proptest::collection::vec(-1.0f64..1.0, 8).prop_map(|v| CMat::from_fn(2, 2, |r, c| C64::new(v[2 * r + c], v[4 + 2 * r + c])))
    }

    fn small_poly() -> impl Strategy<Value = NcPolynomial> {
        proptest::collection::vec((proptest::collection::vec(0usize..2, 0..3), -1.0f64..1.0), 1..4).prop_map(|terms| {
            let mut p = NcPolynomial::zero(&[2]);
            for (w, c) in terms {
                p.add_term(MultiIndex(vec![Word(w)]), C64::new(c, 0.0));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_multiplicative(a in small_matrix(), b in small_matrix(), p in small_poly(), r in small_poly()) {
            let blocks = vec![vec![a, b]];
            let lhs = evaluate_poly(&p.mul(&r), &blocks).unwrap();
            let rhs = evaluate_poly(&p, &blocks).unwrap() * evaluate_poly(&r, &blocks).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + 10.0));
            let sum = evaluate_poly(&p.add(&r), &blocks).unwrap();
            let parts = evaluate_poly(&p, &blocks).unwrap() + evaluate_poly(&r, &blocks).unwrap();
            prop_assert!((sum - parts).norm() <= 1e-12);
        }
    }
}
