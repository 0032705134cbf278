//! Exact polynomials in the free algebra on `xi_1..xi_n` and `zeta`.
//!
//! Words are short fixed-capacity letter arrays; a polynomial is a sorted
//! map from words to nonzero coefficients, so equal polynomials have
//! identical term lists.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Neg;

use arrayvec::ArrayVec;
use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Longest representable word.
pub const MAX_WORD_LEN: usize = 16;

/// Default cap on `n` for the exhaustive expansions.
pub const DEFAULT_MAX_N: usize = 7;

/// Hard ceiling for `n`, whatever the override: words of length `n + 1`
/// must fit.
pub const HARD_MAX_N: usize = MAX_WORD_LEN - 1;

pub const MAX_N_ENV: &str = "ORTHOPOLY_MAX_N";

/// `Xi(i)` is `xi_i` (1-based); `Zeta` sorts after every `Xi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Xi(u8),
    Zeta,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Xi(i) => write!(f, "x{i}"),
            Letter::Zeta => write!(f, "z"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(ArrayVec<Letter, MAX_WORD_LEN>);

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let mut w = ArrayVec::new();
        w.try_extend_from_slice(letters).map_err(|_| Error::Capacity {
            what: "word length",
            requested: letters.len(),
            limit: MAX_WORD_LEN,
        })?;
        Ok(Self(w))
    }

    /// `xi_{i_1} ... xi_{i_m}` from 1-based indices.
    pub fn xi(indices: &[u8]) -> Result<Self> {
        let letters: Vec<Letter> = indices.iter().map(|&i| Letter::Xi(i)).collect();
        Self::from_letters(&letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        let mut w = self.0.clone();
        w.try_extend_from_slice(&other.0).map_err(|_| Error::Capacity {
            what: "word length",
            requested: self.len() + other.len(),
            limit: MAX_WORD_LEN,
        })?;
        Ok(Word(w))
    }

    /// The word with `letter` inserted so that `position` letters precede it.
    pub fn insert(&self, position: usize, letter: Letter) -> Result<Word> {
        let mut w = self.0.clone();
        w.try_insert(position, letter).map_err(|_| Error::Capacity {
            what: "word length",
            requested: self.len() + 1,
            limit: MAX_WORD_LEN,
        })?;
        Ok(Word(w))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        write!(f, "{}", self.0.iter().join(" "))
    }
}

/// Letters a polynomial may use: `xi_1..xi_n`, plus `zeta` if `has_zeta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    pub n: usize,
    pub has_zeta: bool,
}

impl Alphabet {
    pub fn new(n: usize, has_zeta: bool) -> Self {
        Self { n, has_zeta }
    }

    pub fn contains(&self, letter: Letter) -> bool {
        match letter {
            Letter::Xi(i) => i >= 1 && usize::from(i) <= self.n,
            Letter::Zeta => self.has_zeta,
        }
    }

    pub fn check(&self, word: &Word) -> Result<()> {
        match word.letters().iter().find(|&&l| !self.contains(l)) {
            Some(l) => Err(Error::Alphabet {
                letter: l.to_string(),
                n: self.n,
                has_zeta: self.has_zeta,
            }),
            None => Ok(()),
        }
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet {
            n: self.n.max(other.n),
            has_zeta: self.has_zeta || other.has_zeta,
        }
    }
}

/// Exact coefficient ring.
pub trait Coefficient:
    Num + Clone + fmt::Debug + fmt::Display + Neg<Output = Self> + FromPrimitive + Send + Sync
{
}

impl<C> Coefficient for C where
    C: Num + Clone + fmt::Debug + fmt::Display + Neg<Output = Self> + FromPrimitive + Send + Sync
{
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NCPolynomial<C: Coefficient> {
    alphabet: Alphabet,
    terms: BTreeMap<Word, C>,
}

impl<C: Coefficient> NCPolynomial<C> {
    pub fn zero(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(alphabet: Alphabet) -> Self {
        Self::monomial(alphabet, Word::empty(), C::one()).expect("empty word fits every alphabet")
    }

    pub fn monomial(alphabet: Alphabet, word: Word, coefficient: C) -> Result<Self> {
        Self::from_terms(alphabet, [(word, coefficient)])
    }

    pub fn letter(alphabet: Alphabet, letter: Letter) -> Result<Self> {
        Self::monomial(alphabet, Word::from_letters(&[letter])?, C::one())
    }

    /// Collects `(word, coefficient)` pairs, merging repeats and dropping
    /// zeros.
    pub fn from_terms(alphabet: Alphabet, terms: impl IntoIterator<Item = (Word, C)>) -> Result<Self> {
        let mut p = Self::zero(alphabet);
        for (w, c) in terms {
            alphabet.check(&w)?;
            p.add_term(w, c);
        }
        Ok(p)
    }

    fn from_accumulator(alphabet: Alphabet, acc: HashMap<Word, C>) -> Self {
        Self {
            alphabet,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    fn add_term(&mut self, word: Word, coefficient: C) {
        if coefficient.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coefficient);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coefficient;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C)> {
        self.terms.iter()
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &Word) -> C {
        self.terms.get(word).cloned().unwrap_or_else(C::zero)
    }

    /// Sum of all coefficients: the word count with multiplicity when every
    /// coefficient is positive.
    pub fn coefficient_sum(&self) -> C {
        self.terms.values().fold(C::zero(), |acc, c| acc + c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.alphabet = self.alphabet.union(&other.alphabet);
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.alphabet);
        if c.is_zero() {
            return out;
        }
        out.terms = self
            .terms
            .iter()
            .map(|(w, a)| (w.clone(), a.clone() * c.clone()))
            .collect();
        out
    }

    /// Product in the free algebra: words concatenate.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let alphabet = self.alphabet.union(&other.alphabet);
        let mut acc: HashMap<Word, C> = HashMap::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let w = u.concat(v)?;
                let c = a.clone() * b.clone();
                let slot = acc.entry(w).or_insert_with(C::zero);
                *slot = slot.clone() + c;
            }
        }
        Ok(Self::from_accumulator(alphabet, acc))
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = Self::one(self.alphabet);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Replaces every `xi_slot` (1-based) by `replacement`.
    pub fn substitute(&self, slot: usize, replacement: &Self) -> Result<Self> {
        if slot == 0 || slot > self.alphabet.n {
            return Err(Error::Alphabet {
                letter: format!("x{slot}"),
                n: self.alphabet.n,
                has_zeta: self.alphabet.has_zeta,
            });
        }
        let mut images: Vec<Self> = (1..=self.alphabet.n)
            .map(|i| Self::letter(self.alphabet, Letter::Xi(i as u8)))
            .collect::<Result<_>>()?;
        images[slot - 1] = replacement.clone();
        self.substitute_all(&images)
    }

    /// Simultaneously replaces `xi_i` by `images[i - 1]`; `zeta` is kept.
    pub fn substitute_all(&self, images: &[Self]) -> Result<Self> {
        if images.len() != self.alphabet.n {
            return Err(Error::Arity {
                expected: self.alphabet.n,
                found: images.len(),
            });
        }
        let alphabet = images
            .iter()
            .fold(Alphabet::new(0, self.alphabet.has_zeta), |a, p| a.union(&p.alphabet));
        let zeta = Self::letter(Alphabet::new(0, true), Letter::Zeta)?;
        let mut out = Self::zero(alphabet);
        for (w, c) in &self.terms {
            let mut term = Self::one(alphabet);
            for &l in w.letters() {
                let image = match l {
                    Letter::Xi(i) => &images[usize::from(i) - 1],
                    Letter::Zeta => &zeta,
                };
                term = term.mul(image)?;
            }
            out = out.add(&term.scale(c));
        }
        out.alphabet = alphabet;
        Ok(out)
    }

    /// `(word, coefficient)` strings in canonical word order.
    pub fn term_strings(&self) -> Vec<(String, String)> {
        self.terms.iter().map(|(w, c)| (w.to_string(), c.to_string())).collect()
    }
}

impl<C: Coefficient> fmt::Display for NCPolynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (w, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "{w}")?;
            } else if w.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} {w}")?;
            }
        }
        Ok(())
    }
}

/// Cap on `n` for the exhaustive checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeLimit {
    pub max_n: usize,
}

impl Default for DegreeLimit {
    fn default() -> Self {
        Self { max_n: DEFAULT_MAX_N }
    }
}

impl DegreeLimit {
    pub fn new(max_n: usize) -> Result<Self> {
        if max_n == 0 || max_n > HARD_MAX_N {
            return Err(Error::Capacity {
                what: "symbolic degree cap",
                requested: max_n,
                limit: HARD_MAX_N,
            });
        }
        Ok(Self { max_n })
    }

    /// Default cap, overridden by `ORTHOPOLY_MAX_N` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_N_ENV) {
            Ok(raw) => {
                let max_n = raw
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Invalid(format!("{MAX_N_ENV}={raw:?} is not a positive integer")))?;
                Self::new(max_n)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::Capacity {
                what: "symbolic degree",
                requested: n,
                limit: self.max_n,
            });
        }
        Ok(())
    }
}

pub type IntPoly = NCPolynomial<BigInt>;
pub type RatPoly = NCPolynomial<BigRational>;

fn big_factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    (1..=n as u8).permutations(n).collect()
}

fn check_n(n: usize, min: usize, limit: &DegreeLimit) -> Result<()> {
    limit.check(n)?;
    if n < min {
        return Err(Error::Invalid(format!("n = {n} is below the minimum {min}")));
    }
    Ok(())
}

/// `sum_{sigma in S_n} xi_sigma(1) ... xi_sigma(n)`.
pub fn pi_n(n: usize, limit: &DegreeLimit) -> Result<IntPoly> {
    check_n(n, 1, limit)?;
    let words = permutations(n)
        .into_iter()
        .map(|p| Ok((Word::xi(&p)?, BigInt::one())))
        .collect::<Result<Vec<_>>>()?;
    IntPoly::from_terms(Alphabet::new(n, false), words)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum IdentityKind {
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "l23")]
    L23,
    #[serde(rename = "l4")]
    L4,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 3] = [IdentityKind::L2, IdentityKind::L23, IdentityKind::L4];

    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::L2 => "l2",
            IdentityKind::L23 => "l23",
            IdentityKind::L4 => "l4",
        }
    }

    pub fn lhs(self) -> Template {
        match self {
            IdentityKind::L2 => Template::LhsL2,
            IdentityKind::L23 => Template::LhsL23,
            IdentityKind::L4 => Template::LhsL4,
        }
    }

    pub fn rhs(self) -> Template {
        match self {
            IdentityKind::L2 => Template::RhsL2,
            IdentityKind::L23 => Template::RhsL23,
            IdentityKind::L4 => Template::RhsL4,
        }
    }
}

impl std::str::FromStr for IdentityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown identity {s:?}")))
    }
}

/// Both sides of the three permutation-sum identities, with `w_sigma` the
/// word `xi_sigma(1) ... xi_sigma(n)`:
///
/// * `LhsL2`:  `sum_sigma pi_n(xi_sigma(1), ..., xi_sigma(n) zeta)`
/// * `LhsL23`: `sum_sigma pi_n(xi_sigma(1), ..., zeta xi_sigma(n))`
/// * `LhsL4`:  `sum_sigma pi_n(xi_sigma(1), ..., xi_sigma(n-1) xi_sigma(n), zeta)`
/// * `RhsL2`:  `(n-1)! sum_sigma` of `w_sigma` with `zeta` right after each letter
/// * `RhsL23`: `(n-1)! sum_sigma` of `w_sigma` with `zeta` right before each letter
/// * `RhsL4`:  `(n-1)! sum_sigma [w_sigma zeta + zeta w_sigma]` plus
///   `(n-2)(n-2)! sum_sigma` of `w_sigma` with `zeta` in each of the `n - 1`
///   interior gaps
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Template {
    LhsL2,
    LhsL23,
    LhsL4,
    RhsL2,
    RhsL23,
    RhsL4,
}

impl Template {
    pub fn name(self) -> &'static str {
        match self {
            Template::LhsL2 => "LHS-l2",
            Template::LhsL23 => "LHS-l23",
            Template::LhsL4 => "LHS-l4",
            Template::RhsL2 => "RHS-l2",
            Template::RhsL23 => "RHS-l23",
            Template::RhsL4 => "RHS-l4",
        }
    }
}

/// Coefficients of the right-hand sides, as functions of the position of
/// `zeta` (number of letters before it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhsCoefficients {
    pub leading: BigInt,
    pub interior: BigInt,
}

impl RhsCoefficients {
    pub fn standard(kind: IdentityKind, n: usize) -> Self {
        let leading = big_factorial(n - 1);
        let interior = match kind {
            IdentityKind::L4 => BigInt::from(n as i64 - 2) * big_factorial(n.saturating_sub(2)),
            _ => leading.clone(),
        };
        Self { leading, interior }
    }

    fn at(&self, kind: IdentityKind, n: usize, position: usize) -> Option<&BigInt> {
        match kind {
            IdentityKind::L2 if position >= 1 => Some(if position == n { &self.leading } else { &self.interior }),
            IdentityKind::L23 if position < n => Some(if position == n - 1 {
                &self.leading
            } else {
                &self.interior
            }),
            IdentityKind::L4 if position == 0 || position == n => Some(&self.leading),
            IdentityKind::L4 => Some(&self.interior),
            _ => None,
        }
    }
}

fn accumulate(acc: &mut HashMap<Word, BigInt>, word: Word, c: &BigInt) {
    let slot = acc.entry(word).or_insert_with(BigInt::zero);
    *slot += c;
}

fn expand_lhs(kind: IdentityKind, n: usize) -> Result<IntPoly> {
    let perms = permutations(n);
    let orders: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let one = BigInt::one();
    let mut acc: HashMap<Word, BigInt> = HashMap::new();
    for sigma in &perms {
        let xi = |i: usize| Letter::Xi(sigma[i]);
        let mut args: Vec<Vec<Letter>> = (0..n).map(|i| vec![xi(i)]).collect();
        match kind {
            IdentityKind::L2 => args[n - 1].push(Letter::Zeta),
            IdentityKind::L23 => args[n - 1].insert(0, Letter::Zeta),
            IdentityKind::L4 => {
                args[n - 2] = vec![xi(n - 2), xi(n - 1)];
                args[n - 1] = vec![Letter::Zeta];
            }
        }
        for order in &orders {
            let letters: Vec<Letter> = order.iter().flat_map(|&i| args[i].iter().copied()).collect();
            accumulate(&mut acc, Word::from_letters(&letters)?, &one);
        }
    }
    Ok(IntPoly::from_accumulator(Alphabet::new(n, true), acc))
}

fn expand_rhs(kind: IdentityKind, n: usize, coefficients: &RhsCoefficients) -> Result<IntPoly> {
    let mut acc: HashMap<Word, BigInt> = HashMap::new();
    for sigma in permutations(n) {
        let base = Word::xi(&sigma)?;
        for position in 0..=n {
            if let Some(c) = coefficients.at(kind, n, position) {
                accumulate(&mut acc, base.insert(position, Letter::Zeta)?, c);
            }
        }
    }
    Ok(IntPoly::from_accumulator(Alphabet::new(n, true), acc))
}

/// Exact expansion of one side of an identity (`n >= 2`).
pub fn sum_over_permutations(n: usize, template: Template, limit: &DegreeLimit) -> Result<IntPoly> {
    check_n(n, 2, limit)?;
    match template {
        Template::LhsL2 => expand_lhs(IdentityKind::L2, n),
        Template::LhsL23 => expand_lhs(IdentityKind::L23, n),
        Template::LhsL4 => expand_lhs(IdentityKind::L4, n),
        Template::RhsL2 => expand_rhs(IdentityKind::L2, n, &RhsCoefficients::standard(IdentityKind::L2, n)),
        Template::RhsL23 => expand_rhs(IdentityKind::L23, n, &RhsCoefficients::standard(IdentityKind::L23, n)),
        Template::RhsL4 => expand_rhs(IdentityKind::L4, n, &RhsCoefficients::standard(IdentityKind::L4, n)),
    }
}

/// A word where the two sides differ, with `lhs - rhs` there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TermWitness {
    pub word: String,
    pub difference: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: IdentityKind,
    pub n: usize,
    pub equal: bool,
    /// Distinct words on each side.
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    /// Words counted with multiplicity.
    pub lhs_words: String,
    pub rhs_words: String,
    /// For `l4`: every left-hand coefficient is `(n-1)!` when `zeta` is at
    /// an end and `(n-2)(n-2)!` when it is inside.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_structure: Option<bool>,
    pub witness: Option<TermWitness>,
}

fn first_difference(lhs: &IntPoly, rhs: &IntPoly) -> Option<TermWitness> {
    lhs.sub(rhs).terms().next().map(|(w, c)| TermWitness {
        word: w.to_string(),
        difference: c.to_string(),
    })
}

fn l4_block_structure(lhs: &IntPoly, n: usize) -> bool {
    let standard = RhsCoefficients::standard(IdentityKind::L4, n);
    lhs.terms().all(|(w, c)| {
        let position = w.letters().iter().position(|&l| l == Letter::Zeta);
        match position {
            Some(p) => standard.at(IdentityKind::L4, n, p) == Some(c),
            None => false,
        }
    })
}

fn check_with(
    kind: IdentityKind,
    n: usize,
    coefficients: &RhsCoefficients,
    limit: &DegreeLimit,
) -> Result<IdentityCheck> {
    check_n(n, 2, limit)?;
    let lhs = expand_lhs(kind, n)?;
    let rhs = expand_rhs(kind, n, coefficients)?;
    let witness = first_difference(&lhs, &rhs);
    Ok(IdentityCheck {
        identity: kind,
        n,
        equal: witness.is_none(),
        lhs_terms: lhs.len(),
        rhs_terms: rhs.len(),
        lhs_words: lhs.coefficient_sum().to_string(),
        rhs_words: rhs.coefficient_sum().to_string(),
        block_structure: (kind == IdentityKind::L4).then(|| l4_block_structure(&lhs, n)),
        witness,
    })
}

/// Expands both sides exactly and compares them.
pub fn verify_identity(kind: IdentityKind, n: usize, limit: &DegreeLimit) -> Result<IdentityCheck> {
    check_with(kind, n, &RhsCoefficients::standard(kind, n), limit)
}

/// Same comparison with the leading right-hand coefficient `(n-1)!`
/// replaced by `(n-1)! + 1`; must come out unequal.
pub fn verify_perturbed_identity(kind: IdentityKind, n: usize, limit: &DegreeLimit) -> Result<IdentityCheck> {
    check_n(n, 2, limit)?;
    let mut coefficients = RhsCoefficients::standard(kind, n);
    coefficients.leading += 1;
    check_with(kind, n, &coefficients, limit)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolarizationCheck {
    pub n: usize,
    pub equal: bool,
    pub sign_patterns: usize,
    pub terms: usize,
    pub witness: Option<TermWitness>,
}

/// Expands `(1/(n! 2^n)) sum_eps eps_1...eps_n (eps_1 xi_1 + ... + eps_n xi_n)^n`
/// over the rationals and compares it with `pi_n / n!`.
pub fn verify_polarization_symbolic(n: usize, limit: &DegreeLimit) -> Result<PolarizationCheck> {
    check_n(n, 1, limit)?;
    let alphabet = Alphabet::new(n, false);
    let letters: Vec<RatPoly> = (1..=n)
        .map(|i| RatPoly::letter(alphabet, Letter::Xi(i as u8)))
        .collect::<Result<_>>()?;
    let mut total = RatPoly::zero(alphabet);
    for mask in 0u32..(1u32 << n) {
        let sign = |i: usize| -> BigRational {
            if mask >> i & 1 == 1 {
                -BigRational::one()
            } else {
                BigRational::one()
            }
        };
        let sum = letters
            .iter()
            .enumerate()
            .fold(RatPoly::zero(alphabet), |acc, (i, l)| acc.add(&l.scale(&sign(i))));
        let sign_product = (0..n).fold(BigRational::one(), |acc, i| acc * sign(i));
        total = total.add(&sum.pow(n)?.scale(&sign_product));
    }
    let scale = BigRational::from_integer(big_factorial(n) * (BigInt::one() << n));
    let lhs = total.scale(&scale.recip());

    let pi = pi_n(n, limit)?;
    let rhs = RatPoly::from_terms(
        alphabet,
        pi.terms()
            .map(|(w, c)| (w.clone(), BigRational::new(c.clone(), big_factorial(n)))),
    )?;
    let witness = lhs.sub(&rhs).terms().next().map(|(w, c)| TermWitness {
        word: w.to_string(),
        difference: c.to_string(),
    });
    Ok(PolarizationCheck {
        n,
        equal: witness.is_none(),
        sign_patterns: 1 << n,
        terms: lhs.len(),
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratificationCheck {
    pub n: usize,
    pub equal: bool,
    /// Words on the stratified side, counted with multiplicity.
    pub words: String,
    pub witness: Option<TermWitness>,
}

/// `pi_n = sum_{tau in S_{n-1}}` of `xi_tau(1) ... xi_tau(n-1)` with `xi_n`
/// inserted at each of the `n` positions.
pub fn verify_r14(n: usize, limit: &DegreeLimit) -> Result<StratificationCheck> {
    check_n(n, 2, limit)?;
    let pi = pi_n(n, limit)?;
    let mut acc: HashMap<Word, BigInt> = HashMap::new();
    let one = BigInt::one();
    for tau in permutations(n - 1) {
        let base = Word::xi(&tau)?;
        for position in 0..n {
            accumulate(&mut acc, base.insert(position, Letter::Xi(n as u8))?, &one);
        }
    }
    let strata = IntPoly::from_accumulator(Alphabet::new(n, false), acc);
    let witness = first_difference(&pi, &strata);
    Ok(StratificationCheck {
        n,
        equal: witness.is_none(),
        words: strata.coefficient_sum().to_string(),
        witness,
    })
}

/// Largest absolute coefficient, for diagnostics.
pub fn max_abs_coefficient(p: &IntPoly) -> BigInt {
    p.terms().map(|(_, c)| c.abs()).max().unwrap_or_else(BigInt::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limit() -> DegreeLimit {
        DegreeLimit::default()
    }

    fn w(letters: &[Letter]) -> Word {
        Word::from_letters(letters).unwrap()
    }

    const X1: Letter = Letter::Xi(1);
    const X2: Letter = Letter::Xi(2);
    const Z: Letter = Letter::Zeta;

    fn int_poly(alphabet: Alphabet, words: &[(&[Letter], i64)]) -> IntPoly {
        IntPoly::from_terms(alphabet, words.iter().map(|(l, c)| (w(l), BigInt::from(*c)))).unwrap()
    }

    #[test]
    fn pi_small_cases() {
        assert_eq!(pi_n(1, &limit()).unwrap().to_string(), "x1");
        assert_eq!(pi_n(2, &limit()).unwrap().to_string(), "x1 x2 + x2 x1");
        let p3 = pi_n(3, &limit()).unwrap();
        assert_eq!(p3.len(), 6);
        assert!(p3.terms().all(|(_, c)| c.is_one()));
        assert!(matches!(pi_n(99, &limit()), Err(Error::Capacity { .. })));
    }

    #[test]
    fn substitute_examples() {
        let a2 = Alphabet::new(2, true);
        let pi2 = pi_n(2, &limit()).unwrap();
        let x2z = int_poly(a2, &[(&[X2, Z], 1)]);
        let got = pi2.substitute(2, &x2z).unwrap();
        assert_eq!(got, int_poly(a2, &[(&[X1, X2, Z], 1), (&[X2, Z, X1], 1)]));

        let x1 = IntPoly::letter(Alphabet::new(2, false), X1).unwrap();
        assert_eq!(pi2.substitute(1, &x1).unwrap(), pi2);

        let single = IntPoly::letter(Alphabet::new(1, false), X1).unwrap();
        let zx1 = int_poly(Alphabet::new(1, true), &[(&[Z, X1], 1)]);
        assert_eq!(single.substitute(1, &zx1).unwrap(), zx1);
        assert!(matches!(single.substitute(3, &zx1), Err(Error::Alphabet { .. })));
    }

    #[test]
    fn letters_outside_alphabet_are_rejected() {
        let a = Alphabet::new(2, false);
        assert!(matches!(IntPoly::letter(a, Z), Err(Error::Alphabet { .. })));
        assert!(matches!(IntPoly::letter(a, Letter::Xi(3)), Err(Error::Alphabet { .. })));
    }

    #[test]
    fn zero_coefficients_vanish() {
        let a = Alphabet::new(1, false);
        let p = int_poly(a, &[(&[X1], 2), (&[X1], -2)]);
        assert!(p.is_zero());
        let q = int_poly(a, &[(&[X1], 1)]);
        assert!(q.sub(&q).is_zero());
    }

    #[test]
    fn l2_at_two_matches_hand_expansion() {
        let a = Alphabet::new(2, true);
        let lhs = sum_over_permutations(2, Template::LhsL2, &limit()).unwrap();
        let expected = int_poly(
            a,
            &[
                (&[X1, X2, Z], 1),
                (&[X2, Z, X1], 1),
                (&[X2, X1, Z], 1),
                (&[X1, Z, X2], 1),
            ],
        );
        assert_eq!(lhs, expected);
        assert_eq!(sum_over_permutations(2, Template::RhsL2, &limit()).unwrap(), expected);
    }

    #[test]
    fn identities_hold_for_small_n() {
        for n in 2..=4 {
            for kind in IdentityKind::ALL {
                let check = verify_identity(kind, n, &limit()).unwrap();
                assert!(check.equal, "{kind:?} n={n}: {:?}", check.witness);
                let nn = big_factorial(n) * big_factorial(n);
                assert_eq!(check.lhs_words, nn.to_string());
                assert_eq!(check.rhs_words, nn.to_string());
            }
        }
        assert_eq!(
            verify_identity(IdentityKind::L4, 4, &limit()).unwrap().block_structure,
            Some(true)
        );
    }

    #[test]
    fn perturbation_is_detected() {
        for kind in IdentityKind::ALL {
            let check = verify_perturbed_identity(kind, 3, &limit()).unwrap();
            assert!(!check.equal);
            let witness = check.witness.unwrap();
            assert_ne!(witness.difference, "0");
        }
    }

    #[test]
    fn identity_needs_two_letters() {
        assert!(matches!(
            verify_identity(IdentityKind::L2, 1, &limit()),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            verify_identity(IdentityKind::L2, 8, &limit()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn polarization_small_n() {
        for n in 1..=3 {
            assert!(verify_polarization_symbolic(n, &limit()).unwrap().equal);
        }
    }

    #[test]
    fn stratification_small_n() {
        assert!(verify_r14(2, &limit()).unwrap().equal);
        let c3 = verify_r14(3, &limit()).unwrap();
        assert!(c3.equal);
        assert_eq!(c3.words, "6");
    }

    #[test]
    fn display_uses_short_letters() {
        let word = w(&[X1, Letter::Xi(3), Z, X2]);
        assert_eq!(word.to_string(), "x1 x3 z x2");
        let half = RatPoly::from_terms(
            Alphabet::new(3, true),
            [(word, BigRational::new(BigInt::from(1), BigInt::from(2)))],
        )
        .unwrap();
        assert_eq!(half.to_string(), "1/2 x1 x3 z x2");
    }

    #[test]
    fn word_capacity() {
        let long = Word::xi(&[1; MAX_WORD_LEN]).unwrap();
        assert!(long.concat(&Word::xi(&[1]).unwrap()).is_err());
        assert!(Word::xi(&[1; MAX_WORD_LEN + 1]).is_err());
    }

    #[test]
    fn degree_limit_bounds() {
        assert!(DegreeLimit::new(0).is_err());
        assert!(DegreeLimit::new(HARD_MAX_N + 1).is_err());
        assert_eq!(DegreeLimit::new(5).unwrap().max_n, 5);
    }
}
