//! Sparse elements of a finite Grassmann algebra.
//!
//! Monomials are bitsets over generator indices, always read in ascending
//! index order; every sign in this module is the parity of the permutation
//! that brings a product of generators back to that canonical order.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{abs, real, Cx, Scalar};

/// Largest supported generator count.
pub const MAX_GENERATORS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate generator label `{0}`")]
    DuplicateLabel(String),
    #[error("generator count {0} outside 1..={MAX_GENERATORS}")]
    GeneratorCount(usize),
    #[error("operands live in different algebras")]
    AlgebraMismatch,
    #[error("generator index {index} out of range for {n} generators")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("generator index {0} repeated in integration order")]
    DuplicateIndex(usize),
}

/// Ordered, named generators of an algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneratorSet {
    names: Vec<String>,
}

impl GeneratorSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Arc<Self>, GrassmannError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() || names.len() > MAX_GENERATORS {
            return Err(GrassmannError::GeneratorCount(names.len()));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(GrassmannError::DuplicateLabel(name.clone()));
            }
        }
        Ok(Arc::new(Self { names }))
    }

    /// `prefix1 .. prefixN`.
    pub fn numbered(prefix: &str, n: usize) -> Result<Arc<Self>, GrassmannError> {
        Self::new((1..=n).map(|k| format!("{prefix}{k}")))
    }

    /// `th1..thN, pi1..piN`: coordinates followed by their momenta.
    pub fn phase_space(n: usize) -> Result<Arc<Self>, GrassmannError> {
        Self::new(
            (1..=n)
                .map(|k| format!("th{k}"))
                .chain((1..=n).map(|k| format!("pi{k}"))),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Dimension of the algebra, `2^n`.
    pub fn dim(&self) -> usize {
        1 << self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, GrassmannError> {
        self.names
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| GrassmannError::UnknownLabel(label.to_owned()))
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.names.len()) - 1) as u32
    }
}

/// Canonically ordered product of distinct generators, stored as a bitset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(pub u32);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn from_indices(indices: &[usize]) -> Option<Self> {
        let mut bits = 0u32;
        for &i in indices {
            let b = 1u32 << i;
            if bits & b != 0 {
                return None;
            }
            bits |= b;
        }
        Some(Monomial(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_odd(self) -> bool {
        self.grade() % 2 == 1
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    pub fn as_index(self) -> usize {
        self.0 as usize
    }
}

/// `+1` or `-1` for `(-1)^k`.
#[inline]
pub(crate) fn parity_sign(k: u32) -> i32 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign of `θ_a θ_b = sign · θ_{a∪b}` for disjoint bitsets.
#[inline]
pub fn merge_sign(a: u32, b: u32) -> i32 {
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> j).count_ones();
        rest &= rest - 1;
    }
    parity_sign(swaps)
}

/// Sign picked up by removing generator `i` from the front of `m`.
#[inline]
pub(crate) fn left_strip_sign(m: u32, i: usize) -> i32 {
    parity_sign((m & ((1u32 << i) - 1)).count_ones())
}

/// Sign picked up by removing generator `i` from the back of `m`.
#[inline]
pub(crate) fn right_strip_sign(m: u32, i: usize) -> i32 {
    parity_sign((m >> (i + 1)).count_ones())
}

/// Which side a Grassmann derivative acts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Grassmann parity of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ParityClass {
    Even,
    Odd,
    Mixed,
}

impl ParityClass {
    /// `0` or `1` for homogeneous elements.
    pub fn epsilon(self) -> Option<u32> {
        match self {
            ParityClass::Even => Some(0),
            ParityClass::Odd => Some(1),
            ParityClass::Mixed => None,
        }
    }
}

/// Element of the Grassmann algebra generated by a [`GeneratorSet`].
#[derive(Clone)]
pub struct GrassmannElement<T: Scalar> {
    terms: BTreeMap<Monomial, Cx<T>>,
    algebra: Arc<GeneratorSet>,
}

impl<T: Scalar> fmt::Debug for GrassmannElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<T: Scalar> fmt::Display for GrassmannElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for i in m.indices() {
                write!(f, "*{}", self.algebra.name(i))?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> GrassmannElement<T> {
    pub fn zero(algebra: &Arc<GeneratorSet>) -> Self {
        Self {
            terms: BTreeMap::new(),
            algebra: Arc::clone(algebra),
        }
    }

    pub fn one(algebra: &Arc<GeneratorSet>) -> Self {
        Self::scalar(algebra, Cx::one())
    }

    pub fn scalar(algebra: &Arc<GeneratorSet>, c: Cx<T>) -> Self {
        Self::from_terms(algebra, [(Monomial::ONE, c)])
    }

    pub fn real_scalar(algebra: &Arc<GeneratorSet>, c: T) -> Self {
        Self::scalar(algebra, real(c))
    }

    /// The generator `θ_i`.
    pub fn generator(algebra: &Arc<GeneratorSet>, i: usize) -> Self {
        assert!(i < algebra.len(), "generator index out of range");
        Self::from_terms(algebra, [(Monomial(1 << i), Cx::one())])
    }

    pub fn monomial(algebra: &Arc<GeneratorSet>, m: Monomial, c: Cx<T>) -> Self {
        Self::from_terms(algebra, [(m, c)])
    }

    /// Sums the given terms; repeated monomials accumulate.
    pub fn from_terms(algebra: &Arc<GeneratorSet>, terms: impl IntoIterator<Item = (Monomial, Cx<T>)>) -> Self {
        let mut out = Self::zero(algebra);
        for (m, c) in terms {
            debug_assert!(m.0 & !algebra.full_mask() == 0);
            out.accumulate(m, c);
        }
        out.prune();
        out
    }

    /// Builds an element from label lists. Each list is a product written in
    /// the given order; it is sorted into canonical order with the
    /// permutation sign folded into the coefficient. A repeated label makes
    /// the term vanish.
    pub fn construct<S: AsRef<str>>(
        algebra: &Arc<GeneratorSet>,
        terms: &[(Vec<S>, Cx<T>)],
    ) -> Result<Self, GrassmannError> {
        let mut out = Self::zero(algebra);
        for (labels, c) in terms {
            let mut bits = 0u32;
            let mut sign = 1;
            let mut vanishes = false;
            for label in labels {
                let i = algebra.index_of(label.as_ref())?;
                if bits >> i & 1 == 1 {
                    vanishes = true;
                    continue;
                }
                sign *= merge_sign(bits, 1 << i);
                bits |= 1 << i;
            }
            if !vanishes {
                out.accumulate(Monomial(bits), *c * T::lit(f64::from(sign)));
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    pub fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra
    }

    fn check_algebra(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.same_algebra(other) {
            Ok(())
        } else {
            Err(GrassmannError::AlgebraMismatch)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Cx<T>)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: Monomial) -> Cx<T> {
        self.terms.get(&m).copied().unwrap_or_else(Cx::zero)
    }

    /// Coefficient of the product of the named generators, in canonical order.
    pub fn coeff_of(&self, labels: &[&str]) -> Result<Cx<T>, GrassmannError> {
        let mut bits = 0;
        for l in labels {
            bits |= 1 << self.algebra.index_of(l)?;
        }
        Ok(self.coeff(Monomial(bits)))
    }

    /// Body (grade-zero coefficient).
    pub fn body(&self) -> Cx<T> {
        self.coeff(Monomial::ONE)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn accumulate(&mut self, m: Monomial, c: Cx<T>) {
        *self.terms.entry(m).or_insert_with(Cx::zero) += c;
    }

    /// Drops coefficients below the scalar's prune tolerance.
    pub fn prune(&mut self) {
        self.prune_with(T::prune_tol());
    }

    pub fn prune_with(&mut self, tol: T) {
        self.terms.retain(|_, c| abs(*c) >= tol);
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            out.terms.insert(*m, *c * s);
        }
        out.prune();
        out
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(real(s))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_algebra(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(*m, *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.checked_add(&other.scale(-Cx::one()))
    }

    /// Pointwise (undeformed) Grassmann product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_algebra(other)?;
        let mut out = Self::zero(&self.algebra);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                if a.0 & b.0 != 0 {
                    continue;
                }
                let s = T::lit(f64::from(merge_sign(a.0, b.0)));
                out.accumulate(Monomial(a.0 | b.0), *x * *y * s);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Graded derivative with respect to generator `i`.
    ///
    /// The left derivative strips `θ_i` from the front of each monomial. The
    /// right derivative follows `∂⃗F = (-1)^{ε(F)} F∂⃖` on each homogeneous
    /// component, so e.g. `(θ1θ3)∂⃖_1 = θ3` and `θ1∂⃖_1 = -1`.
    pub fn derivative(&self, i: usize, side: Side) -> Result<Self, GrassmannError> {
        let n = self.algebra.len();
        if i >= n {
            return Err(GrassmannError::IndexOutOfRange { index: i, n });
        }
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            if !m.contains(i) {
                continue;
            }
            let mut sign = left_strip_sign(m.0, i);
            if side == Side::Right {
                sign *= parity_sign(m.grade());
            }
            out.accumulate(Monomial(m.0 & !(1 << i)), *c * T::lit(f64::from(sign)));
        }
        out.prune();
        Ok(out)
    }

    /// Berezin integral `∫dθ_{order[0]} … dθ_{order[k-1]} F` with
    /// `∫dθ_i θ_j = ħ δ_ij`; the last differential acts first.
    pub fn berezin_integral(&self, order: &[usize], hbar: T) -> Result<Self, GrassmannError> {
        let n = self.algebra.len();
        let mut seen = 0u32;
        for &i in order {
            if i >= n {
                return Err(GrassmannError::IndexOutOfRange { index: i, n });
            }
            if seen >> i & 1 == 1 {
                return Err(GrassmannError::DuplicateIndex(i));
            }
            seen |= 1 << i;
        }
        let mut out = self.clone();
        for &i in order.iter().rev() {
            out = out.derivative(i, Side::Left)?.scale_real(hbar);
        }
        Ok(out)
    }

    /// Hodge dual restricted to `subset`: the subset part `θ_S` of each
    /// monomial maps to `sign(S, S^c) θ_{S^c}` (complement inside the
    /// subset), with the remaining factors kept on the left.
    pub fn hodge_dual(&self, subset: &[usize]) -> Result<Self, GrassmannError> {
        let n = self.algebra.len();
        let mut mask = 0u32;
        for &i in subset {
            if i >= n {
                return Err(GrassmannError::IndexOutOfRange { index: i, n });
            }
            mask |= 1 << i;
        }
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            let kept = m.0 & !mask;
            let inner = m.0 & mask;
            let comp = mask & !inner;
            let sign = merge_sign(kept, inner) * merge_sign(inner, comp) * merge_sign(kept, comp);
            out.accumulate(Monomial(kept | comp), *c * T::lit(f64::from(sign)));
        }
        out.prune();
        Ok(out)
    }

    /// Hodge dual over all generators.
    pub fn hodge_dual_full(&self) -> Self {
        let all: Vec<usize> = (0..self.algebra.len()).collect();
        self.hodge_dual(&all).expect("indices in range")
    }

    pub fn parity(&self) -> ParityClass {
        let mut even = false;
        let mut odd = false;
        for m in self.terms.keys() {
            if m.is_odd() {
                odd = true;
            } else {
                even = true;
            }
        }
        match (even, odd) {
            (_, false) => ParityClass::Even,
            (false, true) => ParityClass::Odd,
            (true, true) => ParityClass::Mixed,
        }
    }

    /// Component of the given parity (0 even, 1 odd).
    pub fn parity_part(&self, eps: u32) -> Self {
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            if m.grade() % 2 == eps % 2 {
                out.terms.insert(*m, *c);
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, c| acc.max(abs(*c)))
    }

    /// Largest coefficient-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (m, c) in &self.terms {
            worst = worst.max(abs(*c - other.coeff(*m)));
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(abs(*c));
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Dense coefficient vector indexed by monomial bitset value.
    pub fn to_dense(&self) -> Vec<Cx<T>> {
        let mut v = vec![Cx::zero(); self.algebra.dim()];
        for (m, c) in &self.terms {
            v[m.as_index()] = *c;
        }
        v
    }

    pub fn from_dense(algebra: &Arc<GeneratorSet>, v: &[Cx<T>]) -> Self {
        assert_eq!(v.len(), algebra.dim(), "dense vector length");
        Self::from_terms(
            algebra,
            v.iter().enumerate().map(|(k, c)| (Monomial(k as u32), *c)),
        )
    }

    /// Algebra homomorphism induced by sending generator `i` to `images[i]`,
    /// which live in `target`. Images are expected to be odd.
    pub fn substitute(&self, target: &Arc<GeneratorSet>, images: &[GrassmannElement<T>]) -> Result<Self, GrassmannError> {
        assert_eq!(images.len(), self.algebra.len(), "one image per generator");
        let mut out = GrassmannElement::zero(target);
        for (m, c) in &self.terms {
            let mut prod = GrassmannElement::scalar(target, *c);
            for i in m.indices() {
                prod = prod.checked_mul(&images[i])?;
            }
            out = out.checked_add(&prod)?;
        }
        Ok(out)
    }

    /// Re-expresses an element supported on `kept` generators inside
    /// `target`, mapping `kept[k]` to generator `k` of `target`.
    pub fn restrict_to(&self, kept: &[usize], target: &Arc<GeneratorSet>) -> Result<Self, GrassmannError> {
        assert_eq!(kept.len(), target.len());
        let mut out = GrassmannElement::zero(target);
        for (m, c) in &self.terms {
            let mut bits = 0u32;
            for i in m.indices() {
                let k = kept
                    .iter()
                    .position(|&g| g == i)
                    .ok_or(GrassmannError::IndexOutOfRange { index: i, n: kept.len() })?;
                bits |= 1 << k;
            }
            out.accumulate(Monomial(bits), *c);
        }
        out.prune();
        Ok(out)
    }
}

impl<T: Scalar> PartialEq for GrassmannElement<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_algebra(other) && self.terms == other.terms
    }
}

impl<'a, T: Scalar> Add<&'a GrassmannElement<T>> for &'a GrassmannElement<T> {
    type Output = GrassmannElement<T>;

    fn add(self, rhs: &'a GrassmannElement<T>) -> GrassmannElement<T> {
        self.checked_add(rhs).expect("algebra mismatch in +")
    }
}

impl<'a, T: Scalar> Sub<&'a GrassmannElement<T>> for &'a GrassmannElement<T> {
    type Output = GrassmannElement<T>;

    fn sub(self, rhs: &'a GrassmannElement<T>) -> GrassmannElement<T> {
        self.checked_sub(rhs).expect("algebra mismatch in -")
    }
}

/// Pointwise product; panics on algebra mismatch (use `checked_mul` otherwise).
impl<'a, T: Scalar> Mul<&'a GrassmannElement<T>> for &'a GrassmannElement<T> {
    type Output = GrassmannElement<T>;

    fn mul(self, rhs: &'a GrassmannElement<T>) -> GrassmannElement<T> {
        self.checked_mul(rhs).expect("algebra mismatch in *")
    }
}

impl<T: Scalar> Neg for &GrassmannElement<T> {
    type Output = GrassmannElement<T>;

    fn neg(self) -> GrassmannElement<T> {
        self.scale(-Cx::one())
    }
}
