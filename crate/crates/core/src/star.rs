//! Fermionic Moyal star products `F * G = F exp(½ ∂⃖_i 𝒜_ij ∂⃗_j) G`.
//!
//! The exponential is expanded by repeatedly applying a single pair
//! contraction; nilpotency of the derivatives ends the series after at most
//! `n` contractions. The contraction uses the right derivative with
//! `θ ∂⃖ θ = +1`, which makes `{θ_i, θ_j}_* = 𝒜_ij`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Zero;
use thiserror::Error;

use crate::grassmann::{
    left_strip_sign, merge_sign, right_strip_sign, GeneratorSet, GrassmannElement, GrassmannError, Monomial,
};
use crate::scalar::{real, Cx, Scalar};
use crate::spectral::{self, OperatorSide};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarError {
    #[error("form matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("form is {rows}x{cols}, algebra has {n} generators")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("star exponential needs a nonzero scale")]
    ZeroScale,
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// Real symmetric bilinear form on the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm<T: Scalar> {
    matrix: DMatrix<T>,
    algebra: Arc<GeneratorSet>,
}

impl<T: Scalar> SymmetricForm<T> {
    pub fn new(algebra: &Arc<GeneratorSet>, matrix: DMatrix<T>) -> Result<Self, StarError> {
        let n = algebra.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(StarError::Shape {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                n,
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(StarError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self {
            matrix,
            algebra: Arc::clone(algebra),
        })
    }

    pub fn zero(algebra: &Arc<GeneratorSet>) -> Self {
        let n = algebra.len();
        Self::new(algebra, DMatrix::zeros(n, n)).expect("square zero matrix")
    }

    /// `ħ` times the identity.
    pub fn diagonal(algebra: &Arc<GeneratorSet>, hbar: T) -> Self {
        let n = algebra.len();
        Self::new(algebra, DMatrix::identity(n, n) * hbar).expect("diagonal matrix")
    }

    /// Two-oscillator form: `ħ` on the diagonal, `c` coupling θ1,θ2 and `d`
    /// coupling θ3,θ4. The algebra must have four generators.
    pub fn nac(algebra: &Arc<GeneratorSet>, hbar: T, c: T, d: T) -> Result<Self, StarError> {
        if algebra.len() != 4 {
            return Err(StarError::Shape {
                rows: 4,
                cols: 4,
                n: algebra.len(),
            });
        }
        let mut m = DMatrix::identity(4, 4) * hbar;
        m[(0, 1)] = c;
        m[(1, 0)] = c;
        m[(2, 3)] = d;
        m[(3, 2)] = d;
        Self::new(algebra, m)
    }

    /// Constraint-derived form with a single deformation `c = ħC/4`.
    pub fn from_deformation(algebra: &Arc<GeneratorSet>, hbar: T, big_c: T) -> Result<Self, StarError> {
        let c = hbar * big_c / T::lit(4.0);
        Self::nac(algebra, hbar, c, c)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix[(i, j)]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            matrix: &self.matrix * s,
            algebra: Arc::clone(&self.algebra),
        }
    }

    /// Form on the sub-algebra spanned by `kept`, whose generators are
    /// `target` in the same order.
    pub fn restrict(&self, kept: &[usize], target: &Arc<GeneratorSet>) -> Result<Self, StarError> {
        let k = kept.len();
        let m = DMatrix::from_fn(k, k, |a, b| self.matrix[(kept[a], kept[b])]);
        Self::new(target, m)
    }

    pub fn is_positive_definite(&self) -> bool {
        nalgebra::Cholesky::new(self.matrix.clone()).is_some()
    }
}

/// Whether a star bracket is the anticommutator or the commutator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketMode {
    Anti,
    Comm,
}

/// Star product generated by a [`SymmetricForm`].
#[derive(Debug, Clone)]
pub struct StarProduct<T: Scalar> {
    form: SymmetricForm<T>,
    max_order: usize,
    /// Nonzero form entries `(i, j, 𝒜_ij)`.
    pairs: Vec<(usize, usize, T)>,
}

impl<T: Scalar> StarProduct<T> {
    pub fn new(form: SymmetricForm<T>) -> Self {
        let n = form.algebra.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let a = form.matrix[(i, j)];
                if a != T::zero() {
                    pairs.push((i, j, a));
                }
            }
        }
        Self {
            max_order: n,
            form,
            pairs,
        }
    }

    pub fn form(&self) -> &SymmetricForm<T> {
        &self.form
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.form.algebra
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn one(&self) -> GrassmannElement<T> {
        GrassmannElement::one(self.algebra())
    }

    fn check(&self, e: &GrassmannElement<T>) -> Result<(), StarError> {
        let a = self.algebra();
        if Arc::ptr_eq(e.algebra(), a) || **e.algebra() == **a {
            Ok(())
        } else {
            Err(GrassmannError::AlgebraMismatch.into())
        }
    }

    /// `θ_a * θ_b` as a list of terms.
    fn monomial_star(&self, a: u32, b: u32, out: &mut BTreeMap<u32, Cx<T>>, coeff: Cx<T>) {
        if a & b == 0 {
            *out.entry(a | b).or_insert_with(Cx::zero) += coeff * T::lit(f64::from(merge_sign(a, b)));
        }
        let mut level: BTreeMap<(u32, u32), T> = BTreeMap::from([((a, b), T::one())]);
        let mut weight = T::one();
        for k in 1..=self.max_order {
            let mut next: BTreeMap<(u32, u32), T> = BTreeMap::new();
            for (&(f, g), &w) in &level {
                for &(i, j, aij) in &self.pairs {
                    if f >> i & 1 == 0 || g >> j & 1 == 0 {
                        continue;
                    }
                    let s = right_strip_sign(f, i) * left_strip_sign(g, j);
                    let key = (f & !(1 << i), g & !(1 << j));
                    *next.entry(key).or_insert_with(T::zero) += w * aij * T::lit(f64::from(s));
                }
            }
            if next.is_empty() {
                break;
            }
            weight /= T::lit(2.0 * k as f64);
            for (&(f, g), &w) in &next {
                if f & g == 0 && w != T::zero() {
                    let s = T::lit(f64::from(merge_sign(f, g)));
                    *out.entry(f | g).or_insert_with(Cx::zero) += coeff * (w * weight * s);
                }
            }
            level = next;
        }
    }

    /// `F * G`.
    pub fn star(&self, f: &GrassmannElement<T>, g: &GrassmannElement<T>) -> Result<GrassmannElement<T>, StarError> {
        self.check(f)?;
        self.check(g)?;
        let mut acc: BTreeMap<u32, Cx<T>> = BTreeMap::new();
        for (a, x) in f.terms() {
            for (b, y) in g.terms() {
                self.monomial_star(a.0, b.0, &mut acc, x * y);
            }
        }
        Ok(GrassmannElement::from_terms(
            self.algebra(),
            acc.into_iter().map(|(m, c)| (Monomial(m), c)),
        ))
    }

    /// `F*G + G*F` or `F*G - G*F`.
    pub fn bracket(
        &self,
        f: &GrassmannElement<T>,
        g: &GrassmannElement<T>,
        mode: BracketMode,
    ) -> Result<GrassmannElement<T>, StarError> {
        let fg = self.star(f, g)?;
        let gf = self.star(g, f)?;
        Ok(match mode {
            BracketMode::Anti => &fg + &gf,
            BracketMode::Comm => &fg - &gf,
        })
    }

    /// `F*F*…*F` (`k` factors); `k = 0` gives 1.
    pub fn power(&self, f: &GrassmannElement<T>, k: u32) -> Result<GrassmannElement<T>, StarError> {
        self.check(f)?;
        let mut out = self.one();
        for _ in 0..k {
            out = self.star(&out, f)?;
        }
        Ok(out)
    }

    /// Time-evolution function `Exp(-iHt/scale)`, obtained as the matrix
    /// exponential of left star-multiplication by `H` applied to 1.
    pub fn exponential(&self, h: &GrassmannElement<T>, t: T, scale: T) -> Result<GrassmannElement<T>, StarError> {
        if scale == T::zero() {
            return Err(StarError::ZeroScale);
        }
        self.check(h)?;
        if t == T::zero() {
            return Ok(self.one());
        }
        let op = spectral::mult_operator(h, self, OperatorSide::Left)?;
        let gen = op.matrix() * Cx::new(T::zero(), -t / scale);
        let evolved = gen.exp();
        let one = self.one().to_dense();
        let v = &evolved * nalgebra::DVector::from_vec(one);
        Ok(GrassmannElement::from_dense(self.algebra(), v.as_slice()))
    }

    /// Truncated power series `Σ_{k<terms} (-it/scale)^k H^{*k} / k!`.
    pub fn exponential_series(
        &self,
        h: &GrassmannElement<T>,
        t: T,
        scale: T,
        terms: u32,
    ) -> Result<GrassmannElement<T>, StarError> {
        if scale == T::zero() {
            return Err(StarError::ZeroScale);
        }
        let step = Cx::new(T::zero(), -t / scale);
        let mut term = self.one();
        let mut sum = self.one();
        for k in 1..terms {
            term = self.star(&term, h)?.scale(step / real(T::lit(f64::from(k))));
            sum = &sum + &term;
        }
        Ok(sum)
    }
}
