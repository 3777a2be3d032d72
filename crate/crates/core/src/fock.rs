//! Operator side of the correspondence: holomorphic variables, Fock-space
//! matrices, the fermionic Weyl map and a Clifford matrix representation of
//! the star algebra.
//!
//! Fock basis index `Σ n_k 2^k` for occupations `n_k`; `a_k` carries the
//! Jordan–Wigner string `(−1)^{n_0+…+n_{k−1}}`, so for one mode
//! `a = |0⟩⟨1| = [[0,1],[0,0]]`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grassmann::{left_strip_sign, merge_sign, GeneratorSet, GrassmannElement, GrassmannError, Monomial};
use crate::scalar::{abs, real, Cx, Scalar};
use crate::star::SymmetricForm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("generator {0} appears in more than one holomorphic pair")]
    OverlappingPairs(usize),
    #[error("generator {0} is not covered by the holomorphic pairing")]
    Unpaired(usize),
    #[error("element lives on {got} generators, expected {expected}")]
    AlgebraSize { got: usize, expected: usize },
    #[error("form is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is {rows}x{cols}, representation acts on dimension {dim}")]
    MatrixShape { rows: usize, cols: usize, dim: usize },
    #[error("antisymmetrized products of {0} generators are not supported")]
    TooManyGenerators(usize),
    #[error("Gram system of the symbol map is singular")]
    SingularGram,
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

pub type FockMatrix<T> = DMatrix<Cx<T>>;

/// `η_k = (θ_a + iθ_b)/√(2ħ)` for each pair `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicPairing<T: Scalar> {
    pairs: Vec<(usize, usize)>,
    hbar: T,
}

impl<T: Scalar> HolomorphicPairing<T> {
    pub fn new(pairs: Vec<(usize, usize)>, hbar: T) -> Result<Self, FockError> {
        let mut seen = 0u32;
        for &(a, b) in &pairs {
            for i in [a, b] {
                if seen >> i & 1 == 1 {
                    return Err(FockError::OverlappingPairs(i));
                }
                seen |= 1 << i;
            }
        }
        Ok(Self { pairs, hbar })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    /// Generators `(eta1*, eta1, eta2*, eta2, …)`.
    pub fn holomorphic_algebra(&self) -> Arc<GeneratorSet> {
        let names = (1..=self.pairs.len()).flat_map(|k| [format!("eta{k}*"), format!("eta{k}")]);
        GeneratorSet::new(names).expect("distinct names")
    }
}

/// Rewrites `F` in the holomorphic generators of `pairing`.
pub fn holomorphic_transform<T: Scalar>(
    f: &GrassmannElement<T>,
    pairing: &HolomorphicPairing<T>,
) -> Result<GrassmannElement<T>, FockError> {
    let n = f.algebra().len();
    let holo = pairing.holomorphic_algebra();
    let r = (pairing.hbar / T::lit(2.0)).sqrt();
    let zero = GrassmannElement::zero(&holo);
    let mut images = vec![zero; n];
    let mut covered = 0u32;
    for (k, &(a, b)) in pairing.pairs.iter().enumerate() {
        if a >= n || b >= n {
            return Err(FockError::Unpaired(a.max(b)));
        }
        let (es, e) = (Monomial(1 << (2 * k)), Monomial(1 << (2 * k + 1)));
        // θ_a = √(ħ/2)(η + η*), θ_b = −i√(ħ/2)(η − η*)
        images[a] = GrassmannElement::from_terms(&holo, [(e, real(r)), (es, real(r))]);
        images[b] = GrassmannElement::from_terms(&holo, [(e, Cx::new(T::zero(), -r)), (es, Cx::new(T::zero(), r))]);
        covered |= (1 << a) | (1 << b);
    }
    for (m, _) in f.terms() {
        if m.0 & !covered != 0 {
            return Err(FockError::Unpaired((m.0 & !covered).trailing_zeros() as usize));
        }
    }
    Ok(f.substitute(&holo, &images)?)
}

/// Maps a holomorphic element back onto `target` (the θ algebra).
pub fn inverse_holomorphic_transform<T: Scalar>(
    f: &GrassmannElement<T>,
    pairing: &HolomorphicPairing<T>,
    target: &Arc<GeneratorSet>,
) -> Result<GrassmannElement<T>, FockError> {
    let expected = 2 * pairing.modes();
    if f.algebra().len() != expected {
        return Err(FockError::AlgebraSize {
            got: f.algebra().len(),
            expected,
        });
    }
    let s = T::one() / (T::lit(2.0) * pairing.hbar).sqrt();
    let mut images = Vec::with_capacity(expected);
    for &(a, b) in &pairing.pairs {
        if a >= target.len() || b >= target.len() {
            return Err(FockError::Unpaired(a.max(b)));
        }
        let (ma, mb) = (Monomial(1 << a), Monomial(1 << b));
        images.push(GrassmannElement::from_terms(target, [(ma, real(s)), (mb, Cx::new(T::zero(), -s))]));
        images.push(GrassmannElement::from_terms(target, [(ma, real(s)), (mb, Cx::new(T::zero(), s))]));
    }
    Ok(f.substitute(target, &images)?)
}

/// Annihilation operator of mode `k` out of `modes`.
pub fn annihilation<T: Scalar>(modes: usize, k: usize) -> FockMatrix<T> {
    let dim = 1usize << modes;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        if col >> k & 1 == 1 {
            let sign = if (col & ((1 << k) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(col & !(1 << k), col)] = real(T::lit(sign));
        }
    }
    m
}

pub fn creation<T: Scalar>(modes: usize, k: usize) -> FockMatrix<T> {
    annihilation::<T>(modes, k).adjoint()
}

/// `(−1)^N` on the Fock space.
pub fn parity_operator<T: Scalar>(modes: usize) -> FockMatrix<T> {
    let dim = 1usize << modes;
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            Cx::zero()
        } else if r.count_ones() % 2 == 0 {
            Cx::one()
        } else {
            -Cx::<T>::one()
        }
    })
}

const MAX_ANTISYM: usize = 8;

fn permutations(r: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, sign: i32, out: &mut Vec<(Vec<usize>, i32)>) {
        if rest.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            // picking the k-th remaining element costs k transpositions
            rec(prefix, rest, if k % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..r).collect(), 1, &mut out);
    out
}

/// `(1/r!) Σ_σ sgn(σ) O_σ(1) … O_σ(r)`.
fn antisymmetrized<T: Scalar>(ops: &[&FockMatrix<T>], dim: usize) -> Result<FockMatrix<T>, FockError> {
    let r = ops.len();
    if r > MAX_ANTISYM {
        return Err(FockError::TooManyGenerators(r));
    }
    if r == 0 {
        return Ok(DMatrix::identity(dim, dim));
    }
    let perms = permutations(r);
    let mut acc = DMatrix::zeros(dim, dim);
    for (p, sign) in &perms {
        let mut m = ops[p[0]].clone();
        for &i in &p[1..] {
            m = m * ops[i];
        }
        if *sign > 0 {
            acc += m;
        } else {
            acc -= m;
        }
    }
    Ok(acc / real(T::lit(perms.len() as f64)))
}

fn holomorphic_operators<T: Scalar>(modes: usize) -> Vec<FockMatrix<T>> {
    (0..modes)
        .flat_map(|k| [creation::<T>(modes, k), annihilation::<T>(modes, k)])
        .collect()
}

/// Weyl map: every holomorphic monomial goes to the antisymmetrized product
/// of the matching `a†`/`a` matrices (`eta_k* → a_k†`, `eta_k → a_k`).
pub fn weyl_quantize<T: Scalar>(f: &GrassmannElement<T>) -> Result<FockMatrix<T>, FockError> {
    let n = f.algebra().len();
    if n % 2 != 0 {
        return Err(FockError::AlgebraSize { got: n, expected: n + 1 });
    }
    let modes = n / 2;
    let ops = holomorphic_operators::<T>(modes);
    let dim = 1usize << modes;
    let mut out = DMatrix::zeros(dim, dim);
    for (m, c) in f.terms() {
        let factors: Vec<&FockMatrix<T>> = m.indices().map(|i| &ops[i]).collect();
        out += antisymmetrized(&factors, dim)? * c;
    }
    Ok(out)
}

/// Grassmann element with operator coefficients, `Σ θ_A ⊗ M_A`. Odd Fock
/// operators anticommute with odd generators.
#[derive(Debug, Clone)]
struct OperatorElement<T: Scalar> {
    n: usize,
    dim: usize,
    terms: BTreeMap<u32, FockMatrix<T>>,
}

impl<T: Scalar> OperatorElement<T> {
    fn zero(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            terms: BTreeMap::new(),
        }
    }

    fn term(n: usize, bits: u32, m: FockMatrix<T>) -> Self {
        let mut out = Self::zero(n, m.nrows());
        out.terms.insert(bits, m);
        out
    }

    fn from_scalar_element(f: &GrassmannElement<T>, dim: usize) -> Self {
        let mut out = Self::zero(f.algebra().len(), dim);
        for (m, c) in f.terms() {
            out.add_term(m.0, DMatrix::identity(dim, dim) * c);
        }
        out
    }

    fn add_term(&mut self, bits: u32, m: FockMatrix<T>) {
        match self.terms.get_mut(&bits) {
            Some(e) => *e += m,
            None => {
                self.terms.insert(bits, m);
            }
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, m) in &other.terms {
            out.add_term(*b, m.clone());
        }
        out
    }

    /// `M` with its odd part negated: `M θ = θ Γ M Γ` for an odd generator.
    fn graded_flip(m: &FockMatrix<T>) -> FockMatrix<T> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            if (r.count_ones() + c.count_ones()) % 2 == 0 {
                m[(r, c)]
            } else {
                -m[(r, c)]
            }
        })
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n, self.dim);
        for (a, ma) in &self.terms {
            let flipped = Self::graded_flip(ma);
            for (b, mb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let moved = if b.count_ones() % 2 == 0 { ma } else { &flipped };
                let sign = T::lit(f64::from(merge_sign(*a, *b)));
                out.add_term(a | b, (moved * mb) * real(sign));
            }
        }
        out
    }

    /// `∫dθ_{order[0]} … dθ_{order[k-1]}`, last differential first, no ħ.
    fn integrate(&self, order: &[usize]) -> Self {
        let mut cur = self.clone();
        for &i in order.iter().rev() {
            let mut next = Self::zero(self.n, self.dim);
            for (b, m) in &cur.terms {
                if b >> i & 1 == 1 {
                    let sign = T::lit(f64::from(left_strip_sign(*b, i)));
                    next.add_term(b & !(1 << i), m * real(sign));
                }
            }
            cur = next;
        }
        cur
    }
}

/// `Δ = Π_k [½ − (a_k† − η_k*)(a_k − η_k)]` over the holomorphic algebra.
fn wigner_kernel<T: Scalar>(modes: usize) -> OperatorElement<T> {
    let n = 2 * modes;
    let dim = 1usize << modes;
    let id = DMatrix::<Cx<T>>::identity(dim, dim);
    let mut delta = OperatorElement::term(n, 0, id.clone());
    for k in 0..modes {
        let a = annihilation::<T>(modes, k);
        let ad = creation::<T>(modes, k);
        let (es, e) = (1u32 << (2 * k), 1u32 << (2 * k + 1));
        let a_minus_eta = OperatorElement::term(n, 0, a).add(&OperatorElement::term(n, e, -id.clone()));
        let ad_minus_etas = OperatorElement::term(n, 0, ad).add(&OperatorElement::term(n, es, -id.clone()));
        let prod = ad_minus_etas.mul(&a_minus_eta);
        let mut dk = OperatorElement::term(n, 0, id.clone() * real(T::lit(0.5)));
        for (b, m) in prod.terms {
            dk.add_term(b, -m);
        }
        delta = delta.mul(&dk);
    }
    delta
}

/// `Ĥ = ∫Π_k dη_k* dη_k F Δ`, evaluated with operator-valued Grassmann
/// coefficients. Agrees with [`weyl_quantize`].
pub fn wigner_operator_map<T: Scalar>(f: &GrassmannElement<T>) -> Result<FockMatrix<T>, FockError> {
    let n = f.algebra().len();
    if n % 2 != 0 {
        return Err(FockError::AlgebraSize { got: n, expected: n + 1 });
    }
    let modes = n / 2;
    let dim = 1usize << modes;
    let integrand = OperatorElement::from_scalar_element(f, dim).mul(&wigner_kernel(modes));
    let order: Vec<usize> = (0..n).collect();
    let r = integrand.integrate(&order);
    Ok(r.terms.get(&0).cloned().unwrap_or_else(|| DMatrix::zeros(dim, dim)))
}

/// Matrices `Θ_i` with `Θ_iΘ_j + Θ_jΘ_i = 𝒜_ij`, plus the antisymmetrized
/// monomial basis used to read symbols back.
#[derive(Debug, Clone)]
pub struct CliffordRep<T: Scalar> {
    form: SymmetricForm<T>,
    thetas: Vec<FockMatrix<T>>,
    basis: Vec<FockMatrix<T>>,
    gram: DMatrix<Cx<T>>,
}

impl<T: Scalar> CliffordRep<T> {
    pub fn new(form: &SymmetricForm<T>) -> Result<Self, FockError> {
        let n = form.algebra().len();
        if n > MAX_ANTISYM {
            return Err(FockError::TooManyGenerators(n));
        }
        let chol = nalgebra::Cholesky::new(form.matrix().clone()).ok_or(FockError::NotPositiveDefinite)?;
        let s = chol.l();
        let modes = n.div_ceil(2);
        let dim = 1usize << modes;
        let mut gammas = Vec::with_capacity(2 * modes);
        for k in 0..modes {
            let a = annihilation::<T>(modes, k);
            let ad = creation::<T>(modes, k);
            gammas.push(&a + &ad);
            gammas.push((&ad - &a) * Cx::new(T::zero(), T::one()));
        }
        let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
        let thetas: Vec<FockMatrix<T>> = (0..n)
            .map(|i| {
                (0..n).fold(DMatrix::zeros(dim, dim), |acc, k| acc + &gammas[k] * real(s[(i, k)] * inv_sqrt2))
            })
            .collect();
        let basis: Vec<FockMatrix<T>> = (0..1u32 << n)
            .map(|bits| {
                let ops: Vec<&FockMatrix<T>> = Monomial(bits).indices().map(|i| &thetas[i]).collect();
                antisymmetrized(&ops, dim)
            })
            .collect::<Result<_, _>>()?;
        let len = basis.len();
        let gram = DMatrix::from_fn(len, len, |a, b| hs_inner(&basis[a], &basis[b]));
        Ok(Self {
            form: form.clone(),
            thetas,
            basis,
            gram,
        })
    }

    pub fn form(&self) -> &SymmetricForm<T> {
        &self.form
    }

    pub fn thetas(&self) -> &[FockMatrix<T>] {
        &self.thetas
    }

    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(1, |t| t.nrows())
    }

    /// `Θ(F)`: monomials go to antisymmetrized products of the `Θ_i`.
    pub fn represent(&self, f: &GrassmannElement<T>) -> Result<FockMatrix<T>, FockError> {
        if f.algebra().len() != self.thetas.len() {
            return Err(FockError::AlgebraSize {
                got: f.algebra().len(),
                expected: self.thetas.len(),
            });
        }
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for (m, c) in f.terms() {
            out += &self.basis[m.as_index()] * c;
        }
        Ok(out)
    }

    /// Inverse of [`CliffordRep::represent`] on its image.
    pub fn symbol(&self, m: &FockMatrix<T>) -> Result<GrassmannElement<T>, FockError> {
        let dim = self.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(FockError::MatrixShape {
                rows: m.nrows(),
                cols: m.ncols(),
                dim,
            });
        }
        let rhs = DMatrix::from_fn(self.basis.len(), 1, |a, _| hs_inner(&self.basis[a], m));
        let coeffs = self.gram.clone().lu().solve(&rhs).ok_or(FockError::SingularGram)?;
        let mut out = GrassmannElement::from_terms(
            self.form.algebra(),
            (0..self.basis.len()).map(|k| (Monomial(k as u32), coeffs[(k, 0)])),
        );
        let scale = m.iter().fold(T::one(), |acc, z| acc.max(abs(*z)));
        out.prune_with(T::prune_tol() * scale);
        Ok(out)
    }
}

/// `Tr(A† B)`.
fn hs_inner<T: Scalar>(a: &FockMatrix<T>, b: &FockMatrix<T>) -> Cx<T> {
    a.iter().zip(b.iter()).fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * y)
}
