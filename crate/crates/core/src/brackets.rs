//! Graded Poisson and Dirac brackets on odd phase space.
//!
//! `{F, G} = -T_ij F∂⃖_i ∂⃗_j G` with the right derivative of
//! [`GrassmannElement::derivative`]; with the canonical tensor this gives
//! `{θ_α, π_β} = δ_αβ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grassmann::{GeneratorSet, GrassmannElement, GrassmannError, Monomial, ParityClass, Side};
use crate::scalar::{abs, real, Cx, Scalar};
use crate::star::{StarError, SymmetricForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BracketError {
    #[error("bracket tensor is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("tensor is {0}x{0}, algebra has {1} generators")]
    Shape(usize, usize),
    #[error("constraint {0} is not odd")]
    NotOdd(usize),
    #[error("empty constraint set")]
    NoConstraints,
    #[error("first-class or degenerate constraints (smallest singular value {0:e})")]
    FirstClass(f64),
    #[error("constraint {0} cannot be solved for generator {1}")]
    NotSolvable(usize, usize),
    #[error("Dirac bracket {{θ_{0}, θ_{0}}} vanishes; cannot normalize")]
    ZeroDiagonal(usize),
    #[error("Dirac matrix is not a single multiple of a real symmetric form (entry ({0}, {1}))")]
    NotProportional(usize, usize),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Star(#[from] StarError),
}

/// Symmetric (possibly complex) tensor defining a graded Poisson bracket.
#[derive(Debug, Clone)]
pub struct BracketTensor<T: Scalar> {
    matrix: DMatrix<Cx<T>>,
    algebra: Arc<GeneratorSet>,
}

impl<T: Scalar> BracketTensor<T> {
    pub fn new(algebra: &Arc<GeneratorSet>, matrix: DMatrix<Cx<T>>) -> Result<Self, BracketError> {
        let n = algebra.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(BracketError::Shape(matrix.nrows(), n));
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(BracketError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self {
            matrix,
            algebra: Arc::clone(algebra),
        })
    }

    /// `[[0, I], [I, 0]]` on a `th1..thN, pi1..piN` phase space.
    pub fn canonical(algebra: &Arc<GeneratorSet>) -> Result<Self, BracketError> {
        let n2 = algebra.len();
        if n2 % 2 != 0 {
            return Err(BracketError::Shape(n2, n2));
        }
        let n = n2 / 2;
        let mut m = DMatrix::zeros(n2, n2);
        for a in 0..n {
            m[(a, n + a)] = Cx::one();
            m[(n + a, a)] = Cx::one();
        }
        Self::new(algebra, m)
    }

    /// Canonical tensor plus `iC` coupling θ1↔θ2 and θ3↔θ4 (four oscillator
    /// coordinates and their momenta).
    pub fn nac(algebra: &Arc<GeneratorSet>, big_c: T) -> Result<Self, BracketError> {
        if algebra.len() != 8 {
            return Err(BracketError::Shape(8, algebra.len()));
        }
        let mut t = Self::canonical(algebra)?;
        let ic = Cx::new(T::zero(), big_c);
        for (i, j) in [(0, 1), (2, 3)] {
            t.matrix[(i, j)] = ic;
            t.matrix[(j, i)] = ic;
        }
        Ok(t)
    }

    pub fn matrix(&self) -> &DMatrix<Cx<T>> {
        &self.matrix
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    /// `{F, G}`.
    pub fn bracket(&self, f: &GrassmannElement<T>, g: &GrassmannElement<T>) -> Result<GrassmannElement<T>, BracketError> {
        let n = self.algebra.len();
        let mut out = GrassmannElement::zero(&self.algebra);
        let mut right = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        for i in 0..n {
            right.push(f.derivative(i, Side::Right)?);
            left.push(g.derivative(i, Side::Left)?);
        }
        for i in 0..n {
            if right[i].is_zero() {
                continue;
            }
            for j in 0..n {
                let t = self.matrix[(i, j)];
                if t == Cx::zero() || left[j].is_zero() {
                    continue;
                }
                out = out.checked_add(&right[i].checked_mul(&left[j])?.scale(-t))?;
            }
        }
        Ok(out)
    }
}

/// `{F, G}` for the given tensor.
pub fn poisson_bracket<T: Scalar>(
    f: &GrassmannElement<T>,
    g: &GrassmannElement<T>,
    tensor: &BracketTensor<T>,
) -> Result<GrassmannElement<T>, BracketError> {
    tensor.bracket(f, g)
}

/// Odd constraints `χ_α`, optionally each solved for one generator.
#[derive(Debug, Clone)]
pub struct ConstraintSet<T: Scalar> {
    pub constraints: Vec<GrassmannElement<T>>,
    pub labels: Vec<String>,
    /// Generator each constraint eliminates when imposed strongly.
    pub solved_for: Option<Vec<usize>>,
}

impl<T: Scalar> ConstraintSet<T> {
    pub fn new(constraints: Vec<GrassmannElement<T>>, labels: Vec<String>) -> Result<Self, BracketError> {
        if constraints.is_empty() {
            return Err(BracketError::NoConstraints);
        }
        for (k, c) in constraints.iter().enumerate() {
            if c.parity() != ParityClass::Odd {
                return Err(BracketError::NotOdd(k));
            }
        }
        Ok(Self {
            constraints,
            labels,
            solved_for: None,
        })
    }

    pub fn solved_for(mut self, generators: Vec<usize>) -> Self {
        assert_eq!(generators.len(), self.constraints.len());
        self.solved_for = Some(generators);
        self
    }

    /// `χ_α = π_α + (i/2) θ_α` on a `th1..thN, pi1..piN` phase space,
    /// solved for the momenta.
    pub fn second_order_fermions(algebra: &Arc<GeneratorSet>) -> Result<Self, BracketError> {
        let n = algebra.len() / 2;
        let half_i = Cx::new(T::zero(), T::lit(0.5));
        let chis = (0..n)
            .map(|a| {
                GrassmannElement::from_terms(algebra, [(Monomial(1 << (n + a)), Cx::one()), (Monomial(1 << a), half_i)])
            })
            .collect();
        let labels = (1..=n).map(|a| format!("chi{a}")).collect();
        Ok(Self::new(chis, labels)?.solved_for((n..2 * n).collect()))
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// Result of [`classify_constraints`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    SecondClass,
    FirstClassPresent,
}

type GMatrix<T> = Vec<Vec<GrassmannElement<T>>>;

/// Constraint bracket matrix `C_αβ = {χ_α, χ_β}` and its inverse.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix<T: Scalar> {
    c: GMatrix<T>,
    cinv: GMatrix<T>,
    smallest_singular: T,
}

impl<T: Scalar> ConstraintMatrix<T> {
    pub fn entry(&self, a: usize, b: usize) -> &GrassmannElement<T> {
        &self.c[a][b]
    }

    pub fn inverse_entry(&self, a: usize, b: usize) -> &GrassmannElement<T> {
        &self.cinv[a][b]
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn body(&self) -> DMatrix<Cx<T>> {
        body_of(&self.c)
    }

    pub fn inverse_body(&self) -> DMatrix<Cx<T>> {
        body_of(&self.cinv)
    }

    /// Worst entry of `C·C⁻¹ − 1`.
    pub fn inverse_residual(&self) -> T {
        let alg = self.c[0][0].algebra().clone();
        let prod = gmat_mul(&self.c, &self.cinv, &alg).expect("same algebra");
        let mut worst = T::zero();
        for (a, row) in prod.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                let id = if a == b {
                    GrassmannElement::one(&alg)
                } else {
                    GrassmannElement::zero(&alg)
                };
                worst = worst.max(e.max_abs_diff(&id));
            }
        }
        worst
    }

    pub fn smallest_singular_value(&self) -> T {
        self.smallest_singular
    }
}

fn body_of<T: Scalar>(m: &GMatrix<T>) -> DMatrix<Cx<T>> {
    let l = m.len();
    DMatrix::from_fn(l, l, |a, b| m[a][b].body())
}

fn gmat_mul<T: Scalar>(a: &GMatrix<T>, b: &GMatrix<T>, alg: &Arc<GeneratorSet>) -> Result<GMatrix<T>, GrassmannError> {
    let l = a.len();
    let mut out = vec![vec![GrassmannElement::zero(alg); l]; l];
    for i in 0..l {
        for j in 0..l {
            let mut acc = GrassmannElement::zero(alg);
            for k in 0..l {
                acc = acc.checked_add(&a[i][k].checked_mul(&b[k][j])?)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

const RANK_TOL: f64 = 1e-10;

fn constraint_brackets<T: Scalar>(
    set: &ConstraintSet<T>,
    tensor: &BracketTensor<T>,
) -> Result<(GMatrix<T>, T), BracketError> {
    let l = set.len();
    let mut c = Vec::with_capacity(l);
    for a in 0..l {
        let mut row = Vec::with_capacity(l);
        for b in 0..l {
            row.push(tensor.bracket(&set.constraints[a], &set.constraints[b])?);
        }
        c.push(row);
    }
    let sv = body_of(&c).singular_values();
    let smallest = sv.iter().fold(T::max_value().unwrap_or_else(T::one), |acc, s| acc.min(*s));
    Ok((c, smallest))
}

/// `C_αβ = {χ_α, χ_β}`; the inverse inverts the scalar body and sums the
/// Neumann series of the nilpotent remainder.
pub fn constraint_matrix<T: Scalar>(
    set: &ConstraintSet<T>,
    tensor: &BracketTensor<T>,
) -> Result<ConstraintMatrix<T>, BracketError> {
    let (c, smallest) = constraint_brackets(set, tensor)?;
    if smallest < T::lit(RANK_TOL) {
        return Err(BracketError::FirstClass(smallest.to_f64_lossy()));
    }
    let alg = tensor.algebra().clone();
    let l = c.len();
    let body = body_of(&c);
    let binv = body.clone().try_inverse().ok_or(BracketError::FirstClass(0.0))?;
    let binv_g: GMatrix<T> = (0..l)
        .map(|a| (0..l).map(|b| GrassmannElement::scalar(&alg, binv[(a, b)])).collect())
        .collect();
    // −B⁻¹·N with N the nilpotent part of C
    let soul: GMatrix<T> = (0..l)
        .map(|a| {
            (0..l)
                .map(|b| {
                    let mut e = c[a][b].clone();
                    e = e.checked_sub(&GrassmannElement::scalar(&alg, body[(a, b)])).expect("same algebra");
                    e
                })
                .collect()
        })
        .collect();
    let step = gmat_mul(&binv_g, &soul, &alg)?
        .into_iter()
        .map(|row| row.into_iter().map(|e| -&e).collect())
        .collect::<GMatrix<T>>();
    let mut term = binv_g.clone();
    let mut cinv = binv_g;
    for _ in 0..alg.len() {
        term = gmat_mul(&step, &term, &alg)?;
        if term.iter().all(|row| row.iter().all(|e| e.is_zero())) {
            break;
        }
        for a in 0..l {
            for b in 0..l {
                cinv[a][b] = cinv[a][b].checked_add(&term[a][b])?;
            }
        }
    }
    Ok(ConstraintMatrix {
        c,
        cinv,
        smallest_singular: smallest,
    })
}

pub fn classify_constraints<T: Scalar>(
    set: &ConstraintSet<T>,
    tensor: &BracketTensor<T>,
) -> Result<Classification, BracketError> {
    let (_, smallest) = constraint_brackets(set, tensor)?;
    Ok(if smallest < T::lit(RANK_TOL) {
        Classification::FirstClassPresent
    } else {
        Classification::SecondClass
    })
}

/// Dirac bracket for a second-class constraint set, with `C⁻¹` cached.
#[derive(Debug, Clone)]
pub struct DiracBracket<T: Scalar> {
    tensor: BracketTensor<T>,
    constraints: ConstraintSet<T>,
    cmat: ConstraintMatrix<T>,
}

impl<T: Scalar> DiracBracket<T> {
    pub fn new(constraints: ConstraintSet<T>, tensor: BracketTensor<T>) -> Result<Self, BracketError> {
        let cmat = constraint_matrix(&constraints, &tensor)?;
        Ok(Self {
            tensor,
            constraints,
            cmat,
        })
    }

    pub fn tensor(&self) -> &BracketTensor<T> {
        &self.tensor
    }

    pub fn constraints(&self) -> &ConstraintSet<T> {
        &self.constraints
    }

    pub fn constraint_matrix(&self) -> &ConstraintMatrix<T> {
        &self.cmat
    }

    /// `{F,G}_D = {F,G} − {F,χ_α} C⁻¹_αβ {χ_β,G}`.
    pub fn bracket(&self, f: &GrassmannElement<T>, g: &GrassmannElement<T>) -> Result<GrassmannElement<T>, BracketError> {
        let l = self.constraints.len();
        let mut out = self.tensor.bracket(f, g)?;
        let f_chi: Vec<_> = self
            .constraints
            .constraints
            .iter()
            .map(|chi| self.tensor.bracket(f, chi))
            .collect::<Result<_, _>>()?;
        let chi_g: Vec<_> = self
            .constraints
            .constraints
            .iter()
            .map(|chi| self.tensor.bracket(chi, g))
            .collect::<Result<_, _>>()?;
        for a in 0..l {
            if f_chi[a].is_zero() {
                continue;
            }
            for b in 0..l {
                let ci = &self.cmat.cinv[a][b];
                if ci.is_zero() || chi_g[b].is_zero() {
                    continue;
                }
                let term = f_chi[a].checked_mul(ci)?.checked_mul(&chi_g[b])?;
                out = out.checked_sub(&term)?;
            }
        }
        Ok(out)
    }

    /// Generators not eliminated by the constraints.
    pub fn surviving(&self) -> Vec<usize> {
        let n = self.tensor.algebra.len();
        match &self.constraints.solved_for {
            Some(gone) => (0..n).filter(|i| !gone.contains(i)).collect(),
            None => (0..n).collect(),
        }
    }

    /// Sets the constraints strongly to zero: each solved generator `g` of a
    /// linear constraint `a·g + r` is replaced by `−r/a`.
    pub fn impose_strongly(&self, f: &GrassmannElement<T>) -> Result<GrassmannElement<T>, BracketError> {
        let alg = self.tensor.algebra();
        let n = alg.len();
        let mut images: Vec<GrassmannElement<T>> = (0..n).map(|i| GrassmannElement::generator(alg, i)).collect();
        if let Some(solved) = &self.constraints.solved_for {
            for (k, (&g, chi)) in solved.iter().zip(&self.constraints.constraints).enumerate() {
                let gm = Monomial(1 << g);
                let a = chi.coeff(gm);
                if a == Cx::zero() || chi.terms().any(|(m, _)| m.grade() != 1) {
                    return Err(BracketError::NotSolvable(k, g));
                }
                let rest = chi.checked_sub(&GrassmannElement::monomial(alg, gm, a))?;
                images[g] = rest.scale(-Cx::<T>::one() / a);
            }
        }
        Ok(f.substitute(alg, &images)?)
    }

    /// `D_ij = {θ_i, θ_j}_D` over the surviving generators (bodies).
    pub fn dirac_matrix(&self) -> Result<DMatrix<Cx<T>>, BracketError> {
        let alg = self.tensor.algebra();
        let keep = self.surviving();
        let k = keep.len();
        let mut d = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                let e = self.bracket(
                    &GrassmannElement::generator(alg, keep[a]),
                    &GrassmannElement::generator(alg, keep[b]),
                )?;
                d[(a, b)] = e.body();
            }
        }
        Ok(d)
    }

    /// Algebra of the surviving generators, keeping their names.
    pub fn reduced_algebra(&self) -> Result<Arc<GeneratorSet>, BracketError> {
        let alg = self.tensor.algebra();
        Ok(GeneratorSet::new(self.surviving().into_iter().map(|i| alg.name(i).to_owned()))?)
    }

    /// Imposes the constraints and re-expresses the result on the surviving
    /// generators.
    pub fn reduce(&self, f: &GrassmannElement<T>, target: &Arc<GeneratorSet>) -> Result<GrassmannElement<T>, BracketError> {
        Ok(self.impose_strongly(f)?.restrict_to(&self.surviving(), target)?)
    }
}

/// `{F,G}_D` without caching the constraint matrix.
pub fn dirac_bracket<T: Scalar>(
    f: &GrassmannElement<T>,
    g: &GrassmannElement<T>,
    constraints: &ConstraintSet<T>,
    tensor: &BracketTensor<T>,
) -> Result<GrassmannElement<T>, BracketError> {
    DiracBracket::new(constraints.clone(), tensor.clone())?.bracket(f, g)
}

/// Symmetric form whose star product has a first-order term proportional to
/// the Dirac bracket, normalized to `ħ` on the diagonal.
pub fn quantization_form<T: Scalar>(dirac: &DiracBracket<T>, hbar: T) -> Result<SymmetricForm<T>, BracketError> {
    let d = dirac.dirac_matrix()?;
    let k = d.nrows();
    let d00 = d[(0, 0)];
    for i in 0..k {
        if abs(d[(i, i)]) < T::lit(RANK_TOL) {
            return Err(BracketError::ZeroDiagonal(i));
        }
    }
    let ratio = real(hbar) / d00;
    let tol = T::lit(1e-10) * abs(ratio).max(T::one());
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let v = d[(i, j)] * ratio;
            if v.im.abs() > tol * hbar.max(T::one()) {
                return Err(BracketError::NotProportional(i, j));
            }
            m[(i, j)] = v.re;
        }
    }
    for i in 0..k {
        if (m[(i, i)] - hbar).abs() > tol * hbar.max(T::one()) {
            return Err(BracketError::NotProportional(i, i));
        }
        m[(i, i)] = hbar;
        for j in i + 1..k {
            let s = (m[(i, j)] + m[(j, i)]) / T::lit(2.0);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    Ok(SymmetricForm::new(&dirac.reduced_algebra()?, m)?)
}

/// Bracket used for Hamilton's equations.
#[derive(Debug, Clone, Copy)]
pub enum BracketContext<'a, T: Scalar> {
    Poisson(&'a BracketTensor<T>),
    Dirac(&'a DiracBracket<T>),
}

/// `dF/dt = {F, H}`.
pub fn classical_time_derivative<T: Scalar>(
    f: &GrassmannElement<T>,
    h: &GrassmannElement<T>,
    ctx: BracketContext<'_, T>,
) -> Result<GrassmannElement<T>, BracketError> {
    match ctx {
        BracketContext::Poisson(t) => t.bracket(f, h),
        BracketContext::Dirac(d) => d.bracket(f, h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    type E = GrassmannElement<f64>;

    fn phase() -> Arc<GeneratorSet> {
        GeneratorSet::phase_space(4).unwrap()
    }

    fn g(a: &Arc<GeneratorSet>, name: &str) -> E {
        E::generator(a, a.index_of(name).unwrap())
    }

    #[test]
    fn canonical_relations() {
        let a = phase();
        let t = BracketTensor::canonical(&a).unwrap();
        for al in 1..=4 {
            for be in 1..=4 {
                let v = t.bracket(&g(&a, &format!("th{al}")), &g(&a, &format!("pi{be}"))).unwrap();
                let expect = if al == be { 1.0 } else { 0.0 };
                assert!((v.body() - cx(expect, 0.0)).norm() < 1e-15);
                let tt = t.bracket(&g(&a, &format!("th{al}")), &g(&a, &format!("th{be}"))).unwrap();
                assert!(tt.is_zero());
            }
        }
    }

    #[test]
    fn nac_constraint_brackets() {
        let a = phase();
        let big_c = 0.8;
        let t = BracketTensor::nac(&a, big_c).unwrap();
        let s = ConstraintSet::second_order_fermions(&a).unwrap();
        let v = t.bracket(&s.constraints[0], &s.constraints[1]).unwrap();
        assert!((v.body() - cx(0.0, -big_c / 4.0)).norm() < 1e-15);
        // {θ1, χ1}: only {θ1, π1} = 1 survives since the θθ block has no diagonal
        let v = t.bracket(&g(&a, "th1"), &s.constraints[0]).unwrap();
        assert!(v.approx_eq(&E::one(&a), 1e-15));
    }

    #[test]
    fn single_fermion() {
        let a = GeneratorSet::phase_space(1).unwrap();
        let t = BracketTensor::<f64>::canonical(&a).unwrap();
        let s = ConstraintSet::second_order_fermions(&a).unwrap();
        let cm = constraint_matrix(&s, &t).unwrap();
        assert!((cm.entry(0, 0).body() - cx(0.0, 1.0)).norm() < 1e-15);
        let d = DiracBracket::new(s, t).unwrap();
        let form = quantization_form(&d, 0.9).unwrap();
        assert_eq!(form.matrix().nrows(), 1);
        assert!((form.get(0, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn nac_matrix_and_inverse() {
        let a = phase();
        let big_c = 1.3;
        let t = BracketTensor::nac(&a, big_c).unwrap();
        let s = ConstraintSet::second_order_fermions(&a).unwrap();
        let cm = constraint_matrix(&s, &t).unwrap();
        let q = big_c / 4.0;
        let pref = 1.0 / (1.0 - big_c * big_c / 16.0);
        for i in 0..4 {
            for j in 0..4 {
                let (cv, iv) = if i == j {
                    (1.0, 1.0)
                } else if i / 2 == j / 2 {
                    (-q, q)
                } else {
                    (0.0, 0.0)
                };
                assert!((cm.entry(i, j).body() - cx(0.0, cv)).norm() < 1e-12);
                assert!((cm.inverse_entry(i, j).body() - cx(0.0, -pref * iv)).norm() < 1e-12);
            }
        }
        assert!(cm.inverse_residual() < 1e-12);
    }

    #[test]
    fn classification() {
        let a = phase();
        let s = ConstraintSet::second_order_fermions(&a).unwrap();
        let t = BracketTensor::nac(&a, 1.0).unwrap();
        assert_eq!(classify_constraints(&s, &t).unwrap(), Classification::SecondClass);
        for big_c in [4.0, -4.0] {
            let t = BracketTensor::nac(&a, big_c).unwrap();
            assert_eq!(classify_constraints(&s, &t).unwrap(), Classification::FirstClassPresent);
            assert!(matches!(DiracBracket::new(s.clone(), t), Err(BracketError::FirstClass(_))));
        }
        // momenta only: they bracket to zero with each other
        let pis = ConstraintSet::new((4..8).map(|i| E::generator(&a, i)).collect(), vec![String::new(); 4]).unwrap();
        let t = BracketTensor::canonical(&a).unwrap();
        assert_eq!(classify_constraints(&pis, &t).unwrap(), Classification::FirstClassPresent);
    }

    #[test]
    fn rejects_even_constraint() {
        let a = phase();
        let e = &g(&a, "th1") * &g(&a, "pi1");
        assert!(matches!(ConstraintSet::new(vec![e], vec!["x".into()]), Err(BracketError::NotOdd(0))));
    }

    #[test]
    fn dirac_ratio_and_form() {
        let a = phase();
        let big_c = 0.8;
        let hbar = 1.0;
        let d = DiracBracket::new(
            ConstraintSet::second_order_fermions(&a).unwrap(),
            BracketTensor::nac(&a, big_c).unwrap(),
        )
        .unwrap();
        let dm = d.dirac_matrix().unwrap();
        assert!((dm[(0, 1)] / dm[(0, 0)] - cx(big_c / 4.0, 0.0)).norm() < 1e-12);
        assert!(dm[(0, 2)].norm() < 1e-14);
        let form = quantization_form(&d, hbar).unwrap();
        let red = d.reduced_algebra().unwrap();
        let expect = SymmetricForm::from_deformation(&red, hbar, big_c).unwrap();
        assert!((form.matrix() - expect.matrix()).abs().max() < 1e-12);
        let zero = quantization_form(
            &DiracBracket::new(
                ConstraintSet::second_order_fermions(&a).unwrap(),
                BracketTensor::nac(&a, 0.0).unwrap(),
            )
            .unwrap(),
            2.0,
        )
        .unwrap();
        assert_eq!(zero.matrix(), &(DMatrix::identity(4, 4) * 2.0));
    }

    #[test]
    fn constraints_drop_out_of_dirac_bracket() {
        let a = phase();
        let d = DiracBracket::new(
            ConstraintSet::second_order_fermions(&a).unwrap(),
            BracketTensor::nac(&a, 0.6).unwrap(),
        )
        .unwrap();
        let f = &(&g(&a, "th1") * &g(&a, "pi3")) + &g(&a, "pi2");
        for chi in &d.constraints().constraints {
            assert!(d.bracket(chi, &f).unwrap().max_abs() < 1e-12);
            assert!(d.bracket(&f, chi).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn strong_imposition() {
        let a = phase();
        let d = DiracBracket::new(
            ConstraintSet::second_order_fermions(&a).unwrap(),
            BracketTensor::canonical(&a).unwrap(),
        )
        .unwrap();
        let red = d.reduced_algebra().unwrap();
        let r = d.reduce(&g(&a, "pi2"), &red).unwrap();
        assert!(r.approx_eq(&E::generator(&red, 1).scale(cx(0.0, -0.5)), 1e-15));
        for chi in &d.constraints().constraints {
            assert!(d.impose_strongly(chi).unwrap().is_zero());
        }
    }

    #[test]
    fn time_derivative() {
        let a = phase();
        let big_c = 0.4;
        let d = DiracBracket::new(
            ConstraintSet::second_order_fermions(&a).unwrap(),
            BracketTensor::nac(&a, big_c).unwrap(),
        )
        .unwrap();
        let w = 1.0;
        let h = E::from_terms(&a, [(Monomial(0b0101), cx(0.0, -w)), (Monomial(0b1010), cx(0.0, -w))]);
        assert!(classical_time_derivative(&h, &h, BracketContext::Dirac(&d)).unwrap().max_abs() < 1e-14);
        assert!(classical_time_derivative(&E::one(&a), &h, BracketContext::Dirac(&d))
            .unwrap()
            .is_zero());
        let dt = classical_time_derivative(&g(&a, "th1"), &h, BracketContext::Dirac(&d)).unwrap();
        let dm = d.dirac_matrix().unwrap();
        // θ̇1 = {θ1,θ1}_D ∂(H)/∂θ1-part + {θ1,θ2}_D ...: proportional to D_11 θ3 + D_12 θ4
        let expect = E::from_terms(&a, [(Monomial(0b0100), dm[(0, 0)] * cx(0.0, -w)), (Monomial(0b1000), dm[(0, 1)] * cx(0.0, -w))]);
        assert!(dt.approx_eq(&expect, 1e-12), "{dt} vs {expect}");
        assert!(dt.coeff(Monomial(0b1000)).norm() > 1e-3);
        let canon = BracketTensor::canonical(&a).unwrap();
        let free = classical_time_derivative(&g(&a, "th1"), &g(&a, "pi1"), BracketContext::Poisson(&canon)).unwrap();
        assert!(free.approx_eq(&E::one(&a), 1e-15));
    }
}
