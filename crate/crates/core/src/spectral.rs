//! Star multiplication as dense operators, *-genvalue problems and Wigner
//! projectors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grassmann::{GeneratorSet, GrassmannElement, Monomial, ParityClass};
use crate::scalar::{abs, real, Cx, Scalar};
use crate::star::{BracketMode, StarError, StarProduct};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("inputs {0} and {1} do not star-commute (residual {2:e})")]
    NonCommuting(usize, usize, f64),
    #[error("Hamiltonian must have even parity")]
    OddHamiltonian,
    #[error("no inputs given")]
    Empty,
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("projector for {label} not idempotent (residual {residual:e})")]
    NotIdempotent { label: String, residual: f64 },
    #[error("projectors do not solve the eigen-equation (residual {0:e}); input not diagonalizable")]
    NotEigen(f64),
    #[error("projectors not complete (residual {0:e})")]
    Incomplete(f64),
    #[error(transparent)]
    Star(#[from] StarError),
}

/// Multiplication from the left (`F * ·`) or from the right (`· * F`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorSide {
    Left,
    Right,
}

/// Dense `2^n × 2^n` matrix of star multiplication by a fixed element, acting
/// on coefficient vectors indexed by monomial bitset.
#[derive(Debug, Clone)]
pub struct AlgebraOperator<T: Scalar> {
    matrix: DMatrix<Cx<T>>,
    side: OperatorSide,
    source: GrassmannElement<T>,
}

impl<T: Scalar> AlgebraOperator<T> {
    pub fn matrix(&self) -> &DMatrix<Cx<T>> {
        &self.matrix
    }

    pub fn side(&self) -> OperatorSide {
        self.side
    }

    pub fn source(&self) -> &GrassmannElement<T> {
        &self.source
    }

    pub fn apply(&self, g: &GrassmannElement<T>) -> GrassmannElement<T> {
        let v = &self.matrix * DVector::from_vec(g.to_dense());
        GrassmannElement::from_dense(g.algebra(), v.as_slice())
    }
}

pub fn mult_operator<T: Scalar>(
    f: &GrassmannElement<T>,
    product: &StarProduct<T>,
    side: OperatorSide,
) -> Result<AlgebraOperator<T>, StarError> {
    let alg = product.algebra();
    let dim = alg.dim();
    let mut matrix = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let basis = GrassmannElement::monomial(alg, Monomial(k as u32), Cx::one());
        let col = match side {
            OperatorSide::Left => product.star(f, &basis)?,
            OperatorSide::Right => product.star(&basis, f)?,
        };
        for (m, c) in col.terms() {
            matrix[(m.as_index(), k)] = c;
        }
    }
    Ok(AlgebraOperator {
        matrix,
        side,
        source: f.clone(),
    })
}

/// One Wigner projector with its joint eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralPair<T: Scalar> {
    pub label: String,
    /// Eigenvalue of each input element on this projector.
    pub values: Vec<Cx<T>>,
    /// Sum of `values`; the total energy when the inputs split a Hamiltonian.
    pub eigenvalue: Cx<T>,
    pub projector: GrassmannElement<T>,
}

#[derive(Debug, Clone)]
pub struct SpectralResolution<T: Scalar> {
    pub pairs: Vec<SpectralPair<T>>,
    /// Worst `|H_k*W - e W|` and `|W*H_k - e W|` over all pairs.
    pub residual: T,
}

impl<T: Scalar> SpectralResolution<T> {
    pub fn get(&self, label: &str) -> Option<&SpectralPair<T>> {
        self.pairs.iter().find(|p| p.label == label)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<Cx<T>> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    /// `Σ E W_E`.
    pub fn reconstruct(&self, algebra: &Arc<GeneratorSet>) -> GrassmannElement<T> {
        self.pairs.iter().fold(GrassmannElement::zero(algebra), |acc, p| {
            &acc + &p.projector.scale(p.eigenvalue)
        })
    }
}

/// Tolerances for the eigen-solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T: Scalar> {
    /// Star commutators of the inputs must vanish to this.
    pub commute_tol: T,
    /// Eigenvalues closer than this (times the spectral radius, if above 1)
    /// share a projector.
    pub cluster_tol: T,
    /// Required idempotency / completeness residual.
    pub projector_tol: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            commute_tol: T::lit(1e-10),
            cluster_tol: T::lit(1e-9),
            projector_tol: T::lit(1e-9),
        }
    }
}

/// Eigenvalues of a dense complex matrix via the complex Schur form.
pub fn eigenvalues<T: Scalar>(m: &DMatrix<Cx<T>>) -> Result<Vec<Cx<T>>, SpectralError> {
    // Highly degenerate spectra can stall deflation at machine epsilon; a
    // looser threshold still leaves eigenvalue errors far below clustering.
    for widen in [1.0, 16.0, 256.0, 4096.0] {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), T::default_epsilon() * T::lit(widen), 2_000) {
            let (_, t) = schur.unpack();
            return Ok((0..t.nrows()).map(|i| t[(i, i)]).collect());
        }
    }
    Err(SpectralError::EigenFailure)
}

/// Groups nearly equal eigenvalues; returns cluster means sorted by
/// descending real part.
fn cluster<T: Scalar>(mut values: Vec<Cx<T>>, tol: T) -> Vec<Cx<T>> {
    let radius = values.iter().fold(T::zero(), |acc, v| acc.max(abs(*v)));
    let tol = tol * radius.max(T::one());
    values.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap().then(b.im.partial_cmp(&a.im).unwrap()));
    let mut groups: Vec<(Cx<T>, usize)> = Vec::new();
    for v in values {
        match groups.iter_mut().find(|(sum, k)| abs(*sum / real(T::lit(*k as f64)) - v) <= tol) {
            Some((sum, k)) => {
                *sum += v;
                *k += 1;
            }
            None => groups.push((v, 1)),
        }
    }
    let mut means: Vec<Cx<T>> = groups.into_iter().map(|(s, k)| s / real(T::lit(k as f64))).collect();
    means.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap().then(b.im.partial_cmp(&a.im).unwrap()));
    means
}

fn symbols(count: usize) -> Vec<String> {
    match count {
        1 => vec![String::new()],
        2 => vec!["+".into(), "-".into()],
        _ => (0..count).map(|k| k.to_string()).collect(),
    }
}

/// Spectral projectors of one element: `W_k = Π_{j≠k} (H - e_j)/(e_k - e_j)`.
fn single_projectors<T: Scalar>(
    h: &GrassmannElement<T>,
    product: &StarProduct<T>,
    opts: &SolveOptions<T>,
) -> Result<Vec<(Cx<T>, GrassmannElement<T>)>, SpectralError> {
    let op = mult_operator(h, product, OperatorSide::Left)?;
    let evs = cluster(eigenvalues(op.matrix())?, opts.cluster_tol);
    let one = product.one();
    let mut out = Vec::with_capacity(evs.len());
    for (k, ek) in evs.iter().enumerate() {
        let mut w = one.clone();
        for (j, ej) in evs.iter().enumerate() {
            if j == k {
                continue;
            }
            let factor = (h - &one.scale(*ej)).scale(Cx::<T>::one() / (*ek - *ej));
            w = product.star(&w, &factor)?;
        }
        out.push((*ek, w));
    }
    Ok(out)
}

/// One step of `W ← 3W*W − 2W*W*W`.
fn polish<T: Scalar>(w: &GrassmannElement<T>, product: &StarProduct<T>) -> Result<GrassmannElement<T>, StarError> {
    let w2 = product.star(w, w)?;
    let w3 = product.star(&w2, w)?;
    Ok(&w2.scale_real(T::lit(3.0)) - &w3.scale_real(T::lit(2.0)))
}

/// Solves `H_k * W = e_k W = W * H_k` jointly for a family of star-commuting
/// elements.
pub fn star_genvalue_solve<T: Scalar>(
    hs: &[GrassmannElement<T>],
    product: &StarProduct<T>,
    opts: &SolveOptions<T>,
) -> Result<SpectralResolution<T>, SpectralError> {
    if hs.is_empty() {
        return Err(SpectralError::Empty);
    }
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let c = product.bracket(&hs[i], &hs[j], BracketMode::Comm)?;
            if c.max_abs() > opts.commute_tol {
                return Err(SpectralError::NonCommuting(i, j, c.max_abs().to_f64_lossy()));
            }
        }
    }

    let mut joint: Vec<(String, Vec<Cx<T>>, GrassmannElement<T>)> = vec![(String::new(), vec![], product.one())];
    let mut multi_char = false;
    for h in hs {
        let projs = single_projectors(h, product, opts)?;
        let syms = symbols(projs.len());
        multi_char |= projs.len() > 2;
        let mut next = Vec::new();
        for (label, vals, w) in &joint {
            for ((e, p), s) in projs.iter().zip(&syms) {
                let prod = product.star(w, p)?;
                if prod.max_abs() <= opts.projector_tol {
                    continue;
                }
                let mut vals = vals.clone();
                vals.push(*e);
                let label = if multi_char && !label.is_empty() {
                    format!("{label},{s}")
                } else {
                    format!("{label}{s}")
                };
                next.push((label, vals, prod));
            }
        }
        joint = next;
    }

    let alg = product.algebra();
    let mut pairs = Vec::with_capacity(joint.len());
    let mut residual = T::zero();
    let mut total = GrassmannElement::zero(alg);
    for (label, values, w) in joint {
        let w = polish(&w, product)?;
        let idem = product.star(&w, &w)?.max_abs_diff(&w);
        if idem > opts.projector_tol {
            return Err(SpectralError::NotIdempotent {
                label,
                residual: idem.to_f64_lossy(),
            });
        }
        for (h, e) in hs.iter().zip(&values) {
            let ew = w.scale(*e);
            residual = residual
                .max(product.star(h, &w)?.max_abs_diff(&ew))
                .max(product.star(&w, h)?.max_abs_diff(&ew));
        }
        total = &total + &w;
        let eigenvalue = values.iter().fold(Cx::zero(), |acc, v| acc + *v);
        pairs.push(SpectralPair {
            label,
            values,
            eigenvalue,
            projector: w,
        });
    }
    let radius = pairs
        .iter()
        .flat_map(|p| p.values.iter())
        .fold(T::one(), |acc, v| acc.max(abs(*v)));
    if residual > opts.projector_tol * radius {
        return Err(SpectralError::NotEigen(residual.to_f64_lossy()));
    }
    let completeness = total.max_abs_diff(&product.one());
    if completeness > opts.projector_tol {
        return Err(SpectralError::Incomplete(completeness.to_f64_lossy()));
    }
    Ok(SpectralResolution { pairs, residual })
}

/// `H = Σ_E E W_E`, together with the reconstruction residual.
pub fn spectral_decompose<T: Scalar>(
    h: &GrassmannElement<T>,
    product: &StarProduct<T>,
) -> Result<(SpectralResolution<T>, T), SpectralError> {
    if h.parity() != ParityClass::Even {
        return Err(SpectralError::OddHamiltonian);
    }
    let res = star_genvalue_solve(std::slice::from_ref(h), product, &SolveOptions::default())?;
    let residual = res.reconstruct(product.algebra()).max_abs_diff(h);
    Ok((res, residual))
}

/// Compares `Exp(-iHt/scale)` with `Σ_E W_E e^{-iEt/scale}` at each time.
pub fn fourier_dirichlet<T: Scalar>(
    h: &GrassmannElement<T>,
    scale: T,
    times: &[T],
    product: &StarProduct<T>,
) -> Result<Vec<T>, SpectralError> {
    let (res, _) = spectral_decompose(h, product)?;
    times
        .iter()
        .map(|&t| {
            let lhs = product.exponential(h, t, scale)?;
            let rhs = res.pairs.iter().fold(GrassmannElement::zero(product.algebra()), |acc, p| {
                let phase = Cx::new(T::zero(), -t / scale) * p.eigenvalue;
                &acc + &p.projector.scale(nalgebra::ComplexField::exp(phase))
            });
            Ok(lhs.max_abs_diff(&rhs))
        })
        .collect()
}
