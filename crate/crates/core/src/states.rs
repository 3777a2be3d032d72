//! Traces, reduced states and entropies of Wigner functions.
//!
//! `Tr F = (2^{m/2}/ħ^m) ∫dθ_m … dθ_1 ⋆F` on `m` generators, so `Tr 1 = 2^{m/2}`
//! and a pure state has unit trace. Partial traces use the same recipe on the
//! traced generators only, with the Hodge dual taken inside that subset.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grassmann::{GeneratorSet, GrassmannElement, GrassmannError, ParityClass};
use crate::scalar::{Cx, Scalar};
use crate::spectral::{star_genvalue_solve, SolveOptions, SpectralError};
use crate::star::{StarError, StarProduct};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("trace needs an even number of generators, got {0}")]
    OddGeneratorCount(usize),
    #[error("bipartition must split the generators into two even-sized parts")]
    InvalidBipartition,
    #[error("Wigner function must be even")]
    NotEven,
    #[error("Rényi order must be positive and different from 1, got {0}")]
    InvalidAlpha(f64),
    #[error("non-integer Rényi order on a spectrum with negative eigenvalue {0}")]
    IndefiniteState(f64),
    #[error("Tr(W^α) = {0} is not positive")]
    NonPositiveTrace(f64),
    #[error("von Neumann entropy needs a non-negative spectrum (found {0})")]
    NegativeEigenvalue(f64),
    #[error("need |c|, |d| < ħ (ħ = {hbar}, c = {c}, d = {d})")]
    Domain { hbar: f64, c: f64, d: f64 },
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Star(#[from] StarError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Sign convention of the Hodge dual inside traces. `Flipped` negates it and
/// only exists as a negative control for verification runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HodgeConvention {
    #[default]
    Standard,
    Flipped,
}

fn trace_norm<T: Scalar>(k: usize, hbar: T) -> T {
    T::lit(2f64.powf(k as f64 / 2.0)) / hbar.powi(k as i32)
}

/// `Tr F` over all generators.
pub fn trace<T: Scalar>(f: &GrassmannElement<T>, hbar: T) -> Result<Cx<T>, StateError> {
    trace_with(f, hbar, HodgeConvention::Standard)
}

pub fn trace_with<T: Scalar>(f: &GrassmannElement<T>, hbar: T, conv: HodgeConvention) -> Result<Cx<T>, StateError> {
    let m = f.algebra().len();
    if m % 2 != 0 {
        return Err(StateError::OddGeneratorCount(m));
    }
    let mut dual = f.hodge_dual_full();
    if conv == HodgeConvention::Flipped {
        dual = -&dual;
    }
    let order: Vec<usize> = (0..m).rev().collect();
    let v = dual.berezin_integral(&order, hbar)?.body();
    Ok(v * trace_norm(m, hbar))
}

/// Split of the generators into a kept and a traced part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    keep: Vec<usize>,
    traced: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, keep: &[usize]) -> Result<Self, StateError> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.iter().any(|&i| i >= n) {
            return Err(StateError::InvalidBipartition);
        }
        let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        if keep.len() % 2 != 0 || traced.len() % 2 != 0 {
            return Err(StateError::InvalidBipartition);
        }
        Ok(Self { keep, traced })
    }

    /// Keeps `(θ1, θ3)`, traces out `(θ2, θ4)`.
    pub fn first_pair() -> Self {
        Self::new(4, &[0, 2]).expect("valid")
    }

    /// Keeps `(θ2, θ4)`, traces out `(θ1, θ3)`.
    pub fn second_pair() -> Self {
        Self::new(4, &[1, 3]).expect("valid")
    }

    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    pub fn traced(&self) -> &[usize] {
        &self.traced
    }

    pub fn swapped(&self) -> Self {
        Self {
            keep: self.traced.clone(),
            traced: self.keep.clone(),
        }
    }

    /// Algebra of the kept generators, names preserved.
    pub fn kept_algebra(&self, full: &GeneratorSet) -> Result<Arc<GeneratorSet>, StateError> {
        Ok(GeneratorSet::new(self.keep.iter().map(|&i| full.name(i).to_owned()))?)
    }
}

/// Partial trace over `b.traced()`, returned on the kept subalgebra.
pub fn partial_trace<T: Scalar>(
    f: &GrassmannElement<T>,
    b: &Bipartition,
    hbar: T,
) -> Result<GrassmannElement<T>, StateError> {
    let alg = f.algebra();
    if b.keep.len() + b.traced.len() != alg.len() {
        return Err(StateError::InvalidBipartition);
    }
    let target = b.kept_algebra(alg)?;
    let order: Vec<usize> = b.traced.iter().rev().copied().collect();
    let integrated = f.hodge_dual(&b.traced)?.berezin_integral(&order, hbar)?;
    Ok(integrated
        .restrict_to(&b.keep, &target)?
        .scale_real(trace_norm(b.traced.len(), hbar)))
}

/// Even element together with the star product it lives under.
#[derive(Debug, Clone)]
pub struct WignerState<T: Scalar> {
    element: GrassmannElement<T>,
    product: StarProduct<T>,
    hbar: T,
    trace: T,
}

impl<T: Scalar> WignerState<T> {
    pub fn new(element: GrassmannElement<T>, product: StarProduct<T>, hbar: T) -> Result<Self, StateError> {
        if element.parity() != ParityClass::Even {
            return Err(StateError::NotEven);
        }
        let trace = trace(&element, hbar)?.re;
        Ok(Self {
            element,
            product,
            hbar,
            trace,
        })
    }

    pub fn element(&self) -> &GrassmannElement<T> {
        &self.element
    }

    pub fn product(&self) -> &StarProduct<T> {
        &self.product
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn trace(&self) -> T {
        self.trace
    }

    /// Reduced state on the kept generators with the restricted star product.
    pub fn reduce(&self, b: &Bipartition) -> Result<Self, StateError> {
        let reduced = partial_trace(&self.element, b, self.hbar)?;
        let form = self.product.form().restrict(&b.keep, reduced.algebra())?;
        Self::new(reduced, StarProduct::new(form), self.hbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EntropyMethod {
    Spectral,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    /// Eigenvalues repeated by multiplicity, descending.
    pub eigenvalues: Vec<f64>,
    pub s_abs: f64,
    pub s_renyi: Option<(f64, f64)>,
    pub method: EntropyMethod,
}

/// Star eigenvalues of a state, each repeated by the trace of its projector.
pub fn state_spectrum<T: Scalar>(w: &WignerState<T>) -> Result<Vec<T>, StateError> {
    let res = star_genvalue_solve(std::slice::from_ref(&w.element), &w.product, &SolveOptions::default())?;
    let mut out = Vec::new();
    for pair in &res.pairs {
        let rank = trace(&pair.projector, w.hbar)?.re.round();
        let rank = rank.to_f64_lossy().max(0.0) as usize;
        out.extend(std::iter::repeat(pair.eigenvalue.re).take(rank));
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

/// `−Σ |p| ln |p|`, with `0 ln 0 = 0`.
pub fn entropy_abs<T: Scalar>(ps: &[T]) -> T {
    ps.iter().fold(T::zero(), |acc, p| {
        let a = p.abs();
        if a == T::zero() {
            acc
        } else {
            acc - a * a.ln()
        }
    })
}

/// `−Σ p ln p` for a non-negative spectrum.
pub fn von_neumann<T: Scalar>(ps: &[T]) -> Result<T, StateError> {
    if let Some(p) = ps.iter().find(|p| **p < -T::lit(1e-12)) {
        return Err(StateError::NegativeEigenvalue(p.to_f64_lossy()));
    }
    Ok(entropy_abs(ps))
}

/// `S_α = ln Tr(W_*^α) / (1 − α)`: star powers for integer `α`, the spectrum
/// otherwise.
pub fn renyi_entropy<T: Scalar>(w: &WignerState<T>, alpha: T) -> Result<T, StateError> {
    if alpha <= T::zero() || (alpha - T::one()).abs() < T::lit(1e-12) {
        return Err(StateError::InvalidAlpha(alpha.to_f64_lossy()));
    }
    let tr = if alpha == alpha.round() {
        let k = alpha.to_f64_lossy() as u32;
        trace(&w.product.power(&w.element, k)?, w.hbar)?.re
    } else {
        let ps = state_spectrum(w)?;
        if let Some(p) = ps.iter().find(|p| **p < -T::lit(1e-12)) {
            return Err(StateError::IndefiniteState(p.to_f64_lossy()));
        }
        ps.iter().fold(T::zero(), |acc, p| acc + p.abs().powf(alpha))
    };
    if tr <= T::zero() {
        return Err(StateError::NonPositiveTrace(tr.to_f64_lossy()));
    }
    Ok(tr.ln() / (T::one() - alpha))
}

/// `𝒮` of the reduced state on `b.keep()`.
pub fn entanglement_entropy<T: Scalar>(w: &WignerState<T>, b: &Bipartition) -> Result<EntropyReport, StateError> {
    let ps = state_spectrum(&w.reduce(b)?)?;
    Ok(EntropyReport {
        s_abs: entropy_abs(&ps).to_f64_lossy(),
        eigenvalues: ps.iter().map(|p| p.to_f64_lossy()).collect(),
        s_renyi: None,
        method: EntropyMethod::Spectral,
    })
}

/// Joint eigen-label of the two oscillator Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StateLabel {
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [Self::PlusPlus, Self::PlusMinus, Self::MinusPlus, Self::MinusMinus];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PlusPlus => "++",
            Self::MinusMinus => "--",
            Self::PlusMinus => "+-",
            Self::MinusPlus => "-+",
        }
    }

    fn aligned(self) -> bool {
        matches!(self, Self::PlusPlus | Self::MinusMinus)
    }
}

fn check_domain<T: Scalar>(hbar: T, c: T, d: T) -> Result<(), StateError> {
    if c.abs() >= hbar || d.abs() >= hbar {
        return Err(StateError::Domain {
            hbar: hbar.to_f64_lossy(),
            c: c.to_f64_lossy(),
            d: d.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `h± = √((ħ ± c)(ħ ± d))`.
pub fn h_pm<T: Scalar>(hbar: T, c: T, d: T) -> (T, T) {
    (((hbar + c) * (hbar + d)).sqrt(), ((hbar - c) * (hbar - d)).sqrt())
}

/// Reduced-state eigenvalues `(p₁, p₂)` of `W_label` from the closed form.
pub fn closed_form_p<T: Scalar>(which: StateLabel, hbar: T, c: T, d: T) -> Result<(T, T), StateError> {
    check_domain(hbar, c, d)?;
    let (hp, hm) = h_pm(hbar, c, d);
    let num = if which.aligned() { hp + hm } else { hp - hm };
    let x = hbar * num / (T::lit(4.0) * hp * hm);
    let half = T::lit(0.5);
    Ok((half + x, half - x))
}

/// `E_p(W_label)` from the closed-form eigenvalues.
pub fn closed_form_ep<T: Scalar>(which: StateLabel, hbar: T, c: T, d: T) -> Result<T, StateError> {
    let (p1, p2) = closed_form_p(which, hbar, c, d)?;
    Ok(entropy_abs(&[p1, p2]))
}

/// `E_p` at `c = d`, written out directly.
pub fn ep_equal_couplings<T: Scalar>(which: StateLabel, hbar: T, c: T) -> Result<T, StateError> {
    check_domain(hbar, c, c)?;
    let h2 = hbar * hbar;
    let den = T::lit(2.0) * (h2 - c * c);
    let (a, b) = if which.aligned() {
        ((T::lit(2.0) * h2 - c * c) / den, -(c * c) / den)
    } else {
        ((h2 - c * c + hbar * c) / den, (h2 - c * c - hbar * c) / den)
    };
    Ok(entropy_abs(&[a, b]))
}

/// `E_p` at `c = −d`, written out directly.
pub fn ep_opposite_couplings<T: Scalar>(which: StateLabel, hbar: T, c: T) -> Result<T, StateError> {
    check_domain(hbar, c, -c)?;
    if !which.aligned() {
        return Ok(T::lit(2.0).ln());
    }
    let x = hbar / (T::lit(2.0) * (hbar * hbar - c * c).sqrt());
    let half = T::lit(0.5);
    Ok(entropy_abs(&[half + x, half - x]))
}
