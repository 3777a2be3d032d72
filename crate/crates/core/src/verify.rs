//! Verification suite: every acceptance criterion as a pass/fail result.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::brackets::{
    classify_constraints, quantization_form, BracketTensor, Classification, ConstraintSet, DiracBracket,
};
use crate::fock::{holomorphic_transform, weyl_quantize, CliffordRep, HolomorphicPairing};
use crate::grassmann::{GeneratorSet, GrassmannElement, Monomial, ParityClass};
use crate::scenario::{ConfigError, Pipeline, ScenarioConfig, ScenarioError};
use crate::spectral::{eigenvalues, fourier_dirichlet};
use crate::star::BracketMode;
use crate::states::{
    ep_equal_couplings, h_pm, partial_trace, state_spectrum, trace_with, Bipartition, HodgeConvention, StateLabel,
};
use crate::Complex64;

type E = GrassmannElement<f64>;

/// Tolerance tiers: exact relations, algebraic identities, oracle comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub relation: f64,
    pub algebra: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relation: 1e-12,
            algebra: 1e-10,
            oracle: 1e-9,
        }
    }
}

pub const TOL_ENV: &str = "FERMIDQ_TOL";

impl Tolerances {
    /// `FERMIDQ_TOL` holds either one number for every tier or a list like
    /// `algebra=1e-9,oracle=1e-8`.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var(TOL_ENV) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::BadValue {
            key: TOL_ENV.into(),
            value: text.into(),
        };
        let positive = |s: &str| match s.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(bad()),
        };
        if !text.contains('=') {
            let v = positive(text)?;
            return Ok(Self {
                relation: v,
                algebra: v,
                oracle: v,
            });
        }
        let mut t = Self::default();
        for part in text.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let v = positive(v)?;
            match k.trim() {
                "relation" => t.relation = v,
                "algebra" => t.algebra = v,
                "oracle" => t.oracle = v,
                _ => return Err(ConfigError::UnknownKey(k.trim().into())),
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Coarse,
    Fine,
}

impl Grid {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "coarse" => Some(Self::Coarse),
            "fine" => Some(Self::Fine),
            _ => None,
        }
    }

    /// Coupling values in units of ħ; the coarse grid avoids zero.
    fn values(self) -> Vec<f64> {
        match self {
            Grid::Coarse => vec![-0.8, -0.45, -0.1, 0.25, 0.6],
            Grid::Fine => (0..9).map(|k| -0.85 + 0.2125 * k as f64).collect(),
        }
    }

    fn random_samples(self) -> usize {
        match self {
            Grid::Coarse => 50,
            Grid::Fine => 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub grid: Grid,
    pub tol: Tolerances,
    pub hbar: f64,
    pub omega: f64,
    /// Negative control: flips the Hodge sign inside traces.
    pub perturb_hodge: bool,
    /// Extra `(c, d)` points in units of ħ, added to the grid.
    pub extra_points: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid: Grid::Coarse,
            tol: Tolerances::default(),
            hbar: 1.0,
            omega: 1.0,
            perturb_hodge: false,
            extra_points: Vec::new(),
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub tol: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(id: &str, name: &str, worst: f64, tol: f64, detail: String) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: worst <= tol,
            worst,
            tol,
            detail,
        }
    }

    fn failed(id: &str, name: &str, tol: f64, detail: String) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: false,
            worst: f64::INFINITY,
            tol,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:<3} {:<34} worst {:.3e} (tol {:.0e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.worst,
            self.tol,
            if self.detail.is_empty() { String::new() } else { format!("  {}", self.detail) }
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub grid: Grid,
    pub tolerances: Tolerances,
    pub warnings: Vec<String>,
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn grid_points(opts: &VerifyOptions) -> Vec<(f64, f64)> {
    let vals = opts.grid.values();
    let mut pts: Vec<(f64, f64)> = vals.iter().flat_map(|&c| vals.iter().map(move |&d| (c, d))).collect();
    pts.extend(opts.extra_points.iter().copied());
    pts.into_iter().map(|(c, d)| (c * opts.hbar, d * opts.hbar)).collect()
}

fn worst_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn cx(re: f64, im: f64) -> Complex64 {
    crate::scalar::cx(re, im)
}

/// Pipelines for every grid point, in parallel.
fn pipelines(opts: &VerifyOptions) -> Result<(Vec<Pipeline>, Vec<String>), ScenarioError> {
    let built: Vec<Pipeline> = grid_points(opts)
        .par_iter()
        .map(|&(c, d)| Pipeline::build(&ScenarioConfig::new(opts.hbar, opts.omega, c, d)))
        .collect::<Result<_, _>>()?;
    let mut warnings: Vec<String> = built.iter().flat_map(|p| p.warnings.iter().cloned()).collect();
    warnings.sort();
    warnings.dedup();
    Ok((built, warnings))
}

fn star_relations(ps: &[Pipeline], tol: f64) -> CheckResult {
    let worst = worst_of(ps.iter().map(|p| {
        let (h, c, d) = (p.cfg.hbar, p.cfg.c, p.cfg.d);
        let expect = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (a, b) if a == b => h,
            (0, 1) => c,
            (2, 3) => d,
            _ => 0.0,
        };
        let alg = p.algebra();
        let mut w = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let a = p.star.bracket(&E::generator(alg, i), &E::generator(alg, j), BracketMode::Anti).unwrap();
                w = w.max(a.max_abs_diff(&E::real_scalar(alg, expect(i, j))));
            }
        }
        w
    }));
    CheckResult::new("1", "star relations", worst, tol, format!("{} (c,d) pairs", ps.len()))
}

fn hpm_algebra(ps: &[Pipeline], tol: f64) -> CheckResult {
    let worst = worst_of(ps.iter().map(|p| {
        let (hp, hm) = h_pm(p.cfg.hbar, p.cfg.c, p.cfg.d);
        let w2 = p.cfg.omega * p.cfg.omega / 4.0;
        let alg = p.algebra();
        let sq_p = p.star.star(&p.h_plus, &p.h_plus).unwrap();
        let sq_m = p.star.star(&p.h_minus, &p.h_minus).unwrap();
        let mixed = p.star.star(&p.h_plus, &p.h_minus).unwrap();
        let pointwise = &p.h_plus * &p.h_minus;
        sq_p.max_abs_diff(&E::real_scalar(alg, hp * hp * w2))
            .max(sq_m.max_abs_diff(&E::real_scalar(alg, hm * hm * w2)))
            .max(mixed.max_abs_diff(&pointwise))
    }));
    CheckResult::new("2", "H± algebra", worst, tol, String::new())
}

/// `W₊₊` from its closed form.
fn w_pp_closed(alg: &Arc<GeneratorSet>, hp: f64, hm: f64) -> E {
    let a = (hp + hm) / (4.0 * hp * hm);
    let b = (hp - hm) / (4.0 * hp * hm);
    E::from_terms(
        alg,
        [
            (Monomial(0), cx(0.25, 0.0)),
            (Monomial(0b0101), cx(0.0, -a)),
            (Monomial(0b1010), cx(0.0, -a)),
            (Monomial(0b1001), cx(0.0, b)),
            (Monomial(0b0110), cx(0.0, b)),
            (Monomial(0b1111), cx(1.0 / (hp * hm), 0.0)),
        ],
    )
}

fn spectrum_check(ps: &[Pipeline], tol: f64) -> CheckResult {
    let mut detail = String::new();
    let worst = worst_of(ps.iter().map(|p| {
        if p.resolution.len() != 4 {
            return f64::INFINITY;
        }
        let (hp, hm) = h_pm(p.cfg.hbar, p.cfg.c, p.cfg.d);
        let w = p.cfg.omega / 2.0;
        let energies = [
            (StateLabel::PlusPlus, w * (hp + hm)),
            (StateLabel::PlusMinus, w * (hp - hm)),
            (StateLabel::MinusPlus, -w * (hp - hm)),
            (StateLabel::MinusMinus, -w * (hp + hm)),
        ];
        let e = worst_of(energies.iter().map(|(l, v)| (p.energy(*l) - v).abs()));
        let wpp = p.projector(StateLabel::PlusPlus).max_abs_diff(&w_pp_closed(p.algebra(), hp, hm));
        e.max(wpp)
    }));
    if worst.is_infinite() {
        detail = "a point did not give four projectors".into();
    }
    CheckResult::new("3", "spectrum and W++ coefficients", worst, tol, detail)
}

fn projector_algebra(ps: &[Pipeline], tol: f64, conv: HodgeConvention) -> CheckResult {
    let worst = worst_of(ps.iter().map(|p| {
        let alg = p.algebra();
        let mut w = 0.0f64;
        let mut total = E::zero(alg);
        for a in StateLabel::ALL {
            let wa = p.projector(a);
            total = &total + wa;
            for b in StateLabel::ALL {
                let prod = p.star.star(wa, p.projector(b)).unwrap();
                let expect = if a == b { wa.clone() } else { E::zero(alg) };
                w = w.max(prod.max_abs_diff(&expect));
            }
            let tr = trace_with(wa, p.cfg.hbar, conv).unwrap();
            w = w.max((tr - cx(1.0, 0.0)).norm());
        }
        w.max(total.max_abs_diff(&E::one(alg)))
    }));
    let detail = if conv == HodgeConvention::Flipped {
        "Hodge sign flipped (negative control)".into()
    } else {
        "16 products, completeness, unit traces".into()
    };
    CheckResult::new("4", "projector algebra and traces", worst, tol, detail)
}

fn reduced_states(ps: &[Pipeline], tol: f64) -> CheckResult {
    let mut sign_violation = None;
    let worst = worst_of(ps.iter().map(|p| {
        let (hbar, c, d) = (p.cfg.hbar, p.cfg.c, p.cfg.d);
        let (hp, hm) = h_pm(hbar, c, d);
        let w = p.projector(StateLabel::PlusPlus);
        let mut dev = 0.0f64;
        for b in [Bipartition::first_pair(), Bipartition::second_pair()] {
            let r = partial_trace(w, &b, hbar).unwrap();
            let expect = E::from_terms(
                r.algebra(),
                [(Monomial(0), cx(0.5, 0.0)), (Monomial(0b11), cx(0.0, -(hp + hm) / (2.0 * hp * hm)))],
            );
            dev = dev.max(r.max_abs_diff(&expect));
        }
        let ps = p.spectrum(StateLabel::PlusPlus).unwrap();
        let x = hbar * (hp + hm) / (4.0 * hp * hm);
        if ps.len() != 2 {
            return f64::INFINITY;
        }
        dev = dev.max((ps[0] - (0.5 + x)).abs()).max((ps[1] - (0.5 - x)).abs());
        dev = dev.max((ps[0] + ps[1] - 1.0).abs());
        for l in StateLabel::ALL {
            let s = p.spectrum(l).unwrap();
            dev = dev.max((s.iter().sum::<f64>() - 1.0).abs());
        }
        if c != 0.0 && d != 0.0 && (ps[0] < 1.0 - tol || ps[1] > tol) {
            sign_violation = Some((c, d, ps[0], ps[1]));
        }
        dev
    }));
    match sign_violation {
        Some((c, d, p1, p2)) => CheckResult::failed(
            "5",
            "reduced states",
            tol,
            format!("p1 >= 1, p2 <= 0 violated at c={c}, d={d}: ({p1}, {p2})"),
        ),
        None => CheckResult::new("5", "reduced states", worst, tol, "partial traces, spectra, p1>=1>=0>=p2".into()),
    }
}

/// Sweep of `c = d` over 181 points in `[−0.9ħ, 0.9ħ]`.
fn equal_coupling_sweep(opts: &VerifyOptions) -> Result<Vec<(f64, f64, f64)>, ScenarioError> {
    (0..181)
        .into_par_iter()
        .map(|k| {
            let c = (-0.9 + 0.01 * k as f64) * opts.hbar;
            let p = Pipeline::build(&ScenarioConfig::new(opts.hbar, opts.omega, c, c))?;
            Ok((c, p.entanglement(StateLabel::PlusPlus)?, p.entanglement(StateLabel::PlusMinus)?))
        })
        .collect()
}

fn entropy_values(opts: &VerifyOptions, sweep: &[(f64, f64, f64)]) -> Result<CheckResult, ScenarioError> {
    let ln2 = 2f64.ln();
    let hbar = opts.hbar;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let c = (-0.85 + 0.17 * k as f64 + 0.01) * hbar;
        let p = Pipeline::build(&ScenarioConfig::new(hbar, opts.omega, c, -c))?;
        worst = worst
            .max((p.entanglement(StateLabel::PlusMinus)? - ln2).abs())
            .max((p.entanglement(StateLabel::MinusPlus)? - ln2).abs());
    }
    let p0 = Pipeline::build(&ScenarioConfig::new(hbar, opts.omega, 0.0, 0.0))?;
    worst = worst
        .max(p0.entanglement(StateLabel::PlusPlus)?.abs())
        .max((p0.entanglement(StateLabel::PlusMinus)? - ln2).abs());
    for &(c, pp, pm) in sweep {
        let cpp = ep_equal_couplings(StateLabel::PlusPlus, hbar, c).map_err(|e| ScenarioError {
            stage: "closed_form",
            message: e.to_string(),
        })?;
        let cpm = ep_equal_couplings(StateLabel::PlusMinus, hbar, c).map_err(|e| ScenarioError {
            stage: "closed_form",
            message: e.to_string(),
        })?;
        worst = worst.max((pp - cpp).abs()).max((pm - cpm).abs());
    }
    // evenness in c
    let n = sweep.len();
    for k in 0..n / 2 {
        let (a, b) = (sweep[k], sweep[n - 1 - k]);
        worst = worst.max((a.1 - b.1).abs()).max((a.2 - b.2).abs());
    }
    Ok(CheckResult::new(
        "6",
        "entropy values",
        worst,
        opts.tol.oracle,
        format!("c=-d ln2 x10, c=d=0, closed form and evenness on {n} sweep points"),
    ))
}

fn monotonicity(sweep: &[(f64, f64, f64)]) -> CheckResult {
    let mut sorted: Vec<(f64, f64, f64)> = sweep.iter().map(|&(c, a, b)| (c.abs(), a, b)).collect();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let slack = 1e-12;
    let mut worst = 0.0f64;
    let mut first = None;
    for w in sorted.windows(2) {
        let drop_pp = w[0].1 - w[1].1;
        let rise_pm = w[1].2 - w[0].2;
        for (v, what) in [(drop_pp, "E_p(W++) decreases"), (rise_pm, "E_p(W+-) increases")] {
            if v > slack {
                worst = worst.max(v);
                if first.is_none() {
                    first = Some(format!("{what} between |c| = {:.2} and {:.2}", w[0].0, w[1].0));
                }
            }
        }
    }
    let mut r = CheckResult::new("6m", "entropy monotonicity in |c|", worst, slack, first.unwrap_or_default());
    r.passed = worst == 0.0;
    r
}

fn fock_oracle(ps: &[Pipeline], opts: &VerifyOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let per_point = 200usize.div_ceil(ps.len());
    for p in ps {
        let rep = match CliffordRep::new(p.star.form()) {
            Ok(r) => r,
            Err(e) => return CheckResult::failed("7", "Fock oracle", opts.tol.oracle, e.to_string()),
        };
        for _ in 0..per_point {
            let f = crate::scenario::random_element(p.algebra(), &mut rng, None);
            let g = crate::scenario::random_element(p.algebra(), &mut rng, None);
            let m = rep.represent(&f).unwrap() * rep.represent(&g).unwrap();
            worst = worst.max(rep.symbol(&m).unwrap().max_abs_diff(&p.star.star(&f, &g).unwrap()));
            pairs += 1;
        }
        let mut energies: Vec<f64> = StateLabel::ALL.iter().map(|l| p.energy(*l)).collect();
        energies.sort_by(|a, b| b.total_cmp(a));
        let mut ev: Vec<f64> = eigenvalues(&rep.represent(&p.hamiltonian).unwrap()).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        worst = worst.max(worst_of(ev.iter().zip(&energies).map(|(a, b)| (a - b).abs())));
        let pairing = HolomorphicPairing::new(vec![(0, 1)], p.cfg.hbar).unwrap();
        for l in StateLabel::ALL {
            let red = p.reduced(l, &Bipartition::first_pair()).unwrap();
            let op = weyl_quantize(&holomorphic_transform(red.element(), &pairing).unwrap()).unwrap();
            let mut ev: Vec<f64> = eigenvalues(&op).unwrap().iter().map(|z| z.re).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let sp = state_spectrum(&red).unwrap();
            worst = worst.max(worst_of(ev.iter().zip(&sp).map(|(a, b)| (a - b).abs())));
        }
    }
    CheckResult::new(
        "7",
        "Fock oracle",
        worst,
        opts.tol.oracle,
        format!("{pairs} random pairs, reduced spectra, energies"),
    )
}

fn random_homogeneous(alg: &Arc<GeneratorSet>, rng: &mut impl Rng, parity: u32, terms: usize) -> E {
    let n = alg.len() as u32;
    let mut out = E::zero(alg);
    while out.num_terms() < terms {
        let bits = rng.gen_range(0..1u32 << n);
        if bits.count_ones() % 2 != parity {
            continue;
        }
        let t = E::monomial(alg, Monomial(bits), cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        out = &out + &t;
    }
    out
}

fn eps(f: &E) -> u32 {
    match f.parity() {
        ParityClass::Odd => 1,
        _ => 0,
    }
}

fn sgn(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Worst violation of graded antisymmetry, Leibniz and Jacobi.
pub fn bracket_property_residual(
    bracket: &dyn Fn(&E, &E) -> E,
    f: &E,
    g: &E,
    h: &E,
) -> f64 {
    let (ef, eg, eh) = (eps(f), eps(g), eps(h));
    let anti = bracket(f, g).max_abs_diff(&bracket(g, f).scale_real(-sgn(ef * eg)));
    let lhs = bracket(f, &(g * h));
    let rhs = &(&bracket(f, g) * h) + &(g * &bracket(f, h)).scale_real(sgn(ef * eg));
    let leibniz = lhs.max_abs_diff(&rhs);
    let j1 = bracket(&bracket(f, g), h);
    let j2 = bracket(&bracket(g, h), f).scale_real(sgn(ef * (eg + eh)));
    let j3 = bracket(&bracket(h, f), g).scale_real(sgn(eh * (ef + eg)));
    let jacobi = (&(&j1 + &j2) + &j3).max_abs();
    anti.max(leibniz).max(jacobi)
}

fn bracket_properties(opts: &VerifyOptions) -> CheckResult {
    let tol = opts.tol;
    let phase = GeneratorSet::phase_space(4).expect("phase space");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let n = opts.grid.random_samples();
    let big_c = 4.0 * 0.3;
    let tensor = BracketTensor::nac(&phase, big_c).unwrap();
    let constraints = ConstraintSet::second_order_fermions(&phase).unwrap();
    let dirac = DiracBracket::new(constraints.clone(), tensor.clone()).unwrap();
    let pb = |a: &E, b: &E| tensor.bracket(a, b).unwrap();
    let db = |a: &E, b: &E| dirac.bracket(a, b).unwrap();
    let mut props = 0.0f64;
    for _ in 0..n {
        let [f, g, h] = [0; 3].map(|_| {
            let p = rng.gen_range(0..2);
            random_homogeneous(&phase, &mut rng, p, 4)
        });
        props = props
            .max(bracket_property_residual(&pb, &f, &g, &h))
            .max(bracket_property_residual(&db, &f, &g, &h));
    }
    let mut drop_out = 0.0f64;
    for _ in 0..n {
        let p = rng.gen_range(0..2);
        let f = random_homogeneous(&phase, &mut rng, p, 6);
        for chi in &constraints.constraints {
            drop_out = drop_out.max(db(chi, &f).max_abs());
        }
    }
    // constraint matrix, its inverse and the quantization form per coupling
    let mut exact = 0.0f64;
    let mut first_class = String::new();
    for &x in &opts.grid.values() {
        let c = x * opts.hbar;
        let big_c = 4.0 * c / opts.hbar;
        let t = BracketTensor::nac(&phase, big_c).unwrap();
        let d = DiracBracket::new(constraints.clone(), t).unwrap();
        let cm = d.constraint_matrix();
        let q = big_c / 4.0;
        let pref = 1.0 / (1.0 - q * q);
        for a in 0..4 {
            for b in 0..4 {
                let (cv, iv) = if a == b {
                    (1.0, 1.0)
                } else if a / 2 == b / 2 {
                    (-q, q)
                } else {
                    (0.0, 0.0)
                };
                exact = exact
                    .max(cm.entry(a, b).max_abs_diff(&E::scalar(&phase, cx(0.0, cv))))
                    .max(cm.inverse_entry(a, b).max_abs_diff(&E::scalar(&phase, cx(0.0, -pref * iv))));
            }
        }
        let form = quantization_form(&d, opts.hbar).unwrap();
        let dm = d.dirac_matrix().unwrap();
        exact = exact
            .max((form.get(0, 0) - opts.hbar).abs())
            .max((form.get(0, 1) / opts.hbar - q).abs())
            .max((form.get(2, 3) / opts.hbar - q).abs())
            .max((dm[(0, 1)] / dm[(0, 0)] - cx(q, 0.0)).norm());
    }
    for big_c in [4.0, -4.0] {
        let t = BracketTensor::nac(&phase, big_c).unwrap();
        if classify_constraints(&constraints, &t).unwrap() != Classification::FirstClassPresent {
            first_class = format!("C = {big_c} not flagged first-class");
        }
    }
    let worst = (props / tol.algebra).max(drop_out / tol.algebra).max(exact / tol.relation);
    let mut r = CheckResult::new(
        "8",
        "bracket properties",
        worst,
        1.0,
        format!(
            "{n} triples: props {props:.1e}, {{chi,F}}_D {drop_out:.1e}, C/C^-1/form {exact:.1e} (relative to tier)"
        ),
    );
    if !first_class.is_empty() {
        r.passed = false;
        r.detail = first_class;
    }
    r
}

fn time_evolution(ps: &[Pipeline], tol: f64) -> CheckResult {
    let times: Vec<f64> = (0..10).map(|k| 0.37 + 1.3 * k as f64).collect();
    let mut exact_one = true;
    let worst = worst_of(ps.iter().map(|p| {
        let (hp, hm) = h_pm(p.cfg.hbar, p.cfg.c, p.cfg.d);
        let mut w = 0.0f64;
        for (h, scale) in [(&p.h_plus, hp), (&p.h_minus, hm), (&p.hamiltonian, p.cfg.hbar)] {
            let r = fourier_dirichlet(h, scale, &times, &p.star).unwrap();
            w = w.max(worst_of(r));
            if p.star.exponential(h, 0.0, scale).unwrap() != p.star.one() {
                exact_one = false;
            }
        }
        w
    }));
    let mut r = CheckResult::new("9", "time evolution", worst, tol, "10 times; H+, H-, H".into());
    if !exact_one {
        r.passed = false;
        r.detail = "Exp at t = 0 differs from 1".into();
    }
    r
}

/// Runs every criterion.
pub fn verify_suite(opts: &VerifyOptions) -> Result<VerifyReport, ScenarioError> {
    let (ps, warnings) = pipelines(opts)?;
    let tol = opts.tol;
    let conv = if opts.perturb_hodge {
        HodgeConvention::Flipped
    } else {
        HodgeConvention::Standard
    };
    let sweep = equal_coupling_sweep(opts)?;
    let results = vec![
        star_relations(&ps, tol.relation),
        hpm_algebra(&ps, tol.algebra),
        spectrum_check(&ps, tol.algebra),
        projector_algebra(&ps, tol.algebra, conv),
        reduced_states(&ps, tol.algebra),
        entropy_values(opts, &sweep)?,
        monotonicity(&sweep),
        fock_oracle(&ps, opts),
        bracket_properties(opts),
        time_evolution(&ps, tol.oracle),
    ];
    Ok(VerifyReport {
        grid: opts.grid,
        tolerances: tol,
        warnings,
        results,
    })
}
