//! End-to-end two-oscillator pipeline, JSON reports and parameter sweeps.
//!
//! Phase space `th1..th4, pi1..pi4` with the deformed Poisson tensor
//! (`C = 4c/ħ`) and second-class constraints `χ_α = π_α + (i/2)θ_α`. The
//! star form comes from the Dirac bracket when `c = d` and is built directly
//! from `(ħ, c, d)` otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brackets::{
    classify_constraints, quantization_form, BracketTensor, Classification, ConstraintSet, DiracBracket,
};
use crate::expr::{evaluate, parse_expression, Params};
use crate::fock::{holomorphic_transform, weyl_quantize, CliffordRep, HolomorphicPairing};
use crate::grassmann::{GeneratorSet, GrassmannElement, Monomial};
use crate::spectral::{eigenvalues, star_genvalue_solve, SolveOptions, SpectralResolution};
use crate::star::{StarProduct, SymmetricForm};
use crate::states::{
    closed_form_ep, closed_form_p, entropy_abs, h_pm, partial_trace, renyi_entropy, state_spectrum, trace,
    Bipartition, StateLabel, WignerState,
};
use crate::Complex64;

type E = GrassmannElement<f64>;

/// Hamiltonian of the two oscillators and its two commuting halves.
pub const HAMILTONIAN: &str = "-i*omega*th1*th3 - i*omega*th2*th4";
pub const H_PLUS: &str = "-0.5*i*omega*(th1*th3 + th2*th4 + th1*th4 + th2*th3)";
pub const H_MINUS: &str = "-0.5*i*omega*(th1*th3 + th2*th4 - th1*th4 - th2*th3)";

/// Couplings above this fraction of ħ are accepted with a warning.
pub const WARN_FRACTION: f64 = 0.9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error("JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

fn default_one() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_one")]
    pub hbar: f64,
    #[serde(default = "default_one")]
    pub omega: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renyi_alpha: Option<f64>,
    /// Seed of the random oracle pairs in the Fock check.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            omega: 1.0,
            c: 0.0,
            d: 0.0,
            renyi_alpha: None,
            seed: default_seed(),
            out: None,
        }
    }
}

impl ScenarioConfig {
    pub fn new(hbar: f64, omega: f64, c: f64, d: f64) -> Self {
        Self {
            hbar,
            omega,
            c,
            d,
            ..Self::default()
        }
    }

    /// Checks the domain and returns warnings for couplings near `ħ`.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        for (k, v) in [("hbar", self.hbar), ("omega", self.omega), ("c", self.c), ("d", self.d)] {
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!("{k} must be finite")));
            }
        }
        if self.hbar <= 0.0 {
            return Err(ConfigError::Invalid("hbar must be positive".into()));
        }
        if self.omega <= 0.0 {
            return Err(ConfigError::Invalid("omega must be positive".into()));
        }
        if self.c.abs() >= self.hbar || self.d.abs() >= self.hbar {
            return Err(ConfigError::Invalid(format!(
                "need |c|, |d| < hbar (hbar = {}, c = {}, d = {})",
                self.hbar, self.c, self.d
            )));
        }
        if let Some(a) = self.renyi_alpha {
            if !(a > 0.0) || a == 1.0 {
                return Err(ConfigError::Invalid("renyi_alpha must be positive and not 1".into()));
            }
        }
        let mut warnings = Vec::new();
        for (k, v) in [("c", self.c), ("d", self.d)] {
            if v.abs() > WARN_FRACTION * self.hbar {
                warnings.push(format!(
                    "|{k}| = {} exceeds {WARN_FRACTION} hbar; results rely on |c|, |d| << hbar",
                    v.abs()
                ));
            }
        }
        Ok(warnings)
    }

    /// Reads JSON (if the text starts with `{`) or `key = value` lines.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: n + 1,
                message: "expected key = value".into(),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        };
        let num = || value.parse::<f64>().map_err(|_| bad());
        match key {
            "hbar" => self.hbar = num()?,
            "omega" => self.omega = num()?,
            "c" => self.c = num()?,
            "d" => self.d = num()?,
            "renyi_alpha" => self.renyi_alpha = Some(num()?),
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "out" => self.out = Some(value.to_string()),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn params(&self) -> Params<f64> {
        Params {
            hbar: self.hbar,
            omega: self.omega,
            c: self.c,
            d: self.d,
        }
    }
}

/// Failure of one pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}`: {}", self.stage, self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn stage<Err: fmt::Display>(name: &'static str) -> impl FnOnce(Err) -> ScenarioError {
    move |e| ScenarioError {
        stage: name,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSource {
    /// Normalized Dirac matrix (`c = d`).
    Dirac,
    /// Built directly from `(ħ, c, d)`.
    Direct,
}

/// Everything computed for one parameter point.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cfg: ScenarioConfig,
    pub warnings: Vec<String>,
    pub phase: Arc<GeneratorSet>,
    pub dirac: DiracBracket<f64>,
    pub classification: Classification,
    pub form_source: FormSource,
    pub star: StarProduct<f64>,
    pub hamiltonian: E,
    pub h_plus: E,
    pub h_minus: E,
    pub resolution: SpectralResolution<f64>,
}

impl Pipeline {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let warnings = cfg.validate().map_err(stage("config"))?;
        let phase = GeneratorSet::phase_space(4).map_err(stage("phase_space"))?;
        let big_c = 4.0 * cfg.c / cfg.hbar;
        let tensor = BracketTensor::nac(&phase, big_c).map_err(stage("phase_space"))?;
        let constraints = ConstraintSet::second_order_fermions(&phase).map_err(stage("constraints"))?;
        let classification = classify_constraints(&constraints, &tensor).map_err(stage("constraints"))?;
        let dirac = DiracBracket::new(constraints, tensor).map_err(stage("dirac"))?;
        let reduced = dirac.reduced_algebra().map_err(stage("dirac"))?;
        let (form, form_source) = if cfg.c == cfg.d {
            let f = quantization_form(&dirac, cfg.hbar).map_err(stage("quantization"))?;
            (f, FormSource::Dirac)
        } else {
            let f = SymmetricForm::nac(&reduced, cfg.hbar, cfg.c, cfg.d).map_err(stage("quantization"))?;
            (f, FormSource::Direct)
        };
        let star = StarProduct::new(form);
        let params = cfg.params();
        let on_phase = |text: &str| -> Result<E, ScenarioError> {
            let ast = parse_expression(text).map_err(stage("hamiltonian"))?;
            let v = evaluate(&ast, &phase, &params, None).map_err(stage("hamiltonian"))?;
            dirac.reduce(&v, &reduced).map_err(stage("hamiltonian"))
        };
        let hamiltonian = on_phase(HAMILTONIAN)?;
        let h_plus = on_phase(H_PLUS)?;
        let h_minus = on_phase(H_MINUS)?;
        let resolution = star_genvalue_solve(&[h_plus.clone(), h_minus.clone()], &star, &SolveOptions::default())
            .map_err(stage("spectral"))?;
        if resolution.len() != 4 {
            return Err(ScenarioError {
                stage: "spectral",
                message: format!("expected four joint projectors, found {}", resolution.len()),
            });
        }
        Ok(Self {
            cfg: cfg.clone(),
            warnings,
            phase,
            dirac,
            classification,
            form_source,
            star,
            hamiltonian,
            h_plus,
            h_minus,
            resolution,
        })
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        self.star.algebra()
    }

    pub fn projector(&self, label: StateLabel) -> &E {
        &self.resolution.get(label.as_str()).expect("four labels").projector
    }

    pub fn energy(&self, label: StateLabel) -> f64 {
        self.resolution.get(label.as_str()).expect("four labels").eigenvalue.re
    }

    pub fn state(&self, label: StateLabel) -> Result<WignerState<f64>, ScenarioError> {
        WignerState::new(self.projector(label).clone(), self.star.clone(), self.cfg.hbar).map_err(stage("states"))
    }

    pub fn reduced(&self, label: StateLabel, b: &Bipartition) -> Result<WignerState<f64>, ScenarioError> {
        self.state(label)?.reduce(b).map_err(stage("states"))
    }

    /// Spectrum of the state reduced to `(θ1, θ3)`.
    pub fn spectrum(&self, label: StateLabel) -> Result<Vec<f64>, ScenarioError> {
        state_spectrum(&self.reduced(label, &Bipartition::first_pair())?).map_err(stage("states"))
    }

    pub fn entanglement(&self, label: StateLabel) -> Result<f64, ScenarioError> {
        Ok(entropy_abs(&self.spectrum(label)?))
    }
}

/// `[generator numbers (1-based), re, im]` per monomial.
pub type Terms = Vec<(Vec<usize>, f64, f64)>;

pub fn terms_of(e: &E) -> Terms {
    e.terms().map(|(m, c)| (m.indices().map(|i| i + 1).collect(), c.re, c.im)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyEntry {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entropies {
    pub ep_pp: f64,
    pub ep_mm: f64,
    pub ep_pm: f64,
    pub ep_mp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FockCheck {
    pub max_residual: f64,
    /// Weyl-quantized reduced states against the star spectra.
    pub reduced_spectra: f64,
    /// Eigenvalues of the represented Hamiltonian against the energies.
    pub energies: f64,
    /// Represented `W_ij` against rank-one projectors.
    pub projectors: f64,
    /// Matrix products read back as symbols against star products.
    pub star_products: f64,
    pub random_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketCheck {
    pub classification: String,
    pub smallest_singular_value: f64,
    pub constraint_inverse_residual: f64,
    pub dirac_ratio: f64,
    pub expected_ratio: f64,
    pub form_source: FormSource,
    /// `max |{χ_α, H}_D|`.
    pub constraint_brackets: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenyiEntry {
    pub alpha: f64,
    /// `S_α` of each reduced state; `null` where undefined.
    pub values: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
    pub energies: Vec<EnergyEntry>,
    pub wigner: BTreeMap<String, Terms>,
    pub reduced: BTreeMap<String, BTreeMap<String, Terms>>,
    pub spectra: BTreeMap<String, Vec<f64>>,
    pub entropies: Entropies,
    pub closed_form: Entropies,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renyi: Option<RenyiEntry>,
    pub fock_check: FockCheck,
    pub bracket_check: BracketCheck,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn entropies(f: impl Fn(StateLabel) -> Result<f64, ScenarioError>) -> Result<Entropies, ScenarioError> {
    Ok(Entropies {
        ep_pp: f(StateLabel::PlusPlus)?,
        ep_mm: f(StateLabel::MinusMinus)?,
        ep_pm: f(StateLabel::PlusMinus)?,
        ep_mp: f(StateLabel::MinusPlus)?,
    })
}

fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
    v.sort_by(|a, b| b.re.total_cmp(&a.re));
    v.into_iter().map(|z| z.re).collect()
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Random element of the given parity class mix on `alg`.
pub fn random_element(alg: &Arc<GeneratorSet>, rng: &mut impl Rng, parity: Option<u32>) -> E {
    let terms = (0..alg.dim() as u32).filter_map(|bits| {
        let m = Monomial(bits);
        match parity {
            Some(p) if m.grade() % 2 != p => None,
            _ => Some((m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
        }
    });
    E::from_terms(alg, terms)
}

const ORACLE_PAIRS: usize = 20;

fn fock_check(p: &Pipeline) -> Result<FockCheck, ScenarioError> {
    let hbar = p.cfg.hbar;
    let mut reduced = 0.0f64;
    for label in StateLabel::ALL {
        let red = p.reduced(label, &Bipartition::first_pair())?;
        let pairing = HolomorphicPairing::new(vec![(0, 1)], hbar).map_err(stage("fock"))?;
        let holo = holomorphic_transform(red.element(), &pairing).map_err(stage("fock"))?;
        let op = weyl_quantize(&holo).map_err(stage("fock"))?;
        let ev = sorted_re(eigenvalues(&op).map_err(stage("fock"))?);
        reduced = reduced.max(max_dev(&ev, &p.spectrum(label)?));
    }
    let rep = CliffordRep::new(p.star.form()).map_err(stage("fock"))?;
    let theta_h = rep.represent(&p.hamiltonian).map_err(stage("fock"))?;
    let ev = sorted_re(eigenvalues(&theta_h).map_err(stage("fock"))?);
    let mut energies: Vec<f64> = StateLabel::ALL.iter().map(|l| p.energy(*l)).collect();
    energies.sort_by(|a, b| b.total_cmp(a));
    let energy_dev = max_dev(&ev, &energies);
    let mut projectors = 0.0f64;
    for label in StateLabel::ALL {
        let m = rep.represent(p.projector(label)).map_err(stage("fock"))?;
        let idem = (&m * &m - &m).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let tr = (m.trace() - Complex64::new(1.0, 0.0)).norm();
        projectors = projectors.max(idem).max(tr);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.cfg.seed);
    let mut star_dev = 0.0f64;
    for _ in 0..ORACLE_PAIRS {
        let f = random_element(p.algebra(), &mut rng, None);
        let g = random_element(p.algebra(), &mut rng, None);
        let mat = rep.represent(&f).map_err(stage("fock"))? * rep.represent(&g).map_err(stage("fock"))?;
        let sym = rep.symbol(&mat).map_err(stage("fock"))?;
        let direct = p.star.star(&f, &g).map_err(stage("fock"))?;
        star_dev = star_dev.max(sym.max_abs_diff(&direct));
    }
    Ok(FockCheck {
        max_residual: reduced.max(energy_dev).max(projectors).max(star_dev),
        reduced_spectra: reduced,
        energies: energy_dev,
        projectors,
        star_products: star_dev,
        random_pairs: ORACLE_PAIRS,
    })
}

fn bracket_check(p: &Pipeline) -> Result<BracketCheck, ScenarioError> {
    let dm = p.dirac.dirac_matrix().map_err(stage("dirac"))?;
    let ratio = dm[(0, 1)] / dm[(0, 0)];
    let full_h = parse_expression(HAMILTONIAN)
        .map_err(stage("hamiltonian"))
        .and_then(|a| evaluate(&a, &p.phase, &p.cfg.params(), None).map_err(stage("hamiltonian")))?;
    let mut worst = 0.0f64;
    for chi in &p.dirac.constraints().constraints {
        let b = p.dirac.bracket(chi, &full_h).map_err(stage("dirac"))?;
        worst = worst.max(b.max_abs());
    }
    let cm = p.dirac.constraint_matrix();
    Ok(BracketCheck {
        classification: match p.classification {
            Classification::SecondClass => "second_class".into(),
            Classification::FirstClassPresent => "first_class_present".into(),
        },
        smallest_singular_value: cm.smallest_singular_value(),
        constraint_inverse_residual: cm.inverse_residual(),
        dirac_ratio: ratio.re,
        expected_ratio: p.cfg.c / p.cfg.hbar,
        form_source: p.form_source,
        constraint_brackets: worst,
    })
}

/// Runs the full pipeline and assembles the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let p = Pipeline::build(cfg)?;
    let labels = StateLabel::ALL;
    let energies = labels
        .iter()
        .map(|l| EnergyEntry {
            label: l.as_str().into(),
            value: p.energy(*l),
        })
        .collect();
    let wigner = labels
        .iter()
        .map(|l| (l.as_str().to_string(), terms_of(p.projector(*l))))
        .collect();
    let mut reduced = BTreeMap::new();
    let mut spectra = BTreeMap::new();
    for l in labels {
        let mut parts = BTreeMap::new();
        for b in [Bipartition::first_pair(), Bipartition::second_pair()] {
            let r = partial_trace(p.projector(l), &b, cfg.hbar).map_err(stage("states"))?;
            let key = b.keep().iter().map(|&i| p.algebra().name(i)).collect::<Vec<_>>().join(",");
            parts.insert(key, terms_of(&r));
        }
        reduced.insert(l.as_str().to_string(), parts);
        spectra.insert(l.as_str().to_string(), p.spectrum(l)?);
    }
    let ents = entropies(|l| Ok(entropy_abs(&spectra[l.as_str()])))?;
    let closed = entropies(|l| closed_form_ep(l, cfg.hbar, cfg.c, cfg.d).map_err(stage("states")))?;
    let renyi = match cfg.renyi_alpha {
        Some(alpha) => {
            let mut values = BTreeMap::new();
            for l in labels {
                let red = p.reduced(l, &Bipartition::first_pair())?;
                values.insert(l.as_str().to_string(), renyi_entropy(&red, alpha).ok());
            }
            Some(RenyiEntry { alpha, values })
        }
        None => None,
    };
    for l in labels {
        let tr = trace(p.projector(l), cfg.hbar).map_err(stage("states"))?;
        if (tr.re - 1.0).abs() > 1e-8 {
            return Err(ScenarioError {
                stage: "states",
                message: format!("Tr(W{}) = {tr}", l.as_str()),
            });
        }
    }
    Ok(ScenarioReport {
        config: cfg.clone(),
        warnings: p.warnings.clone(),
        energies,
        wigner,
        reduced,
        spectra,
        entropies: ents,
        closed_form: closed,
        renyi,
        fock_check: fock_check(&p)?,
        bracket_check: bracket_check(&p)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// `d = c`.
    Equal,
    /// `d = −c`.
    Opposite,
    /// Only `c` moves; `d` keeps its configured value.
    FreeC,
    /// Only `d` moves.
    FreeD,
}

impl Link {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.replace(' ', "").as_str() {
            "c=d" | "d=c" => Self::Equal,
            "c=-d" | "d=-c" => Self::Opposite,
            "c" => Self::FreeC,
            "d" => Self::FreeD,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    EpPP,
    EpMM,
    EpPM,
    EpMP,
    Energies,
    P1,
    P2,
}

impl Quantity {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim() {
            "ep_pp" => Self::EpPP,
            "ep_mm" => Self::EpMM,
            "ep_pm" => Self::EpPM,
            "ep_mp" => Self::EpMP,
            "energies" => Self::Energies,
            "p1" => Self::P1,
            "p2" => Self::P2,
            _ => return None,
        })
    }

    fn columns(self) -> Vec<&'static str> {
        match self {
            Self::EpPP => vec!["ep_pp"],
            Self::EpMM => vec!["ep_mm"],
            Self::EpPM => vec!["ep_pm"],
            Self::EpMP => vec!["ep_mp"],
            Self::Energies => vec!["e_pp", "e_pm", "e_mp", "e_mm"],
            Self::P1 => vec!["p1"],
            Self::P2 => vec!["p2"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub link: Link,
    /// Range of the swept coupling in units of ħ.
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub quantities: Vec<Quantity>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.quantities.is_empty() {
            return Err(ConfigError::Invalid("no quantities requested".into()));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(ConfigError::Invalid("range must be finite".into()));
        }
        let single = self.steps == 1 && self.from == self.to;
        if !single && (self.steps < 2 || self.from >= self.to) {
            return Err(ConfigError::Invalid(
                "need from < to and steps >= 2 (or steps = 1 with from = to)".into(),
            ));
        }
        if self.from.abs() >= 1.0 || self.to.abs() >= 1.0 {
            return Err(ConfigError::Invalid("sweep range must lie inside (-1, 1) in units of hbar".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let n = self.steps - 1;
        (0..self.steps)
            .map(|k| {
                if k == n {
                    self.to
                } else {
                    self.from + (self.to - self.from) * k as f64 / n as f64
                }
            })
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["c_over_hbar".to_string(), "c".into(), "d".into()];
        for q in &self.quantities {
            for col in q.columns() {
                h.push(col.into());
                h.push(format!("{col}_closed"));
                h.push(format!("{col}_residual"));
            }
        }
        h.push("max_residual".into());
        h
    }
}

/// One computed sweep row: `(c/ħ, c, d, [(pipeline, closed form)…])`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub x: f64,
    pub c: f64,
    pub d: f64,
    pub values: Vec<(f64, f64)>,
}

impl SweepRow {
    pub fn max_residual(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

fn sweep_point(spec: &SweepSpec, base: &ScenarioConfig, x: f64) -> Result<SweepRow, ScenarioError> {
    let mut cfg = base.clone();
    let v = x * base.hbar;
    match spec.link {
        Link::Equal => (cfg.c, cfg.d) = (v, v),
        Link::Opposite => (cfg.c, cfg.d) = (v, -v),
        Link::FreeC => cfg.c = v,
        Link::FreeD => cfg.d = v,
    }
    let p = Pipeline::build(&cfg)?;
    let (hbar, c, d) = (cfg.hbar, cfg.c, cfg.d);
    let (hp, hm) = h_pm(hbar, c, d);
    let mut values = Vec::new();
    for q in &spec.quantities {
        match q {
            Quantity::EpPP | Quantity::EpMM | Quantity::EpPM | Quantity::EpMP => {
                let label = match q {
                    Quantity::EpPP => StateLabel::PlusPlus,
                    Quantity::EpMM => StateLabel::MinusMinus,
                    Quantity::EpPM => StateLabel::PlusMinus,
                    _ => StateLabel::MinusPlus,
                };
                let closed = closed_form_ep(label, hbar, c, d).map_err(stage("closed_form"))?;
                values.push((p.entanglement(label)?, closed));
            }
            Quantity::Energies => {
                let w = cfg.omega / 2.0;
                for (label, sp, sm) in [
                    (StateLabel::PlusPlus, 1.0, 1.0),
                    (StateLabel::PlusMinus, 1.0, -1.0),
                    (StateLabel::MinusPlus, -1.0, 1.0),
                    (StateLabel::MinusMinus, -1.0, -1.0),
                ] {
                    values.push((p.energy(label), w * (sp * hp + sm * hm)));
                }
            }
            Quantity::P1 | Quantity::P2 => {
                let ps = p.spectrum(StateLabel::PlusPlus)?;
                let (p1, p2) = closed_form_p(StateLabel::PlusPlus, hbar, c, d).map_err(stage("closed_form"))?;
                let idx = usize::from(*q == Quantity::P2);
                values.push((ps[idx], if idx == 0 { p1 } else { p2 }));
            }
        }
    }
    Ok(SweepRow { x, c, d, values })
}

/// Evaluates every sweep point through the full pipeline, in parallel.
pub fn sweep_rows(spec: &SweepSpec, base: &ScenarioConfig) -> Result<Vec<SweepRow>, ScenarioError> {
    spec.validate().map_err(stage("config"))?;
    spec.points().par_iter().map(|&x| sweep_point(spec, base, x)).collect()
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// CSV with 12 significant digits per value.
pub fn run_sweep(spec: &SweepSpec, base: &ScenarioConfig) -> Result<String, ScenarioError> {
    let rows = sweep_rows(spec, base)?;
    let mut out = spec.header().join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![num(r.x), num(r.c), num(r.d)];
        for (a, b) in &r.values {
            cells.extend([num(*a), num(*b), num((a - b).abs())]);
        }
        cells.push(num(r.max_residual()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_formats() {
        let kv = ScenarioConfig::parse("# comment\nhbar = 2\nomega=0.5\nc = 0.3 # inline\nd=-0.1\n").unwrap();
        assert_eq!(kv, ScenarioConfig { hbar: 2.0, omega: 0.5, c: 0.3, d: -0.1, ..Default::default() });
        let js = ScenarioConfig::parse(r#"{"hbar": 2, "omega": 0.5, "c": 0.3, "d": -0.1}"#).unwrap();
        assert_eq!(js, kv);
        assert!(matches!(ScenarioConfig::parse("x = 1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ScenarioConfig::parse("c 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("c = one"), Err(ConfigError::BadValue { .. })));
        assert!(ScenarioConfig::parse(r#"{"hbar": 1, "bogus": 2}"#).is_err());
    }

    #[test]
    fn domain_checks() {
        assert!(ScenarioConfig::new(1.0, 1.0, 1.0, 0.0).validate().is_err());
        assert!(ScenarioConfig::new(0.0, 1.0, 0.0, 0.0).validate().is_err());
        assert!(ScenarioConfig::new(1.0, -1.0, 0.0, 0.0).validate().is_err());
        assert!(ScenarioConfig::new(1.0, 1.0, 0.2, 0.2).validate().unwrap().is_empty());
        assert_eq!(ScenarioConfig::new(1.0, 1.0, 0.95, 0.2).validate().unwrap().len(), 1);
        let err = run_scenario(&ScenarioConfig::new(1.0, 1.0, 1.5, 0.0)).unwrap_err();
        assert_eq!(err.stage, "config");
    }

    #[test]
    fn commutative_point() {
        let r = run_scenario(&ScenarioConfig::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        let e: Vec<f64> = r.energies.iter().map(|e| e.value).collect();
        for (got, want) in e.iter().zip([1.0, 0.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-10, "{e:?}");
        }
        assert!(r.entropies.ep_pp.abs() < 1e-10);
        assert!((r.entropies.ep_pm - 2f64.ln()).abs() < 1e-10);
        assert!(r.fock_check.max_residual < 1e-9, "{:?}", r.fock_check);
        assert_eq!(r.bracket_check.form_source, FormSource::Dirac);
    }

    #[test]
    fn equal_couplings_point() {
        let r = run_scenario(&ScenarioConfig::new(1.0, 1.0, 0.5, 0.5)).unwrap();
        assert!((r.entropies.ep_pp - 0.11878).abs() < 5e-6);
        assert!((r.spectra["++"][0] - 7.0 / 6.0).abs() < 1e-10);
        assert!((r.bracket_check.dirac_ratio - r.bracket_check.expected_ratio).abs() < 1e-12);
        assert!(r.bracket_check.constraint_brackets < 1e-12);
        assert!(r.fock_check.max_residual < 1e-9, "{:?}", r.fock_check);
    }

    #[test]
    fn opposite_couplings_point() {
        let r = run_scenario(&ScenarioConfig::new(1.0, 1.0, 0.3, -0.3)).unwrap();
        assert_eq!(r.bracket_check.form_source, FormSource::Direct);
        assert!((r.entropies.ep_pm - 2f64.ln()).abs() < 1e-10);
        assert!((r.entropies.ep_mp - 2f64.ln()).abs() < 1e-10);
        let e: BTreeMap<_, _> = r.energies.iter().map(|e| (e.label.clone(), e.value)).collect();
        assert!(e["+-"].abs() < 1e-10 && e["-+"].abs() < 1e-10);
    }

    #[test]
    fn report_is_deterministic() {
        let mut cfg = ScenarioConfig::new(1.0, 1.3, 0.2, 0.4);
        cfg.renyi_alpha = Some(2.0);
        let a = run_scenario(&cfg).unwrap().to_json();
        let b = run_scenario(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        for key in ["config", "energies", "wigner", "reduced", "spectra", "entropies", "fock_check", "bracket_check"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["fock_check"]["max_residual"].is_number());
    }

    #[test]
    fn sweep_csv() {
        let spec = SweepSpec {
            link: Link::Equal,
            from: -0.5,
            to: 0.5,
            steps: 5,
            quantities: vec![Quantity::EpPP, Quantity::EpPM, Quantity::Energies, Quantity::P1, Quantity::P2],
        };
        let csv = run_sweep(&spec, &ScenarioConfig::default()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header[0], "c_over_hbar");
        assert_eq!(*header.last().unwrap(), "max_residual");
        for row in &lines[1..] {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells.len(), header.len());
            assert!(cells[0].contains('e'));
            let max: f64 = cells.last().unwrap().parse().unwrap();
            assert!(max < 1e-9, "{row}");
        }
        assert!(lines[3].starts_with("0.00000000000e0,"));
    }

    #[test]
    fn sweep_validation() {
        let mut spec = SweepSpec {
            link: Link::Equal,
            from: 0.5,
            to: -0.5,
            steps: 5,
            quantities: vec![Quantity::EpPP],
        };
        assert!(spec.validate().is_err());
        spec.from = -1.0;
        spec.to = 0.5;
        assert!(spec.validate().is_err());
        spec.from = 0.0;
        spec.to = 0.0;
        spec.steps = 1;
        assert!(spec.validate().is_ok());
        let rows = sweep_rows(&spec, &ScenarioConfig::default()).unwrap();
        let r = run_scenario(&ScenarioConfig::default()).unwrap();
        assert!((rows[0].values[0].0 - r.entropies.ep_pp).abs() < 1e-12);
        assert_eq!(Link::parse("c=-d"), Some(Link::Opposite));
        assert_eq!(Quantity::parse("ep_pm"), Some(Quantity::EpPM));
        assert_eq!(Quantity::parse("nope"), None);
    }
}
