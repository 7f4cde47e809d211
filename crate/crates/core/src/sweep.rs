//! Grid sweeps of the sink population and of the antenna figure of merit.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::kinetics;
use crate::lindblad::{self, VibronicModel, VibronicOptions};
use crate::models::ModelPreset;
use crate::network::{build_exciton_basis, redfield_rates, ExcitonNetwork};
use crate::spectral::{SpectralDensity, ThermalBathContext};
use crate::{Error, Result};

/// Values closer than this (relative to the maximum) count as tied in [`argmax`].
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    J12,
    Epsilon2,
    OmegaHBath,
    OmegaHOsc,
    Temperature,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::J12,
        SweepParameter::Epsilon2,
        SweepParameter::OmegaHBath,
        SweepParameter::OmegaHOsc,
        SweepParameter::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::J12 => "J12",
            SweepParameter::Epsilon2 => "epsilon2",
            SweepParameter::OmegaHBath => "omega_H_bath",
            SweepParameter::OmegaHOsc => "omega_H_osc",
            SweepParameter::Temperature => "temperature",
        }
    }

    /// Default range (start, stop, step).
    pub fn default_range(self) -> (f64, f64, f64) {
        match self {
            SweepParameter::J12 => (-150.0, 150.0, 5.0),
            SweepParameter::Epsilon2 => (100.0, 400.0, 5.0),
            SweepParameter::OmegaHBath | SweepParameter::OmegaHOsc => (50.0, 500.0, 5.0),
            SweepParameter::Temperature => (0.0, 300.0, 5.0),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
            Error::param("axis", format!("unknown parameter `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: SweepParameter,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParameter, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param(param.name(), "axis has no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(param.name(), "axis values must be finite"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param(param.name(), "axis values must be strictly ascending"));
        }
        Ok(Self { param, values })
    }

    /// start, start + step, ... up to and including `stop` (within 1e-9 steps).
    pub fn range(param: SweepParameter, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() || !stop.is_finite() {
            return Err(Error::param(param.name(), format!("bad range {start}:{stop}:{step}")));
        }
        if stop < start {
            return Err(Error::param(param.name(), format!("stop {stop} is below start {start}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Self::new(param, (0..=n).map(|k| start + k as f64 * step).collect())
    }

    pub fn default_for(param: SweepParameter) -> Self {
        let (a, b, s) = param.default_range();
        Self::range(param, a, b, s).expect("default ranges are valid")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Step between the first two values (0 for a single-point axis).
    pub fn step(&self) -> f64 {
        if self.values.len() > 1 { self.values[1] - self.values[0] } else { 0.0 }
    }
}

/// `name=start:stop:step`, or `name=value` for a single point.
impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| Error::param("axis", format!("`{s}` is not of the form name=start:stop:step")))?;
        let param: SweepParameter = name.trim().parse()?;
        let nums: Vec<f64> = range
            .split(':')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::param(param.name(), format!("cannot parse `{range}`: {e}")))?;
        match nums.as_slice() {
            [v] => Self::new(param, vec![*v]),
            [a, b, c] => Self::range(param, *a, *b, *c),
            _ => Err(Error::param(param.name(), format!("`{range}` must be start:stop:step"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
}

impl SweepGrid {
    pub fn one_d(axis1: Axis) -> Self {
        Self { axis1, axis2: None }
    }

    pub fn two_d(axis1: Axis, axis2: Axis) -> Result<Self> {
        if axis1.param == axis2.param {
            return Err(Error::param("axis2", format!("both axes sweep {}", axis1.param)));
        }
        Ok(Self { axis1, axis2: Some(axis2) })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.as_ref().map_or(1, Axis::len))
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter assignments of point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Vec<(SweepParameter, f64)> {
        let mut p = vec![(self.axis1.param, self.axis1.values[i])];
        if let Some(a2) = &self.axis2 {
            p.push((a2.param, a2.values[j]));
        }
        p
    }

    fn params(&self) -> impl Iterator<Item = SweepParameter> + '_ {
        std::iter::once(self.axis1.param).chain(self.axis2.as_ref().map(|a| a.param))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Redfield,
    Lindblad,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Redfield => "redfield",
            Engine::Lindblad => "lindblad",
        }
    }

    pub fn default_dt(self) -> f64 {
        match self {
            Engine::Redfield => kinetics::DEFAULT_DT,
            Engine::Lindblad => lindblad::DEFAULT_DT,
        }
    }
}

/// Oscillator settings of the vibronic engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VibronicSettings {
    pub fock_dim: usize,
    /// Γ, cm⁻¹.
    pub osc_damping: f64,
    /// ω_H of the oscillators; the bath peak when `None`.
    pub osc_freq: Option<f64>,
    /// Fixed g; ½√(λω_H) of the current oscillator frequency when `None`.
    pub coupling_g: Option<f64>,
}

impl Default for VibronicSettings {
    fn default() -> Self {
        Self { fock_dim: lindblad::DEFAULT_FOCK_DIM, osc_damping: lindblad::DEFAULT_DAMPING, osc_freq: None, coupling_g: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    pub engine: Engine,
    pub t_eval: f64,
    pub dt: f64,
    /// Concurrent grid points; the global rayon pool when `None`.
    pub jobs: Option<usize>,
    pub vibronic: VibronicSettings,
}

impl SweepConfig {
    pub fn new(engine: Engine, t_eval: f64) -> Self {
        Self { engine, t_eval, dt: engine.default_dt(), jobs: None, vibronic: VibronicSettings::default() }
    }
}

/// A model after applying one grid point.
#[derive(Clone, Debug)]
pub struct PointModel {
    pub network: ExcitonNetwork,
    pub bath: SpectralDensity,
    pub temperature: f64,
    pub osc_freq: Option<f64>,
}

pub fn apply_point(base: &ModelPreset, point: &[(SweepParameter, f64)]) -> Result<PointModel> {
    let mut m = PointModel {
        network: base.network.clone(),
        bath: base.bath.clone(),
        temperature: base.temperature_K,
        osc_freq: None,
    };
    for &(p, v) in point {
        match p {
            SweepParameter::J12 => m.network = m.network.with_coupling(0, 1, v)?,
            SweepParameter::Epsilon2 => m.network = m.network.with_site_energy(1, v)?,
            SweepParameter::OmegaHBath => m.bath = m.bath.shifted(v)?,
            SweepParameter::OmegaHOsc => {
                if !(v > 0.0) {
                    return Err(Error::param("omega_H_osc", format!("must be > 0, got {v}")));
                }
                m.osc_freq = Some(v)
            }
            SweepParameter::Temperature => {
                ThermalBathContext::new(v)?;
                m.temperature = v
            }
        }
    }
    Ok(m)
}

/// p_sink(t) from the Redfield population equations.
pub fn redfield_sink_population(network: &ExcitonNetwork, bath: &SpectralDensity, temperature: f64, t: f64, dt: f64) -> Result<f64> {
    let basis = build_exciton_basis(network)?;
    let rates = redfield_rates(&basis, bath, &ThermalBathContext::new(temperature)?);
    kinetics::sink_population_at(&rates, network.initial_site(), &basis, t, dt)
}

/// Vibronic model for a point; ω_H falls back to the settings and then to the bath peak.
pub fn vibronic_model(point: &PointModel, settings: &VibronicSettings) -> Result<VibronicModel> {
    let osc = point
        .osc_freq
        .or(settings.osc_freq)
        .or_else(|| point.bath.omega_h())
        .ok_or_else(|| Error::param("omega_H_osc", "the bath has no peak; give the oscillator frequency"))?;
    let g = match settings.coupling_g {
        Some(g) => g,
        None => {
            let lambda = point
                .bath
                .lambda()
                .ok_or_else(|| Error::param("g", "the bath has no reorganization energy; give g explicitly"))?;
            lindblad::default_coupling(lambda, osc)
        }
    };
    VibronicModel::new(point.network.clone(), osc, g, settings.osc_damping, point.temperature, settings.fock_dim)
}

/// p_sink(t_eval) at one parameter assignment.
pub fn evaluate_point(base: &ModelPreset, point: &[(SweepParameter, f64)], cfg: &SweepConfig) -> Result<f64> {
    let m = apply_point(base, point)?;
    let p = match cfg.engine {
        Engine::Redfield => redfield_sink_population(&m.network, &m.bath, m.temperature, cfg.t_eval, cfg.dt)?,
        Engine::Lindblad => {
            let model = vibronic_model(&m, &cfg.vibronic)?;
            let opts = VibronicOptions { dt: cfg.dt, record_interval: cfg.t_eval };
            lindblad::propagate_vibronic_with(&model, cfg.t_eval, &opts)?.final_sink()
        }
    };
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    SinkPopulation,
    FAntenna,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::SinkPopulation => "p_sink",
            Quantity::FAntenna => "f_antenna",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub grid: SweepGrid,
    /// Row-major over (axis1, axis2); `None` where the point failed.
    pub values: Vec<Option<f64>>,
    pub quantity: Quantity,
    /// Engine label for the CSV header: redfield, lindblad or f_antenna.
    pub engine: String,
    pub t_eval: Option<f64>,
    pub failures: Vec<PointFailure>,
}

impl Landscape {
    pub fn shape(&self) -> (usize, usize) {
        self.grid.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (_, n2) = self.shape();
        self.values[i * n2 + j]
    }

    /// Values along axis1 for a 1-D landscape (or the first column).
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.shape().0).map(|i| self.get(i, j)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let a1 = self.grid.axis1.param.name();
        let a2 = self.grid.axis2.as_ref().map_or("none", |a| a.param.name());
        let t = self.t_eval.map_or_else(|| "none".to_string(), |t| t.to_string());
        let _ = writeln!(out, "# axis1={a1}, axis2={a2}, t_eval_ps={t}, engine={}", self.engine);
        let cell = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
        match &self.grid.axis2 {
            None => {
                let _ = writeln!(out, "{a1},{}", self.quantity.name());
                for (i, x) in self.grid.axis1.values.iter().enumerate() {
                    let _ = writeln!(out, "{x},{}", cell(self.get(i, 0)));
                }
            }
            Some(axis2) => {
                let _ = write!(out, "{a1}\\{a2}");
                for y in &axis2.values {
                    let _ = write!(out, ",{y}");
                }
                out.push('\n');
                for (i, x) in self.grid.axis1.values.iter().enumerate() {
                    let _ = write!(out, "{x}");
                    for j in 0..axis2.len() {
                        let _ = write!(out, ",{}", cell(self.get(i, j)));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::param("jobs", "must be ≥ 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param("jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn check_axes(grid: &SweepGrid, engine: Engine) -> Result<()> {
    for p in grid.params() {
        match (engine, p) {
            (Engine::Redfield, SweepParameter::OmegaHOsc) => {
                return Err(Error::param("axis", "omega_H_osc only applies to the lindblad engine; use omega_H_bath"))
            }
            (Engine::Lindblad, SweepParameter::OmegaHBath) => {
                return Err(Error::param("axis", "the lindblad engine sweeps the oscillators; use omega_H_osc"))
            }
            _ => {}
        }
    }
    Ok(())
}

fn collect(grid: &SweepGrid, results: Vec<Result<f64>>) -> (Vec<Option<f64>>, Vec<PointFailure>) {
    let (_, n2) = grid.shape();
    let mut failures = Vec::new();
    let values = results
        .into_iter()
        .enumerate()
        .map(|(k, r)| match r {
            Ok(v) => Some(v),
            Err(e) => {
                failures.push(PointFailure { i: k / n2, j: k % n2, message: e.to_string() });
                None
            }
        })
        .collect();
    (values, failures)
}

/// One simulation per grid point; points run concurrently, output keeps grid order.
pub fn run_sweep(base: &ModelPreset, grid: &SweepGrid, cfg: &SweepConfig) -> Result<Landscape> {
    check_axes(grid, cfg.engine)?;
    if !(cfg.t_eval > 0.0) {
        return Err(Error::param("t_eval", format!("must be > 0, got {}", cfg.t_eval)));
    }
    let (_, n2) = grid.shape();
    let results: Vec<Result<f64>> = with_pool(cfg.jobs, || {
        (0..grid.len())
            .into_par_iter()
            .map(|k| evaluate_point(base, &grid.point(k / n2, k % n2), cfg))
            .collect()
    })?;
    let (values, failures) = collect(grid, results);
    Ok(Landscape {
        grid: grid.clone(),
        values,
        quantity: Quantity::SinkPopulation,
        engine: cfg.engine.name().into(),
        t_eval: Some(cfg.t_eval),
        failures,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArgMax {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub value: f64,
    /// Every grid point tied with the maximum, including the reported one.
    pub ties: Vec<(f64, Option<f64>)>,
}

/// Grid maximizer; ties go to the smallest axis1 value, then the smallest axis2 value.
pub fn argmax(landscape: &Landscape) -> Result<ArgMax> {
    let (n1, n2) = landscape.shape();
    let best = landscape.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::EmptyLandscape);
    }
    let tol = TIE_TOL * best.abs().max(f64::MIN_POSITIVE);
    let coords = |i: usize, j: usize| {
        (landscape.grid.axis1.values[i], landscape.grid.axis2.as_ref().map(|a| a.values[j]))
    };
    let mut ties = Vec::new();
    let mut value = best;
    for i in 0..n1 {
        for j in 0..n2 {
            if let Some(v) = landscape.get(i, j) {
                if best - v <= tol {
                    if ties.is_empty() {
                        value = v;
                    }
                    ties.push(coords(i, j));
                }
            }
        }
    }
    let (axis1, axis2) = ties[0];
    Ok(ArgMax { axis1, axis2, value, ties })
}

/// The three exciton levels entering F_antenna, E_plus ≥ E_minus ≥ E_G, and ω_H.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FomInputs {
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_g: f64,
    pub omega_h: f64,
}

impl FomInputs {
    /// Three sites: the exciton levels in order. Larger networks: the distinct
    /// excitons of largest weight on sites 1, 2 and 3, then ordered.
    pub fn from_network(network: &ExcitonNetwork, omega_h: f64) -> Result<Self> {
        let n = network.n_sites();
        if n < 3 {
            return Err(Error::param("network", format!("F_antenna needs at least three sites, got {n}")));
        }
        let basis = build_exciton_basis(network)?;
        let mut levels: Vec<f64> = if n == 3 {
            basis.energies.clone()
        } else {
            let mut used: Vec<usize> = Vec::with_capacity(3);
            for site in 0..3 {
                let pick = (0..n)
                    .filter(|k| !used.contains(k))
                    .max_by(|&a, &b| basis.weight(site, a).total_cmp(&basis.weight(site, b)).then(b.cmp(&a)))
                    .expect("n > 3 leaves a free exciton");
                used.push(pick);
            }
            used.into_iter().map(|k| basis.energies[k]).collect()
        };
        levels.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { e_plus: levels[0], e_minus: levels[1], e_g: levels[2], omega_h })
    }
}

/// max{ −|ω_H − |E+ − E−|| − |ω_H − |E− − E_G||, −½|2ω_H − |E+ − E_G|| }.
pub fn f_antenna(inp: &FomInputs) -> f64 {
    let w = inp.omega_h;
    let ladder = -(w - (inp.e_plus - inp.e_minus).abs()).abs() - (w - (inp.e_minus - inp.e_g).abs()).abs();
    let overtone = -0.5 * (2.0 * w - (inp.e_plus - inp.e_g).abs()).abs();
    ladder.max(overtone)
}

/// F_antenna at every grid point. An `omega_H_bath`/`omega_H_osc` axis overrides `omega_h`.
pub fn f_antenna_map(base: &ModelPreset, grid: &SweepGrid, omega_h: f64) -> Result<Landscape> {
    let (_, n2) = grid.shape();
    let results: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let point = grid.point(k / n2, k % n2);
            let m = apply_point(base, &point)?;
            let w = point
                .iter()
                .find(|(p, _)| matches!(p, SweepParameter::OmegaHBath | SweepParameter::OmegaHOsc))
                .map_or(omega_h, |&(_, v)| v);
            Ok(f_antenna(&FomInputs::from_network(&m.network, w)?))
        })
        .collect();
    let (values, failures) = collect(grid, results);
    Ok(Landscape {
        grid: grid.clone(),
        values,
        quantity: Quantity::FAntenna,
        engine: "f_antenna".into(),
        t_eval: None,
        failures,
    })
}
