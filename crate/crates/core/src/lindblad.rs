//! Vibronic model: every site is linearly coupled to its own damped harmonic
//! oscillator, and the full (electronic ⊗ Fock) density matrix is propagated
//! with Lindblad damping of the oscillators and an explicit sink level.
//!
//! Basis ordering: electronic level `e` (0 is the sink, `s + 1` is site `s`)
//! is the slow index, followed by the Fock occupations of the oscillators of
//! sites 0..n, site 0 being the most significant digit.
//!
//! dρ/dt = −i[H, ρ] + Σ_s Γ(n̄+1) D[a_s]ρ + Γ n̄ D[a_s†]ρ + Γ_sink D[|0⟩⟨k|]ρ
//!
//! with H = H_S + Σ_s ω_H a_s†a_s + Σ_s g (a_s + a_s†)|s⟩⟨s|.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::matrix::{ComplexMatrix, HermitianMatrix};
use crate::network::ExcitonNetwork;
use crate::ode::Rk4;
use crate::spectral::ThermalBathContext;
use crate::units::{thermal_energy, WAVENUMBER_TO_ANGULAR_PS};
use crate::{Error, Result};

/// Largest supported vibronic Hilbert-space dimension.
pub const MAX_VIBRONIC_DIM: usize = 4000;
pub const MAX_SITES: usize = 3;
pub const DEFAULT_FOCK_DIM: usize = 5;
pub const DEFAULT_DT: f64 = 2e-4;
pub const DEFAULT_DAMPING: f64 = 60.0;
/// Propagation aborts once |Tr ρ − 1| exceeds this.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
const SYMMETRIZE_EVERY: usize = 100;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct VibronicModel {
    pub network: ExcitonNetwork,
    /// ω_H, cm⁻¹.
    pub osc_freq: f64,
    /// g, cm⁻¹.
    pub coupling_g: f64,
    /// Γ, cm⁻¹.
    pub osc_damping: f64,
    /// K.
    pub temperature: f64,
    pub fock_dim: usize,
}

/// g = ½√(λω_H).
pub fn default_coupling(lambda: f64, omega_h: f64) -> f64 {
    0.5 * (lambda * omega_h).sqrt()
}

impl VibronicModel {
    pub fn new(
        network: ExcitonNetwork,
        osc_freq: f64,
        coupling_g: f64,
        osc_damping: f64,
        temperature: f64,
        fock_dim: usize,
    ) -> Result<Self> {
        let m = Self { network, osc_freq, coupling_g, osc_damping, temperature, fock_dim };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if !(self.osc_freq > 0.0) || !self.osc_freq.is_finite() {
            return Err(Error::param("omega_H_osc", format!("must be > 0, got {}", self.osc_freq)));
        }
        if !(self.coupling_g >= 0.0) || !self.coupling_g.is_finite() {
            return Err(Error::param("g", format!("must be ≥ 0, got {}", self.coupling_g)));
        }
        if !(self.osc_damping >= 0.0) || !self.osc_damping.is_finite() {
            return Err(Error::param("osc_damping", format!("must be ≥ 0, got {}", self.osc_damping)));
        }
        ThermalBathContext::new(self.temperature)?;
        if self.fock_dim < 2 {
            return Err(Error::param("fock_dim", format!("must be ≥ 2, got {}", self.fock_dim)));
        }
        let n = self.network.n_sites();
        if n > MAX_SITES {
            return Err(Error::DimensionTooLarge {
                dim: self.dim_unchecked().unwrap_or(usize::MAX),
                limit: MAX_VIBRONIC_DIM,
                detail: format!("the vibronic model supports at most {MAX_SITES} sites, network has {n}"),
            });
        }
        match self.dim_unchecked() {
            Some(dim) if dim <= MAX_VIBRONIC_DIM => Ok(()),
            dim => Err(Error::DimensionTooLarge {
                dim: dim.unwrap_or(usize::MAX),
                limit: MAX_VIBRONIC_DIM,
                detail: format!("({n} sites + sink) x {}^{n} Fock states", self.fock_dim),
            }),
        }
    }

    fn dim_unchecked(&self) -> Option<usize> {
        let n = self.network.n_sites() as u32;
        self.fock_dim.checked_pow(n)?.checked_mul(self.network.n_sites() + 1)
    }

    /// d^n.
    pub fn fock_space_dim(&self) -> usize {
        self.fock_dim.pow(self.network.n_sites() as u32)
    }

    /// (n + 1)·d^n.
    pub fn dim(&self) -> usize {
        (self.network.n_sites() + 1) * self.fock_space_dim()
    }

    /// Mean thermal occupation of an oscillator.
    pub fn mean_occupation(&self) -> f64 {
        ThermalBathContext::new(self.temperature).map(|c| c.occupation(self.osc_freq)).unwrap_or(0.0)
    }
}

/// Index bookkeeping shared by the Hamiltonian, the dissipators and the generator.
#[derive(Clone, Debug)]
struct Layout {
    n_sites: usize,
    d: usize,
    block: usize,
    dim: usize,
    /// stride of oscillator s inside a Fock block
    strides: Vec<usize>,
    /// occupation of oscillator s for Fock index f: occ[f * n_sites + s]
    occ: Vec<usize>,
    total: Vec<usize>,
}

impl Layout {
    fn new(model: &VibronicModel) -> Self {
        let n = model.network.n_sites();
        let d = model.fock_dim;
        let block = d.pow(n as u32);
        let strides: Vec<usize> = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
        let mut occ = vec![0; block * n];
        let mut total = vec![0; block];
        for f in 0..block {
            for s in 0..n {
                let k = (f / strides[s]) % d;
                occ[f * n + s] = k;
                total[f] += k;
            }
        }
        Self { n_sites: n, d, block, dim: (n + 1) * block, strides, occ, total }
    }

    #[inline]
    fn occ(&self, row: usize, s: usize) -> usize {
        self.occ[(row % self.block) * self.n_sites + s]
    }

    #[inline]
    fn level(&self, row: usize) -> usize {
        row / self.block
    }

    /// Electronic Hamiltonian on {sink, sites}, cm⁻¹.
    fn electronic(&self, net: &ExcitonNetwork) -> Vec<Vec<f64>> {
        let n = self.n_sites;
        let mut h = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            h[i + 1][i + 1] = net.site_energies()[i];
            for j in 0..n {
                if i != j {
                    h[i + 1][j + 1] = net.coupling(i, j);
                }
            }
        }
        h
    }

    /// Sparse rows of H: (row, [(column, value)]) in cm⁻¹, diagonal first.
    fn hamiltonian_rows(&self, model: &VibronicModel) -> Vec<Vec<(usize, f64)>> {
        let h_el = self.electronic(&model.network);
        let g = model.coupling_g;
        (0..self.dim)
            .map(|r| {
                let e = self.level(r);
                let f = r % self.block;
                let mut row = vec![(r, h_el[e][e] + model.osc_freq * self.total[f] as f64)];
                for (e2, &v) in h_el[e].iter().enumerate() {
                    if e2 != e && v != 0.0 {
                        row.push((e2 * self.block + f, v));
                    }
                }
                if e >= 1 && g != 0.0 {
                    let s = e - 1;
                    let k = self.occ(r, s);
                    let st = self.strides[s];
                    if k + 1 < self.d {
                        row.push((r + st, g * ((k + 1) as f64).sqrt()));
                    }
                    if k > 0 {
                        row.push((r - st, g * (k as f64).sqrt()));
                    }
                }
                row
            })
            .collect()
    }
}

/// H = H_S ⊗ I + Σ ω_H a_s†a_s + Σ g(a_s + a_s†)|s⟩⟨s|, in cm⁻¹. The sink level
/// has zero electronic energy and no vibronic coupling.
pub fn build_vibronic_hamiltonian(model: &VibronicModel) -> Result<HermitianMatrix> {
    model.validate()?;
    let layout = Layout::new(model);
    let mut h = ComplexMatrix::zeros(layout.dim, layout.dim);
    for (r, row) in layout.hamiltonian_rows(model).into_iter().enumerate() {
        for (c, v) in row {
            h[(r, c)] += C64::new(v, 0.0);
        }
    }
    HermitianMatrix::new(h)
}

fn check_state(model: &VibronicModel, rho: &ComplexMatrix) -> Result<Layout> {
    model.validate()?;
    let layout = Layout::new(model);
    if rho.rows() != layout.dim || rho.cols() != layout.dim {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, model needs {}x{}",
            rho.rows(),
            rho.cols(),
            layout.dim,
            layout.dim
        )));
    }
    Ok(layout)
}

/// Oscillator damping towards the thermal state, in ps⁻¹:
/// Σ_s Γ(n̄+1)D[a_s]ρ + Γn̄ D[a_s†]ρ, D[L]ρ = LρL† − ½{L†L, ρ}.
pub fn dissipator_thermal(model: &VibronicModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lay = check_state(model, rho)?;
    let nbar = model.mean_occupation();
    let down = model.osc_damping * WAVENUMBER_TO_ANGULAR_PS * (nbar + 1.0);
    let up = model.osc_damping * WAVENUMBER_TO_ANGULAR_PS * nbar;
    let n = lay.dim;
    let d = lay.d;

    // ½ Σ_s (down·a†a + up·aa†) is diagonal
    let half_k: Vec<f64> = (0..n)
        .map(|r| {
            0.5 * (0..lay.n_sites)
                .map(|s| {
                    let k = lay.occ(r, s);
                    let aad = if k + 1 < d { (k + 1) as f64 } else { 0.0 };
                    down * k as f64 + up * aad
                })
                .sum::<f64>()
        })
        .collect();

    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut v = -rho[(r, c)] * (half_k[r] + half_k[c]);
            for s in 0..lay.n_sites {
                let st = lay.strides[s];
                let (kr, kc) = (lay.occ(r, s), lay.occ(c, s));
                if kr + 1 < d && kc + 1 < d {
                    v += rho[(r + st, c + st)] * (down * (((kr + 1) * (kc + 1)) as f64).sqrt());
                }
                if kr > 0 && kc > 0 && up != 0.0 {
                    v += rho[(r - st, c - st)] * (up * ((kr * kc) as f64).sqrt());
                }
            }
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Γ_sink·D[|0⟩⟨k| ⊗ I_osc]ρ for the sink-attached site k, in ps⁻¹.
pub fn dissipator_sink(model: &VibronicModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lay = check_state(model, rho)?;
    let gamma = model.network.sink_rate();
    let k = model.network.sink_site() + 1;
    let n = lay.dim;
    let b = lay.block;
    let mut out = ComplexMatrix::zeros(n, n);
    let in_k = |r: usize| r / b == k;
    for r in 0..n {
        for c in 0..n {
            let mut v = ZERO;
            let proj = in_k(r) as u8 as f64 + in_k(c) as u8 as f64;
            if proj != 0.0 {
                v -= rho[(r, c)] * (0.5 * gamma * proj);
            }
            if r < b && c < b {
                v += rho[(k * b + r, k * b + c)] * gamma;
            }
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Full right-hand side of the vibronic master equation in ps⁻¹, applied
/// matrix-free with one fused pass per output row.
///
/// Sink–site coherence blocks are never generated from a state in which they
/// vanish (nothing couples the sink coherently to the sites), so they are
/// skipped and left untouched in `out`.
pub struct VibronicGenerator {
    lay: Layout,
    /// −i h_r − ½K_r, with K = Σ L†L diagonal, rad/ps
    row_diag: Vec<C64>,
    /// +i h_c − ½K_c
    col_diag: Vec<C64>,
    /// electronic couplings between levels, rad/ps
    h_el: Vec<Vec<f64>>,
    /// g, rad/ps
    g: f64,
    down: f64,
    up: f64,
    sink_gamma: f64,
    sink_level: usize,
    /// √(k_s + 1) for k_s < d − 1 else 0, per oscillator, indexed by full row
    raise_fac: Vec<Vec<f64>>,
    /// √k_s, per oscillator, indexed by full row
    lower_fac: Vec<Vec<f64>>,
}

/// `acc += (i·v)·z`
#[inline(always)]
fn add_i(acc: &mut C64, v: f64, z: C64) {
    acc.re -= v * z.im;
    acc.im += v * z.re;
}

impl VibronicGenerator {
    pub fn new(model: &VibronicModel) -> Result<Self> {
        model.validate()?;
        let lay = Layout::new(model);
        let conv = WAVENUMBER_TO_ANGULAR_PS;
        let nbar = model.mean_occupation();
        let down = model.osc_damping * conv * (nbar + 1.0);
        let up = model.osc_damping * conv * nbar;
        let sink_gamma = model.network.sink_rate();
        let sink_level = model.network.sink_site() + 1;
        let d = lay.d;

        let h_el: Vec<Vec<f64>> =
            lay.electronic(&model.network).into_iter().map(|row| row.into_iter().map(|v| v * conv).collect()).collect();
        let mut row_diag = Vec::with_capacity(lay.dim);
        let mut col_diag = Vec::with_capacity(lay.dim);
        for r in 0..lay.dim {
            let mut loss = 0.0;
            for s in 0..lay.n_sites {
                let k = lay.occ(r, s);
                loss += down * k as f64;
                if k + 1 < d {
                    loss += up * (k + 1) as f64;
                }
            }
            if lay.level(r) == sink_level {
                loss += sink_gamma;
            }
            let e = lay.level(r);
            let h = h_el[e][e] + model.osc_freq * conv * lay.total[r % lay.block] as f64;
            row_diag.push(C64::new(-0.5 * loss, -h));
            col_diag.push(C64::new(-0.5 * loss, h));
        }
        let raise_fac = (0..lay.n_sites)
            .map(|s| {
                (0..lay.dim)
                    .map(|r| {
                        let k = lay.occ(r, s);
                        if k + 1 < d { ((k + 1) as f64).sqrt() } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let lower_fac = (0..lay.n_sites)
            .map(|s| (0..lay.dim).map(|r| (lay.occ(r, s) as f64).sqrt()).collect())
            .collect();
        Ok(Self {
            lay,
            row_diag,
            col_diag,
            h_el,
            g: model.coupling_g * conv,
            down,
            up,
            sink_gamma,
            sink_level,
            raise_fac,
            lower_fac,
        })
    }

    pub fn dim(&self) -> usize {
        self.lay.dim
    }

    /// Writes dρ/dt into `out`. Entries of `out` in the sink–site coherence
    /// blocks are left untouched; `rho` must vanish there.
    pub fn apply(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix) {
        let n = self.lay.dim;
        let b = self.lay.block;
        let levels = self.lay.n_sites + 1;
        let rho_s = rho.as_slice();
        let o = out.as_mut_slice();

        for r in 0..n {
            let e_r = r / b;
            let (c0, c1) = if e_r == 0 { (0, b) } else { (b, n) };
            let row_r = &rho_s[r * n..(r + 1) * n];
            let orow = &mut o[r * n..(r + 1) * n];

            // diagonal parts of −i[H, ρ] and the anticommutators
            let a = self.row_diag[r];
            for c in c0..c1 {
                orow[c] = row_r[c] * (a + self.col_diag[c]);
            }

            if e_r > 0 {
                // +i ρH: off-diagonal H gathered within row r
                for e in 1..levels {
                    for e2 in 1..levels {
                        let v = self.h_el[e][e2];
                        if e2 == e || v == 0.0 {
                            continue;
                        }
                        let (dst, src) = (&mut orow[e * b..(e + 1) * b], &row_r[e2 * b..(e2 + 1) * b]);
                        for (x, &z) in dst.iter_mut().zip(src) {
                            add_i(x, v, z);
                        }
                    }
                }
                if self.g != 0.0 {
                    for s in 0..self.lay.n_sites {
                        let st = self.lay.strides[s];
                        let base = (s + 1) * b;
                        let raise = &self.raise_fac[s][base..base + b - st];
                        let dst = &mut orow[base..base + b - st];
                        for ((x, &z), &f) in dst.iter_mut().zip(&row_r[base + st..base + b]).zip(raise) {
                            add_i(x, self.g * f, z);
                        }
                        let lower = &self.lower_fac[s][base + st..base + b];
                        let dst = &mut orow[base + st..base + b];
                        for ((x, &z), &f) in dst.iter_mut().zip(&row_r[base..base + b - st]).zip(lower) {
                            add_i(x, self.g * f, z);
                        }
                    }
                }

                // −i Hρ: off-diagonal H as combinations of other rows
                let f_r = r % b;
                for e2 in 1..levels {
                    let v = self.h_el[e_r][e2];
                    if e2 == e_r || v == 0.0 {
                        continue;
                    }
                    let src = (e2 * b + f_r) * n;
                    for (x, &z) in orow[c0..c1].iter_mut().zip(&rho_s[src + c0..src + c1]) {
                        add_i(x, -v, z);
                    }
                }
                if self.g != 0.0 {
                    let s = e_r - 1;
                    let st = self.lay.strides[s];
                    let fr = self.raise_fac[s][r];
                    if fr != 0.0 {
                        let src = (r + st) * n;
                        for (x, &z) in orow[c0..c1].iter_mut().zip(&rho_s[src + c0..src + c1]) {
                            add_i(x, -self.g * fr, z);
                        }
                    }
                    let fl = self.lower_fac[s][r];
                    if fl != 0.0 {
                        let src = (r - st) * n;
                        for (x, &z) in orow[c0..c1].iter_mut().zip(&rho_s[src + c0..src + c1]) {
                            add_i(x, -self.g * fl, z);
                        }
                    }
                }
            }

            // jump terms a ρ a† and a† ρ a
            for s in 0..self.lay.n_sites {
                let st = self.lay.strides[s];
                let raise = &self.raise_fac[s];
                let lower = &self.lower_fac[s];
                let fr = raise[r];
                if fr != 0.0 {
                    let coef = self.down * fr;
                    let src = (r + st) * n;
                    let prow = &rho_s[src + c0 + st..src + c1];
                    for ((x, &z), &fc) in orow[c0..c1 - st].iter_mut().zip(prow).zip(&raise[c0..c1 - st]) {
                        *x += z * (coef * fc);
                    }
                }
                let fl = lower[r];
                if fl != 0.0 && self.up != 0.0 {
                    let coef = self.up * fl;
                    let src = (r - st) * n;
                    let prow = &rho_s[src + c0..src + c1 - st];
                    for ((x, &z), &fc) in orow[c0 + st..c1].iter_mut().zip(prow).zip(&lower[c0 + st..c1]) {
                        *x += z * (coef * fc);
                    }
                }
            }

            // sink jump |0⟩⟨k| ρ |k⟩⟨0|
            if e_r == 0 && self.sink_gamma != 0.0 {
                let k0 = self.sink_level * b;
                let src = (k0 + r) * n + k0;
                for (x, &z) in orow[..b].iter_mut().zip(&rho_s[src..src + b]) {
                    *x += z * self.sink_gamma;
                }
            }
        }
    }
}

/// Density matrix on the vibronic space at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct VibronicState {
    pub rho: ComplexMatrix,
    pub time: f64,
}

impl VibronicState {
    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }
}

/// Population of each electronic level (sink first), traced over the oscillators.
pub fn electronic_populations(model: &VibronicModel, rho: &ComplexMatrix) -> Vec<f64> {
    let b = model.fock_space_dim();
    let levels = model.network.n_sites() + 1;
    (0..levels).map(|e| (0..b).map(|f| rho[(e * b + f, e * b + f)].re).sum()).collect()
}

/// |α⟩⟨α| ⊗ thermal oscillators (truncated to the Fock cutoff).
pub fn thermal_initial_state(model: &VibronicModel) -> Result<VibronicState> {
    model.validate()?;
    let lay = Layout::new(model);
    let d = lay.d;
    let probs: Vec<f64> = if model.temperature == 0.0 {
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        p
    } else {
        let kt = thermal_energy(model.temperature);
        let w: Vec<f64> = (0..d).map(|k| (-(k as f64) * model.osc_freq / kt).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let mut rho = ComplexMatrix::zeros(lay.dim, lay.dim);
    let e = model.network.initial_site() + 1;
    for f in 0..lay.block {
        let p: f64 = (0..lay.n_sites).map(|s| probs[lay.occ[f * lay.n_sites + s]]).product();
        let r = e * lay.block + f;
        rho[(r, r)] = C64::new(p, 0.0);
    }
    Ok(VibronicState { rho, time: 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VibronicOptions {
    pub dt: f64,
    /// Sampling interval of the recorded trace, ps (rounded to a multiple of dt).
    pub record_interval: f64,
}

impl Default for VibronicOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, record_interval: 0.01 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VibronicTrace {
    pub times: Vec<f64>,
    pub p_sink: Vec<f64>,
    /// reduced populations per site, one vector per sample
    pub site_pops: Vec<Vec<f64>>,
    pub traces: Vec<f64>,
    /// largest |Tr ρ − 1| seen at any step
    pub max_trace_drift: f64,
    /// largest |ρ − ρ†| seen right before a re-symmetrisation
    pub max_hermiticity_error: f64,
}

impl VibronicTrace {
    pub fn final_sink(&self) -> f64 {
        self.p_sink.last().copied().unwrap_or(0.0)
    }

    /// `time_ps,p_site1,...,p_siteN,p_sink`.
    pub fn to_csv(&self) -> String {
        let n = self.site_pops.first().map_or(0, Vec::len);
        let mut out = String::from("time_ps");
        for k in 1..=n {
            let _ = write!(out, ",p_site{k}");
        }
        out.push_str(",p_sink\n");
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for p in &self.site_pops[i] {
                let _ = write!(out, ",{p}");
            }
            let _ = writeln!(out, ",{}", self.p_sink[i]);
        }
        out
    }
}

pub fn propagate_vibronic(model: &VibronicModel, t_final: f64, dt: f64) -> Result<VibronicTrace> {
    propagate_vibronic_with(model, t_final, &VibronicOptions { dt, ..VibronicOptions::default() })
}

/// RK4 propagation from [`thermal_initial_state`], recording p_sink(t) = ⟨0|Tr_osc ρ|0⟩.
pub fn propagate_vibronic_with(model: &VibronicModel, t_final: f64, opts: &VibronicOptions) -> Result<VibronicTrace> {
    let dt = opts.dt;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::param("t_final", format!("must be ≥ 0, got {t_final}")));
    }
    let mut state = thermal_initial_state(model)?;
    let gen = VibronicGenerator::new(model)?;
    let mut rk = Rk4::new(&state.rho);

    let full_steps = (t_final / dt + 1e-9).floor() as usize;
    let remainder = t_final - full_steps as f64 * dt;
    let every = ((opts.record_interval / dt).round() as usize).max(1);

    let mut trace = VibronicTrace::default();
    let record = |trace: &mut VibronicTrace, t: f64, rho: &ComplexMatrix| {
        let pops = electronic_populations(model, rho);
        trace.times.push(t);
        trace.p_sink.push(pops[0]);
        trace.traces.push(pops.iter().sum());
        trace.site_pops.push(pops[1..].to_vec());
    };
    record(&mut trace, 0.0, &state.rho);

    let mut step_once = |rho: &mut ComplexMatrix, h: f64, t: f64, trace: &mut VibronicTrace, step: usize| -> Result<()> {
        rk.step(|y, out| gen.apply(y, out), rho, h);
        if step % SYMMETRIZE_EVERY == 0 {
            trace.max_hermiticity_error = trace.max_hermiticity_error.max(rho.max_asymmetry());
            rho.hermitize();
        }
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        if !(drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::TraceDrift { time: t, trace: tr, dt });
        }
        trace.max_trace_drift = trace.max_trace_drift.max(drift);
        Ok(())
    };

    for step in 1..=full_steps {
        let t = step as f64 * dt;
        step_once(&mut state.rho, dt, t, &mut trace, step)?;
        if step % every == 0 || (step == full_steps && remainder <= 1e-12 * dt) {
            record(&mut trace, t, &state.rho);
        }
    }
    if remainder > 1e-12 * dt {
        step_once(&mut state.rho, remainder, t_final, &mut trace, full_steps + 1)?;
        record(&mut trace, t_final, &state.rho);
    }
    Ok(trace)
}
