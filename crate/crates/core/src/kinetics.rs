//! Population master equation for exciton populations draining into a sink.
//!
//! dρ_mm/dt = Σ_{n≠m} W_mn ρ_nn − (Σ_{n≠m} W_nm + Γ_{e_m→0}) ρ_mm
//! dρ_00/dt = Σ_n Γ_{e_n→0} ρ_nn
//!
//! Only populations are evolved: the initial site excitation is projected onto
//! exciton populations |C^α_n|² and its exciton coherences are discarded, which
//! is the secular-model limitation of this propagator.

use std::fmt::Write as _;

use crate::network::{ExcitonBasis, RateSystem};
use crate::ode::Rk4;
use crate::units::WAVENUMBER_TO_ANGULAR_PS;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;

/// Populations more negative than this abort the propagation.
pub const NEGATIVE_TOL: f64 = -1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState {
    pub time: f64,
    pub exciton_pops: Vec<f64>,
    pub sink_pop: f64,
}

impl PopulationState {
    pub fn total(&self) -> f64 {
        self.exciton_pops.iter().sum::<f64>() + self.sink_pop
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeTrace {
    pub states: Vec<PopulationState>,
}

impl TimeTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.time)
    }

    pub fn last(&self) -> Option<&PopulationState> {
        self.states.last()
    }

    pub fn final_sink(&self) -> f64 {
        self.last().map_or(0.0, |s| s.sink_pop)
    }

    /// `time_ps,p_e1,...,p_eN,p_sink` followed by one row per sample.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.exciton_pops.len());
        let mut out = String::from("time_ps");
        for k in 1..=n {
            let _ = write!(out, ",p_e{k}");
        }
        out.push_str(",p_sink\n");
        for s in &self.states {
            let _ = write!(out, "{}", s.time);
            for p in &s.exciton_pops {
                let _ = write!(out, ",{p}");
            }
            let _ = writeln!(out, ",{}", s.sink_pop);
        }
        out
    }
}

/// Generator of the linear population equations in ps⁻¹, laid out as a dense
/// (N+1)×(N+1) matrix with the sink as the last component.
pub fn generator_matrix(rates: &RateSystem) -> Vec<Vec<f64>> {
    let n = rates.dim();
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for m in 0..n {
        for k in 0..n {
            if m != k {
                let w = rates.rate(m, k) * WAVENUMBER_TO_ANGULAR_PS;
                a[m][k] += w;
                a[k][k] -= w;
            }
        }
        let g = rates.sink_exciton_rates[m];
        a[m][m] -= g;
        a[n][m] += g;
    }
    a
}

/// Integrates the population equations from a selective excitation of
/// `initial_site`, recording every `dt` (plus a final shorter step when
/// `t_final` is not a multiple of `dt`).
pub fn propagate(
    rates: &RateSystem,
    initial_site: usize,
    basis: &ExcitonBasis,
    t_final: f64,
    dt: f64,
) -> Result<TimeTrace> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::param("t_final", format!("must be ≥ 0, got {t_final}")));
    }
    if initial_site >= basis.dim() {
        return Err(Error::param("initial_site", format!("site {} out of range", initial_site + 1)));
    }
    if rates.dim() != basis.dim() {
        return Err(Error::DimensionMismatch("rate system and basis sizes differ".into()));
    }

    let n = rates.dim();
    let a = generator_matrix(rates);
    let mut y = basis.site_populations(initial_site);
    y.push(0.0);

    let record = |t: f64, y: &[f64]| PopulationState { time: t, exciton_pops: y[..n].to_vec(), sink_pop: y[n] };

    let full_steps = (t_final / dt + 1e-9).floor() as usize;
    let remainder = t_final - full_steps as f64 * dt;
    let mut trace = TimeTrace { states: Vec::with_capacity(full_steps + 2) };
    trace.states.push(record(0.0, &y));

    let mut rk = Rk4::new(&y);
    let f = |s: &Vec<f64>, out: &mut Vec<f64>| {
        for (row, o) in a.iter().zip(out.iter_mut()) {
            *o = row.iter().zip(s).map(|(c, v)| c * v).sum();
        }
    };

    let check = |t: f64, y: &[f64], h: f64| -> Result<()> {
        if let Some(&v) = y.iter().find(|&&v| v < NEGATIVE_TOL || !v.is_finite()) {
            return Err(Error::IntegrationInstability { time: t, value: v, dt: h });
        }
        Ok(())
    };

    for step in 1..=full_steps {
        rk.step(f, &mut y, dt);
        let t = step as f64 * dt;
        check(t, &y, dt)?;
        trace.states.push(record(t, &y));
    }
    if remainder > 1e-12 * dt {
        rk.step(f, &mut y, remainder);
        check(t_final, &y, dt)?;
        trace.states.push(record(t_final, &y));
    }
    Ok(trace)
}

/// p_sink(t) = ρ_00(t).
pub fn sink_population_at(rates: &RateSystem, initial_site: usize, basis: &ExcitonBasis, t: f64, dt: f64) -> Result<f64> {
    Ok(propagate(rates, initial_site, basis, t, dt)?.final_sink())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_exciton_basis, redfield_rates, ExcitonNetwork};
    use crate::spectral::{LorentzianBath, SpectralDensity, ThermalBathContext};

    fn preset_rates(temperature: f64) -> (ExcitonNetwork, ExcitonBasis, RateSystem) {
        let net = ExcitonNetwork::new(
            vec![300.0, 300.0, 0.0],
            vec![vec![0.0, 100.0, 0.0], vec![100.0, 0.0, 30.0], vec![0.0, 30.0, 0.0]],
            2,
            1.0,
            0,
        )
        .unwrap();
        let basis = build_exciton_basis(&net).unwrap();
        let bath = SpectralDensity::from(LorentzianBath::new(200.0, 60.0, 35.0).unwrap());
        let rates = redfield_rates(&basis, &bath, &ThermalBathContext::new(temperature).unwrap());
        (net, basis, rates)
    }

    #[test]
    fn frozen_when_nothing_moves() {
        let (net, basis, _) = preset_rates(4.0);
        let rates = RateSystem::from_parts(vec![vec![0.0; 3]; 3], vec![0.0; 3], basis.energies.clone()).unwrap();
        let tr = propagate(&rates, net.initial_site(), &basis, 1.0, 0.01).unwrap();
        let first = &tr.states[0];
        for s in &tr.states {
            assert_eq!(s.exciton_pops, first.exciton_pops);
            assert_eq!(s.sink_pop, 0.0);
        }
    }

    #[test]
    fn two_level_decay() {
        let net = ExcitonNetwork::new(vec![0.0, 100.0], vec![vec![0.0; 2]; 2], 0, 0.0, 1).unwrap();
        let basis = build_exciton_basis(&net).unwrap();
        let w = 5.0; // cm⁻¹
        let rates = RateSystem::from_parts(vec![vec![0.0, w], vec![0.0, 0.0]], vec![0.0, 0.0], basis.energies.clone()).unwrap();
        let tr = propagate(&rates, 1, &basis, 2.0, 1e-3).unwrap();
        let k = w * WAVENUMBER_TO_ANGULAR_PS;
        for s in &tr.states {
            assert!((s.exciton_pops[1] - (-k * s.time).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn conservation_and_monotone_sink() {
        let (net, basis, rates) = preset_rates(77.0);
        let tr = propagate(&rates, net.initial_site(), &basis, 2.0, 1e-3).unwrap();
        let mut last = 0.0;
        for s in &tr.states {
            assert!((s.total() - 1.0).abs() < 1e-9);
            assert!(s.sink_pop >= last - 1e-12);
            last = s.sink_pop;
        }
    }

    #[test]
    fn sink_edge_cases() {
        let (net, basis, rates) = preset_rates(4.0);
        assert_eq!(sink_population_at(&rates, net.initial_site(), &basis, 0.0, 1e-3).unwrap(), 0.0);
        assert!(sink_population_at(&rates, net.initial_site(), &basis, 50.0, 1e-3).unwrap() > 0.99);

        let closed = net.with_sink_rate(0.0).unwrap();
        let b2 = build_exciton_basis(&closed).unwrap();
        let bath = SpectralDensity::from(LorentzianBath::new(200.0, 60.0, 35.0).unwrap());
        let r2 = redfield_rates(&b2, &bath, &ThermalBathContext::new(4.0).unwrap());
        assert_eq!(sink_population_at(&r2, 0, &b2, 5.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn partial_final_step() {
        let (net, basis, rates) = preset_rates(4.0);
        let tr = propagate(&rates, net.initial_site(), &basis, 0.0105, 1e-3).unwrap();
        assert_eq!(tr.states.len(), 12);
        assert_eq!(tr.last().unwrap().time, 0.0105);
    }

    #[test]
    fn instability_is_reported() {
        let net = ExcitonNetwork::new(vec![0.0, 100.0], vec![vec![0.0; 2]; 2], 0, 0.0, 1).unwrap();
        let basis = build_exciton_basis(&net).unwrap();
        let rates = RateSystem::from_parts(vec![vec![0.0, 1e5], vec![0.0, 0.0]], vec![0.0, 0.0], basis.energies.clone()).unwrap();
        match propagate(&rates, 1, &basis, 1.0, 0.1) {
            Err(Error::IntegrationInstability { .. }) => {}
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_step() {
        let (net, basis, rates) = preset_rates(4.0);
        assert!(propagate(&rates, net.initial_site(), &basis, 1.0, 0.0).is_err());
        assert!(propagate(&rates, net.initial_site(), &basis, -1.0, 0.1).is_err());
    }

    #[test]
    fn csv_layout() {
        let (net, basis, rates) = preset_rates(4.0);
        let csv = propagate(&rates, net.initial_site(), &basis, 0.002, 1e-3).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time_ps,p_e1,p_e2,p_e3,p_sink");
        assert_eq!(lines.len(), 4);
        let row: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[0], 0.001);
    }
}
