//! Excitonic networks, their exciton basis and secular Redfield rates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::eigh;
use crate::matrix::HermitianMatrix;
use crate::spectral::{SpectralDensity, ThermalBathContext};
use crate::{Error, Result};

/// Largest tolerated |J_ij − J_ji| (cm⁻¹) before a coupling matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Exciton pairs closer than this (cm⁻¹) are treated as degenerate and get no rate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Site energies, couplings and the sink attachment of a single-excitation network.
///
/// In the JSON form site indices are 1-based (`"sink_site": 3` is the third site);
/// in Rust they are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitonNetwork {
    epsilon: Vec<f64>,
    #[serde(rename = "J")]
    couplings: Vec<Vec<f64>>,
    #[serde(with = "one_based")]
    sink_site: usize,
    #[serde(rename = "sink_rate_per_ps")]
    sink_rate: f64,
    #[serde(with = "one_based")]
    initial_site: usize,
}

mod one_based {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(de::Error::custom("site labels start at 1"));
        }
        Ok(v as usize - 1)
    }
}

impl ExcitonNetwork {
    /// `sink_rate` is in ps⁻¹, everything else in cm⁻¹; site indices are 0-based.
    pub fn new(
        epsilon: Vec<f64>,
        couplings: Vec<Vec<f64>>,
        sink_site: usize,
        sink_rate: f64,
        initial_site: usize,
    ) -> Result<Self> {
        let mut net = Self { epsilon, couplings, sink_site, sink_rate, initial_site };
        net.validate()?;
        net.symmetrize();
        Ok(net)
    }

    /// Checks every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        let n = self.epsilon.len();
        if n == 0 {
            return Err(Error::model("epsilon", "network needs at least one site"));
        }
        for (i, e) in self.epsilon.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::model(format!("epsilon[{i}]"), "not finite"));
            }
        }
        if self.couplings.len() != n {
            return Err(Error::model("J", format!("expected {n} rows, got {}", self.couplings.len())));
        }
        for (i, row) in self.couplings.iter().enumerate() {
            if row.len() != n {
                return Err(Error::model(format!("J[{i}]"), format!("expected {n} entries, got {}", row.len())));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::model(format!("J[{i}][{j}]"), "not finite"));
                }
            }
        }
        for i in 0..n {
            if self.couplings[i][i].abs() > SYMMETRY_TOL {
                return Err(Error::model(
                    format!("J[{i}][{i}]"),
                    format!("diagonal must be zero (site energies go in epsilon), got {}", self.couplings[i][i]),
                ));
            }
            for j in (i + 1)..n {
                let (a, b) = (self.couplings[i][j], self.couplings[j][i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::model(
                        format!("J[{i}][{j}]"),
                        format!("coupling matrix is not symmetric: J[{i}][{j}] = {a} but J[{j}][{i}] = {b}"),
                    ));
                }
            }
        }
        if self.sink_site >= n {
            return Err(Error::model("sink_site", format!("site {} does not exist (network has {n} sites)", self.sink_site + 1)));
        }
        if self.initial_site >= n {
            return Err(Error::model(
                "initial_site",
                format!("site {} does not exist (network has {n} sites)", self.initial_site + 1),
            ));
        }
        if !(self.sink_rate >= 0.0) || !self.sink_rate.is_finite() {
            return Err(Error::model("sink_rate_per_ps", format!("must be finite and ≥ 0, got {}", self.sink_rate)));
        }
        Ok(())
    }

    /// Makes J exactly symmetric with an exactly zero diagonal.
    pub(crate) fn symmetrize(&mut self) {
        let n = self.epsilon.len();
        for i in 0..n {
            self.couplings[i][i] = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (self.couplings[i][j] + self.couplings[j][i]);
                self.couplings[i][j] = avg;
                self.couplings[j][i] = avg;
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.epsilon.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i][j]
    }

    pub fn sink_site(&self) -> usize {
        self.sink_site
    }

    /// Γ_{n→0} in ps⁻¹.
    pub fn sink_rate(&self) -> f64 {
        self.sink_rate
    }

    pub fn initial_site(&self) -> usize {
        self.initial_site
    }

    pub fn with_site_energy(&self, site: usize, value: f64) -> Result<Self> {
        if site >= self.n_sites() || !value.is_finite() {
            return Err(Error::param(format!("epsilon{}", site + 1), "invalid site or energy"));
        }
        let mut net = self.clone();
        net.epsilon[site] = value;
        Ok(net)
    }

    /// Sets J_ij = J_ji = `value`.
    pub fn with_coupling(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        if i >= self.n_sites() || j >= self.n_sites() || i == j || !value.is_finite() {
            return Err(Error::param(format!("J{}{}", i + 1, j + 1), "invalid site pair or value"));
        }
        let mut net = self.clone();
        net.couplings[i][j] = value;
        net.couplings[j][i] = value;
        Ok(net)
    }

    pub fn with_sink_rate(&self, rate: f64) -> Result<Self> {
        let mut net = self.clone();
        net.sink_rate = rate;
        net.validate()?;
        Ok(net)
    }

    /// H_S = Σ ε_i|i⟩⟨i| + Σ_{i≠j} J_ij|i⟩⟨j|.
    pub fn hamiltonian(&self) -> Result<HermitianMatrix> {
        let n = self.n_sites();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { self.epsilon[i] } else { self.couplings[i][j] }).collect())
            .collect();
        HermitianMatrix::from_real_symmetric(&rows)
    }
}

/// Eigenstates of H_S together with the quantities the rate theory needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitonBasis {
    /// E_n in ascending order, cm⁻¹.
    pub energies: Vec<f64>,
    n: usize,
    /// C^i_n, row-major over (site i, exciton n).
    coeffs: Vec<f64>,
    /// |C^i_n|², same layout.
    weights: Vec<f64>,
    /// χ_mn = Σ_i |C^i_n C^i_m|², row-major.
    chi: Vec<f64>,
    /// Γ_{e_n→0} in ps⁻¹.
    pub sink_exciton_rates: Vec<f64>,
}

impl ExcitonBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// C^i_n: amplitude of site `site` in exciton `exciton`.
    pub fn coeff(&self, site: usize, exciton: usize) -> f64 {
        self.coeffs[site * self.n + exciton]
    }

    /// |C^i_n|².
    pub fn weight(&self, site: usize, exciton: usize) -> f64 {
        self.weights[site * self.n + exciton]
    }

    pub fn chi(&self, m: usize, n: usize) -> f64 {
        self.chi[m * self.n + n]
    }

    /// Exciton populations after exciting `site` alone, dropping initial coherences.
    pub fn site_populations(&self, site: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.weight(site, k)).collect()
    }
}

pub fn build_exciton_basis(net: &ExcitonNetwork) -> Result<ExcitonBasis> {
    let eig = eigh(&net.hamiltonian()?)?;
    let n = net.n_sites();
    let mut coeffs = vec![0.0; n * n];
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let z = eig.component(i, k);
            coeffs[i * n + k] = z.re;
            weights[i * n + k] = z.norm_sqr();
        }
    }
    let mut chi = vec![0.0; n * n];
    for m in 0..n {
        for k in m..n {
            let v: f64 = (0..n).map(|i| weights[i * n + m] * weights[i * n + k]).sum();
            chi[m * n + k] = v;
            chi[k * n + m] = v;
        }
    }
    let sink_exciton_rates = sink_rates_from_weights(&weights, n, net.sink_site(), net.sink_rate());
    Ok(ExcitonBasis { energies: eig.values, n, coeffs, weights, chi, sink_exciton_rates })
}

fn sink_rates_from_weights(weights: &[f64], n: usize, sink_site: usize, rate: f64) -> Vec<f64> {
    (0..n).map(|k| weights[sink_site * n + k] * rate).collect()
}

/// Γ_{e_n→0} = |⟨e_n|sink⟩|²·Γ_{sink→0}, in ps⁻¹.
pub fn sink_rates(basis: &ExcitonBasis, net: &ExcitonNetwork) -> Vec<f64> {
    sink_rates_from_weights(&basis.weights, basis.n, net.sink_site(), net.sink_rate())
}

/// Exciton-to-exciton rates plus sink drains, ready for propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSystem {
    n: usize,
    /// W_mn (rate from exciton n into exciton m), cm⁻¹, row-major.
    w: Vec<f64>,
    /// ps⁻¹.
    pub sink_exciton_rates: Vec<f64>,
    /// cm⁻¹.
    pub energies: Vec<f64>,
}

impl RateSystem {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// W_mn in cm⁻¹: rate from exciton `n` into exciton `m`.
    pub fn rate(&self, m: usize, n: usize) -> f64 {
        self.w[m * self.n + n]
    }

    pub fn rates(&self) -> &[f64] {
        &self.w
    }

    /// Builds a rate system from an explicit W matrix (cm⁻¹, row-major, W[m][n] = n→m).
    pub fn from_parts(w: Vec<Vec<f64>>, sink_exciton_rates: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        let n = w.len();
        if sink_exciton_rates.len() != n || energies.len() != n || w.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rate matrix, sink rates and energies must agree".into()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (m, row) in w.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::param(format!("W[{m}][{k}]"), "rates must be finite and ≥ 0"));
                }
                flat.push(if m == k { 0.0 } else { v });
            }
        }
        if sink_exciton_rates.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::param("sink_exciton_rates", "must be ≥ 0"));
        }
        Ok(Self { n, w: flat, sink_exciton_rates, energies })
    }
}

/// Secular Redfield rates:
/// W_mn = 2πJ(ω_mn)χ_mn n(ω_mn) for ω_mn = E_m − E_n > 0 (uphill) and
/// W_mn = 2πJ(|ω_mn|)χ_mn [n(|ω_mn|) + 1] downhill. Degenerate pairs get zero.
pub fn redfield_rates(basis: &ExcitonBasis, bath: &SpectralDensity, ctx: &ThermalBathContext) -> RateSystem {
    let n = basis.dim();
    let mut w = vec![0.0; n * n];
    for m in 0..n {
        for k in 0..n {
            if m == k {
                continue;
            }
            let omega = basis.energies[m] - basis.energies[k];
            let gap = omega.abs();
            if gap < DEGENERACY_TOL {
                continue;
            }
            let occ = ctx.occupation(gap);
            let thermal = if omega > 0.0 { occ } else { occ + 1.0 };
            w[m * n + k] = 2.0 * PI * bath.eval(gap) * basis.chi(m, k) * thermal;
        }
    }
    RateSystem { n, w, sink_exciton_rates: basis.sink_exciton_rates.clone(), energies: basis.energies.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LorentzianBath;
    use crate::units::KB;

    fn three_site(j12: f64, e2: f64, j23: f64) -> ExcitonNetwork {
        ExcitonNetwork::new(
            vec![300.0, e2, 0.0],
            vec![vec![0.0, j12, 0.0], vec![j12, 0.0, j23], vec![0.0, j23, 0.0]],
            2,
            1.0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn ideal_ladder() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 0.0)).unwrap();
        for (e, x) in b.energies.iter().zip([0.0, 200.0, 400.0]) {
            assert!((e - x).abs() < 1e-10);
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // e(200) = (|1⟩ − |2⟩)/√2, e(400) = (|1⟩ + |2⟩)/√2
        assert!((b.coeff(0, 1) - r).abs() < 1e-10 && (b.coeff(1, 1) + r).abs() < 1e-10);
        assert!((b.coeff(0, 2) - r).abs() < 1e-10 && (b.coeff(1, 2) - r).abs() < 1e-10);
        assert!((b.chi(1, 2) - 0.5).abs() < 1e-12);
        assert_eq!(b.site_populations(0).iter().map(|p| (p * 1e12).round() / 1e12).collect::<Vec<_>>(), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn physical_three_site_energies() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 30.0)).unwrap();
        // reference values from an independent LAPACK (numpy.linalg.eigvalsh) solve
        let expected = [-3.32887805, 202.20074961, 401.12812844];
        for (e, x) in b.energies.iter().zip(expected) {
            assert!((e - x).abs() < 1e-7, "{e} vs {x}");
        }
        let s: f64 = b.sink_exciton_rates.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_sites_are_excitons() {
        let net = ExcitonNetwork::new(vec![50.0, 10.0, 30.0], vec![vec![0.0; 3]; 3], 1, 1.0, 0).unwrap();
        let b = build_exciton_basis(&net).unwrap();
        assert_eq!(b.energies, vec![10.0, 30.0, 50.0]);
        for m in 0..3 {
            for k in 0..3 {
                if m != k {
                    assert_eq!(b.chi(m, k), 0.0);
                }
            }
        }
        // sink attached to site 2 (ε = 10), which is exciton 0
        assert_eq!(b.sink_exciton_rates, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn localized_sink_exciton() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 0.0)).unwrap();
        assert!((b.sink_exciton_rates[0] - 1.0).abs() < 1e-15);
        assert_eq!(b.sink_exciton_rates[1], 0.0);
    }

    #[test]
    fn redfield_zero_temperature_has_no_uphill() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 30.0)).unwrap();
        let bath = SpectralDensity::from(LorentzianBath::new(200.0, 60.0, 35.0).unwrap());
        let r = redfield_rates(&b, &bath, &ThermalBathContext::new(0.0).unwrap());
        for m in 0..3 {
            for k in 0..m {
                assert_eq!(r.rate(m, k), 0.0, "uphill {k}->{m}");
                assert!(r.rate(k, m) > 0.0);
            }
        }
    }

    #[test]
    fn redfield_ladder_rate() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 0.0)).unwrap();
        let lb = LorentzianBath::new(200.0, 60.0, 35.0).unwrap();
        let bath = SpectralDensity::from(lb);
        let r = redfield_rates(&b, &bath, &ThermalBathContext::new(4.0).unwrap());
        // 2π·J(200)·χ·(n+1), with J(200) = 2λω_H/(πΓ) and χ = 1/2
        let expected = 2.0 * PI * (2.0 * 35.0 * 200.0 / (PI * 60.0)) * 0.5;
        assert!((r.rate(1, 2) - expected).abs() < 1e-9 * expected);
        assert!((expected - 233.3333).abs() < 1e-3);
    }

    #[test]
    fn detailed_balance() {
        let b = build_exciton_basis(&three_site(100.0, 300.0, 30.0)).unwrap();
        let bath = SpectralDensity::from(LorentzianBath::new(200.0, 60.0, 35.0).unwrap());
        let t = 77.0;
        let r = redfield_rates(&b, &bath, &ThermalBathContext::new(t).unwrap());
        for m in 0..3 {
            for k in 0..3 {
                if m != k {
                    let w = b.energies[m] - b.energies[k];
                    let ratio = r.rate(m, k) / r.rate(k, m);
                    assert!((ratio / (-w / (KB * t)).exp() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn coupling_sign_gauge() {
        let bath = SpectralDensity::from(LorentzianBath::new(200.0, 60.0, 35.0).unwrap());
        let ctx = ThermalBathContext::new(77.0).unwrap();
        let a = build_exciton_basis(&three_site(100.0, 280.0, 30.0)).unwrap();
        let b = build_exciton_basis(&three_site(-100.0, 280.0, 30.0)).unwrap();
        let (ra, rb) = (redfield_rates(&a, &bath, &ctx), redfield_rates(&b, &bath, &ctx));
        for k in 0..3 {
            assert!((a.energies[k] - b.energies[k]).abs() < 1e-12);
            assert!((a.sink_exciton_rates[k] - b.sink_exciton_rates[k]).abs() < 1e-12);
            assert!((a.weight(0, k) - b.weight(0, k)).abs() < 1e-12);
            for m in 0..3 {
                assert!((a.chi(m, k) - b.chi(m, k)).abs() < 1e-12);
                assert!((ra.rate(m, k) - rb.rate(m, k)).abs() < 1e-12 * ra.rate(m, k).max(1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_networks() {
        let err = ExcitonNetwork::new(vec![0.0, 0.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]], 0, 1.0, 0).unwrap_err();
        assert!(err.to_string().contains("J[0][1]"), "{err}");
        assert!(ExcitonNetwork::new(vec![0.0, 0.0], vec![vec![0.0; 2]; 2], 2, 1.0, 0).is_err());
        assert!(ExcitonNetwork::new(vec![0.0, 0.0], vec![vec![0.0; 2]; 2], 0, -1.0, 0).is_err());
        assert!(ExcitonNetwork::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 0.0]], 0, 1.0, 0).is_err());
    }

    #[test]
    fn json_uses_one_based_sites() {
        let net = three_site(100.0, 300.0, 30.0);
        let s = serde_json::to_string(&net).unwrap();
        assert!(s.contains("\"sink_site\":3") && s.contains("\"initial_site\":1"), "{s}");
        let back: ExcitonNetwork = serde_json::from_str(&s).unwrap();
        assert_eq!(back, net);
    }
}
