//! Acceptance criteria, one PASS/FAIL line each.
//!
//! `cargo test -p phonon-antenna-validation --test acceptance` runs criteria 1-7 and 9;
//! add `-- --include-ignored` (or `--ignored`) for the slow oscillator sweep (8).

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use phonon_antenna::kinetics::{self, generator_matrix};
use phonon_antenna::lindblad::{self, default_coupling, VibronicModel, VibronicOptions};
use phonon_antenna::models::three_site_preset;
use phonon_antenna::network::{build_exciton_basis, redfield_rates, ExcitonNetwork};
use phonon_antenna::spectral::ThermalBathContext;
use phonon_antenna::sweep::{
    argmax, evaluate_point, f_antenna, f_antenna_map, run_sweep, Axis, Engine, FomInputs, SweepConfig, SweepGrid,
    SweepParameter,
};
use phonon_antenna::units::WAVENUMBER_TO_ANGULAR_PS;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1_exciton_ladder() -> Outcome {
    let net = three_site_preset().network.with_coupling(1, 2, 0.0).unwrap();
    let b = build_exciton_basis(&net).unwrap();
    let e_err = b.energies.iter().zip([0.0, 200.0, 400.0]).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // upper pair: (|1⟩ − |2⟩)/√2 at 200, (|1⟩ + |2⟩)/√2 at 400, each up to a global sign
    let vec_err = |k: usize, sign: f64| {
        let v = [b.coeff(0, k), b.coeff(1, k), b.coeff(2, k)];
        let t = [s, sign * s, 0.0];
        let d_plus: f64 = v.iter().zip(t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let d_minus: f64 = v.iter().zip(t).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        d_plus.min(d_minus)
    };
    let v_err = vec_err(1, -1.0).max(vec_err(2, 1.0));
    outcome(
        e_err <= 1e-10 && v_err <= 1e-10,
        format!("energies {:?}, max energy error {e_err:.2e}, max eigenvector error {v_err:.2e} (tol 1e-10)", b.energies),
    )
}

fn c2_omega_sweep() -> Outcome {
    let base = three_site_preset();
    let grid = SweepGrid::one_d(Axis::range(SweepParameter::OmegaHBath, 50.0, 500.0, 5.0).unwrap());
    let land = run_sweep(&base, &grid, &SweepConfig::new(Engine::Redfield, 2.0)).unwrap();
    let xs = &grid.axis1.values;
    let ys: Vec<f64> = land.values.iter().map(|v| v.unwrap()).collect();
    let am = argmax(&land).unwrap();
    let secondary = (1..ys.len() - 1)
        .filter(|&i| (370.0..=430.0).contains(&xs[i]) && ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let global_ok = am.axis1 > 200.0 && am.axis1 <= 230.0;
    match secondary {
        Some(i) => {
            let ratio = ys[i] / am.value;
            outcome(
                global_ok && (0.3..=0.7).contains(&ratio),
                format!(
                    "global max p_sink = {:.6} at omega_H = {} (want (200, 230]); secondary max {:.6} at {} (want [370, 430]), ratio {ratio:.3} (want 0.3-0.7)",
                    am.value, am.axis1, ys[i], xs[i]
                ),
            )
        }
        None => outcome(false, format!("global max at {}, no local maximum in [370, 430]", am.axis1)),
    }
}

fn landscape_3() -> (phonon_antenna::sweep::Landscape, phonon_antenna::sweep::ArgMax) {
    let base = three_site_preset();
    let grid = SweepGrid::two_d(Axis::default_for(SweepParameter::J12), Axis::default_for(SweepParameter::Epsilon2)).unwrap();
    let land = run_sweep(&base, &grid, &SweepConfig::new(Engine::Redfield, 2.0)).unwrap();
    let am = argmax(&land).unwrap();
    (land, am)
}

fn c3_landscape_argmax(land: &phonon_antenna::sweep::Landscape, am: &phonon_antenna::sweep::ArgMax) -> Outcome {
    let (n1, n2) = land.shape();
    let mut asym: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            asym = asym.max((land.get(i, j).unwrap() - land.get(n1 - 1 - i, j).unwrap()).abs());
        }
    }
    let near = am.ties.iter().any(|&(j12, e2)| (j12 - 95.0).abs() <= 5.0 && (e2.unwrap() - 240.0).abs() <= 5.0);
    let ties: Vec<String> = am.ties.iter().map(|(a, b)| format!("({a}, {})", b.unwrap())).collect();
    outcome(
        near && asym <= 1e-12,
        format!(
            "maximizer(s) {} with p_sink = {:.6} (want within 5 of (95, 240)); mirror asymmetry {asym:.1e} (tol 1e-12)",
            ties.join(" "),
            am.value
        ),
    )
}

fn c4_gaps(am: &phonon_antenna::sweep::ArgMax) -> Outcome {
    let net = three_site_preset().network.with_coupling(0, 1, am.axis1).unwrap().with_site_energy(1, am.axis2.unwrap()).unwrap();
    let e = build_exciton_basis(&net).unwrap().energies;
    let (upper, lower) = (e[2] - e[1], e[1] - e[0]);
    outcome(
        (upper - 200.0).abs() <= 10.0 && (lower - 180.0).abs() <= 10.0,
        format!(
            "at (J12, eps2) = ({}, {}): E3 - E2 = {upper:.2}, E2 - E1 = {lower:.2} (want 200 and 180 within 10)",
            am.axis1,
            am.axis2.unwrap()
        ),
    )
}

fn c5_conservation() -> Outcome {
    let m = three_site_preset();
    let basis = build_exciton_basis(&m.network).unwrap();
    let rates = redfield_rates(&basis, &m.bath, &ThermalBathContext::new(m.temperature_K).unwrap());
    let trace = kinetics::propagate(&rates, 0, &basis, 2.0, 1e-3).unwrap();
    let cons = trace.states.iter().map(|s| (s.total() - 1.0).abs()).fold(0.0, f64::max);
    let monotone = trace.states.windows(2).all(|w| w[1].sink_pop >= w[0].sink_pop);
    let p50 = kinetics::sink_population_at(&rates, 0, &basis, 50.0, 1e-3).unwrap();

    let mut balance: f64 = 0.0;
    for t in [4.0, 77.0, 300.0] {
        let ctx = ThermalBathContext::new(t).unwrap();
        let r = redfield_rates(&basis, &m.bath, &ctx);
        let kt = phonon_antenna::units::thermal_energy(t);
        for a in 0..3 {
            for b in 0..3 {
                let (ea, eb) = (basis.energies[a], basis.energies[b]);
                if ea > eb {
                    let up = r.rate(a, b);
                    let down = r.rate(b, a);
                    let expect = (-(ea - eb) / kt).exp();
                    if down > 0.0 {
                        balance = balance.max((up / down - expect).abs() / expect.max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
    }
    outcome(
        cons <= 1e-9 && balance <= 1e-10 && monotone && p50 > 0.99,
        format!(
            "probability drift {cons:.1e} (tol 1e-9), detailed-balance relative error {balance:.1e} (tol 1e-10), monotone sink {monotone}, p_sink(50 ps) = {p50:.9}"
        ),
    )
}

fn c6_matrix_exponential() -> Outcome {
    let m = three_site_preset();
    let basis = build_exciton_basis(&m.network).unwrap();
    let rates = redfield_rates(&basis, &m.bath, &ThermalBathContext::new(m.temperature_K).unwrap());
    let a = generator_matrix(&rates);
    let at: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * 2.0).collect()).collect();
    let mut y0 = basis.site_populations(0);
    y0.push(0.0);
    let exact = common::mat_vec(&common::expm_real(&at), &y0);
    let last = kinetics::propagate(&rates, 0, &basis, 2.0, 1e-3).unwrap().states.pop().unwrap();
    let mut err = (last.sink_pop - exact[3]).abs();
    for k in 0..3 {
        err = err.max((last.exciton_pops[k] - exact[k]).abs());
    }
    outcome(err <= 1e-7, format!("p_sink(2 ps) = {:.12} vs exp(At) {:.12}, max deviation {err:.1e} (tol 1e-7)", last.sink_pop, exact[3]))
}

fn vibronic(net: ExcitonNetwork, g: f64, d: usize) -> VibronicModel {
    VibronicModel::new(net, 200.0, g, 60.0, 4.0, d).unwrap()
}

fn c7_lindblad_integrity() -> Outcome {
    let net = three_site_preset().network;
    let g = default_coupling(35.0, 200.0);
    let t0 = Instant::now();
    let d5 = lindblad::propagate_vibronic(&vibronic(net.clone(), g, 5), 10.0, lindblad::DEFAULT_DT).unwrap();
    let d4 = lindblad::propagate_vibronic(&vibronic(net.clone(), g, 4), 10.0, lindblad::DEFAULT_DT).unwrap();
    let fock = (d5.final_sink() - d4.final_sink()).abs();

    // g = 0: the electronic part evolves on its own
    let free = vibronic(net.clone(), 0.0, 3);
    let tr = lindblad::propagate_vibronic_with(&free, 10.0, &VibronicOptions { dt: lindblad::DEFAULT_DT, record_interval: 1.0 }).unwrap();
    let mut h_el = vec![vec![0.0; 4]; 4];
    for i in 0..3 {
        h_el[i + 1][i + 1] = net.site_energies()[i];
        for j in 0..3 {
            if i != j {
                h_el[i + 1][j + 1] = net.coupling(i, j);
            }
        }
    }
    let sup = common::electronic_superoperator(&h_el, 3, net.sink_rate(), WAVENUMBER_TO_ANGULAR_PS);
    let mut oracle: f64 = 0.0;
    for (k, &t) in tr.times.iter().enumerate() {
        let prop = common::expm_complex(&sup.scale_real(t));
        // ρ0 = |1⟩⟨1|, vec index (1, 1) = 5; p_sink = ρ_00 at vec index 0
        let p = prop[(0, 5)].re;
        oracle = oracle.max((p - tr.p_sink[k]).abs());
    }
    outcome(
        d5.max_trace_drift <= 1e-8 && oracle <= 1e-8 && fock < 1e-4,
        format!(
            "d=5 p_sink(10 ps) = {:.9}, trace drift {:.1e} (tol 1e-8); g=0 vs electronic oracle {oracle:.1e} (tol 1e-8); |p(d=5) - p(d=4)| = {fock:.1e} (tol 1e-4); {:.0} s",
            d5.final_sink(),
            d5.max_trace_drift,
            t0.elapsed().as_secs_f64()
        ),
    )
}

/// Settings of the slow suite: d = 5 and a 1 fs step, whose p_sink(10 ps)
/// agrees with the 0.2 fs default to better than 1e-9.
fn slow_config() -> SweepConfig {
    let mut cfg = SweepConfig::new(Engine::Lindblad, 10.0);
    cfg.dt = 1e-3;
    cfg
}

fn c8_lindblad_antenna() -> Outcome {
    let t0 = Instant::now();
    let base = three_site_preset();
    let cfg = slow_config();
    // coarse scan, then 5 cm⁻¹ refinement around the best coarse point
    let coarse = SweepGrid::one_d(Axis::range(SweepParameter::OmegaHOsc, 150.0, 350.0, 10.0).unwrap());
    let land = run_sweep(&base, &coarse, &cfg).unwrap();
    let mut points: Vec<(f64, f64)> =
        coarse.axis1.values.iter().zip(&land.values).map(|(&x, v)| (x, v.expect("vibronic point failed"))).collect();
    let best = argmax(&land).unwrap().axis1;
    for x in [best - 5.0, best + 5.0] {
        if (150.0..=350.0).contains(&x) {
            points.push((x, evaluate_point(&base, &[(SweepParameter::OmegaHOsc, x)], &cfg).unwrap()));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (peak_x, peak_y) = points.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let curve: Vec<String> = points.iter().map(|(x, y)| format!("{x}:{y:.5}")).collect();
    eprintln!("oscillator sweep p_sink(10 ps): {}", curve.join(" "));

    // hill climb on the fixed-200 (J12, eps2) landscape from the physical point, 10 cm⁻¹ lattice
    let mut climb = cfg;
    climb.vibronic.osc_freq = Some(200.0);
    let mut seen: std::collections::HashMap<(i64, i64), f64> = std::collections::HashMap::new();
    let mut eval = |j12: f64, e2: f64| {
        *seen.entry((j12.round() as i64, e2.round() as i64)).or_insert_with(|| {
            evaluate_point(&base, &[(SweepParameter::J12, j12), (SweepParameter::Epsilon2, e2)], &climb).unwrap()
        })
    };
    let phys = eval(100.0, 300.0);
    let (mut at, mut best_v) = ((100.0, 300.0), phys);
    for _ in 0..8 {
        let mut moved = false;
        for (dx, dy) in [(10.0, 0.0), (-10.0, 0.0), (0.0, 10.0), (0.0, -10.0)] {
            let cand = (at.0 + dx, at.1 + dy);
            let v = eval(cand.0, cand.1);
            if v > best_v {
                best_v = v;
                at = cand;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let ratio = phys / best_v;
    outcome(
        (222.0..=252.0).contains(&peak_x) && ratio >= 0.9,
        format!(
            "oscillator sweep peak at {peak_x} cm^-1 with p_sink(10 ps) = {peak_y:.6} (want [222, 252]); physical point p_sink = {phys:.6}, nearby local max {best_v:.6} at (J12, eps2) = ({}, {}), ratio {ratio:.3} (want >= 0.9); {:.0} s",
            at.0,
            at.1,
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn c9_f_antenna() -> Outcome {
    let base = three_site_preset();
    let grid = SweepGrid::two_d(Axis::default_for(SweepParameter::J12), Axis::default_for(SweepParameter::Epsilon2)).unwrap();
    let land = f_antenna_map(&base, &grid, 200.0).unwrap();
    let all_nonpositive = land.values.iter().all(|v| v.unwrap() <= 0.0);
    let (n1, n2) = land.shape();
    let mut mirror: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            mirror = mirror.max((land.get(i, j).unwrap() - land.get(n1 - 1 - i, j).unwrap()).abs());
        }
    }
    // perfect ladders: J23 = 0, eps2 = 300, J12 = ±100 gives (0, 200, 400)
    let mut ladder = base.clone();
    ladder.network = ladder.network.with_coupling(1, 2, 0.0).unwrap();
    let lgrid = SweepGrid::two_d("J12=-100:100:200".parse().unwrap(), "epsilon2=300".parse().unwrap()).unwrap();
    let zero = f_antenna_map(&ladder, &lgrid, 200.0).unwrap().values.iter().map(|v| v.unwrap().abs()).fold(0.0, f64::max);
    // homogeneity under a uniform scale of all energies and omega_H
    let c = 1.37;
    let net = &base.network;
    let scaled = ExcitonNetwork::new(
        net.site_energies().iter().map(|e| e * c).collect(),
        net.couplings().iter().map(|r| r.iter().map(|v| v * c).collect()).collect(),
        net.sink_site(),
        net.sink_rate(),
        net.initial_site(),
    )
    .unwrap();
    let f1 = f_antenna(&FomInputs::from_network(net, 200.0).unwrap());
    let fc = f_antenna(&FomInputs::from_network(&scaled, 200.0 * c).unwrap());
    let homog = (fc - c * f1).abs();
    outcome(
        all_nonpositive && zero <= 1e-9 && homog <= 1e-9 && mirror <= 1e-9,
        format!(
            "all values <= 0: {all_nonpositive}; perfect-ladder |F| {zero:.1e}; homogeneity error {homog:.1e}; mirror asymmetry {mirror:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let slow = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let filters: Vec<&String> = args.iter().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    let mut results: Vec<(u32, &str, Option<Outcome>)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            return;
        }
        let out = f();
        println!("[criterion {id}] {} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        results.push((id, name, Some(out)));
    };

    run(1, "exciton_ladder", &mut c1_exciton_ladder);
    run(2, "omega_h_sweep", &mut c2_omega_sweep);
    let mut cached: Option<(phonon_antenna::sweep::Landscape, phonon_antenna::sweep::ArgMax)> = None;
    run(3, "landscape_argmax", &mut || {
        let (land, am) = cached.get_or_insert_with(landscape_3);
        c3_landscape_argmax(land, am)
    });
    run(4, "exciton_gaps_at_optimum", &mut || {
        let (_, am) = cached.get_or_insert_with(landscape_3);
        c4_gaps(am)
    });
    run(5, "conservation_and_balance", &mut c5_conservation);
    run(6, "matrix_exponential_oracle", &mut c6_matrix_exponential);
    run(7, "lindblad_integrity", &mut c7_lindblad_integrity);
    if slow {
        run(8, "lindblad_antenna_shift", &mut c8_lindblad_antenna);
    } else if filters.is_empty() {
        println!("[criterion 8] SKIPPED lindblad_antenna_shift: slow suite, run with `-- --include-ignored`");
    }
    run(9, "f_antenna_properties", &mut c9_f_antenna);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.as_ref().unwrap().pass).map(|r| r.0).collect();
    println!("acceptance: {} passed, {} failed", results.len() - failed.len(), failed.len());
    if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
