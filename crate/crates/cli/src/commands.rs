use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phonon_antenna::kinetics;
use phonon_antenna::lindblad::{self, VibronicOptions};
use phonon_antenna::models::{self, ModelPreset};
use phonon_antenna::network::{build_exciton_basis, redfield_rates};
use phonon_antenna::spectral::ThermalBathContext;
use phonon_antenna::sweep::{
    apply_point, argmax, f_antenna_map, run_sweep, vibronic_model, Axis, Engine, Landscape, SweepConfig, SweepGrid,
    SweepParameter, VibronicSettings,
};

use crate::output::{sig12, with_provenance, write_file, Provenance};
use crate::{FomArgs, LindbladArgs, ModelArgs, ReproduceArgs, SimulateArgs, SweepArgs, VibronicArgs};

/// CSV text plus the lines printed to stdout. A deferred error is raised
/// after the CSV has been written.
struct Report {
    csv: String,
    summary: Vec<String>,
    deferred: Option<phonon_antenna::Error>,
}

impl Report {
    fn emit(self, output: Option<&Path>) -> Result<()> {
        if let Some(path) = output {
            write_file(path, &self.csv)?;
        }
        for line in &self.summary {
            println!("{line}");
        }
        if let Some(path) = output {
            println!("wrote {}", path.display());
        }
        match self.deferred {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

fn load_model(args: &ModelArgs) -> Result<ModelPreset> {
    let mut m = match &args.model {
        Some(path) => models::load_network_file(path)?,
        None => models::preset(args.preset.as_deref().unwrap_or(models::THREE_SITE))?,
    };
    if let Some(t) = args.temperature {
        m.temperature_K = t;
        m.validate()?;
    }
    Ok(m)
}

fn settings(v: &VibronicArgs) -> VibronicSettings {
    VibronicSettings { fock_dim: v.fock_dim, osc_damping: v.damping, osc_freq: v.omega_osc, coupling_g: v.coupling_g }
}

fn grid(axis1: &str, axis2: Option<&str>) -> Result<SweepGrid> {
    let a1: Axis = axis1.parse()?;
    Ok(match axis2 {
        Some(s) => SweepGrid::two_d(a1, s.parse()?)?,
        None => SweepGrid::one_d(a1),
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
}

fn run_simulate(m: &ModelPreset, t: f64, dt: f64) -> Result<Report> {
    let basis = build_exciton_basis(&m.network)?;
    let rates = redfield_rates(&basis, &m.bath, &ThermalBathContext::new(m.temperature_K)?);
    let trace = kinetics::propagate(&rates, m.network.initial_site(), &basis, t, dt)?;
    let prov = Provenance::new("simulate", m).param("T_K", m.temperature_K).param("t_eval_ps", t).param("dt_ps", dt);
    let last = trace.last().expect("trace has at least the initial state");
    Ok(Report {
        csv: with_provenance(&trace.to_csv(), &prov),
        summary: vec![
            format!("model: {} ({} sites, T = {} K)", m.name, m.network.n_sites(), m.temperature_K),
            format!("exciton energies (cm^-1): {}", join(&basis.energies)),
            format!("population conservation error: {:e}", (last.total() - 1.0).abs()),
            format!("p_sink({t} ps) = {}", sig12(trace.final_sink())),
        ],
        deferred: None,
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let t = a.t_eval.unwrap_or(m.t_eval_ps);
    run_simulate(&m, t, a.dt)?.emit(a.output.as_deref())
}

fn landscape_report(land: &Landscape, prov: Provenance) -> Report {
    let mut summary = Vec::new();
    let (n1, n2) = land.shape();
    summary.push(format!("grid: {n1} x {n2} points, {}", land.quantity.name()));
    if !land.failures.is_empty() {
        eprintln!("{} of {} grid points failed:", land.failures.len(), n1 * n2);
        for f in land.failures.iter().take(5) {
            eprintln!("  ({}, {}): {}", f.i, f.j, f.message);
        }
        summary.push(format!("failed points: {}", land.failures.len()));
    }
    let deferred = match argmax(land) {
        Ok(am) => {
            let a1 = land.grid.axis1.param;
            let at = |x: f64, y: Option<f64>| match (&land.grid.axis2, y) {
                (Some(ax), Some(y)) => format!("{a1}={x} {}={y}", ax.param),
                _ => format!("{a1}={x}"),
            };
            summary.push(format!("argmax: {} {}={}", at(am.axis1, am.axis2), land.quantity.name(), sig12(am.value)));
            if am.ties.len() > 1 {
                let list: Vec<String> = am.ties.iter().map(|&(x, y)| at(x, y)).collect();
                summary.push(format!("tied maxima: {}", list.join("; ")));
            }
            None
        }
        Err(e) => Some(e),
    };
    Report { csv: with_provenance(&land.to_csv(), &prov), summary, deferred }
}

fn run_landscape(m: &ModelPreset, grid: &SweepGrid, cfg: &SweepConfig, command: &'static str) -> Result<Report> {
    let land = run_sweep(m, grid, cfg)?;
    let mut prov = Provenance::new(command, m)
        .param("engine", cfg.engine.name())
        .param("T_K", m.temperature_K)
        .param("t_eval_ps", cfg.t_eval)
        .param("dt_ps", cfg.dt);
    if cfg.engine == Engine::Lindblad {
        let v = &cfg.vibronic;
        prov = prov.param("fock_dim", v.fock_dim).param("damping_cm", v.osc_damping);
        if let Some(w) = v.osc_freq {
            prov = prov.param("omega_osc_cm", w);
        }
        if let Some(g) = v.coupling_g {
            prov = prov.param("g_cm", g);
        }
    }
    Ok(landscape_report(&land, prov))
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let engine = match a.engine.as_str() {
        "redfield" => Engine::Redfield,
        "lindblad" => Engine::Lindblad,
        other => bail!("unknown engine `{other}` (expected redfield or lindblad)"),
    };
    let grid = grid(&a.axis1, a.axis2.as_deref())?;
    let cfg = SweepConfig {
        engine,
        t_eval: a.t_eval.unwrap_or(m.t_eval_ps),
        dt: a.dt.unwrap_or(engine.default_dt()),
        jobs: a.jobs,
        vibronic: settings(&a.vibronic),
    };
    run_landscape(&m, &grid, &cfg, "sweep")?.emit(a.output.as_deref())
}

fn run_fom(m: &ModelPreset, grid: &SweepGrid, omega_h: Option<f64>) -> Result<Report> {
    let w = match omega_h.or_else(|| m.bath.omega_h()) {
        Some(w) => w,
        None => bail!("the bath has no peak frequency; pass --omega-h"),
    };
    let land = f_antenna_map(m, grid, w)?;
    let zeros = land.values.iter().flatten().filter(|v| v.abs() < 1e-9).count();
    let prov = Provenance::new("fom", m).param("omega_H_cm", w);
    let mut r = landscape_report(&land, prov);
    r.summary.push(format!("perfect-ladder points (F = 0): {zeros}"));
    Ok(r)
}

pub fn fom(a: &FomArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let grid = grid(&a.axis1, a.axis2.as_deref())?;
    run_fom(&m, &grid, a.omega_h)?.emit(a.output.as_deref())
}

fn run_vibronic(m: &ModelPreset, t: f64, dt: f64, s: &VibronicSettings, audit: Option<usize>) -> Result<Report> {
    let point = apply_point(m, &[])?;
    let model = vibronic_model(&point, s)?;
    let opts = VibronicOptions { dt, record_interval: 0.01 };
    let trace = lindblad::propagate_vibronic_with(&model, t, &opts)?;
    let p = trace.final_sink();
    let mut summary = vec![
        format!(
            "vibronic model: {} sites, omega_osc = {} cm^-1, g = {} cm^-1, damping = {} cm^-1, T = {} K, fock_dim = {} (dimension {})",
            model.network.n_sites(),
            model.osc_freq,
            sig12(model.coupling_g),
            model.osc_damping,
            model.temperature,
            model.fock_dim,
            model.dim()
        ),
        format!("trace conservation: max |Tr rho - 1| = {:e}", trace.max_trace_drift),
        format!("hermiticity before re-symmetrisation: max |rho - rho^dag| = {:e}", trace.max_hermiticity_error),
        format!("p_sink({t} ps) = {}", sig12(p)),
    ];
    let mut prov = Provenance::new("lindblad", m)
        .param("T_K", model.temperature)
        .param("t_ps", t)
        .param("dt_ps", dt)
        .param("fock_dim", model.fock_dim)
        .param("omega_osc_cm", model.osc_freq)
        .param("g_cm", model.coupling_g)
        .param("damping_cm", model.osc_damping);
    if let Some(d) = audit {
        let other = lindblad::VibronicModel { fock_dim: d, ..model.clone() };
        let q = lindblad::propagate_vibronic_with(&other, t, &opts)?.final_sink();
        summary.push(format!("fock_dim audit: p_sink with fock_dim = {d} is {}, difference {:e}", sig12(q), q - p));
        prov = prov.param("audit_fock_dim", d);
    }
    Ok(Report { csv: with_provenance(&trace.to_csv(), &prov), summary, deferred: None })
}

pub fn lindblad(a: &LindbladArgs) -> Result<()> {
    let m = load_model(&a.model)?;
    let s = settings(&a.vibronic);
    match &a.axis1 {
        Some(spec) => {
            let axis: Axis = spec.parse()?;
            if axis.param != SweepParameter::OmegaHOsc && axis.param != SweepParameter::Temperature {
                bail!("the lindblad sweep takes an omega_H_osc or temperature axis, got {}", axis.param);
            }
            let cfg = SweepConfig { engine: Engine::Lindblad, t_eval: a.t, dt: a.dt, jobs: a.jobs, vibronic: s };
            run_landscape(&m, &SweepGrid::one_d(axis), &cfg, "lindblad")?.emit(a.output.as_deref())
        }
        None => run_vibronic(&m, a.t, a.dt, &s, a.audit_fock_dim)?.emit(a.output.as_deref()),
    }
}

pub fn reproduce_figures(a: &ReproduceArgs) -> Result<()> {
    let m = models::three_site_preset();
    std::fs::create_dir_all(&a.outdir).with_context(|| format!("cannot create {}", a.outdir.display()))?;
    let out = |name: &str| -> PathBuf { a.outdir.join(name) };
    let mut redfield = SweepConfig::new(Engine::Redfield, m.t_eval_ps);
    redfield.jobs = a.jobs;

    println!("== sink population trace, three-site model");
    run_simulate(&m, m.t_eval_ps, kinetics::DEFAULT_DT)?.emit(Some(&out("three_site_trace.csv")))?;

    println!("== bath peak sweep");
    let omega = SweepGrid::one_d(Axis::default_for(SweepParameter::OmegaHBath));
    run_landscape(&m, &omega, &redfield, "sweep")?.emit(Some(&out("omega_h_sweep.csv")))?;

    println!("== (J12, epsilon2) landscape");
    let plane = SweepGrid::two_d(Axis::default_for(SweepParameter::J12), Axis::default_for(SweepParameter::Epsilon2))?;
    run_landscape(&m, &plane, &redfield, "sweep")?.emit(Some(&out("j12_epsilon2_landscape.csv")))?;

    println!("== F_antenna map");
    run_fom(&m, &plane, None)?.emit(Some(&out("f_antenna_map.csv")))?;

    let vib = VibronicSettings { fock_dim: a.fock_dim, ..VibronicSettings::default() };
    println!("== vibronic trace, 10 ps");
    run_vibronic(&m, 10.0, a.lindblad_dt, &vib, None)?.emit(Some(&out("vibronic_trace.csv")))?;

    if !a.skip_lindblad_sweep {
        println!("== oscillator frequency sweep, 10 ps per point");
        let cfg = SweepConfig { engine: Engine::Lindblad, t_eval: 10.0, dt: a.lindblad_dt, jobs: a.jobs, vibronic: vib };
        let axis = Axis::range(SweepParameter::OmegaHOsc, 150.0, 350.0, 5.0)?;
        run_landscape(&m, &SweepGrid::one_d(axis), &cfg, "lindblad")?.emit(Some(&out("omega_osc_sweep.csv")))?;
    }
    Ok(())
}
