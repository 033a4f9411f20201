use std::path::{Path, PathBuf};

use log::info;
use spps_core::engine::{
    analytic_coherence_time, fitting_tau_grid, simulate_decay, sweep_argmax, sweep_coherence_time,
    Engine,
};
use spps_core::fit::{fit_coherence_time, CoherenceFit, MIN_FIT_SAMPLES};
use spps_core::kinematics::propagate;
use spps_core::tomography::{fbp_reconstruct, infer_state_from_tau_c, Feasibility};
use spps_core::units::{convert, deg_to_rad, rad_to_deg, ScenarioConfig, Unit};
use spps_core::wigner::{linspace, MIN_GRID_POINTS};

use crate::cli::{
    AnalyzeArgs, Cli, Command, EngineChoice, PropagateArgs, ReconstructArgs, SimulateDecayArgs,
    SweepAngleArgs,
};
use crate::config::{self, LoadedScenario};
use crate::data;
use crate::emit::{ensure_dir, write_key_values, write_table, write_text};
use crate::error::{CliError, Result, EXIT_INFEASIBLE};
use crate::manifest::{Command as ManifestCommand, RunManifest};
use crate::svg::{Plot, Series, Style};

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Human-readable result lines for stdout.
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Non-zero when the command completed but the result is flagged.
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let scenario = config::load(cli.config.as_deref())?;
    ensure_dir(&cli.out)?;
    let ctx = Context {
        scenario: &scenario,
        out: &cli.out,
        svg: cli.svg,
    };
    match &cli.command {
        Command::SimulateDecay(args) => simulate(&ctx, args),
        Command::SweepAngle(args) => sweep(&ctx, args),
        Command::Analyze(args) => analyze(&ctx, args),
        Command::Reconstruct(args) => reconstruct(&ctx, args),
        Command::Propagate(args) => propagate_beam(&ctx, args),
    }
}

struct Context<'a> {
    scenario: &'a LoadedScenario,
    out: &'a Path,
    svg: bool,
}

impl Context<'_> {
    fn config(&self) -> &ScenarioConfig {
        &self.scenario.config
    }

    fn manifest(&self, command: ManifestCommand) -> RunManifest {
        RunManifest::new(
            command,
            self.scenario.path.clone(),
            &self.scenario.fingerprint,
            self.out.to_path_buf(),
            self.svg,
        )
    }

    fn plot(
        &self,
        name: &str,
        manifest: &RunManifest,
        plot: Plot,
        outcome: &mut Outcome,
    ) -> Result<()> {
        if self.svg {
            let path = write_text(self.out, name, &plot.render(&manifest.header()))?;
            outcome.files.push(path);
        }
        Ok(())
    }

    fn phi_or_default(&self, phi_deg: Option<f64>) -> Result<f64> {
        match phi_deg {
            Some(d) if !d.is_finite() => {
                Err(CliError::Usage(format!("--phi must be finite, got {d}")))
            }
            Some(d) => Ok(deg_to_rad(d)),
            None => Ok(self.config().pulse_pair.phi()),
        }
    }
}

fn us(seconds: f64) -> f64 {
    convert(seconds, Unit::Second, Unit::Microsecond).expect("same dimension")
}

fn simulate(ctx: &Context, args: &SimulateDecayArgs) -> Result<Outcome> {
    let cfg = ctx.config();
    if args.points < MIN_FIT_SAMPLES {
        return Err(CliError::Usage(format!(
            "--points must be at least {MIN_FIT_SAMPLES}, got {}",
            args.points
        )));
    }
    let phi = ctx.phi_or_default(args.phi)?;
    let tau_c_analytic = analytic_coherence_time(cfg, phi)?;
    let tau_max = match args.tau_max {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            return Err(CliError::Usage(format!("--tau-max must be > 0, got {t}")))
        }
        Some(t) => t,
        None => *fitting_tau_grid(cfg, tau_c_analytic, 2)
            .last()
            .expect("two points"),
    };
    let engine = match args.engine {
        EngineChoice::Closed => Engine::ClosedForm,
        EngineChoice::Quad => Engine::Quadrature,
    };
    let taus = linspace(0.0, tau_max, args.points);
    let curve = simulate_decay(cfg, phi, &taus, engine)?;

    let mut manifest = ctx.manifest(ManifestCommand::SimulateDecay);
    manifest
        .param("phi_rad", phi)
        .param("tau_max_s", tau_max)
        .param("points", args.points)
        .param("engine", format!("{:?}", args.engine));
    let rows: Vec<Vec<f64>> = curve
        .samples()
        .iter()
        .map(|s| vec![us(s.tau), s.gamma])
        .collect();
    let mut outcome = Outcome::default();
    outcome.files.push(write_table(
        ctx.out,
        "decay.csv",
        &manifest,
        &["tau_us", "gamma"],
        &rows,
    )?);

    let fit = fit_coherence_time(&curve)?;
    let fine = linspace(0.0, tau_max, 200);
    ctx.plot(
        "decay.svg",
        &manifest,
        Plot::new(
            &format!("Γ(τ) at φ = {:.2}°", rad_to_deg(phi)),
            "τ (µs)",
            "Γ(τ)/Γ(0)",
        )
        .with(Series::new(
            "simulated",
            rows.iter().map(|r| (r[0], r[1])).collect(),
            Style::Markers,
        ))
        .with(Series::new(
            "Gaussian fit",
            fine.iter()
                .map(|&t| (us(t), fit.amplitude * (-(t / fit.tau_c).powi(2)).exp()))
                .collect(),
            Style::Line,
        )),
        &mut outcome,
    )?;
    outcome.summary.push(format!(
        "phi = {:.3} deg: fitted tau_c = {:.4} ± {:.2e} us (analytic {:.4} us)",
        rad_to_deg(phi),
        us(fit.tau_c),
        us(fit.tau_c_err),
        us(tau_c_analytic)
    ));
    Ok(outcome)
}

fn sweep(ctx: &Context, args: &SweepAngleArgs) -> Result<Outcome> {
    let cfg = ctx.config();
    if !(args.step.is_finite() && args.step > 0.0) {
        return Err(CliError::Usage(format!(
            "--step must be > 0, got {}",
            args.step
        )));
    }
    if !(args.phi_min.is_finite() && args.phi_max.is_finite()) || args.phi_max < args.phi_min {
        return Err(CliError::Usage(format!(
            "need finite --phi-min ≤ --phi-max, got {} and {}",
            args.phi_min, args.phi_max
        )));
    }
    let count = ((args.phi_max - args.phi_min) / args.step + 1e-9).floor() as usize + 1;
    let phis_deg: Vec<f64> = (0..count)
        .map(|i| args.phi_min + i as f64 * args.step)
        .collect();
    let phis: Vec<f64> = phis_deg.iter().map(|&d| deg_to_rad(d)).collect();
    info!("sweeping {count} angles");
    let points = sweep_coherence_time(cfg, &phis)?;

    let mut manifest = ctx.manifest(ManifestCommand::SweepAngle);
    manifest
        .param("phi_min_deg", args.phi_min)
        .param("phi_max_deg", args.phi_max)
        .param("step_deg", args.step);
    let rows: Vec<Vec<f64>> = phis_deg
        .iter()
        .zip(&points)
        .map(|(&d, p)| {
            vec![
                d,
                us(p.fit.tau_c),
                us(p.tau_c_analytic),
                us(p.tau_c_uncorrelated),
            ]
        })
        .collect();
    let mut outcome = Outcome::default();
    outcome.files.push(write_table(
        ctx.out,
        "sweep.csv",
        &manifest,
        &[
            "phi_deg",
            "tau_c_us",
            "tau_c_analytic_us",
            "tau_c_uncorrelated_us",
        ],
        &rows,
    )?);
    let column = |i: usize| rows.iter().map(|r| (r[0], r[i])).collect::<Vec<_>>();
    ctx.plot(
        "sweep.svg",
        &manifest,
        Plot::new("coherence time vs beam angle", "φ (deg)", "τ_c (µs)")
            .with(Series::new("fitted", column(1), Style::Markers))
            .with(Series::new("correlated beam", column(2), Style::Line))
            .with(Series::new(
                "uncorrelated ensemble",
                column(3),
                Style::Dashed,
            )),
        &mut outcome,
    )?;
    let best = sweep_argmax(&points).expect("at least one angle");
    outcome.summary.push(format!(
        "argmax phi = {} deg, tau_c = {:.4} us",
        rad_to_deg(best.phi),
        us(best.fit.tau_c)
    ));
    Ok(outcome)
}

fn analyze(ctx: &Context, args: &AnalyzeArgs) -> Result<Outcome> {
    let cfg = ctx.config();
    let phi = ctx.phi_or_default(args.phi)?;
    let mut manifest = ctx.manifest(ManifestCommand::Analyze);
    manifest.param("phi_rad", phi);
    let (tau_c, fit): (f64, Option<CoherenceFit>) = match (args.tau_c, &args.data) {
        (Some(t), None) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!("--tau-c must be > 0, got {t}")));
            }
            manifest.param("tau_c_s", t);
            (t, None)
        }
        (None, Some(path)) => {
            let loaded = data::read_decay_csv(path, phi)?;
            manifest.input("data", &loaded.bytes);
            let fit = fit_coherence_time(&loaded.value)?;
            (fit.tau_c, Some(fit))
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --tau-c and --data".into(),
            ))
        }
    };
    let report = infer_state_from_tau_c(cfg, phi, tau_c)?;

    let mut entries: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| entries.push((k.to_string(), v));
    put("phi_deg", rad_to_deg(phi).to_string());
    put("tau_c_us", us(tau_c).to_string());
    put(
        "tau_c_source",
        if fit.is_some() { "fit" } else { "given" }.to_string(),
    );
    if let Some(f) = &fit {
        put("tau_c_err_us", us(f.tau_c_err).to_string());
        put("fit_amplitude", f.amplitude.to_string());
        put("fit_residual_rms", f.residual_rms.to_string());
    }
    put("eta", report.eta_hat.to_string());
    put("one_minus_eta", report.one_minus_eta.to_string());
    put("area_hbar", report.area_hbar.to_string());
    put("area_max_hbar", report.area_max_hbar.to_string());
    put(
        "coherence_length_um",
        convert(report.coherence_length, Unit::Meter, Unit::Micrometer)?.to_string(),
    );
    put("phase_space_cells", report.phase_space_cells.to_string());
    put(
        "transverse_bound_us",
        report
            .transverse_bound
            .map_or("none".to_string(), |t| us(t).to_string()),
    );
    put("feasibility", report.feasibility.label().to_string());
    if let Feasibility::Capped { raw_one_minus_eta } = report.feasibility {
        put("raw_one_minus_eta", raw_one_minus_eta.to_string());
    }
    put("inputs_digest", report.inputs_digest.clone());

    let mut outcome = Outcome::default();
    outcome.files.push(write_key_values(
        ctx.out,
        "report.txt",
        &manifest,
        &entries,
    )?);
    outcome.summary.push(format!(
        "1 - eta = {:.3e}, area = {:.2} hbar (max {:.1}), L = {:.2} um, cells = {:.2}, {}",
        report.one_minus_eta,
        report.area_hbar,
        report.area_max_hbar,
        convert(report.coherence_length, Unit::Meter, Unit::Micrometer)?,
        report.phase_space_cells,
        report.feasibility.label()
    ));
    if !report.feasibility.is_feasible() {
        let msg = match report.feasibility {
            Feasibility::Capped { raw_one_minus_eta } => format!(
                "no correlation in (-1, 1) reproduces tau_c = {} us at this angle (raw 1 - eta = {raw_one_minus_eta:e})",
                us(tau_c)
            ),
            _ => "beam angle 0 probes only the momentum marginal; correlation is unidentifiable".into(),
        };
        outcome.warnings.push(msg);
        outcome.exit_code = EXIT_INFEASIBLE;
    }
    Ok(outcome)
}

fn reconstruct(ctx: &Context, args: &ReconstructArgs) -> Result<Outcome> {
    if args.grid < MIN_GRID_POINTS {
        return Err(CliError::Usage(format!(
            "--grid must be at least {MIN_GRID_POINTS}, got {}",
            args.grid
        )));
    }
    let loaded = data::read_projections(&args.projections)?;
    let set = loaded.value;
    let rec = fbp_reconstruct(&set, args.grid, args.grid)?;
    let mut manifest = ctx.manifest(ManifestCommand::Reconstruct);
    manifest
        .input("projections", &loaded.bytes)
        .param("grid", args.grid);

    let grid = &rec.grid;
    let (xs, ps) = (grid.axis_x(), grid.axis_p());
    let mut rows = Vec::with_capacity(xs.len() * ps.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            rows.push(vec![x, p, grid.value(i, j)]);
        }
    }
    let mut outcome = Outcome::default();
    outcome.files.push(write_table(
        ctx.out,
        "wigner.csv",
        &manifest,
        &["x_tilde", "p_tilde", "value"],
        &rows,
    )?);

    let m = grid.moments();
    let mut entries = vec![
        ("angles".to_string(), set.len().to_string()),
        ("grid".to_string(), args.grid.to_string()),
        ("half_width".to_string(), grid.half_width().to_string()),
        ("mean_x".to_string(), m.mean_x.to_string()),
        ("mean_p".to_string(), m.mean_p.to_string()),
        ("var_x".to_string(), m.var_x.to_string()),
        ("var_p".to_string(), m.var_p.to_string()),
        ("eta".to_string(), m.corr.to_string()),
    ];
    for w in &rec.warnings {
        entries.push(("warning".to_string(), w.clone()));
    }
    outcome.files.push(write_key_values(
        ctx.out,
        "moments.txt",
        &manifest,
        &entries,
    )?);
    if ctx.svg {
        // p̃ = 0 cut together with the x̃ = 0 cut
        let mid_x = xs.len() / 2;
        let mid_p = ps.len() / 2;
        ctx.plot(
            "wigner.svg",
            &manifest,
            Plot::new(
                "reconstructed Wigner function, central cuts",
                "coordinate",
                "W",
            )
            .with(Series::new(
                "W(x̃, 0)",
                xs.iter()
                    .enumerate()
                    .map(|(i, &x)| (x, grid.value(i, mid_p)))
                    .collect(),
                Style::Line,
            ))
            .with(Series::new(
                "W(0, p̃)",
                ps.iter()
                    .enumerate()
                    .map(|(j, &p)| (p, grid.value(mid_x, j)))
                    .collect(),
                Style::Dashed,
            )),
            &mut outcome,
        )?;
    }
    outcome.warnings.extend(rec.warnings.iter().cloned());
    outcome.summary.push(format!(
        "{} angles -> {}x{} grid: eta = {:.5}, var_x = {:.4}, var_p = {:.4}",
        set.len(),
        args.grid,
        args.grid,
        m.corr,
        m.var_x,
        m.var_p
    ));
    Ok(outcome)
}

fn propagate_beam(ctx: &Context, args: &PropagateArgs) -> Result<Outcome> {
    let cfg = ctx.config();
    if !(args.t_max.is_finite() && args.t_max >= 0.0) {
        return Err(CliError::Usage(format!(
            "--t-max must be ≥ 0, got {}",
            args.t_max
        )));
    }
    let times = if args.t_max == 0.0 {
        vec![0.0]
    } else {
        if args.points < 2 {
            return Err(CliError::Usage(format!(
                "--points must be at least 2 for --t-max > 0, got {}",
                args.points
            )));
        }
        linspace(0.0, args.t_max, args.points)
    };
    let c = &cfg.constants;
    let rows = times
        .iter()
        .map(|&t| {
            let s = propagate(&cfg.beam, t, c)?;
            Ok(vec![
                convert(t, Unit::Second, Unit::Millisecond)?,
                convert(s.sigma_x(), Unit::Meter, Unit::Micrometer)?,
                s.eta(),
                s.phase_space_area(c),
            ])
        })
        .collect::<spps_core::Result<Vec<_>>>()?;
    let mut manifest = ctx.manifest(ManifestCommand::Propagate);
    manifest
        .param("t_max_s", args.t_max)
        .param("points", times.len());
    let mut outcome = Outcome::default();
    outcome.files.push(write_table(
        ctx.out,
        "propagate.csv",
        &manifest,
        &["t_ms", "sigma_x_um", "eta", "area_hbar"],
        &rows,
    )?);
    ctx.plot(
        "propagate.svg",
        &manifest,
        Plot::new("ballistic expansion", "t (ms)", "σ_x (µm)").with(Series::new(
            "σ_x",
            rows.iter().map(|r| (r[0], r[1])).collect(),
            Style::Line,
        )),
        &mut outcome,
    )?;
    let last = rows.last().expect("at least one time");
    outcome.summary.push(format!(
        "t = {} ms: sigma_x = {:.3} um, eta = {}, area = {:.4} hbar",
        last[0], last[1], last[2], last[3]
    ));
    Ok(outcome)
}
