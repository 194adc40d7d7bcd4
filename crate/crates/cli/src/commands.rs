//! The subcommands. Each returns the files it wrote plus a few summary lines.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use ndicke::dynamics::{polygon_summary, run_ensemble, PolygonSummary, Trajectory};
use ndicke::linear::{
    build_heff, critical_pump, ideal_phase, nonreciprocity, normal_modes, two_group_heff,
    EffectiveHamiltonian,
};
use ndicke::phase::{
    classify_phase, contour_data, line_cut, sweep, LineCut, LineCutOptions, PhaseGrid, PhaseLabel,
    PhasePoint,
};
use ndicke::stationary::{
    ground_orbit, lyapunov_minimize, multistart_search, random_starts, StationaryPoint,
};
use ndicke::{PhysicalParams, ReducedParams};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{ConfigError, Format, RunConfig};
use crate::output::{cell, num, opt, OutputDir, Table};
use crate::svg::{diverging, Plot, PALETTE};
use crate::{CliError, Command, Completion};

pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub completion: Completion,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    p: PhysicalParams,
    r: ReducedParams,
    out: OutputDir,
    lines: Vec<String>,
    completion: Completion,
}

impl Run<'_> {
    fn wants(&self, f: Format) -> bool {
        self.cfg.wants(f)
    }

    fn csv(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        if self.wants(Format::Csv) {
            self.out.csv(name, t)?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        if self.wants(Format::Json) {
            self.out.json(name, v)?;
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: &Plot) -> Result<(), CliError> {
        if self.wants(Format::Svg) {
            self.out.text(name, &plot.render())?;
        }
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.lines.push(line);
    }

    fn partial(&mut self) {
        self.completion = Completion::Partial;
    }
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let p = cfg.params.physical();
    let r = p.reduce()?;
    let out = OutputDir::create(&cfg.output_dir)?;
    let mut run = Run {
        cfg,
        p,
        r,
        out,
        lines: Vec::new(),
        completion: Completion::Full,
    };
    match cmd {
        Command::Modes => modes(&mut run)?,
        Command::Lyapunov => lyapunov(&mut run)?,
        Command::Steady => steady(&mut run)?,
        Command::Traj => traj(&mut run)?,
        Command::Phase => phase(&mut run)?,
        Command::Heff => heff(&mut run)?,
        Command::Config => {}
    }
    if run.wants(Format::Json) {
        run.out.text("config.json", &(cfg.to_json() + "\n"))?;
    }
    Ok(Report {
        files: run.out.written().to_vec(),
        lines: run.lines,
        completion: run.completion,
    })
}

fn hz(rad_per_s: f64) -> f64 {
    rad_per_s / TAU
}

/// ζ = k z expressed as z / λ.
fn lambda(zeta: f64) -> f64 {
    zeta / TAU
}

fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct ModesOut {
    n: usize,
    eps: f64,
    theta: f64,
    omega_plus: Option<[f64; 2]>,
    omega_minus: Option<[f64; 2]>,
    /// Units of ω_z.
    growth_rate: Option<f64>,
    growth_rate_per_s: Option<f64>,
    critical_pump_hz: Option<f64>,
    note: Option<String>,
}

fn modes(run: &mut Run) -> Result<(), CliError> {
    let r = &run.r;
    let (pair, note) = match normal_modes(r) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let omega_z = run.p.omega_z;
    let out = ModesOut {
        n: r.n,
        eps: r.eps,
        theta: r.theta,
        omega_plus: pair.map(|m| complex_pair(m.omega_plus)),
        omega_minus: pair.map(|m| complex_pair(m.omega_minus)),
        growth_rate: pair.map(|m| m.growth_rate),
        growth_rate_per_s: pair.map(|m| m.growth_rate * omega_z),
        critical_pump_hz: critical_pump(&run.p).ok().map(hz),
        note,
    };
    let mut t = Table::new("modes", ["quantity", "value"]);
    let mut row = |k: &str, v: Option<f64>| t.push(vec![k.to_string(), opt(v)]);
    row("eps", Some(out.eps));
    row("theta", Some(out.theta));
    row("omega_plus_re", out.omega_plus.map(|w| w[0]));
    row("omega_plus_im", out.omega_plus.map(|w| w[1]));
    row("omega_minus_re", out.omega_minus.map(|w| w[0]));
    row("omega_minus_im", out.omega_minus.map(|w| w[1]));
    row("growth_rate", out.growth_rate);
    row("growth_rate_per_s", out.growth_rate_per_s);
    row("critical_pump_hz", out.critical_pump_hz);
    run.csv("modes.csv", &t)?;
    run.json("modes.json", &out)?;

    run.say(format!("eps = {}, theta = {}", out.eps, out.theta));
    match (out.omega_plus, out.omega_minus, out.growth_rate) {
        (Some(a), Some(b), Some(g)) => {
            run.say(format!("omega+ = {} {:+}i", a[0], a[1]));
            run.say(format!("omega- = {} {:+}i", b[0], b[1]));
            run.say(format!("growth rate = {g} omega_z ({} 1/s)", g * omega_z));
        }
        _ => run.say(format!(
            "normal modes: {}",
            out.note.clone().unwrap_or_default()
        )),
    }
    if let Some(c) = out.critical_pump_hz {
        run.say(format!("critical pump = {} MHz", c / 1e6));
    }
    Ok(())
}

#[derive(Serialize)]
struct MinimumOut {
    orbit_id: usize,
    ground: bool,
    potential: f64,
    curvature: f64,
    alpha: [f64; 2],
    z_over_lambda: Vec<f64>,
}

#[derive(Serialize)]
struct LyapunovOut {
    starts: usize,
    ground_orbit_size: usize,
    minima: Vec<MinimumOut>,
}

fn lyapunov(run: &mut Run) -> Result<(), CliError> {
    if run.p.kappa != 0.0 {
        return Err(ConfigError::Invalid {
            field: "params.kappa".into(),
            reason: "the Lyapunov potential exists only for a lossless cavity (kappa = 0)".into(),
        }
        .into());
    }
    let lc = &run.cfg.lyapunov;
    let starts = random_starts(run.r.n, lc.starts, TAU * lc.half_width_lambda, run.cfg.seed);
    let minima = lyapunov_minimize(&starts, &run.r, lc.tol)?;
    let ground = ground_orbit(&minima).len();
    let n = run.r.n;

    let mut cols: Vec<String> = [
        "index",
        "orbit_id",
        "ground",
        "potential",
        "curvature",
        "alpha_re",
        "alpha_im",
    ]
    .map(String::from)
    .to_vec();
    cols.extend((1..=n).map(|j| format!("z{j}_over_lambda")));
    let mut t = Table::new("lyapunov-minima", cols);
    for (i, m) in minima.iter().enumerate() {
        let mut row = vec![
            cell(i),
            cell(m.orbit_id),
            cell(m.ground),
            num(m.potential),
            num(m.curvature),
            num(m.alpha.re),
            num(m.alpha.im),
        ];
        row.extend(m.zeta.iter().map(|&z| num(lambda(z))));
        t.push(row);
    }
    run.csv("lyapunov_minima.csv", &t)?;
    let out = LyapunovOut {
        starts: lc.starts,
        ground_orbit_size: ground,
        minima: minima
            .iter()
            .map(|m| MinimumOut {
                orbit_id: m.orbit_id,
                ground: m.ground,
                potential: m.potential,
                curvature: m.curvature,
                alpha: complex_pair(m.alpha),
                z_over_lambda: m.zeta.iter().map(|&z| lambda(z)).collect(),
            })
            .collect(),
    };
    run.json("lyapunov.json", &out)?;

    let mut plot = Plot::new("Lyapunov minima: cavity field", "Re alpha", "Im alpha");
    let (g, other): (Vec<_>, Vec<_>) = minima.iter().partition(|m| m.ground);
    plot.points(
        other.iter().map(|m| (m.alpha.re, m.alpha.im)).collect(),
        PALETTE[1],
        3.0,
    )
    .points(
        g.iter().map(|m| (m.alpha.re, m.alpha.im)).collect(),
        PALETTE[0],
        4.0,
    )
    .legend("ground orbit", PALETTE[0])
    .legend("metastable", PALETTE[1]);
    run.svg("lyapunov.svg", &plot)?;

    run.say(format!(
        "{} distinct minima from {} starts; ground orbit has {} broken minima",
        minima.len(),
        lc.starts,
        ground
    ));
    Ok(())
}

fn point_table(schema: &str, points: &[StationaryPoint], n: usize) -> Table {
    let mut cols: Vec<String> = [
        "index",
        "orbit_id",
        "stability",
        "residual",
        "max_re_eigenvalue",
        "alpha_re",
        "alpha_im",
    ]
    .map(String::from)
    .to_vec();
    cols.extend((1..=n).map(|j| format!("z{j}_over_lambda")));
    let mut t = Table::new(schema, cols);
    for (i, p) in points.iter().enumerate() {
        let top = p
            .eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut row = vec![
            cell(i),
            cell(p.orbit_id),
            p.stability.as_str().to_string(),
            num(p.residual),
            num(top),
            num(p.alpha.re),
            num(p.alpha.im),
        ];
        row.extend(p.zeta.iter().map(|&z| num(lambda(z))));
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct SteadyOut<'a> {
    phase_label: PhaseLabel,
    n_roots: usize,
    n_stable: usize,
    newton_failures: usize,
    outside_region: usize,
    points: &'a [StationaryPoint],
}

fn steady(run: &mut Run) -> Result<(), CliError> {
    let n = run.r.n;
    let region = run.cfg.search.region(n)?;
    let opts = run.cfg.search.root_options(n);
    let report = multistart_search(&region, &run.r, &opts)?;
    let label = classify_phase(&report);
    let n_stable = report.count_linearly_stable();

    let t = point_table("stationary-points", &report.points, n);
    run.csv("stationary_points.csv", &t)?;
    run.json(
        "steady.json",
        &SteadyOut {
            phase_label: label,
            n_roots: report.points.len(),
            n_stable,
            newton_failures: report.newton_failures,
            outside_region: report.outside_region,
            points: &report.points,
        },
    )?;

    let mut plot = Plot::new("Stationary states: cavity field", "Re alpha", "Im alpha");
    let (stable, unstable): (Vec<_>, Vec<_>) = report
        .points
        .iter()
        .partition(|p| p.stability.is_linearly_stable());
    plot.points(
        unstable.iter().map(|p| (p.alpha.re, p.alpha.im)).collect(),
        PALETTE[1],
        3.0,
    )
    .points(
        stable.iter().map(|p| (p.alpha.re, p.alpha.im)).collect(),
        PALETTE[0],
        4.0,
    )
    .legend("stable", PALETTE[0])
    .legend("unstable", PALETTE[1]);
    run.svg("steady.svg", &plot)?;

    run.say(format!(
        "phase {}: {} stationary states, {} linearly stable",
        label.as_str(),
        report.points.len(),
        n_stable
    ));
    Ok(())
}

#[derive(Serialize)]
struct TrajOut<'a> {
    count: usize,
    failed: Vec<(usize, String)>,
    endpoints: Vec<[f64; 2]>,
    cluster_radius: f64,
    polygon: Option<&'a PolygonSummary>,
}

fn trajectory_table(traj: &Trajectory, n: usize, omega_z: f64) -> Table {
    let mut cols: Vec<String> = vec!["t_s".into(), "alpha_re".into(), "alpha_im".into()];
    cols.extend((1..=n).map(|j| format!("z{j}_over_lambda")));
    cols.extend((1..=n).map(|j| format!("pi{j}")));
    let mut t = Table::new("trajectory", cols);
    for (tau, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![num(tau / omega_z), num(s.alpha.re), num(s.alpha.im)];
        row.extend(s.mech.zeta.iter().map(|&z| num(lambda(z))));
        row.extend(s.mech.pi.iter().map(|&p| num(p)));
        t.push(row);
    }
    t
}

fn traj(run: &mut Run) -> Result<(), CliError> {
    let n = run.r.n;
    let omega_z = run.p.omega_z;
    let ctl = run.cfg.integrator.controls(omega_z);
    let spec = run.cfg.ensemble.spec(run.cfg.seed);
    let results = run_ensemble(&spec, &run.r, &ctl)?;

    let mut ok: Vec<(usize, &Trajectory)> = Vec::new();
    let mut failed: Vec<(usize, String)> = Vec::new();
    for (i, res) in results.iter().enumerate() {
        match res {
            Ok(t) => ok.push((i, t)),
            Err(e) => failed.push((i, e.to_string())),
        }
    }
    if ok.is_empty() {
        let first = failed.first().map(|f| f.1.clone()).unwrap_or_default();
        return Err(CliError::AllFailed(format!(
            "every trajectory failed (first: {first})"
        )));
    }
    if !failed.is_empty() {
        run.partial();
    }

    let width = results.len().to_string().len().max(4);
    for &(i, t) in &ok {
        let table = trajectory_table(t, n, omega_z);
        run.csv(&format!("trajectories/traj_{i:0width$}.csv"), &table)?;
    }

    let finals: Vec<Complex64> = ok.iter().map(|(_, t)| t.final_alpha()).collect();
    let largest = finals.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let radius = (run.cfg.ensemble.cluster_fraction * largest).max(f64::MIN_POSITIVE);
    let polygon = polygon_summary(&finals, &run.r, radius)?;

    let mut t = Table::new(
        "trajectory-endpoints",
        ["index", "alpha_re", "alpha_im", "cluster"],
    );
    for (k, &(i, tr)) in ok.iter().enumerate() {
        let a = tr.final_alpha();
        let cluster = polygon
            .clusters
            .members
            .iter()
            .position(|m| m.contains(&k))
            .expect("every endpoint is clustered");
        t.push(vec![cell(i), num(a.re), num(a.im), cell(cluster)]);
    }
    run.csv("endpoints.csv", &t)?;
    run.json(
        "clusters.json",
        &TrajOut {
            count: results.len(),
            failed: failed.clone(),
            endpoints: finals.iter().map(|&z| complex_pair(z)).collect(),
            cluster_radius: radius,
            polygon: Some(&polygon),
        },
    )?;

    let mut plot = Plot::new("Cavity field trajectories", "Re alpha", "Im alpha");
    for (k, &(_, tr)) in ok.iter().enumerate() {
        let path = tr.alpha_series.iter().map(|z| (z.re, z.im)).collect();
        plot.line(path, PALETTE[k % PALETTE.len()]);
    }
    plot.points(finals.iter().map(|z| (z.re, z.im)).collect(), "black", 3.0);
    run.svg("trajectories.svg", &plot)?;

    run.say(format!(
        "{} of {} trajectories finished; {} endpoint clusters, {} on the symmetry orbit ({:.0}% of endpoints)",
        ok.len(),
        results.len(),
        polygon.clusters.count(),
        polygon.vertex_count(),
        100.0 * polygon.assigned_fraction
    ));
    for (i, e) in &failed {
        run.say(format!("trajectory {i} failed: {e}"));
    }
    Ok(())
}

const LABELS: [(PhaseLabel, &str); 4] = [
    (PhaseLabel::Normal, "#d9d9d9"),
    (PhaseLabel::DispersiveBroken, "#2166ac"),
    (PhaseLabel::ReactiveBroken, "#b2182b"),
    (PhaseLabel::Indeterminate, "#000000"),
];

fn label_color(l: PhaseLabel) -> &'static str {
    LABELS
        .iter()
        .find(|(k, _)| *k == l)
        .map(|(_, c)| *c)
        .unwrap()
}

#[derive(Serialize)]
struct LineCutOut {
    delta_pc_hz: f64,
    branch_end_hz: Option<f64>,
    end_z_over_lambda: Option<f64>,
    jump_at_hz: Option<f64>,
    jump_size_lambda: Option<f64>,
    error: Option<String>,
}

fn phase(run: &mut Run) -> Result<(), CliError> {
    let pc = run.cfg.phase.clone();
    let n = run.r.n;
    let sweep_axes = match (&pc.omega_axis, &pc.delta_axis) {
        (Some(o), Some(d)) => Some((o.values(), d.values())),
        (None, None) => None,
        _ => {
            return Err(ConfigError::Invalid {
                field: "phase".into(),
                reason: "omega_axis and delta_axis must be given together".into(),
            }
            .into())
        }
    };
    if sweep_axes.is_none() && pc.line_cuts.is_empty() && pc.contours.is_empty() {
        return Err(ConfigError::Invalid {
            field: "phase".into(),
            reason: "nothing to compute: set omega_axis/delta_axis, line_cuts or contours".into(),
        }
        .into());
    }
    if !pc.contours.is_empty() && n != 4 {
        return Err(ConfigError::Invalid {
            field: "phase.contours".into(),
            reason: "force contours need params.n = 4".into(),
        }
        .into());
    }

    if let Some((omegas, deltas)) = sweep_axes {
        let region = run.cfg.search.region(n)?;
        let opts = run.cfg.search.root_options(n);
        let grid = PhaseGrid {
            omegas: omegas.clone(),
            deltas: deltas.clone(),
        };
        let points = sweep(&grid, &run.p, &region, &opts)?;
        write_sweep(run, &omegas, &deltas, &points)?;
    }

    if !pc.line_cuts.is_empty() {
        let omegas = pc.line_cut_axis.values();
        let mut opts = LineCutOptions::for_groups(n);
        opts.jump_threshold = pc.jump_threshold;
        let mut summaries = Vec::new();
        let mut plot = Plot::new(
            "Stable branch line cuts",
            "pump Rabi frequency (MHz)",
            "z3 / lambda",
        );
        for (k, d) in pc.line_cuts.iter().enumerate() {
            let delta = d.rad_per_s();
            match line_cut(delta, &omegas, &run.p, &opts) {
                Ok(cut) => {
                    write_cut(run, k, &cut)?;
                    let color = PALETTE[k % PALETTE.len()];
                    let pts: Vec<(f64, f64)> = cut
                        .omegas
                        .iter()
                        .zip(&cut.branch)
                        .filter_map(|(&o, b)| b.map(|z| (hz(o) / 1e6, lambda(z))))
                        .collect();
                    plot.line(pts.clone(), color)
                        .points(pts, color, 1.5)
                        .legend(&format!("Dpc = {} MHz", hz(delta) / 1e6), color);
                    run.say(match cut.jump_at {
                        Some(j) => format!(
                            "line cut {k} (Dpc = {} MHz): first-order jump at {} MHz (size {} lambda)",
                            hz(delta) / 1e6,
                            hz(j) / 1e6,
                            lambda(cut.jump_size.unwrap_or(0.0))
                        ),
                        None => format!(
                            "line cut {k} (Dpc = {} MHz): branch ends continuously at {} MHz",
                            hz(delta) / 1e6,
                            cut.branch_end.map_or("n/a".into(), |b| (hz(b) / 1e6).to_string())
                        ),
                    });
                    summaries.push(LineCutOut {
                        delta_pc_hz: hz(delta),
                        branch_end_hz: cut.branch_end.map(hz),
                        end_z_over_lambda: cut.end_zeta.map(lambda),
                        jump_at_hz: cut.jump_at.map(hz),
                        jump_size_lambda: cut.jump_size.map(lambda),
                        error: None,
                    });
                }
                Err(e) => {
                    run.partial();
                    run.say(format!("line cut {k} failed: {e}"));
                    summaries.push(LineCutOut {
                        delta_pc_hz: hz(delta),
                        branch_end_hz: None,
                        end_z_over_lambda: None,
                        jump_at_hz: None,
                        jump_size_lambda: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        run.json("line_cuts.json", &summaries)?;
        run.svg("line_cuts.svg", &plot)?;
    }

    for (k, req) in pc.contours.iter().enumerate() {
        let p = PhysicalParams {
            omega_pump: req.omega_pump.rad_per_s(),
            delta_pc: req.delta_pc.rad_per_s(),
            ..run.p
        };
        let half = TAU * run.cfg.search.half_width_lambda;
        let opts = run.cfg.search.root_options(n);
        match contour_data(&p, pc.contour_points, half, &opts) {
            Ok(data) => write_contour(run, k, &data)?,
            Err(e) => {
                run.partial();
                run.say(format!("contour {k} failed: {e}"));
            }
        }
    }
    Ok(())
}

fn write_sweep(
    run: &mut Run,
    omegas: &[f64],
    deltas: &[f64],
    points: &[PhasePoint],
) -> Result<(), CliError> {
    let mut t = Table::new(
        "phase-diagram",
        [
            "omega_pump_hz",
            "delta_pc_hz",
            "tracked_z_over_lambda",
            "phase_label",
            "n_roots",
            "n_stable",
        ],
    );
    for p in points {
        t.push(vec![
            num(hz(p.omega_pump)),
            num(hz(p.delta_pc)),
            opt(p.tracked_zeta.map(lambda)),
            p.phase_label.as_str().to_string(),
            cell(p.n_roots),
            cell(p.n_stable),
        ]);
    }
    run.csv("phase_diagram.csv", &t)?;
    run.json("phase_diagram.json", &points)?;

    let xs: Vec<f64> = omegas.iter().map(|&o| hz(o) / 1e6).collect();
    let ys: Vec<f64> = deltas.iter().map(|&d| hz(d) / 1e6).collect();
    let mut labels = Plot::new(
        "Phase diagram",
        "pump Rabi frequency (MHz)",
        "pump-cavity detuning (MHz)",
    );
    labels.cells(
        xs.clone(),
        ys.clone(),
        points
            .iter()
            .map(|p| label_color(p.phase_label).to_string())
            .collect(),
    );
    for (l, c) in LABELS {
        labels.legend(l.as_str(), c);
    }
    run.svg("phase_labels.svg", &labels)?;

    let zmax = points
        .iter()
        .filter_map(|p| p.tracked_zeta)
        .fold(0.0f64, |m, z| m.max(lambda(z).abs()))
        .max(f64::MIN_POSITIVE);
    let mut tracked = Plot::new(
        "Tracked position z3 / lambda",
        "pump Rabi frequency (MHz)",
        "pump-cavity detuning (MHz)",
    );
    tracked.cells(
        xs,
        ys,
        points
            .iter()
            .map(|p| match p.tracked_zeta {
                Some(z) if p.stable => diverging(0.5 + 0.5 * lambda(z) / zmax),
                _ => "#d9d9d9".to_string(),
            })
            .collect(),
    );
    run.svg("phase_tracked.svg", &tracked)?;

    let mut counts = [0usize; 4];
    for p in points {
        counts[LABELS
            .iter()
            .position(|(l, _)| *l == p.phase_label)
            .unwrap()] += 1;
    }
    let summary = LABELS
        .iter()
        .zip(counts)
        .map(|((l, _), c)| format!("{} {c}", l.as_str()))
        .collect::<Vec<_>>()
        .join(", ");
    run.say(format!(
        "phase sweep over {} points: {summary}",
        points.len()
    ));
    Ok(())
}

fn write_cut(run: &mut Run, k: usize, cut: &LineCut) -> Result<(), CliError> {
    let mut t = Table::new(
        "line-cut",
        ["omega_pump_hz", "delta_pc_hz", "tracked_z_over_lambda"],
    );
    for (o, b) in cut.omegas.iter().zip(&cut.branch) {
        t.push(vec![num(hz(*o)), num(hz(cut.delta_pc)), opt(b.map(lambda))]);
    }
    run.csv(&format!("line_cut_{k}.csv"), &t)
}

fn write_contour(
    run: &mut Run,
    k: usize,
    data: &ndicke::phase::ContourData,
) -> Result<(), CliError> {
    for (name, curves) in [("first", &data.first), ("second", &data.second)] {
        let mut t = Table::new(
            "force-contour",
            ["curve", "z1_over_lambda", "z2_over_lambda"],
        );
        for (c, line) in curves.iter().enumerate() {
            for pt in line {
                t.push(vec![cell(c), num(lambda(pt[0])), num(lambda(pt[1]))]);
            }
        }
        run.csv(&format!("contour_{k}_{name}.csv"), &t)?;
    }
    let roots = point_table("contour-roots", &data.roots, 4);
    run.csv(&format!("contour_{k}_roots.csv"), &roots)?;
    run.json(&format!("contour_{k}.json"), data)?;

    let mut plot = Plot::new("Zero-force contours", "z1 / lambda", "z2 / lambda");
    for line in &data.first {
        plot.line(
            line.iter().map(|p| (lambda(p[0]), lambda(p[1]))).collect(),
            PALETTE[0],
        );
    }
    for line in &data.second {
        plot.line(
            line.iter().map(|p| (lambda(p[0]), lambda(p[1]))).collect(),
            PALETTE[1],
        );
    }
    let (stable, unstable): (Vec<_>, Vec<_>) = data
        .roots
        .iter()
        .partition(|p| p.stability.is_linearly_stable());
    plot.points(
        stable
            .iter()
            .map(|p| (lambda(p.zeta[0]), lambda(p.zeta[1])))
            .collect(),
        "black",
        4.0,
    )
    .points(
        unstable
            .iter()
            .map(|p| (lambda(p.zeta[0]), lambda(p.zeta[1])))
            .collect(),
        PALETTE[4],
        3.0,
    )
    .legend("F1 = 0", PALETTE[0])
    .legend("F2 = 0", PALETTE[1])
    .legend("stable root", "black")
    .legend("unstable root", PALETTE[4]);
    run.svg(&format!("contour_{k}.svg"), &plot)?;
    let n_stable = stable.len();
    run.say(format!(
        "contour {k}: {} roots, {} linearly stable",
        data.roots.len(),
        n_stable
    ));
    Ok(())
}

#[derive(Serialize)]
struct HeffOut {
    n: usize,
    phi: f64,
    matrix: Vec<Vec<f64>>,
    spectrum: Vec<[f64; 2]>,
    growth_rate: f64,
    nonreciprocity: f64,
    two_group_phase: Option<f64>,
    two_group_matrix: Option<Vec<Vec<f64>>>,
    two_group_nonreciprocity: Option<f64>,
    ideal_phase: Option<f64>,
    ideal_phase_plus_theta_mod_pi: Option<f64>,
}

fn rows(h: &EffectiveHamiltonian) -> Vec<Vec<f64>> {
    let m = &h.matrix;
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn heff(run: &mut Run) -> Result<(), CliError> {
    let r = &run.r.clone();
    let h = build_heff(r);
    let ideal = ideal_phase(r).ok();
    let varphi = run.cfg.heff.two_group_phase.or(ideal);
    let two = varphi.map(|v| two_group_heff(r, v));
    let out = HeffOut {
        n: r.n,
        phi: h.phi_used,
        matrix: rows(&h),
        spectrum: h.spectrum().into_iter().map(complex_pair).collect(),
        growth_rate: h.growth_rate(),
        nonreciprocity: nonreciprocity(&h),
        two_group_phase: varphi,
        two_group_matrix: two.as_ref().map(rows),
        two_group_nonreciprocity: two.as_ref().map(nonreciprocity),
        ideal_phase: ideal,
        ideal_phase_plus_theta_mod_pi: ideal.map(|v| (v + r.theta).rem_euclid(PI)),
    };

    let cols: Vec<String> = std::iter::once("row".to_string())
        .chain((1..=r.n).map(|j| format!("col{j}")))
        .collect();
    let mut t = Table::new("heff-matrix", cols);
    for (i, row) in out.matrix.iter().enumerate() {
        let mut cells = vec![cell(i + 1)];
        cells.extend(row.iter().map(|&x| num(x)));
        t.push(cells);
    }
    run.csv("heff_matrix.csv", &t)?;
    run.json("heff.json", &out)?;

    run.say(format!(
        "H_eff ({0}x{0}): nonreciprocity {1}, growth rate {2}",
        r.n, out.nonreciprocity, out.growth_rate
    ));
    match ideal {
        Some(v) => run.say(format!(
            "decoupling phase {v} rad; two-group H12 = {}, H21 = {}",
            out.two_group_matrix.as_ref().map_or(f64::NAN, |m| m[0][1]),
            out.two_group_matrix.as_ref().map_or(f64::NAN, |m| m[1][0]),
        )),
        None => run.say("no decoupling phase: the cavity is lossless".to_string()),
    }
    Ok(())
}
