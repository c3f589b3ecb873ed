mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use quantrack::lq::{riccati, transition_r, LQParams};
use quantrack::measures::{wasserstein2, Density, Domain};
use quantrack::oracle::{
    direct_optimal_control, discrete_lq, lp_wasserstein, riccati_rk4, DirectConfig, DiscreteInstance,
};
use quantrack::partition::averaged_density;
use quantrack::regimes::{
    evaluate_cost, solve_general, solve_periodic, solve_static, DemandSignal, Grid, OptimalControlSolution, Scenario,
    TrackKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use config::{Config, ConfigError, Overrides};
use output::{num, thinned, Artifacts};

/// Quantile-coordinate optimal control of resource swarms tracking a demand.
#[derive(Parser)]
#[command(name = "quantrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form solution for a time-invariant demand.
    SolveStatic(Flags),
    /// Steady-state filter solution for a periodic demand.
    SolvePeriodic(Flags),
    /// Finite-horizon solution for any demand signal.
    SolveGeneral(Flags),
    /// Distance between the resource and the demand at time zero.
    Wasserstein(Flags),
    /// Solve, advect the resource by the optimal field and price the result.
    Simulate(Flags),
    /// Run the reference-oracle checks against the library.
    Verify(Flags),
}

#[derive(Args, Clone)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "X")]
    alpha: Option<f64>,
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
    #[arg(long, value_name = "N")]
    nt: Option<usize>,
    #[arg(long, value_name = "N")]
    nx: Option<usize>,
    #[arg(long, value_name = "N")]
    harmonics: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            horizon: self.horizon,
            nt: self.nt,
            nx: self.nx,
            harmonics: self.harmonics,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                eprintln!("error: {c}");
                return ExitCode::from(2);
            }
            if let Some(q) = e.downcast_ref::<quantrack::Error>() {
                if q.is_input_error() {
                    eprintln!("error: invalid input ({}): {q}", q.module());
                    return ExitCode::from(2);
                }
                eprintln!("error: numerical failure in module `{}`: {q}", q.module());
                return ExitCode::from(3);
            }
            if let Some(v) = e.downcast_ref::<VerifyFailed>() {
                eprintln!("error: {v}");
                return ExitCode::from(3);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    let (name, flags) = match &command {
        Command::SolveStatic(f) => ("solve-static", f),
        Command::SolvePeriodic(f) => ("solve-periodic", f),
        Command::SolveGeneral(f) => ("solve-general", f),
        Command::Wasserstein(f) => ("wasserstein", f),
        Command::Simulate(f) => ("simulate", f),
        Command::Verify(f) => ("verify", f),
    };
    let overrides = flags.overrides();
    let mut cfg = Config::load(&flags.config)?;
    cfg.apply(&overrides);
    let ctx = Ctx { name, cfg, overrides };
    match command {
        Command::SolveStatic(_) => cmd_solve(&ctx, Mode::Static),
        Command::SolvePeriodic(_) => cmd_solve(&ctx, Mode::Periodic),
        Command::SolveGeneral(_) => cmd_solve(&ctx, Mode::General),
        Command::Wasserstein(_) => cmd_wasserstein(&ctx),
        Command::Simulate(_) => cmd_simulate(&ctx),
        Command::Verify(_) => cmd_verify(&ctx),
    }
}

struct Ctx {
    name: &'static str,
    cfg: Config,
    overrides: Overrides,
}

impl Ctx {
    fn artifacts(&self) -> Result<Artifacts> {
        Artifacts::create(&self.cfg.output_dir)
    }

    fn finish(&self, mut art: Artifacts, lines: Vec<(String, String)>) -> Result<()> {
        art.summary(self.name, &lines, &self.cfg, &self.overrides)?;
        for (k, v) in &lines {
            println!("{k} = {v}");
        }
        println!("wrote {}", art.path("summary.txt").display());
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Static,
    Periodic,
    General,
}

fn solve(mode: Mode, sc: &Scenario) -> quantrack::Result<OptimalControlSolution> {
    match mode {
        Mode::Static => solve_static(sc),
        Mode::Periodic => solve_periodic(sc),
        Mode::General => solve_general(sc),
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn cost_lines(sol: &OptimalControlSolution) -> Vec<(String, String)> {
    let c = sol.cost;
    vec![
        kv("regime", format!("{:?}", sol.regime)),
        kv("alpha", num(sol.alpha)),
        kv("horizon", num(sol.horizon)),
        kv("cells", sol.partition.cells().len()),
        kv("tracks", sol.layout.len()),
        kv("cost.assignment", num(c.assignment)),
        kv("cost.motion", num(c.motion)),
        kv("cost.total", num(c.total)),
        kv("cost.k", num(c.k)),
    ]
}

const Z_SAMPLES: usize = 40;
const MAX_ROWS: usize = 200;

fn z_grid() -> Vec<f64> {
    (0..Z_SAMPLES).map(|i| (i as f64 + 0.5) / Z_SAMPLES as f64).collect()
}

fn write_solution(art: &mut Artifacts, sol: &OptimalControlSolution) -> Result<()> {
    let cells: Vec<(usize, usize)> = sol
        .layout
        .tracks
        .iter()
        .enumerate()
        .filter_map(|(j, t)| match t.kind {
            TrackKind::Cell(c) => Some((c, j)),
            _ => None,
        })
        .collect();
    let steps = thinned(sol.times.len() - 1, MAX_ROWS);
    let mut rows = Vec::new();
    for &k in &steps {
        let t = sol.times[k];
        for &(c, j) in &cells {
            let tr = &sol.layout.tracks[j];
            rows.push(vec![
                num(t),
                c.to_string(),
                num(tr.z_lo),
                num(tr.z_hi),
                num(sol.paths[j].state_at(t)),
                num(sol.paths[j].control_at(t)),
                num(sol.paths[j].demand_at(t)),
            ]);
        }
    }
    art.csv("cells.csv", &["t", "cell", "z_lo", "z_hi", "position", "control", "demand"], rows)?;

    let zs = z_grid();
    let mut rows = Vec::new();
    for &k in &steps {
        let t = sol.times[k];
        let q = sol.quantile_at(t)?;
        for &z in &zs {
            rows.push(vec![num(t), num(z), num(q.eval(z))]);
        }
    }
    art.csv("quantiles.csv", &["t", "z", "q"], rows)?;

    let mut p = String::from("# cell z_lo z_hi level mass\n");
    for (i, c) in sol.partition.cells().iter().enumerate() {
        p.push_str(&format!("cell {i} {} {} {} {}\n", c.z_lo, c.z_hi, c.level, c.mass()));
    }
    for (lo, hi) in sol.partition.continuum() {
        p.push_str(&format!("continuum {lo} {hi}\n"));
    }
    art.text("partition.txt", &p)
}

fn cmd_solve(ctx: &Ctx, mode: Mode) -> Result<()> {
    let sc = ctx.cfg.scenario()?;
    let sol = solve(mode, &sc)?;
    let mut art = ctx.artifacts()?;
    write_solution(&mut art, &sol)?;
    let mut lines = cost_lines(&sol);
    match mode {
        Mode::Static => {
            let dbar = averaged_density(&ctx.cfg.demand_density()?.with_domain(sol.domain)?, &sol.partition)?;
            let params = LQParams::new(sc.alpha, sc.horizon, sc.grid.nt)?;
            let w0 = wasserstein2(&sol.resource_at(0.0)?, &dbar);
            let steps = thinned(sol.times.len() - 1, MAX_ROWS);
            let mut rows = Vec::new();
            let mut last = 1.0;
            for &k in &steps {
                let t = sol.times[k];
                let w = wasserstein2(&sol.resource_at(t)?, &dbar);
                last = if w0 > 0.0 { w / w0 } else { 0.0 };
                rows.push(vec![num(t), num(w), num(last), num(transition_r(&params, t, 0.0))]);
            }
            art.csv("trajectory.csv", &["t", "w2_to_dbar", "ratio", "phi_r"], rows)?;
            lines.push(kv("w2_ratio_final", num(last)));
            lines.push(kv("sech_horizon_over_alpha", num(1.0 / (sc.horizon / sc.alpha).cosh())));
        }
        Mode::Periodic => {
            let rows = sol.harmonics.iter().map(|h| {
                vec![
                    h.cell.to_string(),
                    h.k.to_string(),
                    num(h.omega),
                    num(h.demand_amplitude),
                    num(h.resource_amplitude),
                    num(h.gain),
                ]
            });
            art.csv(
                "harmonics.csv",
                &["cell", "k", "omega", "demand_amplitude", "resource_amplitude", "gain"],
                rows,
            )?;
            if let Some(w) = &sol.warmup {
                let mut rows = Vec::new();
                for (t, pos) in w.times.iter().zip(&w.positions) {
                    for (c, x) in pos.iter().enumerate() {
                        rows.push(vec![num(*t), c.to_string(), num(*x)]);
                    }
                }
                art.csv("warmup.csv", &["t", "cell", "position"], rows)?;
            }
            lines.push(kv("period", num(sol.horizon)));
            lines.push(kv("harmonic_rows", sol.harmonics.len()));
        }
        Mode::General => {
            let steps = thinned(sol.times.len() - 1, MAX_ROWS);
            let mut rows = Vec::new();
            for &k in &steps {
                let t = sol.times[k];
                let d = sc.demand.density_at(t)?.with_domain(sol.domain)?;
                rows.push(vec![num(t), num(wasserstein2(&sol.resource_at(t)?, &d))]);
            }
            art.csv("trajectory.csv", &["t", "w2_to_demand"], rows)?;
        }
    }
    ctx.finish(art, lines)
}

fn cmd_wasserstein(ctx: &Ctx) -> Result<()> {
    let dom = ctx.cfg.domain()?;
    let r = ctx.cfg.resource()?;
    let d = ctx.cfg.demand_density()?.with_domain(dom)?;
    let w = wasserstein2(&r, &d);
    let art = ctx.artifacts()?;
    ctx.finish(art, vec![kv("w2", num(w)), kv("w2_squared", num(w * w))])
}

fn cmd_simulate(ctx: &Ctx) -> Result<()> {
    let sc = ctx.cfg.scenario()?;
    let mode = match &sc.demand {
        DemandSignal::Static(_) => Mode::Static,
        DemandSignal::Periodic { period, .. } if (sc.horizon - period).abs() <= 1e-12 * period => Mode::Periodic,
        _ => Mode::General,
    };
    let sol = solve(mode, &sc)?;
    let sim = sol.simulate(sc.grid.nt)?;
    let v = sol.velocity();
    let realized = evaluate_cost(&sol.times, &sim, &v, &sc.demand, sc.alpha)?;
    let mut art = ctx.artifacts()?;
    let rows = realized
        .slices
        .iter()
        .map(|s| vec![num(s.t), num(s.w2_sq), num(s.motion_x), num(s.motion_z)]);
    art.csv("realized.csv", &["t", "w2_sq", "motion_x", "motion_z"], rows)?;
    let zs = z_grid();
    let mut rows = Vec::new();
    for k in thinned(sim.len() - 1, MAX_ROWS) {
        let q = quantrack::measures::quantile_of(&sim[k]);
        let qe = sol.quantile_at(sol.times[k])?;
        for &z in &zs {
            rows.push(vec![num(sol.times[k]), num(z), num(q.eval(z)), num(qe.eval(z))]);
        }
    }
    art.csv("quantiles.csv", &["t", "z", "q_simulated", "q_closed_form"], rows)?;
    // periodic costs are per unit time
    let scale = if mode == Mode::Periodic { sol.horizon } else { 1.0 };
    let predicted = sol.cost.total * scale;
    let mut lines = cost_lines(&sol);
    lines.push(kv("realized.assignment", num(realized.assignment)));
    lines.push(kv("realized.motion", num(realized.motion)));
    lines.push(kv("realized.total", num(realized.total)));
    lines.push(kv("realized_vs_predicted_rel", num((realized.total - predicted).abs() / predicted.max(1e-300))));
    ctx.finish(art, lines)
}

#[derive(Debug)]
struct VerifyFailed(Vec<String>);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerifyFailed {}

fn cmd_verify(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let alpha = cfg.alpha;
    let horizon = cfg.horizon()?;
    let nt = cfg.grid()?.nt;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks: Vec<(&str, f64, f64)> = Vec::new();

    let unit = Domain::new(0.0, 1.0)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = random_atoms(&mut rng, 6);
        let b = random_atoms(&mut rng, 6);
        let w = wasserstein2(&Density::from_atoms(unit, &a)?, &Density::from_atoms(unit, &b)?);
        worst = worst.max((w * w - lp_wasserstein(&a, &b)?).abs());
    }
    checks.push(("wasserstein_vs_lp", worst, 1e-9));

    let params = LQParams::new(alpha, horizon, nt)?;
    let exact = riccati(&params);
    let rk = riccati_rk4(alpha, horizon, nt)?;
    let err = params
        .grid()
        .iter()
        .zip(&rk)
        .map(|(&t, &p)| (exact.p(t) - p).abs())
        .fold(0.0, f64::max);
    checks.push(("riccati_vs_rk4", err, 1e-8));

    let disc = discrete_lq(alpha, horizon, 1.0, &vec![0.0; nt + 1])?;
    let closed = alpha * (horizon / alpha).tanh();
    checks.push(("discrete_lq_static_rel", (disc.cost - closed).abs() / closed, 0.01));

    let res = {
        let mut a = random_atoms(&mut rng, 3);
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        a
    };
    let dem = random_atoms(&mut rng, 3);
    let sc = Scenario {
        resource: Density::from_atoms(unit, &res)?,
        demand: DemandSignal::Static(Density::from_atoms(unit, &dem)?),
        alpha,
        horizon,
        grid: Grid {
            nx: 4,
            nt: nt.min(400),
            n_harmonics: 8,
        },
    };
    let sol = solve_static(&sc)?;
    let inst = DiscreteInstance::from_fn(&res, |_| dem.clone(), alpha, horizon, 50)?;
    let direct = direct_optimal_control(
        &inst,
        &DirectConfig {
            seed: cfg.seed,
            ..DirectConfig::default()
        },
    )?;
    checks.push((
        "direct_oracle_undercut_rel",
        (sol.cost.total - direct.cost) / sol.cost.total,
        0.005,
    ));

    let sc = cfg.scenario()?;
    let sol = match &sc.demand {
        DemandSignal::Static(_) => solve_static(&sc)?,
        _ => solve_general(&sc)?,
    };
    let traj = sol.resource_trajectory()?;
    let realized = evaluate_cost(&sol.times, &traj, &sol.velocity(), &sc.demand, alpha)?;
    let gap = realized
        .slices
        .iter()
        .map(|s| (s.motion_x - s.motion_z).abs())
        .fold(0.0, f64::max);
    checks.push(("motion_identity", gap, 1e-8));

    let mut art = ctx.artifacts()?;
    let rows = checks
        .iter()
        .map(|&(n, v, tol)| vec![n.to_string(), num(v), num(tol), (v <= tol).to_string()]);
    art.csv("verify.csv", &["check", "value", "tolerance", "pass"], rows)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !(c.1 <= c.2))
        .map(|c| format!("{} = {:.3e} > {:.0e}", c.0, c.1, c.2))
        .collect();
    let mut lines: Vec<(String, String)> = checks
        .iter()
        .map(|&(n, v, tol)| kv(n, format!("{} (tol {}) {}", num(v), num(tol), if v <= tol { "PASS" } else { "FAIL" })))
        .collect();
    lines.push(kv("seed", cfg.seed));
    ctx.finish(art, lines)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailed(failed).into())
    }
}

fn random_atoms(rng: &mut ChaCha8Rng, max: usize) -> Vec<(f64, f64)> {
    let n = rng.gen_range(1..=max);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|m| (rng.gen_range(0.0..1.0), m / s)).collect()
}
