//! `run`, `compare` and `validate`.

use std::path::{Path, PathBuf};

use cerg_core::sim::run_closed_loop;
use cerg_core::{PlantModel, RunOutcome, Scenario, SoftConstraint, TraceLog, TraceRecord};

use crate::config::{self, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::{self, RunSummary};
use crate::plant::Plant;
use crate::plot::{Figure, Guide, Series};

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub path: PathBuf,
    pub no_governor: bool,
    pub out: Option<PathBuf>,
    pub plots: bool,
}

/// Paths written by a command.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    fn push(&mut self, path: PathBuf) -> &Path {
        self.files.push(path);
        self.files.last().expect("just pushed")
    }
}

fn simulate(scenario: &Scenario<Plant, 2>) -> Result<RunOutcome<2>> {
    run_closed_loop(scenario).map_err(|e| CliError::Config(e.to_string()))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Simulates one scenario and writes its trace, summary and optional plots.
/// A numerical failure still writes the partial trace before returning
/// [`CergError::NumericalFailure`].
pub fn run(args: &RunArgs) -> Result<(RunSummary, Written)> {
    let cfg = config::load(&args.path)?;
    let mut scenario = cfg.scenario.clone();
    if args.no_governor {
        scenario.governor_enabled = false;
    }
    let outcome = simulate(&scenario)?;
    let summary =
        output::summarize(&cfg.name, &scenario, &outcome.trace, outcome.error.as_ref(), cfg.output.steady_window);

    let dir = cfg.out_dir(args.out.as_deref());
    prepare_dir(&dir)?;
    let stem = if scenario.governor_enabled { cfg.name.clone() } else { format!("{}-baseline", cfg.name) };
    let mut written = Written::default();
    output::write_trace_csv(written.push(dir.join(format!("{stem}.csv"))), &outcome.trace)?;
    output::write_json(written.push(dir.join(format!("{stem}.summary.json"))), &summary)?;
    if args.plots || cfg.output.plots {
        let runs = [(summary.label(), &scenario, &outcome.trace)];
        for (suffix, fig) in figures(&stem, &runs) {
            fig.save(written.push(dir.join(format!("{stem}-{suffix}.svg"))))?;
        }
    }

    print_summary(&summary);
    for f in &written.files {
        println!("wrote {}", f.display());
    }
    match outcome.error {
        Some(e) => Err(CliError::Core(e)),
        None => Ok((summary, written)),
    }
}

/// Runs the governed scenario, the governed alternate controller when both
/// gain sets are present, and the ungoverned baseline, concurrently.
pub fn compare(path: &Path, out: Option<&Path>) -> Result<(Vec<RunSummary>, Written)> {
    let cfg = config::load(path)?;
    let mut runs: Vec<Scenario<Plant, 2>> = Vec::with_capacity(3);
    runs.push(Scenario { governor_enabled: true, ..cfg.scenario.clone() });
    if let Some(alt) = &cfg.alternate {
        runs.push(alt.clone());
    }
    runs.push(Scenario { governor_enabled: false, ..cfg.scenario.clone() });

    let outcomes: Vec<Result<RunOutcome<2>>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs.iter().map(|sc| s.spawn(move || simulate(sc))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let summaries: Vec<RunSummary> = runs
        .iter()
        .zip(&outcomes)
        .map(|(sc, o)| output::summarize(&cfg.name, sc, &o.trace, o.error.as_ref(), cfg.output.steady_window))
        .collect();

    let dir = cfg.out_dir(out);
    prepare_dir(&dir)?;
    let mut written = Written::default();
    for (summary, o) in summaries.iter().zip(&outcomes) {
        let file = dir.join(format!("{}-{}.csv", cfg.name, summary.label()));
        output::write_trace_csv(written.push(file), &o.trace)?;
    }
    output::write_json(written.push(dir.join(format!("{}-compare.json", cfg.name))), &summaries)?;
    let labelled: Vec<_> =
        summaries.iter().zip(&runs).zip(&outcomes).map(|((s, sc), o)| (s.label(), sc, &o.trace)).collect();
    let stem = format!("{}-compare", cfg.name);
    for (suffix, fig) in figures(&stem, &labelled) {
        fig.save(written.push(dir.join(format!("{stem}-{suffix}.svg"))))?;
    }

    print!("{}", force_table(&summaries));
    for f in &written.files {
        println!("wrote {}", f.display());
    }
    match outcomes.into_iter().find_map(|o| o.error) {
        Some(e) => Err(CliError::Core(e)),
        None => Ok((summaries, written)),
    }
}

/// Parses and validates; warns when the steady contact energy does not fit
/// under `E_max`.
pub fn validate(path: &Path) -> Result<ScenarioConfig> {
    let cfg = config::load(path)?;
    print!("{}", cfg.describe());
    if let Some(w) = energy_warning(&cfg) {
        eprintln!("warning: {w}");
    }
    println!("ok");
    Ok(cfg)
}

pub fn energy_warning(cfg: &ScenarioConfig) -> Option<String> {
    let e_ss = cfg.steady_contact_energy();
    let e_max = cfg.scenario.constraints.e_max;
    (e_ss >= e_max).then(|| {
        format!(
            "steady contact energy E_ss = {} is not below E_max = {}; contact at the full penetration delta_s is not admissible",
            output::format_sig(e_ss),
            output::format_sig(e_max)
        )
    })
}

pub fn force_table(summaries: &[RunSummary]) -> String {
    let mut out = format!(
        "{:<16} {:>14} {:>16} {:>18} {:>14}\n",
        "run", "peak |F| (N)", "steady |F| (N)", "first contact (s)", "OR violations"
    );
    for s in summaries {
        let steady = s.steady_state.as_ref().map_or("-".to_string(), |m| output::format_sig(m.force_mean));
        let contact = s.first_contact_time.map_or("-".to_string(), output::format_sig);
        out += &format!(
            "{:<16} {:>14} {:>16} {:>18} {:>14}\n",
            s.label(),
            output::format_sig(s.peak_force),
            steady,
            contact,
            s.or_violations
        );
    }
    out
}

fn print_summary(s: &RunSummary) {
    println!("scenario {} ({}, {} controller)", s.scenario, s.mode, s.controller);
    let phases: Vec<String> = s.phases.iter().map(|p| format!("{} @ {}s", p.phase, output::format_sig(p.t))).collect();
    println!("phases: {}", phases.join(" -> "));
    println!("peak |F| = {} N, OR violations = {}", output::format_sig(s.peak_force), s.or_violations);
    if let Some(m) = &s.steady_state {
        println!(
            "steady state: v = [{}, {}], |F| = {} N, V = {} J",
            output::format_sig(m.v_final[0]),
            output::format_sig(m.v_final[1]),
            output::format_sig(m.force_mean),
            output::format_sig(m.energy_mean)
        );
    }
    if let Some(e) = &s.error {
        println!("run stopped at t = {}: {e}", output::format_sig(s.t_end));
    }
}

/// Energy, contact force and planar trajectory plots, keyed by file suffix.
fn figures(title: &str, runs: &[(String, &Scenario<Plant, 2>, &TraceLog<2>)]) -> Vec<(&'static str, Figure)> {
    let Some(&(_, first, _)) = runs.first() else {
        return Vec::new();
    };
    let tag = |label: &str, what: &str| if runs.len() > 1 { format!("{label} {what}") } else { what.to_string() };

    let mut energy = Figure::new(format!("{title}: total energy"), "t (s)", "V (J)")
        .with_guide(Guide::horizontal("E_max", first.constraints.e_max));
    let mut force = Figure::new(format!("{title}: contact force"), "t (s)", "|F| (N)");
    let (qn, vn) = match first.plant {
        Plant::DoubleIntegrator(_) => ("q", "v"),
        Plant::RrArm(_) => ("f(q)", "f(v)"),
    };
    let mut traj = Figure::new(format!("{title}: planar trajectory"), "x (m)", "y (m)").equal_aspect();
    if let Some(h) = wall(first) {
        traj = traj.with_guide(h);
    }

    for (i, (label, sc, trace)) in runs.iter().enumerate() {
        let recs = &trace.records;
        energy = energy.with_series(Series::new(tag(label, "V"), recs.iter().map(|r| (r.t, r.energy)).collect()));
        force = force.with_series(Series::new(tag(label, "|F|"), recs.iter().map(|r| (r.t, r.force.norm())).collect()));
        let path = |f: &dyn Fn(&TraceRecord<2>) -> nalgebra::Vector2<f64>| {
            recs.iter()
                .map(|r| {
                    let p = f(r);
                    (p.x, p.y)
                })
                .collect::<Vec<_>>()
        };
        traj = traj
            .with_series(Series::new(tag(label, qn), path(&|r| sc.plant.forward_kinematics(&r.q))).color(i))
            .with_series(Series::new(tag(label, vn), path(&|r| sc.plant.forward_kinematics(&r.v))).color(i).dashed());
    }
    vec![("energy", energy), ("force", force), ("trajectory", traj)]
}

/// The soft halfspace in end-effector coordinates, when it has one.
fn wall(scenario: &Scenario<Plant, 2>) -> Option<Guide> {
    let h = match (&scenario.constraints.soft, scenario.plant) {
        (SoftConstraint::Task(s), _) => s.as_halfspace().copied(),
        (SoftConstraint::Joint(s), Plant::DoubleIntegrator(_)) => s.as_halfspace().copied(),
        (SoftConstraint::Joint(_), Plant::RrArm(_)) => None,
    }?;
    Some(Guide { label: "wall".into(), normal: (h.normal()[0], h.normal()[1]), offset: h.offset() })
}

/// Maps a command result to the process exit code, printing any error.
pub fn exit_code<T>(result: &Result<T>) -> u8 {
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
