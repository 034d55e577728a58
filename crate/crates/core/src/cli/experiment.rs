//! Running experiment plans and writing their outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::avoidance::{AvoidanceMethod, Obstacle};
use crate::dmp::{Dmp, Trajectory, Vector};
use crate::error::{ErrorKind, Result};
use crate::metrics::{compare, compare_with_goal, ComparisonReport};
use crate::sim::{min_mutual_clearance, min_static_clearance, simulate, Scene, Variant};

use super::config::{ExperimentKind, Plan, SinglePlan};
use super::io;
use super::svg::{color, Plot};

#[derive(Debug)]
pub struct CaseRun {
    pub name: String,
    pub methods: Vec<AvoidanceMethod>,
    pub outcome: Result<(Trajectory, ComparisonReport)>,
}

#[derive(Debug)]
pub struct SingleRun {
    pub demo: Trajectory,
    pub dmp: Dmp,
    pub goal: Vector,
    /// Obstacle-free rollout the adapted runs are compared against.
    pub reference: Trajectory,
    pub cases: Vec<CaseRun>,
    pub truth: Vec<Obstacle>,
}

impl SingleRun {
    pub fn case(&self, name: &str) -> Option<&CaseRun> {
        self.cases.iter().find(|c| c.name == name)
    }
}

/// Learns, rolls out the reference, then every case in parallel.
pub fn run_single(plan: &SinglePlan) -> Result<SingleRun> {
    let mut dmp = Dmp::learn(&plan.demo, &plan.learn)?;
    if let Some(tau) = plan.tau {
        dmp = dmp.with_tau(tau)?;
    }
    let start = plan.start.clone().unwrap_or_else(|| dmp.start());
    let goal = plan.goal.clone().unwrap_or_else(|| dmp.goal());
    let reference = dmp.rollout(&start, &goal, &plan.rollout, None)?;
    let cases = plan
        .cases
        .par_iter()
        .map(|case| {
            let outcome = dmp
                .rollout(&start, &goal, &plan.rollout, Some(&case.field))
                .and_then(|tr| {
                    let report = compare_with_goal(&reference, &tr, &plan.truth, &goal)?;
                    Ok((tr, report))
                });
            CaseRun {
                name: case.name.clone(),
                methods: case.methods.clone(),
                outcome,
            }
        })
        .collect();
    Ok(SingleRun {
        demo: plan.demo.clone(),
        dmp,
        goal,
        reference,
        cases,
        truth: plan.truth.clone(),
    })
}

#[derive(Debug)]
pub struct VariantRun {
    pub variant: Variant,
    pub scene: Scene,
    pub outcome: Result<Vec<Trajectory>>,
}

pub fn run_multirobot(scenes: &[(Variant, Scene)]) -> Vec<VariantRun> {
    scenes
        .par_iter()
        .map(|(variant, scene)| VariantRun {
            variant: *variant,
            scene: scene.clone(),
            outcome: simulate(scene),
        })
        .collect()
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::NullWeights => "null_weights",
        Variant::ConstantSpeed => "constant_speed",
    }
}

#[derive(Debug, Serialize)]
struct CaseReport<'a> {
    name: &'a str,
    methods: &'a [AvoidanceMethod],
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(flatten)]
    comparison: Option<&'a ComparisonReport>,
}

#[derive(Debug, Serialize)]
struct SingleReport<'a> {
    kind: &'static str,
    /// Largest distance between the obstacle-free rollout and the demo.
    demo_fidelity: Option<f64>,
    cases: Vec<CaseReport<'a>>,
}

#[derive(Debug, Serialize)]
struct RobotReport {
    goal_error: f64,
}

#[derive(Debug, Serialize)]
struct VariantReport {
    variant: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    robots: Vec<RobotReport>,
    min_mutual_clearance: Option<f64>,
    min_static_clearance: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MultirobotReport {
    kind: &'static str,
    variants: Vec<VariantReport>,
}

/// Files written and the failures recorded in the report.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub failures: Vec<(String, ErrorKind)>,
}

impl Outputs {
    fn write(&mut self, path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
        io::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn write_single(
    run: &SingleRun,
    kind: ExperimentKind,
    out: &Path,
    timestamp: Option<&str>,
) -> Result<Outputs> {
    let mut outputs = Outputs::default();
    outputs.write(
        out.join("reference.csv"),
        io::trajectory_to_csv(&run.reference),
    )?;
    let demo_fidelity = (run.goal == run.dmp.goal()
        && run.reference.first_position() == &run.dmp.start())
        .then(|| compare(&run.demo, &run.reference, &[]).ok())
        .flatten()
        .map(|r| r.max_deviation);

    let mut plot = Plot::new(format!("{} experiment", kind.name()));
    plot.trajectory("reference", &run.reference, "black", true);
    for o in &run.truth {
        plot.obstacle(o);
    }
    let mut cases = Vec::with_capacity(run.cases.len());
    for (i, case) in run.cases.iter().enumerate() {
        let (status, error, comparison) = match &case.outcome {
            Ok((tr, report)) => {
                outputs.write(
                    out.join(format!("{}.csv", case.name)),
                    io::trajectory_to_csv(tr),
                )?;
                plot.trajectory(&case.name, tr, color(i), false);
                ("ok", None, Some(report))
            }
            Err(e) => {
                outputs.failures.push((case.name.clone(), e.kind()));
                ("failed", Some(e.to_string()), None)
            }
        };
        cases.push(CaseReport {
            name: &case.name,
            methods: &case.methods,
            status,
            error,
            comparison,
        });
    }
    let report = SingleReport {
        kind: kind.name(),
        demo_fidelity,
        cases,
    };
    outputs.write(out.join("report.json"), io::to_json(&report))?;
    outputs.write(out.join("plot.svg"), plot.render(timestamp))?;
    Ok(outputs)
}

pub fn write_multirobot(
    runs: &[VariantRun],
    out: &Path,
    timestamp: Option<&str>,
) -> Result<Outputs> {
    let mut outputs = Outputs::default();
    let mut variants = Vec::with_capacity(runs.len());
    for run in runs {
        let name = variant_name(run.variant);
        let dir = out.join(name);
        let mut plot = Plot::new(format!("multirobot, {name}"));
        for (sq, _) in &run.scene.static_obstacles {
            plot.superquadric(sq);
        }
        let report = match &run.outcome {
            Ok(trajs) => {
                let mut robots = Vec::with_capacity(trajs.len());
                for (i, (tr, spec)) in trajs.iter().zip(&run.scene.robots).enumerate() {
                    outputs.write(
                        dir.join(format!("robot_{}.csv", i + 1)),
                        io::trajectory_to_csv(tr),
                    )?;
                    plot.trajectory(&format!("robot {}", i + 1), tr, color(i), false)
                        .marker(spec.start, color(i))
                        .marker(spec.goal, "black");
                    let goal = Vector::from_column_slice(&spec.goal);
                    robots.push(RobotReport {
                        goal_error: (tr.last_position() - goal).norm(),
                    });
                }
                VariantReport {
                    variant: name,
                    status: "ok",
                    error: None,
                    robots,
                    min_mutual_clearance: min_mutual_clearance(&run.scene, trajs),
                    min_static_clearance: min_static_clearance(&run.scene, trajs),
                }
            }
            Err(e) => {
                outputs.failures.push((name.to_string(), e.kind()));
                VariantReport {
                    variant: name,
                    status: "failed",
                    error: Some(e.to_string()),
                    robots: Vec::new(),
                    min_mutual_clearance: None,
                    min_static_clearance: None,
                }
            }
        };
        outputs.write(dir.join("scene.svg"), plot.render(timestamp))?;
        variants.push(report);
    }
    let report = MultirobotReport {
        kind: ExperimentKind::Multirobot.name(),
        variants,
    };
    outputs.write(out.join("report.json"), io::to_json(&report))?;
    Ok(outputs)
}

/// Runs a validated plan and writes everything under `out`.
pub fn execute(
    plan: &Plan,
    kind: ExperimentKind,
    out: &Path,
    timestamp: Option<&str>,
) -> Result<Outputs> {
    match plan {
        Plan::Single(p) => write_single(&run_single(p)?, kind, out, timestamp),
        Plan::Multirobot(scenes) => write_multirobot(&run_multirobot(scenes), out, timestamp),
    }
}

/// The error kind an experiment with failures exits with.
pub fn failure_kind(outputs: &Outputs) -> Option<ErrorKind> {
    outputs.failures.first().map(|(_, k)| *k)
}
