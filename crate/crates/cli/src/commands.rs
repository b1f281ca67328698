use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proxnet_core::block_solver::DEFAULT_DIM_CAP;
use proxnet_core::sample::Sampler;
use proxnet_core::{BlockNetwork, BlockVector, Execution, NormOptions, SolverOptions, Vector};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{parse_config, Config, HopfieldConfig, NetworkConfig};
use crate::error::{CliError, ExitClass};
use crate::{Method, RunArgs};

/// Default tolerance for inclusion checks on solver output and candidates.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

/// The JSON document printed for every command.
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    fn new(command: &str, seed: u64) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        fields.insert("seed".into(), json!(seed));
        Self { fields }
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("report values serialize");
        self.fields.insert(key.into(), value);
    }

    fn finish(mut self, class: ExitClass, error: Option<&CliError>) -> Value {
        self.fields.insert("status".into(), json!(class.status()));
        self.fields.insert("exit_code".into(), json!(class.code()));
        if let Some(e) = error {
            self.fields.insert("error".into(), json!(e.to_string()));
        }
        Value::Object(self.fields)
    }
}

pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
    pub error: Option<String>,
}

pub fn execute(command: &str, args: &RunArgs) -> Outcome {
    let started = Instant::now();
    let mut report = Report::new(command, args.seed);
    let result = dispatch(command, args, &mut report);
    if args.timings {
        report.set("timings", json!({ "total_ms": started.elapsed().as_secs_f64() * 1e3 }));
    }
    match result {
        Ok(class) => Outcome {
            exit_code: class.code(),
            report: report.finish(class, None),
            error: None,
        },
        Err(e) => {
            let class = e.exit_class();
            Outcome {
                exit_code: class.code(),
                error: Some(e.to_string()),
                report: report.finish(class, Some(&e)),
            }
        }
    }
}

fn dispatch(command: &str, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    if args.format != "json" {
        return Err(CliError::Usage(format!("unsupported format `{}`, only json", args.format)));
    }
    let config = parse_config(&args.config)?;
    let digest = Sha256::digest(config.to_canonical().to_string().as_bytes());
    report.set("inputs_digest", format!("sha256:{}", hex::encode(digest)));

    match (command, &config) {
        ("analyze", Config::Network(c)) => cmd_analyze(c, args, report),
        ("solve", Config::Network(c)) => cmd_solve(c, args, report),
        ("verify", Config::Network(c)) => cmd_verify(c, args, report),
        ("trace", Config::Network(c)) => cmd_trace(c, args, report),
        ("hopfield", Config::Hopfield(c)) => cmd_hopfield(c, args, report),
        ("hopfield", Config::Network(_)) => Err(CliError::Usage(
            "hopfield needs a config with \"model\": \"hopfield\"".into(),
        )),
        (_, Config::Hopfield(_)) => Err(CliError::Usage(format!(
            "{command} needs a config with \"model\": \"network\""
        ))),
        _ => Err(CliError::Usage(format!("unknown command `{command}`"))),
    }
}

fn norm_options(args: &RunArgs) -> NormOptions {
    NormOptions {
        seed: args.seed,
        ..NormOptions::default()
    }
}

fn solver_options(config: &Config, args: &RunArgs) -> SolverOptions {
    let section = config.solver();
    let defaults = SolverOptions::default();
    SolverOptions {
        tol: args.tol.or(section.tol).unwrap_or(defaults.tol),
        max_iter: args.max_iter.or(section.max_iter).unwrap_or(defaults.max_iter),
        norm: norm_options(args),
    }
}

fn start_vector(section: &crate::config::SolverSection) -> Option<Vector> {
    section
        .start
        .as_ref()
        .map(|s| Vector::new(s.clone()).expect("start validated with the config"))
}

fn cmd_analyze(c: &NetworkConfig, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    let analysis = c.network.analyze(&norm_options(args))?;
    report.set("recurrent", c.network.is_recurrent());
    report.set("analysis", &analysis);
    if c.network.is_recurrent() {
        let bn = BlockNetwork::new(c.network.clone(), &norm_options(args))?;
        report.set("monotone", bn.check_monotone(DEFAULT_DIM_CAP)?);
    } else {
        report.set("monotone", Value::Null);
    }
    Ok(if analysis.product_contractive {
        ExitClass::Success
    } else {
        ExitClass::Refused
    })
}

fn cmd_solve(c: &NetworkConfig, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    let config = Config::Network(c.clone());
    let opts = solver_options(&config, args);
    let verify_tol = args.verify_tol.unwrap_or(DEFAULT_VERIFY_TOL);
    let bn = BlockNetwork::new(c.network.clone(), &opts.norm)?;
    report.set("analysis", bn.analysis());
    report.set("method", args.method.name());

    let mut points: Vec<BlockVector> = Vec::new();
    let mut ok = true;

    let mut sequential_point = None;
    if matches!(args.method, Method::Sequential | Method::Both) {
        let start = start_vector(&c.solver);
        let result = c.network.solve_sequential_with(bn.analysis(), start.as_ref(), &opts)?;
        let trajectory = c.network.lift_trajectory(&result.point)?;
        let inclusion = bn.verify_inclusion(&trajectory, verify_tol)?;
        ok &= inclusion.satisfied && inclusion.prox_satisfied;
        report.set(
            "sequential",
            json!({ "result": result, "trajectory": &trajectory, "inclusion": inclusion }),
        );
        sequential_point = Some(trajectory.clone());
        points.push(trajectory);
    }
    if matches!(args.method, Method::Block | Method::Both) {
        let result = bn.solve_block(None, &opts)?;
        let inclusion = bn.verify_inclusion(&result.point, verify_tol)?;
        ok &= inclusion.satisfied && inclusion.prox_satisfied;
        if let Some(seq) = &sequential_point {
            report.set("cross_distance", seq.max_block_distance(&result.point));
        }
        points.push(result.point.clone());
        report.set("block", json!({ "result": result, "inclusion": inclusion }));
    }

    let point = points.last().expect("at least one solver ran");
    report.set("fixed_point", point);
    if bn.analysis().uniformly_contractive {
        let bound = bn.verify_bound(point, verify_tol)?;
        ok &= bound.holds;
        report.set("bound", bound);
    } else {
        report.set("bound", Value::Null);
    }
    Ok(if ok {
        ExitClass::Success
    } else {
        ExitClass::VerificationFailed
    })
}

fn read_candidate(path: &Path, dims: &[usize]) -> Result<BlockVector, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let blocks: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        context: format!("{} line {}, column {}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    if blocks.len() != dims.len() {
        return Err(CliError::Parse {
            context: path.display().to_string(),
            message: format!("candidate has {} blocks, expected {}", blocks.len(), dims.len()),
        });
    }
    let mut out = Vec::with_capacity(blocks.len());
    for (i, (b, d)) in blocks.into_iter().zip(dims).enumerate() {
        if b.len() != *d {
            return Err(CliError::Parse {
                context: path.display().to_string(),
                message: format!("block {} has length {}, expected {d}", i + 1, b.len()),
            });
        }
        out.push(Vector::new(b)?);
    }
    Ok(BlockVector::new(out)?)
}

fn cmd_verify(c: &NetworkConfig, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    let path = args
        .point
        .as_ref()
        .ok_or_else(|| CliError::Usage("verify requires --point <candidate.json>".into()))?;
    let tol = args.tol.unwrap_or(DEFAULT_VERIFY_TOL);
    let bn = BlockNetwork::new(c.network.clone(), &norm_options(args))?;
    let candidate = read_candidate(path, &bn.block_dims())?;
    report.set("candidate", &candidate);
    let inclusion = bn.verify_inclusion(&candidate, tol)?;
    let mut ok = inclusion.satisfied;
    report.set("inclusion", &inclusion);
    if bn.analysis().uniformly_contractive {
        let bound = bn.verify_bound(&candidate, tol)?;
        ok &= bound.holds;
        report.set("bound", bound);
    } else {
        report.set("bound", Value::Null);
    }
    Ok(if ok {
        ExitClass::Success
    } else {
        ExitClass::VerificationFailed
    })
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

const RATIO_NOISE_FLOOR: f64 = 1e-7;

fn cmd_trace(c: &NetworkConfig, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("trace requires --out <file.csv>".into()))?;
    let config = Config::Network(c.clone());
    let opts = solver_options(&config, args);
    let start = start_vector(&c.solver);
    let trace = c.network.trace_sequential(start.as_ref(), &opts)?;

    let dim = c.network.input_dim();
    let mut csv = String::from("k,step_norm");
    for i in 0..dim {
        csv.push_str(&format!(",x_{i}"));
    }
    csv.push('\n');
    for row in &trace.rows {
        csv.push_str(&format!("{},{}", row.k, row.step_norm));
        for x in row.x.as_slice() {
            csv.push_str(&format!(",{x}"));
        }
        csv.push('\n');
    }
    write_file(out, &csv)?;

    // Ratios of steps near rounding level are noise.
    let ratios = trace.step_ratios(RATIO_NOISE_FLOOR * (1.0 + trace.result.point.norm()));
    report.set("out", out.display().to_string());
    report.set("rows", trace.rows.len());
    report.set("theta_n", trace.theta_n);
    report.set("fitted_ratio", trace.fitted_ratio());
    report.set("max_step_ratio", ratios.iter().copied().reduce(f64::max));
    report.set("result", &trace.result);
    Ok(ExitClass::Success)
}

fn cmd_hopfield(c: &HopfieldConfig, args: &RunArgs, report: &mut Report) -> Result<ExitClass, CliError> {
    let config = Config::Hopfield(c.clone());
    let opts = solver_options(&config, args);
    let model = &c.model;
    report.set("contraction_factor", model.contraction_factor(&opts.norm)?);
    let start = start_vector(&c.solver);
    let eq = model.equilibrium_via_prox(start.as_ref(), &opts)?;
    report.set("equilibrium", &eq);

    if args.simulate {
        let mut sampler = Sampler::new(args.seed);
        let starts: Vec<Vector> = (0..args.starts).map(|_| sampler.vector(model.dim(), 1.0)).collect();
        let runs = Execution::default().map(&starts, |_, x0| model.simulate(x0, args.dt, args.t_end));
        let mut deviations = Vec::with_capacity(runs.len());
        for (i, run) in runs.into_iter().enumerate() {
            let traj = run?;
            if i == 0 {
                if let Some(out) = &args.out {
                    let mut csv = String::from("t");
                    for j in 1..=model.dim() {
                        csv.push_str(&format!(",x_{j}"));
                    }
                    csv.push('\n');
                    for (t, x) in traj.times.iter().zip(&traj.states) {
                        csv.push_str(&t.to_string());
                        for v in x.as_slice() {
                            csv.push_str(&format!(",{v}"));
                        }
                        csv.push('\n');
                    }
                    write_file(out, &csv)?;
                }
            }
            deviations.push(traj.final_state().distance(&eq.x_star));
        }
        report.set(
            "simulation",
            json!({
                "dt": args.dt,
                "t_end": args.t_end,
                "starts": &starts,
                "final_deviations": deviations,
                "max_deviation": deviations.iter().copied().fold(0.0, f64::max),
            }),
        );
    }
    Ok(ExitClass::Success)
}
