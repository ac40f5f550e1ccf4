mod args;

use std::fmt::Write as _;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use peb_core::simulation::{
    density_curve, parse_grid, run_monte_carlo, sig6, tables_csv, tables_text, truth_oracle,
    DgpSpec, McConfig, PolicyArm,
};
use peb_core::{
    estimate_many, load_csv, read_header, BinarizationRule, BootstrapConfig, CiMethod, CsvSchema,
    Direction, EstimandSpec, EstimateReport, EstimationConfig, EstimatorKind,
};

use args::{
    ArmArg, CiMethodArg, Cli, Command, DensityArgs, DgpArgs, DirectionArg, EstimandArg,
    EstimateArgs, EstimatorArg, Format, OutputArgs, SimulateArgs, TruthArgs,
};

/// Failure classes map onto the process exit code.
enum Failure {
    /// Bad flags or bad input data: exit 1.
    Validation(String),
    /// The estimation itself failed: exit 2.
    Estimation(String),
}

impl From<peb_core::Error> for Failure {
    fn from(e: peb_core::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Estimation(e.to_string())
        }
    }
}

type CmdResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(1);
        }
    }

    let (result, out) = match &cli.command {
        Command::Estimate(a) => (cmd_estimate(a), &a.out),
        Command::Simulate(a) => (cmd_simulate(a), &a.out),
        Command::Truth(a) => (cmd_truth(a), &a.out),
        Command::Densities(a) => (cmd_densities(a), &a.out),
    };
    match result.and_then(|text| emit(out, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Estimation(msg)) => {
            eprintln!("error: estimation failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Validation(format!("--output {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Validation(format!("stdout: {e}")))
        }
    }
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Geq => Direction::Geq,
        DirectionArg::Lt => Direction::Lt,
    }
}

fn check_ci_level(level: f64) -> Result<(), Failure> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "--ci-level must lie in (0, 1), got {level}"
        )))
    }
}

fn cmd_estimate(a: &EstimateArgs) -> CmdResult {
    check_ci_level(a.ci_level)?;
    let estimand = match a.estimand {
        EstimandArg::Bate => EstimandSpec::BATE,
        EstimandArg::Peb => {
            let arm = a.arm.ok_or_else(|| {
                Failure::Validation("--arm (0 or 1) is required with --estimand peb".into())
            })?;
            EstimandSpec::peb(arm)
                .map_err(|_| Failure::Validation(format!("--arm must be 0 or 1, got {arm}")))?
        }
    };
    if a.bootstrap_reps < 2 {
        return Err(Failure::Validation(format!(
            "--bootstrap-reps must be at least 2, got {}",
            a.bootstrap_reps
        )));
    }
    if !(a.positivity_eps >= 0.0 && a.positivity_eps < 0.5) {
        return Err(Failure::Validation(
            "--positivity-eps must lie in [0, 0.5)".into(),
        ));
    }

    let header = read_header(&a.input)
        .map_err(|e| Failure::Validation(format!("--input {}: {e}", a.input.display())))?;
    let has = |c: &str| header.iter().any(|h| h == c);
    let rule = match a.cutoff {
        Some(c) => Some(
            BinarizationRule::new(c, direction(a.direction))
                .map_err(|e| Failure::Validation(format!("--cutoff: {e}")))?,
        ),
        None => None,
    };
    let schema =
        match rule {
            Some(rule) if has("a") => CsvSchema::standard(Some(rule)),
            Some(_) => {
                return Err(Failure::Validation(
                    "--cutoff given but the input has no continuous treatment column `a`".into(),
                ))
            }
            None if has("t") => CsvSchema::standard(None),
            None if has("a") => return Err(Failure::Validation(
                "input has a continuous treatment column `a`; --cutoff is required to binarize it"
                    .into(),
            )),
            None => return Err(Failure::Validation(
                "input needs a treatment column `t` (binary) or `a` (continuous, with --cutoff)"
                    .into(),
            )),
        };
    let mut schema = schema;
    if has("t") && has("a") {
        // Keep the unused treatment column out of the covariates.
        let used = if rule.is_some() { "a" } else { "t" };
        let other = if used == "a" { "t" } else { "a" };
        schema.covariates = Some(
            header
                .iter()
                .filter(|h| *h != "y" && *h != used && *h != other)
                .cloned()
                .collect(),
        );
    }
    let data = load_csv(&a.input, &schema)?;

    let estimators: Vec<EstimatorKind> = match a.estimator {
        EstimatorArg::Reg => vec![EstimatorKind::Reg],
        EstimatorArg::Ipw => vec![EstimatorKind::Ipw],
        EstimatorArg::Aipw => vec![EstimatorKind::Aipw],
        EstimatorArg::Tmle => vec![EstimatorKind::Tmle],
        EstimatorArg::All => EstimatorKind::ALL.to_vec(),
    };
    let config = EstimationConfig {
        ci_level: a.ci_level,
        bootstrap: BootstrapConfig {
            replicates: a.bootstrap_reps,
            seed: a.seed,
            ci_method: match a.ci_method {
                CiMethodArg::Normal => CiMethod::Normal,
                CiMethodArg::Percentile => CiMethod::Percentile,
            },
        },
        positivity_eps: a.positivity_eps,
    };
    let reports = estimate_many(&data, &estimators, std::slice::from_ref(&estimand), &config)
        .into_iter()
        .map(|r| {
            r.map(|mut rep| {
                rep.seed = Some(a.seed);
                rep
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render_reports(&reports, a.format))
}

fn render_reports(reports: &[EstimateReport], format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(reports)
            }
            .expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from(
                "estimand,arm,estimator,point,se,ci_lower,ci_upper,ci_level,n,seed,warnings\n",
            );
            for r in reports {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},\"{}\"",
                    kind_name(&r.estimand),
                    r.estimand.arm.map(|a| a.to_string()).unwrap_or_default(),
                    r.estimator,
                    r.point,
                    r.se,
                    r.ci.0,
                    r.ci.1,
                    r.ci_level,
                    r.n,
                    r.seed.map(|s| s.to_string()).unwrap_or_default(),
                    r.warnings.join("; ").replace('"', "'"),
                );
            }
            s
        }
        Format::TextTable => {
            let mut s = format!(
                "{:<8} {:<9} {:>12} {:>12} {:>12} {:>12} {:>7}\n",
                "estimand", "estimator", "point", "se", "ci_lower", "ci_upper", "n"
            );
            for r in reports {
                let _ = writeln!(
                    s,
                    "{:<8} {:<9} {:>12} {:>12} {:>12} {:>12} {:>7}",
                    r.estimand.label(),
                    r.estimator.name(),
                    sig6(r.point),
                    sig6(r.se),
                    sig6(r.ci.0),
                    sig6(r.ci.1),
                    r.n
                );
                for w in &r.warnings {
                    let _ = writeln!(s, "  warning: {w}");
                }
            }
            s
        }
    }
}

fn kind_name(e: &EstimandSpec) -> &'static str {
    match e.peb_arm() {
        None => "bate",
        Some(_) => "peb",
    }
}

fn dgp_spec(d: &DgpArgs) -> Result<DgpSpec, Failure> {
    let spec = DgpSpec {
        w_prob: d.w_prob,
        a_mean_base: d.a_mean_base,
        a_mean_slope: d.a_mean_slope,
        a_sd: d.a_sd,
        noise_sd: d.noise_sd,
        cutoff: d.cutoff,
        direction: direction(d.direction),
        ..DgpSpec::default()
    };
    spec.validate()?;
    Ok(spec)
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    check_ci_level(a.ci_level)?;
    let spec = dgp_spec(&a.dgp)?;
    if a.reps < 2 {
        return Err(Failure::Validation(format!(
            "--reps must be at least 2, got {}",
            a.reps
        )));
    }
    if a.n_list.is_empty() || a.n_list.contains(&0) {
        return Err(Failure::Validation(
            "--n sample sizes must be positive".into(),
        ));
    }
    let mut estimators = Vec::new();
    for e in &a.estimators {
        let kinds: &[EstimatorKind] = match e {
            EstimatorArg::Reg => &[EstimatorKind::Reg],
            EstimatorArg::Ipw => &[EstimatorKind::Ipw],
            EstimatorArg::Aipw => &[EstimatorKind::Aipw],
            EstimatorArg::Tmle => &[EstimatorKind::Tmle],
            EstimatorArg::All => &EstimatorKind::ALL,
        };
        for k in kinds {
            if !estimators.contains(k) {
                estimators.push(*k);
            }
        }
    }
    if estimators.contains(&EstimatorKind::Ipw) && a.bootstrap_reps < 2 {
        return Err(Failure::Validation(
            "--bootstrap-reps must be at least 2".into(),
        ));
    }
    let peb = EstimandSpec::peb(a.arm)
        .map_err(|_| Failure::Validation(format!("--arm must be 0 or 1, got {}", a.arm)))?;
    let config = McConfig {
        n_list: a.n_list.clone(),
        replicates: a.reps,
        estimators,
        estimands: vec![EstimandSpec::BATE, peb],
        bootstrap_replicates: a.bootstrap_reps,
        seed: a.seed,
        ci_level: a.ci_level,
    };
    let results = run_monte_carlo(&spec, &config)?;
    Ok(match a.format {
        Format::Csv => tables_csv(&results),
        Format::TextTable => tables_text(&results),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&results).expect("results serialize");
            s.push('\n');
            s
        }
    })
}

fn cmd_truth(a: &TruthArgs) -> CmdResult {
    let spec = dgp_spec(&a.dgp)?;
    let t = truth_oracle(&spec)?;
    let rows = [
        ("psi_bate", t.psi_bate),
        ("psi_peb1", t.psi_peb1),
        ("psi_peb0", t.psi_peb0),
        ("e_y", t.e_y),
        ("quadrature_error_bound", t.quadrature_error_bound),
    ];
    Ok(match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&t).expect("truth serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (k, v) in rows {
                let _ = writeln!(s, "{k},{v}");
            }
            s
        }
        Format::TextTable => {
            let mut s = String::new();
            for (k, v) in rows {
                let _ = writeln!(s, "{k:<24} {}", sig6(v));
            }
            s
        }
    })
}

fn cmd_densities(a: &DensityArgs) -> CmdResult {
    if a.w > 1 {
        return Err(Failure::Validation(format!(
            "--w must be 0 or 1, got {}",
            a.w
        )));
    }
    let spec = dgp_spec(&a.dgp)?;
    let grid = parse_grid(&a.grid).map_err(|e| Failure::Validation(format!("--grid: {e}")))?;
    let arm = match a.arm {
        ArmArg::StatusQuo => PolicyArm::StatusQuo,
        ArmArg::Tilde1 => PolicyArm::Tilde1,
        ArmArg::Tilde0 => PolicyArm::Tilde0,
    };
    let curve = density_curve(&spec, arm, a.w, &grid)?;
    Ok(match a.format {
        Format::Csv => {
            let mut s = String::from("a,density\n");
            for (x, d) in &curve {
                let _ = writeln!(s, "{x},{d}");
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string(&curve).expect("curve serializes");
            s.push('\n');
            s
        }
        Format::TextTable => {
            let mut s = format!("{:>12} {:>14}\n", "a", "density");
            for (x, d) in &curve {
                let _ = writeln!(s, "{:>12} {:>14}", sig6(*x), sig6(*d));
            }
            s
        }
    })
}
