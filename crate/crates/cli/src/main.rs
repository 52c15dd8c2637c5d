//! Command-line front end for the sublinear-expectation engines.
//!
//! Subcommands map one-to-one onto the library: `pde` and `tree` evaluate
//! upper/lower expectations with the two engines, `girsanov-check`,
//! `jeps-sweep` and `degenerate` drive the change-of-measure verification
//! layer, `axioms` exercises the exact tree-level properties, and
//! `reproduce-all` runs the bundled verification suite.
//!
//! Output is CSV on stdout (or `--output`, or `$GEXPECT_OUT_DIR`), with the
//! effective configuration echoed in a leading `# config:` comment so every
//! run is reproducible from its own output.

mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{
    merge, merge_opt, parse_accuracy, parse_f64, parse_f64_list, parse_h, parse_sigma2_pair,
    parse_u64, parse_usize, parse_usize_list, resolve_phi, FileConfig,
};
use gexpect::acceptance::{axiom_trials, run_all, SuiteConfig};
use gexpect::girsanov::{degenerate_pipeline, jeps_sweep, verify_identity, IdentityEngine};
use gexpect::pde::{expect_cylinder, Accuracy};
use gexpect::stochastic::{Coordinate, Weight, WeightedCylinder};
use gexpect::tree::{lower_expectation, upper_expectation, TreeSpec};
use gexpect::uncertainty::{Generator, VolatilityBand};
use gexpect::{Band64, Error, IntegrandSpec64};
use output::{fmt_f, write_report, Report};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (tree: adapted-control Rademacher backward induction; ",
    "pde: explicit monotone scheme, dt = 0.9 dx^2/sigma_max_sq)"
);

#[derive(Parser)]
#[command(
    name = "gexpect",
    version = VERSION,
    about = "Upper/lower expectations over a variance band and numerical \
             verification of the change-of-measure identity",
    after_help = "Configuration precedence: flags > --config file (key = value lines) > defaults.\n\
                  Built-in functionals: cos1, sq, lin, nsq. Variances are given, not standard deviations."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout (or $GEXPECT_OUT_DIR/<subcommand>.csv).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Accepted everywhere for interface uniformity. The engines are
    /// deterministic and ignore it; only `axioms` seeds its random trial
    /// generator from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Expectation of phi(B_t) via the monotone finite-difference engine.
    Pde {
        /// Variance band as two variances MIN MAX.
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        /// Catalog name (cos1|sq|lin|nsq) or an expression in x1..xn.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        phi_arity: Option<usize>,
        #[arg(long)]
        phi_bound: Option<f64>,
        /// Time horizon (single) or comma-separated times t1<...<tn (n <= 3).
        #[arg(long)]
        t: Option<String>,
        /// Mesh tier: coarse | medium | fine.
        #[arg(long)]
        accuracy: Option<String>,
    },
    /// Upper or lower expectation of a cylinder functional on the scenario tree.
    Tree {
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        /// Number of tree steps m.
        #[arg(long)]
        steps: Option<usize>,
        /// Control-grid size (variances equally spaced across the band).
        #[arg(long)]
        sigma_levels: Option<usize>,
        /// upper | lower.
        #[arg(long)]
        mode: Option<String>,
        /// Catalog name or expression; `--functional` is an alias.
        #[arg(long, visible_alias = "functional")]
        phi: Option<String>,
        #[arg(long)]
        phi_arity: Option<usize>,
        #[arg(long)]
        phi_bound: Option<f64>,
        /// Comma-separated observation times, each on the step grid.
        #[arg(long)]
        times: Option<String>,
        /// Horizon T (default: last observation time).
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Check E_hat[phi(B)] = E_tilde[phi(B_tilde)] across step counts.
    GirsanovCheck {
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        /// Integrand: const:<v> or steps:v0,v1,...
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        phi_arity: Option<usize>,
        #[arg(long)]
        phi_bound: Option<f64>,
        #[arg(long)]
        times: Option<String>,
        /// Comma-separated ascending step counts.
        #[arg(long)]
        m_list: Option<String>,
        #[arg(long)]
        sigma_levels: Option<usize>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Left-side engine: tree | pde (right side is always the tree).
        #[arg(long)]
        engine: Option<String>,
    },
    /// Sweep E_hat[J_eps] and -E_hat[-J_eps] over a list of eps values.
    JepsSweep {
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Comma-separated eps values (descending towards 0).
        #[arg(long, conflicts_with = "eps")]
        eps_list: Option<String>,
        /// Single eps value; shorthand for a one-entry --eps-list.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        sigma_levels: Option<usize>,
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Degenerate-band perturbation pipeline on product-space trees.
    Degenerate {
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        phi_arity: Option<usize>,
        #[arg(long)]
        phi_bound: Option<f64>,
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        eps_list: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        sigma_levels: Option<usize>,
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Randomized check of the exact sublinear-expectation axioms.
    Axioms {
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        sigma2: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        sigma_levels: Option<usize>,
    },
    /// Run every bundled verification criterion and print PASS/FAIL lines.
    ReproduceAll {
        /// Coarse tiers only; finishes in seconds.
        #[arg(long)]
        quick: bool,
        /// Test hook: bias added to the left side of identity checks, which
        /// must flip those criteria to FAIL.
        #[arg(long)]
        inject_bias: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(AppError::Core(e)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
        Err(AppError::Io(e)) => {
            eprintln!("i/o error: {e}");
            std::process::exit(1);
        }
    }
}

enum AppError {
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Core(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

fn make_band(pair: (f64, f64)) -> Result<Band64, Error> {
    if pair.0 == 0.0 && pair.1 == 0.0 {
        // The all-zero band is reachable only on explicit request.
        Ok(VolatilityBand::totally_degenerate())
    } else {
        VolatilityBand::new(pair.0, pair.1)
    }
}

fn sigma2_flag(flag: Option<Vec<f64>>) -> Option<(f64, f64)> {
    flag.map(|v| (v[0], v[1]))
}

fn echo_h(h: &IntegrandSpec64) -> String {
    match h {
        IntegrandSpec64::Constant(v) => format!("const:{v}"),
        IntegrandSpec64::PiecewiseConstant(vs) => format!(
            "steps:{}",
            vs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        ),
    }
}

fn echo_list(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn run(cli: Cli) -> Result<i32, AppError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = merge(cli.seed, &file, "seed", parse_u64, 2024)?;
    let out = cli.output.as_deref();
    match cli.command {
        Command::Pde {
            sigma2,
            phi,
            phi_arity,
            phi_bound,
            t,
            accuracy,
        } => {
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.25, 1.0),
            )?)?;
            let times = merge(
                t.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "t",
                parse_f64_list,
                vec![1.0],
            )?;
            let accuracy = merge(
                accuracy.as_deref().map(parse_accuracy).transpose()?,
                &file,
                "accuracy",
                parse_accuracy,
                Accuracy::Medium,
            )?;
            let phi_src = merge(phi, &file, "phi", |s| Ok(s.to_string()), "cos1".into())?;
            let phi_arity = merge_opt(phi_arity, &file, "phi_arity", parse_usize)?;
            let phi_bound = merge_opt(phi_bound, &file, "phi_bound", parse_f64)?;
            let functional = resolve_phi(&phi_src, phi_arity, phi_bound, times.len())?;
            let gen = Generator::new(band);

            let start = Instant::now();
            let result = expect_cylinder(&gen, &functional, &times, accuracy)?;
            let runtime = start.elapsed().as_secs_f64();

            let mut report = Report::new(vec!["value", "nx", "dt", "steps"]);
            report.echo("subcommand", "pde");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("phi", &phi_src);
            report.echo("phi_arity", functional.arity());
            report.echo("phi_bound", functional.bound());
            report.echo("t", echo_list(&times));
            report.echo("accuracy", format!("{accuracy:?}").to_lowercase());
            report.echo("seed", seed);
            report.row(vec![
                fmt_f(result.value),
                result.nx.to_string(),
                fmt_f(result.dt),
                result.steps.to_string(),
            ]);
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "pde")?;
            Ok(0)
        }
        Command::Tree {
            sigma2,
            steps,
            sigma_levels,
            mode,
            phi,
            phi_arity,
            phi_bound,
            times,
            t_final,
        } => {
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.25, 1.0),
            )?)?;
            let times = merge(
                times.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "times",
                parse_f64_list,
                vec![1.0],
            )?;
            let steps = merge(steps, &file, "steps", parse_usize, 6)?;
            let sigma_levels = merge(sigma_levels, &file, "sigma_levels", parse_usize, 5)?;
            let t_final = merge(t_final, &file, "t_final", parse_f64, *times.last().unwrap())?;
            let mode = merge(mode, &file, "mode", |s| Ok(s.to_string()), "upper".into())?;
            if mode != "upper" && mode != "lower" {
                return Err(
                    Error::invalid(format!("--mode must be upper or lower, got '{mode}'")).into(),
                );
            }
            let phi_src = merge(phi, &file, "phi", |s| Ok(s.to_string()), "cos1".into())?;
            let phi_arity = merge_opt(phi_arity, &file, "phi_arity", parse_usize)?;
            let phi_bound = merge_opt(phi_bound, &file, "phi_bound", parse_f64)?;
            let functional = resolve_phi(&phi_src, phi_arity, phi_bound, times.len())?;

            let spec = TreeSpec::new(steps, t_final, band, sigma_levels)?;
            let h = gexpect::SimpleProcess64::zero(steps);
            let obs = spec.steps_for_times(&times)?;
            let f = WeightedCylinder::new(&functional, obs, &h, Coordinate::Plain, Weight::One)?;

            let start = Instant::now();
            let value = if mode == "upper" {
                upper_expectation(&spec, &h, &f)?
            } else {
                lower_expectation(&spec, &h, &f)?
            };
            let runtime = start.elapsed().as_secs_f64();

            let mut report = Report::new(vec!["value", "m", "sigma_levels", "leaves"]);
            report.echo("subcommand", "tree");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("steps", steps);
            report.echo("sigma_levels", sigma_levels);
            report.echo("mode", &mode);
            report.echo("phi", &phi_src);
            report.echo("times", echo_list(&times));
            report.echo("t_final", t_final);
            report.echo("seed", seed);
            report.row(vec![
                fmt_f(value),
                steps.to_string(),
                sigma_levels.to_string(),
                spec.leaf_count().to_string(),
            ]);
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "tree")?;
            Ok(0)
        }
        Command::GirsanovCheck {
            sigma2,
            h,
            phi,
            phi_arity,
            phi_bound,
            times,
            m_list,
            sigma_levels,
            t_final,
            engine,
        } => {
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.25, 1.0),
            )?)?;
            let h_spec = merge(
                h.as_deref().map(parse_h).transpose()?,
                &file,
                "h",
                parse_h,
                IntegrandSpec64::Constant(0.5),
            )?;
            let times = merge(
                times.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "times",
                parse_f64_list,
                vec![1.0],
            )?;
            let m_list = merge(
                m_list.as_deref().map(parse_usize_list).transpose()?,
                &file,
                "m_list",
                parse_usize_list,
                vec![6, 8, 10, 12],
            )?;
            let sigma_levels = merge(sigma_levels, &file, "sigma_levels", parse_usize, 2)?;
            let t_final = merge(t_final, &file, "t_final", parse_f64, *times.last().unwrap())?;
            let engine_name = merge(
                engine,
                &file,
                "engine",
                |s| Ok(s.to_string()),
                "tree".into(),
            )?;
            let engine = match engine_name.as_str() {
                "tree" => IdentityEngine::Tree,
                "pde" => IdentityEngine::PdeCrossTree,
                other => {
                    return Err(Error::invalid(format!(
                        "--engine must be tree or pde, got '{other}'"
                    ))
                    .into())
                }
            };
            let phi_src = merge(phi, &file, "phi", |s| Ok(s.to_string()), "cos1".into())?;
            let phi_arity = merge_opt(phi_arity, &file, "phi_arity", parse_usize)?;
            let phi_bound = merge_opt(phi_bound, &file, "phi_bound", parse_f64)?;
            let functional = resolve_phi(&phi_src, phi_arity, phi_bound, times.len())?;

            let start = Instant::now();
            let reports = verify_identity(
                &band,
                t_final,
                &h_spec,
                &functional,
                &times,
                &m_list,
                sigma_levels,
                engine,
            )?;
            let runtime = start.elapsed().as_secs_f64();

            let mut report = Report::new(vec![
                "m",
                "sigma_levels",
                "eps",
                "lhs",
                "rhs",
                "abs_error",
                "engine",
            ]);
            report.echo("subcommand", "girsanov-check");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("h", echo_h(&h_spec));
            report.echo("phi", &phi_src);
            report.echo("times", echo_list(&times));
            report.echo(
                "m_list",
                m_list
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            );
            report.echo("sigma_levels", sigma_levels);
            report.echo("t_final", t_final);
            report.echo("engine", &engine_name);
            report.echo("seed", seed);
            for r in &reports {
                report.row(vec![
                    r.m.to_string(),
                    r.sigma_levels.to_string(),
                    fmt_f(r.eps),
                    fmt_f(r.lhs),
                    fmt_f(r.rhs),
                    fmt_f(r.abs_error()),
                    r.engine.to_string(),
                ]);
            }
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "girsanov-check")?;
            Ok(0)
        }
        Command::JepsSweep {
            sigma2,
            h,
            alpha,
            beta,
            eps_list,
            eps,
            steps,
            sigma_levels,
            t_final,
        } => {
            let eps_list = eps_list.or(eps.map(|e| e.to_string()));
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.25, 1.0),
            )?)?;
            let h_spec = merge(
                h.as_deref().map(parse_h).transpose()?,
                &file,
                "h",
                parse_h,
                IntegrandSpec64::Constant(1.0),
            )?;
            let alpha = merge(alpha, &file, "alpha", parse_f64, 1.0)?;
            let beta = merge(beta, &file, "beta", parse_f64, 1.0)?;
            let eps_list = merge(
                eps_list.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "eps_list",
                parse_f64_list,
                vec![0.4, 0.2, 0.1, 0.05],
            )?;
            let steps = merge(steps, &file, "steps", parse_usize, 12)?;
            let sigma_levels = merge(sigma_levels, &file, "sigma_levels", parse_usize, 2)?;
            let t_final = merge(t_final, &file, "t_final", parse_f64, 1.0)?;

            let spec = TreeSpec::new(steps, t_final, band, sigma_levels)?;
            let h_inst = h_spec.instantiate(steps)?;

            let start = Instant::now();
            let sweep = jeps_sweep(&spec, &h_inst, alpha, beta, &eps_list)?;
            let runtime = start.elapsed().as_secs_f64();

            let mut report = Report::new(vec![
                "eps",
                "e_jeps",
                "neg_e_neg_jeps",
                "dev_upper",
                "dev_lower",
            ]);
            report.echo("subcommand", "jeps-sweep");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("h", echo_h(&h_spec));
            report.echo("alpha", alpha);
            report.echo("beta", beta);
            report.echo("eps_list", echo_list(&eps_list));
            report.echo("steps", steps);
            report.echo("sigma_levels", sigma_levels);
            report.echo("t_final", t_final);
            report.echo("seed", seed);
            for row in &sweep.rows {
                report.row(vec![
                    fmt_f(row.eps),
                    fmt_f(row.upper),
                    fmt_f(row.lower_dual),
                    fmt_f((row.upper - 1.0).abs()),
                    fmt_f((row.lower_dual - 1.0).abs()),
                ]);
            }
            report.footer(
                "slope_upper",
                sweep
                    .slope_upper
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "na".into()),
            );
            report.footer(
                "slope_lower",
                sweep
                    .slope_lower
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "na".into()),
            );
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "jeps-sweep")?;
            Ok(0)
        }
        Command::Degenerate {
            sigma2,
            h,
            phi,
            phi_arity,
            phi_bound,
            times,
            eps_list,
            steps,
            sigma_levels,
            t_final,
        } => {
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.0, 1.0),
            )?)?;
            let h_spec = merge(
                h.as_deref().map(parse_h).transpose()?,
                &file,
                "h",
                parse_h,
                IntegrandSpec64::Constant(0.5),
            )?;
            let times = merge(
                times.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "times",
                parse_f64_list,
                vec![1.0],
            )?;
            let eps_list = merge(
                eps_list.as_deref().map(parse_f64_list).transpose()?,
                &file,
                "eps_list",
                parse_f64_list,
                vec![0.4, 0.2, 0.1],
            )?;
            let steps = merge(steps, &file, "steps", parse_usize, 8)?;
            let sigma_levels = merge(sigma_levels, &file, "sigma_levels", parse_usize, 2)?;
            let t_final = merge(t_final, &file, "t_final", parse_f64, *times.last().unwrap())?;
            let phi_src = merge(phi, &file, "phi", |s| Ok(s.to_string()), "cos1".into())?;
            let phi_arity = merge_opt(phi_arity, &file, "phi_arity", parse_usize)?;
            let phi_bound = merge_opt(phi_bound, &file, "phi_bound", parse_f64)?;
            let functional = resolve_phi(&phi_src, phi_arity, phi_bound, times.len())?;

            let start = Instant::now();
            let pipeline = degenerate_pipeline(
                &band,
                t_final,
                &h_spec,
                &functional,
                &times,
                &eps_list,
                steps,
                sigma_levels,
            )?;
            let runtime = start.elapsed().as_secs_f64();

            let mut report = Report::new(vec![
                "eps",
                "lhs",
                "rhs",
                "identity_error",
                "step1_gap",
                "step1_bound",
                "step2_gap",
            ]);
            report.echo("subcommand", "degenerate");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("h", echo_h(&h_spec));
            report.echo("phi", &phi_src);
            report.echo("times", echo_list(&times));
            report.echo("eps_list", echo_list(&eps_list));
            report.echo("steps", steps);
            report.echo("sigma_levels", sigma_levels);
            report.echo("t_final", t_final);
            report.echo("seed", seed);
            for row in &pipeline.rows {
                report.row(vec![
                    fmt_f(row.eps),
                    fmt_f(row.lhs),
                    fmt_f(row.rhs),
                    fmt_f(row.identity_error()),
                    fmt_f(row.step1_gap),
                    fmt_f(row.step1_bound),
                    fmt_f(row.step2_gap),
                ]);
            }
            // Final row: the unperturbed identity itself.
            report.row(vec![
                fmt_f(0.0),
                fmt_f(pipeline.base_lhs),
                fmt_f(pipeline.base_rhs),
                fmt_f(pipeline.final_identity_error()),
                fmt_f(0.0),
                fmt_f(0.0),
                fmt_f(0.0),
            ]);
            report.footer("lipschitz", fmt_f(pipeline.lipschitz));
            report.footer("expected_abs_w", fmt_f(pipeline.expected_abs_w));
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "degenerate")?;
            Ok(0)
        }
        Command::Axioms {
            sigma2,
            trials,
            steps,
            sigma_levels,
        } => {
            let band = make_band(merge(
                sigma2_flag(sigma2),
                &file,
                "sigma2",
                parse_sigma2_pair,
                (0.25, 1.0),
            )?)?;
            let trials = merge(trials, &file, "trials", parse_usize, 100)?;
            let steps = merge(steps, &file, "steps", parse_usize, 8)?;
            let sigma_levels = merge(sigma_levels, &file, "sigma_levels", parse_usize, 2)?;

            let start = Instant::now();
            let stats = axiom_trials(trials, steps, band, sigma_levels, seed)?;
            let runtime = start.elapsed().as_secs_f64();

            let all_pass = stats.iter().all(|s| s.passes == s.trials);
            let mut report = Report::new(vec!["axiom", "passes", "trials", "max_violation"]);
            report.echo("subcommand", "axioms");
            report.echo(
                "sigma2",
                format!("{},{}", band.sigma_min_sq(), band.sigma_max_sq()),
            );
            report.echo("trials", trials);
            report.echo("steps", steps);
            report.echo("sigma_levels", sigma_levels);
            report.echo("seed", seed);
            for s in &stats {
                report.row(vec![
                    s.name.to_string(),
                    s.passes.to_string(),
                    s.trials.to_string(),
                    fmt_f(s.max_violation),
                ]);
            }
            report.footer("runtime_secs", format!("{runtime:.3}"));
            write_report(&report.render(), out, "axioms")?;
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::ReproduceAll { quick, inject_bias } => {
            let inject_bias = merge(inject_bias, &file, "inject_bias", parse_f64, 0.0)?;
            let results = run_all(SuiteConfig { quick, inject_bias });
            let mut text = String::new();
            text.push_str(&format!(
                "# config: subcommand=reproduce-all quick={quick} inject_bias={inject_bias} seed={seed}\n"
            ));
            let mut all_pass = true;
            for r in &results {
                text.push_str(&r.summary_line());
                text.push('\n');
                for d in &r.details {
                    text.push_str(d);
                    text.push('\n');
                }
                all_pass &= r.pass;
            }
            text.push_str(if all_pass {
                "ALL CRITERIA PASS\n"
            } else {
                "AT LEAST ONE CRITERION FAILED\n"
            });
            write_report(&text, out, "reproduce-all")?;
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}
