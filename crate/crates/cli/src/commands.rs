use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use weighted_hardy::construction::{
    construct, delta_for_epsilon, lemma_bounds, verify_f_conditions, verify_theorem_conditions, ConstructionConfig,
    VerificationReport, DEFAULT_R_MAX, DEFAULT_TOL,
};
use weighted_hardy::operators::{coisometry_check, orbit_norms, CoefficientVector};
use weighted_hardy::spectral::curvature_differences;
use weighted_hardy::weights::{verify_slope_condition, LogWeights, WeightSequence};
use weighted_hardy::Error;

use crate::output::{float, sibling, write_csv, write_json, RunManifest};

const CURVATURE_TRUNCATION_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "whardy", version, about = "Spiked-weight Hardy space construction and checks")]
#[command(after_help = "Exit codes: 0 pass, 2 condition failure, 3 input error, 4 numerical infeasibility.\n\
Floats in CSV output carry 17 significant digits. With --out, a run manifest is written to <out>.manifest.json.")]
pub struct Cli {
    /// Seed for the random-vector checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for grid sweeps (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose spike positions N_1..N_K and write the config JSON.
    ///
    /// With --out, a certificate table goes to <out>.certificate.csv with columns
    /// k,N,constant, thr_value,thr_laplacian,thr_gradient,thr_carleson_laplacian,thr_carleson_gradient,
    /// bound_value,bound_laplacian,bound_gradient,bound_carleson_laplacian,bound_carleson_gradient,
    /// bracket_end,bracket_admissible.
    Construct {
        #[arg(long)]
        alpha: f64,
        #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
        delta: Option<f64>,
        /// Target ε; δ = min(ε/(1+ε), ε/4).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        rmax: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Check the quotient f against the config's δ, and the kernel-ratio and
    /// curvature conditions when --epsilon is given. Writes report JSON.
    Verify {
        config: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Lemma quantities for ψ_N.
    ///
    /// CSV columns: N,sup_psi,sup_lap_weighted,sup_grad_weighted,carl_lap,carl_grad.
    Lemma {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Curvatures of the weighted and unweighted bundles.
    ///
    /// CSV columns: r,kappa_s,kappa_t,difference,via_quotient,weighted_difference.
    /// Without --config the weight is w ≡ 1.
    Curvature {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Radii; defaults to --points uniform radii in [0, rmax].
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0.99)]
        rmax: f64,
        /// Relative truncation tolerance of the kernel series.
        #[arg(long, default_value_t = CURVATURE_TRUNCATION_TOL)]
        tol: f64,
    },
    /// Orbit norms ‖T*ⁿe_0‖_w plus the seeded coisometry check.
    ///
    /// CSV columns: n,norm.
    Orbit {
        config: PathBuf,
        /// Defaults to one past the last spike.
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// The weight sequence.
    ///
    /// CSV columns: n,w_n,ln_w_n.
    Weights {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        from: u64,
        /// Defaults to ten past the last spike.
        #[arg(long)]
        to: Option<u64>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Condition(String),
    Numerical(String),
}

impl CliError {
    pub const CONDITION: u8 = 2;
    pub const INPUT: u8 = 3;
    pub const NUMERICAL: u8 = 4;

    pub fn code(&self) -> u8 {
        match self {
            Self::Input(_) => Self::INPUT,
            Self::Condition(_) => Self::CONDITION,
            Self::Numerical(_) => Self::NUMERICAL,
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        Self::Input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) | Self::Condition(m) | Self::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain(_) | Error::SpikeLayout(_) => Self::Input(msg),
            Error::Inconsistent { .. } => Self::Condition(msg),
            Error::TruncationInfeasible { .. }
            | Error::StencilOutsideDisk { .. }
            | Error::SearchFailed { .. }
            | Error::Quadrature { .. } => Self::Numerical(msg),
        }
    }
}

fn load_config(path: &Path) -> Result<(ConstructionConfig, WeightSequence), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: ConstructionConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let w = config.weights()?;
    Ok((config, w))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_report(report: &VerificationReport) {
    eprintln!("{} at {}: {}", report.kind, report.parameter, verdict(report.pass));
    for c in &report.conditions {
        eprintln!(
            "  {:<22} measured {:.6e}  threshold {:.6e}  at r = {:.6}  {}",
            c.condition,
            c.measured,
            c.threshold,
            c.argmax_r,
            verdict(c.pass)
        );
    }
}

/// Runs the subcommand. `Ok(false)` means a checked condition failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let started = Instant::now();
    let out = cli.out.as_deref();
    let mut outputs: Vec<PathBuf> = out.map(Path::to_path_buf).into_iter().collect();
    let mut config_path = None;

    let (name, pass) = match &cli.command {
        Command::Construct {
            alpha,
            delta,
            epsilon,
            k,
            rmax,
            tol,
        } => {
            let delta = match (delta, epsilon) {
                (Some(d), _) => *d,
                (None, Some(e)) => delta_for_epsilon(*e)?,
                (None, None) => unreachable!("clap requires one of --delta, --epsilon"),
            };
            let mut result = construct(*alpha, delta, *k)?;
            result.config.r_max = *rmax;
            result.config.tol = *tol;
            result.config.validate()?;
            write_json(out, &result.config)?;
            let pass = result
                .certificates
                .iter()
                .all(|c| c.bounds.within(&c.thresholds) && c.bracket_admissible);
            for c in &result.certificates {
                eprintln!("k = {}: N = {} (C_k = {:.6})", c.k, c.start, c.constant);
            }
            if let Some(base) = out {
                let path = sibling(base, "certificate.csv");
                let rows: Vec<Vec<String>> = result
                    .certificates
                    .iter()
                    .map(|c| {
                        let mut row = vec![c.k.to_string(), c.start.to_string(), float(c.constant)];
                        row.extend(c.thresholds.as_array().iter().map(|&x| float(x)));
                        row.extend(c.bounds.as_array().iter().map(|&x| float(x)));
                        row.push(c.bracket_end.to_string());
                        row.push(c.bracket_admissible.to_string());
                        row
                    })
                    .collect();
                write_csv(Some(&path), &CERTIFICATE_HEADER, &rows)?;
                outputs.push(path);
            }
            ("construct", pass)
        }
        Command::Verify { config, epsilon } => {
            config_path = Some(config.clone());
            let (cfg, _) = load_config(config)?;
            let mut reports = vec![verify_f_conditions(&cfg)?];
            if let Some(eps) = epsilon {
                reports.push(verify_theorem_conditions(&cfg, *eps)?);
            }
            reports.iter().for_each(print_report);
            let pass = reports.iter().all(|r| r.pass);
            write_json(out, &VerifyOutput { pass, reports })?;
            ("verify", pass)
        }
        Command::Lemma { n } => {
            if let Some(&bad) = n.iter().find(|&&n| n == 0) {
                return Err(CliError::Input(format!("N = {bad} must be at least 1")));
            }
            let reports = n.iter().map(|&n| lemma_bounds(n)).collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    let mut row = vec![r.n.to_string()];
                    row.extend(r.fields().iter().map(|&x| float(x)));
                    row
                })
                .collect();
            write_csv(
                out,
                &["N", "sup_psi", "sup_lap_weighted", "sup_grad_weighted", "carl_lap", "carl_grad"],
                &rows,
            )?;
            let nonnegative = reports.iter().all(|r| r.fields().iter().all(|&x| x >= 0.0));
            let decaying = reports.windows(2).filter(|p| p[0].n < p[1].n).all(|p| {
                p[0].fields().iter().zip(p[1].fields()).all(|(a, b)| b < *a)
            });
            ("lemma", nonnegative && decaying)
        }
        Command::Curvature {
            config,
            r,
            points,
            rmax,
            tol,
        } => {
            let w = match config {
                Some(path) => {
                    config_path = Some(path.clone());
                    load_config(path)?.1
                }
                None => WeightSequence::unweighted(),
            };
            let radii: Vec<f64> = if r.is_empty() {
                if *points < 2 {
                    return Err(CliError::Input("--points must be at least 2".into()));
                }
                (0..*points).map(|i| rmax * i as f64 / (*points - 1) as f64).collect()
            } else {
                r.clone()
            };
            let diffs = curvature_differences(&w, &radii, *tol)?;
            let rows: Vec<Vec<String>> = diffs
                .iter()
                .map(|d| {
                    let kappa_t = d.kappa_s - d.via_curvatures;
                    vec![
                        float(d.r),
                        float(d.kappa_s),
                        float(kappa_t),
                        float(d.via_curvatures),
                        float(d.via_quotient),
                        float(d.via_curvatures * (1.0 - d.r).powi(2)),
                    ]
                })
                .collect();
            write_csv(
                out,
                &["r", "kappa_s", "kappa_t", "difference", "via_quotient", "weighted_difference"],
                &rows,
            )?;
            ("curvature", true)
        }
        Command::Orbit { config, n_max, trials } => {
            config_path = Some(config.clone());
            let (cfg, w) = load_config(config)?;
            let last = w.spikes().last().map_or(0, |s| s.end());
            let n_max = n_max.unwrap_or(last + 1);
            let orbit = orbit_norms(&w, &CoefficientVector::basis(0), n_max);
            let rows: Vec<Vec<String>> = orbit
                .iter()
                .enumerate()
                .map(|(n, v)| vec![n.to_string(), float(*v)])
                .collect();
            write_csv(out, &["n", "norm"], &rows)?;

            let mut pass = true;
            for (k, spike) in w.spikes().iter().enumerate() {
                let Some(&v) = orbit.get(spike.peak() as usize) else {
                    continue;
                };
                let expected = (1.0 + cfg.alpha).powi(k as i32 + 1);
                let ok = (v - expected).abs() <= 1e-12 * expected;
                eprintln!("peak n = {}: {v} (expected {expected}) {}", spike.peak(), verdict(ok));
                pass &= ok;
            }
            let margin = 2 * w.spikes().last().map_or(1, |s| s.half_width);
            let support = (last + 1 + margin) as usize;
            let rep = coisometry_check(&w, cfg.alpha, *trials, support, cli.seed)?;
            eprintln!(
                "coisometry over {} vectors: ratio in [{:.6}, {:.6}], sharp [{:.6}, {:.6}] {}, stated [{:.6}, {:.6}] {}",
                rep.trials,
                rep.min_ratio,
                rep.max_ratio,
                rep.sharp_lower,
                rep.upper,
                verdict(rep.sharp_pass),
                rep.linear_lower,
                rep.upper,
                verdict(rep.linear_pass)
            );
            ("orbit", pass && rep.sharp_pass && rep.linear_pass)
        }
        Command::Weights { config, from, to } => {
            config_path = Some(config.clone());
            let (cfg, w) = load_config(config)?;
            let to = to.unwrap_or(w.spikes().last().map_or(0, |s| s.end()) + 10);
            if to < *from {
                return Err(CliError::Input(format!("--to {to} is below --from {from}")));
            }
            let rows: Vec<Vec<String>> = (*from..=to)
                .map(|n| vec![n.to_string(), float(w.weight(n)), float(w.ln_weight(n))])
                .collect();
            write_csv(out, &["n", "w_n", "ln_w_n"], &rows)?;
            let slope = verify_slope_condition(&w, cfg.alpha, to + 1);
            ("weights", slope.pass)
        }
    };

    if out.is_some() {
        RunManifest {
            command: name.to_string(),
            config: config_path,
            outputs,
            seed: cli.seed,
            threads: cli.threads,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
        .write()?;
    }
    Ok(pass)
}

const CERTIFICATE_HEADER: [&str; 15] = [
    "k",
    "N",
    "constant",
    "thr_value",
    "thr_laplacian",
    "thr_gradient",
    "thr_carleson_laplacian",
    "thr_carleson_gradient",
    "bound_value",
    "bound_laplacian",
    "bound_gradient",
    "bound_carleson_laplacian",
    "bound_carleson_gradient",
    "bracket_end",
    "bracket_admissible",
];

#[derive(Serialize)]
struct VerifyOutput {
    pass: bool,
    reports: Vec<VerificationReport>,
}
