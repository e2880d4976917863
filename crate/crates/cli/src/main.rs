//! Command-line front end for the block-model rate-function toolkit.
//!
//! Exit codes: 0 success, 1 unknown subcommand (usage printed), 2 domain or
//! validation error, 3 capacity error.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::path::PathBuf;
use std::str::FromStr;

use graphon_ldp_core as core;
use graphon_ldp_core::io;

#[derive(Parser, Debug)]
#[command(
    name = "graphon-ldp",
    about = "Rate-function computations for dense stochastic block models",
    version
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintFlag {
    Homdensity,
    Opnorm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CutMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WitnessKind {
    Geps,
    PlantedIndependent,
    PlantedClique,
    PlantedAlpha,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScanFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Homomorphism density t(H, f) of a pattern graph in a step graphon.
    Density {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative entropy of a graphon against a base model.
    Entropy {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cut-norm distance and cut-metric bounds between two graphons.
    Cutdist {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: CutMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kernel operator norm of a step graphon.
    Opnorm {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Value and derivatives of psi_p(x) = h_p(x^(1/d)).
    Psi {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convex-minorant phase classification for bipartite bases.
    Phase {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value = "homdensity")]
        constraint: ConstraintFlag,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symmetric variational problem with rate bracket and witness search.
    Solve {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "homdensity")]
        constraint: ConstraintFlag,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Explicit symmetry-breaking witness constructions.
    Witness {
        #[arg(long, value_enum)]
        kind: WitnessKind,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "homdensity")]
        constraint: ConstraintFlag,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase diagram over a grid of plateau values r.
    Scan {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "homdensity")]
        constraint: ConstraintFlag,
        #[arg(long, value_enum, default_value = "csv")]
        format: ScanFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a graph from the block model; emits an edge list.
    Sample {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        kn: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the upper-tail probability.
    Tail {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        kn: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact tail probability by enumeration of the free vertex pairs.
    Enumerate {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        kn: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conditional concentration statistics against the symmetric optimizer.
    Concentrate {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        kn: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                std::process::exit(0);
            }
            ErrorKind::InvalidSubcommand
            | ErrorKind::MissingSubcommand
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                eprint!("{e}");
                std::process::exit(1);
            }
            _ => {
                eprint!("{e}");
                std::process::exit(2);
            }
        },
    };
    match dispatch(config.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_capacity() { 3 } else { 2 });
        }
    }
}

fn parse_rational(text: &str, what: &str) -> core::Result<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|e| core::Error::Domain(format!("{what}: bad numerator ({e})")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|e| core::Error::Domain(format!("{what}: bad denominator ({e})")))?;
        if d == BigInt::from(0) {
            return Err(core::Error::Domain(format!("{what}: zero denominator")));
        }
        return Ok(BigRational::new(n, d));
    }
    let x: f64 = text
        .parse()
        .map_err(|e| core::Error::Domain(format!("{what}: not a number ({e})")))?;
    BigRational::from_float(x).ok_or_else(|| core::Error::Domain(format!("{what}: not finite")))
}

fn parse_gamma(text: &str) -> core::Result<BigRational> {
    let g = parse_rational(text, "gamma")?;
    let one = BigRational::from_integer(BigInt::from(1));
    let zero = BigRational::from_integer(BigInt::from(0));
    if g <= zero || g >= one {
        return Err(core::Error::Domain(format!(
            "gamma must lie strictly between 0 and 1, got {text}"
        )));
    }
    Ok(g)
}

fn check_unit(x: f64, what: &str) -> core::Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(core::Error::Domain(format!("{what} = {x} outside [0,1]")));
    }
    Ok(x)
}

fn check_open_unit(x: f64, what: &str) -> core::Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(core::Error::Domain(format!("{what} = {x} outside (0,1)")));
    }
    Ok(x)
}

fn load_graphon(path: &PathBuf) -> core::Result<core::StepGraphon> {
    let text = std::fs::read_to_string(path)?;
    io::graphon_from_json(&text)
}

fn load_graph(path: &PathBuf) -> core::Result<core::FiniteGraph> {
    let text = std::fs::read_to_string(path)?;
    io::graph_from_text(&text)
}

fn emit(report: String, out: Option<PathBuf>) -> core::Result<()> {
    match out {
        Some(path) => std::fs::write(path, report)?,
        None if report.ends_with('\n') => print!("{report}"),
        None => println!("{report}"),
    }
    Ok(())
}

fn constraint_kind(
    flag: ConstraintFlag,
    graph: Option<PathBuf>,
    needed_for: &str,
) -> core::Result<core::ConstraintKind> {
    match flag {
        ConstraintFlag::Homdensity => {
            let path = graph.ok_or_else(|| {
                core::Error::Domain(format!(
                    "{needed_for} with a density constraint requires --graph"
                ))
            })?;
            Ok(core::ConstraintKind::HomDensity(load_graph(&path)?))
        }
        ConstraintFlag::Opnorm => Ok(core::ConstraintKind::OperatorNorm),
    }
}

fn dispatch(command: Command) -> core::Result<()> {
    match command {
        Command::Density { graphon, graph, out } => {
            let f = load_graphon(&graphon)?;
            let h = load_graph(&graph)?;
            let t = core::hom_density(&h, &f)?;
            emit(format!("{{\"t\": {}}}", io::fmt_f64(t)), out)
        }
        Command::Entropy { base, graphon, out } => {
            let w0 = load_graphon(&base)?;
            let f = load_graphon(&graphon)?;
            let entropy = core::relative_entropy(&w0, &f);
            emit(
                format!(
                    "{{\"entropy\": {}, \"finite\": {}}}",
                    io::json_f64(entropy),
                    entropy.is_finite()
                ),
                out,
            )
        }
        Command::Cutdist {
            graphon,
            other,
            mode,
            out,
        } => {
            let f = load_graphon(&graphon)?;
            let g = load_graphon(&other)?;
            let bounds = core::delta_cut_bounds(&f, &g);
            let report = match mode {
                CutMode::Exact => {
                    let d = core::cut_norm_distance(&f, &g)?;
                    format!(
                        "{{\"d_box\": {}, \"mode\": \"exact\", \"delta_lower\": {}, \"delta_upper\": {}}}",
                        io::fmt_f64(d),
                        io::fmt_f64(bounds.lower),
                        io::fmt_f64(bounds.upper)
                    )
                }
                CutMode::Heuristic => {
                    let d = core::cut_norm_lower_bound(&f, &g, 32, 0);
                    format!(
                        "{{\"d_box_lower_bound\": {}, \"mode\": \"heuristic\", \"delta_lower\": {}, \"delta_upper\": {}}}",
                        io::fmt_f64(d),
                        io::fmt_f64(bounds.lower),
                        io::fmt_f64(bounds.upper)
                    )
                }
            };
            emit(report, out)
        }
        Command::Opnorm { graphon, out } => {
            let f = load_graphon(&graphon)?;
            let norm = core::operator_norm(&f)?;
            emit(format!("{{\"op_norm\": {}}}", io::fmt_f64(norm)), out)
        }
        Command::Psi { p, d, x, out } => {
            check_open_unit(p, "p")?;
            check_unit(x, "x")?;
            let (value, d1, d2) = core::psi_eval(p, d, x)?;
            let p0 = core::p_zero(d)?;
            emit(
                format!(
                    "{{\"value\": {}, \"first_derivative\": {}, \"second_derivative\": {}, \"p_zero\": {}}}",
                    io::json_f64(value),
                    io::json_f64(d1),
                    io::json_f64(d2),
                    io::json_f64(p0)
                ),
                out,
            )
        }
        Command::Phase {
            p,
            gamma,
            d,
            r,
            constraint,
            out,
        } => {
            check_open_unit(p, "p")?;
            let gamma = parse_gamma(&gamma)?;
            check_unit(r, "r")?;
            if r < p {
                return Err(core::Error::Domain(format!("r = {r} below p = {p}")));
            }
            let d_eff = match constraint {
                ConstraintFlag::Homdensity => d.ok_or_else(|| {
                    core::Error::Domain("--d is required for a density constraint".into())
                })?,
                ConstraintFlag::Opnorm => 2,
            };
            if d_eff == 0 {
                return Err(core::Error::Domain("d must be a positive integer".into()));
            }
            let profile = core::analyze_psi(p, d_eff)?;
            let on = core::psi::on_minorant_profile(&profile, r);
            let window = profile
                .window
                .map(|(a, b)| format!("[{}, {}]", io::fmt_f64(a), io::fmt_f64(b)))
                .unwrap_or_else(|| "null".into());
            let inflection = profile
                .inflection
                .map(|(a, b)| format!("[{}, {}]", io::fmt_f64(a), io::fmt_f64(b)))
                .unwrap_or_else(|| "null".into());
            let class = match profile.class {
                core::ConvexityClass::StrictlyConvex => "strictly-convex",
                core::ConvexityClass::MarginallyConvex => "marginally-convex",
                core::ConvexityClass::NonConvex => "non-convex",
            };
            let _ = gamma; // the phase boundary does not depend on gamma
            emit(
                format!(
                    "{{\"phase\": \"{}\", \"on_minorant\": {}, \"class\": \"{}\", \
                     \"p_zero\": {}, \"d_effective\": {}, \"window\": {}, \"inflection\": {}, \
                     \"tangent_slope\": {}, \"tangent_intercept\": {}}}",
                    if on { "symmetric" } else { "broken" },
                    on,
                    class,
                    io::fmt_f64(core::p_zero(d_eff)?),
                    d_eff,
                    window,
                    inflection,
                    io::json_f64(profile.tangent_slope),
                    io::json_f64(profile.tangent_intercept)
                ),
                out,
            )
        }
        Command::Solve {
            graphon,
            graph,
            t,
            constraint,
            restarts,
            seed,
            out,
        } => {
            let w0 = load_graphon(&graphon)?;
            if !t.is_finite() {
                return Err(core::Error::Domain(format!("t = {t} is not finite")));
            }
            if restarts == 0 {
                return Err(core::Error::Domain("--restarts must be positive".into()));
            }
            let opts = core::SolveOptions { restarts, seed };
            let report = match constraint_kind(constraint, graph, "solve")? {
                core::ConstraintKind::HomDensity(h) => {
                    let bracket = core::phi_bracket(&w0, &h, t, opts)?;
                    format!(
                        "{{\"solution\": {}, \"witness\": {}}}",
                        io::solution_to_json(&bracket.solution),
                        bracket
                            .witness
                            .as_ref()
                            .map(io::witness_to_json)
                            .unwrap_or_else(|| "null".into())
                    )
                }
                core::ConstraintKind::OperatorNorm => {
                    let sol = core::symmetric_min_opnorm(&w0, t)?;
                    format!(
                        "{{\"solution\": {}, \"witness\": null}}",
                        io::solution_to_json(&sol)
                    )
                }
            };
            emit(report, out)
        }
        Command::Witness {
            kind,
            p,
            gamma,
            r,
            t,
            alpha,
            graph,
            constraint,
            out,
        } => {
            let gamma = parse_gamma(&gamma)?;
            let need = |x: Option<f64>, what: &str| {
                x.ok_or_else(|| core::Error::Domain(format!("--{what} is required")))
            };
            let witness = match kind {
                WitnessKind::Geps => {
                    let p = check_open_unit(need(p, "p")?, "p")?;
                    let r = check_unit(need(r, "r")?, "r")?;
                    let kind = constraint_kind(constraint, graph, "witness")?;
                    core::witness_geps(p, &gamma, &kind, r)?
                }
                WitnessKind::PlantedIndependent | WitnessKind::PlantedClique => {
                    let p = check_open_unit(need(p, "p")?, "p")?;
                    let t = check_unit(need(t, "t")?, "t")?;
                    let path = graph.ok_or_else(|| {
                        core::Error::Domain("--graph is required for clique witnesses".into())
                    })?;
                    let h = load_graph(&path)?;
                    let case = if matches!(kind, WitnessKind::PlantedIndependent) {
                        core::PlantedCase::Independent
                    } else {
                        core::PlantedCase::Clique
                    };
                    core::witness_clique(case, &gamma, t, &h, p)?
                }
                WitnessKind::PlantedAlpha => {
                    let alpha = check_open_unit(need(alpha, "alpha")?, "alpha")?;
                    let path = graph.ok_or_else(|| {
                        core::Error::Domain("--graph is required for the planted witness".into())
                    })?;
                    let h = load_graph(&path)?;
                    core::witness_planted(&gamma, alpha, &h)?
                }
            };
            emit(io::witness_to_json(&witness), out)
        }
        Command::Scan {
            p,
            gamma,
            r_min,
            r_max,
            steps,
            graph,
            constraint,
            format,
            out,
        } => {
            check_open_unit(p, "p")?;
            let gamma = parse_gamma(&gamma)?;
            if steps < 2 {
                return Err(core::Error::Domain("--steps must be at least 2".into()));
            }
            let lo = check_unit(r_min.max(p), "r-min")?;
            let hi = check_unit(r_max, "r-max")?;
            if hi < lo {
                return Err(core::Error::Domain(format!(
                    "empty scan range [{lo}, {hi}]"
                )));
            }
            let kind = constraint_kind(constraint, graph, "scan")?;
            let grid: Vec<f64> = (0..steps)
                .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
                .collect();
            let rows = core::phase_scan(p, &gamma, &kind, &grid)?;
            let report = match format {
                ScanFormat::Csv => io::scan_to_csv(&rows),
                ScanFormat::Json => {
                    let items: Vec<String> = rows
                        .iter()
                        .map(|row| {
                            format!(
                                "{{\"r\": {}, \"t_target\": {}, \"on_minorant\": {}, \
                                 \"symmetric_I\": {}, \"witness_I\": {}}}",
                                io::fmt_f64(row.r),
                                io::fmt_f64(row.t_target),
                                row.on_minorant,
                                io::fmt_f64(row.symmetric_entropy),
                                row.witness_entropy
                                    .map(io::json_f64)
                                    .unwrap_or_else(|| "null".into())
                            )
                        })
                        .collect();
                    format!("[{}]", items.join(", "))
                }
            };
            emit(report, out)
        }
        Command::Sample {
            graphon,
            kn,
            seed,
            out,
        } => {
            let w0 = load_graphon(&graphon)?;
            let k = core::graphon::denominator_lcm(&w0).ok_or(core::Error::Capacity {
                what: "equipartition denominator".into(),
                limit: "u64".into(),
            })? as usize;
            if kn == 0 || kn % k != 0 {
                return Err(core::Error::Domain(format!(
                    "kn = {kn} must be a positive multiple of the block count {k}"
                )));
            }
            let g = core::sample_graph(&w0, kn / k, seed)?;
            emit(io::sampled_graph_to_text(&g), out)
        }
        Command::Tail {
            graphon,
            graph,
            t,
            kn,
            samples,
            seed,
            out,
        } => {
            let w0 = load_graphon(&graphon)?;
            let h = load_graph(&graph)?;
            check_unit(t, "t")?;
            let est = core::tail_estimate(&w0, &h, t, kn, samples, seed)?;
            emit(io::tail_to_json(&est), out)
        }
        Command::Enumerate {
            graphon,
            graph,
            t,
            kn,
            out,
        } => {
            let w0 = load_graphon(&graphon)?;
            let h = load_graph(&graph)?;
            check_unit(t, "t")?;
            let est = core::exact_tail(&w0, &h, t, kn)?;
            emit(io::tail_to_json(&est), out)
        }
        Command::Concentrate {
            graphon,
            graph,
            t,
            kn,
            samples,
            seed,
            out,
        } => {
            let w0 = load_graphon(&graphon)?;
            let h = load_graph(&graph)?;
            check_unit(t, "t")?;
            let optimizer = core::symmetric_min(
                &w0,
                &h,
                t,
                core::SolveOptions {
                    restarts: 8,
                    seed: 0,
                },
            )?
            .optimizer;
            let summary =
                core::conditional_concentration(&w0, &h, t, kn, samples, &optimizer, seed)?;
            emit(io::concentration_to_json(&summary), out)
        }
    }
}
