//! Command-line front end: counting runs, censuses, heights, moments,
//! verifier batteries, Diophantine searches, sojourn estimates, the
//! equidistribution experiment, and walk schedules.
//!
//! Exit codes: 0 success, 2 precondition violation or usage error,
//! 3 resource cap, 4 failed assertion battery.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use opplab_core::config::Config;
use opplab_core::count::{
    compute_cq, compute_iq, count_points, degenerate_planes, isotropic_lines,
    CqMethod,
};
use opplab_core::dioph::{construct_integral_form, estimate_dioph_type, quasi_null_shell};
use opplab_core::error::Error;
use opplab_core::flows::{
    moment, sojourn_fraction, verify_linear_contraction, verify_subharmonic, walk_schedule,
    LinearWhich, MomentDomain, MomentHeight, SubharmonicWhich,
};
use opplab_core::forms::QForm;
use opplab_core::geom;
use opplab_core::heights::{log_epsilon_threshold, meets_thin_shell, HeightParams};
use opplab_core::lattice::{lattice_from_form, Lattice3};
use opplab_core::quad::QuadratureOptions;
use opplab_core::battery;
use opplab_core::siegel::{equidistribution_experiment, SupportedFn};

#[derive(Parser)]
#[command(
    name = "opplab",
    about = "Heights, flows, and lattice-point counting for indefinite ternary quadratic forms"
)]
struct Cli {
    /// JSON config file; flags override individual keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long = "M", global = true)]
    m_type: Option<f64>,
    #[arg(long = "D", global = true)]
    d_const: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormArg {
    /// Path to a JSON form literal {"radicand": d, "coeffs": {...}}.
    #[arg(long)]
    form: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// N_Q(a,b,T) by slice enumeration, with the line/plane decomposition.
    Count {
        #[command(flatten)]
        form: FormArg,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long = "T")]
        t_radius: f64,
        /// Report only the modified count column in CSV mode.
        #[arg(long)]
        modified: bool,
    },
    /// C_Q by the surface and/or volume-slope route.
    Cq {
        #[command(flatten)]
        form: FormArg,
        /// surface | volume | both
        #[arg(long, default_value = "both")]
        method: String,
    },
    /// I_Q(a,b) from the censuses.
    Iq {
        #[command(flatten)]
        form: FormArg,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 10_000.0)]
        t_probe: f64,
    },
    /// Isotropic lines and degenerate planes of an exact form.
    Census {
        #[command(flatten)]
        form: FormArg,
        #[arg(long, default_value_t = 100)]
        radius: i64,
    },
    /// α and the filtered α̂ family of Δ_Q at a flow point.
    Alpha {
        /// Form literal; mutually exclusive with --lattice.
        #[arg(long)]
        form: Option<PathBuf>,
        /// Lattice literal {"basis": [[...]], "exact": bool}.
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r: f64,
    },
    /// ∫ h(a_t u_r; Δ_Q)^λ dr along the t-grid.
    Moment {
        #[command(flatten)]
        form: FormArg,
        /// alpha | alpha-hat | alpha-hat-prime
        #[arg(long, default_value = "alpha-hat")]
        height: String,
        #[arg(long, default_value_t = 1.01)]
        exponent: f64,
        /// Comma-separated t values.
        #[arg(long = "t-grid", default_value = "1,2,4,8")]
        t_grid: String,
        /// u | k
        #[arg(long, default_value = "u")]
        over: String,
    },
    /// Contraction / subharmonic inequality batteries.
    Verify {
        /// contraction | subharmonic
        kind: String,
        /// norm | expansion | phi | phi-star (contraction);
        /// alpha-lambda | alpha-super | alpha-hat | alpha-hat-prime | alpha-tilde
        #[arg(long)]
        which: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 0.9)]
        lambda: f64,
    },
    /// Diophantine-type estimation and the five-point constructor.
    Dioph {
        /// type | construct
        kind: String,
        #[arg(long)]
        form: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        m_exp: f64,
        #[arg(long, default_value_t = 10)]
        cap: i64,
        /// JSON file with five integer points (construct).
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Shell census radius (runs the quasi-null shell check when set).
        #[arg(long)]
        shell: Option<f64>,
    },
    /// Monte Carlo sojourn fraction of the thin-shell predicate.
    Sojourn {
        #[arg(long)]
        form: Option<PathBuf>,
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
    /// K-average equidistribution table for the wedge region.
    Equidist {
        #[command(flatten)]
        form: FormArg,
        #[arg(long = "t-grid", default_value = "4,6,8,10")]
        t_grid: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
        a: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        b: f64,
    },
    /// Walk schedule construction.
    Schedule {
        #[arg(long = "B", default_value_t = 3.0)]
        b_ratio: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t_tail: f64,
        #[arg(long)]
        t: f64,
    },
    /// Runs the canned experiment battery (the acceptance criteria).
    Battery {
        /// Run a single criterion 1..10 instead of all.
        #[arg(long)]
        only: Option<usize>,
        /// Comma-separated criterion ids; an empty string runs nothing.
        #[arg(long)]
        ids: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.downcast_ref::<Error>() {
                Some(err) => err.exit_code(),
                None => 2,
            };
            ExitCode::from(code as u8)
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_json(&std::fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    if let Some(v) = cli.delta {
        cfg.delta = v;
    }
    if let Some(v) = cli.eta {
        cfg.eta = v;
    }
    if let Some(v) = cli.m_type {
        cfg.m_type = v;
    }
    if let Some(v) = cli.d_const {
        cfg.d_const = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Ok(threads) = std::env::var("OPPLAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    Ok(cfg)
}

fn load_form(path: &PathBuf) -> anyhow::Result<QForm> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(QForm::from_json(&value)?)
}

fn load_lattice_or_form(
    form: &Option<PathBuf>,
    lattice: &Option<PathBuf>,
) -> anyhow::Result<Lattice3> {
    match (form, lattice) {
        (Some(f), None) => Ok(lattice_from_form(&load_form(f)?)?),
        (None, Some(l)) => {
            let text = std::fs::read_to_string(l)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            Ok(Lattice3::from_json(&value)?)
        }
        _ => Err(Error::Precondition("pass exactly one of --form or --lattice".into()).into()),
    }
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad grid entry: {e}")))
        .collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = load_config(&cli)?;
    let params = || HeightParams::from_config(&cfg);
    let quad_opts = QuadratureOptions { tol: cfg.quad_tol, max_nodes: cfg.quad_max_nodes };
    match &cli.command {
        Command::Count { form, a, b, t_radius, modified } => {
            let q = load_form(&form.form)?;
            let rep = count_points(&q, *a, *b, *t_radius, &cfg)?;
            let mut text = String::from("T,raw,modified,line_points,plane_points\n");
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                rep.t_radius,
                rep.raw_count,
                rep.modified_count,
                rep.excluded_line_points,
                rep.excluded_plane_points
            ));
            if *modified {
                text = format!("T,modified\n{},{}\n", rep.t_radius, rep.modified_count);
            }
            let report = json!({
                "config": cfg.to_json(),
                "report": {
                    "T": rep.t_radius,
                    "raw": rep.raw_count,
                    "modified": rep.modified_count,
                    "line_points": rep.excluded_line_points,
                    "plane_points": rep.excluded_plane_points,
                    "per_line": rep.per_line.iter().map(|(m, c)| json!({"dir": m, "count": c})).collect::<Vec<_>>(),
                    "per_plane": rep.per_plane.iter().map(|(n, c)| json!({"normal": n, "count": c})).collect::<Vec<_>>(),
                    "census_truncated": rep.census_truncated,
                },
                "csv": text,
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cq { form, method } => {
            let q = load_form(&form.form)?;
            let methods: Vec<CqMethod> = match method.as_str() {
                "surface" => vec![CqMethod::Surface],
                "volume" => vec![CqMethod::VolumeSlope],
                "both" => vec![CqMethod::Surface, CqMethod::VolumeSlope],
                other => anyhow::bail!("unknown method '{other}'"),
            };
            let rep = compute_cq(&q, &methods, &cfg)?;
            let report = json!({
                "config": cfg.to_json(),
                "surface": rep.surface.map(|(v, e)| json!({"value": v, "error": e})),
                "volume": rep.volume.map(|(v, e)| json!({"value": v, "error": e})),
                "agree_within": rep.agree_within,
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Iq { form, a, b, t_probe } => {
            let q = load_form(&form.form)?;
            let (iq, breakdown) = compute_iq(&q, *a, *b, *t_probe, &cfg)?;
            let report = json!({
                "config": cfg.to_json(),
                "I_Q": iq,
                "line_sum": breakdown.line_sum,
                "line_term": breakdown.line_term,
                "planes": breakdown.planes.iter().map(|p| json!({
                    "normal": p.normal, "density": p.density, "empirical": p.empirical
                })).collect::<Vec<_>>(),
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Census { form, radius } => {
            let q = load_form(&form.form)?;
            let lines = isotropic_lines(&q, *radius)?;
            let planes = degenerate_planes(&q, *radius)?;
            let report = json!({
                "config": cfg.to_json(),
                "lines": lines.reps,
                "line_census_truncated": lines.truncated,
                "planes": planes.planes.iter().map(|p| json!({
                    "normal": p.normal, "basis": [p.basis.0, p.basis.1]
                })).collect::<Vec<_>>(),
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Alpha { form, lattice, t, r } => {
            let p = params()?;
            let lat = load_lattice_or_form(form, lattice)?;
            let g = opplab_core::flows::flow_matrix(*t, *r);
            let alpha = lat.translated(&g).alpha(cfg.enum_max_box)?;
            use opplab_core::heights::{alpha_hat, AlphaHatVariant};
            let hat = alpha_hat(&g, &lat, &p, AlphaHatVariant::EtaM, cfg.enum_max_box)?;
            let prime = alpha_hat(&g, &lat, &p, AlphaHatVariant::Prime, cfg.enum_max_box)?;
            let report = json!({
                "config": cfg.to_json(),
                "t": t, "r": r,
                "alpha": alpha,
                "alpha_hat_eta_M": hat,
                "alpha_hat_prime": prime,
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Moment { form, height, exponent, t_grid, over } => {
            let q = load_form(&form.form)?;
            let p = params()?;
            let lat = lattice_from_form(&q)?;
            let h = match height.as_str() {
                "alpha" => MomentHeight::Alpha,
                "alpha-hat" => MomentHeight::AlphaHatEtaM,
                "alpha-hat-prime" => MomentHeight::AlphaHatPrime,
                other => anyhow::bail!("unknown height '{other}'"),
            };
            let dom = match over.as_str() {
                "u" => MomentDomain::Unipotent,
                "k" => MomentDomain::Compact,
                other => anyhow::bail!("unknown domain '{other}'"),
            };
            let grid = parse_grid(t_grid)?;
            let mut csv = String::from("t,value,error_bound,nodes\n");
            for &t in &grid {
                let m = moment(&lat, t, *exponent, &p, h, dom, &quad_opts, cfg.hint_radius, cfg.enum_max_box)?;
                csv.push_str(&format!("{t},{},{},{}\n", m.value, m.error_bound, m.node_count));
            }
            emit(&cli.out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { kind, which, trials, t, lambda } => {
            let p = params()?;
            let mut rng = {
                use rand::SeedableRng;
                rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed)
            };
            let mut csv = String::from("trial,t,lhs,rhs,error_bound,pass\n");
            let mut all_pass = true;
            match kind.as_str() {
                "contraction" => {
                    let w = match which.as_str() {
                        "norm" => LinearWhich::NormLambda(*lambda),
                        "expansion" => LinearWhich::Expansion,
                        "phi" => LinearWhich::Phi,
                        "phi-star" => LinearWhich::PhiStar,
                        other => anyhow::bail!("unknown variant '{other}'"),
                    };
                    for i in 0..*trials {
                        use rand::Rng;
                        let vec = [
                            rng.gen_range(-10.0..10.0),
                            rng.gen_range(-10.0..10.0),
                            rng.gen_range(-10.0..10.0),
                        ];
                        let rep = verify_linear_contraction(&vec, *t, &p, w, &quad_opts)?;
                        all_pass &= rep.pass;
                        let err = rep.quad.as_ref().map(|q| q.error_bound).unwrap_or(0.0);
                        csv.push_str(&format!(
                            "{i},{t},{},{},{err},{}\n",
                            rep.lhs, rep.rhs, rep.pass
                        ));
                    }
                }
                "subharmonic" => {
                    let w = match which.as_str() {
                        "alpha-lambda" => SubharmonicWhich::AlphaLambda(*lambda),
                        "alpha-super" => SubharmonicWhich::AlphaSuper,
                        "alpha-hat" => SubharmonicWhich::AlphaHatExpansion,
                        "alpha-hat-prime" => SubharmonicWhich::AlphaHatPrime,
                        "alpha-tilde" => SubharmonicWhich::AlphaTilde,
                        other => anyhow::bail!("unknown variant '{other}'"),
                    };
                    csv = String::from("trial,t,lhs,rhs,error_bound,pass,skipped_witness\n");
                    for i in 0..*trials {
                        let lat = opplab_core::lattice::random_unimodular(&mut rng);
                        let rep = verify_subharmonic(
                            &geom::IDENTITY,
                            &lat,
                            &p,
                            *t,
                            w,
                            &quad_opts,
                            cfg.hint_radius,
                            cfg.enum_max_box,
                        )?;
                        all_pass &= rep.pass;
                        let err = rep.quad.as_ref().map(|q| q.error_bound).unwrap_or(0.0);
                        let witness = rep
                            .skipped
                            .as_ref()
                            .map(|w| format!("side{}:[{} {} {}]", w.side, w.m[0], w.m[1], w.m[2]))
                            .unwrap_or_default();
                        csv.push_str(&format!(
                            "{i},{t},{},{},{err},{},{witness}\n",
                            rep.lhs, rep.rhs, rep.pass
                        ));
                    }
                }
                other => anyhow::bail!("unknown battery '{other}'"),
            }
            emit(&cli.out, &csv)?;
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::Dioph { kind, form, m_exp, cap, points, eps, shell } => {
            let q = load_form(form)?;
            match kind.as_str() {
                "type" => {
                    let est = estimate_dioph_type(&q, *m_exp, *cap)?;
                    let report = json!({
                        "config": cfg.to_json(),
                        "c_min": est.c_min,
                        "argmin": est.argmin,
                        "cap": est.cap,
                    });
                    emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
                }
                "construct" => {
                    let path = points
                        .as_ref()
                        .ok_or_else(|| anyhow::anyhow!("--points required for construct"))?;
                    let text = std::fs::read_to_string(path)?;
                    let pts: Vec<[i64; 3]> = serde_json::from_str(&text)?;
                    if pts.len() != 5 {
                        anyhow::bail!("need exactly five points");
                    }
                    let arr = [pts[0], pts[1], pts[2], pts[3], pts[4]];
                    let radius = pts
                        .iter()
                        .flat_map(|m| m.iter().map(|x| x.abs()))
                        .max()
                        .unwrap_or(1) as f64
                        + 1.0;
                    let out = construct_integral_form(&q, &arr, radius, *eps)?;
                    let coeffs: Vec<String> =
                        out.q_prime.c.iter().map(|c| c.a.to_string()).collect();
                    let report = json!({
                        "config": cfg.to_json(),
                        "q_prime_monomials": coeffs,
                        "rho": out.rho,
                        "dist": out.dist,
                        "norm": out.norm,
                        "norm_bound": out.norm_bound,
                    });
                    emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
                }
                "shell" => {
                    let r = shell.ok_or_else(|| anyhow::anyhow!("--shell radius required"))?;
                    let p = params()?;
                    let rep = quasi_null_shell(&q, &p, r, cfg.enum_max_box)?;
                    let report = json!({
                        "config": cfg.to_json(),
                        "vectors": rep.vectors.len(),
                        "line_cover": rep.line_cover,
                        "plane_cover": rep.plane_cover,
                        "pass": rep.pass,
                    });
                    emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
                }
                other => anyhow::bail!("unknown dioph subcommand '{other}'"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sojourn { form, lattice, t, s, samples } => {
            let p = params()?;
            let lat = load_lattice_or_form(form, lattice)?;
            let (log_eps, _) =
                log_epsilon_threshold(&geom::IDENTITY, &lat, &p, *s, cfg.enum_max_box)?;
            let max_box = cfg.enum_max_box;
            let s_val = *s;
            let predicate = move |l: &Lattice3| {
                meets_thin_shell(l, s_val, log_eps, max_box).unwrap_or(false)
            };
            let (frac, ci) = sojourn_fraction(&lat, *t, &predicate, *samples, cfg.seed)?;
            let report = json!({
                "config": cfg.to_json(),
                "t": t, "s": s, "log_eps": log_eps,
                "fraction": frac,
                "wilson_ci": [ci.0, ci.1],
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Equidist { form, t_grid, a, b } => {
            let q = load_form(&form.form)?;
            let p = params()?;
            let grid = parse_grid(t_grid)?;
            let f = SupportedFn::wedge_region(*a, *b)?;
            let rep = equidistribution_experiment(
                &f,
                &q,
                &grid,
                &|_| 1.0,
                cfg.k_nodes,
                cfg.mc_samples.min(20_000_000),
                cfg.seed,
                &p,
                cfg.cross_radius,
                cfg.enum_max_box,
            )?;
            let mut csv = String::from("t,k_average,limit,abs_deviation\n");
            for row in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    row.t, row.k_average, rep.limit, row.abs_deviation
                ));
            }
            emit(&cli.out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Schedule { b_ratio, delta, t_tail, t } => {
            let ws = walk_schedule(*b_ratio, *delta, *t_tail, *t)?;
            let report = json!({
                "config": cfg.to_json(),
                "s": ws.s,
                "valid": ws.validate(),
            });
            emit(&cli.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Battery { only, ids } => {
            let results = match (only, ids) {
                (Some(id), _) => vec![battery::run_criterion(*id, &cfg)?],
                (None, Some(list)) => {
                    let mut out = Vec::new();
                    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
                        let id: usize = part.trim().parse().map_err(|e| {
                            anyhow::anyhow!("bad criterion id '{part}': {e}")
                        })?;
                        out.push(battery::run_criterion(id, &cfg)?);
                    }
                    out
                }
                (None, None) => battery::run_all(&cfg)?,
            };
            let mut text = String::new();
            let mut all_pass = true;
            for r in &results {
                all_pass &= r.pass;
                text.push_str(&format!(
                    "[{}] criterion {:2} ({}): {} [{:.1}s]\n",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.id,
                    r.name,
                    r.detail,
                    r.seconds
                ));
            }
            let report = json!({
                "config": cfg.to_json(),
                "results": results,
                "all_pass": all_pass,
            });
            emit(&cli.out, &format!("{text}{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
    }
}
