//! Command-line front end: correlators, tau tables, Θ intersection numbers,
//! R-matrices, stable graphs and verification suites, all exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use thetakdv::curve::SpectralCurve;
use thetakdv::exact::{fmt_rational, ExtScalar, Rational};
use thetakdv::givental::{laplace_b, ode_check, twisted_loop_check, FrobeniusPointData};
use thetakdv::graphs::enumerate;
use thetakdv::graphs::graph_sum::givental_graph_sum;
use thetakdv::graphs::relations::{fixtures, TautRelation};
use thetakdv::recursion::{Correlator, Engine};
use thetakdv::series::{Poly, RatFunc};
use thetakdv::tau::{
    assemble, assemble_flat, bgw_initial_condition_check, dilaton_homogeneity_check, kdv_check, Provenance, TauTable,
};
use thetakdv::theta::{Pipeline, ThetaQuery, ThetaService};

/// Environment variable naming the correlator cache directory.
const CACHE_ENV: &str = "THETAKDV_CACHE_DIR";
const CACHE_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "thetakdv",
    version,
    about = "Exact topological recursion, KdV tau tables and Θ intersection numbers"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,

    /// Starting order of the local expansions at the critical points.
    #[arg(long, global = true, default_value_t = 16, value_parser = clap::value_parser!(i64).range(1..))]
    frame_order: i64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Plain,
    Latex,
}

#[derive(Args, Debug, Clone)]
struct CurveArgs {
    /// Built-in curve: airy, bessel, a2 or bgw-a2.
    #[arg(long, conflicts_with = "curve_file")]
    curve: Option<String>,

    /// JSON curve description.
    #[arg(long)]
    curve_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlator ω_{g,n} in the V-basis (and its global form when n = 1).
    Tr {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
    },
    /// Tau-table entries of type (g, n).
    Tau {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
    },
    /// ∫Θ_{g,n} ∏ψ^k ∏κ_ℓ.
    Theta {
        #[arg(long)]
        g: u32,
        /// Comma-separated ψ exponents, one per marked point.
        #[arg(long, value_delimiter = ',')]
        psi: Vec<u32>,
        /// Comma-separated κ indices.
        #[arg(long, value_delimiter = ',')]
        kappa: Vec<u32>,
        /// Defaults to bessel, or to relations with --lambda-generic.
        #[arg(long, value_enum)]
        pipeline: Option<PipelineArg>,
        /// Polynomial in λ = 24∫Θ_{1,1} (relations pipeline only).
        #[arg(long)]
        lambda_generic: bool,
        /// Fail instead of extending the Bessel table.
        #[arg(long)]
        no_extend: bool,
    },
    /// Rational part ∫Θ_{g,n}κ₁^{g-1} of the Θ Weil-Petersson volume.
    Volume {
        #[arg(long)]
        g: u32,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, value_enum, default_value_t = PipelineArg::Bessel)]
        pipeline: PipelineArg,
    },
    /// R-matrix coefficients R_1..R_order from the Laplace transform of B.
    Rmatrix {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Stable graphs of type (g, n) with automorphism counts.
    Graphs {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
    },
    /// Givental graph sum with Bessel vertices, per graph and in total.
    GraphSum {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
    },
    /// Pairs a relation (JSON file or shipped fixture) with Θ.
    Relation {
        /// Relation file in the JSON relation format.
        #[arg(long, conflicts_with = "fixture")]
        file: Option<PathBuf>,
        /// Shipped fixture: mumford, genus3-psi-cubed, genus3-mixed or lambda1.
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long, value_enum, default_value_t = PipelineArg::Bessel)]
        pipeline: PipelineArg,
    },
    /// Runs a verification suite and reports one line per assertion.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        curve: CurveArgs,
        /// Total t-degree for the KdV check.
        #[arg(long, default_value_t = 5)]
        degree: u32,
        #[arg(long, default_value_t = 3)]
        g_max: u32,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Series order for the R-matrix checks.
        #[arg(long, default_value_t = 6)]
        order: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PipelineArg {
    Bessel,
    Relations,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Bessel => Pipeline::Bessel,
            PipelineArg::Relations => Pipeline::Relations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Kdv,
    Dilaton,
    TwistedLoop,
    Vanishing,
    Relations,
    CrossPipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let fmt = cli.format;
    match &cli.command {
        Command::Tr { curve, g, n } => {
            if (*g, *n) == (0, 2) {
                let c = resolve_curve(curve)?;
                print!("{}", render_kernel(&c, fmt));
                return Ok(true);
            }
            let engine = load_engine(curve, cli.frame_order)?;
            let c = engine.correlator(*g, *n)?;
            let form = if *n == 1 {
                Some(engine.rational_form_n1(*g)?)
            } else {
                None
            };
            save_cache(&engine)?;
            print!("{}", render_correlator(&engine, &c, form.as_ref(), fmt));
            Ok(true)
        }
        Command::Tau { curve, g, n } => {
            let engine = load_engine(curve, cli.frame_order)?;
            let out = render_tau(&engine, *g, *n, fmt)?;
            save_cache(&engine)?;
            print!("{out}");
            Ok(true)
        }
        Command::Theta {
            g,
            psi,
            kappa,
            pipeline,
            lambda_generic,
            no_extend,
        } => {
            let service = ThetaService::new((*g).min(3), !no_extend)?;
            let query = ThetaQuery::new(*g, psi.clone(), kappa.clone())?;
            if *lambda_generic {
                let pipeline = pipeline.map_or(Pipeline::Relations, Pipeline::from);
                let p = service.theta_lambda_generic(&query, pipeline)?;
                print!("{}", render_lambda_poly(&p, pipeline, fmt)?);
            } else {
                let pipeline = pipeline.map_or(Pipeline::Bessel, Pipeline::from);
                let a = service.theta(&query, pipeline)?;
                print!(
                    "{}",
                    match fmt {
                        Format::Json => pretty(&a.to_json()),
                        Format::Plain => format!("{} ({})\n", fmt_rational(&a.value), a.pipeline.name()),
                        Format::Latex => format!("{}\n", latex_rational(&a.value)),
                    }
                );
            }
            Ok(true)
        }
        Command::Volume { g, n, pipeline } => {
            let service = ThetaService::new((*g).min(3), true)?;
            let v = service.wp_volume_coefficient(*g, *n, Pipeline::from(*pipeline))?;
            let prefactor = format!("(2π²)^{}/{}!", g.saturating_sub(1), g.saturating_sub(1));
            print!(
                "{}",
                match fmt {
                    Format::Json => pretty(&json!({
                        "g": g, "n": n,
                        "coefficient": fmt_rational(&v),
                        "prefactor": prefactor,
                    })),
                    Format::Plain => format!("V^Θ_{{{g},{n}}} = {prefactor} · {}\n", fmt_rational(&v)),
                    Format::Latex => format!(
                        "V^{{\\Theta}}_{{{g},{n}}} = \\frac{{(2\\pi^2)^{{{}}}}}{{{}!}} \\cdot {}\n",
                        g.saturating_sub(1),
                        g.saturating_sub(1),
                        latex_rational(&v)
                    ),
                }
            );
            Ok(true)
        }
        Command::Rmatrix { curve, order } => {
            let c = resolve_curve(curve)?;
            let r = laplace_b(&c, *order)?;
            let out = match fmt {
                Format::Json => pretty(&json!({"curve": c.name, "R": r.to_json()})),
                Format::Plain => (1..=*order).fold(String::new(), |mut s, k| {
                    let _ = writeln!(s, "R_{k} =\n{}", r.coeff(k));
                    s
                }),
                Format::Latex => (1..=*order).fold(String::new(), |mut s, k| {
                    let _ = writeln!(s, "R_{{{k}}} = {}", r.coeff(k).to_latex());
                    s
                }),
            };
            print!("{out}");
            Ok(true)
        }
        Command::Graphs { g, n } => {
            let list = enumerate(*g, *n)?;
            let out = match fmt {
                Format::Json => pretty(&Value::Array(
                    list.iter()
                        .map(|(gr, aut)| {
                            json!({
                                "genera": gr.genera,
                                "edges": gr.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
                                "legs": gr.legs.iter().enumerate()
                                    .map(|(j, &v)| ((j + 1).to_string(), json!(v)))
                                    .collect::<serde_json::Map<_, _>>(),
                                "aut": aut,
                            })
                        })
                        .collect(),
                )),
                _ => list.iter().fold(String::new(), |mut s, (gr, aut)| {
                    let _ = writeln!(
                        s,
                        "genera={:?} edges={:?} legs={:?} |Aut|={aut}",
                        gr.genera, gr.edges, gr.legs
                    );
                    s
                }),
            };
            print!("{out}");
            Ok(true)
        }
        Command::GraphSum { curve, g, n } => {
            let c = resolve_curve(curve)?;
            let bessel = Engine::shared("bessel")?;
            let table = assemble(&bessel, *g, (2 * *g as usize + *n).max(1), Provenance::Bessel)?;
            let sum = givental_graph_sum(&c, &table, *g, *n)?;
            let coeffs = |m: &BTreeMap<Vec<(usize, usize)>, ExtScalar>| {
                Correlator {
                    g: *g,
                    n: *n,
                    coeffs: m.clone(),
                }
                .to_json()["terms"]
                    .clone()
            };
            let out = match fmt {
                Format::Json => pretty(&json!({
                    "g": g, "n": n,
                    "total": coeffs(&sum.coeffs),
                    "graphs": sum.terms.iter().map(|t| json!({
                        "genera": t.graph.genera,
                        "edges": t.graph.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
                        "legs": t.graph.legs,
                        "aut": t.automorphisms,
                        "dilaton_leaves": t.dilaton_leaves,
                        "coefficients": coeffs(&t.coeffs),
                    })).collect::<Vec<_>>(),
                })),
                _ => {
                    let mut s = String::new();
                    for t in &sum.terms {
                        let _ = writeln!(
                            s,
                            "graph genera={:?} edges={:?} dilaton_leaves={} |Aut|={}",
                            t.graph.genera, t.graph.edges, t.dilaton_leaves, t.automorphisms
                        );
                        s.push_str(&plain_coeffs(&t.coeffs));
                    }
                    s.push_str("total\n");
                    s.push_str(&plain_coeffs(&sum.coeffs));
                    s
                }
            };
            print!("{out}");
            Ok(true)
        }
        Command::Relation {
            file,
            fixture,
            pipeline,
        } => {
            let rel = match (file, fixture) {
                (Some(path), _) => TautRelation::parse(
                    &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                (None, Some(name)) => fixture_by_name(name)?,
                (None, None) => bail!("pass --file or --fixture"),
            };
            let service = ThetaService::new(rel.g.min(3), true)?;
            let pipeline = Pipeline::from(*pipeline);
            let total = service.evaluate(&rel, None, pipeline)?;
            let mut by_role = BTreeMap::new();
            for role in ["lhs", "boundary"] {
                if rel.terms.iter().any(|t| t.role.as_deref() == Some(role)) {
                    by_role.insert(role, service.evaluate(&rel, Some(role), pipeline)?);
                }
            }
            let out = match fmt {
                Format::Json => {
                    let mut v = json!({
                        "name": rel.name,
                        "g": rel.g,
                        "n": rel.n,
                        "pipeline": pipeline.name(),
                        "value": fmt_rational(&total),
                    });
                    for (role, val) in &by_role {
                        v[*role] = json!(fmt_rational(val));
                    }
                    pretty(&v)
                }
                Format::Plain => {
                    let mut s = format!("{} = {}\n", rel.name, fmt_rational(&total));
                    for (role, val) in &by_role {
                        let _ = writeln!(s, "  {role}: {}", fmt_rational(val));
                    }
                    s
                }
                Format::Latex => format!("{}\n", latex_rational(&total)),
            };
            print!("{out}");
            Ok(true)
        }
        Command::Verify {
            suite,
            curve,
            degree,
            g_max,
            n_max,
            order,
        } => {
            let results = verify(*suite, curve, *degree, *g_max, *n_max, *order, cli.frame_order)?;
            let ok = results.iter().all(|(_, pass)| *pass);
            let out = match fmt {
                Format::Json => pretty(&json!({
                    "suite": format!("{suite:?}").to_lowercase(),
                    "passed": ok,
                    "assertions": results.iter()
                        .map(|(name, pass)| json!({"name": name, "pass": pass}))
                        .collect::<Vec<_>>(),
                })),
                _ => results.iter().fold(String::new(), |mut s, (name, pass)| {
                    let _ = writeln!(s, "{} {name}", if *pass { "PASS" } else { "FAIL" });
                    s
                }),
            };
            print!("{out}");
            Ok(ok)
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn latex_rational(r: &Rational) -> String {
    ExtScalar::from_rational(r.clone()).to_latex()
}

fn fixture_by_name(name: &str) -> Result<TautRelation> {
    Ok(match name {
        "mumford" => fixtures::mumford()?,
        "genus3-psi-cubed" => fixtures::genus_three_psi_cubed()?,
        "genus3-mixed" => fixtures::genus_three_mixed()?,
        "lambda1" => fixtures::lambda_one()?,
        other => bail!("unknown fixture {other:?}; expected mumford, genus3-psi-cubed, genus3-mixed or lambda1"),
    })
}

fn resolve_curve(args: &CurveArgs) -> Result<SpectralCurve> {
    match (&args.curve, &args.curve_file) {
        (Some(name), _) => Ok(SpectralCurve::builtin(name)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve").to_owned();
            Ok(SpectralCurve::from_json(&name, &v)?)
        }
        (None, None) => bail!("pass --curve NAME or --curve-file PATH"),
    }
}

fn cache_path(curve: &SpectralCurve) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let safe: String = curve
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    Some(Path::new(&dir).join(format!("{safe}.v{CACHE_VERSION}.json")))
}

/// Engine seeded from the cache directory when one is configured and the
/// stored curve matches.
fn load_engine(args: &CurveArgs, frame_order: i64) -> Result<Arc<Engine>> {
    let curve = resolve_curve(args)?;
    let engine = Arc::new(Engine::with_options(curve.clone(), frame_order, false)?);
    if let Some(path) = cache_path(&curve) {
        if path.exists() {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if v["version"] == json!(CACHE_VERSION) && v["curve"] == curve.to_json() {
                for c in v["correlators"].as_array().into_iter().flatten() {
                    engine.insert_memo(Correlator::from_json(c)?);
                }
            }
        }
    }
    Ok(engine)
}

fn save_cache(engine: &Engine) -> Result<()> {
    let curve = engine.spectral_curve();
    let Some(path) = cache_path(curve) else {
        return Ok(());
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let v = json!({
        "version": CACHE_VERSION,
        "curve": curve.to_json(),
        "correlators": engine.memo_snapshot().iter().map(|c| c.to_json()).collect::<Vec<_>>(),
    });
    std::fs::write(&path, serde_json::to_string(&v)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn plain_coeffs(m: &BTreeMap<Vec<(usize, usize)>, ExtScalar>) -> String {
    m.iter().fold(String::new(), |mut s, (k, v)| {
        let labels: Vec<String> = k.iter().map(|(i, kk)| format!("V^{}_{}", i + 1, kk)).collect();
        let _ = writeln!(s, "  {} : {v}", labels.join(" "));
        s
    })
}

fn render_correlator(engine: &Engine, c: &Correlator, form: Option<&RatFunc>, fmt: Format) -> String {
    match fmt {
        Format::Json => {
            let mut v = json!({
                "curve": engine.spectral_curve().name,
                "correlator": c.to_json(),
            });
            if let Some(f) = form {
                v["form"] = json!(format!("{} dz", factored(f, false)));
            }
            pretty(&v)
        }
        Format::Plain => {
            let mut s = format!("omega_{{{},{}}} on {}\n", c.g, c.n, engine.spectral_curve().name);
            s.push_str(&plain_coeffs(&c.coeffs));
            if let Some(f) = form {
                let _ = writeln!(s, "{} dz", factored(f, false));
            }
            s
        }
        Format::Latex => {
            let mut s = String::new();
            let terms: Vec<String> = c
                .coeffs
                .iter()
                .map(|(k, v)| {
                    let labels: String = k.iter().map(|(i, kk)| format!("V^{{{}}}_{{{}}}", i + 1, kk)).collect();
                    format!("\\left({}\\right) {labels}", v.to_latex())
                })
                .collect();
            let _ = writeln!(
                s,
                "\\omega_{{{},{}}} = {}",
                c.g,
                c.n,
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join(" + ")
                }
            );
            if let Some(f) = form {
                let _ = writeln!(s, "\\omega_{{{},1}} = {}\\,dz", c.g, factored(f, true));
            }
            s
        }
    }
}

/// `ω_{0,2}`: the Cauchy kernel of the rational curve.
fn render_kernel(curve: &SpectralCurve, fmt: Format) -> String {
    match fmt {
        Format::Json => pretty(&json!({
            "curve": curve.name,
            "g": 0,
            "n": 2,
            "form": "dz1 dz2 / (z1 - z2)^2",
        })),
        Format::Plain => "dz1 dz2 / (z1 - z2)^2\n".into(),
        Format::Latex => "\\omega_{0,2} = \\frac{dz_1\\,dz_2}{(z_1 - z_2)^2}\n".into(),
    }
}

/// Common scalar factor of a polynomial whose coefficients all lie on one
/// basis direction of the field, normalized so the remaining polynomial
/// has coprime integer coefficients and a positive leading term.
fn content(p: &Poly) -> ExtScalar {
    let nz: Vec<&ExtScalar> = p.coeffs().iter().filter(|c| !c.is_zero()).collect();
    let Some(first) = nz.first() else {
        return ExtScalar::one();
    };
    let Some(dir) = (0..8).find(|&i| !first.coord(i).is_zero()) else {
        return ExtScalar::one();
    };
    let single = nz.iter().all(|c| (0..8).all(|i| i == dir || c.coord(i).is_zero()));
    if !single {
        return ExtScalar::one();
    }
    let rats: Vec<&Rational> = nz.iter().map(|c| c.coord(dir)).collect();
    let num = rats.iter().fold(num_bigint::BigInt::zero(), |acc, r| {
        num_integer::Integer::gcd(&acc, r.numer())
    });
    let den = rats.iter().fold(num_bigint::BigInt::one(), |acc, r| {
        num_integer::Integer::lcm(&acc, r.denom())
    });
    let mut c = Rational::new(num, den);
    if p.lead().coord(dir).is_negative() {
        c = -c;
    }
    ExtScalar::basis(dir, c)
}

fn poly_text(p: &Poly, latex: bool) -> String {
    let s = p.render("z");
    if latex {
        s.replace('*', " ")
    } else {
        s
    }
}

/// Factored rendering `c · z^a · (primitive) / ∏(z² - r²)^m ∏(z - r)^m`.
fn factored(f: &RatFunc, latex: bool) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let num = f.num();
    let c = content(num);
    let prim = num.scale(&c.inv().expect("nonzero content"));
    let low = prim.coeffs().iter().position(|x| !x.is_zero()).unwrap_or(0);
    let prim = Poly::new(prim.coeffs()[low..].to_vec());
    let mut parts: Vec<String> = Vec::new();
    if !c.is_one() {
        parts.push(if latex { c.to_latex() } else { c.to_string() });
    }
    match low {
        0 => {}
        1 => parts.push("z".into()),
        _ => parts.push(format!("z^{low}")),
    }
    if prim.degree() != Some(0) || parts.is_empty() {
        parts.push(format!("({})", poly_text(&prim, latex)));
    }
    let numerator = parts.join(if latex { " " } else { " * " });
    let den = f.den();
    if den.degree() == Some(0) {
        return numerator;
    }
    let factors = match den.roots() {
        Ok(roots) if roots.iter().map(|(_, m)| m).sum::<usize>() == den.degree().unwrap_or(0) => {
            denominator_factors(&roots, latex)
        }
        _ => format!("({})", poly_text(den, latex)),
    };
    if latex {
        format!("\\frac{{{numerator}}}{{{factors}}}")
    } else {
        format!("{numerator} / {factors}")
    }
}

fn denominator_factors(roots: &[(ExtScalar, usize)], latex: bool) -> String {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    let power = |m: usize| -> String {
        match (m, latex) {
            (1, _) => String::new(),
            (_, true) => format!("^{{{m}}}"),
            _ => format!("^{m}"),
        }
    };
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (r, m) = &roots[i];
        let partner = (i + 1..roots.len()).find(|&j| !used[j] && roots[j].0 == -r && roots[j].1 == *m && !r.is_zero());
        let base = if let Some(j) = partner {
            used[j] = true;
            let sq = r * r;
            Poly::new(vec![-sq, ExtScalar::zero(), ExtScalar::one()])
        } else {
            Poly::linear_root(r)
        };
        out.push(format!("({}){}", poly_text(&base, latex), power(*m)));
    }
    out.join(if latex { " " } else { " * " })
}

fn render_tau(engine: &Engine, g: u32, n: usize, fmt: Format) -> Result<String> {
    let curve = engine.curve();
    if curve.num_points() == 1 {
        let provenance = match engine.spectral_curve().name.as_str() {
            "airy" => Provenance::Airy,
            "bessel" => Provenance::Bessel,
            other => Provenance::User(other.to_owned()),
        };
        let full = assemble(engine, g, n, provenance.clone())?;
        let mut table = TauTable::new(full.rule, provenance);
        for ((eg, ks), v) in full.entries() {
            if *eg == g && ks.len() == n {
                table.insert(g, ks, v.clone())?;
            }
        }
        table.mark_complete(g, n);
        return Ok(match fmt {
            Format::Json => pretty(&table.to_json()),
            Format::Plain => table.to_plain(),
            Format::Latex => table.to_latex(),
        });
    }
    let flat = assemble_flat(engine, g, n)?;
    let entries: Vec<Value> = flat
        .entries
        .iter()
        .filter(|((eg, k), _)| *eg == g && k.len() == n)
        .map(|((eg, k), v)| {
            json!({
                "g": eg,
                "index": k.iter().map(|(a, kk)| json!([a + 1, kk])).collect::<Vec<_>>(),
                "value": v.to_json(),
            })
        })
        .collect();
    Ok(match fmt {
        Format::Json => pretty(&Value::Array(entries)),
        _ => flat
            .entries
            .iter()
            .filter(|((eg, k), _)| *eg == g && k.len() == n)
            .fold(String::new(), |mut s, ((eg, k), v)| {
                let idx: Vec<String> = k.iter().map(|(a, kk)| format!("t^{}_{}", a + 1, kk)).collect();
                let val = if fmt == Format::Latex {
                    v.to_latex()
                } else {
                    v.to_string()
                };
                let _ = writeln!(s, "g={eg} {} value={val}", idx.join(" "));
                s
            }),
    })
}

fn render_lambda_poly(p: &Poly, pipeline: Pipeline, fmt: Format) -> Result<String> {
    let coeffs: Vec<String> = p
        .coeffs()
        .iter()
        .map(|c| {
            c.to_rational()
                .map(|r| fmt_rational(&r))
                .ok_or_else(|| anyhow!("non-rational λ coefficient"))
        })
        .collect::<Result<_>>()?;
    Ok(match fmt {
        Format::Json => pretty(&json!({
            "pipeline": pipeline.name(),
            "variable": "lambda",
            "coefficients": coeffs,
        })),
        Format::Plain => format!("{}\n", p.render("λ")),
        Format::Latex => format!("{}\n", p.render("\\lambda").replace('*', " ")),
    })
}

#[allow(clippy::too_many_arguments)]
fn verify(
    suite: Suite,
    curve: &CurveArgs,
    degree: u32,
    g_max: u32,
    n_max: usize,
    order: usize,
    frame_order: i64,
) -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    let named_or = |default: &str| -> CurveArgs {
        if curve.curve.is_none() && curve.curve_file.is_none() {
            CurveArgs {
                curve: Some(default.to_owned()),
                curve_file: None,
            }
        } else {
            curve.clone()
        }
    };
    match suite {
        Suite::Kdv => {
            let engine = load_engine(&named_or("bessel"), frame_order)?;
            let table = assemble(&engine, g_max, degree as usize + 5, Provenance::Bessel)?;
            save_cache(&engine)?;
            let pass = kdv_check(&table, degree, 2, g_max)?;
            out.push((
                format!(
                    "KdV on {} to degree {degree}, genus <= {g_max}",
                    engine.spectral_curve().name
                ),
                pass,
            ));
        }
        Suite::Dilaton => {
            let engine = load_engine(&named_or("bessel"), frame_order)?;
            let table = assemble(&engine, g_max, n_max, Provenance::Bessel)?;
            out.push((
                format!(
                    "table dilaton on {} for g <= {g_max}, n <= {n_max}",
                    engine.spectral_curve().name
                ),
                dilaton_homogeneity_check(&table, g_max)?,
            ));
            if !engine.is_regular() {
                out.push((
                    "initial condition ∫Θ_{1,n} = (n-1)!/8".into(),
                    bgw_initial_condition_check(&table, n_max)?,
                ));
            }
            for g in 0..=g_max.min(2) {
                for n in 1..=2usize {
                    if 2 * g as i64 - 2 + n as i64 > 0 {
                        out.push((
                            format!("dilaton residue identity ({g}, {n})"),
                            engine.dilaton_check(g, n)?,
                        ));
                    }
                }
            }
            save_cache(&engine)?;
        }
        Suite::TwistedLoop => {
            let c = resolve_curve(&named_or("a2"))?;
            let r = laplace_b(&c, order)?;
            out.push((format!("R(z)R^T(-z) = I to order {order}"), twisted_loop_check(&r)));
            if c.name == "a2" {
                let data = FrobeniusPointData::a2();
                out.push(("Frobenius data invariants".into(), data.invariants_hold()));
                out.push((format!("R-matrix ODE to order {order}"), ode_check(&r, &data)));
            }
        }
        Suite::Vanishing => {
            let engine = load_engine(&named_or("bgw-a2"), frame_order)?;
            let name = engine.spectral_curve().name.clone();
            if name == "a2" {
                for m in 0..=13 {
                    out.push((
                        format!("Res z^{m} ω_{{2,1}} = 0"),
                        engine.residue_pairing(2, 1, &[m])?.is_zero(),
                    ));
                }
            } else {
                for (g, n) in [(1u32, 1usize), (2, 1), (3, 1), (2, 2)] {
                    if g > g_max {
                        continue;
                    }
                    let pass = match engine.ord_infinity(g, n)? {
                        Some((_, total)) => total >= 2 * g as i64 - 2,
                        None => true,
                    };
                    out.push((format!("Σ ord_∞ ω_{{{g},{n}}} >= {}", 2 * g - 2), pass));
                }
            }
            save_cache(&engine)?;
        }
        Suite::Relations => {
            let service = ThetaService::new(g_max.clamp(1, 3), true)?;
            for (name, rel) in [
                ("mumford", fixtures::mumford()?),
                ("genus3-psi-cubed", fixtures::genus_three_psi_cubed()?),
                ("genus3-mixed", fixtures::genus_three_mixed()?),
            ] {
                for p in [Pipeline::Bessel, Pipeline::Relations] {
                    let v = service.evaluate(&rel, None, p)?;
                    out.push((
                        format!("{name} vanishes against the {} pipeline", p.name()),
                        v.is_zero(),
                    ));
                }
            }
            let l = service.lambda_one_genus_two(Pipeline::Bessel)?;
            out.push((
                format!("∫Θ₂λ₁ = {}", fmt_rational(&l)),
                l == Rational::new(1.into(), 128.into()),
            ));
        }
        Suite::CrossPipeline => {
            let service = ThetaService::new(g_max.clamp(1, 3), true)?;
            let diff = service.cross_pipeline(g_max.min(3), n_max)?;
            out.push((
                format!(
                    "bessel and relations tables agree for g <= {}, n <= {n_max}",
                    g_max.min(3)
                ),
                diff.is_none(),
            ));
        }
    }
    Ok(out)
}
