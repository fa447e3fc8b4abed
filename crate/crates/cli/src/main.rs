//! `chevlink`: build link complexes, compute boundary ranks and run the
//! verification suites. Every command prints one JSON report on stdout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use chevlink::chains::verify_named_filling_a3;
use chevlink::chevalley::{short_short_sign, steinberg_suite, Mode, Realization};
use chevlink::complex::{build_link_complex_with, field_of_order, formula_counts, BuildOptions};
use chevlink::f2rank::{parse_bytes, rank_mod_p_with, RankOptions, MEM_BUDGET_ENV};
use chevlink::lifting::{
    parse_catalog, verify_catalog, verify_lift_homomorphism, GradedContext, LiftMode, LiftSpec, SweepOptions, CATALOG,
};
use chevlink::roots::Config;
use chevlink::sms::SparseModMatrix;
use chevlink::unipotent::{unipotent_group, verify_normal_form, Entries, Generators, DEFAULT_BUDGET};

/// Report schema version; bump on any key change.
const SCHEMA: u32 = 1;

/// Triangle count above which `--allow-long` is required.
const LONG_TRIANGLES: u128 = 500_000;

#[derive(Parser)]
#[command(name = "chevlink", version, about = "Coset-complex links of small Chevalley groups")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Permit builds and ranks that take minutes to hours.
    #[arg(long, global = true)]
    allow_long: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a link complex and write its incidence matrices in SMS format.
    Build(BuildArgs),
    /// Rank of an SMS matrix over F_p.
    Rank(RankArgs),
    /// Build, check connectivity, and decide whether H_1 vanishes over F_p.
    CheckHomology(HomologyArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfigArg {
    A3,
    B3Small,
    B3Large,
}

impl From<ConfigArg> for Config {
    fn from(c: ConfigArg) -> Config {
        match c {
            ConfigArg::A3 => Config::A3,
            ConfigArg::B3Small => Config::B3Small,
            ConfigArg::B3Large => Config::B3Large,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenArg {
    /// Root elements of the whole positive span.
    Span,
    /// Root elements of the base roots only.
    Base,
}

impl From<GenArg> for Generators {
    fn from(g: GenArg) -> Generators {
        match g {
            GenArg::Span => Generators::Span,
            GenArg::Base => Generators::Base,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    config: ConfigArg,
    #[arg(long)]
    q: u64,
    /// Triangle x edge matrix.
    #[arg(long)]
    out_tri: PathBuf,
    /// Edge x vertex matrix.
    #[arg(long)]
    out_edge: Option<PathBuf>,
    /// Coefficient prime for the written entries.
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, value_enum, default_value = "span")]
    generators: GenArg,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    p: u32,
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Args)]
struct RankFlags {
    /// Memory budget in bytes (K/M/G suffix allowed); defaults to the
    /// CHEVLINK_MEM_BUDGET environment variable.
    #[arg(long)]
    mem_budget: Option<String>,
    /// Remaining density at which elimination switches to dense.
    #[arg(long)]
    dense_threshold: Option<f64>,
    /// Print elimination progress on stderr.
    #[arg(long)]
    progress: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Vanishing,
    NotVanishing,
}

#[derive(Args)]
struct HomologyArgs {
    #[arg(long, value_enum)]
    config: ConfigArg,
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, value_enum, default_value = "span")]
    generators: GenArg,
    /// Fail (exit 1) unless the verdict matches.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Steinberg,
    Lift,
    Relations,
    FillingA3,
    NormalForm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    A3,
    B3,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Link configuration (all three when omitted).
    #[arg(long, value_enum)]
    config: Option<ConfigArg>,
    /// Root system for the Steinberg suite (both when omitted).
    #[arg(long, value_enum)]
    system: Option<SystemArg>,
    /// Field order.
    #[arg(long, default_value_t = 5)]
    q: u64,
    /// Base prime for the lifting suite.
    #[arg(long, default_value_t = 5)]
    p: u64,
    /// Extension degree of the lifting coefficients.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Random lifts per configuration.
    #[arg(long, default_value_t = 10)]
    specs: usize,
    /// Sampled word pairs per lift.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    #[arg(long)]
    homogeneous: bool,
    /// Sample this many cases instead of sweeping exhaustively.
    #[arg(long)]
    samples: Option<usize>,
    /// Relations with more assignments than this are sampled.
    #[arg(long, default_value_t = 1_000_000)]
    exhaustive_limit: u64,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Serialize)]
struct RunReport {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    params: Value,
    result: Value,
    pass: bool,
    /// Wall-clock milliseconds per phase; not covered by determinism.
    timings_ms: Map<String, Value>,
}

struct Timer(Map<String, Value>);

impl Timer {
    fn run<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.insert(phase.to_string(), json!(t.elapsed().as_millis() as u64));
        out
    }
}

fn rank_options(flags: &RankFlags) -> Result<RankOptions> {
    let mut o = RankOptions::default();
    if let Some(s) = &flags.mem_budget {
        o.mem_budget = parse_bytes(s).with_context(|| format!("bad memory budget {s:?}"))?;
    }
    if let Some(d) = flags.dense_threshold {
        o.dense_threshold = d;
    }
    Ok(o)
}

/// Refuses long instances unless allowed; prints the size estimate first.
fn gate_long(config: Config, q: u64, allow: bool) -> Result<()> {
    let (v, e, t) = formula_counts(config, q);
    if t <= LONG_TRIANGLES {
        return Ok(());
    }
    // peak sparse fill measured at about 23 nonzeros per triangle, 8 bytes each
    let mem = t * 23 * 8;
    eprintln!(
        "{} q={q}: V={v} E={e} T={t}; estimated peak elimination memory {:.1} GB (budget via {MEM_BUDGET_ENV}); expect minutes to hours",
        config.name(),
        mem as f64 / 1e9
    );
    if !allow {
        bail!("instance is long-running; rerun with --allow-long");
    }
    Ok(())
}

fn write_sms(m: &SparseModMatrix, path: &PathBuf) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    m.write_sms(&mut w)?;
    w.flush()?;
    Ok(())
}

fn progress_cb(on: bool) -> impl FnMut(&chevlink::f2rank::Progress) {
    move |p| {
        if on {
            eprintln!("{:?} rank={} rows={} cols={} nnz={}", p.phase, p.rank, p.active_rows, p.active_cols, p.nnz);
        }
    }
}

fn cmd_build(a: &BuildArgs, allow_long: bool, tm: &mut Timer) -> Result<(Value, Value, bool)> {
    let config: Config = a.config.into();
    gate_long(config, a.q, allow_long)?;
    let opts = BuildOptions { generators: a.generators.into(), ..Default::default() };
    let cx = tm.run("build", || build_link_complex_with(config, a.q, &opts))?;
    let d2 = cx.boundary2(a.p);
    tm.run("write", || -> Result<()> {
        write_sms(&d2, &a.out_tri)?;
        if let Some(pe) = &a.out_edge {
            write_sms(&cx.boundary1(a.p), pe)?;
        }
        Ok(())
    })?;
    let c = cx.counts();
    let (fv, fe, ft) = formula_counts(config, a.q);
    let params = json!({
        "config": config.name(), "q": a.q, "p": a.p,
        "generators": format!("{:?}", Generators::from(a.generators)).to_lowercase(),
        "out_tri": a.out_tri, "out_edge": a.out_edge,
    });
    let result = json!({
        "counts": {"vertices": c.vertices, "edges": c.edges, "triangles": c.triangles, "per_color": c.per_color},
        "formula_counts": {"vertices": fv as u64, "edges": fe as u64, "triangles": ft as u64},
        "tri_matrix": {"rows": d2.rows, "cols": d2.cols, "nnz": d2.nnz()},
    });
    Ok((params, result, true))
}

fn cmd_rank(a: &RankArgs, tm: &mut Timer) -> Result<(Value, Value, bool)> {
    let opts = rank_options(&a.rank)?;
    let f = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let m = tm.run("read", || SparseModMatrix::read_sms(BufReader::new(f), a.p))?;
    let r = tm.run("rank", || rank_mod_p_with(&m, &opts, &mut progress_cb(a.rank.progress)))?;
    let params = json!({"p": a.p, "in": a.input, "mem_budget": opts.mem_budget, "dense_threshold": opts.dense_threshold});
    let result = json!({"rows": m.rows, "cols": m.cols, "nnz": m.nnz(), "rank": r.rank, "stats": r.stats});
    Ok((params, result, true))
}

fn cmd_homology(a: &HomologyArgs, allow_long: bool, tm: &mut Timer) -> Result<(Value, Value, bool)> {
    let config: Config = a.config.into();
    gate_long(config, a.q, allow_long)?;
    let opts = rank_options(&a.rank)?;
    let bopts = BuildOptions { generators: a.generators.into(), ..Default::default() };
    let cx = tm.run("build", || build_link_complex_with(config, a.q, &bopts))?;
    let connected = tm.run("connectivity", || cx.is_connected());
    let d2 = cx.boundary2(a.p);
    let r = tm.run("rank", || rank_mod_p_with(&d2, &opts, &mut progress_cb(a.rank.progress)))?;
    let (v, e, t) = (cx.num_vertices(), cx.edges.len(), cx.triangles.len());
    let needed = e - (v - 1);
    let vanishes = connected && r.rank == needed;
    let (fv, fe, ft) = formula_counts(config, a.q);
    let pass = match a.expect {
        None => true,
        Some(Expect::Vanishing) => vanishes,
        Some(Expect::NotVanishing) => !vanishes,
    };
    let params = json!({
        "config": config.name(), "q": a.q, "p": a.p,
        "generators": format!("{:?}", Generators::from(a.generators)).to_lowercase(),
        "mem_budget": opts.mem_budget,
    });
    let result = json!({
        "counts": {"vertices": v, "edges": e, "triangles": t},
        "formula_counts": {"vertices": fv as u64, "edges": fe as u64, "triangles": ft as u64},
        "connected": connected,
        "rank_d2": r.rank,
        "needed": needed,
        "b1": needed - r.rank.min(needed),
        "verdict": if vanishes { "vanishing" } else { "not vanishing" },
        "stats": r.stats,
    });
    Ok((params, result, pass))
}

fn configs(c: Option<ConfigArg>) -> Vec<Config> {
    c.map_or(Config::ALL.to_vec(), |c| vec![c.into()])
}

fn cmd_verify(a: &VerifyArgs, tm: &mut Timer) -> Result<(Value, Value, bool)> {
    let suite = a.suite.to_possible_value().unwrap().get_name().to_string();
    match a.suite {
        Suite::Steinberg => {
            let f = field_of_order(a.q)?;
            let mode = a.samples.map_or(Mode::Exhaustive, |n| Mode::Sample { n, seed: a.seed });
            let systems = match a.system {
                Some(SystemArg::A3) => vec![Config::A3],
                Some(SystemArg::B3) => vec![Config::B3Small],
                None => vec![Config::A3, Config::B3Small],
            };
            let mut out = Vec::new();
            let mut pass = true;
            for c in systems {
                let sys = c.system();
                let rep = tm.run(&format!("steinberg {:?}{}", sys.kind, sys.rank), || steinberg_suite(&f, &sys, mode));
                let sign = if sys.kind == chevlink::roots::Kind::B && f.p() != 2 {
                    short_short_sign(&f, &Realization::of(&sys))
                } else {
                    None
                };
                pass &= rep.pass;
                let failed: Vec<_> = rep.checks.iter().filter(|c| !c.pass).collect();
                out.push(json!({
                    "system": rep.system, "field": rep.field, "pass": rep.pass,
                    "checks": rep.checks.len(), "failed": failed,
                    "constants": rep.constants, "short_short_sign": sign,
                }));
            }
            let params = json!({"suite": suite, "q": a.q, "mode": mode});
            Ok((params, json!(out), pass))
        }
        Suite::Lift => {
            let mut out = Vec::new();
            let mut pass = true;
            for c in configs(a.config) {
                let mut rng = chevlink::rng(a.seed);
                let mut passed = 0;
                let mut first_failure = None;
                tm.run(&format!("lift {}", c.name()), || -> Result<()> {
                    for i in 0..a.specs {
                        let spec = LiftSpec::random(c, a.p, a.k, a.homogeneous, &mut rng)?;
                        let rep =
                            verify_lift_homomorphism(&spec, LiftMode::Sampled { n: a.pairs, seed: a.seed.wrapping_add(i as u64) });
                        if rep.pass {
                            passed += 1;
                        } else if first_failure.is_none() {
                            first_failure = Some(json!(rep));
                        }
                    }
                    Ok(())
                })?;
                pass &= passed == a.specs;
                out.push(json!({"config": c.name(), "specs": a.specs, "passed": passed, "first_failure": first_failure}));
            }
            let params = json!({"suite": suite, "p": a.p, "k": a.k, "specs": a.specs, "pairs": a.pairs,
                "homogeneous": a.homogeneous, "seed": a.seed});
            Ok((params, json!(out), pass))
        }
        Suite::Relations => {
            let rels = parse_catalog(CATALOG)?;
            let f = field_of_order(a.q)?;
            let mut opts = SweepOptions { exhaustive_limit: a.exhaustive_limit, seed: a.seed, ..Default::default() };
            if let Some(n) = a.samples {
                opts.samples = n;
            }
            let mut out = Vec::new();
            let mut pass = true;
            for c in configs(a.config) {
                let ctx = GradedContext::new(c, f.clone())?;
                let rep = tm.run(&format!("relations {}", c.name()), || verify_catalog(&rels, &ctx, &opts))?;
                pass &= rep.pass;
                out.push(json!(rep));
            }
            let params = json!({"suite": suite, "q": a.q, "options": opts});
            Ok((params, json!(out), pass))
        }
        Suite::FillingA3 => {
            let r = tm.run("filling", || verify_named_filling_a3(a.q))?;
            let pass = r.pass;
            Ok((json!({"suite": suite, "q": a.q}), json!(r), pass))
        }
        Suite::NormalForm => {
            let f = field_of_order(a.q)?;
            let mut out = Vec::new();
            let mut pass = true;
            for c in configs(a.config) {
                let sys = c.system();
                let rep = tm.run(&format!("normal-form {}", c.name()), || -> Result<_> {
                    let g = unipotent_group(&f, &sys, &c.base(), &Entries::Field, DEFAULT_BUDGET, false)?;
                    Ok(verify_normal_form(&g, &Realization::of(&sys), &c.positive_roots(), None)?)
                })?;
                pass &= rep.pass;
                out.push(json!({"config": c.name(), "report": rep}));
            }
            Ok((json!({"suite": suite, "q": a.q}), json!(out), pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let command = match &cli.cmd {
        Cmd::Build(_) => "build",
        Cmd::Rank(_) => "rank",
        Cmd::CheckHomology(_) => "check-homology",
        Cmd::Verify(_) => "verify",
    };
    let mut tm = Timer(Map::new());
    let out = match &cli.cmd {
        Cmd::Build(a) => cmd_build(a, cli.allow_long, &mut tm),
        Cmd::Rank(a) => cmd_rank(a, &mut tm),
        Cmd::CheckHomology(a) => cmd_homology(a, cli.allow_long, &mut tm),
        Cmd::Verify(a) => cmd_verify(a, &mut tm),
    };
    let (text, code) = match out {
        Ok((params, result, pass)) => {
            let rep = RunReport {
                schema: SCHEMA,
                tool: "chevlink",
                version: env!("CARGO_PKG_VERSION"),
                command,
                params,
                result,
                pass,
                timings_ms: tm.0,
            };
            (serde_json::to_string_pretty(&rep).expect("serializable"), if pass { 0 } else { 1 })
        }
        Err(e) => {
            let err = json!({"schema": SCHEMA, "tool": "chevlink", "command": command, "error": format!("{e:#}")});
            (serde_json::to_string_pretty(&err).expect("serializable"), 2)
        }
    };
    println!("{text}");
    if let Some(p) = &cli.report {
        if let Err(e) = std::fs::write(p, format!("{text}\n")) {
            eprintln!("cannot write report {}: {e}", p.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
