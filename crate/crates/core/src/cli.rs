use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use teich::acceptance::{self, SuiteConfig};
use teich::freenc::{self, polylog_dims, weight_graded_dims};
use teich::graphs::{
    self, coordinate_system, enumerate_trivalent, find_rigidification, fusing_rewrite, validate_json, GraphJson,
    MoveSpec, StableGraph,
};
use teich::kz::{
    self, complex_matrix_json, evaluate_groupoid_word, half_dehn_monodromy, nilpotent_transport,
    ode_connection_matrix, specialize_associator, universal_associator, ConnectionMatrix, Form, FormPath,
    NilpotentPair, OdeOptions, QMatrix, Segment, TransportOptions,
};
use teich::schottky::{self, format_path, parse_alpha, parse_path, MatrixReport, SchottkyContext};

#[derive(Debug, Parser)]
#[command(name = "teich", version, about = "Teichmüller groupoid computations: graphs, Schottky groups, free algebras, KZ monodromy")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Truncation order of q-series.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub order: u32,
    /// Truncation length of noncommutative series.
    #[arg(long = "nc-length", global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub nc_length: u32,
    /// Weight of the universal associator.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=10))]
    pub weight: u32,
    /// Distance of the ODE endpoints from the singular points.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Relative tolerance of numerical integration.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quick: bool,
}

impl RunConfig {
    fn ode(&self) -> Result<OdeOptions> {
        if !(self.tol > 0.0) || !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            bail!("--tol must be positive and --epsilon in (0, 1/2)");
        }
        Ok(OdeOptions {
            epsilon: self.epsilon,
            rtol: self.tol,
            ..OdeOptions::default()
        })
    }

    fn to_json(&self) -> Value {
        json!({
            "order": self.order,
            "nc_length": self.nc_length,
            "weight": self.weight,
            "epsilon": self.epsilon,
            "tol": self.tol,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stable graphs, rigidifications and moves.
    #[command(subcommand)]
    Graphs(GraphsCmd),
    /// Schottky generators and fixed points over truncated q-series.
    #[command(subcommand)]
    Schottky(SchottkyCmd),
    /// Dimension counts for free Lie and associative algebras.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Connection matrices and monodromy of KZ-type equations.
    #[command(subcommand)]
    Kz(KzCmd),
    /// Runs the acceptance suite and prints a pass/fail table.
    Selftest,
}

#[derive(Debug, Subcommand)]
pub enum GraphsCmd {
    /// Checks a graph file and reports violations.
    Validate,
    /// Lists trivalent graphs of a type.
    Enumerate {
        /// Type as `g,n`.
        #[arg(long = "type")]
        ty: String,
    },
    /// Finds a rigidification and the coordinate system it induces.
    Rigidify,
    /// Both fusing moves at an edge.
    Fuse {
        #[arg(long)]
        edge: u32,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SchottkyArgs {
    /// Graph JSON file.
    #[arg(long)]
    pub graph: PathBuf,
    /// Assignments like `+0=0,-0=inf`; random values from the seed if omitted.
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SchottkyCmd {
    /// Generator matrices of every oriented edge and the free generators.
    Gens(SchottkyArgs),
    /// Matrix of a path word.
    Element {
        #[command(flatten)]
        args: SchottkyArgs,
        #[arg(long)]
        word: String,
    },
    /// Fixed points and multiplier of a closed word.
    FixedPoints {
        #[command(flatten)]
        args: SchottkyArgs,
        #[arg(long)]
        word: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct AlgebraArgs {
    #[arg(long)]
    pub g: u32,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 6)]
    pub degree: u32,
}

#[derive(Debug, Subcommand)]
pub enum AlgebraCmd {
    /// Witt dimensions of the free Lie algebra on `2g + n - 1` letters.
    Witt(AlgebraArgs),
    /// Graded dimensions of the augmentation-ideal filtration.
    IdealDims(AlgebraArgs),
    /// Dimensions of the logarithmic and polylogarithmic quotients.
    PolylogDims(AlgebraArgs),
    /// Weight distribution of words of a given degree.
    Weights(AlgebraArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhiMethod {
    Ode,
    Series,
}

#[derive(Debug, Subcommand)]
pub enum KzCmd {
    /// Coefficients of the universal associator up to `--weight`.
    Associator,
    /// Connection matrix of a residue pair file `{"a": [[..]], "b": [[..]]}`.
    Phi {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_enum, default_value_t = PhiMethod::Ode)]
        method: PhiMethod,
    },
    /// Half-Dehn monodromy of a residue matrix file.
    Dehn {
        #[arg(long)]
        res: PathBuf,
    },
    /// Parallel transport of forms along a path.
    Transport {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        forms: PathBuf,
    },
    /// Monodromy of a groupoid word.
    Groupoid {
        #[arg(long)]
        word: PathBuf,
        #[arg(long)]
        residues: PathBuf,
    },
    /// Multiple zeta value, indices like `2,1`.
    Mzv {
        #[arg(long)]
        s: String,
    },
}

/// Output of a command: JSON for the output file or stdout, or plain text.
pub enum Output {
    Json(Value),
    Text { text: String, ok: bool },
}

pub fn run(cli: &Cli) -> Result<Output> {
    let cfg = &cli.config;
    let body = match &cli.command {
        Command::Graphs(c) => graphs_cmd(c, cfg)?,
        Command::Schottky(c) => schottky_cmd(c, cfg)?,
        Command::Algebra(c) => algebra_cmd(c)?,
        Command::Kz(c) => kz_cmd(c, cfg)?,
        Command::Selftest => {
            let results = acceptance::run_all(&SuiteConfig {
                seed: if cfg.seed == 0 { SuiteConfig::default().seed } else { cfg.seed },
                quick: cfg.quick,
            });
            let ok = results.iter().all(|r| r.passed);
            let secs: f64 = results.iter().map(|r| r.seconds).sum();
            eprintln!("suite finished in {secs:.1}s");
            return Ok(Output::Text {
                text: acceptance::format_table(&results),
                ok,
            });
        }
    };
    let mut out = json!({ "seed": cfg.seed, "config": cfg.to_json() });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    Ok(Output::Json(out))
}

fn read_json(path: &Path) -> Result<Value> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

fn read_graph(path: &Path) -> Result<StableGraph> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(StableGraph::from_json_str(&s)?)
}

fn input(cfg: &RunConfig) -> Result<&Path> {
    cfg.input.as_deref().ok_or_else(|| anyhow!("--input is required"))
}

fn parse_type(s: &str) -> Result<(u32, u32)> {
    let (g, n) = s.split_once(',').ok_or_else(|| anyhow!("type must be g,n"))?;
    Ok((g.trim().parse()?, n.trim().parse()?))
}

/// Enumerated graphs, cached as JSON under `TEICH_DATA_DIR` when set.
fn enumerate_cached(g: u32, n: u32) -> Result<Vec<StableGraph>> {
    let cache = std::env::var_os("TEICH_DATA_DIR").map(|d| PathBuf::from(d).join(format!("trivalent_{g}_{n}.json")));
    if let Some(path) = cache.as_ref().filter(|p| p.exists()) {
        let list: Vec<GraphJson> = serde_json::from_str(&fs::read_to_string(path)?)?;
        return list.iter().map(|j| Ok(StableGraph::from_json(j)?)).collect();
    }
    let graphs = enumerate_trivalent(g, n)?;
    if let Some(path) = cache {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let list: Vec<GraphJson> = graphs.iter().map(StableGraph::to_json).collect();
        fs::write(&path, serde_json::to_string(&list)?)?;
    }
    Ok(graphs)
}

fn graphs_cmd(c: &GraphsCmd, cfg: &RunConfig) -> Result<Value> {
    Ok(match c {
        GraphsCmd::Validate => {
            let v = read_json(input(cfg)?)?;
            let gj: GraphJson = serde_json::from_value(v).context("graph schema")?;
            json!({ "report": validate_json(&gj) })
        }
        GraphsCmd::Enumerate { ty } => {
            let (g, n) = parse_type(ty)?;
            let list = enumerate_cached(g, n)?;
            json!({
                "type": [g, n],
                "count": list.len(),
                "graphs": list.iter().map(StableGraph::to_json).collect::<Vec<_>>(),
            })
        }
        GraphsCmd::Rigidify => {
            let g = read_graph(input(cfg)?)?;
            let tau = find_rigidification(&g)?;
            let cs = coordinate_system(&g, &tau)?;
            let tau_json: BTreeMap<String, Vec<String>> = tau
                .tau
                .iter()
                .map(|(v, bs)| (v.to_string(), bs.iter().map(ToString::to_string).collect()))
                .collect();
            json!({
                "tau": tau_json,
                "tau_order": graphs::MARKED_POINTS,
                "alpha_vars": cs.alpha_vars.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "q_vars": cs.q_vars,
                "dimension": cs.dimension(),
            })
        }
        GraphsCmd::Fuse { edge } => {
            let g = read_graph(input(cfg)?)?;
            let results = fusing_rewrite(&g, *edge)?;
            let rs: Vec<Value> = results
                .iter()
                .map(|r| {
                    json!({
                        "choice": r.choice,
                        "new_edge": r.new_edge,
                        "branches": r.branches.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "graph": r.graph.to_json(),
                    })
                })
                .collect();
            json!({ "edge": edge, "results": rs })
        }
    })
}

fn schottky_context(a: &SchottkyArgs, cfg: &RunConfig) -> Result<SchottkyContext> {
    let g = read_graph(&a.graph)?;
    Ok(match &a.alpha {
        Some(s) => SchottkyContext::new(&g, parse_alpha(s)?, cfg.order)?,
        None => SchottkyContext::random(&g, cfg.order, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?,
    })
}

fn alpha_json(ctx: &SchottkyContext) -> Value {
    let m: BTreeMap<String, String> = ctx.alphas().iter().map(|(h, a)| (h.to_string(), a.to_string())).collect();
    json!(m)
}

fn schottky_cmd(c: &SchottkyCmd, cfg: &RunConfig) -> Result<Value> {
    Ok(match c {
        SchottkyCmd::Gens(a) => {
            let ctx = schottky_context(a, cfg)?;
            let mut phis = BTreeMap::new();
            for h in ctx.graph().half_edges() {
                phis.insert(h.to_string(), MatrixReport::new(&ctx.phi(h)?)?);
            }
            let gens: Vec<Value> = ctx
                .free_generators()
                .iter()
                .map(|p| {
                    Ok(json!({
                        "word": format_path(p),
                        "matrix": MatrixReport::new(&ctx.word_to_element(p)?)?,
                    }))
                })
                .collect::<Result<_, schottky::SchottkyError>>()?;
            json!({ "alpha": alpha_json(&ctx), "base": ctx.base(), "phi": phis, "generators": gens })
        }
        SchottkyCmd::Element { args, word } => {
            let ctx = schottky_context(args, cfg)?;
            let p = parse_path(word)?;
            json!({
                "alpha": alpha_json(&ctx),
                "word": format_path(&p),
                "matrix": MatrixReport::new(&ctx.word_to_element(&p)?)?,
            })
        }
        SchottkyCmd::FixedPoints { args, word } => {
            let ctx = schottky_context(args, cfg)?;
            let p = parse_path(word)?;
            let (m, f) = ctx.fixed_points_of_word(&p)?;
            let residual_zero = f.cross_ratio_residual(&m).iter().all(|c| c.is_zero());
            json!({
                "alpha": alpha_json(&ctx),
                "word": format_path(&p),
                "attractive": f.attractive.to_canonical_string(),
                "repulsive": f.repulsive.to_canonical_string(),
                "multiplier": f.multiplier.to_canonical_string(),
                "cross_ratio_residual_zero": residual_zero,
            })
        }
    })
}

fn algebra_cmd(c: &AlgebraCmd) -> Result<Value> {
    let (AlgebraCmd::Witt(a) | AlgebraCmd::IdealDims(a) | AlgebraCmd::PolylogDims(a) | AlgebraCmd::Weights(a)) = c;
    let r = freenc::free_rank(a.g, a.n)? as u64;
    let head = json!({ "g": a.g, "n": a.n, "rank": r, "degree": a.degree });
    let body = match c {
        AlgebraCmd::Witt(_) => {
            let dims: Vec<String> = (1..=a.degree as u64).map(|k| freenc::witt_dim(r, k).to_string()).collect();
            json!({ "witt": dims })
        }
        AlgebraCmd::IdealDims(_) => {
            let dims: Vec<String> = (1..=a.degree).map(|m| freenc::ideal_graded_dims(r, m).to_string()).collect();
            json!({ "ideal_dims": dims })
        }
        AlgebraCmd::PolylogDims(_) => {
            let rows = (1..=a.degree as usize)
                .map(|k| {
                    let (log, pol) = polylog_dims(a.g, a.n, k)?;
                    Ok(json!({ "k": k, "log": log.to_string(), "pol": pol.to_string() }))
                })
                .collect::<Result<Vec<_>, freenc::AlgebraError>>()?;
            json!({ "polylog_dims": rows })
        }
        AlgebraCmd::Weights(_) => {
            let w = weight_graded_dims(a.g, a.n, a.degree as usize)?;
            let m: BTreeMap<String, String> = w.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            json!({ "weights": m })
        }
    };
    let mut out = head;
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    Ok(out)
}

fn connection_json(c: &ConnectionMatrix) -> Value {
    json!({
        "matrix": complex_matrix_json(&c.matrix),
        "method": c.method,
        "error_estimate": c.error_estimate,
        "warnings": c.warnings,
    })
}

fn read_pair(path: &Path) -> Result<NilpotentPair> {
    let v = read_json(path)?;
    let a = QMatrix::from_json(v.get("a").ok_or_else(|| anyhow!("pair file needs \"a\""))?)?;
    let b = QMatrix::from_json(v.get("b").ok_or_else(|| anyhow!("pair file needs \"b\""))?)?;
    Ok(NilpotentPair::new(a, b)?)
}

/// Word file: `{"basepoint": graph, "moves": [move specs]}`.
fn read_word(path: &Path) -> Result<graphs::GroupoidWord> {
    let v = read_json(path)?;
    let base: GraphJson = serde_json::from_value(v.get("basepoint").cloned().unwrap_or(Value::Null))
        .context("word file needs a \"basepoint\" graph")?;
    let base = StableGraph::from_json(&base)?;
    let specs: Vec<MoveSpec> = serde_json::from_value(v.get("moves").cloned().unwrap_or(Value::Null))
        .context("word file needs a \"moves\" list")?;
    Ok(graphs::build_word(&base, &specs)?)
}

fn kz_cmd(c: &KzCmd, cfg: &RunConfig) -> Result<Value> {
    let opts = cfg.ode()?;
    Ok(match c {
        KzCmd::Associator => {
            let u = universal_associator(cfg.weight as usize, &opts)?;
            json!({
                "weight": u.weight,
                "coefficients": u.coefficient_map(),
                "error_by_weight": u.error_by_weight,
            })
        }
        KzCmd::Phi { pair, method } => {
            let p = read_pair(pair)?;
            let c = match method {
                PhiMethod::Ode => ode_connection_matrix(&p, &opts)?,
                PhiMethod::Series => specialize_associator(&universal_associator(cfg.weight as usize, &opts)?, &p)?,
            };
            json!({ "phi": connection_json(&c), "unipotence_defect": c.unipotence_defect() })
        }
        KzCmd::Dehn { res } => {
            let m = QMatrix::from_json(&read_json(res)?)?;
            let h = half_dehn_monodromy(&m)?;
            json!({
                "exact": h.exact.to_strings(),
                "numeric": complex_matrix_json(&h.numeric),
                "error_estimate": 0.0,
            })
        }
        KzCmd::Transport { path, forms } => {
            let segments: Vec<Segment> = serde_json::from_value(read_json(path)?).context("path file")?;
            let forms: Vec<Form> = serde_json::from_value(read_json(forms)?).context("forms file")?;
            let t = nilpotent_transport(
                &FormPath { forms, segments },
                &TransportOptions {
                    tol: cfg.tol,
                    ..TransportOptions::default()
                },
            )?;
            json!({
                "matrix": complex_matrix_json(&t.matrix),
                "error_estimate": t.error_estimate,
                "panels": t.panels,
            })
        }
        KzCmd::Groupoid { word, residues } => {
            let w = read_word(word)?;
            let rv = read_json(residues)?;
            let obj = rv.as_object().ok_or_else(|| anyhow!("residues must map edge ids to matrices"))?;
            let mut res = BTreeMap::new();
            for (k, v) in obj {
                res.insert(k.parse::<u32>().context("edge id")?, QMatrix::from_json(v)?);
            }
            let u = universal_associator(cfg.weight as usize, &opts)?;
            let m = evaluate_groupoid_word(&w, &res, &u)?;
            json!({
                "moves": w.moves.len(),
                "closed": w.endpoint() == &w.basepoint,
                "monodromy": connection_json(&m),
            })
        }
        KzCmd::Mzv { s } => {
            let idx: Vec<u32> = s
                .split(',')
                .map(|x| x.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .context("indices")?;
            let v = kz::mzv(&idx)?;
            json!({ "s": idx, "value": v, "error_estimate": 1e-13 })
        }
    })
}
