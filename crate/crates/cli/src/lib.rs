//! Command-line front end. `run_cli` is the whole program minus process
//! plumbing, so it can be driven in-process by tests.

use std::fs;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use specgraph::bounds::{run_bound_suite, SuiteOptions};
use specgraph::graph::{erdos_renyi_connected, generate, parse_edge_list, GraphFamily, WeightedGraph};
use specgraph::resistance::{effective_resistance, ResistanceProfile};
use specgraph::spectral::{ball_selection, graph_measure, graph_spectrum, spectral_embedding, vertex_measure, DEFAULT_ALPHA};
use specgraph::trees::{
    estimate_log_tau_local, in_memory_oracle, log_tau_series_truncated, log_tau_spectral, spanning_tree_count_exact,
    EstimatorOverrides,
};
use specgraph::walk::{monte_carlo_return, WalkKernel};
use specgraph::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BOUNDS_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "specgraph", version, about = "Spectral measures, random walks and spanning trees of finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug)]
struct Common {
    /// Edge-list file; standard input when omitted or "-".
    input: Option<String>,
    /// Build the graph from a family spec instead, e.g. cycle:8 or torus:8x8.
    #[arg(long, conflicts_with = "input")]
    family: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a generated graph as an edge list.
    Gen {
        /// Family and parameters: `cycle 8`, `clique_cycle:60:3`, `torus 8x8`,
        /// or `er <n> <p>` (seeded connected Erdős–Rényi).
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<String>,
    },
    /// Eigenvalues (and optionally eigenvectors) of the normalized Laplacian.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vectors: bool,
    },
    /// Spectral measures at a threshold.
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Spectral embedding coordinates and the greedy ball selection.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Effective resistances, resistance diameter and commute times.
    Resistance {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "target")]
        source: Option<usize>,
        #[arg(long, requires = "source")]
        target: Option<usize>,
    },
    /// Return probabilities of the lazy and continuous-time walks.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        time: u64,
        /// Also estimate p_t(x, x) from this many simulated walks.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// L2 and L-infinity mixing times.
    Mixing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// Exact spanning tree count (matrix-tree theorem).
    TreesExact {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated return-probability series for ln(#spanning trees).
    TreesSeries {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        r: u32,
    },
    /// Local sampling estimate of ln(#spanning trees)/n.
    TreesEstimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long = "fail-prob", default_value_t = 0.1)]
        fail_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long = "override-r")]
        override_r: Option<u64>,
        #[arg(long = "override-N")]
        override_n: Option<u64>,
        #[arg(long = "override-degree-samples")]
        override_degree_samples: Option<u64>,
    },
    /// Check every applicable inequality; exits 3 if any row fails.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        grid_points: usize,
        /// Relative rounding guard for comparisons.
        #[arg(long, default_value_t = specgraph::bounds::GUARD)]
        tolerance: f64,
    },
}

enum Failure {
    Domain(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(format!("i/o error: {e}"))
    }
}

fn family_comment(spec: &str) -> String {
    format!("# family: {spec}\n")
}

fn build_family(spec: &str, seed: u64) -> Result<WeightedGraph, Failure> {
    let parts: Vec<&str> = spec.split(|c: char| c == ':' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
    if parts.first().is_some_and(|k| k.eq_ignore_ascii_case("er")) {
        let [_, n, p] = parts.as_slice() else {
            return Err(Failure::Usage(format!("expected `er <n> <p>`, got {spec:?}")));
        };
        let n = n.parse().map_err(|_| Failure::Usage(format!("bad vertex count {n:?}")))?;
        let p = p.parse().map_err(|_| Failure::Usage(format!("bad edge probability {p:?}")))?;
        return Ok(erdos_renyi_connected(n, p, seed)?);
    }
    let family: GraphFamily = spec.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    Ok(generate(&family)?)
}

/// Parses edge-list text; a leading `# family:` comment naming a generator
/// family whose output is identical restores the family's metadata.
fn load_text(text: &str) -> Result<WeightedGraph, Failure> {
    let g = parse_edge_list(text)?;
    let declared = text
        .lines()
        .map(str::trim)
        .take_while(|l| l.starts_with('#') || l.is_empty())
        .find_map(|l| l.strip_prefix('#').map(str::trim).and_then(|l| l.strip_prefix("family:")).map(str::trim));
    if let Some(spec) = declared {
        if let Ok(family) = spec.parse::<GraphFamily>() {
            if let Ok(h) = generate(&family) {
                if h.to_edge_list() == g.to_edge_list() {
                    return Ok(h);
                }
            }
        }
    }
    Ok(g)
}

fn load(common: &Common, stdin: &mut dyn Read) -> Result<WeightedGraph, Failure> {
    if let Some(spec) = &common.family {
        return build_family(spec, 0);
    }
    let text = match common.input.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s
        }
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::Domain(format!("cannot read {path}: {e}")))?,
    };
    load_text(&text)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn with_schema(schema: &str, body: Value) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), Value::String(schema.into()));
    if let Value::Object(m) = body {
        obj.extend(m);
    }
    Value::Object(obj)
}

/// Renders a flat JSON object as `key: value` lines.
fn table_of(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(m) = v {
        for (k, val) in m {
            let shown = match val {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {shown}\n"));
        }
    }
    out
}

fn render(format: Format, v: &Value) -> String {
    match format {
        Format::Json => to_json(v),
        Format::Table => table_of(v),
    }
}

struct Output {
    text: String,
    path: Option<String>,
    code: i32,
}

fn execute(cli: Cli, stdin: &mut dyn Read) -> Result<Output, Failure> {
    let done = |text: String, common: &Common| Output {
        text,
        path: common.output.clone(),
        code: EXIT_OK,
    };
    Ok(match cli.command {
        Command::Gen { spec, seed, output } => {
            let spec = spec.join(" ");
            let g = build_family(&spec, seed)?;
            let name = g.family().map(|f| f.name.clone());
            let mut text = name.map(|n| family_comment(&n)).unwrap_or_default();
            text.push_str(&g.to_edge_list());
            Output { text, path: output, code: EXIT_OK }
        }
        Command::Spectrum { common, vectors } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let export = s.export(vectors);
            let text = match common.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&export),
                Format::Table => export.eigenvalues.iter().map(|l| format!("{l:.12}\n")).collect(),
            };
            done(text, &common)
        }
        Command::Measure { common, delta, vertex } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let vertices: Vec<usize> = match vertex {
                Some(x) => vec![x],
                None => (0..g.n()).collect(),
            };
            let mut rows = Vec::new();
            for x in vertices {
                let (mu, star) = vertex_measure(&s, &g, x, delta)?;
                rows.push(json!({"x": x, "mu": mu, "mu_star": star}));
            }
            let (mu, star) = graph_measure(&s, delta);
            let v = with_schema("specgraph.measure/1", json!({"delta": delta, "mu": mu, "mu_star": star, "vertices": rows}));
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::Embed { common, delta, alpha } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let emb = spectral_embedding(&s, &g, delta)?;
            let sel = ball_selection(&g, &emb, alpha)?;
            let v = with_schema(
                "specgraph.embed/1",
                json!({"delta": delta, "dims": emb.dims, "coords": emb.coords, "ball_selection": sel}),
            );
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::Resistance { common, source, target } => {
            let g = load(&common, stdin)?;
            let v = match (source, target) {
                (Some(s), Some(t)) => with_schema(
                    "specgraph.resistance/1",
                    json!({"source": s, "target": t, "resistance": effective_resistance(&g, s, t)?}),
                ),
                _ => with_schema("specgraph.resistance/1", serde_json::to_value(ResistanceProfile::compute(&g)?).unwrap()),
            };
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::Walk { common, vertex, time, samples, seed, jobs } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let k = WalkKernel::new(&g, &s)?;
            let mut body = json!({
                "vertex": vertex,
                "t": time,
                "return_probability": k.return_probability(vertex, time)?,
                "heat_return_probability": k.heat_return_probability(vertex, time as f64)?,
                "stationary": g.degree(vertex) / g.vol_total(),
            });
            if let Some(n) = samples {
                let mc = monte_carlo_return(&g, vertex, time, n, seed, jobs)?;
                body["monte_carlo"] = serde_json::to_value(mc).unwrap();
            }
            done(render(common.format.unwrap_or(Format::Json), &with_schema("specgraph.walk/1", body)), &common)
        }
        Command::Mixing { common, epsilon } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let report = WalkKernel::new(&g, &s)?.mixing_report(epsilon)?;
            let mut v = with_schema("specgraph.mixing/1", serde_json::to_value(report).unwrap());
            v["relation_holds"] = Value::Bool(report.relation_holds());
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::TreesExact { common } => {
            let g = load(&common, stdin)?;
            let count = spanning_tree_count_exact(&g)?;
            let text = match (common.format.unwrap_or(Format::Table), count.to_integer()) {
                (Format::Table, Some(c)) => format!("{c}\n"),
                (Format::Table, None) => format!("exp({})\n", count.ln()),
                (Format::Json, c) => to_json(&with_schema(
                    "specgraph.trees-exact/1",
                    json!({"count": c.map(|c| c.to_string()), "ln_count": count.ln()}),
                )),
            };
            done(text, &common)
        }
        Command::TreesSeries { common, r } => {
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let series = log_tau_series_truncated(&g, &s, r)?;
            let v = with_schema(
                "specgraph.trees-series/1",
                json!({"r": r, "value": series.value, "error_bound": series.error_bound, "spectral": log_tau_spectral(&g, &s)?}),
            );
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::TreesEstimate {
            common,
            epsilon,
            fail_prob,
            seed,
            jobs,
            override_r,
            override_n,
            override_degree_samples,
        } => {
            let g = load(&common, stdin)?;
            let mut oracle = in_memory_oracle(&g, seed)?;
            let overrides = EstimatorOverrides {
                r: override_r,
                samples: override_n,
                degree_samples: override_degree_samples,
            };
            let est = estimate_log_tau_local(&mut oracle, g.n(), g.m(), epsilon, fail_prob, seed, overrides, jobs)?;
            let v = with_schema("specgraph.trees-estimate/1", serde_json::to_value(&est).unwrap());
            done(render(common.format.unwrap_or(Format::Json), &v), &common)
        }
        Command::Bounds { common, grid_points, tolerance } => {
            if !(tolerance >= 0.0) {
                return Err(Failure::Usage(format!("--tolerance must be nonnegative, got {tolerance}")));
            }
            let g = load(&common, stdin)?;
            let s = graph_spectrum(&g)?;
            let options = SuiteOptions {
                grid_points,
                ..SuiteOptions::default()
            };
            let report = run_bound_suite(&g, &s, options)?.with_guard(tolerance);
            let text = match common.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report),
                Format::Table => report.to_table(),
            };
            Output {
                text,
                path: common.output.clone(),
                code: if report.pass { EXIT_OK } else { EXIT_BOUNDS_FAILED },
            }
        }
    })
}

/// Runs the program on `argv` (including the program name) and returns the
/// exit status.
pub fn run_cli<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stdin) {
        Ok(out) => {
            let written = match &out.path {
                Some(path) => fs::write(path, &out.text),
                None => stdout.write_all(out.text.as_bytes()),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: cannot write output: {e}");
                    EXIT_DOMAIN
                }
            }
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DOMAIN
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "usage error: {msg}");
            EXIT_USAGE
        }
    }
}
