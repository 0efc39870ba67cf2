use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use fraquad_core::energy::{energy_tables, EnergyMeasure, EnergyTables};
use fraquad_core::fractal::{builtin, parse_spec_json, validate_spec, FractalSpec, VertexId};
use fraquad_core::green::{delta0, delta1, delta1_refined, g1_values, g_e_values, g_v0_values, integral_g_v0, G1Path};
use fraquad_core::harmonic::{HarmonicFunction, Model, SplineSystem};
use fraquad_core::io::{self, num, read_set_csv, read_vertex_values, sqrt_num, write_vertex_csv, write_vertex_csv_decimal};
use fraquad_core::multiharmonic::multiharmonic_tables;
use fraquad_core::quadrature::{
    delta_ew, error_budget, integrate_with, natural_weights, uniform_weights, user_weights, BudgetRequest, KnownFactors, Measure,
    WeightedSampleSet,
};
use fraquad_core::rational::{parse_q, to_decimal, Q};
use fraquad_core::verify::{verify_paper, Scope};

#[derive(Parser)]
#[command(name = "fraquad", version, about = "Quadrature weights, discrepancies and error bounds on p.c.f. self-similar fractals")]
struct Cli {
    /// Spec file (JSON) or builtin:sg|st|sg3|interval|nhedron:n.
    #[arg(long, global = true, default_value = "builtin:sg")]
    spec: String,
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Decimal output; natural weights are solved in f64.
    #[arg(long, global = true)]
    float: bool,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, default_value = "green-identity")]
    g1: String,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the structural conditions of a spec.
    Validate { spec: Option<String> },
    /// Multiharmonic tables A, I, X, G, f1, g1.
    Tables {
        spec: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "a,i,x,g,f1,g1")]
        emit: Vec<String>,
    },
    /// g_E on V_depth.
    Green {
        spec: Option<String>,
        /// CSV with a `vertex` column, or V<m>.
        #[arg(long, default_value = "V0")]
        set: String,
    },
    /// δ₀², δ₁ and the uniform-weight coefficient for a sample set.
    Disc {
        spec: Option<String>,
        #[arg(long, default_value = "V0")]
        set: String,
        /// Refine δ₁ adaptively until the interval is narrower than this.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 200_000)]
        max_cells: usize,
    },
    /// Natural weights for μ or an energy measure.
    Weights {
        spec: Option<String>,
        #[arg(long, default_value = "V0")]
        set: String,
        /// mu, kusuoka, or energy:<file>.
        #[arg(long, default_value = "mu")]
        measure: String,
    },
    /// Quadrature Σ w(x) f(x), optionally with the error budget.
    Integrate {
        spec: Option<String>,
        #[arg(long, default_value = "V0")]
        set: String,
        /// natural, uniform, or a CSV with `vertex,weight`.
        #[arg(long, default_value = "natural")]
        weights: String,
        /// CSV with `vertex,value`.
        #[arg(long, conflicts_with = "function")]
        values: Option<PathBuf>,
        /// harmonic:a,b,..., green, or coord:0|1.
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        budget: bool,
        /// Resistance diameter R, when known.
        #[arg(long)]
        r: Option<f64>,
        /// Hölder exponent q for the g_E-norm form of the bound.
        #[arg(long)]
        holder_q: Option<f64>,
    },
    /// Energy-measure matrices M_i, basic integrals and ∫h_i dν_j.
    EnergyTables {
        spec: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "m,basic,d")]
        emit: Vec<String>,
    },
    /// Compare every built-in result with the expected-values manifest.
    VerifyPaper {
        #[arg(long, default_value = "all")]
        scope: String,
    },
    /// SVG of Γ_depth with vertex values.
    Plot {
        spec: Option<String>,
        #[arg(long, conflicts_with = "function")]
        values: Option<PathBuf>,
        #[arg(long)]
        function: Option<String>,
    },
}

struct Ctx {
    float: bool,
    depth: Option<usize>,
    g1: G1Path,
    format: Format,
}

impl Ctx {
    fn num(&self, x: &Q) -> Value {
        if self.float {
            json!({ "decimal": to_decimal(x, 15) })
        } else {
            num(x)
        }
    }

    fn nums(&self, xs: &[Q]) -> Value {
        Value::Array(xs.iter().map(|x| self.num(x)).collect())
    }

    fn matrix(&self, m: &fraquad_core::linalg::Matrix<Q>) -> Value {
        Value::Array(m.to_rows().iter().map(|r| self.nums(r)).collect())
    }

    fn csv(&self, spec: &FractalSpec, header: &str, rows: &[(VertexId, Q)]) -> String {
        if self.float {
            write_vertex_csv_decimal(spec, header, rows)
        } else {
            write_vertex_csv(spec, header, rows)
        }
    }

    fn vertex_map(&self, spec: &FractalSpec, rows: &[(VertexId, Q)]) -> Value {
        Value::Array(rows.iter().map(|(v, x)| json!({ "vertex": spec.address(v), "value": self.num(x) })).collect())
    }
}

fn load_spec(arg: &str) -> Result<FractalSpec> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return Ok(builtin(name)?);
    }
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return Ok(parse_spec_json(&text)?);
    }
    builtin(arg).with_context(|| format!("{arg} is neither a file nor a built-in spec"))
}

fn load_model(arg: &str) -> Result<Model> {
    Ok(Model::new(load_spec(arg)?)?)
}

/// `V<m>` or a CSV file of addresses.
fn load_set(model: &Model, arg: &str) -> Result<Vec<VertexId>> {
    if let Some(m) = arg.strip_prefix('V').and_then(|m| m.parse::<usize>().ok()) {
        return Ok(model.graph(m).vertices.clone());
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading sample set {arg}"))?;
    Ok(read_set_csv(&model.spec, &text)?)
}

fn set_depth(set: &[VertexId]) -> usize {
    set.iter().map(|v| v.depth()).max().unwrap_or(0)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn envelope(kind: &str, spec: &FractalSpec, body: Map<String, Value>) -> String {
    pretty(&io::envelope(kind, spec, body))
}

/// `path = value` lines for `--format text`. Exact/decimal pairs collapse to the exact value.
fn flatten(path: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) if m.contains_key("exact") && m.len() == 2 && m.contains_key("decimal") => flatten(path, &m["exact"], out),
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&if path.is_empty() { k.clone() } else { format!("{path}.{k}") }, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{path}[{i}]"), x, out);
            }
        }
        Value::String(t) => out.push_str(&format!("{path} = {t}\n")),
        other => out.push_str(&format!("{path} = {other}\n")),
    }
}

/// Values of a built-in function family on V_m, with its exact μ-integral and
/// exact energy / ‖Δf‖₁ when known.
struct Family {
    values: Vec<Q>,
    integral: Option<Q>,
    known: KnownFactors,
}

fn family(model: &Model, name: &str, m: usize, g1: &[Q]) -> Result<Family> {
    if let Some(rest) = name.strip_prefix("harmonic:") {
        let coeffs = rest.split(',').map(parse_q).collect::<fraquad_core::Result<Vec<_>>>()?;
        if coeffs.len() != model.n0() {
            bail!("harmonic: needs {} boundary values", model.n0());
        }
        let h = HarmonicFunction { coeffs };
        return Ok(Family {
            values: h.values(model, m),
            integral: Some(h.integral_mu(model)),
            known: KnownFactors { energy: Some(h.energy(model)), laplacian_l1: Some(Q::from_integer(0.into())) },
        });
    }
    if name == "green" {
        // E(g, g) = ∫g dμ and Δg = −1
        let ig = integral_g_v0(model, g1);
        return Ok(Family {
            values: g_v0_values(model, m, g1),
            integral: Some(ig.clone()),
            known: KnownFactors { energy: Some(ig), laplacian_l1: Some(Q::from_integer(1.into())) },
        });
    }
    if let Some(axis) = name.strip_prefix("coord:") {
        let axis: usize = axis.parse().context("coord axis")?;
        let emb = model.spec.embedding.as_ref().context("spec has no embedding")?;
        if axis > 1 {
            bail!("coord axis must be 0 or 1");
        }
        let values = model
            .graph(m)
            .vertices
            .iter()
            .map(|v| Q::from_float(emb.point(&v.word, v.index as usize)[axis]).context("non-finite coordinate"))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Family { values, integral: None, known: KnownFactors::default() });
    }
    bail!("unknown function family {name:?} (harmonic:..., green, coord:0|1)")
}

fn cmd_validate(spec: &FractalSpec) -> Result<(String, bool)> {
    let r = validate_spec(spec);
    let mut body = Map::new();
    body.insert("pass".into(), json!(r.pass));
    body.insert("violations".into(), json!(r.violations));
    body.insert("warnings".into(), json!(r.warnings));
    Ok((envelope("validate", spec, body), r.pass))
}

fn cmd_tables(ctx: &Ctx, model: &Model, emit: &[String]) -> Result<String> {
    let t = multiharmonic_tables(model)?;
    let mut body = Map::new();
    let addr: Vec<String> = t.interior.iter().map(|v| model.spec.address(v)).collect();
    body.insert("interior".into(), json!(addr));
    for e in emit {
        match e.trim() {
            "a" => {
                body.insert("A".into(), ctx.matrix(&t.a));
            }
            "i" => {
                body.insert("I".into(), ctx.nums(&t.i));
            }
            "x" => {
                body.insert("X".into(), ctx.matrix(&t.x));
            }
            "g" => {
                body.insert("G".into(), ctx.matrix(&t.g));
            }
            "f1" => {
                let g = model.graph(1);
                let f: Vec<Value> = t
                    .f1
                    .iter()
                    .map(|row| ctx.vertex_map(&model.spec, &g.vertices.iter().cloned().zip(row.iter().cloned()).collect::<Vec<_>>()))
                    .collect();
                body.insert("f1".into(), Value::Array(f));
            }
            "g1" => {
                let g = model.graph(1);
                let pair = |xs: &[Q]| ctx.vertex_map(&model.spec, &g.vertices.iter().cloned().zip(xs.iter().cloned()).collect::<Vec<_>>());
                body.insert("g1".into(), json!({ "f1k": pair(&t.g1), "green-identity": pair(&t.g1_check), "agree": t.g1 == t.g1_check }));
            }
            other => bail!("unknown table {other:?} (a, i, x, g, f1, g1)"),
        }
    }
    Ok(envelope("tables", &model.spec, body))
}

fn cmd_green(ctx: &Ctx, model: &Model, set: &[VertexId]) -> Result<String> {
    let g1 = g1_values(model, ctx.g1)?;
    let m = ctx.depth.unwrap_or(2).max(set_depth(set));
    let slice = g_e_values(model, set, m, &g1)?;
    let rows: Vec<(VertexId, Q)> = model.graph(m).vertices.iter().cloned().zip(slice.values).collect();
    if ctx.format == Format::Csv {
        return Ok(ctx.csv(&model.spec, "g_E", &rows));
    }
    let mut body = Map::new();
    body.insert("depth".into(), json!(m));
    body.insert("set".into(), json!(set.iter().map(|v| model.spec.address(v)).collect::<Vec<_>>()));
    body.insert("values".into(), ctx.vertex_map(&model.spec, &rows));
    Ok(envelope("green", &model.spec, body))
}

fn interval_json(ctx: &Ctx, model: &Model, d: &fraquad_core::green::Delta1Interval) -> Value {
    json!({
        "lower": ctx.num(&d.lower),
        "upper": ctx.num(&d.upper),
        "width": ctx.num(&d.width()),
        "depth": d.depth,
        "argmax": model.spec.address(&d.argmax),
        "active_cells": d.active_cells,
    })
}

fn cmd_disc(ctx: &Ctx, model: &Model, set: &[VertexId], target: Option<&str>, max_cells: usize) -> Result<String> {
    let g1 = g1_values(model, ctx.g1)?;
    let d0 = delta0(model, set, &g1)?;
    let depth = ctx.depth.unwrap_or(6).max(set_depth(set));
    let d1 = match target {
        Some(t) => delta1_refined(model, set, depth, &g1, &parse_q(t)?, max_cells)?,
        None => delta1(model, set, depth, &g1)?,
    };
    let p = natural_weights(model, set, Measure::SelfSimilar)?;
    let dew = delta_ew(&p, &uniform_weights(set)?)?;
    let mut body = Map::new();
    body.insert("set".into(), json!(set.iter().map(|v| model.spec.address(v)).collect::<Vec<_>>()));
    body.insert("delta0_sq".into(), ctx.num(&d0.sq));
    body.insert("delta0".into(), sqrt_num(&d0.sq));
    body.insert("delta1".into(), interval_json(ctx, model, &d1));
    body.insert("delta_Ew_coeff".into(), ctx.num(&dew));
    body.insert("weights".into(), ctx.vertex_map(&model.spec, &set.iter().cloned().zip(p.weights).collect::<Vec<_>>()));
    Ok(envelope("disc", &model.spec, body))
}

fn energy_measure(model: &Model, arg: &str) -> Result<(EnergyTables, EnergyMeasure)> {
    let t = energy_tables(model)?;
    let nu = if arg == "kusuoka" {
        EnergyMeasure::kusuoka(model.n0())
    } else {
        let path = arg.strip_prefix("energy:").with_context(|| format!("unknown measure {arg:?} (mu, kusuoka, energy:<file>)"))?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let (nu, normalize) = io::parse_energy_measure(&text, model.n0())?;
        if normalize {
            nu.normalized(model)?
        } else {
            nu
        }
    };
    Ok((t, nu))
}

fn weighted_set(ctx: &Ctx, model: &Model, set: &[VertexId], measure: &str) -> Result<WeightedSampleSet> {
    if measure == "mu" {
        if ctx.float {
            let sys = SplineSystem::<f64>::new(model, set)?;
            let loads: Vec<f64> = model.hat_integrals(sys.depth()).iter().map(fraquad_core::rational::q_to_f64).collect();
            let w = sys.push(&loads).into_iter().map(|x| Q::from_float(x).context("non-finite weight")).collect::<Result<Vec<_>>>()?;
            return Ok(WeightedSampleSet { points: set.to_vec(), weights: w, provenance: fraquad_core::quadrature::Provenance::Natural, warnings: vec![] });
        }
        return Ok(natural_weights(model, set, Measure::SelfSimilar)?);
    }
    let (t, nu) = energy_measure(model, measure)?;
    Ok(natural_weights(model, set, Measure::Energy(&t, &nu))?)
}

fn cmd_weights(ctx: &Ctx, model: &Model, set: &[VertexId], measure: &str) -> Result<String> {
    let ws = weighted_set(ctx, model, set, measure)?;
    let rows: Vec<(VertexId, Q)> = ws.points.iter().cloned().zip(ws.weights.iter().cloned()).collect();
    if ctx.format == Format::Csv {
        return Ok(ctx.csv(&model.spec, "weight", &rows));
    }
    let mut body = Map::new();
    body.insert("measure".into(), json!(measure));
    body.insert("weights".into(), ctx.vertex_map(&model.spec, &rows));
    body.insert("total".into(), ctx.num(&ws.total()));
    body.insert("warnings".into(), json!(ws.warnings));
    Ok(envelope("weights", &model.spec, body))
}

struct IntegrateArgs<'a> {
    weights: &'a str,
    values: Option<&'a Path>,
    function: Option<&'a str>,
    budget: bool,
    r: Option<f64>,
    holder_q: Option<f64>,
}

fn cmd_integrate(ctx: &Ctx, model: &Model, set: &[VertexId], a: IntegrateArgs) -> Result<String> {
    let ws = match a.weights {
        "natural" => natural_weights(model, set, Measure::SelfSimilar)?,
        "uniform" => uniform_weights(set)?,
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading weights {path}"))?;
            let rows = read_vertex_values(&model.spec, &text, "weight")?;
            let (pts, w): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            if pts.iter().any(|p| !set.contains(p)) || pts.len() != set.len() {
                bail!("weight file must list exactly the vertices of the sample set");
            }
            user_weights(pts, w)?
        }
    };
    let g1 = g1_values(model, ctx.g1)?;
    let depth = ctx.depth.unwrap_or(6).max(set_depth(&ws.points));
    let mut body = Map::new();
    body.insert("weights".into(), json!(a.weights));
    let (values_v, fam) = match (a.values, a.function) {
        (Some(p), None) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let rows = read_vertex_values(&model.spec, &text, "value")?;
            let g = model.graph(depth);
            let full = if rows.len() == g.len() {
                let mut v = vec![Q::from_integer(0.into()); g.len()];
                for (x, val) in &rows {
                    v[model.index_at(x, depth)?] = val.clone();
                }
                Some(v)
            } else {
                None
            };
            let lookup: std::collections::HashMap<VertexId, Q> = rows.into_iter().collect();
            let quad = integrate_with(&ws, |x| lookup.get(x).cloned().ok_or_else(|| fraquad_core::Error::Missing(format!("no value for {x}"))))?;
            body.insert("quadrature".into(), ctx.num(&quad));
            (full, None)
        }
        (None, Some(f)) => {
            let fam = family(model, f, depth, &g1)?;
            let vals = fam.values.clone();
            let quad = integrate_with(&ws, |x| Ok(vals[model.index_at(x, depth)?].clone()))?;
            body.insert("function".into(), json!(f));
            body.insert("quadrature".into(), ctx.num(&quad));
            if let Some(exact) = &fam.integral {
                body.insert("integral".into(), ctx.num(exact));
                body.insert("error".into(), ctx.num(&(&quad - exact)));
            }
            (Some(fam.values.clone()), Some(fam))
        }
        _ => bail!("give either --values or --function"),
    };
    if a.budget {
        let values = values_v.with_context(|| format!("the budget needs values on all of V_{depth}; pass --function or a full value file"))?;
        let known = fam.map(|f| f.known).unwrap_or_default();
        let b = error_budget(model, BudgetRequest { ws: &ws, values: &values, depth, g1: &g1, r: a.r, holder_q: a.holder_q, known })?;
        let factor = |f: &fraquad_core::quadrature::Factor<Q>| json!({ "value": ctx.num(&f.value), "exact": f.exact, "note": f.note });
        body.insert(
            "budget".into(),
            json!({
                "depth": depth,
                "delta0_sq": ctx.num(&b.delta0_sq),
                "delta0": sqrt_num(&b.delta0_sq),
                "delta1": interval_json(ctx, model, &b.delta1),
                "delta_Ew_coeff": ctx.num(&b.delta_ew_coeff),
                "R": b.r,
                "energy": factor(&b.energy),
                "laplacian_l1": factor(&b.laplacian_l1),
                "holder": b.holder.map(|(q, g, l)| json!({ "q": q, "g_E_norm": g, "laplacian_norm": l })),
                "bounds": b.bounds,
            }),
        );
    }
    Ok(envelope("integrate", &model.spec, body))
}

fn cmd_energy_tables(ctx: &Ctx, model: &Model, emit: &[String]) -> Result<String> {
    let t = energy_tables(model)?;
    let mut body = Map::new();
    let pairs: Vec<String> = fraquad_core::energy::pairs(model.n0()).iter().map(|(j, k)| format!("{j}{k}")).collect();
    body.insert("pairs".into(), json!(pairs));
    for e in emit {
        match e.trim() {
            "m" => {
                let ms: Map<String, Value> = t.m.iter().enumerate().map(|(i, m)| (model.spec.label(i), ctx.matrix(m))).collect();
                body.insert("M".into(), Value::Object(ms));
            }
            "basic" => {
                body.insert("basic".into(), Value::Array(t.basic.iter().map(|r| ctx.nums(r)).collect()));
            }
            "d" => {
                body.insert("D".into(), Value::Array(t.d.iter().map(|r| ctx.nums(r)).collect()));
            }
            other => bail!("unknown table {other:?} (m, basic, d)"),
        }
    }
    Ok(envelope("energy-tables", &model.spec, body))
}

fn cmd_verify(ctx: &Ctx, scope: &str) -> Result<(String, bool)> {
    let scope: Scope = scope.parse()?;
    let r = verify_paper(scope)?;
    let text = match ctx.format {
        Format::Text => r.to_text(),
        Format::Json => pretty(&r.to_json()),
        Format::Csv => r.to_csv(),
    };
    Ok((text, r.passed()))
}

fn cmd_plot(ctx: &Ctx, model: &Model, values: Option<&Path>, function: Option<&str>) -> Result<String> {
    let depth = ctx.depth.unwrap_or(1);
    let rows: Vec<(VertexId, Q)> = match (values, function) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            read_vertex_values(&model.spec, &text, "value")?
        }
        (None, Some(f)) => {
            let g1 = g1_values(model, ctx.g1)?;
            let fam = family(model, f, depth, &g1)?;
            model.graph(depth).vertices.iter().cloned().zip(fam.values).collect()
        }
        (None, None) => Vec::new(),
    };
    Ok(fraquad_core::plot::render_svg(model, depth, &rows)?)
}

fn run(cli: Cli) -> Result<bool> {
    let ctx = Ctx { float: cli.float, depth: cli.depth, g1: cli.g1.parse()?, format: cli.format };
    let pick = |s: &Option<String>| s.clone().unwrap_or_else(|| cli.spec.clone());
    let (text, ok) = match &cli.cmd {
        Cmd::Validate { spec } => cmd_validate(&load_spec(&pick(spec))?)?,
        Cmd::Tables { spec, emit } => (cmd_tables(&ctx, &load_model(&pick(spec))?, emit)?, true),
        Cmd::Green { spec, set } => {
            let m = load_model(&pick(spec))?;
            let e = load_set(&m, set)?;
            (cmd_green(&ctx, &m, &e)?, true)
        }
        Cmd::Disc { spec, set, target, max_cells } => {
            let m = load_model(&pick(spec))?;
            let e = load_set(&m, set)?;
            (cmd_disc(&ctx, &m, &e, target.as_deref(), *max_cells)?, true)
        }
        Cmd::Weights { spec, set, measure } => {
            let m = load_model(&pick(spec))?;
            let e = load_set(&m, set)?;
            (cmd_weights(&ctx, &m, &e, measure)?, true)
        }
        Cmd::Integrate { spec, set, weights, values, function, budget, r, holder_q } => {
            let m = load_model(&pick(spec))?;
            let e = load_set(&m, set)?;
            let args = IntegrateArgs {
                weights,
                values: values.as_deref(),
                function: function.as_deref(),
                budget: *budget,
                r: *r,
                holder_q: *holder_q,
            };
            (cmd_integrate(&ctx, &m, &e, args)?, true)
        }
        Cmd::EnergyTables { spec, emit } => (cmd_energy_tables(&ctx, &load_model(&pick(spec))?, emit)?, true),
        Cmd::VerifyPaper { scope } => cmd_verify(&ctx, scope)?,
        Cmd::Plot { spec, values, function } => (cmd_plot(&ctx, &load_model(&pick(spec))?, values.as_deref(), function.as_deref())?, true),
    };
    let text = match serde_json::from_str::<Value>(&text) {
        Ok(v) if ctx.format == Format::Text && !matches!(cli.cmd, Cmd::VerifyPaper { .. }) => {
            let mut t = String::new();
            flatten("", &v, &mut t);
            t
        }
        _ => text,
    };
    emit(&cli.out, &text)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.exact;
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
