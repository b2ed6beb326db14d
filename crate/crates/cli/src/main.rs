mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ultradiff::almost_analytic::{
    extend, verify_dbar_bound, verify_jump, BoundConfig, BvConfig, DbarGrid, DerivativeOracle, ExpOracle,
    ExtensionDomain, GevreyFlatOracle, PolyOracle,
};
use ultradiff::distributions::{DistSpec, TestFunction};
use ultradiff::symbols::{
    bicharacteristic, char_set, direction_grid, finite_type, lie_bracket, noncharacteristic_surface,
    parse_polynomial, poisson_bracket, Polynomial, VarNames, CHAR_TOL,
};
use ultradiff::wavefront::{estimate_wavefront, ConeGrid, FitConfig};
use ultradiff::weights::WeightSpec;
use ultradiff::{Dist, FieldSystem, Generator, RatPoly, Symbol, Weights};

/// Ultradifferentiable microlocal analysis from the command line. Every
/// command writes its results under `--out`.
#[derive(Parser, Debug)]
#[command(name = "ultradiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Exit with status 1 when any grid entry failed.
    #[arg(long, global = true)]
    strict: bool,
    /// Weight sequence, e.g. `gevrey:1`, `log_bracket:0.5@256`, `file:m.txt`.
    #[arg(long, global = true)]
    weight: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weight sequence reports and evaluations.
    Weights {
        #[command(subcommand)]
        cmd: WeightsCmd,
    },
    /// Wavefront estimate of a 1D distribution.
    Wf(WfArgs),
    /// Almost-analytic extension and its dbar bound.
    Aa(AaArgs),
    /// Polynomial symbol calculus.
    Symbol {
        #[command(subcommand)]
        cmd: SymbolCmd,
    },
}

#[derive(Subcommand, Debug)]
enum WeightsCmd {
    /// Regularity, moderate growth, quasianalyticity and an omega/h table.
    Analyze {
        spec: Option<String>,
        /// Truncation order when the spec does not carry `@K`.
        #[arg(long, default_value_t = 256)]
        order: usize,
    },
    /// Inclusion and equivalence of two sequences.
    Compare {
        a: String,
        b: String,
        #[arg(long, default_value_t = 256)]
        order: usize,
    },
    /// Prints one associated function value.
    Eval {
        spec: Option<String>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        omega: bool,
        #[arg(long = "omega-tilde")]
        omega_tilde: bool,
        #[arg(long)]
        h: bool,
        #[arg(long = "h-tilde")]
        h_tilde: bool,
    },
}

#[derive(Args, Debug)]
struct WfArgs {
    /// Distribution, e.g. `delta`, `heaviside:0.5`, `bv+`, `gevrey_flat:1`, `sampled:f.csv`.
    #[arg(long, default_value = "delta")]
    dist: String,
    /// Generator polynomial in `x`, homogeneous of even degree.
    #[arg(long = "gen-poly", default_value = "x^2")]
    gen_poly: String,
    /// Comma-separated base points.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    points: String,
    #[arg(long = "lambda-min", default_value_t = 4.0)]
    lambda_min: f64,
    #[arg(long = "lambda-max", default_value_t = 512.0)]
    lambda_max: f64,
    #[arg(long = "lambda-points", default_value_t = 12)]
    lambda_points: usize,
    #[arg(long = "tau-reg", default_value_t = 0.5)]
    tau_reg: f64,
    #[arg(long = "tau-sing", default_value_t = 0.1)]
    tau_sing: f64,
    #[arg(long, default_value_t = 8.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.5)]
    plateau: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
}

#[derive(Args, Debug)]
struct AaArgs {
    /// `gevrey_flat:s`, `exp:a` or `poly:c0,c1,...`.
    #[arg(long, default_value = "gevrey_flat:1", allow_hyphen_values = true)]
    function: String,
    #[arg(long, default_value_t = 39)]
    j: usize,
    #[arg(long, default_value_t = ultradiff::almost_analytic::DEFAULT_THETA)]
    theta: f64,
    #[arg(long = "x-min", default_value_t = -0.5, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long = "x-max", default_value_t = 1.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long = "y-min", default_value_t = 0.0079)]
    y_min: f64,
    #[arg(long = "y-max", default_value_t = 0.5)]
    y_max: f64,
    #[arg(long, default_value_t = 60)]
    nx: usize,
    #[arg(long, default_value_t = 24)]
    ny: usize,
    #[arg(long = "allow-saturation")]
    allow_saturation: bool,
    /// Also check the jump relation of `1/(x -+ i0)` on three bumps.
    #[arg(long)]
    jump: bool,
}

#[derive(Subcommand, Debug)]
enum SymbolCmd {
    /// Sampled characteristic set of the principal symbol.
    Char {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Base points, coordinates separated by `,`, points by `;`.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        points: String,
        #[arg(long, default_value_t = 16)]
        dirs: usize,
        #[arg(long, default_value_t = CHAR_TOL)]
        tol: f64,
    },
    /// Integral curve of the Hamiltonian field of a scalar symbol.
    Bichar {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, allow_hyphen_values = true)]
        xi0: String,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Poisson bracket of two symbols, or Lie bracket of two vector fields.
    Bracket {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        /// Two fields, e.g. `1, 0; 0, x`.
        #[arg(long)]
        fields: Option<String>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Rank filtration of iterated brackets at a point.
    Type {
        #[arg(long)]
        fields: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = 4)]
        length: usize,
    },
    /// Non-characteristic test for the surface with normal `--grad` at `--at`.
    Holmgren {
        #[arg(long)]
        symbol: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        grad: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = CHAR_TOL)]
        tol: f64,
    },
}

enum Failure {
    Usage(String),
    Module(String),
}

impl From<ultradiff::Error> for Failure {
    fn from(e: ultradiff::Error) -> Self {
        Failure::Module(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Module(format!("io: {}", e))
    }
}

type Res<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::expand(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli, &args[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(2)
        }
        Err(Failure::Module(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli, args: &[String]) -> Res<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Weights { cmd } => match cmd {
            WeightsCmd::Analyze { spec, order } => weights_analyze(c, args, spec.as_deref(), *order),
            WeightsCmd::Compare { a, b, order } => weights_compare(c, args, a, b, *order),
            WeightsCmd::Eval { spec, t, omega, omega_tilde, h, h_tilde } => {
                weights_eval(c, spec.as_deref(), *t, [*omega, *omega_tilde, *h, *h_tilde])
            }
        },
        Command::Wf(w) => wf(c, args, w),
        Command::Aa(a) => aa(c, args, a),
        Command::Symbol { cmd } => symbol(c, args, cmd),
    }
}

fn weight_spec(c: &Common, positional: Option<&str>) -> Res<WeightSpec> {
    let text = positional.or(c.weight.as_deref()).ok_or_else(|| Failure::Usage("a weight spec is required".into()))?;
    parse_spec(text)
}

fn parse_spec(text: &str) -> Res<WeightSpec> {
    text.parse().map_err(|e: ultradiff::Error| Failure::Usage(format!("weight `{}`: {}", text, e)))
}

fn build_weight(spec: &WeightSpec, order: usize) -> Res<Weights> {
    let spec = if spec.explicit_order().is_none() { spec.with_order(order) } else { spec.clone() };
    Ok(spec.build()?)
}

fn floats(text: &str, what: &str) -> Res<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("{}: bad number `{}`", what, s.trim()))))
        .collect()
}

fn point_list(text: &str, dim: usize, what: &str) -> Res<Vec<Vec<f64>>> {
    let pts: Vec<Vec<f64>> = text.split(';').map(|p| floats(p, what)).collect::<Res<_>>()?;
    if pts.iter().any(|p| p.len() != dim) {
        return Err(Failure::Usage(format!("{}: every point needs {} coordinates", what, dim)));
    }
    Ok(pts)
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(c: &'a Common, args: &[String]) -> Res<Self> {
        std::fs::create_dir_all(&c.out)?;
        let mut o = Output { dir: &c.out, written: Vec::new() };
        o.file("config.txt", &config::serialize(args))?;
        Ok(o)
    }

    fn file(&mut self, name: &str, body: &str) -> Res<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, body)?;
        self.written.push(p);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Res<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Module(e.to_string()))?;
        s.push('\n');
        self.file(name, &s)
    }

    fn done(self) {
        for p in &self.written {
            println!("{}", p.display());
        }
    }
}

fn weights_analyze(c: &Common, args: &[String], spec: Option<&str>, order: usize) -> Res<()> {
    let m = build_weight(&weight_spec(c, spec)?, order)?;
    let reg = m.check_regular();
    let mg = m.check_moderate_growth();
    let qa = m.quasianalytic();
    let report = json!({
        "weight": m.name(),
        "order": m.order(),
        "regular": reg.all_ok(),
        "regularity": reg,
        "moderate_growth": mg.ok,
        "moderate_growth_detail": mg,
        "quasianalytic": qa.classification,
        "quasianalytic_detail": qa,
        "omega_limit": finite(m.omega_limit()),
        "small_h_floor": finite(m.small_h_floor()),
    });
    let mut table = String::from("t,omega,log_h\n");
    let (lo, hi) = (m.small_h_floor().max(1e-6).ln(), m.omega_limit().min(1e6).ln());
    for i in 0..=200 {
        let t = (lo + (hi - lo) * i as f64 / 200.0).exp();
        let om = m.omega(t).map(|v| format!("{:.17e}", v)).unwrap_or_default();
        let lh = m.log_small_h(t).map(|v| format!("{:.17e}", v)).unwrap_or_default();
        let _ = writeln!(table, "{:.17e},{},{}", t, om, lh);
    }
    let mut out = Output::new(c, args)?;
    out.json("weights_analyze.json", &report)?;
    out.file("weights_table.csv", &table)?;
    out.done();
    Ok(())
}

fn weights_compare(c: &Common, args: &[String], a: &str, b: &str, order: usize) -> Res<()> {
    let m = build_weight(&parse_spec(a)?, order)?;
    let n = build_weight(&parse_spec(b)?, order)?;
    let ab = m.precedes(&n)?;
    let ba = n.precedes(&m)?;
    let report = json!({
        "a": m.name(),
        "b": n.name(),
        "order": m.order(),
        "precedes": ab.ok,
        "precedes_witness": finite(ab.witness),
        "reverse_precedes": ba.ok,
        "equivalent": m.equivalent(&n)?,
        "caveat": ab.caveat,
    });
    let mut out = Output::new(c, args)?;
    out.json("weights_compare.json", &report)?;
    out.done();
    Ok(())
}

fn weights_eval(c: &Common, spec: Option<&str>, t: f64, which: [bool; 4]) -> Res<()> {
    let spec = weight_spec(c, spec)?;
    let count = which.iter().filter(|&&b| b).count();
    if count != 1 {
        return Err(Failure::Usage("choose exactly one of --omega, --omega-tilde, --h, --h-tilde".into()));
    }
    let m: Weights = spec.build_covering(t.max(1.0))?;
    let v = match which {
        [true, ..] => m.omega(t)?,
        [_, true, ..] => m.omega_tilde(t)?,
        [_, _, true, _] => m.small_h(t)?,
        _ => m.h_tilde(t)?,
    };
    println!("{}", v);
    Ok(())
}

fn generator(text: &str, n: usize) -> Res<Generator> {
    let p: Polynomial<f64> =
        parse_polynomial(text, &VarNames::space(n)).map_err(|e| Failure::Usage(format!("generator `{}`: {}", text, e)))?;
    let terms = p.terms().map(|(e, c)| (e.clone(), *c)).collect();
    Ok(Generator::new(n, terms)?)
}

fn wf(c: &Common, args: &[String], w: &WfArgs) -> Res<()> {
    let spec: DistSpec = w.dist.parse().map_err(|e: ultradiff::Error| Failure::Usage(format!("dist `{}`: {}", w.dist, e)))?;
    let u: Dist = spec.build()?;
    let p = generator(&w.gen_poly, 1)?;
    let cfg = FitConfig {
        lambda_min: w.lambda_min,
        lambda_max: w.lambda_max,
        n_lambda: w.lambda_points,
        tau_reg: w.tau_reg,
        tau_sing: w.tau_sing,
        kappa: w.kappa,
        plateau: w.plateau,
        radius: w.radius,
        ..FitConfig::default()
    };
    let m: Weights = weight_spec(c, None).or_else(|_| parse_spec("gevrey:1"))?.build_covering(cfg.omega_reach())?;
    let pts: Vec<Vec<f64>> = floats(&w.points, "points")?.into_iter().map(|x| vec![x]).collect();
    let est = estimate_wavefront(&u, &pts, &ConeGrid::Line, &m, &p, &cfg)?;
    let mut report = est.to_json();
    report["dist"] = json!(w.dist);
    report["generator"] = json!(p.describe());
    report["c_p"] = json!(p.normalization());
    let mut out = Output::new(c, args)?;
    out.json("wavefront.json", &report)?;
    for i in 0..pts.len() {
        out.file(&format!("wavefront_{}.svg", i), &est.to_svg(i))?;
    }
    out.done();
    let failed = est.entries.iter().filter(|e| e.fit.is_err()).count();
    if c.strict && failed > 0 {
        return Err(Failure::Module(format!("{} grid entries failed", failed)));
    }
    Ok(())
}

fn oracle(text: &str) -> Res<Arc<dyn DerivativeOracle<f64>>> {
    let bad = || Failure::Usage(format!("function `{}`: expected gevrey_flat:s, exp:a or poly:c0,c1,...", text));
    let (name, arg) = text.split_once(':').ok_or_else(bad)?;
    match name {
        "gevrey_flat" => {
            let s: f64 = arg.parse().map_err(|_| bad())?;
            Ok(Arc::new(GevreyFlatOracle { s, y: 0.0 }))
        }
        "exp" => Ok(Arc::new(ExpOracle(arg.parse::<f64>().map_err(|_| bad())?))),
        "poly" => Ok(Arc::new(PolyOracle(floats(arg, "poly")?))),
        _ => Err(bad()),
    }
}

fn aa(c: &Common, args: &[String], a: &AaArgs) -> Res<()> {
    let spec = weight_spec(c, None).or_else(|_| parse_spec("gevrey:1@1024"))?;
    let m = build_weight(&spec, 1024)?;
    let d = ExtensionDomain { x_min: a.x_min, x_max: a.x_max, y_min: a.y_min, y_max: a.y_max };
    let f = extend(oracle(&a.function)?, m, a.theta, a.j, d, a.allow_saturation)?;
    let r = verify_dbar_bound(&f, &DbarGrid::for_domain(&d, a.nx, a.ny), &BoundConfig::default())?;
    let mut report = r.to_json();
    report["function"] = json!(a.function);
    report["weight"] = json!(f.weight().name());
    report["J"] = json!(a.j);
    report["theta"] = json!(a.theta);
    if a.jump {
        let phis = vec![
            TestFunction::bump(0.0, 1.0),
            TestFunction::bump(0.3, 0.8).with_poly(vec![1.0, 2.0, -1.0]),
            TestFunction::bump(-0.2, 1.5).scaled(3.0),
        ];
        let j = verify_jump(&phis, 1e-6, &BvConfig::default())?;
        report["jump"] = json!({
            "ok": j.ok,
            "convention": j.convention,
            "deviations": j.entries.iter().map(|e| e.deviation).collect::<Vec<_>>(),
        });
    }
    let mut out = Output::new(c, args)?;
    out.json("aa_report.json", &report)?;
    out.file("dbar_heatmap.csv", &r.heatmap_csv())?;
    out.done();
    if c.strict && !r.ok {
        return Err(Failure::Module("dbar bound not verified".into()));
    }
    Ok(())
}

fn symbol(c: &Common, args: &[String], cmd: &SymbolCmd) -> Res<()> {
    let usage = |e: ultradiff::Error| Failure::Usage(e.to_string());
    match cmd {
        SymbolCmd::Char { symbol, dim, points, dirs, tol } => {
            let s = Symbol::parse(symbol, *dim).map_err(usage)?;
            let xs = point_list(points, *dim, "points")?;
            let ds = direction_grid(*dim, *dirs)?;
            let ch = char_set(&s, &xs, &ds, *tol)?;
            let entries: Vec<Value> = ch
                .points
                .iter()
                .enumerate()
                .map(|(i, (x, d))| json!({ "x": x, "dir": d, "det": ch.detvals[i], "scale": ch.scales[i], "characteristic": ch.mask[i] }))
                .collect();
            let report = json!({ "symbol": symbol, "tol": ch.tol, "entries": entries });
            let mut out = Output::new(c, args)?;
            out.json("char.json", &report)?;
            out.done();
        }
        SymbolCmd::Bichar { symbol, dim, x0, xi0, t_end, step } => {
            let p: RatPoly = parse_polynomial(symbol, &VarNames::phase_space(*dim)).map_err(usage)?;
            let curve = bicharacteristic(&p, *dim, &floats(x0, "x0")?, &floats(xi0, "xi0")?, *t_end, *step, CHAR_TOL)?;
            let report = json!({
                "symbol": symbol,
                "max_drift": curve.max_drift,
                "is_bicharacteristic": curve.is_bicharacteristic,
                "samples": curve.samples.len(),
            });
            let mut out = Output::new(c, args)?;
            out.file("bichar.csv", &curve.to_csv())?;
            out.json("bichar.json", &report)?;
            out.done();
        }
        SymbolCmd::Bracket { p, q, fields, dim } => {
            let report = match (p, q, fields) {
                (Some(p), Some(q), None) => {
                    let names = VarNames::phase_space(*dim);
                    let a: RatPoly = parse_polynomial(p, &names).map_err(usage)?;
                    let b: RatPoly = parse_polynomial(q, &names).map_err(usage)?;
                    let r = poisson_bracket(&a, &b, *dim)?;
                    json!({ "p": p, "q": q, "poisson": r.render(&names.names) })
                }
                (None, None, Some(f)) => {
                    let s = FieldSystem::parse(f, *dim).map_err(usage)?;
                    if s.fields.len() != 2 {
                        return Err(Failure::Usage("--fields needs exactly two fields".into()));
                    }
                    let names = VarNames::space(*dim);
                    let r = lie_bracket(&s.fields[0], &s.fields[1])?;
                    let comps: Vec<String> = r.iter().map(|p| p.render(&names.names)).collect();
                    json!({ "fields": f, "lie": comps })
                }
                _ => return Err(Failure::Usage("give --p and --q, or --fields".into())),
            };
            let mut out = Output::new(c, args)?;
            out.json("bracket.json", &report)?;
            out.done();
        }
        SymbolCmd::Type { fields, dim, at, length } => {
            let s = FieldSystem::parse(fields, *dim).map_err(usage)?;
            let r = finite_type(&s, &floats(at, "at")?, *length)?;
            let report = json!({ "fields": fields, "at": floats(at, "at")?, "rank_by_length": r.rank_by_length, "type": r.type_length });
            let mut out = Output::new(c, args)?;
            out.json("type.json", &report)?;
            out.done();
        }
        SymbolCmd::Holmgren { symbol, dim, grad, at, tol } => {
            let s = Symbol::parse(symbol, *dim).map_err(usage)?;
            let r = noncharacteristic_surface(&s, &floats(grad, "grad")?, &floats(at, "at")?, *tol)?;
            let report = json!({
                "symbol": symbol,
                "noncharacteristic": r.noncharacteristic,
                "det": r.det,
                "scale": r.scale,
                "note": r.note,
            });
            let mut out = Output::new(c, args)?;
            out.json("holmgren.json", &report)?;
            out.done();
        }
    }
    Ok(())
}
