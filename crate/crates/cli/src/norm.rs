//! `polyreg norm`: evaluate, reduce, dualize and the ℓ1/ℓ∞ witness.
//!
//! Matrix files are `d × N` with one generator per column. For the
//! weighted-ℓ1 and zonotope forms the columns are the rows of `L`.

use crate::config::{format_number, num, parse_vector, resolve, with_path, OutDir};
use crate::error::{CliError, CliResult};
use crate::Globals;
use clap::{Args, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use polyreg_core::geometry::{
    analysis_norm, extreme_points, facets_from_vertices, l1_linf_witness, synthesis_norm, weighted_l1_norm,
    zonotope_gauge, FacetMatrix, RegularizationOperator, VertexDictionary,
};
use polyreg_core::io::{format_matrix_csv, read_matrix, write_matrix};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Subcommand, Debug)]
pub enum NormCommand {
    /// Print the norm of each --x vector
    Eval(EvalArgs),
    /// Keep only the extreme points of the symmetric hull of the columns
    Reduce(MatrixArgs),
    /// Facet normals of the ball spanned by the columns (d ≤ 3)
    Dualize(MatrixArgs),
    /// The ±1 matrix whose analysis norm is ℓ1 and synthesis norm is ℓ∞
    Witness(WitnessArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    /// min ‖z‖₁ subject to Vz = x
    Synthesis,
    /// max over columns of |⟨f, x⟩|
    Analysis,
    /// ‖Lx‖₁
    WeightedL1,
    /// gauge of the zonotope spanned by the rows of L
    Zonotope,
}

#[derive(Args, Serialize, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    form: Option<Form>,
    /// Matrix file (CSV with header "d,N", or JSON)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<PathBuf>,
    /// Comma-separated vector; repeat for several
    #[arg(long = "x", allow_hyphen_values = true)]
    #[serde(skip)]
    x: Vec<String>,
}

#[derive(Args, Serialize, Debug)]
pub struct MatrixArgs {
    /// Matrix file (CSV with header "d,N", or JSON)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<PathBuf>,
    /// Feasibility tolerance of the reduction LP
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
pub struct WitnessArgs {
    /// Dimension d (the matrix has 2^(d-1) columns)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub seed: u64,
    pub form: Form,
    pub matrix: Option<PathBuf>,
    pub x: Vec<Vec<f64>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { seed: 0, form: Form::Analysis, matrix: None, x: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub seed: u64,
    pub matrix: Option<PathBuf>,
    pub tol: f64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self { seed: 0, matrix: None, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessConfig {
    pub seed: u64,
    pub dim: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self { seed: 0, dim: 2 }
    }
}

pub fn run(g: &Globals, cmd: &NormCommand) -> CliResult<()> {
    match cmd {
        NormCommand::Eval(a) => eval(g, a),
        NormCommand::Reduce(a) => reduce(g, a),
        NormCommand::Dualize(a) => dualize(g, a),
        NormCommand::Witness(a) => witness(g, a),
    }
}

type NormFn = dyn Fn(&[f64]) -> polyreg_core::Result<f64>;

fn load(matrix: Option<&Path>) -> CliResult<DMatrix<f64>> {
    let path = matrix.ok_or_else(|| CliError::Parse("a matrix file is required (--matrix)".into()))?;
    with_path(path, read_matrix(path))
}

/// Norm commands print to stdout and write files only when `--out` is given.
fn out_dir(g: &Globals) -> CliResult<Option<OutDir>> {
    g.out.as_deref().map(OutDir::create).transpose()
}

fn eval(g: &Globals, args: &EvalArgs) -> CliResult<()> {
    let mut flags = g.flags(args)?;
    if !args.x.is_empty() {
        let xs = args.x.iter().map(|s| parse_vector(s)).collect::<CliResult<Vec<_>>>()?;
        flags.insert("x".into(), json!(xs));
    }
    let cfg: EvalConfig = resolve("norm eval", g.config.as_deref(), Value::Object(flags))?;
    let m = load(cfg.matrix.as_deref())?;
    if cfg.x.is_empty() {
        return Err(CliError::Parse("no vectors given (--x \"1,2\")".into()));
    }
    let value: Box<NormFn> = match cfg.form {
        Form::Analysis => {
            let f = FacetMatrix::new(m)?;
            Box::new(move |x| analysis_norm(&f, x))
        }
        Form::Synthesis => {
            let v = VertexDictionary::new(m)?;
            Box::new(move |x| synthesis_norm(&v, x).map(|r| r.0))
        }
        Form::WeightedL1 => {
            let l = RegularizationOperator::new(m.transpose())?;
            Box::new(move |x| weighted_l1_norm(&l, x))
        }
        Form::Zonotope => {
            let l = RegularizationOperator::new(m.transpose())?;
            Box::new(move |x| zonotope_gauge(&l, x))
        }
    };
    let values = cfg.x.iter().map(|x| value(x)).collect::<polyreg_core::Result<Vec<f64>>>()?;
    for v in &values {
        println!("{}", format_number(*v));
    }
    if let Some(out) = out_dir(g)? {
        out.write_resolved("norm eval", &cfg)?;
        let vals: Vec<Value> = values.iter().map(|v| num(*v)).collect();
        out.write_json("metrics.json", &json!({ "form": cfg.form, "values": vals }))?;
        let d = cfg.x[0].len();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<f64>> = cfg
            .x
            .iter()
            .zip(&values)
            .map(|(x, v)| x.iter().copied().chain([*v]).collect())
            .collect();
        out.write_csv("report.csv", &header, &rows)?;
    }
    Ok(())
}

fn emit(g: &Globals, command: &str, cfg: &impl Serialize, input_cols: usize, m: &DMatrix<f64>) -> CliResult<()> {
    print!("{}", format_matrix_csv(m));
    if let Some(out) = out_dir(g)? {
        out.write_resolved(command, cfg)?;
        write_matrix(&out.path("result.csv"), m)?;
        out.write_json(
            "metrics.json",
            &json!({ "dim": m.nrows(), "input_columns": input_cols, "output_columns": m.ncols() }),
        )?;
    }
    Ok(())
}

fn reduce(g: &Globals, args: &MatrixArgs) -> CliResult<()> {
    let cfg: MatrixConfig = resolve("norm reduce", g.config.as_deref(), Value::Object(g.flags(args)?))?;
    let m = load(cfg.matrix.as_deref())?;
    let n = m.ncols();
    let r = extreme_points(&VertexDictionary::new(m)?, cfg.tol)?;
    emit(g, "norm reduce", &cfg, n, r.matrix())
}

fn dualize(g: &Globals, args: &MatrixArgs) -> CliResult<()> {
    let cfg: MatrixConfig = resolve("norm dualize", g.config.as_deref(), Value::Object(g.flags(args)?))?;
    let m = load(cfg.matrix.as_deref())?;
    let n = m.ncols();
    let f = facets_from_vertices(&VertexDictionary::new(m)?)?;
    emit(g, "norm dualize", &cfg, n, f.matrix())
}

fn witness(g: &Globals, args: &WitnessArgs) -> CliResult<()> {
    let cfg: WitnessConfig = resolve("norm witness", g.config.as_deref(), Value::Object(g.flags(args)?))?;
    let (f, _) = l1_linf_witness(cfg.dim)?;
    emit(g, "norm witness", &cfg, 0, f.matrix())
}
