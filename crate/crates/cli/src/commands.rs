//! Command-line surface: argument definitions, command dispatch, reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use randspec_core::calculus::{extended_field, integrate_bounded, spectral_decompose, CellSpec, SpectralDecomposition};
use randspec_core::field::{adjoint_field, classify, compose, predicates, OperatorField};
use randspec_core::measure::{validate_rpovm, MeasurableSpace, Rpovm};
use randspec_core::transforms::{spectral_theorem_pipeline, tc_field, transform_pair, PipelineConfig};
use serde::Serialize;

use crate::ensemble::{generate_ensemble, EnsembleKind, EnsembleParams};
use crate::error::CliError;
use crate::scenario::{
    complex_spec, from_json, load_scenario, to_json, CellSpecJson, Complex, FieldSpec, Model, RegionSpec, Scenario,
};

#[derive(Debug, Parser)]
#[command(name = "randspec", version, about = "Spectral analysis of random operator fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check RPOVM axioms and report field predicates.
    Validate(Common),
    /// Random adjoint of a field.
    Adjoint(Common),
    /// Composition `B A` of `--field B --field A`.
    Compose(Common),
    /// Norm function, moments and continuity classes of fields.
    Classify(Common),
    /// Bounded transform `Z` and defect `C`, or the inverse with `--inverse`.
    Transform {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        inverse: bool,
    },
    /// Spectral decomposition of a normal field, written as CSV.
    Decompose(Common),
    /// Spectral theorem through the bounded transform, with residual report.
    Pipeline(Common),
    /// Spectral integral of a function against a measure.
    Integrate(Common),
    /// Write a seeded random scenario.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Field name; repeat for commands that take several.
    #[arg(long = "field")]
    pub fields: Vec<String>,
    #[arg(long)]
    pub function: Option<String>,
    /// Measure to integrate against (defaults to the only one).
    #[arg(long)]
    pub measure: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario's clustering and predicate tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// `auto` or a JSON file with a list of cells.
    #[arg(long)]
    pub cells: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Where to write the scenario.
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub kind: EnsembleKind,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub atoms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disorder strength for the Anderson ensemble.
    #[arg(long, default_value_t = 1.0)]
    pub disorder: f64,
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    ValidationFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::ValidationFailed => 2,
        }
    }
}

/// Field payloads produced by a command.
#[derive(Debug, Serialize)]
pub struct FieldResults {
    pub command: &'static str,
    pub fields: BTreeMap<String, FieldSpec>,
}

#[derive(Debug, Serialize)]
struct PredicateReport {
    selfadjoint: bool,
    normal: bool,
    unitary: bool,
    projection: bool,
    pure_contraction: bool,
}

#[derive(Debug, Serialize)]
struct AxiomReport {
    axiom: String,
    passed: bool,
    worst_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    location: Option<String>,
}

#[derive(Debug, Serialize)]
struct MeasureReport {
    passed: bool,
    checks: Vec<AxiomReport>,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    passed: bool,
    fields: BTreeMap<String, Option<PredicateReport>>,
    measures: BTreeMap<String, MeasureReport>,
}

#[derive(Debug, Serialize)]
struct ClassifyReport {
    r: Vec<f64>,
    ess_sup: f64,
    second_moment: f64,
    hs_norm_sq: f64,
    continuous_l0: bool,
    continuous_l2: bool,
    hilbert_schmidt: bool,
}

#[derive(Debug, Serialize)]
struct TransformReport {
    defect_identity_residual: f64,
    defect_min_eigenvalue: f64,
    defect_max_eigenvalue: f64,
    max_z_norm: f64,
}

#[derive(Debug, Serialize)]
struct TransformResults {
    command: &'static str,
    check: TransformReport,
    fields: BTreeMap<String, FieldSpec>,
}

#[derive(Debug, Serialize)]
struct CellReport {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<RegionSpec>,
    representative: Complex,
}

#[derive(Debug, Serialize)]
struct PipelineResults {
    passed: bool,
    selfadjoint: bool,
    reconstruction_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_atom: Option<String>,
    alignment_residual: f64,
    max_disc_radius: f64,
    max_imag_representative: f64,
    disc_cells: Vec<CellReport>,
    cells: Vec<CellReport>,
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

struct Loaded {
    scenario: Scenario,
    model: Model,
    tol: f64,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let scenario = load_scenario(&common.scenario)?;
    let model = scenario.model()?;
    let tol = common.tol.unwrap_or(scenario.tolerances.tol);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::InvalidParameter(format!("tolerance must be finite and non-negative, got {tol}")));
    }
    Ok(Loaded { scenario, model, tol })
}

impl Loaded {
    /// The `index`-th `--field`, or the only field when none is named.
    fn field(&self, common: &Common, index: usize) -> Result<(&str, &OperatorField, &FieldSpec), CliError> {
        let name = match common.fields.get(index) {
            Some(name) => name.as_str(),
            None if index == 0 && self.model.fields.len() == 1 => self.model.fields.keys().next().expect("one field"),
            None => {
                return Err(CliError::InvalidParameter(format!(
                    "missing --field (argument {} of this command)",
                    index + 1
                )))
            }
        };
        self.named(name)
    }

    fn named(&self, name: &str) -> Result<(&str, &OperatorField, &FieldSpec), CliError> {
        match (self.model.fields.get_key_value(name), self.scenario.fields.get(name)) {
            (Some((key, field)), Some(spec)) => Ok((key.as_str(), field, spec)),
            _ => Err(CliError::UnknownName {
                kind: "field",
                name: name.to_string(),
            }),
        }
    }

    fn measure(&self, common: &Common) -> Result<(&str, &Rpovm), CliError> {
        let name = match &common.measure {
            Some(name) => name.as_str(),
            None if self.model.measures.len() == 1 => self.model.measures.keys().next().expect("one measure"),
            None => return Err(CliError::InvalidParameter("missing --measure".into())),
        };
        self.model
            .measures
            .get_key_value(name)
            .map(|(k, m)| (k.as_str(), m))
            .ok_or_else(|| CliError::UnknownName {
                kind: "measure",
                name: name.to_string(),
            })
    }
}

fn cells_report(d: &SpectralDecomposition) -> Vec<CellReport> {
    d.measure
        .gamma()
        .cells()
        .iter()
        .zip(&d.representatives)
        .map(|(cell, &rep)| CellReport {
            id: cell.id.clone(),
            region: cell.region.as_ref().map(RegionSpec::from_region),
            representative: complex_spec(rep),
        })
        .collect()
}

fn validate(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let mut fields = BTreeMap::new();
    for (name, field) in &loaded.model.fields {
        let report = if field.is_square() {
            let p = predicates(field, loaded.tol)?;
            Some(PredicateReport {
                selfadjoint: p.selfadjoint,
                normal: p.normal,
                unitary: p.unitary,
                projection: p.projection,
                pure_contraction: p.pure_contraction,
            })
        } else {
            None
        };
        fields.insert(name.clone(), report);
    }
    let measures: BTreeMap<String, MeasureReport> = loaded
        .model
        .measures
        .iter()
        .map(|(name, e)| {
            let report = validate_rpovm(e, loaded.scenario.tolerances.validation);
            let checks = report
                .checks
                .iter()
                .map(|c| AxiomReport {
                    axiom: c.axiom.to_string(),
                    passed: c.passed,
                    worst_residual: c.worst_residual,
                    location: c.location.clone(),
                })
                .collect();
            (
                name.clone(),
                MeasureReport {
                    passed: report.passed(),
                    checks,
                },
            )
        })
        .collect();
    let passed = measures.values().all(|m| m.passed);
    let report = ValidateReport {
        passed,
        fields,
        measures,
    };
    emit(common.out.as_deref(), &to_json(&report)?, stdout)?;
    Ok(if passed { Status::Ok } else { Status::ValidationFailed })
}

fn adjoint(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (name, field, spec) = loaded.field(common, 0)?;
    let result = FieldResults {
        command: "adjoint",
        fields: BTreeMap::from([(
            format!("{name}.adjoint"),
            FieldSpec::from_field(&adjoint_field(field), &spec.codomain, &spec.domain),
        )]),
    };
    emit(common.out.as_deref(), &to_json(&result)?, stdout)?;
    Ok(Status::Ok)
}

fn compose_cmd(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (b_name, b, b_spec) = loaded.field(common, 0)?;
    let (a_name, a, a_spec) = loaded.field(common, 1)?;
    if b_spec.domain != a_spec.codomain {
        return Err(CliError::schema(
            format!("fields.{b_name}.domain"),
            format!("`{}` does not match the codomain `{}` of {a_name}", b_spec.domain, a_spec.codomain),
        ));
    }
    let result = FieldResults {
        command: "compose",
        fields: BTreeMap::from([(
            format!("{b_name}.{a_name}"),
            FieldSpec::from_field(&compose(b, a)?, &a_spec.domain, &b_spec.codomain),
        )]),
    };
    emit(common.out.as_deref(), &to_json(&result)?, stdout)?;
    Ok(Status::Ok)
}

fn classify_cmd(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let names: Vec<String> = if common.fields.is_empty() {
        loaded.model.fields.keys().cloned().collect()
    } else {
        common.fields.clone()
    };
    let mut reports = BTreeMap::new();
    for name in &names {
        let (name, field, _) = loaded.named(name)?;
        let c = classify(field);
        reports.insert(
            name.to_string(),
            ClassifyReport {
                r: c.r.values().iter().map(|z| z.re).collect(),
                ess_sup: c.ess_sup,
                second_moment: c.second_moment,
                hs_norm_sq: c.hs_norm_sq,
                continuous_l0: c.continuous_l0,
                continuous_l2: c.continuous_l2,
                hilbert_schmidt: c.hilbert_schmidt,
            },
        );
    }
    emit(common.out.as_deref(), &to_json(&reports)?, stdout)?;
    Ok(Status::Ok)
}

fn transform(common: &Common, inverse: bool, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (name, field, spec) = loaded.field(common, 0)?;
    let text = if inverse {
        let t = tc_field(field)?;
        to_json(&FieldResults {
            command: "transform --inverse",
            fields: BTreeMap::from([(format!("T[{name}]"), FieldSpec::from_field(&t, &spec.domain, &spec.codomain))]),
        })?
    } else {
        let pair = transform_pair(field)?;
        let c = pair.check()?;
        to_json(&TransformResults {
            command: "transform",
            check: TransformReport {
                defect_identity_residual: c.defect_identity_residual,
                defect_min_eigenvalue: c.defect_min_eigenvalue,
                defect_max_eigenvalue: c.defect_max_eigenvalue,
                max_z_norm: c.max_z_norm,
            },
            fields: BTreeMap::from([
                (
                    format!("C[{name}]"),
                    FieldSpec::from_field(&pair.defect, &spec.domain, &spec.domain),
                ),
                (
                    format!("Z[{name}]"),
                    FieldSpec::from_field(&pair.transformed, &spec.domain, &spec.codomain),
                ),
            ]),
        })?
    };
    emit(common.out.as_deref(), &text, stdout)?;
    Ok(Status::Ok)
}

fn given_cells(common: &Common, model: &Model) -> Result<Option<MeasurableSpace>, CliError> {
    match common.cells.as_deref() {
        Some("auto") => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let cells: Vec<CellSpecJson> = from_json(&text)?;
            let space = MeasurableSpace::new(
                cells
                    .into_iter()
                    .map(|c| randspec_core::measure::Cell::new(c.id, c.region.map(RegionSpec::region)))
                    .collect(),
            )
            .map_err(|e| CliError::schema("cells", e))?;
            Ok(Some(space))
        }
        None => Ok(model.cells.clone()),
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV rows `atom_id, weight, cell_id, quantity, value_re, value_im`: for
/// every atom and cell the rank of `E(γ)(ω)` and `E_{x,x}` for each basis
/// vector `x = e_k` (quantity `E_xx[e<k>]`, 1-based).
pub fn decomposition_csv(space_atoms: &[String], weights: &[f64], d: &SpectralDecomposition) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["atom_id", "weight", "cell_id", "quantity", "value_re", "value_im"])?;
    let dim = d.measure.dim();
    for (w, atom) in space_atoms.iter().enumerate() {
        for (c, cell) in d.measure.gamma().cells().iter().enumerate() {
            let m = d.measure.cell(c).at(w);
            let weight = fmt_float(weights[w]);
            let rank = m.trace();
            writer.write_record([
                atom.as_str(),
                &weight,
                &cell.id,
                "rank",
                &fmt_float(rank.re),
                &fmt_float(rank.im),
            ])?;
            for k in 0..dim {
                let value = m[(k, k)];
                writer.write_record([
                    atom.as_str(),
                    &weight,
                    &cell.id,
                    &format!("E_xx[e{}]", k + 1),
                    &fmt_float(value.re),
                    &fmt_float(value.im),
                ])?;
            }
        }
    }
    let bytes = writer.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn decompose(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (_, field, _) = loaded.field(common, 0)?;
    let cells = given_cells(common, &loaded.model)?;
    let spec = match &cells {
        Some(space) => CellSpec::Given(space),
        None => CellSpec::Auto,
    };
    let d = spectral_decompose(field, spec, loaded.tol)?;
    let space = &loaded.model.space;
    let csv = decomposition_csv(space.atoms(), space.weights(), &d)?;
    emit(common.out.as_deref(), &csv, stdout)?;
    Ok(Status::Ok)
}

fn pipeline(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (_, field, _) = loaded.field(common, 0)?;
    let config = PipelineConfig {
        tol: loaded.tol,
        pipeline_tol: loaded.scenario.tolerances.pipeline,
        ..PipelineConfig::default()
    };
    let out = spectral_theorem_pipeline(field, &config)?;
    let r = &out.report;
    let result = PipelineResults {
        passed: r.passed,
        selfadjoint: r.selfadjoint,
        reconstruction_residual: r.reconstruction_residual,
        worst_atom: r.worst_atom.clone(),
        alignment_residual: r.alignment_residual,
        max_disc_radius: r.max_disc_radius,
        max_imag_representative: r.max_imag_representative,
        disc_cells: cells_report(&out.disc),
        cells: cells_report(&out.measure),
    };
    emit(common.out.as_deref(), &to_json(&result)?, stdout)?;
    Ok(if r.passed { Status::Ok } else { Status::ValidationFailed })
}

fn integrate(common: &Common, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let loaded = load(common)?;
    let (measure_name, e) = loaded.measure(common)?;
    let name = common
        .function
        .as_deref()
        .ok_or_else(|| CliError::InvalidParameter("missing --function".into()))?;
    let f = loaded.model.functions.get(name).ok_or_else(|| CliError::UnknownName {
        kind: "function",
        name: name.to_string(),
    })?;
    if f.len() != e.len() {
        return Err(CliError::shape(
            format!("functions.{name}"),
            format!("measure `{measure_name}` has {} cells, function has {} values", e.len(), f.len()),
        ));
    }
    let (key, field) = if f.is_bounded() {
        (format!("I[{name}]"), integrate_bounded(e, f)?)
    } else {
        (format!("Ĩ[{name}]"), extended_field(e, f)?)
    };
    let hilbert = &loaded.scenario.measures[measure_name].hilbert;
    let result = FieldResults {
        command: "integrate",
        fields: BTreeMap::from([(key, FieldSpec::from_field(&field, hilbert, hilbert))]),
    };
    emit(common.out.as_deref(), &to_json(&result)?, stdout)?;
    Ok(Status::Ok)
}

fn generate(args: &GenerateArgs) -> Result<Status, CliError> {
    let scenario = generate_ensemble(&EnsembleParams {
        kind: args.kind,
        dim: args.dim,
        atoms: args.atoms,
        seed: args.seed,
        disorder: args.disorder,
    })?;
    crate::scenario::save_results(&args.scenario, &scenario)?;
    Ok(Status::Ok)
}

/// Runs one command, writing its primary output to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Status, CliError> {
    match &cli.command {
        Command::Validate(c) => validate(c, stdout),
        Command::Adjoint(c) => adjoint(c, stdout),
        Command::Compose(c) => compose_cmd(c, stdout),
        Command::Classify(c) => classify_cmd(c, stdout),
        Command::Transform { common, inverse } => transform(common, *inverse, stdout),
        Command::Decompose(c) => decompose(c, stdout),
        Command::Pipeline(c) => pipeline(c, stdout),
        Command::Integrate(c) => integrate(c, stdout),
        Command::Generate(args) => generate(args),
    }
}
