//! Scenario files: UTF-8 JSON with complex numbers as `[re, im]`, matrices as
//! row-major nested arrays, and `"inf"` for an infinite function value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use randspec_core::calculus::{ExtendedValue, MeasurableFunction};
use randspec_core::field::OperatorField;
use randspec_core::linalg::{ComplexMatrix, C64};
use randspec_core::measure::{Cell, MeasurableSpace, Region, Rpovm};
use randspec_core::prob::{ProbError, SampleSpace};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

pub type Complex = [f64; 2];
pub type MatrixSpec = Vec<Vec<Complex>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: SpaceSpec,
    pub hilbert_dims: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, FieldSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Vec<FunctionValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<CellSpecJson>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub measures: BTreeMap<String, MeasureSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Tolerances::is_default")]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub atoms: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub domain: String,
    pub codomain: String,
    /// One matrix per atom, in atom order.
    pub matrices: Vec<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpecJson {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
}

/// `{"box": [re_lo, re_hi, im_lo, im_hi]}` or `{"interval": [lo, hi]}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Box([f64; 4]),
    Interval([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// Name of the Hilbert space the projections act on.
    pub hilbert: String,
    pub cells: Vec<MeasureCellSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureCellSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    pub matrices: Vec<MatrixSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Clustering and predicate tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Residual bound for RPOVM validation.
    #[serde(default = "default_validation")]
    pub validation: f64,
    /// Certification bound for the pipeline report.
    #[serde(default = "default_pipeline")]
    pub pipeline: f64,
}

fn default_tol() -> f64 {
    randspec_core::linalg::CLUSTER_TOL
}

fn default_validation() -> f64 {
    1e-10
}

fn default_pipeline() -> f64 {
    randspec_core::transforms::PIPELINE_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            validation: default_validation(),
            pipeline: default_pipeline(),
        }
    }
}

impl Tolerances {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// A cell value of a measurable function: finite complex or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionValue {
    Finite(Complex),
    Infinite,
}

impl Serialize for FunctionValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            FunctionValue::Finite(z) => z.serialize(serializer),
            FunctionValue::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for FunctionValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = FunctionValue;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [re, im] pair or the string \"inf\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<FunctionValue, E> {
                if v == "inf" {
                    Ok(FunctionValue::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, seq: A) -> Result<FunctionValue, A::Error> {
                Complex::deserialize(de::value::SeqAccessDeserializer::new(seq)).map(FunctionValue::Finite)
            }
        }

        deserializer.deserialize_any(ValueVisitor)
    }
}

pub fn complex(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn complex_spec(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn matrix_spec(m: &ComplexMatrix) -> MatrixSpec {
    (0..m.rows()).map(|i| m.row(i).iter().map(|&z| complex_spec(z)).collect()).collect()
}

impl FieldSpec {
    pub fn from_field(field: &OperatorField, domain: &str, codomain: &str) -> Self {
        Self {
            domain: domain.to_string(),
            codomain: codomain.to_string(),
            matrices: field.matrices().iter().map(matrix_spec).collect(),
        }
    }
}

impl RegionSpec {
    pub fn region(self) -> Region {
        match self {
            RegionSpec::Box([re_lo, re_hi, im_lo, im_hi]) => Region::Box {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            },
            RegionSpec::Interval([lo, hi]) => Region::Interval { lo, hi },
        }
    }

    pub fn from_region(region: &Region) -> Self {
        match *region {
            Region::Box {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            } => RegionSpec::Box([re_lo, re_hi, im_lo, im_hi]),
            Region::Interval { lo, hi } => RegionSpec::Interval([lo, hi]),
        }
    }
}

/// A scenario with every payload converted to library types.
#[derive(Clone, Debug)]
pub struct Model {
    pub space: Arc<SampleSpace>,
    pub fields: BTreeMap<String, OperatorField>,
    pub functions: BTreeMap<String, MeasurableFunction>,
    pub measures: BTreeMap<String, Rpovm>,
    pub cells: Option<MeasurableSpace>,
}

fn build_matrix(spec: &MatrixSpec, rows: usize, cols: usize, key: &str) -> Result<ComplexMatrix, CliError> {
    if spec.len() != rows {
        return Err(CliError::shape(key, format!("expected {rows} rows, found {}", spec.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in spec.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::shape(
                format!("{key}[{i}]"),
                format!("expected {cols} columns, found {}", row.len()),
            ));
        }
        data.extend(row.iter().map(|&z| complex(z)));
    }
    Ok(ComplexMatrix::from_row_major(rows, cols, data)?)
}

fn build_matrices(
    specs: &[MatrixSpec],
    atoms: usize,
    rows: usize,
    cols: usize,
    key: &str,
) -> Result<Vec<ComplexMatrix>, CliError> {
    if specs.len() != atoms {
        return Err(CliError::shape(
            key,
            format!("expected one matrix per atom ({atoms}), found {}", specs.len()),
        ));
    }
    specs
        .iter()
        .enumerate()
        .map(|(w, m)| build_matrix(m, rows, cols, &format!("{key}[{w}]")))
        .collect()
}

fn build_cells(cells: &[CellSpecJson], key: &str) -> Result<MeasurableSpace, CliError> {
    MeasurableSpace::new(
        cells
            .iter()
            .map(|c| Cell::new(c.id.clone(), c.region.map(RegionSpec::region)))
            .collect(),
    )
    .map_err(|e| CliError::schema(key, e))
}

impl Scenario {
    pub fn dim(&self, name: &str, key: &str) -> Result<usize, CliError> {
        match self.hilbert_dims.get(name) {
            Some(&0) => Err(CliError::schema(format!("hilbert_dims.{name}"), "dimension must be at least 1")),
            Some(&d) => Ok(d),
            None => Err(CliError::schema(key, format!("unknown Hilbert space `{name}`"))),
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let space = SampleSpace::new(self.space.atoms.clone(), self.space.weights.clone()).map_err(|e| match e {
            ProbError::LengthMismatch { .. } => CliError::shape("space.weights", e),
            ProbError::DuplicateAtom(_) | ProbError::Empty => CliError::schema("space.atoms", e),
            _ => CliError::schema("space.weights", e),
        })?;
        let atoms = space.len();

        let mut fields = BTreeMap::new();
        for (name, spec) in &self.fields {
            let key = format!("fields.{name}");
            let cols = self.dim(&spec.domain, &format!("{key}.domain"))?;
            let rows = self.dim(&spec.codomain, &format!("{key}.codomain"))?;
            let matrices = build_matrices(&spec.matrices, atoms, rows, cols, &format!("{key}.matrices"))?;
            fields.insert(name.clone(), OperatorField::new(space.clone(), matrices)?);
        }

        let functions = self
            .functions
            .iter()
            .map(|(name, values)| {
                let values = values
                    .iter()
                    .map(|v| match *v {
                        FunctionValue::Finite(z) => ExtendedValue::Finite(complex(z)),
                        FunctionValue::Infinite => ExtendedValue::Infinite,
                    })
                    .collect();
                (name.clone(), MeasurableFunction::new(values))
            })
            .collect();

        let mut measures = BTreeMap::new();
        for (name, spec) in &self.measures {
            let key = format!("measures.{name}");
            let dim = self.dim(&spec.hilbert, &format!("{key}.hilbert"))?;
            if spec.cells.is_empty() {
                return Err(CliError::schema(format!("{key}.cells"), "a measure needs at least one cell"));
            }
            let gamma = MeasurableSpace::new(
                spec.cells
                    .iter()
                    .map(|c| Cell::new(c.id.clone(), c.region.map(RegionSpec::region)))
                    .collect(),
            )
            .map_err(|e| CliError::schema(format!("{key}.cells"), e))?;
            let cell_fields = spec
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let matrices = build_matrices(&c.matrices, atoms, dim, dim, &format!("{key}.cells[{i}].matrices"))?;
                    Ok(OperatorField::new(space.clone(), matrices)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            measures.insert(name.clone(), Rpovm::new(gamma, cell_fields)?);
        }

        let cells = self.cells.as_deref().map(|c| build_cells(c, "cells")).transpose()?;

        Ok(Model {
            space,
            fields,
            functions,
            measures,
            cells,
        })
    }
}

fn parse_error(e: serde_json::Error) -> CliError {
    CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses JSON text into `T`, reporting syntax errors by position and schema
/// errors by the path of the offending key.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    // Syntax first, so malformed text is reported by position.
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        CliError::schema(key, e.into_inner())
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = from_json(text)?;
    scenario.model()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text)
}

pub fn to_json<T: Serialize>(payload: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(payload)?;
    text.push('\n');
    Ok(text)
}

/// Writes `payload` as pretty JSON. Equal payloads produce identical bytes.
pub fn save_results<T: Serialize>(path: impl AsRef<Path>, payload: &T) -> Result<(), CliError> {
    let path = path.as_ref();
    std::fs::write(path, to_json(payload)?).map_err(|e| CliError::io(path, e))
}
