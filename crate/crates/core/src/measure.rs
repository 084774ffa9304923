//! Random projection-operator-valued measures on finite measurable spaces.
//!
//! `Γ` is a finite list of cells and `Σ` its power set, so a measure is
//! determined by one projection field per cell and `E(σ) = Σ_{γ∈σ} E(γ)`.
//! Countable additivity reduces to finite additivity because all but
//! finitely many sets of a disjoint sequence must be empty.
//!
//! Cells may carry a [`Region`] of the complex plane or the real line. The
//! regions are half-open, which keeps point assignment deterministic.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{FieldError, OperatorField};
use crate::linalg::{ComplexMatrix, C64};
use crate::prob::{inner, same_space, vector_norm, RandomScalar, RandomVector, SampleSpace};

/// Exhaustive subset validation up to this many cells.
pub const EXHAUSTIVE_CELLS: usize = 12;
/// Subsets drawn when `|Γ|` is too large to enumerate.
pub const SAMPLED_SUBSETS: usize = 200;
/// Exhaustive subset-pair multiplicativity up to this many cells.
pub const EXHAUSTIVE_PAIR_CELLS: usize = 5;
const SUBSET_SEED: u64 = 0x5EED_CE11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("measurable space has no cells")]
    EmptyGamma,
    #[error("cell id {0:?} appears more than once")]
    DuplicateCell(String),
    #[error("expected {expected} cell fields, found {found}")]
    CellCount { expected: usize, found: usize },
    #[error("cell field {cell:?} is {found:?}, expected a square {dim}x{dim} field")]
    CellShape {
        cell: String,
        dim: usize,
        found: (usize, usize),
    },
    #[error("cell fields live on different sample spaces")]
    SpaceMismatch,
    #[error("cell map has no image for cell {cell:?}")]
    IncompleteMap { cell: String },
    #[error("cell {cell:?} maps to target index {target}, which does not exist")]
    UnknownTarget { cell: String, target: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Half-open region attached to a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `[re_lo, re_hi) × [im_lo, im_hi)` in the complex plane.
    Box {
        re_lo: f64,
        re_hi: f64,
        im_lo: f64,
        im_hi: f64,
    },
    /// `[lo, hi)` on the real axis.
    Interval { lo: f64, hi: f64 },
}

impl Region {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Box {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            } => re_lo <= z.re && z.re < re_hi && im_lo <= z.im && z.im < im_hi,
            Region::Interval { lo, hi } => z.im == 0.0 && lo <= z.re && z.re < hi,
        }
    }

    /// Lower-left corner, the tie-break key for overlapping regions.
    pub fn corner(&self) -> (f64, f64) {
        match *self {
            Region::Box { re_lo, im_lo, .. } => (re_lo, im_lo),
            Region::Interval { lo, .. } => (lo, 0.0),
        }
    }

    pub fn center(&self) -> C64 {
        match *self {
            Region::Box {
                re_lo,
                re_hi,
                im_lo,
                im_hi,
            } => C64::new(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)),
            Region::Interval { lo, hi } => C64::new(0.5 * (lo + hi), 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: String,
    pub region: Option<Region>,
}

impl Cell {
    pub fn new(id: impl Into<String>, region: Option<Region>) -> Self {
        Self {
            id: id.into(),
            region,
        }
    }
}

/// Finite measurable space `(Γ, Σ)` with `Σ` the power set of the cells.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurableSpace {
    cells: Vec<Cell>,
}

impl MeasurableSpace {
    pub fn new(cells: Vec<Cell>) -> Result<Self, MeasureError> {
        if cells.is_empty() {
            return Err(MeasureError::EmptyGamma);
        }
        for (i, c) in cells.iter().enumerate() {
            if cells[..i].iter().any(|o| o.id == c.id) {
                return Err(MeasureError::DuplicateCell(c.id.clone()));
            }
        }
        Ok(Self { cells })
    }

    /// `n` unlabeled cells named `c0, c1, …`.
    pub fn unlabeled(n: usize) -> Result<Self, MeasureError> {
        Self::new((0..n).map(|i| Cell::new(format!("c{i}"), None)).collect())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    /// Cell whose region contains `z`; ties go to the lexicographically
    /// smallest lower-left corner.
    pub fn locate(&self, z: C64) -> Option<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.region.filter(|r| r.contains(z)).map(|r| (i, r.corner())))
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.total_cmp(&b.1 .1)))
            .map(|(i, _)| i)
    }

    pub fn full_set(&self) -> CellSet {
        (0..self.len()).collect()
    }
}

/// A member of `Σ`: a set of cell indices.
pub type CellSet = BTreeSet<usize>;

/// Every subset of `{0, …, n-1}`, ordered by bitmask.
pub fn all_subsets(n: usize) -> Vec<CellSet> {
    assert!(n < 31, "refusing to enumerate 2^{n} subsets");
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect()
}

/// `count` random subsets, each cell included with probability ½.
pub fn sampled_subsets(n: usize, count: usize, seed: u64) -> Vec<CellSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect())
        .collect()
}

/// Random projection-operator-valued measure: one projection field per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Rpovm {
    gamma: MeasurableSpace,
    space: Arc<SampleSpace>,
    dim: usize,
    cells: Vec<OperatorField>,
}

impl Rpovm {
    /// Checks shapes only; the measure axioms are checked by [`validate_rpovm`].
    pub fn new(gamma: MeasurableSpace, cells: Vec<OperatorField>) -> Result<Self, MeasureError> {
        if cells.len() != gamma.len() {
            return Err(MeasureError::CellCount {
                expected: gamma.len(),
                found: cells.len(),
            });
        }
        let space = cells[0].space().clone();
        let dim = cells[0].dim_in();
        for (cell, field) in gamma.cells.iter().zip(&cells) {
            if !same_space(&space, field.space()) {
                return Err(MeasureError::SpaceMismatch);
            }
            if field.dim_in() != dim || field.dim_out() != dim {
                return Err(MeasureError::CellShape {
                    cell: cell.id.clone(),
                    dim,
                    found: (field.dim_out(), field.dim_in()),
                });
            }
        }
        Ok(Self {
            gamma,
            space,
            dim,
            cells,
        })
    }

    pub fn gamma(&self) -> &MeasurableSpace {
        &self.gamma
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> &OperatorField {
        &self.cells[i]
    }

    pub fn cell_fields(&self) -> &[OperatorField] {
        &self.cells
    }

    fn eval_at(&self, atom: usize, set: &CellSet) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for &i in set {
            acc = &acc + self.cells[i].at(atom);
        }
        acc
    }

    /// `E(σ) = Σ_{γ∈σ} E(γ)`.
    pub fn eval(&self, set: &CellSet) -> OperatorField {
        OperatorField::from_fn(self.space.clone(), |w| self.eval_at(w, set))
            .expect("cell fields share one shape")
    }

    /// `E(Γ)`.
    pub fn total(&self) -> OperatorField {
        self.eval(&self.gamma.full_set())
    }

    /// True when `E(cell)` vanishes (Frobenius ≤ `tol`) on every
    /// positive-weight atom.
    pub fn is_null_cell(&self, cell: usize, tol: f64) -> bool {
        self.space
            .support()
            .all(|w| self.cells[cell].at(w).frobenius_norm() <= tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    /// Every `E(γ)` is a projection field.
    ProjectionValued,
    /// `E(σ ∪ τ) = E(σ) + E(τ)` for disjoint `σ, τ`.
    Additivity,
    /// `E(Γ) = J_H`.
    Completeness,
    /// `E(∅) = O_H`.
    EmptySet,
    /// `E(σ)E(τ) = E(σ ∩ τ)`, including pairwise orthogonality of cells.
    Multiplicativity,
    /// `E(σ)` is a projection field for sampled `σ`.
    SetProjections,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::ProjectionValued => "projection-valued",
            Axiom::Additivity => "additivity",
            Axiom::Completeness => "completeness",
            Axiom::EmptySet => "empty-set",
            Axiom::Multiplicativity => "multiplicativity",
            Axiom::SetProjections => "set-projections",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Largest Frobenius residual seen (an upper bound on the operator-norm residual).
    pub worst_residual: f64,
    /// Where the worst residual occurred.
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks
            .iter()
            .find(|c| c.axiom == axiom)
            .expect("every axiom is checked")
    }
}

struct Worst {
    residual: f64,
    location: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Self {
            residual: 0.0,
            location: None,
        }
    }

    fn record(&mut self, residual: f64, location: impl FnOnce() -> String) {
        if residual > self.residual || (residual.is_nan() && !self.residual.is_nan()) {
            self.residual = residual;
            self.location = Some(location());
        }
    }

    fn finish(self, axiom: Axiom, tol: f64) -> AxiomCheck {
        AxiomCheck {
            axiom,
            passed: self.residual <= tol,
            worst_residual: self.residual,
            location: self.location,
        }
    }
}

fn projection_residual(m: &ComplexMatrix) -> f64 {
    let herm = (m - &m.adjoint()).frobenius_norm();
    let idem = (&(m * m) - m).frobenius_norm();
    herm.max(idem)
}

fn describe(set: &CellSet, gamma: &MeasurableSpace) -> String {
    let ids: Vec<&str> = set.iter().map(|&i| gamma.cells[i].id.as_str()).collect();
    format!("{{{}}}", ids.join(","))
}

/// Checks every measure axiom and its derived identities on `E`.
///
/// Subsets are enumerated exhaustively up to [`EXHAUSTIVE_CELLS`] cells and
/// sampled otherwise; subset pairs for multiplicativity are exhaustive up to
/// [`EXHAUSTIVE_PAIR_CELLS`] cells.
pub fn validate_rpovm(e: &Rpovm, tol: f64) -> ValidationReport {
    let n = e.len();
    let atoms = e.space.atoms();
    let support: Vec<usize> = e.space.support().collect();
    let identity = ComplexMatrix::identity(e.dim);

    let mut projection = Worst::new();
    for (c, field) in e.cells.iter().enumerate() {
        for &w in &support {
            projection.record(projection_residual(field.at(w)), || {
                format!("cell {} atom {}", e.gamma.cells[c].id, atoms[w])
            });
        }
    }

    let mut completeness = Worst::new();
    let full = e.gamma.full_set();
    for &w in &support {
        let r = (&e.eval_at(w, &full) - &identity).frobenius_norm();
        completeness.record(r, || format!("atom {}", atoms[w]));
    }

    let mut empty = Worst::new();
    for &w in &support {
        empty.record(e.eval_at(w, &CellSet::new()).frobenius_norm(), || format!("atom {}", atoms[w]));
    }

    let subsets = if n <= EXHAUSTIVE_CELLS {
        all_subsets(n)
    } else {
        sampled_subsets(n, SAMPLED_SUBSETS, SUBSET_SEED)
    };

    let mut set_projections = Worst::new();
    for set in &subsets {
        for &w in &support {
            set_projections.record(projection_residual(&e.eval_at(w, set)), || {
                format!("set {} atom {}", describe(set, &e.gamma), atoms[w])
            });
        }
    }

    let pairs: Vec<(CellSet, CellSet)> = if n <= EXHAUSTIVE_PAIR_CELLS {
        let all = all_subsets(n);
        all.iter()
            .flat_map(|a| all.iter().map(move |b| (a.clone(), b.clone())))
            .collect()
    } else {
        let lhs = sampled_subsets(n, SAMPLED_SUBSETS, SUBSET_SEED ^ 1);
        let rhs = sampled_subsets(n, SAMPLED_SUBSETS, SUBSET_SEED ^ 2);
        lhs.into_iter().zip(rhs).collect()
    };

    let mut multiplicativity = Worst::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for &w in &support {
                let r = (e.cells[i].at(w) * e.cells[j].at(w)).frobenius_norm();
                multiplicativity.record(r, || {
                    format!(
                        "cells {} and {} atom {}",
                        e.gamma.cells[i].id, e.gamma.cells[j].id, atoms[w]
                    )
                });
            }
        }
    }
    let mut additivity = Worst::new();
    for (a, b) in &pairs {
        let meet: CellSet = a.intersection(b).copied().collect();
        let disjoint_b: CellSet = b.difference(a).copied().collect();
        let join: CellSet = a.union(&disjoint_b).copied().collect();
        for &w in &support {
            let ea = e.eval_at(w, a);
            let eb = e.eval_at(w, b);
            let r = (&(&ea * &eb) - &e.eval_at(w, &meet)).frobenius_norm();
            multiplicativity.record(r, || {
                format!(
                    "sets {} and {} atom {}",
                    describe(a, &e.gamma),
                    describe(b, &e.gamma),
                    atoms[w]
                )
            });
            let r = (&e.eval_at(w, &join) - &(&ea + &e.eval_at(w, &disjoint_b))).frobenius_norm();
            additivity.record(r, || {
                format!(
                    "sets {} and {} atom {}",
                    describe(a, &e.gamma),
                    describe(&disjoint_b, &e.gamma),
                    atoms[w]
                )
            });
        }
    }

    ValidationReport {
        checks: vec![
            projection.finish(Axiom::ProjectionValued, tol),
            additivity.finish(Axiom::Additivity, tol),
            completeness.finish(Axiom::Completeness, tol),
            empty.finish(Axiom::EmptySet, tol),
            multiplicativity.finish(Axiom::Multiplicativity, tol),
            set_projections.finish(Axiom::SetProjections, tol),
        ],
    }
}

/// Per-cell values `E_{x,y}(γ)(ω) = ⟨E(γ)(ω) x, y⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarRandomMeasure {
    pub values: Vec<RandomScalar>,
}

impl ScalarRandomMeasure {
    pub fn eval(&self, set: &CellSet) -> RandomScalar {
        let space = self.values[0].space().clone();
        let sums = (0..space.len())
            .map(|w| set.iter().map(|&c| self.values[c].at(w)).sum())
            .collect();
        RandomScalar::new(space, sums).expect("finite sums of finite values")
    }

    pub fn total(&self) -> RandomScalar {
        self.eval(&(0..self.values.len()).collect())
    }
}

/// Per-cell values `E_x(γ)(ω) = E(γ)(ω) x`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorRandomMeasure {
    pub values: Vec<RandomVector>,
}

impl VectorRandomMeasure {
    pub fn eval(&self, set: &CellSet) -> RandomVector {
        let first = &self.values[0];
        let mut acc = RandomVector::zeros(first.space().clone(), first.dim());
        for &c in set {
            acc = acc.add(&self.values[c]).expect("cells share space and dimension");
        }
        acc
    }

    pub fn total(&self) -> RandomVector {
        self.eval(&(0..self.values.len()).collect())
    }
}

fn require_dim(e: &Rpovm, v: &[C64]) -> Result<(), MeasureError> {
    if v.len() != e.dim {
        return Err(MeasureError::DimensionMismatch {
            expected: e.dim,
            found: v.len(),
        });
    }
    Ok(())
}

pub fn scalar_measure(e: &Rpovm, x: &[C64], y: &[C64]) -> Result<ScalarRandomMeasure, MeasureError> {
    require_dim(e, x)?;
    require_dim(e, y)?;
    let values = e
        .cells
        .iter()
        .map(|field| {
            let per_atom = field
                .matrices()
                .iter()
                .map(|m| inner(&m.mul_vec(x).expect("dimension checked"), y))
                .collect();
            RandomScalar::new(e.space.clone(), per_atom).expect("finite projections")
        })
        .collect();
    Ok(ScalarRandomMeasure { values })
}

pub fn vector_measure(e: &Rpovm, x: &[C64]) -> Result<VectorRandomMeasure, MeasureError> {
    require_dim(e, x)?;
    let values = e
        .cells
        .iter()
        .map(|field| crate::field::apply(field, x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VectorRandomMeasure { values })
}

/// Probe vectors `e_i`, `e_i + e_j`, `e_i + i·e_j`; positivity of
/// `⟨Mx, x⟩` on all of them forces `M` to be Hermitian and PSD.
fn polarization_probes(dim: usize) -> Vec<Vec<C64>> {
    let unit = |k: usize| -> Vec<C64> {
        (0..dim).map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
    };
    let mut probes: Vec<Vec<C64>> = (0..dim).map(unit).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            let (ei, ej) = (unit(i), unit(j));
            probes.push(ei.iter().zip(&ej).map(|(a, b)| a + b).collect());
            probes.push(ei.iter().zip(&ej).map(|(a, b)| a + b * C64::new(0.0, 1.0)).collect());
        }
    }
    probes
}

/// Characterization check: a family of projection-valued cells forms a
/// measure iff it is multiplicative and every `E_{x,x}` is a positive
/// measure of total mass `‖x‖²`.
pub fn is_resolution_of_identity(cells: &[OperatorField], tol: f64) -> bool {
    let Some(first) = cells.first() else {
        return false;
    };
    let space = first.space().clone();
    let dim = first.dim_in();
    if cells
        .iter()
        .any(|c| !same_space(&space, c.space()) || c.dim_in() != dim || c.dim_out() != dim)
    {
        return false;
    }
    let support: Vec<usize> = space.support().collect();
    // Values must be random projections.
    if cells
        .iter()
        .any(|c| support.iter().any(|&w| projection_residual(c.at(w)) > tol))
    {
        return false;
    }
    // Multiplicative: E(γ)E(γ') = δ_{γγ'} E(γ).
    for (i, a) in cells.iter().enumerate() {
        for (j, b) in cells.iter().enumerate() {
            for &w in &support {
                let prod = a.at(w) * b.at(w);
                let target = if i == j {
                    a.at(w).clone()
                } else {
                    ComplexMatrix::zeros(dim, dim)
                };
                if (&prod - &target).frobenius_norm() > tol {
                    return false;
                }
            }
        }
    }
    // E_{x,x} positive with total mass ‖x‖².
    for x in polarization_probes(dim) {
        let mass = vector_norm(&x).powi(2);
        for &w in &support {
            let mut total = C64::new(0.0, 0.0);
            for c in cells {
                let v = inner(&c.at(w).mul_vec(&x).expect("dimension checked"), &x);
                if v.re < -tol || v.im.abs() > tol {
                    return false;
                }
                total += v;
            }
            if (total - C64::new(mass, 0.0)).norm() > tol * mass.max(1.0) {
                return false;
            }
        }
    }
    true
}

/// Image measure `F(γ') = E(φ^{-1}(γ'))` under the cell map
/// `cell_map[γ] = φ(γ)`.
pub fn pushforward(e: &Rpovm, cell_map: &[usize], target: MeasurableSpace) -> Result<Rpovm, MeasureError> {
    if cell_map.len() < e.len() {
        return Err(MeasureError::IncompleteMap {
            cell: e.gamma.cells[cell_map.len()].id.clone(),
        });
    }
    if cell_map.len() > e.len() {
        return Err(MeasureError::CellCount {
            expected: e.len(),
            found: cell_map.len(),
        });
    }
    if let Some((c, &t)) = cell_map.iter().enumerate().find(|(_, &t)| t >= target.len()) {
        return Err(MeasureError::UnknownTarget {
            cell: e.gamma.cells[c].id.clone(),
            target: t,
        });
    }
    let fields = (0..target.len())
        .map(|t| {
            let preimage: CellSet = cell_map
                .iter()
                .enumerate()
                .filter(|(_, &img)| img == t)
                .map(|(c, _)| c)
                .collect();
            e.eval(&preimage)
        })
        .collect();
    Rpovm::new(target, fields)
}
