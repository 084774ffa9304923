//! Spectral integrals against a random projection-operator-valued measure,
//! and the spectral decomposition of normal operator fields.
//!
//! On a finite `Γ` every measurable function is simple, so the bounded
//! integral is the finite sum `I(f) = Σ_γ f(γ) E(γ)` and no uniform limit is
//! needed. Unbounded integrands take the value `∞` on some cells; they
//! belong to `𝓜(Γ, Σ, E)` when those cells are `E`-null, and the extended
//! integral uses the convention `∞ · O = O`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::{predicates, FieldError, OperatorField};
use crate::linalg::{self, ComplexMatrix, EigenDecomposition, LinalgError, C64};
use crate::measure::{Cell, CellSet, MeasurableSpace, MeasureError, Region, Rpovm};
use crate::prob::{vector_norm, RandomVector};

/// A cell counts as `E`-null when its projection field has Frobenius norm
/// at most this on every positive-weight atom.
pub const NULL_CELL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("function has {found} values, measure has {expected} cells")]
    LengthMismatch { expected: usize, found: usize },
    #[error("integrand is infinite on cell {cell:?}, which is not E-null")]
    UnboundedIntegrand { cell: String },
    #[error("function is infinite on cell {cell:?}, which is not E-null")]
    NotAeFinite { cell: String },
    #[error("vector is outside the domain: E(cell {cell:?})x is nonzero at atom {atom:?} where f = inf")]
    DomainViolation { cell: String, atom: String },
    #[error("field is not normal at atom {atom:?} (commutator residual {residual:.3e})")]
    NotNormal { atom: String, residual: f64 },
    #[error("eigenvalue {eigenvalue} at atom {atom:?} lies in no cell")]
    CellCoverage { atom: String, eigenvalue: C64 },
    #[error("invalid bounding sequence: {0}")]
    InvalidBoundingSequence(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A value in `ℂ ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedValue {
    Finite(C64),
    Infinite,
}

impl ExtendedValue {
    pub fn finite(self) -> Option<C64> {
        match self {
            ExtendedValue::Finite(z) => Some(z),
            ExtendedValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedValue::Infinite)
    }
}

impl From<C64> for ExtendedValue {
    fn from(z: C64) -> Self {
        ExtendedValue::Finite(z)
    }
}

/// Function on the cells of `Γ` with values in `ℂ ∪ {∞}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurableFunction {
    values: Vec<ExtendedValue>,
}

impl MeasurableFunction {
    pub fn new(values: Vec<ExtendedValue>) -> Self {
        Self { values }
    }

    pub fn from_finite(values: &[C64]) -> Self {
        Self::new(values.iter().map(|&z| ExtendedValue::Finite(z)).collect())
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(
            values
                .iter()
                .map(|&x| ExtendedValue::Finite(C64::new(x, 0.0)))
                .collect(),
        )
    }

    pub fn constant(cells: usize, z: C64) -> Self {
        Self::new(vec![ExtendedValue::Finite(z); cells])
    }

    /// `χ_σ`.
    pub fn indicator(cells: usize, set: &CellSet) -> Self {
        Self::from_real(
            &(0..cells)
                .map(|c| if set.contains(&c) { 1.0 } else { 0.0 })
                .collect::<Vec<_>>(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[ExtendedValue] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> ExtendedValue {
        self.values[cell]
    }

    pub fn is_bounded(&self) -> bool {
        self.values.iter().all(|v| !v.is_infinite())
    }

    /// `max |f|` over the finite values.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|v| v.finite())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map(|z| z * factor)
    }

    /// Applies `g` to the finite values; `∞` stays `∞`.
    pub fn map(&self, g: impl Fn(C64) -> C64) -> Self {
        Self::new(
            self.values
                .iter()
                .map(|v| match v {
                    ExtendedValue::Finite(z) => ExtendedValue::Finite(g(*z)),
                    ExtendedValue::Infinite => ExtendedValue::Infinite,
                })
                .collect(),
        )
    }

    /// Pointwise sum; `∞` absorbs.
    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    /// Pointwise product; `∞` absorbs.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    /// `f χ_σ`, zero off `σ`.
    pub fn restrict(&self, set: &CellSet) -> Self {
        Self::new(
            self.values
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    if set.contains(&c) {
                        v
                    } else {
                        ExtendedValue::Finite(C64::new(0.0, 0.0))
                    }
                })
                .collect(),
        )
    }

    fn zip(&self, other: &Self, op: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.len(), other.len(), "functions on different cell counts");
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| match (a, b) {
                    (ExtendedValue::Finite(x), ExtendedValue::Finite(y)) => ExtendedValue::Finite(op(*x, *y)),
                    _ => ExtendedValue::Infinite,
                })
                .collect(),
        )
    }
}

fn check_len(e: &Rpovm, f: &MeasurableFunction) -> Result<(), CalculusError> {
    if f.len() != e.len() {
        return Err(CalculusError::LengthMismatch {
            expected: e.len(),
            found: f.len(),
        });
    }
    Ok(())
}

/// First cell where `f = ∞` and `E` is not null.
fn first_unbounded_support(e: &Rpovm, f: &MeasurableFunction) -> Option<usize> {
    (0..f.len()).find(|&c| f.value(c).is_infinite() && !e.is_null_cell(c, NULL_CELL_TOL))
}

/// `Σ_{γ: f(γ) finite} f(γ) e_γ(ω)`.
fn finite_part_field(e: &Rpovm, f: &MeasurableFunction) -> OperatorField {
    OperatorField::from_fn(e.space().clone(), |w| {
        let mut acc = ComplexMatrix::zeros(e.dim(), e.dim());
        for (c, v) in f.values().iter().enumerate() {
            if let ExtendedValue::Finite(z) = v {
                if *z != C64::new(0.0, 0.0) {
                    acc = &acc + &e.cell(c).at(w).scale(*z);
                }
            }
        }
        acc
    })
    .expect("cell fields share one shape")
}

/// Bounded spectral integral `I(f) = Σ_γ f(γ) E(γ)`.
pub fn integrate_bounded(e: &Rpovm, f: &MeasurableFunction) -> Result<OperatorField, CalculusError> {
    check_len(e, f)?;
    if let Some(c) = first_unbounded_support(e, f) {
        return Err(CalculusError::UnboundedIntegrand {
            cell: e.gamma().cells()[c].id.clone(),
        });
    }
    Ok(finite_part_field(e, f))
}

/// Nested sets `σ₁ ⊆ σ₂ ⊆ …` with `f` bounded on each and `E(∪σ_n) = J_H`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingSequence {
    sets: Vec<CellSet>,
}

impl BoundingSequence {
    /// Checks the bounding-sequence conditions for `f` relative to `E`.
    pub fn new(sets: Vec<CellSet>, f: &MeasurableFunction, e: &Rpovm, tol: f64) -> Result<Self, CalculusError> {
        check_len(e, f)?;
        if sets.is_empty() {
            return Err(CalculusError::InvalidBoundingSequence("no sets".into()));
        }
        for pair in sets.windows(2) {
            if !pair[0].is_subset(&pair[1]) {
                return Err(CalculusError::InvalidBoundingSequence("sets are not nested".into()));
            }
        }
        for (n, set) in sets.iter().enumerate() {
            if let Some(&c) = set.iter().find(|&&c| c >= e.len() || f.value(c).is_infinite()) {
                return Err(CalculusError::InvalidBoundingSequence(format!(
                    "set {n} contains cell {c} where f is not finite"
                )));
            }
        }
        let union = e.eval(sets.last().expect("non-empty"));
        let identity = OperatorField::identity(e.space().clone(), e.dim());
        let residual = union.distance(&identity)?;
        if residual > tol {
            return Err(CalculusError::InvalidBoundingSequence(format!(
                "E(union) differs from the identity field by {residual:.3e}"
            )));
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[CellSet] {
        &self.sets
    }

    pub fn union(&self) -> &CellSet {
        self.sets.last().expect("non-empty")
    }
}

/// `σ_n = {γ : |f(γ)| ≤ n}` for `n = 1, …, max(1, ⌈max |f|⌉)`; the last set
/// is where the sequence stabilizes.
pub fn bounding_sequence_for(f: &MeasurableFunction, e: &Rpovm) -> Result<BoundingSequence, CalculusError> {
    check_len(e, f)?;
    if let Some(c) = first_unbounded_support(e, f) {
        return Err(CalculusError::NotAeFinite {
            cell: e.gamma().cells()[c].id.clone(),
        });
    }
    let stop = (f.sup_norm().ceil() as usize).max(1);
    let sets = (1..=stop)
        .map(|n| {
            (0..f.len())
                .filter(|&c| f.value(c).finite().is_some_and(|z| z.norm() <= n as f64))
                .collect()
        })
        .collect();
    Ok(BoundingSequence { sets })
}

/// First (cell, atom) where `f = ∞` but `E(cell)(ω) x ≠ 0`.
fn domain_witness(e: &Rpovm, f: &MeasurableFunction, x: &[C64]) -> Option<(usize, usize)> {
    let scale = vector_norm(x).max(1.0);
    for c in (0..f.len()).filter(|&c| f.value(c).is_infinite()) {
        for w in e.space().support() {
            let image = e.cell(c).at(w).mul_vec(x).expect("dimension checked");
            if vector_norm(&image) > NULL_CELL_TOL * scale {
                return Some((c, w));
            }
        }
    }
    None
}

/// `x ∈ D(Ĩ(f))`: `f ∈ L²(E^ω_{x,x})` for a.e. `ω`. With finitely many cells
/// this only fails where `f = ∞` on a cell charged by `E_{x,x}`.
pub fn extended_domain(e: &Rpovm, f: &MeasurableFunction, x: &[C64]) -> Result<bool, CalculusError> {
    check_len(e, f)?;
    if x.len() != e.dim() {
        return Err(CalculusError::DimensionMismatch {
            expected: e.dim(),
            found: x.len(),
        });
    }
    Ok(domain_witness(e, f, x).is_none())
}

/// The sequence `I(f χ_{σ_n}) x` along a bounding sequence.
pub fn partial_integrals(
    e: &Rpovm,
    f: &MeasurableFunction,
    x: &[C64],
    seq: &BoundingSequence,
) -> Result<Vec<RandomVector>, CalculusError> {
    seq.sets
        .iter()
        .map(|set| {
            let field = integrate_bounded(e, &f.restrict(set))?;
            Ok(crate::field::apply(&field, x)?)
        })
        .collect()
}

/// `Ĩ(f) x = lim I(f χ_{σ_n}) x` along the given bounding sequence.
pub fn integrate_extended_with(
    e: &Rpovm,
    f: &MeasurableFunction,
    x: &[C64],
    seq: &BoundingSequence,
) -> Result<RandomVector, CalculusError> {
    if !extended_domain(e, f, x)? {
        let (c, w) = domain_witness(e, f, x).expect("domain check failed");
        return Err(CalculusError::DomainViolation {
            cell: e.gamma().cells()[c].id.clone(),
            atom: e.space().atoms()[w].clone(),
        });
    }
    let mut terms = partial_integrals(e, f, x, seq)?;
    Ok(terms.pop().expect("bounding sequences are non-empty"))
}

/// `Ĩ(f) x` along the canonical sequence `{|f| ≤ n}`.
pub fn integrate_extended(e: &Rpovm, f: &MeasurableFunction, x: &[C64]) -> Result<RandomVector, CalculusError> {
    if !extended_domain(e, f, x)? {
        let (c, w) = domain_witness(e, f, x).expect("domain check failed");
        return Err(CalculusError::DomainViolation {
            cell: e.gamma().cells()[c].id.clone(),
            atom: e.space().atoms()[w].clone(),
        });
    }
    let seq = bounding_sequence_for(f, e)?;
    integrate_extended_with(e, f, x, &seq)
}

/// `Ĩ(f)` as an operator field, for `f ∈ 𝓜(Γ, Σ, E)`.
pub fn extended_field(e: &Rpovm, f: &MeasurableFunction) -> Result<OperatorField, CalculusError> {
    check_len(e, f)?;
    if let Some(c) = first_unbounded_support(e, f) {
        return Err(CalculusError::NotAeFinite {
            cell: e.gamma().cells()[c].id.clone(),
        });
    }
    Ok(finite_part_field(e, f))
}

/// Which cells [`spectral_decompose`] sorts eigenvalues into.
#[derive(Clone, Copy, Debug)]
pub enum CellSpec<'a> {
    /// One cell per cluster of eigenvalues across all atoms.
    Auto,
    /// Fixed labeled cells; each eigenvalue goes to the cell containing it.
    Given(&'a MeasurableSpace),
}

/// A spectral measure together with one representative point per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub measure: Rpovm,
    pub representatives: Vec<C64>,
}

struct AtomSpectrum {
    atom: usize,
    decomposition: Option<EigenDecomposition>,
}

fn diagonalize_atoms(a: &OperatorField, selfadjoint: bool, tol: f64) -> Result<Vec<AtomSpectrum>, CalculusError> {
    let space = a.space();
    (0..space.len())
        .map(|w| {
            let m = a.at(w);
            let result = if selfadjoint {
                linalg::eig_hermitian(m, tol)
            } else {
                linalg::diagonalize_normal(m, tol)
            };
            match result {
                Ok(d) => Ok(AtomSpectrum {
                    atom: w,
                    decomposition: Some(d),
                }),
                // Null atoms may carry anything.
                Err(_) if space.weight(w) == 0.0 => Ok(AtomSpectrum {
                    atom: w,
                    decomposition: None,
                }),
                Err(LinalgError::NotNormal { residual }) | Err(LinalgError::NotHermitian { residual }) => {
                    Err(CalculusError::NotNormal {
                        atom: space.atoms()[w].clone(),
                        residual,
                    })
                }
                Err(other) => Err(other.into()),
            }
        })
        .collect()
}

/// Spectral measure of a normal field.
///
/// Each positive-weight atom is diagonalized and its spectral projections
/// are sorted into cells. Selfadjoint fields use the Hermitian solver and
/// real intervals; other normal fields use complex boxes. With
/// [`CellSpec::Auto`] the cells are single-linkage clusters (link distance
/// `2·tol`) of all eigenvalues, represented by their probability-weighted
/// mean. On null atoms that are not normal, or whose eigenvalues miss every
/// given cell, the whole space is assigned to the first cell.
pub fn spectral_decompose(a: &OperatorField, cells: CellSpec<'_>, tol: f64) -> Result<SpectralDecomposition, CalculusError> {
    let flags = predicates(a, tol)?;
    let selfadjoint = flags.selfadjoint;
    let spectra = diagonalize_atoms(a, selfadjoint, tol)?;
    let space = a.space();
    let dim = a.dim_in();

    // (atom, eigen index, eigenvalue, rank)
    let mut points: Vec<(usize, usize, C64, f64)> = Vec::new();
    for s in &spectra {
        if let Some(d) = &s.decomposition {
            for (k, (&z, p)) in d.eigenvalues.iter().zip(&d.projections).enumerate() {
                points.push((s.atom, k, z, p.trace().re));
            }
        }
    }

    let (gamma, assignment) = match cells {
        CellSpec::Auto => auto_cells(&points, selfadjoint, tol)?,
        CellSpec::Given(gamma) => {
            let mut assignment = Vec::with_capacity(points.len());
            for &(w, _, z, _) in &points {
                match gamma.locate(z) {
                    Some(c) => assignment.push(c),
                    None if space.weight(w) == 0.0 => assignment.push(0),
                    None => {
                        return Err(CalculusError::CellCoverage {
                            atom: space.atoms()[w].clone(),
                            eigenvalue: z,
                        })
                    }
                }
            }
            (gamma.clone(), assignment)
        }
    };

    let mut per_cell: Vec<Vec<ComplexMatrix>> = vec![vec![ComplexMatrix::zeros(dim, dim); space.len()]; gamma.len()];
    let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(w, k, _, _), &c) in points.iter().zip(&assignment) {
        lookup.insert((w, k), c);
    }
    for s in &spectra {
        match &s.decomposition {
            Some(d) => {
                for (k, p) in d.projections.iter().enumerate() {
                    let c = lookup[&(s.atom, k)];
                    per_cell[c][s.atom] = &per_cell[c][s.atom] + p;
                }
            }
            None => per_cell[0][s.atom] = ComplexMatrix::identity(dim),
        }
    }

    let mut weighted = vec![(C64::new(0.0, 0.0), 0.0, C64::new(0.0, 0.0), 0.0); gamma.len()];
    for (&(w, _, z, rank), &c) in points.iter().zip(&assignment) {
        let mass = space.weight(w) * rank;
        weighted[c].0 += z * mass;
        weighted[c].1 += mass;
        weighted[c].2 += z * rank;
        weighted[c].3 += rank;
    }
    let representatives = weighted
        .iter()
        .zip(gamma.cells())
        .map(|(&(zw, mw, zr, mr), cell)| {
            if mw > 0.0 {
                zw / mw
            } else if mr > 0.0 {
                zr / mr
            } else {
                cell.region.map_or(C64::new(0.0, 0.0), |r| r.center())
            }
        })
        .collect();

    let fields = per_cell
        .into_iter()
        .map(|ms| OperatorField::new(space.clone(), ms))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralDecomposition {
        measure: Rpovm::new(gamma, fields)?,
        representatives,
    })
}

fn auto_cells(
    points: &[(usize, usize, C64, f64)],
    selfadjoint: bool,
    tol: f64,
) -> Result<(MeasurableSpace, Vec<usize>), CalculusError> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut j = i;
        while parent[j] != r {
            let next = parent[j];
            parent[j] = r;
            j = next;
        }
        r
    }
    // Sweep in real-part order; only points within the link distance in
    // real part can be linked.
    let link = 2.0 * tol;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| points[i].2.re.total_cmp(&points[j].2.re));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if points[j].2.re - points[i].2.re >= link {
                break;
            }
            if (points[i].2 - points[j].2).norm() < link {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        members.entry(r).or_default().push(i);
    }
    // Order clusters by their smallest (re, im) member for stable ids.
    let mut clusters: Vec<Vec<usize>> = members.into_values().collect();
    let key = |c: &Vec<usize>| {
        c.iter()
            .map(|&i| points[i].2)
            .min_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
            .expect("clusters are non-empty")
    };
    clusters.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.re.total_cmp(&kb.re).then(ka.im.total_cmp(&kb.im))
    });

    let mut assignment = vec![0; n];
    let mut cells = Vec::with_capacity(clusters.len());
    for (c, cluster) in clusters.iter().enumerate() {
        let (mut re_lo, mut re_hi, mut im_lo, mut im_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &i in cluster {
            assignment[i] = c;
            let z = points[i].2;
            re_lo = re_lo.min(z.re);
            re_hi = re_hi.max(z.re);
            im_lo = im_lo.min(z.im);
            im_hi = im_hi.max(z.im);
        }
        let region = if selfadjoint {
            Region::Interval {
                lo: re_lo - tol,
                hi: re_hi + tol,
            }
        } else {
            Region::Box {
                re_lo: re_lo - tol,
                re_hi: re_hi + tol,
                im_lo: im_lo - tol,
                im_hi: im_hi + tol,
            }
        };
        cells.push(Cell::new(format!("c{c}"), Some(region)));
    }
    if cells.is_empty() {
        // Only reachable when every atom is null and non-normal.
        cells.push(Cell::new("c0", None));
    }
    Ok((MeasurableSpace::new(cells)?, assignment))
}

/// `Σ_γ z_γ E(γ)` for representative points `z_γ`.
pub fn reconstruct(e: &Rpovm, representatives: &[C64]) -> Result<OperatorField, CalculusError> {
    integrate_bounded(e, &MeasurableFunction::from_finite(representatives))
}
