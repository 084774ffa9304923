//! Operator fields `{a(ω)}` over a finite sample space.
//!
//! At finite dimension every random operator that commutes with the
//! multiplication operators is decomposable, and its decomposable extension
//! acts pointwise through a field of matrices. Domains, cores and closures
//! all coincide with the whole space, so an [`OperatorField`] stands in for
//! the random operator, its decomposable extension and its random adjoint
//! at once.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{self, op_norm, ComplexMatrix, LinalgError, C64};
use crate::prob::{
    ae_equal, inner, multiply, same_space, ProbError, RandomScalar, RandomVector, SampleSpace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("expected one matrix per atom ({expected}), found {found}")]
    AtomCount { expected: usize, found: usize },
    #[error("matrix at atom {atom:?} is {found:?}, expected {expected:?}")]
    Shape {
        atom: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live on different sample spaces")]
    SpaceMismatch,
    #[error("field is {dim_out}x{dim_in}, expected a square field")]
    NotSquare { dim_out: usize, dim_in: usize },
    #[error("hypothesis `{hypothesis}` fails at atom {atom:?} (residual {residual:.3e})")]
    HypothesisViolated {
        atom: String,
        hypothesis: &'static str,
        residual: f64,
    },
}

/// A linear map between spaces of random vectors.
///
/// [`OperatorField`] is the decomposable case; the trait exists so that
/// [`check_intertwine`] can also be run against maps that are not given by a
/// field.
pub trait RandomOperator {
    fn space(&self) -> &Arc<SampleSpace>;
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply_random(&self, f: &RandomVector) -> Result<RandomVector, FieldError>;
}

/// Field of `dim_out × dim_in` matrices, one per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    space: Arc<SampleSpace>,
    dim_in: usize,
    dim_out: usize,
    matrices: Vec<ComplexMatrix>,
}

impl OperatorField {
    pub fn new(space: Arc<SampleSpace>, matrices: Vec<ComplexMatrix>) -> Result<Self, FieldError> {
        if matrices.len() != space.len() {
            return Err(FieldError::AtomCount {
                expected: space.len(),
                found: matrices.len(),
            });
        }
        let expected = matrices[0].shape();
        for (i, m) in matrices.iter().enumerate() {
            if m.shape() != expected {
                return Err(FieldError::Shape {
                    atom: space.atoms()[i].clone(),
                    expected,
                    found: m.shape(),
                });
            }
        }
        Ok(Self {
            dim_in: expected.1,
            dim_out: expected.0,
            space,
            matrices,
        })
    }

    pub fn from_fn(
        space: Arc<SampleSpace>,
        mut f: impl FnMut(usize) -> ComplexMatrix,
    ) -> Result<Self, FieldError> {
        let matrices = (0..space.len()).map(&mut f).collect();
        Self::new(space, matrices)
    }

    pub fn constant(space: Arc<SampleSpace>, m: ComplexMatrix) -> Self {
        let (dim_out, dim_in) = m.shape();
        let matrices = vec![m; space.len()];
        Self {
            space,
            dim_in,
            dim_out,
            matrices,
        }
    }

    /// The field of `1_H`, i.e. the embedding `J_H`.
    pub fn identity(space: Arc<SampleSpace>, dim: usize) -> Self {
        Self::constant(space, ComplexMatrix::identity(dim))
    }

    pub fn zero(space: Arc<SampleSpace>, dim_out: usize, dim_in: usize) -> Self {
        Self::constant(space, ComplexMatrix::zeros(dim_out, dim_in))
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn at(&self, atom: usize) -> &ComplexMatrix {
        &self.matrices[atom]
    }

    pub fn map(&self, f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Result<Self, FieldError> {
        Self::new(self.space.clone(), self.matrices.iter().map(f).collect())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space.clone(),
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrices: self.matrices.iter().map(|m| m.scale(factor)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.require_same_shape(other)?;
        let matrices = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.space.clone(), matrices)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Largest operator-norm difference over positive-weight atoms.
    pub fn distance(&self, other: &Self) -> Result<f64, FieldError> {
        self.require_same_shape(other)?;
        Ok(self
            .space
            .support()
            .map(|i| op_norm(&(&self.matrices[i] - &other.matrices[i])))
            .fold(0.0, f64::max))
    }

    /// Equality a.e. up to `tol` in operator norm.
    pub fn ae_eq(&self, other: &Self, tol: f64) -> Result<bool, FieldError> {
        Ok(self.distance(other)? <= tol)
    }

    fn require_space(&self, space: &Arc<SampleSpace>) -> Result<(), FieldError> {
        if same_space(&self.space, space) {
            Ok(())
        } else {
            Err(FieldError::SpaceMismatch)
        }
    }

    fn require_same_shape(&self, other: &Self) -> Result<(), FieldError> {
        self.require_space(&other.space)?;
        if self.dim_in != other.dim_in {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim_in,
                found: other.dim_in,
            });
        }
        if self.dim_out != other.dim_out {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim_out,
                found: other.dim_out,
            });
        }
        Ok(())
    }

    fn require_square(&self) -> Result<(), FieldError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(FieldError::NotSquare {
                dim_out: self.dim_out,
                dim_in: self.dim_in,
            })
        }
    }
}

impl RandomOperator for OperatorField {
    fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn apply_random(&self, f: &RandomVector) -> Result<RandomVector, FieldError> {
        extend_apply(self, f)
    }
}

/// `(Ax)(ω) = a(ω) x` for a deterministic vector `x`.
pub fn apply(a: &OperatorField, x: &[C64]) -> Result<RandomVector, FieldError> {
    if x.len() != a.dim_in {
        return Err(FieldError::DimensionMismatch {
            expected: a.dim_in,
            found: x.len(),
        });
    }
    let values = a
        .matrices
        .iter()
        .map(|m| m.mul_vec(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RandomVector::new(a.space.clone(), a.dim_out, values)?)
}

/// Pointwise application `(𝐀f)(ω) = a(ω) f(ω)` on random vectors.
pub fn extend_apply(a: &OperatorField, f: &RandomVector) -> Result<RandomVector, FieldError> {
    a.require_space(f.space())?;
    if f.dim() != a.dim_in {
        return Err(FieldError::DimensionMismatch {
            expected: a.dim_in,
            found: f.dim(),
        });
    }
    let values = a
        .matrices
        .iter()
        .zip(f.values())
        .map(|(m, v)| m.mul_vec(v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RandomVector::new(a.space.clone(), a.dim_out, values)?)
}

/// Random adjoint `A^∙`: the field of conjugate transposes.
pub fn adjoint_field(a: &OperatorField) -> OperatorField {
    OperatorField {
        space: a.space.clone(),
        dim_in: a.dim_out,
        dim_out: a.dim_in,
        matrices: a.matrices.iter().map(ComplexMatrix::adjoint).collect(),
    }
}

/// Field of products `b(ω) a(ω)`.
pub fn compose(b: &OperatorField, a: &OperatorField) -> Result<OperatorField, FieldError> {
    b.require_space(&a.space)?;
    if b.dim_in != a.dim_out {
        return Err(FieldError::DimensionMismatch {
            expected: b.dim_in,
            found: a.dim_out,
        });
    }
    let matrices = b
        .matrices
        .iter()
        .zip(&a.matrices)
        .map(|(bm, am)| bm * am)
        .collect();
    OperatorField::new(a.space.clone(), matrices)
}

/// Largest defect `|⟨a(ω)x, y⟩ − ⟨x, b(ω)y⟩|` over basis vectors and
/// positive-weight atoms; zero exactly when `b` is the random adjoint of `a`.
pub fn adjoint_relation_residual(a: &OperatorField, b: &OperatorField) -> Result<f64, FieldError> {
    a.require_space(&b.space)?;
    if a.dim_in != b.dim_out || a.dim_out != b.dim_in {
        return Err(FieldError::DimensionMismatch {
            expected: a.dim_in,
            found: b.dim_out,
        });
    }
    let basis = |n: usize, k: usize| -> Vec<C64> {
        (0..n).map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
    };
    let mut worst = 0.0f64;
    for i in 0..a.dim_in {
        let x = basis(a.dim_in, i);
        let ax = apply(a, &x)?;
        for j in 0..a.dim_out {
            let y = basis(a.dim_out, j);
            let by = apply(b, &y)?;
            for w in a.space.support() {
                let lhs = inner(ax.at(w), &y);
                let rhs = inner(&x, by.at(w));
                worst = worst.max((lhs - rhs).norm());
            }
        }
    }
    Ok(worst)
}

/// Exponent of the multiplier space paired with an `L^p` class: bounded
/// multipliers (`q = ∞`) act on `L²`, measurable ones (`q = 0`) on `L⁰`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiplierExponent {
    Zero,
    Infinity,
}

pub fn multiplier_exponent(p: crate::prob::Lp) -> MultiplierExponent {
    match p {
        crate::prob::Lp::Zero => MultiplierExponent::Zero,
        crate::prob::Lp::Two => MultiplierExponent::Infinity,
    }
}

/// Norm data of a field and the class memberships it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldClassification {
    /// `r(ω) = ‖a(ω)‖_op`.
    pub r: RandomScalar,
    /// `max r(ω)` over positive-weight atoms.
    pub ess_sup: f64,
    /// `Σ ℘(ω) r(ω)²`.
    pub second_moment: f64,
    /// `Σ ℘(ω) ‖a(ω)‖²_HS`.
    pub hs_norm_sq: f64,
    /// Continuous random operator into `L⁰` (`r` finite a.e.).
    pub continuous_l0: bool,
    /// Continuous second-order random operator (`r ∈ L²`).
    pub continuous_l2: bool,
    /// Hilbert–Schmidt member.
    pub hilbert_schmidt: bool,
}

pub fn classify(a: &OperatorField) -> FieldClassification {
    let space = &a.space;
    let r_values: Vec<C64> = a.matrices.iter().map(|m| C64::new(op_norm(m), 0.0)).collect();
    let r = RandomScalar::new(space.clone(), r_values).expect("operator norms are finite");
    let ess_sup = space.support().map(|i| r.at(i).re).fold(0.0, f64::max);
    let second_moment: f64 = space
        .support()
        .map(|i| space.weight(i) * r.at(i).re.powi(2))
        .sum();
    let hs_norm_sq: f64 = space
        .support()
        .map(|i| space.weight(i) * linalg::hs_norm_matrix(&a.matrices[i]).powi(2))
        .sum();
    let continuous_l0 = space.support().all(|i| r.at(i).re.is_finite());
    let continuous_l2 = continuous_l0 && second_moment.is_finite();
    let hilbert_schmidt = continuous_l2 && hs_norm_sq.is_finite();
    FieldClassification {
        r,
        ess_sup,
        second_moment,
        hs_norm_sq,
        continuous_l0,
        continuous_l2,
        hilbert_schmidt,
    }
}

/// Tests `A m_φ f = m_φ A f` on every probe, a.e. within `tol`.
pub fn check_intertwine<M: RandomOperator + ?Sized>(
    op: &M,
    phi: &RandomScalar,
    probes: &[RandomVector],
    tol: f64,
) -> Result<bool, FieldError> {
    if !same_space(op.space(), phi.space()) {
        return Err(FieldError::SpaceMismatch);
    }
    for f in probes {
        if !same_space(op.space(), f.space()) {
            return Err(FieldError::SpaceMismatch);
        }
        let lhs = op.apply_random(&multiply(phi, f)?)?;
        let rhs = multiply(phi, &op.apply_random(f)?)?;
        if !ae_equal(&lhs, &rhs, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// How [`proj_combine`] builds a new projection field from `P` and `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionCombination {
    /// `PQ`, requires `PQ = QP`.
    Product,
    /// `P + Q`, requires `PQ = O`.
    Sum,
    /// `J_H − P`; `Q` is ignored.
    Complement,
    /// `P + Q − PQ`, requires `PQ = QP`.
    SumMinusProduct,
    /// `P − Q`, requires `PQ = Q`.
    Difference,
}

fn check_projection_field(p: &OperatorField, tol: f64, hypothesis: &'static str) -> Result<(), FieldError> {
    p.require_square()?;
    for i in p.space.support() {
        let m = &p.matrices[i];
        if !linalg::is_projection(m, tol) {
            let residual = op_norm(&(m - &m.adjoint())).max(op_norm(&(&(m * m) - m)));
            return Err(FieldError::HypothesisViolated {
                atom: p.space.atoms()[i].clone(),
                hypothesis,
                residual,
            });
        }
    }
    Ok(())
}

fn check_relation(
    space: &SampleSpace,
    lhs: &[ComplexMatrix],
    rhs: &[ComplexMatrix],
    tol: f64,
    hypothesis: &'static str,
) -> Result<(), FieldError> {
    for i in space.support() {
        let residual = op_norm(&(&lhs[i] - &rhs[i]));
        if residual > tol {
            return Err(FieldError::HypothesisViolated {
                atom: space.atoms()[i].clone(),
                hypothesis,
                residual,
            });
        }
    }
    Ok(())
}

/// Projection algebra: combines two projection fields under the
/// hypothesis each mode needs, and verifies the result is a projection field.
pub fn proj_combine(
    p: &OperatorField,
    q: &OperatorField,
    mode: ProjectionCombination,
    tol: f64,
) -> Result<OperatorField, FieldError> {
    use ProjectionCombination::*;
    check_projection_field(p, tol, "P is a projection field")?;
    let identity = OperatorField::identity(p.space.clone(), p.dim_in);
    if mode == Complement {
        let out = identity.sub(p)?;
        check_projection_field(&out, tol, "result is a projection field")?;
        return Ok(out);
    }
    p.require_same_shape(q)?;
    check_projection_field(q, tol, "Q is a projection field")?;
    let pq = compose(p, q)?;
    let qp = compose(q, p)?;
    let space = &p.space;
    let out = match mode {
        Product => {
            check_relation(space, &pq.matrices, &qp.matrices, tol, "PQ = QP")?;
            pq
        }
        Sum => {
            let zero = OperatorField::zero(space.clone(), p.dim_out, p.dim_in);
            check_relation(space, &pq.matrices, &zero.matrices, tol, "PQ = O")?;
            p.add(q)?
        }
        SumMinusProduct => {
            check_relation(space, &pq.matrices, &qp.matrices, tol, "PQ = QP")?;
            p.add(q)?.sub(&pq)?
        }
        Difference => {
            check_relation(space, &pq.matrices, &q.matrices, tol, "PQ = Q")?;
            p.sub(q)?
        }
        Complement => unreachable!(),
    };
    check_projection_field(&out, tol, "result is a projection field")?;
    Ok(out)
}

/// `P ≤ Q`: `q(ω) − p(ω)` is positive semidefinite within `tol` on every
/// positive-weight atom. Defined for selfadjoint fields only.
pub fn proj_leq(p: &OperatorField, q: &OperatorField, tol: f64) -> Result<bool, FieldError> {
    p.require_same_shape(q)?;
    p.require_square()?;
    for field in [p, q] {
        for i in field.space.support() {
            let m = &field.matrices[i];
            let residual = op_norm(&(m - &m.adjoint()));
            if residual > tol {
                return Err(FieldError::HypothesisViolated {
                    atom: field.space.atoms()[i].clone(),
                    hypothesis: "field is selfadjoint",
                    residual,
                });
            }
        }
    }
    for i in p.space.support() {
        let diff = &q.matrices[i] - &p.matrices[i];
        if linalg::min_eigenvalue(&diff)? < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-atom structural flags, each holding on every positive-weight atom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FieldPredicates {
    pub selfadjoint: bool,
    pub normal: bool,
    pub unitary: bool,
    pub projection: bool,
    pub pure_contraction: bool,
}

/// Evaluates [`FieldPredicates`]. Normality uses the relative test
/// `‖aa* − a*a‖ ≤ tol·‖a‖²`; pure contraction is the strict `‖a‖ < 1`.
pub fn predicates(a: &OperatorField, tol: f64) -> Result<FieldPredicates, FieldError> {
    a.require_square()?;
    let mut flags = FieldPredicates {
        selfadjoint: true,
        normal: true,
        unitary: true,
        projection: true,
        pure_contraction: true,
    };
    let identity = ComplexMatrix::identity(a.dim_in);
    for i in a.space.support() {
        let m = &a.matrices[i];
        let adj = m.adjoint();
        let norm = op_norm(m);
        flags.selfadjoint &= op_norm(&(m - &adj)) <= tol;
        flags.normal &= op_norm(&(&(m * &adj) - &(&adj * m))) <= tol * norm * norm;
        flags.unitary &= op_norm(&(&(&adj * m) - &identity)) <= tol;
        flags.projection &= linalg::is_projection(m, tol);
        flags.pure_contraction &= norm < 1.0;
    }
    Ok(flags)
}
