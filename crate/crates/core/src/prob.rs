//! Finite atomic probability spaces and the random vectors and scalars
//! living on them.
//!
//! A [`SampleSpace`] is a list of named atoms with probabilities. Atoms of
//! weight zero are allowed; they form the null sets on which "almost
//! everywhere" statements are allowed to fail. All comparisons in this crate
//! that say "a.e." skip those atoms.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::C64;

/// Tolerance on the total probability mass.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("sample space has no atoms")]
    Empty,
    #[error("{atoms} atom ids but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("atom id {0:?} appears more than once")]
    DuplicateAtom(String),
    #[error("weight of atom {atom:?} is {weight}, expected a finite non-negative number")]
    InvalidWeight { atom: String, weight: f64 },
    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("every atom has zero weight")]
    NoPositiveWeight,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live on different sample spaces")]
    SpaceMismatch,
    #[error("non-finite value on positive-weight atom {atom:?}")]
    NonFinite { atom: String },
    #[error("expected one value per atom ({expected}), found {found}")]
    AtomCount { expected: usize, found: usize },
    #[error("unknown atom index {0}")]
    UnknownAtom(usize),
}

/// Finite probability space `(Ω, ℘)` with the power-set σ-algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl SampleSpace {
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Arc<Self>, ProbError> {
        if atoms.is_empty() {
            return Err(ProbError::Empty);
        }
        if atoms.len() != weights.len() {
            return Err(ProbError::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(ProbError::DuplicateAtom(a.clone()));
            }
        }
        for (a, &w) in atoms.iter().zip(&weights) {
            if !w.is_finite() || w < 0.0 {
                return Err(ProbError::InvalidWeight {
                    atom: a.clone(),
                    weight: w,
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(ProbError::NotNormalized { sum });
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(ProbError::NoPositiveWeight);
        }
        Ok(Arc::new(Self { atoms, weights }))
    }

    /// `n` atoms named `w0, w1, …` with equal weight.
    pub fn uniform(n: usize) -> Result<Arc<Self>, ProbError> {
        let atoms = (0..n).map(|i| format!("w{i}")).collect();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Atoms named `w0, w1, …` with the given weights.
    pub fn with_weights(weights: &[f64]) -> Result<Arc<Self>, ProbError> {
        let atoms = (0..weights.len()).map(|i| format!("w{i}")).collect();
        Self::new(atoms, weights.to_vec())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    /// Indices of atoms with strictly positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }
}

/// Same space either by identity or by value.
pub fn same_space(a: &Arc<SampleSpace>, b: &Arc<SampleSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn require_same(a: &Arc<SampleSpace>, b: &Arc<SampleSpace>) -> Result<(), ProbError> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(ProbError::SpaceMismatch)
    }
}

/// `⟨x, y⟩ = Σ x_i ȳ_i`, linear in the first slot.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vector_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Element of `L⁰(℘, H)`: one vector of length `dim` per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomVector {
    space: Arc<SampleSpace>,
    dim: usize,
    values: Vec<Vec<C64>>,
}

impl RandomVector {
    pub fn new(space: Arc<SampleSpace>, dim: usize, values: Vec<Vec<C64>>) -> Result<Self, ProbError> {
        if values.len() != space.len() {
            return Err(ProbError::AtomCount {
                expected: space.len(),
                found: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(ProbError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if space.weight(i) > 0.0 && v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ProbError::NonFinite {
                    atom: space.atoms()[i].clone(),
                });
            }
        }
        Ok(Self { space, dim, values })
    }

    pub fn zeros(space: Arc<SampleSpace>, dim: usize) -> Self {
        let values = vec![vec![C64::new(0.0, 0.0); dim]; space.len()];
        Self { space, dim, values }
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn at(&self, atom: usize) -> &[C64] {
        &self.values[atom]
    }

    pub fn add(&self, other: &Self) -> Result<Self, ProbError> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self {
            space: self.space.clone(),
            dim: self.dim,
            values,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ProbError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| v.iter().map(|z| z * factor).collect())
            .collect();
        Self {
            space: self.space.clone(),
            dim: self.dim,
            values,
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), ProbError> {
        require_same(&self.space, &other.space)?;
        if self.dim != other.dim {
            return Err(ProbError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// Element of `L⁰(℘)`: one complex scalar per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomScalar {
    space: Arc<SampleSpace>,
    values: Vec<C64>,
}

impl RandomScalar {
    pub fn new(space: Arc<SampleSpace>, values: Vec<C64>) -> Result<Self, ProbError> {
        if values.len() != space.len() {
            return Err(ProbError::AtomCount {
                expected: space.len(),
                found: values.len(),
            });
        }
        for (i, z) in values.iter().enumerate() {
            if space.weight(i) > 0.0 && (!z.re.is_finite() || !z.im.is_finite()) {
                return Err(ProbError::NonFinite {
                    atom: space.atoms()[i].clone(),
                });
            }
        }
        Ok(Self { space, values })
    }

    pub fn from_real(space: Arc<SampleSpace>, values: &[f64]) -> Result<Self, ProbError> {
        Self::new(space, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(space: Arc<SampleSpace>, value: C64) -> Self {
        let values = vec![value; space.len()];
        Self { space, values }
    }

    /// `χ_α` for the single-atom event `{α}`.
    pub fn indicator(space: Arc<SampleSpace>, atom: usize) -> Result<Self, ProbError> {
        Self::indicator_of(space, &[atom])
    }

    /// `χ_α` for an event given as a list of atom indices.
    pub fn indicator_of(space: Arc<SampleSpace>, event: &[usize]) -> Result<Self, ProbError> {
        let mut values = vec![C64::new(0.0, 0.0); space.len()];
        for &a in event {
            *values.get_mut(a).ok_or(ProbError::UnknownAtom(a))? = C64::new(1.0, 0.0);
        }
        Ok(Self { space, values })
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, atom: usize) -> C64 {
        self.values[atom]
    }

    /// `Σ_ω ℘(ω) φ(ω)`.
    pub fn mean(&self) -> C64 {
        self.space
            .support()
            .map(|i| self.values[i] * self.space.weight(i))
            .sum()
    }
}

/// `⟨f, g⟩_{L²} = Σ_ω ℘(ω) ⟨f(ω), g(ω)⟩`.
pub fn l2_inner(f: &RandomVector, g: &RandomVector) -> Result<C64, ProbError> {
    f.check_compatible(g)?;
    Ok(f.space
        .support()
        .map(|i| inner(&f.values[i], &g.values[i]) * f.space.weight(i))
        .sum())
}

/// Which seminorm [`lp_seminorm`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lp {
    /// Ky Fan functional `Σ ℘(ω) min(1, ‖f(ω)‖)`, a metric for convergence in measure.
    Zero,
    /// The `L²(℘, H)` norm.
    Two,
}

pub fn lp_seminorm(f: &RandomVector, p: Lp) -> f64 {
    let space = &f.space;
    match p {
        Lp::Two => space
            .support()
            .map(|i| space.weight(i) * f.values[i].iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt(),
        Lp::Zero => space
            .support()
            .map(|i| space.weight(i) * vector_norm(&f.values[i]).min(1.0))
            .sum(),
    }
}

pub fn l2_norm(f: &RandomVector) -> f64 {
    lp_seminorm(f, Lp::Two)
}

/// Equality on every positive-weight atom up to `tol` in the Euclidean norm.
pub fn ae_equal(f: &RandomVector, g: &RandomVector, tol: f64) -> Result<bool, ProbError> {
    f.check_compatible(g)?;
    Ok(f.space.support().all(|i| {
        let diff: Vec<C64> = f.values[i].iter().zip(&g.values[i]).map(|(a, b)| a - b).collect();
        vector_norm(&diff) <= tol
    }))
}

/// Largest pointwise distance over positive-weight atoms.
pub fn ae_distance(f: &RandomVector, g: &RandomVector) -> Result<f64, ProbError> {
    f.check_compatible(g)?;
    Ok(f.space
        .support()
        .map(|i| {
            let diff: Vec<C64> = f.values[i].iter().zip(&g.values[i]).map(|(a, b)| a - b).collect();
            vector_norm(&diff)
        })
        .fold(0.0, f64::max))
}

/// `𝔼_H g = Σ_ω ℘(ω) g(ω)`, the Hilbert-space adjoint of [`embed`].
pub fn expectation(g: &RandomVector) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); g.dim];
    for i in g.space.support() {
        let w = g.space.weight(i);
        for (o, z) in out.iter_mut().zip(&g.values[i]) {
            *o += z * w;
        }
    }
    out
}

/// `J_H x`: the constant random vector with value `x`.
pub fn embed(x: &[C64], space: &Arc<SampleSpace>) -> RandomVector {
    RandomVector {
        space: space.clone(),
        dim: x.len(),
        values: vec![x.to_vec(); space.len()],
    }
}

/// Multiplication operator `m_φ`: `(m_φ f)(ω) = φ(ω) f(ω)`.
pub fn multiply(phi: &RandomScalar, f: &RandomVector) -> Result<RandomVector, ProbError> {
    require_same(&phi.space, &f.space)?;
    let values = f
        .values
        .iter()
        .zip(&phi.values)
        .map(|(v, &s)| v.iter().map(|z| z * s).collect())
        .collect();
    Ok(RandomVector {
        space: f.space.clone(),
        dim: f.dim,
        values,
    })
}
