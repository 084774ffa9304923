//! The bounded transform and its inverse, lifted to operator fields, and
//! the spectral-theorem pipeline built on them.
//!
//! For a matrix `T` the transform is `Z_T = T C_T^{1/2}` with defect
//! `C_T = (I + T*T)^{-1}`. `Z_T` is a pure contraction with
//! `I − Z_T* Z_T = C_T`, and the inverse is `T_Z = Z (I − Z*Z)^{-1/2}`.
//! The inverse uses the exponent `−1/2`: with `+1/2` the scalar case
//! `z = t/√(1+t²)` would not return `t`.
//!
//! The pipeline maps a normal field `A` to the pure contraction `𝒵A`,
//! decomposes that over the unit disc, and pushes the disc measure forward
//! under `g₁(λ) = λ (1 − |λ|²)^{-1/2}`. For real `λ` this is
//! `λ/(1 − λ²)^{1/2}`; the modulus makes it the inverse of the scalar
//! transform on the whole open disc.

use thiserror::Error;

use crate::calculus::{reconstruct, spectral_decompose, CalculusError, CellSpec, SpectralDecomposition};
use crate::field::{predicates, FieldError, OperatorField};
use crate::linalg::{self, op_norm, psd_power, ComplexMatrix, LinalgError, C64};
use crate::measure::{pushforward, Cell, MeasurableSpace, MeasureError, Region};

/// Default margin for pure-contraction checks and PSD powers.
pub const MARGIN_TOL: f64 = 1e-12;
/// Default certification threshold for the pipeline report.
pub const PIPELINE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("not a pure contraction{}: operator norm {norm}", atom.as_ref().map(|a| format!(" at atom {a:?}")).unwrap_or_default())]
    NotPureContraction { atom: Option<String>, norm: f64 },
    #[error("{value} lies outside the open unit disc")]
    OutOfDisc { value: C64 },
    #[error("field is not normal at atom {atom:?} (commutator residual {residual:.3e})")]
    NotNormal { atom: String, residual: f64 },
}

/// `Z_T` together with its defect `C_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedTransform {
    pub z: ComplexMatrix,
    pub c: ComplexMatrix,
}

/// Bounded transform of a square matrix.
pub fn z_of(t: &ComplexMatrix, tol: f64) -> Result<BoundedTransform, TransformError> {
    if !t.is_square() {
        return Err(LinalgError::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        }
        .into());
    }
    let n = t.rows();
    let gram = &ComplexMatrix::identity(n) + &(&t.adjoint() * t);
    let c = psd_power(&gram, -1.0, tol)?;
    let z = t * &psd_power(&c, 0.5, tol)?;
    Ok(BoundedTransform { z, c })
}

/// Inverse bounded transform `Z (I − Z*Z)^{-1/2}`.
pub fn t_of(z: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, TransformError> {
    if !z.is_square() {
        return Err(LinalgError::NotSquare {
            rows: z.rows(),
            cols: z.cols(),
        }
        .into());
    }
    let norm = op_norm(z);
    if norm >= 1.0 - tol {
        return Err(TransformError::NotPureContraction { atom: None, norm });
    }
    let defect = &ComplexMatrix::identity(z.rows()) - &(&z.adjoint() * z);
    Ok(z * &psd_power(&defect, -0.5, tol)?)
}

/// `𝒵A`: the bounded transform applied atom by atom.
pub fn zc_field(a: &OperatorField) -> Result<OperatorField, TransformError> {
    Ok(transform_pair(a)?.transformed)
}

/// `𝒯B`: the inverse transform applied atom by atom. Null atoms that are not
/// pure contractions are mapped to zero.
pub fn tc_field(b: &OperatorField) -> Result<OperatorField, TransformError> {
    if !b.is_square() {
        return Err(FieldError::NotSquare {
            dim_out: b.dim_out(),
            dim_in: b.dim_in(),
        }
        .into());
    }
    let space = b.space();
    let matrices = (0..space.len())
        .map(|w| match t_of(b.at(w), MARGIN_TOL) {
            Ok(m) => Ok(m),
            Err(_) if space.weight(w) == 0.0 => Ok(ComplexMatrix::zeros(b.dim_in(), b.dim_in())),
            Err(TransformError::NotPureContraction { norm, .. }) => Err(TransformError::NotPureContraction {
                atom: Some(space.atoms()[w].clone()),
                norm,
            }),
            Err(other) => Err(other),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OperatorField::new(space.clone(), matrices)?)
}

/// A field, its bounded transform, and the defect field `C_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformPair {
    pub original: OperatorField,
    pub transformed: OperatorField,
    pub defect: OperatorField,
}

pub fn transform_pair(a: &OperatorField) -> Result<TransformPair, TransformError> {
    if !a.is_square() {
        return Err(FieldError::NotSquare {
            dim_out: a.dim_out(),
            dim_in: a.dim_in(),
        }
        .into());
    }
    let pieces = a
        .matrices()
        .iter()
        .map(|m| z_of(m, MARGIN_TOL))
        .collect::<Result<Vec<_>, _>>()?;
    let (zs, cs): (Vec<_>, Vec<_>) = pieces.into_iter().map(|p| (p.z, p.c)).unzip();
    Ok(TransformPair {
        original: a.clone(),
        transformed: OperatorField::new(a.space().clone(), zs)?,
        defect: OperatorField::new(a.space().clone(), cs)?,
    })
}

/// Worst-case values of the transform-pair invariants over positive-weight atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformCheck {
    /// `max ‖I − z*z − c‖_op`.
    pub defect_identity_residual: f64,
    /// Smallest eigenvalue of any `c(ω)` (must be ≥ 0).
    pub defect_min_eigenvalue: f64,
    /// Largest eigenvalue of any `c(ω)` (must be ≤ 1).
    pub defect_max_eigenvalue: f64,
    /// `max ‖z(ω)‖_op` (must be < 1).
    pub max_z_norm: f64,
}

impl TransformCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.defect_identity_residual <= tol
            && self.defect_min_eigenvalue >= -tol
            && self.defect_max_eigenvalue <= 1.0 + tol
            && self.max_z_norm < 1.0
    }
}

impl TransformPair {
    pub fn check(&self) -> Result<TransformCheck, TransformError> {
        let space = self.original.space();
        let n = self.original.dim_in();
        let identity = ComplexMatrix::identity(n);
        let mut out = TransformCheck {
            defect_identity_residual: 0.0,
            defect_min_eigenvalue: f64::INFINITY,
            defect_max_eigenvalue: f64::NEG_INFINITY,
            max_z_norm: 0.0,
        };
        for w in space.support() {
            let z = self.transformed.at(w);
            let c = self.defect.at(w);
            let residual = op_norm(&(&(&identity - &(&z.adjoint() * z)) - c));
            let eigs = linalg::eigenvalues_hermitian(c)?;
            out.defect_identity_residual = out.defect_identity_residual.max(residual);
            out.defect_min_eigenvalue = out.defect_min_eigenvalue.min(eigs[0]);
            out.defect_max_eigenvalue = out.defect_max_eigenvalue.max(eigs[n - 1]);
            out.max_z_norm = out.max_z_norm.max(op_norm(z));
        }
        Ok(out)
    }
}

/// `g₁(λ) = λ (1 − |λ|²)^{-1/2}`, the scalar inverse of the bounded transform.
pub fn g1_map(lambda: C64, tol: f64) -> Result<C64, TransformError> {
    let r = lambda.norm();
    if r >= 1.0 - tol {
        return Err(TransformError::OutOfDisc { value: lambda });
    }
    Ok(lambda / ((1.0 - r) * (1.0 + r)).sqrt())
}

/// Scalar bounded transform `z / √(1 + |z|²)`.
pub fn scalar_transform(z: C64) -> C64 {
    z / (1.0 + z.norm_sqr()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Clustering and predicate tolerance.
    pub tol: f64,
    /// Certification threshold for the reconstruction and alignment residuals.
    pub pipeline_tol: f64,
    /// Relative distance under which representatives of the two routes are
    /// treated as the same spectral point during alignment.
    pub align_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tol: linalg::CLUSTER_TOL,
            pipeline_tol: PIPELINE_TOL,
            align_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub selfadjoint: bool,
    /// `max_ω ‖a(ω) − Σ_γ g₁(λ_γ) f_γ(ω)‖_op`.
    pub reconstruction_residual: f64,
    /// Atom where the reconstruction residual is largest.
    pub worst_atom: Option<String>,
    /// Cell-by-cell distance between the pushed-forward measure and the
    /// direct decomposition, after aligning representatives.
    pub alignment_residual: f64,
    /// Largest modulus of a disc representative carried by a non-null cell.
    pub max_disc_radius: f64,
    /// Largest imaginary part among the final representatives.
    pub max_imag_representative: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    /// Spectral measure `F` of `𝒵A` on the disc.
    pub disc: SpectralDecomposition,
    /// `E = F ∘ g₁⁻¹`.
    pub measure: SpectralDecomposition,
    /// Direct decomposition of `A`, the comparison route.
    pub direct: SpectralDecomposition,
    pub report: PipelineReport,
}

fn first_non_normal(a: &OperatorField, tol: f64) -> Option<(String, f64)> {
    let space = a.space();
    space.support().find_map(|w| {
        let m = a.at(w);
        let norm = op_norm(m);
        let residual = linalg::normality_residual(m);
        (residual > tol * norm * norm).then(|| (space.atoms()[w].clone(), residual))
    })
}

fn point_region(z: C64, tol: f64, real: bool) -> Region {
    if real {
        Region::Interval {
            lo: z.re - tol,
            hi: z.re + tol,
        }
    } else {
        Region::Box {
            re_lo: z.re - tol,
            re_hi: z.re + tol,
            im_lo: z.im - tol,
            im_hi: z.im + tol,
        }
    }
}

/// Joins two lists of representatives into shared cells; returns the cell
/// index of each entry of `a`, then of `b`, and the number of cells.
fn align(a: &[C64], b: &[C64], rel_tol: f64) -> (Vec<usize>, Vec<usize>, usize) {
    let points: Vec<C64> = a.iter().chain(b).copied().collect();
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    // Tiny inputs: quadratic relabeling is fine.
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1f64.max(points[i].norm()).max(points[j].norm());
            if (points[i] - points[j]).norm() <= rel_tol * scale {
                let (li, lj) = (label[i], label[j]);
                if li != lj {
                    let (keep, drop) = (li.min(lj), li.max(lj));
                    for l in label.iter_mut() {
                        if *l == drop {
                            *l = keep;
                        }
                    }
                }
            }
        }
    }
    let mut distinct: Vec<usize> = label.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let index: Vec<usize> = label
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();
    (index[..a.len()].to_vec(), index[a.len()..].to_vec(), distinct.len())
}

/// Spectral theorem for a normal field via the bounded transform, with a
/// certification report against the direct decomposition.
pub fn spectral_theorem_pipeline(a: &OperatorField, config: &PipelineConfig) -> Result<PipelineOutput, TransformError> {
    let tol = config.tol;
    let flags = predicates(a, tol)?;
    if !flags.normal {
        let (atom, residual) = first_non_normal(a, tol).expect("some atom fails normality");
        return Err(TransformError::NotNormal { atom, residual });
    }
    let selfadjoint = flags.selfadjoint;

    let b = zc_field(a)?;
    let disc = spectral_decompose(&b, CellSpec::Auto, tol)?;
    let f = &disc.measure;

    let live: Vec<usize> = (0..f.len())
        .filter(|&c| !f.is_null_cell(c, crate::calculus::NULL_CELL_TOL))
        .collect();
    let max_disc_radius = live
        .iter()
        .map(|&c| disc.representatives[c].norm())
        .fold(0.0, f64::max);
    // A pure contraction has its spectrum strictly inside the disc; anything
    // else is an internal consistency failure.
    let image = disc
        .representatives
        .iter()
        .map(|&lambda| g1_map(lambda, MARGIN_TOL))
        .collect::<Result<Vec<_>, _>>()?;

    let target = MeasurableSpace::new(
        image
            .iter()
            .enumerate()
            .map(|(i, &z)| Cell::new(format!("c{i}"), Some(point_region(z, tol, selfadjoint))))
            .collect(),
    )?;
    let identity_map: Vec<usize> = (0..f.len()).collect();
    let pushed = pushforward(f, &identity_map, target)?;
    let measure = SpectralDecomposition {
        measure: pushed,
        representatives: image.clone(),
    };

    let rebuilt = reconstruct(&measure.measure, &measure.representatives)?;
    let space = a.space();
    let mut reconstruction_residual = 0.0f64;
    let mut worst_atom = None;
    for w in space.support() {
        let r = op_norm(&(a.at(w) - rebuilt.at(w)));
        if r > reconstruction_residual || worst_atom.is_none() {
            reconstruction_residual = reconstruction_residual.max(r);
            worst_atom = Some(space.atoms()[w].clone());
        }
    }

    let direct = spectral_decompose(a, CellSpec::Auto, tol)?;
    let (e_map, d_map, joint) = align(&measure.representatives, &direct.representatives, config.align_tol);
    let joint_cells = MeasurableSpace::unlabeled(joint)?;
    let e_joint = pushforward(&measure.measure, &e_map, joint_cells.clone())?;
    let d_joint = pushforward(&direct.measure, &d_map, joint_cells)?;
    let alignment_residual = (0..joint)
        .map(|c| e_joint.cell(c).distance(d_joint.cell(c)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let max_imag_representative = live.iter().map(|&c| image[c].im.abs()).fold(0.0, f64::max);
    let passed = reconstruction_residual <= config.pipeline_tol
        && alignment_residual <= config.pipeline_tol
        && max_disc_radius < 1.0
        && (!selfadjoint || max_imag_representative <= tol);

    Ok(PipelineOutput {
        disc,
        measure,
        direct,
        report: PipelineReport {
            selfadjoint,
            reconstruction_residual,
            worst_atom,
            alignment_residual,
            max_disc_radius,
            max_imag_representative,
            passed,
        },
    })
}
