//! Seeded random scenarios.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded from a 64-bit value via
//! `SeedableRng::seed_from_u64`; Gaussian draws use `rand_distr::StandardNormal`.
//! Both are portable and value-stable, so a seed fixes the scenario bytes.

use std::collections::BTreeMap;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use randspec_core::field::{predicates, OperatorField};
use randspec_core::linalg::{ComplexMatrix, MAX_DIM, C64};
use randspec_core::prob::SampleSpace;
use randspec_core::transforms::zc_field;

use crate::error::CliError;
use crate::scenario::{
    matrix_spec, FieldSpec, FunctionValue, MeasureCellSpec, MeasureSpec, Scenario, SpaceSpec, Tolerances,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnsembleKind {
    /// `(G + G*)/2` with i.i.d. standard complex Gaussian `G`.
    HermitianGaussian,
    /// `U diag(λ) U*` with Haar-like `U` and complex Gaussian `λ`.
    Normal,
    /// A projection-valued measure: a random orthonormal basis per atom, its
    /// vectors dealt to up to three cells.
    ProjectionValued,
    /// Real symmetric tridiagonal, unit off-diagonals, diagonal i.i.d.
    /// uniform on `[−w, w]`.
    AndersonTridiagonal,
    /// `𝒵` of a normal draw.
    PureContraction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleParams {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub atoms: usize,
    pub seed: u64,
    /// Disorder strength `w` for the Anderson ensemble.
    pub disorder: f64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Orthonormal columns from Gram–Schmidt (applied twice) on Gaussian vectors.
fn unitary_columns(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    cols
}

fn hermitian_gaussian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.sample::<f64, _>(StandardNormal), 0.0);
        for j in i + 1..n {
            let z = gaussian(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let cols = unitary_columns(rng, n);
    let mut m = ComplexMatrix::zeros(n, n);
    for u in &cols {
        m = &m + &ComplexMatrix::outer(u, u).scale(gaussian(rng));
    }
    m
}

fn anderson(rng: &mut ChaCha8Rng, n: usize, w: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let u: f64 = rng.random();
        m[(i, i)] = C64::new(if w == 0.0 { 0.0 } else { w * (2.0 * u - 1.0) }, 0.0);
        if i + 1 < n {
            m[(i, i + 1)] = C64::new(1.0, 0.0);
            m[(i + 1, i)] = C64::new(1.0, 0.0);
        }
    }
    m
}

fn check(params: &EnsembleParams) -> Result<(), CliError> {
    if params.dim == 0 || params.dim > MAX_DIM {
        return Err(CliError::InvalidParameter(format!(
            "dim must be in 1..={MAX_DIM}, got {}",
            params.dim
        )));
    }
    if params.atoms == 0 {
        return Err(CliError::InvalidParameter("atoms must be at least 1".into()));
    }
    if !params.disorder.is_finite() || params.disorder < 0.0 {
        return Err(CliError::InvalidParameter(format!(
            "disorder must be finite and non-negative, got {}",
            params.disorder
        )));
    }
    Ok(())
}

/// Deterministic scenario for the given parameters.
pub fn generate_ensemble(params: &EnsembleParams) -> Result<Scenario, CliError> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.dim;
    let atoms: Vec<String> = (0..params.atoms).map(|i| format!("w{i}")).collect();
    let weights = vec![1.0 / params.atoms as f64; params.atoms];
    let space = SampleSpace::new(atoms.clone(), weights.clone())?;

    let mut fields = BTreeMap::new();
    let mut measures = BTreeMap::new();
    let mut functions = BTreeMap::new();
    let field_spec = |m: Vec<ComplexMatrix>| FieldSpec {
        domain: "H".into(),
        codomain: "H".into(),
        matrices: m.iter().map(matrix_spec).collect(),
    };
    match params.kind {
        EnsembleKind::HermitianGaussian => {
            let ms: Vec<_> = (0..params.atoms).map(|_| hermitian_gaussian(&mut rng, n)).collect();
            fields.insert("A".to_string(), field_spec(ms));
        }
        EnsembleKind::Normal => {
            let ms: Vec<_> = (0..params.atoms).map(|_| normal(&mut rng, n)).collect();
            fields.insert("A".to_string(), field_spec(ms));
        }
        EnsembleKind::AndersonTridiagonal => {
            let ms: Vec<_> = (0..params.atoms).map(|_| anderson(&mut rng, n, params.disorder)).collect();
            fields.insert("A".to_string(), field_spec(ms));
        }
        EnsembleKind::PureContraction => {
            let ms: Vec<_> = (0..params.atoms).map(|_| normal(&mut rng, n)).collect();
            let z = zc_field(&OperatorField::new(space.clone(), ms)?)?;
            if !predicates(&z, 0.0)?.pure_contraction {
                return Err(CliError::InvalidParameter("draw is not a pure contraction".into()));
            }
            fields.insert("Z".to_string(), field_spec(z.matrices().to_vec()));
        }
        EnsembleKind::ProjectionValued => {
            let cells = n.min(3);
            let mut blocks = vec![Vec::with_capacity(params.atoms); cells];
            for _ in 0..params.atoms {
                let mut per_atom = vec![ComplexMatrix::zeros(n, n); cells];
                for u in unitary_columns(&mut rng, n) {
                    let c = rng.random_range(0..cells);
                    per_atom[c] = &per_atom[c] + &ComplexMatrix::outer(&u, &u);
                }
                for (c, m) in per_atom.into_iter().enumerate() {
                    blocks[c].push(m);
                }
            }
            let cells_spec = blocks
                .iter()
                .enumerate()
                .map(|(c, ms)| MeasureCellSpec {
                    id: format!("c{c}"),
                    region: None,
                    matrices: ms.iter().map(matrix_spec).collect(),
                })
                .collect();
            measures.insert(
                "E".to_string(),
                MeasureSpec {
                    hilbert: "H".into(),
                    cells: cells_spec,
                },
            );
            functions.insert(
                "index".to_string(),
                (0..cells).map(|c| FunctionValue::Finite([c as f64, 0.0])).collect(),
            );
        }
    }

    Ok(Scenario {
        space: SpaceSpec { atoms, weights },
        hilbert_dims: BTreeMap::from([("H".to_string(), n)]),
        fields,
        functions,
        cells: None,
        measures,
        seed: params.seed,
        tolerances: Tolerances::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::to_json;
    use randspec_core::calculus::{spectral_decompose, CellSpec};
    use randspec_core::measure::validate_rpovm;

    fn params(kind: EnsembleKind) -> EnsembleParams {
        EnsembleParams {
            kind,
            dim: 4,
            atoms: 6,
            seed: 11,
            disorder: 1.5,
        }
    }

    #[test]
    fn fixed_seed_is_byte_identical() {
        for kind in EnsembleKind::value_variants() {
            let a = to_json(&generate_ensemble(&params(*kind)).unwrap()).unwrap();
            let b = to_json(&generate_ensemble(&params(*kind)).unwrap()).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
        let mut other = params(EnsembleKind::Normal);
        other.seed = 12;
        assert_ne!(
            generate_ensemble(&other).unwrap(),
            generate_ensemble(&params(EnsembleKind::Normal)).unwrap()
        );
    }

    #[test]
    fn generated_fields_satisfy_their_predicates() {
        let tol = 1e-9;
        let flags = |kind| {
            let model = generate_ensemble(&params(kind)).unwrap().model().unwrap();
            let field = model.fields.values().next().unwrap().clone();
            predicates(&field, tol).unwrap()
        };
        assert!(flags(EnsembleKind::HermitianGaussian).selfadjoint);
        assert!(flags(EnsembleKind::Normal).normal);
        assert!(flags(EnsembleKind::AndersonTridiagonal).selfadjoint);
        assert!(flags(EnsembleKind::PureContraction).pure_contraction);

        let model = generate_ensemble(&params(EnsembleKind::ProjectionValued)).unwrap().model().unwrap();
        assert!(validate_rpovm(&model.measures["E"], 1e-10).passed());
    }

    #[test]
    fn anderson_diagonal_stays_in_band() {
        let model = generate_ensemble(&params(EnsembleKind::AndersonTridiagonal)).unwrap().model().unwrap();
        for m in model.fields["A"].matrices() {
            for i in 0..4 {
                assert!(m[(i, i)].re.abs() <= 1.5 && m[(i, i)].im == 0.0);
                for j in 0..4 {
                    let expected = if i.abs_diff(j) == 1 { 1.0 } else { m[(i, j)].re };
                    assert_eq!(m[(i, j)].re, expected);
                    if i != j && i.abs_diff(j) != 1 {
                        assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_disorder_gives_identical_cells_everywhere() {
        let mut p = params(EnsembleKind::AndersonTridiagonal);
        p.disorder = 0.0;
        let model = generate_ensemble(&p).unwrap().model().unwrap();
        let a = &model.fields["A"];
        assert!(a.matrices().windows(2).all(|w| w[0] == w[1]));
        let d = spectral_decompose(a, CellSpec::Auto, 1e-9).unwrap();
        // Free chain of length 4 has four simple eigenvalues 2cos(kπ/5).
        assert_eq!(d.measure.len(), 4);
        for cell in d.measure.cell_fields() {
            assert!(cell.matrices().windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params(EnsembleKind::Normal);
        p.dim = 0;
        assert!(matches!(generate_ensemble(&p), Err(CliError::InvalidParameter(_))));
        let mut p = params(EnsembleKind::AndersonTridiagonal);
        p.disorder = -1.0;
        assert!(matches!(generate_ensemble(&p), Err(CliError::InvalidParameter(_))));
    }
}
