//! Acceptance suite: 200 seeded trials per criterion at dims ≤ 8 and
//! atoms ≤ 50. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

mod common;

use std::process::ExitCode;

use common::*;
use randspec_core::calculus::{
    bounding_sequence_for, extended_domain, integrate_bounded, integrate_extended_with, reconstruct, spectral_decompose,
    BoundingSequence, CellSpec, ExtendedValue, MeasurableFunction,
};
use randspec_core::field::{adjoint_field, apply, classify, compose, proj_leq, OperatorField};
use randspec_core::linalg::{diagonalize_normal, op_norm, ComplexMatrix, C64};
use randspec_core::measure::{all_subsets, CellSet, pushforward, validate_rpovm, MeasurableSpace, Rpovm};
use randspec_core::prob::{embed, expectation, inner, l2_inner, l2_norm, vector_norm, RandomVector, SampleSpace};
use randspec_core::transforms::{
    g1_map, spectral_theorem_pipeline, tc_field, transform_pair, z_of, PipelineConfig, MARGIN_TOL,
};

const TRIALS: u64 = 200;
const MAX_DIM: usize = 8;
const MAX_ATOMS: usize = 50;

type Criterion = (&'static str, fn() -> Outcome);

/// Outcome of one criterion: the worst observed value against its bound.
struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn bound(worst: f64, limit: f64, what: &str) -> Self {
        Self {
            passed: worst <= limit,
            detail: format!("{what} {worst:.3e} (limit {limit:.0e})"),
        }
    }

    fn and(self, other: Outcome) -> Self {
        Self {
            passed: self.passed && other.passed,
            detail: format!("{}; {}", self.detail, other.detail),
        }
    }

    fn count(violations: usize, what: &str) -> Self {
        Self {
            passed: violations == 0,
            detail: format!("{what} {violations}"),
        }
    }
}

fn trial_shape(rng: &mut TestRng) -> (usize, usize) {
    use rand::Rng;
    (rng.random_range(1..=MAX_DIM), rng.random_range(1..=MAX_ATOMS))
}

fn transform_identities() -> Outcome {
    let mut identity = 0.0f64;
    let mut roundtrip = 0.0f64;
    let mut order = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(1000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let s = space(&mut r, atoms, true);
        let a = if seed % 2 == 0 {
            normal_field(&mut r, &s, dim, false).field
        } else {
            general_field(&mut r, &s, dim)
        };
        let pair = transform_pair(&a).unwrap();
        let check = pair.check().unwrap();
        identity = identity.max(check.defect_identity_residual);
        if check.defect_min_eigenvalue < -1e-9 || check.defect_max_eigenvalue > 1.0 + 1e-9 {
            order += 1;
        }
        roundtrip = roundtrip.max(tc_field(&pair.transformed).unwrap().distance(&a).unwrap());
    }
    let t = z_of(&ComplexMatrix::from_real_diag(&[3.0]), MARGIN_TOL).unwrap();
    let anchor = (t.z[(0, 0)] - C64::new(3.0 / 10f64.sqrt(), 0.0))
        .norm()
        .max((t.c[(0, 0)] - C64::new(0.1, 0.0)).norm());
    Outcome::bound(identity, 1e-9, "I-Z*Z-C")
        .and(Outcome::count(order, "0<=C<=I violations"))
        .and(Outcome::bound(roundtrip, 1e-9, "T(Z(A))-A"))
        .and(Outcome::bound(anchor, 1e-12, "scalar anchor"))
}

fn pure_contraction() -> Outcome {
    let mut violations = 0usize;
    let mut largest = 0.0f64;
    for seed in 0..TRIALS {
        let mut r = rng(2000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let s = space(&mut r, atoms, true);
        let a = match seed % 3 {
            0 => normal_field(&mut r, &s, dim, true).field,
            1 => normal_field(&mut r, &s, dim, false).field,
            _ => general_field(&mut r, &s, dim).scale(C64::new(10f64.powi((seed % 5) as i32), 0.0)),
        };
        let z = transform_pair(&a).unwrap().transformed;
        for w in s.support() {
            let n = op_norm(z.at(w));
            largest = largest.max(n);
            if n >= 1.0 {
                violations += 1;
            }
        }
    }
    let mut out = Outcome::count(violations, "violations");
    out.detail.push_str(&format!(" (smallest margin 1 - norm = {:.3e})", 1.0 - largest));
    out
}

fn star_representation() -> Outcome {
    use rand::Rng;
    let mut algebra = 0.0f64;
    let mut violations = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(3000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let cells = r.random_range(1..=6);
        let s = space(&mut r, atoms, true);
        let e = random_rpovm(&mut r, &s, dim, cells);
        let f = bounded_function(&mut r, cells);
        let g = bounded_function(&mut r, cells);
        let i = |h: &MeasurableFunction| integrate_bounded(&e, h).unwrap();
        let (if_, ig) = (i(&f), i(&g));
        let sum = i(&f.add(&g)).distance(&if_.add(&ig).unwrap()).unwrap();
        let product = i(&f.mul(&g)).distance(&compose(&if_, &ig).unwrap()).unwrap();
        let conj = i(&f.conj()).distance(&adjoint_field(&if_)).unwrap();
        algebra = algebra.max(sum).max(product).max(conj);

        let x = gaussian_vector(&mut r, dim);
        let lhs = l2_norm(&apply(&if_, &x).unwrap());
        let rhs = f.sup_norm() * vector_norm(&x);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Outcome::bound(algebra, 1e-12, "homomorphism residual").and(Outcome::count(violations, "contractivity violations"))
}

fn rpovm_axioms() -> Outcome {
    use rand::Rng;
    let mut failed = 0usize;
    let mut multiplicative = 0.0f64;
    let mut monotone = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(4000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let cells = r.random_range(1..=5);
        let s = space(&mut r, atoms, true);
        let e = random_rpovm(&mut r, &s, dim, cells);
        if !validate_rpovm(&e, 1e-10).passed() {
            failed += 1;
        }
        let subsets = all_subsets(cells);
        let evals: Vec<OperatorField> = subsets.iter().map(|set| e.eval(set)).collect();
        let index = |set: &CellSet| subsets.iter().position(|t| t == set).expect("all subsets listed");
        for (i, a) in subsets.iter().enumerate() {
            for (j, b) in subsets.iter().enumerate() {
                let meet: CellSet = a.intersection(b).copied().collect();
                let product = compose(&evals[i], &evals[j]).unwrap();
                // Frobenius residuals bound the operator-norm ones from above.
                for w in s.support() {
                    let residual = (product.at(w) - evals[index(&meet)].at(w)).frobenius_norm();
                    multiplicative = multiplicative.max(residual);
                }
            }
            // Covering pairs σ ⊂ σ ∪ {k} give monotonicity on all nested pairs by transitivity.
            for k in (0..cells).filter(|k| !a.contains(k)) {
                let mut b = a.clone();
                b.insert(k);
                if !proj_leq(&evals[i], &evals[index(&b)], 1e-10).unwrap() {
                    monotone += 1;
                }
            }
        }
    }
    Outcome::count(failed, "validation failures")
        .and(Outcome::bound(multiplicative, 1e-11, "E(s)E(t)-E(s&t)"))
        .and(Outcome::count(monotone, "monotonicity violations"))
}

/// Eigenvalues of `a(ω)` as read off a decomposition: each representative
/// repeated by the rank of its cell at `ω`.
fn spectrum_at(e: &Rpovm, reps: &[C64], w: usize) -> Vec<C64> {
    let mut out = Vec::new();
    for (c, &rep) in reps.iter().enumerate() {
        let rank = e.cell(c).at(w).trace().re.round() as usize;
        out.extend(std::iter::repeat_n(rep, rank));
    }
    out
}

fn spectral_roundtrip() -> Outcome {
    let mut recon = 0.0f64;
    let mut spectrum = 0.0f64;
    for seed in 0..TRIALS {
        let mut r = rng(5000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let s = space(&mut r, atoms, true);
        let sf = normal_field(&mut r, &s, dim, seed % 2 == 0);
        let d = spectral_decompose(&sf.field, CellSpec::Auto, 1e-9).unwrap();
        let rebuilt = reconstruct(&d.measure, &d.representatives).unwrap();
        recon = recon.max(rebuilt.distance(&sf.field).unwrap());
        for w in s.support() {
            spectrum = spectrum.max(multiset_distance(&spectrum_at(&d.measure, &d.representatives, w), &sf.eigenvalues[w]));
        }
    }
    Outcome::bound(recon, 1e-8, "reconstruction").and(Outcome::bound(spectrum, 1e-9, "eigenvalue multisets"))
}

fn pipeline_equivalence() -> Outcome {
    let mut alignment = 0.0f64;
    let mut mapping = 0.0f64;
    let mut failed = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(6000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let s = space(&mut r, atoms, true);
        let sf = normal_field(&mut r, &s, dim, seed % 2 == 0);
        let out = spectral_theorem_pipeline(&sf.field, &PipelineConfig::default()).unwrap();
        alignment = alignment.max(out.report.alignment_residual);
        if !out.report.passed {
            failed += 1;
        }
        let z = transform_pair(&sf.field).unwrap().transformed;
        for w in s.support() {
            let eig = diagonalize_normal(z.at(w), 1e-12).unwrap();
            let mapped: Vec<C64> = eig
                .eigenvalues
                .iter()
                .zip(eig.multiplicities())
                .flat_map(|(&l, k)| std::iter::repeat_n(g1_map(l, MARGIN_TOL).unwrap(), k))
                .collect();
            mapping = mapping.max(multiset_distance(&mapped, &sf.eigenvalues[w]));
        }
    }
    Outcome::bound(alignment, 1e-8, "alignment")
        .and(Outcome::count(failed, "uncertified runs"))
        .and(Outcome::bound(mapping, 1e-9, "g1(eig Z) vs eig A"))
}

fn change_of_variables() -> Outcome {
    use rand::Rng;
    let mut worst = 0.0f64;
    for seed in 0..TRIALS {
        let mut r = rng(7000 + seed);
        let (dim, atoms) = trial_shape(&mut r);
        let cells = r.random_range(1..=8);
        let targets = r.random_range(1..=5);
        let s = space(&mut r, atoms, true);
        let e = random_rpovm(&mut r, &s, dim, cells);
        let phi: Vec<usize> = (0..cells).map(|_| r.random_range(0..targets)).collect();
        let f = pushforward(&e, &phi, MeasurableSpace::unlabeled(targets).unwrap()).unwrap();
        let g = gaussian_vector(&mut r, targets);
        let lhs = integrate_bounded(&f, &MeasurableFunction::from_finite(&g)).unwrap();
        let composed: Vec<C64> = phi.iter().map(|&t| g[t]).collect();
        let rhs = integrate_bounded(&e, &MeasurableFunction::from_finite(&composed)).unwrap();
        worst = worst.max(lhs.distance(&rhs).unwrap());
    }
    Outcome::bound(worst, 1e-11, "int g dF - int g(phi) dE")
}

/// Diagonal RPOVM on `dim + 1` cells over two atoms: cell `k < dim` is the
/// coordinate projection `e_k e_k*`, the last cell is zero everywhere.
fn coordinate_rpovm(dim: usize) -> Rpovm {
    let s = SampleSpace::uniform(2).unwrap();
    let mut fields: Vec<OperatorField> = (0..dim)
        .map(|k| {
            let mut d = vec![0.0; dim];
            d[k] = 1.0;
            OperatorField::constant(s.clone(), ComplexMatrix::from_real_diag(&d))
        })
        .collect();
    fields.push(OperatorField::zero(s.clone(), dim, dim));
    Rpovm::new(MeasurableSpace::unlabeled(dim + 1).unwrap(), fields).unwrap()
}

fn extended_integral() -> Outcome {
    use rand::Rng;
    let mut mismatches = 0usize;
    let mut domain_errors = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(8000 + seed);
        let dim = r.random_range(1..=MAX_DIM);
        let e = coordinate_rpovm(dim);
        let mut values: Vec<ExtendedValue> = (0..dim)
            .map(|_| ExtendedValue::Finite(gaussian(&mut r) * 20.0))
            .collect();
        values.push(ExtendedValue::Infinite);
        let f = MeasurableFunction::new(values.clone());
        let x = gaussian_vector(&mut r, dim);

        let canonical = bounding_sequence_for(&f, &e).unwrap();
        // A coarser sequence: everything finite in one step, preceded by the
        // cells where |f| ≤ 1.
        let finite: std::collections::BTreeSet<usize> = (0..dim).collect();
        let small: std::collections::BTreeSet<usize> =
            (0..dim).filter(|&c| f.value(c).finite().unwrap().norm() <= 1.0).collect();
        let other = BoundingSequence::new(vec![small, finite], &f, &e, 1e-12).unwrap();
        let a = integrate_extended_with(&e, &f, &x, &canonical).unwrap();
        let b = integrate_extended_with(&e, &f, &x, &other).unwrap();
        if a != b {
            mismatches += 1;
        }

        // ∞ on the null cell: every x is in the domain.
        if !extended_domain(&e, &f, &x).unwrap() {
            domain_errors += 1;
        }
        // ∞ on a supported cell: x charging that cell is outside the domain.
        let k = r.random_range(0..dim);
        let mut moved = values;
        moved[k] = ExtendedValue::Infinite;
        let g = MeasurableFunction::new(moved);
        let mut y = x.clone();
        y[k] = C64::new(1.0, 0.0);
        if extended_domain(&e, &g, &y).unwrap() {
            domain_errors += 1;
        }
    }
    Outcome::count(mismatches, "sequence-dependent results").and(Outcome::count(domain_errors, "domain misclassifications"))
}

fn adjoint_calculus() -> Outcome {
    use rand::Rng;
    let mut relation = 0.0f64;
    let mut laws = 0.0f64;
    let mut duality = 0.0f64;
    for seed in 0..TRIALS {
        let mut r = rng(9000 + seed);
        let (g_dim, atoms) = trial_shape(&mut r);
        let h_dim = r.random_range(1..=MAX_DIM);
        let k_dim = r.random_range(1..=MAX_DIM);
        let s = space(&mut r, atoms, true);
        let a = rect_field(&mut r, &s, h_dim, g_dim);
        let b = rect_field(&mut r, &s, k_dim, h_dim);
        let a_dag = adjoint_field(&a);

        let x = gaussian_vector(&mut r, g_dim);
        let y = gaussian_vector(&mut r, h_dim);
        let ax = apply(&a, &x).unwrap();
        let ay = apply(&a_dag, &y).unwrap();
        for w in s.support() {
            let scale = 1f64.max(vector_norm(ax.at(w)) * vector_norm(&y));
            relation = relation.max((inner(ax.at(w), &y) - inner(&x, ay.at(w))).norm() / scale);
        }

        let ba = adjoint_field(&compose(&b, &a).unwrap());
        laws = laws.max(ba.distance(&compose(&a_dag, &adjoint_field(&b)).unwrap()).unwrap());
        let lambda = gaussian(&mut r);
        laws = laws.max(adjoint_field(&a.scale(lambda)).distance(&a_dag.scale(lambda.conj())).unwrap());
        let j = OperatorField::identity(s.clone(), h_dim);
        laws = laws.max(adjoint_field(&j).distance(&j).unwrap());

        let values: Vec<Vec<C64>> = (0..s.len()).map(|_| gaussian_vector(&mut r, h_dim)).collect();
        let g = RandomVector::new(s.clone(), h_dim, values).unwrap();
        let lhs = l2_inner(&apply(&j, &y).unwrap(), &g).unwrap();
        let rhs = inner(&y, &expectation(&g));
        duality = duality.max((lhs - rhs).norm() / 1f64.max(lhs.norm()));
    }

    // 𝔼 and J_H differ pointwise: on two fair atoms, g = (e₁, 0) has mean e₁/2.
    let s = SampleSpace::uniform(2).unwrap();
    let e1 = vec![C64::new(1.0, 0.0)];
    let g = RandomVector::new(s.clone(), 1, vec![e1.clone(), vec![C64::new(0.0, 0.0)]]).unwrap();
    let witness = embed(&expectation(&g), &s) != g;

    let mut out = Outcome::bound(relation, 1e-13, "defining relation")
        .and(Outcome::bound(laws, 1e-13, "involution laws"))
        .and(Outcome::bound(duality, 1e-13, "<J y, g> - <y, Eg>"));
    out.passed &= witness;
    out.detail.push_str(if witness { "; E != J witnessed" } else { "; no E != J witness" });
    out
}

fn hilbert_schmidt() -> Outcome {
    use rand::Rng;
    let mut worst = 0.0f64;
    let mut implication = 0usize;
    for seed in 0..TRIALS {
        let mut r = rng(10_000 + seed);
        let (g_dim, atoms) = trial_shape(&mut r);
        let h_dim = r.random_range(1..=MAX_DIM);
        let s = space(&mut r, atoms, true);
        let a = rect_field(&mut r, &s, h_dim, g_dim);
        let class = classify(&a);
        let columns: f64 = (0..g_dim).map(|i| l2_norm(&apply(&a, &basis(g_dim, i)).unwrap()).powi(2)).sum();
        worst = worst.max((class.hs_norm_sq - columns).abs() / 1f64.max(columns));
        if class.hilbert_schmidt && !class.continuous_l2 {
            implication += 1;
        }
    }
    Outcome::bound(worst, 1e-10, "HS norm vs column sum").and(Outcome::count(implication, "HS without S2"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("transform identities", transform_identities),
        ("pure contraction", pure_contraction),
        ("*-representation", star_representation),
        ("RPOVM axioms", rpovm_axioms),
        ("spectral roundtrip", spectral_roundtrip),
        ("pipeline equivalence", pipeline_equivalence),
        ("pushforward change of variables", change_of_variables),
        ("extended integral", extended_integral),
        ("adjoint calculus", adjoint_calculus),
        ("Hilbert-Schmidt consistency", hilbert_schmidt),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = run();
        all &= outcome.passed;
        println!(
            "criterion {:>2} {:<34} {} {} [{:.2}s]",
            i + 1,
            name,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
