//! Seeded random fields, measures and functions shared by the integration
//! tests. Unitaries come from Gram–Schmidt on Gaussian columns, so spectra of
//! the generated normal fields are known exactly by construction.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use randspec_core::linalg::{ComplexMatrix, C64};
use randspec_core::measure::{MeasurableSpace, Rpovm};
use randspec_core::prob::SampleSpace;
use randspec_core::{MeasurableFunction, OperatorField};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut TestRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

pub fn gaussian_vector(rng: &mut TestRng, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn gaussian_matrix(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_major(n, n, gaussian_vector(rng, n * n)).unwrap()
}

/// Space with `n` atoms; when `allow_null` is set roughly one atom in five
/// gets weight zero (at least one atom stays positive).
pub fn space(rng: &mut TestRng, n: usize, allow_null: bool) -> Arc<SampleSpace> {
    let mut raw: Vec<f64> = (0..n)
        .map(|_| if allow_null && rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.1..1.0) })
        .collect();
    if raw.iter().all(|&w| w == 0.0) {
        raw[0] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // Put the rounding remainder on the largest weight so the sum is exact enough.
    let (imax, _) = weights
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &w)| if w > best.1 { (i, w) } else { best });
    let rest: f64 = weights.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, w)| w).sum();
    weights[imax] = 1.0 - rest;
    SampleSpace::with_weights(&weights).unwrap()
}

/// Columns of a Haar-like random unitary.
pub fn unitary_columns(rng: &mut TestRng, n: usize) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vector(rng, n);
        // Two passes of modified Gram–Schmidt keep orthogonality near eps.
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(qi, vi)| qi.conj() * vi).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.iter().map(|z| z / norm).collect());
        }
    }
    cols
}

/// `Σ λ_k u_k u_k*`.
pub fn from_spectrum(cols: &[Vec<C64>], eigenvalues: &[C64]) -> ComplexMatrix {
    let n = cols.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (u, &l) in cols.iter().zip(eigenvalues) {
        m = &m + &ComplexMatrix::outer(u, u).scale(l);
    }
    m
}

/// A normal field together with the eigenvalues of each atom.
pub struct SpectralField {
    pub field: OperatorField,
    pub eigenvalues: Vec<Vec<C64>>,
}

pub fn normal_field(rng: &mut TestRng, s: &Arc<SampleSpace>, dim: usize, selfadjoint: bool) -> SpectralField {
    let mut eigenvalues = Vec::new();
    let matrices = (0..s.len())
        .map(|_| {
            let cols = unitary_columns(rng, dim);
            let lambdas: Vec<C64> = (0..dim)
                .map(|_| {
                    let z = gaussian(rng) * 2.0;
                    if selfadjoint {
                        C64::new(z.re, 0.0)
                    } else {
                        z
                    }
                })
                .collect();
            let m = from_spectrum(&cols, &lambdas);
            eigenvalues.push(lambdas);
            m
        })
        .collect();
    SpectralField {
        field: OperatorField::new(s.clone(), matrices).unwrap(),
        eigenvalues,
    }
}

pub fn general_field(rng: &mut TestRng, s: &Arc<SampleSpace>, dim: usize) -> OperatorField {
    OperatorField::from_fn(s.clone(), |_| gaussian_matrix(rng, dim)).unwrap()
}

pub fn rect_field(rng: &mut TestRng, s: &Arc<SampleSpace>, rows: usize, cols: usize) -> OperatorField {
    OperatorField::from_fn(s.clone(), |_| {
        ComplexMatrix::from_row_major(rows, cols, gaussian_vector(rng, rows * cols)).unwrap()
    })
    .unwrap()
}

/// RPOVM on `cells` unlabeled cells: each atom gets a random orthonormal basis
/// whose vectors are dealt to random cells.
pub fn random_rpovm(rng: &mut TestRng, s: &Arc<SampleSpace>, dim: usize, cells: usize) -> Rpovm {
    let mut per_cell: Vec<Vec<ComplexMatrix>> = vec![Vec::new(); cells];
    for _ in 0..s.len() {
        let cols = unitary_columns(rng, dim);
        let mut blocks = vec![ComplexMatrix::zeros(dim, dim); cells];
        for u in &cols {
            let c = rng.random_range(0..cells);
            blocks[c] = &blocks[c] + &ComplexMatrix::outer(u, u);
        }
        for (c, b) in blocks.into_iter().enumerate() {
            per_cell[c].push(b);
        }
    }
    let fields = per_cell
        .into_iter()
        .map(|ms| OperatorField::new(s.clone(), ms).unwrap())
        .collect();
    Rpovm::new(MeasurableSpace::unlabeled(cells).unwrap(), fields).unwrap()
}

pub fn bounded_function(rng: &mut TestRng, cells: usize) -> MeasurableFunction {
    MeasurableFunction::from_finite(&gaussian_vector(rng, cells))
}

pub fn basis(n: usize, k: usize) -> Vec<C64> {
    (0..n).map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
}

pub fn is_subset_pairs(n: usize) -> Vec<(BTreeSet<usize>, BTreeSet<usize>)> {
    let all = randspec_core::measure::all_subsets(n);
    let mut out = Vec::new();
    for a in &all {
        for b in &all {
            if a.is_subset(b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Sorts complex numbers by (re, im) for multiset comparison.
pub fn sorted(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Largest distance between two multisets of the same size, matched greedily
/// to the nearest remaining element.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pool: Vec<C64> = b.to_vec();
    let mut worst = 0.0f64;
    for x in sorted(a.to_vec()) {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}
