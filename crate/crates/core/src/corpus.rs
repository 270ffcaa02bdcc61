//! Seeded random test corpora: random polynomials, forms, connections and
//! gauge parameters. Every randomized check in the library and the CLI draws
//! from these generators with a recorded seed, so failures are reproducible.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::forms::{BigradedForm, ValueKind};
use crate::liealg::LieAlgebra;
use crate::poly::Polynomial;

/// Random polynomial in `num_vars` variables with real coefficients in
/// [−1, 1], total degree ≤ `max_deg`, and up to `max_terms` monomials.
pub fn random_poly<R: Rng>(rng: &mut R, num_vars: usize, max_deg: u16, max_terms: usize) -> Polynomial {
    let mut p = Polynomial::zero(num_vars);
    let terms = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..terms {
        let mut exps = vec![0u16; num_vars];
        let mut budget = max_deg;
        for e in exps.iter_mut() {
            let k = rng.gen_range(0..=budget);
            *e = k;
            budget -= k;
        }
        p.add_term(exps, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
    }
    p
}

/// Random inhomogeneous form with bidegrees up to `(max_r, max_s)` and
/// polynomial coefficients of degree ≤ `max_deg`.
pub fn random_form<R: Rng>(
    rng: &mut R,
    m: usize,
    algebra: Arc<LieAlgebra>,
    value: ValueKind,
    (max_r, max_s): (usize, usize),
    max_deg: u16,
) -> BigradedForm {
    let n = algebra.dim();
    let dim = value.dim(&algebra);
    let mut form = BigradedForm::zero(m, algebra, value);
    let max_r = max_r.min(m);
    let max_s = max_s.min(n);
    for r in 0..=max_r {
        for s in 0..=max_s {
            // one random term per bidegree
            let dx = random_subset(rng, m, r);
            let theta = random_subset(rng, n, s);
            let k = rng.gen_range(0..dim);
            let p = random_poly(rng, m, max_deg, 3);
            form.add_term(&dx, &theta, k, &p);
        }
    }
    form
}

/// Random pure-bidegree form with every component populated.
pub fn random_dense_form<R: Rng>(
    rng: &mut R,
    m: usize,
    algebra: Arc<LieAlgebra>,
    value: ValueKind,
    (r, s): (usize, usize),
    max_deg: u16,
) -> BigradedForm {
    let n = algebra.dim();
    let dim = value.dim(&algebra);
    let mut form = BigradedForm::zero(m, algebra, value);
    for dx in subsets(m, r) {
        for theta in subsets(n, s) {
            for k in 0..dim {
                let p = random_poly(rng, m, max_deg, 2);
                form.add_term(&dx, &theta, k, &p);
            }
        }
    }
    form
}

/// Random g-valued spatial 1-form (all components populated).
pub fn random_spatial_one_form<R: Rng>(
    rng: &mut R,
    m: usize,
    algebra: Arc<LieAlgebra>,
    max_deg: u16,
) -> BigradedForm {
    random_dense_form(rng, m, algebra, ValueKind::Adjoint, (1, 0), max_deg)
}

/// Random g-valued 0-form (gauge parameter).
pub fn random_gauge_parameter<R: Rng>(
    rng: &mut R,
    m: usize,
    algebra: Arc<LieAlgebra>,
    max_deg: u16,
) -> BigradedForm {
    random_dense_form(rng, m, algebra, ValueKind::Adjoint, (0, 0), max_deg)
}

/// Random n×n matrix of polynomials (e.g. a reduced kernel endomorphism τ).
pub fn random_poly_matrix<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    n: usize,
    max_deg: u16,
) -> Vec<Vec<Polynomial>> {
    (0..n)
        .map(|_| (0..n).map(|_| random_poly(rng, num_vars, max_deg, 2)).collect())
        .collect()
}

fn random_subset<R: Rng>(rng: &mut R, bound: usize, size: usize) -> Vec<u8> {
    debug_assert!(size <= bound);
    let mut all: Vec<u8> = (0..bound as u8).collect();
    for i in 0..size {
        let j = rng.gen_range(i..bound);
        all.swap(i, j);
    }
    let mut chosen = all[..size].to_vec();
    chosen.sort_unstable();
    chosen
}

/// All ascending multi-indices of the given length drawn from `0..bound`.
pub fn subsets(bound: usize, size: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, bound: usize, size: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..bound {
            current.push(i as u8);
            rec(i + 1, bound, size, current, out);
            current.pop();
        }
    }
    rec(0, bound, size, &mut current, &mut out);
    out
}
