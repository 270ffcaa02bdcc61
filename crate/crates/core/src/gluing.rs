//! Atlases of trivializations, directed overlap transition data, transport
//! of local forms between trivializations, and executable verification of
//! the cocycle and gluing identities. Transition data can be supplied
//! explicitly or generated from group-valued cocycles by conjugation.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Error;
use crate::forms::{BigradedForm, ValueKind};
use crate::liealg::LieAlgebra;
use crate::poly::{
    eval_poly_matrix, poly_matrix_identity, poly_matrix_mul, ChartBox, PolyMatrix, Polynomial,
};
use crate::report::CheckReport;

/// Default lattice density for polynomial-identity testing by sampling.
pub const DEFAULT_LATTICE_DENSITY: usize = 5;

/// A family of chart boxes with directed overlaps over one Lie algebra.
#[derive(Clone, Debug)]
pub struct Atlas {
    algebra: Arc<LieAlgebra>,
    charts: Vec<ChartBox>,
    overlaps: BTreeMap<(usize, usize), ChartBox>,
}

impl Atlas {
    pub fn new(algebra: Arc<LieAlgebra>, charts: Vec<ChartBox>) -> Self {
        Atlas { algebra, charts, overlaps: BTreeMap::new() }
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn charts(&self) -> &[ChartBox] {
        &self.charts
    }

    pub fn m(&self) -> usize {
        self.charts.first().map_or(0, |c| c.dim())
    }

    /// Registers the overlap box of charts i and j, in both directions.
    pub fn add_overlap(&mut self, i: usize, j: usize, overlap: ChartBox) -> Result<(), Error> {
        for id in [i, j] {
            let chart = self.charts.get(id).ok_or(Error::UnknownChart(id))?;
            if !chart.contains(&overlap) {
                return Err(Error::AtlasCheck(format!(
                    "overlap box of ({i},{j}) is not contained in chart {id}"
                )));
            }
        }
        if i == j {
            return Err(Error::AtlasCheck("overlap must join two distinct charts".into()));
        }
        self.overlaps.insert((i, j), overlap.clone());
        self.overlaps.insert((j, i), overlap);
        Ok(())
    }

    pub fn overlap(&self, i: usize, j: usize) -> Result<&ChartBox, Error> {
        self.overlaps.get(&(i, j)).ok_or(Error::UnknownOverlap { i, j })
    }

    pub fn overlaps(&self) -> impl Iterator<Item = (&(usize, usize), &ChartBox)> {
        self.overlaps.iter()
    }

    /// All ordered triples (i,j,k) of pairwise-overlapping distinct charts
    /// whose three overlap boxes have a common interior.
    pub fn triple_overlaps(&self) -> Vec<(usize, usize, usize, ChartBox)> {
        let mut out = Vec::new();
        let k_max = self.charts.len();
        for i in 0..k_max {
            for j in 0..k_max {
                for k in 0..k_max {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let (Some(b_ij), Some(b_jk), Some(b_ik)) = (
                        self.overlaps.get(&(i, j)),
                        self.overlaps.get(&(j, k)),
                        self.overlaps.get(&(i, k)),
                    ) else {
                        continue;
                    };
                    if let Some(b) = b_ij
                        .intersect(b_jk)
                        .and_then(|x| x.intersect(b_ik))
                    {
                        out.push((i, j, k, b));
                    }
                }
            }
        }
        out
    }
}

/// One directed transition: the automorphism matrix G (α(E_a) = Σ_b G[b][a]
/// E_b, entries polynomial on the overlap) and the g-valued spatial 1-form χ.
#[derive(Clone, Debug)]
pub struct Transition {
    pub g: PolyMatrix,
    pub chi: BigradedForm,
}

/// The Čech transition data of an atlas: one [`Transition`] per directed
/// overlap.
#[derive(Clone, Debug)]
pub struct TransitionData {
    atlas: Atlas,
    transitions: BTreeMap<(usize, usize), Transition>,
}

impl TransitionData {
    pub fn new(atlas: Atlas) -> Self {
        TransitionData { atlas, transitions: BTreeMap::new() }
    }

    /// Identity transition data (G = Id, χ = 0) on every registered overlap.
    pub fn identity(atlas: Atlas) -> Self {
        let m = atlas.m();
        let n = atlas.algebra.dim();
        let mut data = TransitionData::new(atlas);
        let keys: Vec<(usize, usize)> = data.atlas.overlaps.keys().copied().collect();
        for (i, j) in keys {
            let chi = BigradedForm::zero(m, data.atlas.algebra.clone(), ValueKind::Adjoint);
            data.transitions
                .insert((i, j), Transition { g: poly_matrix_identity(m, n), chi });
        }
        data
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    /// Sets the transition of one direction (i,j).
    pub fn set_transition(
        &mut self,
        i: usize,
        j: usize,
        g: PolyMatrix,
        chi: BigradedForm,
    ) -> Result<(), Error> {
        self.atlas.overlap(i, j)?;
        let n = self.atlas.algebra.dim();
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "transition matrix G".into(),
                expected: n,
                got: g.len(),
            });
        }
        self.transitions.insert((i, j), Transition { g, chi });
        Ok(())
    }

    pub fn transition(&self, i: usize, j: usize) -> Result<&Transition, Error> {
        self.transitions.get(&(i, j)).ok_or(Error::UnknownOverlap { i, j })
    }

    /// Transports a local form from the j-trivialization to the
    /// i-trivialization over the overlap U_ij.
    ///
    /// In components this substitutes θ^a ↦ Σ_b (G^j_i)^a_b θ^b + χ^a_{ji}
    /// on the inner slots (dx slots unchanged) and rotates adjoint value
    /// indices by G^i_j; scalar values get the slot substitution only.
    pub fn transport(
        &self,
        omega_j: &BigradedForm,
        i: usize,
        j: usize,
    ) -> Result<BigradedForm, Error> {
        let forward = self.transition(i, j)?;
        let backward = self.transition(j, i)?;
        let n = self.atlas.algebra.dim();
        let m = omega_j.m();
        let num_vars = m;
        // spatial[a][μ]: dx^μ coefficient of χ_{ji}^a
        let mut spatial = vec![vec![Polynomial::zero(num_vars); m]; n];
        for mu in 0..m {
            if let Some(vals) = backward.chi.component(&[mu as u8], &[]) {
                for a in 0..n {
                    spatial[a][mu] = vals[a].clone();
                }
            }
        }
        // inner[a][b] = (G^j_i)^a_b = backward.g[a][b]
        let inner: Vec<Vec<Polynomial>> =
            (0..n).map(|a| (0..n).map(|b| backward.g[a][b].clone()).collect()).collect();
        let rotation = match omega_j.value() {
            ValueKind::Adjoint => Some(forward.g.as_slice()),
            ValueKind::Scalar => None,
            ValueKind::Rep(_) => {
                return Err(Error::ValueKindMismatch(
                    "transport of representation-valued forms is not supported".into(),
                ))
            }
        };
        omega_j.substitute_inner(&spatial, &inner, rotation)
    }

    /// Applies the pointwise automorphism α^i_j to an adjoint-valued form
    /// (value rotation only, no slot substitution).
    pub fn rotate_values(
        &self,
        omega: &BigradedForm,
        i: usize,
        j: usize,
    ) -> Result<BigradedForm, Error> {
        let forward = self.transition(i, j)?;
        if *omega.value() != ValueKind::Adjoint {
            return Err(Error::ValueKindMismatch("value rotation needs an adjoint-valued form".into()));
        }
        let n = self.atlas.algebra.dim();
        let mut out = BigradedForm::zero(omega.m(), omega.algebra().clone(), ValueKind::Adjoint);
        for ((dx, theta), vals) in omega.components() {
            for b in 0..n {
                let mut p = Polynomial::zero(vals[0].num_vars());
                for a in 0..n {
                    if !vals[a].is_zero() && !forward.g[b][a].is_zero() {
                        p = &p + &(&forward.g[b][a] * &vals[a]);
                    }
                }
                if !p.is_zero() {
                    out.add_term(dx, theta, b, &p);
                }
            }
        }
        Ok(out)
    }

    /// Verifies the four cocycle identities on every overlap and triple
    /// overlap, sampling residuals on a deterministic lattice.
    pub fn check_cocycles(&self, density: usize, threshold: f64) -> CheckReport {
        let mut report = CheckReport::new();
        let algebra = &self.atlas.algebra;
        let n = algebra.dim();
        // pairwise identities
        for ((i, j), overlap_box) in self.atlas.overlaps() {
            let (i, j) = (*i, *j);
            let points = overlap_box.lattice(density);
            let loc = format!("({i},{j})");
            let Ok(fwd) = self.transition(i, j) else {
                report.add("transition-present", &loc, f64::INFINITY, threshold);
                continue;
            };
            let Ok(bwd) = self.transition(j, i) else {
                report.add("transition-present", format!("({j},{i})"), f64::INFINITY, threshold);
                continue;
            };
            // G^i_j · G^j_i = Id
            let prod = poly_matrix_mul(&fwd.g, &bwd.g);
            let mut worst = 0.0f64;
            for point in &points {
                let mat = eval_poly_matrix(&prod, point);
                for r in 0..n {
                    for c in 0..n {
                        let expected = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                        worst = worst.max((mat[(r, c)] - expected).norm());
                    }
                }
            }
            report.add("inverse: G^i_j G^j_i = Id", &loc, worst, threshold);

            // α^i_j ∘ χ_ji + χ_ij = 0
            match self.rotate_values(&bwd.chi, i, j) {
                Ok(rotated) => match rotated.add(&fwd.chi) {
                    Ok(sum) => {
                        report.add("chi: α^i_j χ_ji + χ_ij = 0", &loc, sum.max_abs_eval(&points), threshold)
                    }
                    Err(_) => report.add("chi: α^i_j χ_ji + χ_ij = 0", &loc, f64::INFINITY, threshold),
                },
                Err(_) => report.add("chi: α^i_j χ_ji + χ_ij = 0", &loc, f64::INFINITY, threshold),
            }

            // automorphism: G[ξ,η] = [Gξ, Gη] on basis pairs
            let mut aut_worst = 0.0f64;
            for point in &points {
                let g = eval_poly_matrix(&fwd.g, point);
                for a in 0..n {
                    for b in 0..n {
                        for e in 0..n {
                            let mut lhs = Complex64::new(0.0, 0.0);
                            for c in 0..n {
                                lhs += algebra.c(a, b, c) * g[(e, c)];
                            }
                            let mut rhs = Complex64::new(0.0, 0.0);
                            for c in 0..n {
                                for d in 0..n {
                                    rhs += algebra.c(c, d, e) * g[(c, a)] * g[(d, b)];
                                }
                            }
                            aut_worst = aut_worst.max((lhs - rhs).norm());
                        }
                    }
                }
            }
            report.add("automorphism: G C(·,·) = C(G·,G·)", &loc, aut_worst, threshold);
        }
        // triple identities
        for (i, j, k, triple_box) in self.atlas.triple_overlaps() {
            let points = triple_box.lattice(density);
            let loc = format!("({i},{j},{k})");
            let (Ok(g_ij), Ok(g_jk), Ok(g_ik)) = (
                self.transition(i, j),
                self.transition(j, k),
                self.transition(i, k),
            ) else {
                continue;
            };
            // G^i_k = G^i_j · G^j_k
            let prod = poly_matrix_mul(&g_ij.g, &g_jk.g);
            let mut worst = 0.0f64;
            for point in &points {
                let diff = eval_poly_matrix(&prod, point) - eval_poly_matrix(&g_ik.g, point);
                worst = worst.max(diff.map(|x| x.norm()).max());
            }
            report.add("cocycle: G^i_k = G^i_j G^j_k", &loc, worst, threshold);

            // χ_ik = α^i_j ∘ χ_jk + χ_ij
            let residual = self
                .rotate_values(&g_jk.chi, i, j)
                .and_then(|rot| rot.add(&g_ij.chi))
                .and_then(|sum| sum.sub(&g_ik.chi))
                .map(|diff| diff.max_abs_eval(&points))
                .unwrap_or(f64::INFINITY);
            report.add("cocycle: χ_ik = α^i_j χ_jk + χ_ij", &loc, residual, threshold);
        }
        report
    }

    /// Verifies that a per-chart family is glued: α̂^i_j(ω^j) = ω^i on every
    /// directed overlap.
    pub fn check_global_family(
        &self,
        family: &[BigradedForm],
        density: usize,
        threshold: f64,
    ) -> CheckReport {
        let mut report = CheckReport::new();
        for ((i, j), overlap_box) in self.atlas.overlaps() {
            let (i, j) = (*i, *j);
            let loc = format!("({i},{j})");
            if i >= family.len() || j >= family.len() {
                report.add("family: member present", &loc, f64::INFINITY, threshold);
                continue;
            }
            let points = overlap_box.lattice(density);
            let residual = self
                .transport(&family[j], i, j)
                .and_then(|t| t.sub(&family[i]))
                .map(|diff| diff.max_abs_eval(&points))
                .unwrap_or(f64::INFINITY);
            report.add("family: α̂^i_j ω^j = ω^i", &loc, residual, threshold);
        }
        report
    }

    /// True iff det G > 0 at every lattice point of every overlap — the
    /// orientability criterion for the kernel bundle.
    pub fn check_inner_orientable(&self, density: usize) -> bool {
        for ((i, j), overlap_box) in self.atlas.overlaps() {
            let Ok(t) = self.transition(*i, *j) else { return false };
            for point in overlap_box.lattice(density) {
                let det = eval_poly_matrix(&t.g, &point).determinant();
                if det.im.abs() > 1e-9 || det.re <= 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// A group-valued cocycle entry: an invertible matrix of polynomials with a
/// user-supplied polynomial inverse (unipotent or unitary parameterizations).
#[derive(Clone, Debug)]
pub struct GroupCocycleEntry {
    pub g: PolyMatrix,
    pub g_inv: PolyMatrix,
}

/// Builds transition data from a group-valued cocycle by conjugation:
/// G^i_j = matrix of Ad_{g_ij} in the realization basis and
/// χ_ij = g_ij · d(g_ij^{-1}), expanded in the basis.
pub fn atiyah_transitions(
    atlas: Atlas,
    cocycle: &BTreeMap<(usize, usize), GroupCocycleEntry>,
    tolerance: f64,
) -> Result<TransitionData, Error> {
    let algebra = atlas.algebra.clone();
    let rho = algebra.realization()?.to_vec();
    let gram_inv = algebra.realization_gram_inverse()?;
    let n = algebra.dim();
    let k = rho[0].nrows();
    let m = atlas.m();
    let mut data = TransitionData::new(atlas);
    for ((i, j), entry) in cocycle {
        // inverse check: g · g⁻¹ = Id as polynomials
        let prod = poly_matrix_mul(&entry.g, &entry.g_inv);
        let mut residual = 0.0f64;
        for (r, row) in prod.iter().enumerate() {
            for (c, p) in row.iter().enumerate() {
                let expected = if r == c { Polynomial::one(m) } else { Polynomial::zero(m) };
                residual = residual.max((p - &expected).max_abs_coeff());
            }
        }
        if residual > tolerance {
            return Err(Error::InverseCheckFailed { residual, tolerance });
        }

        // G[b][a]: expansion of g ρ(E_a) g⁻¹ in the realization basis
        let mut g_matrix = vec![vec![Polynomial::zero(m); n]; n];
        for a in 0..n {
            let rho_a = crate::poly::poly_matrix_from_const(m, &rho[a]);
            let conj = poly_matrix_mul(&poly_matrix_mul(&entry.g, &rho_a), &entry.g_inv);
            let coeffs = expand_poly_matrix(&conj, &rho, &gram_inv, m, tolerance)?;
            for (b, p) in coeffs.into_iter().enumerate() {
                g_matrix[b][a] = p;
            }
        }

        // χ_ij = g · d(g⁻¹): one matrix per coordinate, expanded in the basis
        let mut chi = BigradedForm::zero(m, algebra.clone(), ValueKind::Adjoint);
        for mu in 0..m {
            let d_inv: PolyMatrix = (0..k)
                .map(|r| {
                    (0..k)
                        .map(|c| entry.g_inv[r][c].partial(mu).expect("coordinate in range"))
                        .collect()
                })
                .collect();
            let chi_mu = poly_matrix_mul(&entry.g, &d_inv);
            let coeffs = expand_poly_matrix(&chi_mu, &rho, &gram_inv, m, tolerance)?;
            for (a, p) in coeffs.into_iter().enumerate() {
                if !p.is_zero() {
                    chi.add_term(&[mu as u8], &[], a, &p);
                }
            }
        }
        data.set_transition(*i, *j, g_matrix, chi)?;
    }
    Ok(data)
}

/// Expands a k×k polynomial matrix in the realization basis via the Gram
/// inverse of the Frobenius pairing; errors if the matrix leaves the span.
pub(crate) fn expand_poly_matrix(
    x: &PolyMatrix,
    rho: &[nalgebra::DMatrix<Complex64>],
    gram_inv: &nalgebra::DMatrix<Complex64>,
    num_vars: usize,
    tolerance: f64,
) -> Result<Vec<Polynomial>, Error> {
    let n = rho.len();
    let k = rho[0].nrows();
    // pairings tr(E_a† X) as polynomials
    let mut pairings = Vec::with_capacity(n);
    for basis in rho.iter().take(n) {
        let mut tr = Polynomial::zero(num_vars);
        for r in 0..k {
            for c in 0..k {
                let w = basis[(r, c)].conj();
                if w.norm() > 0.0 && !x[r][c].is_zero() {
                    tr = &tr + &x[r][c].scale(w);
                }
            }
        }
        pairings.push(tr);
    }
    let mut coeffs = vec![Polynomial::zero(num_vars); n];
    for (a, coeff) in coeffs.iter_mut().enumerate() {
        for (b, pairing) in pairings.iter().enumerate() {
            let w = gram_inv[(a, b)];
            if w.norm() > 0.0 && !pairing.is_zero() {
                *coeff = &*coeff + &pairing.scale(w);
            }
        }
    }
    // span check: reconstruct and compare
    let mut residual = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            let mut recon = Polynomial::zero(num_vars);
            for (a, coeff) in coeffs.iter().enumerate() {
                let w = rho[a][(r, c)];
                if w.norm() > 0.0 && !coeff.is_zero() {
                    recon = &recon + &coeff.scale(w);
                }
            }
            residual = residual.max((&x[r][c] - &recon).max_abs_coeff());
        }
    }
    if residual > tolerance {
        return Err(Error::SpanProjectionFailed { residual, tolerance });
    }
    Ok(coeffs)
}
