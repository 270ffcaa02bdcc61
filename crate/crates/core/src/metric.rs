//! Inner metrics, metric triples (g, h, Ȧ), assembly and decomposition of
//! metrics on the algebroid, the h-pairing on adjoint-valued forms, and the
//! Hodge star operator in the mixed basis.
//!
//! g and h are constant per chart, so density prefactors √|g|, √|h| are plain
//! positive reals and all form coefficients stay polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::forms::{BigradedForm, MixedForm, ValueKind};
use crate::liealg::LieAlgebra;
use crate::poly::{ChartBox, Polynomial};
use crate::report::CheckReport;

/// Threshold below which a metric determinant counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// A constant-per-chart metric on the kernel bundle: a complex symmetric
/// n×n matrix with cached determinant data.
#[derive(Clone, Debug)]
pub struct InnerMetric {
    h: DMatrix<Complex64>,
    det: Complex64,
    inverse: Option<DMatrix<Complex64>>,
}

impl InnerMetric {
    pub fn new(h: DMatrix<Complex64>) -> Result<Self, Error> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                context: "inner metric matrix".into(),
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        let sym_residual = (&h - h.transpose()).map(|x| x.norm()).max();
        if sym_residual > 1e-12 {
            return Err(Error::DegenerateMetric(format!(
                "inner metric is not symmetric: residual {sym_residual:.3e}"
            )));
        }
        let det = h.determinant();
        let inverse = if det.norm() > DEGENERACY_TOL { h.clone().try_inverse() } else { None };
        Ok(InnerMetric { h, det, inverse })
    }

    /// The Killing form of the algebra as an inner metric; errors when the
    /// algebra is not semi-simple.
    pub fn killing(algebra: &LieAlgebra) -> Result<Self, Error> {
        let k = algebra.killing_form();
        if k.determinant().norm() <= DEGENERACY_TOL {
            return Err(Error::DegenerateMetric(format!(
                "Killing form of {} is degenerate",
                algebra.name()
            )));
        }
        Self::new(k)
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.h[(a, b)]
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    /// √|det h| — the positive real density prefactor.
    pub fn sqrt_abs_det(&self) -> f64 {
        self.det.norm().sqrt()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn inverse(&self) -> Result<&DMatrix<Complex64>, Error> {
        self.inverse.as_ref().ok_or_else(|| {
            Error::InnerDegenerate { direction: kernel_direction(&self.h) }
        })
    }

    /// True iff h is ad-invariant: h·ad_{E_a} + ad_{E_a}ᵀ·h = 0 for every a.
    pub fn is_killing(&self, algebra: &LieAlgebra) -> bool {
        if algebra.dim() != self.n() {
            return false;
        }
        (0..algebra.dim()).all(|a| {
            let ad = algebra.adjoint_basis(a);
            (&self.h * &ad + ad.transpose() * &self.h)
                .map(|x| x.norm())
                .max()
                <= 1e-12
        })
    }
}

/// Names a direction (near-)annihilated by a singular symmetric matrix.
fn kernel_direction(h: &DMatrix<Complex64>) -> usize {
    let svd = h.clone().svd(false, true);
    let v_t = match svd.v_t {
        Some(v) => v,
        None => return 0,
    };
    // row of V^T for the smallest singular value
    let mut min_idx = 0;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[min_idx] {
            min_idx = k;
        }
    }
    let row = v_t.row(min_idx);
    let mut dir = 0;
    for (k, x) in row.iter().enumerate() {
        if x.norm() > row[dir].norm() {
            dir = k;
        }
    }
    dir
}

/// The equivalent data of an inner-non-degenerate metric on the algebroid:
/// base metric g, inner metric h, and background ordinary connection Ȧ.
#[derive(Clone, Debug)]
pub struct MetricTriple {
    g: DMatrix<Complex64>,
    g_inverse: Option<DMatrix<Complex64>>,
    h: InnerMetric,
    a_dot: BigradedForm,
}

impl MetricTriple {
    pub fn new(
        g: DMatrix<Complex64>,
        h: InnerMetric,
        a_dot: BigradedForm,
    ) -> Result<Self, Error> {
        let m = a_dot.m();
        if g.nrows() != m || g.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "base metric".into(),
                expected: m,
                got: g.nrows(),
            });
        }
        if a_dot.n() != h.n() {
            return Err(Error::DimensionMismatch {
                context: "inner metric vs algebra".into(),
                expected: a_dot.n(),
                got: h.n(),
            });
        }
        let sym_residual = (&g - g.transpose()).map(|x| x.norm()).max();
        if sym_residual > 1e-12 {
            return Err(Error::DegenerateMetric(format!(
                "base metric is not symmetric: residual {sym_residual:.3e}"
            )));
        }
        if *a_dot.value() != ValueKind::Adjoint
            || a_dot.bidegrees().iter().any(|&bd| bd != (1, 0))
        {
            return Err(Error::BackgroundMismatch(
                "background connection must be an adjoint-valued (1,0)-form".into(),
            ));
        }
        let g_inverse = if g.determinant().norm() > DEGENERACY_TOL {
            g.clone().try_inverse()
        } else {
            None
        };
        Ok(MetricTriple { g, g_inverse, h, a_dot })
    }

    pub fn m(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn g_inverse(&self) -> Result<&DMatrix<Complex64>, Error> {
        self.g_inverse
            .as_ref()
            .ok_or_else(|| Error::DegenerateMetric("base metric is degenerate".into()))
    }

    pub fn sqrt_abs_det_g(&self) -> f64 {
        self.g.determinant().norm().sqrt()
    }

    pub fn h(&self) -> &InnerMetric {
        &self.h
    }

    pub fn a_dot(&self) -> &BigradedForm {
        &self.a_dot
    }

    /// Ȧ as a constant n×m coefficient matrix (Ȧ^a_μ); errors when any
    /// component is non-constant.
    pub fn a_dot_matrix(&self) -> Result<DMatrix<Complex64>, Error> {
        let m = self.m();
        let n = self.h.n();
        let mut out = DMatrix::<Complex64>::zeros(n, m);
        for mu in 0..m {
            if let Some(vals) = self.a_dot.component(&[mu as u8], &[]) {
                for a in 0..n {
                    if !vals[a].is_constant() {
                        return Err(Error::Config(
                            "metric assembly requires a constant background connection".into(),
                        ));
                    }
                    out[(a, mu)] = vals[a].constant_term();
                }
            }
        }
        Ok(out)
    }
}

/// A metric on the algebroid in the local basis (∂_μ, E_a): a symmetric
/// (m+n)×(m+n) matrix per chart.
#[derive(Clone, Debug)]
pub struct AlgebroidMetric {
    pub m: usize,
    pub matrix: DMatrix<Complex64>,
}

/// ĝ = [[g + Ȧᵀ h Ȧ, −Ȧᵀ h], [−h Ȧ, h]] — the metric whose ordinary
/// connection is Ȧ and whose base/inner parts are g and h.
pub fn assemble_metric(t: &MetricTriple) -> Result<AlgebroidMetric, Error> {
    let m = t.m();
    let n = t.h().n();
    let a_dot = t.a_dot_matrix()?;
    let h = t.h().matrix();
    let top_left = t.g() + a_dot.transpose() * h * &a_dot;
    let top_right = -(a_dot.transpose() * h);
    let bottom_left = -(h * &a_dot);
    let mut matrix = DMatrix::<Complex64>::zeros(m + n, m + n);
    matrix.view_mut((0, 0), (m, m)).copy_from(&top_left);
    matrix.view_mut((0, m), (m, n)).copy_from(&top_right);
    matrix.view_mut((m, 0), (n, m)).copy_from(&bottom_left);
    matrix.view_mut((m, m), (n, n)).copy_from(h);
    Ok(AlgebroidMetric { m, matrix })
}

/// Recovers the triple (g, h, Ȧ) of an inner-non-degenerate metric: h is the
/// inner block, Ȧ solves the orthogonality condition against h, and g is the
/// horizontal restriction.
pub fn decompose_metric(
    metric: &AlgebroidMetric,
    algebra: std::sync::Arc<LieAlgebra>,
) -> Result<MetricTriple, Error> {
    let m = metric.m;
    let total = metric.matrix.nrows();
    if total <= m {
        return Err(Error::DimensionMismatch {
            context: "algebroid metric".into(),
            expected: m + 1,
            got: total,
        });
    }
    let n = total - m;
    if n != algebra.dim() {
        return Err(Error::DimensionMismatch {
            context: "algebroid metric inner block".into(),
            expected: algebra.dim(),
            got: n,
        });
    }
    let h_block = metric.matrix.view((m, m), (n, n)).into_owned();
    let h = InnerMetric::new(h_block)?;
    let h_inv = h.inverse()?.clone();
    // top-right = −Ȧᵀ h → Ȧ = −(TR · h⁻¹)ᵀ
    let top_right = metric.matrix.view((0, m), (m, n)).into_owned();
    let a_dot_mat = -(top_right * h_inv).transpose();
    // g = TL − Ȧᵀ h Ȧ
    let top_left = metric.matrix.view((0, 0), (m, m)).into_owned();
    let g = top_left - a_dot_mat.transpose() * h.matrix() * &a_dot_mat;
    let mut a_dot = BigradedForm::zero(m, algebra, ValueKind::Adjoint);
    for mu in 0..m {
        for a in 0..n {
            let coeff = a_dot_mat[(a, mu)];
            if coeff.norm() > 0.0 {
                a_dot.add_term(&[mu as u8], &[], a, &Polynomial::constant(m, coeff));
            }
        }
    }
    MetricTriple::new(g, h, a_dot)
}

/// h-pairing of adjoint-valued forms: the scalar-valued (p+q)-form
/// `h(ω,η) = Σ_{a,b} h_ab ω^a ∧ η^b`.
pub fn h_pair(
    omega: &BigradedForm,
    eta: &BigradedForm,
    h: &InnerMetric,
) -> Result<BigradedForm, Error> {
    if *omega.value() != ValueKind::Adjoint || *eta.value() != ValueKind::Adjoint {
        return Err(Error::ValueKindMismatch("h-pairing needs adjoint-valued forms".into()));
    }
    let n = omega.n();
    if h.n() != n {
        return Err(Error::DimensionMismatch {
            context: "inner metric vs forms".into(),
            expected: n,
            got: h.n(),
        });
    }
    let mut out = BigradedForm::zero(omega.m(), omega.algebra().clone(), ValueKind::Scalar);
    for a in 0..n {
        for b in 0..n {
            let coeff = h.entry(a, b);
            if coeff.norm() == 0.0 {
                continue;
            }
            let oa = component_form(omega, a);
            let eb = component_form(eta, b);
            if oa.is_zero() || eb.is_zero() {
                continue;
            }
            out = out.add(&oa.wedge(&eb)?.scale(coeff))?;
        }
    }
    Ok(out)
}

/// h-pairing of mixed forms over one background.
pub fn h_pair_mixed(
    omega: &MixedForm,
    eta: &MixedForm,
    h: &InnerMetric,
) -> Result<MixedForm, Error> {
    if !omega.same_background(eta) {
        return Err(Error::BackgroundMismatch(
            "h-pairing of mixed forms over different backgrounds".into(),
        ));
    }
    let data = h_pair(omega.data(), eta.data(), h)?;
    MixedForm::from_raw(data, omega.background().clone())
}

/// The scalar-valued form of one value component of an adjoint form.
fn component_form(form: &BigradedForm, a: usize) -> BigradedForm {
    let mut out = BigradedForm::zero(form.m(), form.algebra().clone(), ValueKind::Scalar);
    for ((dx, theta), vals) in form.components() {
        if !vals[a].is_zero() {
            out.add_term(dx, theta, 0, &vals[a]);
        }
    }
    out
}

/// Hodge star in the mixed basis of the triple's background: each term of
/// bidegree (r,s) maps to a term of bidegree (m−r, n−s) with Levi-Civita
/// index raising by g^{μν} and h^{ab}, the sign (−1)^{s(m−r)}, the weights
/// 1/(r!s!), and the density √|g|√|h|.
pub fn hodge_star(omega: &MixedForm, t: &MetricTriple) -> Result<MixedForm, Error> {
    if omega.background().sub(t.a_dot())?.max_abs_coeff() > 1e-12 {
        return Err(Error::BackgroundMismatch(
            "form is not in the mixed basis of the metric triple's connection".into(),
        ));
    }
    let g_inv = t.g_inverse()?;
    let h_inv = t.h().inverse()?;
    let m = t.m();
    let n = t.h().n();
    let density = t.sqrt_abs_det_g() * t.h().sqrt_abs_det();
    let data = omega.data();
    let dim = data.value_dim();
    let mut out = BigradedForm::zero(m, data.algebra().clone(), data.value().clone());
    let all_mu: Vec<u8> = (0..m as u8).collect();
    let all_a: Vec<u8> = (0..n as u8).collect();
    for ((dx, theta), vals) in data.components() {
        let r = dx.len();
        let s = theta.len();
        let sign_rs = if (s * (m - r)) % 2 == 1 { -1.0 } else { 1.0 };
        // one 1/(r!s!) from the local formula, one more converting the
        // stored ascending coefficient to antisymmetric tuple components
        let norm = 1.0 / (factorial(r) * factorial(s)).powi(2);
        let base = Complex64::new(sign_rs * norm * density, 0.0);
        for (sigma, sgn_sigma) in permutations_with_sign(dx) {
            for (tau, sgn_tau) in permutations_with_sign(theta) {
                for (nu, sgn_nu) in permutations_with_sign(&all_mu) {
                    // metric factors Π_k g^{σ_k ν_k}
                    let mut g_factor = Complex64::new(1.0, 0.0);
                    for k in 0..r {
                        g_factor *= g_inv[(sigma[k] as usize, nu[k] as usize)];
                    }
                    if g_factor.norm() == 0.0 {
                        continue;
                    }
                    for (bv, sgn_b) in permutations_with_sign(&all_a) {
                        let mut h_factor = Complex64::new(1.0, 0.0);
                        for k in 0..s {
                            h_factor *= h_inv[(tau[k] as usize, bv[k] as usize)];
                        }
                        if h_factor.norm() == 0.0 {
                            continue;
                        }
                        let coeff = base
                            * Complex64::new(sgn_sigma * sgn_tau * sgn_nu * sgn_b, 0.0)
                            * g_factor
                            * h_factor;
                        let out_dx = &nu[r..];
                        let out_theta = &bv[s..];
                        for k in 0..dim {
                            if !vals[k].is_zero() {
                                out.add_term(out_dx, out_theta, k, &vals[k].scale(coeff));
                            }
                        }
                    }
                }
            }
        }
    }
    MixedForm::from_raw(out, omega.background().clone())
}

/// All permutations of a slice together with their signs relative to the
/// input order (element j moved to the front costs (−1)^j).
fn permutations_with_sign(items: &[u8]) -> Vec<(Vec<u8>, f64)> {
    if items.is_empty() {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for j in 0..items.len() {
        let sign_j = if j % 2 == 1 { -1.0 } else { 1.0 };
        let mut rest = items.to_vec();
        let head = rest.remove(j);
        for (tail, s) in permutations_with_sign(&rest) {
            let mut v = Vec::with_capacity(items.len());
            v.push(head);
            v.extend(tail);
            out.push((v, sign_j * s));
        }
    }
    out
}

/// The scalar product ⟨ω, η⟩ of two same-degree mixed forms, evaluated by
/// the direct contraction formula (combinatorial weights, full index raising
/// by g^{μν}, h^{ab} and the value pairing h_ab), integrated over the box.
/// Must agree with the Hodge-star pipeline ∫ h(ω, ⋆η).
pub fn scalar_product_contraction(
    omega: &MixedForm,
    eta: &MixedForm,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<Complex64, Error> {
    if !omega.same_background(eta) {
        return Err(Error::BackgroundMismatch(
            "scalar product of mixed forms over different backgrounds".into(),
        ));
    }
    let p_omega = omega.data().pure_degree();
    let p_eta = eta.data().pure_degree();
    if p_omega.is_none() || p_eta.is_none() || (p_omega != p_eta && !omega.data().is_zero() && !eta.data().is_zero()) {
        return Err(Error::ValueKindMismatch(
            "scalar product requires forms of one common pure degree".into(),
        ));
    }
    if *omega.data().value() != ValueKind::Adjoint || *eta.data().value() != ValueKind::Adjoint {
        return Err(Error::ValueKindMismatch("scalar product defined for adjoint values".into()));
    }
    let g_inv = t.g_inverse()?;
    let h_inv = t.h().inverse()?;
    let h = t.h();
    let m = t.m();
    let n = h.n();
    let density = t.sqrt_abs_det_g();
    let sign_n = if n % 2 == 1 { -1.0 } else { 1.0 };
    let mut integrand = Polynomial::zero(m);
    for ((dx, theta), vals) in omega.data().components() {
        let r = dx.len();
        let s = theta.len();
        let sign_rs = if (s * (m - r)) % 2 == 1 { -1.0 } else { 1.0 };
        let weight = sign_n * sign_rs * factorial(m - r) * factorial(n - s)
            / (factorial(r) * factorial(s));
        // η with both slot blocks raised, at the same ascending (dx, theta)
        for ((dx2, theta2), vals2) in eta.data().components() {
            if dx2.len() != r || theta2.len() != s {
                continue;
            }
            let det_g = index_raise_det(g_inv, dx, dx2);
            if det_g.norm() == 0.0 {
                continue;
            }
            let det_h = index_raise_det(h_inv, theta, theta2);
            if det_h.norm() == 0.0 {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    let pairing = h.entry(a, b);
                    if pairing.norm() == 0.0 || vals[a].is_zero() || vals2[b].is_zero() {
                        continue;
                    }
                    let coeff = pairing * det_g * det_h * Complex64::new(weight, 0.0);
                    integrand = &integrand + &(&vals[a] * &vals2[b]).scale(coeff);
                }
            }
        }
    }
    let total = integrand.integrate_box(chart)?;
    Ok(total * Complex64::new(density, 0.0))
}

/// Gram determinant det[(g⁻¹)^{I_k J_l}] raising an ascending index block.
fn index_raise_det(inv: &DMatrix<Complex64>, i: &[u8], j: &[u8]) -> Complex64 {
    let k = i.len();
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let sub = DMatrix::from_fn(k, k, |r, c| inv[(i[r] as usize, j[c] as usize)]);
    sub.determinant()
}

/// Gluing of inner metrics across an atlas: h^j = Gᵀ h^i G and
/// det h^j = (det G)² det h^i at lattice sample points.
pub fn check_inner_metric_gluing(
    metrics: &[InnerMetric],
    data: &crate::gluing::TransitionData,
    density: usize,
    threshold: f64,
) -> CheckReport {
    let mut report = CheckReport::new();
    for ((i, j), overlap_box) in data.atlas().overlaps() {
        let (i, j) = (*i, *j);
        let loc = format!("({i},{j})");
        if i >= metrics.len() || j >= metrics.len() {
            report.add("metric: member present", &loc, f64::INFINITY, threshold);
            continue;
        }
        let Ok(transition) = data.transition(i, j) else {
            report.add("metric: transition present", &loc, f64::INFINITY, threshold);
            continue;
        };
        let mut worst = 0.0f64;
        let mut det_worst = 0.0f64;
        for point in overlap_box.lattice(density) {
            let g = crate::poly::eval_poly_matrix(&transition.g, &point);
            let expected = g.transpose() * metrics[i].matrix() * &g;
            worst = worst.max((metrics[j].matrix() - expected).map(|x| x.norm()).max());
            let det_g = g.determinant();
            det_worst = det_worst
                .max((metrics[j].det() - det_g * det_g * metrics[i].det()).norm());
        }
        report.add("metric: h^j = Gᵀ h^i G", &loc, worst, threshold);
        report.add("metric: det h^j = (det G)² det h^i", &loc, det_worst, threshold);
    }
    report
}
