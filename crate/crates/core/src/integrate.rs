//! Inner (fibre) integration, the volume form and ε section, integration
//! over the algebroid, scalar products, trace-composed integration, and the
//! differential-commutation theorems as executable checks.
//!
//! The (−1)^n convention of the volume form and the θ-vs-q coefficient
//! identification are centralized in this module.

use num_complex::Complex64;

use crate::error::Error;
use crate::forms::{BigradedForm, MixedForm, ValueKind};
use crate::metric::{h_pair_mixed, hodge_star, InnerMetric, MetricTriple};
use crate::poly::{ChartBox, Polynomial};
use crate::report::CheckReport;

/// The distinguished maximal-inner-degree form
/// ω_{h,q} = (−1)^n √|h| q¹∧…∧qⁿ in the mixed basis of the triple's
/// background connection; its inner integral is 1.
pub fn volume_form(t: &MetricTriple) -> MixedForm {
    let m = t.m();
    let n = t.h().n();
    let algebra = t.a_dot().algebra().clone();
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    let mut data = BigradedForm::zero(m, algebra, ValueKind::Scalar);
    let top: Vec<u8> = (0..n as u8).collect();
    data.add_term(&[], &top, 0, &Polynomial::real(m, sign * t.h().sqrt_abs_det()));
    MixedForm::from_raw(data, t.a_dot().clone()).expect("volume form is well-formed")
}

/// The non-singular section of Λⁿ of the kernel dual to the volume form:
/// (−1)^n √|h|⁻¹ E₁∧…∧E_n, stored through its scalar coefficient.
#[derive(Clone, Debug)]
pub struct EpsilonSection {
    pub coefficient: f64,
}

pub fn epsilon_section(h: &InnerMetric) -> Result<EpsilonSection, Error> {
    let sqrt = h.sqrt_abs_det();
    if sqrt <= 1e-12 {
        return Err(Error::InnerDegenerate { direction: 0 });
    }
    let sign = if h.n() % 2 == 1 { -1.0 } else { 1.0 };
    Ok(EpsilonSection { coefficient: sign / sqrt })
}

impl EpsilonSection {
    /// Contraction i_ε against the maximal inner part of a scalar-valued
    /// mixed form: the determinant pairing ⟨q¹∧…∧qⁿ, E₁∧…∧E_n⟩ = 1.
    pub fn contract_top(&self, form: &MixedForm) -> Complex64 {
        let n = form.data().n();
        let top: Vec<u8> = (0..n as u8).collect();
        match form.data().component(&[], &top) {
            Some(vals) => vals[0].constant_term() * Complex64::new(self.coefficient, 0.0),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// Inner integration: extracts the coefficient of √|h| θ¹∧…∧θⁿ
/// (equivalently (−1)ⁿ/√|h| times the q¹∧…∧qⁿ coefficient) of every
/// spatial block; zero on forms without maximal inner degree.
pub fn inner_integrate(omega: &MixedForm, h: &InnerMetric) -> Result<BigradedForm, Error> {
    let data = omega.data();
    let n = data.n();
    if h.n() != n {
        return Err(Error::DimensionMismatch {
            context: "inner integration metric".into(),
            expected: n,
            got: h.n(),
        });
    }
    let sqrt = h.sqrt_abs_det();
    if sqrt <= 1e-12 {
        return Err(Error::InnerDegenerate { direction: 0 });
    }
    let factor = Complex64::new(if n % 2 == 1 { -1.0 } else { 1.0 } / sqrt, 0.0);
    let top: Vec<u8> = (0..n as u8).collect();
    let mut out = BigradedForm::zero(data.m(), data.algebra().clone(), data.value().clone());
    for ((dx, theta), vals) in data.components() {
        if *theta != top {
            continue;
        }
        for (k, p) in vals.iter().enumerate() {
            if !p.is_zero() {
                out.add_term(dx, &[], k, &p.scale(factor));
            }
        }
    }
    Ok(out)
}

/// Integration over the algebroid restricted to one chart box:
/// ∫_A = ∫_M ∘ ∫inner, non-zero only on terms of maximal degree in both
/// the spatial and the inner slots.
pub fn integrate_a(
    omega: &MixedForm,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<Complex64, Error> {
    if *omega.data().value() != ValueKind::Scalar {
        return Err(Error::ValueKindMismatch(
            "integration over the algebroid needs a scalar-valued form".into(),
        ));
    }
    let spatial = inner_integrate(omega, t.h())?;
    let m = t.m();
    let top: Vec<u8> = (0..m as u8).collect();
    match spatial.component(&top, &[]) {
        Some(vals) => vals[0].integrate_box(chart),
        None => Ok(Complex64::new(0.0, 0.0)),
    }
}

/// Scalar product of two same-degree adjoint-valued mixed forms through the
/// Hodge pipeline: ⟨ω, η⟩ = ∫_A h(ω, ⋆η).
pub fn scalar_product(
    omega: &MixedForm,
    eta: &MixedForm,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<Complex64, Error> {
    let star_eta = hodge_star(eta, t)?;
    let integrand = h_pair_mixed(omega, &star_eta, t.h())?;
    integrate_a(&integrand, t, chart)
}

/// Residual of the commutation ∫inner ∘ d̂ = d ∘ ∫inner on a scalar-valued
/// mixed form; the identity holds when the algebra is unimodular and is a
/// quantified violation otherwise (negative control).
pub fn check_inner_d_commutation(
    omega: &MixedForm,
    t: &MetricTriple,
    threshold: f64,
) -> Result<CheckReport, Error> {
    let algebra = omega.data().algebra().clone();
    let lhs = inner_integrate(&omega.total_d()?, t.h())?;
    let rhs = inner_integrate(omega, t.h())?.de_rham_d();
    let residual = lhs.sub(&rhs)?.max_abs_coeff();
    let mut report = CheckReport::new();
    report.add(
        "commutation: ∫inner d̂ω = d ∫inner ω",
        format!(
            "algebra {} ({})",
            algebra.name(),
            if algebra.is_unimodular() { "unimodular" } else { "non-unimodular" }
        ),
        residual,
        threshold,
    );
    Ok(report)
}

/// Inner integration composed with the trace functional of the
/// elementary-matrix basis: a scalar spatial form. Commutes with the
/// differential without a unimodularity hypothesis, since the trace kills
/// the adjoint action.
pub fn inner_integrate_trace(
    omega: &MixedForm,
    h: &InnerMetric,
) -> Result<BigradedForm, Error> {
    if *omega.data().value() != ValueKind::Adjoint {
        return Err(Error::ValueKindMismatch(
            "trace integration needs an adjoint-valued form".into(),
        ));
    }
    let algebra = omega.data().algebra().clone();
    let weights = algebra.trace_weights()?.to_vec();
    let vector = inner_integrate(omega, h)?;
    let mut out = BigradedForm::zero(vector.m(), algebra, ValueKind::Scalar);
    for ((dx, _), vals) in vector.components() {
        let mut p = Polynomial::zero(vals[0].num_vars());
        for (a, w) in weights.iter().enumerate() {
            if w.norm() > 0.0 && !vals[a].is_zero() {
                p = &p + &vals[a].scale(*w);
            }
        }
        if !p.is_zero() {
            out.add_term(dx, &[], 0, &p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_form, random_spatial_one_form, subsets};
    use crate::forms::zero_background;
    use crate::liealg::preset;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn c64(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn su2_triple() -> (Arc<crate::liealg::LieAlgebra>, MetricTriple) {
        let g = Arc::new(preset("su2").unwrap());
        let t = MetricTriple::new(
            DMatrix::identity(2, 2),
            InnerMetric::killing(&g).unwrap(),
            zero_background(2, g.clone()),
        )
        .unwrap();
        (g, t)
    }

    #[test]
    fn volume_form_integrates_to_one() {
        let (_, t) = su2_triple();
        let vol = volume_form(&t);
        let result = inner_integrate(&vol, t.h()).unwrap();
        let coeff = result.component(&[], &[]).unwrap()[0].constant_term();
        assert!((coeff - c64(1.0)).norm() < 1e-12);

        // module linearity: ∫inner f(x) ω_{h,q} = f(x)
        let f = Polynomial::var(2, 0);
        let scaled = MixedForm::from_raw(vol.data().scale_poly(&f), t.a_dot().clone()).unwrap();
        let result_f = inner_integrate(&scaled, t.h()).unwrap();
        assert!((&result_f.component(&[], &[]).unwrap()[0] - &f).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn sub_maximal_generators_integrate_to_zero() {
        let (g, t) = su2_triple();
        let n = 3usize;
        for s in 0..n {
            for theta in subsets(n, s) {
                for dx in subsets(2, 1) {
                    let mut f = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
                    f.add_term(&dx, &theta, 0, &Polynomial::one(2));
                    let mixed = MixedForm::from_raw(f, t.a_dot().clone()).unwrap();
                    let result = inner_integrate(&mixed, t.h()).unwrap();
                    assert!(result.is_zero(), "sub-maximal θ^{theta:?} must vanish");
                }
            }
        }
    }

    #[test]
    fn epsilon_duality() {
        let (_, t) = su2_triple();
        let eps = epsilon_section(t.h()).unwrap();
        let vol = volume_form(&t);
        let pairing = eps.contract_top(&vol);
        assert!((pairing - c64(1.0)).norm() < 1e-12);
    }

    #[test]
    fn integrate_a_examples() {
        let (g, t) = su2_triple();
        let chart = ChartBox::new(vec![0.0, 0.0], vec![2.0, 0.5]).unwrap();
        // ω_{h,q} ∧ dx¹∧dx² integrates to the box volume
        let mut spatial_top = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        spatial_top.add_term(&[0, 1], &[], 0, &Polynomial::one(2));
        let vol = volume_form(&t);
        let full = MixedForm::from_raw(
            spatial_top.wedge(vol.data()).unwrap(),
            t.a_dot().clone(),
        )
        .unwrap();
        let total = integrate_a(&full, &t, &chart).unwrap();
        assert!((total - c64(chart.volume())).norm() < 1e-9);

        // missing top inner degree → 0
        let mut partial = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        partial.add_term(&[0, 1], &[0, 1], 0, &Polynomial::one(2));
        let partial_mixed = MixedForm::from_raw(partial, t.a_dot().clone()).unwrap();
        assert!(integrate_a(&partial_mixed, &t, &chart).unwrap().norm() < 1e-12);
    }

    #[test]
    fn commutation_unimodular_cases() {
        let (g, t) = su2_triple();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..5 {
            let w = random_form(&mut rng, 2, g.clone(), ValueKind::Scalar, (2, 3), 3);
            let mixed = MixedForm::to_mixed(&w, t.a_dot()).unwrap();
            let report = check_inner_d_commutation(&mixed, &t, 1e-9).unwrap();
            assert!(report.pass(), "su2 residual {}", report.max_residual());
        }

        // abelian: residual exactly zero
        let ab = Arc::new(preset("abelian(2)").unwrap());
        let t_ab = MetricTriple::new(
            DMatrix::identity(2, 2),
            InnerMetric::new(DMatrix::identity(2, 2)).unwrap(),
            zero_background(2, ab.clone()),
        )
        .unwrap();
        let w = random_form(&mut rng, 2, ab.clone(), ValueKind::Scalar, (2, 2), 3);
        let mixed = MixedForm::to_mixed(&w, t_ab.a_dot()).unwrap();
        let report = check_inner_d_commutation(&mixed, &t_ab, 1e-12).unwrap();
        assert!(report.pass());
    }

    #[test]
    fn commutation_negative_control_affine2() {
        // ω = f(x)·√|h| θ¹ with n = 2: the violation equals |tr C₂|·f
        let g = Arc::new(preset("affine2").unwrap());
        let h = InnerMetric::new(DMatrix::identity(2, 2).scale(1.7)).unwrap();
        let t = MetricTriple::new(
            DMatrix::identity(2, 2),
            h.clone(),
            zero_background(2, g.clone()),
        )
        .unwrap();
        let f = &Polynomial::var(2, 0) + &Polynomial::real(2, 0.5);
        let mut w = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        w.add_term(&[], &[0], 0, &f.scale(c64(h.sqrt_abs_det())));
        let mixed = MixedForm::to_mixed(&w, t.a_dot()).unwrap();
        let report = check_inner_d_commutation(&mixed, &t, 1e-9).unwrap();
        assert!(!report.pass(), "affine2 must violate the commutation");
        let tr_c2: Complex64 = (0..2).map(|b| g.c(1, b, b)).sum();
        let predicted = tr_c2.norm() * f.max_abs_coeff();
        assert!(
            (report.max_residual() - predicted).abs() <= 1e-9,
            "residual {} vs predicted {predicted}",
            report.max_residual()
        );
    }

    #[test]
    fn background_independence() {
        let (g, t) = su2_triple();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        for _ in 0..5 {
            let w = random_form(&mut rng, 2, g.clone(), ValueKind::Scalar, (2, 3), 2);
            let a1 = zero_background(2, g.clone());
            let a2 = random_spatial_one_form(&mut rng, 2, g.clone(), 2);
            let r1 = inner_integrate(&MixedForm::to_mixed(&w, &a1).unwrap(), t.h()).unwrap();
            let r2 = inner_integrate(&MixedForm::to_mixed(&w, &a2).unwrap(), t.h()).unwrap();
            let residual = r1.sub(&r2).unwrap().max_abs_coeff();
            assert!(residual <= 1e-9, "∫inner depends on background: {residual}");
        }
    }

    #[test]
    fn trace_integration_gl2() {
        let g = Arc::new(preset("gl(2)").unwrap());
        let h = InnerMetric::new(DMatrix::identity(4, 4)).unwrap();
        let t = MetricTriple::new(
            DMatrix::identity(2, 2),
            h.clone(),
            zero_background(2, g.clone()),
        )
        .unwrap();
        // ω_{h,q} ⊗ 1₂ (identity = E11 + E22, flat indices 0 and 3)
        let vol = volume_form(&t);
        let mut unit = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        for a in [0usize, 3] {
            for ((dx, theta), vals) in vol.data().components() {
                unit.add_term(dx, theta, a, &vals[0]);
            }
        }
        let mixed = MixedForm::from_raw(unit, t.a_dot().clone()).unwrap();
        let traced = inner_integrate_trace(&mixed, t.h()).unwrap();
        let coeff = traced.component(&[], &[]).unwrap()[0].constant_term();
        assert!((coeff - c64(2.0)).norm() < 1e-12, "∫tr(ω⊗1₂) = p = 2");

        // commutation on random adjoint-valued forms: ∫tr d̂ω = d ∫tr ω
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..5 {
            let w = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (2, 4), 2);
            let mixed = MixedForm::to_mixed(&w, t.a_dot()).unwrap();
            let lhs = inner_integrate_trace(&mixed.total_d().unwrap(), t.h()).unwrap();
            let rhs = inner_integrate_trace(&mixed, t.h()).unwrap().de_rham_d();
            let residual = lhs.sub(&rhs).unwrap().max_abs_coeff();
            assert!(residual <= 1e-9, "trace commutation residual {residual}");
        }
    }

    #[test]
    fn killing_pairing_gauge_mechanism() {
        // ∫_A h([ξ,ω], ⋆ω) + ∫_A h(ω, ⋆[ξ,ω]) = 0 for Killing h
        let (g, t) = su2_triple();
        let chart = ChartBox::unit(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        for _ in 0..3 {
            let xi = crate::corpus::random_gauge_parameter(&mut rng, 2, g.clone(), 2);
            let w = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (1, 1), 2)
                .degree_part(1);
            let w_mixed = MixedForm::to_mixed(&w, t.a_dot()).unwrap();
            let bracket = MixedForm::to_mixed(&xi.bracket(&w).unwrap(), t.a_dot()).unwrap();
            let first = scalar_product(&bracket, &w_mixed, &t, &chart).unwrap();
            let second = scalar_product(&w_mixed, &bracket, &t, &chart).unwrap();
            assert!(
                (first + second).norm() <= 1e-9,
                "pairing invariance residual {}",
                (first + second).norm()
            );
        }
    }

    #[test]
    fn glued_family_inner_integrals_glue() {
        use crate::gluing::{Atlas, TransitionData};
        use crate::poly::poly_matrix_from_const;
        let g = Arc::new(preset("su2").unwrap());
        let charts = vec![
            ChartBox::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap(),
            ChartBox::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap(),
        ];
        let mut atlas = Atlas::new(g.clone(), charts);
        atlas
            .add_overlap(0, 1, ChartBox::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap())
            .unwrap();
        let mut data = TransitionData::new(atlas);
        let (s, c) = 0.9f64.sin_cos();
        let rot = DMatrix::from_row_slice(
            3,
            3,
            &[
                c64(c), c64(-s), c64(0.0),
                c64(s), c64(c), c64(0.0),
                c64(0.0), c64(0.0), c64(1.0),
            ],
        );
        let zero_chi = || BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        data.set_transition(0, 1, poly_matrix_from_const(2, &rot), zero_chi()).unwrap();
        data.set_transition(1, 0, poly_matrix_from_const(2, &rot.transpose()), zero_chi())
            .unwrap();
        // Killing h is invariant, so the same h works on both charts
        let h = InnerMetric::killing(&g).unwrap();
        let a = zero_background(2, g.clone());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(79);
        let w1 = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (2, 3), 2);
        let w0 = data.transport(&w1, 0, 1).unwrap();
        let int0 = inner_integrate(&MixedForm::to_mixed(&w0, &a).unwrap(), &h).unwrap();
        let int1 = inner_integrate(&MixedForm::to_mixed(&w1, &a).unwrap(), &h).unwrap();
        // spatial adjoint-valued families glue by value rotation alone
        let rotated = data.rotate_values(&int1, 0, 1).unwrap();
        let points = data.atlas().overlap(0, 1).unwrap().lattice(5);
        let residual = int0.sub(&rotated).unwrap().max_abs_eval(&points);
        assert!(residual <= 1e-9, "inner integrals fail to glue: {residual}");
    }
}
