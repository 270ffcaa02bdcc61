//! Generalized connections and their reduced kernel endomorphism, the
//! induced ordinary connection, curvature with its three-block
//! decomposition, infinitesimal and finite gauge transformations, matter
//! coupling, and the action functionals.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::forms::{BigradedForm, MixedForm, Representation, ValueKind};
use crate::gluing::{expand_poly_matrix, TransitionData};
use crate::liealg::LieAlgebra;
use crate::metric::MetricTriple;
use crate::poly::{
    eval_poly_matrix, poly_matrix_add, poly_matrix_identity, poly_matrix_mul, poly_matrix_scale,
    poly_matrix_sub, poly_mul, ChartBox, PolyMatrix, Polynomial,
};
use crate::report::CheckReport;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Matrix of the adjoint action of a polynomial-coefficient algebra element:
/// ad[c][a] = Σ_d C^c_{da} ξ^d.
pub fn poly_adjoint_matrix(algebra: &LieAlgebra, xi: &[Polynomial]) -> Result<PolyMatrix, Error> {
    let n = algebra.dim();
    if xi.len() != n {
        return Err(Error::DimensionMismatch {
            context: "adjoint matrix coefficients".into(),
            expected: n,
            got: xi.len(),
        });
    }
    let num_vars = xi[0].num_vars();
    let mut out = vec![vec![Polynomial::zero(num_vars); n]; n];
    for c in 0..n {
        for a in 0..n {
            for (d, x) in xi.iter().enumerate() {
                let coeff = algebra.c(d, a, c);
                if coeff.norm() > 0.0 {
                    out[c][a] = &out[c][a] + &x.scale(coeff);
                }
            }
        }
    }
    Ok(out)
}

/// Applies an End(g) matrix with polynomial entries to the value index of
/// an adjoint-valued form: out^b = Σ_a M^b_a ω^a componentwise.
pub fn apply_endomorphism(
    endo: &PolyMatrix,
    form: &BigradedForm,
) -> Result<BigradedForm, Error> {
    if *form.value() != ValueKind::Adjoint {
        return Err(Error::ValueKindMismatch(
            "endomorphisms act on adjoint-valued forms".into(),
        ));
    }
    let n = form.n();
    if endo.len() != n {
        return Err(Error::DimensionMismatch {
            context: "endomorphism size".into(),
            expected: n,
            got: endo.len(),
        });
    }
    let mut out = BigradedForm::zero(form.m(), form.algebra().clone(), ValueKind::Adjoint);
    for ((dx, theta), vals) in form.components() {
        for b in 0..n {
            let mut p = Polynomial::zero(vals[0].num_vars());
            for (a, v) in vals.iter().enumerate() {
                if !v.is_zero() && !endo[b][a].is_zero() {
                    p = &p + &poly_mul(&endo[b][a], v)?;
                }
            }
            if !p.is_zero() {
                out.add_term(dx, theta, b, &p);
            }
        }
    }
    Ok(out)
}

fn poly_matrix_partial(m: &PolyMatrix, mu: usize) -> Result<PolyMatrix, Error> {
    m.iter()
        .map(|row| row.iter().map(|p| p.partial(mu)).collect())
        .collect()
}

fn poly_matrix_max_abs_eval(m: &PolyMatrix, points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for p in points {
        let v = eval_poly_matrix(m, p);
        for x in v.iter() {
            best = best.max(x.norm());
        }
    }
    best
}

/// A generalized connection in one trivialization: the spatial 1-form Â of
/// ω̂ = Â − θ + τ(θ) together with the reduced kernel endomorphism τ, stored
/// as the matrix τ^b_a of τ(E_a) = τ^b_a E_b.
#[derive(Clone, Debug)]
pub struct GeneralizedConnection {
    a_hat: BigradedForm,
    tau: PolyMatrix,
}

impl GeneralizedConnection {
    pub fn new(a_hat: BigradedForm, tau: PolyMatrix) -> Result<Self, Error> {
        if *a_hat.value() != ValueKind::Adjoint {
            return Err(Error::ValueKindMismatch(
                "the spatial connection form must be adjoint-valued".into(),
            ));
        }
        for (r, s) in a_hat.bidegrees() {
            if (r, s) != (1, 0) {
                return Err(Error::ValueKindMismatch(format!(
                    "the spatial connection form must be of bidegree (1,0), found ({r},{s})"
                )));
            }
        }
        let n = a_hat.n();
        if tau.len() != n || tau.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "reduced kernel endomorphism".into(),
                expected: n,
                got: tau.len(),
            });
        }
        Ok(GeneralizedConnection { a_hat, tau })
    }

    /// An ordinary connection: τ = 0.
    pub fn ordinary(a_hat: BigradedForm) -> Result<Self, Error> {
        let n = a_hat.n();
        let m = a_hat.m();
        let tau = vec![vec![Polynomial::zero(m); n]; n];
        Self::new(a_hat, tau)
    }

    /// Reads (Â, τ) off the total 1-form ω̂ = Â − θ + τ(θ):
    /// τ^b_a = δ^b_a + (θ^a-component)^b.
    pub fn from_total(omega_hat: &BigradedForm) -> Result<Self, Error> {
        if *omega_hat.value() != ValueKind::Adjoint {
            return Err(Error::ValueKindMismatch(
                "a connection 1-form must be adjoint-valued".into(),
            ));
        }
        let n = omega_hat.n();
        let m = omega_hat.m();
        let mut a_hat = BigradedForm::zero(m, omega_hat.algebra().clone(), ValueKind::Adjoint);
        let mut tau = vec![vec![Polynomial::zero(m); n]; n];
        for ((dx, theta), vals) in omega_hat.components() {
            match (dx.len(), theta.len()) {
                (1, 0) => {
                    for (b, v) in vals.iter().enumerate() {
                        if !v.is_zero() {
                            a_hat.add_term(dx, &[], b, v);
                        }
                    }
                }
                (0, 1) => {
                    let a = theta[0] as usize;
                    for (b, v) in vals.iter().enumerate() {
                        tau[b][a] = &tau[b][a] + v;
                    }
                }
                (r, s) => {
                    return Err(Error::ValueKindMismatch(format!(
                        "a connection 1-form has bidegrees (1,0) and (0,1), found ({r},{s})"
                    )))
                }
            }
        }
        for (a, row) in tau.iter_mut().enumerate().take(n) {
            row[a] = &row[a] + &Polynomial::one(m);
        }
        Self::new(a_hat, tau)
    }

    pub fn a_hat(&self) -> &BigradedForm {
        &self.a_hat
    }

    pub fn tau(&self) -> &PolyMatrix {
        &self.tau
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        self.a_hat.algebra()
    }

    /// The total 1-form ω̂ = Â − θ + τ(θ).
    pub fn total_form(&self) -> BigradedForm {
        let n = self.a_hat.n();
        let m = self.a_hat.m();
        let mut omega = self.a_hat.clone();
        for a in 0..n {
            for b in 0..n {
                let mut p = self.tau[b][a].clone();
                if a == b {
                    p = &p - &Polynomial::one(m);
                }
                if !p.is_zero() {
                    omega.add_term(&[], &[a as u8], b, &p);
                }
            }
        }
        omega
    }

    /// The ordinary connection induced relative to a background:
    /// A = Â + τ(Ȧ).
    pub fn induced_connection(&self, background: &BigradedForm) -> Result<BigradedForm, Error> {
        self.a_hat.add(&apply_endomorphism(&self.tau, background)?)
    }
}

/// Field strength of an ordinary connection 1-form, stored as the 2-form
/// dA + ½[A,A]; its ascending component on dx^μ∧dx^ν (μ<ν) is the
/// antisymmetric F^a_{μν} = ∂_μA^a_ν − ∂_νA^a_μ + C^a_{bc}A^b_μA^c_ν.
pub fn field_strength(a: &BigradedForm) -> Result<BigradedForm, Error> {
    for (r, s) in a.bidegrees() {
        if (r, s) != (1, 0) {
            return Err(Error::ValueKindMismatch(format!(
                "field strength needs a pure spatial 1-form, found bidegree ({r},{s})"
            )));
        }
    }
    a.de_rham_d().add(&a.bracket(a)?.scale(Complex64::new(0.5, 0.0)))
}

/// The antisymmetric component F^a_{μν} of a stored field strength.
pub fn field_strength_component(f: &BigradedForm, a: usize, mu: usize, nu: usize) -> Polynomial {
    let m = f.m();
    if mu == nu {
        return Polynomial::zero(m);
    }
    let (lo, hi, sign) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    match f.component(&[lo as u8, hi as u8], &[]) {
        Some(vals) => vals[a].scale(Complex64::new(sign, 0.0)),
        None => Polynomial::zero(m),
    }
}

/// The curvature of a generalized connection split along the background:
/// spatial block F̂, mixed block Dτ, algebraic block W, and the assembled
/// total curvature R̂ = F̂ − (Dτ)∘ω̇ + ω̇*R_τ in the mixed basis.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    /// Field strength of the induced connection A = Â + τ(Ȧ).
    pub f: BigradedForm,
    /// Field strength of the background Ȧ.
    pub f_dot: BigradedForm,
    /// F̂ = F − τ(Ḟ).
    pub f_hat: BigradedForm,
    /// One matrix per spatial direction: dtau[μ][b][a] = (Dτ)^b_{μ,a}.
    pub dtau: Vec<PolyMatrix>,
    /// w[a][b][c] = W^c_{ab} = τ^d_a τ^e_b C^c_{de} − C^d_{ab} τ^c_d.
    pub w: Vec<Vec<Vec<Polynomial>>>,
    /// The assembled total curvature in the mixed basis.
    pub r_hat: MixedForm,
}

pub fn curvature_decomposition(
    c: &GeneralizedConnection,
    t: &MetricTriple,
) -> Result<CurvatureBundle, Error> {
    let algebra = c.algebra().clone();
    let n = algebra.dim();
    let m = c.a_hat.m();
    let background = t.a_dot();

    let a = c.induced_connection(background)?;
    let f = field_strength(&a)?;
    let f_dot = field_strength(background)?;
    let f_hat = f.sub(&apply_endomorphism(&c.tau, &f_dot)?)?;

    // spatial components A^a_μ, Ȧ^a_μ
    let comp_vec = |form: &BigradedForm, mu: usize| -> Vec<Polynomial> {
        form.component(&[mu as u8], &[])
            .cloned()
            .unwrap_or_else(|| vec![Polynomial::zero(m); n])
    };

    // (Dτ)_μ = ∂_μτ + ad_{A_μ}∘τ − τ∘ad_{Ȧ_μ}
    let mut dtau = Vec::with_capacity(m);
    for mu in 0..m {
        let ad_a = poly_adjoint_matrix(&algebra, &comp_vec(&a, mu))?;
        let ad_adot = poly_adjoint_matrix(&algebra, &comp_vec(background, mu))?;
        let block = poly_matrix_add(
            &poly_matrix_partial(&c.tau, mu)?,
            &poly_matrix_sub(
                &poly_matrix_mul(&ad_a, &c.tau),
                &poly_matrix_mul(&c.tau, &ad_adot),
            ),
        );
        dtau.push(block);
    }

    // W^c_{ab}
    let mut w = vec![vec![vec![Polynomial::zero(m); n]; n]; n];
    for a_idx in 0..n {
        for b_idx in 0..n {
            for c_idx in 0..n {
                let mut p = Polynomial::zero(m);
                for d in 0..n {
                    for e in 0..n {
                        let coeff = algebra.c(d, e, c_idx);
                        if coeff.norm() > 0.0 {
                            p = &p
                                + &poly_mul(&c.tau[d][a_idx], &c.tau[e][b_idx])?.scale(coeff);
                        }
                    }
                    let coeff = algebra.c(a_idx, b_idx, d);
                    if coeff.norm() > 0.0 {
                        p = &p - &c.tau[c_idx][d].scale(coeff);
                    }
                }
                w[a_idx][b_idx][c_idx] = p;
            }
        }
    }

    // assemble R̂ = F̂ − (Dτ)^b_{μ,a} dx^μ∧q^a ⊗ E_b + ½W^c_{ab} q^a∧q^b ⊗ E_c
    let mut data = f_hat.clone();
    for (mu, block) in dtau.iter().enumerate() {
        for a_idx in 0..n {
            for b_idx in 0..n {
                let p = &block[b_idx][a_idx];
                if !p.is_zero() {
                    data.add_term(
                        &[mu as u8],
                        &[a_idx as u8],
                        b_idx,
                        &p.scale(Complex64::new(-1.0, 0.0)),
                    );
                }
            }
        }
    }
    for a_idx in 0..n {
        for b_idx in (a_idx + 1)..n {
            for c_idx in 0..n {
                let p = &w[a_idx][b_idx][c_idx];
                if !p.is_zero() {
                    data.add_term(&[], &[a_idx as u8, b_idx as u8], c_idx, p);
                }
            }
        }
    }
    let r_hat = MixedForm::from_raw(data, background.clone())?;

    Ok(CurvatureBundle { f, f_dot, f_hat, dtau, w, r_hat })
}

/// The total curvature computed independently from the total 1-form:
/// R̂ = d̂ω̂ + ½[ω̂, ω̂], expressed in the mixed basis of the background.
pub fn curvature_total(
    c: &GeneralizedConnection,
    background: &BigradedForm,
) -> Result<MixedForm, Error> {
    let omega = c.total_form();
    let r = omega
        .total_d()
        .add(&omega.bracket(&omega)?.scale(Complex64::new(0.5, 0.0)))?;
    MixedForm::to_mixed(&r, background)
}

/// How the matter pairing treats its first slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingKind {
    Sesquilinear,
    Bilinear,
}

/// A matter field: components of a section in a representation space,
/// together with the representation and a pairing on that space.
#[derive(Clone, Debug)]
pub struct MatterField {
    pub phi: Vec<Polynomial>,
    pub rep: Arc<Representation>,
    pub h_e: DMatrix<Complex64>,
    pub pairing: PairingKind,
}

impl MatterField {
    pub fn new(
        phi: Vec<Polynomial>,
        rep: Arc<Representation>,
        h_e: DMatrix<Complex64>,
        pairing: PairingKind,
    ) -> Result<Self, Error> {
        if phi.len() != rep.dim {
            return Err(Error::DimensionMismatch {
                context: "matter field components".into(),
                expected: rep.dim,
                got: phi.len(),
            });
        }
        if h_e.nrows() != rep.dim || h_e.ncols() != rep.dim {
            return Err(Error::DimensionMismatch {
                context: "matter pairing matrix".into(),
                expected: rep.dim,
                got: h_e.nrows(),
            });
        }
        Ok(MatterField { phi, rep, h_e, pairing })
    }

    /// Residual of the compatibility identity
    /// h_E(ρ(ξ)φ₁, φ₂) + h_E(φ₁, ρ(ξ)φ₂) = 0 over the generators.
    pub fn compatibility_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for rho in &self.rep.matrices {
            let left = match self.pairing {
                PairingKind::Sesquilinear => rho.adjoint() * &self.h_e,
                PairingKind::Bilinear => rho.transpose() * &self.h_e,
            };
            let total = left + &self.h_e * rho;
            worst = worst.max(total.iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// The pairing applied to polynomial-component vectors.
    pub fn pair(&self, v: &[Polynomial], w: &[Polynomial]) -> Result<Polynomial, Error> {
        let d = self.rep.dim;
        let num_vars = v
            .iter()
            .chain(w.iter())
            .map(Polynomial::num_vars)
            .next()
            .unwrap_or(0);
        let mut out = Polynomial::zero(num_vars);
        for i in 0..d {
            for j in 0..d {
                let coeff = self.h_e[(i, j)];
                if coeff.norm() == 0.0 || v[i].is_zero() || w[j].is_zero() {
                    continue;
                }
                let first = match self.pairing {
                    PairingKind::Sesquilinear => v[i].conj(),
                    PairingKind::Bilinear => v[i].clone(),
                };
                out = &out + &poly_mul(&first, &w[j])?.scale(coeff);
            }
        }
        Ok(out)
    }

    /// ρ(ξ)φ for a polynomial-coefficient algebra element ξ.
    pub fn rep_action(&self, xi: &[Polynomial]) -> Result<Vec<Polynomial>, Error> {
        let d = self.rep.dim;
        let num_vars = self.phi[0].num_vars();
        let mut out = vec![Polynomial::zero(num_vars); d];
        for (a, x) in xi.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let rho = &self.rep.matrices[a];
            for i in 0..d {
                for j in 0..d {
                    let coeff = rho[(i, j)];
                    if coeff.norm() > 0.0 && !self.phi[j].is_zero() {
                        out[i] = &out[i] + &poly_mul(x, &self.phi[j])?.scale(coeff);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Components of a gauge parameter: the coefficient vector of a g-valued
/// 0-form.
pub fn gauge_parameter_components(xi: &BigradedForm) -> Result<Vec<Polynomial>, Error> {
    if *xi.value() != ValueKind::Adjoint {
        return Err(Error::ValueKindMismatch(
            "a gauge parameter is an adjoint-valued 0-form".into(),
        ));
    }
    for (r, s) in xi.bidegrees() {
        if (r, s) != (0, 0) {
            return Err(Error::ValueKindMismatch(format!(
                "a gauge parameter has bidegree (0,0), found ({r},{s})"
            )));
        }
    }
    Ok(xi
        .component(&[], &[])
        .cloned()
        .unwrap_or_else(|| vec![Polynomial::zero(xi.m()); xi.n()]))
}

/// First-order gauge transformation of the connection and an optional
/// matter field: δA = dξ + [A, ξ], δτ = −ad_ξ∘τ, δÂ = δA − δτ(Ȧ),
/// δφ = −ρ(ξ)φ.
pub fn infinitesimal_gauge(
    c: &GeneralizedConnection,
    phi: Option<&MatterField>,
    xi: &BigradedForm,
    background: &BigradedForm,
) -> Result<(GeneralizedConnection, Option<MatterField>), Error> {
    let components = gauge_parameter_components(xi)?;
    let ad_xi = poly_adjoint_matrix(c.algebra(), &components)?;

    let a = c.induced_connection(background)?;
    let delta_a = xi.de_rham_d().add(&a.bracket(xi)?)?;
    let delta_tau = poly_matrix_scale(&poly_matrix_mul(&ad_xi, &c.tau), Complex64::new(-1.0, 0.0));
    let delta_a_hat = delta_a.sub(&apply_endomorphism(&delta_tau, background)?)?;

    let new_c = GeneralizedConnection::new(
        c.a_hat.add(&delta_a_hat)?,
        poly_matrix_add(&c.tau, &delta_tau),
    )?;

    let new_phi = match phi {
        Some(field) => {
            let shift = field.rep_action(&components)?;
            let mut phi_new = field.phi.clone();
            for (p, s) in phi_new.iter_mut().zip(shift.iter()) {
                *p = &*p - s;
            }
            Some(MatterField {
                phi: phi_new,
                rep: field.rep.clone(),
                h_e: field.h_e.clone(),
                pairing: field.pairing,
            })
        }
        None => None,
    };
    Ok((new_c, new_phi))
}

/// Finite gauge transformation of an ordinary connection by an invertible
/// matrix of polynomials: A^u = u⁻¹Au + u⁻¹du, expanded back in the basis
/// of the matrix realization.
pub fn finite_gauge(
    a: &BigradedForm,
    u: &PolyMatrix,
    u_inv: &PolyMatrix,
    algebra: &LieAlgebra,
    tolerance: f64,
) -> Result<BigradedForm, Error> {
    let m = a.m();
    let n = algebra.dim();
    let rho = algebra.realization()?;
    let k = rho[0].nrows();
    if u.len() != k || u_inv.len() != k {
        return Err(Error::DimensionMismatch {
            context: "gauge group element size".into(),
            expected: k,
            got: u.len(),
        });
    }
    let residual = crate::poly::poly_matrix_max_abs(&poly_matrix_sub(
        &poly_matrix_mul(u, u_inv),
        &poly_matrix_identity(m, k),
    ));
    if residual > tolerance {
        return Err(Error::InverseCheckFailed { residual, tolerance });
    }
    let gram_inv = algebra.realization_gram_inverse()?;
    let mut out = BigradedForm::zero(m, a.algebra().clone(), ValueKind::Adjoint);
    for mu in 0..m {
        // A_μ as a matrix in the realization
        let mut a_mat = vec![vec![Polynomial::zero(m); k]; k];
        if let Some(vals) = a.component(&[mu as u8], &[]) {
            for (b, v) in vals.iter().enumerate().take(n) {
                if v.is_zero() {
                    continue;
                }
                for i in 0..k {
                    for j in 0..k {
                        let coeff = rho[b][(i, j)];
                        if coeff.norm() > 0.0 {
                            a_mat[i][j] = &a_mat[i][j] + &v.scale(coeff);
                        }
                    }
                }
            }
        }
        let transformed = poly_matrix_add(
            &poly_matrix_mul(&poly_matrix_mul(u_inv, &a_mat), u),
            &poly_matrix_mul(u_inv, &poly_matrix_partial(u, mu)?),
        );
        let expanded = expand_poly_matrix(&transformed, rho, &gram_inv, m, tolerance)?;
        for (b, p) in expanded.iter().enumerate() {
            if !p.is_zero() {
                out.add_term(&[mu as u8], &[], b, p);
            }
        }
    }
    Ok(out)
}

/// Conjugates the value index of an adjoint-valued form through the matrix
/// realization: each component Σ_b ω^b E_b becomes u⁻¹(Σ_b ω^b E_b)u,
/// expanded back in the basis.
pub fn conjugate_adjoint_form(
    form: &BigradedForm,
    u: &PolyMatrix,
    u_inv: &PolyMatrix,
    algebra: &LieAlgebra,
    tolerance: f64,
) -> Result<BigradedForm, Error> {
    let m = form.m();
    let rho = algebra.realization()?;
    let k = rho[0].nrows();
    let gram_inv = algebra.realization_gram_inverse()?;
    let mut out = BigradedForm::zero(m, form.algebra().clone(), ValueKind::Adjoint);
    for ((dx, theta), vals) in form.components() {
        let mut mat = vec![vec![Polynomial::zero(m); k]; k];
        for (b, v) in vals.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            for i in 0..k {
                for j in 0..k {
                    let coeff = rho[b][(i, j)];
                    if coeff.norm() > 0.0 {
                        mat[i][j] = &mat[i][j] + &v.scale(coeff);
                    }
                }
            }
        }
        let conj = poly_matrix_mul(&poly_matrix_mul(u_inv, &mat), u);
        let back = expand_poly_matrix(&conj, rho, &gram_inv, m, tolerance)?;
        for (b, p) in back.iter().enumerate() {
            if !p.is_zero() {
                out.add_term(dx, theta, b, p);
            }
        }
    }
    Ok(out)
}

/// The covariant derivative of a matter field split along the background:
/// spatial components ∇̂_μφ = ∂_μφ + A^a_μρ(E_a)φ and inner components
/// ∇̂_aφ = −τ^b_aρ(E_b)φ.
pub struct CovariantDerivative {
    pub spatial: Vec<Vec<Polynomial>>,
    pub inner: Vec<Vec<Polynomial>>,
}

pub fn covariant_derivative(
    phi: &MatterField,
    c: &GeneralizedConnection,
    background: &BigradedForm,
) -> Result<CovariantDerivative, Error> {
    let m = c.a_hat.m();
    let n = c.algebra().dim();
    let a = c.induced_connection(background)?;
    let mut spatial = Vec::with_capacity(m);
    for mu in 0..m {
        let a_mu = a
            .component(&[mu as u8], &[])
            .cloned()
            .unwrap_or_else(|| vec![Polynomial::zero(m); n]);
        let coupling = phi.rep_action(&a_mu)?;
        let mut grad: Vec<Polynomial> = phi
            .phi
            .iter()
            .map(|p| p.partial(mu))
            .collect::<Result<_, _>>()?;
        for (g, cpl) in grad.iter_mut().zip(coupling.iter()) {
            *g = &*g + cpl;
        }
        spatial.push(grad);
    }
    let mut inner = Vec::with_capacity(n);
    for a_idx in 0..n {
        let tau_col: Vec<Polynomial> = (0..n).map(|b| c.tau[b][a_idx].clone()).collect();
        let action = phi.rep_action(&tau_col)?;
        inner.push(action.iter().map(|p| p.scale(Complex64::new(-1.0, 0.0))).collect());
    }
    Ok(CovariantDerivative { spatial, inner })
}

/// The combinatorial coefficients of the developed gauge Lagrangian:
/// λ₁ = (−1)ⁿ(m−2)!n!, λ₂ = (−1)ⁿ(−1)^{m−1}(m−1)!(n−1)!,
/// λ₃ = (−1)ⁿm!(n−2)!. Entries are `None` in the degenerate dimensions
/// where the corresponding term is absent (m < 2 or n < 2).
pub fn lambda_coefficients(m: usize, n: usize) -> (Option<f64>, f64, Option<f64>) {
    let sn = if n % 2 == 1 { -1.0 } else { 1.0 };
    let sm = if (m - 1) % 2 == 1 { -1.0 } else { 1.0 };
    let l1 = if m >= 2 { Some(sn * factorial(m - 2) * factorial(n)) } else { None };
    let l2 = sn * sm * factorial(m - 1) * factorial(n - 1);
    let l3 = if n >= 2 { Some(sn * factorial(m) * factorial(n - 2)) } else { None };
    (l1, l2, l3)
}

/// One evaluated action functional term.
#[derive(Clone, Debug)]
pub struct ActionTerm {
    pub name: String,
    pub value: Complex64,
    pub omitted: bool,
}

/// A decomposed action value: named terms and their sum.
#[derive(Clone, Debug)]
pub struct ActionValue {
    pub terms: Vec<ActionTerm>,
    pub value: Complex64,
}

impl ActionValue {
    pub fn term(&self, name: &str) -> Option<&ActionTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

fn integrate_density(
    density: &Polynomial,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<Complex64, Error> {
    Ok(density.integrate_box(chart)? * Complex64::new(t.sqrt_abs_det_g(), 0.0))
}

/// The gauge action: L = (λ₁/4) gg h F̂F̂ + (λ₂/2) g h h (Dτ)(Dτ)
/// + (λ₃/4) h h h W W, integrated against √|g| over the box. Degenerate
/// terms (m < 2 or n < 2) are omitted and marked.
pub fn action_gauge(
    c: &GeneralizedConnection,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<ActionValue, Error> {
    let m = t.m();
    let n = t.h().n();
    let bundle = curvature_decomposition(c, t)?;
    let g_inv = t.g_inverse()?.clone();
    let h = t.h().matrix().clone();
    let h_inv = t.h().inverse()?.clone();
    let (l1, l2, l3) = lambda_coefficients(m, n);

    let mut terms = Vec::new();
    let mut total = czero();

    // λ₁/4 g^{μ₁μ₂} g^{ν₁ν₂} h_{a₁a₂} F̂^{a₁}_{μ₁ν₁} F̂^{a₂}_{μ₂ν₂}
    match l1 {
        Some(l1) => {
            let mut density = Polynomial::zero(m);
            for a1 in 0..n {
                for a2 in 0..n {
                    let hw = h[(a1, a2)];
                    if hw.norm() == 0.0 {
                        continue;
                    }
                    for mu1 in 0..m {
                        for mu2 in 0..m {
                            if g_inv[(mu1, mu2)].norm() == 0.0 {
                                continue;
                            }
                            for nu1 in 0..m {
                                for nu2 in 0..m {
                                    let gw = g_inv[(mu1, mu2)] * g_inv[(nu1, nu2)];
                                    if gw.norm() == 0.0 {
                                        continue;
                                    }
                                    let p1 =
                                        field_strength_component(&bundle.f_hat, a1, mu1, nu1);
                                    let p2 =
                                        field_strength_component(&bundle.f_hat, a2, mu2, nu2);
                                    if p1.is_zero() || p2.is_zero() {
                                        continue;
                                    }
                                    density = &density + &poly_mul(&p1, &p2)?.scale(gw * hw);
                                }
                            }
                        }
                    }
                }
            }
            let value = integrate_density(&density, t, chart)? * Complex64::new(l1 / 4.0, 0.0);
            total += value;
            terms.push(ActionTerm { name: "yang-mills".into(), value, omitted: false });
        }
        None => terms.push(ActionTerm { name: "yang-mills".into(), value: czero(), omitted: true }),
    }

    // λ₂/2 g^{μ₁μ₂} h^{a₁a₂} h_{b₁b₂} (Dτ)^{b₁}_{μ₁,a₁}(Dτ)^{b₂}_{μ₂,a₂}
    {
        let mut density = Polynomial::zero(m);
        for mu1 in 0..m {
            for mu2 in 0..m {
                let gw = g_inv[(mu1, mu2)];
                if gw.norm() == 0.0 {
                    continue;
                }
                for a1 in 0..n {
                    for a2 in 0..n {
                        let hu = h_inv[(a1, a2)];
                        if hu.norm() == 0.0 {
                            continue;
                        }
                        for b1 in 0..n {
                            for b2 in 0..n {
                                let hd = h[(b1, b2)];
                                if hd.norm() == 0.0 {
                                    continue;
                                }
                                let p1 = &bundle.dtau[mu1][b1][a1];
                                let p2 = &bundle.dtau[mu2][b2][a2];
                                if p1.is_zero() || p2.is_zero() {
                                    continue;
                                }
                                density = &density + &poly_mul(p1, p2)?.scale(gw * hu * hd);
                            }
                        }
                    }
                }
            }
        }
        let value = integrate_density(&density, t, chart)? * Complex64::new(l2 / 2.0, 0.0);
        total += value;
        terms.push(ActionTerm { name: "tau-kinetic".into(), value, omitted: false });
    }

    // λ₃/4 h^{a₁a₂} h^{b₁b₂} h_{c₁c₂} W^{c₁}_{a₁b₁} W^{c₂}_{a₂b₂}
    match l3 {
        Some(l3) => {
            let mut density = Polynomial::zero(m);
            for a1 in 0..n {
                for a2 in 0..n {
                    let hu1 = h_inv[(a1, a2)];
                    if hu1.norm() == 0.0 {
                        continue;
                    }
                    for b1 in 0..n {
                        for b2 in 0..n {
                            let hu2 = h_inv[(b1, b2)];
                            if hu2.norm() == 0.0 {
                                continue;
                            }
                            for c1 in 0..n {
                                for c2 in 0..n {
                                    let hd = h[(c1, c2)];
                                    if hd.norm() == 0.0 {
                                        continue;
                                    }
                                    let p1 = &bundle.w[a1][b1][c1];
                                    let p2 = &bundle.w[a2][b2][c2];
                                    if p1.is_zero() || p2.is_zero() {
                                        continue;
                                    }
                                    density =
                                        &density + &poly_mul(p1, p2)?.scale(hu1 * hu2 * hd);
                                }
                            }
                        }
                    }
                }
            }
            let value = integrate_density(&density, t, chart)? * Complex64::new(l3 / 4.0, 0.0);
            total += value;
            terms.push(ActionTerm { name: "potential".into(), value, omitted: false });
        }
        None => terms.push(ActionTerm { name: "potential".into(), value: czero(), omitted: true }),
    }

    Ok(ActionValue { terms, value: total })
}

/// The matter action:
/// (−1)ⁿ[(m−1)!n! g^{μν}h_E(∇̂_μφ, ∇̂_νφ) + (n−1)!m! h^{ab}h_E(∇̂_aφ, ∇̂_bφ)]
/// integrated against √|g| over the box.
pub fn action_matter(
    phi: &MatterField,
    c: &GeneralizedConnection,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<ActionValue, Error> {
    let m = t.m();
    let n = t.h().n();
    let sn = if n % 2 == 1 { -1.0 } else { 1.0 };
    let g_inv = t.g_inverse()?.clone();
    let h_inv = t.h().inverse()?.clone();
    let nabla = covariant_derivative(phi, c, t.a_dot())?;

    let mut kinetic_density = Polynomial::zero(m);
    for mu in 0..m {
        for nu in 0..m {
            let gw = g_inv[(mu, nu)];
            if gw.norm() == 0.0 {
                continue;
            }
            kinetic_density =
                &kinetic_density + &phi.pair(&nabla.spatial[mu], &nabla.spatial[nu])?.scale(gw);
        }
    }
    let kinetic = integrate_density(&kinetic_density, t, chart)?
        * Complex64::new(sn * factorial(m - 1) * factorial(n), 0.0);

    let mut mass_density = Polynomial::zero(m);
    for a in 0..n {
        for b in 0..n {
            let hw = h_inv[(a, b)];
            if hw.norm() == 0.0 {
                continue;
            }
            mass_density = &mass_density + &phi.pair(&nabla.inner[a], &nabla.inner[b])?.scale(hw);
        }
    }
    let mass = integrate_density(&mass_density, t, chart)?
        * Complex64::new(sn * factorial(n - 1) * factorial(m), 0.0);

    Ok(ActionValue {
        terms: vec![
            ActionTerm { name: "matter-kinetic".into(), value: kinetic, omitted: false },
            ActionTerm { name: "matter-mass".into(), value: mass, omitted: false },
        ],
        value: kinetic + mass,
    })
}

/// The five-line decomposition of the total action: the three gauge terms
/// followed by the two matter terms, with their sum.
pub fn action_report(
    phi: &MatterField,
    c: &GeneralizedConnection,
    t: &MetricTriple,
    chart: &ChartBox,
) -> Result<ActionValue, Error> {
    let gauge = action_gauge(c, t, chart)?;
    let matter = action_matter(phi, c, t, chart)?;
    let mut terms = gauge.terms;
    terms.extend(matter.terms);
    Ok(ActionValue { terms, value: gauge.value + matter.value })
}

/// Checks that a family of per-chart connections describes one global
/// connection: τ glues by conjugation, τⁱ = Gⁱ_j τʲ Gʲ_i, and the spatial
/// part glues with the χ-shift, Âⁱ = Gⁱ_j(Âʲ) + χ_ij − τⁱ(χ_ij).
pub fn check_connection_family(
    data: &TransitionData,
    family: &BTreeMap<usize, GeneralizedConnection>,
    density: usize,
    threshold: f64,
) -> Result<CheckReport, Error> {
    let mut report = CheckReport::new();
    for (&(i, j), overlap) in data.atlas().overlaps() {
        let ci = family.get(&i).ok_or(Error::UnknownChart(i))?;
        let cj = family.get(&j).ok_or(Error::UnknownChart(j))?;
        let points = overlap.lattice(density);
        let g_fwd = &data.transition(i, j)?.g;
        let g_bwd = &data.transition(j, i)?.g;
        let chi = &data.transition(i, j)?.chi;

        let tau_glued = poly_matrix_mul(&poly_matrix_mul(g_fwd, &cj.tau), g_bwd);
        let tau_residual =
            poly_matrix_max_abs_eval(&poly_matrix_sub(&ci.tau, &tau_glued), &points);
        report.add(
            "connection gluing: τ conjugation",
            format!("overlap ({i},{j})"),
            tau_residual,
            threshold,
        );

        let a_glued = data
            .rotate_values(&cj.a_hat, i, j)?
            .add(chi)?
            .sub(&apply_endomorphism(&ci.tau, chi)?)?;
        let a_residual = ci.a_hat.sub(&a_glued)?.max_abs_eval(&points);
        report.add(
            "connection gluing: Â with χ-shift",
            format!("overlap ({i},{j})"),
            a_residual,
            threshold,
        );
    }
    Ok(report)
}
