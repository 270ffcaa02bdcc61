//! The bigraded differential calculus Ω^r(U) ⊗ Λ^s g* ⊗ V for value spaces
//! V ∈ {scalar, adjoint g, representation space}: wedge products, the graded
//! bracket, the de Rham and Chevalley-Eilenberg differentials, the total
//! differential, and the mixed basis q^a = A^a − θ^a.
//!
//! A form is a finite sum of terms P(x) dx^{μ₁}∧…∧dx^{μ_r} ∧ θ^{a₁}∧…∧θ^{a_s}
//! ⊗ v over strictly increasing multi-indices; inhomogeneous sums over
//! bidegrees are first-class because connection forms mix bidegrees (1,0)
//! and (0,1).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::liealg::LieAlgebra;
use crate::poly::Polynomial;

/// A representation of the Lie algebra on a complex vector space: matrices
/// ρ(E_a) acting on value coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    pub dim: usize,
    pub matrices: Vec<DMatrix<Complex64>>,
}

impl Representation {
    /// Builds a representation, verifying it is a Lie algebra morphism.
    pub fn new(algebra: &LieAlgebra, matrices: Vec<DMatrix<Complex64>>) -> Result<Self, Error> {
        let n = algebra.dim();
        if matrices.len() != n {
            return Err(Error::DimensionMismatch {
                context: "representation matrices".into(),
                expected: n,
                got: matrices.len(),
            });
        }
        let dim = matrices[0].nrows();
        for m in &matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::ValueKindMismatch(
                    "representation matrices have inconsistent shapes".into(),
                ));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let mut expected = DMatrix::<Complex64>::zeros(dim, dim);
                for c in 0..n {
                    expected += matrices[c].map(|x| x * algebra.c(a, b, c));
                }
                let commutator = &matrices[a] * &matrices[b] - &matrices[b] * &matrices[a];
                let residual = (commutator - expected).map(|x| x.norm()).max();
                if residual > 1e-9 {
                    return Err(Error::ValueKindMismatch(format!(
                        "representation is not a Lie morphism: bracket residual {residual:.3e} at ({a},{b})"
                    )));
                }
            }
        }
        Ok(Representation { dim, matrices })
    }

    /// The defining representation read off a matrix realization.
    pub fn from_realization(algebra: &LieAlgebra) -> Result<Self, Error> {
        Self::new(algebra, algebra.realization()?.to_vec())
    }
}

/// What the form takes values in.
#[derive(Clone, Debug)]
pub enum ValueKind {
    Scalar,
    Adjoint,
    Rep(Arc<Representation>),
}

impl PartialEq for ValueKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ValueKind::Scalar, ValueKind::Scalar) => true,
            (ValueKind::Adjoint, ValueKind::Adjoint) => true,
            (ValueKind::Rep(a), ValueKind::Rep(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl ValueKind {
    pub fn dim(&self, algebra: &LieAlgebra) -> usize {
        match self {
            ValueKind::Scalar => 1,
            ValueKind::Adjoint => algebra.dim(),
            ValueKind::Rep(r) => r.dim,
        }
    }
}

/// Component key: (ascending dx multi-index, ascending inner multi-index),
/// both 0-based internally.
pub type Key = (Vec<u8>, Vec<u8>);

/// An element of the total complex Ω^•(U) ⊗ Λ^•g* ⊗ V with polynomial
/// coefficients, possibly inhomogeneous in bidegree.
#[derive(Clone, Debug)]
pub struct BigradedForm {
    m: usize,
    algebra: Arc<LieAlgebra>,
    value: ValueKind,
    components: BTreeMap<Key, Vec<Polynomial>>,
}

/// Sign of the permutation sorting `indices` ascending; `None` on repeats.
fn sort_sign(indices: &[u8]) -> Option<(Vec<u8>, f64)> {
    let mut v: Vec<u8> = indices.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Merge two ascending index blocks into one ascending block, with the sign
/// of the interleaving permutation; `None` on common indices.
fn merge_sign(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, f64)> {
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            merged.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a-elements
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            merged.push(b[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&a[i..]);
    merged.extend_from_slice(&b[j..]);
    Some((merged, sign))
}

impl BigradedForm {
    pub fn zero(m: usize, algebra: Arc<LieAlgebra>, value: ValueKind) -> Self {
        BigradedForm { m, algebra, value, components: BTreeMap::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.algebra.dim()
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn value(&self) -> &ValueKind {
        &self.value
    }

    pub fn value_dim(&self) -> usize {
        self.value.dim(&self.algebra)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Key, &Vec<Polynomial>)> {
        self.components.iter()
    }

    pub fn component(&self, dx: &[u8], theta: &[u8]) -> Option<&Vec<Polynomial>> {
        self.components.get(&(dx.to_vec(), theta.to_vec()))
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.components.len()
    }

    /// Largest coefficient magnitude over all components; the residual
    /// measure used throughout the test suites.
    pub fn max_abs_coeff(&self) -> f64 {
        self.components
            .values()
            .flat_map(|vals| vals.iter().map(|p| p.max_abs_coeff()))
            .fold(0.0, f64::max)
    }

    /// Largest component magnitude over a set of sample points.
    pub fn max_abs_eval(&self, points: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for vals in self.components.values() {
            for p in vals {
                for point in points {
                    worst = worst.max(p.eval(point).norm());
                }
            }
        }
        worst
    }

    /// Set of bidegrees (r, s) present.
    pub fn bidegrees(&self) -> BTreeSet<(usize, usize)> {
        self.components
            .keys()
            .map(|(i, j)| (i.len(), j.len()))
            .collect()
    }

    /// The homogeneous part of total degree p.
    pub fn degree_part(&self, p: usize) -> Self {
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        for ((i, j), vals) in &self.components {
            if i.len() + j.len() == p {
                out.components.insert((i.clone(), j.clone()), vals.clone());
            }
        }
        out
    }

    /// The homogeneous part of bidegree (r, s).
    pub fn bidegree_part(&self, r: usize, s: usize) -> Self {
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        for ((i, j), vals) in &self.components {
            if i.len() == r && j.len() == s {
                out.components.insert((i.clone(), j.clone()), vals.clone());
            }
        }
        out
    }

    /// Pure total degree, if the form is homogeneous (zero counts as pure).
    pub fn pure_degree(&self) -> Option<usize> {
        let degrees: BTreeSet<usize> = self
            .components
            .keys()
            .map(|(i, j)| i.len() + j.len())
            .collect();
        match degrees.len() {
            0 => Some(0),
            1 => degrees.into_iter().next(),
            _ => None,
        }
    }

    fn prune_key(&mut self, key: &Key) {
        if let Some(vals) = self.components.get(key) {
            if vals.iter().all(|p| p.is_zero()) {
                self.components.remove(key);
            }
        }
    }

    /// Adds `poly ⊗ e_{value_index}` on the generator monomial
    /// dx^{dx_indices} ∧ θ^{theta_indices} (0-based, any order; repeated
    /// indices annihilate the term).
    pub fn add_term(
        &mut self,
        dx_indices: &[u8],
        theta_indices: &[u8],
        value_index: usize,
        poly: &Polynomial,
    ) {
        assert!(value_index < self.value_dim(), "value index out of range");
        assert!(dx_indices.iter().all(|&mu| (mu as usize) < self.m));
        assert!(theta_indices.iter().all(|&a| (a as usize) < self.n()));
        let Some((i, sign_i)) = sort_sign(dx_indices) else { return };
        let Some((j, sign_j)) = sort_sign(theta_indices) else { return };
        let key = (i, j);
        let dim = self.value_dim();
        let nv = poly.num_vars();
        let vals = self
            .components
            .entry(key.clone())
            .or_insert_with(|| vec![Polynomial::zero(nv); dim]);
        vals[value_index] = &vals[value_index] + &poly.scale(Complex64::new(sign_i * sign_j, 0.0));
        self.prune_key(&key);
    }

    fn compatible(&self, other: &Self) -> Result<(), Error> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch {
                context: "base dimensions of forms".into(),
                expected: self.m,
                got: other.m,
            });
        }
        if self.algebra.dim() != other.algebra.dim() || self.algebra.name() != other.algebra.name()
        {
            return Err(Error::BackgroundMismatch(format!(
                "algebras differ: {} vs {}",
                self.algebra.name(),
                other.algebra.name()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.compatible(other)?;
        if self.value != other.value {
            return Err(Error::ValueKindMismatch("sum of forms with different values".into()));
        }
        let mut out = self.clone();
        for (key, vals) in &other.components {
            let dim = out.value_dim();
            let nv = vals[0].num_vars();
            let entry = out
                .components
                .entry(key.clone())
                .or_insert_with(|| vec![Polynomial::zero(nv); dim]);
            for (k, p) in vals.iter().enumerate() {
                entry[k] = &entry[k] + p;
            }
            out.prune_key(key);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        if c == Complex64::new(0.0, 0.0) {
            return out;
        }
        for (key, vals) in &self.components {
            out.components
                .insert(key.clone(), vals.iter().map(|p| p.scale(c)).collect());
        }
        out
    }

    /// Multiplies every component by a spatial polynomial.
    pub fn scale_poly(&self, q: &Polynomial) -> Self {
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        if q.is_zero() {
            return out;
        }
        for (key, vals) in &self.components {
            let scaled: Vec<Polynomial> = vals.iter().map(|p| p * q).collect();
            if scaled.iter().any(|p| !p.is_zero()) {
                out.components.insert(key.clone(), scaled);
            }
        }
        out
    }

    /// Wedge product; at least one factor must be scalar-valued.
    pub fn wedge(&self, other: &Self) -> Result<Self, Error> {
        self.compatible(other)?;
        let out_value = match (&self.value, &other.value) {
            (ValueKind::Scalar, v) => v.clone(),
            (v, ValueKind::Scalar) => v.clone(),
            _ => {
                return Err(Error::ValueKindMismatch(
                    "wedge requires at least one scalar-valued factor (use bracket for adjoint×adjoint)"
                        .into(),
                ))
            }
        };
        let mut out = Self::zero(self.m, self.algebra.clone(), out_value);
        for ((i1, j1), v1) in &self.components {
            for ((i2, j2), v2) in &other.components {
                let Some((i, sign_i)) = merge_sign(i1, i2) else { continue };
                let Some((j, sign_j)) = merge_sign(j1, j2) else { continue };
                // dx-block of the second factor moves past the θ-block of the first
                let cross = if (i2.len() * j1.len()) % 2 == 1 { -1.0 } else { 1.0 };
                let sign = Complex64::new(sign_i * sign_j * cross, 0.0);
                let vals: Vec<Polynomial> = match (&self.value, &other.value) {
                    (ValueKind::Scalar, _) => v2.iter().map(|p| (&v1[0] * p).scale(sign)).collect(),
                    (_, ValueKind::Scalar) => v1.iter().map(|p| (p * &v2[0]).scale(sign)).collect(),
                    _ => unreachable!(),
                };
                let key = (i, j);
                let dim = vals.len();
                let nv = vals[0].num_vars();
                let entry = out
                    .components
                    .entry(key.clone())
                    .or_insert_with(|| vec![Polynomial::zero(nv); dim]);
                for (k, p) in vals.into_iter().enumerate() {
                    entry[k] = &entry[k] + &p;
                }
                out.prune_key(&key);
            }
        }
        Ok(out)
    }

    /// Graded bracket of two adjoint-valued forms:
    /// `[ω,η]^c = Σ_{a,b} C^c_ab ω^a ∧ η^b`.
    pub fn bracket(&self, other: &Self) -> Result<Self, Error> {
        self.compatible(other)?;
        if self.value != ValueKind::Adjoint || other.value != ValueKind::Adjoint {
            return Err(Error::ValueKindMismatch("bracket requires adjoint-valued forms".into()));
        }
        let n = self.n();
        let mut out = Self::zero(self.m, self.algebra.clone(), ValueKind::Adjoint);
        for ((i1, j1), v1) in &self.components {
            for ((i2, j2), v2) in &other.components {
                let Some((i, sign_i)) = merge_sign(i1, i2) else { continue };
                let Some((j, sign_j)) = merge_sign(j1, j2) else { continue };
                let cross = if (i2.len() * j1.len()) % 2 == 1 { -1.0 } else { 1.0 };
                let sign = Complex64::new(sign_i * sign_j * cross, 0.0);
                let nv = v1[0].num_vars();
                let mut vals = vec![Polynomial::zero(nv); n];
                for a in 0..n {
                    if v1[a].is_zero() {
                        continue;
                    }
                    for b in 0..n {
                        if v2[b].is_zero() {
                            continue;
                        }
                        for c in 0..n {
                            let coeff = self.algebra.c(a, b, c) * sign;
                            if coeff.norm() > 0.0 {
                                vals[c] = &vals[c] + &(&v1[a] * &v2[b]).scale(coeff);
                            }
                        }
                    }
                }
                let key = (i, j);
                let entry = out
                    .components
                    .entry(key.clone())
                    .or_insert_with(|| vec![Polynomial::zero(nv); n]);
                for (c, p) in vals.into_iter().enumerate() {
                    entry[c] = &entry[c] + &p;
                }
                out.prune_key(&key);
            }
        }
        Ok(out)
    }

    /// De Rham differential: raises r by one, exact on polynomials.
    pub fn de_rham_d(&self) -> Self {
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        for ((i, j), vals) in &self.components {
            for mu in 0..self.m {
                if i.contains(&(mu as u8)) {
                    continue;
                }
                for (k, p) in vals.iter().enumerate() {
                    let dp = p.partial(mu).expect("coordinate index in range");
                    if dp.is_zero() {
                        continue;
                    }
                    // dx^μ ∧ dx^I ∧ θ^J: μ enters at the front of the dx block
                    let mut dx = vec![mu as u8];
                    dx.extend_from_slice(i);
                    out.add_term(&dx, j, k, &dp);
                }
            }
        }
        out
    }

    /// Chevalley-Eilenberg differential: raises s by one.
    ///
    /// On a term P dx^I ∧ θ^J ⊗ v it acts as
    /// `(−1)^r P dx^I ∧ [ s(θ^J) ⊗ v + Σ_a θ^a ∧ θ^J ⊗ ρ(E_a) v ]`
    /// with `s θ^c = −½ C^c_ab θ^a ∧ θ^b`, ρ = 0 on scalars and ρ = ad on
    /// adjoint values.
    pub fn chevalley_s(&self) -> Self {
        let n = self.n();
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        for ((i, j), vals) in &self.components {
            let r_sign = if i.len() % 2 == 1 { -1.0 } else { 1.0 };
            // antiderivation over the θ factors
            for (pos, &jc) in j.iter().enumerate() {
                let pos_sign = if pos % 2 == 1 { -1.0 } else { 1.0 };
                for a in 0..n {
                    for b in 0..n {
                        let coeff = self.algebra.c(a, b, jc as usize);
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        // replace θ^{jc} (at its position) by −½ C^{jc}_ab θ^a∧θ^b
                        let mut theta: Vec<u8> = Vec::with_capacity(j.len() + 1);
                        theta.extend_from_slice(&j[..pos]);
                        theta.push(a as u8);
                        theta.push(b as u8);
                        theta.extend_from_slice(&j[pos + 1..]);
                        let total = Complex64::new(-0.5 * r_sign * pos_sign, 0.0) * coeff;
                        for (k, p) in vals.iter().enumerate() {
                            if !p.is_zero() {
                                out.add_term(i, &theta, k, &p.scale(total));
                            }
                        }
                    }
                }
            }
            // value action: Σ_a θ^a ∧ θ^J ⊗ ρ(E_a) v
            match &self.value {
                ValueKind::Scalar => {}
                ValueKind::Adjoint => {
                    for a in 0..n {
                        let mut theta = vec![a as u8];
                        theta.extend_from_slice(j);
                        for v in 0..n {
                            if vals[v].is_zero() {
                                continue;
                            }
                            // ad_{E_a} E_v = Σ_c C^c_av E_c
                            for c in 0..n {
                                let coeff = self.algebra.c(a, v as usize, c);
                                if coeff.norm() > 0.0 {
                                    out.add_term(
                                        i,
                                        &theta,
                                        c,
                                        &vals[v].scale(coeff * Complex64::new(r_sign, 0.0)),
                                    );
                                }
                            }
                        }
                    }
                }
                ValueKind::Rep(rep) => {
                    for a in 0..n {
                        let mut theta = vec![a as u8];
                        theta.extend_from_slice(j);
                        for v in 0..rep.dim {
                            if vals[v].is_zero() {
                                continue;
                            }
                            for c in 0..rep.dim {
                                let coeff = rep.matrices[a][(c, v)];
                                if coeff.norm() > 0.0 {
                                    out.add_term(
                                        i,
                                        &theta,
                                        c,
                                        &vals[v].scale(coeff * Complex64::new(r_sign, 0.0)),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Total differential d̂ = d + s; nilpotent on every value kind.
    pub fn total_d(&self) -> Self {
        self.de_rham_d()
            .add(&self.chevalley_s())
            .expect("differentials preserve shape")
    }

    /// Evaluates the value vector of one component at a chart point.
    pub fn eval_component(&self, dx: &[u8], theta: &[u8], point: &[f64]) -> Vec<Complex64> {
        match self.component(dx, theta) {
            Some(vals) => vals.iter().map(|p| p.eval(point)).collect(),
            None => vec![Complex64::new(0.0, 0.0); self.value_dim()],
        }
    }

    /// Substitutes each inner generator θ^a by
    /// `Σ_μ spatial[a][μ] dx^μ + Σ_b inner[a][b] ι^b` (a degree-one image),
    /// optionally rotating adjoint value indices by `rotation` (v'^b =
    /// Σ_a rotation[b][a] v^a). Scalar values are never rotated.
    pub fn substitute_inner(
        &self,
        spatial: &[Vec<Polynomial>],
        inner: &[Vec<Polynomial>],
        rotation: Option<&[Vec<Polynomial>]>,
    ) -> Result<Self, Error> {
        let n = self.n();
        if spatial.len() != n || inner.len() != n {
            return Err(Error::DimensionMismatch {
                context: "inner substitution tables".into(),
                expected: n,
                got: spatial.len().min(inner.len()),
            });
        }
        if rotation.is_some() && matches!(self.value, ValueKind::Rep(_)) {
            return Err(Error::ValueKindMismatch(
                "value rotation of representation-valued forms is not supported".into(),
            ));
        }
        // pre-build the scalar 1-form images of the generators
        let mut images = Vec::with_capacity(n);
        for a in 0..n {
            let mut img = Self::zero(self.m, self.algebra.clone(), ValueKind::Scalar);
            for (mu, p) in spatial[a].iter().enumerate() {
                if !p.is_zero() {
                    img.add_term(&[mu as u8], &[], 0, p);
                }
            }
            for (b, p) in inner[a].iter().enumerate() {
                if !p.is_zero() {
                    img.add_term(&[], &[b as u8], 0, p);
                }
            }
            images.push(img);
        }
        let mut out = Self::zero(self.m, self.algebra.clone(), self.value.clone());
        for ((i, j), vals) in &self.components {
            // rotated base term dx^I ⊗ v
            let mut acc = Self::zero(self.m, self.algebra.clone(), self.value.clone());
            match (rotation, &self.value) {
                (Some(rot), ValueKind::Adjoint) => {
                    for b in 0..n {
                        let mut p = Polynomial::zero(vals[0].num_vars());
                        for a in 0..n {
                            if !vals[a].is_zero() && !rot[b][a].is_zero() {
                                p = &p + &(&rot[b][a] * &vals[a]);
                            }
                        }
                        if !p.is_zero() {
                            acc.add_term(i, &[], b, &p);
                        }
                    }
                }
                _ => {
                    for (k, p) in vals.iter().enumerate() {
                        if !p.is_zero() {
                            acc.add_term(i, &[], k, p);
                        }
                    }
                }
            }
            // wedge the generator images in the original θ order
            for &a in j {
                acc = acc.wedge(&images[a as usize])?;
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Substitution θ^a ↦ A^a − ι^a used by both mixed-basis conversions.
    fn mixed_substitution(&self, background: &BigradedForm) -> Result<Self, Error> {
        let n = self.n();
        let m = self.m;
        if background.value != ValueKind::Adjoint
            || background.bidegrees().iter().any(|&(r, s)| (r, s) != (1, 0))
        {
            return Err(Error::BackgroundMismatch(
                "background connection must be an adjoint-valued (1,0)-form".into(),
            ));
        }
        let num_vars = m;
        let mut spatial = vec![vec![Polynomial::zero(num_vars); m]; n];
        for mu in 0..m {
            if let Some(vals) = background.component(&[mu as u8], &[]) {
                for a in 0..n {
                    spatial[a][mu] = vals[a].clone();
                }
            }
        }
        let mut inner = vec![vec![Polynomial::zero(num_vars); n]; n];
        for (a, row) in inner.iter_mut().enumerate() {
            row[a] = Polynomial::real(num_vars, -1.0);
        }
        self.substitute_inner(&spatial, &inner, None)
    }
}

/// A form whose inner slots are read against the mixed basis q^a = A^a − θ^a
/// of a fixed background connection A.
#[derive(Clone, Debug)]
pub struct MixedForm {
    data: BigradedForm,
    background: BigradedForm,
}

impl MixedForm {
    /// Converts a θ-basis form to the mixed basis of `background` by the
    /// substitution θ^a ↦ A^a − q^a.
    pub fn to_mixed(form: &BigradedForm, background: &BigradedForm) -> Result<Self, Error> {
        form.compatible(background)?;
        let data = form.mixed_substitution(background)?;
        Ok(MixedForm { data, background: background.clone() })
    }

    /// Converts back to the θ basis via q^a ↦ A^a − θ^a (the substitution is
    /// an involution).
    pub fn from_mixed(&self) -> Result<BigradedForm, Error> {
        self.data.mixed_substitution(&self.background)
    }

    /// Wraps components that are already written in the mixed basis.
    pub fn from_raw(data: BigradedForm, background: BigradedForm) -> Result<Self, Error> {
        data.compatible(&background)?;
        Ok(MixedForm { data, background })
    }

    /// The component data, inner slots meaning q^a.
    pub fn data(&self) -> &BigradedForm {
        &self.data
    }

    pub fn background(&self) -> &BigradedForm {
        &self.background
    }

    /// Checks two mixed forms share one background (coefficient equality).
    pub fn same_background(&self, other: &Self) -> bool {
        match self.background.sub(&other.background) {
            Ok(diff) => diff.max_abs_coeff() <= 1e-12,
            Err(_) => false,
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.data.max_abs_coeff()
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        if !self.same_background(other) {
            return Err(Error::BackgroundMismatch(
                "mixed forms over different background connections".into(),
            ));
        }
        Ok(MixedForm { data: self.data.add(&other.data)?, background: self.background.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        if !self.same_background(other) {
            return Err(Error::BackgroundMismatch(
                "mixed forms over different background connections".into(),
            ));
        }
        Ok(MixedForm { data: self.data.sub(&other.data)?, background: self.background.clone() })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MixedForm { data: self.data.scale(c), background: self.background.clone() }
    }

    /// Total differential computed in the θ basis and re-expressed in the
    /// mixed basis of the same background.
    pub fn total_d(&self) -> Result<Self, Error> {
        let theta = self.from_mixed()?;
        MixedForm::to_mixed(&theta.total_d(), &self.background)
    }
}

/// Convenience: a zero background (mixed basis q = −θ).
pub fn zero_background(m: usize, algebra: Arc<LieAlgebra>) -> BigradedForm {
    BigradedForm::zero(m, algebra, ValueKind::Adjoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::preset;

    fn c64(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn su2() -> Arc<LieAlgebra> {
        Arc::new(preset("su2").unwrap())
    }

    fn scalar_gen(m: usize, g: &Arc<LieAlgebra>, dx: &[u8], theta: &[u8]) -> BigradedForm {
        let mut f = BigradedForm::zero(m, g.clone(), ValueKind::Scalar);
        f.add_term(dx, theta, 0, &Polynomial::one(m));
        f
    }

    #[test]
    fn wedge_graded_sign() {
        let g = su2();
        let dx1 = scalar_gen(2, &g, &[0], &[]);
        let th1 = scalar_gen(2, &g, &[], &[0]);
        let a = dx1.wedge(&th1).unwrap();
        let b = th1.wedge(&dx1).unwrap();
        assert_eq!(a.component(&[0], &[0]).unwrap()[0].constant_term(), c64(1.0));
        assert!(a.add(&b).unwrap().is_zero(), "odd generators anticommute");
        assert!(th1.wedge(&th1).unwrap().is_zero(), "repeated index annihilates");
    }

    #[test]
    fn wedge_with_coefficients() {
        let g = su2();
        let mut a = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        a.add_term(&[0], &[], 0, &Polynomial::var(2, 0)); // x1 dx1
        let mut b = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        b.add_term(&[1], &[], 0, &Polynomial::var(2, 1)); // x2 dx2
        let w = a.wedge(&b).unwrap();
        let p = &w.component(&[0, 1], &[]).unwrap()[0];
        let expected = &Polynomial::var(2, 0) * &Polynomial::var(2, 1);
        assert!((p - &expected).max_abs_coeff() < 1e-14);
    }

    #[test]
    fn wedge_graded_commutativity_random_degrees() {
        // scalar forms of total degrees 2 and 1: ω∧η = (−1)^{2·1} η∧ω
        let g = su2();
        let omega = scalar_gen(2, &g, &[0], &[1]);
        let eta = scalar_gen(2, &g, &[], &[0]);
        let lhs = omega.wedge(&eta).unwrap();
        let rhs = eta.wedge(&omega).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs_coeff() < 1e-14);
    }

    #[test]
    fn bracket_constants() {
        let g = su2();
        let mut e1 = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        e1.add_term(&[], &[], 0, &Polynomial::one(2));
        let mut e2 = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        e2.add_term(&[], &[], 1, &Polynomial::one(2));
        let br = e1.bracket(&e2).unwrap();
        assert_eq!(br.component(&[], &[]).unwrap()[2].constant_term(), c64(1.0));
        assert!(br.component(&[], &[]).unwrap()[0].is_zero());
    }

    #[test]
    fn bracket_self_odd_degree() {
        // ω = dx¹E₁ + dx²E₂ over su2: [ω,ω] = 2 dx¹∧dx² E₃
        let g = su2();
        let mut w = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        w.add_term(&[0], &[], 0, &Polynomial::one(2));
        w.add_term(&[1], &[], 1, &Polynomial::one(2));
        let br = w.bracket(&w).unwrap();
        let vals = br.component(&[0, 1], &[]).unwrap();
        assert_eq!(vals[2].constant_term(), c64(2.0));
        assert!(vals[0].is_zero() && vals[1].is_zero());
    }

    #[test]
    fn bracket_abelian_zero() {
        let g = Arc::new(preset("abelian(2)").unwrap());
        let mut w = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        w.add_term(&[0], &[], 0, &Polynomial::var(2, 1));
        w.add_term(&[], &[1], 1, &Polynomial::one(2));
        assert!(w.bracket(&w).unwrap().is_zero());
    }

    #[test]
    fn de_rham_examples() {
        let g = su2();
        // d(x1 dx2) = dx1 ∧ dx2
        let mut a = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        a.add_term(&[1], &[], 0, &Polynomial::var(2, 0));
        let da = a.de_rham_d();
        assert_eq!(da.component(&[0, 1], &[]).unwrap()[0].constant_term(), c64(1.0));
        // d(x2 dx1) = −dx1 ∧ dx2
        let mut b = BigradedForm::zero(2, g.clone(), ValueKind::Scalar);
        b.add_term(&[0], &[], 0, &Polynomial::var(2, 1));
        let db = b.de_rham_d();
        assert_eq!(db.component(&[0, 1], &[]).unwrap()[0].constant_term(), c64(-1.0));
    }

    #[test]
    fn chevalley_on_generators() {
        let g = su2();
        // s θ¹ = −θ²∧θ³
        let th1 = scalar_gen(2, &g, &[], &[0]);
        let s = th1.chevalley_s();
        assert_eq!(s.component(&[], &[1, 2]).unwrap()[0].constant_term(), c64(-1.0));
        assert_eq!(s.num_terms(), 1);

        // s′(E₁) = −θ²⊗E₃ + θ³⊗E₂
        let mut v = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        v.add_term(&[], &[], 0, &Polynomial::one(2));
        let sv = v.chevalley_s();
        assert_eq!(sv.component(&[], &[1]).unwrap()[2].constant_term(), c64(-1.0));
        assert_eq!(sv.component(&[], &[2]).unwrap()[1].constant_term(), c64(1.0));
        assert!(sv.component(&[], &[0]).is_none());
    }

    #[test]
    fn chevalley_affine2_trace_formula() {
        // n = 2, s(θ¹) = (−1)^n tr(C₂) θ¹∧θ² = −θ¹∧θ² for [E₁,E₂] = E₁
        let g = Arc::new(preset("affine2").unwrap());
        let th1 = scalar_gen(2, &g, &[], &[0]);
        let s = th1.chevalley_s();
        let tr_c2 = (0..2)
            .map(|b| g.c(1, b, b))
            .sum::<Complex64>();
        assert!((tr_c2 - c64(-1.0)).norm() < 1e-14);
        assert_eq!(s.component(&[], &[0, 1]).unwrap()[0].constant_term(), c64(-1.0));
    }

    #[test]
    fn total_d_trivial_cases() {
        let g = su2();
        let one = scalar_gen(2, &g, &[], &[]);
        assert!(one.total_d().is_zero());

        let ab = Arc::new(preset("abelian(2)").unwrap());
        let th1 = scalar_gen(2, &ab, &[], &[0]);
        assert!(th1.total_d().is_zero());
    }

    #[test]
    fn total_d_squared_zero() {
        use crate::corpus::random_form;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let su = su2();
        let gl = Arc::new(preset("gl(2)").unwrap());
        for g in [&su, &gl] {
            for value in [ValueKind::Scalar, ValueKind::Adjoint] {
                for _ in 0..3 {
                    let w = random_form(&mut rng, 2, g.clone(), value.clone(), (2, 2), 3);
                    let dd = w.total_d().total_d();
                    assert!(dd.max_abs_coeff() <= 1e-9, "d̂² residual {}", dd.max_abs_coeff());
                }
            }
        }
        // representation values
        let rep = Arc::new(Representation::from_realization(&su).unwrap());
        for _ in 0..3 {
            let w = random_form(&mut rng, 2, su.clone(), ValueKind::Rep(rep.clone()), (2, 2), 3);
            let dd = w.total_d().total_d();
            assert!(dd.max_abs_coeff() <= 1e-9);
        }
    }

    #[test]
    fn leibniz_rule_scalar() {
        use crate::corpus::random_form;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = su2();
        for _ in 0..5 {
            let w = random_form(&mut rng, 2, g.clone(), ValueKind::Scalar, (1, 1), 2);
            let e = random_form(&mut rng, 2, g.clone(), ValueKind::Scalar, (1, 1), 2);
            for p in 0..=2usize {
                let wp = w.degree_part(p);
                let lhs = wp.wedge(&e).unwrap().total_d();
                let sign = if p % 2 == 1 { -1.0 } else { 1.0 };
                let rhs = wp
                    .total_d()
                    .wedge(&e)
                    .unwrap()
                    .add(&wp.wedge(&e.total_d()).unwrap().scale(c64(sign)))
                    .unwrap();
                assert!(lhs.sub(&rhs).unwrap().max_abs_coeff() <= 1e-9);
            }
        }
    }

    #[test]
    fn graded_jacobi_bracket() {
        use crate::corpus::random_form;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let g = su2();
        // homogeneous total degrees p, q, t
        for _ in 0..3 {
            let a = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (1, 0), 2)
                .bidegree_part(1, 0);
            let b = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (0, 1), 2)
                .bidegree_part(0, 1);
            let cform = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, (0, 0), 2)
                .bidegree_part(0, 0);
            let (p, q, t) = (1i32, 1i32, 0i32);
            // (−1)^{pt}[a,[b,c]] + (−1)^{qp}[b,[c,a]] + (−1)^{tq}[c,[a,b]] = 0
            let s1 = if (p * t) % 2 == 1 { -1.0 } else { 1.0 };
            let s2 = if (q * p) % 2 == 1 { -1.0 } else { 1.0 };
            let s3 = if (t * q) % 2 == 1 { -1.0 } else { 1.0 };
            let total = a
                .bracket(&b.bracket(&cform).unwrap())
                .unwrap()
                .scale(c64(s1))
                .add(&b.bracket(&cform.bracket(&a).unwrap()).unwrap().scale(c64(s2)))
                .unwrap()
                .add(&cform.bracket(&a.bracket(&b).unwrap()).unwrap().scale(c64(s3)))
                .unwrap();
            assert!(total.max_abs_coeff() <= 1e-9);
        }
    }

    #[test]
    fn bracket_graded_antisymmetry() {
        use crate::corpus::random_form;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let g = su2();
        for (p_bid, q_bid) in [((1, 0), (0, 1)), ((1, 1), (1, 0)), ((0, 0), (1, 1))] {
            let a = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, p_bid, 2)
                .bidegree_part(p_bid.0, p_bid.1);
            let b = random_form(&mut rng, 2, g.clone(), ValueKind::Adjoint, q_bid, 2)
                .bidegree_part(q_bid.0, q_bid.1);
            let dp = p_bid.0 + p_bid.1;
            let dq = q_bid.0 + q_bid.1;
            let sign = if (dp * dq) % 2 == 1 { 1.0 } else { -1.0 };
            // [a,b] + (−1)^{|a||b|}[b,a] = 0 → [a,b] = −(−1)^{|a||b|}[b,a]
            let residual = a
                .bracket(&b)
                .unwrap()
                .add(&b.bracket(&a).unwrap().scale(c64(-sign)))
                .unwrap();
            assert!(residual.max_abs_coeff() <= 1e-9);
        }
    }

    fn background_x2dx1(g: &Arc<LieAlgebra>) -> BigradedForm {
        let mut a = BigradedForm::zero(2, g.clone(), ValueKind::Adjoint);
        a.add_term(&[0], &[], 0, &Polynomial::var(2, 1)); // x2 dx1 ⊗ E1
        a
    }

    #[test]
    fn mixed_basis_zero_background() {
        let g = su2();
        let w = scalar_gen(2, &g, &[0], &[0, 1]); // s = 2 θ slots
        let zero_a = zero_background(2, g.clone());
        let mixed = MixedForm::to_mixed(&w, &zero_a).unwrap();
        // θ = −q on each slot: (−1)² = +1
        assert_eq!(
            mixed.data().component(&[0], &[0, 1]).unwrap()[0].constant_term(),
            c64(1.0)
        );
        let one_slot = scalar_gen(2, &g, &[], &[2]);
        let mixed1 = MixedForm::to_mixed(&one_slot, &zero_a).unwrap();
        assert_eq!(mixed1.data().component(&[], &[2]).unwrap()[0].constant_term(), c64(-1.0));
    }

    #[test]
    fn mixed_basis_substitution() {
        // ω = θ¹, A = x₂ dx¹ ⊗ E₁ → A¹ − q¹ = x₂ dx¹ − q¹
        let g = su2();
        let w = scalar_gen(2, &g, &[], &[0]);
        let a = background_x2dx1(&g);
        let mixed = MixedForm::to_mixed(&w, &a).unwrap();
        let spatial = &mixed.data().component(&[0], &[]).unwrap()[0];
        assert!((spatial - &Polynomial::var(2, 1)).max_abs_coeff() < 1e-14);
        assert_eq!(mixed.data().component(&[], &[0]).unwrap()[0].constant_term(), c64(-1.0));
    }

    #[test]
    fn mixed_round_trip_random() {
        use crate::corpus::random_form;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let g = su2();
        let a = background_x2dx1(&g);
        for value in [ValueKind::Scalar, ValueKind::Adjoint] {
            for _ in 0..10 {
                let w = random_form(&mut rng, 2, g.clone(), value.clone(), (2, 2), 3);
                let back = MixedForm::to_mixed(&w, &a).unwrap().from_mixed().unwrap();
                assert!(w.sub(&back).unwrap().max_abs_coeff() <= 1e-9);
            }
        }
    }
}
