//! Finite-dimensional Lie algebras given by structure constants over a fixed
//! basis, with derived structure: Jacobi verification, Killing form,
//! unimodularity, adjoint matrices, matrix realizations and presets.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;

/// Tolerance for structural identities (Jacobi, realization bracket check).
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A Lie algebra of dimension `n` described by structure constants
/// `[E_a, E_b] = Σ_c C^c_ab E_c`, stored as `c[a][b][c]`.
///
/// An optional matrix realization `E_a ↦ ρ(E_a)` supports conjugation-based
/// operations (finite gauge transformations, group-cocycle transition data).
#[derive(Clone)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<Vec<Vec<Complex64>>>,
    basis_labels: Vec<String>,
    matrix_realization: Option<Vec<DMatrix<Complex64>>>,
    /// For the elementary-matrix `gl(p)` basis: trace functional on value
    /// coefficients, `tr(Σ v^a E_a) = Σ v^a trace_weights[a]`.
    trace_weights: Option<Vec<Complex64>>,
    name: String,
}

impl fmt::Debug for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieAlgebra({}, dim {})", self.name, self.dim)
    }
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl LieAlgebra {
    /// Builds an algebra from raw structure constants, verifying antisymmetry,
    /// the Jacobi identity, and (when present) the matrix realization.
    pub fn new(
        name: impl Into<String>,
        c: Vec<Vec<Vec<Complex64>>>,
        basis_labels: Vec<String>,
        matrix_realization: Option<Vec<DMatrix<Complex64>>>,
    ) -> Result<Self, Error> {
        let name = name.into();
        let dim = c.len();
        if basis_labels.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "basis labels".into(),
                expected: dim,
                got: basis_labels.len(),
            });
        }
        for row in &c {
            if row.len() != dim || row.iter().any(|col| col.len() != dim) {
                return Err(Error::DimensionMismatch {
                    context: "structure constant tensor".into(),
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let algebra = LieAlgebra {
            dim,
            c,
            basis_labels,
            matrix_realization,
            trace_weights: None,
            name,
        };
        algebra.check_antisymmetry()?;
        algebra.check_jacobi()?;
        algebra.check_realization()?;
        Ok(algebra)
    }

    fn check_antisymmetry(&self) -> Result<(), Error> {
        for a in 0..self.dim {
            for b in 0..self.dim {
                for c in 0..self.dim {
                    if (self.c[a][b][c] + self.c[b][a][c]).norm() > 0.0 {
                        return Err(Error::AlgebraCheck(format!(
                            "structure constants not antisymmetric at (a,b,c) = ({},{},{})",
                            a + 1,
                            b + 1,
                            c + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Max residual of Σ_d (C^d_ab C^e_dc + C^d_bc C^e_da + C^d_ca C^e_db).
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for e in 0..n {
                        let mut sum = czero();
                        for d in 0..n {
                            sum += self.c[a][b][d] * self.c[d][cc][e]
                                + self.c[b][cc][d] * self.c[d][a][e]
                                + self.c[cc][a][d] * self.c[d][b][e];
                        }
                        worst = worst.max(sum.norm());
                    }
                }
            }
        }
        worst
    }

    fn check_jacobi(&self) -> Result<(), Error> {
        let r = self.jacobi_residual();
        if r > STRUCTURE_TOL {
            return Err(Error::AlgebraCheck(format!(
                "Jacobi identity violated: residual {r:.3e}"
            )));
        }
        Ok(())
    }

    fn check_realization(&self) -> Result<(), Error> {
        let Some(rho) = &self.matrix_realization else {
            return Ok(());
        };
        if rho.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "matrix realization".into(),
                expected: self.dim,
                got: rho.len(),
            });
        }
        let k = rho[0].nrows();
        for m in rho {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::AlgebraCheck(
                    "matrix realization entries have inconsistent shapes".into(),
                ));
            }
        }
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut expected = DMatrix::<Complex64>::zeros(k, k);
                for c in 0..self.dim {
                    expected += rho[c].map(|x| x * self.c[a][b][c]);
                }
                let commutator = &rho[a] * &rho[b] - &rho[b] * &rho[a];
                let residual = (commutator - expected).map(|x| x.norm()).max();
                if residual > STRUCTURE_TOL {
                    return Err(Error::AlgebraCheck(format!(
                        "matrix realization bracket mismatch at (a,b) = ({},{}): residual {residual:.3e}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    /// Structure constant C^c_ab (0-based indices).
    pub fn c(&self, a: usize, b: usize, c: usize) -> Complex64 {
        self.c[a][b][c]
    }

    pub fn matrix_realization(&self) -> Option<&[DMatrix<Complex64>]> {
        self.matrix_realization.as_deref()
    }

    pub fn realization(&self) -> Result<&[DMatrix<Complex64>], Error> {
        self.matrix_realization.as_deref().ok_or(Error::MissingRealization)
    }

    /// Trace functional on value coefficients, available for the `gl(p)`
    /// elementary-matrix basis.
    pub fn trace_weights(&self) -> Result<&[Complex64], Error> {
        self.trace_weights.as_deref().ok_or(Error::MissingTrace)
    }

    /// Bracket of two coefficient vectors: `[ξ, η]^c = Σ_ab C^c_ab ξ^a η^b`.
    pub fn bracket_vec(&self, xi: &[Complex64], eta: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(xi.len(), self.dim);
        debug_assert_eq!(eta.len(), self.dim);
        let mut out = vec![czero(); self.dim];
        for a in 0..self.dim {
            if xi[a] == czero() {
                continue;
            }
            for b in 0..self.dim {
                for c in 0..self.dim {
                    out[c] += self.c[a][b][c] * xi[a] * eta[b];
                }
            }
        }
        out
    }

    /// Adjoint matrix of ξ acting on coefficient vectors:
    /// `(ad_ξ v)^c = Σ_a (ad_ξ)^c_a v^a` with `(ad_ξ)^c_a = Σ_d C^c_da ξ^d`.
    pub fn adjoint_matrix(&self, xi: &[Complex64]) -> Result<DMatrix<Complex64>, Error> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "adjoint coefficient vector".into(),
                expected: self.dim,
                got: xi.len(),
            });
        }
        let n = self.dim;
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for c in 0..n {
            for a in 0..n {
                let mut sum = czero();
                for d in 0..n {
                    sum += self.c[d][a][c] * xi[d];
                }
                m[(c, a)] = sum;
            }
        }
        Ok(m)
    }

    /// Adjoint matrix of the basis element E_a.
    pub fn adjoint_basis(&self, a: usize) -> DMatrix<Complex64> {
        let mut xi = vec![czero(); self.dim];
        xi[a] = Complex64::new(1.0, 0.0);
        self.adjoint_matrix(&xi).expect("basis vector has correct length")
    }

    /// Killing form `k_ab = Σ_{c,d} C^d_ac C^c_bd = tr(ad_{E_a} ad_{E_b})`.
    pub fn killing_form(&self) -> DMatrix<Complex64> {
        let n = self.dim;
        let mut k = DMatrix::<Complex64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut sum = czero();
                for c in 0..n {
                    for d in 0..n {
                        sum += self.c[a][c][d] * self.c[b][d][c];
                    }
                }
                k[(a, b)] = sum;
            }
        }
        // ad-invariance k·ad_ξ + ad_ξᵀ·k = 0 holds by construction; asserted
        // on the basis directions.
        for a in 0..n {
            let ad = self.adjoint_basis(a);
            let residual = (&k * &ad + ad.transpose() * &k).map(|x| x.norm()).max();
            debug_assert!(residual <= 1e-9, "Killing form lost ad-invariance");
        }
        k
    }

    /// True iff `tr(ad_{E_a}) = Σ_b C^b_ab = 0` for every a.
    pub fn is_unimodular(&self) -> bool {
        (0..self.dim).all(|a| {
            let tr: Complex64 = (0..self.dim).map(|b| self.c[a][b][b]).sum();
            tr.norm() <= STRUCTURE_TOL
        })
    }

    /// `tr(ad_{E_a})` for every a; the obstruction to unimodularity.
    pub fn adjoint_traces(&self) -> Vec<Complex64> {
        (0..self.dim)
            .map(|a| (0..self.dim).map(|b| self.c[a][b][b]).sum())
            .collect()
    }

    /// Semi-simplicity gate: |det k| above threshold.
    pub fn is_semisimple(&self) -> bool {
        self.killing_form().determinant().norm() > 1e-9
    }

    /// Inverse of the Gram matrix `⟨E_a, E_b⟩ = tr(E_a† E_b)` of the matrix
    /// realization, for expanding realization-valued matrices in the basis.
    pub fn realization_gram_inverse(&self) -> Result<DMatrix<Complex64>, Error> {
        let rho = self.realization()?;
        let n = self.dim;
        let mut gram = DMatrix::<Complex64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                gram[(a, b)] = (rho[a].adjoint() * &rho[b]).trace();
            }
        }
        gram.try_inverse().ok_or_else(|| {
            Error::AlgebraCheck("realization Gram matrix is singular".into())
        })
    }

    /// Expands a k×k matrix in the realization basis. Returns the coefficient
    /// vector and the Frobenius norm of the part outside the span.
    pub fn expand_in_realization(
        &self,
        x: &DMatrix<Complex64>,
    ) -> Result<(Vec<Complex64>, f64), Error> {
        let rho = self.realization()?;
        let gram_inv = self.realization_gram_inverse()?;
        let n = self.dim;
        let pairings = DMatrix::from_fn(n, 1, |a, _| (rho[a].adjoint() * x).trace());
        let coeffs = gram_inv * pairings;
        let mut recon = DMatrix::<Complex64>::zeros(x.nrows(), x.ncols());
        for a in 0..n {
            recon += rho[a].map(|e| e * coeffs[(a, 0)]);
        }
        let residual = (x - recon).map(|e| e.norm_sqr()).sum().sqrt();
        Ok((coeffs.iter().copied().collect(), residual))
    }
}

/// Constructs one of the built-in algebras.
///
/// Names: `su2`, `abelian(n)`, `heisenberg3`, `affine2`, `gl(p)`, `sl(p)`
/// with p ≥ 2.
pub fn preset(name: &str) -> Result<LieAlgebra, Error> {
    let trimmed = name.trim();
    if trimmed == "su2" {
        return su2();
    }
    if trimmed == "heisenberg3" {
        return heisenberg3();
    }
    if trimmed == "affine2" {
        return affine2();
    }
    if let Some(arg) = parse_arg(trimmed, "abelian") {
        if arg >= 1 {
            return abelian(arg);
        }
    }
    if let Some(p) = parse_arg(trimmed, "gl") {
        if p >= 2 {
            return gl(p);
        }
    }
    if let Some(p) = parse_arg(trimmed, "sl") {
        if p >= 2 {
            return sl(p);
        }
    }
    Err(Error::UnknownPreset(trimmed.to_string()))
}

fn parse_arg(name: &str, head: &str) -> Option<usize> {
    let rest = name.strip_prefix(head)?;
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    inner.trim().parse().ok()
}

fn zero_c(n: usize) -> Vec<Vec<Vec<Complex64>>> {
    vec![vec![vec![czero(); n]; n]; n]
}

/// Adds `C^c_ab = v` together with the antisymmetric partner `C^c_ba = −v`.
fn set_c(c: &mut [Vec<Vec<Complex64>>], a: usize, b: usize, target: usize, v: f64) {
    c[a][b][target] += Complex64::new(v, 0.0);
    c[b][a][target] -= Complex64::new(v, 0.0);
}

fn su2() -> Result<LieAlgebra, Error> {
    let mut c = zero_c(3);
    set_c(&mut c, 0, 1, 2, 1.0);
    set_c(&mut c, 1, 2, 0, 1.0);
    set_c(&mut c, 2, 0, 1, 1.0);
    // Anti-hermitian realization E_a = -(i/2) σ_a.
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let sigma = [
        DMatrix::from_row_slice(2, 2, &[czero(), 1.0.into(), 1.0.into(), czero()]),
        DMatrix::from_row_slice(2, 2, &[czero(), -i, i, czero()]),
        DMatrix::from_row_slice(2, 2, &[1.0.into(), czero(), czero(), Complex64::new(-1.0, 0.0)]),
    ];
    let rho: Vec<_> = sigma.iter().map(|s| s.map(|x| -i * half * x)).collect();
    LieAlgebra::new(
        "su2",
        c,
        vec!["E1".into(), "E2".into(), "E3".into()],
        Some(rho),
    )
}

fn abelian(n: usize) -> Result<LieAlgebra, Error> {
    LieAlgebra::new(
        format!("abelian({n})"),
        zero_c(n),
        (1..=n).map(|a| format!("E{a}")).collect(),
        None,
    )
}

fn elementary(k: usize, i: usize, j: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(k, k);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

fn heisenberg3() -> Result<LieAlgebra, Error> {
    // [E1, E2] = E3, E3 central; strictly upper-triangular 3×3 realization.
    let mut c = zero_c(3);
    set_c(&mut c, 0, 1, 2, 1.0);
    let rho = vec![elementary(3, 0, 1), elementary(3, 1, 2), elementary(3, 0, 2)];
    LieAlgebra::new(
        "heisenberg3",
        c,
        vec!["E1".into(), "E2".into(), "E3".into()],
        Some(rho),
    )
}

fn affine2() -> Result<LieAlgebra, Error> {
    // [E1, E2] = E1; non-unimodular (tr ad_{E2} = −1).
    let mut c = zero_c(2);
    set_c(&mut c, 0, 1, 0, 1.0);
    let mut e2 = DMatrix::<Complex64>::zeros(2, 2);
    e2[(0, 0)] = Complex64::new(-1.0, 0.0);
    let rho = vec![elementary(2, 0, 1), e2];
    LieAlgebra::new("affine2", c, vec!["E1".into(), "E2".into()], Some(rho))
}

fn gl(p: usize) -> Result<LieAlgebra, Error> {
    // Elementary-matrix basis E_(ij), flat index a = i·p + j (0-based);
    // [E_ij, E_kl] = δ_jk E_il − δ_li E_kj.
    let n = p * p;
    let mut c = zero_c(n);
    let idx = |i: usize, j: usize| i * p + j;
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                for l in 0..p {
                    let a = idx(i, j);
                    let b = idx(k, l);
                    if j == k {
                        c[a][b][idx(i, l)] += Complex64::new(1.0, 0.0);
                    }
                    if l == i {
                        c[a][b][idx(k, j)] -= Complex64::new(1.0, 0.0);
                    }
                }
            }
        }
    }
    let mut rho = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut trace_weights = vec![czero(); n];
    for i in 0..p {
        for j in 0..p {
            rho.push(elementary(p, i, j));
            labels.push(format!("E{}{}", i + 1, j + 1));
            if i == j {
                trace_weights[idx(i, j)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    let mut algebra = LieAlgebra::new(format!("gl({p})"), c, labels, Some(rho))?;
    algebra.trace_weights = Some(trace_weights);
    Ok(algebra)
}

fn sl(p: usize) -> Result<LieAlgebra, Error> {
    // Basis: off-diagonal elementary matrices plus H_i = E_ii − E_{i+1,i+1};
    // structure constants recovered from the realization by Gram expansion.
    let mut rho = Vec::new();
    let mut labels = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                rho.push(elementary(p, i, j));
                labels.push(format!("E{}{}", i + 1, j + 1));
            }
        }
    }
    for i in 0..p - 1 {
        rho.push(elementary(p, i, i) - elementary(p, i + 1, i + 1));
        labels.push(format!("H{}", i + 1));
    }
    let n = rho.len();
    // Gram expansion of each bracket in the chosen basis.
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            gram[(a, b)] = (rho[a].adjoint() * &rho[b]).trace();
        }
    }
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::AlgebraCheck("sl basis Gram matrix singular".into()))?;
    let mut c = zero_c(n);
    for a in 0..n {
        for b in 0..n {
            let br = &rho[a] * &rho[b] - &rho[b] * &rho[a];
            let pairings = DMatrix::from_fn(n, 1, |k, _| (rho[k].adjoint() * &br).trace());
            let coeffs = &gram_inv * pairings;
            for (k, coeff) in coeffs.iter().enumerate() {
                if coeff.norm() > 1e-12 {
                    c[a][b][k] = *coeff;
                }
            }
        }
    }
    LieAlgebra::new(format!("sl({p})"), c, labels, Some(rho))
}
