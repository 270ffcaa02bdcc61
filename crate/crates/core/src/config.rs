//! Configuration schemas (JSON) and the builders that turn validated
//! sections into engine objects. All indices in configuration files are
//! 1-based; complex scalars are written as `[re, im]` pairs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::forms::{BigradedForm, Representation, ValueKind};
use crate::gauge::{GeneralizedConnection, MatterField, PairingKind};
use crate::gluing::{Atlas, TransitionData};
use crate::liealg::{preset, LieAlgebra};
use crate::metric::{InnerMetric, MetricTriple};
use crate::poly::{ChartBox, PolyMatrix, Polynomial};

/// A complex scalar in configuration files: `[re, im]`.
pub type ComplexPair = [f64; 2];

fn to_c(v: ComplexPair) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn to_cmatrix(rows: &[Vec<ComplexPair>], what: &str) -> Result<DMatrix<Complex64>, Error> {
    let nr = rows.len();
    if nr == 0 {
        return Err(Error::Config(format!("{what}: empty matrix")));
    }
    let nc = rows[0].len();
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Config(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| to_c(rows[i][j])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub algebra: AlgebraConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<AtlasConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matter: Option<MatterConfig>,
    #[serde(default)]
    pub options: OptionsConfig,
}

/// One structure-constant assignment C^c_{ab} = value (1-based indices);
/// the antisymmetric counterpart is filled in automatically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntry {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub value: ComplexPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<StructureEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<Vec<Vec<Vec<ComplexPair>>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxConfig {
    pub fn build(&self, what: &str) -> Result<ChartBox, Error> {
        ChartBox::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| Error::Config(format!("{what}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    pub i: usize,
    pub j: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub i: usize,
    pub j: usize,
    pub g: Vec<Vec<Polynomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<FormConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasConfig {
    pub charts: Vec<BoxConfig>,
    #[serde(default)]
    pub overlaps: Vec<OverlapConfig>,
    #[serde(default)]
    pub transitions: Vec<TransitionConfig>,
}

/// Inner metric: either the literal string "killing" or a constant matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InnerMetricConfig {
    Named(String),
    Matrix(Vec<Vec<ComplexPair>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub g: Vec<Vec<f64>>,
    pub h: InnerMetricConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_dot: Option<FormConfig>,
}

/// One stored term of a form file: strictly ascending 1-based multi-indices
/// and the coefficient vector over the value index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTermConfig {
    #[serde(default)]
    pub dx: Vec<usize>,
    #[serde(default)]
    pub theta: Vec<usize>,
    pub value: Vec<Polynomial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    pub value_kind: String,
    pub terms: Vec<FormTermConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeElementConfig {
    pub u: Vec<Vec<Polynomial>>,
    pub u_inv: Vec<Vec<Polynomial>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    pub a_hat: FormConfig,
    pub tau: Vec<Vec<Polynomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_element: Option<GaugeElementConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatterConfig {
    pub phi: Vec<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<Vec<Vec<Vec<ComplexPair>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_e: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<String>,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_density() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_density")]
    pub lattice_density: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig { tolerance: default_tolerance(), lattice_density: default_density(), seed: 0 }
    }
}

/// Reads and structurally validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ProjectConfig, Error> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ProjectConfig, Error> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("schema error: {e}")))
}

/// The canonical serialized form of a configuration.
pub fn canonical_config(config: &ProjectConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serialization cannot fail")
}

impl AlgebraConfig {
    pub fn build(&self) -> Result<Arc<LieAlgebra>, Error> {
        if let Some(name) = &self.preset {
            if self.dim.is_some() || self.structure.is_some() {
                return Err(Error::Config(
                    "algebra: give either a preset or explicit structure constants, not both"
                        .into(),
                ));
            }
            return Ok(Arc::new(preset(name)?));
        }
        let dim = self
            .dim
            .ok_or_else(|| Error::Config("algebra: missing dim for an explicit algebra".into()))?;
        let entries = self
            .structure
            .as_ref()
            .ok_or_else(|| Error::Config("algebra: missing structure constants".into()))?;
        let mut c = vec![vec![vec![Complex64::new(0.0, 0.0); dim]; dim]; dim];
        let mut seen: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
        for e in entries {
            for (label, idx) in [("a", e.a), ("b", e.b), ("c", e.c)] {
                if idx == 0 || idx > dim {
                    return Err(Error::Config(format!(
                        "algebra.structure: index {label} = {idx} out of range 1..={dim}"
                    )));
                }
            }
            let (a, b, cc) = (e.a - 1, e.b - 1, e.c - 1);
            let v = to_c(e.value);
            if let Some(prev) = seen.get(&(a, b, cc)) {
                if (prev - v).norm() > 0.0 {
                    return Err(Error::Config(format!(
                        "algebra.structure: conflicting values at ({},{},{})",
                        e.a, e.b, e.c
                    )));
                }
            }
            seen.insert((a, b, cc), v);
            seen.insert((b, a, cc), -v);
            c[a][b][cc] = v;
            c[b][a][cc] = -v;
        }
        let realization = match &self.realization {
            Some(mats) => {
                if mats.len() != dim {
                    return Err(Error::Config(format!(
                        "algebra.realization: expected {dim} matrices, got {}",
                        mats.len()
                    )));
                }
                Some(
                    mats.iter()
                        .map(|m| to_cmatrix(m, "algebra.realization"))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            None => None,
        };
        let name = self.name.clone().unwrap_or_else(|| "custom".into());
        let labels = (1..=dim).map(|k| format!("E{k}")).collect();
        Ok(Arc::new(LieAlgebra::new(name, c, labels, realization)?))
    }
}

impl FormConfig {
    pub fn build(&self, m: usize, algebra: &Arc<LieAlgebra>) -> Result<BigradedForm, Error> {
        let value = match self.value_kind.as_str() {
            "scalar" => ValueKind::Scalar,
            "adjoint" => ValueKind::Adjoint,
            other => {
                return Err(Error::Config(format!(
                    "form.value_kind: expected \"scalar\" or \"adjoint\", got \"{other}\""
                )))
            }
        };
        let n = algebra.dim();
        let value_dim = value.dim(algebra);
        let mut form = BigradedForm::zero(m, algebra.clone(), value);
        for (t_idx, term) in self.terms.iter().enumerate() {
            let dx = convert_multi_index(&term.dx, m, &format!("form.terms[{t_idx}].dx"))?;
            let theta =
                convert_multi_index(&term.theta, n, &format!("form.terms[{t_idx}].theta"))?;
            if term.value.len() != value_dim {
                return Err(Error::Config(format!(
                    "form.terms[{t_idx}].value: expected {value_dim} coefficients, got {}",
                    term.value.len()
                )));
            }
            for (k, p) in term.value.iter().enumerate() {
                if p.num_vars() != m {
                    return Err(Error::Config(format!(
                        "form.terms[{t_idx}].value[{k}]: polynomial in {} variables, chart has {m}",
                        p.num_vars()
                    )));
                }
                if !p.is_zero() {
                    form.add_term(&dx, &theta, k, p);
                }
            }
        }
        Ok(form)
    }
}

fn convert_multi_index(raw: &[usize], bound: usize, what: &str) -> Result<Vec<u8>, Error> {
    let mut out = Vec::with_capacity(raw.len());
    for (pos, &idx) in raw.iter().enumerate() {
        if idx == 0 || idx > bound {
            return Err(Error::Config(format!("{what}: index {idx} out of range 1..={bound}")));
        }
        if pos > 0 && raw[pos - 1] >= idx {
            return Err(Error::Config(format!("{what}: indices must be strictly ascending")));
        }
        out.push((idx - 1) as u8);
    }
    Ok(out)
}

fn check_poly_matrix(
    mat: &[Vec<Polynomial>],
    size: usize,
    m: usize,
    what: &str,
) -> Result<PolyMatrix, Error> {
    if mat.len() != size || mat.iter().any(|row| row.len() != size) {
        return Err(Error::Config(format!("{what}: expected a {size}x{size} matrix")));
    }
    for row in mat {
        for p in row {
            if p.num_vars() != m {
                return Err(Error::Config(format!(
                    "{what}: polynomial in {} variables, chart has {m}",
                    p.num_vars()
                )));
            }
        }
    }
    Ok(mat.to_vec())
}

impl AtlasConfig {
    pub fn build(&self, algebra: &Arc<LieAlgebra>) -> Result<TransitionData, Error> {
        if self.charts.is_empty() {
            return Err(Error::Config("atlas.charts: at least one chart is required".into()));
        }
        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(k, b)| b.build(&format!("atlas.charts[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let m = charts[0].dim();
        if charts.iter().any(|c| c.dim() != m) {
            return Err(Error::Config("atlas.charts: mixed dimensions".into()));
        }
        let count = charts.len();
        let mut atlas = Atlas::new(algebra.clone(), charts);
        for (k, ov) in self.overlaps.iter().enumerate() {
            for idx in [ov.i, ov.j] {
                if idx == 0 || idx > count {
                    return Err(Error::Config(format!(
                        "atlas.overlaps[{k}]: chart index {idx} out of range 1..={count} in overlap ({},{})",
                        ov.i, ov.j
                    )));
                }
            }
            let region = ChartBox::new(ov.lower.clone(), ov.upper.clone())
                .map_err(|e| Error::Config(format!("atlas.overlaps[{k}]: {e}")))?;
            atlas
                .add_overlap(ov.i - 1, ov.j - 1, region)
                .map_err(|e| Error::Config(format!("atlas.overlaps[{k}]: {e}")))?;
        }
        if self.transitions.is_empty() {
            return Ok(TransitionData::identity(atlas));
        }
        let n = algebra.dim();
        let mut data = TransitionData::new(atlas);
        for (k, tr) in self.transitions.iter().enumerate() {
            for idx in [tr.i, tr.j] {
                if idx == 0 || idx > count {
                    return Err(Error::Config(format!(
                        "atlas.transitions[{k}]: chart index {idx} out of range 1..={count}"
                    )));
                }
            }
            let g = check_poly_matrix(&tr.g, n, m, &format!("atlas.transitions[{k}].g"))?;
            let chi = match &tr.chi {
                Some(f) => {
                    let chi = f.build(m, algebra)?;
                    if *chi.value() != ValueKind::Adjoint {
                        return Err(Error::Config(format!(
                            "atlas.transitions[{k}].chi: must be adjoint-valued"
                        )));
                    }
                    chi
                }
                None => BigradedForm::zero(m, algebra.clone(), ValueKind::Adjoint),
            };
            data.set_transition(tr.i - 1, tr.j - 1, g, chi)
                .map_err(|e| Error::Config(format!("atlas.transitions[{k}]: {e}")))?;
        }
        Ok(data)
    }
}

impl MetricConfig {
    pub fn build(&self, algebra: &Arc<LieAlgebra>) -> Result<MetricTriple, Error> {
        let m = self.g.len();
        if self.g.iter().any(|row| row.len() != m) {
            return Err(Error::Config("metric.g: must be square".into()));
        }
        let g = DMatrix::from_fn(m, m, |i, j| Complex64::new(self.g[i][j], 0.0));
        let h = match &self.h {
            InnerMetricConfig::Named(name) if name == "killing" => InnerMetric::killing(algebra)?,
            InnerMetricConfig::Named(other) => {
                return Err(Error::Config(format!(
                    "metric.h: unknown name \"{other}\" (expected \"killing\" or a matrix)"
                )))
            }
            InnerMetricConfig::Matrix(rows) => {
                InnerMetric::new(to_cmatrix(rows, "metric.h")?)?
            }
        };
        let a_dot = match &self.a_dot {
            Some(f) => {
                let form = f.build(m, algebra)?;
                if *form.value() != ValueKind::Adjoint {
                    return Err(Error::Config("metric.a_dot: must be adjoint-valued".into()));
                }
                form
            }
            None => crate::forms::zero_background(m, algebra.clone()),
        };
        MetricTriple::new(g, h, a_dot)
    }
}

impl ConnectionConfig {
    pub fn build(
        &self,
        m: usize,
        algebra: &Arc<LieAlgebra>,
    ) -> Result<GeneralizedConnection, Error> {
        let a_hat = self.a_hat.build(m, algebra)?;
        if *a_hat.value() != ValueKind::Adjoint {
            return Err(Error::Config("connection.a_hat: must be adjoint-valued".into()));
        }
        let tau = check_poly_matrix(&self.tau, algebra.dim(), m, "connection.tau")?;
        GeneralizedConnection::new(a_hat, tau)
    }

    pub fn build_gauge_element(&self, m: usize) -> Result<Option<(PolyMatrix, PolyMatrix)>, Error> {
        match &self.gauge_element {
            None => Ok(None),
            Some(ge) => {
                if ge.u.is_empty() || ge.u.len() != ge.u_inv.len() {
                    return Err(Error::Config(
                        "connection.gauge_element: u and u_inv must be square matrices of the same size"
                            .into(),
                    ));
                }
                let k = ge.u.len();
                let u = check_poly_matrix(&ge.u, k, m, "connection.gauge_element.u")?;
                let u_inv = check_poly_matrix(&ge.u_inv, k, m, "connection.gauge_element.u_inv")?;
                Ok(Some((u, u_inv)))
            }
        }
    }
}

impl MatterConfig {
    pub fn build(&self, m: usize, algebra: &Arc<LieAlgebra>) -> Result<MatterField, Error> {
        let rep = match &self.rep {
            Some(mats) => {
                let matrices = mats
                    .iter()
                    .map(|mat| to_cmatrix(mat, "matter.rep"))
                    .collect::<Result<Vec<_>, _>>()?;
                Arc::new(Representation::new(algebra, matrices)?)
            }
            None => Arc::new(Representation::from_realization(algebra)?),
        };
        for (k, p) in self.phi.iter().enumerate() {
            if p.num_vars() != m {
                return Err(Error::Config(format!(
                    "matter.phi[{k}]: polynomial in {} variables, chart has {m}",
                    p.num_vars()
                )));
            }
        }
        let h_e = match &self.h_e {
            Some(rows) => to_cmatrix(rows, "matter.h_e")?,
            None => DMatrix::identity(rep.dim, rep.dim),
        };
        let pairing = match self.pairing.as_deref() {
            None | Some("sesquilinear") => PairingKind::Sesquilinear,
            Some("bilinear") => PairingKind::Bilinear,
            Some(other) => {
                return Err(Error::Config(format!(
                    "matter.pairing: expected \"sesquilinear\" or \"bilinear\", got \"{other}\""
                )))
            }
        };
        MatterField::new(self.phi.clone(), rep, h_e, pairing)
    }
}

impl ProjectConfig {
    /// The spatial dimension implied by the configuration, from the metric
    /// or the atlas.
    pub fn spatial_dim(&self) -> Result<usize, Error> {
        if let Some(metric) = &self.metric {
            return Ok(metric.g.len());
        }
        if let Some(atlas) = &self.atlas {
            if let Some(first) = atlas.charts.first() {
                return Ok(first.lower.len());
            }
        }
        Err(Error::Config(
            "cannot infer the spatial dimension: provide a metric or atlas section".into(),
        ))
    }

    pub fn require_metric(&self) -> Result<&MetricConfig, Error> {
        self.metric
            .as_ref()
            .ok_or_else(|| Error::Config("missing section: metric".into()))
    }

    pub fn require_atlas(&self) -> Result<&AtlasConfig, Error> {
        self.atlas
            .as_ref()
            .ok_or_else(|| Error::Config("missing section: atlas".into()))
    }

    pub fn require_connection(&self) -> Result<&ConnectionConfig, Error> {
        self.connection
            .as_ref()
            .ok_or_else(|| Error::Config("missing section: connection".into()))
    }
}

/// Serializes a form back into the file schema (1-based ascending indices).
pub fn form_to_config(form: &BigradedForm) -> Result<FormConfig, Error> {
    let value_kind = match form.value() {
        ValueKind::Scalar => "scalar",
        ValueKind::Adjoint => "adjoint",
        ValueKind::Rep(_) => {
            return Err(Error::Config(
                "representation-valued forms have no file schema".into(),
            ))
        }
    }
    .to_string();
    let mut terms = Vec::new();
    for ((dx, theta), vals) in form.components() {
        terms.push(FormTermConfig {
            dx: dx.iter().map(|&i| i as usize + 1).collect(),
            theta: theta.iter().map(|&i| i as usize + 1).collect(),
            value: vals.clone(),
        });
    }
    Ok(FormConfig { value_kind, terms })
}
