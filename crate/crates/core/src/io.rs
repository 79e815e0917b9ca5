//! JSON formats shared by the command-line driver.
//!
//! Trees are `{"vertices":[..],"edges":[[u,v],..]}`; labeled trees add
//! `"n"` and `"labels":{"1":v,..}`. Points on the sphere are written as
//! `[re,im]` or `"inf"`, and may be read as homogeneous pairs
//! `[[re,im],[re,im]]` as well.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::mobius::{Mobius, SpherePoint, C64};
use crate::moduli::{CrossRatioCoordinates, ModuliError, SpecialPointConfig};
use crate::morphism::{MorphismError, TreeMorphism};
use crate::order::SpecialPoint;
use crate::tree::{LabelError, LabeledTree, Tree, TreeError, Vertex};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid tree: {0}")]
    Tree(#[from] TreeError),
    #[error("invalid labeling: {0}")]
    Label(#[from] LabelError),
    #[error("invalid morphism: {0}")]
    Morphism(#[from] MorphismError),
    #[error("invalid configuration: {0}")]
    Moduli(#[from] ModuliError),
    #[error("bad key {0:?}, expected an integer")]
    BadKey(String),
    #[error("bad point {0}")]
    BadPoint(String),
    #[error("bad matrix: {0}")]
    BadMatrix(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeJson {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(Vertex, Vertex)>,
}

impl TreeJson {
    pub fn from_tree(t: &Tree) -> Self {
        TreeJson { vertices: t.vertices().to_vec(), edges: t.edges().to_vec() }
    }

    pub fn to_tree(&self) -> Result<Tree, IoError> {
        Ok(Tree::new(self.vertices.iter().copied(), self.edges.iter().copied())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledTreeJson {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(Vertex, Vertex)>,
    pub n: usize,
    pub labels: BTreeMap<String, Vertex>,
}

impl LabeledTreeJson {
    pub fn from_labeled(lt: &LabeledTree) -> Self {
        let t = lt.tree();
        let labels = (1..=lt.n()).map(|i| (i.to_string(), lt.label(i))).collect();
        LabeledTreeJson { vertices: t.vertices().to_vec(), edges: t.edges().to_vec(), n: lt.n(), labels }
    }

    pub fn to_labeled(&self) -> Result<LabeledTree, IoError> {
        let tree = Tree::new(self.vertices.iter().copied(), self.edges.iter().copied())?;
        let map = self
            .labels
            .iter()
            .map(|(k, &v)| Ok((parse_key(k)?, v)))
            .collect::<Result<BTreeMap<usize, Vertex>, IoError>>()?;
        Ok(LabeledTree::from_map(tree, self.n, &map)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismJson {
    pub domain: TreeJson,
    pub codomain: TreeJson,
    pub map: BTreeMap<String, Vertex>,
}

impl MorphismJson {
    pub fn to_morphism(&self) -> Result<TreeMorphism, IoError> {
        let map = self
            .map
            .iter()
            .map(|(k, &v)| Ok((parse_key(k)?, v)))
            .collect::<Result<BTreeMap<Vertex, Vertex>, IoError>>()?;
        Ok(TreeMorphism::new(self.domain.to_tree()?, self.codomain.to_tree()?, map)?)
    }
}

fn parse_key(k: &str) -> Result<usize, IoError> {
    k.trim().parse().map_err(|_| IoError::BadKey(k.to_string()))
}

fn complex(v: &Value) -> Option<C64> {
    match v.as_array()?.as_slice() {
        [re, im] => Some(C64::new(re.as_f64()?, im.as_f64()?)),
        _ => None,
    }
}

/// Reads `"inf"`, `[re,im]` or a homogeneous pair `[[re,im],[re,im]]`.
pub fn point_from_json(v: &Value) -> Result<SpherePoint, IoError> {
    let bad = || IoError::BadPoint(v.to_string());
    if v.as_str() == Some("inf") {
        return Ok(SpherePoint::infinity());
    }
    if let Some(z) = complex(v) {
        return if z.re.is_finite() && z.im.is_finite() { Ok(SpherePoint::finite(z)) } else { Err(bad()) };
    }
    match v.as_array().map(Vec::as_slice) {
        Some([z, w]) => {
            let (z, w) = (complex(z).ok_or_else(bad)?, complex(w).ok_or_else(bad)?);
            let n = z.norm_sqr() + w.norm_sqr();
            if n > 0.0 && n.is_finite() {
                Ok(SpherePoint::new(z, w))
            } else {
                Err(bad())
            }
        }
        _ => Err(bad()),
    }
}

pub fn point_to_json(p: &SpherePoint) -> Value {
    match p.affine() {
        Some(z) => json!([z.re, z.im]),
        None => json!("inf"),
    }
}

/// Special-point configuration: a labeled tree plus, per vertex, the
/// points in special-point order, optionally tagged with their roles
/// (`{"double":u}` or `{"marked":i}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigJson {
    #[serde(flatten)]
    pub tree: LabeledTreeJson,
    pub points: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub roles: Option<BTreeMap<String, Vec<SpecialPoint>>>,
}

impl ConfigJson {
    pub fn from_config(config: &SpecialPointConfig) -> Self {
        let lt = config.labeled_tree();
        let key = |v: &Vertex| v.to_string();
        ConfigJson {
            tree: LabeledTreeJson::from_labeled(lt),
            points: config.all_points().iter().map(|(v, ps)| (key(v), ps.iter().map(point_to_json).collect())).collect(),
            roles: Some(config.all_points().keys().map(|v| (key(v), config.roles(*v).to_vec())).collect()),
        }
    }

    pub fn to_config(&self) -> Result<SpecialPointConfig, IoError> {
        let lt = self.tree.to_labeled()?;
        let mut points = BTreeMap::new();
        for (k, ps) in &self.points {
            let ps = ps.iter().map(point_from_json).collect::<Result<Vec<_>, _>>()?;
            points.insert(parse_key(k)?, ps);
        }
        let Some(roles) = &self.roles else {
            return Ok(SpecialPointConfig::new(lt, points)?);
        };
        let mut tagged = BTreeMap::new();
        for (k, rs) in roles {
            let v = parse_key(k)?;
            let ps = points.remove(&v).ok_or(ModuliError::MissingVertex(v))?;
            if ps.len() != rs.len() {
                return Err(ModuliError::WrongPointCount(v).into());
            }
            tagged.insert(v, rs.iter().copied().zip(ps).collect());
        }
        Ok(SpecialPointConfig::with_roles(lt, tagged)?)
    }
}

/// `{"w":{v:{i:[re,im]|"inf"}}}` with `i` counted from 4.
pub fn chart_to_json(coords: &CrossRatioCoordinates) -> Value {
    let w: serde_json::Map<String, Value> = coords
        .values
        .iter()
        .map(|(v, ws)| {
            let per: serde_json::Map<String, Value> =
                ws.iter().enumerate().map(|(i, p)| ((i + 4).to_string(), point_to_json(p))).collect();
            (v.to_string(), Value::Object(per))
        })
        .collect();
    json!({ "schema_version": SCHEMA_VERSION, "w": w })
}

/// Parses `a,b,c,d` where each entry is a real or complex literal such as
/// `2`, `-1.5`, `3i`, `1+2i` or `0.5-i`.
pub fn parse_matrix(s: &str) -> Result<Mobius, IoError> {
    let entries = s.split(',').map(parse_complex).collect::<Result<Vec<_>, _>>()?;
    let [a, b, c, d] = entries[..] else {
        return Err(IoError::BadMatrix(format!("expected 4 entries, got {}", entries.len())));
    };
    Mobius::new(a, b, c, d).map_err(|e| IoError::BadMatrix(e.to_string()))
}

fn parse_complex(s: &str) -> Result<C64, IoError> {
    let bad = || IoError::BadMatrix(format!("cannot parse {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(C64::from).map_err(|_| bad());
    };
    // Split at the last sign that is not an exponent sign or the leading one.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(C64::new(re.parse::<f64>().map_err(|_| bad())?, im))
}
