//! Tree models: offspring law, per-arity displacement law, exact weights.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::Excursion;
use crate::num::{fmt_rational, int, parse_rational, rat, Rational};
use crate::tree::LabelledPlaneTree;

/// Offspring law ξ.
#[derive(Debug, Clone, PartialEq)]
pub enum Offspring {
    /// ξ(k) = table[k], zero beyond the table.
    Table(Vec<Rational>),
    /// ξ(k) = 2^(-k-1).
    GeometricHalf,
    /// ξ(k) = p (1-p)^k.
    Geometric(Rational),
}

/// Displacement family η^(d).
#[derive(Debug, Clone, PartialEq)]
pub enum Displacement {
    IidPm1,
    IidPm01,
    /// arity → list of (increment vector, probability).
    PerArity(BTreeMap<usize, Vec<(Vec<i8>, Rational)>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Builtin {
    GeomPm1,
    GeomPm01,
    IncompleteBinary,
    CompleteBinary,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::GeomPm1,
        Builtin::GeomPm01,
        Builtin::IncompleteBinary,
        Builtin::CompleteBinary,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Builtin::GeomPm1 => "geom-pm1",
            Builtin::GeomPm01 => "geom-pm01",
            Builtin::IncompleteBinary => "incomplete-binary",
            Builtin::CompleteBinary => "complete-binary",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown builtin model {id:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub offspring: Offspring,
    pub displacement: Displacement,
    /// Set for the four named models.
    pub builtin: Option<Builtin>,
}

pub fn builtin_model(id: &str) -> Result<TreeModel> {
    Ok(TreeModel::builtin(Builtin::from_id(id)?))
}

impl TreeModel {
    pub fn builtin(b: Builtin) -> Self {
        let (offspring, displacement) = match b {
            Builtin::GeomPm1 => (Offspring::GeometricHalf, Displacement::IidPm1),
            Builtin::GeomPm01 => (Offspring::GeometricHalf, Displacement::IidPm01),
            Builtin::IncompleteBinary => {
                let mut eta = BTreeMap::new();
                eta.insert(1, vec![(vec![-1], rat(1, 2)), (vec![1], rat(1, 2))]);
                eta.insert(2, vec![(vec![-1, 1], int(1))]);
                (
                    Offspring::Table(vec![rat(1, 4), rat(1, 2), rat(1, 4)]),
                    Displacement::PerArity(eta),
                )
            }
            Builtin::CompleteBinary => {
                let mut eta = BTreeMap::new();
                eta.insert(2, vec![(vec![-1, 1], int(1))]);
                (
                    Offspring::Table(vec![rat(1, 2), int(0), rat(1, 2)]),
                    Displacement::PerArity(eta),
                )
            }
        };
        TreeModel { offspring, displacement, builtin: Some(b) }
    }

    /// Builds and validates a custom model.
    pub fn new(offspring: Offspring, displacement: Displacement) -> Result<Self> {
        let m = TreeModel { offspring, displacement, builtin: None };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self.builtin {
            Some(b) => b.id().to_string(),
            None => "custom".to_string(),
        }
    }

    pub fn xi(&self, k: usize) -> Rational {
        match &self.offspring {
            Offspring::Table(t) => t.get(k).cloned().unwrap_or_else(Rational::zero),
            Offspring::GeometricHalf => rat(1, 2) * geometric_tail(&rat(1, 2), k),
            Offspring::Geometric(p) => p * geometric_tail(p, k),
        }
    }

    /// Largest arity with positive probability, `None` for unbounded support.
    pub fn max_arity(&self) -> Option<usize> {
        match &self.offspring {
            Offspring::Table(t) => t.iter().rposition(|x| x.is_positive()),
            _ => None,
        }
    }

    /// Arities `d <= bound` with ξ(d) > 0.
    pub fn arities_up_to(&self, bound: usize) -> Vec<usize> {
        let top = self.max_arity().map_or(bound, |m| m.min(bound));
        (0..=top).filter(|&d| self.xi(d).is_positive()).collect()
    }

    pub fn displacement_prob(&self, d: usize, v: &[i8]) -> Result<Rational> {
        if v.len() != d {
            return Err(Error::Domain(format!("vector of length {} for arity {d}", v.len())));
        }
        if let Some(x) = v.iter().find(|x| !(-1..=1).contains(*x)) {
            return Err(Error::Domain(format!("increment {x} outside {{-1,0,1}}")));
        }
        if d == 0 {
            return Ok(Rational::one());
        }
        Ok(match &self.displacement {
            Displacement::IidPm1 => {
                if v.contains(&0) {
                    Rational::zero()
                } else {
                    rat(1, 2).pow(d as i32)
                }
            }
            Displacement::IidPm01 => rat(1, 3).pow(d as i32),
            Displacement::PerArity(map) => map
                .get(&d)
                .and_then(|entries| entries.iter().find(|(w, _)| w.as_slice() == v))
                .map(|(_, p)| p.clone())
                .unwrap_or_else(Rational::zero),
        })
    }

    /// Increment vectors of arity `d` with positive probability, in lexicographic order.
    pub fn displacement_support(&self, d: usize) -> Vec<(Vec<i8>, Rational)> {
        if d == 0 {
            return vec![(vec![], Rational::one())];
        }
        match &self.displacement {
            Displacement::IidPm1 => all_vectors(d, &[-1, 1])
                .into_iter()
                .map(|v| (v, rat(1, 2).pow(d as i32)))
                .collect(),
            Displacement::IidPm01 => all_vectors(d, &[-1, 0, 1])
                .into_iter()
                .map(|v| (v, rat(1, 3).pow(d as i32)))
                .collect(),
            Displacement::PerArity(map) => {
                let mut out: Vec<_> = map
                    .get(&d)
                    .map(|e| e.iter().filter(|(_, p)| p.is_positive()).cloned().collect())
                    .unwrap_or_default();
                out.sort();
                out
            }
        }
    }

    /// η^(d) is invariant under the mirror image of the plane: negate every entry and
    /// reverse the order.
    pub fn symmetric_displacements(&self) -> bool {
        match &self.displacement {
            Displacement::IidPm1 | Displacement::IidPm01 => true,
            Displacement::PerArity(map) => map.iter().all(|(&d, entries)| {
                entries.iter().all(|(v, p)| {
                    let neg: Vec<i8> = v.iter().rev().map(|x| -x).collect();
                    self.displacement_prob(d, &neg).map_or(false, |q| &q == p)
                })
            }),
        }
    }

    /// The model of −T: every increment negated, plane order kept.
    pub fn mirrored(&self) -> Self {
        let displacement = match &self.displacement {
            Displacement::PerArity(map) => Displacement::PerArity(
                map.iter()
                    .map(|(&d, e)| (d, e.iter().map(|(v, p)| (v.iter().map(|x| -x).collect(), p.clone())).collect()))
                    .collect(),
            ),
            other => other.clone(),
        };
        TreeModel { offspring: self.offspring.clone(), displacement, builtin: None }
    }

    /// Every supported increment is ±1.
    pub fn increments_pm1(&self) -> bool {
        match &self.displacement {
            Displacement::IidPm1 => true,
            Displacement::IidPm01 => false,
            Displacement::PerArity(map) => map
                .values()
                .flatten()
                .all(|(v, p)| p.is_zero() || !v.contains(&0)),
        }
    }

    pub fn mean_offspring(&self) -> Rational {
        match &self.offspring {
            Offspring::Table(t) => t.iter().enumerate().map(|(k, x)| x * int(k as i64)).sum(),
            Offspring::GeometricHalf => int(1),
            Offspring::Geometric(p) => (int(1) - p) / p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.offspring {
            Offspring::Table(t) => {
                if t.iter().any(|x| x.is_negative()) {
                    return Err(Error::Config("negative offspring probability".into()));
                }
                let s: Rational = t.iter().sum();
                if !s.is_one() {
                    return Err(Error::Config(format!(
                        "offspring probabilities sum to {}",
                        fmt_rational(&s)
                    )));
                }
            }
            Offspring::GeometricHalf => {}
            Offspring::Geometric(p) => {
                if !p.is_positive() || p > &int(1) {
                    return Err(Error::Config("geometric parameter outside (0,1]".into()));
                }
            }
        }
        if self.mean_offspring() > int(1) {
            return Err(Error::Config("supercritical offspring law".into()));
        }
        match &self.displacement {
            Displacement::IidPm1 | Displacement::IidPm01 => {}
            Displacement::PerArity(map) => {
                if !matches!(self.offspring, Offspring::Table(_)) {
                    return Err(Error::Config(
                        "per-arity displacement tables need a finite offspring table".into(),
                    ));
                }
                for (&d, entries) in map {
                    let mut total = Rational::zero();
                    for (v, p) in entries {
                        if v.len() != d || v.iter().any(|x| !(-1..=1).contains(x)) {
                            return Err(Error::Config(format!("bad increment vector {v:?} for arity {d}")));
                        }
                        if p.is_negative() {
                            return Err(Error::Config("negative displacement probability".into()));
                        }
                        total += p;
                    }
                    if !total.is_one() {
                        return Err(Error::Config(format!("displacement weights of arity {d} do not sum to 1")));
                    }
                }
                for d in self.arities_up_to(usize::MAX) {
                    if d > 0 && !map.contains_key(&d) {
                        return Err(Error::Config(format!("no displacement law for arity {d}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// ξ(k_v) η^(k_v)([v]) for vertex `v` of `t`.
    fn vertex_factor(&self, t: &LabelledPlaneTree, v: usize) -> Rational {
        let kids = t.children(v);
        let x = self.xi(kids.len());
        if x.is_zero() {
            return x;
        }
        let lv = t.label(v);
        let incs: Vec<i8> = kids.iter().map(|&c| (t.label(c as usize) - lv) as i8).collect();
        x * self.displacement_prob(kids.len(), &incs).unwrap_or_else(|_| Rational::zero())
    }

    /// Π(t): product over all vertices.
    pub fn tree_weight(&self, t: &LabelledPlaneTree) -> Rational {
        let mut w = Rational::one();
        for v in 0..t.len() {
            w *= self.vertex_factor(t, v);
            if w.is_zero() {
                break;
            }
        }
        w
    }

    /// Π₀^[m] of a root component: product over vertices whose label is not `level`.
    /// Together with the excursion weights of the decorations it recovers `tree_weight`.
    pub fn root_component_weight(&self, t: &LabelledPlaneTree, level: i64) -> Rational {
        let mut w = Rational::one();
        for v in (0..t.len()).filter(|&v| t.label(v) != level) {
            w *= self.vertex_factor(t, v);
        }
        w
    }

    /// Π±(τ): product over vertices with nonzero label.
    pub fn excursion_weight(&self, tau: &Excursion) -> Result<Rational> {
        tau.check()?;
        let t = &tau.tree;
        let mut w = Rational::one();
        for v in 0..t.len() {
            if t.label(v) != 0 {
                w *= self.vertex_factor(t, v);
            }
        }
        Ok(w)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))?;
        cfg.into_model()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// JSON config; geometric offspring laws are builtin-only and refuse to serialise.
    pub fn to_json(&self) -> Result<String> {
        let table = match &self.offspring {
            Offspring::Table(t) => t.iter().map(fmt_rational).collect(),
            _ => return Err(Error::Config("geometric offspring laws are builtin-only".into())),
        };
        let displacement = match &self.displacement {
            Displacement::IidPm1 => DisplacementConfig { kind: "iid-uniform-pm1".into(), table: None },
            Displacement::IidPm01 => DisplacementConfig { kind: "iid-uniform-pm01".into(), table: None },
            Displacement::PerArity(map) => DisplacementConfig {
                kind: "per-arity-table".into(),
                table: Some(
                    map.iter()
                        .map(|(d, e)| {
                            (d.to_string(), e.iter().map(|(v, p)| (v.clone(), fmt_rational(p))).collect())
                        })
                        .collect(),
                ),
            },
        };
        let cfg = ModelConfig {
            offspring: OffspringConfig { kind: "finite-table".into(), table },
            displacement,
        };
        serde_json::to_string_pretty(&cfg).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// (1-p)^k
fn geometric_tail(p: &Rational, k: usize) -> Rational {
    (int(1) - p).pow(k as i32)
}

fn all_vectors(d: usize, alphabet: &[i8]) -> Vec<Vec<i8>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                alphabet.iter().map(move |&a| {
                    let mut w = v.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelConfig {
    offspring: OffspringConfig,
    displacement: DisplacementConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct OffspringConfig {
    kind: String,
    #[serde(default)]
    table: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DisplacementConfig {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<BTreeMap<String, Vec<(Vec<i8>, String)>>>,
}

impl ModelConfig {
    fn into_model(self) -> Result<TreeModel> {
        let offspring = match self.offspring.kind.as_str() {
            "finite-table" => Offspring::Table(
                self.offspring.table.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
            ),
            "geometric-half" | "geometric" => {
                return Err(Error::Config("geometric offspring laws are builtin-only".into()))
            }
            k => return Err(Error::Config(format!("unknown offspring kind {k:?}"))),
        };
        let displacement = match self.displacement.kind.as_str() {
            "iid-uniform-pm1" => Displacement::IidPm1,
            "iid-uniform-pm01" => Displacement::IidPm01,
            "per-arity-table" => {
                let table = self
                    .displacement
                    .table
                    .ok_or_else(|| Error::Config("per-arity-table needs a table".into()))?;
                let mut map = BTreeMap::new();
                for (d, entries) in table {
                    let d: usize = d.parse().map_err(|_| Error::Config(format!("bad arity {d:?}")))?;
                    let e = entries
                        .into_iter()
                        .map(|(v, p)| Ok((v, parse_rational(&p)?)))
                        .collect::<Result<Vec<_>>>()?;
                    map.insert(d, e);
                }
                Displacement::PerArity(map)
            }
            k => return Err(Error::Config(format!("unknown displacement kind {k:?}"))),
        };
        TreeModel::new(offspring, displacement)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::LabelledPlaneTree;

    #[test]
    fn builtins_match_named_laws() {
        let ib = builtin_model("incomplete-binary").unwrap();
        assert_eq!(ib.xi(1), rat(1, 2));
        let cb = builtin_model("complete-binary").unwrap();
        assert_eq!(cb.xi(1), int(0));
        let g = builtin_model("geom-pm1").unwrap();
        assert_eq!(g.xi(3), rat(1, 16));
        assert!(builtin_model("ternary").is_err());
        for b in Builtin::ALL {
            let m = TreeModel::builtin(b);
            m.validate().unwrap();
            assert_eq!(m.mean_offspring(), int(1));
            assert!(m.symmetric_displacements());
        }
    }

    #[test]
    fn displacement_probabilities() {
        let ib = TreeModel::builtin(Builtin::IncompleteBinary);
        assert_eq!(ib.displacement_prob(2, &[-1, 1]).unwrap(), int(1));
        assert_eq!(ib.displacement_prob(2, &[1, -1]).unwrap(), int(0));
        assert_eq!(ib.displacement_prob(0, &[]).unwrap(), int(1));
        let g = TreeModel::builtin(Builtin::GeomPm1);
        assert_eq!(g.displacement_prob(3, &[1, -1, 1]).unwrap(), rat(1, 8));
        assert!(g.displacement_prob(2, &[1]).is_err());
        assert!(g.displacement_prob(1, &[2]).is_err());
        assert!(g.increments_pm1());
        assert!(!TreeModel::builtin(Builtin::GeomPm01).increments_pm1());
        assert!(ib.increments_pm1());
    }

    #[test]
    fn weights_of_small_trees() {
        let ib = TreeModel::builtin(Builtin::IncompleteBinary);
        let single = LabelledPlaneTree::decode("0()").unwrap();
        assert_eq!(ib.tree_weight(&single), rat(1, 4));
        let g = TreeModel::builtin(Builtin::GeomPm1);
        assert_eq!(g.tree_weight(&single), rat(1, 2));
        let cb = TreeModel::builtin(Builtin::CompleteBinary);
        let one_child = LabelledPlaneTree::decode("0(+())").unwrap();
        assert_eq!(cb.tree_weight(&one_child), int(0));
        let t = LabelledPlaneTree::decode("0(-()+(+()))").unwrap();
        assert_eq!(ib.tree_weight(&t), rat(1, 4).pow(4));
    }

    #[test]
    fn excursion_weights() {
        let ib = TreeModel::builtin(Builtin::IncompleteBinary);
        let single = Excursion::new(LabelledPlaneTree::decode("1()").unwrap()).unwrap();
        assert_eq!(ib.excursion_weight(&single).unwrap(), rat(1, 4));
        let left = Excursion::new(LabelledPlaneTree::decode("1(-())").unwrap()).unwrap();
        assert_eq!(ib.excursion_weight(&left).unwrap(), ib.xi(1) * rat(1, 2));
        let g = TreeModel::builtin(Builtin::GeomPm1);
        let tau = Excursion::new(LabelledPlaneTree::decode("1(-()+())").unwrap()).unwrap();
        assert_eq!(g.excursion_weight(&tau).unwrap(), rat(1, 8) * rat(1, 4) * rat(1, 2));
    }

    #[test]
    fn config_round_trip() {
        let ib = TreeModel::builtin(Builtin::IncompleteBinary);
        let text = ib.to_json().unwrap();
        let back = TreeModel::from_json(&text).unwrap();
        assert_eq!(back.offspring, ib.offspring);
        assert_eq!(back.displacement, ib.displacement);
        assert!(TreeModel::builtin(Builtin::GeomPm1).to_json().is_err());
        let bad = r#"{"offspring":{"kind":"finite-table","table":["1/2","1/4"]},"displacement":{"kind":"iid-uniform-pm1"}}"#;
        assert!(matches!(TreeModel::from_json(bad), Err(Error::Config(_))));
        let geo = r#"{"offspring":{"kind":"geometric-half"},"displacement":{"kind":"iid-uniform-pm1"}}"#;
        assert!(TreeModel::from_json(geo).is_err());
        let superc = r#"{"offspring":{"kind":"finite-table","table":["0","0","1"]},"displacement":{"kind":"iid-uniform-pm1"}}"#;
        assert!(TreeModel::from_json(superc).is_err());
    }
}
