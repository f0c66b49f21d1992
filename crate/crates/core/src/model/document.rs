//! JSON instance documents.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::instance::{index_ids, FacilityLocationInstance, FirstStage, FlBudgets, SetCoverInstance};
use super::oracle::{ExplicitOracle, IndependentActivation, ScenarioOracle};
use super::scenario::{ExplicitDistribution, Scenario};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDoc {
    pub id: String,
    pub members: Vec<String>,
    pub w1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacilityDoc {
    pub id: String,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub active: Vec<String>,
    #[serde(default)]
    pub w2: BTreeMap<String, f64>,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionDoc {
    Explicit {
        scenarios: Vec<ScenarioDoc>,
    },
    Generator {
        name: String,
        #[serde(default)]
        params: Value,
        #[serde(default)]
        seed: u64,
    },
}

/// A number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Finite(f64),
    Named(Infinity),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Infinity {
    #[serde(rename = "inf")]
    Inf,
}

impl Bound {
    pub fn value(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::Named(Infinity::Inf) => f64::INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v.is_infinite() {
            Bound::Named(Infinity::Inf)
        } else {
            Bound::Finite(v)
        }
    }
}

fn inf() -> Bound {
    Bound::Named(Infinity::Inf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetsDoc {
    pub total: Bound,
    #[serde(default = "inf")]
    pub facility: Bound,
    #[serde(default = "inf")]
    pub assignment: Bound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InstanceDoc {
    SetCover {
        elements: Vec<String>,
        sets: Vec<SetDoc>,
        lambda: f64,
        budget: f64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        unit_cost_floor: bool,
        distribution: DistributionDoc,
    },
    FacilityLocation {
        facilities: Vec<FacilityDoc>,
        clients: Vec<String>,
        metric: Vec<Vec<f64>>,
        lambda: f64,
        budgets: BudgetsDoc,
        distribution: DistributionDoc,
    },
}

pub enum Instance<T> {
    SetCover(SetCoverInstance<T>),
    Facility(FacilityLocationInstance<T>),
}

pub struct Loaded<T> {
    pub instance: Instance<T>,
    pub oracle: Box<dyn ScenarioOracle<T>>,
}

impl<T> std::fmt::Debug for Loaded<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.instance {
            Instance::SetCover(_) => "set_cover",
            Instance::Facility(_) => "facility_location",
        };
        f.debug_struct("Loaded").field("type", &kind).finish_non_exhaustive()
    }
}

pub fn load_instance<T: Scalar>(text: &str) -> Result<Loaded<T>> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_document(doc)
}

pub fn from_document<T: Scalar>(doc: InstanceDoc) -> Result<Loaded<T>> {
    match doc {
        InstanceDoc::SetCover { elements, sets, lambda, budget, unit_cost_floor, distribution } => {
            let eidx = index_ids(&elements)?;
            let mut parsed = Vec::with_capacity(sets.len());
            for s in sets {
                let members = s
                    .members
                    .iter()
                    .map(|e| eidx.get(e).copied().ok_or_else(|| Error::UnknownId(e.clone())))
                    .collect::<Result<Vec<_>>>()?;
                parsed.push((s.id, members, T::lit(s.w1)));
            }
            let mut inst = SetCoverInstance::new(elements, parsed, T::lit(lambda), T::lit(budget))?;
            inst.unit_cost_floor = unit_cost_floor;
            let oracle = build_oracle(&inst, &eidx, distribution)?;
            Ok(Loaded { instance: Instance::SetCover(inst), oracle })
        }
        InstanceDoc::FacilityLocation { facilities, clients, metric, lambda, budgets, distribution } => {
            let cidx = index_ids(&clients)?;
            let fac = facilities.into_iter().map(|f| (f.id, T::lit(f.f1))).collect();
            let metric = metric.into_iter().map(|r| r.into_iter().map(T::lit).collect()).collect();
            let budgets = FlBudgets {
                total: T::lit(budgets.total.value()),
                facility: T::lit(budgets.facility.value()),
                assignment: T::lit(budgets.assignment.value()),
            };
            let inst = FacilityLocationInstance::new(fac, clients, metric, T::lit(lambda), budgets)?;
            let oracle = build_oracle(&inst, &cidx, distribution)?;
            Ok(Loaded { instance: Instance::Facility(inst), oracle })
        }
    }
}

fn build_oracle<T: Scalar, I: FirstStage<T>>(
    inst: &I,
    demand_idx: &HashMap<String, usize>,
    dist: DistributionDoc,
) -> Result<Box<dyn ScenarioOracle<T>>> {
    match dist {
        DistributionDoc::Explicit { scenarios } => {
            let aidx = index_ids(inst.action_ids())?;
            let w1 = inst.first_stage_costs();
            let mut entries = Vec::with_capacity(scenarios.len());
            for s in scenarios {
                let active = s
                    .active
                    .iter()
                    .map(|e| demand_idx.get(e).copied().ok_or_else(|| Error::UnknownId(e.clone())))
                    .collect::<Result<Vec<_>>>()?;
                // actions without an explicit stage-II cost keep their stage-I cost
                let mut w2 = w1.to_vec();
                for (id, &v) in &s.w2 {
                    let k = *aidx.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
                    if !(v >= 0.0) {
                        return Err(Error::NegativeWeight { id: id.clone(), value: v });
                    }
                    w2[k] = T::lit(v);
                }
                if let Some(b) = s.budget {
                    if !(b >= 0.0) {
                        return Err(Error::InvalidParameter(format!("scenario budget {b} is negative")));
                    }
                }
                entries.push((Scenario::new(active, w2, s.budget.map(T::lit)), T::lit(s.p)));
            }
            Ok(Box::new(ExplicitOracle::new(ExplicitDistribution::new(entries)?)))
        }
        DistributionDoc::Generator { name, params, seed } => match name.as_str() {
            "independent_activation" => {
                let n = inst.demand_ids().len();
                let q = match params.get("q") {
                    Some(Value::Number(v)) => vec![v.as_f64().unwrap_or(0.0); n],
                    Some(Value::Array(vs)) => vs.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect(),
                    _ => return Err(Error::Parse("independent_activation needs `q`".into())),
                };
                if q.len() != n {
                    return Err(Error::Parse(format!("`q` has {} entries for {n} demands", q.len())));
                }
                let factor = params.get("w2_factor").and_then(Value::as_f64).unwrap_or(inst.lambda().as_f64());
                Ok(Box::new(IndependentActivation::new(q, inst.first_stage_costs(), factor, seed)?))
            }
            other => Err(Error::Parse(format!("unknown generator `{other}`"))),
        },
    }
}

fn scenario_docs<T: Scalar>(
    dist: &ExplicitDistribution<T>,
    demand_ids: &[String],
    action_ids: &[String],
) -> Vec<ScenarioDoc> {
    dist.entries()
        .iter()
        .map(|(s, p)| ScenarioDoc {
            active: s.active.iter().map(|&e| demand_ids[e].clone()).collect(),
            w2: action_ids.iter().cloned().zip(s.w2.iter().map(|v| v.as_f64())).collect(),
            p: p.as_f64(),
            budget: s.budget.map(|b| b.as_f64()),
        })
        .collect()
}

pub fn set_cover_document<T: Scalar>(inst: &SetCoverInstance<T>, dist: &ExplicitDistribution<T>) -> InstanceDoc {
    InstanceDoc::SetCover {
        elements: inst.element_ids.clone(),
        sets: (0..inst.m())
            .map(|s| SetDoc {
                id: inst.set_ids[s].clone(),
                members: inst.members[s].iter().map(|&e| inst.element_ids[e].clone()).collect(),
                w1: inst.w1[s].as_f64(),
            })
            .collect(),
        lambda: inst.lambda.as_f64(),
        budget: inst.budget.as_f64(),
        unit_cost_floor: inst.unit_cost_floor,
        distribution: DistributionDoc::Explicit {
            scenarios: scenario_docs(dist, &inst.element_ids, &inst.set_ids),
        },
    }
}

pub fn facility_document<T: Scalar>(
    inst: &FacilityLocationInstance<T>,
    dist: &ExplicitDistribution<T>,
) -> InstanceDoc {
    InstanceDoc::FacilityLocation {
        facilities: inst
            .facility_ids
            .iter()
            .zip(&inst.f1)
            .map(|(id, f)| FacilityDoc { id: id.clone(), f1: f.as_f64() })
            .collect(),
        clients: inst.client_ids.clone(),
        metric: inst.cost.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
        lambda: inst.lambda.as_f64(),
        budgets: BudgetsDoc {
            total: Bound::from_value(inst.budgets.total.as_f64()),
            facility: Bound::from_value(inst.budgets.facility.as_f64()),
            assignment: Bound::from_value(inst.budgets.assignment.as_f64()),
        },
        distribution: DistributionDoc::Explicit {
            scenarios: scenario_docs(dist, &inst.client_ids, &inst.facility_ids),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"type":"set_cover","elements":["e"],"sets":[{"id":"S","members":["e"],"w1":1}],
        "lambda":1,"budget":0,"distribution":{"kind":"explicit","scenarios":[{"active":["e"],"p":1}]}}"#;

    #[test]
    fn minimal_document() {
        let l = load_instance::<f64>(MINIMAL).unwrap();
        let Instance::SetCover(inst) = l.instance else { panic!("wrong type") };
        assert_eq!((inst.m(), inst.n()), (1, 1));
        let d = l.oracle.support().unwrap();
        assert_eq!(d.entries()[0].0.w2, vec![1.0]);
    }

    #[test]
    fn probability_sum_error() {
        let text = MINIMAL.replace(r#""p":1"#, r#""p":0.9"#);
        assert!(matches!(load_instance::<f64>(&text), Err(Error::ProbabilitySum(_))));
    }

    #[test]
    fn unknown_member_and_malformed() {
        let text = MINIMAL.replace(r#""members":["e"]"#, r#""members":["x"]"#);
        assert!(matches!(load_instance::<f64>(&text), Err(Error::UnknownId(_))));
        assert!(matches!(load_instance::<f64>("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn facility_budgets_accept_inf() {
        let text = r#"{"type":"facility_location","facilities":[{"id":"f","f1":2}],"clients":["c"],
            "metric":[[1]],"lambda":2,"budgets":{"total":5,"facility":"inf"},
            "distribution":{"kind":"generator","name":"independent_activation","params":{"q":0.5},"seed":4}}"#;
        let l = load_instance::<f64>(text).unwrap();
        let Instance::Facility(inst) = l.instance else { panic!("wrong type") };
        assert_eq!(inst.budgets.total, 5.0);
        assert!(inst.budgets.facility.is_infinite() && inst.budgets.assignment.is_infinite());
        assert_eq!(l.oracle.support().unwrap().len(), 2);
    }

    #[test]
    fn document_roundtrip() {
        let l = load_instance::<f64>(MINIMAL).unwrap();
        let Instance::SetCover(inst) = &l.instance else { panic!() };
        let doc = set_cover_document(inst, l.oracle.support().unwrap());
        let text = serde_json::to_string(&doc).unwrap();
        let again = load_instance::<f64>(&text).unwrap();
        assert_eq!(again.oracle.support(), l.oracle.support());
    }
}
