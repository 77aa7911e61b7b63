//! JSON descriptors `{kind, parameters, index_law, start_index}` for systems.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::{
    chebyshev_morphism, chebyshev_system, division_poly_multiple, iteration_system, lattes_system,
    power_system, product_system, BaseMap, EndoSystem, IndexLaw, Kind, P1Morphism, SystemIndex,
    WeierstrassCurve,
};

/// The map an iteration system iterates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseSpec {
    /// `(x_0^degree : ... : x_n^degree)` on `P^n`.
    Power { n: usize, degree: u64 },
    /// `T_degree` on `P^1`.
    Chebyshev { degree: u32 },
    /// The Lattès map of `[multiplier]` on the curve.
    Lattes { curve: WeierstrassCurve, multiplier: u64 },
    /// Explicit forms, coefficients of `X^i W^(d-i)` as decimal strings.
    Forms { map: P1Morphism },
}

impl BaseSpec {
    pub fn build(&self) -> Result<BaseMap> {
        Ok(match self {
            BaseSpec::Power { n, degree } => {
                if *n == 0 {
                    return Err(Error::InvalidSystem("power map needs n >= 1".into()));
                }
                BaseMap::Power { dim: *n, degree: *degree }
            }
            BaseSpec::Chebyshev { degree } => {
                if *degree == 0 {
                    return Err(Error::InvalidSystem("T_0 is constant".into()));
                }
                BaseMap::P1(Arc::new(chebyshev_morphism(*degree)?))
            }
            BaseSpec::Lattes { curve, multiplier } => {
                BaseMap::P1(Arc::new(division_poly_multiple(curve, *multiplier)?))
            }
            BaseSpec::Forms { map } => BaseMap::P1(Arc::new(map.clone())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub kind: String,
    #[serde(default)]
    pub parameters: Value,
    pub index_law: IndexLaw,
    pub start_index: SystemIndex,
}

fn param<T: for<'de> Deserialize<'de>>(params: &Value, key: &str) -> Result<T> {
    let v = params
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing parameter {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("parameter {key:?}: {e}")))
}

impl SystemDescriptor {
    pub fn from_system(system: &EndoSystem) -> Self {
        let parameters = match &system.kind {
            Kind::Power { dim } => json!({ "n": dim }),
            Kind::Chebyshev => json!({}),
            Kind::Lattes(l) => serde_json::to_value(l.curve()).expect("curve serializes"),
            Kind::Iteration { spec, .. } => json!({ "base": spec }),
            Kind::Product(f) => json!({
                "factors": f.iter().map(SystemDescriptor::from_system).collect::<Vec<_>>()
            }),
        };
        SystemDescriptor {
            kind: system.kind_name().to_string(),
            parameters,
            index_law: system.index_law(),
            start_index: system.start_index().clone(),
        }
    }

    pub fn build(&self) -> Result<EndoSystem> {
        let p = &self.parameters;
        let system = match self.kind.as_str() {
            "power" => power_system(param(p, "n")?)?,
            "chebyshev" => chebyshev_system(),
            "lattes" => {
                let curve: WeierstrassCurve = serde_json::from_value(p.clone())
                    .map_err(|e| Error::Parse(format!("lattes parameters: {e}")))?;
                lattes_system(curve)
            }
            "iteration" => iteration_system(param(p, "base")?)?,
            "product" => {
                let factors: Vec<SystemDescriptor> = param(p, "factors")?;
                product_system(factors.iter().map(|f| f.build()).collect::<Result<_>>()?)?
            }
            other => return Err(Error::Parse(format!("unknown system kind {other:?}"))),
        };
        if system.index_law() != self.index_law {
            return Err(Error::InvalidSystem(format!(
                "{} systems are {:?}, descriptor says {:?}",
                self.kind,
                system.index_law(),
                self.index_law
            )));
        }
        system.with_start(self.start_index.clone())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}
