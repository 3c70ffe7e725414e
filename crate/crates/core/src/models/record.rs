//! Text record for algebras:
//! `{"size": n, "ops": {"prod": [[..]], "ldiv": .., "rdiv": ..}, "constants": {"e": i}}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FiniteAlgebra, ModelError, Table};
use crate::terms::{OpSymbol, Var};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpTables {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prod: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldiv: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rdiv: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraRecord {
    pub size: usize,
    pub ops: OpTables,
    #[serde(default)]
    pub constants: BTreeMap<String, usize>,
}

impl From<&FiniteAlgebra> for AlgebraRecord {
    fn from(alg: &FiniteAlgebra) -> Self {
        let rows = |op| alg.table(op).map(Table::rows);
        AlgebraRecord {
            size: alg.size(),
            ops: OpTables {
                prod: rows(OpSymbol::Prod),
                ldiv: rows(OpSymbol::LDiv),
                rdiv: rows(OpSymbol::RDiv),
            },
            constants: alg.constants().iter().map(|(k, &v)| (k.to_string(), v)).collect(),
        }
    }
}

impl TryFrom<&AlgebraRecord> for FiniteAlgebra {
    type Error = ModelError;

    fn try_from(rec: &AlgebraRecord) -> Result<Self, Self::Error> {
        let mut alg = FiniteAlgebra::new(rec.size)?;
        for (op, rows) in [
            (OpSymbol::Prod, &rec.ops.prod),
            (OpSymbol::LDiv, &rec.ops.ldiv),
            (OpSymbol::RDiv, &rec.ops.rdiv),
        ] {
            if let Some(rows) = rows {
                alg = alg.with_table(op, Table::from_rows(rows)?)?;
            }
        }
        for (name, &value) in &rec.constants {
            let mut chars = name.chars();
            let var = match (chars.next(), chars.next()) {
                (Some(c), None) => Var::new(c).map_err(|e| ModelError::Invalid(e.to_string()))?,
                _ => return Err(ModelError::Invalid(format!("bad constant name {name:?}"))),
            };
            alg = alg.with_constant(var, value)?;
        }
        Ok(alg)
    }
}

impl FiniteAlgebra {
    /// One-line JSON record.
    pub fn to_record_json(&self) -> String {
        serde_json::to_string(&AlgebraRecord::from(self)).expect("records serialize")
    }

    pub fn from_record_json(text: &str) -> Result<FiniteAlgebra, ModelError> {
        let rec: AlgebraRecord =
            serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))?;
        FiniteAlgebra::try_from(&rec)
    }
}
