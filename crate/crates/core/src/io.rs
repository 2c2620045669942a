//! JSON file formats for algebras, relations and graphs.
//!
//! ```json
//! {"size": 4, "elements": ["⊥","u","u'","⊤"],
//!  "operations": {"∧": {"arity": 2, "table": [0,0,0,0, ...]}}}
//! {"arity": 2, "tuples": [[0,1],[0,2]]}
//! {"vertices": 4, "edges": [[0,1],[2,3]]}
//! ```
//!
//! Operation order is the key order of the `operations` object.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Element};
use crate::oracle::{Graph, GraphError};
use crate::relation::{Relation, RelationError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationFile {
    arity: usize,
    table: Vec<Element>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraFile {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elements: Option<Vec<String>>,
    operations: IndexMap<String, OperationFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    arity: usize,
    tuples: Vec<Vec<Element>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Algebra {
    pub fn from_json(src: &str) -> Result<Algebra, FormatError> {
        let file: AlgebraFile = serde_json::from_str(src)?;
        let alg = Algebra::new(
            file.size,
            file.operations
                .into_iter()
                .map(|(symbol, op)| (symbol, op.arity, op.table)),
        )?;
        Ok(match file.elements {
            Some(names) => alg.with_element_names(names)?,
            None => alg,
        })
    }

    /// Serializes with constants written back as arity-0 symbols.
    pub fn to_json(&self) -> String {
        let operations = self
            .operations()
            .iter()
            .map(|op| {
                let file = if op.is_constant() {
                    OperationFile {
                        arity: 0,
                        table: vec![op.table()[0]],
                    }
                } else {
                    OperationFile {
                        arity: op.arity(),
                        table: op.table().to_vec(),
                    }
                };
                (op.symbol().to_string(), file)
            })
            .collect();
        let file = AlgebraFile {
            size: self.size(),
            elements: self.element_names().map(<[String]>::to_vec),
            operations,
        };
        serde_json::to_string(&file).expect("algebra serializes")
    }
}

impl Relation {
    pub fn from_json(src: &str) -> Result<Relation, FormatError> {
        let file: RelationFile = serde_json::from_str(src)?;
        Ok(Relation::new(file.arity, file.tuples)?)
    }

    /// Parses and checks every entry against the universe of `alg`.
    pub fn from_json_for(src: &str, alg: &Algebra) -> Result<Relation, FormatError> {
        let r = Relation::from_json(src)?;
        r.check_universe(alg.size())?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RelationFile {
            arity: self.arity(),
            tuples: self.iter().cloned().collect(),
        })
        .expect("relation serializes")
    }
}

impl Graph {
    pub fn from_json(src: &str) -> Result<Graph, FormatError> {
        let file: GraphFile = serde_json::from_str(src)?;
        Ok(Graph::new(file.vertices, file.edges)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphFile {
            vertices: self.vertex_count(),
            edges: self.edges().collect(),
        })
        .expect("graph serializes")
    }
}
