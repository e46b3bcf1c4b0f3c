//! Computing applications: a runtime image, resource requirements and an
//! execution model, read from a closed-schema JSON manifest.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cluster::{capacity, Inventory, NodeClass};
use crate::resources::ResourceVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifestError {
    #[error("schema error: {}", .0.join("; "))]
    Schema(Vec<String>),
    #[error("value error: {}", .0.join("; "))]
    Value(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputingApplication {
    pub name: String,
    pub tenant: String,
    pub image: String,
    pub model: ExecutionModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ExecutionModel {
    BatchFarm {
        executors: u32,
        whole_node: bool,
        /// Absent for whole-node farms.
        executor_share: Option<ResourceVector>,
        node_class: NodeClass,
    },
    Pipeline {
        stages: Vec<StageSpec>,
    },
    Session {
        share: ResourceVector,
        node_class: NodeClass,
    },
}

impl ExecutionModel {
    pub fn type_name(&self) -> &'static str {
        match self {
            ExecutionModel::BatchFarm { .. } => "batch-farm",
            ExecutionModel::Pipeline { .. } => "pipeline",
            ExecutionModel::Session { .. } => "session",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    pub image: String,
    /// 1 marks an inherently sequential stage.
    pub max_parallelism: u32,
    /// Total stage work in HS06 seconds.
    pub work_hs06_s: f64,
    pub output_mib: f64,
    pub per_task_share: ResourceVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        let ok = issues.iter().all(|i| i.severity != Severity::Error);
        Self { ok, issues }
    }

    pub fn has_warnings(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Warning)
    }
}

/// Collects every schema and value problem instead of stopping at the first.
#[derive(Default)]
struct Reader {
    schema: Vec<String>,
    values: Vec<String>,
}

impl Reader {
    fn object<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        required: &[&str],
        optional: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.schema.push(format!("{path}: expected an object"));
            return None;
        };
        for key in required {
            if !map.contains_key(*key) {
                self.schema.push(format!("{path}: missing key `{key}`"));
            }
        }
        for key in map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                self.schema.push(format!("{path}: unknown key `{key}`"));
            }
        }
        Some(map)
    }

    fn string(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        match m.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.schema.push(format!("{path}.{key}: expected a string"));
                None
            }
        }
    }

    fn nonempty(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        let s = self.string(m, key, path)?;
        if s.is_empty() {
            self.values.push(format!("{path}.{key}: must not be empty"));
        }
        Some(s)
    }

    fn boolean(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<bool> {
        match m.get(key)? {
            Value::Bool(b) => Some(*b),
            _ => {
                self.schema
                    .push(format!("{path}.{key}: expected a boolean"));
                None
            }
        }
    }

    fn uint(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<u64> {
        let v = m.get(key)?;
        if let Some(u) = v.as_u64() {
            return Some(u);
        }
        if v.as_i64().is_some() {
            self.values
                .push(format!("{path}.{key}: must not be negative"));
        } else {
            self.schema
                .push(format!("{path}.{key}: expected an integer"));
        }
        None
    }

    fn decimal(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<f64> {
        let Some(x) = m.get(key)?.as_f64() else {
            self.schema.push(format!("{path}.{key}: expected a number"));
            return None;
        };
        if x < 0.0 {
            self.values
                .push(format!("{path}.{key}: must not be negative"));
            return None;
        }
        Some(x)
    }

    fn node_class(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<NodeClass> {
        let s = self.string(m, key, path)?;
        match s.parse() {
            Ok(c) => Some(c),
            Err(e) => {
                self.schema.push(format!("{path}.{key}: {e}"));
                None
            }
        }
    }

    fn share(&mut self, m: &Map<String, Value>, key: &str, path: &str) -> Option<ResourceVector> {
        let path = format!("{path}.{key}");
        let obj = self.object(
            m.get(key)?,
            &path,
            &["millicores", "memory_mib", "gpus"],
            &[],
        )?;
        let millicores = self.uint(obj, "millicores", &path);
        let memory_mib = self.uint(obj, "memory_mib", &path);
        let gpus = self.uint(obj, "gpus", &path);
        Some(ResourceVector::new(millicores?, memory_mib?, gpus?))
    }

    fn positive(&mut self, n: Option<u64>, what: &str) -> Option<u32> {
        let n = n?;
        match u32::try_from(n) {
            Ok(0) => {
                self.values.push(format!("{what}: must be at least 1"));
                None
            }
            Ok(n) => Some(n),
            Err(_) => {
                self.values.push(format!("{what}: out of range"));
                None
            }
        }
    }

    fn model(&mut self, v: &Value) -> Option<ExecutionModel> {
        let path = "model";
        let kind = v
            .as_object()
            .and_then(|m| m.get("type"))
            .and_then(Value::as_str);
        match kind {
            Some("batch-farm") => {
                let whole = v
                    .get("whole_node")
                    .and_then(Value::as_bool)
                    .unwrap_or(false);
                let mut required = vec!["type", "executors", "whole_node", "node_class"];
                let mut optional = vec![];
                if whole {
                    optional.push("executor_share");
                } else {
                    required.push("executor_share");
                }
                let m = self.object(v, path, &required, &optional)?;
                let executors = self.uint(m, "executors", path);
                let executors = self.positive(executors, "model.executors");
                let whole_node = self.boolean(m, "whole_node", path);
                let share = self.share(m, "executor_share", path);
                let node_class = self.node_class(m, "node_class", path);
                Some(ExecutionModel::BatchFarm {
                    executors: executors?,
                    whole_node: whole_node?,
                    executor_share: share,
                    node_class: node_class?,
                })
            }
            Some("pipeline") => {
                let m = self.object(v, path, &["type", "stages"], &[])?;
                let Some(list) = m.get("stages")?.as_array() else {
                    self.schema.push("model.stages: expected an array".into());
                    return None;
                };
                if list.is_empty() {
                    self.values
                        .push("model.stages: at least one stage is required".into());
                }
                let stages: Vec<Option<StageSpec>> = list
                    .iter()
                    .enumerate()
                    .map(|(i, s)| self.stage(s, &format!("model.stages[{i}]")))
                    .collect();
                Some(ExecutionModel::Pipeline {
                    stages: stages.into_iter().collect::<Option<_>>()?,
                })
            }
            Some("session") => {
                let m = self.object(v, path, &["type", "share", "node_class"], &[])?;
                let share = self.share(m, "share", path);
                let node_class = self.node_class(m, "node_class", path);
                Some(ExecutionModel::Session {
                    share: share?,
                    node_class: node_class?,
                })
            }
            Some(other) => {
                self.schema
                    .push(format!("model.type: unknown execution model {other:?}"));
                None
            }
            None => {
                self.object(v, path, &["type"], &[]);
                if v.get("type").is_some() {
                    self.schema.push("model.type: expected a string".into());
                }
                None
            }
        }
    }

    fn stage(&mut self, v: &Value, path: &str) -> Option<StageSpec> {
        let m = self.object(
            v,
            path,
            &[
                "name",
                "image",
                "max_parallelism",
                "work_hs06_s",
                "output_mib",
                "per_task_share",
            ],
            &[],
        )?;
        let name = self.nonempty(m, "name", path);
        let image = self.nonempty(m, "image", path);
        let par = self.uint(m, "max_parallelism", path);
        let max_parallelism = self.positive(par, &format!("{path}.max_parallelism"));
        let work = self.decimal(m, "work_hs06_s", path);
        let output = self.decimal(m, "output_mib", path);
        let share = self.share(m, "per_task_share", path);
        Some(StageSpec {
            name: name?,
            image: image?,
            max_parallelism: max_parallelism?,
            work_hs06_s: work?,
            output_mib: output?,
            per_task_share: share?,
        })
    }
}

/// Parses a manifest document. Unknown keys are rejected and every problem
/// found is reported at once.
pub fn parse_manifest(text: &str) -> Result<ComputingApplication, ManifestError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| ManifestError::Schema(vec![format!("not a JSON document: {e}")]))?;
    let mut r = Reader::default();
    let app = r
        .object(&doc, "$", &["name", "tenant", "image", "model"], &[])
        .and_then(|m| {
            let name = r.nonempty(m, "name", "$");
            let tenant = r.nonempty(m, "tenant", "$");
            let image = r.nonempty(m, "image", "$");
            let model = m.get("model").and_then(|v| r.model(v));
            Some(ComputingApplication {
                name: name?,
                tenant: tenant?,
                image: image?,
                model: model?,
            })
        });
    if !r.schema.is_empty() {
        return Err(ManifestError::Schema(r.schema));
    }
    if !r.values.is_empty() {
        return Err(ManifestError::Value(r.values));
    }
    Ok(app.expect("no issues implies a complete application"))
}

fn share_json(s: &ResourceVector) -> Value {
    json!({"millicores": s.millicores, "memory_mib": s.memory_mib, "gpus": s.gpus})
}

/// Renders an application back into the manifest schema.
pub fn to_manifest_json(app: &ComputingApplication) -> String {
    let model = match &app.model {
        ExecutionModel::BatchFarm {
            executors,
            whole_node,
            executor_share,
            node_class,
        } => {
            let mut m = json!({
                "type": "batch-farm",
                "executors": executors,
                "whole_node": whole_node,
                "node_class": node_class.as_str(),
            });
            if let Some(share) = executor_share {
                m["executor_share"] = share_json(share);
            }
            m
        }
        ExecutionModel::Pipeline { stages } => json!({
            "type": "pipeline",
            "stages": stages.iter().map(|s| json!({
                "name": s.name,
                "image": s.image,
                "max_parallelism": s.max_parallelism,
                "work_hs06_s": s.work_hs06_s,
                "output_mib": s.output_mib,
                "per_task_share": share_json(&s.per_task_share),
            })).collect::<Vec<_>>(),
        }),
        ExecutionModel::Session { share, node_class } => json!({
            "type": "session",
            "share": share_json(share),
            "node_class": node_class.as_str(),
        }),
    };
    let doc = json!({
        "name": app.name,
        "tenant": app.tenant,
        "image": app.image,
        "model": model,
    });
    serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n"
}

fn check_share(
    issues: &mut Vec<Issue>,
    what: &str,
    share: &ResourceVector,
    class: Option<NodeClass>,
    inv: &Inventory,
) {
    let error = |message: String| Issue {
        severity: Severity::Error,
        message,
    };
    if share.is_zero() {
        issues.push(error(format!("{what}: share must be non-zero")));
        return;
    }
    if class == Some(NodeClass::Light) && share.gpus > 0 {
        issues.push(error(format!(
            "{what}: GPUs are not supported on light nodes"
        )));
        return;
    }
    let fits_somewhere = inv
        .nodes
        .iter()
        .filter(|n| class.is_none_or(|c| n.class == c))
        .any(|n| share.fits_in(&capacity(n)));
    if !fits_somewhere {
        let target = class.map_or("any node".to_string(), |c| format!("every {c} node"));
        issues.push(error(format!(
            "{what}: share {share} exceeds the capacity of {target}"
        )));
    }
}

/// Checks an application against an inventory. Problems are reported, not
/// raised.
pub fn validate(app: &ComputingApplication, inv: &Inventory) -> ValidationReport {
    let mut issues = Vec::new();
    match &app.model {
        ExecutionModel::BatchFarm {
            executors,
            whole_node,
            executor_share,
            node_class,
        } => {
            let available = inv.nodes_of(*node_class).count();
            if available == 0 {
                issues.push(Issue {
                    severity: Severity::Error,
                    message: format!("no {node_class} nodes in the inventory"),
                });
            } else if !whole_node {
                match executor_share {
                    Some(share) => {
                        check_share(&mut issues, "executor_share", share, Some(*node_class), inv)
                    }
                    None => issues.push(Issue {
                        severity: Severity::Error,
                        message: "fractional executors need an executor_share".into(),
                    }),
                }
            }
            if *executors as usize > available && available > 0 {
                issues.push(Issue {
                    severity: Severity::Warning,
                    message: format!(
                        "{executors} executors requested but only {available} {node_class} nodes exist"
                    ),
                });
            }
        }
        ExecutionModel::Pipeline { stages } => {
            for stage in stages {
                let what = format!("stage {}", stage.name);
                check_share(&mut issues, &what, &stage.per_task_share, None, inv);
                if stage.work_hs06_s > 0.0 && stage.per_task_share.millicores == 0 {
                    issues.push(Issue {
                        severity: Severity::Error,
                        message: format!("{what}: work needs a non-zero CPU share"),
                    });
                }
            }
        }
        ExecutionModel::Session { share, node_class } => {
            check_share(&mut issues, "session share", share, Some(*node_class), inv);
        }
    }
    ValidationReport::from_issues(issues)
}
