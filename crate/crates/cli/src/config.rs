//! JSON model descriptions.
//!
//! ```json
//! {
//!   "version": 1,
//!   "model": "network",
//!   "spaces": [1, 1],
//!   "layers": [
//!     { "weights": [[0.5]], "bias": [1.0], "activation": { "kind": "identity" } }
//!   ],
//!   "solver": { "tol": 1e-10, "max_iter": 100000, "start": [0.0] }
//! }
//! ```
//!
//! Weights may also be given as `{ "file": "w1.txt" }`, a whitespace
//! separated numeric text file with one matrix row per line, resolved
//! relative to the config file. Hopfield models use `"model": "hopfield"`
//! with `spaces` listing the block dimensions, a `self_inhibition` entry per
//! block, one full `weights` matrix, a `bias` vector and one activation per
//! block.

use std::fs;
use std::path::{Path, PathBuf};

use proxnet_core::{Activation, ActivationKind, HopfieldModel, Layer, Matrix, Network, Vector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;

pub const CONFIG_VERSION: u64 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    Inline(Vec<Vec<f64>>),
    File { file: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivationSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerSpec {
    weights: MatrixSpec,
    bias: Vec<f64>,
    activation: ActivationSpec,
}

/// Optional solver defaults carried by a config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    version: u64,
    #[allow(dead_code)]
    model: String,
    spaces: Vec<usize>,
    layers: Vec<LayerSpec>,
    #[serde(default)]
    solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HopfieldFile {
    version: u64,
    #[allow(dead_code)]
    model: String,
    spaces: Vec<usize>,
    self_inhibition: Vec<f64>,
    weights: MatrixSpec,
    bias: Vec<f64>,
    activations: Vec<ActivationSpec>,
    #[serde(default)]
    solver: SolverSection,
}

/// A validated network description.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub spaces: Vec<usize>,
    pub network: Network,
    pub solver: SolverSection,
}

/// A validated Hopfield description.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldConfig {
    pub model: HopfieldModel,
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Network(NetworkConfig),
    Hopfield(HopfieldConfig),
}

impl Config {
    pub fn solver(&self) -> &SolverSection {
        match self {
            Config::Network(c) => &c.solver,
            Config::Hopfield(c) => &c.solver,
        }
    }

    /// The config with all matrices inlined, in a fixed key order.
    pub fn to_canonical(&self) -> Value {
        match self {
            Config::Network(c) => c.to_canonical(),
            Config::Hopfield(c) => c.to_canonical(),
        }
    }
}

fn activation_json(a: &Activation) -> Value {
    match a.param() {
        Some(p) => json!({ "kind": a.kind().name(), "param": p }),
        None => json!({ "kind": a.kind().name() }),
    }
}

fn solver_json(s: &SolverSection) -> Value {
    serde_json::to_value(s).expect("solver section serializes")
}

impl NetworkConfig {
    pub fn to_canonical(&self) -> Value {
        let layers: Vec<Value> = self
            .network
            .layers()
            .iter()
            .map(|l| {
                json!({
                    "weights": l.weights().to_rows(),
                    "bias": l.bias().as_slice(),
                    "activation": activation_json(l.activation()),
                })
            })
            .collect();
        json!({
            "version": CONFIG_VERSION,
            "model": "network",
            "spaces": self.spaces,
            "layers": layers,
            "solver": solver_json(&self.solver),
        })
    }
}

impl HopfieldConfig {
    pub fn to_canonical(&self) -> Value {
        let m = &self.model;
        json!({
            "version": CONFIG_VERSION,
            "model": "hopfield",
            "spaces": m.block_dims(),
            "self_inhibition": m.self_inhibition(),
            "weights": m.weights().to_rows(),
            "bias": m.bias().as_slice(),
            "activations": m.activations().iter().map(activation_json).collect::<Vec<_>>(),
            "solver": solver_json(&self.solver),
        })
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

/// Parses config text; `base` resolves relative weight-file paths.
pub fn parse_config_str(text: &str, base: &Path) -> Result<Config, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        context: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let model = value
        .get("model")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Config("missing string field `model` (\"network\" or \"hopfield\")".into()))?;
    match model {
        "network" => {
            let file: NetworkFile = from_value(value)?;
            build_network(file, base).map(Config::Network)
        }
        "hopfield" => {
            let file: HopfieldFile = from_value(value)?;
            build_hopfield(file, base).map(Config::Hopfield)
        }
        other => Err(CliError::Config(format!(
            "unknown model `{other}`, expected \"network\" or \"hopfield\""
        ))),
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Parse {
        context: format!("field `{}`", e.path()),
        message: e.inner().to_string(),
    })
}

fn check_version(version: u64) -> Result<(), CliError> {
    if version == CONFIG_VERSION {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unsupported config version {version}, expected {CONFIG_VERSION}"
        )))
    }
}

fn build_activation(spec: &ActivationSpec, context: &str) -> Result<Activation, CliError> {
    let kind: ActivationKind = spec
        .kind
        .parse()
        .map_err(|e| CliError::Config(format!("{context}: {e}")))?;
    Activation::new(kind, spec.param).map_err(|e| CliError::Config(format!("{context}: {e}")))
}

fn load_matrix(spec: &MatrixSpec, base: &Path, context: &str) -> Result<Matrix, CliError> {
    let rows = match spec {
        MatrixSpec::Inline(rows) => rows.clone(),
        MatrixSpec::File { file } => read_matrix_file(&base.join(file), context)?,
    };
    Matrix::from_rows(rows).map_err(|e| CliError::Config(format!("{context}: {e}")))
}

fn read_matrix_file(path: &PathBuf, context: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| CliError::Parse {
                        context: format!("{context}, {} line {}", path.display(), i + 1),
                        message: format!("`{tok}` is not a number"),
                    })
                })
                .collect()
        })
        .collect()
}

fn vector(coords: &[f64], context: &str) -> Result<Vector, CliError> {
    Vector::new(coords.to_vec()).map_err(|e| CliError::Config(format!("{context}: {e}")))
}

fn check_solver(solver: &SolverSection, start_dim: usize) -> Result<(), CliError> {
    if let Some(tol) = solver.tol {
        if !(tol > 0.0) {
            return Err(CliError::Config(format!("solver.tol must be positive, got {tol}")));
        }
    }
    if solver.max_iter == Some(0) {
        return Err(CliError::Config("solver.max_iter must be >= 1".into()));
    }
    if let Some(start) = &solver.start {
        if start.len() != start_dim {
            return Err(CliError::Config(format!(
                "solver.start has length {}, expected {start_dim}",
                start.len()
            )));
        }
        vector(start, "solver.start")?;
    }
    Ok(())
}

fn build_network(file: NetworkFile, base: &Path) -> Result<NetworkConfig, CliError> {
    check_version(file.version)?;
    let spaces = file.spaces;
    if spaces.len() < 2 || spaces.contains(&0) {
        return Err(CliError::Config(
            "spaces must list at least two positive dimensions (d_0, ..., d_n)".into(),
        ));
    }
    if file.layers.len() != spaces.len() - 1 {
        return Err(CliError::Config(format!(
            "{} spaces require {} layers, found {}",
            spaces.len(),
            spaces.len() - 1,
            file.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, spec) in file.layers.iter().enumerate() {
        let ctx = format!("layer {}", i + 1);
        let weights = load_matrix(&spec.weights, base, &ctx)?;
        let (rows, cols) = (spaces[i + 1], spaces[i]);
        if weights.rows() != rows || weights.cols() != cols {
            return Err(CliError::Config(format!(
                "{ctx}: weights are {}x{}, expected {rows}x{cols}",
                weights.rows(),
                weights.cols()
            )));
        }
        if spec.bias.len() != rows {
            return Err(CliError::Config(format!(
                "{ctx}: bias has length {}, expected {rows}",
                spec.bias.len()
            )));
        }
        let bias = vector(&spec.bias, &ctx)?;
        let activation = build_activation(&spec.activation, &ctx)?;
        layers.push(Layer::new(weights, bias, activation).map_err(|e| CliError::Config(format!("{ctx}: {e}")))?);
    }
    let network = Network::new(layers).map_err(|e| CliError::Config(e.to_string()))?;
    check_solver(&file.solver, spaces[0])?;
    Ok(NetworkConfig {
        spaces,
        network,
        solver: file.solver,
    })
}

fn build_hopfield(file: HopfieldFile, base: &Path) -> Result<HopfieldConfig, CliError> {
    check_version(file.version)?;
    let activations = file
        .activations
        .iter()
        .enumerate()
        .map(|(i, a)| build_activation(a, &format!("activation {}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = load_matrix(&file.weights, base, "weights")?;
    let bias = vector(&file.bias, "bias")?;
    let model = HopfieldModel::new(file.self_inhibition, file.spaces, weights, bias, activations)
        .map_err(|e| CliError::Config(e.to_string()))?;
    check_solver(&file.solver, model.dim())?;
    Ok(HopfieldConfig {
        model,
        solver: file.solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, CliError> {
        parse_config_str(text, Path::new("."))
    }

    const ONE_LAYER: &str = r#"{
        "version": 1, "model": "network", "spaces": [1, 1],
        "layers": [{"weights": [[0.5]], "bias": [1], "activation": {"kind": "identity"}}]
    }"#;

    #[test]
    fn accepts_one_layer_config() {
        match parse(ONE_LAYER).unwrap() {
            Config::Network(c) => {
                assert!(c.network.is_recurrent());
                assert_eq!(c.spaces, vec![1, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_error_names_layer() {
        let text = r#"{"version": 1, "model": "network", "spaces": [2, 2],
            "layers": [{"weights": [[1, 0, 0], [0, 1, 0]], "bias": [0, 0], "activation": {"kind": "relu"}}]}"#;
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
        assert!(err.contains("2x3"), "{err}");
    }

    #[test]
    fn negative_param_is_rejected() {
        let text = ONE_LAYER.replace(r#"{"kind": "identity"}"#, r#"{"kind": "soft_threshold", "param": -1}"#);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("positive"), "{err}");
    }

    #[test]
    fn unknown_kind_and_keys_are_rejected() {
        let text = ONE_LAYER.replace("identity", "tanh");
        assert!(parse(&text).unwrap_err().to_string().contains("tanh"));
        let text = ONE_LAYER.replace(r#""version": 1,"#, r#""version": 1, "extra": true,"#);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = parse("{\n  \"version\": 1,\n  oops\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn field_errors_carry_path() {
        let text = ONE_LAYER.replace(r#""bias": [1]"#, r#""bias": "one""#);
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("layers[0].bias"), "{err}");
    }

    #[test]
    fn weights_from_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("w.txt"), "0.5 0\n0 0.25\n").unwrap();
        let text = r#"{"version": 1, "model": "network", "spaces": [2, 2],
            "layers": [{"weights": {"file": "w.txt"}, "bias": [1, 1], "activation": {"kind": "relu"}}]}"#;
        fs::write(dir.path().join("net.json"), text).unwrap();
        match parse_config(&dir.path().join("net.json")).unwrap() {
            Config::Network(c) => assert_eq!(c.network.layers()[0].weights().get(1, 1), 0.25),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hopfield_config() {
        let text = r#"{"version": 1, "model": "hopfield", "spaces": [1], "self_inhibition": [2],
            "weights": [[1]], "bias": [1], "activations": [{"kind": "clip", "param": 1}]}"#;
        match parse(text).unwrap() {
            Config::Hopfield(c) => assert_eq!(c.model.dim(), 1),
            other => panic!("unexpected {other:?}"),
        }
        let bad = text.replace("[2]", "[0]");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let text = r#"{"version": 1, "model": "network", "spaces": [2, 3, 2],
            "layers": [
              {"weights": [[0.1, 0.2], [0.3, -0.4], [0.5, 0.6]], "bias": [1, 2, 3], "activation": {"kind": "group_soft_threshold", "param": 0.25}},
              {"weights": [[0.1, 0.2, 0.3], [-0.1, 0.0, 0.7]], "bias": [0, -1], "activation": {"kind": "relu"}}
            ],
            "solver": {"tol": 1e-9, "start": [1, 2]}}"#;
        let cfg = parse(text).unwrap();
        let again = parse(&cfg.to_canonical().to_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn version_is_checked() {
        let text = ONE_LAYER.replace(r#""version": 1"#, r#""version": 2"#);
        assert!(parse(&text).unwrap_err().to_string().contains("version"));
    }
}
