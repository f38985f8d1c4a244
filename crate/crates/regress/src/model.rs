use std::fmt::Write as _;
use std::path::Path;

use decompose::ExoProjection;
use nalgebra::{DMatrix, DVector};

use crate::error::{RegressError, Result};
use crate::linear::LinearModel;
use crate::mlp::MlpModel;

/// A fitted estimate of the exogenous reward function, consuming the
/// projected state coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl RewardModel {
    pub fn kind(&self) -> &'static str {
        match self {
            RewardModel::Linear(_) => "linear",
            RewardModel::Mlp(_) => "mlp",
        }
    }

    /// Number of features the model consumes (the subspace rank).
    pub fn input_dim(&self) -> usize {
        match self {
            RewardModel::Linear(m) => m.input_dim(),
            RewardModel::Mlp(m) => m.input_dim(),
        }
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        match self {
            RewardModel::Linear(m) => m.predict(x),
            RewardModel::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_batch(&self, x: &DMatrix<f64>) -> DVector<f64> {
        match self {
            RewardModel::Mlp(m) => m.predict_batch(x),
            RewardModel::Linear(m) => {
                DVector::from_fn(x.nrows(), |i, _| m.predict(&x.row(i).transpose()))
            }
        }
    }

    /// Serializes kind, shapes, and flat parameter arrays as line-oriented
    /// text. Optimizer accumulators are deliberately not part of the
    /// artifact; a reloaded model starts with fresh ones.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        match self {
            RewardModel::Linear(m) => {
                writeln!(out, "kind\tlinear").unwrap();
                writeln!(out, "input\t{}", m.input_dim()).unwrap();
                writeln!(out, "rank\t{}", m.rank()).unwrap();
                writeln!(out, "intercept\t{}", m.intercept()).unwrap();
                write_tensor(&mut out, "weights", m.weights().len(), 1, m.weights().as_slice());
            }
            RewardModel::Mlp(m) => {
                writeln!(out, "kind\tmlp").unwrap();
                writeln!(out, "input\t{}", m.input_dim()).unwrap();
                writeln!(
                    out,
                    "hyper\t{}\t{}\t{}",
                    m.learning_rate(),
                    m.l2(),
                    m.batch_size()
                )
                .unwrap();
                let (weights, biases) = m.layers();
                writeln!(out, "layers\t{}", weights.len()).unwrap();
                for (i, (w, b)) in weights.iter().zip(biases).enumerate() {
                    write_tensor(&mut out, &format!("w{i}"), w.nrows(), w.ncols(), w.as_slice());
                    write_tensor(&mut out, &format!("b{i}"), b.len(), 1, b.as_slice());
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let kind = field(&mut lines, "kind")?;
        match kind.as_str() {
            "linear" => {
                let input: usize = parse(&field(&mut lines, "input")?)?;
                let rank: usize = parse(&field(&mut lines, "rank")?)?;
                let intercept: f64 = parse(&field(&mut lines, "intercept")?)?;
                let (rows, _cols, data) = read_tensor(&mut lines, "weights")?;
                if rows != input {
                    return Err(RegressError::Parse(format!(
                        "weight count {rows} disagrees with input {input}"
                    )));
                }
                Ok(RewardModel::Linear(LinearModel::from_parts(
                    DVector::from_vec(data),
                    intercept,
                    rank,
                )))
            }
            "mlp" => {
                let input: usize = parse(&field(&mut lines, "input")?)?;
                let hyper = field(&mut lines, "hyper")?;
                let parts: Vec<&str> = hyper.split('\t').collect();
                if parts.len() != 3 {
                    return Err(RegressError::Parse("hyper line must have 3 fields".into()));
                }
                let learning_rate: f64 = parse(parts[0])?;
                let l2: f64 = parse(parts[1])?;
                let batch_size: usize = parse(parts[2])?;
                let n_layers: usize = parse(&field(&mut lines, "layers")?)?;
                let mut weights = Vec::with_capacity(n_layers);
                let mut biases = Vec::with_capacity(n_layers);
                for i in 0..n_layers {
                    let (rows, cols, data) = read_tensor(&mut lines, &format!("w{i}"))?;
                    weights.push(DMatrix::from_column_slice(rows, cols, &data));
                    let (rows, _, data) = read_tensor(&mut lines, &format!("b{i}"))?;
                    biases.push(DVector::from_vec(data[..rows].to_vec()));
                }
                let model = MlpModel::from_parts(weights, biases, learning_rate, l2, batch_size);
                if model.input_dim() != input {
                    return Err(RegressError::Parse(format!(
                        "first layer consumes {} features, header says {input}",
                        model.input_dim()
                    )));
                }
                Ok(RewardModel::Mlp(model))
            }
            other => Err(RegressError::Parse(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint())?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_checkpoint(&text)
    }
}

fn write_tensor(out: &mut String, name: &str, rows: usize, cols: usize, data: &[f64]) {
    writeln!(out, "tensor\t{name}\t{rows}\t{cols}").unwrap();
    let mut first = true;
    for v in data {
        if !first {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
        first = false;
    }
    out.push('\n');
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<String> {
    let line = lines
        .next()
        .ok_or_else(|| RegressError::Parse(format!("missing {name} line")))?;
    let (key, value) = line
        .split_once('\t')
        .ok_or_else(|| RegressError::Parse(format!("malformed {name} line: {line:?}")))?;
    if key != name {
        return Err(RegressError::Parse(format!("expected {name} line, found {key:?}")));
    }
    Ok(value.to_string())
}

fn read_tensor<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    name: &str,
) -> Result<(usize, usize, Vec<f64>)> {
    let header = field(lines, "tensor")?;
    let parts: Vec<&str> = header.split('\t').collect();
    if parts.len() != 3 || parts[0] != name {
        return Err(RegressError::Parse(format!("expected tensor {name}, found {header:?}")));
    }
    let rows: usize = parse(parts[1])?;
    let cols: usize = parse(parts[2])?;
    let data_line = lines
        .next()
        .ok_or_else(|| RegressError::Parse(format!("tensor {name} is missing its data")))?;
    let data: Vec<f64> = if rows * cols == 0 {
        Vec::new()
    } else {
        data_line
            .split_whitespace()
            .map(|t| parse::<f64>(t))
            .collect::<Result<_>>()?
    };
    if data.len() != rows * cols {
        return Err(RegressError::Parse(format!(
            "tensor {name} declares {} entries but carries {}",
            rows * cols,
            data.len()
        )));
    }
    Ok((rows, cols, data))
}

fn parse<T: std::str::FromStr>(token: &str) -> Result<T> {
    token
        .trim()
        .parse()
        .map_err(|_| RegressError::Parse(format!("could not parse {token:?}")))
}

/// The endogenous reward of one transition: the raw reward minus the model's
/// estimate on the exogenous coordinates of the state where the action was
/// taken. Dimensions must agree (the model consumes `d_exo` features).
pub fn endo_reward(model: &RewardModel, projection: &ExoProjection, s: &DVector<f64>, r: f64) -> f64 {
    assert_eq!(
        s.len(),
        projection.d(),
        "state dimension disagrees with the projection"
    );
    assert_eq!(
        model.input_dim(),
        projection.d_exo(),
        "model feature count disagrees with the subspace rank"
    );
    r - model.predict(&projection.coordinates(s))
}
