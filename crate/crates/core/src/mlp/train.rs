use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval;
use crate::matrix::Matrix;
use crate::rng;

use super::{
    backward, cross_entropy_loss, forward, l2_penalty, objective, one_hot, optimizer_step,
    softmax_rows, Architecture, MlpModel, MlpParams, OptimizerKind, OptimizerState,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 strength λ.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lambda: 0.0,
            epochs: 50,
            batch_size: 32,
            seed: 17,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed and leaves the weights frozen
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs and batch size must be >= 1".into(),
            ));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Per-epoch objective and accuracy over the full training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// J before the first update.
    pub initial_loss: f64,
    pub initial_accuracy: f64,
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_accuracy: Option<Vec<f64>>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        *self.loss.last().expect("at least one epoch")
    }

    pub fn final_accuracy(&self) -> f64 {
        *self.accuracy.last().expect("at least one epoch")
    }

    /// `epoch,loss,accuracy[,val_loss,val_accuracy]`, epochs numbered from 1.
    pub fn to_csv(&self) -> String {
        let with_val = self.val_loss.is_some() && self.val_accuracy.is_some();
        let mut out = String::from("epoch,loss,accuracy");
        if with_val {
            out.push_str(",val_loss,val_accuracy");
        }
        out.push('\n');
        for (e, (l, a)) in self.loss.iter().zip(&self.accuracy).enumerate() {
            out.push_str(&format!("{},{l},{a}", e + 1));
            if with_val {
                let vl = self.val_loss.as_ref().unwrap()[e];
                let va = self.val_accuracy.as_ref().unwrap()[e];
                out.push_str(&format!(",{vl},{va}"));
            }
            out.push('\n');
        }
        out
    }
}

struct Evaluator<'a> {
    x: &'a Matrix,
    y: Matrix,
    data: &'a Dataset,
}

impl<'a> Evaluator<'a> {
    fn new(data: &'a Dataset, num_classes: usize) -> Result<Self> {
        Ok(Self {
            x: data.features(),
            y: one_hot(data.labels(), num_classes)?,
            data,
        })
    }

    /// (J, accuracy) on the whole table.
    fn measure(&self, model: &MlpModel, lambda: f64) -> Result<(f64, f64)> {
        let cache = model.forward(self.x)?;
        let probs = softmax_rows(&cache.logits);
        let loss = objective(
            cross_entropy_loss(&probs, &self.y)?,
            l2_penalty(&model.params, lambda),
        );
        let predicted: Vec<_> = probs
            .iter_rows()
            .map(|p| crate::dataset::ClassLabel(super::argmax(p) as u8))
            .collect();
        Ok((loss, eval::accuracy(&predicted, self.data.labels())?))
    }
}

pub fn train(
    train: &Dataset,
    architecture: &Architecture,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    train_with_validation(train, None, architecture, config)
}

/// Mini-batch training. Batch order is reshuffled every epoch from a seed
/// derived from `config.seed` and the epoch index.
pub fn train_with_validation(
    train: &Dataset,
    validation: Option<&Dataset>,
    architecture: &Architecture,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    architecture.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    if train.dim() != architecture.input_dim {
        return Err(Error::DimensionMismatch {
            expected: architecture.input_dim,
            actual: train.dim(),
        });
    }
    let q = architecture.output_dim;
    let activation = architecture.hidden_activation;
    let train_eval = Evaluator::new(train, q)?;
    let val_eval = validation.map(|v| Evaluator::new(v, q)).transpose()?;

    let params = MlpParams::init(architecture, rng::derive_seed(config.seed, &[0]))?;
    let mut model = MlpModel {
        architecture: architecture.clone(),
        params,
        optimizer: config.optimizer,
        seed: config.seed,
    };
    let mut state = OptimizerState::new(config.optimizer, &model.params);

    let (initial_loss, initial_accuracy) = train_eval.measure(&model, config.lambda)?;
    let mut history = TrainHistory {
        initial_loss,
        initial_accuracy,
        loss: Vec::with_capacity(config.epochs),
        accuracy: Vec::with_capacity(config.epochs),
        val_loss: val_eval.as_ref().map(|_| Vec::with_capacity(config.epochs)),
        val_accuracy: val_eval.as_ref().map(|_| Vec::with_capacity(config.epochs)),
    };

    let n = train.len();
    for epoch in 0..config.epochs {
        let order = rng::permutation(n, rng::derive_seed(config.seed, &[1, epoch as u64]));
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let abort = |_| Error::NonFiniteLoss {
                epoch: epoch + 1,
                batch: batch + 1,
            };
            let xb = train_eval.x.select_rows(idx);
            let yb = train_eval.y.select_rows(idx);
            let cache = forward(&model.params, activation, &xb).map_err(abort)?;
            let loss = cross_entropy_loss(&softmax_rows(&cache.logits), &yb)?
                + l2_penalty(&model.params, config.lambda);
            if !loss.is_finite() {
                return Err(abort(Error::NonFinite("loss")));
            }
            let grads = backward(&model.params, activation, &cache, &yb, config.lambda)?;
            optimizer_step(&mut model.params, &grads, &mut state, config);
        }
        let (loss, acc) =
            train_eval
                .measure(&model, config.lambda)
                .map_err(|_| Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: 0,
                })?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: epoch + 1,
                batch: 0,
            });
        }
        history.loss.push(loss);
        history.accuracy.push(acc);
        if let Some(v) = &val_eval {
            let (vl, va) = v.measure(&model, config.lambda)?;
            history.val_loss.as_mut().unwrap().push(vl);
            history.val_accuracy.as_mut().unwrap().push(va);
        }
    }
    Ok((model, history))
}
