use serde::{Deserialize, Serialize};

use super::{Gradients, MlpParams, TrainConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        }
    }
}

/// Per-parameter optimizer memory. Adam keeps first/second moments in the
/// order of [`MlpParams::values`].
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &MlpParams) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => {
                let n = params.num_params();
                OptimizerState::Adam {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                    t: 0,
                }
            }
        }
    }
}

/// Applies one update in place.
///
/// SGD: `w ← w − lr·g`. Adam: `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`,
/// then `w ← w − lr·m̂/(√v̂ + ε)` with `m̂ = m/(1−β₁ᵗ)`, `v̂ = v/(1−β₂ᵗ)`.
pub fn optimizer_step(
    params: &mut MlpParams,
    gradients: &Gradients,
    state: &mut OptimizerState,
    config: &TrainConfig,
) {
    let lr = config.learning_rate;
    match state {
        OptimizerState::Sgd => {
            for (w, g) in params.values_mut().zip(gradients.values()) {
                *w -= lr * g;
            }
        }
        OptimizerState::Adam { m, v, t } => {
            *t += 1;
            let (b1, b2) = (config.beta1, config.beta2);
            let c1 = 1.0 - b1.powi(*t as i32);
            let c2 = 1.0 - b2.powi(*t as i32);
            for (((w, g), mi), vi) in params
                .values_mut()
                .zip(gradients.values())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = b1 * *mi + (1.0 - b1) * g;
                *vi = b2 * *vi + (1.0 - b2) * g * g;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }
}
