//! Short-term flow forecasts `X_{t+q}` feeding the anticipatory toll.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LINEAR_WINDOW: usize = 5;
pub const DEFAULT_AVERAGE_WINDOW: usize = 3;

/// Per-route flow samples `X_0..X_t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowHistory(Vec<f64>);

impl FlowHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, flow: f64) {
        self.0.push(flow.max(0.0));
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn last(&self) -> Result<f64> {
        self.0.last().copied().ok_or(Error::EmptyHistory)
    }
}

impl From<Vec<f64>> for FlowHistory {
    fn from(samples: Vec<f64>) -> Self {
        FlowHistory(samples.into_iter().map(|x| x.max(0.0)).collect())
    }
}

/// Anything that can forecast flow `q` steps ahead from a history.
pub trait FlowPredictor {
    fn predict(&self, history: &FlowHistory, horizon: u32) -> Result<f64>;
}

/// Built-in baseline forecasters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predictor {
    /// Carry the last sample forward.
    #[default]
    Persistence,
    /// Least-squares line over the trailing window, evaluated `q` steps past
    /// the last sample. Falls back to persistence until the window fills.
    Linear {
        #[serde(default = "default_linear_window")]
        window: usize,
    },
    /// Mean of the trailing window (or of all samples while shorter).
    MovingAverage {
        #[serde(default = "default_average_window")]
        window: usize,
    },
}

fn default_linear_window() -> usize {
    DEFAULT_LINEAR_WINDOW
}

fn default_average_window() -> usize {
    DEFAULT_AVERAGE_WINDOW
}

impl Predictor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Predictor::Persistence => Ok(()),
            Predictor::Linear { window } if window < 2 => {
                Err(Error::InvalidConfig("linear predictor window must be >= 2".into()))
            }
            Predictor::MovingAverage { window } if window < 1 => {
                Err(Error::InvalidConfig("moving-average window must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl FlowPredictor for Predictor {
    fn predict(&self, history: &FlowHistory, horizon: u32) -> Result<f64> {
        if horizon < 1 {
            return Err(Error::ZeroHorizon);
        }
        let last = history.last()?;
        let samples = history.samples();
        let forecast = match *self {
            Predictor::Persistence => last,
            Predictor::Linear { window } => {
                if samples.len() < window {
                    last
                } else {
                    linear_extrapolate(&samples[samples.len() - window..], horizon)
                }
            }
            Predictor::MovingAverage { window } => {
                let tail = &samples[samples.len().saturating_sub(window)..];
                tail.iter().sum::<f64>() / tail.len() as f64
            }
        };
        Ok(forecast.max(0.0))
    }
}

fn linear_extrapolate(tail: &[f64], horizon: u32) -> f64 {
    let n = tail.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = tail.iter().sum::<f64>() / n;
    let (sxy, sxx) = tail.iter().enumerate().fold((0.0, 0.0), |(sxy, sxx), (i, &y)| {
        let dx = i as f64 - mean_x;
        (sxy + dx * (y - mean_y), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    let x = n - 1.0 + f64::from(horizon);
    mean_y + slope * (x - mean_x)
}
