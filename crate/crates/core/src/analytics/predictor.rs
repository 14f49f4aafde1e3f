use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// How the per-hop shrink term is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusReading {
    /// Subtract `1 / (2 λ)`, taken literally.
    Printed,
    /// Subtract `1 / (2 √λ)`, half the mean spacing between users.
    SqrtDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorInputs {
    pub group_prob: f64,
    /// Users per square meter.
    pub lambda: f64,
    pub tx_radius: f64,
    pub source_ttl: u32,
    pub reading: RadiusReading,
    /// Keep the exponent's positive sign. The result then leaves `[0, 1]`
    /// and is only useful for showing that it does.
    pub positive_exponent: bool,
}

impl PredictorInputs {
    /// Inputs for `users` spread uniformly over a disk of `region_radius`.
    pub fn for_disk(users: u32, region_radius: f64, tx_radius: f64, group_prob: f64, source_ttl: u32) -> Self {
        PredictorInputs {
            group_prob,
            lambda: f64::from(users) / (PI * region_radius * region_radius),
            tx_radius,
            source_ttl,
            reading: RadiusReading::Printed,
            positive_exponent: false,
        }
    }

    pub fn with_reading(mut self, reading: RadiusReading) -> Self {
        self.reading = reading;
        self
    }

    /// Distance one hop is expected to advance, never negative.
    pub fn effective_hop(&self) -> f64 {
        let shrink = match self.reading {
            RadiusReading::Printed => 1.0 / (2.0 * self.lambda),
            RadiusReading::SqrtDensity => 1.0 / (2.0 * self.lambda.sqrt()),
        };
        (self.tx_radius - shrink).max(0.0)
    }
}

/// Expected fraction of group members reached by discovery:
/// `1 - exp(-P_g λ π (r_eff T)^2)`.
pub fn predict_discovery_fraction(inputs: &PredictorInputs) -> f64 {
    let reach = inputs.effective_hop() * f64::from(inputs.source_ttl);
    let exponent = inputs.group_prob * inputs.lambda * PI * reach * reach;
    if inputs.positive_exponent {
        1.0 - exponent.exp()
    } else {
        1.0 - (-exponent).exp()
    }
}
