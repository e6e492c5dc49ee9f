//! Run-configuration and mask file formats.

use std::path::Path;

use cfi_core::{ChainConfig, ObjectMask, ObjectModel};
use serde::{Deserialize, Serialize};

use crate::pgm;
use crate::CliError;

/// JSON run configuration.
///
/// Either `transmissivities` or the `t` shorthand (equal transmissivity at
/// every stage) must be present; `n_stages` is required with `t` and
/// cross-checked otherwise. `segment_lengths` defaults to one time bin per
/// segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_stages: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmissivities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_lengths: Option<Vec<u32>>,
    #[serde(default)]
    pub bs_loss: f64,
    #[serde(default)]
    pub mirror_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm_losses: Option<Vec<f64>>,
    pub object: ObjectModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_photons")]
    pub photons: u32,
}

fn default_photons() -> u32 {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
    }

    /// Lower to a validated chain configuration plus object.
    pub fn chain(&self) -> Result<(ChainConfig, ObjectModel), CliError> {
        let transmissivities = match (&self.transmissivities, self.t) {
            (Some(list), None) => list.clone(),
            (None, Some(t)) => {
                let n = self
                    .n_stages
                    .ok_or_else(|| CliError::Input("the t shorthand requires n_stages".into()))?;
                vec![t; n]
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Input(
                    "give either transmissivities or the t shorthand, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Input(
                    "config needs transmissivities or the t shorthand".into(),
                ))
            }
        };
        let n = transmissivities.len();
        if let Some(declared) = self.n_stages {
            if declared != n {
                return Err(CliError::Input(format!(
                    "n_stages = {declared} disagrees with {n} transmissivities"
                )));
            }
        }
        let config = ChainConfig {
            n_stages: n,
            transmissivities,
            segment_lengths: self.segment_lengths.clone().unwrap_or_else(|| vec![1; n]),
            bs_loss: self.bs_loss,
            mirror_loss: self.mirror_loss,
            arm_losses: self.arm_losses.clone(),
        };
        config.validate().map_err(CliError::input)?;
        config
            .validate_object(&self.object)
            .map_err(CliError::input)?;
        Ok((config, self.object))
    }
}

/// Load a mask from JSON, or from the ASCII PGM shorthand where
/// 0 -> absorbing, 255 -> absent, 128 -> reflective offset 1.
pub fn load_mask(path: &Path) -> Result<ObjectMask, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mask = if text.trim_start().starts_with("P2") {
        let image = pgm::parse(&text)
            .map_err(|e| CliError::Input(format!("invalid PGM mask {}: {e}", path.display())))?;
        if image.maxval != 255 {
            return Err(CliError::Input(format!(
                "PGM masks use maxval 255, got {}",
                image.maxval
            )));
        }
        let cells = image
            .pixels
            .iter()
            .map(|&v| match v {
                0 => Ok(ObjectModel::Absorbing),
                255 => Ok(ObjectModel::Absent),
                128 => Ok(ObjectModel::Reflective { offset_bins: 1 }),
                other => Err(CliError::Input(format!(
                    "PGM mask value {other} has no object meaning (use 0, 128 or 255)"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        ObjectMask {
            width: image.width,
            height: image.height,
            cells,
        }
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid mask {}: {e}", path.display())))?
    };
    mask.validate().map_err(CliError::input)?;
    Ok(mask)
}
