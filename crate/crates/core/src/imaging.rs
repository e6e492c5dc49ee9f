//! Monte Carlo raster-scan imaging harness.
//!
//! Each pixel of an [`ObjectMask`] is probed with `m` photons drawn from the
//! exact outcome distribution of the configured chain against that pixel's
//! object. A pixel is declared present when at least one photon clicks any
//! detector. Per-pixel random streams are independent counter-based
//! generators seeded from the run seed and the pixel index, so results are
//! bit-identical regardless of evaluation order or thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{simulate, ChainConfig, ObjectModel, OutcomeDistribution};
use crate::error::{Error, Result};

/// Terminal outcome of a single sampled photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonOutcome {
    Detector(usize),
    Source,
    Object,
    Loss,
}

/// Draw one outcome from an exact distribution.
///
/// Outcomes are laid out in detector order, then source, object, loss; any
/// rounding residue falls into the loss bucket.
pub fn sample_photon<R: Rng + ?Sized>(
    distribution: &OutcomeDistribution,
    rng: &mut R,
) -> Result<PhotonOutcome> {
    distribution.validate(1e-9).map_err(|e| {
        Error::MalformedDistribution(format!("sample_photon rejected its input: {e}"))
    })?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in distribution.p_detector.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(PhotonOutcome::Detector(i));
        }
    }
    acc += distribution.p_source;
    if u < acc {
        return Ok(PhotonOutcome::Source);
    }
    acc += distribution.p_object;
    if u < acc {
        return Ok(PhotonOutcome::Object);
    }
    Ok(PhotonOutcome::Loss)
}

/// Independent counter-based stream for one pixel.
///
/// Streams are decorrelated by folding the pixel index through a large odd
/// multiplier before seeding.
pub fn pixel_stream(seed: u64, pixel_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ pixel_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Rectangular grid of per-pixel objects, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<ObjectModel>,
}

impl ObjectMask {
    /// Mask with every cell set to the same object.
    pub fn filled(width: usize, height: usize, cell: ObjectModel) -> Self {
        ObjectMask {
            width,
            height,
            cells: vec![cell; width * height],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::domain("mask dimensions must be positive"));
        }
        if self.cells.len() != self.width * self.height {
            return Err(Error::domain(format!(
                "mask has {} cells, expected {}x{} = {}",
                self.cells.len(),
                self.width,
                self.height,
                self.width * self.height
            )));
        }
        Ok(())
    }

    pub fn get(&self, x: usize, y: usize) -> &ObjectModel {
        &self.cells[y * self.width + x]
    }
}

/// One imaging run: chain configuration, photons per pixel, base seed.
/// The decision rule is fixed: present iff at least one detector click
/// among the `m` photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingRun {
    pub config: ChainConfig,
    pub photons_per_pixel: u32,
    pub seed: u64,
}

/// Aggregate statistics of one imaging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Pixels with an object present (anything but `Absent`) that produced
    /// no click.
    pub false_negatives: u64,
    /// `Absent` pixels that produced a click.
    pub false_positives: u64,
    /// Photons absorbed by objects, summed over the grid.
    pub total_absorbed: u64,
    /// Photons that returned to the source, tracked separately from the
    /// object dose.
    pub total_source_returns: u64,
    /// Photons lost in the optics.
    pub total_lost: u64,
    /// Clicks per detector stage, summed over the grid.
    pub per_detector_clicks: Vec<u64>,
}

/// Full result grids of an imaging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingResult {
    pub width: usize,
    pub height: usize,
    /// Presence decision per pixel.
    pub detection_image: Vec<bool>,
    /// Number of photons (of `m`) that clicked any detector, per pixel.
    pub click_counts: Vec<u32>,
    /// Number of photons absorbed by the object, per pixel.
    pub dose_map: Vec<u32>,
    pub stats: RunStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ModelKey {
    Absent,
    Absorbing,
    Reflective(u32),
    Phase(u64, u64),
}

impl ModelKey {
    fn of(model: &ObjectModel) -> Self {
        match *model {
            ObjectModel::Absent => ModelKey::Absent,
            ObjectModel::Absorbing => ModelKey::Absorbing,
            ObjectModel::Reflective { offset_bins } => ModelKey::Reflective(offset_bins),
            ObjectModel::Phase { phi, tau } => ModelKey::Phase(phi.to_bits(), tau.to_bits()),
        }
    }
}

struct PixelTally {
    clicks: u32,
    dose: u32,
    source: u32,
    lost: u32,
    per_detector: Vec<u32>,
}

/// Image an object mask: one exact distribution per distinct cell object
/// (memoized), `m` sampled photons per pixel, deterministic for a given
/// `(mask, run)` independent of parallelism.
pub fn image_mask(mask: &ObjectMask, run: &ImagingRun) -> Result<ImagingResult> {
    mask.validate()?;
    run.config.validate()?;
    if run.photons_per_pixel < 1 {
        return Err(Error::domain("photons_per_pixel must be at least 1"));
    }

    // One simulate() per distinct object; pixels share distributions.
    let mut distributions: BTreeMap<ModelKey, OutcomeDistribution> = BTreeMap::new();
    for (idx, cell) in mask.cells.iter().enumerate() {
        if let std::collections::btree_map::Entry::Vacant(slot) =
            distributions.entry(ModelKey::of(cell))
        {
            let dist = simulate(&run.config, cell)
                .map_err(|e| e.at_pixel(idx % mask.width, idx / mask.width))?;
            slot.insert(dist);
        }
    }

    let n_detectors = run.config.n_stages;
    let m = run.photons_per_pixel;
    let tallies: Vec<PixelTally> = (0..mask.cells.len())
        .into_par_iter()
        .map(|idx| {
            let dist = &distributions[&ModelKey::of(&mask.cells[idx])];
            let mut rng = pixel_stream(run.seed, idx as u64);
            let mut tally = PixelTally {
                clicks: 0,
                dose: 0,
                source: 0,
                lost: 0,
                per_detector: vec![0; n_detectors],
            };
            for _ in 0..m {
                match sample_photon(dist, &mut rng).expect("distribution validated above") {
                    PhotonOutcome::Detector(d) => {
                        tally.clicks += 1;
                        tally.per_detector[d] += 1;
                    }
                    PhotonOutcome::Source => tally.source += 1,
                    PhotonOutcome::Object => tally.dose += 1,
                    PhotonOutcome::Loss => tally.lost += 1,
                }
            }
            tally
        })
        .collect();

    let mut stats = RunStats {
        false_negatives: 0,
        false_positives: 0,
        total_absorbed: 0,
        total_source_returns: 0,
        total_lost: 0,
        per_detector_clicks: vec![0; n_detectors],
    };
    let mut detection_image = Vec::with_capacity(tallies.len());
    let mut click_counts = Vec::with_capacity(tallies.len());
    let mut dose_map = Vec::with_capacity(tallies.len());
    for (idx, tally) in tallies.iter().enumerate() {
        let detected = tally.clicks > 0;
        let present = !matches!(mask.cells[idx], ObjectModel::Absent);
        match (present, detected) {
            (true, false) => stats.false_negatives += 1,
            (false, true) => stats.false_positives += 1,
            _ => {}
        }
        stats.total_absorbed += u64::from(tally.dose);
        stats.total_source_returns += u64::from(tally.source);
        stats.total_lost += u64::from(tally.lost);
        for (agg, &c) in stats
            .per_detector_clicks
            .iter_mut()
            .zip(&tally.per_detector)
        {
            *agg += u64::from(c);
        }
        detection_image.push(detected);
        click_counts.push(tally.clicks);
        dose_map.push(tally.dose);
    }

    Ok(ImagingResult {
        width: mask.width,
        height: mask.height,
        detection_image,
        click_counts,
        dose_map,
        stats,
    })
}
