//! Exhaustive classical-path oracle.
//!
//! Every reflect/transmit history through the splitter chain is enumerated by
//! depth-first walk, carrying its exact amplitude (products of `sqrt(t)`,
//! `-i*sqrt(r)`, retarder, mirror and loss factors) and its arrival time bin.
//! Histories are then grouped: when the object returns the probe at the
//! designed bin the recombination chain is intact, every history shares its
//! terminal's designed bin, and amplitudes are summed per `(terminal, bin)`
//! group before squaring; when the chain is broken each history propagates
//! incoherently and contributes its squared modulus on its own. The result
//! must match [`super::simulate`] elementwise.
//!
//! The walk is quadratic in the stage count, but the guard is kept at a
//! deliberately small stage limit per the operation's contract.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{ChainConfig, ObjectModel, OutcomeDistribution};
use crate::error::{Error, Result};

/// Largest `n_stages` the oracle accepts.
pub const ORACLE_MAX_STAGES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Terminal {
    Source,
    Detector(usize),
    Object,
}

struct Collector {
    coherent: bool,
    groups: BTreeMap<(Terminal, u64), Complex64>,
    p_source: f64,
    p_detector: Vec<f64>,
    p_object: f64,
}

impl Collector {
    fn record(&mut self, terminal: Terminal, bin: u64, amp: Complex64) {
        if self.coherent {
            *self
                .groups
                .entry((terminal, bin))
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
        } else {
            self.add_prob(terminal, amp.norm_sqr());
        }
    }

    fn add_prob(&mut self, terminal: Terminal, p: f64) {
        match terminal {
            Terminal::Source => self.p_source += p,
            Terminal::Detector(i) => self.p_detector[i] += p,
            Terminal::Object => self.p_object += p,
        }
    }

    fn finish(mut self) -> OutcomeDistribution {
        let groups = std::mem::take(&mut self.groups);
        for ((terminal, _), amp) in groups {
            self.add_prob(terminal, amp.norm_sqr());
        }
        let consumed = self.p_source + self.p_object + self.p_detector.iter().sum::<f64>();
        OutcomeDistribution {
            p_detector: self.p_detector,
            p_source: self.p_source,
            p_object: self.p_object,
            p_loss: (1.0 - consumed).max(0.0),
        }
    }
}

struct Walker<'a> {
    config: &'a ChainConfig,
    object: &'a ObjectModel,
    lf: f64,
    mirror: f64,
}

impl Walker<'_> {
    fn straight(&self, stage: usize) -> Complex64 {
        Complex64::new(self.config.transmissivities[stage].sqrt() * self.lf, 0.0)
    }

    fn reflected(&self, stage: usize) -> Complex64 {
        Complex64::new(
            0.0,
            -(1.0 - self.config.transmissivities[stage]).sqrt() * self.lf,
        )
    }

    /// Outgoing walk: arriving at `stage` from the source side.
    fn outgoing(&self, stage: usize, amp: Complex64, bin: u64, out: &mut Collector) {
        // Branch 1: reflect up, round-trip the arm (two retarder passes and
        // one mirror bounce fold into a real factor of -1 times the losses),
        // come back down.
        let arm_factor =
            -((1.0 - self.config.mirror_loss) * (1.0 - self.config.arm_loss(stage))).sqrt();
        self.returning(
            stage,
            amp * self.reflected(stage) * arm_factor,
            bin + self.config.arm_roundtrip(stage),
            true,
            out,
        );

        // Branch 2: transmit onward.
        let next = amp * self.straight(stage);
        let seg = u64::from(self.config.segment_lengths[stage]);
        if stage + 1 < self.config.n_stages {
            self.outgoing(stage + 1, next, bin + seg, out);
            return;
        }
        match *self.object {
            ObjectModel::Absent => {
                self.returning(stage, next * self.mirror, bin + 2 * seg, false, out);
            }
            ObjectModel::Absorbing => {
                out.record(Terminal::Object, bin + seg, next);
            }
            ObjectModel::Reflective { offset_bins } => {
                let roundtrip = 2 * (seg - u64::from(offset_bins));
                self.returning(stage, next * self.mirror, bin + roundtrip, false, out);
            }
            ObjectModel::Phase { phi, tau } => {
                let pass = Complex64::from_polar(tau.sqrt(), phi);
                // Absorbed weight per pass, accumulated directly: the trunk
                // prefix is the only route to the object.
                let reach = next.norm_sqr();
                out.p_object += reach * (1.0 - tau) * (1.0 + tau * (1.0 - self.config.mirror_loss));
                let back = next * pass * self.mirror * pass;
                if back != Complex64::new(0.0, 0.0) {
                    self.returning(stage, back, bin + 2 * seg, false, out);
                }
            }
        }
    }

    /// Return cascade: arriving at `stage` either from its arm or from the
    /// object side of the trunk.
    fn returning(
        &self,
        stage: usize,
        amp: Complex64,
        bin: u64,
        from_arm: bool,
        out: &mut Collector,
    ) {
        let (down, left) = if from_arm {
            (self.straight(stage), self.reflected(stage))
        } else {
            (self.reflected(stage), self.straight(stage))
        };
        out.record(Terminal::Detector(stage), bin, amp * down);
        let leftward = amp * left;
        if stage == 0 {
            out.record(Terminal::Source, bin, leftward);
        } else {
            let travel = u64::from(self.config.segment_lengths[stage - 1]);
            self.returning(stage - 1, leftward, bin + travel, false, out);
        }
    }
}

/// Outcome distribution by explicit history enumeration; the independent
/// cross-check for [`super::simulate`].
pub fn enumerate_paths_oracle(
    config: &ChainConfig,
    object: &ObjectModel,
) -> Result<OutcomeDistribution> {
    config.validate()?;
    config.validate_object(object)?;
    if config.n_stages > ORACLE_MAX_STAGES {
        return Err(Error::OracleGuard {
            n: config.n_stages,
            max: ORACLE_MAX_STAGES,
        });
    }

    let mut collector = Collector {
        coherent: object.returns_coherently(),
        groups: BTreeMap::new(),
        p_source: 0.0,
        p_detector: vec![0.0; config.n_stages],
        p_object: 0.0,
    };
    let walker = Walker {
        config,
        object,
        lf: (1.0 - config.bs_loss).sqrt(),
        mirror: (1.0 - config.mirror_loss).sqrt(),
    };
    walker.outgoing(0, Complex64::new(1.0, 0.0), 0, &mut collector);
    let dist = collector.finish();
    dist.validate(1e-12)?;
    Ok(dist)
}
