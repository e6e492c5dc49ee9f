//! Event-driven time-bin propagation engine.
//!
//! Arrivals are keyed by `(time_bin, stage, port, pairing token)` in an
//! ordered queue; same-key amplitudes accumulate on insertion. Processing a
//! bin applies the four-port splitter unitary once per pairing token present
//! at that splitter, so recombination partners interfere through the unitary
//! while unrelated packets pass through independently.
//!
//! Pairing lifecycle: a split of a left-input packet allocates a fresh token
//! carried by both children (arm and trunk); when both children return to
//! their splitter in the same bin, the merged left output is restored to the
//! parent token, chaining the recombination outward. A child that returns
//! alone spawns detached tokens, and detached packets never interfere again.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    qwp_phase, ChainConfig, ObjectModel, OutcomeDistribution, PacketDirection, SegmentId,
    WavePacket,
};
use crate::error::{Error, Result};

/// Port of a splitter at which a packet arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Port {
    Left = 0,
    Right = 1,
    Arm = 2,
}

type Key = (u64, usize, u64, Port); // (bin, stage, token, port)

const DETACHED: u64 = u64::MAX;

struct Engine<'a> {
    config: &'a ChainConfig,
    object: &'a ObjectModel,
    queue: BTreeMap<Key, Complex64>,
    /// parent[token] = token the merged packet is restored to.
    parents: Vec<u64>,
    p_detector: Vec<f64>,
    p_source: f64,
    p_object: f64,
    terminals: Vec<WavePacket>,
    bound: u64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a ChainConfig, object: &'a ObjectModel) -> Self {
        let n = config.n_stages;
        let total_len: u64 = config
            .segment_lengths
            .iter()
            .map(|&l| u64::from(l))
            .sum::<u64>()
            + (0..n).map(|i| config.trunk_to_end(i)).sum::<u64>();
        Engine {
            config,
            object,
            queue: BTreeMap::new(),
            parents: Vec::new(),
            p_detector: vec![0.0; n],
            p_source: 0.0,
            p_object: 0.0,
            terminals: Vec::new(),
            bound: 16 * total_len.max(1) * n as u64,
        }
    }

    fn push(&mut self, bin: u64, stage: usize, port: Port, token: u64, amp: Complex64) {
        if amp == Complex64::new(0.0, 0.0) {
            return;
        }
        *self
            .queue
            .entry((bin, stage, token, port))
            .or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    fn fresh_token(&mut self, parent: u64) -> u64 {
        self.parents.push(parent);
        (self.parents.len() - 1) as u64
    }

    fn parent_of(&self, token: u64) -> u64 {
        if token == DETACHED {
            DETACHED
        } else {
            self.parents[token as usize]
        }
    }

    fn record_terminal(&mut self, node: SegmentId, bin: u64, amp: Complex64) {
        if amp == Complex64::new(0.0, 0.0) {
            return;
        }
        let p = amp.norm_sqr();
        let direction = match node {
            SegmentId::Source => {
                self.p_source += p;
                PacketDirection::Returning
            }
            SegmentId::Detector(i) => {
                self.p_detector[i] += p;
                PacketDirection::Returning
            }
            // Absorption happens on the outgoing pass.
            SegmentId::Object => {
                self.p_object += p;
                PacketDirection::Outgoing
            }
            _ => unreachable!("trunk/arm nodes are not terminals"),
        };
        self.terminals.push(WavePacket {
            node,
            direction,
            time_bin: bin,
            amplitude: amp,
            pairing: DETACHED,
        });
    }

    /// Send the left output of stage `stage` on its way.
    fn emit_left(&mut self, stage: usize, bin: u64, token: u64, amp: Complex64) {
        if stage == 0 {
            self.record_terminal(SegmentId::Source, bin, amp);
        } else {
            let travel = u64::from(self.config.segment_lengths[stage - 1]);
            self.push(bin + travel, stage - 1, Port::Right, token, amp);
        }
    }

    /// Send the right output onward: into the next trunk segment, or into
    /// the final segment where the object (or end mirror) acts on it.
    fn emit_right(&mut self, stage: usize, bin: u64, token: u64, amp: Complex64) {
        let n = self.config.n_stages;
        let seg = u64::from(self.config.segment_lengths[stage]);
        if stage + 1 < n {
            self.push(bin + seg, stage + 1, Port::Left, token, amp);
            return;
        }
        // Final segment: interact with the object model.
        let mirror_amp = (1.0 - self.config.mirror_loss).sqrt();
        match *self.object {
            ObjectModel::Absent => {
                self.push(bin + 2 * seg, stage, Port::Right, token, amp * mirror_amp);
            }
            ObjectModel::Absorbing => {
                self.record_terminal(SegmentId::Object, bin + seg, amp);
            }
            ObjectModel::Reflective { offset_bins } => {
                let roundtrip = 2 * (seg - u64::from(offset_bins));
                self.push(bin + roundtrip, stage, Port::Right, token, amp * mirror_amp);
            }
            ObjectModel::Phase { phi, tau } => {
                // Two passes, each imparting sqrt(tau)*e^{i phi}; the
                // absorbed weight per pass is credited to the object.
                let pass = Complex64::from_polar(tau.sqrt(), phi);
                self.p_object += amp.norm_sqr() * (1.0 - tau);
                let after_mirror = amp * pass * mirror_amp;
                self.p_object += after_mirror.norm_sqr() * (1.0 - tau);
                self.push(
                    bin + 2 * seg,
                    stage,
                    Port::Right,
                    token,
                    after_mirror * pass,
                );
            }
        }
    }

    /// Send the arm output up and schedule its return: two retarder passes,
    /// one mirror bounce, optional per-arm extra loss.
    fn emit_arm(&mut self, stage: usize, bin: u64, token: u64, amp: Complex64) {
        let roundtrip = self.config.arm_roundtrip(stage);
        let factor = ((1.0 - self.config.mirror_loss) * (1.0 - self.config.arm_loss(stage))).sqrt();
        let returned = qwp_phase(amp, 2) * factor;
        self.push(bin + roundtrip, stage, Port::Arm, token, returned);
    }

    /// Apply the four-port unitary at `stage` for one pairing group.
    fn splitter(&mut self, stage: usize, bin: u64, token: u64, inputs: [Complex64; 3]) {
        let [l, r, u] = inputs;
        let t = self.config.transmissivities[stage];
        let lf = (1.0 - self.config.bs_loss).sqrt();
        let zero = Complex64::new(0.0, 0.0);

        if t == 1.0 {
            // Fully transmissive stage: nothing splits, so no pairing event
            // happens and tokens pass straight through.
            if l != zero {
                self.emit_right(stage, bin, token, l * lf);
            }
            if r != zero {
                self.emit_left(stage, bin, token, r * lf);
            }
            if u != zero {
                self.record_terminal(SegmentId::Detector(stage), bin, u * lf);
            }
            return;
        }

        let st = t.sqrt() * lf;
        let rf = Complex64::new(0.0, -(1.0 - t).sqrt() * lf);
        let has_l = l != zero;
        let has_r = r != zero;
        let has_u = u != zero;

        if has_l {
            // Outgoing split: both children share a fresh pairing token.
            let child = self.fresh_token(token);
            self.emit_right(stage, bin, child, l * st);
            self.emit_arm(stage, bin, child, l * rf);
        }
        if has_r || has_u {
            let out_l = st * r + rf * u;
            let out_d = st * u + rf * r;
            // A full recombination restores the parent pairing; a lone
            // returning child detaches.
            let out_token = if has_r && has_u {
                self.parent_of(token)
            } else {
                self.fresh_token(DETACHED)
            };
            self.emit_left(stage, bin, out_token, out_l);
            if out_d != zero {
                self.record_terminal(SegmentId::Detector(stage), bin, out_d);
            }
        }
    }

    fn run(mut self) -> Result<(OutcomeDistribution, Vec<WavePacket>)> {
        let root = self.fresh_token(DETACHED);
        // The source-side lead-in is common to every path; bin 0 is the
        // first splitter crossing.
        self.push(0, 0, Port::Left, root, Complex64::new(1.0, 0.0));

        while let Some((&(bin, stage, _, _), _)) = self.queue.iter().next() {
            if bin > self.bound {
                return Err(Error::NonTerminating {
                    bound: self.bound,
                    reached: bin,
                });
            }
            // Drain every port/token entry for this (bin, stage).
            let mut groups: BTreeMap<u64, [Complex64; 3]> = BTreeMap::new();
            let keys: Vec<Key> = self
                .queue
                .range((bin, stage, 0, Port::Left)..=(bin, stage, u64::MAX, Port::Arm))
                .map(|(k, _)| *k)
                .collect();
            for key in keys {
                let amp = self.queue.remove(&key).expect("key just listed");
                let (_, _, token, port) = key;
                let entry = groups.entry(token).or_insert([Complex64::new(0.0, 0.0); 3]);
                entry[port as usize] += amp;
            }
            for (token, inputs) in groups {
                self.splitter(stage, bin, token, inputs);
            }
        }

        let consumed: f64 = self.p_source + self.p_object + self.p_detector.iter().sum::<f64>();
        let dist = OutcomeDistribution {
            p_detector: self.p_detector,
            p_source: self.p_source,
            p_object: self.p_object,
            p_loss: (1.0 - consumed).max(0.0),
        };
        dist.validate(1e-12)?;
        Ok((dist, self.terminals))
    }
}

pub(super) fn run(
    config: &ChainConfig,
    object: &ObjectModel,
) -> Result<(OutcomeDistribution, Vec<WavePacket>)> {
    Engine::new(config, object).run()
}
