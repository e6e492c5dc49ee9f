//! Simulation and validation library for a chained Michelson-type
//! interferometer used as a low-dose presence detector.
//!
//! The crate is organized around four independent pieces:
//!
//! * [`chain`] — event-driven single-photon amplitude propagation through the
//!   N-stage splitter chain, plus an exhaustive path-enumeration oracle.
//! * [`formulas`] — closed-form outcome probabilities (blocked, reflective,
//!   large-N limit) and multi-photon detection statistics.
//! * [`imaging`] — Monte Carlo raster-scan imaging over an object mask with
//!   reproducible per-pixel random streams and dose accounting.
//! * [`geometry`] — construction and ray-trace validation of the stationary
//!   folded apparatus (splitter unit, tilted delay unit, trapezoid mirror).

pub mod chain;
pub mod error;
pub mod formulas;
pub mod geometry;
pub mod imaging;

pub use chain::{
    bs_transform, detector_probability_vs_phase, enumerate_paths_oracle, qwp_phase, simulate,
    BsPort, ChainConfig, ObjectModel, OutcomeDistribution, PacketDirection, SegmentId, WavePacket,
};
pub use error::{Error, Result};
pub use formulas::{
    imaging_stats, p1_limit, p_triple, p_triple_equal_t, p_triple_reflective, ImagingStats,
    ProbabilityTriple,
};
pub use geometry::{
    build_canonical_layout, capacity, reflect_ray, trace_layout, CheckResult, Layout, PlanarMirror,
    Spacings, TraceReport,
};
pub use imaging::{
    image_mask, sample_photon, ImagingResult, ImagingRun, ObjectMask, PhotonOutcome,
};
