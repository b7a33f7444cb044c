//! Simulation and analysis of all-to-all broadcast coded slotted ALOHA.
//!
//! Users repeat their packet in randomly chosen slots of a frame and every
//! user is also a half-duplex receiver that peels the slots it can hear.
//! After decoding, a receiver reconstructs the frame and predicts, for every
//! user it resolved, whether that user resolved it back: a handshake decided
//! without any extra signalling.
//!
//! * [`distribution`]: repetition-degree distributions and their text form.
//! * [`graph`]: frame graphs and receiver views.
//! * [`decoder`]: the peeling decoder.
//! * [`handshake`]: reconstruction, on-behalf decoding and outcome classes.
//! * [`analysis`]: induced degree distribution, estimators and bounds.
//! * [`oracle`]: exhaustive enumeration of tiny instances.
//! * [`sweep`]: deterministic parallel Monte Carlo sweeps and CSV output.

pub mod analysis;
pub mod decoder;
pub mod distribution;
pub mod error;
pub mod graph;
pub mod handshake;
pub mod oracle;
pub mod sweep;
pub mod tally;

pub use analysis::{check_bounds, estimate, induced_distribution, BoundVerdict, Estimate, EstimateReport};
pub use decoder::{peel, DecodeOutcome};
pub use distribution::DegreeDistribution;
pub use error::{Error, Result};
pub use graph::{generate_frame, induced_view, FrameGraph, GraphView, ReceiverMode, SlotId, UserId};
pub use handshake::{
    classify, evaluate_peer, handshake_frame, reconstruct, FrameAnalyzer, HandshakeMode, OutcomeClass,
    Reconstruction,
};
pub use oracle::{enumerate_exact, ExactResult};
pub use sweep::{run_sweep, HandshakeSetting, LoadPoints, PairSelection, SweepConfig, SweepResult};
pub use tally::{Counter, HandshakeTally};
