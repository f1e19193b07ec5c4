//! Synthetic wideband signal-recognition benchmark.
//!
//! Generate noiseless multi-burst scenes from band layout profiles, store them
//! as SigMF records with ground-truth annotations, run a channelized
//! radiometer (or ingest an external segmentation mask), and score detections
//! with IoU-based precision, recall and F1.
//!
//! Frequencies are normalized (cycles per sample, `[-0.5, 0.5)`); Hz only
//! appears in SigMF metadata. Times are in samples.

pub mod detect;
pub mod dsp;
pub mod error;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod modulation;
pub mod profile;
pub mod rng;
pub mod scene;
pub mod sigmf;

pub use detect::{channelized_radiometer, Detection, DetectorConfig};
pub use dsp::ComplexBuffer;
pub use error::{Error, Result};
pub use grid::{BinaryMask, GridGeometry, SpectralGrid, TimeFreqBox};
pub use metrics::{match_detections, Counts, ScoreReport, Truth};
pub use modulation::{modulate, BurstSpec, ModulationClass};
pub use profile::BandLayoutProfile;
pub use rng::Rng;
pub use scene::{generate_scene, Scene, SignalBurst};
