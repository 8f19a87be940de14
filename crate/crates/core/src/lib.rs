//! Conversational speech emotion recognition, `no_std` core.
//!
//! Everything here is pure computation over in-memory buffers:
//!
//! * [`frontend`]: resampling, log-mel spectrogram and 0.96 s segment patches.
//! * [`encoder`]: segment embedders and the avg/max/min statistical pooling unit.
//! * [`numerics`]: a small dense reverse-mode autodiff tape, GRU cell, Adam, L2.
//! * [`model`]: the attentive four-branch dialogue GRU model and its classifier.
//! * [`metrics`], [`train`]: weighted-F1 evaluation and the dialogue-level trainer.
//! * [`synthetic`]: the deterministic overfit corpus used by tests and the CLI.
//!
//! File formats, WAV decoding and the command line live in the `convo-affect` crate.
#![no_std]

extern crate alloc;

pub mod dialogue;
pub mod encoder;
pub mod error;
pub mod frontend;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};

/// Emotion label names, indexed by class id.
pub const EMOTIONS: [&str; 7] = [
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise",
];

/// Maps a label name (case-insensitive) to its class id.
pub fn emotion_id(name: &str) -> Option<usize> {
    EMOTIONS.iter().position(|e| e.eq_ignore_ascii_case(name))
}
