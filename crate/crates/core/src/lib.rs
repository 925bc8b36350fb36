//! Symbolic rhythm analysis toolkit.
//!
//! Parses Standard MIDI Files into onset tables, folds every onset of a
//! song into a 16-bin rhythm vector, and measures how close that rhythm
//! is to the tresillo pattern with a plain and a parameterized cosine
//! similarity. The per-bin scaling factors of the parameterized measure
//! are learned from labeled validation sets by derivative-free
//! minimization, and a corpus pipeline aggregates per-week similarity
//! trends with bootstrap confidence intervals.
//!
//! Module map:
//!
//! * [`smf`] — Standard MIDI File parser (format 0/1, note events,
//!   time signatures).
//! * [`onset`] — onset tables, the 4/4 meter filter, bar quantization
//!   and onset histograms.
//! * [`rhythm`] — normalized rhythm vectors, the tresillo / clave /
//!   reggaeton templates, centroids.
//! * [`similarity`] — plain and parameterized cosine measures and the
//!   learned scaling factors ([`Theta`]).
//! * [`model`] — the four similarity models, the S* goodness ratio,
//!   theta fitting and leave-one-out cross-validation.
//! * [`stats`] — bootstrap confidence intervals, Welch's t-test,
//!   rolling means.
//! * [`pipeline`] — chart manifest ingestion, batch scoring, weekly and
//!   rolling trend series.
//! * [`fixtures`] / [`synth`] — tiny SMF writer and seeded synthetic
//!   corpora for tests and validation experiments.

pub mod fixtures;
pub mod model;
pub mod nelder_mead;
pub mod onset;
pub mod pipeline;
pub mod prng;
pub mod rhythm;
pub mod similarity;
pub mod smf;
pub mod stats;
pub mod synth;

pub use rhythm::RhythmVector;
pub use similarity::Theta;
