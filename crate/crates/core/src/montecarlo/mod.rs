//! Speckle-field Monte Carlo engine.
//!
//! Random circular-Gaussian fields on the source plane are propagated to the
//! lens focal plane by FFT and read out by finite-aperture detectors. Spatial
//! ensembles use independent screens per realization; time-resolved traces use
//! the translating-track evolution of [`screen::evolve_screen`].

pub mod detector;
pub mod ensemble;
pub mod grid;
pub mod propagate;
pub mod screen;
pub mod temporal;

pub use detector::{detector_intensity, DetectorReading, DEFAULT_DETECTOR_APERTURE};
pub use ensemble::{
    estimate_g2_spatial, EnsembleConfig, MeanWithError, SpatialEnsemble, SpatialEstimate,
};
pub use grid::{Illumination, SourceGrid};
pub use propagate::{propagate_to_focal_plane, FarField, FocalLayout, StripProjector};
pub use screen::{evolve_screen, generate_screen, generate_screen_with, track_speed, SpeckleScreen};
pub use temporal::{PairFieldProcess, TemporalModel};
