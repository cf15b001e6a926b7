//! Derived quantities: fringes, accidentals, spectral purity, rates and
//! interferometer calibration.

pub mod accidentals;
pub mod calibration;
pub mod fringe;
pub mod jsi;
pub mod rates;
pub mod similarity;
