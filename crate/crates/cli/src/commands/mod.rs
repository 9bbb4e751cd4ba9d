pub mod common;
pub mod curve;
pub mod fit;
pub mod predict;
pub mod recruit;
pub mod simulate;
pub mod survival;
pub mod tolerance;
