//! Ocean-current inference from drifting buoys on a hexagonal grid.

pub mod hexgrid;
pub mod infer;
pub mod loss;
pub mod synth;
pub mod trajectory;

pub use hexgrid::{build_hex_grid, BBox, HexGridComplex, HexLayout};
pub use infer::{infer_currents, sweep, InferOptions, Inference, StopReason, SweepRow};
pub use loss::cosine_loss;
pub use trajectory::{
    discretize_trajectory, ingest_gdp_csv, split_train_test, Ping, Trajectory, YearRange,
    YearlyFlows,
};
