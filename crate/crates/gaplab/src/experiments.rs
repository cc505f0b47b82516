//! Experiment orchestration (sweeps, fitting, campaigns).
