//! Holds the workspace acceptance gate under `tests/acceptance.rs`.
