//! Acceptance suite for `thermolab`; the criteria live in `tests/acceptance.rs`
//! and run with `cargo test -p thermolab-validation --test acceptance`.
