//! Acceptance checks for `melonforge` live in `tests/acceptance.rs`; run them
//! with `cargo test -p melonforge-validation --test acceptance`.
