//! Holds the `acceptance` integration test target, which checks the library
//! end to end against fixed instances and tolerances. Run it with
//! `cargo test -p kspin-validation --test acceptance -- --nocapture`.
