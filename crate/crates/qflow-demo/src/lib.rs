//! Browser demo bindings (placeholder).
