//! Harness around the planning core: scenario files, the brute-force oracle,
//! benchmark sweeps, and SVG rendering.

pub mod bench;
pub mod oracle;
pub mod scenario;
pub mod svg;
