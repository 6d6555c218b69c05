//! Brute-force reference solutions and a small pass/fail reporter used by
//! the acceptance suite.

pub mod oracle;
pub mod report;
