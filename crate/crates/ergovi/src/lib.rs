//! File formats, JSON reports and the `ergovi` command line on top of
//! [`ergovi_core`].

pub mod cli;
pub mod format;
pub mod report;
pub mod selftest;
