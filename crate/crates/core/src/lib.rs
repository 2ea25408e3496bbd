//! Crowd anomaly detection from group-count time series.
//!
//! The pipeline has four stages:
//!
//! 1. frames are subsampled one every `F` and the number of moving groups is
//!    counted per selected frame ([`counting`]);
//! 2. each inner window of `2W + 1` counts is encoded into `2W` trits and a
//!    base-3 pattern code ([`descriptor`]);
//! 3. pattern codes over an outer window of `L` counts are collected into a
//!    histogram whose quiet-bin fraction summarizes how static the crowd is;
//! 4. a downward crossing of the quiet fraction below `t_star` raises an alarm.
//!
//! [`evaluation`] scores alarms against labelled anomaly onsets and tunes
//! `(T, L, t_star)` by grid search; [`synth`] generates ground-truth-bearing
//! count series and blob videos.

pub mod config;
pub mod counting;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod synth;

pub use error::{Error, Result};
