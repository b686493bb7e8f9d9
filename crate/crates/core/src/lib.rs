#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod dsl;
pub mod engine;
pub mod geometry;
pub mod models;
pub mod perception;
pub mod rulepack;
pub mod scenario;
pub mod trace;
pub mod units;
pub mod worldmap;
pub mod zones;
