// SPDX-License-Identifier: Apache-2.0

//! Verification of universally quantified array assertions in loop programs
//! by tiling.

// Term and Expr builders share names with the operator traits.
#![allow(clippy::should_implement_trait)]

pub mod affine;
pub mod frontend;
pub mod smt;
pub mod cfg;
pub mod exec;
pub mod tiler;
pub mod miner;
pub mod vcgen;
pub mod driver;
pub mod report;
