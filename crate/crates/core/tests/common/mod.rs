//! Independent reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

pub mod eval_oracle;
pub mod fixtures;
pub mod gradcheck;
pub mod oracle;
