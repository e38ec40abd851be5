#![allow(dead_code)]

pub mod crawl_oracle;
pub mod eval_oracle;
pub mod tables;
