pub mod altopt;
pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;
