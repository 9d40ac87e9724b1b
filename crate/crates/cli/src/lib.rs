//! Command-line front end and HTTP service for `retweet_guard`.

pub mod app;
pub mod http;
