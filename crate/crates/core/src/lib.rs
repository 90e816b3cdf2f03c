pub mod bluetooth;
pub mod calls;
pub mod catalog;
pub mod change;
pub mod config;
pub mod features;
pub mod fitbit;
pub mod ingest;
pub mod location;
pub mod numerics;
pub mod output;
pub mod pipeline;
pub mod places;
pub mod screen;
pub mod windowing;
