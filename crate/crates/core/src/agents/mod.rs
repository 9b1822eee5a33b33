//! Agent behavior: humans, scripted bots, and shared activity scheduling.

pub mod activity;
pub mod bot;
pub mod human;
