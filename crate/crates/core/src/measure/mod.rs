pub mod dimension;
pub mod content;
pub mod martingale;
pub mod frostmann;
