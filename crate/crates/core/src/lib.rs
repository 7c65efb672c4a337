pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod quadrature;
pub mod selftest;
pub mod servo;
pub mod simulation;
